//! Pretty-printer. `parse(pretty(s)) == s` for every parseable statement.

use std::fmt::Write;

use crate::lang::ast::{Expr, Stmt};
use crate::lang::parse::Kind;

/// Renders a statement as concrete syntax (no kind header).
pub fn pretty(s: &Stmt) -> String {
    let mut out = String::new();
    write_stmt(s, 0, &mut out);
    out
}

/// Renders a full program file with its kind header.
pub fn pretty_program(kind: Kind, s: &Stmt) -> String {
    format!("kind = {}\n\n{}", kind.name(), pretty(s))
}

fn indent(depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn write_stmt(s: &Stmt, depth: usize, out: &mut String) {
    match s {
        Stmt::Let {
            var,
            loc,
            expr,
            cont,
        } => {
            indent(depth, out);
            let _ = writeln!(out, "let {var} @ {loc} = {};", expr_text(expr));
            write_stmt(cont, depth, out);
        }
        Stmt::Move {
            src,
            arg,
            dst,
            var,
            cont,
        } => {
            indent(depth, out);
            let _ = writeln!(out, "move {src}.{arg} -> {dst}.{var};");
            write_stmt(cont, depth, out);
        }
        Stmt::Select {
            src,
            val,
            dst,
            cont,
        } => {
            indent(depth, out);
            let _ = writeln!(out, "select {src}.{val} -> {dst};");
            write_stmt(cont, depth, out);
        }
        Stmt::If {
            loc,
            guard,
            then_branch,
            else_branch,
        } => {
            indent(depth, out);
            let _ = writeln!(out, "if {loc}.{guard} {{");
            write_stmt(then_branch, depth + 1, out);
            indent(depth, out);
            out.push_str("} else {\n");
            write_stmt(else_branch, depth + 1, out);
            indent(depth, out);
            out.push_str("}\n");
        }
        Stmt::Case { src, dst, branches } => {
            indent(depth, out);
            let _ = writeln!(out, "case {src} -> {dst} {{");
            for (val, body) in branches {
                indent(depth + 1, out);
                let _ = writeln!(out, "{val} => {{");
                write_stmt(body, depth + 2, out);
                indent(depth + 1, out);
                out.push_str("}\n");
            }
            indent(depth, out);
            out.push_str("}\n");
        }
        Stmt::MovePending {
            src,
            val,
            dst,
            var,
            cont,
        } => {
            indent(depth, out);
            let _ = writeln!(out, "move* {src}.{val} -> {dst}.{var};");
            write_stmt(cont, depth, out);
        }
        Stmt::SelectPending {
            src,
            val,
            dst,
            cont,
        } => {
            indent(depth, out);
            let _ = writeln!(out, "select* {src}.{val} -> {dst};");
            write_stmt(cont, depth, out);
        }
        Stmt::Skip => {}
    }
}

fn expr_text(e: &Expr) -> String {
    match e {
        Expr::Atomic(a) => a.to_string(),
        Expr::Op(op, args) => {
            let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
            format!("{op}({})", args.join(", "))
        }
        Expr::Declassify { arg, from, to } => format!("declassify({arg}, {from}, {to})"),
        Expr::Endorse { arg, from, to } => format!("endorse({arg}, {from}, {to})"),
        Expr::Input(h) => format!("input @ {h}"),
        Expr::Output(a, h) => format!("output({a}) @ {h}"),
        Expr::Receive(h) => format!("recv {h}"),
        Expr::Send(a, h) => format!("send {a} -> {h}"),
    }
}
