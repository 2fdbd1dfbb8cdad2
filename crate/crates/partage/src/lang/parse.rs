//! Hand-rolled lexer and recursive-descent parser for program files,
//! principals, and labels.

use std::collections::BTreeSet;

use crate::labels::{Label, Principal};
use crate::lang::ast::{Atom, Expr, Loc, OpKind, Stmt, Tier, Value};

#[derive(Debug, thiserror::Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

/// Program kind declared in the file header.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Source,
    Choreography,
    Distributed,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Source => "source",
            Kind::Choreography => "choreography",
            Kind::Distributed => "distributed",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Punct(&'static str),
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() {
                self.bump();
                continue;
            }
            if c == b'#' {
                while let Some(c) = self.peek() {
                    if c == b'\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            let (line, col) = (self.line, self.col);
            let tok = if c.is_ascii_alphabetic() || c == b'_' {
                let start = self.pos;
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == b'_' {
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
            } else if c.is_ascii_digit() || (c == b'-' && self.peek2().is_some_and(|d| d.is_ascii_digit())) {
                let start = self.pos;
                self.bump();
                while let Some(c) = self.peek() {
                    if c.is_ascii_digit() {
                        self.bump();
                    } else {
                        break;
                    }
                }
                let text = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                let n: i64 = text
                    .parse()
                    .map_err(|_| self.err(format!("integer literal `{text}` out of range")))?;
                Tok::Int(n)
            } else {
                let two = |a: u8, b: u8| c == a && self.peek2() == Some(b);
                if two(b'-', b'>') {
                    self.bump();
                    self.bump();
                    Tok::Punct("->")
                } else if two(b'=', b'>') {
                    self.bump();
                    self.bump();
                    Tok::Punct("=>")
                } else if two(b'=', b'=') {
                    self.bump();
                    self.bump();
                    Tok::Punct("==")
                } else {
                    self.bump();
                    let p = match c {
                        b'@' => "@",
                        b'=' => "=",
                        b';' => ";",
                        b'.' => ".",
                        b'{' => "{",
                        b'}' => "}",
                        b'(' => "(",
                        b')' => ")",
                        b'<' => "<",
                        b'>' => ">",
                        b',' => ",",
                        b'&' => "&",
                        b'|' => "|",
                        b'[' => "[",
                        b']' => "]",
                        _ => {
                            return Err(ParseError {
                                line,
                                col,
                                msg: format!("unexpected character `{}`", c as char),
                            })
                        }
                    };
                    Tok::Punct(p)
                }
            };
            out.push(Spanned { tok, line, col });
        }
        Ok(out)
    }
}

pub(crate) struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: Lexer::new(src).tokens()?,
            pos: 0,
        })
    }

    fn err_here(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self
            .toks
            .get(self.pos)
            .map(|t| (t.line, t.col))
            .unwrap_or_else(|| {
                self.toks
                    .last()
                    .map(|t| (t.line, t.col + 1))
                    .unwrap_or((1, 1))
            });
        ParseError {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat_punct(&mut self, p: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Punct(q)) if *q == p => {
                self.pos += 1;
                Ok(())
            }
            other => Err(self.err_here(format!("expected `{p}`, found {}", describe(other)))),
        }
    }

    fn at_punct(&mut self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn eat_ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            other => Err(self.err_here(format!("expected identifier, found {}", describe(other)))),
        }
    }

    fn at_ident(&mut self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.at_ident(kw) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err_here(format!("expected `{kw}`, found {}", describe(self.peek()))))
        }
    }

    pub(crate) fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn host(&mut self) -> Result<String, ParseError> {
        let name = self.eat_ident()?;
        if is_reserved(&name) {
            return Err(self.err_here(format!("`{name}` cannot be used as a host name")));
        }
        Ok(name)
    }

    fn loc(&mut self) -> Result<Loc, ParseError> {
        if self.at_ident("star") {
            self.pos += 1;
            Ok(Loc::Star)
        } else {
            Ok(Loc::Host(self.host()?))
        }
    }

    fn value(&mut self) -> Result<Value, ParseError> {
        match self.next() {
            Some(Tok::Int(n)) => Ok(Value::Int(n)),
            Some(Tok::Ident(s)) => match s.as_str() {
                "unit" => Ok(Value::Unit),
                "true" => Ok(Value::Bool(true)),
                "false" => Ok(Value::Bool(false)),
                _ => Err(self.err_here(format!("expected value, found `{s}`"))),
            },
            other => Err(self.err_here(format!("expected value, found {}", describe(other.as_ref())))),
        }
    }

    fn aexp(&mut self) -> Result<Atom, ParseError> {
        match self.peek() {
            Some(Tok::Int(_)) => Ok(Atom::Val(self.value()?)),
            Some(Tok::Ident(s)) => match s.as_str() {
                "unit" | "true" | "false" => Ok(Atom::Val(self.value()?)),
                _ => Ok(Atom::Var(self.eat_ident()?)),
            },
            other => Err(self.err_here(format!(
                "expected atomic expression, found {}",
                describe(other)
            ))),
        }
    }

    pub(crate) fn principal(&mut self) -> Result<Principal, ParseError> {
        let mut p = self.principal_term()?;
        while self.at_punct("|") {
            self.pos += 1;
            p = p.or(&self.principal_term()?);
        }
        Ok(p)
    }

    fn principal_term(&mut self) -> Result<Principal, ParseError> {
        let mut p = self.principal_factor()?;
        while self.at_punct("&") {
            self.pos += 1;
            p = p.and(&self.principal_factor()?);
        }
        Ok(p)
    }

    fn principal_factor(&mut self) -> Result<Principal, ParseError> {
        if self.at_punct("(") {
            self.pos += 1;
            let p = self.principal()?;
            self.eat_punct(")")?;
            return Ok(p);
        }
        let name = self.eat_ident()?;
        match name.as_str() {
            "top" => Ok(Principal::strongest()),
            "bot" => Ok(Principal::weakest()),
            _ => Ok(Principal::atom(name)),
        }
    }

    pub(crate) fn label(&mut self) -> Result<Label, ParseError> {
        self.eat_punct("<")?;
        let conf = self.principal()?;
        self.eat_punct(",")?;
        let integ = self.principal()?;
        self.eat_punct(">")?;
        Ok(Label::new(conf, integ))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => match s.as_str() {
                "declassify" | "endorse" => {
                    let kw = s.clone();
                    self.pos += 1;
                    self.eat_punct("(")?;
                    let arg = self.aexp()?;
                    self.eat_punct(",")?;
                    let from = self.label()?;
                    self.eat_punct(",")?;
                    let to = self.label()?;
                    self.eat_punct(")")?;
                    Ok(if kw == "declassify" {
                        Expr::Declassify { arg, from, to }
                    } else {
                        Expr::Endorse { arg, from, to }
                    })
                }
                "input" => {
                    self.pos += 1;
                    self.eat_punct("@")?;
                    Ok(Expr::Input(self.host()?))
                }
                "output" => {
                    self.pos += 1;
                    self.eat_punct("(")?;
                    let arg = self.aexp()?;
                    self.eat_punct(")")?;
                    self.eat_punct("@")?;
                    Ok(Expr::Output(arg, self.host()?))
                }
                "recv" => {
                    self.pos += 1;
                    Ok(Expr::Receive(self.host()?))
                }
                "send" => {
                    self.pos += 1;
                    let arg = self.aexp()?;
                    self.eat_punct("->")?;
                    Ok(Expr::Send(arg, self.host()?))
                }
                name if OpKind::from_name(name).is_some() => {
                    let name = name.to_string();
                    let op = OpKind::from_name(&name).unwrap();
                    self.pos += 1;
                    self.eat_punct("(")?;
                    let mut args = vec![self.aexp()?];
                    while self.at_punct(",") {
                        self.pos += 1;
                        args.push(self.aexp()?);
                    }
                    self.eat_punct(")")?;
                    if args.len() != op.arity() {
                        return Err(self.err_here(format!(
                            "operator `{name}` takes {} argument(s), got {}",
                            op.arity(),
                            args.len()
                        )));
                    }
                    Ok(Expr::Op(op, args))
                }
                _ => Ok(Expr::Atomic(self.aexp()?)),
            },
            _ => Ok(Expr::Atomic(self.aexp()?)),
        }
    }

    fn stmt_block(&mut self) -> Result<Stmt, ParseError> {
        self.eat_punct("{")?;
        let body = self.stmts(Some("}"))?;
        self.eat_punct("}")?;
        Ok(body)
    }

    pub(crate) fn stmts(&mut self, until: Option<&str>) -> Result<Stmt, ParseError> {
        let mut parsed: Vec<Stmt> = Vec::new();
        loop {
            match until {
                Some(p) if self.at_punct(p) => break,
                None if self.done() => break,
                _ => {}
            }
            if self.done() {
                return Err(self.err_here("unexpected end of input"));
            }
            parsed.push(self.stmt()?);
        }
        let mut chain = Stmt::Skip;
        for s in parsed.into_iter().rev() {
            chain = append_cont(s, chain)?;
        }
        Ok(chain)
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let kw = match self.peek() {
            Some(Tok::Ident(s)) => s.clone(),
            other => {
                return Err(self.err_here(format!("expected statement, found {}", describe(other))))
            }
        };
        match kw.as_str() {
            "let" => {
                self.pos += 1;
                let var = self.eat_ident()?;
                self.eat_punct("@")?;
                let loc = self.loc()?;
                self.eat_punct("=")?;
                let expr = self.expr()?;
                if let Expr::Input(h) | Expr::Output(_, h) = &expr {
                    if loc.as_host() != Some(h.as_str()) {
                        return Err(self.err_here(format!(
                            "input/output at host `{h}` must be bound at the same host"
                        )));
                    }
                }
                self.eat_punct(";")?;
                Ok(Stmt::Let {
                    var,
                    loc,
                    expr,
                    cont: Box::new(Stmt::Skip),
                })
            }
            "move" => {
                self.pos += 1;
                let src = self.host()?;
                self.eat_punct(".")?;
                let arg = self.aexp()?;
                self.eat_punct("->")?;
                let dst = self.host()?;
                self.eat_punct(".")?;
                let var = self.eat_ident()?;
                self.eat_punct(";")?;
                Ok(Stmt::Move {
                    src,
                    arg,
                    dst,
                    var,
                    cont: Box::new(Stmt::Skip),
                })
            }
            "select" => {
                self.pos += 1;
                let src = self.host()?;
                self.eat_punct(".")?;
                let val = self.value()?;
                self.eat_punct("->")?;
                let dst = self.host()?;
                self.eat_punct(";")?;
                Ok(Stmt::Select {
                    src,
                    val,
                    dst,
                    cont: Box::new(Stmt::Skip),
                })
            }
            "if" => {
                self.pos += 1;
                let loc = self.loc()?;
                self.eat_punct(".")?;
                let guard = self.aexp()?;
                let then_branch = self.stmt_block()?;
                self.eat_keyword("else")?;
                let else_branch = self.stmt_block()?;
                Ok(Stmt::If {
                    loc,
                    guard,
                    then_branch: Box::new(then_branch),
                    else_branch: Box::new(else_branch),
                })
            }
            "case" => {
                self.pos += 1;
                let src = self.host()?;
                self.eat_punct("->")?;
                let dst = self.host()?;
                self.eat_punct("{")?;
                let mut branches = Vec::new();
                while !self.at_punct("}") {
                    let val = self.value()?;
                    self.eat_punct("=>")?;
                    let body = self.stmt_block()?;
                    if branches.iter().any(|(v, _)| *v == val) {
                        return Err(self.err_here(format!("duplicate case branch for `{val}`")));
                    }
                    branches.push((val, body));
                }
                self.eat_punct("}")?;
                if branches.is_empty() {
                    return Err(self.err_here("case needs at least one branch"));
                }
                Ok(Stmt::Case { src, dst, branches })
            }
            other => Err(self.err_here(format!("expected statement, found `{other}`"))),
        }
    }
}

fn append_cont(stmt: Stmt, cont: Stmt) -> Result<Stmt, ParseError> {
    Ok(match stmt {
        Stmt::Let {
            var, loc, expr, ..
        } => Stmt::Let {
            var,
            loc,
            expr,
            cont: Box::new(cont),
        },
        Stmt::Move {
            src, arg, dst, var, ..
        } => Stmt::Move {
            src,
            arg,
            dst,
            var,
            cont: Box::new(cont),
        },
        Stmt::Select { src, val, dst, .. } => Stmt::Select {
            src,
            val,
            dst,
            cont: Box::new(cont),
        },
        s @ (Stmt::If { .. } | Stmt::Case { .. }) => {
            if matches!(cont, Stmt::Skip) {
                s
            } else {
                // branches carry the rest of the program; a trailing
                // continuation would be unreachable from the branch bodies
                return Err(ParseError {
                    line: 0,
                    col: 0,
                    msg: "statements after `if`/`case` must go inside the branches".into(),
                });
            }
        }
        s => s,
    })
}

fn describe(tok: Option<&Tok>) -> String {
    match tok {
        None => "end of input".into(),
        Some(Tok::Ident(s)) => format!("`{s}`"),
        Some(Tok::Int(n)) => format!("`{n}`"),
        Some(Tok::Punct(p)) => format!("`{p}`"),
    }
}

fn is_reserved(name: &str) -> bool {
    matches!(
        name,
        "adv" | "env" | "star" | "unit" | "true" | "false" | "top" | "bot"
    )
}

/// Renames binders so every bound variable in the program is unique.
/// Names already unique are kept.
pub fn alpha_rename(s: &Stmt) -> Stmt {
    fn fresh(base: &str, used: &mut BTreeSet<String>) -> String {
        if used.insert(base.to_string()) {
            return base.to_string();
        }
        let mut i = 1;
        loop {
            let candidate = format!("{base}_{i}");
            if used.insert(candidate.clone()) {
                return candidate;
            }
            i += 1;
        }
    }
    fn rename_atom(a: &Atom, scope: &[(String, String)]) -> Atom {
        match a {
            Atom::Var(x) => {
                let name = scope
                    .iter()
                    .rev()
                    .find(|(old, _)| old == x)
                    .map(|(_, new)| new.clone())
                    .unwrap_or_else(|| x.clone());
                Atom::Var(name)
            }
            v => v.clone(),
        }
    }
    fn go(s: &Stmt, scope: &mut Vec<(String, String)>, used: &mut BTreeSet<String>) -> Stmt {
        match s {
            Stmt::Let {
                var,
                loc,
                expr,
                cont,
            } => {
                let mut expr = expr.clone();
                for a in expr.atoms_mut() {
                    *a = rename_atom(a, scope);
                }
                let new = fresh(var, used);
                scope.push((var.clone(), new.clone()));
                let cont = go(cont, scope, used);
                scope.pop();
                Stmt::Let {
                    var: new,
                    loc: loc.clone(),
                    expr,
                    cont: Box::new(cont),
                }
            }
            Stmt::Move {
                src,
                arg,
                dst,
                var,
                cont,
            } => {
                let arg = rename_atom(arg, scope);
                let new = fresh(var, used);
                scope.push((var.clone(), new.clone()));
                let cont = go(cont, scope, used);
                scope.pop();
                Stmt::Move {
                    src: src.clone(),
                    arg,
                    dst: dst.clone(),
                    var: new,
                    cont: Box::new(cont),
                }
            }
            Stmt::MovePending {
                src,
                val,
                dst,
                var,
                cont,
            } => {
                let new = fresh(var, used);
                scope.push((var.clone(), new.clone()));
                let cont = go(cont, scope, used);
                scope.pop();
                Stmt::MovePending {
                    src: src.clone(),
                    val: *val,
                    dst: dst.clone(),
                    var: new,
                    cont: Box::new(cont),
                }
            }
            Stmt::Select {
                src,
                val,
                dst,
                cont,
            } => Stmt::Select {
                src: src.clone(),
                val: *val,
                dst: dst.clone(),
                cont: Box::new(go(cont, scope, used)),
            },
            Stmt::SelectPending {
                src,
                val,
                dst,
                cont,
            } => Stmt::SelectPending {
                src: src.clone(),
                val: *val,
                dst: dst.clone(),
                cont: Box::new(go(cont, scope, used)),
            },
            Stmt::If {
                loc,
                guard,
                then_branch,
                else_branch,
            } => Stmt::If {
                loc: loc.clone(),
                guard: rename_atom(guard, scope),
                then_branch: Box::new(go(then_branch, scope, used)),
                else_branch: Box::new(go(else_branch, scope, used)),
            },
            Stmt::Case { src, dst, branches } => Stmt::Case {
                src: src.clone(),
                dst: dst.clone(),
                branches: branches
                    .iter()
                    .map(|(v, s)| (*v, go(s, scope, used)))
                    .collect(),
            },
            Stmt::Skip => Stmt::Skip,
        }
    }
    go(s, &mut Vec::new(), &mut BTreeSet::new())
}

/// Checks the statement fits the declared kind.
pub fn check_kind(s: &Stmt, kind: Kind) -> Result<(), String> {
    if s.contains_pending() {
        return Err("run-time pending forms cannot appear in program files".into());
    }
    let tier = super::ast::tier_of(s);
    match kind {
        Kind::Source => {
            if tier != Tier::Source {
                return Err(format!(
                    "program declared `kind = source` but uses {tier} syntax"
                ));
            }
        }
        Kind::Choreography => {
            let mut bad = None;
            visit_all(s, &mut |st| {
                match st {
                    Stmt::Case { .. } => bad = Some("case statements belong to distributed programs"),
                    Stmt::Let { loc: Loc::Star, .. } | Stmt::If { loc: Loc::Star, .. } => {
                        bad = Some("choreographies cannot mention the ideal host `star`")
                    }
                    _ => {}
                };
            });
            if let Some(msg) = bad {
                return Err(msg.into());
            }
        }
        Kind::Distributed => {
            let mut bad = None;
            visit_all(s, &mut |st| match st {
                Stmt::Move { .. } | Stmt::Select { .. } => {
                    bad = Some("move/select belong to choreographies; distributed programs use send/recv/case")
                }
                Stmt::Let { loc: Loc::Star, .. } | Stmt::If { loc: Loc::Star, .. } => {
                    bad = Some("distributed programs cannot mention the ideal host `star`")
                }
                _ => {}
            });
            if let Some(msg) = bad {
                return Err(msg.into());
            }
        }
    }
    Ok(())
}

fn visit_all(s: &Stmt, f: &mut impl FnMut(&Stmt)) {
    f(s);
    match s {
        Stmt::Let { cont, .. }
        | Stmt::Move { cont, .. }
        | Stmt::Select { cont, .. }
        | Stmt::MovePending { cont, .. }
        | Stmt::SelectPending { cont, .. } => visit_all(cont, f),
        Stmt::If {
            then_branch,
            else_branch,
            ..
        } => {
            visit_all(then_branch, f);
            visit_all(else_branch, f);
        }
        Stmt::Case { branches, .. } => {
            for (_, s) in branches {
                visit_all(s, f);
            }
        }
        Stmt::Skip => {}
    }
}

/// Parses a program file with a `kind = ...` header, alpha-renames binders,
/// and checks the statement against the declared kind.
pub fn parse_program(text: &str) -> Result<(Kind, Stmt), ParseError> {
    let mut p = Parser::new(text)?;
    p.eat_keyword("kind")?;
    p.eat_punct("=")?;
    let kind = match p.eat_ident()?.as_str() {
        "source" => Kind::Source,
        "choreography" => Kind::Choreography,
        "distributed" => Kind::Distributed,
        other => {
            return Err(p.err_here(format!(
                "unknown program kind `{other}` (expected source, choreography, or distributed)"
            )))
        }
    };
    let stmt = p.stmts(None)?;
    let stmt = alpha_rename(&stmt);
    check_kind(&stmt, kind).map_err(|msg| ParseError {
        line: 1,
        col: 1,
        msg,
    })?;
    Ok((kind, stmt))
}

/// Parses a bare statement list (no header) for tests and tools.
pub fn parse_stmts(text: &str) -> Result<Stmt, ParseError> {
    let mut p = Parser::new(text)?;
    let stmt = p.stmts(None)?;
    Ok(alpha_rename(&stmt))
}

pub fn parse_principal(text: &str) -> Result<Principal, ParseError> {
    let mut p = Parser::new(text)?;
    let principal = p.principal()?;
    if !p.done() {
        return Err(p.err_here("trailing input after principal"));
    }
    Ok(principal)
}

pub fn parse_label(text: &str) -> Result<Label, ParseError> {
    let mut p = Parser::new(text)?;
    let label = p.label()?;
    if !p.done() {
        return Err(p.err_here("trailing input after label"));
    }
    Ok(label)
}
