use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::labels::Label;

/// Run-time values. `Opaque` never appears in parsed programs or real
/// executions; it stands for data a simulator's public view cannot know.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Value {
    Unit,
    Bool(bool),
    Int(i64),
    Opaque(u64),
}

impl Value {
    /// Truthiness used by conditionals: anything but `false` selects the
    /// first branch.
    pub fn truthy(&self) -> bool {
        !matches!(self, Value::Bool(false))
    }

    pub fn is_opaque(&self) -> bool {
        matches!(self, Value::Opaque(_))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => write!(f, "unit"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Opaque(tag) => write!(f, "?{tag:x}"),
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A communication endpoint: a named host, the adversary, the external
/// environment, or the single fully trusted ideal host of source programs.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Endpoint {
    Host(String),
    Adversary,
    Environment,
    Ideal,
}

impl Endpoint {
    pub fn host(name: impl Into<String>) -> Self {
        Endpoint::Host(name.into())
    }

    pub fn as_host(&self) -> Option<&str> {
        match self {
            Endpoint::Host(h) => Some(h),
            _ => None,
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Host(h) => write!(f, "{h}"),
            Endpoint::Adversary => write!(f, "adv"),
            Endpoint::Environment => write!(f, "env"),
            Endpoint::Ideal => write!(f, "star"),
        }
    }
}

impl fmt::Debug for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Where a `let` or `if` runs: a named host, or the ideal host in source
/// programs.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Loc {
    Star,
    Host(String),
}

impl Loc {
    pub fn host(name: impl Into<String>) -> Self {
        Loc::Host(name.into())
    }

    pub fn endpoint(&self) -> Endpoint {
        match self {
            Loc::Star => Endpoint::Ideal,
            Loc::Host(h) => Endpoint::Host(h.clone()),
        }
    }

    pub fn as_host(&self) -> Option<&str> {
        match self {
            Loc::Host(h) => Some(h),
            Loc::Star => None,
        }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Loc::Star => write!(f, "star"),
            Loc::Host(h) => write!(f, "{h}"),
        }
    }
}

impl fmt::Debug for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Atomic expressions: values and variables.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Atom {
    Val(Value),
    Var(String),
}

impl Atom {
    pub fn as_value(&self) -> Option<Value> {
        match self {
            Atom::Val(v) => Some(*v),
            Atom::Var(_) => None,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Val(v) => write!(f, "{v}"),
            Atom::Var(x) => write!(f, "{x}"),
        }
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// The fixed, total operator table.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OpKind {
    Add,
    Sub,
    Mul,
    Lt,
    Eq,
    And,
    Or,
    Not,
}

impl OpKind {
    pub fn name(self) -> &'static str {
        match self {
            OpKind::Add => "add",
            OpKind::Sub => "sub",
            OpKind::Mul => "mul",
            OpKind::Lt => "lt",
            OpKind::Eq => "eq",
            OpKind::And => "and",
            OpKind::Or => "or",
            OpKind::Not => "not",
        }
    }

    pub fn from_name(name: &str) -> Option<OpKind> {
        Some(match name {
            "add" => OpKind::Add,
            "sub" => OpKind::Sub,
            "mul" => OpKind::Mul,
            "lt" => OpKind::Lt,
            "eq" => OpKind::Eq,
            "and" => OpKind::And,
            "or" => OpKind::Or,
            "not" => OpKind::Not,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            OpKind::Not => 1,
            _ => 2,
        }
    }

    pub fn all() -> &'static [OpKind] {
        &[
            OpKind::Add,
            OpKind::Sub,
            OpKind::Mul,
            OpKind::Lt,
            OpKind::Eq,
            OpKind::And,
            OpKind::Or,
            OpKind::Not,
        ]
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl fmt::Debug for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Effectful expressions on the right-hand side of `let`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Expr {
    Atomic(Atom),
    Op(OpKind, Vec<Atom>),
    Declassify { arg: Atom, from: Label, to: Label },
    Endorse { arg: Atom, from: Label, to: Label },
    /// Read a value for host `h` from the environment.
    Input(String),
    /// Deliver a value from host `h` to the environment.
    Output(Atom, String),
    /// Receive a value from the named (malicious) peer.
    Receive(String),
    /// Send a value to the named (malicious) peer.
    Send(Atom, String),
}

impl Expr {
    /// Input/output expressions pin the `let` statement's host annotation.
    pub fn is_io(&self) -> bool {
        matches!(self, Expr::Input(_) | Expr::Output(..))
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        match self {
            Expr::Atomic(a) => vec![a],
            Expr::Op(_, args) => args.iter().collect(),
            Expr::Declassify { arg, .. } | Expr::Endorse { arg, .. } => vec![arg],
            Expr::Input(_) => vec![],
            Expr::Output(a, _) => vec![a],
            Expr::Receive(_) => vec![],
            Expr::Send(a, _) => vec![a],
        }
    }

    pub fn atoms_mut(&mut self) -> Vec<&mut Atom> {
        match self {
            Expr::Atomic(a) => vec![a],
            Expr::Op(_, args) => args.iter_mut().collect(),
            Expr::Declassify { arg, .. } | Expr::Endorse { arg, .. } => vec![arg],
            Expr::Input(_) => vec![],
            Expr::Output(a, _) => vec![a],
            Expr::Receive(_) => vec![],
            Expr::Send(a, _) => vec![a],
        }
    }
}

/// Statements of the unified language.
///
/// `MovePending`/`SelectPending` are run-time forms for messages that have
/// been sent but not yet received; they are produced by the asynchronous
/// semantics and never by the parser.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stmt {
    Let {
        var: String,
        loc: Loc,
        expr: Expr,
        cont: Box<Stmt>,
    },
    Move {
        src: String,
        arg: Atom,
        dst: String,
        var: String,
        cont: Box<Stmt>,
    },
    Select {
        src: String,
        val: Value,
        dst: String,
        cont: Box<Stmt>,
    },
    If {
        loc: Loc,
        guard: Atom,
        then_branch: Box<Stmt>,
        else_branch: Box<Stmt>,
    },
    Case {
        src: String,
        dst: String,
        branches: Vec<(Value, Stmt)>,
    },
    MovePending {
        src: String,
        val: Value,
        dst: String,
        var: String,
        cont: Box<Stmt>,
    },
    SelectPending {
        src: String,
        val: Value,
        dst: String,
        cont: Box<Stmt>,
    },
    Skip,
}

impl Stmt {
    pub fn let_(var: impl Into<String>, loc: Loc, expr: Expr, cont: Stmt) -> Stmt {
        Stmt::Let {
            var: var.into(),
            loc,
            expr,
            cont: Box::new(cont),
        }
    }

    /// The hosts of the statement when viewed as an evaluation-context
    /// frame, or `None` for statements that are not frames (`if`, `case`,
    /// `skip`).
    ///
    /// Pending forms only hold up their receiver: the sender has already
    /// acted, matching the projected program where the sender's process has
    /// moved on.
    pub fn frame_hosts(&self) -> Option<BTreeSet<Endpoint>> {
        match self {
            Stmt::Let { loc, .. } => Some([loc.endpoint()].into()),
            Stmt::Move { src, dst, .. } | Stmt::Select { src, dst, .. } => {
                Some([Endpoint::host(src.clone()), Endpoint::host(dst.clone())].into())
            }
            Stmt::MovePending { dst, .. } | Stmt::SelectPending { dst, .. } => {
                Some([Endpoint::host(dst.clone())].into())
            }
            Stmt::If { .. } | Stmt::Case { .. } | Stmt::Skip => None,
        }
    }

    /// The continuation under the head frame, when the head is a frame.
    pub fn frame_cont(&self) -> Option<&Stmt> {
        match self {
            Stmt::Let { cont, .. }
            | Stmt::Move { cont, .. }
            | Stmt::Select { cont, .. }
            | Stmt::MovePending { cont, .. }
            | Stmt::SelectPending { cont, .. } => Some(cont),
            _ => None,
        }
    }

    pub fn with_frame_cont(&self, new_cont: Stmt) -> Stmt {
        let mut s = self.clone();
        match &mut s {
            Stmt::Let { cont, .. }
            | Stmt::Move { cont, .. }
            | Stmt::Select { cont, .. }
            | Stmt::MovePending { cont, .. }
            | Stmt::SelectPending { cont, .. } => **cont = new_cont,
            _ => panic!("head statement is not a frame"),
        }
        s
    }

    /// Capture-free substitution of a value for a variable. Parsed programs
    /// have globally unique binders, so shadowing never arises.
    pub fn subst(&self, var: &str, value: Value) -> Stmt {
        self.subst_atom(var, &Atom::Val(value))
    }

    /// Substitution of an atomic expression (value or variable) for a
    /// variable.
    pub fn subst_atom(&self, var: &str, atom: &Atom) -> Stmt {
        let subst_atom = |a: &Atom| match a {
            Atom::Var(x) if x == var => atom.clone(),
            other => other.clone(),
        };
        match self {
            Stmt::Let {
                var: x,
                loc,
                expr,
                cont,
            } => {
                let mut expr = expr.clone();
                for a in expr.atoms_mut() {
                    *a = subst_atom(a);
                }
                Stmt::Let {
                    var: x.clone(),
                    loc: loc.clone(),
                    expr,
                    cont: Box::new(cont.subst_atom(var, atom)),
                }
            }
            Stmt::Move {
                src,
                arg,
                dst,
                var: x,
                cont,
            } => Stmt::Move {
                src: src.clone(),
                arg: subst_atom(arg),
                dst: dst.clone(),
                var: x.clone(),
                cont: Box::new(cont.subst_atom(var, atom)),
            },
            Stmt::Select {
                src,
                val,
                dst,
                cont,
            } => Stmt::Select {
                src: src.clone(),
                val: *val,
                dst: dst.clone(),
                cont: Box::new(cont.subst_atom(var, atom)),
            },
            Stmt::If {
                loc,
                guard,
                then_branch,
                else_branch,
            } => Stmt::If {
                loc: loc.clone(),
                guard: subst_atom(guard),
                then_branch: Box::new(then_branch.subst_atom(var, atom)),
                else_branch: Box::new(else_branch.subst_atom(var, atom)),
            },
            Stmt::Case { src, dst, branches } => Stmt::Case {
                src: src.clone(),
                dst: dst.clone(),
                branches: branches
                    .iter()
                    .map(|(v, s)| (*v, s.subst_atom(var, atom)))
                    .collect(),
            },
            Stmt::MovePending {
                src,
                val,
                dst,
                var: x,
                cont,
            } => Stmt::MovePending {
                src: src.clone(),
                val: *val,
                dst: dst.clone(),
                var: x.clone(),
                cont: Box::new(cont.subst_atom(var, atom)),
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
                cont: Box::new(cont.subst_atom(var, atom)),
            },
            Stmt::Skip => Stmt::Skip,
        }
    }

    /// Free variables of the statement.
    pub fn free_vars(&self) -> BTreeSet<String> {
        fn atom_var(a: &Atom, out: &mut BTreeSet<String>) {
            if let Atom::Var(x) = a {
                out.insert(x.clone());
            }
        }
        fn go(s: &Stmt, bound: &mut BTreeSet<String>, out: &mut BTreeSet<String>) {
            let free_atom = |a: &Atom, bound: &BTreeSet<String>, out: &mut BTreeSet<String>| {
                let mut vars = BTreeSet::new();
                atom_var(a, &mut vars);
                for v in vars {
                    if !bound.contains(&v) {
                        out.insert(v);
                    }
                }
            };
            match s {
                Stmt::Let {
                    var, expr, cont, ..
                } => {
                    for a in expr.atoms() {
                        free_atom(a, bound, out);
                    }
                    let added = bound.insert(var.clone());
                    go(cont, bound, out);
                    if added {
                        bound.remove(var);
                    }
                }
                Stmt::Move { arg, var, cont, .. } => {
                    free_atom(arg, bound, out);
                    let added = bound.insert(var.clone());
                    go(cont, bound, out);
                    if added {
                        bound.remove(var);
                    }
                }
                Stmt::MovePending { var, cont, .. } => {
                    let added = bound.insert(var.clone());
                    go(cont, bound, out);
                    if added {
                        bound.remove(var);
                    }
                }
                Stmt::Select { cont, .. } | Stmt::SelectPending { cont, .. } => {
                    go(cont, bound, out)
                }
                Stmt::If {
                    guard,
                    then_branch,
                    else_branch,
                    ..
                } => {
                    free_atom(guard, bound, out);
                    go(then_branch, bound, out);
                    go(else_branch, bound, out);
                }
                Stmt::Case { branches, .. } => {
                    for (_, s) in branches {
                        go(s, bound, out);
                    }
                }
                Stmt::Skip => {}
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut BTreeSet::new(), &mut out);
        out
    }

    /// Hosts mentioned anywhere in the statement (annotations and peers).
    pub fn hosts(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |s| match s {
            Stmt::Let { loc, expr, .. } => {
                if let Loc::Host(h) = loc {
                    out.insert(h.clone());
                }
                match expr {
                    Expr::Input(h) | Expr::Output(_, h) | Expr::Receive(h) | Expr::Send(_, h) => {
                        out.insert(h.clone());
                    }
                    _ => {}
                }
            }
            Stmt::Move { src, dst, .. }
            | Stmt::Select { src, dst, .. }
            | Stmt::Case { src, dst, .. }
            | Stmt::MovePending { src, dst, .. }
            | Stmt::SelectPending { src, dst, .. } => {
                out.insert(src.clone());
                out.insert(dst.clone());
            }
            Stmt::If { loc, .. } => {
                if let Loc::Host(h) = loc {
                    out.insert(h.clone());
                }
            }
            Stmt::Skip => {}
        });
        out
    }

    /// Number of statements, counting every branch.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    fn visit(&self, f: &mut impl FnMut(&Stmt)) {
        f(self);
        match self {
            Stmt::Let { cont, .. }
            | Stmt::Move { cont, .. }
            | Stmt::Select { cont, .. }
            | Stmt::MovePending { cont, .. }
            | Stmt::SelectPending { cont, .. } => cont.visit(f),
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                then_branch.visit(f);
                else_branch.visit(f);
            }
            Stmt::Case { branches, .. } => {
                for (_, s) in branches {
                    s.visit(f);
                }
            }
            Stmt::Skip => {}
        }
    }

    pub fn contains_pending(&self) -> bool {
        let mut found = false;
        self.visit(&mut |s| {
            if matches!(s, Stmt::MovePending { .. } | Stmt::SelectPending { .. }) {
                found = true;
            }
        });
        found
    }
}

impl fmt::Debug for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::lang::print::pretty(self))
    }
}

/// Syntax tiers, ordered from most to least restrictive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier {
    Source,
    Choreography,
    Distributed,
    Runtime,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tier::Source => write!(f, "source"),
            Tier::Choreography => write!(f, "choreography"),
            Tier::Distributed => write!(f, "distributed"),
            Tier::Runtime => write!(f, "runtime"),
        }
    }
}

/// The least tier the statement belongs to, decidable from the AST alone.
pub fn tier_of(s: &Stmt) -> Tier {
    let mut tier = Tier::Source;
    let bump = |t: Tier, tier: &mut Tier| {
        if t > *tier {
            *tier = t;
        }
    };
    let mut pending = false;
    let mut case_or_comm = false;
    let mut move_select = false;
    let mut source_shape_broken = false;
    s.visit(&mut |st| match st {
        Stmt::Move { .. } | Stmt::Select { .. } => move_select = true,
        Stmt::Case { .. } => case_or_comm = true,
        Stmt::MovePending { .. } | Stmt::SelectPending { .. } => pending = true,
        Stmt::Let { loc, expr, .. } => {
            match expr {
                Expr::Receive(_) | Expr::Send(..) => case_or_comm = true,
                Expr::Input(h) | Expr::Output(_, h) => {
                    if loc.as_host() != Some(h.as_str()) {
                        source_shape_broken = true;
                    }
                }
                _ => {
                    if *loc != Loc::Star {
                        source_shape_broken = true;
                    }
                }
            };
        }
        Stmt::If { loc, .. } => {
            if *loc != Loc::Star {
                source_shape_broken = true;
            }
        }
        Stmt::Skip => {}
    });
    if source_shape_broken || move_select {
        bump(Tier::Choreography, &mut tier);
    }
    if case_or_comm {
        bump(Tier::Distributed, &mut tier);
    }
    if pending {
        bump(Tier::Runtime, &mut tier);
    }
    tier
}

/// Alpha-equality: structural equality up to consistent renaming of bound
/// variables. Free variables must match exactly.
pub fn alpha_eq(a: &Stmt, b: &Stmt) -> bool {
    fn atom_eq(a: &Atom, b: &Atom, map: &Vec<(String, String)>) -> bool {
        match (a, b) {
            (Atom::Val(v1), Atom::Val(v2)) => v1 == v2,
            (Atom::Var(x), Atom::Var(y)) => {
                match map.iter().rev().find(|(l, _)| l == x) {
                    Some((_, r)) => r == y,
                    // free on the left: must be identical and free on the right
                    None => x == y && !map.iter().any(|(_, r)| r == y),
                }
            }
            _ => false,
        }
    }
    fn expr_eq(a: &Expr, b: &Expr, map: &Vec<(String, String)>) -> bool {
        match (a, b) {
            (Expr::Atomic(x), Expr::Atomic(y)) => atom_eq(x, y, map),
            (Expr::Op(f, xs), Expr::Op(g, ys)) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| atom_eq(x, y, map))
            }
            (
                Expr::Declassify { arg, from, to },
                Expr::Declassify {
                    arg: arg2,
                    from: from2,
                    to: to2,
                },
            )
            | (
                Expr::Endorse { arg, from, to },
                Expr::Endorse {
                    arg: arg2,
                    from: from2,
                    to: to2,
                },
            ) => atom_eq(arg, arg2, map) && from == from2 && to == to2,
            (Expr::Input(h), Expr::Input(h2)) => h == h2,
            (Expr::Output(a1, h), Expr::Output(a2, h2)) => atom_eq(a1, a2, map) && h == h2,
            (Expr::Receive(h), Expr::Receive(h2)) => h == h2,
            (Expr::Send(a1, h), Expr::Send(a2, h2)) => atom_eq(a1, a2, map) && h == h2,
            _ => false,
        }
    }
    fn go(a: &Stmt, b: &Stmt, map: &mut Vec<(String, String)>) -> bool {
        match (a, b) {
            (
                Stmt::Let {
                    var,
                    loc,
                    expr,
                    cont,
                },
                Stmt::Let {
                    var: var2,
                    loc: loc2,
                    expr: expr2,
                    cont: cont2,
                },
            ) => {
                if loc != loc2 || !expr_eq(expr, expr2, map) {
                    return false;
                }
                map.push((var.clone(), var2.clone()));
                let ok = go(cont, cont2, map);
                map.pop();
                ok
            }
            (
                Stmt::Move {
                    src,
                    arg,
                    dst,
                    var,
                    cont,
                },
                Stmt::Move {
                    src: src2,
                    arg: arg2,
                    dst: dst2,
                    var: var2,
                    cont: cont2,
                },
            ) => {
                if src != src2 || dst != dst2 || !atom_eq(arg, arg2, map) {
                    return false;
                }
                map.push((var.clone(), var2.clone()));
                let ok = go(cont, cont2, map);
                map.pop();
                ok
            }
            (
                Stmt::MovePending {
                    src,
                    val,
                    dst,
                    var,
                    cont,
                },
                Stmt::MovePending {
                    src: src2,
                    val: val2,
                    dst: dst2,
                    var: var2,
                    cont: cont2,
                },
            ) => {
                if src != src2 || dst != dst2 || val != val2 {
                    return false;
                }
                map.push((var.clone(), var2.clone()));
                let ok = go(cont, cont2, map);
                map.pop();
                ok
            }
            (
                Stmt::Select {
                    src,
                    val,
                    dst,
                    cont,
                },
                Stmt::Select {
                    src: src2,
                    val: val2,
                    dst: dst2,
                    cont: cont2,
                },
            )
            | (
                Stmt::SelectPending {
                    src,
                    val,
                    dst,
                    cont,
                },
                Stmt::SelectPending {
                    src: src2,
                    val: val2,
                    dst: dst2,
                    cont: cont2,
                },
            ) => src == src2 && dst == dst2 && val == val2 && go(cont, cont2, map),
            (
                Stmt::If {
                    loc,
                    guard,
                    then_branch,
                    else_branch,
                },
                Stmt::If {
                    loc: loc2,
                    guard: guard2,
                    then_branch: then2,
                    else_branch: else2,
                },
            ) => {
                loc == loc2
                    && atom_eq(guard, guard2, map)
                    && go(then_branch, then2, map)
                    && go(else_branch, else2, map)
            }
            (
                Stmt::Case { src, dst, branches },
                Stmt::Case {
                    src: src2,
                    dst: dst2,
                    branches: branches2,
                },
            ) => {
                src == src2
                    && dst == dst2
                    && branches.len() == branches2.len()
                    && branches
                        .iter()
                        .zip(branches2)
                        .all(|((v1, s1), (v2, s2))| v1 == v2 && go(s1, s2, map))
            }
            (Stmt::Skip, Stmt::Skip) => true,
            _ => false,
        }
    }
    go(a, b, &mut Vec::new())
}
