//! Information-flow type checking for choreographies and source programs.
//!
//! Checking is declarative with subsumption, so instead of inferring a
//! single label per expression we compute the constraints an expression
//! places on its label: a lower bound on confidentiality and an upper bound
//! on integrity. A `let` then binds its variable at the least label
//! satisfying both the expression constraints and the host's authority,
//! which is the principal choice under subsumption.

use serde::Serialize;
use std::collections::BTreeMap;

use crate::labels::{Attack, HostClass, HostEnvironment, Label, Principal};
use crate::lang::ast::{Atom, Expr, Loc, Stmt};

/// Variable typing context: variable → (location, label).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeContext {
    bindings: BTreeMap<String, (Loc, Label)>,
}

impl TypeContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, var: impl Into<String>, loc: Loc, label: Label) {
        self.bindings.insert(var.into(), (loc, label));
    }

    pub fn lookup(&self, var: &str) -> Option<&(Loc, Label)> {
        self.bindings.get(var)
    }
}

/// A structured typing diagnostic: the violated rule, the statement ordinal
/// in program order, and a human-readable message.
#[derive(Clone, Debug, Serialize, thiserror::Error)]
#[error("{rule} at statement {position}: {message}")]
pub struct Diagnostic {
    pub rule: &'static str,
    pub position: usize,
    pub message: String,
}

fn diag(rule: &'static str, position: usize, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        rule,
        position,
        message: message.into(),
    }
}

/// The label of a statement location: hosts from the environment, the ideal
/// host fully trusted.
pub fn loc_label(env: &HostEnvironment, loc: &Loc) -> Result<Label, String> {
    match loc {
        Loc::Star => Ok(HostEnvironment::ideal_label()),
        Loc::Host(h) => env.host_label(h).cloned().map_err(|e| e.to_string()),
    }
}

/// Constraints an expression places on its label: the label must sit above
/// `conf_floor` in confidentiality and below `integ_ceiling` in integrity.
struct ExprConstraints {
    conf_floor: Principal,
    integ_ceiling: Principal,
}

impl ExprConstraints {
    fn free() -> Self {
        ExprConstraints {
            conf_floor: Principal::weakest(),
            integ_ceiling: Principal::strongest(),
        }
    }

    fn from_label(l: &Label) -> Self {
        ExprConstraints {
            conf_floor: l.conf.clone(),
            integ_ceiling: l.integ.clone(),
        }
    }

    fn merge(self, other: ExprConstraints) -> Self {
        ExprConstraints {
            conf_floor: self.conf_floor.and(&other.conf_floor),
            integ_ceiling: self.integ_ceiling.or(&other.integ_ceiling),
        }
    }

    fn admits(&self, l: &Label) -> bool {
        l.conf.acts_for(&self.conf_floor) && self.integ_ceiling.acts_for(&l.integ)
    }
}

struct Checker<'a> {
    env: &'a HostEnvironment,
    attack: &'a Attack,
    position: usize,
}

impl<'a> Checker<'a> {
    /// The label constraint contributed by an atomic expression used at
    /// `loc`, per Lbl-Value / Lbl-Variable.
    fn atomic_constraints(
        &self,
        ctx: &TypeContext,
        loc: &Loc,
        atom: &Atom,
        rule: &'static str,
    ) -> Result<ExprConstraints, Diagnostic> {
        match atom {
            Atom::Val(_) => Ok(ExprConstraints::free()),
            Atom::Var(x) => {
                let (bound_loc, label) = ctx.lookup(x).ok_or_else(|| {
                    diag(rule, self.position, format!("unbound variable `{x}`"))
                })?;
                if bound_loc != loc {
                    return Err(diag(
                        rule,
                        self.position,
                        format!(
                            "variable `{x}` is stored at {bound_loc} and cannot be used at {loc}"
                        ),
                    ));
                }
                Ok(ExprConstraints::from_label(label))
            }
        }
    }

    fn check_atomic(
        &self,
        ctx: &TypeContext,
        loc: &Loc,
        atom: &Atom,
        required: &Label,
        rule: &'static str,
    ) -> Result<(), Diagnostic> {
        let constraints = self.atomic_constraints(ctx, loc, atom, rule)?;
        if !constraints.admits(required) {
            return Err(diag(
                rule,
                self.position,
                format!("`{atom}` does not flow to {required}"),
            ));
        }
        Ok(())
    }

    fn host_label(&self, host: &str, rule: &'static str) -> Result<Label, Diagnostic> {
        self.env
            .host_label(host)
            .cloned()
            .map_err(|e| diag(rule, self.position, e.to_string()))
    }

    /// Expression rules Lbl-Operator through Lbl-Send; returns the label
    /// constraints for the result.
    fn expr_constraints(
        &self,
        ctx: &TypeContext,
        loc: &Loc,
        expr: &Expr,
    ) -> Result<ExprConstraints, Diagnostic> {
        match expr {
            Expr::Atomic(a) => self.atomic_constraints(ctx, loc, a, "Lbl-Variable"),
            Expr::Op(_, args) => {
                let mut merged = ExprConstraints::free();
                for a in args {
                    merged = merged.merge(self.atomic_constraints(ctx, loc, a, "Lbl-Operator")?);
                }
                Ok(merged)
            }
            Expr::Declassify { arg, from, to } => {
                let rule = "Lbl-Declassify";
                self.check_atomic(ctx, loc, arg, from, rule)?;
                if from.integ_projection() != to.integ_projection() {
                    return Err(diag(
                        rule,
                        self.position,
                        format!(
                            "declassification must preserve integrity: {} vs {}",
                            from.integ, to.integ
                        ),
                    ));
                }
                self.require_uncompromised(from, rule)?;
                self.require_uncompromised(to, rule)?;
                Ok(ExprConstraints::from_label(to))
            }
            Expr::Endorse { arg, from, to } => {
                let rule = "Lbl-Endorse";
                self.check_atomic(ctx, loc, arg, from, rule)?;
                if from.conf_projection() != to.conf_projection() {
                    return Err(diag(
                        rule,
                        self.position,
                        format!(
                            "endorsement must preserve confidentiality: {} vs {}",
                            from.conf, to.conf
                        ),
                    ));
                }
                self.require_uncompromised(from, rule)?;
                self.require_uncompromised(to, rule)?;
                Ok(ExprConstraints::from_label(to))
            }
            Expr::Input(h) => {
                let label = self.host_label(h, "Lbl-Input")?;
                Ok(ExprConstraints::from_label(&label))
            }
            Expr::Output(arg, h) => {
                let label = self.host_label(h, "Lbl-Output")?;
                self.check_atomic(ctx, loc, arg, &label, "Lbl-Output")?;
                Ok(ExprConstraints::free())
            }
            Expr::Receive(peer) => {
                let rule = "Lbl-Receive";
                self.require_malicious_peer(peer, rule)?;
                let label = self.host_label(peer, rule)?;
                Ok(ExprConstraints::from_label(&label.integ_projection()))
            }
            Expr::Send(arg, peer) => {
                let rule = "Lbl-Send";
                self.require_malicious_peer(peer, rule)?;
                let label = self.host_label(peer, rule)?;
                self.check_atomic(ctx, loc, arg, &label.conf_projection(), rule)?;
                Ok(ExprConstraints::free())
            }
        }
    }

    fn require_uncompromised(&self, l: &Label, rule: &'static str) -> Result<(), Diagnostic> {
        if !l.uncompromised() {
            return Err(diag(
                rule,
                self.position,
                format!("label {l} is compromised (integrity does not act for confidentiality)"),
            ));
        }
        Ok(())
    }

    /// The compiler never generates send/recv; they model communication with
    /// malicious hosts, so the annotated peer must be malicious under the
    /// configured attack.
    fn require_malicious_peer(&self, peer: &str, rule: &'static str) -> Result<(), Diagnostic> {
        let class = self
            .env
            .classify(peer, self.attack)
            .map_err(|e| diag(rule, self.position, e.to_string()))?;
        if class != HostClass::Malicious {
            return Err(diag(
                rule,
                self.position,
                format!("send/recv peer `{peer}` is not malicious under the configured attack"),
            ));
        }
        Ok(())
    }

    /// Binds at the least label compatible with the expression constraints
    /// and the authority of the storing host.
    fn principal_binding(
        &self,
        constraints: ExprConstraints,
        store: &Label,
        store_desc: &str,
        rule: &'static str,
    ) -> Result<Label, Diagnostic> {
        if !store.conf.acts_for(&constraints.conf_floor) {
            return Err(diag(
                rule,
                self.position,
                format!(
                    "{store_desc} lacks the authority to store data with confidentiality {}",
                    constraints.conf_floor
                ),
            ));
        }
        Ok(Label::new(
            constraints.conf_floor,
            constraints.integ_ceiling.or(&store.integ),
        ))
    }

    fn check_stmt(&mut self, ctx: &TypeContext, s: &Stmt) -> Result<(), Diagnostic> {
        self.position += 1;
        match s {
            Stmt::Let {
                var,
                loc,
                expr,
                cont,
            } => {
                let rule = "Lbl-Let";
                let constraints = self.expr_constraints(ctx, loc, expr)?;
                let store = loc_label(self.env, loc)
                    .map_err(|e| diag(rule, self.position, e))?;
                let label =
                    self.principal_binding(constraints, &store, &format!("host {loc}"), rule)?;
                let mut ctx = ctx.clone();
                ctx.bind(var.clone(), loc.clone(), label);
                self.check_stmt(&ctx, cont)
            }
            Stmt::Move {
                src,
                arg,
                dst,
                var,
                cont,
            } => {
                let rule = "Lbl-Communicate";
                let constraints =
                    self.atomic_constraints(ctx, &Loc::Host(src.clone()), arg, rule)?;
                let store = self.host_label(dst, rule)?;
                let label =
                    self.principal_binding(constraints, &store, &format!("host {dst}"), rule)?;
                let mut ctx = ctx.clone();
                ctx.bind(var.clone(), Loc::Host(dst.clone()), label);
                self.check_stmt(&ctx, cont)
            }
            Stmt::Select { src, dst, cont, .. } => {
                let rule = "Lbl-Select";
                let src_label = self.host_label(src, rule)?;
                let dst_label = self.host_label(dst, rule)?;
                if !src_label.integ.acts_for(&dst_label.integ) {
                    return Err(diag(
                        rule,
                        self.position,
                        format!("selector `{src}` has less integrity than `{dst}`"),
                    ));
                }
                self.check_stmt(ctx, cont)
            }
            Stmt::If {
                loc,
                guard,
                then_branch,
                else_branch,
            } => {
                let rule = "Lbl-If";
                self.check_atomic(ctx, loc, guard, &Label::bottom(), rule)
                    .map_err(|mut d| {
                        d.message = format!("control flow must be public and trusted: {}", d.message);
                        d
                    })?;
                self.check_stmt(ctx, then_branch)?;
                self.check_stmt(ctx, else_branch)
            }
            Stmt::Case { .. } | Stmt::MovePending { .. } | Stmt::SelectPending { .. } => Err(diag(
                "Lbl-Tier",
                self.position,
                "only source- and choreography-tier statements can be type checked",
            )),
            Stmt::Skip => Ok(()),
        }
    }
}

/// Checks an atomic expression at a required label (Lbl-Value/Lbl-Variable).
pub fn check_atomic(
    ctx: &TypeContext,
    env: &HostEnvironment,
    attack: &Attack,
    loc: &Loc,
    atom: &Atom,
    required: &Label,
) -> Result<(), Diagnostic> {
    Checker {
        env,
        attack,
        position: 0,
    }
    .check_atomic(ctx, loc, atom, required, "Lbl-Variable")
}

/// Checks an effectful expression at a required label.
pub fn check_expr(
    ctx: &TypeContext,
    env: &HostEnvironment,
    attack: &Attack,
    loc: &Loc,
    expr: &Expr,
    required: &Label,
) -> Result<(), Diagnostic> {
    let checker = Checker {
        env,
        attack,
        position: 0,
    };
    let constraints = checker.expr_constraints(ctx, loc, expr)?;
    if !constraints.admits(required) {
        return Err(diag(
            "Lbl-Subsumption",
            0,
            format!("expression does not check at {required}"),
        ));
    }
    Ok(())
}

/// Checks a whole statement under the given context.
pub fn check_stmt(
    ctx: &TypeContext,
    env: &HostEnvironment,
    attack: &Attack,
    s: &Stmt,
) -> Result<(), Diagnostic> {
    Checker {
        env,
        attack,
        position: 0,
    }
    .check_stmt(ctx, s)
}

/// Checks a closed program under the empty context.
pub fn check_program(env: &HostEnvironment, attack: &Attack, s: &Stmt) -> Result<(), Diagnostic> {
    check_stmt(&TypeContext::new(), env, attack, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::ast::Value;
    use crate::lang::{parse_label, parse_stmts};
    use std::collections::BTreeMap;

    pub(crate) fn mill_env() -> HostEnvironment {
        let mut hosts = BTreeMap::new();
        hosts.insert("alice".into(), parse_label("<A, A>").unwrap());
        hosts.insert("bob".into(), parse_label("<B, B>").unwrap());
        hosts.insert("mpc".into(), parse_label("<A & B, A & B>").unwrap());
        HostEnvironment::new(hosts).unwrap()
    }

    fn mill_choreo() -> Stmt {
        parse_stmts(
            "let a @ alice = input @ alice;\n\
             move alice.a -> mpc.a2;\n\
             let b @ bob = input @ bob;\n\
             move bob.b -> mpc.b2;\n\
             let ea @ mpc = endorse(a2, <A, A>, <A, A & B>);\n\
             let eb @ mpc = endorse(b2, <B, B>, <B, A & B>);\n\
             let c @ mpc = lt(ea, eb);\n\
             let x @ mpc = declassify(c, <A & B, A & B>, <A | B, A & B>);\n\
             move mpc.x -> alice.x1;\n\
             move mpc.x -> bob.x2;\n\
             let o1 @ alice = output(x1) @ alice;\n\
             move alice.unit -> bob._;\n\
             let o2 @ bob = output(x2) @ bob;\n",
        )
        .unwrap()
    }

    #[test]
    fn millionaires_choreography_accepted() {
        let env = mill_env();
        check_program(&env, &Attack::empty(), &mill_choreo()).unwrap();
    }

    #[test]
    fn skip_accepted_under_any_context() {
        check_program(&mill_env(), &Attack::empty(), &Stmt::Skip).unwrap();
    }

    #[test]
    fn values_check_at_any_label() {
        let env = mill_env();
        let ctx = TypeContext::new();
        for l in ["<top, bot>", "<bot, top>", "<A, B>"] {
            check_atomic(
                &ctx,
                &env,
                &Attack::empty(),
                &Loc::host("alice"),
                &Atom::Val(Value::Int(5)),
                &parse_label(l).unwrap(),
            )
            .unwrap();
        }
    }

    #[test]
    fn variables_flow_and_stay_on_their_host() {
        let env = mill_env();
        let mut ctx = TypeContext::new();
        ctx.bind("x", Loc::host("alice"), parse_label("<A, A>").unwrap());
        check_atomic(
            &ctx,
            &env,
            &Attack::empty(),
            &Loc::host("alice"),
            &Atom::Var("x".into()),
            &parse_label("<A & B, A>").unwrap(),
        )
        .unwrap();
        let err = check_atomic(
            &ctx,
            &env,
            &Attack::empty(),
            &Loc::host("bob"),
            &Atom::Var("x".into()),
            &parse_label("<A & B, A>").unwrap(),
        )
        .unwrap_err();
        assert!(err.message.contains("cannot be used"), "{err}");
    }

    #[test]
    fn storing_foreign_secret_rejected() {
        // bob's secret moved onto alice
        let env = mill_env();
        let s = parse_stmts(
            "let b @ bob = input @ bob;\n\
             move bob.b -> alice.y;\n",
        )
        .unwrap();
        let err = check_program(&env, &Attack::empty(), &s).unwrap_err();
        assert_eq!(err.rule, "Lbl-Communicate");
        assert!(err.message.contains("authority"), "{err}");
    }

    #[test]
    fn declassify_requires_uncompromised_labels() {
        let env = mill_env();
        let s = parse_stmts(
            "let x @ mpc = declassify(5, <A & B, bot>, <A | B, bot>);\n",
        )
        .unwrap();
        let err = check_program(&env, &Attack::empty(), &s).unwrap_err();
        assert_eq!(err.rule, "Lbl-Declassify");
        assert!(err.message.contains("compromised"), "{err}");
    }

    #[test]
    fn endorse_cannot_change_confidentiality() {
        let env = mill_env();
        let s = parse_stmts("let x @ mpc = endorse(5, <A, A>, <B, A & B>);\n").unwrap();
        let err = check_program(&env, &Attack::empty(), &s).unwrap_err();
        assert_eq!(err.rule, "Lbl-Endorse");
        assert!(err.message.contains("confidentiality"), "{err}");
    }

    #[test]
    fn weak_mpc_label_fails_at_authority() {
        let mut hosts = BTreeMap::new();
        hosts.insert("alice".into(), parse_label("<A, A>").unwrap());
        hosts.insert("bob".into(), parse_label("<B, B>").unwrap());
        hosts.insert("mpc".into(), parse_label("<A, A>").unwrap());
        let env = HostEnvironment::new(hosts).unwrap();
        let err = check_program(&env, &Attack::empty(), &mill_choreo()).unwrap_err();
        assert!(
            err.rule == "Lbl-Communicate" || err.rule == "Lbl-Let",
            "{err}"
        );
        assert!(err.message.contains("authority"), "{err}");
    }

    #[test]
    fn recv_send_need_malicious_peer() {
        let env = mill_env();
        let s = parse_stmts("let y @ bob = recv alice;\n").unwrap();
        assert!(check_program(&env, &Attack::empty(), &s).is_err());
        let attack = Attack::new(
            ["A".to_string()].into(),
            ["A".to_string()].into(),
        )
        .unwrap();
        check_program(&env, &attack, &s).unwrap();
    }

    #[test]
    fn if_guard_must_be_public_trusted() {
        let env = mill_env();
        // literal guards are fine
        let s = parse_stmts("if alice.true { } else { }\n").unwrap();
        check_program(&env, &Attack::empty(), &s).unwrap();
        // a variable with alice's label is not
        let s = parse_stmts(
            "let g @ alice = input @ alice;\nif alice.g { } else { }\n",
        )
        .unwrap();
        let err = check_program(&env, &Attack::empty(), &s).unwrap_err();
        assert_eq!(err.rule, "Lbl-If");
    }
}
