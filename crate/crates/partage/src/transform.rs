//! Program transformations: canonical source extraction, malicious
//! corruption, and endpoint projection with branch merging.

use std::collections::BTreeMap;

use crate::labels::{Attack, HostClass, HostEnvironment};
use crate::lang::ast::{alpha_eq, Atom, Expr, Loc, Stmt, Value};
use crate::semantics::Buffer;
use crate::syncheck::{self, SyncInit};
use crate::typecheck;
use crate::lang::Endpoint;

#[derive(Debug, thiserror::Error)]
pub enum TransformError {
    #[error("statement is not choreography-tier: {0}")]
    NotChoreography(String),
    #[error("an `if` statement sits at malicious host `{0}`")]
    MaliciousIf(String),
    #[error("branches are unprojectable for host `{host}`: {reason}")]
    MergeFailure { host: String, reason: String },
    #[error(transparent)]
    Label(#[from] crate::labels::LabelError),
}

/// The canonical source program of a choreography: communication and
/// selection disappear, and every non-IO statement is rehosted to the ideal
/// host.
pub fn source_of(s: &Stmt) -> Result<Stmt, TransformError> {
    Ok(match s {
        Stmt::Let {
            var,
            loc,
            expr,
            cont,
        } => {
            let loc = if expr.is_io() {
                loc.clone()
            } else {
                Loc::Star
            };
            match expr {
                Expr::Receive(_) | Expr::Send(..) => {
                    return Err(TransformError::NotChoreography(
                        "send/recv have no source counterpart".into(),
                    ))
                }
                _ => {}
            }
            Stmt::Let {
                var: var.clone(),
                loc,
                expr: expr.clone(),
                cont: Box::new(source_of(cont)?),
            }
        }
        Stmt::Move { arg, var, cont, .. } => source_of(cont)?.subst_atom(var, arg),
        Stmt::Select { cont, .. } => source_of(cont)?,
        Stmt::If {
            guard,
            then_branch,
            else_branch,
            ..
        } => Stmt::If {
            loc: Loc::Star,
            guard: guard.clone(),
            then_branch: Box::new(source_of(then_branch)?),
            else_branch: Box::new(source_of(else_branch)?),
        },
        Stmt::Skip => Stmt::Skip,
        Stmt::Case { .. } | Stmt::MovePending { .. } | Stmt::SelectPending { .. } => {
            return Err(TransformError::NotChoreography(
                "case and run-time forms have no source counterpart".into(),
            ))
        }
    })
}

/// Why a candidate choreography is not a valid synthesis of a source
/// program.
#[derive(Debug, thiserror::Error)]
pub enum ValidationError {
    #[error("canonical source of the choreography differs from the source program")]
    Extraction,
    #[error("information-flow typing failed: {0}")]
    Typing(typecheck::Diagnostic),
    #[error("synchronization checking failed: {0}")]
    Synchronization(syncheck::SyncError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// Checks the three conditions for a choreography to be a valid synthesis
/// result: extraction matches up to alpha-renaming, the choreography is
/// well-typed under the empty context, and it is well-synchronized.
pub fn validate_synthesis(
    source: &Stmt,
    choreo: &Stmt,
    env: &HostEnvironment,
    attack: &Attack,
    init: SyncInit,
) -> Result<(), ValidationError> {
    let extracted = source_of(choreo)?;
    if !alpha_eq(&extracted, source) {
        return Err(ValidationError::Extraction);
    }
    typecheck::check_program(env, attack, choreo).map_err(ValidationError::Typing)?;
    syncheck::check_sync(env, attack, init, choreo).map_err(ValidationError::Synchronization)?;
    Ok(())
}

fn fresh_wildcard(used: &mut std::collections::BTreeSet<String>) -> String {
    if used.insert("_".into()) {
        return "_".into();
    }
    let mut i = 1;
    loop {
        let name = format!("_{i}");
        if used.insert(name.clone()) {
            return name;
        }
        i += 1;
    }
}

/// Rewrites a choreography to elide malicious hosts: their statements are
/// removed, and communication with them becomes explicit send/recv with the
/// adversary standing in for the removed host.
pub fn corrupt_stmt(
    s: &Stmt,
    env: &HostEnvironment,
    attack: &Attack,
) -> Result<Stmt, TransformError> {
    let mut used = s.free_vars();
    collect_binders(s, &mut used);
    corrupt_rec(s, env, attack, &mut used)
}

fn collect_binders(s: &Stmt, out: &mut std::collections::BTreeSet<String>) {
    match s {
        Stmt::Let { var, cont, .. }
        | Stmt::Move { var, cont, .. }
        | Stmt::MovePending { var, cont, .. } => {
            out.insert(var.clone());
            collect_binders(cont, out);
        }
        Stmt::Select { cont, .. } | Stmt::SelectPending { cont, .. } => collect_binders(cont, out),
        Stmt::If {
            then_branch,
            else_branch,
            ..
        } => {
            collect_binders(then_branch, out);
            collect_binders(else_branch, out);
        }
        Stmt::Case { branches, .. } => {
            for (_, s) in branches {
                collect_binders(s, out);
            }
        }
        Stmt::Skip => {}
    }
}

fn corrupt_rec(
    s: &Stmt,
    env: &HostEnvironment,
    attack: &Attack,
    used: &mut std::collections::BTreeSet<String>,
) -> Result<Stmt, TransformError> {
    let nonmalicious = |h: &str|

        env.classify(h, attack)
            .map(|c| c != HostClass::Malicious)
            .unwrap_or(true);
    Ok(match s {
        Stmt::Let {
            var,
            loc,
            expr,
            cont,
        } => {
            let keep = match loc {
                Loc::Star => true,
                Loc::Host(h) => nonmalicious(h),
            };
            if keep {
                Stmt::Let {
                    var: var.clone(),
                    loc: loc.clone(),
                    expr: expr.clone(),
                    cont: Box::new(corrupt_rec(cont, env, attack, used)?),
                }
            } else {
                corrupt_rec(cont, env, attack, used)?
            }
        }
        Stmt::Move {
            src,
            arg,
            dst,
            var,
            cont,
        } => {
            let cont = corrupt_rec(cont, env, attack, used)?;
            match (nonmalicious(src), nonmalicious(dst)) {
                (true, true) => Stmt::Move {
                    src: src.clone(),
                    arg: arg.clone(),
                    dst: dst.clone(),
                    var: var.clone(),
                    cont: Box::new(cont),
                },
                (true, false) => Stmt::Let {
                    var: fresh_wildcard(used),
                    loc: Loc::Host(src.clone()),
                    expr: Expr::Send(arg.clone(), dst.clone()),
                    cont: Box::new(cont),
                },
                (false, true) => Stmt::Let {
                    var: var.clone(),
                    loc: Loc::Host(dst.clone()),
                    expr: Expr::Receive(src.clone()),
                    cont: Box::new(cont),
                },
                (false, false) => cont,
            }
        }
        Stmt::Select {
            src,
            val,
            dst,
            cont,
        } => {
            let cont = corrupt_rec(cont, env, attack, used)?;
            match (nonmalicious(src), nonmalicious(dst)) {
                (true, true) => Stmt::Select {
                    src: src.clone(),
                    val: *val,
                    dst: dst.clone(),
                    cont: Box::new(cont),
                },
                (true, false) => Stmt::Let {
                    var: fresh_wildcard(used),
                    loc: Loc::Host(src.clone()),
                    expr: Expr::Send(Atom::Val(*val), dst.clone()),
                    cont: Box::new(cont),
                },
                (false, _) => cont,
            }
        }
        Stmt::If {
            loc,
            guard,
            then_branch,
            else_branch,
        } => {
            if let Loc::Host(h) = loc {
                if !nonmalicious(h) {
                    return Err(TransformError::MaliciousIf(h.clone()));
                }
            }
            Stmt::If {
                loc: loc.clone(),
                guard: guard.clone(),
                then_branch: Box::new(corrupt_rec(then_branch, env, attack, used)?),
                else_branch: Box::new(corrupt_rec(else_branch, env, attack, used)?),
            }
        }
        Stmt::Skip => Stmt::Skip,
        Stmt::Case { .. } | Stmt::MovePending { .. } | Stmt::SelectPending { .. } => {
            return Err(TransformError::NotChoreography(
                "corruption applies to choreographies".into(),
            ))
        }
    })
}

/// A distributed program: one statement and initial buffer per host.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistributedProgram {
    pub processes: BTreeMap<String, (Stmt, Buffer)>,
}

impl DistributedProgram {
    pub fn hosts(&self) -> impl Iterator<Item = &String> {
        self.processes.keys()
    }
}

/// Drops the processes of malicious hosts.
pub fn corrupt_config(
    d: &DistributedProgram,
    env: &HostEnvironment,
    attack: &Attack,
) -> DistributedProgram {
    DistributedProgram {
        processes: d
            .processes
            .iter()
            .filter(|(h, _)| {
                env.classify(h, attack)
                    .map(|c| c != HostClass::Malicious)
                    .unwrap_or(true)
            })
            .map(|(h, p)| (h.clone(), p.clone()))
            .collect(),
    }
}

/// Merges the projections of two branches for a host that does not hold the
/// guard. Identical frames merge recursively (modulo the bound name); case
/// statements union their branches, merging bodies on shared values.
pub fn merge(s1: &Stmt, s2: &Stmt) -> Result<Stmt, String> {
    match (s1, s2) {
        (Stmt::Skip, Stmt::Skip) => Ok(Stmt::Skip),
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
            if loc != loc2 || expr != expr2 {
                return Err(format!(
                    "differing statements outside a case: `let {var} = ...` vs `let {var2} = ...`"
                ));
            }
            let cont2 = if var == var2 {
                (**cont2).clone()
            } else {
                cont2.subst_atom(var2, &Atom::Var(var.clone()))
            };
            Ok(Stmt::Let {
                var: var.clone(),
                loc: loc.clone(),
                expr: expr.clone(),
                cont: Box::new(merge(cont, &cont2)?),
            })
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
            if src != src2 || dst != dst2 || arg != arg2 {
                return Err("differing communication statements".into());
            }
            let cont2 = if var == var2 {
                (**cont2).clone()
            } else {
                cont2.subst_atom(var2, &Atom::Var(var.clone()))
            };
            Ok(Stmt::Move {
                src: src.clone(),
                arg: arg.clone(),
                dst: dst.clone(),
                var: var.clone(),
                cont: Box::new(merge(cont, &cont2)?),
            })
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
        ) => {
            if src != src2 || dst != dst2 || val != val2 {
                return Err("differing selection statements".into());
            }
            Ok(Stmt::Select {
                src: src.clone(),
                val: *val,
                dst: dst.clone(),
                cont: Box::new(merge(cont, cont2)?),
            })
        }
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
            if loc != loc2 || guard != guard2 {
                return Err("differing conditionals".into());
            }
            Ok(Stmt::If {
                loc: loc.clone(),
                guard: guard.clone(),
                then_branch: Box::new(merge(then_branch, then2)?),
                else_branch: Box::new(merge(else_branch, else2)?),
            })
        }
        (
            Stmt::Case { src, dst, branches },
            Stmt::Case {
                src: src2,
                dst: dst2,
                branches: branches2,
            },
        ) => {
            if src != src2 || dst != dst2 {
                return Err("case statements on different channels".into());
            }
            let mut merged: Vec<(Value, Stmt)> = branches.clone();
            for (v, body2) in branches2 {
                if let Some((_, body)) = merged.iter_mut().find(|(bv, _)| bv == v) {
                    *body = merge(body, body2)?;
                } else {
                    merged.push((*v, body2.clone()));
                }
            }
            merged.sort_by_key(|(v, _)| *v);
            Ok(Stmt::Case {
                src: src.clone(),
                dst: dst.clone(),
                branches: merged,
            })
        }
        _ => Err("branches have different shapes".into()),
    }
}

/// Projects a choreography statement onto one host. Run-time pending forms
/// project to a receive on the receiver; the in-flight value is recovered
/// separately by [`pending_messages`].
pub fn project(s: &Stmt, host: &str) -> Result<Stmt, TransformError> {
    let fail = |reason: String| TransformError::MergeFailure {
        host: host.to_string(),
        reason,
    };
    Ok(match s {
        Stmt::Let {
            var,
            loc,
            expr,
            cont,
        } => {
            let cont = project(cont, host)?;
            if loc.as_host() == Some(host) {
                Stmt::Let {
                    var: var.clone(),
                    loc: loc.clone(),
                    expr: expr.clone(),
                    cont: Box::new(cont),
                }
            } else {
                cont
            }
        }
        Stmt::Move {
            src,
            arg,
            dst,
            var,
            cont,
        } => {
            let cont = project(cont, host)?;
            if src == host {
                let mut used = cont.free_vars();
                collect_binders(&cont, &mut used);
                Stmt::Let {
                    var: fresh_wildcard(&mut used),
                    loc: Loc::Host(src.clone()),
                    expr: Expr::Send(arg.clone(), dst.clone()),
                    cont: Box::new(cont),
                }
            } else if dst == host {
                Stmt::Let {
                    var: var.clone(),
                    loc: Loc::Host(dst.clone()),
                    expr: Expr::Receive(src.clone()),
                    cont: Box::new(cont),
                }
            } else {
                cont
            }
        }
        Stmt::MovePending {
            src,
            val,
            dst,
            var,
            cont,
        } => {
            let cont = project(cont, host)?;
            if dst == host {
                // the send already happened; only the receive remains
                Stmt::Let {
                    var: var.clone(),
                    loc: Loc::Host(dst.clone()),
                    expr: Expr::Receive(src.clone()),
                    cont: Box::new(cont),
                }
            } else {
                let _ = val;
                cont
            }
        }
        Stmt::Select {
            src,
            val,
            dst,
            cont,
        } => {
            let cont = project(cont, host)?;
            if src == host {
                let mut used = cont.free_vars();
                collect_binders(&cont, &mut used);
                Stmt::Let {
                    var: fresh_wildcard(&mut used),
                    loc: Loc::Host(src.clone()),
                    expr: Expr::Send(Atom::Val(*val), dst.clone()),
                    cont: Box::new(cont),
                }
            } else if dst == host {
                Stmt::Case {
                    src: src.clone(),
                    dst: dst.clone(),
                    branches: vec![(*val, cont)],
                }
            } else {
                cont
            }
        }
        Stmt::SelectPending {
            src,
            val,
            dst,
            cont,
        } => {
            let cont = project(cont, host)?;
            if dst == host {
                Stmt::Case {
                    src: src.clone(),
                    dst: dst.clone(),
                    branches: vec![(*val, cont)],
                }
            } else {
                cont
            }
        }
        Stmt::If {
            loc,
            guard,
            then_branch,
            else_branch,
        } => {
            let left = project(then_branch, host)?;
            let right = project(else_branch, host)?;
            if loc.as_host() == Some(host) {
                Stmt::If {
                    loc: loc.clone(),
                    guard: guard.clone(),
                    then_branch: Box::new(left),
                    else_branch: Box::new(right),
                }
            } else {
                merge(&left, &right).map_err(|reason| fail(reason))?
            }
        }
        Stmt::Skip => Stmt::Skip,
        Stmt::Case { .. } => {
            return Err(TransformError::NotChoreography(
                "case statements cannot be projected".into(),
            ))
        }
    })
}

/// In-flight messages of run-time pending terms, in program order: each is
/// already in transit and belongs at the tail of the receiver's queue.
pub fn pending_messages(s: &Stmt) -> Vec<(String, String, Value)> {
    fn go(s: &Stmt, out: &mut Vec<(String, String, Value)>) {
        match s {
            Stmt::MovePending { src, val, dst, cont, .. }
            | Stmt::SelectPending { src, val, dst, cont } => {
                out.push((src.clone(), dst.clone(), *val));
                go(cont, out);
            }
            Stmt::Let { cont, .. } | Stmt::Move { cont, .. } | Stmt::Select { cont, .. } => {
                go(cont, out)
            }
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                // delayed stepping only reduces both branches with the same
                // action, so reachable states carry identical pendings
                let mut left = Vec::new();
                let mut right = Vec::new();
                go(then_branch, &mut left);
                go(else_branch, &mut right);
                debug_assert_eq!(left, right, "branch pendings diverge");
                out.extend(left);
            }
            Stmt::Case { branches, .. } => {
                if let Some((_, first)) = branches.first() {
                    go(first, out);
                }
            }
            Stmt::Skip => {}
        }
    }
    let mut out = Vec::new();
    go(s, &mut out);
    out
}

/// Endpoint projection of a whole choreography onto every declared host.
pub fn partition(
    s: &Stmt,
    env: &HostEnvironment,
) -> Result<DistributedProgram, TransformError> {
    let pendings = pending_messages(s);
    let mut processes = BTreeMap::new();
    for host in env.host_names() {
        let stmt = project(s, host)?;
        let mut buffer = Buffer::new();
        for (src, dst, val) in &pendings {
            if dst == host {
                buffer.push(Endpoint::host(src.clone()), Endpoint::host(dst.clone()), *val);
            }
        }
        processes.insert(host.clone(), (stmt, buffer));
    }
    Ok(DistributedProgram { processes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::Attack;
    use crate::lang::{parse_stmts, pretty};
    use crate::testutil::{mill_choreo, mill_env, mill_source};

    fn attack(pub_atoms: &[&str], untrusted: &[&str]) -> Attack {
        Attack::new(
            pub_atoms.iter().map(|s| s.to_string()).collect(),
            untrusted.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn millionaires_extraction_matches_source() {
        let extracted = source_of(&mill_choreo()).unwrap();
        assert!(
            alpha_eq(&extracted, &mill_source()),
            "extracted:\n{}",
            pretty(&extracted)
        );
    }

    #[test]
    fn extraction_drops_select_and_is_total_on_skip() {
        assert_eq!(source_of(&Stmt::Skip).unwrap(), Stmt::Skip);
        let s = parse_stmts("select alice.true -> bob;\nlet x @ star = 1;\n").unwrap();
        let extracted = source_of(&s).unwrap();
        assert!(alpha_eq(
            &extracted,
            &parse_stmts("let x @ star = 1;\n").unwrap()
        ));
    }

    #[test]
    fn millionaires_validates() {
        validate_synthesis(
            &mill_source(),
            &mill_choreo(),
            &mill_env(),
            &Attack::empty(),
            SyncInit::Top,
        )
        .unwrap();
    }

    #[test]
    fn swapped_inputs_fail_extraction() {
        let swapped = parse_stmts(
            &crate::testutil::MILL_CHOREO.replacen(
                "let a @ alice = input @ alice;\nmove alice.a -> mpc.a2;\nlet b @ bob = input @ bob;\n",
                "let b @ bob = input @ bob;\nlet a @ alice = input @ alice;\nmove alice.a -> mpc.a2;\n",
                1,
            ),
        )
        .unwrap();
        let err = validate_synthesis(
            &mill_source(),
            &swapped,
            &mill_env(),
            &Attack::empty(),
            SyncInit::Top,
        )
        .unwrap_err();
        assert!(matches!(err, ValidationError::Extraction));
    }

    #[test]
    fn skip_validates_against_skip() {
        validate_synthesis(
            &Stmt::Skip,
            &Stmt::Skip,
            &mill_env(),
            &Attack::empty(),
            SyncInit::Top,
        )
        .unwrap();
    }

    #[test]
    fn empty_attack_corruption_is_identity() {
        let s = mill_choreo();
        assert_eq!(corrupt_stmt(&s, &mill_env(), &Attack::empty()).unwrap(), s);
    }

    #[test]
    fn corrupting_bob_rewrites_his_channels() {
        let s = mill_choreo();
        let corrupted = corrupt_stmt(&s, &mill_env(), &attack(&["B"], &["B"])).unwrap();
        let expected = parse_stmts(
            "let a @ alice = input @ alice;\n\
             move alice.a -> mpc.a2;\n\
             let b2 @ mpc = recv bob;\n\
             let ea @ mpc = endorse(a2, <A, A>, <A, A & B>);\n\
             let eb @ mpc = endorse(b2, <B, B>, <B, A & B>);\n\
             let c @ mpc = lt(ea, eb);\n\
             let x @ mpc = declassify(c, <A & B, A & B>, <A | B, A & B>);\n\
             move mpc.x -> alice.x1;\n\
             let _ @ mpc = send x -> bob;\n\
             let o1 @ alice = output(x1) @ alice;\n\
             let _s @ alice = send unit -> bob;\n",
        )
        .unwrap();
        assert!(
            alpha_eq(&corrupted, &expected),
            "corrupted:\n{}",
            pretty(&corrupted)
        );
    }

    #[test]
    fn appendix_worked_corruption_example() {
        let s = parse_stmts(
            "let x @ alice = input @ alice;\n\
             move alice.x -> bob.y;\n\
             move alice.x -> chuck.z;\n\
             let y2 @ bob = add(y, 1);\n\
             move bob.y2 -> alice.x2;\n",
        )
        .unwrap();
        let mut hosts = std::collections::BTreeMap::new();
        hosts.insert("alice".into(), crate::lang::parse_label("<A, A>").unwrap());
        hosts.insert("bob".into(), crate::lang::parse_label("<B, B>").unwrap());
        hosts.insert("chuck".into(), crate::lang::parse_label("<C, C>").unwrap());
        let env = HostEnvironment::new(hosts).unwrap();
        let corrupted = corrupt_stmt(&s, &env, &attack(&["A"], &["A"])).unwrap();
        let expected = parse_stmts(
            "let y @ bob = recv alice;\n\
             let z @ chuck = recv alice;\n\
             let y2 @ bob = add(y, 1);\n\
             let _ @ bob = send y2 -> alice;\n",
        )
        .unwrap();
        assert!(
            alpha_eq(&corrupted, &expected),
            "corrupted:\n{}",
            pretty(&corrupted)
        );
    }

    #[test]
    fn if_at_malicious_host_is_an_error() {
        let s = parse_stmts("if alice.true { } else { }\n").unwrap();
        let err = corrupt_stmt(&s, &mill_env(), &attack(&["A"], &["A"])).unwrap_err();
        assert!(matches!(err, TransformError::MaliciousIf(_)));
    }

    #[test]
    fn millionaires_projects_to_three_processes() {
        let d = partition(&mill_choreo(), &mill_env()).unwrap();
        let alice_expected = parse_stmts(
            "let a @ alice = input @ alice;\n\
             let _ @ alice = send a -> mpc;\n\
             let x1 @ alice = recv mpc;\n\
             let o1 @ alice = output(x1) @ alice;\n\
             let _s @ alice = send unit -> bob;\n",
        )
        .unwrap();
        let bob_expected = parse_stmts(
            "let b @ bob = input @ bob;\n\
             let _ @ bob = send b -> mpc;\n\
             let x2 @ bob = recv mpc;\n\
             let s @ bob = recv alice;\n\
             let o2 @ bob = output(x2) @ bob;\n",
        )
        .unwrap();
        let mpc_expected = parse_stmts(
            "let a2 @ mpc = recv alice;\n\
             let b2 @ mpc = recv bob;\n\
             let ea @ mpc = endorse(a2, <A, A>, <A, A & B>);\n\
             let eb @ mpc = endorse(b2, <B, B>, <B, A & B>);\n\
             let c @ mpc = lt(ea, eb);\n\
             let x @ mpc = declassify(c, <A & B, A & B>, <A | B, A & B>);\n\
             let _ @ mpc = send x -> alice;\n\
             let _2 @ mpc = send x -> bob;\n",
        )
        .unwrap();
        for (host, expected) in [
            ("alice", alice_expected),
            ("bob", bob_expected),
            ("mpc", mpc_expected),
        ] {
            let (got, buffer) = &d.processes[host];
            assert!(
                alpha_eq(got, &expected),
                "{host} projected to:\n{}",
                pretty(got)
            );
            assert_eq!(buffer.total_len(), 0);
        }
    }

    #[test]
    fn knowledge_of_choice_projects_to_case() {
        let s = parse_stmts(
            "if alice.true {\n\
               select alice.true -> bob;\n\
               let x @ bob = 1;\n\
             } else {\n\
               select alice.false -> bob;\n\
               let y @ bob = 2;\n\
             }\n",
        )
        .unwrap();
        let onto_bob = project(&s, "bob").unwrap();
        let expected = parse_stmts(
            "case alice -> bob {\n\
               false => { let y @ bob = 2; }\n\
               true => { let x @ bob = 1; }\n\
             }\n",
        )
        .unwrap();
        assert!(alpha_eq(&onto_bob, &expected), "got:\n{}", pretty(&onto_bob));
    }

    #[test]
    fn unmergeable_branches_are_a_projection_failure() {
        let s = parse_stmts(
            "if alice.true { let x @ bob = 1; } else { let y @ bob = 2; }\n",
        )
        .unwrap();
        let err = project(&s, "bob").unwrap_err();
        assert!(matches!(err, TransformError::MergeFailure { .. }));
        // alice (the guard holder) projects fine
        project(&s, "alice").unwrap();
    }

    #[test]
    fn merge_is_idempotent_and_commutative_on_cases() {
        let c1 = parse_stmts("case alice -> bob { true => { let x @ bob = 1; } }\n").unwrap();
        let c2 = parse_stmts("case alice -> bob { false => { let y @ bob = 2; } }\n").unwrap();
        assert_eq!(merge(&c1, &c1).unwrap(), c1);
        let m12 = merge(&c1, &c2).unwrap();
        let m21 = merge(&c2, &c1).unwrap();
        assert_eq!(m12, m21);
        assert!(matches!(&m12, Stmt::Case { branches, .. } if branches.len() == 2));
    }

    #[test]
    fn corrupt_and_partition_commute() {
        let env = mill_env();
        let s = mill_choreo();
        for atk in [
            Attack::empty(),
            attack(&["A"], &["A"]),
            attack(&["B"], &["B"]),
            attack(&["A", "B"], &["A"]),
        ] {
            let left = corrupt_config(&partition(&s, &env).unwrap(), &env, &atk);
            let right = partition(&corrupt_stmt(&s, &env, &atk).unwrap(), &env);
            let right = DistributedProgram {
                processes: right
                    .unwrap()
                    .processes
                    .into_iter()
                    .filter(|(h, _)| left.processes.contains_key(h))
                    .collect(),
            };
            for (host, (ls, lb)) in &left.processes {
                let (rs, rb) = &right.processes[host];
                assert!(alpha_eq(ls, rs), "{host}:\n{}\nvs\n{}", pretty(ls), pretty(rs));
                assert_eq!(lb, rb);
            }
            assert_eq!(left.processes.len(), right.processes.len());
        }
    }

    #[test]
    fn pending_projects_to_preloaded_buffer() {
        let s = Stmt::MovePending {
            src: "alice".into(),
            val: Value::Int(7),
            dst: "bob".into(),
            var: "x".into(),
            cont: Box::new(Stmt::Skip),
        };
        let d = partition(&s, &mill_env()).unwrap();
        let (bob_stmt, bob_buf) = &d.processes["bob"];
        assert!(alpha_eq(
            bob_stmt,
            &parse_stmts("let x @ bob = recv alice;\n").unwrap()
        ));
        assert_eq!(
            bob_buf.front(&Endpoint::host("alice"), &Endpoint::host("bob")),
            Some(Value::Int(7))
        );
        let (alice_stmt, alice_buf) = &d.processes["alice"];
        assert_eq!(*alice_stmt, Stmt::Skip);
        assert_eq!(alice_buf.total_len(), 0);
    }
}
