//! Synchronization checking: guarantees all environment- and
//! adversary-visible actions of a concurrent choreography happen in
//! sequential program order, even under corruption.
//!
//! The context tracks, for every ordered host pair, the integrity of the
//! best bundle of communication paths between them. Each hop weakens a path
//! by disjunction with the hop's integrity; parallel paths strengthen the
//! bundle by conjunction.

use serde::Serialize;
use std::collections::BTreeMap;

use crate::labels::{Attack, HostClass, HostEnvironment, Principal};
use crate::lang::ast::{Expr, Loc, Stmt};

/// Path-integrity context: maps `(from, to)` to the integrity principal of
/// the path bundle from `from` to `to`, total over the declared hosts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyncContext {
    hosts: Vec<String>,
    paths: BTreeMap<(String, String), Principal>,
}

/// Initial context choice: `Top` treats all hosts as synchronized at program
/// start (the most permissive witness); `Reset` starts every host freshly
/// reset, for conservative validation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SyncInit {
    #[default]
    Top,
    Reset,
}

impl SyncContext {
    pub fn new(env: &HostEnvironment, init: SyncInit) -> Self {
        let hosts: Vec<String> = env.host_names().cloned().collect();
        let mut paths = BTreeMap::new();
        for a in &hosts {
            for b in &hosts {
                paths.insert((a.clone(), b.clone()), Principal::strongest());
            }
        }
        let mut ctx = SyncContext { hosts, paths };
        if init == SyncInit::Reset {
            let names = ctx.hosts.clone();
            for h in names {
                ctx.reset(env, &h);
            }
        }
        ctx
    }

    pub fn get(&self, from: &str, to: &str) -> &Principal {
        &self.paths[&(from.to_string(), to.to_string())]
    }

    fn integ(env: &HostEnvironment, h: &str) -> Principal {
        env.host_label(h).expect("declared host").integ.clone()
    }

    /// Removes all paths from `h` and restores the self path.
    pub fn reset(&mut self, env: &HostEnvironment, h: &str) {
        for other in self.hosts.clone() {
            self.paths
                .insert((h.to_string(), other.clone()), Principal::weakest());
        }
        self.paths
            .insert((h.to_string(), h.to_string()), Self::integ(env, h));
    }

    /// Records a communication from `h1` to `h2`: every path to `h1` now
    /// extends to `h2` (weakened by `h2`'s hop), conjoined with the paths
    /// that already reached `h2`.
    pub fn sync(&mut self, env: &HostEnvironment, h1: &str, h2: &str) {
        let hop = Self::integ(env, h2);
        for h in self.hosts.clone() {
            let to_h1 = self.get(&h, h1).clone();
            let to_h2 = self.get(&h, h2).clone();
            self.paths
                .insert((h.clone(), h2.to_string()), to_h2.and(&to_h1.or(&hop)));
        }
    }

    /// A host may perform an external output only when, for every other
    /// host, the path bundle reaching it could not have been influenced by
    /// the adversary: `σ(h', h) ⊑ label(h') ∨ label(h)` on integrity.
    pub fn is_synched(&self, env: &HostEnvironment, h: &str) -> bool {
        self.offending_peer(env, h).is_none()
    }

    fn offending_peer(&self, env: &HostEnvironment, h: &str) -> Option<String> {
        let own = Self::integ(env, h);
        for other in &self.hosts {
            let bound = Self::integ(env, other).or(&own);
            if !self.get(other, h).acts_for(&bound) {
                return Some(other.clone());
            }
        }
        None
    }
}

/// Attack-relative classification of an expression, mirroring which ideal
/// stepping rule fires: downgrades that do not cross the attack's boundary
/// step internally, as does all input/output at malicious hosts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExternalClass {
    ExternalInput,
    ExternalOutput,
    Internal,
}

pub fn classify_expr(
    env: &HostEnvironment,
    attack: &Attack,
    loc: &Loc,
    expr: &Expr,
) -> ExternalClass {
    let malicious = |h: &str| {
        env.classify(h, attack)
            .map(|c| c == HostClass::Malicious)
            .unwrap_or(false)
    };
    match expr {
        Expr::Input(h) => {
            if malicious(h) {
                ExternalClass::Internal
            } else {
                ExternalClass::ExternalInput
            }
        }
        Expr::Output(_, h) => {
            if malicious(h) {
                ExternalClass::Internal
            } else {
                ExternalClass::ExternalOutput
            }
        }
        Expr::Declassify { from, to, .. } => {
            if attack.is_secret(from) && attack.is_public(to) {
                ExternalClass::ExternalOutput
            } else {
                ExternalClass::Internal
            }
        }
        Expr::Endorse { from, to, .. } => {
            if attack.is_untrusted(from) && attack.is_trusted(to) {
                ExternalClass::ExternalInput
            } else {
                ExternalClass::Internal
            }
        }
        _ => {
            let _ = loc;
            ExternalClass::Internal
        }
    }
}

#[derive(Clone, Debug, Serialize, thiserror::Error)]
#[error("{rule} at statement {position}: {message}")]
pub struct SyncError {
    pub rule: &'static str,
    pub position: usize,
    pub message: String,
}

struct SyncChecker<'a> {
    env: &'a HostEnvironment,
    attack: &'a Attack,
    position: usize,
}

impl<'a> SyncChecker<'a> {
    fn check(&mut self, sctx: &SyncContext, s: &Stmt) -> Result<(), SyncError> {
        self.position += 1;
        match s {
            Stmt::Let {
                loc, expr, cont, ..
            } => {
                let host = match loc {
                    Loc::Host(h) => h.clone(),
                    Loc::Star => {
                        return Err(SyncError {
                            rule: "Sync-Tier",
                            position: self.position,
                            message: "synchronization checking expects a choreography".into(),
                        })
                    }
                };
                match classify_expr(self.env, self.attack, loc, expr) {
                    ExternalClass::Internal => self.check(sctx, cont),
                    class => {
                        if class == ExternalClass::ExternalOutput {
                            if let Some(peer) = sctx.offending_peer(self.env, &host) {
                                return Err(SyncError {
                                    rule: "Sync-External",
                                    position: self.position,
                                    message: format!(
                                        "output at `{host}` is not synchronized with `{peer}`"
                                    ),
                                });
                            }
                        }
                        let mut sctx = sctx.clone();
                        sctx.reset(self.env, &host);
                        self.check(&sctx, cont)
                    }
                }
            }
            Stmt::Move { src, dst, cont, .. } | Stmt::Select { src, dst, cont, .. } => {
                let mut sctx = sctx.clone();
                sctx.sync(self.env, src, dst);
                self.check(&sctx, cont)
            }
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                self.check(sctx, then_branch)?;
                self.check(sctx, else_branch)
            }
            Stmt::Skip => Ok(()),
            Stmt::Case { .. } | Stmt::MovePending { .. } | Stmt::SelectPending { .. } => {
                Err(SyncError {
                    rule: "Sync-Tier",
                    position: self.position,
                    message: "synchronization checking expects a choreography".into(),
                })
            }
        }
    }
}

/// Checks the synchronization judgment from an explicit starting context.
pub fn check_sync_from(
    sctx: &SyncContext,
    env: &HostEnvironment,
    attack: &Attack,
    s: &Stmt,
) -> Result<(), SyncError> {
    SyncChecker {
        env,
        attack,
        position: 0,
    }
    .check(sctx, s)
}

/// Checks the synchronization judgment from the chosen initial context.
pub fn check_sync(
    env: &HostEnvironment,
    attack: &Attack,
    init: SyncInit,
    s: &Stmt,
) -> Result<(), SyncError> {
    check_sync_from(&SyncContext::new(env, init), env, attack, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::Label;
    use crate::lang::{parse_label, parse_stmts};
    use std::collections::BTreeMap;

    fn env3() -> HostEnvironment {
        let mut hosts = BTreeMap::new();
        hosts.insert("alice".into(), parse_label("<A, A>").unwrap());
        hosts.insert("bob".into(), parse_label("<B, B>").unwrap());
        hosts.insert("mpc".into(), parse_label("<A & B, A & B>").unwrap());
        HostEnvironment::new(hosts).unwrap()
    }

    fn p(text: &str) -> Principal {
        crate::lang::parse_principal(text).unwrap()
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
    fn one_host_system_self_synched_after_reset() {
        let mut hosts = BTreeMap::new();
        hosts.insert("alice".into(), parse_label("<A, A>").unwrap());
        let env = HostEnvironment::new(hosts).unwrap();
        let mut sctx = SyncContext::new(&env, SyncInit::Top);
        sctx.reset(&env, "alice");
        assert!(sctx.is_synched(&env, "alice"));
    }

    #[test]
    fn relayed_path_weakens_by_the_relay() {
        // after move alice→mpc then mpc→bob, the alice→bob path carries
        // integrity A ∨ (A∧B) ∨ B = A ∨ B, computed by hand from the
        // hsync formulas on three hosts
        let env = env3();
        let mut sctx = SyncContext::new(&env, SyncInit::Top);
        sctx.reset(&env, "alice");
        sctx.sync(&env, "alice", "mpc");
        assert_eq!(sctx.get("alice", "mpc"), &p("A"));
        sctx.sync(&env, "mpc", "bob");
        assert_eq!(sctx.get("alice", "bob"), &p("A | B"));
    }

    #[test]
    fn parallel_paths_conjoin_their_integrity() {
        let env = env3();
        let mut sctx = SyncContext::new(&env, SyncInit::Top);
        sctx.reset(&env, "alice");
        // direct path alice→bob
        sctx.sync(&env, "alice", "bob");
        assert_eq!(sctx.get("alice", "bob"), &p("A | B"));
        // second, relayed path alice→mpc→bob joins in the existing bundle
        sctx.sync(&env, "alice", "mpc");
        sctx.sync(&env, "mpc", "bob");
        assert_eq!(sctx.get("alice", "bob"), &p("(A | B) & (A | B)"));
        assert_eq!(sctx.get("alice", "bob"), &p("A | B"));
    }

    #[test]
    fn millionaires_synchronizes_under_every_valid_attack() {
        let env = env3();
        let s = mill_choreo();
        let atoms = env.atoms();
        for attack in crate::labels::Attack::enumerate_valid(&atoms) {
            check_sync(&env, &attack, SyncInit::Top, &s)
                .unwrap_or_else(|e| panic!("attack {attack:?}: {e}"));
        }
    }

    #[test]
    fn deleting_the_sync_move_breaks_bobs_output() {
        let env = env3();
        let s = parse_stmts(
            "let a @ alice = input @ alice;\n\
             move alice.a -> mpc.a2;\n\
             let b @ bob = input @ bob;\n\
             move bob.b -> mpc.b2;\n\
             let x @ mpc = declassify(a2, <A & B, A & B>, <A | B, A & B>);\n\
             move mpc.x -> alice.x1;\n\
             move mpc.x -> bob.x2;\n\
             let o1 @ alice = output(x1) @ alice;\n\
             let o2 @ bob = output(x2) @ bob;\n",
        )
        .unwrap();
        let err = check_sync(&env, &Attack::empty(), SyncInit::Top, &s).unwrap_err();
        assert_eq!(err.rule, "Sync-External");
        assert!(err.message.contains("`bob`") && err.message.contains("`alice`"), "{err}");
    }

    #[test]
    fn skip_accepted_under_any_context() {
        let env = env3();
        for init in [SyncInit::Top, SyncInit::Reset] {
            check_sync(&env, &Attack::empty(), init, &Stmt::Skip).unwrap();
        }
    }

    #[test]
    fn internal_downgrades_do_not_reset() {
        // a declassify that stays secret under the attack is internal, so it
        // neither requires synchronization nor resets paths
        let env = env3();
        let s = parse_stmts(
            "let a @ alice = input @ alice;\n\
             move alice.a -> mpc.a2;\n\
             let x @ mpc = declassify(a2, <A & B, A & B>, <A | B, A & B>);\n\
             let o1 @ alice = output(5) @ alice;\n",
        )
        .unwrap();
        // under the empty attack the declassify target is still secret
        assert_eq!(
            classify_expr(
                &env,
                &Attack::empty(),
                &Loc::host("mpc"),
                &Expr::Declassify {
                    arg: crate::lang::Atom::Val(crate::lang::Value::Int(1)),
                    from: parse_label("<A & B, A & B>").unwrap(),
                    to: parse_label("<A | B, A & B>").unwrap(),
                },
            ),
            ExternalClass::Internal
        );
        check_sync(&env, &Attack::empty(), SyncInit::Top, &s).unwrap();
    }

    #[test]
    fn reset_init_is_stricter_than_top() {
        let env = env3();
        let s = parse_stmts("let o @ alice = output(5) @ alice;\n").unwrap();
        check_sync(&env, &Attack::empty(), SyncInit::Top, &s).unwrap();
        // with all hosts freshly reset, alice has no incoming paths
        assert!(check_sync(&env, &Attack::empty(), SyncInit::Reset, &s).is_err());
    }

    fn label_of(env: &HostEnvironment, h: &str) -> Label {
        env.host_label(h).unwrap().clone()
    }

    #[test]
    fn millionaires_context_trace_matches_hand_computation() {
        // spot-check the σ evolution for the honest run
        let env = env3();
        let mut sctx = SyncContext::new(&env, SyncInit::Top);
        sctx.reset(&env, "alice"); // alice's input
        sctx.sync(&env, "alice", "mpc");
        sctx.reset(&env, "bob"); // bob's input
        sctx.sync(&env, "bob", "mpc");
        assert_eq!(sctx.get("alice", "mpc"), &p("A"));
        assert_eq!(sctx.get("bob", "mpc"), &p("B"));
        sctx.sync(&env, "mpc", "alice");
        sctx.sync(&env, "mpc", "bob");
        // alice's output is synchronized with everyone
        assert!(sctx.is_synched(&env, "alice"));
        sctx.reset(&env, "alice");
        // bob is not synchronized with alice until the sync move
        assert!(!sctx.is_synched(&env, "bob"));
        sctx.sync(&env, "alice", "bob");
        assert!(sctx.is_synched(&env, "bob"));
        let _ = label_of(&env, "alice");
    }
}
