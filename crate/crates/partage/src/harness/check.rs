//! Simulation checking: for every adversary in a family, the simulator
//! composed with the ideal world must produce exactly the environment
//! traces of the adversary against the real world.
//!
//! The universal family is checked by co-exploring the two composed systems
//! in lockstep: at every reachable pair state the adversary-visible surface
//! (menus and redacted observations) and the environment-visible actions
//! must agree, so any deterministic adversary behaves identically against
//! both. Visited pairs are memoized after pruning dead buffer contents, so
//! exploration covers adversaries of arbitrary depth.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::hash::Hasher;

use serde::Serialize;

use crate::adversary::{AdversaryScript, ScriptScheduler, StageKind, StageWorld};
use crate::harness::{
    trace_set, BaseWorld, Decision, EnvDriver, HarnessError, Menu, World,
};
use crate::labels::{Attack, HostEnvironment};
use crate::lang::ast::{Endpoint, Stmt, Value};
use crate::semantics::{program_config, Buffer, Configuration, Mode, Msg, ProcessState, Semantics};
use crate::transform;

/// Which simulation stage to check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SimStage {
    /// Source program vs sequential corrupted choreography.
    Hosts,
    /// Sequential vs concurrent ideal choreography.
    Seq,
    /// Ideal vs real concurrent choreography.
    Ideal,
    /// Real choreography vs projected distributed program.
    Proj,
    /// The full pipeline: source program vs distributed program.
    All,
}

impl SimStage {
    pub fn from_name(name: &str) -> Option<SimStage> {
        Some(match name {
            "hosts" => SimStage::Hosts,
            "seq" => SimStage::Seq,
            "ideal" => SimStage::Ideal,
            "proj" => SimStage::Proj,
            "all" => SimStage::All,
            _ => return None,
        })
    }

    pub fn all_stages() -> &'static [SimStage] {
        &[
            SimStage::Hosts,
            SimStage::Seq,
            SimStage::Ideal,
            SimStage::Proj,
            SimStage::All,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            SimStage::Hosts => "hosts",
            SimStage::Seq => "seq",
            SimStage::Ideal => "ideal",
            SimStage::Proj => "proj",
            SimStage::All => "all",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub stage: String,
    pub decisions: Vec<String>,
    pub reason: String,
}

/// Outcome of a simulation or RHP check.
#[derive(Clone, Debug, Serialize)]
pub enum Verdict {
    Pass { states_explored: usize },
    Fail(Counterexample),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass { .. })
    }
}

/// The adversaries quantified over by a check.
#[derive(Clone)]
pub enum AdversaryFamily {
    /// Every channel-selective deterministic adversary, with at most
    /// `emit_budget` forgeries per run.
    Universal { emit_budget: usize },
    /// An explicit list of scripts.
    Scripts(Vec<AdversaryScript>),
}

impl Default for AdversaryFamily {
    fn default() -> Self {
        AdversaryFamily::Universal { emit_budget: 6 }
    }
}

/// Builds the single-process configuration of a corrupted choreography: the
/// process owns the nonmalicious hosts so forged messages buffer properly.
pub fn corrupted_config(env: &HostEnvironment, attack: &Attack, stmt: &Stmt) -> Configuration {
    let malicious = env.malicious_hosts(attack);
    let hosts: BTreeSet<Endpoint> = env
        .host_names()
        .filter(|h| !malicious.contains(*h))
        .map(|h| Endpoint::host(h.clone()))
        .collect();
    Configuration::new(vec![ProcessState::new(hosts, Buffer::new(), stmt.clone())])
}

/// Builds the distributed configuration of a corrupted partition.
pub fn distributed_config(d: &transform::DistributedProgram) -> Configuration {
    let processes = d
        .processes
        .iter()
        .map(|(host, (stmt, buffer))| {
            ProcessState::new(
                [Endpoint::host(host.clone())].into(),
                buffer.clone(),
                stmt.clone(),
            )
        })
        .collect();
    Configuration::new(processes)
}

/// The two worlds a stage relates: the simulator chain around the ideal
/// side, and the attacked side.
pub struct StagePair {
    pub source: Box<dyn World>,
    pub target: Box<dyn World>,
}

/// Constructs the composed simulator and the attacked world for a stage of
/// the pipeline on the given choreography.
pub fn build_stage(
    stage: SimStage,
    choreo: &Stmt,
    env: &HostEnvironment,
    attack: &Attack,
) -> Result<StagePair, HarnessError> {
    let fail = |e: &dyn std::fmt::Display| HarnessError::Other(e.to_string());
    let source_pgm = transform::source_of(choreo).map_err(|e| fail(&e))?;
    let corrupted = transform::corrupt_stmt(choreo, env, attack).map_err(|e| fail(&e))?;
    let partitioned = transform::corrupt_config(
        &transform::partition(choreo, env).map_err(|e| fail(&e))?,
        env,
        attack,
    );

    let sem = |mode: Mode| Semantics::new(env.clone(), attack.clone(), mode);
    let base_source = || {
        BaseWorld::new(
            sem(Mode::IdealSequential),
            program_config(env, &source_pgm, true),
        )
    };
    let base_choreo = |mode: Mode, stmt: &Stmt| {
        BaseWorld::new(sem(mode), corrupted_config(env, attack, stmt))
    };
    let uncorrupted = || {
        BaseWorld::new(
            sem(Mode::IdealSequential),
            program_config(env, choreo, false),
        )
    };
    let base_dist = || BaseWorld::new(sem(Mode::RealConcurrent), distributed_config(&partitioned));

    let hosts_chain = |inner: Box<dyn World>| -> Box<dyn World> {
        let host_stage = StageWorld::new(StageKind::HostNames, inner, uncorrupted());
        Box::new(StageWorld::new(
            StageKind::Corruption,
            Box::new(host_stage),
            base_choreo(Mode::IdealSequential, &corrupted),
        ))
    };

    Ok(match stage {
        SimStage::Hosts => StagePair {
            source: hosts_chain(Box::new(base_source())),
            target: Box::new(base_choreo(Mode::IdealSequential, &corrupted)),
        },
        SimStage::Seq => StagePair {
            source: Box::new(StageWorld::new(
                StageKind::Sequentialization,
                Box::new(base_choreo(Mode::IdealSequential, &corrupted)),
                base_choreo(Mode::IdealConcurrent, &corrupted),
            )),
            target: Box::new(base_choreo(Mode::IdealConcurrent, &corrupted)),
        },
        SimStage::Ideal => StagePair {
            source: Box::new(StageWorld::new(
                StageKind::IdealExecution,
                Box::new(base_choreo(Mode::IdealConcurrent, &corrupted)),
                base_choreo(Mode::SimulatorView, &corrupted),
            )),
            target: Box::new(base_choreo(Mode::RealConcurrent, &corrupted)),
        },
        SimStage::Proj => StagePair {
            source: Box::new(StageWorld::new(
                StageKind::AsyncTerms,
                Box::new(base_choreo(Mode::RealConcurrent, &corrupted)),
                base_choreo(Mode::Async, &corrupted),
            )),
            target: Box::new(base_dist()),
        },
        SimStage::All => {
            let seq = StageWorld::new(
                StageKind::Sequentialization,
                hosts_chain(Box::new(base_source())),
                base_choreo(Mode::IdealConcurrent, &corrupted),
            );
            let ideal = StageWorld::new(
                StageKind::IdealExecution,
                Box::new(seq),
                base_choreo(Mode::SimulatorView, &corrupted),
            );
            let asynchronous = StageWorld::new(
                StageKind::AsyncTerms,
                Box::new(ideal),
                base_choreo(Mode::Async, &corrupted),
            );
            StagePair {
                source: Box::new(asynchronous),
                target: Box::new(base_dist()),
            }
        }
    })
}

fn menu_surface(menu: &Menu) -> (BTreeSet<Endpoint>, BTreeSet<String>, BTreeSet<(Endpoint, Endpoint)>) {
    (
        menu.fire.clone(),
        menu.env_inputs.clone(),
        menu.emit.clone(),
    )
}

fn pair_key(a: &dyn World, b: &dyn World, emits: usize) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    a.hash_state(&mut h);
    b.hash_state(&mut h);
    std::hash::Hasher::write_usize(&mut h, emits);
    h.finish()
}

/// Checks simulation for a stage pair against the universal adversary
/// family by lockstep co-exploration (breadth first, so a reported
/// counterexample is minimal in decision depth).
pub fn check_universal(
    stage: &str,
    pair: &StagePair,
    domain: &[Value],
    emit_budget: usize,
    depth: usize,
) -> Result<Verdict, HarnessError> {
    struct Node {
        source: Box<dyn World>,
        target: Box<dyn World>,
        emits: usize,
        path: Vec<Decision>,
    }
    let mut queue = VecDeque::new();
    let mut seen: HashSet<u64> = HashSet::new();
    queue.push_back(Node {
        source: pair.source.clone_world(),
        target: pair.target.clone_world(),
        emits: 0,
        path: Vec::new(),
    });
    seen.insert(pair_key(&*pair.source, &*pair.target, 0));
    let mut states = 0usize;

    let fail = |path: &[Decision], reason: String| {
        Ok(Verdict::Fail(Counterexample {
            stage: stage.to_string(),
            decisions: path.iter().map(|d| d.to_string()).collect(),
            reason,
        }))
    };

    while let Some(node) = queue.pop_front() {
        states += 1;
        if node.path.len() > depth {
            return Err(HarnessError::DepthExceeded);
        }
        let (sm, tm) = (node.source.menu(), node.target.menu());
        if menu_surface(&sm) != menu_surface(&tm) {
            return fail(
                &node.path,
                format!(
                    "adversary-visible surfaces diverge: simulator offers \
                     fire={:?} env={:?}, real world offers fire={:?} env={:?}",
                    sm.fire, sm.env_inputs, tm.fire, tm.env_inputs
                ),
            );
        }
        let mut decisions: Vec<Decision> = Vec::new();
        for host in &tm.env_inputs {
            for v in domain {
                decisions.push(Decision::EnvInput(host.clone(), *v));
            }
        }
        for actor in &tm.fire {
            decisions.push(Decision::Fire(actor.clone()));
        }
        if node.emits < emit_budget {
            for (from, to) in &tm.emit {
                for v in domain {
                    decisions.push(Decision::Emit(Msg::new(from.clone(), to.clone(), *v)));
                }
            }
        }
        for decision in decisions {
            let mut source = node.source.clone_world();
            let mut target = node.target.clone_world();
            let mut path = node.path.clone();
            path.push(decision.clone());
            let st = match source.apply(&decision) {
                Ok(t) => t,
                Err(HarnessError::SimulatorDiverged(msg)) => return fail(&path, msg),
                Err(e) => return Err(e),
            };
            let tt = target.apply(&decision)?;
            if st.obs != tt.obs {
                return fail(
                    &path,
                    format!(
                        "adversary observations diverge: simulator shows {:?}, real world shows {:?}",
                        st.obs, tt.obs
                    ),
                );
            }
            if st.env != tt.env {
                return fail(
                    &path,
                    format!(
                        "environment traces diverge: ideal world produced {:?}, real world {:?}",
                        st.env, tt.env
                    ),
                );
            }
            let emits = node.emits + usize::from(matches!(decision, Decision::Emit(_)));
            let key = pair_key(&*source, &*target, emits);
            if seen.insert(key) {
                queue.push_back(Node {
                    source,
                    target,
                    emits,
                    path,
                });
            }
        }
    }
    Ok(Verdict::Pass {
        states_explored: states,
    })
}

/// Compares the environment trace sets of the two worlds under an explicit
/// adversary script.
pub fn check_script(
    stage: &str,
    pair: &StagePair,
    script: &AdversaryScript,
    domain: &[Value],
    depth: usize,
) -> Result<Verdict, HarnessError> {
    let env = EnvDriver::Domain(domain.to_vec());
    let scheduler = ScriptScheduler::new(script.clone());
    let left = trace_set(&*pair.source, &scheduler, &env, depth)?;
    let right = trace_set(&*pair.target, &scheduler, &env, depth)?;
    if left == right {
        Ok(Verdict::Pass {
            states_explored: left.len(),
        })
    } else {
        let diff = right
            .symmetric_difference(&left)
            .next()
            .map(|t| format!("{t:?}"))
            .unwrap_or_default();
        Ok(Verdict::Fail(Counterexample {
            stage: stage.to_string(),
            decisions: vec![],
            reason: format!("trace sets differ under script; witness trace {diff}"),
        }))
    }
}

/// Checks one pipeline stage under an adversary family.
pub fn check_stage(
    stage: SimStage,
    choreo: &Stmt,
    env: &HostEnvironment,
    attack: &Attack,
    family: &AdversaryFamily,
    domain: &[Value],
    depth: usize,
) -> Result<Verdict, HarnessError> {
    let pair = build_stage(stage, choreo, env, attack)?;
    match family {
        AdversaryFamily::Universal { emit_budget } => {
            check_universal(stage.name(), &pair, domain, *emit_budget, depth)
        }
        AdversaryFamily::Scripts(scripts) => {
            for script in scripts {
                let verdict = check_script(stage.name(), &pair, script, domain, depth)?;
                if !verdict.passed() {
                    return Ok(verdict);
                }
            }
            Ok(Verdict::Pass { states_explored: 0 })
        }
    }
}

/// Def.-2 style simulation check over explicit source/target worlds.
pub fn check_simulation(
    source: Box<dyn World>,
    target: Box<dyn World>,
    family: &AdversaryFamily,
    domain: &[Value],
    depth: usize,
) -> Result<Verdict, HarnessError> {
    let pair = StagePair { source, target };
    match family {
        AdversaryFamily::Universal { emit_budget } => {
            check_universal("simulation", &pair, domain, *emit_budget, depth)
        }
        AdversaryFamily::Scripts(scripts) => {
            for script in scripts {
                let verdict = check_script("simulation", &pair, script, domain, depth)?;
                if !verdict.passed() {
                    return Ok(verdict);
                }
            }
            Ok(Verdict::Pass { states_explored: 0 })
        }
    }
}

/// Robust hyperproperty preservation for the partitioning compiler: by the
/// reduction from simulation, each target context (adversary) is matched by
/// the constructed simulator as the source context, so the check coincides
/// with the full-pipeline simulation check, run per attack.
pub fn check_rhp(
    choreo: &Stmt,
    env: &HostEnvironment,
    attacks: &[Attack],
    family: &AdversaryFamily,
    domain: &[Value],
    depth: usize,
) -> Result<Vec<(Attack, Verdict)>, HarnessError> {
    let mut out = Vec::new();
    for attack in attacks {
        let verdict = check_stage(SimStage::All, choreo, env, attack, family, domain, depth)?;
        out.push((attack.clone(), verdict));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
#[test]
fn dbg_ideal_stage() {
    use crate::harness::*;
    use crate::harness::check::*;
    use crate::labels::Attack;
    use crate::lang::ast::{Endpoint, Value};
    use crate::semantics::Msg;
    use crate::testutil::{mill_choreo, mill_env};
    let env = mill_env();
    let atk = Attack::new(["A".to_string()].into(), ["A".to_string()].into()).unwrap();
    let pair = build_stage(SimStage::Ideal, &mill_choreo(), &env, &atk).unwrap();
    let mut s = pair.source.clone_world();
    let mut t = pair.target.clone_world();
    for d in [
        Decision::Emit(Msg::new(Endpoint::host("alice"), Endpoint::host("mpc"), Value::Unit)),
        Decision::Fire(Endpoint::host("mpc")),
    ] {
        let st = s.apply(&d).unwrap();
        let tt = t.apply(&d).unwrap();
        eprintln!("== {d}: obs {:?} vs {:?}", st.obs, tt.obs);
    }
    eprintln!("SIM MENU: {:#?}", s.menu());
    eprintln!("TGT MENU: {:#?}", t.menu());
}


    use super::*;
    use crate::harness::default_domain;
    use crate::testutil::{mill_choreo, mill_env};

    fn attack(pub_atoms: &[&str], untrusted: &[&str]) -> Attack {
        Attack::new(
            pub_atoms.iter().map(|s| s.to_string()).collect(),
            untrusted.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    fn run_stage(stage: SimStage, attack: &Attack) -> Verdict {
        let env = mill_env();
        let choreo = mill_choreo();
        check_stage(
            stage,
            &choreo,
            &env,
            attack,
            &AdversaryFamily::default(),
            &default_domain(),
            400,
        )
        .unwrap()
    }

    #[test]
    fn millionaires_stage_hosts_empty_attack() {
        let v = run_stage(SimStage::Hosts, &Attack::empty());
        assert!(v.passed(), "{v:?}");
    }

    #[test]
    fn millionaires_stage_seq_empty_attack() {
        let v = run_stage(SimStage::Seq, &Attack::empty());
        assert!(v.passed(), "{v:?}");
    }

    #[test]
    fn millionaires_stage_ideal_empty_attack() {
        let v = run_stage(SimStage::Ideal, &Attack::empty());
        assert!(v.passed(), "{v:?}");
    }

    #[test]
    fn millionaires_stage_proj_empty_attack() {
        let v = run_stage(SimStage::Proj, &Attack::empty());
        assert!(v.passed(), "{v:?}");
    }

    #[test]
    fn millionaires_stage_all_empty_attack() {
        let v = run_stage(SimStage::All, &Attack::empty());
        assert!(v.passed(), "{v:?}");
    }

    #[test]
    fn millionaires_all_stages_alice_malicious() {
        let atk = attack(&["A"], &["A"]);
        for stage in SimStage::all_stages() {
            let v = run_stage(*stage, &atk);
            assert!(v.passed(), "stage {stage:?}: {v:?}");
        }
    }
}
