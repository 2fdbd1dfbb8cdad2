//! Execution harness: composed runs of a configuration against an adversary
//! and an environment, exhaustive trace-set enumeration, simulation checking,
//! and robust-hyperproperty checking.

pub mod check;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::Serialize;

use crate::adversary::{redact, Observation};
use crate::labels::HostClass;
use crate::lang::ast::{Endpoint, Expr, Stmt, Value};
use crate::semantics::{Action, Configuration, Mode, Msg, Semantics};

pub use check::{check_rhp, check_simulation, SimStage, Verdict};

/// The default finite value domain for environment inputs and adversary
/// emissions.
pub fn default_domain() -> Vec<Value> {
    vec![
        Value::Unit,
        Value::Bool(true),
        Value::Bool(false),
        Value::Int(0),
        Value::Int(1),
        Value::Int(2),
    ]
}

/// One turn's worth of adversary choice.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Decision {
    /// Accept (schedule) the configuration output performed by this endpoint.
    Fire(Endpoint),
    /// Let the environment feed a value to the named host.
    EnvInput(String, Value),
    /// Forge a message from the adversary or a malicious host.
    Emit(Msg),
    /// Stop scheduling.
    Idle,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Fire(h) => write!(f, "fire {h}"),
            Decision::EnvInput(h, v) => write!(f, "env {h} <- {v}"),
            Decision::Emit(m) => write!(f, "emit {m}"),
            Decision::Idle => write!(f, "idle"),
        }
    }
}

/// What the adversary can currently choose from: the scheduling surface of
/// the composed system.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Menu {
    /// Actors with an enabled configuration output.
    pub fire: BTreeSet<Endpoint>,
    /// Hosts whose next step waits on an environment input.
    pub env_inputs: BTreeSet<String>,
    /// Forgeable channels with a remaining consumer, plus channels to the
    /// environment.
    pub emit: BTreeSet<(Endpoint, Endpoint)>,
    /// Channels the configuration is currently blocked on. Not part of the
    /// adversary-visible surface; simulators use it for alignment.
    pub awaiting: BTreeSet<(Endpoint, Endpoint)>,
}

impl Menu {
    pub fn is_empty(&self) -> bool {
        self.fire.is_empty() && self.env_inputs.is_empty() && self.emit.is_empty()
    }
}

/// The result of applying one decision to a world.
#[derive(Clone, Debug, Default)]
pub struct Turn {
    /// Redacted observations delivered to the adversary, in order.
    pub obs: Vec<Observation>,
    /// Environment-visible actions, in order.
    pub env: Vec<Action>,
    /// The action the world performed, in its own vocabulary. Simulators use
    /// this for alignment; payloads must only be read off readable channels.
    pub action: Option<Action>,
}

#[derive(Debug, Clone, thiserror::Error, Serialize)]
pub enum HarnessError {
    #[error("decision `{0}` is not available in this state")]
    BadDecision(String),
    #[error("depth bound exceeded with the system still active")]
    DepthExceeded,
    #[error("simulator diverged: {0}")]
    SimulatorDiverged(String),
    #[error("{0}")]
    Other(String),
}

/// An executable world: a configuration under some semantics, or a
/// simulator translating between two of them. All worlds present the same
/// interface to the adversary.
pub trait World {
    fn menu(&self) -> Menu;
    fn apply(&mut self, decision: &Decision) -> Result<Turn, HarnessError>;
    fn hash_state(&self, hasher: &mut dyn Hasher);
    fn clone_world(&self) -> Box<dyn World>;
    /// True when no decision can make the world act again.
    fn quiescent(&self) -> bool {
        let menu = self.menu();
        menu.fire.is_empty() && menu.env_inputs.is_empty()
    }
    /// All processes reduced to `skip`.
    fn done(&self) -> bool;
}

impl Clone for Box<dyn World> {
    fn clone(&self) -> Self {
        self.clone_world()
    }
}

/// Remaining statement-level consumers per channel, used to prune dead
/// buffer contents and useless forgeries.
pub fn channel_consumers(sem: &Semantics, s: &Stmt) -> BTreeMap<(Endpoint, Endpoint), usize> {
    fn merge_max(
        a: BTreeMap<(Endpoint, Endpoint), usize>,
        b: BTreeMap<(Endpoint, Endpoint), usize>,
    ) -> BTreeMap<(Endpoint, Endpoint), usize> {
        let mut out = a;
        for (k, v) in b {
            let slot = out.entry(k).or_insert(0);
            *slot = (*slot).max(v);
        }
        out
    }
    fn add(map: &mut BTreeMap<(Endpoint, Endpoint), usize>, from: Endpoint, to: Endpoint) {
        *map.entry((from, to)).or_insert(0) += 1;
    }
    fn go(sem: &Semantics, s: &Stmt) -> BTreeMap<(Endpoint, Endpoint), usize> {
        match s {
            Stmt::Let {
                loc, expr, cont, ..
            } => {
                let mut map = go(sem, cont);
                let at = loc.endpoint();
                match expr {
                    Expr::Input(h) => {
                        let malicious = sem
                            .env
                            .classify(h, &sem.attack)
                            .map(|c| c == HostClass::Malicious)
                            .unwrap_or(false);
                        if !malicious {
                            add(&mut map, Endpoint::Environment, Endpoint::host(h.clone()));
                        }
                    }
                    Expr::Receive(p) => {
                        if !sem.mode.ideal() {
                            add(&mut map, Endpoint::host(p.clone()), at);
                        }
                    }
                    Expr::Endorse { from, to, .. } => {
                        if sem.mode.ideal()
                            && sem.attack.is_untrusted(from)
                            && sem.attack.is_trusted(to)
                        {
                            add(&mut map, Endpoint::Adversary, at);
                        }
                    }
                    Expr::Declassify { from, to, .. } => {
                        if sem.mode == Mode::SimulatorView
                            && sem.attack.is_secret(from)
                            && sem.attack.is_public(to)
                        {
                            add(&mut map, at.clone(), Endpoint::Adversary);
                        }
                    }
                    _ => {}
                }
                map
            }
            Stmt::Move { cont, .. }
            | Stmt::Select { cont, .. }
            | Stmt::MovePending { cont, .. }
            | Stmt::SelectPending { cont, .. } => go(sem, cont),
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => merge_max(go(sem, then_branch), go(sem, else_branch)),
            Stmt::Case { src, dst, branches } => {
                let mut inner = BTreeMap::new();
                for (_, body) in branches {
                    inner = merge_max(inner, go(sem, body));
                }
                add(
                    &mut inner,
                    Endpoint::host(src.clone()),
                    Endpoint::host(dst.clone()),
                );
                inner
            }
            Stmt::Skip => BTreeMap::new(),
        }
    }
    go(sem, s)
}

/// A plain configuration running under one semantics.
#[derive(Clone)]
pub struct BaseWorld {
    pub sem: Semantics,
    pub config: Configuration,
    malicious: BTreeSet<String>,
}

impl BaseWorld {
    pub fn new(sem: Semantics, config: Configuration) -> Self {
        let malicious = sem.env.malicious_hosts(&sem.attack);
        BaseWorld {
            sem,
            config,
            malicious,
        }
    }

    fn forgeable(&self, from: &Endpoint) -> bool {
        match from {
            Endpoint::Adversary => true,
            Endpoint::Host(h) => self.malicious.contains(h),
            _ => false,
        }
    }

    fn consumers(&self) -> BTreeMap<(Endpoint, Endpoint), usize> {
        let mut total = BTreeMap::new();
        for p in &self.config.processes {
            for (k, v) in channel_consumers(&self.sem, &p.stmt) {
                *total.entry(k).or_insert(0) += v;
            }
        }
        total
    }

    fn queue_len(&self, chan: &(Endpoint, Endpoint)) -> usize {
        self.config
            .processes
            .iter()
            .map(|p| p.buffer.queue(&chan.0, &chan.1).len())
            .sum()
    }

    /// Canonical form for memoization: buffer contents beyond the number of
    /// remaining consumers can never be read, so they are dropped.
    fn canonical(&self) -> Configuration {
        let consumers = self.consumers();
        let mut config = self.config.clone();
        for p in &mut config.processes {
            let channels: Vec<(Endpoint, Endpoint)> =
                p.buffer.queues().map(|(k, _)| k.clone()).collect();
            let per_process = channel_consumers(&self.sem, &p.stmt);
            for chan in channels {
                let keep = per_process.get(&chan).copied().unwrap_or(0);
                let _ = &consumers;
                p.buffer.truncate(&chan.0, &chan.1, keep);
            }
        }
        config
    }
}

impl World for BaseWorld {
    fn menu(&self) -> Menu {
        let mut menu = Menu::default();
        for p in &self.config.processes {
            let (actions, wanted) = p.enabled_surface(&self.sem);
            for (action, _) in actions {
                menu.fire.insert(action.actor().clone());
            }
            for (from, to) in wanted {
                if from == Endpoint::Environment {
                    if let Endpoint::Host(h) = &to {
                        menu.env_inputs.insert(h.clone());
                    }
                }
                menu.awaiting.insert((from, to));
            }
        }
        let consumers = self.consumers();
        for (chan, n) in &consumers {
            if self.forgeable(&chan.0) && self.queue_len(chan) < *n {
                menu.emit.insert(chan.clone());
            }
        }
        // the adversary can always address the environment directly
        menu.emit.insert((Endpoint::Adversary, Endpoint::Environment));
        for h in &self.malicious {
            menu.emit
                .insert((Endpoint::host(h.clone()), Endpoint::Environment));
        }
        menu
    }

    fn apply(&mut self, decision: &Decision) -> Result<Turn, HarnessError> {
        match decision {
            Decision::Fire(actor) => {
                let (action, next) = self
                    .config
                    .output_at(&self.sem, actor)
                    .ok_or_else(|| HarnessError::BadDecision(decision.to_string()))?;
                self.config = next;
                let env = if action.touches_env() {
                    vec![action.clone()]
                } else {
                    vec![]
                };
                Ok(Turn {
                    obs: vec![redact(&self.sem.env, &self.sem.attack, &action)],
                    env,
                    action: Some(action),
                })
            }
            Decision::EnvInput(host, value) => {
                let msg = Msg::new(Endpoint::Environment, Endpoint::host(host.clone()), *value);
                self.config = self.config.input(&msg);
                let action = Action::input(msg);
                Ok(Turn {
                    obs: vec![redact(&self.sem.env, &self.sem.attack, &action)],
                    env: vec![action.clone()],
                    action: Some(action),
                })
            }
            Decision::Emit(msg) => {
                if !self.forgeable(&msg.from) {
                    return Err(HarnessError::BadDecision(decision.to_string()));
                }
                self.config = self.config.input(msg);
                let action = Action::input(msg.clone());
                let env = if msg.to == Endpoint::Environment {
                    vec![action.clone()]
                } else {
                    vec![]
                };
                Ok(Turn {
                    obs: vec![],
                    env,
                    action: Some(action),
                })
            }
            Decision::Idle => Ok(Turn::default()),
        }
    }

    fn hash_state(&self, hasher: &mut dyn Hasher) {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.canonical().processes.hash(&mut h);
        hasher.write_u64(h.finish());
    }

    fn clone_world(&self) -> Box<dyn World> {
        Box::new(self.clone())
    }

    fn done(&self) -> bool {
        self.config.is_done()
    }
}

/// An environment-restricted trace: the subsequence of actions touching the
/// environment endpoint, order preserved.
pub type Trace = Vec<Action>;

/// Restricts a raw trace to environment-touching actions.
pub fn env_restrict(trace: &[Action]) -> Trace {
    trace.iter().filter(|a| a.touches_env()).cloned().collect()
}

/// Environment behavior: either branch exhaustively over a value domain, or
/// follow a fixed per-host input script.
#[derive(Clone, Debug)]
pub enum EnvDriver {
    Domain(Vec<Value>),
    Script(BTreeMap<String, VecDeque<Value>>),
}

impl EnvDriver {
    fn choices(&self, host: &str) -> Vec<(Value, EnvDriver)> {
        match self {
            EnvDriver::Domain(domain) => domain
                .iter()
                .map(|v| (*v, self.clone()))
                .collect(),
            EnvDriver::Script(map) => {
                let mut map = map.clone();
                match map.get_mut(host).and_then(|q| q.pop_front()) {
                    Some(v) => vec![(v, EnvDriver::Script(map))],
                    None => vec![],
                }
            }
        }
    }
}

/// A deterministic adversary driving a single world.
pub trait Scheduler {
    fn decide(&mut self, menu: &Menu) -> Decision;
    fn observe(&mut self, obs: &Observation);
    fn clone_scheduler(&self) -> Box<dyn Scheduler>;
}

/// The dummy adversary: schedules the least enabled actor, asks the
/// environment when nothing else can act, and never forges.
#[derive(Clone, Default)]
pub struct DummyScheduler;

impl Scheduler for DummyScheduler {
    fn decide(&mut self, menu: &Menu) -> Decision {
        if let Some(actor) = menu.fire.iter().next() {
            return Decision::Fire(actor.clone());
        }
        if let Some(host) = menu.env_inputs.iter().next() {
            // value filled in by the environment driver
            return Decision::EnvInput(host.clone(), Value::Unit);
        }
        Decision::Idle
    }

    fn observe(&mut self, _obs: &Observation) {}

    fn clone_scheduler(&self) -> Box<dyn Scheduler> {
        Box::new(self.clone())
    }
}

/// Default depth bound: generous room for every statement plus buffered
/// traffic of a loop-free program.
pub fn default_depth(config: &Configuration) -> usize {
    4 * config.total_stmts() + config.buffered() + 16
}

/// Exhaustively enumerates the environment-restricted traces of a world
/// driven by a deterministic adversary, branching over environment choices.
pub fn trace_set(
    world: &dyn World,
    scheduler: &dyn Scheduler,
    env: &EnvDriver,
    depth: usize,
) -> Result<BTreeSet<Trace>, HarnessError> {
    let mut out = BTreeSet::new();
    let mut stack = vec![(world.clone_world(), scheduler.clone_scheduler(), env.clone(), Trace::new(), depth)];
    while let Some((world, mut scheduler, env, trace, depth)) = stack.pop() {
        let menu = world.menu();
        let decision = scheduler.decide(&menu);
        let finished = matches!(decision, Decision::Idle);
        if finished {
            out.insert(trace);
            continue;
        }
        if depth == 0 {
            return Err(HarnessError::DepthExceeded);
        }
        match decision {
            Decision::EnvInput(host, _) => {
                let choices = env.choices(&host);
                if choices.is_empty() {
                    // environment has nothing to say; the run ends here
                    out.insert(trace);
                    continue;
                }
                for (value, env_next) in choices {
                    let mut w = world.clone_world();
                    let mut s = scheduler.clone_scheduler();
                    let turn = w.apply(&Decision::EnvInput(host.clone(), value))?;
                    for o in &turn.obs {
                        s.observe(o);
                    }
                    let mut t = trace.clone();
                    t.extend(env_restrict(&turn.env));
                    stack.push((w, s, env_next, t, depth - 1));
                }
            }
            decision => {
                let mut w = world.clone_world();
                let turn = w.apply(&decision)?;
                for o in &turn.obs {
                    scheduler.observe(o);
                }
                let mut t = trace.clone();
                t.extend(env_restrict(&turn.env));
                stack.push((w, scheduler, env.clone(), t, depth - 1));
            }
        }
    }
    Ok(out)
}

/// Runs one deterministic trace (scripted environment), returning raw and
/// restricted traces.
pub fn run_single(
    world: &dyn World,
    scheduler: &dyn Scheduler,
    env: &EnvDriver,
    depth: usize,
) -> Result<(Trace, bool), HarnessError> {
    let mut world = world.clone_world();
    let mut scheduler = scheduler.clone_scheduler();
    let mut env = env.clone();
    let mut trace = Trace::new();
    for _ in 0..depth {
        let menu = world.menu();
        match scheduler.decide(&menu) {
            Decision::Idle => return Ok((trace, world.done())),
            Decision::EnvInput(host, _) => {
                let choices = env.choices(&host);
                let Some((value, env_next)) = choices.into_iter().next() else {
                    return Ok((trace, world.done()));
                };
                env = env_next;
                let turn = world.apply(&Decision::EnvInput(host, value))?;
                for o in &turn.obs {
                    scheduler.observe(o);
                }
                trace.extend(env_restrict(&turn.env));
            }
            decision => {
                let turn = world.apply(&decision)?;
                for o in &turn.obs {
                    scheduler.observe(o);
                }
                trace.extend(env_restrict(&turn.env));
            }
        }
    }
    Err(HarnessError::DepthExceeded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::Attack;
    use crate::semantics::program_config;
    use crate::testutil::{mill_env, mill_source};

    fn source_world() -> BaseWorld {
        let env = mill_env();
        let sem = Semantics::new(env.clone(), Attack::empty(), Mode::IdealSequential);
        let config = program_config(&env, &mill_source(), true);
        BaseWorld::new(sem, config)
    }

    #[test]
    fn env_restrict_examples() {
        let internal = Action::internal(Endpoint::host("alice"));
        assert!(env_restrict(&[internal.clone(), internal]).is_empty());
        let io = Action::input(Msg::new(
            Endpoint::Environment,
            Endpoint::host("alice"),
            Value::Int(5),
        ));
        let restricted = env_restrict(&[io.clone()]);
        assert_eq!(restricted, vec![io]);
        assert_eq!(env_restrict(&restricted), restricted);
    }

    #[test]
    fn source_millionaires_has_nine_traces_over_domain_three() {
        let world = source_world();
        let domain = vec![Value::Int(0), Value::Int(1), Value::Int(2)];
        let depth = default_depth(&world.config);
        let traces = trace_set(&world, &DummyScheduler, &EnvDriver::Domain(domain), depth).unwrap();
        assert_eq!(traces.len(), 9);
        for t in &traces {
            assert_eq!(t.len(), 4);
            let (a, b) = match (&t[0].msg.value, &t[1].msg.value) {
                (Value::Int(a), Value::Int(b)) => (*a, *b),
                other => panic!("unexpected inputs {other:?}"),
            };
            assert_eq!(t[2].msg.value, Value::Bool(a < b));
            assert_eq!(t[2].msg.to, Endpoint::Environment);
            assert_eq!(t[2].msg.from, Endpoint::host("alice"));
            assert_eq!(t[3].msg.value, Value::Bool(a < b));
            assert_eq!(t[3].msg.from, Endpoint::host("bob"));
        }
    }

    #[test]
    fn fixed_inputs_give_exactly_one_trace() {
        let world = source_world();
        let mut script = BTreeMap::new();
        script.insert("alice".to_string(), VecDeque::from([Value::Int(5)]));
        script.insert("bob".to_string(), VecDeque::from([Value::Int(7)]));
        let depth = default_depth(&world.config);
        let traces =
            trace_set(&world, &DummyScheduler, &EnvDriver::Script(script), depth).unwrap();
        assert_eq!(traces.len(), 1);
        let t = traces.iter().next().unwrap();
        // in env→alice 5, in env→bob 7, out alice→env true, out bob→env true
        assert_eq!(t.len(), 4);
        assert_eq!(t[0].msg.value, Value::Int(5));
        assert_eq!(t[1].msg.value, Value::Int(7));
        assert_eq!(t[2].msg.value, Value::Bool(true));
        assert_eq!(t[3].msg.value, Value::Bool(true));
    }

    #[test]
    fn skip_configuration_yields_the_empty_trace() {
        let env = mill_env();
        let sem = Semantics::new(env.clone(), Attack::empty(), Mode::IdealSequential);
        let world = BaseWorld::new(sem, program_config(&env, &Stmt::Skip, true));
        let traces = trace_set(
            &world,
            &DummyScheduler,
            &EnvDriver::Domain(default_domain()),
            64,
        )
        .unwrap();
        assert_eq!(traces, BTreeSet::from([vec![]]));
    }

    #[test]
    fn depth_exceeded_reported() {
        let world = source_world();
        let err = trace_set(
            &world,
            &DummyScheduler,
            &EnvDriver::Domain(vec![Value::Int(0)]),
            2,
        )
        .unwrap_err();
        assert!(matches!(err, HarnessError::DepthExceeded));
    }
}
