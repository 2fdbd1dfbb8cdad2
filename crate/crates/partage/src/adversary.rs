//! Adversaries and simulators.
//!
//! Adversaries observe redacted events (payloads hidden on honest-honest
//! channels), schedule one channel per turn, and may forge messages from the
//! adversary endpoint or malicious hosts. Simulators are worlds wrapping a
//! more-ideal world: they maintain a public view of the program the wrapped
//! adversary expects and translate its decisions, exactly following the
//! constructive simulators of the correctness arguments.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::Hasher;

use serde::Serialize;

use crate::harness::{BaseWorld, Decision, HarnessError, Menu, Turn, World};
use crate::labels::{Attack, HostClass, HostEnvironment, Label, Principal};
use crate::lang::ast::{Atom, Endpoint, Expr, Loc, Stmt, Value};
use crate::semantics::{Action, ConfigStep, Dir, LetTag, Msg, Semantics, StepTag};
use crate::typecheck::{self, TypeContext};

/// What the adversary sees of an event: direction, endpoints, and the
/// payload when at least one endpoint is dishonest.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Observation {
    pub dir: Dir,
    pub from: Endpoint,
    pub to: Endpoint,
    pub payload: Option<Value>,
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = if self.dir == Dir::In { "in" } else { "out" };
        match &self.payload {
            Some(v) => write!(f, "{dir} {}->{} {v}", self.from, self.to),
            None => write!(f, "{dir} {}->{} _", self.from, self.to),
        }
    }
}

fn endpoint_dishonest(env: &HostEnvironment, attack: &Attack, e: &Endpoint) -> bool {
    match e {
        Endpoint::Adversary => true,
        Endpoint::Environment | Endpoint::Ideal => false,
        Endpoint::Host(h) => env
            .classify(h, attack)
            .map(|c| c.is_dishonest())
            .unwrap_or(false),
    }
}

/// The adversary can read a message only when at least one endpoint is
/// dishonest.
pub fn channel_readable(
    env: &HostEnvironment,
    attack: &Attack,
    from: &Endpoint,
    to: &Endpoint,
) -> bool {
    endpoint_dishonest(env, attack, from) || endpoint_dishonest(env, attack, to)
}

/// Redacts an action for delivery to the adversary.
pub fn redact(env: &HostEnvironment, attack: &Attack, action: &Action) -> Observation {
    let payload = if channel_readable(env, attack, &action.msg.from, &action.msg.to) {
        Some(action.msg.value)
    } else {
        None
    };
    Observation {
        dir: action.dir,
        from: action.msg.from.clone(),
        to: action.msg.to.clone(),
        payload,
    }
}

// ---------------------------------------------------------------------------
// Scripted adversaries
// ---------------------------------------------------------------------------

/// One guarded turn of a scripted adversary.
#[derive(Clone, Debug, PartialEq)]
pub struct ScriptTurn {
    pub decision: ScriptDecision,
    /// `(channel, index, expected)`: the turn applies only when the
    /// index-th observation on the channel carries the expected payload.
    pub guard: Option<(Endpoint, Endpoint, usize, Value)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScriptDecision {
    Accept { from: Endpoint, to: Endpoint },
    Emit(Msg),
}

/// A deterministic adversary script: a turn list over redacted observations,
/// or the built-in dummy scheduler.
#[derive(Clone, Debug, PartialEq)]
pub enum AdversaryScript {
    Dummy,
    Turns(Vec<ScriptTurn>),
}

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error("script parse error: {0}")]
    Parse(String),
    #[error("turn {turn}: {msg}")]
    Invalid { turn: usize, msg: String },
}

impl AdversaryScript {
    /// Parses the script file format: `dummy`, or one turn per line:
    /// `accept <ep>-><ep>` / `emit <ep>-><ep> <value>`, optionally guarded
    /// by `if <ep>-><ep>[<k>] == <value>` over the observed history.
    pub fn parse(text: &str) -> Result<AdversaryScript, ScriptError> {
        let trimmed: Vec<&str> = text
            .lines()
            .map(|l| l.trim())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        if trimmed.len() == 1 && trimmed[0] == "dummy" {
            return Ok(AdversaryScript::Dummy);
        }
        let mut turns = Vec::new();
        for line in trimmed {
            turns.push(parse_turn(line).map_err(ScriptError::Parse)?);
        }
        Ok(AdversaryScript::Turns(turns))
    }

    /// Checks the script against the adversary interface for the given
    /// attack: emissions must come from the adversary or malicious hosts,
    /// and guards may only test payloads the adversary can read.
    pub fn validate(&self, env: &HostEnvironment, attack: &Attack) -> Result<(), ScriptError> {
        let AdversaryScript::Turns(turns) = self else {
            return Ok(());
        };
        for (i, turn) in turns.iter().enumerate() {
            if let ScriptDecision::Emit(msg) = &turn.decision {
                let ok = match &msg.from {
                    Endpoint::Adversary => true,
                    Endpoint::Host(h) => {
                        env.classify(h, attack)
                            .map(|c| c == HostClass::Malicious)
                            .unwrap_or(false)
                    }
                    _ => false,
                };
                if !ok {
                    return Err(ScriptError::Invalid {
                        turn: i,
                        msg: format!(
                            "emission from `{}` violates the adversary interface: \
                             only the adversary and malicious hosts may forge messages",
                            msg.from
                        ),
                    });
                }
            }
            if let Some((from, to, k, v)) = &turn.guard {
                if !channel_readable(env, attack, from, to) {
                    return Err(ScriptError::Invalid {
                        turn: i,
                        msg: format!(
                            "guard {from}->{to}[{k}] == {v} branches on a payload hidden \
                             between honest endpoints; two histories differing only in that \
                             payload would make the script diverge"
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

fn parse_endpoint(text: &str) -> Result<Endpoint, String> {
    Ok(match text {
        "adv" => Endpoint::Adversary,
        "env" => Endpoint::Environment,
        "star" => Endpoint::Ideal,
        h => Endpoint::host(h),
    })
}

fn parse_value_text(text: &str) -> Result<Value, String> {
    match text {
        "unit" => Ok(Value::Unit),
        "true" => Ok(Value::Bool(true)),
        "false" => Ok(Value::Bool(false)),
        n => n
            .parse::<i64>()
            .map(Value::Int)
            .map_err(|_| format!("bad value `{n}`")),
    }
}

fn parse_turn(line: &str) -> Result<ScriptTurn, String> {
    let (body, guard) = match line.split_once(" if ") {
        Some((body, guard)) => (body.trim(), Some(guard.trim())),
        None => (line, None),
    };
    let guard = match guard {
        None => None,
        Some(g) => {
            let (chan, rest) = g.split_once('[').ok_or_else(|| format!("bad guard `{g}`"))?;
            let (from, to) = chan
                .trim()
                .split_once("->")
                .ok_or_else(|| format!("bad guard channel `{chan}`"))?;
            let (idx, rest) = rest.split_once(']').ok_or_else(|| format!("bad guard `{g}`"))?;
            let idx: usize = idx.trim().parse().map_err(|_| format!("bad index `{idx}`"))?;
            let v = rest
                .trim()
                .strip_prefix("==")
                .ok_or_else(|| format!("bad guard `{rest}`"))?;
            Some((
                parse_endpoint(from.trim())?,
                parse_endpoint(to.trim())?,
                idx,
                parse_value_text(v.trim())?,
            ))
        }
    };
    let mut words = body.split_whitespace();
    let decision = match words.next() {
        Some("accept") => {
            let chan = words.next().ok_or("accept needs a channel")?;
            let (from, to) = chan.split_once("->").ok_or("channel must be `a->b`")?;
            ScriptDecision::Accept {
                from: parse_endpoint(from)?,
                to: parse_endpoint(to)?,
            }
        }
        Some("emit") => {
            let chan = words.next().ok_or("emit needs a channel")?;
            let (from, to) = chan.split_once("->").ok_or("channel must be `a->b`")?;
            let value = words.next().ok_or("emit needs a value")?;
            ScriptDecision::Emit(Msg::new(
                parse_endpoint(from)?,
                parse_endpoint(to)?,
                parse_value_text(value)?,
            ))
        }
        other => return Err(format!("expected accept/emit, found {other:?}")),
    };
    if words.next().is_some() {
        return Err(format!("trailing input in `{line}`"));
    }
    Ok(ScriptTurn { decision, guard })
}

/// Scheduler state for a script: a cursor over the turn list plus the
/// observation history.
#[derive(Clone)]
pub struct ScriptScheduler {
    script: AdversaryScript,
    cursor: usize,
    history: Vec<Observation>,
}

impl ScriptScheduler {
    pub fn new(script: AdversaryScript) -> Self {
        ScriptScheduler {
            script,
            cursor: 0,
            history: Vec::new(),
        }
    }
}

impl crate::harness::Scheduler for ScriptScheduler {
    fn decide(&mut self, menu: &Menu) -> Decision {
        match &self.script {
            AdversaryScript::Dummy => {
                if let Some(actor) = menu.fire.iter().next() {
                    Decision::Fire(actor.clone())
                } else if let Some(host) = menu.env_inputs.iter().next() {
                    Decision::EnvInput(host.clone(), Value::Unit)
                } else {
                    Decision::Idle
                }
            }
            AdversaryScript::Turns(turns) => {
                while let Some(turn) = turns.get(self.cursor) {
                    self.cursor += 1;
                    if let Some((from, to, k, v)) = &turn.guard {
                        let matches = self
                            .history
                            .iter()
                            .filter(|o| o.from == *from && o.to == *to)
                            .nth(*k)
                            .and_then(|o| o.payload)
                            .is_some_and(|p| p == *v);
                        if !matches {
                            continue;
                        }
                    }
                    match &turn.decision {
                        ScriptDecision::Accept { from, to } => {
                            if *from == Endpoint::Environment {
                                if let Endpoint::Host(h) = to {
                                    return Decision::EnvInput(h.clone(), Value::Unit);
                                }
                            }
                            return Decision::Fire(from.clone());
                        }
                        ScriptDecision::Emit(msg) => return Decision::Emit(msg.clone()),
                    }
                }
                Decision::Idle
            }
        }
    }

    fn observe(&mut self, obs: &Observation) {
        self.history.push(obs.clone());
    }

    fn clone_scheduler(&self) -> Box<dyn crate::harness::Scheduler> {
        Box::new(self.clone())
    }
}

// ---------------------------------------------------------------------------
// Syntactic low equivalence
// ---------------------------------------------------------------------------

/// Which component of the attack partition the equivalence is relative to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EquivMode {
    Public,
    Trusted,
}

#[derive(Debug, thiserror::Error)]
pub enum EquivError {
    #[error("statements have different shapes")]
    ShapeMismatch,
}

/// Decides syntactic low equivalence: the two statements must have the same
/// shape, and wherever their values differ, the differing positions must be
/// typeable at labels outside the public (resp. trusted) set.
///
/// Differences are abstracted into fresh variables; the generalized
/// statement is then checked in a context assigning those variables
/// candidate labels at their hosts. An opaque value differs from everything,
/// including other opaques.
pub fn low_equivalent(
    s1: &Stmt,
    s2: &Stmt,
    mode: EquivMode,
    env: &HostEnvironment,
    attack: &Attack,
) -> Result<bool, EquivError> {
    let mut anti = AntiUnifier::new();
    let Some(generalized) = anti.stmt(s1, s2) else {
        return Err(EquivError::ShapeMismatch);
    };
    if anti.holes.is_empty() {
        return Ok(true);
    }
    // Each hole gets the best label outside the observer's set that its
    // host can store: for public equivalence, the weakest secret
    // confidentiality below the host's (none exists under a public host);
    // for trusted equivalence, the strongest untrusted integrity below the
    // host's. Monotonicity of the typing premises makes these choices
    // complete: if they fail, every choice fails.
    let mut ctx = TypeContext::new();
    let all_atoms = env.atoms();
    for (name, loc) in &anti.holes {
        let host_label = match typecheck::loc_label(env, loc) {
            Ok(l) => l,
            Err(_) => return Ok(false),
        };
        let candidate = match mode {
            EquivMode::Public => {
                if attack.principal_public(&host_label.conf) {
                    // everything below a public host is public: no context
                    // can treat the difference as secret
                    return Ok(false);
                }
                let secret_atoms: Vec<&String> = all_atoms
                    .iter()
                    .filter(|a| !attack.public_atoms().contains(*a))
                    .collect();
                let s = secret_atoms
                    .iter()
                    .fold(Principal::weakest(), |acc, a| acc.and(&Principal::atom((*a).clone())));
                Label::new(host_label.conf.or(&s), host_label.integ.clone())
            }
            EquivMode::Trusted => {
                let u = if attack.untrusted_atoms().is_empty() {
                    Principal::weakest()
                } else {
                    attack
                        .untrusted_atoms()
                        .iter()
                        .fold(Principal::weakest(), |acc, a| {
                            acc.and(&Principal::atom(a.clone()))
                        })
                };
                Label::new(Principal::weakest(), host_label.integ.or(&u))
            }
        };
        let outside = match mode {
            EquivMode::Public => !attack.is_public(&candidate),
            EquivMode::Trusted => !attack.is_trusted(&candidate),
        };
        if !outside {
            return Ok(false);
        }
        ctx.bind(name.clone(), loc.clone(), candidate);
    }
    Ok(typecheck::check_stmt(&ctx, env, attack, &generalized).is_ok())
}

struct AntiUnifier {
    counter: usize,
    holes: Vec<(String, Loc)>,
}

impl AntiUnifier {
    fn new() -> Self {
        AntiUnifier {
            counter: 0,
            holes: Vec::new(),
        }
    }

    fn hole(&mut self, loc: &Loc) -> Atom {
        let name = format!("#abs{}", self.counter);
        self.counter += 1;
        self.holes.push((name.clone(), loc.clone()));
        Atom::Var(name)
    }

    fn atom(&mut self, a: &Atom, b: &Atom, loc: &Loc) -> Option<Atom> {
        match (a, b) {
            (Atom::Val(v1), Atom::Val(v2)) => {
                if v1 == v2 && !v1.is_opaque() {
                    Some(Atom::Val(*v1))
                } else {
                    Some(self.hole(loc))
                }
            }
            (Atom::Var(x), Atom::Var(y)) if x == y => Some(Atom::Var(x.clone())),
            _ => None,
        }
    }

    fn expr(&mut self, a: &Expr, b: &Expr, loc: &Loc) -> Option<Expr> {
        match (a, b) {
            (Expr::Atomic(x), Expr::Atomic(y)) => Some(Expr::Atomic(self.atom(x, y, loc)?)),
            (Expr::Op(f, xs), Expr::Op(g, ys)) if f == g && xs.len() == ys.len() => {
                let args: Option<Vec<Atom>> = xs
                    .iter()
                    .zip(ys)
                    .map(|(x, y)| self.atom(x, y, loc))
                    .collect();
                Some(Expr::Op(*f, args?))
            }
            (
                Expr::Declassify { arg, from, to },
                Expr::Declassify {
                    arg: arg2,
                    from: from2,
                    to: to2,
                },
            ) if from == from2 && to == to2 => Some(Expr::Declassify {
                arg: self.atom(arg, arg2, loc)?,
                from: from.clone(),
                to: to.clone(),
            }),
            (
                Expr::Endorse { arg, from, to },
                Expr::Endorse {
                    arg: arg2,
                    from: from2,
                    to: to2,
                },
            ) if from == from2 && to == to2 => Some(Expr::Endorse {
                arg: self.atom(arg, arg2, loc)?,
                from: from.clone(),
                to: to.clone(),
            }),
            (Expr::Input(h), Expr::Input(h2)) if h == h2 => Some(Expr::Input(h.clone())),
            (Expr::Output(x, h), Expr::Output(y, h2)) if h == h2 => {
                Some(Expr::Output(self.atom(x, y, loc)?, h.clone()))
            }
            (Expr::Receive(h), Expr::Receive(h2)) if h == h2 => Some(Expr::Receive(h.clone())),
            (Expr::Send(x, h), Expr::Send(y, h2)) if h == h2 => {
                Some(Expr::Send(self.atom(x, y, loc)?, h.clone()))
            }
            _ => None,
        }
    }

    fn stmt(&mut self, a: &Stmt, b: &Stmt) -> Option<Stmt> {
        match (a, b) {
            (Stmt::Skip, Stmt::Skip) => Some(Stmt::Skip),
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
            ) if loc == loc2 => {
                let expr = self.expr(expr, expr2, loc)?;
                let cont2 = if var == var2 {
                    (**cont2).clone()
                } else {
                    cont2.subst_atom(var2, &Atom::Var(var.clone()))
                };
                Some(Stmt::Let {
                    var: var.clone(),
                    loc: loc.clone(),
                    expr,
                    cont: Box::new(self.stmt(cont, &cont2)?),
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
            ) if src == src2 && dst == dst2 => {
                let arg = self.atom(arg, arg2, &Loc::Host(src.clone()))?;
                let cont2 = if var == var2 {
                    (**cont2).clone()
                } else {
                    cont2.subst_atom(var2, &Atom::Var(var.clone()))
                };
                Some(Stmt::Move {
                    src: src.clone(),
                    arg,
                    dst: dst.clone(),
                    var: var.clone(),
                    cont: Box::new(self.stmt(cont, &cont2)?),
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
            ) if src == src2 && dst == dst2 && val == val2 => Some(Stmt::Select {
                src: src.clone(),
                val: *val,
                dst: dst.clone(),
                cont: Box::new(self.stmt(cont, cont2)?),
            }),
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
            ) if loc == loc2 => Some(Stmt::If {
                loc: loc.clone(),
                guard: self.atom(guard, guard2, loc)?,
                then_branch: Box::new(self.stmt(then_branch, then2)?),
                else_branch: Box::new(self.stmt(else_branch, else2)?),
            }),
            (
                Stmt::Case { src, dst, branches },
                Stmt::Case {
                    src: src2,
                    dst: dst2,
                    branches: branches2,
                },
            ) if src == src2 && dst == dst2 && branches.len() == branches2.len() => {
                let mut merged = Vec::new();
                for ((v1, s1), (v2, s2)) in branches.iter().zip(branches2) {
                    if v1 != v2 {
                        return None;
                    }
                    merged.push((*v1, self.stmt(s1, s2)?));
                }
                Some(Stmt::Case {
                    src: src.clone(),
                    dst: dst.clone(),
                    branches: merged,
                })
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
            ) if src == src2 && dst == dst2 && val == val2 && var == var2 => {
                Some(Stmt::MovePending {
                    src: src.clone(),
                    val: *val,
                    dst: dst.clone(),
                    var: var.clone(),
                    cont: Box::new(self.stmt(cont, cont2)?),
                })
            }
            (
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
            ) if src == src2 && dst == dst2 && val == val2 => Some(Stmt::SelectPending {
                src: src.clone(),
                val: *val,
                dst: dst.clone(),
                cont: Box::new(self.stmt(cont, cont2)?),
            }),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Stage simulators
// ---------------------------------------------------------------------------

/// The five constructive simulators, named by the gap they close.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageKind {
    /// `source(P)` against `P`: recovers host names, absorbs move/select.
    HostNames,
    /// `P` against `corrupt(P)`: replays erased malicious statements.
    Corruption,
    /// Sequential against concurrent: unwinds the sequential program to
    /// match scheduled external outputs.
    Sequentialization,
    /// Ideal against real: flips the downgrade directions via a public view.
    IdealExecution,
    /// Plain against asynchronous run-time terms: absorbs pending receives.
    AsyncTerms,
}

/// A simulator stage: the wrapped adversary attacks `view`'s world, while
/// the decisions are translated onto the `outer` (more ideal) world.
pub struct StageWorld {
    pub kind: StageKind,
    pub outer: Box<dyn World>,
    pub view: BaseWorld,
    opaque_seq: u64,
}

impl StageWorld {
    pub fn new(kind: StageKind, outer: Box<dyn World>, view: BaseWorld) -> Self {
        StageWorld {
            kind,
            outer,
            view,
            opaque_seq: 0,
        }
    }

    fn sem(&self) -> &Semantics {
        &self.view.sem
    }

    fn fresh_opaque(&mut self) -> Value {
        self.opaque_seq += 1;
        Value::Opaque(self.opaque_seq)
    }

    fn malicious(&self, e: &Endpoint) -> bool {
        match e {
            Endpoint::Host(h) => self
                .sem()
                .env
                .classify(h, &self.sem().attack)
                .map(|c| c == HostClass::Malicious)
                .unwrap_or(false),
            _ => false,
        }
    }

    fn diverged(&self, msg: impl Into<String>) -> HarnessError {
        HarnessError::SimulatorDiverged(format!("{:?} stage: {}", self.kind, msg.into()))
    }

    /// The view's step at `actor`, with the endorse-emit remap: a simulator
    /// view's endorse emits `adv -> h`, which the adversary schedules as an
    /// internal step of `h`.
    fn view_step_at(&self, actor: &Endpoint) -> Option<ConfigStep> {
        let cfg = &self.view.config;
        if let Some(step) = cfg.step_at(&self.view.sem, actor) {
            return Some(step);
        }
        cfg.enabled_steps(&self.view.sem)
            .into_iter()
            .find(|s| s.action.msg.from == Endpoint::Adversary && s.action.msg.to == *actor)
    }

    fn view_awaits_declassify(&self, actor: &Endpoint) -> bool {
        self.view
            .config
            .wanted_channels(&self.view.sem)
            .contains(&(actor.clone(), Endpoint::Adversary))
    }

    /// Forward an environment input into the view, hiding the payload on
    /// honest channels.
    fn view_env_input(&mut self, host: &str, value: Value) {
        let to = Endpoint::host(host);
        let v = if channel_readable(
            &self.sem().env,
            &self.sem().attack,
            &Endpoint::Environment,
            &to,
        ) {
            value
        } else {
            self.fresh_opaque()
        };
        let msg = Msg::new(Endpoint::Environment, to, v);
        self.view.config = self.view.config.input(&msg);
    }

    fn obs(&self, action: &Action) -> Observation {
        redact(&self.sem().env, &self.sem().attack, action)
    }

    /// Reconciles the view's emitted payload with the value the outer world
    /// actually produced. On adversary-readable channels an opaque
    /// placeholder resolves to the revealed value (and is substituted
    /// throughout the view); a concrete mismatch is a simulation failure.
    /// Hidden channels are left alone: the view may not learn secrets.
    fn reconcile_external(
        &mut self,
        view_action: &Action,
        outer_action: Option<&Action>,
    ) -> Result<Action, HarnessError> {
        let Some(outer) = outer_action else {
            return Ok(view_action.clone());
        };
        if view_action.dir != Dir::Out
            || view_action.is_internal()
            || outer.dir != Dir::Out
            || outer.is_internal()
        {
            return Ok(view_action.clone());
        }
        let readable = channel_readable(
            &self.sem().env,
            &self.sem().attack,
            &view_action.msg.from,
            &view_action.msg.to,
        );
        if !readable {
            return Ok(view_action.clone());
        }
        let revealed = outer.msg.value;
        match view_action.msg.value {
            Value::Opaque(tag) => {
                self.view.config = self.view.config.substitute_opaque(tag, revealed);
                let mut fixed = view_action.clone();
                fixed.msg.value = revealed;
                Ok(fixed)
            }
            v if v == revealed => Ok(view_action.clone()),
            v => Err(self.diverged(format!(
                "view computed {v} where the more ideal world revealed {revealed}"
            ))),
        }
    }
}

impl World for StageWorld {
    fn menu(&self) -> Menu {
        let mut menu = self.view.menu();
        if self.kind == StageKind::IdealExecution {
            // remap simulator-view downgrades onto the hosts the real-world
            // adversary would schedule
            let mut fire = BTreeSet::new();
            for p in &self.view.config.processes {
                let (actions, wanted) = p.enabled_surface(&self.view.sem);
                for (action, _) in actions {
                    if action.msg.from == Endpoint::Adversary {
                        fire.insert(action.msg.to.clone());
                    } else {
                        fire.insert(action.actor().clone());
                    }
                }
                for (from, to) in wanted {
                    if to == Endpoint::Adversary {
                        fire.insert(from);
                    }
                }
            }
            menu.fire = fire;
        }
        menu
    }

    fn apply(&mut self, decision: &Decision) -> Result<Turn, HarnessError> {
        match decision {
            Decision::Idle => Ok(Turn::default()),
            Decision::EnvInput(host, value) => {
                let turn = self.outer.apply(decision)?;
                self.view_env_input(host, *value);
                let action = Action::input(Msg::new(
                    Endpoint::Environment,
                    Endpoint::host(host.clone()),
                    *value,
                ));
                Ok(Turn {
                    obs: vec![self.obs(&action)],
                    env: turn.env,
                    action: Some(action),
                })
            }
            Decision::Emit(msg) => {
                let forward = match self.kind {
                    StageKind::HostNames | StageKind::IdealExecution => {
                        msg.to == Endpoint::Environment
                    }
                    StageKind::Corruption
                    | StageKind::Sequentialization
                    | StageKind::AsyncTerms => true,
                };
                let env = if forward {
                    self.outer.apply(decision)?.env
                } else if msg.to == Endpoint::Environment {
                    unreachable!("env-targeted emissions are always forwarded")
                } else {
                    vec![]
                };
                self.view.config = self.view.config.input(msg);
                Ok(Turn {
                    obs: vec![],
                    env,
                    action: Some(Action::input(msg.clone())),
                })
            }
            Decision::Fire(actor) => self.fire(actor),
        }
    }

    fn hash_state(&self, hasher: &mut dyn Hasher) {
        self.outer.hash_state(hasher);
        self.view.hash_state(hasher);
    }

    fn clone_world(&self) -> Box<dyn World> {
        Box::new(StageWorld {
            kind: self.kind,
            outer: self.outer.clone_world(),
            view: self.view.clone(),
            opaque_seq: self.opaque_seq,
        })
    }

    fn done(&self) -> bool {
        self.outer.done() && self.view.done()
    }
}

impl StageWorld {
    fn fire(&mut self, actor: &Endpoint) -> Result<Turn, HarnessError> {
        match self.kind {
            StageKind::AsyncTerms => self.fire_async(actor),
            StageKind::IdealExecution => self.fire_ideal(actor),
            StageKind::Sequentialization => self.fire_seq(actor),
            StageKind::Corruption => self.fire_corruption(actor),
            StageKind::HostNames => self.fire_hostnames(actor),
        }
    }

    fn take_view_step(&mut self, step: &ConfigStep) {
        self.view.config = step.next.clone();
    }

    fn fire_async(&mut self, actor: &Endpoint) -> Result<Turn, HarnessError> {
        let step = self
            .view_step_at(actor)
            .ok_or_else(|| self.diverged(format!("no enabled step at {actor}")))?;
        let obs = self.obs(&step.action);
        match step.tag {
            StepTag::PendingStep => {
                // the plain world already completed this communication
                self.take_view_step(&step);
                Ok(Turn {
                    obs: vec![obs],
                    env: vec![],
                    action: Some(step.action),
                })
            }
            _ => {
                let turn = self.outer.apply(&Decision::Fire(actor.clone()))?;
                self.take_view_step(&step);
                let action = self.reconcile_external(&step.action, turn.action.as_ref())?;
                Ok(Turn {
                    obs: vec![self.obs(&action)],
                    env: turn.env,
                    action: Some(action),
                })
            }
        }
    }

    fn fire_ideal(&mut self, actor: &Endpoint) -> Result<Turn, HarnessError> {
        // declassify: the ideal side leaks; the view consumes the leak
        if self.view_awaits_declassify(actor) {
            let turn = self.outer.apply(&Decision::Fire(actor.clone()))?;
            let leak = turn
                .action
                .as_ref()
                .filter(|a| a.msg.to == Endpoint::Adversary && a.msg.from == *actor)
                .ok_or_else(|| {
                    self.diverged(format!("ideal world did not declassify at {actor}"))
                })?;
            self.view.config = self
                .view
                .config
                .feed_stmt_input(&self.view.sem, &leak.msg)
                .ok_or_else(|| self.diverged("view refused the declassified value"))?;
            return Ok(Turn {
                obs: vec![self.obs(&Action::internal(actor.clone()))],
                env: turn.env,
                action: Some(Action::internal(actor.clone())),
            });
        }
        let step = self
            .view_step_at(actor)
            .ok_or_else(|| self.diverged(format!("no enabled step at {actor}")))?;
        // endorse: the view computes the public value; the ideal side
        // consumes it as adversary input (one extra buffer step)
        if step.tag == StepTag::Let(LetTag::EndorseEmit) {
            let value = step.action.msg.value;
            debug_assert!(!value.is_opaque(), "endorsed values are public");
            let msg = Msg::new(Endpoint::Adversary, actor.clone(), value);
            self.outer.apply(&Decision::Emit(msg))?;
            let turn = self.outer.apply(&Decision::Fire(actor.clone()))?;
            self.take_view_step(&step);
            return Ok(Turn {
                obs: vec![self.obs(&Action::internal(actor.clone()))],
                env: turn.env,
                action: Some(Action::internal(actor.clone())),
            });
        }
        let turn = self.outer.apply(&Decision::Fire(actor.clone()))?;
        self.take_view_step(&step);
        let action = self.reconcile_external(&step.action, turn.action.as_ref())?;
        Ok(Turn {
            obs: vec![self.obs(&action)],
            env: turn.env,
            action: Some(action),
        })
    }

    fn fire_seq(&mut self, actor: &Endpoint) -> Result<Turn, HarnessError> {
        let step = self
            .view_step_at(actor)
            .ok_or_else(|| self.diverged(format!("no enabled step at {actor}")))?;
        let obs = self.obs(&step.action);
        if step.action.is_internal() {
            // inputs and internal work: the sequential program catches up
            // lazily while unwinding
            let action = step.action.clone();
            self.take_view_step(&step);
            return Ok(Turn {
                obs: vec![obs],
                env: vec![],
                action: Some(action),
            });
        }
        // external output: unwind the sequential program until it performs
        // the same output
        let target = &step.action.msg;
        let mut env = Vec::new();
        loop {
            let menu = self.outer.menu();
            let Some(outer_actor) = menu.fire.iter().next().cloned() else {
                return Err(self.diverged(format!(
                    "sequential program blocked before emitting {target}"
                )));
            };
            let turn = self.outer.apply(&Decision::Fire(outer_actor))?;
            let Some(action) = turn.action else {
                return Err(self.diverged("sequential program made no progress"));
            };
            env.extend(turn.env);
            if action.is_internal() {
                continue;
            }
            if action.msg.channel() == target.channel() {
                self.take_view_step(&step);
                let fixed = self.reconcile_external(&step.action, Some(&action))?;
                return Ok(Turn {
                    obs: vec![self.obs(&fixed)],
                    env,
                    action: Some(fixed),
                });
            }
            return Err(self.diverged(format!(
                "sequential program emitted {} while unwinding toward {target}; \
                 outputs are not synchronized",
                action.msg
            )));
        }
    }

    fn fire_corruption(&mut self, actor: &Endpoint) -> Result<Turn, HarnessError> {
        let step = self
            .view_step_at(actor)
            .ok_or_else(|| self.diverged(format!("no enabled step at {actor}")))?;
        let obs = self.obs(&step.action);
        self.unwind_outer_past_malicious()?;
        let view_only = matches!(
            step.tag,
            StepTag::Let(LetTag::RecvIdeal) | StepTag::Let(LetTag::SendIdeal)
        ) && self.recv_peer_malicious(&step);
        let mut env = Vec::new();
        let mut action = step.action.clone();
        if view_only {
            // the erased malicious statement was already replayed
            self.take_view_step(&step);
        } else {
            let turn = self.outer.apply(&Decision::Fire(actor.clone()))?;
            env.extend(turn.env);
            self.take_view_step(&step);
            action = self.reconcile_external(&step.action, turn.action.as_ref())?;
        }
        Ok(Turn {
            obs: vec![self.obs(&action)],
            env,
            action: Some(action),
        })
    }

    fn recv_peer_malicious(&self, step: &ConfigStep) -> bool {
        // corrupt() only introduces send/recv toward malicious hosts, and
        // send at a nonmalicious sender keeps the paired Move in the outer
        // world only when the receiver is nonmalicious; a send's Move lives
        // at the nonmalicious sender, so only receives are view-only
        matches!(step.tag, StepTag::Let(LetTag::RecvIdeal))
    }

    fn unwind_outer_past_malicious(&mut self) -> Result<(), HarnessError> {
        loop {
            let menu = self.outer.menu();
            let malicious_actor = menu.fire.iter().find(|a| self.malicious(a)).cloned();
            if let Some(actor) = malicious_actor {
                let turn = self.outer.apply(&Decision::Fire(actor))?;
                if !turn.env.is_empty() {
                    return Err(self.diverged("malicious statement reached the environment"));
                }
                continue;
            }
            // a malicious-host endorse blocks on adversary input; feed it
            let awaiting_mal = menu
                .awaiting
                .iter()
                .find(|(from, to)| *from == Endpoint::Adversary && self.malicious(to))
                .cloned();
            if let Some((from, to)) = awaiting_mal {
                self.outer
                    .apply(&Decision::Emit(Msg::new(from, to.clone(), Value::Unit)))?;
                let turn = self.outer.apply(&Decision::Fire(to))?;
                if !turn.env.is_empty() {
                    return Err(self.diverged("malicious statement reached the environment"));
                }
                continue;
            }
            return Ok(());
        }
    }

    fn fire_hostnames(&mut self, actor: &Endpoint) -> Result<Turn, HarnessError> {
        let step = self
            .view_step_at(actor)
            .ok_or_else(|| self.diverged(format!("no enabled step at {actor}")))?;
        let mut env = Vec::new();
        let mut outer_action: Option<Action> = None;
        match step.tag {
            // move/select only exist in the choreography
            StepTag::MoveStep | StepTag::SelectStep => {}
            // non-IO work happens at the ideal host in the source program
            StepTag::Let(LetTag::Pure)
            | StepTag::Let(LetTag::DowngradeSkip)
            | StepTag::IfStep => {
                let turn = self.outer.apply(&Decision::Fire(Endpoint::Ideal))?;
                env.extend(turn.env);
                outer_action = turn.action;
            }
            // the ideal leak carries the ideal host name; restore the real one
            StepTag::Let(LetTag::DeclassifyLeak) => {
                let turn = self.outer.apply(&Decision::Fire(Endpoint::Ideal))?;
                let ok = turn
                    .action
                    .as_ref()
                    .is_some_and(|a| a.msg.to == Endpoint::Adversary);
                if !ok {
                    return Err(self.diverged("source program did not declassify"));
                }
                env.extend(turn.env);
                outer_action = turn.action;
            }
            // the endorse value travels to the ideal host under its new name
            StepTag::Let(LetTag::EndorseMaul) => {
                let consumed = step
                    .consumed
                    .as_ref()
                    .ok_or_else(|| self.diverged("endorse consumed nothing"))?;
                self.outer.apply(&Decision::Emit(Msg::new(
                    Endpoint::Adversary,
                    Endpoint::Ideal,
                    consumed.value,
                )))?;
                let turn = self.outer.apply(&Decision::Fire(Endpoint::Ideal))?;
                env.extend(turn.env);
            }
            // IO keeps its host
            StepTag::Let(
                LetTag::InputEnv
                | LetTag::InputMalicious
                | LetTag::OutputEnv
                | LetTag::OutputMalicious,
            ) => {
                let turn = self.outer.apply(&Decision::Fire(actor.clone()))?;
                env.extend(turn.env);
                outer_action = turn.action;
            }
            other => {
                return Err(self.diverged(format!("unexpected step {other:?} in a choreography")))
            }
        }
        self.take_view_step(&step);
        let action = self.reconcile_external(&step.action, outer_action.as_ref())?;
        Ok(Turn {
            obs: vec![self.obs(&action)],
            env,
            action: Some(action),
        })
    }
}
