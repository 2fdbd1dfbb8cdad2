//! The labeled-transition-system engine: ideal, real, simulator-view, and
//! asynchronous stepping for expressions and statements; FIFO buffers,
//! processes, and parallel composition of configurations.
//!
//! Stepping is pure: every function maps a state and an action to successor
//! states. Internal steps are represented as self-communication `(h → h)`
//! carrying `unit`, so schedulers observe them as ordinary message headers.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::labels::{Attack, HostClass, HostEnvironment};
use crate::lang::ast::{Endpoint, Expr, OpKind, Stmt, Value};

/// A message: sender, receiver, payload.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Msg {
    pub from: Endpoint,
    pub to: Endpoint,
    pub value: Value,
}

impl Msg {
    pub fn new(from: Endpoint, to: Endpoint, value: Value) -> Self {
        Msg { from, to, value }
    }

    pub fn channel(&self) -> (Endpoint, Endpoint) {
        (self.from.clone(), self.to.clone())
    }

    pub fn touches_env(&self) -> bool {
        self.from == Endpoint::Environment || self.to == Endpoint::Environment
    }
}

impl fmt::Display for Msg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{} {}", self.from, self.to, self.value)
    }
}

impl fmt::Debug for Msg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dir {
    #[serde(rename = "in")]
    In,
    #[serde(rename = "out")]
    Out,
}

/// An LTS transition label: the input or output of a message.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action {
    pub dir: Dir,
    pub msg: Msg,
}

impl Action {
    pub fn input(msg: Msg) -> Self {
        Action { dir: Dir::In, msg }
    }

    pub fn output(msg: Msg) -> Self {
        Action { dir: Dir::Out, msg }
    }

    /// An internal step of endpoint `h`, as self-communication.
    pub fn internal(h: Endpoint) -> Self {
        Action::output(Msg::new(h.clone(), h, Value::Unit))
    }

    pub fn is_internal(&self) -> bool {
        self.dir == Dir::Out && self.msg.from == self.msg.to
    }

    /// The endpoint performing the action: the sender of an output, the
    /// receiver of an input.
    pub fn actor(&self) -> &Endpoint {
        match self.dir {
            Dir::In => &self.msg.to,
            Dir::Out => &self.msg.from,
        }
    }

    pub fn touches_env(&self) -> bool {
        self.msg.touches_env()
    }

    /// Two actions are independent when one is an input and the other an
    /// output, or when they are on different channels.
    pub fn independent(&self, other: &Action) -> bool {
        self.dir != other.dir || self.msg.channel() != other.msg.channel()
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.dir {
            Dir::In => write!(f, "in {}", self.msg),
            Dir::Out => write!(f, "out {}", self.msg),
        }
    }
}

impl fmt::Debug for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for Action {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("Action", 4)?;
        s.serialize_field("dir", if self.dir == Dir::In { "in" } else { "out" })?;
        s.serialize_field("from", &self.msg.from.to_string())?;
        s.serialize_field("to", &self.msg.to.to_string())?;
        s.serialize_field("value", &self.msg.value.to_string())?;
        s.end()
    }
}

/// Per-channel FIFO queues of undelivered values.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Buffer {
    queues: BTreeMap<(Endpoint, Endpoint), VecDeque<Value>>,
}

impl Buffer {
    pub fn new() -> Self {
        Buffer::default()
    }

    pub fn push(&mut self, from: Endpoint, to: Endpoint, value: Value) {
        self.queues.entry((from, to)).or_default().push_back(value);
    }

    pub fn front(&self, from: &Endpoint, to: &Endpoint) -> Option<Value> {
        self.queues
            .get(&(from.clone(), to.clone()))
            .and_then(|q| q.front().copied())
    }

    pub fn pop(&mut self, from: &Endpoint, to: &Endpoint) -> Option<Value> {
        let key = (from.clone(), to.clone());
        let v = self.queues.get_mut(&key).and_then(|q| q.pop_front());
        if self.queues.get(&key).is_some_and(|q| q.is_empty()) {
            self.queues.remove(&key);
        }
        v
    }

    pub fn queue(&self, from: &Endpoint, to: &Endpoint) -> Vec<Value> {
        self.queues
            .get(&(from.clone(), to.clone()))
            .map(|q| q.iter().copied().collect())
            .unwrap_or_default()
    }

    pub fn queues(&self) -> impl Iterator<Item = (&(Endpoint, Endpoint), &VecDeque<Value>)> {
        self.queues.iter()
    }

    pub fn total_len(&self) -> usize {
        self.queues.values().map(|q| q.len()).sum()
    }

    /// Replaces every occurrence of an opaque placeholder with a concrete
    /// value.
    pub fn substitute_opaque(&mut self, tag: u64, value: Value) {
        for q in self.queues.values_mut() {
            for v in q.iter_mut() {
                if *v == Value::Opaque(tag) {
                    *v = value;
                }
            }
        }
    }

    /// Drops all values beyond `keep` on the given channel.
    pub fn truncate(&mut self, from: &Endpoint, to: &Endpoint, keep: usize) {
        let key = (from.clone(), to.clone());
        if let Some(q) = self.queues.get_mut(&key) {
            q.truncate(keep);
            if q.is_empty() {
                self.queues.remove(&key);
            }
        }
    }
}

impl fmt::Debug for Buffer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        write!(f, "[")?;
        for ((from, to), q) in &self.queues {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{from}->{to}: {q:?}")?;
        }
        write!(f, "]")
    }
}

/// Which stepping rules give meaning to statements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    IdealSequential,
    IdealConcurrent,
    RealSequential,
    RealConcurrent,
    /// Real rules with partially reduced communication (run-time terms).
    Async,
    /// Real rules with the downgrade directions flipped; used by simulators
    /// to maintain a public view of a real process.
    SimulatorView,
}

impl Mode {
    pub fn concurrent(self) -> bool {
        !matches!(self, Mode::IdealSequential | Mode::RealSequential)
    }

    pub fn ideal(self) -> bool {
        matches!(self, Mode::IdealSequential | Mode::IdealConcurrent)
    }

    pub fn from_name(name: &str) -> Option<Mode> {
        Some(match name {
            "ideal-seq" => Mode::IdealSequential,
            "ideal" | "ideal-conc" => Mode::IdealConcurrent,
            "real-seq" => Mode::RealSequential,
            "real" | "real-conc" => Mode::RealConcurrent,
            "async" => Mode::Async,
            "sim" => Mode::SimulatorView,
            _ => return None,
        })
    }
}

/// Everything stepping needs besides the state: host authority, the attack,
/// and the semantics mode.
#[derive(Clone, Debug)]
pub struct Semantics {
    pub env: HostEnvironment,
    pub attack: Attack,
    pub mode: Mode,
}

impl Semantics {
    pub fn new(env: HostEnvironment, attack: Attack, mode: Mode) -> Self {
        Semantics { env, attack, mode }
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        Semantics {
            env: self.env.clone(),
            attack: self.attack.clone(),
            mode,
        }
    }

    fn malicious(&self, host: &str) -> bool {
        self.env
            .classify(host, &self.attack)
            .map(|c| c == HostClass::Malicious)
            .unwrap_or(false)
    }
}

/// Total denotation of the fixed operator table. Every operator accepts any
/// values: booleans coerce to 0/1, unit to 0, and truthiness follows the
/// conditional rule (anything but `false` is true). Arithmetic wraps.
/// Opaque operands yield a deterministic opaque result.
pub fn eval_op(op: OpKind, args: &[Value]) -> Value {
    assert_eq!(args.len(), op.arity(), "operator arity");
    if args.iter().any(Value::is_opaque) {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        op.hash(&mut h);
        args.hash(&mut h);
        return Value::Opaque(h.finish());
    }
    fn int(v: Value) -> i64 {
        match v {
            Value::Int(i) => i,
            Value::Bool(true) => 1,
            Value::Bool(false) => 0,
            Value::Unit => 0,
            Value::Opaque(_) => unreachable!(),
        }
    }
    match op {
        OpKind::Add => Value::Int(int(args[0]).wrapping_add(int(args[1]))),
        OpKind::Sub => Value::Int(int(args[0]).wrapping_sub(int(args[1]))),
        OpKind::Mul => Value::Int(int(args[0]).wrapping_mul(int(args[1]))),
        OpKind::Lt => Value::Bool(int(args[0]) < int(args[1])),
        OpKind::Eq => Value::Bool(args[0] == args[1]),
        OpKind::And => Value::Bool(args[0].truthy() && args[1].truthy()),
        OpKind::Or => Value::Bool(args[0].truthy() || args[1].truthy()),
        OpKind::Not => Value::Bool(!args[0].truthy()),
    }
}

/// Fine-grained classification of what a step does, used by simulators to
/// map actions between semantic modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LetTag {
    /// Pure computation: atomics and operators.
    Pure,
    /// A downgrade stepping internally under the configured attack.
    DowngradeSkip,
    /// Ideal declassify leaking to the adversary.
    DeclassifyLeak,
    /// Simulator-view declassify consuming the leaked value.
    DeclassifyAwait,
    /// Ideal endorse consuming an adversary value.
    EndorseMaul,
    /// Simulator-view endorse emitting its public value to the ideal side.
    EndorseEmit,
    /// Input consuming an environment value.
    InputEnv,
    /// Input at a malicious host (internal, returns unit).
    InputMalicious,
    /// Output to the environment.
    OutputEnv,
    /// Output at a malicious host (internal, returns unit).
    OutputMalicious,
    /// Receive suppressed by the ideal semantics.
    RecvIdeal,
    /// Receive consuming a buffered message.
    RecvReal,
    /// Send suppressed by the ideal semantics.
    SendIdeal,
    /// Send emitting a message.
    SendReal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepTag {
    Let(LetTag),
    MoveStep,
    SelectStep,
    PendingStep,
    IfStep,
    CaseStep,
}

/// How a head expression steps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprStep {
    /// Internal step at the evaluating host producing a value.
    Internal(Value),
    /// Emits a message; the expression evaluates to `result`.
    Emit { msg: Msg, result: Value },
    /// Consumes an input on `channel`; the expression evaluates to the
    /// received value when `bind_received`, and to `fixed` otherwise.
    Consume {
        channel: (Endpoint, Endpoint),
        bind_received: bool,
        fixed: Value,
    },
}

/// The single enabled step shape of a closed head expression at `at`, or
/// `None` when the expression still contains variables.
pub fn expr_step(sem: &Semantics, at: &Endpoint, expr: &Expr) -> Option<(ExprStep, LetTag)> {
    let value_of = |e: &crate::lang::ast::Atom| e.as_value();
    Some(match expr {
        Expr::Atomic(a) => (ExprStep::Internal(value_of(a)?), LetTag::Pure),
        Expr::Op(op, args) => {
            let vals: Option<Vec<Value>> = args.iter().map(value_of).collect();
            (ExprStep::Internal(eval_op(*op, &vals?)), LetTag::Pure)
        }
        Expr::Declassify { arg, from, to } => {
            let v = value_of(arg)?;
            let external = sem.attack.is_secret(from) && sem.attack.is_public(to);
            match (sem.mode, external) {
                (Mode::IdealSequential | Mode::IdealConcurrent, true) => (
                    ExprStep::Emit {
                        msg: Msg::new(at.clone(), Endpoint::Adversary, v),
                        result: v,
                    },
                    LetTag::DeclassifyLeak,
                ),
                (Mode::SimulatorView, true) => (
                    ExprStep::Consume {
                        channel: (at.clone(), Endpoint::Adversary),
                        bind_received: true,
                        fixed: Value::Unit,
                    },
                    LetTag::DeclassifyAwait,
                ),
                _ => (ExprStep::Internal(v), LetTag::DowngradeSkip),
            }
        }
        Expr::Endorse { arg, from, to } => {
            let v = value_of(arg)?;
            let external = sem.attack.is_untrusted(from) && sem.attack.is_trusted(to);
            match (sem.mode, external) {
                (Mode::IdealSequential | Mode::IdealConcurrent, true) => (
                    ExprStep::Consume {
                        channel: (Endpoint::Adversary, at.clone()),
                        bind_received: true,
                        fixed: Value::Unit,
                    },
                    LetTag::EndorseMaul,
                ),
                (Mode::SimulatorView, true) => (
                    ExprStep::Emit {
                        msg: Msg::new(Endpoint::Adversary, at.clone(), v),
                        result: v,
                    },
                    LetTag::EndorseEmit,
                ),
                _ => (ExprStep::Internal(v), LetTag::DowngradeSkip),
            }
        }
        Expr::Input(h) => {
            if sem.malicious(h) {
                (ExprStep::Internal(Value::Unit), LetTag::InputMalicious)
            } else {
                (
                    ExprStep::Consume {
                        channel: (Endpoint::Environment, Endpoint::host(h.clone())),
                        bind_received: true,
                        fixed: Value::Unit,
                    },
                    LetTag::InputEnv,
                )
            }
        }
        Expr::Output(arg, h) => {
            let v = value_of(arg)?;
            if sem.malicious(h) {
                (ExprStep::Internal(Value::Unit), LetTag::OutputMalicious)
            } else {
                (
                    ExprStep::Emit {
                        msg: Msg::new(Endpoint::host(h.clone()), Endpoint::Environment, v),
                        result: Value::Unit,
                    },
                    LetTag::OutputEnv,
                )
            }
        }
        Expr::Receive(peer) => {
            if sem.mode.ideal() {
                (ExprStep::Internal(Value::Unit), LetTag::RecvIdeal)
            } else {
                (
                    ExprStep::Consume {
                        channel: (Endpoint::host(peer.clone()), at.clone()),
                        bind_received: true,
                        fixed: Value::Unit,
                    },
                    LetTag::RecvReal,
                )
            }
        }
        Expr::Send(arg, peer) => {
            let v = value_of(arg)?;
            if sem.mode.ideal() {
                (ExprStep::Internal(Value::Unit), LetTag::SendIdeal)
            } else {
                (
                    ExprStep::Emit {
                        msg: Msg::new(at.clone(), Endpoint::host(peer.clone()), v),
                        result: Value::Unit,
                    },
                    LetTag::SendReal,
                )
            }
        }
    })
}

/// Spec-level enabledness set for a head expression: every `(action, value)`
/// pair, with input channels expanded over the given value domain.
pub fn enabled_expr_steps(
    sem: &Semantics,
    at: &Endpoint,
    expr: &Expr,
    domain: &[Value],
) -> Vec<(Action, Value)> {
    match expr_step(sem, at, expr).map(|(step, _)| step) {
        None => vec![],
        Some(ExprStep::Internal(v)) => vec![(Action::internal(at.clone()), v)],
        Some(ExprStep::Emit { msg, result }) => vec![(Action::output(msg), result)],
        Some(ExprStep::Consume {
            channel: (from, to),
            bind_received,
            fixed,
        }) => domain
            .iter()
            .map(|v| {
                (
                    Action::input(Msg::new(from.clone(), to.clone(), *v)),
                    if bind_received { *v } else { fixed },
                )
            })
            .collect(),
    }
}

/// Supplies candidate values for statement-level input consumption. Process
/// stepping probes buffer heads; statement-level tests probe a value domain.
pub trait InputProbe {
    fn values(&mut self, from: &Endpoint, to: &Endpoint) -> Vec<Value>;
}

/// Probes the head of each buffer queue and records queried-but-empty
/// channels (the inputs the statement is currently waiting for).
pub struct BufferProbe<'a> {
    pub buffer: &'a Buffer,
    pub wanted: BTreeSet<(Endpoint, Endpoint)>,
}

impl<'a> BufferProbe<'a> {
    pub fn new(buffer: &'a Buffer) -> Self {
        BufferProbe {
            buffer,
            wanted: BTreeSet::new(),
        }
    }
}

impl InputProbe for BufferProbe<'_> {
    fn values(&mut self, from: &Endpoint, to: &Endpoint) -> Vec<Value> {
        match self.buffer.front(from, to) {
            Some(v) => vec![v],
            None => {
                self.wanted.insert((from.clone(), to.clone()));
                vec![]
            }
        }
    }
}

/// Probes a fixed value domain on every channel.
pub struct DomainProbe<'a>(pub &'a [Value]);

impl InputProbe for DomainProbe<'_> {
    fn values(&mut self, _from: &Endpoint, _to: &Endpoint) -> Vec<Value> {
        self.0.to_vec()
    }
}

/// The endpoint a step is scheduled by. This is the action's actor except
/// for the simulator view's flipped downgrades, which are still performed
/// by the downgrading host even though their messages name the adversary.
pub fn sched_actor(action: &Action, tag: StepTag) -> Endpoint {
    match tag {
        StepTag::Let(LetTag::EndorseEmit) => action.msg.to.clone(),
        StepTag::Let(LetTag::DeclassifyAwait) => action.msg.from.clone(),
        _ => action.actor().clone(),
    }
}

/// All enabled statement steps. Sequential modes apply only head rules;
/// concurrent modes additionally delay past frames whose hosts the action's
/// actor avoids, and step both branches of an `if` when they agree on the
/// action.
pub fn stmt_steps(
    sem: &Semantics,
    s: &Stmt,
    probe: &mut dyn InputProbe,
) -> Vec<(Action, Stmt, StepTag)> {
    let mut steps = Vec::new();
    head_steps(sem, s, probe, &mut steps);
    if sem.mode.concurrent() {
        if let (Some(hosts), Some(cont)) = (s.frame_hosts(), s.frame_cont()) {
            for (action, next, tag) in stmt_steps(sem, cont, probe) {
                if !hosts.contains(&sched_actor(&action, tag)) {
                    steps.push((action.clone(), s.with_frame_cont(next), tag));
                }
            }
        }
        if let Stmt::If {
            loc,
            guard,
            then_branch,
            else_branch,
        } = s
        {
            let own = loc.endpoint();
            let left = stmt_steps(sem, then_branch, probe);
            let right = stmt_steps(sem, else_branch, probe);
            for (a1, t1, tag1) in &left {
                if sched_actor(a1, *tag1) == own {
                    continue;
                }
                for (a2, t2, _) in &right {
                    if a1 == a2 {
                        steps.push((
                            a1.clone(),
                            Stmt::If {
                                loc: loc.clone(),
                                guard: guard.clone(),
                                then_branch: Box::new(t1.clone()),
                                else_branch: Box::new(t2.clone()),
                            },
                            *tag1,
                        ));
                    }
                }
            }
        }
    }
    steps
}

fn head_steps(
    sem: &Semantics,
    s: &Stmt,
    probe: &mut dyn InputProbe,
    out: &mut Vec<(Action, Stmt, StepTag)>,
) {
    match s {
        Stmt::Let {
            var,
            loc,
            expr,
            cont,
        } => {
            let at = loc.endpoint();
            match expr_step(sem, &at, expr) {
                None => {}
                Some((ExprStep::Internal(v), tag)) => {
                    out.push((Action::internal(at), cont.subst(var, v), StepTag::Let(tag)));
                }
                Some((ExprStep::Emit { msg, result }, tag)) => {
                    out.push((
                        Action::output(msg),
                        cont.subst(var, result),
                        StepTag::Let(tag),
                    ));
                }
                Some((
                    ExprStep::Consume {
                        channel: (from, to),
                        bind_received,
                        fixed,
                    },
                    tag,
                )) => {
                    for v in probe.values(&from, &to) {
                        let bound = if bind_received { v } else { fixed };
                        out.push((
                            Action::input(Msg::new(from.clone(), to.clone(), v)),
                            cont.subst(var, bound),
                            StepTag::Let(tag),
                        ));
                    }
                }
            }
        }
        Stmt::Move {
            src,
            arg,
            dst,
            var,
            cont,
        } => {
            let Some(v) = arg.as_value() else { return };
            match sem.mode {
                Mode::IdealSequential | Mode::IdealConcurrent => out.push((
                    Action::internal(Endpoint::host(src.clone())),
                    cont.subst(var, v),
                    StepTag::MoveStep,
                )),
                Mode::RealSequential | Mode::RealConcurrent | Mode::SimulatorView => out.push((
                    Action::output(Msg::new(
                        Endpoint::host(src.clone()),
                        Endpoint::host(dst.clone()),
                        v,
                    )),
                    cont.subst(var, v),
                    StepTag::MoveStep,
                )),
                Mode::Async => out.push((
                    Action::output(Msg::new(
                        Endpoint::host(src.clone()),
                        Endpoint::host(dst.clone()),
                        v,
                    )),
                    Stmt::MovePending {
                        src: src.clone(),
                        val: v,
                        dst: dst.clone(),
                        var: var.clone(),
                        cont: cont.clone(),
                    },
                    StepTag::MoveStep,
                )),
            }
        }
        Stmt::MovePending {
            val,
            dst,
            var,
            cont,
            ..
        } => {
            out.push((
                Action::internal(Endpoint::host(dst.clone())),
                cont.subst(var, *val),
                StepTag::PendingStep,
            ));
        }
        Stmt::Select {
            src,
            val,
            dst,
            cont,
        } => match sem.mode {
            Mode::IdealSequential | Mode::IdealConcurrent => out.push((
                Action::internal(Endpoint::host(src.clone())),
                (**cont).clone(),
                StepTag::SelectStep,
            )),
            Mode::RealSequential | Mode::RealConcurrent | Mode::SimulatorView => out.push((
                Action::output(Msg::new(
                    Endpoint::host(src.clone()),
                    Endpoint::host(dst.clone()),
                    *val,
                )),
                (**cont).clone(),
                StepTag::SelectStep,
            )),
            Mode::Async => out.push((
                Action::output(Msg::new(
                    Endpoint::host(src.clone()),
                    Endpoint::host(dst.clone()),
                    *val,
                )),
                Stmt::SelectPending {
                    src: src.clone(),
                    val: *val,
                    dst: dst.clone(),
                    cont: cont.clone(),
                },
                StepTag::SelectStep,
            )),
        },
        Stmt::SelectPending { dst, cont, .. } => {
            out.push((
                Action::internal(Endpoint::host(dst.clone())),
                (**cont).clone(),
                StepTag::PendingStep,
            ));
        }
        Stmt::If {
            loc,
            guard,
            then_branch,
            else_branch,
        } => {
            if let Some(v) = guard.as_value() {
                debug_assert!(!v.is_opaque(), "control flow must be public");
                let branch = if v.truthy() { then_branch } else { else_branch };
                out.push((
                    Action::internal(loc.endpoint()),
                    (**branch).clone(),
                    StepTag::IfStep,
                ));
            }
        }
        Stmt::Case { src, dst, branches } => {
            let from = Endpoint::host(src.clone());
            let to = Endpoint::host(dst.clone());
            for v in probe.values(&from, &to) {
                if let Some((_, body)) = branches.iter().find(|(bv, _)| *bv == v) {
                    out.push((
                        Action::input(Msg::new(from.clone(), to.clone(), v)),
                        body.clone(),
                        StepTag::CaseStep,
                    ));
                }
            }
        }
        Stmt::Skip => {}
    }
}

/// Action enumeration without successor construction: same enabledness as
/// [`stmt_steps`] but cheap enough for menus. A unit test keeps the two in
/// agreement.
pub fn stmt_actions(
    sem: &Semantics,
    s: &Stmt,
    probe: &mut dyn InputProbe,
) -> Vec<(Action, StepTag)> {
    let mut out = Vec::new();
    head_actions(sem, s, probe, &mut out);
    if sem.mode.concurrent() {
        if let (Some(hosts), Some(cont)) = (s.frame_hosts(), s.frame_cont()) {
            for (action, tag) in stmt_actions(sem, cont, probe) {
                if !hosts.contains(&sched_actor(&action, tag)) {
                    out.push((action, tag));
                }
            }
        }
        if let Stmt::If {
            loc,
            then_branch,
            else_branch,
            ..
        } = s
        {
            let own = loc.endpoint();
            let left = stmt_actions(sem, then_branch, probe);
            let right = stmt_actions(sem, else_branch, probe);
            for (a1, tag1) in &left {
                if sched_actor(a1, *tag1) == own {
                    continue;
                }
                if right.iter().any(|(a2, _)| a1 == a2) {
                    out.push((a1.clone(), *tag1));
                }
            }
        }
    }
    out
}

fn head_actions(
    sem: &Semantics,
    s: &Stmt,
    probe: &mut dyn InputProbe,
    out: &mut Vec<(Action, StepTag)>,
) {
    match s {
        Stmt::Let { loc, expr, .. } => {
            let at = loc.endpoint();
            match expr_step(sem, &at, expr) {
                None => {}
                Some((ExprStep::Internal(_), tag)) => {
                    out.push((Action::internal(at), StepTag::Let(tag)));
                }
                Some((ExprStep::Emit { msg, .. }, tag)) => {
                    out.push((Action::output(msg), StepTag::Let(tag)));
                }
                Some((
                    ExprStep::Consume {
                        channel: (from, to),
                        ..
                    },
                    tag,
                )) => {
                    for v in probe.values(&from, &to) {
                        out.push((
                            Action::input(Msg::new(from.clone(), to.clone(), v)),
                            StepTag::Let(tag),
                        ));
                    }
                }
            }
        }
        Stmt::Move { src, arg, dst, .. } => {
            let Some(v) = arg.as_value() else { return };
            let action = if sem.mode.ideal() {
                Action::internal(Endpoint::host(src.clone()))
            } else {
                Action::output(Msg::new(
                    Endpoint::host(src.clone()),
                    Endpoint::host(dst.clone()),
                    v,
                ))
            };
            out.push((action, StepTag::MoveStep));
        }
        Stmt::MovePending { dst, .. } | Stmt::SelectPending { dst, .. } => {
            out.push((
                Action::internal(Endpoint::host(dst.clone())),
                StepTag::PendingStep,
            ));
        }
        Stmt::Select { src, val, dst, .. } => {
            let action = if sem.mode.ideal() {
                Action::internal(Endpoint::host(src.clone()))
            } else {
                Action::output(Msg::new(
                    Endpoint::host(src.clone()),
                    Endpoint::host(dst.clone()),
                    *val,
                ))
            };
            out.push((action, StepTag::SelectStep));
        }
        Stmt::If { loc, guard, .. } => {
            if guard.as_value().is_some() {
                out.push((Action::internal(loc.endpoint()), StepTag::IfStep));
            }
        }
        Stmt::Case { src, dst, branches } => {
            let from = Endpoint::host(src.clone());
            let to = Endpoint::host(dst.clone());
            for v in probe.values(&from, &to) {
                if branches.iter().any(|(bv, _)| *bv == v) {
                    out.push((
                        Action::input(Msg::new(from.clone(), to.clone(), v)),
                        StepTag::CaseStep,
                    ));
                }
            }
        }
        Stmt::Skip => {}
    }
}

/// Spec-level enabledness set for statements, inputs expanded over a domain.
pub fn enabled_stmt_steps(sem: &Semantics, s: &Stmt, domain: &[Value]) -> Vec<(Action, Stmt)> {
    stmt_steps(sem, s, &mut DomainProbe(domain))
        .into_iter()
        .map(|(a, s, _)| (a, s))
        .collect()
}

/// A process: a set of owned endpoints, a buffer, and a statement.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ProcessState {
    pub hosts: BTreeSet<Endpoint>,
    pub buffer: Buffer,
    pub stmt: Stmt,
}

impl ProcessState {
    pub fn new(hosts: BTreeSet<Endpoint>, buffer: Buffer, stmt: Stmt) -> Self {
        ProcessState {
            hosts,
            buffer,
            stmt,
        }
    }

    /// Input is total: relevant messages append to the buffer, everything
    /// else is discarded.
    pub fn input(&self, msg: &Msg) -> ProcessState {
        let relevant = !self.hosts.contains(&msg.from) && self.hosts.contains(&msg.to);
        if !relevant {
            return self.clone();
        }
        let mut next = self.clone();
        next.buffer
            .push(msg.from.clone(), msg.to.clone(), msg.value);
        next
    }

    /// All enabled output and internal steps. Statement-level inputs are
    /// satisfied from the buffer and surface as internal steps of the
    /// receiving endpoint; the consumed message is reported alongside.
    pub fn enabled_steps(&self, sem: &Semantics) -> Vec<ProcStep> {
        let mut probe = BufferProbe::new(&self.buffer);
        let steps = stmt_steps(sem, &self.stmt, &mut probe);
        let mut out = Vec::new();
        for (action, stmt, tag) in steps {
            match action.dir {
                Dir::Out => {
                    out.push(ProcStep {
                        action,
                        next: ProcessState {
                            hosts: self.hosts.clone(),
                            buffer: self.buffer.clone(),
                            stmt,
                        },
                        tag,
                        consumed: None,
                    });
                }
                Dir::In => {
                    let mut buffer = self.buffer.clone();
                    let popped = buffer.pop(&action.msg.from, &action.msg.to);
                    debug_assert_eq!(popped, Some(action.msg.value), "probe matches buffer head");
                    out.push(ProcStep {
                        action: Action::internal(sched_actor(&action, tag)),
                        next: ProcessState {
                            hosts: self.hosts.clone(),
                            buffer,
                            stmt,
                        },
                        tag,
                        consumed: Some(action.msg),
                    });
                }
            }
        }
        debug_assert!(per_actor_unique(&out), "per-channel output determinism");
        out
    }

    /// Back-compatible view of [`ProcessState::enabled_steps`].
    pub fn enabled_outputs(&self, sem: &Semantics) -> Vec<(Action, ProcessState)> {
        self.enabled_steps(sem)
            .into_iter()
            .map(|s| (s.action, s.next))
            .collect()
    }

    /// Feeds a statement-level input directly to the statement, bypassing
    /// the buffer. Used by simulators to deliver downgrade values.
    pub fn feed_stmt_input(&self, sem: &Semantics, msg: &Msg) -> Option<ProcessState> {
        struct ExactProbe<'a>(&'a Msg);
        impl InputProbe for ExactProbe<'_> {
            fn values(&mut self, from: &Endpoint, to: &Endpoint) -> Vec<Value> {
                if *from == self.0.from && *to == self.0.to {
                    vec![self.0.value]
                } else {
                    vec![]
                }
            }
        }
        let steps = stmt_steps(sem, &self.stmt, &mut ExactProbe(msg));
        steps
            .into_iter()
            .find(|(a, _, _)| a.dir == Dir::In && a.msg == *msg)
            .map(|(_, stmt, _)| ProcessState {
                hosts: self.hosts.clone(),
                buffer: self.buffer.clone(),
                stmt,
            })
    }

    /// Enabled actions (with scheduling actors applied) and the channels the
    /// statement is waiting on, without building successor states.
    pub fn enabled_surface(
        &self,
        sem: &Semantics,
    ) -> (Vec<(Action, StepTag)>, BTreeSet<(Endpoint, Endpoint)>) {
        let mut probe = BufferProbe::new(&self.buffer);
        let actions = stmt_actions(sem, &self.stmt, &mut probe)
            .into_iter()
            .map(|(a, tag)| match a.dir {
                Dir::Out => (a, tag),
                Dir::In => (Action::internal(sched_actor(&a, tag)), tag),
            })
            .collect();
        (actions, probe.wanted)
    }

    /// Channels whose next message the statement is currently waiting for.
    pub fn wanted_channels(&self, sem: &Semantics) -> BTreeSet<(Endpoint, Endpoint)> {
        self.enabled_surface(sem).1
    }

    pub fn is_done(&self) -> bool {
        matches!(self.stmt, Stmt::Skip)
    }
}

/// One enabled process step: the visible action, the successor, what kind
/// of statement stepped, and the buffered message consumed, if any.
#[derive(Clone, Debug)]
pub struct ProcStep {
    pub action: Action,
    pub next: ProcessState,
    pub tag: StepTag,
    pub consumed: Option<Msg>,
}

/// One enabled configuration step.
#[derive(Clone, Debug)]
pub struct ConfigStep {
    pub index: usize,
    pub action: Action,
    pub next: Configuration,
    pub tag: StepTag,
    pub consumed: Option<Msg>,
}

fn per_actor_unique(steps: &[ProcStep]) -> bool {
    let mut seen: BTreeMap<Endpoint, &Msg> = BTreeMap::new();
    for step in steps {
        if let Some(prev) = seen.insert(step.action.actor().clone(), &step.action.msg) {
            if *prev != step.action.msg {
                return false;
            }
        }
    }
    true
}

impl fmt::Debug for ProcessState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "process {:?} {:?}\n{:?}", self.hosts, self.buffer, self.stmt)
    }
}

/// Applies an input action to a process (always defined).
pub fn step_process(p: &ProcessState, msg: &Msg) -> ProcessState {
    p.input(msg)
}

/// Spec-level alias for the output-enabledness set of a process.
pub fn enabled_process_outputs(sem: &Semantics, p: &ProcessState) -> Vec<(Action, ProcessState)> {
    p.enabled_outputs(sem)
}

/// A parallel composition of processes with pairwise-disjoint hosts.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub processes: Vec<ProcessState>,
}

impl Configuration {
    pub fn new(processes: Vec<ProcessState>) -> Self {
        let mut seen: BTreeSet<&Endpoint> = BTreeSet::new();
        for p in &processes {
            for h in &p.hosts {
                assert!(seen.insert(h), "duplicate host {h} in configuration");
            }
        }
        Configuration { processes }
    }

    /// Config-Input: every process inputs the message.
    pub fn input(&self, msg: &Msg) -> Configuration {
        Configuration {
            processes: self.processes.iter().map(|p| p.input(msg)).collect(),
        }
    }

    /// All enabled steps across the composition, tagged with the emitting
    /// process index.
    pub fn enabled_steps(&self, sem: &Semantics) -> Vec<ConfigStep> {
        let mut out = Vec::new();
        for (i, p) in self.processes.iter().enumerate() {
            for step in p.enabled_steps(sem) {
                let mut processes = Vec::with_capacity(self.processes.len());
                for (j, q) in self.processes.iter().enumerate() {
                    if j == i {
                        processes.push(step.next.clone());
                    } else {
                        processes.push(q.input(&step.action.msg));
                    }
                }
                out.push(ConfigStep {
                    index: i,
                    action: step.action,
                    next: Configuration { processes },
                    tag: step.tag,
                    consumed: step.consumed,
                });
            }
        }
        out
    }

    /// Back-compatible view of [`Configuration::enabled_steps`].
    pub fn enabled_outputs(&self, sem: &Semantics) -> Vec<(usize, Action, Configuration)> {
        self.enabled_steps(sem)
            .into_iter()
            .map(|s| (s.index, s.action, s.next))
            .collect()
    }

    /// The unique enabled step whose actor is `actor`.
    pub fn step_at(&self, sem: &Semantics, actor: &Endpoint) -> Option<ConfigStep> {
        self.enabled_steps(sem)
            .into_iter()
            .find(|s| s.action.actor() == actor)
    }

    /// Fires the unique enabled output whose actor is `actor`.
    pub fn output_at(&self, sem: &Semantics, actor: &Endpoint) -> Option<(Action, Configuration)> {
        self.step_at(sem, actor).map(|s| (s.action, s.next))
    }

    /// Replaces an opaque placeholder with the concrete value it stood for,
    /// everywhere in the configuration. Simulator views call this when a
    /// declassify reveals data their redacted inputs hid.
    pub fn substitute_opaque(&self, tag: u64, value: Value) -> Configuration {
        let processes = self
            .processes
            .iter()
            .map(|p| {
                let mut buffer = p.buffer.clone();
                buffer.substitute_opaque(tag, value);
                ProcessState {
                    hosts: p.hosts.clone(),
                    buffer,
                    stmt: substitute_opaque_stmt(&p.stmt, tag, value),
                }
            })
            .collect();
        Configuration { processes }
    }

    /// Delivers a statement-level input directly to whichever process can
    /// consume it, bypassing buffers.
    pub fn feed_stmt_input(&self, sem: &Semantics, msg: &Msg) -> Option<Configuration> {
        for (i, p) in self.processes.iter().enumerate() {
            if let Some(next) = p.feed_stmt_input(sem, msg) {
                let mut processes = self.processes.clone();
                processes[i] = next;
                return Some(Configuration { processes });
            }
        }
        None
    }

    pub fn wanted_channels(&self, sem: &Semantics) -> BTreeSet<(Endpoint, Endpoint)> {
        self.processes
            .iter()
            .flat_map(|p| p.wanted_channels(sem))
            .collect()
    }

    pub fn is_done(&self) -> bool {
        self.processes.iter().all(|p| p.is_done())
    }

    pub fn total_stmts(&self) -> usize {
        self.processes.iter().map(|p| p.stmt.size()).sum()
    }

    pub fn buffered(&self) -> usize {
        self.processes.iter().map(|p| p.buffer.total_len()).sum()
    }

    pub fn state_key(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.processes.hash(&mut h);
        h.finish()
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.processes {
            writeln!(f, "{p:?}")?;
        }
        Ok(())
    }
}

fn substitute_opaque_stmt(s: &Stmt, tag: u64, value: Value) -> Stmt {
    use crate::lang::ast::Atom;
    let fix_atom = |a: &Atom| match a {
        Atom::Val(Value::Opaque(t)) if *t == tag => Atom::Val(value),
        other => other.clone(),
    };
    let fix_val = |v: &Value| if *v == Value::Opaque(tag) { value } else { *v };
    match s {
        Stmt::Let {
            var,
            loc,
            expr,
            cont,
        } => {
            let mut expr = expr.clone();
            for a in expr.atoms_mut() {
                *a = fix_atom(a);
            }
            Stmt::Let {
                var: var.clone(),
                loc: loc.clone(),
                expr,
                cont: Box::new(substitute_opaque_stmt(cont, tag, value)),
            }
        }
        Stmt::Move {
            src,
            arg,
            dst,
            var,
            cont,
        } => Stmt::Move {
            src: src.clone(),
            arg: fix_atom(arg),
            dst: dst.clone(),
            var: var.clone(),
            cont: Box::new(substitute_opaque_stmt(cont, tag, value)),
        },
        Stmt::MovePending {
            src,
            val,
            dst,
            var,
            cont,
        } => Stmt::MovePending {
            src: src.clone(),
            val: fix_val(val),
            dst: dst.clone(),
            var: var.clone(),
            cont: Box::new(substitute_opaque_stmt(cont, tag, value)),
        },
        Stmt::Select {
            src,
            val,
            dst,
            cont,
        } => Stmt::Select {
            src: src.clone(),
            val: fix_val(val),
            dst: dst.clone(),
            cont: Box::new(substitute_opaque_stmt(cont, tag, value)),
        },
        Stmt::SelectPending {
            src,
            val,
            dst,
            cont,
        } => Stmt::SelectPending {
            src: src.clone(),
            val: fix_val(val),
            dst: dst.clone(),
            cont: Box::new(substitute_opaque_stmt(cont, tag, value)),
        },
        Stmt::If {
            loc,
            guard,
            then_branch,
            else_branch,
        } => Stmt::If {
            loc: loc.clone(),
            guard: fix_atom(guard),
            then_branch: Box::new(substitute_opaque_stmt(then_branch, tag, value)),
            else_branch: Box::new(substitute_opaque_stmt(else_branch, tag, value)),
        },
        Stmt::Case { src, dst, branches } => Stmt::Case {
            src: src.clone(),
            dst: dst.clone(),
            branches: branches
                .iter()
                .map(|(v, b)| (*v, substitute_opaque_stmt(b, tag, value)))
                .collect(),
        },
        Stmt::Skip => Stmt::Skip,
    }
}

/// Builds the single-process configuration of a source program or
/// choreography: the process owns every declared host (and the ideal host
/// for source programs).
pub fn program_config(env: &HostEnvironment, stmt: &Stmt, include_ideal: bool) -> Configuration {
    let mut hosts: BTreeSet<Endpoint> = env
        .host_names()
        .map(|h| Endpoint::host(h.clone()))
        .collect();
    if include_ideal {
        hosts.insert(Endpoint::Ideal);
    }
    Configuration::new(vec![ProcessState::new(hosts, Buffer::new(), stmt.clone())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_stmts;
    use crate::testutil::mill_env;

    fn sem(mode: Mode) -> Semantics {
        Semantics::new(mill_env(), Attack::empty(), mode)
    }

    fn sem_attack(mode: Mode, pub_atoms: &[&str], untrusted: &[&str]) -> Semantics {
        let attack = Attack::new(
            pub_atoms.iter().map(|s| s.to_string()).collect(),
            untrusted.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap();
        Semantics::new(mill_env(), attack, Mode::IdealSequential)
    }

    const DOMAIN: [Value; 6] = [
        Value::Unit,
        Value::Bool(true),
        Value::Bool(false),
        Value::Int(0),
        Value::Int(1),
        Value::Int(2),
    ];

    #[test]
    fn eval_op_examples() {
        assert_eq!(
            eval_op(OpKind::Lt, &[Value::Int(5), Value::Int(7)]),
            Value::Bool(true)
        );
        for v in [Value::Int(3), Value::Int(-1)] {
            assert_eq!(eval_op(OpKind::Add, &[Value::Int(0), v]), v);
        }
        assert_eq!(
            eval_op(OpKind::And, &[Value::Bool(true), Value::Bool(false)]),
            Value::Bool(false)
        );
        // totalization coerces
        assert_eq!(
            eval_op(OpKind::Add, &[Value::Unit, Value::Bool(true)]),
            Value::Int(1)
        );
        // opaque operands stay opaque, deterministically
        let a = eval_op(OpKind::Add, &[Value::Opaque(1), Value::Int(1)]);
        let b = eval_op(OpKind::Add, &[Value::Opaque(1), Value::Int(1)]);
        assert_eq!(a, b);
        assert!(a.is_opaque());
    }

    #[test]
    fn ideal_input_enumerates_env_values() {
        let s = sem(Mode::IdealSequential);
        let steps = enabled_expr_steps(
            &s,
            &Endpoint::host("alice"),
            &Expr::Input("alice".into()),
            &DOMAIN,
        );
        assert_eq!(steps.len(), DOMAIN.len());
        for (action, v) in steps {
            assert_eq!(action.dir, Dir::In);
            assert_eq!(action.msg.from, Endpoint::Environment);
            assert_eq!(action.msg.value, v);
        }
    }

    #[test]
    fn malicious_io_steps_internally() {
        let s = sem_attack(Mode::IdealSequential, &["A"], &["A"]);
        let steps = enabled_expr_steps(
            &s,
            &Endpoint::host("alice"),
            &Expr::Output(crate::lang::Atom::Val(Value::Int(1)), "alice".into()),
            &DOMAIN,
        );
        assert_eq!(steps.len(), 1);
        assert!(steps[0].0.is_internal());
        assert_eq!(steps[0].1, Value::Unit);
    }

    #[test]
    fn real_downgrades_are_internal() {
        let mut s = sem_attack(Mode::RealConcurrent, &["A"], &["A"]);
        s.mode = Mode::RealConcurrent;
        let decl = Expr::Declassify {
            arg: crate::lang::Atom::Val(Value::Int(7)),
            from: crate::lang::parse_label("<A & B, A & B>").unwrap(),
            to: crate::lang::parse_label("<A | B, A & B>").unwrap(),
        };
        let steps = enabled_expr_steps(&s, &Endpoint::host("mpc"), &decl, &DOMAIN);
        assert_eq!(steps.len(), 1);
        assert!(steps[0].0.is_internal());
        assert_eq!(steps[0].1, Value::Int(7));
        // ideal mode leaks to the adversary instead
        let s = sem_attack(Mode::IdealSequential, &["A"], &["A"]);
        let steps = enabled_expr_steps(&s, &Endpoint::host("mpc"), &decl, &DOMAIN);
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].0.msg.to, Endpoint::Adversary);
        assert_eq!(steps[0].0.msg.value, Value::Int(7));
    }

    #[test]
    fn concurrent_mode_enables_nonblocking_sends() {
        // alice waits on input; bob's move can still fire concurrently
        let s = parse_stmts(
            "let x @ alice = input @ alice;\n\
             move bob.unit -> alice.y;\n",
        )
        .unwrap();
        let seq = sem(Mode::RealSequential);
        let conc = sem(Mode::RealConcurrent);
        let p = ProcessState::new(
            [Endpoint::host("alice"), Endpoint::host("bob")].into(),
            Buffer::new(),
            s,
        );
        // sequential: nothing enabled until env input arrives
        assert!(p.enabled_outputs(&seq).is_empty());
        let conc_steps = p.enabled_outputs(&conc);
        assert_eq!(conc_steps.len(), 1);
        assert_eq!(conc_steps[0].0.actor(), &Endpoint::host("bob"));
    }

    #[test]
    fn buffers_preserve_fifo_per_channel_and_reorder_across_channels() {
        let s = parse_stmts(
            "let x @ alice = input @ alice;\n\
             let y @ alice = input @ alice;\n",
        )
        .unwrap();
        let m = sem(Mode::IdealSequential);
        let p = ProcessState::new([Endpoint::host("alice")].into(), Buffer::new(), s);
        let p = p.input(&Msg::new(Endpoint::Environment, Endpoint::host("alice"), Value::Int(1)));
        let p = p.input(&Msg::new(Endpoint::Environment, Endpoint::host("alice"), Value::Int(2)));
        let (_, p) = p.enabled_outputs(&m)[0].clone();
        let (_, p) = p.enabled_outputs(&m)[0].clone();
        // x bound to 1, y to 2: program ends at Skip with empty buffer
        assert!(p.is_done());
        assert_eq!(p.buffer.total_len(), 0);
    }

    #[test]
    fn irrelevant_inputs_are_discarded() {
        let s = parse_stmts("let x @ alice = input @ alice;\n").unwrap();
        let p = ProcessState::new([Endpoint::host("alice")].into(), Buffer::new(), s);
        let q = p.input(&Msg::new(Endpoint::Environment, Endpoint::host("bob"), Value::Int(5)));
        assert_eq!(p, q);
        // input totality: any message, any state
        let r = p.input(&Msg::new(Endpoint::host("bob"), Endpoint::host("alice"), Value::Int(5)));
        assert_eq!(r.buffer.total_len(), 1);
    }

    #[test]
    fn config_output_is_input_by_the_rest() {
        // mpc sends to alice; bob's process discards, alice's buffers
        let alice = ProcessState::new(
            [Endpoint::host("alice")].into(),
            Buffer::new(),
            parse_stmts("let x1 @ alice = recv mpc;\n").unwrap(),
        );
        let bob = ProcessState::new(
            [Endpoint::host("bob")].into(),
            Buffer::new(),
            parse_stmts("let x2 @ bob = recv mpc;\n").unwrap(),
        );
        let mpc = ProcessState::new(
            [Endpoint::host("mpc")].into(),
            Buffer::new(),
            parse_stmts("let s @ mpc = send 9 -> alice;\n").unwrap(),
        );
        let c = Configuration::new(vec![alice, bob, mpc]);
        let m = sem(Mode::RealConcurrent);
        let steps = c.enabled_outputs(&m);
        assert_eq!(steps.len(), 1);
        let (_, action, next) = steps[0].clone();
        assert_eq!(action.msg.to, Endpoint::host("alice"));
        assert_eq!(
            next.processes[0]
                .buffer
                .front(&Endpoint::host("mpc"), &Endpoint::host("alice")),
            Some(Value::Int(9))
        );
        assert_eq!(next.processes[1].buffer.total_len(), 0);
        // now alice can consume it as an internal step
        let steps = next.enabled_outputs(&m);
        assert_eq!(steps.len(), 1);
        assert!(steps[0].1.is_internal());
        assert_eq!(steps[0].1.actor(), &Endpoint::host("alice"));
    }

    #[test]
    fn internal_determinism_on_enabled_actions() {
        let s = parse_stmts(
            "let a @ alice = input @ alice;\n\
             move alice.a -> mpc.a2;\n\
             let b @ bob = input @ bob;\n",
        )
        .unwrap();
        let m = sem(Mode::RealConcurrent);
        let p = program_config(&mill_env(), &s, false);
        let p = p.input(&Msg::new(Endpoint::Environment, Endpoint::host("alice"), Value::Int(1)));
        let steps = p.enabled_outputs(&m);
        let mut by_action: BTreeMap<String, u64> = BTreeMap::new();
        for (_, a, c) in &steps {
            let key = format!("{a}");
            if let Some(prev) = by_action.insert(key, c.state_key()) {
                assert_eq!(prev, c.state_key());
            }
        }
    }

    #[test]
    fn async_move_takes_two_steps() {
        let s = parse_stmts("move alice.5 -> bob.x;\nlet y @ bob = add(x, 1);\n").unwrap();
        let m = sem(Mode::Async);
        let p = program_config(&mill_env(), &s, false);
        let steps = p.enabled_outputs(&m);
        assert_eq!(steps.len(), 1);
        let (_, send, p) = steps[0].clone();
        assert_eq!(send.dir, Dir::Out);
        assert_eq!(send.msg.from, Endpoint::host("alice"));
        let steps = p.enabled_outputs(&m);
        assert_eq!(steps.len(), 1);
        let (_, recv, p) = steps[0].clone();
        assert!(recv.is_internal());
        assert_eq!(recv.actor(), &Endpoint::host("bob"));
        // the value arrived by substitution
        let steps = p.enabled_outputs(&m);
        assert_eq!(steps.len(), 1);
        assert!(p.processes[0].stmt.free_vars().is_empty());
    }

    #[test]
    fn pending_blocks_receiver_but_not_sender() {
        let s = parse_stmts(
            "move alice.5 -> bob.x;\n\
             let z @ alice = 1;\n",
        )
        .unwrap();
        let m = sem(Mode::Async);
        let p = program_config(&mill_env(), &s, false);
        let (_, _, p) = p.enabled_outputs(&m)[0].clone();
        // pending head: both the receiver's internal step and alice's next let
        let actors: BTreeSet<Endpoint> = p
            .enabled_outputs(&m)
            .into_iter()
            .map(|(_, a, _)| a.actor().clone())
            .collect();
        assert!(actors.contains(&Endpoint::host("alice")));
        assert!(actors.contains(&Endpoint::host("bob")));
    }

    #[test]
    fn if_delay_requires_matching_actions() {
        let s = parse_stmts(
            "if alice.true {\n\
               let x @ bob = input @ bob;\n\
             } else {\n\
               let y @ bob = input @ bob;\n\
             }\n",
        )
        .unwrap();
        let m = sem(Mode::IdealConcurrent);
        let p = program_config(&mill_env(), &s, false);
        let p = p.input(&Msg::new(Endpoint::Environment, Endpoint::host("bob"), Value::Int(2)));
        let actors: BTreeSet<Endpoint> = p
            .enabled_outputs(&m)
            .into_iter()
            .map(|(_, a, _)| a.actor().clone())
            .collect();
        // both the guard's internal step and bob's matching input are enabled
        assert_eq!(
            actors,
            [Endpoint::host("alice"), Endpoint::host("bob")].into()
        );
        // branches that disagree on the action do not delay
        let s2 = parse_stmts(
            "if alice.true {\n\
               let x @ bob = input @ bob;\n\
             } else {\n\
               let y @ bob = 1;\n\
             }\n",
        )
        .unwrap();
        let p2 = program_config(&mill_env(), &s2, false);
        let p2 = p2.input(&Msg::new(Endpoint::Environment, Endpoint::host("bob"), Value::Int(2)));
        let actors2: BTreeSet<Endpoint> = p2
            .enabled_outputs(&m)
            .into_iter()
            .map(|(_, a, _)| a.actor().clone())
            .collect();
        assert_eq!(actors2, [Endpoint::host("alice")].into());
    }

    #[test]
    fn case_consumes_matching_branch_only() {
        let s = parse_stmts(
            "case alice -> bob {\n\
               true => { let x @ bob = 1; }\n\
               false => { }\n\
             }\n",
        )
        .unwrap();
        let m = sem(Mode::RealConcurrent);
        let p = ProcessState::new([Endpoint::host("bob")].into(), Buffer::new(), s);
        assert!(p.enabled_outputs(&m).is_empty());
        assert_eq!(
            p.wanted_channels(&m),
            [(Endpoint::host("alice"), Endpoint::host("bob"))].into()
        );
        let p = p.input(&Msg::new(Endpoint::host("alice"), Endpoint::host("bob"), Value::Bool(false)));
        let steps = p.enabled_outputs(&m);
        assert_eq!(steps.len(), 1);
        assert!(steps[0].1.is_done());
        // unmatched head value blocks the case
        let q = ProcessState::new(
            [Endpoint::host("bob")].into(),
            Buffer::new(),
            parse_stmts("case alice -> bob { true => { } }\n").unwrap(),
        )
        .input(&Msg::new(Endpoint::host("alice"), Endpoint::host("bob"), Value::Int(3)));
        assert!(q.enabled_outputs(&m).is_empty());
    }
}
