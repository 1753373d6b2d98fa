//! Deterministic discrete-event execution of a validated system under a
//! SW/HW mapping.
//!
//! Control flows as tokens along scheduling connectors; data flows as
//! messages along interaction edges with zero transfer delay. Each firing
//! occupies its component for the cost time of its assigned kind. Of all
//! components able to fire, the one with the smallest `(ready time, id)`
//! goes next.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::behavior::{Behavior, BehaviorError, BehaviorRegistry, Invocation};
use crate::decimal::Decimal;
use crate::graph::{ConnectorKind, SystemModel};
use crate::model::{Direction, Kind, Message, PortRef};
use crate::tree::{self, Value};

pub const DEFAULT_STEP_LIMIT: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Mapping {
    pub assignment: BTreeMap<String, Kind>,
}

impl Mapping {
    /// Software wherever allowed; hardware-only components stay hardware.
    pub fn all_software(model: &SystemModel) -> Mapping {
        Self::preferring(model, Kind::Software)
    }

    /// Hardware wherever allowed.
    pub fn all_hardware_where_allowed(model: &SystemModel) -> Mapping {
        Self::preferring(model, Kind::Hardware)
    }

    fn preferring(model: &SystemModel, kind: Kind) -> Mapping {
        let assignment = model
            .components
            .values()
            .map(|c| (c.id.clone(), if c.allows(kind) { kind } else { kind.flipped() }))
            .collect();
        Mapping { assignment }
    }

    pub fn kind_of(&self, component: &str) -> Option<Kind> {
        self.assignment.get(component).copied()
    }

    pub fn with(&self, component: &str, kind: Kind) -> Mapping {
        let mut m = self.clone();
        m.assignment.insert(component.to_string(), kind);
        m
    }

    pub fn hardware_count(&self) -> usize {
        self.assignment.values().filter(|k| **k == Kind::Hardware).count()
    }

    pub fn check(&self, model: &SystemModel) -> Result<(), EngineError> {
        for (id, spec) in &model.components {
            match self.assignment.get(id) {
                None => return Err(EngineError::InvalidMapping(format!("component `{id}` is not mapped"))),
                Some(kind) if !spec.allows(*kind) => {
                    return Err(EngineError::KindNotAllowed { component: id.clone(), kind: *kind })
                }
                Some(_) => {}
            }
        }
        if let Some(extra) = self.assignment.keys().find(|id| !model.components.contains_key(*id)) {
            return Err(EngineError::InvalidMapping(format!("unknown component `{extra}`")));
        }
        Ok(())
    }

    /// One `component=SW|HW` line per component, sorted by id.
    pub fn to_lines(&self) -> String {
        self.assignment.iter().map(|(id, k)| format!("{id}={}\n", k.short())).collect()
    }

    /// Parses the [`Mapping::to_lines`] form. Blank lines and `#` comments
    /// are ignored.
    pub fn parse_lines(text: &str) -> Result<Mapping, EngineError> {
        let mut assignment = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |why: &str| EngineError::InvalidMapping(format!("line {}: {why}: {raw:?}", n + 1));
            let (id, kind) = line.split_once('=').ok_or_else(|| bad("expected `component=SW|HW`"))?;
            let kind: Kind = kind.trim().parse().map_err(|_| bad("unknown kind"))?;
            if assignment.insert(id.trim().to_string(), kind).is_some() {
                return Err(bad("component mapped twice"));
            }
        }
        Ok(Mapping { assignment })
    }
}

impl fmt::Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.assignment.iter().map(|(id, k)| format!("{id}={}", k.short())).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub seed: u64,
    pub step_limit: u64,
    pub mapping: Mapping,
}

impl SimConfig {
    pub fn new(mapping: Mapping) -> Self {
        SimConfig { seed: 0, step_limit: DEFAULT_STEP_LIMIT, mapping }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    ComponentStart,
    ComponentEnd,
    TokenMove,
    MessageTransfer,
    ChoiceTaken,
    SyncComplete,
    /// Fan-in conflict: several messages were visible on one input port.
    Warning,
}

impl EventKind {
    pub const ALL: [EventKind; 7] = [
        EventKind::ComponentStart,
        EventKind::ComponentEnd,
        EventKind::TokenMove,
        EventKind::MessageTransfer,
        EventKind::ChoiceTaken,
        EventKind::SyncComplete,
        EventKind::Warning,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EventKind::ComponentStart => "ComponentStart",
            EventKind::ComponentEnd => "ComponentEnd",
            EventKind::TokenMove => "TokenMove",
            EventKind::MessageTransfer => "MessageTransfer",
            EventKind::ChoiceTaken => "ChoiceTaken",
            EventKind::SyncComplete => "SyncComplete",
            EventKind::Warning => "Warning",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EventKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown event kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub time: Decimal,
    pub kind: EventKind,
    /// Component id, or connector id for control events.
    pub subject: String,
    /// Always an object.
    pub detail: Value,
}

impl Event {
    fn new(time: i64, kind: EventKind, subject: &str, detail: Vec<(&str, Value)>) -> Event {
        Event { time: Decimal::from_micros(time), kind, subject: subject.to_string(), detail: Value::object(detail) }
    }

    pub fn detail_str(&self, key: &str) -> Option<&str> {
        self.detail.get(key).and_then(Value::as_str)
    }

    /// `<time>\t<kind>\t<subject>\t<detail>`
    pub fn to_line(&self) -> String {
        format!("{}\t{}\t{}\t{}", self.time.to_fixed6(), self.kind, self.subject, self.detail.to_compact())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<Event>,
    /// Tokens still held per component at quiescence.
    pub final_state: BTreeMap<String, usize>,
    /// Last message emitted on each output port of each final component.
    pub outputs: BTreeMap<PortRef, Message>,
    pub sim_time: Decimal,
}

impl Trace {
    /// Number of `ComponentStart` events per component (zero entries omitted).
    pub fn firing_counts(&self) -> BTreeMap<String, u64> {
        let mut counts = BTreeMap::new();
        for e in self.events.iter().filter(|e| e.kind == EventKind::ComponentStart) {
            *counts.entry(e.subject.clone()).or_insert(0) += 1;
        }
        counts
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Lines,
    Structured,
}

impl FromStr for TraceFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lines" => Ok(TraceFormat::Lines),
            "structured" => Ok(TraceFormat::Structured),
            _ => Err(format!("unknown trace format `{s}` (expected lines or structured)")),
        }
    }
}

pub fn trace_export(trace: &Trace, format: TraceFormat) -> String {
    match format {
        TraceFormat::Lines => trace.events.iter().map(|e| e.to_line() + "\n").collect(),
        TraceFormat::Structured => {
            let events = trace
                .events
                .iter()
                .map(|e| {
                    Value::object([
                        ("time", Value::Num(e.time.to_fixed6())),
                        ("kind", Value::str(e.kind.name())),
                        ("subject", Value::str(&e.subject)),
                        ("detail", e.detail.clone()),
                    ])
                })
                .collect();
            let tokens = trace.final_state.iter().map(|(id, n)| (id.clone(), Value::num(n))).collect();
            Value::object([
                ("sim_time", Value::Num(trace.sim_time.to_fixed6())),
                ("final_tokens", Value::Object(tokens)),
                ("events", Value::List(events)),
            ])
            .to_pretty()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub message: String,
}

/// Reads back the `lines` export.
pub fn parse_trace_lines(text: &str) -> Result<Vec<Event>, TraceParseError> {
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let err = |message: String| TraceParseError { line: i + 1, message };
        let fields: Vec<&str> = line.splitn(4, '\t').collect();
        let [time, kind, subject, detail] = fields[..] else {
            return Err(err(format!("expected 4 tab-separated fields, found {}", fields.len())));
        };
        let time: Decimal = time.parse().map_err(|e| err(format!("time: {e}")))?;
        let kind: EventKind = kind.parse().map_err(err)?;
        let (root, errors) = tree::parse(detail);
        if let Some(e) = errors.first() {
            return Err(err(format!("detail: {}", e.message)));
        }
        let detail = root.map(|r| r.to_value()).ok_or_else(|| err("missing detail".into()))?;
        events.push(Event { time, kind, subject: subject.to_string(), detail });
    }
    Ok(events)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("invalid mapping: {0}")]
    InvalidMapping(String),
    #[error("component `{component}` may not be mapped to {kind}")]
    KindNotAllowed { component: String, kind: Kind },
    #[error("invalid initial input for `{port}`: {reason}")]
    InvalidInput { port: PortRef, reason: String },
    #[error("component `{component}` uses unknown behavior `{behavior}`")]
    UnknownBehavior { component: String, behavior: String },
    #[error("step limit of {limit} firings reached without quiescence")]
    StepLimitExceeded { limit: u64 },
    #[error("connector `{connector}`: no branch labelled {label:?} and no default")]
    GuardNoMatch { connector: String, label: String },
    #[error("connector `{connector}`: source did not emit on guard port `{port}`")]
    GuardNotEmitted { connector: String, port: PortRef },
    #[error("component `{component}` fired without a message on `{port}`")]
    MissingInput { component: String, port: String },
    #[error("component `{component}` emitted on undeclared output port `{port}`")]
    UndeclaredOutput { component: String, port: String },
    #[error("behavior of `{component}` failed: {message}")]
    BehaviorFailed { component: String, message: String },
}

impl EngineError {
    pub fn category(&self) -> &'static str {
        match self {
            EngineError::InvalidMapping(_) => "InvalidMapping",
            EngineError::KindNotAllowed { .. } => "KindNotAllowed",
            EngineError::InvalidInput { .. } => "InvalidInput",
            EngineError::UnknownBehavior { .. } => "UnknownBehavior",
            EngineError::StepLimitExceeded { .. } => "StepLimitExceeded",
            EngineError::GuardNoMatch { .. } => "GuardNoMatch",
            EngineError::GuardNotEmitted { .. } => "GuardNotEmitted",
            EngineError::MissingInput { .. } => "MissingInput",
            EngineError::UndeclaredOutput { .. } => "UndeclaredOutput",
            EngineError::BehaviorFailed { .. } => "BehaviorFailed",
        }
    }
}

/// Messages handed to [`Engine::new`], keyed by receiving input port.
pub type InitialInputs = BTreeMap<PortRef, Message>;

struct Pending {
    arrival: i64,
    sender: String,
    seq: u64,
    message: Message,
}

struct Slot {
    behavior: Arc<dyn Behavior>,
    kind: Kind,
    /// Token arrival times, ascending.
    tokens: VecDeque<i64>,
    inbox: BTreeMap<String, Vec<Pending>>,
    required: Vec<String>,
    busy_until: i64,
    state: Vec<u8>,
    firings: u64,
}

impl Slot {
    fn ready_time(&self) -> Option<i64> {
        let mut t = (*self.tokens.front()?).max(self.busy_until);
        for port in &self.required {
            t = t.max(self.inbox.get(port)?.iter().map(|p| p.arrival).min()?);
        }
        Some(t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Fired(Vec<Event>),
    Quiescent,
}

pub struct Engine<'m> {
    model: &'m SystemModel,
    config: SimConfig,
    slots: BTreeMap<String, Slot>,
    /// Per synchronization connector: delivery times per source, in order.
    sync_waiting: BTreeMap<usize, BTreeMap<String, VecDeque<i64>>>,
    events: Vec<Event>,
    outputs: BTreeMap<PortRef, Message>,
    total_firings: u64,
    seq: u64,
}

impl<'m> Engine<'m> {
    pub fn new(
        model: &'m SystemModel,
        registry: &BehaviorRegistry,
        config: SimConfig,
        inputs: &InitialInputs,
    ) -> Result<Engine<'m>, EngineError> {
        config.mapping.check(model)?;
        let mut slots = BTreeMap::new();
        for (id, spec) in &model.components {
            let behavior = registry.resolve(&spec.behavior).map_err(|_| EngineError::UnknownBehavior {
                component: id.clone(),
                behavior: spec.behavior.clone(),
            })?;
            let required = spec.inputs().filter(|p| behavior.requires(p)).map(|p| p.name.clone()).collect();
            slots.insert(
                id.clone(),
                Slot {
                    behavior,
                    kind: config.mapping.assignment[id],
                    tokens: VecDeque::new(),
                    inbox: BTreeMap::new(),
                    required,
                    busy_until: 0,
                    state: Vec::new(),
                    firings: 0,
                },
            );
        }
        let mut engine = Engine {
            model,
            config,
            slots,
            sync_waiting: BTreeMap::new(),
            events: Vec::new(),
            outputs: BTreeMap::new(),
            total_firings: 0,
            seq: 0,
        };
        for (port, message) in inputs {
            let invalid = |reason: &str| EngineError::InvalidInput { port: port.clone(), reason: reason.to_string() };
            let spec = model
                .component(&port.component)
                .and_then(|c| c.port(Direction::Input, &port.port))
                .ok_or_else(|| invalid("no such input port"))?;
            if spec.tag != message.tag {
                return Err(invalid(&format!("tag `{}` does not match port tag `{}`", message.tag, spec.tag)));
            }
            engine.deliver(port, 0, "", message.clone());
        }
        if let Some(slot) = engine.slots.get_mut(&model.spg.initial) {
            slot.tokens.push_back(0);
        }
        Ok(engine)
    }

    fn deliver(&mut self, to: &PortRef, arrival: i64, sender: &str, message: Message) {
        self.seq += 1;
        let pending = Pending { arrival, sender: sender.to_string(), seq: self.seq, message };
        if let Some(slot) = self.slots.get_mut(&to.component) {
            slot.inbox.entry(to.port.clone()).or_default().push(pending);
        }
    }

    fn give_token(&mut self, component: &str, time: i64) {
        if let Some(slot) = self.slots.get_mut(component) {
            let at = slot.tokens.partition_point(|t| *t <= time);
            slot.tokens.insert(at, time);
        }
    }

    /// The component that fires next and its start time.
    pub fn next_ready(&self) -> Option<(&str, Decimal)> {
        self.slots
            .iter()
            .filter_map(|(id, s)| s.ready_time().map(|t| (t, id)))
            .min()
            .map(|(t, id)| (id.as_str(), Decimal::from_micros(t)))
    }

    pub fn step(&mut self) -> Result<Step, EngineError> {
        let Some((id, start)) = self.next_ready().map(|(id, t)| (id.to_string(), t.micros())) else {
            return Ok(Step::Quiescent);
        };
        if self.total_firings >= self.config.step_limit {
            return Err(EngineError::StepLimitExceeded { limit: self.config.step_limit });
        }
        self.total_firings += 1;
        let mark = self.events.len();
        self.fire(&id, start)?;
        Ok(Step::Fired(self.events[mark..].to_vec()))
    }

    fn fire(&mut self, id: &str, start: i64) -> Result<(), EngineError> {
        let model = self.model;
        let spec = &model.components[id];
        let slot = self.slots.get_mut(id).expect("slot per component");
        slot.tokens.pop_front();

        let mut warnings = Vec::new();
        let mut inputs = BTreeMap::new();
        for (port, queue) in slot.inbox.iter_mut() {
            let (visible, later): (Vec<Pending>, Vec<Pending>) = queue.drain(..).partition(|p| p.arrival <= start);
            *queue = later;
            let count = visible.len();
            if let Some(winner) = visible.into_iter().max_by(|a, b| {
                (a.arrival, &a.sender, a.seq).cmp(&(b.arrival, &b.sender, b.seq))
            }) {
                if count > 1 {
                    warnings.push((port.clone(), count, winner.message.origin.to_string()));
                }
                inputs.insert(port.clone(), winner.message.payload);
            }
        }
        slot.inbox.retain(|_, q| !q.is_empty());

        let seed = mix_seed(self.config.seed, id, slot.firings);
        slot.firings += 1;
        let call = Invocation { component: spec, inputs: &inputs, state: &slot.state, seed };
        let outcome = slot.behavior.invoke(&call).map_err(|e| match e {
            BehaviorError::MissingInput(port) => EngineError::MissingInput { component: id.to_string(), port },
            BehaviorError::Failed(message) => EngineError::BehaviorFailed { component: id.to_string(), message },
        })?;
        if let Some(port) = outcome.outputs.keys().find(|p| spec.port(Direction::Output, p).is_none()) {
            return Err(EngineError::UndeclaredOutput { component: id.to_string(), port: port.clone() });
        }
        slot.state = outcome.state;
        let kind = slot.kind;
        let end = start + spec.costs.time(kind).micros();
        slot.busy_until = end;

        self.events.push(Event::new(start, EventKind::ComponentStart, id, vec![("impl", Value::str(kind.short()))]));
        for (port, count, winner) in warnings {
            self.events.push(Event::new(
                start,
                EventKind::Warning,
                id,
                vec![
                    ("port", Value::str(port)),
                    ("visible", Value::num(count)),
                    ("kept", Value::str(winner)),
                ],
            ));
        }
        self.events.push(Event::new(end, EventKind::ComponentEnd, id, vec![]));

        let is_final = model.spg.finals.contains(id);
        for port in spec.outputs() {
            let Some(payload) = outcome.outputs.get(&port.name) else { continue };
            let origin = PortRef::new(id, &port.name);
            let message = Message { tag: port.tag.clone(), payload: payload.clone(), origin: origin.clone() };
            for edge in model.edges_from(&origin) {
                self.events.push(Event::new(
                    end,
                    EventKind::MessageTransfer,
                    id,
                    vec![
                        ("from", Value::str(edge.from.to_string())),
                        ("to", Value::str(edge.to.to_string())),
                        ("tag", Value::str(port.tag.as_str())),
                        ("bytes", Value::num(payload.len())),
                    ],
                ));
                self.deliver(&edge.to, end, id, message.clone());
            }
            if is_final {
                self.outputs.insert(origin, message);
            }
        }

        for (index, conn) in model.spg.connectors.iter().enumerate() {
            if !conn.sources.iter().any(|s| s == id) {
                continue;
            }
            match conn.kind {
                ConnectorKind::Sequence | ConnectorKind::Parallel => {
                    for target in &conn.targets {
                        self.move_token(&conn.id, id, target, end);
                    }
                }
                ConnectorKind::ExclusiveChoice => {
                    let guard = conn.guard_port.as_ref().expect("validated xor has a guard port");
                    let label = outcome.outputs.get(&guard.port).ok_or_else(|| EngineError::GuardNotEmitted {
                        connector: conn.id.clone(),
                        port: guard.clone(),
                    })?;
                    let label = String::from_utf8_lossy(label).into_owned();
                    let target = conn
                        .targets
                        .iter()
                        .find(|t| conn.labels.get(*t) == Some(&label))
                        .or(conn.default_target.as_ref())
                        .ok_or_else(|| EngineError::GuardNoMatch { connector: conn.id.clone(), label: label.clone() })?
                        .clone();
                    self.events.push(Event::new(
                        end,
                        EventKind::ChoiceTaken,
                        &conn.id,
                        vec![("label", Value::str(label)), ("target", Value::str(&target))],
                    ));
                    self.move_token(&conn.id, id, &target, end);
                }
                ConnectorKind::Synchronization => {
                    let waiting = self.sync_waiting.entry(index).or_default();
                    waiting.entry(id.to_string()).or_default().push_back(end);
                    if conn.sources.iter().all(|s| waiting.get(s).is_some_and(|q| !q.is_empty())) {
                        let at = conn
                            .sources
                            .iter()
                            .map(|s| waiting.get_mut(s).and_then(VecDeque::pop_front).unwrap_or(0))
                            .max()
                            .unwrap_or(end);
                        let target = &conn.targets[0];
                        self.events.push(Event::new(
                            at,
                            EventKind::SyncComplete,
                            &conn.id,
                            vec![("target", Value::str(target))],
                        ));
                        self.move_token(&conn.id, &conn.sources.join("+"), target, at);
                    }
                }
            }
        }
        Ok(())
    }

    fn move_token(&mut self, connector: &str, from: &str, to: &str, time: i64) {
        self.events.push(Event::new(
            time,
            EventKind::TokenMove,
            connector,
            vec![("from", Value::str(from)), ("to", Value::str(to))],
        ));
        self.give_token(to, time);
    }

    pub fn finish(mut self) -> Trace {
        self.events.sort_by_key(|e| e.time);
        let sim_time = self.events.last().map(|e| e.time).unwrap_or_default();
        Trace {
            events: self.events,
            final_state: self.slots.iter().map(|(id, s)| (id.clone(), s.tokens.len())).collect(),
            outputs: self.outputs,
            sim_time,
        }
    }
}

/// Runs to quiescence.
pub fn run(
    model: &SystemModel,
    registry: &BehaviorRegistry,
    config: SimConfig,
    inputs: &InitialInputs,
) -> Result<Trace, EngineError> {
    let mut engine = Engine::new(model, registry, config, inputs)?;
    while let Step::Fired(_) = engine.step()? {}
    Ok(engine.finish())
}

/// Seed for one firing, derived from the run seed, the component and its
/// firing index (splitmix64 finalizer over an FNV-1a hash of the id).
fn mix_seed(seed: u64, component: &str, firing: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in component.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h ^ firing.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
