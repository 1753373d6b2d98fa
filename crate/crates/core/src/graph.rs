//! Scheduling-and-parallelism graph (control), interaction graph (data)
//! and the structural validation of a whole system.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::behavior::BehaviorRegistry;
use crate::model::{
    is_identifier, validate_component, ComponentError, ComponentSpec, DataTag, Direction, PortRef,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConnectorKind {
    Sequence,
    Parallel,
    ExclusiveChoice,
    Synchronization,
}

impl ConnectorKind {
    pub const ALL: [ConnectorKind; 4] = [
        ConnectorKind::Sequence,
        ConnectorKind::Parallel,
        ConnectorKind::ExclusiveChoice,
        ConnectorKind::Synchronization,
    ];

    /// Keyword used in system descriptions.
    pub fn keyword(self) -> &'static str {
        match self {
            ConnectorKind::Sequence => "seq",
            ConnectorKind::Parallel => "par",
            ConnectorKind::ExclusiveChoice => "xor",
            ConnectorKind::Synchronization => "sync",
        }
    }

    fn arity_ok(self, sources: usize, targets: usize) -> bool {
        match self {
            ConnectorKind::Sequence => sources == 1 && targets == 1,
            ConnectorKind::Parallel | ConnectorKind::ExclusiveChoice => sources == 1 && targets >= 2,
            ConnectorKind::Synchronization => sources >= 2 && targets == 1,
        }
    }
}

impl fmt::Display for ConnectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConnectorKind::Sequence => "Sequence",
            ConnectorKind::Parallel => "Parallel",
            ConnectorKind::ExclusiveChoice => "ExclusiveChoice",
            ConnectorKind::Synchronization => "Synchronization",
        })
    }
}

impl FromStr for ConnectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConnectorKind::ALL
            .into_iter()
            .find(|k| k.keyword() == s)
            .ok_or_else(|| format!("unknown connector kind `{s}` (expected seq, par, xor or sync)"))
    }
}

/// One control connector. `sources`/`targets` encode the transition
/// relation: firing the sources moves tokens to the targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchedulingConnector {
    pub id: String,
    pub kind: ConnectorKind,
    pub sources: Vec<String>,
    pub targets: Vec<String>,
    /// ExclusiveChoice only: output port of the source carrying the label.
    pub guard_port: Option<PortRef>,
    /// ExclusiveChoice only: target id → branch label. Empty otherwise.
    pub labels: BTreeMap<String, String>,
    /// ExclusiveChoice only: taken when no label matches.
    pub default_target: Option<String>,
}

impl SchedulingConnector {
    pub fn new(id: impl Into<String>, kind: ConnectorKind, sources: &[&str], targets: &[&str]) -> Self {
        SchedulingConnector {
            id: id.into(),
            kind,
            sources: sources.iter().map(|s| s.to_string()).collect(),
            targets: targets.iter().map(|s| s.to_string()).collect(),
            guard_port: None,
            labels: BTreeMap::new(),
            default_target: None,
        }
    }

    pub fn seq(id: &str, from: &str, to: &str) -> Self {
        Self::new(id, ConnectorKind::Sequence, &[from], &[to])
    }

    pub fn par(id: &str, from: &str, to: &[&str]) -> Self {
        Self::new(id, ConnectorKind::Parallel, &[from], to)
    }

    pub fn sync(id: &str, from: &[&str], to: &str) -> Self {
        Self::new(id, ConnectorKind::Synchronization, from, &[to])
    }

    /// ExclusiveChoice with `(target, label)` branches guarded by `guard`.
    pub fn xor(id: &str, from: &str, guard_port: &str, branches: &[(&str, &str)]) -> Self {
        let mut c = Self::new(
            id,
            ConnectorKind::ExclusiveChoice,
            &[from],
            &branches.iter().map(|(t, _)| *t).collect::<Vec<_>>(),
        );
        c.guard_port = Some(PortRef::new(from, guard_port));
        c.labels = branches.iter().map(|(t, l)| (t.to_string(), l.to_string())).collect();
        c
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchedulingGraph {
    pub fsc: BTreeSet<String>,
    pub connectors: Vec<SchedulingConnector>,
    pub initial: String,
    pub finals: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InteractionEdge {
    pub from: PortRef,
    pub to: PortRef,
}

impl InteractionEdge {
    pub fn new(from: (&str, &str), to: (&str, &str)) -> Self {
        InteractionEdge { from: PortRef::new(from.0, from.1), to: PortRef::new(to.0, to.1) }
    }
}

impl fmt::Display for InteractionEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.from, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InteractionGraph {
    pub edges: Vec<InteractionEdge>,
}

/// A complete mixed-system description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemModel {
    pub name: String,
    pub components: BTreeMap<String, ComponentSpec>,
    pub spg: SchedulingGraph,
    pub ig: InteractionGraph,
}

impl SystemModel {
    pub fn component(&self, id: &str) -> Option<&ComponentSpec> {
        self.components.get(id)
    }

    /// Ids of components allowed both kinds, in id order.
    pub fn free_components(&self) -> Vec<&str> {
        self.components.values().filter(|c| c.is_dual()).map(|c| c.id.as_str()).collect()
    }

    /// Edges leaving `port`, in declaration order.
    pub fn edges_from<'a>(&'a self, port: &'a PortRef) -> impl Iterator<Item = &'a InteractionEdge> + 'a {
        self.ig.edges.iter().filter(move |e| &e.from == port)
    }
}

/// Where in a model an error sits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Site {
    Model,
    Component(String),
    Port { component: String, direction: Direction, port: String },
    Connector(usize),
    Edge(usize),
    Initial,
    Finals,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("{0}")]
    Component(ComponentError),
    #[error("component `{id}` is not consistently declared in the component set")]
    FscMismatch { id: String },
    #[error("unknown component `{id}`")]
    UnknownComponent { site: Site, id: String },
    #[error("edge {edge} references unknown {direction} port `{end}`")]
    UnknownPort { edge: usize, direction: Direction, end: PortRef },
    #[error("connector id {id:?} is not a valid identifier")]
    InvalidIdentifier { index: usize, id: String },
    #[error("connector id `{id}` is declared more than once")]
    DuplicateConnector { index: usize, id: String },
    #[error("{kind} connector `{connector}` has {sources} source(s) and {targets} target(s)")]
    ArityViolation { index: usize, connector: String, kind: ConnectorKind, sources: usize, targets: usize },
    #[error("connector `{connector}` lists `{id}` more than once")]
    DuplicateEndpoint { index: usize, connector: String, id: String },
    #[error("connector `{connector}`: {reason}")]
    DanglingGuard { index: usize, connector: String, reason: String },
    #[error("connector `{connector}` has no branch label for target `{target}`")]
    MissingLabel { index: usize, connector: String, target: String },
    #[error("connector `{connector}` labels `{target}`, which is not one of its targets")]
    StrayLabel { index: usize, connector: String, target: String },
    #[error("connector `{connector}` uses branch label {label:?} more than once")]
    DuplicateLabel { index: usize, connector: String, label: String },
    #[error("connector `{connector}` is not an exclusive choice but sets `{field}`")]
    MisplacedChoiceField { index: usize, connector: String, field: &'static str },
    #[error("connector `{connector}` default `{target}` is not one of its targets")]
    InvalidDefault { index: usize, connector: String, target: String },
    #[error("connector `{connector}` targets the initial component")]
    InitialHasIncoming { index: usize, connector: String },
    #[error("component `{id}` is not the target of any connector")]
    NoIncoming { id: String },
    #[error("the set of final components is empty")]
    EmptyFinals,
    #[error("edge {edge}: expected tag \"{expected}\", found \"{found}\"")]
    TagMismatch { edge: usize, expected: DataTag, found: DataTag },
    #[error("edge {edge} duplicates edge {first}")]
    DuplicateEdge { edge: usize, first: usize },
    #[error("component `{id}` is unreachable from the initial component")]
    Unreachable { id: String },
    #[error("no final component is reachable from `{id}`")]
    NoPathToFinal { id: String },
    #[error("required input `{id}.{port}` has no feeding edge")]
    UnfedInput { id: String, port: String },
}

impl ValidationError {
    pub fn category(&self) -> &'static str {
        use ValidationError::*;
        match self {
            Component(e) => e.category(),
            FscMismatch { .. } => "FscMismatch",
            UnknownComponent { .. } => "UnknownComponent",
            UnknownPort { .. } => "UnknownPort",
            InvalidIdentifier { .. } => "InvalidIdentifier",
            DuplicateConnector { .. } => "DuplicateConnector",
            ArityViolation { .. } => "ArityViolation",
            DuplicateEndpoint { .. } => "DuplicateEndpoint",
            DanglingGuard { .. } => "DanglingGuard",
            MissingLabel { .. } => "MissingLabel",
            StrayLabel { .. } => "StrayLabel",
            DuplicateLabel { .. } => "DuplicateLabel",
            MisplacedChoiceField { .. } => "MisplacedChoiceField",
            InvalidDefault { .. } => "InvalidDefault",
            InitialHasIncoming { .. } => "InitialHasIncoming",
            NoIncoming { .. } => "NoIncoming",
            EmptyFinals => "EmptyFinals",
            TagMismatch { .. } => "TagMismatch",
            DuplicateEdge { .. } => "DuplicateEdge",
            Unreachable { .. } => "Unreachable",
            NoPathToFinal { .. } => "NoPathToFinal",
            UnfedInput { .. } => "UnfedInput",
        }
    }

    pub fn site(&self) -> Site {
        use ValidationError::*;
        match self {
            Component(e) => {
                let id = match e {
                    ComponentError::InvalidIdentifier { field, .. } => {
                        field.split('.').next().unwrap_or_default().to_string()
                    }
                    ComponentError::EmptyKinds { id }
                    | ComponentError::DuplicatePort { id, .. }
                    | ComponentError::EmptyTag { id, .. }
                    | ComponentError::UnknownBehavior { id, .. }
                    | ComponentError::NegativeCost { id, .. }
                    | ComponentError::InvalidSecurity { id, .. } => id.clone(),
                };
                match e.port() {
                    Some((direction, port)) => Site::Port { component: id, direction, port: port.to_string() },
                    None => Site::Component(id),
                }
            }
            FscMismatch { id } | NoIncoming { id } | Unreachable { id } | NoPathToFinal { id } => {
                Site::Component(id.clone())
            }
            UnknownComponent { site, .. } => site.clone(),
            UnknownPort { edge, .. } | TagMismatch { edge, .. } | DuplicateEdge { edge, .. } => Site::Edge(*edge),
            InvalidIdentifier { index, .. }
            | DuplicateConnector { index, .. }
            | ArityViolation { index, .. }
            | DuplicateEndpoint { index, .. }
            | DanglingGuard { index, .. }
            | MissingLabel { index, .. }
            | StrayLabel { index, .. }
            | DuplicateLabel { index, .. }
            | MisplacedChoiceField { index, .. }
            | InvalidDefault { index, .. }
            | InitialHasIncoming { index, .. } => Site::Connector(*index),
            EmptyFinals => Site::Finals,
            UnfedInput { id, port } => {
                Site::Port { component: id.clone(), direction: Direction::Input, port: port.clone() }
            }
        }
    }
}

/// Least fixed point of connector traversal from `initial`. A
/// Synchronization contributes its target only once all of its sources
/// are reachable; every other kind needs its single source.
pub fn reachable_components(spg: &SchedulingGraph) -> BTreeSet<String> {
    let mut reached: BTreeSet<String> = BTreeSet::new();
    reached.insert(spg.initial.clone());
    loop {
        let mut grew = false;
        for c in &spg.connectors {
            if !c.sources.is_empty() && c.sources.iter().all(|s| reached.contains(s)) {
                for t in &c.targets {
                    grew |= reached.insert(t.clone());
                }
            }
        }
        if !grew {
            return reached;
        }
    }
}

/// Components from which some final component can be reached.
fn coreachable_components(spg: &SchedulingGraph) -> BTreeSet<String> {
    let mut reached = spg.finals.clone();
    loop {
        let mut grew = false;
        for c in &spg.connectors {
            if c.targets.iter().any(|t| reached.contains(t)) {
                for s in &c.sources {
                    grew |= reached.insert(s.clone());
                }
            }
        }
        if !grew {
            return reached;
        }
    }
}

/// Verdict on one interaction edge. `TagOk` implies both endpoints exist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeStatus {
    TagOk,
    TagMismatch { expected: DataTag, found: DataTag },
    UnknownComponent(PortRef),
    UnknownPort(PortRef),
}

fn check_edge(model: &SystemModel, edge: &InteractionEdge) -> EdgeStatus {
    let lookup = |end: &PortRef, direction| match model.components.get(&end.component) {
        None => Err(EdgeStatus::UnknownComponent(end.clone())),
        Some(c) => c.port(direction, &end.port).ok_or_else(|| EdgeStatus::UnknownPort(end.clone())),
    };
    let from = match lookup(&edge.from, Direction::Output) {
        Ok(p) => p,
        Err(status) => return status,
    };
    let to = match lookup(&edge.to, Direction::Input) {
        Ok(p) => p,
        Err(status) => return status,
    };
    if from.tag == to.tag {
        EdgeStatus::TagOk
    } else {
        EdgeStatus::TagMismatch { expected: to.tag.clone(), found: from.tag.clone() }
    }
}

/// Per-edge syntactic and tag compatibility, one entry per edge.
pub fn compatibility_report(model: &SystemModel) -> Vec<(InteractionEdge, EdgeStatus)> {
    model.ig.edges.iter().map(|e| (e.clone(), check_edge(model, e))).collect()
}

/// Checks every structural clause and reports all violations found.
pub fn validate_system(
    model: &SystemModel,
    registry: &BehaviorRegistry,
) -> Result<SystemModel, Vec<ValidationError>> {
    use ValidationError as E;
    let mut errors = Vec::new();

    for (key, spec) in &model.components {
        if key != &spec.id {
            errors.push(E::FscMismatch { id: key.clone() });
        }
        if let Err(errs) = validate_component(spec, registry) {
            errors.extend(errs.into_iter().map(E::Component));
        }
    }
    let declared: BTreeSet<&String> = model.components.keys().collect();
    let fsc: BTreeSet<&String> = model.spg.fsc.iter().collect();
    for id in declared.symmetric_difference(&fsc) {
        errors.push(E::FscMismatch { id: (*id).clone() });
    }
    let known = |id: &str| model.components.contains_key(id);

    let spg = &model.spg;
    let mut spg_ok = true;
    if !known(&spg.initial) {
        errors.push(E::UnknownComponent { site: Site::Initial, id: spg.initial.clone() });
        spg_ok = false;
    }
    if spg.finals.is_empty() {
        errors.push(E::EmptyFinals);
        spg_ok = false;
    }
    for f in &spg.finals {
        if !known(f) {
            errors.push(E::UnknownComponent { site: Site::Finals, id: f.clone() });
            spg_ok = false;
        }
    }

    let mut connector_ids = BTreeSet::new();
    let mut has_incoming = BTreeSet::new();
    for (index, c) in spg.connectors.iter().enumerate() {
        let name = || c.id.clone();
        let before = errors.len();
        if !is_identifier(&c.id) {
            errors.push(E::InvalidIdentifier { index, id: c.id.clone() });
        }
        if !connector_ids.insert(c.id.as_str()) {
            errors.push(E::DuplicateConnector { index, id: name() });
        }
        if !c.kind.arity_ok(c.sources.len(), c.targets.len()) {
            errors.push(E::ArityViolation {
                index,
                connector: name(),
                kind: c.kind,
                sources: c.sources.len(),
                targets: c.targets.len(),
            });
        }
        for list in [&c.sources, &c.targets] {
            let mut seen = BTreeSet::new();
            for id in list {
                if !known(id) {
                    errors.push(E::UnknownComponent { site: Site::Connector(index), id: id.clone() });
                } else if !seen.insert(id) {
                    errors.push(E::DuplicateEndpoint { index, connector: name(), id: id.clone() });
                }
            }
        }
        if c.kind == ConnectorKind::ExclusiveChoice {
            match &c.guard_port {
                None => errors.push(E::DanglingGuard { index, connector: name(), reason: "no guard port".into() }),
                Some(g) => {
                    if !c.sources.contains(&g.component) {
                        errors.push(E::DanglingGuard {
                            index,
                            connector: name(),
                            reason: format!("guard port `{g}` is not owned by the source"),
                        });
                    } else if model
                        .components
                        .get(&g.component)
                        .and_then(|s| s.port(Direction::Output, &g.port))
                        .is_none()
                    {
                        errors.push(E::DanglingGuard {
                            index,
                            connector: name(),
                            reason: format!("guard port `{g}` is not an output port"),
                        });
                    }
                }
            }
            for t in &c.targets {
                if !c.labels.contains_key(t) {
                    errors.push(E::MissingLabel { index, connector: name(), target: t.clone() });
                }
            }
            let mut labels_seen = BTreeSet::new();
            for (target, label) in &c.labels {
                if !c.targets.contains(target) {
                    errors.push(E::StrayLabel { index, connector: name(), target: target.clone() });
                }
                if !labels_seen.insert(label) {
                    errors.push(E::DuplicateLabel { index, connector: name(), label: label.clone() });
                }
            }
            if let Some(d) = &c.default_target {
                if !c.targets.contains(d) {
                    errors.push(E::InvalidDefault { index, connector: name(), target: d.clone() });
                }
            }
        } else {
            let misplaced = [
                ("guard_port", c.guard_port.is_some()),
                ("labels", !c.labels.is_empty()),
                ("default", c.default_target.is_some()),
            ];
            for (field, present) in misplaced {
                if present {
                    errors.push(E::MisplacedChoiceField { index, connector: name(), field });
                }
            }
        }
        for t in &c.targets {
            if t == &spg.initial {
                errors.push(E::InitialHasIncoming { index, connector: name() });
            }
            has_incoming.insert(t.as_str());
        }
        if errors.len() > before {
            spg_ok = false;
        }
    }
    for id in model.components.keys() {
        if id != &spg.initial && !has_incoming.contains(id.as_str()) {
            errors.push(E::NoIncoming { id: id.clone() });
            spg_ok = false;
        }
    }

    let mut seen_edges: BTreeMap<&InteractionEdge, usize> = BTreeMap::new();
    for (edge_index, edge) in model.ig.edges.iter().enumerate() {
        match check_edge(model, edge) {
            EdgeStatus::TagOk => {}
            EdgeStatus::TagMismatch { expected, found } => {
                errors.push(E::TagMismatch { edge: edge_index, expected, found })
            }
            EdgeStatus::UnknownComponent(end) => {
                errors.push(E::UnknownComponent { site: Site::Edge(edge_index), id: end.component })
            }
            EdgeStatus::UnknownPort(end) => {
                let direction = if end == edge.from { Direction::Output } else { Direction::Input };
                errors.push(E::UnknownPort { edge: edge_index, direction, end })
            }
        }
        if let Some(first) = seen_edges.insert(edge, edge_index) {
            seen_edges.insert(edge, first);
            errors.push(E::DuplicateEdge { edge: edge_index, first });
        }
    }

    if spg_ok {
        let reachable = reachable_components(spg);
        let coreachable = coreachable_components(spg);
        for id in model.components.keys() {
            if !reachable.contains(id) {
                errors.push(E::Unreachable { id: id.clone() });
            } else if !coreachable.contains(id) {
                errors.push(E::NoPathToFinal { id: id.clone() });
            }
        }
        let fed: BTreeSet<&PortRef> = model.ig.edges.iter().map(|e| &e.to).collect();
        for id in &reachable {
            let Some(spec) = model.components.get(id) else { continue };
            let Ok(behavior) = registry.resolve(&spec.behavior) else { continue };
            for port in spec.inputs() {
                if behavior.requires(port) && !fed.contains(&PortRef::new(id.as_str(), port.name.as_str())) {
                    errors.push(E::UnfedInput { id: id.clone(), port: port.name.clone() });
                }
            }
        }
    }

    if errors.is_empty() {
        Ok(model.clone())
    } else {
        Err(errors)
    }
}
