//! Components, their typed ports and cost annotations.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::behavior::BehaviorRegistry;
use crate::decimal::Decimal;

/// Highest security level on the ordinal scale.
pub const MAX_SECURITY: i64 = 5;

/// True for `[A-Za-z_][A-Za-z0-9_-]*`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Type tag carried by ports and messages. Compared by exact equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DataTag(String);

impl DataTag {
    pub fn new(name: impl Into<String>) -> Self {
        DataTag(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DataTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Input,
    Output,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Input => "input",
            Direction::Output => "output",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortSpec {
    pub name: String,
    pub direction: Direction,
    pub tag: DataTag,
}

impl PortSpec {
    pub fn input(name: impl Into<String>, tag: impl Into<String>) -> Self {
        PortSpec { name: name.into(), direction: Direction::Input, tag: DataTag::new(tag) }
    }

    pub fn output(name: impl Into<String>, tag: impl Into<String>) -> Self {
        PortSpec { name: name.into(), direction: Direction::Output, tag: DataTag::new(tag) }
    }
}

/// Implementation technology of a component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    Software,
    Hardware,
}

impl Kind {
    /// `SW` / `HW`.
    pub fn short(self) -> &'static str {
        match self {
            Kind::Software => "SW",
            Kind::Hardware => "HW",
        }
    }

    pub fn flipped(self) -> Kind {
        match self {
            Kind::Software => Kind::Hardware,
            Kind::Hardware => Kind::Software,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "SW" | "sw" | "software" => Ok(Kind::Software),
            "HW" | "hw" | "hardware" => Ok(Kind::Hardware),
            other => Err(format!("unknown implementation kind `{other}`")),
        }
    }
}

/// Per-kind costs. Times, area and energy are non-negative decimals,
/// security levels are ordinals in `0..=5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CostAnnotation {
    pub sw_time: Decimal,
    pub hw_time: Decimal,
    pub hw_area: Decimal,
    pub sw_energy: Decimal,
    pub hw_energy: Decimal,
    pub sw_security: i64,
    pub hw_security: i64,
}

impl CostAnnotation {
    pub fn time(&self, kind: Kind) -> Decimal {
        match kind {
            Kind::Software => self.sw_time,
            Kind::Hardware => self.hw_time,
        }
    }

    pub fn energy(&self, kind: Kind) -> Decimal {
        match kind {
            Kind::Software => self.sw_energy,
            Kind::Hardware => self.hw_energy,
        }
    }

    pub fn area(&self, kind: Kind) -> Decimal {
        match kind {
            Kind::Software => Decimal::ZERO,
            Kind::Hardware => self.hw_area,
        }
    }

    pub fn security(&self, kind: Kind) -> i64 {
        match kind {
            Kind::Software => self.sw_security,
            Kind::Hardware => self.hw_security,
        }
    }

    pub(crate) fn decimal_fields(&self) -> [(&'static str, Decimal); 5] {
        [
            ("sw_time", self.sw_time),
            ("hw_time", self.hw_time),
            ("hw_area", self.hw_area),
            ("sw_energy", self.sw_energy),
            ("hw_energy", self.hw_energy),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentSpec {
    pub id: String,
    pub allowed_kinds: BTreeSet<Kind>,
    pub ports: Vec<PortSpec>,
    pub costs: CostAnnotation,
    pub behavior: String,
}

impl ComponentSpec {
    pub fn inputs(&self) -> impl Iterator<Item = &PortSpec> {
        self.ports.iter().filter(|p| p.direction == Direction::Input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &PortSpec> {
        self.ports.iter().filter(|p| p.direction == Direction::Output)
    }

    pub fn port(&self, direction: Direction, name: &str) -> Option<&PortSpec> {
        self.ports.iter().find(|p| p.direction == direction && p.name == name)
    }

    pub fn allows(&self, kind: Kind) -> bool {
        self.allowed_kinds.contains(&kind)
    }

    /// True when both kinds are allowed, i.e. the mapping is free.
    pub fn is_dual(&self) -> bool {
        self.allowed_kinds.len() == 2
    }
}

/// `(component id, port name)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortRef {
    pub component: String,
    pub port: String,
}

impl PortRef {
    pub fn new(component: impl Into<String>, port: impl Into<String>) -> Self {
        PortRef { component: component.into(), port: port.into() }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.component, self.port)
    }
}

/// A payload in flight. `tag` always equals the tag of the origin port.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub tag: DataTag,
    pub payload: Vec<u8>,
    pub origin: PortRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComponentError {
    #[error("`{field}` is not a valid identifier: {value:?}")]
    InvalidIdentifier { field: String, value: String },
    #[error("component `{id}` allows no implementation kind")]
    EmptyKinds { id: String },
    #[error("component `{id}` declares {direction} port `{port}` more than once")]
    DuplicatePort { id: String, direction: Direction, port: String },
    #[error("component `{id}` port `{port}` has an empty tag")]
    EmptyTag { id: String, port: String },
    #[error("component `{id}` uses unknown behavior `{behavior}`")]
    UnknownBehavior { id: String, behavior: String },
    #[error("component `{id}` has negative cost `{field}` = {value}")]
    NegativeCost { id: String, field: &'static str, value: Decimal },
    #[error("component `{id}` security level `{field}` = {value} is outside 0..=5")]
    InvalidSecurity { id: String, field: &'static str, value: i64 },
}

impl ComponentError {
    pub fn category(&self) -> &'static str {
        match self {
            ComponentError::InvalidIdentifier { .. } => "InvalidIdentifier",
            ComponentError::EmptyKinds { .. } => "EmptyKinds",
            ComponentError::DuplicatePort { .. } => "DuplicatePort",
            ComponentError::EmptyTag { .. } => "EmptyTag",
            ComponentError::UnknownBehavior { .. } => "UnknownBehavior",
            ComponentError::NegativeCost { .. } => "NegativeCost",
            ComponentError::InvalidSecurity { .. } => "InvalidSecurity",
        }
    }

    /// The offending port, when the error concerns one.
    pub fn port(&self) -> Option<(Direction, &str)> {
        match self {
            ComponentError::DuplicatePort { direction, port, .. } => Some((*direction, port)),
            _ => None,
        }
    }
}

/// Checks every component invariant and reports all violations.
pub fn validate_component(
    spec: &ComponentSpec,
    registry: &BehaviorRegistry,
) -> Result<ComponentSpec, Vec<ComponentError>> {
    let mut errors = Vec::new();
    let id = &spec.id;
    if !is_identifier(id) {
        errors.push(ComponentError::InvalidIdentifier { field: "id".into(), value: id.clone() });
    }
    if spec.allowed_kinds.is_empty() {
        errors.push(ComponentError::EmptyKinds { id: id.clone() });
    }
    let mut seen = BTreeSet::new();
    for port in &spec.ports {
        if !is_identifier(&port.name) {
            errors.push(ComponentError::InvalidIdentifier {
                field: format!("{id}.{}", port.name),
                value: port.name.clone(),
            });
        }
        if port.tag.as_str().is_empty() {
            errors.push(ComponentError::EmptyTag { id: id.clone(), port: port.name.clone() });
        }
        if !seen.insert((port.direction, port.name.as_str())) {
            errors.push(ComponentError::DuplicatePort {
                id: id.clone(),
                direction: port.direction,
                port: port.name.clone(),
            });
        }
    }
    if registry.resolve(&spec.behavior).is_err() {
        errors.push(ComponentError::UnknownBehavior { id: id.clone(), behavior: spec.behavior.clone() });
    }
    for (field, value) in spec.costs.decimal_fields() {
        if value.is_negative() {
            errors.push(ComponentError::NegativeCost { id: id.clone(), field, value });
        }
    }
    for (field, value) in [("sw_security", spec.costs.sw_security), ("hw_security", spec.costs.hw_security)] {
        if !(0..=MAX_SECURITY).contains(&value) {
            errors.push(ComponentError::InvalidSecurity { id: id.clone(), field, value });
        }
    }
    if errors.is_empty() {
        Ok(spec.clone())
    } else {
        Err(errors)
    }
}
