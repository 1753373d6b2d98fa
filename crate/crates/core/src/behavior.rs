//! Behavior contract and the name → behavior registry.
//!
//! A behavior maps `(inputs by port, local state, seed)` to
//! `(outputs by port, new state)`. It must be deterministic in those
//! arguments; the engine stamps tags and origins on whatever it emits.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::model::{ComponentSpec, PortSpec};

pub struct Invocation<'a> {
    pub component: &'a ComponentSpec,
    /// Payload per input port; absent ports carried no message.
    pub inputs: &'a BTreeMap<String, Vec<u8>>,
    pub state: &'a [u8],
    pub seed: u64,
}

impl Invocation<'_> {
    pub fn input(&self, port: &str) -> Option<&[u8]> {
        self.inputs.get(port).map(Vec::as_slice)
    }

    /// Like [`Invocation::input`] but fails with `MissingInput`.
    pub fn require(&self, port: &str) -> Result<&[u8], BehaviorError> {
        self.input(port).ok_or_else(|| BehaviorError::MissingInput(port.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    pub outputs: BTreeMap<String, Vec<u8>>,
    pub state: Vec<u8>,
}

impl Outcome {
    pub fn with_state(state: Vec<u8>) -> Self {
        Outcome { outputs: BTreeMap::new(), state }
    }

    pub fn emit(mut self, port: impl Into<String>, payload: impl Into<Vec<u8>>) -> Self {
        self.outputs.insert(port.into(), payload.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BehaviorError {
    #[error("behavior needs input `{0}` but none was delivered")]
    MissingInput(String),
    #[error("{0}")]
    Failed(String),
}

pub trait Behavior: Send + Sync {
    fn invoke(&self, call: &Invocation<'_>) -> Result<Outcome, BehaviorError>;

    /// Whether the component may only fire once `port` holds a message.
    fn requires(&self, _port: &PortSpec) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("behavior `{0}` is already registered")]
    DuplicateBehavior(String),
    #[error("no behavior named `{0}`")]
    NotFound(String),
}

/// Handle returned by [`BehaviorRegistry::register`].
#[derive(Clone)]
pub struct BehaviorHandle {
    pub name: String,
    pub behavior: Arc<dyn Behavior>,
}

impl fmt::Debug for BehaviorHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BehaviorHandle").field("name", &self.name).finish()
    }
}

#[derive(Clone, Default)]
pub struct BehaviorRegistry {
    entries: BTreeMap<String, Arc<dyn Behavior>>,
}

impl fmt::Debug for BehaviorRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.entries.keys()).finish()
    }
}

impl BehaviorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry preloaded with `echo`, `merge`, `sink` and `coin`.
    pub fn with_builtins() -> Self {
        let mut reg = Self::new();
        reg.register("echo", Arc::new(Echo)).expect("fresh registry");
        reg.register("merge", Arc::new(Merge)).expect("fresh registry");
        reg.register("sink", Arc::new(Sink)).expect("fresh registry");
        reg.register("coin", Arc::new(Coin)).expect("fresh registry");
        reg
    }

    pub fn register(
        &mut self,
        name: impl Into<String>,
        behavior: Arc<dyn Behavior>,
    ) -> Result<BehaviorHandle, RegistryError> {
        let name = name.into();
        if self.entries.contains_key(&name) {
            return Err(RegistryError::DuplicateBehavior(name));
        }
        self.entries.insert(name.clone(), behavior.clone());
        Ok(BehaviorHandle { name, behavior })
    }

    pub fn resolve(&self, name: &str) -> Result<Arc<dyn Behavior>, RegistryError> {
        self.entries.get(name).cloned().ok_or_else(|| RegistryError::NotFound(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn concat_inputs(call: &Invocation<'_>) -> Vec<u8> {
    call.component
        .inputs()
        .filter_map(|p| call.input(&p.name))
        .flatten()
        .copied()
        .collect()
}

/// Emits the concatenation of whatever inputs arrived (in port declaration
/// order) on every output port. No input is required.
pub struct Echo;

impl Behavior for Echo {
    fn invoke(&self, call: &Invocation<'_>) -> Result<Outcome, BehaviorError> {
        let payload = concat_inputs(call);
        let mut out = Outcome::with_state(call.state.to_vec());
        for port in call.component.outputs() {
            out = out.emit(port.name.clone(), payload.clone());
        }
        Ok(out)
    }
}

/// Like [`Echo`] but every declared input is required.
pub struct Merge;

impl Behavior for Merge {
    fn invoke(&self, call: &Invocation<'_>) -> Result<Outcome, BehaviorError> {
        for port in call.component.inputs() {
            call.require(&port.name)?;
        }
        Echo.invoke(call)
    }

    fn requires(&self, _port: &PortSpec) -> bool {
        true
    }
}

/// Consumes its inputs, emits nothing. Counts firings in its state.
pub struct Sink;

impl Behavior for Sink {
    fn invoke(&self, call: &Invocation<'_>) -> Result<Outcome, BehaviorError> {
        let count = call.state.try_into().map(u64::from_le_bytes).unwrap_or(0);
        Ok(Outcome::with_state((count + 1).to_le_bytes().to_vec()))
    }
}

/// Emits `heads` or `tails`, drawn from the invocation seed, on every
/// output port.
pub struct Coin;

impl Behavior for Coin {
    fn invoke(&self, call: &Invocation<'_>) -> Result<Outcome, BehaviorError> {
        let face: &[u8] = if call.seed & 1 == 0 { b"heads" } else { b"tails" };
        let mut out = Outcome::with_state(call.state.to_vec());
        for port in call.component.outputs() {
            out = out.emit(port.name.clone(), face);
        }
        Ok(out)
    }
}
