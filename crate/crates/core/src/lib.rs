//! Modeling, validation, simulation and partitioning of mixed
//! software/hardware systems.
//!
//! A system is a set of components with typed ports and cost annotations,
//! a scheduling-and-parallelism graph (control flow) and an interaction
//! graph (data flow). See `docs/FORMAT.md` for the textual description
//! format.

pub mod behavior;
pub mod decimal;
pub mod engine;
pub mod graph;
pub mod model;
pub mod partition;
pub mod sysdesc;
pub mod tree;

pub use behavior::{Behavior, BehaviorError, BehaviorRegistry, Invocation, Outcome};
pub use decimal::Decimal;
pub use graph::{
    ConnectorKind, InteractionEdge, InteractionGraph, SchedulingConnector, SchedulingGraph, SystemModel,
    ValidationError,
};
pub use model::{ComponentSpec, CostAnnotation, DataTag, Direction, Kind, Message, PortRef, PortSpec};
