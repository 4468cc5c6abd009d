//! Model-based diagnosis by forward causal propagation.
//!
//! A [`SystemModel`] describes components with guarded causal functions.
//! [`propagation`] predicts every output together with the components the
//! prediction rests on, [`focusing`] turns measurements into conflict and
//! confirmation evidence and ranks likely-broken components, and [`probing`]
//! picks the next measurement. [`simulator`] closes the loop against an
//! injected fault for testing and benchmarking.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod circuits;
pub mod diagnosis;
pub mod expr;
pub mod focusing;
pub mod gates;
pub mod graph;
pub mod model;
pub mod probing;
pub mod propagation;
pub mod simulator;
pub mod validate;
pub mod value;

pub use diagnosis::{assess, Assessment, CancelMode, DiagnosisConfig, Rule, Status, Strategy};
pub use expr::Expr;
pub use focusing::{EvidenceKind, EvidenceSet, Focus, FocusSet, Member};
pub use model::{
    Branch, CompIx, Component, ComponentId, ComponentKind, FunctionSpec, ModelBuilder, ModelError,
    Observation, Stateful, SystemModel,
};
pub use probing::ProbeAdvice;
pub use propagation::{
    Assumption, DepSets, Origin, Prediction, PredictionState, PropagationError, TimedComponent,
};
pub use value::{Value, ValueDomain};
