//! Closed-loop evaluation against injected faults, and brute-force oracles.

pub mod fault;
pub mod generate;
pub mod hitting;
pub mod session;

pub use fault::{inject, FaultBehavior, FaultError, FaultSpec, FaultyModel, Truth};
pub use generate::{generate, random_boolean, pick_faults, Family, Generated, GeneratorConfig};
pub use hitting::{all_minimal_hitting_sets, minimal_hitting_set, HittingError};
pub use session::{run_session, run_session_timed, Outcome, SessionError, SessionTranscript, Step};
