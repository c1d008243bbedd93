//! Numerical simulation and verification of generalized quantum
//! measurements on small systems.
//!
//! The crate is organized around four questions:
//!
//! * [`instruments`] — what does a measurement described by Kraus operators
//!   do to a state, and how do repeated runs behave?
//! * [`dilation`] — how is the same measurement realized as one unitary
//!   coupling the system to a meter, and do the two descriptions agree?
//! * [`ozawa`] — when one system feeds two meters through a single
//!   coupling, under what operator-level condition must their readings
//!   coincide on every input state?
//! * [`agents`] — when one observer measures after another, how often do
//!   their reported outcomes match, exactly and in seeded Monte Carlo?
//!
//! [`tensor`] provides the dense complex linear algebra underneath
//! (normalized states, certified unitaries and projectors, Kronecker
//! products, deterministic unitary completion), and [`random`] the seeded
//! generators used by the property checks and the command line tools.
//!
//! Everything is deterministic given its inputs and seeds: random objects
//! derive from per-index ChaCha streams and parallel reductions are
//! order-independent, so a computation yields identical bytes on one worker
//! and on many.

pub mod agents;
pub mod dilation;
pub mod instruments;
pub mod ozawa;
pub mod random;
pub mod tensor;

pub use agents::{AgentError, AgentScenario, SimReport, TrialRecord};
pub use dilation::{DilationError, DilationModel};
pub use instruments::{
    InstrumentError, KrausInstrument, MeasurementClass, OutcomeDistribution, P_FLOOR,
};
pub use ozawa::{
    build_reproducible_scenario, build_uncoupled_scenario, canonical_reproducible_scenario,
    JointDistribution, Meter, OzawaError, OzawaScenario, ReproducibilityReport,
};
pub use tensor::{
    complete_isometry_to_unitary, partial_meter_contraction, Applied, C64, DEFAULT_TOL, Operator,
    Projector, StateVector, TensorError, UnitaryOperator,
};

#[cfg(doctest)]
mod book;
