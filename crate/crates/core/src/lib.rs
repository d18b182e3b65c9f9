//! Three-level STIRAP with dressed-states driving, detuning sweeps, and the
//! mass and field sensors built on them.
//!
//! Frequencies are in units of the reference coupling Ω₀ and times in 1/Ω₀
//! throughout; [`qcore::UnitSystem`] converts at the boundary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod propagator;
pub mod pulses;
pub mod qcore;
pub mod sensors;
pub mod sweeps;

pub use error::{Error, Result};
pub use propagator::{
    propagate, transfer_population, EvolutionResult, IntegratorConfig, Propagator, StepPolicy,
};
pub use pulses::{tau_min, PulseSchedule, Scheme};
pub use qcore::{ComplexState3, Hamiltonian3, UnitSystem};
pub use sweeps::{CutAxis, DeltaRange, DetuningPair, LineCut, PopulationMap};
