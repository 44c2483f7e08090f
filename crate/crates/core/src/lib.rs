//! Master equations for a two-level atom moving in a far-detuned standing wave.
//!
//! The crate builds five Lindblad generators on a truncated momentum ladder
//! (the exact two-level equation plus four cheaper approximations), integrates
//! them with an adaptive Dormand-Prince stepper and extracts momentum
//! distributions and related diagnostics from the resulting trajectories.
//!
//! Units are scaled so that `ħ = k = m = 1`. Composite (centre-of-mass ⊗
//! internal) states use the internal index as the fastest-varying one, with
//! `|g⟩` at internal index 0 and `|e⟩` at index 1.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dressed;
pub mod equations;
pub mod error;
pub mod integrator;
pub mod observables;
pub mod operators;
pub mod params;
pub mod sparse;
pub mod superop;

pub use dressed::{dressed_functions, DressedFunctions};
pub use equations::{Generator, GeneratorKind};
pub use error::{Error, Result};
pub use integrator::{
    integrate, integrate_expm, integrate_with, make_initial_state, DensityState, InternalState,
    StepStats, Trajectory,
};
pub use observables::{
    fluorescence_estimate, momentum_distribution, series_compare, validity_ratio, Comparison,
    MomentumDistribution, ObservableSeries,
};
pub use operators::{
    build_basis, kick_weights_from_w, kinetic_operator, rabi_operator, shift_raising, KickMap,
    KickWeights, MomentumBasis, OperatorMatrix,
};
pub use params::SimParams;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix used for operators and density matrices.
pub type CMatrix = nalgebra::DMatrix<C64>;
