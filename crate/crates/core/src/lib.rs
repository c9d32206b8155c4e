//! Numerical laboratory for linear impulsive differential equations
//!
//! ```text
//! x'(t) + A(t) x(t) = f(t),        t != tau_i
//! x(tau_i) = B_i x(tau_i - 0) + alpha_i
//! ```
//!
//! The crate simulates right-continuous trajectories, builds the fundamental
//! matrix `X(t)` and the evolution operator `C(t, s) = X(t) X(s)^-1`, evaluates
//! explicit exponential-stability constants, and runs the scalar sign probe
//! that decides boundedness of the response to bounded jump offsets.
//!
//! All norms are the vector infinity-norm and the induced matrix
//! infinity-norm (maximum absolute row sum).
//!
//! # Modules
//!
//! - [`model`]: schedules, coefficient and jump operators, forcings, hypothesis bounds.
//! - [`integrator`]: fixed-step RK4 flows, `solve_ivp`, the representation formula.
//! - [`evolution`]: `X(t)`, `C(t, s)`, the construction from the jump-free operator `G(t, s)`.
//! - [`stability`]: certificate constants, response bounds, rate fits, transfers.
//! - [`probe`]: sign probe, uniform-boundedness constant estimate, delta forcing.
//! - [`config`]: JSON scenario schema.
//! - [`io`]: CSV formats.

// Negated comparisons are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod evolution;
pub mod integrator;
pub mod io;
pub mod linalg;
pub mod model;
pub mod probe;
pub mod quad;
pub mod stability;

pub use error::{Error, Result};
pub use evolution::{
    evolution_from_g, evolution_operator, fundamental_matrix, scalar_product_formula,
    semigroup_residual, semigroup_residual_with, Branch, Checkpoint, FundamentalSolution, NonImpulsiveEvolution, NormSample,
};
pub use integrator::{
    flow, representation_solution, representation_with, solve_ivp, JumpRecord, Trajectory,
    DEFAULT_H_MAX,
};
pub use model::{
    build_uniform_schedule, hypothesis_bounds, CoefficientOperator, Forcing, HypothesisBounds,
    ImpulseSchedule, ImpulsiveSystem, JumpSequence, Profile, ProfileKind,
};
pub use probe::{
    delta_to_jumps, probe_k_estimate, scalar_probe, sign_sequence, DeltaLayer, KEstimate,
    ProbeVerdict, Verdict,
};
pub use stability::{
    certify_from_k, check_dominance, decay_transfer, empirical_certificate,
    estimate_decay_rate, evolution_constant, evolution_dominance, fundamental_constants,
    fundamental_dominance, fundamental_nu, gronwall_bounds, gronwall_check, response_bound,
    tail_sup, transfer_continuous_to_impulsive, transfer_impulsive_to_continuous,
    CertificateKind, DecayEnvelope, DecayingForcingSpec, DominanceReport, GronwallReport,
    Provenance, StabilityCertificate, TransferHypotheses,
};

pub use nalgebra::{DMatrix, DVector};
