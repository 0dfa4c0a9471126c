//! Simulator and measurement-angle compiler for continuous-variable one-way
//! computation on a four-mode linear cluster of finitely squeezed light.
//!
//! * [`gaussian`]: phase-space states, symplectic ops, homodyne updates.
//! * [`cluster`]: the four-mode cluster resource and its nullifiers.
//! * [`engine`]: analytic and Monte Carlo execution of an angle schedule.
//! * [`compiler`]: target gate to angle schedule.
//! * [`analysis`]: fidelity and scaling formulas, dB conversions.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cluster;
pub mod compiler;
pub mod engine;
pub mod error;
pub mod gaussian;

pub use cluster::{build_cluster, build_cluster_canonical, nullifier_report, ClusterResource, NullifierReport};
pub use compiler::{
    compile_custom, compile_fourier, compile_x_squeeze, decompose_elementary, decompose_tele,
    CustomCompilation, LuboTarget, NoiseObjective, RsrDecomposition, TargetLabel,
};
pub use engine::{
    excess_noise, heisenberg_model, phase_scan, run_analytic, run_monte_carlo, AngleSchedule,
    HeisenbergModel, MonteCarloRun, PhaseScanPoint, RunResult,
};
pub use error::{Error, Result};
pub use gaussian::{
    apply, beam_splitter, homodyne, rotation_matrix, squeeze_matrix, GaussianState, HomodyneOutcome,
    OutcomeSource, SymplecticOp, VACUUM_VARIANCE,
};

pub use nalgebra::{Matrix2, Vector2};
