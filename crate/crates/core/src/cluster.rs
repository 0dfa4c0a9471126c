//! Four-mode linear cluster state built from finitely squeezed vacua.
//!
//! Ideal nullifiers (cluster modes 1..4):
//!
//! ```text
//! δ1 = p1 - x2,  δ2 = p2 - x1 - x3,  δ3 = p3 - x2 - x4,  δ4 = p4 - x3
//! ```
//!
//! With four resources of equal squeezing `r`, the optical network below
//! leaves only squeezed resource quadratures in the nullifiers:
//!
//! ```text
//! δ1 = √2 e^{-r} p1S
//! δ2 = √(5/2) e^{-r} p3S + (1/√2) e^{-r} p4S
//! δ3 = (1/√2) e^{-r} p1S - √(5/2) e^{-r} p2S
//! δ4 = √2 e^{-r} p4S
//! ```
//!
//! Network (rails 0..3 become cluster modes 1..4; rail `k` carries the
//! resource labelled [`RAIL_RESOURCE`]`[k]`, all resources start p-squeezed):
//!
//! 1. rotate rail 0 by -90° and rail 2 by +90° (these become x-squeezed),
//! 2. 80% beam splitter on rails (1, 2),
//! 3. half beam splitters on rails (1, 0) and (3, 2),
//! 4. rotate rails 0 and 2 by +90°.
//!
//! The network was found by exhaustive search over splitter orientations and
//! quarter-wave phases, matching the nullifier coefficients exactly.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, LN_10, SQRT_2};

use nalgebra::{DMatrix, DVector, Matrix4};

use crate::error::{invalid, Result};
use crate::gaussian::{apply, beam_splitter, GaussianState, SymplecticOp, VACUUM_VARIANCE};

pub const CLUSTER_MODES: usize = 4;

/// Resource label (1-based, as in the nullifier table above) feeding each rail.
pub const RAIL_RESOURCE: [usize; 4] = [1, 3, 2, 4];

/// Adjacency of the linear chain 1-2-3-4.
const ADJACENCY: [[f64; 4]; 4] = [
    [0.0, 1.0, 0.0, 0.0],
    [1.0, 0.0, 1.0, 0.0],
    [0.0, 1.0, 0.0, 1.0],
    [0.0, 0.0, 1.0, 0.0],
];

/// Coefficients of each nullifier on the squeezed quadratures `e^{-r} p_jS`
/// (rows δ1..δ4, columns resources 1..4).
pub fn nullifier_coefficients() -> Matrix4<f64> {
    let a = (2.5f64).sqrt();
    Matrix4::new(
        SQRT_2, 0.0, 0.0, 0.0, //
        0.0, 0.0, a, FRAC_1_SQRT_2, //
        FRAC_1_SQRT_2, -a, 0.0, 0.0, //
        0.0, 0.0, 0.0, SQRT_2,
    )
}

/// `r = (ln 10 / 20) |dB|`.
pub fn squeezing_db_to_r(squeezing_db: f64) -> Result<f64> {
    if !squeezing_db.is_finite() {
        return invalid(format!("squeezing level must be finite, got {squeezing_db}"));
    }
    Ok(LN_10 / 20.0 * squeezing_db.abs())
}

#[derive(Debug, Clone)]
pub struct ClusterResource {
    pub state: GaussianState,
    /// Squeezing of each resource in dB (stored as given, sign ignored).
    pub squeezing_db: f64,
    pub r: f64,
}

/// Variances of the four nullifiers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullifierReport {
    pub var_delta: [f64; 4],
}

/// Weight vectors (over the 8 cluster quadratures) of δ1..δ4.
pub fn nullifier_weights() -> [DVector<f64>; 4] {
    std::array::from_fn(|i| {
        let mut w = DVector::zeros(2 * CLUSTER_MODES);
        w[2 * i + 1] = 1.0;
        for (j, &adj) in ADJACENCY[i].iter().enumerate() {
            if adj != 0.0 {
                w[2 * j] = -adj;
            }
        }
        w
    })
}

/// Four p-squeezed vacua `diag(e^{2r}, e^{-2r}) / 4`, one per rail.
pub fn squeezed_resources(r: f64) -> Result<GaussianState> {
    let single = GaussianState::squeezed_vacuum(-r, 0.0)?;
    Ok(single.tensor(&single).tensor(&single).tensor(&single))
}

/// The passive optical network described in the module docs.
pub fn resource_network() -> SymplecticOp {
    let n = CLUSTER_MODES;
    let steps = [
        SymplecticOp::rotation(n, 0, -FRAC_PI_2),
        SymplecticOp::rotation(n, 2, FRAC_PI_2),
        beam_splitter(n, 0.8, 1, 2),
        beam_splitter(n, 0.5, 1, 0),
        beam_splitter(n, 0.5, 3, 2),
        SymplecticOp::rotation(n, 0, FRAC_PI_2),
        SymplecticOp::rotation(n, 2, FRAC_PI_2),
    ];
    steps
        .into_iter()
        .map(|s| s.expect("network parameters are valid"))
        .fold(SymplecticOp::identity(n), |acc, s| {
            acc.then(&s).expect("same mode count")
        })
}

/// Runs arbitrary four-mode resources (rail order) through [`resource_network`].
pub fn cluster_from_resources(resources: &GaussianState) -> Result<GaussianState> {
    if resources.n_modes() != CLUSTER_MODES {
        return invalid("cluster network needs exactly four resource modes");
    }
    apply(&resource_network(), resources)
}

/// Builds the approximate linear cluster from four resources at `squeezing_db`.
pub fn build_cluster(squeezing_db: f64) -> Result<ClusterResource> {
    let r = squeezing_db_to_r(squeezing_db)?;
    let state = cluster_from_resources(&squeezed_resources(r)?)?;
    Ok(ClusterResource {
        state,
        squeezing_db,
        r,
    })
}

/// Same state synthesized directly from the nullifier relations.
///
/// With chain adjacency `V` and coefficient matrix `K` the passive unitary is
/// `U = (I - iV)⁻¹ K`, i.e. real part `A = (I + V²)⁻¹ K` and imaginary part
/// `V A`; resources enter in label order.
pub fn build_cluster_canonical(squeezing_db: f64) -> Result<ClusterResource> {
    let r = squeezing_db_to_r(squeezing_db)?;
    let v = Matrix4::from_fn(|i, j| ADJACENCY[i][j]);
    let k = nullifier_coefficients();
    let a = (Matrix4::identity() + v * v)
        .try_inverse()
        .expect("I + V² is positive definite")
        * k;
    let b = v * a;
    let mut s = DMatrix::zeros(8, 8);
    for i in 0..4 {
        for j in 0..4 {
            s[(2 * i, 2 * j)] = a[(i, j)];
            s[(2 * i, 2 * j + 1)] = -b[(i, j)];
            s[(2 * i + 1, 2 * j)] = b[(i, j)];
            s[(2 * i + 1, 2 * j + 1)] = a[(i, j)];
        }
    }
    let op = SymplecticOp::new(s, DVector::zeros(8))?;
    let state = apply(&op, &squeezed_resources(r)?)?;
    Ok(ClusterResource {
        state,
        squeezing_db,
        r,
    })
}

/// Full 4×4 covariance of the nullifiers, read off the state.
pub fn nullifier_covariance(state: &GaussianState) -> Matrix4<f64> {
    let w = nullifier_weights();
    Matrix4::from_fn(|i, j| (w[i].transpose() * state.cov() * &w[j])[(0, 0)])
}

pub fn nullifier_report(resource: &ClusterResource) -> NullifierReport {
    let w = nullifier_weights();
    NullifierReport {
        var_delta: std::array::from_fn(|i| resource.state.linear_variance(&w[i])),
    }
}

/// Nullifier covariance predicted by the coefficient table, `K Kᵀ e^{-2r} / 4`.
pub fn predicted_nullifier_covariance(r: f64) -> Matrix4<f64> {
    let k = nullifier_coefficients();
    k * k.transpose() * ((-2.0 * r).exp() * VACUUM_VARIANCE)
}
