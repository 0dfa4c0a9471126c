//! Phase-space representation of multimode Gaussian states.
//!
//! Quadratures are interleaved per mode as `(x1, p1, x2, p2, ...)` and the
//! canonical convention is `a = x + i p`, so the vacuum has variance 1/4 in
//! every quadrature (shot-noise level).

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Quadrature variance of the vacuum.
pub const VACUUM_VARIANCE: f64 = 0.25;

/// Smallest measured-quadrature variance accepted by the conditional update.
pub const MIN_HOMODYNE_VARIANCE: f64 = 1e-300;

/// `(sin θ, cos θ)`, exact at integer multiples of π/2.
pub fn sin_cos(theta: f64) -> (f64, f64) {
    let quarter = theta / FRAC_PI_2;
    let nearest = quarter.round();
    if (quarter - nearest).abs() < 1e-12 {
        match (nearest as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        theta.sin_cos()
    }
}

/// Maps an angle into `(-π, π]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// The standard symplectic form `Ω = ⊕ [[0, 1], [-1, 0]]`.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for m in 0..n_modes {
        omega[(2 * m, 2 * m + 1)] = 1.0;
        omega[(2 * m + 1, 2 * m)] = -1.0;
    }
    omega
}

/// Phase-space rotation `[[cos θ, -sin θ], [sin θ, cos θ]]`, i.e. `a → e^{iθ} a`.
///
/// `rotation_matrix(π/2)` is the Fourier transform `(x, p) → (-p, x)`.
pub fn rotation_matrix(theta: f64) -> Matrix2<f64> {
    let (s, c) = sin_cos(theta);
    Matrix2::new(c, -s, s, c)
}

/// Squeezer `diag(e^{-r}, e^{r})`; positive `r` squeezes `x`.
pub fn squeeze_matrix(r: f64) -> Result<Matrix2<f64>> {
    if !r.is_finite() {
        return invalid(format!("squeezing parameter must be finite, got {r}"));
    }
    Ok(Matrix2::new((-r).exp(), 0.0, 0.0, r.exp()))
}

/// Mean vector and covariance matrix of an `N`-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return invalid(format!("mean length {dim} is not a positive even number"));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return invalid(format!(
                "covariance is {}x{}, expected {dim}x{dim}",
                cov.nrows(),
                cov.ncols()
            ));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return invalid("state contains non-finite entries");
        }
        let scale = cov.amax().max(f64::MIN_POSITIVE);
        for i in 0..dim {
            for j in (i + 1)..dim {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidState(format!(
                        "covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { mean, cov })
    }

    pub fn vacuum(n_modes: usize) -> Result<Self> {
        if n_modes < 1 {
            return invalid("a state needs at least one mode");
        }
        let dim = 2 * n_modes;
        Ok(Self {
            mean: DVector::zeros(dim),
            cov: DMatrix::identity(dim, dim) * VACUUM_VARIANCE,
        })
    }

    /// Single-mode coherent state with the given quadrature means.
    pub fn coherent(x: f64, p: f64) -> Self {
        Self {
            mean: DVector::from_vec(vec![x, p]),
            cov: DMatrix::identity(2, 2) * VACUUM_VARIANCE,
        }
    }

    /// Single-mode squeezed vacuum: `S(r)` followed by `R(phi)`.
    pub fn squeezed_vacuum(r: f64, phi: f64) -> Result<Self> {
        let s = rotation_matrix(phi) * squeeze_matrix(r)?;
        let cov = s * s.transpose() * VACUUM_VARIANCE;
        Ok(Self {
            mean: DVector::zeros(2),
            cov: DMatrix::from_column_slice(2, 2, cov.as_slice()),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn mode_mean(&self, mode: usize) -> Vector2<f64> {
        Vector2::new(self.mean[2 * mode], self.mean[2 * mode + 1])
    }

    pub fn mode_cov(&self, mode: usize) -> Matrix2<f64> {
        let i = 2 * mode;
        Matrix2::new(
            self.cov[(i, i)],
            self.cov[(i, i + 1)],
            self.cov[(i + 1, i)],
            self.cov[(i + 1, i + 1)],
        )
    }

    /// Tensor product `self ⊗ other`; the modes of `other` follow.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let (a, b) = (self.mean.len(), other.mean.len());
        let mut mean = DVector::zeros(a + b);
        mean.rows_mut(0, a).copy_from(&self.mean);
        mean.rows_mut(a, b).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(a + b, a + b);
        cov.view_mut((0, 0), (a, a)).copy_from(&self.cov);
        cov.view_mut((a, a), (b, b)).copy_from(&other.cov);
        GaussianState { mean, cov }
    }

    /// Marginal state of the listed modes, in the order given.
    pub fn reduced(&self, modes: &[usize]) -> Result<GaussianState> {
        let n = self.n_modes();
        if modes.is_empty() || modes.iter().any(|&m| m >= n) {
            return invalid(format!("mode list {modes:?} out of range for {n} modes"));
        }
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let mean = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.mean[i]));
        let cov = DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.cov[(idx[r], idx[c])]);
        Ok(GaussianState { mean, cov })
    }

    /// Mean of `x cos θ + p sin θ` on one mode.
    pub fn quadrature_mean(&self, mode: usize, angle: f64) -> f64 {
        let (s, c) = sin_cos(angle);
        c * self.mean[2 * mode] + s * self.mean[2 * mode + 1]
    }

    /// Variance of `x cos θ + p sin θ` on one mode.
    pub fn quadrature_variance(&self, mode: usize, angle: f64) -> f64 {
        let (s, c) = sin_cos(angle);
        let v = Vector2::new(c, s);
        (v.transpose() * self.mode_cov(mode) * v)[(0, 0)]
    }

    /// Variance of an arbitrary linear combination `wᵀ ξ` of all quadratures.
    pub fn linear_variance(&self, weights: &DVector<f64>) -> f64 {
        (weights.transpose() * &self.cov * weights)[(0, 0)]
    }

    /// Symplectic eigenvalues in ascending order (each listed once).
    ///
    /// Requires a positive-definite covariance.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        let eig = SymmetricEigen::new(self.cov.clone());
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::InvalidState(
                "covariance is not positive definite".into(),
            ));
        }
        let sqrt_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
        let root = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.transpose();
        let a = &root * symplectic_form(self.n_modes()) * &root;
        // AᵀA = -A² has every symplectic eigenvalue squared, twice.
        let gram = a.transpose() * &a;
        let mut nu: Vec<f64> = SymmetricEigen::new(gram)
            .eigenvalues
            .iter()
            .map(|&v| v.max(0.0).sqrt())
            .collect();
        nu.sort_by(f64::total_cmp);
        Ok(nu.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect())
    }

    /// Checks the uncertainty relation: every symplectic eigenvalue ≥ 1/4 - `tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.symplectic_eigenvalues()
            .map(|nu| nu.iter().all(|&v| v >= VACUUM_VARIANCE - tol))
            .unwrap_or(false)
    }

    /// Returns the state with `mode` shifted by `(dx, dp)`.
    pub fn displaced(&self, mode: usize, dx: f64, dp: f64) -> GaussianState {
        let mut out = self.clone();
        out.mean[2 * mode] += dx;
        out.mean[2 * mode + 1] += dp;
        out
    }
}

/// Affine phase-space map `ξ → S ξ + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticOp {
    matrix: DMatrix<f64>,
    displacement: DVector<f64>,
}

impl SymplecticOp {
    pub fn identity(n_modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(2 * n_modes, 2 * n_modes),
            displacement: DVector::zeros(2 * n_modes),
        }
    }

    /// Wraps a matrix after checking `S Ω Sᵀ = Ω` to `1e-12` (scaled by `|S|²`).
    pub fn new(matrix: DMatrix<f64>, displacement: DVector<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || matrix.ncols() != dim || displacement.len() != dim {
            return invalid("symplectic op dimensions are inconsistent");
        }
        let op = Self {
            matrix,
            displacement,
        };
        let scale = op.matrix.amax().powi(2).max(1.0);
        if op.symplectic_defect() > 1e-12 * scale {
            return invalid("matrix does not preserve the symplectic form");
        }
        Ok(op)
    }

    /// Embeds a 2×2 single-mode matrix acting on `mode`.
    pub fn local(n_modes: usize, mode: usize, block: &Matrix2<f64>) -> Result<Self> {
        if mode >= n_modes {
            return invalid(format!("mode {mode} out of range for {n_modes} modes"));
        }
        let mut op = Self::identity(n_modes);
        let i = 2 * mode;
        for r in 0..2 {
            for c in 0..2 {
                op.matrix[(i + r, i + c)] = block[(r, c)];
            }
        }
        Ok(op)
    }

    pub fn rotation(n_modes: usize, mode: usize, theta: f64) -> Result<Self> {
        Self::local(n_modes, mode, &rotation_matrix(theta))
    }

    pub fn squeezing(n_modes: usize, mode: usize, r: f64) -> Result<Self> {
        Self::local(n_modes, mode, &squeeze_matrix(r)?)
    }

    pub fn displacement(n_modes: usize, mode: usize, dx: f64, dp: f64) -> Result<Self> {
        if mode >= n_modes {
            return invalid(format!("mode {mode} out of range for {n_modes} modes"));
        }
        let mut op = Self::identity(n_modes);
        op.displacement[2 * mode] = dx;
        op.displacement[2 * mode + 1] = dp;
        Ok(op)
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn displacement_vector(&self) -> &DVector<f64> {
        &self.displacement
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &SymplecticOp) -> Result<SymplecticOp> {
        if self.matrix.nrows() != next.matrix.nrows() {
            return invalid("cannot compose ops on different mode counts");
        }
        Ok(SymplecticOp {
            matrix: &next.matrix * &self.matrix,
            displacement: &next.matrix * &self.displacement + &next.displacement,
        })
    }

    /// Max-abs entry of `S Ω Sᵀ - Ω`.
    pub fn symplectic_defect(&self) -> f64 {
        let omega = symplectic_form(self.n_modes());
        (&self.matrix * &omega * self.matrix.transpose() - omega).amax()
    }

    pub fn is_symplectic(&self, tol: f64) -> bool {
        self.symplectic_defect() <= tol
    }
}

/// Beam splitter of transmittance `t` between modes `a` and `b`.
///
/// Acts as `[[√t, -√(1-t)], [√(1-t), √t]]` on `(a_a, a_b)`; at `t = 1/2` this
/// is the input-coupling half beam splitter.
pub fn beam_splitter(n_modes: usize, t: f64, mode_a: usize, mode_b: usize) -> Result<SymplecticOp> {
    if !(0.0..=1.0).contains(&t) {
        return invalid(format!("transmittance {t} outside [0, 1]"));
    }
    if mode_a == mode_b || mode_a >= n_modes || mode_b >= n_modes {
        return invalid(format!(
            "beam splitter modes ({mode_a}, {mode_b}) invalid for {n_modes} modes"
        ));
    }
    let (st, sr) = (t.sqrt(), (1.0 - t).sqrt());
    let mut op = SymplecticOp::identity(n_modes);
    for q in 0..2 {
        let (ia, ib) = (2 * mode_a + q, 2 * mode_b + q);
        op.matrix[(ia, ia)] = st;
        op.matrix[(ia, ib)] = -sr;
        op.matrix[(ib, ia)] = sr;
        op.matrix[(ib, ib)] = st;
    }
    Ok(op)
}

/// `mean' = S mean + d`, `cov' = S cov Sᵀ`.
pub fn apply(op: &SymplecticOp, state: &GaussianState) -> Result<GaussianState> {
    if op.matrix.nrows() != state.mean.len() {
        return invalid(format!(
            "op acts on {} modes, state has {}",
            op.n_modes(),
            state.n_modes()
        ));
    }
    let mean = &op.matrix * &state.mean + &op.displacement;
    let cov = &op.matrix * &state.cov * op.matrix.transpose();
    // Re-symmetrize to keep rounding from accumulating across long op chains.
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(GaussianState { mean, cov })
}

/// Result of one homodyne detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneOutcome {
    pub mode: usize,
    /// Quadrature angle in `(-π, π]`.
    pub angle: f64,
    /// Measured value of `x cos θ + p sin θ`.
    pub value: f64,
}

/// Where a homodyne outcome comes from.
pub enum OutcomeSource<'a> {
    Sample(&'a mut dyn RngCore),
    Fixed(f64),
}

/// Outcome-independent part of a rank-one homodyne update.
///
/// Conditioning on `m` gives `mean' = mean_A + gain (m - marginal_mean)` and
/// `cov' = remaining_cov`.
#[derive(Debug, Clone)]
pub struct QuadratureConditioning {
    /// Prior mean of the measured quadrature.
    pub marginal_mean: f64,
    /// Prior variance `cᵀ σ_BB c` of the measured quadrature.
    pub variance: f64,
    /// `σ_AB c / (cᵀ σ_BB c)` over the unmeasured quadratures.
    pub gain: DVector<f64>,
    /// Conditional covariance of the unmeasured modes.
    pub remaining_cov: DMatrix<f64>,
    /// Quadrature indices (into the original state) that survive.
    pub kept: Vec<usize>,
    /// `c` embedded in the full quadrature vector.
    pub direction: DVector<f64>,
}

/// Computes the conditional update for measuring `x cos θ + p sin θ` on `mode`.
pub fn condition_on_quadrature(
    state: &GaussianState,
    mode: usize,
    angle: f64,
) -> Result<QuadratureConditioning> {
    let n = state.n_modes();
    if mode >= n {
        return invalid(format!("mode {mode} out of range for {n} modes"));
    }
    if n < 2 {
        return invalid("cannot measure the only mode of a state");
    }
    let (s, c) = sin_cos(angle);
    let (ix, ip) = (2 * mode, 2 * mode + 1);
    let variance = c * c * state.cov[(ix, ix)]
        + 2.0 * c * s * state.cov[(ix, ip)]
        + s * s * state.cov[(ip, ip)];
    if !(variance > MIN_HOMODYNE_VARIANCE) {
        return Err(Error::InvalidState(format!(
            "measured quadrature variance {variance:e} is not positive"
        )));
    }
    let kept: Vec<usize> = (0..2 * n).filter(|&i| i != ix && i != ip).collect();
    let cross = DVector::from_iterator(
        kept.len(),
        kept.iter()
            .map(|&i| c * state.cov[(i, ix)] + s * state.cov[(i, ip)]),
    );
    let gain = &cross / variance;
    let mut remaining_cov = DMatrix::from_fn(kept.len(), kept.len(), |r, k| {
        state.cov[(kept[r], kept[k])]
    });
    if cross.iter().any(|&v| v != 0.0) {
        remaining_cov -= &gain * cross.transpose();
        remaining_cov = (&remaining_cov + remaining_cov.transpose()) * 0.5;
    }
    let mut direction = DVector::zeros(2 * n);
    direction[ix] = c;
    direction[ip] = s;
    Ok(QuadratureConditioning {
        marginal_mean: c * state.mean[ix] + s * state.mean[ip],
        variance,
        gain,
        remaining_cov,
        kept,
        direction,
    })
}

/// Homodyne detection of `x cos θ + p sin θ` on `mode`; returns the outcome
/// and the conditional state of the remaining modes.
pub fn homodyne(
    state: &GaussianState,
    mode: usize,
    angle: f64,
    source: OutcomeSource<'_>,
) -> Result<(HomodyneOutcome, GaussianState)> {
    let cond = condition_on_quadrature(state, mode, angle)?;
    let value = match source {
        OutcomeSource::Fixed(v) => {
            if !v.is_finite() {
                return invalid("fixed homodyne outcome must be finite");
            }
            v
        }
        OutcomeSource::Sample(rng) => {
            let z: f64 = StandardNormal.sample(rng);
            cond.marginal_mean + cond.variance.sqrt() * z
        }
    };
    let innovation = value - cond.marginal_mean;
    let mut mean =
        DVector::from_iterator(cond.kept.len(), cond.kept.iter().map(|&i| state.mean[i]));
    if cond.gain.iter().any(|&g| g != 0.0) {
        mean += &cond.gain * innovation;
    }
    let outcome = HomodyneOutcome {
        mode,
        angle: normalize_angle(angle),
        value,
    };
    Ok((
        outcome,
        GaussianState {
            mean,
            cov: cond.remaining_cov,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vacuum_has_shot_noise_variance() {
        let v = GaussianState::vacuum(1).unwrap();
        assert_eq!(v.mean().as_slice(), &[0.0, 0.0]);
        assert_eq!(v.mode_cov(0), Matrix2::new(0.25, 0.0, 0.0, 0.25));
        for k in 0..16 {
            let theta = k as f64 * 0.37;
            assert_abs_diff_eq!(v.quadrature_variance(0, theta), 0.25, epsilon = 1e-15);
        }
        let v4 = GaussianState::vacuum(4).unwrap();
        assert_eq!(*v4.cov(), DMatrix::identity(8, 8) * 0.25);
        assert!(GaussianState::vacuum(0).is_err());
    }

    #[test]
    fn rotation_convention() {
        assert_eq!(rotation_matrix(0.0), Matrix2::identity());
        assert_eq!(rotation_matrix(FRAC_PI_2), Matrix2::new(0.0, -1.0, 1.0, 0.0));
        let twice = rotation_matrix(-FRAC_PI_2) * rotation_matrix(-FRAC_PI_2);
        assert_eq!(twice, -Matrix2::identity());
    }

    #[test]
    fn squeeze_convention() {
        assert_eq!(squeeze_matrix(0.0).unwrap(), Matrix2::identity());
        let r = 10f64.powf(10.0 / 20.0).ln();
        let s = squeeze_matrix(r).unwrap();
        assert_abs_diff_eq!(s[(0, 0)], 10f64.powf(-0.5), epsilon = 1e-15);
        assert_abs_diff_eq!(s[(1, 1)], 10f64.powf(0.5), epsilon = 1e-14);
        let prod = squeeze_matrix(0.7).unwrap() * squeeze_matrix(-0.7).unwrap();
        assert_abs_diff_eq!(prod, Matrix2::identity(), epsilon = 1e-15);
        assert!(squeeze_matrix(f64::NAN).is_err());
        assert!(squeeze_matrix(f64::INFINITY).is_err());
    }

    #[test]
    fn beam_splitter_entries() {
        assert_eq!(
            *beam_splitter(2, 1.0, 0, 1).unwrap().matrix(),
            DMatrix::identity(4, 4)
        );
        let h = beam_splitter(2, 0.5, 0, 1).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(h.matrix()[(0, 0)], s, epsilon = 1e-16);
        assert_abs_diff_eq!(h.matrix()[(0, 2)], -s, epsilon = 1e-16);
        assert_abs_diff_eq!(h.matrix()[(2, 0)], s, epsilon = 1e-16);
        assert_abs_diff_eq!(h.matrix()[(3, 3)], s, epsilon = 1e-16);
        assert!(h.is_symplectic(1e-15));
        let vac = GaussianState::vacuum(2).unwrap();
        let out = apply(&h, &vac).unwrap();
        assert_abs_diff_eq!(*out.cov(), DMatrix::identity(4, 4) * 0.25, epsilon = 1e-16);
        assert!(beam_splitter(2, 1.5, 0, 1).is_err());
        assert!(beam_splitter(2, -0.1, 0, 1).is_err());
        assert!(beam_splitter(2, 0.5, 1, 1).is_err());
        assert!(beam_splitter(2, 0.5, 0, 2).is_err());
    }

    #[test]
    fn apply_examples() {
        let vac = GaussianState::vacuum(1).unwrap();
        assert_eq!(apply(&SymplecticOp::identity(1), &vac).unwrap(), vac);

        let r = 0.8;
        let sq = apply(&SymplecticOp::squeezing(1, 0, r).unwrap(), &vac).unwrap();
        assert_abs_diff_eq!(sq.cov()[(0, 0)], (-2.0 * r).exp() / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sq.cov()[(1, 1)], (2.0 * r).exp() / 4.0, epsilon = 1e-14);

        let coh = GaussianState::coherent(3.0, 0.0);
        let rot = apply(&SymplecticOp::rotation(1, 0, FRAC_PI_2).unwrap(), &coh).unwrap();
        assert_eq!(rot.mean().as_slice(), &[0.0, 3.0]);

        assert!(apply(&SymplecticOp::identity(2), &vac).is_err());
    }

    #[test]
    fn squeezed_vacuum_is_pure() {
        let s = GaussianState::squeezed_vacuum(1.1, 0.4).unwrap();
        let nu = s.symplectic_eigenvalues().unwrap();
        assert_abs_diff_eq!(nu[0], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn homodyne_on_product_state_leaves_rest_untouched() {
        let a = GaussianState::squeezed_vacuum(0.6, 0.3).unwrap().displaced(0, 1.0, -2.0);
        let b = GaussianState::vacuum(1).unwrap();
        let joint = b.tensor(&a);
        let (out, rest) = homodyne(&joint, 0, 0.9, OutcomeSource::Fixed(1.7)).unwrap();
        assert_eq!(rest, a);
        assert_abs_diff_eq!(out.angle, 0.9);
        assert_eq!(out.value, 1.7);
    }

    #[test]
    fn homodyne_conditional_variance_matches_direct_formula() {
        // Two-mode state from a half beam splitter on (x-squeezed, p-squeezed)
        // vacua at r = ln 2. Oracle: the closed form 1/(4 cosh 2r) for the
        // conditional x-variance of the other mode after measuring x.
        let r = 2f64.ln();
        let sx = GaussianState::squeezed_vacuum(r, 0.0).unwrap();
        let sp = GaussianState::squeezed_vacuum(-r, 0.0).unwrap();
        let joint = apply(&beam_splitter(2, 0.5, 0, 1).unwrap(), &sx.tensor(&sp)).unwrap();
        let (_, rest) = homodyne(&joint, 0, 0.0, OutcomeSource::Fixed(0.3)).unwrap();
        // With e^{-2r} = 1/4 and e^{2r} = 4 both output x-variances are (lo + hi)/8
        // and their covariance is ±(hi - lo)/8.
        let (lo, hi) = (0.25f64, 4.0f64);
        let var = (lo + hi) / 8.0;
        let cov = (hi - lo) / 8.0;
        let expected = var - cov * cov / var;
        assert_abs_diff_eq!(rest.cov()[(0, 0)], expected, epsilon = 1e-14);
        assert_abs_diff_eq!(expected, 1.0 / (4.0 * (2.0 * r).cosh()), epsilon = 1e-15);
        // Conditional covariance does not depend on the outcome value.
        let (_, other) = homodyne(&joint, 0, 0.0, OutcomeSource::Fixed(-5.0)).unwrap();
        assert_eq!(rest.cov(), other.cov());
    }

    #[test]
    fn homodyne_mirror_symmetry() {
        let state = apply(
            &beam_splitter(2, 0.3, 0, 1).unwrap(),
            &GaussianState::coherent(1.0, 2.0).tensor(&GaussianState::squeezed_vacuum(0.5, 0.2).unwrap()),
        )
        .unwrap();
        let theta = 0.7;
        let a = condition_on_quadrature(&state, 1, theta).unwrap();
        let b = condition_on_quadrature(&state, 1, theta + PI).unwrap();
        assert_abs_diff_eq!(a.marginal_mean, -b.marginal_mean, epsilon = 1e-14);
        assert_abs_diff_eq!(a.variance, b.variance, epsilon = 1e-14);
    }

    #[test]
    fn homodyne_errors() {
        let vac = GaussianState::vacuum(2).unwrap();
        assert!(matches!(
            homodyne(&vac, 2, 0.0, OutcomeSource::Fixed(0.0)),
            Err(Error::InvalidArgument(_))
        ));
        let mut cov = DMatrix::identity(4, 4) * 0.25;
        cov[(0, 0)] = 0.0;
        let degenerate = GaussianState::new(DVector::zeros(4), cov).unwrap();
        assert!(matches!(
            homodyne(&degenerate, 0, 0.0, OutcomeSource::Fixed(0.0)),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn homodyne_sampling_is_seeded() {
        let state = GaussianState::coherent(0.5, -0.2).tensor(&GaussianState::vacuum(1).unwrap());
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            homodyne(&state, 0, 0.3, OutcomeSource::Sample(&mut rng)).unwrap().0.value
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn outcome_angle_is_normalized() {
        let state = GaussianState::vacuum(2).unwrap();
        let (o, _) = homodyne(&state, 0, 3.0 * PI, OutcomeSource::Fixed(0.0)).unwrap();
        assert_abs_diff_eq!(o.angle, PI, epsilon = 1e-12);
        let (o, _) = homodyne(&state, 0, -PI, OutcomeSource::Fixed(0.0)).unwrap();
        assert_abs_diff_eq!(o.angle, PI, epsilon = 1e-12);
    }

    #[test]
    fn asymmetric_covariance_rejected() {
        let mut cov = DMatrix::identity(2, 2) * 0.25;
        cov[(0, 1)] = 0.1;
        assert!(GaussianState::new(DVector::zeros(2), cov).is_err());
    }
}
