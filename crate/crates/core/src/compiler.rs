//! Compiles one-mode linear unitary Bogoliubov (LUBO) targets into homodyne
//! angle schedules, and splits each computation step into rotation-squeeze-rotation.
//!
//! Angles derived from a gain `k` use `θ = arctan(1/k)` on the principal
//! branch `(-90°, 90°]`, with `k = ±∞` giving `θ = 0`. Angles `θ` and `θ + 180°`
//! measure the same quadrature up to sign and produce the same gate.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::engine::{
    excess_noise_coefficients, heisenberg_model, tele_matrix, AngleSchedule,
};
use crate::error::{invalid, Error, Result};
use crate::gaussian::{rotation_matrix, sin_cos, squeeze_matrix};

/// Gate reconstruction tolerance for compiled schedules.
pub const GATE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetLabel {
    Fourier,
    XSqueeze { a_db: f64 },
    Custom,
}

/// A one-mode symplectic target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LuboTarget {
    matrix: Matrix2<f64>,
    label: TargetLabel,
}

impl LuboTarget {
    pub fn new(matrix: Matrix2<f64>) -> Result<Self> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return invalid("target matrix has non-finite entries");
        }
        let det = matrix.determinant();
        if (det - 1.0).abs() >= 1e-10 {
            return invalid(format!("target determinant {det} is not 1"));
        }
        Ok(Self {
            matrix,
            label: TargetLabel::Custom,
        })
    }

    /// `(x, p) → (-p, x)`.
    pub fn fourier() -> Self {
        Self {
            matrix: Matrix2::new(0.0, -1.0, 1.0, 0.0),
            label: TargetLabel::Fourier,
        }
    }

    /// `diag(10^{-a/20}, 10^{a/20})`.
    pub fn x_squeeze(a_db: f64) -> Result<Self> {
        if !a_db.is_finite() {
            return invalid("squeezing level must be finite");
        }
        let g = 10f64.powf(a_db / 20.0);
        Ok(Self {
            matrix: Matrix2::new(1.0 / g, 0.0, 0.0, g),
            label: TargetLabel::XSqueeze { a_db },
        })
    }

    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.matrix
    }

    pub fn label(&self) -> TargetLabel {
        self.label
    }
}

/// `R(varphi) S(r) R(phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsrDecomposition {
    pub varphi: f64,
    pub r: f64,
    pub phi: f64,
}

impl RsrDecomposition {
    pub fn reconstruct(&self) -> Matrix2<f64> {
        rotation_matrix(self.varphi)
            * squeeze_matrix(self.r).expect("finite by construction")
            * rotation_matrix(self.phi)
    }
}

/// `M_tele(θin, θ1) = R(-θ+/2) S(ln tan(θ-/2)) R(-θ+/2)`.
pub fn decompose_tele(theta_in: f64, theta_1: f64) -> Result<RsrDecomposition> {
    let minus = theta_in - theta_1;
    if sin_cos(minus).0.abs() <= crate::engine::SINGULAR_GUARD {
        return Err(Error::SingularSchedule(
            "sin(theta_in - theta_1) vanishes".into(),
        ));
    }
    let t = (minus / 2.0).tan();
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Branch(format!(
            "tan(theta_minus / 2) = {t} is not positive; ln is undefined"
        )));
    }
    let rot = -(theta_in + theta_1) / 2.0;
    Ok(RsrDecomposition {
        varphi: rot,
        r: t.ln(),
        phi: rot,
    })
}

/// `M(k) = R(φ) S(r) R(φ)` with `k = 1/tan θ`,
/// `r = ln((√(k²+4) + k)/2)` and `φ = π/2 - arctan((√(k²+4) - k)/2)`.
pub fn decompose_elementary(theta: f64) -> Result<RsrDecomposition> {
    let (s, c) = sin_cos(theta);
    if s.abs() <= crate::engine::SINGULAR_GUARD {
        return Err(Error::SingularSchedule(format!(
            "sin(theta) = {s:e} makes k infinite"
        )));
    }
    let k = c / s;
    let root = (k * k + 4.0).sqrt();
    // (√(k²+4) + k)/2 loses precision for k ≪ 0; use its reciprocal identity.
    let big = if k >= 0.0 { (root + k) / 2.0 } else { 2.0 / (root - k) };
    let small = if k <= 0.0 { (root - k) / 2.0 } else { 2.0 / (root + k) };
    let phi = FRAC_PI_2 - small.atan();
    Ok(RsrDecomposition {
        varphi: phi,
        r: big.ln(),
        phi,
    })
}

/// Principal-branch angle for a gain `k`: `arctan(1/k)` in `(-π/2, π/2]`.
pub fn angle_from_k(k: f64) -> f64 {
    if k.is_infinite() {
        return 0.0;
    }
    let theta = (1.0 / k).atan();
    if theta <= -FRAC_PI_2 {
        FRAC_PI_2
    } else {
        theta
    }
}

fn principal(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(PI);
    if t > FRAC_PI_2 {
        t -= PI;
    }
    t
}

/// Fourier schedule `(90°, 0°, 90°, 90°)`: `k = (0, ∞, 0, 0)`.
pub fn compile_fourier() -> AngleSchedule {
    AngleSchedule::new(FRAC_PI_2, 0.0, FRAC_PI_2, FRAC_PI_2)
}

/// Which stationary point of the x-variance to use above `10^{a/10} = 3/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KinBranch {
    Minus,
    Plus,
}

/// Input-angle gain that minimizes the output x-noise of an `a` dB x-squeezer.
pub fn x_squeeze_optimal_kin(a_db: f64, branch: KinBranch) -> Result<f64> {
    if !(a_db > 0.0) || !a_db.is_finite() {
        return invalid(format!("squeezing gate level must be > 0 dB, got {a_db}"));
    }
    let g = 10f64.powf(a_db / 20.0);
    let g2 = 10f64.powf(a_db / 10.0);
    if g2 <= 1.5 {
        return Ok(-1.0 / g);
    }
    let root = (2.0 * g2 - 3.0).sqrt();
    let sign = match branch {
        KinBranch::Minus => -1.0,
        KinBranch::Plus => 1.0,
    };
    Ok(2.0 * (-2.0 * g + sign * root) / (3.0 + 2.0 * g2))
}

/// The remaining gains `(k1, k2, k3)` of an `a` dB x-squeezer given `k_in`.
pub fn x_squeeze_gains(a_db: f64, k_in: f64) -> (f64, f64, f64) {
    let g = 10f64.powf(a_db / 20.0);
    let g2 = 10f64.powf(a_db / 10.0);
    let k1 = k_in / (1.0 + 2.0 * g * k_in);
    let k2 = (1.0 + g * k_in) / k_in;
    let k3 = (1.0 + g * k_in) / (g2 * k_in);
    (k1, k2, k3)
}

pub fn x_squeeze_schedule_for_kin(a_db: f64, k_in: f64) -> AngleSchedule {
    let (k1, k2, k3) = x_squeeze_gains(a_db, k_in);
    AngleSchedule::new(
        angle_from_k(k_in),
        angle_from_k(k1),
        angle_from_k(k2),
        angle_from_k(k3),
    )
}

pub fn compile_x_squeeze_branch(a_db: f64, branch: KinBranch) -> Result<AngleSchedule> {
    let k_in = x_squeeze_optimal_kin(a_db, branch)?;
    Ok(x_squeeze_schedule_for_kin(a_db, k_in))
}

/// `a` dB x-squeezer with the noise-optimal `k_in` (minus branch).
pub fn compile_x_squeeze(a_db: f64) -> Result<AngleSchedule> {
    compile_x_squeeze_branch(a_db, KinBranch::Minus)
}

/// What [`compile_custom`] minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseObjective {
    /// `(Δδx)² + (Δδp)²`.
    #[default]
    Sum,
    /// `(Δδx)²` only.
    XOnly,
}

impl NoiseObjective {
    /// Objective on the `e^{-2r}/4` coefficients.
    pub fn value(self, cx: f64, cp: f64) -> f64 {
        match self {
            NoiseObjective::Sum => cx + cp,
            NoiseObjective::XOnly => cx,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CustomCompilation {
    pub schedule: AngleSchedule,
    pub objective: NoiseObjective,
    /// `(cx, cp)` with `(Δδx)² = cx e^{-2r}/4`, `(Δδp)² = cp e^{-2r}/4`.
    pub noise_coefficients: (f64, f64),
    pub objective_value: f64,
    /// Largest entrywise deviation of the compiled gate from the target.
    pub gate_error: f64,
    pub grid_points: usize,
    pub feasible_points: usize,
}

/// Number of `θ_in` samples in the scan, `-90°..=90°` in 0.25° steps.
pub const SCAN_POINTS: usize = 721;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Failure {
    UnboundedK3,
    UnboundedK2,
    Degenerate,
    Guard,
    Mismatch,
}

const FAILURE_NAMES: [&str; 5] = [
    "k3 unbounded",
    "k2 unbounded",
    "no coupling angle",
    "singular guard",
    "gate mismatch",
];

fn elementary_inverse(k2: f64, k3: f64) -> Matrix2<f64> {
    // (M(k3) M(k2))⁻¹
    Matrix2::new(-1.0, -k3, k2, k2 * k3 - 1.0)
}

fn optimal_free_k2(k3: f64, objective: NoiseObjective) -> f64 {
    match objective {
        NoiseObjective::Sum => k3 / (2.0 * (1.0 + k3 * k3)),
        NoiseObjective::XOnly if k3 != 0.0 => 1.0 / (2.0 * k3),
        NoiseObjective::XOnly => 0.0,
    }
}

/// Solves `M(k3) M(k2) M_tele(θin, θ1) = target` at a fixed input angle.
fn solve_at(
    target: &Matrix2<f64>,
    theta_in: f64,
    objective: NoiseObjective,
) -> std::result::Result<(AngleSchedule, f64, (f64, f64), f64), Failure> {
    let (a, b, g, d) = (target[(0, 0)], target[(0, 1)], target[(1, 0)], target[(1, 1)]);
    let (s, c) = sin_cos(theta_in);
    let scale = target.amax().max(1.0);
    let tiny = 1e-12 * scale;

    let den = c * d - s * g;
    if den.abs() <= tiny {
        return Err(Failure::UnboundedK3);
    }
    let k3 = (s * a + c * (1.0 - b)) / den;
    let q = b + k3 * d;
    let k2 = if c.abs() <= 1e-12 {
        if (1.0 + q).abs() > 1e-9 * scale {
            return Err(Failure::Degenerate);
        }
        optimal_free_k2(k3, objective)
    } else {
        if (c * q).abs() <= tiny {
            return Err(Failure::UnboundedK2);
        }
        (s * (1.0 + q) + c * d) / (c * q)
    };
    if !k2.is_finite() || !k3.is_finite() {
        return Err(Failure::UnboundedK2);
    }

    let tele = elementary_inverse(k2, k3) * target;
    let (m00, m11) = (tele[(0, 0)], tele[(1, 1)]);
    let v1 = (m00 * c, m00 * s - 2.0 * c);
    let v2 = (2.0 * s - m11 * c, -m11 * s);
    let n1 = v1.0.hypot(v1.1);
    let n2 = v2.0.hypot(v2.1);
    let v = if n1 >= n2 { v1 } else { v2 };
    if n1.max(n2) <= 1e-14 {
        return Err(Failure::Degenerate);
    }
    let theta_1 = principal(v.1.atan2(v.0));

    let schedule = AngleSchedule::new(
        principal(theta_in),
        theta_1,
        angle_from_k(k2),
        angle_from_k(k3),
    );
    let model = heisenberg_model(&schedule).map_err(|_| Failure::Guard)?;
    let err = (model.gate - target).amax();
    if !(err <= 0.1 * GATE_TOLERANCE * scale) {
        return Err(Failure::Mismatch);
    }
    let [_, _, k2s, k3s] = schedule.k_values();
    let coeffs = excess_noise_coefficients(k2s, k3s).map_err(|_| Failure::Guard)?;
    Ok((schedule, objective.value(coeffs.0, coeffs.1), coeffs, err))
}

/// Finds a schedule realizing `target` with minimal excess noise.
///
/// The free input angle is scanned over [`SCAN_POINTS`] values and the best
/// point is refined by golden-section search within one grid step. Ties go to
/// the smaller `|k_in|`.
pub fn compile_custom(target: &LuboTarget, objective: NoiseObjective) -> Result<CustomCompilation> {
    let t = target.matrix();
    let mut failures = [0usize; 5];
    let mut best: Option<(f64, AngleSchedule, (f64, f64), f64)> = None;
    let mut feasible = 0;
    let step = (0.25f64).to_radians();

    let better = |cand: f64, cand_kin: f64, best: &Option<(f64, AngleSchedule, (f64, f64), f64)>| {
        match best {
            None => true,
            Some((v, s, _, _)) => {
                let tol = 1e-12 * v.abs().max(1e-300);
                cand < v - tol || ((cand - v).abs() <= tol && cand_kin.abs() < s.k_values()[0].abs())
            }
        }
    };

    for i in 0..SCAN_POINTS {
        let theta_in = (-90.0 + 0.25 * i as f64).to_radians();
        match solve_at(t, theta_in, objective) {
            Ok((sched, value, coeffs, err)) => {
                feasible += 1;
                if better(value, sched.k_values()[0], &best) {
                    best = Some((value, sched, coeffs, err));
                }
            }
            Err(f) => failures[f as usize] += 1,
        }
    }

    let Some((mut best_value, mut best_sched, mut best_coeffs, mut best_err)) = best else {
        let detail: Vec<String> = FAILURE_NAMES
            .iter()
            .zip(failures)
            .filter(|(_, n)| *n > 0)
            .map(|(name, n)| format!("{name}: {n}"))
            .collect();
        return Err(Error::Infeasible(format!(
            "no grid point of {SCAN_POINTS} gives a valid schedule ({})",
            detail.join(", ")
        )));
    };

    // Golden-section refinement around the best grid point.
    let eval = |theta: f64| solve_at(t, theta, objective).ok();
    let center = best_sched.theta_in;
    let (mut lo, mut hi) = (center - step, center + step);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let f = |x: f64| eval(x).map_or(f64::INFINITY, |r| r.1);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (hi - lo).abs() < 1e-14 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    for x in [x1, x2, 0.5 * (lo + hi)] {
        if let Some((sched, value, coeffs, err)) = eval(x) {
            if value < best_value {
                best_value = value;
                best_sched = sched;
                best_coeffs = coeffs;
                best_err = err;
            }
        }
    }

    Ok(CustomCompilation {
        schedule: best_sched,
        objective,
        noise_coefficients: best_coeffs,
        objective_value: best_value,
        gate_error: best_err,
        grid_points: SCAN_POINTS,
        feasible_points: feasible,
    })
}

/// Objective values of every feasible grid point, for inspecting the scan.
pub fn scan_objective(target: &LuboTarget, objective: NoiseObjective) -> Vec<(f64, f64)> {
    (0..SCAN_POINTS)
        .filter_map(|i| {
            let theta_in = (-90.0 + 0.25 * i as f64).to_radians();
            solve_at(target.matrix(), theta_in, objective)
                .ok()
                .map(|(_, v, _, _)| (theta_in, v))
        })
        .collect()
}

/// Gate produced by a schedule's teleportation step alone.
pub fn tele_gate(schedule: &AngleSchedule) -> Matrix2<f64> {
    tele_matrix(schedule.theta_in, schedule.theta_1)
}
