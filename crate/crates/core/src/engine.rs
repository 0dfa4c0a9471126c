//! One-way computation on the four-mode cluster.
//!
//! The input is coupled to cluster mode 1 by a half beam splitter, modes
//! `in, 1, 2, 3` are measured by homodyne detection at the scheduled angles,
//! and mode 4 is displaced by the feed-forward correction. Two independent
//! routes compute the output:
//!
//! * [`heisenberg_model`] / [`run_analytic`]: closed-form input-output relation
//!   `ξ_out = M(k3) M(k2) M_tele ξ_in + noise`, with feed-forward gains
//!   cancelling the measured quadratures.
//! * [`run_monte_carlo`]: sequential conditional Gaussian updates on the full
//!   five-mode state, sampling each outcome in turn.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use nalgebra::{DMatrix, DVector, Matrix2, Matrix2x4, Matrix4, RowVector4, Vector2, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::ClusterResource;
use crate::error::{invalid, Error, Result};
use crate::gaussian::{
    apply, beam_splitter, condition_on_quadrature, homodyne, sin_cos, GaussianState,
    HomodyneOutcome, OutcomeSource, VACUUM_VARIANCE,
};

/// `|sin|` below this makes a schedule singular.
pub const SINGULAR_GUARD: f64 = 1e-9;

/// Homodyne angles (radians) for modes `in, 1, 2, 3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleSchedule {
    pub theta_in: f64,
    pub theta_1: f64,
    pub theta_2: f64,
    pub theta_3: f64,
}

impl AngleSchedule {
    pub fn new(theta_in: f64, theta_1: f64, theta_2: f64, theta_3: f64) -> Self {
        Self {
            theta_in,
            theta_1,
            theta_2,
            theta_3,
        }
    }

    pub fn from_degrees(deg: [f64; 4]) -> Self {
        let [a, b, c, d] = deg.map(f64::to_radians);
        Self::new(a, b, c, d)
    }

    pub fn angles(&self) -> [f64; 4] {
        [self.theta_in, self.theta_1, self.theta_2, self.theta_3]
    }

    pub fn degrees(&self) -> [f64; 4] {
        self.angles().map(f64::to_degrees)
    }

    /// `k = 1 / tan θ` for each angle; `±∞` where `sin θ = 0`.
    pub fn k_values(&self) -> [f64; 4] {
        self.angles().map(cot)
    }

    pub fn theta_plus(&self) -> f64 {
        self.theta_in + self.theta_1
    }

    pub fn theta_minus(&self) -> f64 {
        self.theta_in - self.theta_1
    }

    /// Checks that the teleportation step and both feed-forward gains are finite.
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.theta_minus(), "sin(theta_in - theta_1)"),
            (self.theta_2, "sin(theta_2)"),
            (self.theta_3, "sin(theta_3)"),
        ];
        for (angle, name) in checks {
            let s = sin_cos(angle).0;
            if s.abs() <= SINGULAR_GUARD {
                return Err(Error::SingularSchedule(format!(
                    "{name} = {s:e} is within {SINGULAR_GUARD:e} of zero"
                )));
            }
        }
        Ok(())
    }
}

fn cot(theta: f64) -> f64 {
    let (s, c) = sin_cos(theta);
    c / s
}

/// Elementary one-mode step `M(k) = [[-k, -1], [1, 0]]`.
pub fn elementary_matrix(k: f64) -> Matrix2<f64> {
    Matrix2::new(-k, -1.0, 1.0, 0.0)
}

/// Teleportation coupling `M_tele(θ+, θ-)` from the two measurement angles.
pub fn tele_matrix(theta_in: f64, theta_1: f64) -> Matrix2<f64> {
    let (sp, cp) = sin_cos(theta_in + theta_1);
    let (sm, cm) = sin_cos(theta_in - theta_1);
    Matrix2::new((cm + cp) / sm, sp / sm, -sp / sm, (cp - cm) / sm)
}

/// Gain on `(m_in, m_1)` before the elementary steps,
/// `(√2 / sin θ-) [[-cos θ1, -cos θin], [sin θ1, sin θin]]`.
///
/// Equal to `M_M(θ+, θ-) diag(1/sin θin, 1/sin θ1)` wherever that is defined
/// and finite at `θin = 0` or `θ1 = 0`.
pub fn tele_feedforward_gain(theta_in: f64, theta_1: f64) -> Matrix2<f64> {
    let (si, ci) = sin_cos(theta_in);
    let (s1, c1) = sin_cos(theta_1);
    let sm = sin_cos(theta_in - theta_1).0;
    Matrix2::new(-c1, -ci, s1, si) * (SQRT_2 / sm)
}

/// Linear input-output relation of one schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct HeisenbergModel {
    /// `M(k3) M(k2) M_tele`.
    pub gate: Matrix2<f64>,
    /// Gain multiplying `(m_in, m_1)`.
    pub ff_gain_tele: Matrix2<f64>,
    /// Gain multiplying `m_2`.
    pub ff_gain_2: Vector2<f64>,
    /// Gain multiplying `m_3`.
    pub ff_gain_3: Vector2<f64>,
    /// Maps `e^{-r} (p1S, p2S, p3S, p4S)` into `(δx, δp)`.
    pub noise_map: Matrix2x4<f64>,
}

impl HeisenbergModel {
    /// Feed-forward matrix over outcomes `(m_in, m_1, m_2, m_3)`.
    pub fn feedforward_matrix(&self) -> Matrix2x4<f64> {
        let mut f = Matrix2x4::zeros();
        f.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.ff_gain_tele);
        f.set_column(2, &self.ff_gain_2);
        f.set_column(3, &self.ff_gain_3);
        f
    }

    /// Covariance of `(δx, δp)` at resource squeezing `r`, cross term included.
    pub fn noise_cov(&self, r: f64) -> Matrix2<f64> {
        self.noise_map * self.noise_map.transpose() * ((-2.0 * r).exp() * VACUUM_VARIANCE)
    }
}

pub fn heisenberg_model(schedule: &AngleSchedule) -> Result<HeisenbergModel> {
    schedule.validate()?;
    let [_, _, k2, k3] = schedule.k_values();
    let m2 = elementary_matrix(k2);
    let m3 = elementary_matrix(k3);
    let steps = m3 * m2;
    let gate = steps * tele_matrix(schedule.theta_in, schedule.theta_1);
    let ff_gain_tele = steps * tele_feedforward_gain(schedule.theta_in, schedule.theta_1);
    let ff_gain_2 = m3 * Vector2::new(1.0 / sin_cos(schedule.theta_2).0, 0.0);
    let ff_gain_3 = Vector2::new(1.0 / sin_cos(schedule.theta_3).0, 0.0);
    let a = 2.5f64.sqrt();
    let noise_map = Matrix2x4::new(
        FRAC_1_SQRT_2 - SQRT_2 * k2 * k3,
        -a,
        a * k3,
        FRAC_1_SQRT_2 * k3,
        SQRT_2 * k2,
        0.0,
        -a,
        FRAC_1_SQRT_2,
    );
    Ok(HeisenbergModel {
        gate,
        ff_gain_tele,
        ff_gain_2,
        ff_gain_3,
        noise_map,
    })
}

/// Noise-variance coefficients `(cx, cp)` with `Var δ = c e^{-2r} / 4`.
pub fn excess_noise_coefficients(k2: f64, k3: f64) -> Result<(f64, f64)> {
    if !k2.is_finite() || !k3.is_finite() {
        return Err(Error::SingularSchedule(format!(
            "elementary-step gains must be finite (k2 = {k2}, k3 = {k3})"
        )));
    }
    let lead = FRAC_1_SQRT_2 - SQRT_2 * k2 * k3;
    Ok((lead * lead + 2.5 + 3.0 * k3 * k3, 3.0 + 2.0 * k2 * k2))
}

/// `((Δδx)², (Δδp)²)` for a schedule at resource squeezing `r`.
pub fn excess_noise(schedule: &AngleSchedule, r: f64) -> Result<(f64, f64)> {
    let [_, _, k2, k3] = schedule.k_values();
    let (cx, cp) = excess_noise_coefficients(k2, k3)?;
    let scale = (-2.0 * r).exp() * VACUUM_VARIANCE;
    Ok((cx * scale, cp * scale))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub output_mean: Vector2<f64>,
    pub output_cov: Matrix2<f64>,
    /// `((Δδx)², (Δδp)²)`.
    pub excess_var: (f64, f64),
}

fn single_mode(input: &GaussianState) -> Result<(Vector2<f64>, Matrix2<f64>)> {
    if input.n_modes() != 1 {
        return invalid(format!("input must be one mode, got {}", input.n_modes()));
    }
    Ok((input.mode_mean(0), input.mode_cov(0)))
}

pub fn run_analytic(
    input: &GaussianState,
    schedule: &AngleSchedule,
    resource: &ClusterResource,
) -> Result<RunResult> {
    let (mean, cov) = single_mode(input)?;
    let model = heisenberg_model(schedule)?;
    let noise = model.noise_cov(resource.r);
    Ok(RunResult {
        output_mean: model.gate * mean,
        output_cov: model.gate * cov * model.gate.transpose() + noise,
        excess_var: (noise[(0, 0)], noise[(1, 1)]),
    })
}

/// Power trace point: LO angle (radians) and `(mᵀc)² + cᵀσc` in dB over shot noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseScanPoint {
    pub theta: f64,
    pub power_db: f64,
}

pub fn phase_scan(result: &RunResult, n_points: usize) -> Result<Vec<PhaseScanPoint>> {
    quadrature_power_trace(&result.output_mean, &result.output_cov, n_points)
}

/// Phase scan of an arbitrary one-mode mean and covariance.
pub fn quadrature_power_trace(
    mean: &Vector2<f64>,
    cov: &Matrix2<f64>,
    n_points: usize,
) -> Result<Vec<PhaseScanPoint>> {
    if n_points < 2 {
        return invalid("phase scan needs at least two points");
    }
    Ok((0..n_points)
        .map(|i| {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / n_points as f64;
            let (s, c) = sin_cos(theta);
            let dir = Vector2::new(c, s);
            let m = dir.dot(mean);
            let power = m * m + (dir.transpose() * cov * dir)[(0, 0)];
            PhaseScanPoint {
                theta,
                power_db: 10.0 * (power / VACUUM_VARIANCE).log10(),
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Conditional-update path
// ---------------------------------------------------------------------------

/// Mode labels of the five-mode working state.
const MODE_IN: usize = 0;
const MODE_OUT: usize = 4;

/// Input coupled to the cluster: modes `(in, 1, 2, 3, 4)`.
pub fn coupled_state(input: &GaussianState, resource: &ClusterResource) -> Result<GaussianState> {
    single_mode(input)?;
    if resource.state.n_modes() != 4 {
        return invalid("cluster resource must have four modes");
    }
    let joint = input.tensor(&resource.state);
    apply(&beam_splitter(5, 0.5, MODE_IN, 1)?, &joint)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarloOptions {
    /// Apply the feed-forward displacement to mode 4.
    pub feed_forward: bool,
    /// Order in which `in, 1, 2, 3` (labels 0..3) are measured.
    pub order: [usize; 4],
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        Self {
            feed_forward: true,
            order: [0, 1, 2, 3],
        }
    }
}

/// One sequential measurement, with the measured quadrature's conditional mean
/// written as an affine function `coeffs · (1, m_in, m_1, m_2, m_3)`.
#[derive(Debug, Clone)]
struct PlanStep {
    label: usize,
    constant: f64,
    outcome_coeffs: RowVector4<f64>,
    std_dev: f64,
}

/// Outcome-independent bookkeeping of the four conditional updates.
#[derive(Debug, Clone)]
pub struct MeasurementPlan {
    steps: Vec<PlanStep>,
    angles: [f64; 4],
    /// Conditional mean of mode 4 = `base_mean + outcome_map · m`.
    pub base_mean: Vector2<f64>,
    pub outcome_map: Matrix2x4<f64>,
    /// Conditional covariance of mode 4 (identical for every outcome).
    pub conditional_cov: Matrix2<f64>,
    pub feedforward: Matrix2x4<f64>,
}

impl MeasurementPlan {
    pub fn build(
        input: &GaussianState,
        schedule: &AngleSchedule,
        resource: &ClusterResource,
        order: [usize; 4],
    ) -> Result<Self> {
        let mut sorted = order;
        sorted.sort_unstable();
        if sorted != [0, 1, 2, 3] {
            return invalid(format!("measurement order {order:?} is not a permutation of 0..4"));
        }
        let model = heisenberg_model(schedule)?;
        let angles = schedule.angles();
        let mut state = coupled_state(input, resource)?;
        // Column 0: constant term; column 1 + j: coefficient on outcome j.
        let mut affine = DMatrix::zeros(10, 5);
        affine.set_column(0, state.mean());
        let mut labels: Vec<usize> = (0..5).collect();
        let mut steps = Vec::with_capacity(4);
        for &label in &order {
            let idx = labels.iter().position(|&l| l == label).expect("label present");
            let cond = condition_on_quadrature(&state, idx, angles[label])?;
            let marginal = cond.direction.transpose() * &affine;
            let mut next = DMatrix::from_fn(cond.kept.len(), 5, |r, c| affine[(cond.kept[r], c)]);
            let mut innovation = -marginal.clone();
            innovation[1 + label] += 1.0;
            next += &cond.gain * innovation;
            steps.push(PlanStep {
                label,
                constant: marginal[0],
                outcome_coeffs: RowVector4::new(marginal[1], marginal[2], marginal[3], marginal[4]),
                std_dev: cond.variance.sqrt(),
            });
            affine = next;
            labels.remove(idx);
            state = GaussianState::new(
                DVector::from_column_slice(affine.column(0).as_slice()),
                cond.remaining_cov,
            )?;
        }
        debug_assert_eq!(labels, vec![MODE_OUT]);
        Ok(Self {
            steps,
            angles,
            base_mean: Vector2::new(affine[(0, 0)], affine[(1, 0)]),
            outcome_map: Matrix2x4::from_fn(|r, c| affine[(r, c + 1)]),
            conditional_cov: state.mode_cov(0),
            feedforward: model.feedforward_matrix(),
        })
    }

    /// Draws the four outcomes (indexed by label) with one generator.
    pub fn sample_outcomes(&self, rng: &mut ChaCha8Rng) -> Vector4<f64> {
        let mut m = Vector4::zeros();
        for step in &self.steps {
            let z: f64 = StandardNormal.sample(rng);
            m[step.label] = step.constant + step.outcome_coeffs.dot(&m.transpose()) + step.std_dev * z;
        }
        m
    }

    /// Conditional mean of mode 4 given outcomes, with or without feed-forward.
    pub fn output_mean(&self, outcomes: &Vector4<f64>, feed_forward: bool) -> Vector2<f64> {
        let raw = self.base_mean + self.outcome_map * outcomes;
        if feed_forward {
            raw - self.feedforward * outcomes
        } else {
            raw
        }
    }

    /// Mean and covariance of the outcome vector implied by the sequential updates.
    pub fn outcome_moments(&self) -> (Vector4<f64>, Matrix4<f64>) {
        // m = c + A m + D z with A strictly "earlier"-triangular.
        let mut a = Matrix4::zeros();
        let mut c = Vector4::zeros();
        let mut d = Matrix4::zeros();
        for step in &self.steps {
            a.set_row(step.label, &step.outcome_coeffs);
            c[step.label] = step.constant;
            d[(step.label, step.label)] = step.std_dev;
        }
        let lower = (Matrix4::identity() - a)
            .try_inverse()
            .expect("triangular in measurement order");
        let mean = lower * c;
        let l = lower * d;
        (mean, l * l.transpose())
    }

    /// Exact outcome-averaged moments of mode 4 after feed-forward
    /// (law of total covariance over the conditional path).
    pub fn averaged_moments(&self, feed_forward: bool) -> (Vector2<f64>, Matrix2<f64>) {
        let (m_mean, m_cov) = self.outcome_moments();
        let map = if feed_forward {
            self.outcome_map - self.feedforward
        } else {
            self.outcome_map
        };
        let mean = self.base_mean + map * m_mean;
        let cov = self.conditional_cov + map * m_cov * map.transpose();
        (mean, (cov + cov.transpose()) * 0.5)
    }

    pub fn angles(&self) -> [f64; 4] {
        self.angles
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    /// Outcomes for `in, 1, 2, 3`.
    pub outcomes: [HomodyneOutcome; 4],
    /// Mode-4 mean after the (optional) feed-forward displacement.
    pub output_mean: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct MonteCarloRun {
    /// Empirical output statistics; `excess_var` is the empirical variance in
    /// excess of the ideal `gate σ_in gateᵀ`.
    pub empirical: RunResult,
    pub mean_std_err: Vector2<f64>,
    /// Conditional covariance of mode 4 (same for every shot).
    pub conditional_cov: Matrix2<f64>,
    /// Exact outcome-averaged output moments from the conditional path.
    pub averaged_mean: Vector2<f64>,
    pub averaged_cov: Matrix2<f64>,
    pub shots: Vec<ShotRecord>,
    pub seed: u64,
}

pub fn run_monte_carlo(
    input: &GaussianState,
    schedule: &AngleSchedule,
    resource: &ClusterResource,
    shots: usize,
    seed: u64,
) -> Result<MonteCarloRun> {
    run_monte_carlo_with(input, schedule, resource, shots, seed, &MonteCarloOptions::default())
}

/// Per-shot generator: stream `shot` of the master seed.
fn shot_rng(seed: u64, shot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot as u64);
    rng
}

pub fn run_monte_carlo_with(
    input: &GaussianState,
    schedule: &AngleSchedule,
    resource: &ClusterResource,
    shots: usize,
    seed: u64,
    options: &MonteCarloOptions,
) -> Result<MonteCarloRun> {
    if shots < 1 {
        return invalid("monte carlo needs at least one shot");
    }
    let (_, in_cov) = single_mode(input)?;
    let plan = MeasurementPlan::build(input, schedule, resource, options.order)?;
    let model = heisenberg_model(schedule)?;
    let angles = plan.angles();

    let records: Vec<ShotRecord> = (0..shots)
        .into_par_iter()
        .map(|shot| {
            let mut rng = shot_rng(seed, shot);
            let m = plan.sample_outcomes(&mut rng);
            let out = plan.output_mean(&m, options.feed_forward);
            ShotRecord {
                outcomes: std::array::from_fn(|j| HomodyneOutcome {
                    mode: j,
                    angle: crate::gaussian::normalize_angle(angles[j]),
                    value: m[j],
                }),
                output_mean: [out[0], out[1]],
            }
        })
        .collect();

    let n = records.len() as f64;
    let mean = records
        .iter()
        .fold(Vector2::zeros(), |acc, r| acc + Vector2::from(r.output_mean))
        / n;
    let scatter = records.iter().fold(Matrix2::zeros(), |acc, r| {
        let d = Vector2::from(r.output_mean) - mean;
        acc + d * d.transpose()
    });
    let spread = if records.len() > 1 {
        scatter / (n - 1.0)
    } else {
        Matrix2::zeros()
    };
    // Each shot's output is Gaussian with the conditional covariance around
    // its mean, so the state-level covariance adds it to the mean spread.
    let cov = plan.conditional_cov + spread;
    let ideal = model.gate * in_cov * model.gate.transpose();
    let (averaged_mean, averaged_cov) = plan.averaged_moments(options.feed_forward);
    Ok(MonteCarloRun {
        empirical: RunResult {
            output_mean: mean,
            output_cov: cov,
            excess_var: (cov[(0, 0)] - ideal[(0, 0)], cov[(1, 1)] - ideal[(1, 1)]),
        },
        mean_std_err: Vector2::new((spread[(0, 0)] / n).sqrt(), (spread[(1, 1)] / n).sqrt()),
        conditional_cov: plan.conditional_cov,
        averaged_mean,
        averaged_cov,
        shots: records,
        seed,
    })
}

/// One shot done the slow way: four calls to [`homodyne`] on the full state,
/// then the feed-forward displacement. Returns outcomes and the mode-4 state.
pub fn simulate_shot(
    input: &GaussianState,
    schedule: &AngleSchedule,
    resource: &ClusterResource,
    mut source: impl FnMut(usize) -> OutcomeSourceKind,
    rng: &mut ChaCha8Rng,
) -> Result<([HomodyneOutcome; 4], GaussianState)> {
    let model = heisenberg_model(schedule)?;
    let angles = schedule.angles();
    let mut state = coupled_state(input, resource)?;
    let mut outcomes = Vec::with_capacity(4);
    for (label, &angle) in angles.iter().enumerate() {
        // Measured modes always sit at index 0 once earlier ones are removed.
        let src = match source(label) {
            OutcomeSourceKind::Sample => OutcomeSource::Sample(rng),
            OutcomeSourceKind::Fixed(v) => OutcomeSource::Fixed(v),
        };
        let (mut outcome, rest) = homodyne(&state, 0, angle, src)?;
        outcome.mode = label;
        outcomes.push(outcome);
        state = rest;
    }
    let m = Vector4::from_fn(|j, _| outcomes[j].value);
    let shift = model.feedforward_matrix() * m;
    let out = state.displaced(0, -shift[0], -shift[1]);
    Ok((outcomes.try_into().expect("four outcomes"), out))
}

/// Outcome choice for [`simulate_shot`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutcomeSourceKind {
    Sample,
    Fixed(f64),
}
