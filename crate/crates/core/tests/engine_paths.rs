mod common;

use common::{random_pure_input, random_schedule};
use cvmbqc_core::cluster::{cluster_from_resources, build_cluster, ClusterResource};
use cvmbqc_core::engine::{
    heisenberg_model, run_analytic, run_monte_carlo, run_monte_carlo_with, simulate_shot,
    MeasurementPlan, MonteCarloOptions, OutcomeSourceKind,
};
use cvmbqc_core::{AngleSchedule, GaussianState};
use nalgebra::{DMatrix, DVector, Vector2, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn averaged_covariance_matches_analytic_for_random_schedules() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..300 {
        let schedule = random_schedule(&mut rng, 0.05);
        let input = random_pure_input(&mut rng);
        let resource = build_cluster(rng.random_range(-10.0..0.0)).unwrap();
        let plan = MeasurementPlan::build(&input, &schedule, &resource, [0, 1, 2, 3]).unwrap();
        let (mean, cov) = plan.averaged_moments(true);
        let analytic = run_analytic(&input, &schedule, &resource).unwrap();
        let scale = analytic.output_cov.amax().max(1.0);
        worst = worst.max((cov - analytic.output_cov).amax() / scale);
        assert!((mean - analytic.output_mean).amax() < 1e-9 * analytic.output_mean.amax().max(1.0));
    }
    assert!(worst < 1e-9, "worst relative deviation {worst:e}");
}

#[test]
fn measurement_order_is_immaterial() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let orders = [[3, 2, 1, 0], [1, 3, 0, 2], [2, 0, 3, 1]];
    for _ in 0..50 {
        let schedule = random_schedule(&mut rng, 0.1);
        let input = random_pure_input(&mut rng);
        let resource = build_cluster(-5.5).unwrap();
        let base = MeasurementPlan::build(&input, &schedule, &resource, [0, 1, 2, 3]).unwrap();
        let (bm, bc) = base.averaged_moments(true);
        for order in orders {
            let plan = MeasurementPlan::build(&input, &schedule, &resource, order).unwrap();
            let (m, c) = plan.averaged_moments(true);
            assert!((m - bm).amax() < 1e-9 * bm.amax().max(1.0));
            assert!((c - bc).amax() < 1e-9 * bc.amax().max(1.0));
            assert!((plan.conditional_cov - base.conditional_cov).amax() < 1e-9);
            let probe = Vector4::new(0.3, -1.1, 0.7, 2.0);
            let d = plan.output_mean(&probe, true) - base.output_mean(&probe, true);
            assert!(d.amax() < 1e-8, "{d}");
        }
    }
    let resource = build_cluster(-3.0).unwrap();
    let input = GaussianState::vacuum(1).unwrap();
    let s = AngleSchedule::from_degrees([90.0, 0.0, 90.0, 90.0]);
    assert!(MeasurementPlan::build(&input, &s, &resource, [0, 1, 1, 3]).is_err());
}

#[test]
fn disabled_feed_forward_shifts_each_shot_by_the_gain() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let schedule = random_schedule(&mut rng, 0.1);
    let input = random_pure_input(&mut rng);
    let resource = build_cluster(-5.5).unwrap();
    let ff = heisenberg_model(&schedule).unwrap().feedforward_matrix();
    let on = run_monte_carlo(&input, &schedule, &resource, 200, 9).unwrap();
    let opts = MonteCarloOptions {
        feed_forward: false,
        ..Default::default()
    };
    let off = run_monte_carlo_with(&input, &schedule, &resource, 200, 9, &opts).unwrap();
    for (a, b) in on.shots.iter().zip(&off.shots) {
        assert_eq!(a.outcomes, b.outcomes);
        let m = Vector4::from_fn(|j, _| a.outcomes[j].value);
        let shift = Vector2::from(b.output_mean) - Vector2::from(a.output_mean);
        let want = ff * m;
        assert!((shift - want).amax() <= 1e-9 * want.amax().max(1.0));
    }
}

#[test]
fn fixed_seed_is_bit_identical() {
    let resource = build_cluster(-5.5).unwrap();
    let input = GaussianState::coherent(1.0, -0.5);
    let s = AngleSchedule::from_degrees([-41.4, 72.2, 41.9, 74.4]);
    let a = run_monte_carlo(&input, &s, &resource, 1000, 42).unwrap();
    let b = run_monte_carlo(&input, &s, &resource, 1000, 42).unwrap();
    let c = run_monte_carlo(&input, &s, &resource, 1000, 43).unwrap();
    assert_eq!(a.shots, b.shots);
    assert_eq!(a.empirical.output_cov, b.empirical.output_cov);
    assert_ne!(a.shots, c.shots);
}

#[test]
fn full_homodyne_path_agrees_with_plan() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..40 {
        let schedule = random_schedule(&mut rng, 0.1);
        let input = random_pure_input(&mut rng);
        let resource = build_cluster(rng.random_range(-8.0..0.0)).unwrap();
        let plan = MeasurementPlan::build(&input, &schedule, &resource, [0, 1, 2, 3]).unwrap();
        let fixed: [f64; 4] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
        let mut dummy = ChaCha8Rng::seed_from_u64(0);
        let (outcomes, out) = simulate_shot(
            &input,
            &schedule,
            &resource,
            |j| OutcomeSourceKind::Fixed(fixed[j]),
            &mut dummy,
        )
        .unwrap();
        assert_eq!(outcomes.map(|o| o.value), fixed);
        let want = plan.output_mean(&Vector4::from(fixed), true);
        let tol = 1e-8 * want.amax().max(1.0);
        assert!((out.mode_mean(0) - want).amax() < tol);
        assert!((out.mode_cov(0) - plan.conditional_cov).amax() < 1e-9);
    }
}

#[test]
fn sampled_shots_reproduce_averaged_moments() {
    let resource = build_cluster(-5.5).unwrap();
    let input = GaussianState::coherent(0.8, 1.3);
    let s = AngleSchedule::from_degrees([-42.5, 62.4, 63.5, 76.0]);
    let run = run_monte_carlo(&input, &s, &resource, 50_000, 7).unwrap();
    let analytic = run_analytic(&input, &s, &resource).unwrap();
    for i in 0..2 {
        let z = (run.empirical.output_mean[i] - analytic.output_mean[i]) / run.mean_std_err[i];
        assert!(z.abs() < 5.0, "component {i}: z = {z}");
        let rel = run.empirical.output_cov[(i, i)] / analytic.output_cov[(i, i)] - 1.0;
        assert!(rel.abs() < 0.05, "component {i}: relative variance error {rel}");
    }
}

#[test]
fn antisqueezing_does_not_reach_the_output() {
    // Impure resources: double the antisqueezed (x) variance of each rail.
    let r: f64 = 0.63;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let single = |extra: f64| {
        let cov = DMatrix::from_row_slice(2, 2, &[extra * 0.25 * (2.0 * r).exp(), 0.0, 0.0, 0.25 * (-2.0 * r).exp()]);
        GaussianState::new(DVector::zeros(2), cov).unwrap()
    };
    let rails = |extra: f64| {
        let s = single(extra);
        s.tensor(&s).tensor(&s).tensor(&s)
    };
    let db = -20.0 * r / std::f64::consts::LN_10;
    let pure = ClusterResource {
        state: cluster_from_resources(&rails(1.0)).unwrap(),
        squeezing_db: db,
        r,
    };
    let noisy = ClusterResource {
        state: cluster_from_resources(&rails(2.0)).unwrap(),
        squeezing_db: db,
        r,
    };
    for _ in 0..20 {
        let schedule = random_schedule(&mut rng, 0.1);
        let input = random_pure_input(&mut rng);
        let a = MeasurementPlan::build(&input, &schedule, &pure, [0, 1, 2, 3]).unwrap();
        let b = MeasurementPlan::build(&input, &schedule, &noisy, [0, 1, 2, 3]).unwrap();
        let (_, ca) = a.averaged_moments(true);
        let (_, cb) = b.averaged_moments(true);
        assert!((ca - cb).amax() < 1e-9 * ca.amax().max(1.0), "{ca} vs {cb}");
    }
}

#[test]
fn conditional_covariance_is_outcome_independent() {
    let resource = build_cluster(-5.5).unwrap();
    let input = GaussianState::coherent(2.0, 0.0);
    let s = AngleSchedule::from_degrees([-47.7, 79.2, 25.9, 78.4]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let covs: Vec<_> = (0..5)
        .map(|_| {
            simulate_shot(&input, &s, &resource, |_| OutcomeSourceKind::Sample, &mut rng)
                .unwrap()
                .1
                .mode_cov(0)
        })
        .collect();
    for c in &covs[1..] {
        assert!((c - covs[0]).amax() < 1e-12);
    }
}
