#![allow(dead_code)]

use std::f64::consts::PI;

use cvmbqc_core::engine::AngleSchedule;
use cvmbqc_core::GaussianState;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random schedule with every singular-guard `|sin|` above `min_sin`.
pub fn random_schedule(rng: &mut ChaCha8Rng, min_sin: f64) -> AngleSchedule {
    loop {
        let a: [f64; 4] = std::array::from_fn(|_| rng.random_range(-PI..PI));
        let s = AngleSchedule::new(a[0], a[1], a[2], a[3]);
        if (a[0] - a[1]).sin().abs() > min_sin && a[2].sin().abs() > min_sin && a[3].sin().abs() > min_sin {
            return s;
        }
    }
}

/// Random pure one-mode Gaussian state: squeezed, rotated, displaced.
pub fn random_pure_input(rng: &mut ChaCha8Rng) -> GaussianState {
    let r = rng.random_range(-1.0..1.0);
    let phi = rng.random_range(-PI..PI);
    let (x, p) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
    GaussianState::squeezed_vacuum(r, phi)
        .unwrap()
        .displaced(0, x, p)
}

pub fn max_abs<const R: usize, const C: usize>(
    a: &nalgebra::SMatrix<f64, R, C>,
    b: &nalgebra::SMatrix<f64, R, C>,
) -> f64 {
    (a - b).amax()
}
