//! Number formatting shared by the JSON and CSV writers.

use cvmbqc_core::{Matrix2, Vector2};

/// Rounds to 12 significant digits.
pub fn r12(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    if !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().expect("formatted float parses")
}

pub fn r12_vec(v: &Vector2<f64>) -> [f64; 2] {
    [r12(v[0]), r12(v[1])]
}

pub fn r12_matrix(m: &Matrix2<f64>) -> [[f64; 2]; 2] {
    [[r12(m[(0, 0)]), r12(m[(0, 1)])], [r12(m[(1, 0)]), r12(m[(1, 1)])]]
}
