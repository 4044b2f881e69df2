//! Workloads shared by the criterion benches.

use diffract_core::generators::{fibonacci_model_set, rudin_shapiro_comb, visible_points, CutProjectScheme};
use diffract_core::WeightedPointSet;

/// Rudin-Shapiro ±1 comb with `n` points.
pub fn rudin_shapiro(n: usize) -> WeightedPointSet {
    rudin_shapiro_comb(n).expect("valid size")
}

/// Fibonacci model set on `[0, x_max)` with the default window.
pub fn fibonacci(x_max: f64) -> WeightedPointSet {
    fibonacci_model_set(&CutProjectScheme::default(), 0.0, x_max).expect("valid interval")
}

pub fn visible(r: f64) -> WeightedPointSet {
    visible_points(r).expect("r >= 2")
}
