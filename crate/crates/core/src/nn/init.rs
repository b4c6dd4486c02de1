use ndarray::Array2;
use rand::Rng as _;

use crate::{seed, Matrix};

/// Glorot-uniform `fan_in x fan_out` matrix, entries in `±√(6/(fan_in+fan_out))`.
pub fn xavier_init(fan_in: usize, fan_out: usize, seed_value: u64) -> Matrix {
    let bound = (6.0 / (fan_in + fan_out).max(1) as f64).sqrt();
    let mut rng = seed::rng(seed_value);
    Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-bound..=bound))
}
