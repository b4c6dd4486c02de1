use ndarray::Array2;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::GraphBundle;
use crate::{seed, Error, Result};

/// Stochastic block model with Gaussian class-conditional features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmSpec {
    pub classes: usize,
    pub nodes_per_class: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    pub class_mean_separation: f64,
    pub noise_std: f64,
}

impl SbmSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("sbm: {msg}")));
        if self.classes == 0 || self.nodes_per_class == 0 || self.feature_dim == 0 {
            return bad("counts must be at least 1");
        }
        if self.feature_dim < self.classes {
            return bad("feature_dim must be >= classes for orthogonal class means");
        }
        if !(0.0..=1.0).contains(&self.p_in) || !(0.0..=1.0).contains(&self.p_out) {
            return bad("edge probabilities must lie in [0, 1]");
        }
        if !(self.class_mean_separation >= 0.0) || !(self.noise_std >= 0.0) {
            return bad("separation and noise_std must be non-negative");
        }
        Ok(())
    }
}

/// Sample an SBM graph. Node `i` belongs to class `i / nodes_per_class`;
/// its features are `separation · e_class + N(0, noise_std²)` per dimension.
pub fn generate_sbm(spec: &SbmSpec, seed_value: u64) -> Result<GraphBundle> {
    spec.validate()?;
    let n = spec.classes * spec.nodes_per_class;
    let labels: Vec<usize> = (0..n).map(|i| i / spec.nodes_per_class).collect();

    let mut edge_rng = seed::rng(seed::derive(seed_value, &[seed::tag("sbm-edges")]));
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if labels[i] == labels[j] { spec.p_in } else { spec.p_out };
            if edge_rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }

    let mut x = Array2::zeros((n, spec.feature_dim));
    if spec.noise_std > 0.0 {
        let normal = Normal::new(0.0, spec.noise_std).map_err(|e| Error::Config(e.to_string()))?;
        let mut feat_rng = seed::rng(seed::derive(seed_value, &[seed::tag("sbm-features")]));
        x.iter_mut().for_each(|v| *v = normal.sample(&mut feat_rng));
    }
    for (i, &c) in labels.iter().enumerate() {
        x[[i, c]] += spec.class_mean_separation;
    }
    GraphBundle::new(x, edges, labels)
}
