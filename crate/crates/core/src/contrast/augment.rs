use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::graphdata::GraphBundle;
use crate::{seed, Error, Result};

/// Edge dropping and feature-column masking probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    pub edge_drop_p: f64,
    pub feature_mask_p: f64,
}

impl Default for AugmentSpec {
    fn default() -> Self {
        Self {
            edge_drop_p: 0.3,
            feature_mask_p: 0.3,
        }
    }
}

impl AugmentSpec {
    pub const IDENTITY: Self = Self {
        edge_drop_p: 0.0,
        feature_mask_p: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("edge_drop_p", self.edge_drop_p), ("feature_mask_p", self.feature_mask_p)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

/// A sampled view: surviving edges and a per-column keep mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewParts {
    pub edges: Vec<(usize, usize)>,
    pub column_mask: Vec<bool>,
}

/// Draw the random parts of a view without copying features.
pub fn sample_view(g: &GraphBundle, spec: &AugmentSpec, seed_value: u64) -> Result<ViewParts> {
    spec.validate()?;
    let mut rng = seed::rng(seed_value);
    let edges = g
        .edges()
        .iter()
        .copied()
        .filter(|_| !rng.random_bool(spec.edge_drop_p))
        .collect();
    let column_mask = (0..g.feature_dim())
        .map(|_| !rng.random_bool(spec.feature_mask_p))
        .collect();
    Ok(ViewParts { edges, column_mask })
}

/// Materialized augmented graph: same nodes and labels, a random subset of
/// edges and a random subset of zeroed feature columns.
pub fn augment_view(g: &GraphBundle, spec: &AugmentSpec, seed_value: u64) -> Result<GraphBundle> {
    let parts = sample_view(g, spec, seed_value)?;
    let features = if parts.column_mask.iter().all(|&k| k) {
        Arc::clone(g.features_arc())
    } else {
        Arc::new(g.features().masked(&parts.column_mask)?)
    };
    Ok(g.with_structure(parts.edges, features))
}
