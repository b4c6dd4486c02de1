//! Attributed graphs: the immutable [`GraphBundle`], its normalized
//! adjacency, the on-disk bundle format, label-space splits and a stochastic
//! block model generator for oracle tests.

mod adjacency;
mod features;
pub mod io;
mod sbm;
mod split;

use std::collections::BTreeSet;
use std::sync::Arc;

pub use adjacency::{normalize_adjacency, spmm, NormalizedAdjacency};
pub use features::FeatureMatrix;
pub use io::{load_bundle, load_dataset, write_bundle, FeatureFormat};
pub use sbm::{generate_sbm, SbmSpec};
pub use split::{split_label_space, LabelSplit, SplitAssignment};

use crate::{Error, Matrix, Result};

/// Label stored for nodes whose class is withheld from a trainer.
pub const HIDDEN_LABEL: usize = usize::MAX;

/// Immutable attributed graph.
///
/// Edges are undirected, stored once as `(min, max)` pairs in sorted order.
/// Self-loops are never stored; they are added by [`normalize_adjacency`].
/// Features and labels live behind `Arc`s so that views of the same graph
/// (augmentations, label-masked copies) share the heavy buffers.
#[derive(Debug, Clone)]
pub struct GraphBundle {
    num_nodes: usize,
    edges: Arc<Vec<(usize, usize)>>,
    features: Arc<FeatureMatrix>,
    labels: Arc<Vec<usize>>,
    num_classes: usize,
}

impl GraphBundle {
    /// Validate and build a graph. Each undirected edge must appear once
    /// (in either orientation); self-loops are rejected.
    pub fn new(features: Matrix, edges: Vec<(usize, usize)>, labels: Vec<usize>) -> Result<Self> {
        let n = labels.len();
        if features.nrows() != n {
            return Err(Error::InvalidGraph(format!(
                "row-count mismatch: features have {} rows but there are {} labels",
                features.nrows(),
                n
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l == HIDDEN_LABEL) {
            return Err(Error::InvalidGraph(format!("label {bad} is reserved")));
        }
        let edges = canonical_edges(n, edges)?;
        let num_classes = labels.iter().max().map_or(0, |&m| m + 1);
        Ok(Self {
            num_nodes: n,
            edges: Arc::new(edges),
            features: Arc::new(FeatureMatrix::new(features)?),
            labels: Arc::new(labels),
            num_classes,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn features_arc(&self) -> &Arc<FeatureMatrix> {
        &self.features
    }

    /// Per-node labels; [`HIDDEN_LABEL`] marks withheld nodes.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Classes that label at least one visible node.
    pub fn classes_present(&self) -> BTreeSet<usize> {
        self.labels
            .iter()
            .copied()
            .filter(|&l| l != HIDDEN_LABEL)
            .collect()
    }

    /// Nodes of class `c`, ascending.
    pub fn nodes_of_class(&self, c: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == c).then_some(i))
            .collect()
    }

    /// Copy of the graph in which every node outside `visible` carries
    /// [`HIDDEN_LABEL`]. Structure and features are shared.
    pub fn with_hidden_labels(&self, visible: &BTreeSet<usize>) -> Self {
        let labels = self
            .labels
            .iter()
            .map(|l| if visible.contains(l) { *l } else { HIDDEN_LABEL })
            .collect();
        Self {
            labels: Arc::new(labels),
            ..self.clone()
        }
    }

    /// Same nodes and labels with a different (already valid) edge list and
    /// feature matrix.
    pub(crate) fn with_structure(&self, edges: Vec<(usize, usize)>, features: Arc<FeatureMatrix>) -> Self {
        Self {
            edges: Arc::new(edges),
            features,
            ..self.clone()
        }
    }
}

/// Orient every edge as `(min, max)`, sort, and reject out-of-range
/// endpoints, self-loops and repeated undirected edges.
fn canonical_edges(n: usize, edges: Vec<(usize, usize)>) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::with_capacity(edges.len());
    for (u, v) in edges {
        if u >= n || v >= n {
            return Err(Error::InvalidGraph(format!(
                "edge ({u},{v}): endpoint out of range (n={n})"
            )));
        }
        if u == v {
            return Err(Error::InvalidGraph(format!("edge ({u},{v}): self-loop")));
        }
        out.push((u.min(v), u.max(v)));
    }
    out.sort_unstable();
    if let Some(w) = out.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvalidGraph(format!(
            "duplicate undirected edge ({},{})",
            w[0].0, w[0].1
        )));
    }
    Ok(out)
}
