//! Few-shot node classification benchmark.
//!
//! The crate covers the full pipeline used to compare transductive linear
//! probing (a frozen, contrastively pretrained GCN encoder followed by a
//! per-episode logistic-regression probe) with episodic meta-learning
//! baselines:
//!
//! * [`graphdata`]: attributed graphs, bundle IO, label-space splits, SBM generator.
//! * [`nn`]: two-layer GCN with hand-derived gradients, Adam, finite-difference checks.
//! * [`contrast`]: view augmentation and contrastive objectives.
//! * [`episodes`]: N-way K-shot episode sampling, ProtoNet and first-order MAML.
//! * [`pretrain`]: supervised, self-supervised and joint pretraining loops.
//! * [`probe`]: the linear probe.
//! * [`protocol`]: the unified evaluation loop, confidence intervals, clustering metrics.

pub mod contrast;
pub mod episodes;
pub mod error;
pub mod gradcheck;
pub mod graphdata;
pub mod nn;
pub mod pretrain;
pub mod probe;
pub mod protocol;
pub mod seed;

pub use error::{Error, Result};

/// Dense row-major matrix used for all training math.
pub type Matrix = ndarray::Array2<f64>;
