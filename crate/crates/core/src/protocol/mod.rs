//! The unified evaluation loop: periodic validation on development classes
//! with patience-based early stopping, then test episodes on novel classes,
//! summarized as a mean accuracy with a 95% confidence interval. Also hosts
//! the clustering metrics used to inspect novel-class embeddings.

mod clustering;
mod config;
mod evaluate;
mod methods;
mod runner;
mod stats;

pub use clustering::{adjusted_rand_index, clustering_scores, kmeans, normalized_mutual_info, KMeansResult};
pub use config::ProtocolConfig;
pub use evaluate::{blind_episode, evaluate_meta_tasks, evaluate_tasks};
pub use methods::{Method, MethodConfig, MethodFactory, ProbePredictor};
pub use runner::{run_protocol, train_with_early_stopping, Predictor, RunResult, StopRecord, Trainer, TrainerFactory};
pub use stats::{confidence_interval, mean, pooled_confidence_interval};
