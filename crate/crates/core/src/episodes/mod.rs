//! N-way K-shot M-query episodes and the episodic baselines.

mod maml;
mod protonet;
mod sampling;

pub use maml::{
    episode_cross_entropy, fomaml_meta_gradient, maml_inner_adapt, maml_outer_step, MamlConfig, MamlLearner,
};
pub use protonet::{nearest_prototype, protonet_episode, prototypes, ProtoOutput};
pub use sampling::{sample_episode, Episode, EpisodeSpec};
