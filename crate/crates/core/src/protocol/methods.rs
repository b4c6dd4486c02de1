use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::runner::{Predictor, Trainer, TrainerFactory};
use crate::contrast::{LossKind, LossSpec};
use crate::episodes::{
    nearest_prototype, protonet_episode, sample_episode, Episode, EpisodeSpec, MamlConfig, MamlLearner,
};
use crate::graphdata::{normalize_adjacency, GraphBundle, NormalizedAdjacency};
use crate::nn::{encoder_backward, encoder_forward, AdamState, EncoderDims, EncoderParams, GraphInput, Mode};
use crate::pretrain::{embed_all, CeTrainer, EncoderTrainer, GclTrainer, PretrainConfig};
use crate::probe::{fit_probe, probe_predict, ProbeConfig};
use crate::{seed, Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    MetaProtonet,
    MetaMaml,
    Ignn,
    TlpInfoNce,
    TlpJsd,
    TlpSupCon,
    TlpBootstrap,
    TlpJoint,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::MetaProtonet,
        Method::MetaMaml,
        Method::Ignn,
        Method::TlpInfoNce,
        Method::TlpJsd,
        Method::TlpSupCon,
        Method::TlpBootstrap,
        Method::TlpJoint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::MetaProtonet => "meta-protonet",
            Method::MetaMaml => "meta-maml",
            Method::Ignn => "ignn",
            Method::TlpInfoNce => "tlp-infonce",
            Method::TlpJsd => "tlp-jsd",
            Method::TlpSupCon => "tlp-supcon",
            Method::TlpBootstrap => "tlp-bootstrap",
            Method::TlpJoint => "tlp-joint",
        }
    }

    /// Pretraining objective of the linear-probing methods.
    pub fn loss_kind(self) -> Option<LossKind> {
        match self {
            Method::Ignn => Some(LossKind::CrossEntropy),
            Method::TlpInfoNce => Some(LossKind::InfoNce),
            Method::TlpJsd => Some(LossKind::Jsd),
            Method::TlpSupCon => Some(LossKind::SupCon),
            Method::TlpBootstrap => Some(LossKind::Bootstrap),
            Method::TlpJoint => Some(LossKind::Joint),
            Method::MetaProtonet | Method::MetaMaml => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Method::ALL.iter().map(|m| m.as_str()).collect();
                Error::Config(format!("unknown method `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

/// Hyperparameters shared by every method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodConfig {
    /// Encoder, optimizer and contrastive settings. `pretrain.loss.kind` is
    /// overridden by the method; `pretrain.seed` by the repetition seed.
    pub pretrain: PretrainConfig,
    pub maml: MamlConfig,
    pub probe: ProbeConfig,
    /// Shape of evaluation episodes; training episodes use the same `K` and
    /// `M` with `N` capped at the number of training classes.
    pub spec: EpisodeSpec,
}

impl MethodConfig {
    pub fn new(spec: EpisodeSpec) -> Self {
        let pretrain = PretrainConfig::new(LossSpec::new(LossKind::InfoNce));
        Self {
            maml: MamlConfig {
                outer_lr: pretrain.lr,
                weight_decay: pretrain.weight_decay,
                dropout_p: pretrain.dropout_p,
                ..MamlConfig::default()
            },
            pretrain,
            probe: ProbeConfig::default(),
            spec,
        }
    }
}

/// [`TrainerFactory`] for the named methods.
#[derive(Debug, Clone)]
pub struct MethodFactory {
    pub method: Method,
    pub cfg: MethodConfig,
}

impl MethodFactory {
    pub fn new(method: Method, cfg: MethodConfig) -> Self {
        Self { method, cfg }
    }

    fn dims(&self, g: &GraphBundle) -> EncoderDims {
        EncoderDims {
            input: g.feature_dim(),
            hidden: self.cfg.pretrain.hidden,
            output: self.cfg.pretrain.output,
        }
    }
}

impl TrainerFactory for MethodFactory {
    fn build(&self, visible: &GraphBundle, seed_value: u64) -> Result<Box<dyn Trainer>> {
        let mut pre = self.cfg.pretrain;
        pre.seed = seed_value;
        match self.method.loss_kind() {
            Some(LossKind::CrossEntropy) => {
                pre.loss.kind = LossKind::CrossEntropy;
                pre.validate()?;
                Ok(Box::new(TlpTrainer {
                    inner: Box::new(CeTrainer::new(visible, &pre)?),
                    graph: visible.clone(),
                    probe: self.cfg.probe,
                }))
            }
            Some(kind) => {
                pre.loss.kind = kind;
                Ok(Box::new(TlpTrainer {
                    inner: Box::new(GclTrainer::new(visible, &pre)?),
                    graph: visible.clone(),
                    probe: self.cfg.probe,
                }))
            }
            None => {
                pre.validate()?;
                let pool = visible.classes_present();
                let spec = EpisodeSpec::new(self.cfg.spec.n_way.min(pool.len()), self.cfg.spec.k_shot, self.cfg.spec.m_query)?;
                let encoder = EncoderParams::xavier(self.dims(visible), false, seed_value);
                let episodic = Episodic {
                    adj: Arc::new(normalize_adjacency(visible)),
                    graph: visible.clone(),
                    pool,
                    spec,
                    seed: seed_value,
                };
                Ok(match self.method {
                    Method::MetaProtonet => Box::new(ProtoTrainer {
                        adam: AdamState::new(&encoder),
                        encoder,
                        cfg: pre,
                        episodic,
                    }),
                    _ => Box::new(MamlTrainer {
                        learner: MamlLearner::new(encoder, self.cfg.maml),
                        episodic,
                    }),
                })
            }
        }
    }

    fn patience_factor(&self) -> usize {
        if self.method == Method::TlpJoint {
            2
        } else {
            1
        }
    }
}

struct TlpTrainer {
    inner: Box<dyn EncoderTrainer>,
    graph: GraphBundle,
    probe: ProbeConfig,
}

impl Trainer for TlpTrainer {
    fn train_epoch(&mut self, epoch: usize) -> Result<f64> {
        self.inner.step(epoch)
    }

    fn predictor(&self) -> Result<Arc<dyn Predictor>> {
        Ok(Arc::new(ProbePredictor::new(self.inner.encoder(), &self.graph, self.probe)?))
    }
}

fn rows(z: &Matrix, nodes: &[usize]) -> Matrix {
    z.select(ndarray::Axis(0), nodes)
}

/// Frozen embeddings plus one logistic-regression probe per episode.
pub struct ProbePredictor {
    encoder: EncoderParams,
    z: Matrix,
    probe: ProbeConfig,
}

impl ProbePredictor {
    pub fn new(encoder: &EncoderParams, g: &GraphBundle, probe: ProbeConfig) -> Result<Self> {
        Ok(Self {
            encoder: encoder.without_projection(),
            z: embed_all(encoder, g)?,
            probe,
        })
    }
}

impl Predictor for ProbePredictor {
    fn predict(&self, ep: &Episode) -> Result<Vec<usize>> {
        let probe = fit_probe(&rows(&self.z, &ep.support_nodes()), &ep.support_labels(), &self.probe)?;
        Ok(probe_predict(&probe, &rows(&self.z, &ep.query_nodes()))?.0)
    }

    fn embeddings(&self) -> Result<Matrix> {
        Ok(self.z.clone())
    }

    fn encoder(&self) -> Option<&EncoderParams> {
        Some(&self.encoder)
    }
}

/// State shared by the episodic trainers.
struct Episodic {
    graph: GraphBundle,
    adj: Arc<NormalizedAdjacency>,
    pool: BTreeSet<usize>,
    spec: EpisodeSpec,
    seed: u64,
}

impl Episodic {
    fn episode(&self, epoch: usize) -> Result<Episode> {
        let s = seed::derive(self.seed, &[seed::tag("train-episode"), epoch as u64]);
        sample_episode(&self.graph, &self.pool, &self.spec, s)
    }
}

struct ProtoTrainer {
    encoder: EncoderParams,
    adam: AdamState,
    cfg: PretrainConfig,
    episodic: Episodic,
}

impl Trainer for ProtoTrainer {
    fn train_epoch(&mut self, epoch: usize) -> Result<f64> {
        let ep = self.episodic.episode(epoch)?;
        let input = GraphInput::new(&self.episodic.adj, self.episodic.graph.features());
        let s = seed::derive(self.cfg.seed, &[seed::tag("protonet-dropout"), epoch as u64]);
        let (z, tape) = encoder_forward(&self.encoder, input, Mode::Train, self.cfg.dropout_p, s)?;
        let out = protonet_episode(&z, &ep)?;
        let grads = encoder_backward(&tape, &out.grad_z)?;
        self.adam.step(&mut self.encoder, &grads, self.cfg.lr, self.cfg.weight_decay)?;
        Ok(out.loss)
    }

    fn predictor(&self) -> Result<Arc<dyn Predictor>> {
        Ok(Arc::new(ProtoPredictor {
            z: embed_all(&self.encoder, &self.episodic.graph)?,
            encoder: self.encoder.clone(),
        }))
    }
}

struct ProtoPredictor {
    z: Matrix,
    encoder: EncoderParams,
}

impl Predictor for ProtoPredictor {
    fn predict(&self, ep: &Episode) -> Result<Vec<usize>> {
        nearest_prototype(&self.z, ep)
    }

    fn embeddings(&self) -> Result<Matrix> {
        Ok(self.z.clone())
    }

    fn encoder(&self) -> Option<&EncoderParams> {
        Some(&self.encoder)
    }
}

struct MamlTrainer {
    learner: MamlLearner,
    episodic: Episodic,
}

impl Trainer for MamlTrainer {
    fn train_epoch(&mut self, epoch: usize) -> Result<f64> {
        let ep = self.episodic.episode(epoch)?;
        let input = GraphInput::new(&self.episodic.adj, self.episodic.graph.features());
        self.learner.train_episode(input, &ep)
    }

    fn predictor(&self) -> Result<Arc<dyn Predictor>> {
        Ok(Arc::new(MamlPredictor {
            encoder: self.learner.encoder.clone(),
            cfg: self.learner.cfg,
            graph: self.episodic.graph.clone(),
            adj: Arc::clone(&self.episodic.adj),
        }))
    }
}

struct MamlPredictor {
    encoder: EncoderParams,
    cfg: MamlConfig,
    graph: GraphBundle,
    adj: Arc<NormalizedAdjacency>,
}

impl Predictor for MamlPredictor {
    fn predict(&self, ep: &Episode) -> Result<Vec<usize>> {
        MamlLearner::predict(&self.encoder, &self.cfg, GraphInput::new(&self.adj, self.graph.features()), ep)
    }

    fn embeddings(&self) -> Result<Matrix> {
        embed_all(&self.encoder, &self.graph)
    }

    fn encoder(&self) -> Option<&EncoderParams> {
        Some(&self.encoder)
    }
}
