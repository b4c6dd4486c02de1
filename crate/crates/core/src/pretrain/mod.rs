//! Training loops that produce a frozen encoder: supervised cross-entropy on
//! base classes and graph contrastive learning in its self-supervised,
//! supervised and joint forms.

mod ce;
mod gcl;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use ce::CeTrainer;
pub use gcl::GclTrainer;

use crate::contrast::{AugmentSpec, LossKind, LossSpec, DEFAULT_EMA_DECAY};
use crate::graphdata::{normalize_adjacency, GraphBundle, LabelSplit};
use crate::nn::checkpoint::{load_encoder, save_encoder};
use crate::nn::{encoder_forward, EncoderParams, GraphInput, Mode};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PretrainConfig {
    pub loss: LossSpec,
    pub augment: AugmentSpec,
    pub lr: f64,
    pub weight_decay: f64,
    pub dropout_p: f64,
    pub max_epochs: usize,
    pub hidden: usize,
    pub output: usize,
    pub ema_decay: f64,
    pub seed: u64,
}

impl PretrainConfig {
    pub fn new(loss: LossSpec) -> Self {
        Self {
            loss,
            augment: AugmentSpec::default(),
            lr: 0.001,
            weight_decay: 1e-4,
            dropout_p: 0.5,
            max_epochs: 10_000,
            hidden: 16,
            output: 16,
            ema_decay: DEFAULT_EMA_DECAY,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        self.augment.validate()?;
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config(format!("weight_decay must be nonnegative, got {}", self.weight_decay)));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::Config(format!("dropout must lie in [0, 1), got {}", self.dropout_p)));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        if self.hidden == 0 || self.output == 0 {
            return Err(Error::Config("hidden and output widths must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.ema_decay) {
            return Err(Error::Config(format!("ema_decay must lie in [0, 1], got {}", self.ema_decay)));
        }
        Ok(())
    }
}

/// How a frozen encoder was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub loss: LossKind,
    pub lambda: Option<f64>,
    pub seed: u64,
    pub epochs_run: usize,
    pub loss_curve: Vec<f64>,
}

/// Encoder weights without projection head, frozen after training.
#[derive(Debug, Clone, PartialEq)]
pub struct PretrainedEncoder {
    params: EncoderParams,
    provenance: Provenance,
}

impl PretrainedEncoder {
    pub fn new(params: &EncoderParams, provenance: Provenance) -> Self {
        Self {
            params: params.without_projection(),
            provenance,
        }
    }

    pub fn params(&self) -> &EncoderParams {
        &self.params
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Write the FSNP checkpoint and a `.json` provenance sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        save_encoder(path, &self.params)?;
        let json = serde_json::to_vec_pretty(&self.provenance)?;
        crate::graphdata::io::write_atomic(&path.with_extension("json"), &json)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let params = load_encoder(path)?;
        let sidecar = path.with_extension("json");
        let bytes = std::fs::read(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        Ok(Self {
            params,
            provenance: serde_json::from_slice(&bytes)?,
        })
    }
}

/// Called after every epoch; returning `true` ends training.
pub trait StopHook {
    fn after_epoch(&mut self, epoch: usize, loss: f64, encoder: &EncoderParams) -> Result<bool>;
}

/// Runs until `max_epochs`.
pub struct NeverStop;

impl StopHook for NeverStop {
    fn after_epoch(&mut self, _: usize, _: f64, _: &EncoderParams) -> Result<bool> {
        Ok(false)
    }
}

impl<F> StopHook for F
where
    F: FnMut(usize, f64, &EncoderParams) -> Result<bool>,
{
    fn after_epoch(&mut self, epoch: usize, loss: f64, encoder: &EncoderParams) -> Result<bool> {
        self(epoch, loss, encoder)
    }
}

/// A training loop advanced one full-batch epoch at a time.
pub trait EncoderTrainer {
    /// Run epoch `epoch` (1-based) and return its loss.
    fn step(&mut self, epoch: usize) -> Result<f64>;
    /// Current encoder weights, projection head included if any.
    fn encoder(&self) -> &EncoderParams;
    fn provenance(&self, epochs_run: usize, loss_curve: Vec<f64>) -> Provenance;
}

fn drive(trainer: &mut dyn EncoderTrainer, max_epochs: usize, hook: &mut dyn StopHook) -> Result<PretrainedEncoder> {
    let mut curve = Vec::new();
    for epoch in 1..=max_epochs {
        let loss = trainer.step(epoch)?;
        curve.push(loss);
        if hook.after_epoch(epoch, loss, trainer.encoder())? {
            break;
        }
    }
    let epochs = curve.len();
    Ok(PretrainedEncoder::new(trainer.encoder(), trainer.provenance(epochs, curve)))
}

/// Supervised cross-entropy pretraining on the nodes of the training classes.
pub fn pretrain_ce(
    g: &GraphBundle,
    split: &LabelSplit,
    cfg: &PretrainConfig,
    hook: &mut dyn StopHook,
) -> Result<PretrainedEncoder> {
    let mut trainer = CeTrainer::new(&g.with_hidden_labels(split.train()), cfg)?;
    drive(&mut trainer, cfg.max_epochs, hook)
}

/// Contrastive pretraining. Supervised and joint objectives take their
/// positives from the training classes of `split`; self-supervised
/// objectives see no labels.
pub fn pretrain_gcl(
    g: &GraphBundle,
    split: Option<&LabelSplit>,
    cfg: &PretrainConfig,
    hook: &mut dyn StopHook,
) -> Result<PretrainedEncoder> {
    let visible = match (cfg.loss.kind, split) {
        (LossKind::SupCon | LossKind::Joint, Some(s)) => s.train().clone(),
        (LossKind::SupCon | LossKind::Joint, None) => {
            return Err(Error::Config("supervised contrastive loss needs a label split".into()))
        }
        _ => Default::default(),
    };
    let mut trainer = GclTrainer::new(&g.with_hidden_labels(&visible), cfg)?;
    drive(&mut trainer, cfg.max_epochs, hook)
}

/// Deterministic eval-mode embeddings of every node, before any projection.
pub fn embed_all(encoder: &EncoderParams, g: &GraphBundle) -> Result<Matrix> {
    if encoder.dims().input != g.feature_dim() {
        return Err(Error::Shape(format!(
            "encoder expects {} features, graph has {}",
            encoder.dims().input,
            g.feature_dim()
        )));
    }
    let adj = normalize_adjacency(g);
    let (z, _) = encoder_forward(&encoder.without_projection(), GraphInput::new(&adj, g.features()), Mode::Eval, 0.0, 0)?;
    Ok(z)
}
