use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::clustering::clustering_scores;
use super::config::ProtocolConfig;
use super::evaluate::evaluate_tasks;
use super::stats::{confidence_interval, mean, pooled_confidence_interval};
use crate::episodes::Episode;
use crate::graphdata::{GraphBundle, LabelSplit};
use crate::nn::EncoderParams;
use crate::{seed, Error, Matrix, Result};

/// Frozen model state able to label the queries of an episode.
pub trait Predictor: Send + Sync {
    /// Labels for `ep.query`, in order. Query labels in `ep` are hidden.
    fn predict(&self, ep: &Episode) -> Result<Vec<usize>>;
    /// Node embeddings used for clustering diagnostics.
    fn embeddings(&self) -> Result<Matrix>;
    /// Encoder weights behind the predictions, when there is one.
    fn encoder(&self) -> Option<&EncoderParams> {
        None
    }
}

/// A training strategy advanced one epoch at a time.
pub trait Trainer {
    fn train_epoch(&mut self, epoch: usize) -> Result<f64>;
    fn predictor(&self) -> Result<Arc<dyn Predictor>>;
}

/// Builds a fresh trainer for each repetition. The graph handed over carries
/// labels for the training classes only.
pub trait TrainerFactory: Sync {
    fn build(&self, visible: &GraphBundle, seed: u64) -> Result<Box<dyn Trainer>>;
    /// Multiplier applied to the configured patience.
    fn patience_factor(&self) -> usize {
        1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub method: String,
    pub dataset: String,
    #[serde(rename = "N")]
    pub n_way: usize,
    #[serde(rename = "K")]
    pub k_shot: usize,
    #[serde(rename = "M")]
    pub m_query: usize,
    pub seeds: Vec<u64>,
    pub per_repeat_acc: Vec<f64>,
    pub mean_acc: f64,
    pub ci95: f64,
    pub nmi: Option<f64>,
    pub ari: Option<f64>,
    pub epochs: Vec<usize>,
}

/// Outcome of one early-stopped training run.
pub struct StopRecord {
    pub epochs_run: usize,
    pub best_score: f64,
    pub validations: Vec<f64>,
    /// Training loss of every epoch run.
    pub losses: Vec<f64>,
    /// Snapshot taken at the best validation, or the final state when no
    /// validation ever improved on zero.
    pub predictor: Arc<dyn Predictor>,
}

/// Train until the epoch budget runs out or `patience` consecutive
/// validations fail to improve. The counter starts at 1 and is checked after
/// every epoch.
pub fn train_with_early_stopping<V>(
    trainer: &mut dyn Trainer,
    val_interval: usize,
    patience: usize,
    max_epochs: usize,
    mut validate: V,
) -> Result<StopRecord>
where
    V: FnMut(usize, &dyn Predictor) -> Result<f64>,
{
    let mut p = 1;
    let mut best_score = 0.0;
    let mut best: Option<Arc<dyn Predictor>> = None;
    let mut validations = Vec::new();
    let mut losses = Vec::new();
    for t in 1..=max_epochs {
        losses.push(trainer.train_epoch(t)?);
        if t % val_interval == 0 {
            let predictor = trainer.predictor()?;
            let s = validate(t, predictor.as_ref())?;
            log::debug!("epoch {t}: validation accuracy {s:.4}");
            validations.push(s);
            if s > best_score {
                best_score = s;
                best = Some(predictor);
                p = 0;
            } else {
                p += 1;
            }
        }
        if p == patience {
            break;
        }
    }
    let predictor = match best {
        Some(b) => b,
        None => trainer.predictor()?,
    };
    Ok(StopRecord {
        epochs_run: losses.len(),
        best_score,
        validations,
        losses,
        predictor,
    })
}

/// Run the full evaluation protocol for one method on one dataset.
pub fn run_protocol(
    factory: &dyn TrainerFactory,
    method: &str,
    dataset: &str,
    g: &GraphBundle,
    split: &LabelSplit,
    cfg: &ProtocolConfig,
    with_clustering: bool,
) -> Result<RunResult> {
    cfg.validate()?;
    check_episode_feasibility(g, split, cfg)?;
    let visible = g.with_hidden_labels(split.train());
    let patience = cfg.patience * factory.patience_factor();
    let mut seeds = Vec::with_capacity(cfg.repeats);
    let mut accs = Vec::with_capacity(cfg.repeats);
    let mut all_tasks = Vec::new();
    let mut epochs = Vec::with_capacity(cfg.repeats);
    let mut nmis = Vec::new();
    let mut aris = Vec::new();
    for r in 0..cfg.repeats {
        let rseed = seed::derive(cfg.seed, &[seed::tag("repeat"), r as u64]);
        seeds.push(rseed);
        let mut trainer = factory.build(&visible, rseed)?;
        let dev_seed = seed::derive(rseed, &[seed::tag("dev")]);
        let record = train_with_early_stopping(trainer.as_mut(), cfg.val_interval, patience, cfg.max_epochs, |t, pred| {
            let base = if cfg.resample_validation {
                seed::derive(dev_seed, &[t as u64])
            } else {
                dev_seed
            };
            let scores = evaluate_tasks(|ep| pred.predict(ep), g, split.dev(), &cfg.spec, cfg.tasks, base)?;
            Ok(mean(&scores))
        })?;
        let test_seed = seed::derive(rseed, &[seed::tag("test")]);
        let pred = record.predictor;
        let scores = evaluate_tasks(|ep| pred.predict(ep), g, split.test(), &cfg.spec, cfg.tasks, test_seed)?;
        let acc = mean(&scores);
        log::info!(
            "{method} on {dataset}: repeat {} stopped after {} epochs, test accuracy {acc:.4}",
            r + 1,
            record.epochs_run
        );
        accs.push(acc);
        all_tasks.extend(scores);
        epochs.push(record.epochs_run);
        if with_clustering {
            let (nmi, ari) = novel_class_clustering(pred.as_ref(), g, split, rseed)?;
            nmis.push(nmi);
            aris.push(ari);
        }
    }
    let ci95 = if cfg.pooled_ci {
        pooled_confidence_interval(&all_tasks)?
    } else {
        confidence_interval(&accs)?
    };
    Ok(RunResult {
        method: method.to_string(),
        dataset: dataset.to_string(),
        n_way: cfg.spec.n_way,
        k_shot: cfg.spec.k_shot,
        m_query: cfg.spec.m_query,
        seeds,
        mean_acc: mean(&accs),
        per_repeat_acc: accs,
        ci95,
        nmi: with_clustering.then(|| mean(&nmis)),
        ari: with_clustering.then(|| mean(&aris)),
        epochs,
    })
}

/// Reject episode shapes the dev or test classes cannot supply, before any
/// training starts.
fn check_episode_feasibility(g: &GraphBundle, split: &LabelSplit, cfg: &ProtocolConfig) -> Result<()> {
    let spec = &cfg.spec;
    for (phase, pool) in [("dev", split.dev()), ("test", split.test())] {
        if pool.len() < spec.n_way {
            return Err(Error::Config(format!(
                "{}-way episodes need {} {phase} classes, the split has {}",
                spec.n_way,
                spec.n_way,
                pool.len()
            )));
        }
        let needed = spec.k_shot + spec.m_query;
        if let Some(&c) = pool.iter().find(|&&c| g.nodes_of_class(c).len() < needed) {
            return Err(Error::Config(format!(
                "{phase} class {c} has {} nodes, {}-shot {}-query episodes need {needed}",
                g.nodes_of_class(c).len(),
                spec.k_shot,
                spec.m_query
            )));
        }
    }
    Ok(())
}

/// K-means on the embeddings of test-class nodes with `k = |C_test|`.
fn novel_class_clustering(pred: &dyn Predictor, g: &GraphBundle, split: &LabelSplit, rseed: u64) -> Result<(f64, f64)> {
    let z = pred.embeddings()?;
    let nodes: Vec<usize> = (0..g.num_nodes()).filter(|&v| split.test().contains(&g.labels()[v])).collect();
    let rows = z.select(ndarray::Axis(0), &nodes);
    let labels: Vec<usize> = nodes.iter().map(|&v| g.labels()[v]).collect();
    clustering_scores(&rows, &labels, split.test().len(), seed::derive(rseed, &[seed::tag("cluster")]))
}
