use std::collections::BTreeMap;

use super::{EncoderTrainer, PretrainConfig, Provenance};
use crate::contrast::LossKind;
use crate::episodes::episode_cross_entropy;
use crate::graphdata::{normalize_adjacency, GraphBundle, NormalizedAdjacency, HIDDEN_LABEL};
use crate::nn::ops::argmax;
use crate::nn::{encoder_forward, xavier_init, AdamState, EncoderDims, EncoderParams, GraphInput, Mode};
use crate::{seed, Error, Matrix, Result};

/// Full-batch GCN plus a temporary linear head trained with cross-entropy on
/// every node whose label is visible. The head is dropped afterwards.
pub struct CeTrainer {
    graph: GraphBundle,
    adj: NormalizedAdjacency,
    nodes: Vec<(usize, usize)>,
    params: Vec<Matrix>,
    encoder: EncoderParams,
    adam: AdamState,
    cfg: PretrainConfig,
}

impl CeTrainer {
    pub fn new(graph: &GraphBundle, cfg: &PretrainConfig) -> Result<Self> {
        cfg.validate()?;
        let classes: BTreeMap<usize, usize> = graph
            .classes_present()
            .into_iter()
            .enumerate()
            .map(|(i, c)| (c, i))
            .collect();
        let nodes: Vec<(usize, usize)> = graph
            .labels()
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l != HIDDEN_LABEL)
            .map(|(v, l)| (v, classes[l]))
            .collect();
        if nodes.is_empty() {
            return Err(Error::InvalidInput("no labeled base-class nodes to train on".into()));
        }
        let dims = EncoderDims {
            input: graph.feature_dim(),
            hidden: cfg.hidden,
            output: cfg.output,
        };
        let encoder = EncoderParams::xavier(dims, false, cfg.seed);
        let head = xavier_init(cfg.output, classes.len(), seed::derive(cfg.seed, &[seed::tag("ce-head")]));
        let params = vec![encoder.w1.clone(), encoder.w2.clone(), head];
        Ok(Self {
            adj: normalize_adjacency(graph),
            graph: graph.clone(),
            nodes,
            adam: AdamState::new(&params),
            params,
            encoder,
            cfg: *cfg,
        })
    }

    /// Eval-mode accuracy of encoder plus head on the labeled nodes.
    pub fn training_accuracy(&self) -> Result<f64> {
        let input = GraphInput::new(&self.adj, self.graph.features());
        let (z, _) = encoder_forward(&self.encoder, input, Mode::Eval, 0.0, 0)?;
        let logits = z.dot(&self.params[2]);
        let correct = self
            .nodes
            .iter()
            .filter(|&&(v, y)| argmax(logits.row(v).iter()) == y)
            .count();
        Ok(correct as f64 / self.nodes.len() as f64)
    }
}

impl EncoderTrainer for CeTrainer {
    fn step(&mut self, epoch: usize) -> Result<f64> {
        let input = GraphInput::new(&self.adj, self.graph.features());
        let dropout_seed = seed::derive(self.cfg.seed, &[seed::tag("ce-dropout"), epoch as u64]);
        let (loss, grads) =
            episode_cross_entropy(&self.params, input, &self.nodes, Mode::Train, self.cfg.dropout_p, dropout_seed)?;
        self.adam.step(&mut self.params, &grads, self.cfg.lr, self.cfg.weight_decay)?;
        self.encoder.w1.assign(&self.params[0]);
        self.encoder.w2.assign(&self.params[1]);
        Ok(loss)
    }

    fn encoder(&self) -> &EncoderParams {
        &self.encoder
    }

    fn provenance(&self, epochs_run: usize, loss_curve: Vec<f64>) -> Provenance {
        Provenance {
            loss: LossKind::CrossEntropy,
            lambda: None,
            seed: self.cfg.seed,
            epochs_run,
            loss_curve,
        }
    }
}
