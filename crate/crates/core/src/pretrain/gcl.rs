use ndarray::Array2;

use super::{EncoderTrainer, PretrainConfig, Provenance};
use crate::contrast::{
    loss_bootstrap, loss_info_nce, loss_joint, loss_jsd, loss_supcon, sample_view, EmaTarget, LossKind, LossValue,
    SelfKind, ViewParts,
};
use crate::graphdata::{GraphBundle, NormalizedAdjacency, HIDDEN_LABEL};
use crate::nn::{
    encoder_backward, encoder_forward, projection_backward, projection_forward, xavier_init, AdamState,
    EncoderDims, EncoderParams, GraphInput, Mode, ProjectionHead,
};
use crate::{seed, Error, Matrix, Result};

/// Two augmented views per epoch, encoder plus projection head, and one of
/// the contrastive objectives.
pub struct GclTrainer {
    graph: GraphBundle,
    labeled: Vec<(usize, usize)>,
    params: EncoderParams,
    adam: AdamState,
    bootstrap: Option<Bootstrap>,
    cfg: PretrainConfig,
}

struct Bootstrap {
    predictor: Vec<Matrix>,
    adam: AdamState,
    target: EmaTarget,
}

struct View {
    adj: NormalizedAdjacency,
    parts: ViewParts,
}

impl GclTrainer {
    pub fn new(graph: &GraphBundle, cfg: &PretrainConfig) -> Result<Self> {
        cfg.validate()?;
        let supervised = matches!(cfg.loss.kind, LossKind::SupCon | LossKind::Joint);
        if cfg.loss.kind == LossKind::CrossEntropy {
            return Err(Error::Config("cross-entropy is not a contrastive objective".into()));
        }
        let labeled: Vec<(usize, usize)> = if supervised {
            graph
                .labels()
                .iter()
                .enumerate()
                .filter(|&(_, &l)| l != HIDDEN_LABEL)
                .map(|(v, &l)| (v, l))
                .collect()
        } else {
            Vec::new()
        };
        if supervised && labeled.is_empty() {
            return Err(Error::Config("supervised contrastive loss needs labeled nodes".into()));
        }
        let dims = EncoderDims {
            input: graph.feature_dim(),
            hidden: cfg.hidden,
            output: cfg.output,
        };
        let params = EncoderParams::xavier(dims, true, cfg.seed);
        let bootstrap = if cfg.loss.kind == LossKind::Bootstrap {
            let predictor = vec![xavier_init(
                cfg.output,
                cfg.output,
                seed::derive(cfg.seed, &[seed::tag("predictor")]),
            )];
            Some(Bootstrap {
                adam: AdamState::new(&predictor),
                predictor,
                target: EmaTarget::new(&params, cfg.ema_decay)?,
            })
        } else {
            None
        };
        Ok(Self {
            graph: graph.clone(),
            labeled,
            adam: AdamState::new(&params),
            params,
            bootstrap,
            cfg: *cfg,
        })
    }

    fn head(&self) -> &ProjectionHead {
        self.params.projection.as_ref().expect("contrastive encoder has a projection head")
    }

    fn view(&self, epoch: usize, index: u64) -> Result<View> {
        let s = seed::derive(self.cfg.seed, &[seed::tag("view"), epoch as u64, index]);
        let parts = sample_view(&self.graph, &self.cfg.augment, s)?;
        Ok(View {
            adj: NormalizedAdjacency::from_edges(self.graph.num_nodes(), &parts.edges),
            parts,
        })
    }

    /// SupCon over the labeled rows of both views stacked together.
    fn supcon_views(&self, h: &[Matrix; 2]) -> Result<LossValue> {
        let m = self.labeled.len();
        let mut rows = Array2::zeros((2 * m, h[0].ncols()));
        let mut labels = Vec::with_capacity(2 * m);
        for (view, hv) in h.iter().enumerate() {
            for (i, &(v, y)) in self.labeled.iter().enumerate() {
                rows.row_mut(view * m + i).assign(&hv.row(v));
                labels.push(y);
            }
        }
        let out = loss_supcon(&rows, &labels, self.cfg.loss.temperature)?;
        let mut grads = [Array2::zeros(h[0].dim()), Array2::zeros(h[1].dim())];
        for (view, g) in grads.iter_mut().enumerate() {
            for (i, &(v, _)) in self.labeled.iter().enumerate() {
                g.row_mut(v).scaled_add(1.0, &out.grads[0].row(view * m + i));
            }
        }
        Ok(LossValue {
            value: out.value,
            grads: grads.into(),
        })
    }

    fn self_supervised(&self, kind: SelfKind, epoch: usize, h: &[Matrix; 2]) -> Result<LossValue> {
        match kind {
            SelfKind::InfoNce => loss_info_nce(&h[0], &h[1], self.cfg.loss.temperature),
            SelfKind::Jsd => {
                let s = seed::derive(self.cfg.seed, &[seed::tag("jsd-negatives"), epoch as u64]);
                loss_jsd(&h[0], &h[1], s)
            }
        }
    }

    /// Symmetric bootstrap loss. Returns the loss with gradients for both
    /// projected views and the predictor gradient.
    fn bootstrap_loss(&self, views: &[View; 2], h: &[Matrix; 2]) -> Result<(LossValue, Matrix)> {
        let b = self.bootstrap.as_ref().expect("bootstrap state");
        let pred = &b.predictor[0];
        let target_head = b.target.params.projection.as_ref().expect("target head");
        let mut targets = Vec::with_capacity(2);
        for v in views {
            let input = GraphInput::new(&v.adj, self.graph.features()).with_column_mask(&v.parts.column_mask);
            let (z, _) = encoder_forward(&b.target.params, input, Mode::Eval, 0.0, 0)?;
            targets.push(projection_forward(target_head, &z)?.0);
        }
        let mut value = 0.0;
        let mut grad_h = Vec::with_capacity(2);
        let mut grad_pred = Array2::zeros(pred.dim());
        for (i, hv) in h.iter().enumerate() {
            let p = hv.dot(pred);
            let out = loss_bootstrap(&p, &targets[1 - i])?;
            value += 0.5 * out.value;
            let dp = &out.grads[0] * 0.5;
            grad_pred += &hv.t().dot(&dp);
            grad_h.push(dp.dot(&pred.t()));
        }
        Ok((LossValue { value, grads: grad_h }, grad_pred))
    }
}

impl EncoderTrainer for GclTrainer {
    fn step(&mut self, epoch: usize) -> Result<f64> {
        let views = [self.view(epoch, 0)?, self.view(epoch, 1)?];
        let mut tapes = Vec::with_capacity(2);
        let mut projected = Vec::with_capacity(2);
        for (i, v) in views.iter().enumerate() {
            let input = GraphInput::new(&v.adj, self.graph.features()).with_column_mask(&v.parts.column_mask);
            let s = seed::derive(self.cfg.seed, &[seed::tag("gcl-dropout"), epoch as u64, i as u64]);
            let (z, tape) = encoder_forward(&self.params, input, Mode::Train, self.cfg.dropout_p, s)?;
            let (h, ptape) = projection_forward(self.head(), &z)?;
            tapes.push((tape, ptape));
            projected.push(h);
        }
        let h: [Matrix; 2] = projected.try_into().expect("two views");

        let mut grad_pred = None;
        let loss = match self.cfg.loss.kind {
            LossKind::InfoNce => self.self_supervised(SelfKind::InfoNce, epoch, &h)?,
            LossKind::Jsd => self.self_supervised(SelfKind::Jsd, epoch, &h)?,
            LossKind::SupCon => self.supcon_views(&h)?,
            LossKind::Joint => {
                let self_loss = self.self_supervised(self.cfg.loss.self_kind, epoch, &h)?;
                let sup_loss = self.supcon_views(&h)?;
                loss_joint(&self_loss, &sup_loss, self.cfg.loss.lambda)?
            }
            LossKind::Bootstrap => {
                let (l, gp) = self.bootstrap_loss(&views, &h)?;
                grad_pred = Some(gp);
                l
            }
            LossKind::CrossEntropy => unreachable!("rejected at construction"),
        };

        let mut grads = self.params.zeros_like();
        for ((tape, ptape), gh) in tapes.iter().zip(&loss.grads) {
            let (g_head, g_z) = projection_backward(self.head(), ptape, gh)?;
            let g_enc = encoder_backward(tape, &g_z)?;
            grads.w1 += &g_enc.w1;
            grads.w2 += &g_enc.w2;
            let acc = grads.projection.as_mut().expect("head gradient");
            acc.w1 += &g_head.w1;
            acc.w2 += &g_head.w2;
        }
        self.adam.step(&mut self.params, &grads, self.cfg.lr, self.cfg.weight_decay)?;
        if let (Some(b), Some(gp)) = (self.bootstrap.as_mut(), grad_pred) {
            b.adam.step(&mut b.predictor, &vec![gp], self.cfg.lr, self.cfg.weight_decay)?;
            b.target.update(&self.params)?;
        }
        Ok(loss.value)
    }

    fn encoder(&self) -> &EncoderParams {
        &self.params
    }

    fn provenance(&self, epochs_run: usize, loss_curve: Vec<f64>) -> Provenance {
        Provenance {
            loss: self.cfg.loss.kind,
            lambda: (self.cfg.loss.kind == LossKind::Joint).then_some(self.cfg.loss.lambda),
            seed: self.cfg.seed,
            epochs_run,
            loss_curve,
        }
    }
}

