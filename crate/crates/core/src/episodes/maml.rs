use ndarray::Array2;

use super::Episode;
use crate::nn::ops::{argmax, cross_entropy};
use crate::nn::{
    encoder_backward, encoder_forward, xavier_init, AdamState, EncoderParams, GraphInput, Mode,
};
use crate::{seed, Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MamlConfig {
    pub inner_steps: usize,
    pub inner_lr: f64,
    pub outer_lr: f64,
    pub weight_decay: f64,
    pub dropout_p: f64,
}

impl Default for MamlConfig {
    fn default() -> Self {
        Self {
            inner_steps: 20,
            inner_lr: 0.05,
            outer_lr: 0.001,
            weight_decay: 1e-4,
            dropout_p: 0.5,
        }
    }
}

/// Plain gradient descent from a copy of `params`. `grad_fn` receives the
/// step index and the current parameters and returns `(loss, gradients)`.
pub fn maml_inner_adapt<F>(params: &[Matrix], steps: usize, inner_lr: f64, mut grad_fn: F) -> Result<Vec<Matrix>>
where
    F: FnMut(usize, &[Matrix]) -> Result<(f64, Vec<Matrix>)>,
{
    let mut adapted = params.to_vec();
    for step in 0..steps {
        let (_, grads) = grad_fn(step, &adapted)?;
        if grads.len() != adapted.len() {
            return Err(Error::Shape(format!("{} gradients for {} tensors", grads.len(), adapted.len())));
        }
        for (p, g) in adapted.iter_mut().zip(&grads) {
            if p.dim() != g.dim() {
                return Err(Error::Shape(format!("gradient {:?} for tensor {:?}", g.dim(), p.dim())));
            }
            p.scaled_add(-inner_lr, g);
        }
    }
    Ok(adapted)
}

/// First-order meta-gradient: adapt on the support loss, then return the
/// query loss and its gradient evaluated at the adapted parameters.
pub fn fomaml_meta_gradient<S, Q>(
    params: &[Matrix],
    steps: usize,
    inner_lr: f64,
    support_fn: S,
    mut query_fn: Q,
) -> Result<(f64, Vec<Matrix>)>
where
    S: FnMut(usize, &[Matrix]) -> Result<(f64, Vec<Matrix>)>,
    Q: FnMut(&[Matrix]) -> Result<(f64, Vec<Matrix>)>,
{
    let adapted = maml_inner_adapt(params, steps, inner_lr, support_fn)?;
    query_fn(&adapted)
}

/// Apply a meta-gradient to the original parameters with one Adam step.
pub fn maml_outer_step(
    params: &mut [Matrix],
    meta_grads: &[Matrix],
    state: &mut AdamState,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    state.step(params, meta_grads, lr, weight_decay)
}

/// Cross-entropy of a GCN plus linear head on the labeled `nodes`, with
/// gradients for `[w1, w2, head]`.
pub fn episode_cross_entropy(
    params: &[Matrix],
    input: GraphInput<'_>,
    nodes: &[(usize, usize)],
    mode: Mode,
    dropout_p: f64,
    seed_value: u64,
) -> Result<(f64, Vec<Matrix>)> {
    let [w1, w2, head] = params else {
        return Err(Error::Shape(format!("expected [w1, w2, head], got {} tensors", params.len())));
    };
    let enc = EncoderParams {
        w1: w1.clone(),
        w2: w2.clone(),
        projection: None,
    };
    let (z, tape) = encoder_forward(&enc, input, mode, dropout_p, seed_value)?;
    let mut rows = Array2::zeros((nodes.len(), z.ncols()));
    for (i, &(v, _)) in nodes.iter().enumerate() {
        rows.row_mut(i).assign(&z.row(v));
    }
    let targets: Vec<usize> = nodes.iter().map(|&(_, y)| y).collect();
    let (loss, g_logits) = cross_entropy(&rows.dot(head), &targets)?;
    let g_head = rows.t().dot(&g_logits);
    let g_rows = g_logits.dot(&head.t());
    let mut g_z = Array2::zeros(z.dim());
    for (i, &(v, _)) in nodes.iter().enumerate() {
        g_z.row_mut(v).scaled_add(1.0, &g_rows.row(i));
    }
    let g = encoder_backward(&tape, &g_z)?;
    Ok((loss, vec![g.w1, g.w2, g_head]))
}

/// First-order MAML over a GCN encoder with a per-episode linear head.
#[derive(Debug, Clone)]
pub struct MamlLearner {
    pub encoder: EncoderParams,
    pub cfg: MamlConfig,
    adam: AdamState,
}

impl MamlLearner {
    pub fn new(encoder: EncoderParams, cfg: MamlConfig) -> Self {
        let encoder = encoder.without_projection();
        let adam = AdamState::new(&encoder);
        Self { encoder, cfg, adam }
    }

    /// Encoder weights followed by a fresh Xavier head seeded by the episode.
    pub fn episode_params(encoder: &EncoderParams, ep: &Episode) -> Vec<Matrix> {
        let head = xavier_init(encoder.w2.ncols(), ep.n_way(), seed::derive(ep.seed, &[seed::tag("maml-head")]));
        vec![encoder.w1.clone(), encoder.w2.clone(), head]
    }

    /// One meta-training step on a single episode; returns the query loss.
    pub fn train_episode(&mut self, input: GraphInput<'_>, ep: &Episode) -> Result<f64> {
        let params = Self::episode_params(&self.encoder, ep);
        let cfg = self.cfg;
        let dropout_seed =
            |phase: u64, step: usize| seed::derive(ep.seed, &[seed::tag("maml-dropout"), phase, step as u64]);
        let (loss, grads) = fomaml_meta_gradient(
            &params,
            cfg.inner_steps,
            cfg.inner_lr,
            |step, p| episode_cross_entropy(p, input, &ep.support, Mode::Train, cfg.dropout_p, dropout_seed(0, step)),
            |p| episode_cross_entropy(p, input, &ep.query, Mode::Train, cfg.dropout_p, dropout_seed(1, 0)),
        )?;
        // The head is rebuilt for every episode, so only encoder weights move.
        let mut encoder = vec![self.encoder.w1.clone(), self.encoder.w2.clone()];
        maml_outer_step(&mut encoder, &grads[..2], &mut self.adam, cfg.outer_lr, cfg.weight_decay)?;
        let [w1, w2]: [Matrix; 2] = encoder.try_into().expect("two tensors");
        self.encoder.w1 = w1;
        self.encoder.w2 = w2;
        Ok(loss)
    }

    /// Adapt a copy of `encoder` on the support set and label the queries.
    pub fn predict(encoder: &EncoderParams, cfg: &MamlConfig, input: GraphInput<'_>, ep: &Episode) -> Result<Vec<usize>> {
        let params = Self::episode_params(encoder, ep);
        let adapted = maml_inner_adapt(&params, cfg.inner_steps, cfg.inner_lr, |_, p| {
            episode_cross_entropy(p, input, &ep.support, Mode::Eval, 0.0, 0)
        })?;
        let enc = EncoderParams {
            w1: adapted[0].clone(),
            w2: adapted[1].clone(),
            projection: None,
        };
        let (z, _) = encoder_forward(&enc, input, Mode::Eval, 0.0, 0)?;
        Ok(ep
            .query
            .iter()
            .map(|&(v, _)| argmax(z.row(v).dot(&adapted[2]).iter()))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphdata::{FeatureMatrix, NormalizedAdjacency};
    use crate::nn::{finite_diff_check, EncoderDims, FD_EPS};
    use ndarray::array;

    fn quadratic(target: f64) -> impl FnMut(usize, &[Matrix]) -> Result<(f64, Vec<Matrix>)> {
        move |_, p| {
            let d = p[0][[0, 0]] - target;
            Ok((0.5 * d * d, vec![array![[d]]]))
        }
    }

    #[test]
    fn inner_adapt_hand_trace() {
        let p = vec![array![[0.0]]];
        let out = maml_inner_adapt(&p, 1, 0.1, quadratic(3.0)).unwrap();
        assert!((out[0][[0, 0]] - 0.3).abs() < 1e-15);
        assert_eq!(p[0], array![[0.0]]);
        assert_eq!(maml_inner_adapt(&p, 0, 0.1, quadratic(3.0)).unwrap(), p);
        assert_eq!(maml_inner_adapt(&p, 5, 0.0, quadratic(3.0)).unwrap(), p);
    }

    #[test]
    fn outer_step_hand_trace() {
        // Support (p−3)²/2, query (p−1)²/2, p0 = 0, one inner step at 0.1:
        // p' = 0.3, query gradient −0.7, Adam's first step moves p by
        // −lr·g/(|g|+ε).
        let mut p = vec![array![[0.0]]];
        let (loss, g) = fomaml_meta_gradient(&p, 1, 0.1, quadratic(3.0), |q| quadratic(1.0)(0, q)).unwrap();
        assert!((loss - 0.5 * 0.49).abs() < 1e-12);
        assert!((g[0][[0, 0]] + 0.7).abs() < 1e-12);
        let mut adam = AdamState::new(&p);
        maml_outer_step(&mut p, &g, &mut adam, 0.001, 0.0).unwrap();
        let expected = 0.001 * 0.7 / (0.7 + 1e-8);
        assert!((p[0][[0, 0]] - expected).abs() < 1e-10);
    }

    #[test]
    fn zero_query_gradient_leaves_params() {
        let mut p = vec![array![[1.5]]];
        let (_, g) = fomaml_meta_gradient(&p, 2, 0.1, quadratic(3.0), |q| Ok((0.0, vec![q[0].mapv(|_| 0.0)]))).unwrap();
        let mut adam = AdamState::new(&p);
        maml_outer_step(&mut p, &g, &mut adam, 0.01, 0.0).unwrap();
        assert_eq!(p[0], array![[1.5]]);
    }

    fn toy() -> (NormalizedAdjacency, FeatureMatrix) {
        let adj = NormalizedAdjacency::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        let x = FeatureMatrix::new(array![[1.0, 0.0, 0.5], [0.0, 1.0, 0.2], [0.3, 0.3, 1.0], [1.0, 1.0, 0.0]]).unwrap();
        (adj, x)
    }

    #[test]
    fn zero_inner_steps_is_plain_episodic_ce() {
        let (adj, x) = toy();
        let input = GraphInput::new(&adj, &x);
        let params = vec![xavier_init(3, 4, 1), xavier_init(4, 2, 2), xavier_init(2, 2, 3)];
        let query = [(2, 0), (3, 1)];
        let (_, direct) = episode_cross_entropy(&params, input, &query, Mode::Eval, 0.0, 0).unwrap();
        let (_, meta) = fomaml_meta_gradient(
            &params,
            0,
            0.05,
            |_, _| unreachable!(),
            |p| episode_cross_entropy(p, input, &query, Mode::Eval, 0.0, 0),
        )
        .unwrap();
        assert_eq!(direct, meta);
    }

    #[test]
    fn episode_ce_gradient_matches_finite_differences() {
        let (adj, x) = toy();
        let input = GraphInput::new(&adj, &x);
        let params = vec![xavier_init(3, 4, 1) * 2.0, xavier_init(4, 2, 2) * 2.0, xavier_init(2, 2, 3)];
        let nodes = [(0, 0), (2, 1), (3, 1)];
        let (_, g) = episode_cross_entropy(&params, input, &nodes, Mode::Train, 0.3, 7).unwrap();
        let err = finite_diff_check(
            |p| episode_cross_entropy(p, input, &nodes, Mode::Train, 0.3, 7).unwrap().0,
            &params,
            &g,
            FD_EPS,
        );
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn learner_step_keeps_shapes_and_predicts() {
        let (adj, x) = toy();
        let input = GraphInput::new(&adj, &x);
        let enc = EncoderParams::xavier(EncoderDims { input: 3, hidden: 4, output: 2 }, false, 5);
        let mut learner = MamlLearner::new(enc.clone(), MamlConfig::default());
        let ep = Episode {
            support: vec![(0, 0), (3, 1)],
            query: vec![(1, 0), (2, 1)],
            class_map: vec![0, 1],
            seed: 11,
        };
        learner.train_episode(input, &ep).unwrap();
        assert_eq!(learner.encoder.dims(), enc.dims());
        assert_ne!(learner.encoder, enc);
        let pred = MamlLearner::predict(&learner.encoder, &learner.cfg, input, &ep).unwrap();
        assert_eq!(pred.len(), 2);
        assert!(pred.iter().all(|&y| y < 2));
    }
}
