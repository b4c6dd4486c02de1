//! Randomized finite-difference checks of every hand-derived gradient.

use ndarray::{Array1, Array2, Axis};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::contrast::{loss_bootstrap, loss_info_nce, loss_jsd, loss_supcon};
use crate::episodes::{episode_cross_entropy, protonet_episode, Episode};
use crate::graphdata::{FeatureMatrix, NormalizedAdjacency};
use crate::nn::ops::cross_entropy;
use crate::nn::{
    encoder_backward, encoder_forward, finite_diff_check, projection_backward, projection_forward, EncoderParams,
    GraphInput, Mode, ProjectionHead, FD_EPS,
};
use crate::probe::probe_objective;
use crate::{seed, Matrix, Result};

/// Tolerance every check must meet.
pub const GRADIENT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub name: &'static str,
    pub draws: usize,
    pub max_rel_error: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < GRADIENT_TOLERANCE
    }
}

fn normal(rng: &mut seed::Rng, rows: usize, cols: usize) -> Matrix {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}

type Check = fn(&mut seed::Rng) -> Result<f64>;

fn check_ce(rng: &mut seed::Rng) -> Result<f64> {
    let (n, c) = (rng.random_range(1..=8), rng.random_range(2..=4));
    let logits = normal(rng, n, c) * 2.0;
    let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
    let (_, g) = cross_entropy(&logits, &y)?;
    Ok(finite_diff_check(|p| cross_entropy(&p[0], &y).unwrap().0, &[logits], &[g], FD_EPS))
}

fn check_info_nce(rng: &mut seed::Rng) -> Result<f64> {
    let (n, k) = (rng.random_range(2..=8), rng.random_range(2..=4));
    let (u, v) = (normal(rng, n, k), normal(rng, n, k));
    let tau = rng.random_range(0.2..1.0);
    let g = loss_info_nce(&u, &v, tau)?.grads;
    Ok(finite_diff_check(|p| loss_info_nce(&p[0], &p[1], tau).unwrap().value, &[u, v], &g, FD_EPS))
}

fn check_jsd(rng: &mut seed::Rng) -> Result<f64> {
    let (n, k) = (rng.random_range(2..=8), rng.random_range(1..=4));
    let (u, v) = (normal(rng, n, k), normal(rng, n, k));
    let s: u64 = rng.random();
    let g = loss_jsd(&u, &v, s)?.grads;
    Ok(finite_diff_check(|p| loss_jsd(&p[0], &p[1], s).unwrap().value, &[u, v], &g, FD_EPS))
}

fn check_supcon(rng: &mut seed::Rng) -> Result<f64> {
    let (n, k) = (rng.random_range(3..=8), rng.random_range(2..=4));
    let z = normal(rng, n, k);
    let mut y: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
    y[1] = y[0];
    let tau = rng.random_range(0.2..1.0);
    let g = loss_supcon(&z, &y, tau)?.grads;
    Ok(finite_diff_check(|p| loss_supcon(&p[0], &y, tau).unwrap().value, &[z], &g, FD_EPS))
}

fn check_bootstrap(rng: &mut seed::Rng) -> Result<f64> {
    let (n, k) = (rng.random_range(1..=8), rng.random_range(2..=4));
    let (p, t) = (normal(rng, n, k), normal(rng, n, k));
    let g = loss_bootstrap(&p, &t)?.grads;
    Ok(finite_diff_check(|q| loss_bootstrap(&q[0], &t).unwrap().value, &[p], &g, FD_EPS))
}

fn random_episode(rng: &mut seed::Rng, n_way: usize, k_shot: usize, m_query: usize) -> Episode {
    let total = n_way * (k_shot + m_query);
    let mut nodes: Vec<usize> = (0..total).collect();
    rand::seq::SliceRandom::shuffle(nodes.as_mut_slice(), rng);
    let mut support = Vec::new();
    let mut query = Vec::new();
    let mut it = nodes.into_iter();
    for c in 0..n_way {
        support.extend(it.by_ref().take(k_shot).map(|v| (v, c)));
        query.extend(it.by_ref().take(m_query).map(|v| (v, c)));
    }
    Episode {
        support,
        query,
        class_map: (0..n_way).collect(),
        seed: rng.random(),
    }
}

fn check_protonet(rng: &mut seed::Rng) -> Result<f64> {
    let (n_way, k_shot) = (2, rng.random_range(1..=2));
    let m_query = rng.random_range(1..=2);
    let ep = random_episode(rng, n_way, k_shot, m_query);
    let n = n_way * (k_shot + m_query);
    let k = rng.random_range(1..=4);
    let z = normal(rng, n, k);
    let g = protonet_episode(&z, &ep)?.grad_z;
    Ok(finite_diff_check(|p| protonet_episode(&p[0], &ep).unwrap().loss, &[z], &[g], FD_EPS))
}

fn check_probe(rng: &mut seed::Rng) -> Result<f64> {
    let (n, d, c) = (rng.random_range(2..=8), rng.random_range(1..=4), rng.random_range(2..=3));
    let x = normal(rng, n, d);
    let y: Vec<usize> = (0..n).map(|i| i % c).collect();
    let w = normal(rng, d, c);
    let b: Array1<f64> = normal(rng, 1, c).row(0).to_owned();
    let l2 = rng.random_range(0.0..0.5);
    let (_, dw, db) = probe_objective(&w, &b, &x, &y, l2)?;
    let row = |v: &Array1<f64>| v.clone().insert_axis(Axis(0));
    Ok(finite_diff_check(
        |p| probe_objective(&p[0], &p[1].row(0).to_owned(), &x, &y, l2).unwrap().0,
        &[w, row(&b)],
        &[dw, row(&db)],
        FD_EPS,
    ))
}

fn random_graph(rng: &mut seed::Rng, n: usize) -> NormalizedAdjacency {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.4) {
                edges.push((i, j));
            }
        }
    }
    NormalizedAdjacency::from_edges(n, &edges)
}

fn check_gcn(rng: &mut seed::Rng) -> Result<f64> {
    let (n, d, h, o) = (
        rng.random_range(2..=8),
        rng.random_range(1..=4),
        rng.random_range(1..=4),
        rng.random_range(1..=4),
    );
    let adj = random_graph(rng, n);
    let x = FeatureMatrix::new(normal(rng, n, d))?;
    let mask: Vec<bool> = (0..d).map(|_| rng.random_bool(0.8)).collect();
    let input = GraphInput::new(&adj, &x).with_column_mask(&mask);
    let enc = EncoderParams {
        w1: normal(rng, d, h),
        w2: normal(rng, h, o),
        projection: None,
    };
    let r = normal(rng, n, o);
    let s: u64 = rng.random();
    let loss = |p: &[Matrix]| {
        let e = EncoderParams {
            w1: p[0].clone(),
            w2: p[1].clone(),
            projection: None,
        };
        let (z, _) = encoder_forward(&e, input, Mode::Train, 0.3, s).unwrap();
        (&z * &r).sum()
    };
    let (_, tape) = encoder_forward(&enc, input, Mode::Train, 0.3, s)?;
    let g = encoder_backward(&tape, &r)?;
    Ok(finite_diff_check(loss, &[enc.w1, enc.w2], &[g.w1, g.w2], FD_EPS))
}

fn check_gcn_ce(rng: &mut seed::Rng) -> Result<f64> {
    let (n, d, h, c) = (rng.random_range(2..=8), rng.random_range(1..=4), rng.random_range(1..=4), 2);
    let adj = random_graph(rng, n);
    let x = FeatureMatrix::new(normal(rng, n, d))?;
    let input = GraphInput::new(&adj, &x);
    let params = vec![normal(rng, d, h), normal(rng, h, c), normal(rng, c, c)];
    let nodes: Vec<(usize, usize)> = (0..n).map(|v| (v, v % c)).collect();
    let (_, g) = episode_cross_entropy(&params, input, &nodes, Mode::Eval, 0.0, 0)?;
    Ok(finite_diff_check(
        |p| episode_cross_entropy(p, input, &nodes, Mode::Eval, 0.0, 0).unwrap().0,
        &params,
        &g,
        FD_EPS,
    ))
}

fn check_projection(rng: &mut seed::Rng) -> Result<f64> {
    let (n, k) = (rng.random_range(1..=8), rng.random_range(1..=4));
    let z = normal(rng, n, k);
    let head = ProjectionHead {
        w1: normal(rng, k, k),
        w2: normal(rng, k, k),
    };
    let r = normal(rng, n, k);
    let (_, tape) = projection_forward(&head, &z)?;
    let (g, gz) = projection_backward(&head, &tape, &r)?;
    let loss = |p: &[Matrix]| {
        let h = ProjectionHead {
            w1: p[0].clone(),
            w2: p[1].clone(),
        };
        (&projection_forward(&h, &p[2]).unwrap().0 * &r).sum()
    };
    Ok(finite_diff_check(loss, &[head.w1, head.w2, z], &[g.w1, g.w2, gz], FD_EPS))
}

const CHECKS: [(&str, Check); 10] = [
    ("cross-entropy", check_ce),
    ("infonce", check_info_nce),
    ("jsd", check_jsd),
    ("supcon", check_supcon),
    ("bootstrap", check_bootstrap),
    ("protonet", check_protonet),
    ("probe", check_probe),
    ("gcn-backward", check_gcn),
    ("gcn-cross-entropy", check_gcn_ce),
    ("projection-head", check_projection),
];

/// Run every check on `draws` random instances and report the worst error
/// per check.
pub fn run_gradient_suite(draws: usize, seed_value: u64) -> Result<Vec<GradCheckReport>> {
    CHECKS
        .iter()
        .map(|&(name, check)| {
            let mut rng = seed::rng(seed::derive(seed_value, &[seed::tag(name)]));
            let mut worst = 0.0f64;
            for _ in 0..draws {
                worst = worst.max(check(&mut rng)?);
            }
            Ok(GradCheckReport {
                name,
                draws,
                max_rel_error: worst,
            })
        })
        .collect()
}
