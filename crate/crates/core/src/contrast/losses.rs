use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::ensure_shape;
use crate::nn::ops::{normalize_rows, normalize_rows_backward, sigmoid, softplus};
use crate::{seed, Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    CrossEntropy,
    InfoNce,
    Jsd,
    SupCon,
    Bootstrap,
    Joint,
}

/// Self-supervised component of the joint objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelfKind {
    InfoNce,
    Jsd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    pub temperature: f64,
    pub lambda: f64,
    pub self_kind: SelfKind,
}

impl LossSpec {
    pub fn new(kind: LossKind) -> Self {
        Self {
            kind,
            temperature: 0.5,
            lambda: 0.5,
            self_kind: SelfKind::InfoNce,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!("temperature must be positive, got {}", self.temperature)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        Ok(())
    }
}

/// A scalar loss and its gradients, one per input tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grads: Vec<Matrix>,
}

fn check_aligned(u: &Matrix, v: &Matrix) -> Result<()> {
    ensure_shape(u.dim() == v.dim(), || {
        format!("views must be row-aligned, got {:?} and {:?}", u.dim(), v.dim())
    })
}

/// Per-anchor terms of one InfoNCE direction with anchors `a` against
/// positives `b`. Returns the summed loss and the gradients of that sum with
/// respect to the similarity matrices `a·bᵀ/τ` and `a·aᵀ/τ`.
fn info_nce_direction(a: &Matrix, b: &Matrix, tau: f64) -> (f64, Matrix, Matrix) {
    let mut cross = a.dot(&b.t()) / tau;
    let mut intra = a.dot(&a.t()) / tau;
    let mut total = 0.0;
    for (i, (mut c, mut s)) in cross.rows_mut().into_iter().zip(intra.rows_mut()).enumerate() {
        let pos = c[i];
        s[i] = f64::NEG_INFINITY;
        let max = c.iter().chain(s.iter()).fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        c.mapv_inplace(|x| (x - max).exp());
        s.mapv_inplace(|x| (x - max).exp());
        let denom = c.sum() + s.sum();
        total += max + denom.ln() - pos;
        c /= denom;
        s /= denom;
        c[i] -= 1.0;
    }
    (total, cross, intra)
}

/// Two-view InfoNCE on cosine similarities with inter- and intra-view
/// negatives, averaged over both directions. Gradients are `[dU, dV]`.
pub fn loss_info_nce(u: &Matrix, v: &Matrix, tau: f64) -> Result<LossValue> {
    check_aligned(u, v)?;
    let (uh, un) = normalize_rows(u)?;
    let (vh, vn) = normalize_rows(v)?;
    let n = u.nrows() as f64;
    let scale = 1.0 / (2.0 * n);
    let (l1, g_uv, g_uu) = info_nce_direction(&uh, &vh, tau);
    let (l2, g_vu, g_vv) = info_nce_direction(&vh, &uh, tau);
    // Both directions share S_uv = S_vuᵀ.
    let g_cross = (&g_uv + &g_vu.t()) * (scale / tau);
    let g_uu = (&g_uu + &g_uu.t()) * (scale / tau);
    let g_vv = (&g_vv + &g_vv.t()) * (scale / tau);
    let d_uh = g_cross.dot(&vh) + g_uu.dot(&uh);
    let d_vh = g_cross.t().dot(&uh) + g_vv.dot(&vh);
    Ok(LossValue {
        value: (l1 + l2) * scale,
        grads: vec![
            normalize_rows_backward(&uh, &un, &d_uh),
            normalize_rows_backward(&vh, &vn, &d_vh),
        ],
    })
}

/// Uniformly random permutation without fixed points.
pub fn random_derangement(n: usize, seed_value: u64) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("no derangement of {n} elements")));
    }
    let mut rng = seed::rng(seed_value);
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        perm.shuffle(&mut rng);
        if perm.iter().enumerate().all(|(i, &p)| i != p) {
            return Ok(perm);
        }
    }
}

/// Jensen-Shannon estimator on dot-product scores: aligned rows are
/// positives, `(u_i, v_π(i))` for a seeded derangement `π` are negatives.
pub fn loss_jsd(u: &Matrix, v: &Matrix, neg_seed: u64) -> Result<LossValue> {
    check_aligned(u, v)?;
    let n = u.nrows();
    let perm = random_derangement(n, neg_seed)?;
    let nf = n as f64;
    let mut du = Array2::zeros(u.dim());
    let mut dv = Array2::zeros(v.dim());
    let mut value = 0.0;
    for i in 0..n {
        let (ui, vi, vj) = (u.row(i), v.row(i), v.row(perm[i]));
        let pos = ui.dot(&vi);
        let neg = ui.dot(&vj);
        value += (softplus(-pos) + softplus(neg)) / nf;
        let gp = -sigmoid(-pos) / nf;
        let gn = sigmoid(neg) / nf;
        du.row_mut(i).scaled_add(gp, &vi);
        du.row_mut(i).scaled_add(gn, &vj);
        dv.row_mut(i).scaled_add(gp, &ui);
        dv.row_mut(perm[i]).scaled_add(gn, &ui);
    }
    Ok(LossValue {
        value,
        grads: vec![du, dv],
    })
}

/// Supervised contrastive loss on cosine similarities. Anchors whose class
/// has no other member are skipped.
pub fn loss_supcon(z: &Matrix, labels: &[usize], tau: f64) -> Result<LossValue> {
    ensure_shape(z.nrows() == labels.len(), || {
        format!("{} rows for {} labels", z.nrows(), labels.len())
    })?;
    let n = z.nrows();
    if n < 2 {
        return Err(Error::InvalidInput("supervised contrast needs at least two rows".into()));
    }
    let (zh, zn) = normalize_rows(z)?;
    let sim = zh.dot(&zh.t()) / tau;
    let positives: Vec<usize> = (0..n)
        .map(|i| (0..n).filter(|&p| p != i && labels[p] == labels[i]).count())
        .collect();
    let anchors = positives.iter().filter(|&&c| c > 0).count();
    if anchors == 0 {
        return Err(Error::InvalidInput("no anchor has a positive".into()));
    }
    let mut g = Array2::zeros((n, n));
    let mut value = 0.0;
    let inv_a = 1.0 / anchors as f64;
    for i in 0..n {
        if positives[i] == 0 {
            continue;
        }
        let max = (0..n).filter(|&a| a != i).map(|a| sim[[i, a]]).fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = (0..n).filter(|&a| a != i).map(|a| (sim[[i, a]] - max).exp()).sum();
        let log_denom = max + denom.ln();
        let inv_p = 1.0 / positives[i] as f64;
        for a in (0..n).filter(|&a| a != i) {
            let soft = (sim[[i, a]] - max).exp() / denom;
            let is_pos = labels[a] == labels[i];
            if is_pos {
                value += inv_a * inv_p * (log_denom - sim[[i, a]]);
            }
            g[[i, a]] = inv_a * (soft - if is_pos { inv_p } else { 0.0 });
        }
    }
    let d_zh = (&g + &g.t()).dot(&zh) / tau;
    Ok(LossValue {
        value,
        grads: vec![normalize_rows_backward(&zh, &zn, &d_zh)],
    })
}

/// `mean_i (2 − 2·cos(p_i, t_i))`; only `P` receives a gradient.
pub fn loss_bootstrap(p: &Matrix, t: &Matrix) -> Result<LossValue> {
    check_aligned(p, t)?;
    let (ph, pn) = normalize_rows(p)?;
    let (th, _) = normalize_rows(t)?;
    let n = p.nrows() as f64;
    let cos = (&ph * &th).sum_axis(Axis(1));
    let value = cos.iter().map(|c| 2.0 - 2.0 * c).sum::<f64>() / n;
    let d_ph = &th * (-2.0 / n);
    Ok(LossValue {
        value,
        grads: vec![normalize_rows_backward(&ph, &pn, &d_ph)],
    })
}

/// `λ·self + (1−λ)·sup` on values and gradients.
pub fn loss_joint(self_loss: &LossValue, sup_loss: &LossValue, lambda: f64) -> Result<LossValue> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidInput(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    if self_loss.grads.len() != sup_loss.grads.len()
        || self_loss.grads.iter().zip(&sup_loss.grads).any(|(a, b)| a.dim() != b.dim())
    {
        return Err(Error::Shape("joint loss components have different gradient shapes".into()));
    }
    if lambda == 1.0 {
        return Ok(self_loss.clone());
    }
    if lambda == 0.0 {
        return Ok(sup_loss.clone());
    }
    Ok(LossValue {
        value: lambda * self_loss.value + (1.0 - lambda) * sup_loss.value,
        grads: self_loss
            .grads
            .iter()
            .zip(&sup_loss.grads)
            .map(|(a, b)| a * lambda + b * (1.0 - lambda))
            .collect(),
    })
}
