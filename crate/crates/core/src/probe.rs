//! Multinomial logistic regression fit on an episode's support embeddings.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::nn::ops::{argmax, cross_entropy, softmax_rows};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub l2: f64,
    pub max_iters: usize,
    pub lr: f64,
    pub tol: f64,
    pub standardize: bool,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            l2: 1e-2,
            max_iters: 1000,
            lr: 0.5,
            tol: 1e-6,
            standardize: true,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("l2", self.l2), ("lr", self.lr), ("tol", self.tol)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("probe {name} must be a nonnegative number, got {v}")));
            }
        }
        Ok(())
    }
}

/// Per-dimension affine map learned from the support set.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Array1<f64>,
    /// Reciprocal standard deviation; 1 for constant dimensions.
    pub inv_std: Array1<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let mean = x.mean_axis(Axis(0)).expect("non-empty support");
        let var = x.var_axis(Axis(0), 0.0);
        let inv_std = var.mapv(|v| if v > 1e-24 { 1.0 / v.sqrt() } else { 1.0 });
        Self { mean, inv_std }
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        (x - &self.mean) * &self.inv_std
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProbe {
    pub w: Matrix,
    pub b: Array1<f64>,
    pub standardizer: Option<Standardizer>,
}

impl LinearProbe {
    pub fn zeros(dim: usize, n_way: usize) -> Self {
        Self {
            w: Array2::zeros((dim, n_way)),
            b: Array1::zeros(n_way),
            standardizer: None,
        }
    }

    pub fn n_way(&self) -> usize {
        self.b.len()
    }

    pub fn logits(&self, z: &Matrix) -> Result<Matrix> {
        if z.ncols() != self.w.nrows() {
            return Err(Error::Shape(format!(
                "probe expects {}-dimensional embeddings, got {}",
                self.w.nrows(),
                z.ncols()
            )));
        }
        let x = match &self.standardizer {
            Some(s) => s.apply(z),
            None => z.clone(),
        };
        Ok(x.dot(&self.w) + &self.b)
    }
}

/// `mean CE + (l2/2)‖W‖²` on already-transformed inputs, with gradients
/// `(dW, db)`.
pub fn probe_objective(w: &Matrix, b: &Array1<f64>, x: &Matrix, y: &[usize], l2: f64) -> Result<(f64, Matrix, Array1<f64>)> {
    let logits = x.dot(w) + b;
    let (ce, g) = cross_entropy(&logits, y)?;
    let value = ce + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
    let dw = x.t().dot(&g) + w * l2;
    let db = g.sum_axis(Axis(0));
    Ok((value, dw, db))
}

/// Zero-initialized full-batch gradient descent. The step size is capped at
/// the reciprocal of a smoothness bound of the objective so every step
/// decreases it.
pub fn fit_probe(support_z: &Matrix, support_y: &[usize], cfg: &ProbeConfig) -> Result<LinearProbe> {
    cfg.validate()?;
    if support_z.nrows() != support_y.len() || support_y.is_empty() {
        return Err(Error::Shape(format!(
            "{} support rows for {} labels",
            support_z.nrows(),
            support_y.len()
        )));
    }
    let n_way = support_y.iter().max().expect("non-empty") + 1;
    let mut counts = vec![0usize; n_way];
    for &y in support_y {
        counts[y] += 1;
    }
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidInput(format!("class {c} has no support samples")));
    }
    let standardizer = cfg.standardize.then(|| Standardizer::fit(support_z));
    let x = match &standardizer {
        Some(s) => s.apply(support_z),
        None => support_z.clone(),
    };
    let mean_sq = x.rows().into_iter().map(|r| r.dot(&r)).sum::<f64>() / x.nrows() as f64;
    let smoothness = 0.5 * (mean_sq + 1.0) + cfg.l2;
    let lr = cfg.lr.min(1.0 / smoothness);

    let mut probe = LinearProbe::zeros(x.ncols(), n_way);
    for _ in 0..cfg.max_iters {
        let (_, dw, db) = probe_objective(&probe.w, &probe.b, &x, support_y, cfg.l2)?;
        let norm = (dw.iter().chain(db.iter()).map(|v| v * v).sum::<f64>()).sqrt();
        if norm < cfg.tol {
            break;
        }
        probe.w.scaled_add(-lr, &dw);
        probe.b.scaled_add(-lr, &db);
    }
    probe.standardizer = standardizer;
    Ok(probe)
}

/// Query labels (ties to the lowest label) and class probabilities.
pub fn probe_predict(probe: &LinearProbe, query_z: &Matrix) -> Result<(Vec<usize>, Matrix)> {
    let logits = probe.logits(query_z)?;
    let labels = logits.rows().into_iter().map(|r| argmax(r.iter())).collect();
    Ok((labels, softmax_rows(&logits)))
}
