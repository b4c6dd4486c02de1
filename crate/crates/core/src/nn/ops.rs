//! Small dense helpers shared by the losses.

use ndarray::{Array1, Axis};

use crate::{Error, Matrix, Result};

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

pub fn elu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

/// Numerically stable `log(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Row-wise softmax, shifted by the row maximum.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax<'a>(values: impl IntoIterator<Item = &'a f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, &v) in values.into_iter().enumerate() {
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

/// Mean cross-entropy of row-wise softmax against integer targets and its
/// gradient with respect to the logits.
pub fn cross_entropy(logits: &Matrix, targets: &[usize]) -> Result<(f64, Matrix)> {
    if logits.nrows() != targets.len() {
        return Err(Error::Shape(format!(
            "{} logit rows for {} targets",
            logits.nrows(),
            targets.len()
        )));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= logits.ncols()) {
        return Err(Error::InvalidInput(format!("target {t} out of range")));
    }
    let n = targets.len().max(1) as f64;
    let loss: f64 = logits
        .rows()
        .into_iter()
        .zip(targets)
        .map(|(row, &t)| log_sum_exp(row.iter().copied()) - row[t])
        .sum();
    let mut grad = softmax_rows(logits);
    for (mut row, &t) in grad.rows_mut().into_iter().zip(targets) {
        row[t] -= 1.0;
        row /= n;
    }
    Ok((loss / n, grad))
}

pub fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Row L2 norms.
pub fn row_norms(m: &Matrix) -> Array1<f64> {
    m.map_axis(Axis(1), |r| r.dot(&r).sqrt())
}

/// Rows with a smaller norm are treated as zero vectors by the cosine helpers.
pub const MIN_NORM: f64 = 1e-12;

/// Rows scaled to unit length together with the original norms. Rows with
/// norm below [`MIN_NORM`] map to zero. Fails on non-finite entries.
pub fn normalize_rows(m: &Matrix) -> Result<(Matrix, Array1<f64>)> {
    let norms = row_norms(m);
    if let Some(i) = norms.iter().position(|n| !n.is_finite()) {
        return Err(Error::InvalidInput(format!("row {i} is not finite")));
    }
    let mut out = m.clone();
    for (mut row, &n) in out.rows_mut().into_iter().zip(norms.iter()) {
        if n < MIN_NORM {
            row.fill(0.0);
        } else {
            row /= n;
        }
    }
    Ok((out, norms))
}

/// Backpropagate through `û = u / ‖u‖`: `du = (dû − û (û·dû)) / ‖u‖`.
/// Rows that were mapped to zero receive no gradient.
pub fn normalize_rows_backward(unit: &Matrix, norms: &Array1<f64>, grad_unit: &Matrix) -> Matrix {
    let mut out = grad_unit.clone();
    for ((mut g, u), &n) in out.rows_mut().into_iter().zip(unit.rows()).zip(norms.iter()) {
        if n < MIN_NORM {
            g.fill(0.0);
            continue;
        }
        let proj = u.dot(&g);
        g.scaled_add(-proj, &u);
        g /= n;
    }
    out
}
