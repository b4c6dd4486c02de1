use ndarray::Array2;

use super::Episode;
use crate::nn::ops::{argmax, cross_entropy, softmax_rows};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ProtoOutput {
    /// Mean query cross-entropy.
    pub loss: f64,
    /// Gradient with respect to every row of the embedding matrix.
    pub grad_z: Matrix,
    pub predictions: Vec<usize>,
    pub probabilities: Matrix,
}

fn check_rows(z: &Matrix, ep: &Episode) -> Result<()> {
    let n = z.nrows();
    if let Some(&(v, _)) = ep.support.iter().chain(&ep.query).find(|&&(v, _)| v >= n) {
        return Err(Error::Shape(format!("episode node {v} has no embedding row (n={n})")));
    }
    Ok(())
}

/// Per-class mean of the support embeddings, one row per local label.
pub fn prototypes(z: &Matrix, ep: &Episode) -> Result<Matrix> {
    check_rows(z, ep)?;
    let n_way = ep.n_way();
    let mut protos = Array2::zeros((n_way, z.ncols()));
    let mut counts = vec![0usize; n_way];
    for &(v, y) in &ep.support {
        protos.row_mut(y).scaled_add(1.0, &z.row(v));
        counts[y] += 1;
    }
    for (mut row, &c) in protos.rows_mut().into_iter().zip(&counts) {
        if c == 0 {
            return Err(Error::InvalidInput("local class without support".into()));
        }
        row /= c as f64;
    }
    Ok(protos)
}

/// Exhaustive nearest-prototype search, ties to the lowest local label.
pub fn nearest_prototype(z: &Matrix, ep: &Episode) -> Result<Vec<usize>> {
    let protos = prototypes(z, ep)?;
    Ok(ep
        .query
        .iter()
        .map(|&(v, _)| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, p) in protos.rows().into_iter().enumerate() {
                let d: f64 = z.row(v).iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            best
        })
        .collect())
}

/// Prototypical-network loss: logits are negative squared distances from
/// each query embedding to each class prototype.
pub fn protonet_episode(z: &Matrix, ep: &Episode) -> Result<ProtoOutput> {
    let protos = prototypes(z, ep)?;
    let q = ep.query.len();
    let n_way = ep.n_way();
    let mut logits = Array2::zeros((q, n_way));
    for (i, &(v, _)) in ep.query.iter().enumerate() {
        for c in 0..n_way {
            let diff = &z.row(v) - &protos.row(c);
            logits[[i, c]] = -diff.dot(&diff);
        }
    }
    let (loss, g) = cross_entropy(&logits, &ep.query_labels())?;
    let mut grad_z = Array2::zeros(z.dim());
    let mut grad_protos: Matrix = Array2::zeros(protos.dim());
    for (i, &(v, _)) in ep.query.iter().enumerate() {
        for c in 0..n_way {
            let diff = &z.row(v) - &protos.row(c);
            grad_z.row_mut(v).scaled_add(-2.0 * g[[i, c]], &diff);
            grad_protos.row_mut(c).scaled_add(2.0 * g[[i, c]], &diff);
        }
    }
    let mut counts = vec![0usize; n_way];
    for &(_, y) in &ep.support {
        counts[y] += 1;
    }
    for &(v, y) in &ep.support {
        grad_z.row_mut(v).scaled_add(1.0 / counts[y] as f64, &grad_protos.row(y));
    }
    let probabilities = softmax_rows(&logits);
    let predictions = logits.rows().into_iter().map(|r| argmax(r.iter())).collect();
    Ok(ProtoOutput {
        loss,
        grad_z,
        predictions,
        probabilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{finite_diff_check, FD_EPS};
    use ndarray::array;

    fn episode(support: Vec<(usize, usize)>, query: Vec<(usize, usize)>) -> Episode {
        let n_way = support.iter().map(|&(_, y)| y).max().unwrap() + 1;
        Episode {
            support,
            query,
            class_map: (0..n_way).collect(),
            seed: 0,
        }
    }

    #[test]
    fn two_way_one_shot_probabilities() {
        let z = array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
        let ep = episode(vec![(0, 0), (1, 1)], vec![(2, 0)]);
        assert_eq!(prototypes(&z, &ep).unwrap(), array![[1.0, 0.0], [0.0, 1.0]]);
        let out = protonet_episode(&z, &ep).unwrap();
        assert!((out.probabilities[[0, 0]] - 0.880797).abs() < 1e-6);
        assert!((out.probabilities[[0, 1]] - 0.119203).abs() < 1e-6);
        assert_eq!(out.predictions, vec![0]);
    }

    #[test]
    fn prototype_is_midpoint_of_two_shots() {
        let z = array![[0.0, 0.0], [2.0, 4.0], [9.0, 9.0], [9.0, 9.0], [1.0, 1.0]];
        let ep = episode(vec![(0, 0), (1, 0), (2, 1), (3, 1)], vec![(4, 0)]);
        assert_eq!(prototypes(&z, &ep).unwrap().row(0), array![1.0, 2.0]);
    }

    #[test]
    fn missing_row_is_an_error() {
        let z = array![[1.0]];
        let ep = episode(vec![(0, 0), (3, 1)], vec![(0, 0)]);
        assert!(protonet_episode(&z, &ep).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let z = crate::nn::xavier_init(8, 3, 4) * 2.0;
        let ep = episode(vec![(0, 0), (1, 0), (2, 1), (3, 1)], vec![(4, 0), (5, 0), (6, 1), (7, 1)]);
        let out = protonet_episode(&z, &ep).unwrap();
        let err = finite_diff_check(|p| protonet_episode(&p[0], &ep).unwrap().loss, &[z], &[out.grad_z], FD_EPS);
        assert!(err < 1e-4, "{err}");
    }
}
