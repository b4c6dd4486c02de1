use std::collections::BTreeMap;

use ndarray::Array2;
use rand::Rng as _;

use crate::{seed, Error, Matrix, Result};

const RESTARTS: usize = 10;
const MAX_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Matrix,
    pub inertia: f64,
}

fn sq_dist(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus_init(x: &Matrix, k: usize, rng: &mut seed::Rng) -> Matrix {
    let n = x.nrows();
    let mut centroids = Array2::zeros((k, x.ncols()));
    centroids.row_mut(0).assign(&x.row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), centroids.row(0))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if r < d {
                    chosen = i;
                    break;
                }
                r -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&x.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), centroids.row(c)));
        }
    }
    centroids
}

fn lloyd(x: &Matrix, mut centroids: Matrix) -> KMeansResult {
    let (n, k) = (x.nrows(), centroids.nrows());
    let mut assignments = vec![usize::MAX; n];
    for _ in 0..MAX_ITERS {
        let mut changed = false;
        for i in 0..n {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let d = sq_dist(x.row(i), centroids.row(c));
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
        }
        let mut sums = Array2::zeros(centroids.dim());
        let mut counts = vec![0usize; k];
        for (i, &c) in assignments.iter().enumerate() {
            sums.row_mut(c).scaled_add(1.0, &x.row(i));
            counts[c] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids.row_mut(c).assign(&(&sums.row(c) / counts[c] as f64));
            } else {
                // Re-seed at the point farthest from its current centroid.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = sq_dist(x.row(a), centroids.row(assignments[a]));
                        let db = sq_dist(x.row(b), centroids.row(assignments[b]));
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .expect("n > 0");
                centroids.row_mut(c).assign(&x.row(far));
                assignments[far] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = (0..n).map(|i| sq_dist(x.row(i), centroids.row(assignments[i]))).sum();
    KMeansResult {
        assignments,
        centroids,
        inertia,
    }
}

/// K-means with k-means++ seeding; the lowest-inertia run of ten restarts
/// wins.
pub fn kmeans(x: &Matrix, k: usize, seed_value: u64) -> Result<KMeansResult> {
    if k == 0 || x.nrows() < k {
        return Err(Error::InvalidInput(format!("{} points cannot form {k} clusters", x.nrows())));
    }
    let mut best: Option<KMeansResult> = None;
    for restart in 0..RESTARTS {
        let mut rng = seed::rng(seed::derive(seed_value, &[seed::tag("kmeans"), restart as u64]));
        let run = lloyd(x, plus_plus_init(x, k, &mut rng));
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn contingency(a: &[usize], b: &[usize]) -> (BTreeMap<(usize, usize), f64>, BTreeMap<usize, f64>, BTreeMap<usize, f64>) {
    let mut joint = BTreeMap::new();
    let mut ma = BTreeMap::new();
    let mut mb = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_insert(0.0) += 1.0;
        *ma.entry(x).or_insert(0.0) += 1.0;
        *mb.entry(y).or_insert(0.0) += 1.0;
    }
    (joint, ma, mb)
}

fn entropy(counts: &BTreeMap<usize, f64>, n: f64) -> f64 {
    counts.values().map(|&c| -(c / n) * (c / n).ln()).sum()
}

/// Mutual information normalized by the arithmetic mean of the two
/// entropies. Two single-cluster partitions score 1.
pub fn normalized_mutual_info(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidInput("partitions must be non-empty and equally long".into()));
    }
    let n = a.len() as f64;
    let (joint, ma, mb) = contingency(a, b);
    let (ha, hb) = (entropy(&ma, n), entropy(&mb, n));
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    let mi: f64 = joint
        .iter()
        .map(|(&(x, y), &c)| (c / n) * (c * n / (ma[&x] * mb[&y])).ln())
        .sum();
    Ok((mi / (0.5 * (ha + hb))).clamp(0.0, 1.0))
}

fn pairs(c: f64) -> f64 {
    c * (c - 1.0) / 2.0
}

/// Adjusted Rand index from the pair-counting contingency table.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidInput("partitions must be non-empty and equally long".into()));
    }
    let (joint, ma, mb) = contingency(a, b);
    let index: f64 = joint.values().map(|&c| pairs(c)).sum();
    let sa: f64 = ma.values().map(|&c| pairs(c)).sum();
    let sb: f64 = mb.values().map(|&c| pairs(c)).sum();
    let total = pairs(a.len() as f64);
    let expected = if total > 0.0 { sa * sb / total } else { 0.0 };
    let max = 0.5 * (sa + sb);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Cluster `z` into `k` groups and score the result against `labels`.
pub fn clustering_scores(z: &Matrix, labels: &[usize], k: usize, seed_value: u64) -> Result<(f64, f64)> {
    if k < 2 {
        return Err(Error::InvalidInput("clustering needs k >= 2".into()));
    }
    if z.nrows() != labels.len() {
        return Err(Error::Shape(format!("{} rows for {} labels", z.nrows(), labels.len())));
    }
    let km = kmeans(z, k, seed_value)?;
    Ok((
        normalized_mutual_info(labels, &km.assignments)?,
        adjusted_rand_index(labels, &km.assignments)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn separated_clouds_are_recovered() {
        let z = array![[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [10.0, 10.0], [10.1, 10.0], [10.0, 10.1]];
        let (nmi, ari) = clustering_scores(&z, &[1, 1, 1, 0, 0, 0], 2, 3).unwrap();
        assert!((nmi - 1.0).abs() < 1e-12);
        assert!((ari - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_cluster_scores_zero() {
        let truth = [0, 0, 0, 1, 1, 1];
        let one = [0; 6];
        assert_eq!(normalized_mutual_info(&truth, &one).unwrap(), 0.0);
        assert!(adjusted_rand_index(&truth, &one).unwrap().abs() < 1e-15);
    }

    #[test]
    fn too_few_points() {
        assert!(kmeans(&array![[1.0]], 2, 0).is_err());
        assert!(clustering_scores(&array![[1.0], [2.0]], &[0, 1], 1, 0).is_err());
    }

    #[test]
    fn duplicate_points_do_not_leave_empty_clusters() {
        let z = array![[1.0], [1.0], [1.0], [5.0]];
        let km = kmeans(&z, 3, 1).unwrap();
        for c in 0..3 {
            assert!(km.assignments.contains(&c));
        }
    }
}
