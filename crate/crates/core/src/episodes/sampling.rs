use std::collections::BTreeSet;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::graphdata::GraphBundle;
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub n_way: usize,
    pub k_shot: usize,
    pub m_query: usize,
}

impl EpisodeSpec {
    pub fn new(n_way: usize, k_shot: usize, m_query: usize) -> Result<Self> {
        let s = Self { n_way, k_shot, m_query };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_way < 2 || self.k_shot < 1 || self.m_query < 1 {
            return Err(Error::Config(format!(
                "episode needs N >= 2, K >= 1, M >= 1; got N={} K={} M={}",
                self.n_way, self.k_shot, self.m_query
            )));
        }
        Ok(())
    }
}

/// One few-shot task. Entries are `(node id, local label)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Episode {
    pub support: Vec<(usize, usize)>,
    pub query: Vec<(usize, usize)>,
    /// Global class id of each local label.
    pub class_map: Vec<usize>,
    /// Seed the episode was drawn from; per-episode randomness derives from it.
    pub seed: u64,
}

impl Episode {
    pub fn n_way(&self) -> usize {
        self.class_map.len()
    }

    pub fn support_nodes(&self) -> Vec<usize> {
        self.support.iter().map(|&(v, _)| v).collect()
    }

    pub fn support_labels(&self) -> Vec<usize> {
        self.support.iter().map(|&(_, y)| y).collect()
    }

    pub fn query_nodes(&self) -> Vec<usize> {
        self.query.iter().map(|&(v, _)| v).collect()
    }

    pub fn query_labels(&self) -> Vec<usize> {
        self.query.iter().map(|&(_, y)| y).collect()
    }
}

/// Draw `N` classes from `pool`, then `K+M` distinct nodes per class; the
/// first `K` form the support set.
pub fn sample_episode(
    g: &GraphBundle,
    pool: &BTreeSet<usize>,
    spec: &EpisodeSpec,
    seed_value: u64,
) -> Result<Episode> {
    spec.validate()?;
    if pool.len() < spec.n_way {
        return Err(Error::Sampling(format!(
            "class pool has {} classes, {}-way episodes need more",
            pool.len(),
            spec.n_way
        )));
    }
    let mut rng = seed::rng(seed_value);
    let classes: Vec<usize> = pool.iter().copied().collect();
    let chosen: Vec<usize> = index::sample(&mut rng, classes.len(), spec.n_way)
        .into_iter()
        .map(|i| classes[i])
        .collect();
    let per_class = spec.k_shot + spec.m_query;
    let mut support = Vec::with_capacity(spec.n_way * spec.k_shot);
    let mut query = Vec::with_capacity(spec.n_way * spec.m_query);
    for (local, &class) in chosen.iter().enumerate() {
        let nodes = g.nodes_of_class(class);
        if nodes.len() < per_class {
            return Err(Error::Sampling(format!(
                "insufficient nodes: class {class} has {}, episode needs {per_class}",
                nodes.len()
            )));
        }
        let picks = index::sample(&mut rng, nodes.len(), per_class);
        for (j, i) in picks.into_iter().enumerate() {
            if j < spec.k_shot {
                support.push((nodes[i], local));
            } else {
                query.push((nodes[i], local));
            }
        }
    }
    Ok(Episode {
        support,
        query,
        class_map: chosen,
        seed: seed_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn graph(per_class: &[usize]) -> GraphBundle {
        let labels: Vec<usize> = per_class
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
            .collect();
        GraphBundle::new(Array2::zeros((labels.len(), 1)), vec![], labels).unwrap()
    }

    #[test]
    fn exact_fit_uses_every_node() {
        let g = graph(&[11, 11]);
        let spec = EpisodeSpec::new(2, 1, 10).unwrap();
        let ep = sample_episode(&g, &BTreeSet::from([0, 1]), &spec, 5).unwrap();
        let mut all: Vec<usize> = ep.support_nodes().into_iter().chain(ep.query_nodes()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..22).collect::<Vec<_>>());
    }

    #[test]
    fn small_class_is_an_error() {
        let g = graph(&[10, 11]);
        let spec = EpisodeSpec::new(2, 1, 10).unwrap();
        let err = sample_episode(&g, &BTreeSet::from([0, 1]), &spec, 5).unwrap_err();
        assert!(err.to_string().contains("insufficient nodes"), "{err}");
    }

    #[test]
    fn small_pool_is_an_error() {
        let g = graph(&[20, 20]);
        let spec = EpisodeSpec::new(3, 1, 1).unwrap();
        assert!(sample_episode(&g, &BTreeSet::from([0, 1]), &spec, 5).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let g = graph(&[30, 30, 30]);
        let spec = EpisodeSpec::new(2, 3, 5).unwrap();
        let pool = BTreeSet::from([0, 1, 2]);
        assert_eq!(
            sample_episode(&g, &pool, &spec, 17).unwrap(),
            sample_episode(&g, &pool, &spec, 17).unwrap()
        );
    }

    #[test]
    fn spec_bounds() {
        assert!(EpisodeSpec::new(1, 1, 1).is_err());
        assert!(EpisodeSpec::new(2, 0, 1).is_err());
        assert!(EpisodeSpec::new(2, 1, 0).is_err());
    }
}
