use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::episodes::{sample_episode, Episode, EpisodeSpec};
use crate::graphdata::{GraphBundle, HIDDEN_LABEL};
use crate::{seed, Error, Result};

/// Copy of `ep` whose query labels are replaced by [`HIDDEN_LABEL`]; this is
/// all a predictor ever receives.
pub fn blind_episode(ep: &Episode) -> Episode {
    Episode {
        query: ep.query.iter().map(|&(v, _)| (v, HIDDEN_LABEL)).collect(),
        ..ep.clone()
    }
}

/// Per-task query accuracy over `tasks` seeded episodes. Task `i` always uses
/// seed `derive(seed_base, [i])`, so results do not depend on how rayon
/// schedules the work.
pub fn evaluate_tasks<F>(
    predict: F,
    g: &GraphBundle,
    pool: &BTreeSet<usize>,
    spec: &EpisodeSpec,
    tasks: usize,
    seed_base: u64,
) -> Result<Vec<f64>>
where
    F: Fn(&Episode) -> Result<Vec<usize>> + Sync,
{
    (0..tasks)
        .into_par_iter()
        .map(|i| {
            let ep = sample_episode(g, pool, spec, seed::derive(seed_base, &[i as u64]))?;
            let predicted = predict(&blind_episode(&ep))?;
            if predicted.len() != ep.query.len() {
                return Err(Error::Shape(format!(
                    "{} predictions for {} queries",
                    predicted.len(),
                    ep.query.len()
                )));
            }
            let correct = predicted.iter().zip(&ep.query).filter(|(p, (_, y))| *p == y).count();
            Ok(correct as f64 / ep.query.len() as f64)
        })
        .collect()
}

/// Mean of [`evaluate_tasks`].
pub fn evaluate_meta_tasks<F>(
    predict: F,
    g: &GraphBundle,
    pool: &BTreeSet<usize>,
    spec: &EpisodeSpec,
    tasks: usize,
    seed_base: u64,
) -> Result<f64>
where
    F: Fn(&Episode) -> Result<Vec<usize>> + Sync,
{
    let accs = evaluate_tasks(predict, g, pool, spec, tasks, seed_base)?;
    Ok(accs.iter().sum::<f64>() / accs.len().max(1) as f64)
}
