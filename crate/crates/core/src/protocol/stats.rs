use crate::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn half_width(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::InvalidInput("confidence interval of an empty list".into()));
    }
    if xs.len() == 1 {
        return Ok(0.0);
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
    Ok(1.96 * var.sqrt() / (xs.len() as f64).sqrt())
}

/// `1.96 · s / √R` over per-repetition accuracies, with `s` the sample
/// standard deviation; 0 for a single repetition.
pub fn confidence_interval(scores: &[f64]) -> Result<f64> {
    half_width(scores)
}

/// Same formula applied to every individual test-task accuracy.
pub fn pooled_confidence_interval(task_scores: &[f64]) -> Result<f64> {
    half_width(task_scores)
}
