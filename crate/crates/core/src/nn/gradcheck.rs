use crate::Matrix;

/// Default central-difference step.
pub const FD_EPS: f64 = 1e-5;

/// Gradients smaller than this are compared on an absolute scale.
const RELATIVE_FLOOR: f64 = 1e-5;

/// `|analytic − numeric| / max(|numeric|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / numeric.abs().max(RELATIVE_FLOOR)
}

/// Compare `analytic` against central differences of `loss_fn` around
/// `params`, one coordinate at a time, and return the worst relative error.
pub fn finite_diff_check<F>(mut loss_fn: F, params: &[Matrix], analytic: &[Matrix], eps: f64) -> f64
where
    F: FnMut(&[Matrix]) -> f64,
{
    assert_eq!(params.len(), analytic.len(), "one analytic gradient per tensor");
    let mut work = params.to_vec();
    let mut worst = 0.0f64;
    for t in 0..params.len() {
        assert_eq!(params[t].dim(), analytic[t].dim(), "gradient shape for tensor {t}");
        for idx in 0..params[t].len() {
            let (r, c) = (idx / params[t].ncols(), idx % params[t].ncols());
            let original = params[t][[r, c]];
            work[t][[r, c]] = original + eps;
            let plus = loss_fn(&work);
            work[t][[r, c]] = original - eps;
            let minus = loss_fn(&work);
            work[t][[r, c]] = original;
            let numeric = (plus - minus) / (2.0 * eps);
            worst = worst.max(relative_error(analytic[t][[r, c]], numeric));
        }
    }
    worst
}
