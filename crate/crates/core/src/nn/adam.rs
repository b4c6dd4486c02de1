use ndarray::{Array2, Zip};

use super::Parameters;
use crate::{Error, Matrix, Result};

/// Bias-corrected Adam moments for one parameter set.
#[derive(Debug, Clone)]
pub struct AdamState {
    first: Vec<Matrix>,
    second: Vec<Matrix>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new<P: Parameters + ?Sized>(params: &P) -> Self {
        let zeros: Vec<Matrix> = params.tensors().iter().map(|t| Array2::zeros(t.dim())).collect();
        Self {
            second: zeros.clone(),
            first: zeros,
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// One update. Weight decay is coupled L2: `g ← g + weight_decay·p`,
    /// the gradient of `weight_decay·‖p‖²/2`.
    pub fn step<P, G>(&mut self, params: &mut P, grads: &G, lr: f64, weight_decay: f64) -> Result<()>
    where
        P: Parameters + ?Sized,
        G: Parameters + ?Sized,
    {
        let mut params = params.tensors_mut();
        let grads = grads.tensors();
        if params.len() != self.first.len() || grads.len() != params.len() {
            return Err(Error::Shape(format!(
                "adam tracks {} tensors, got {} params and {} grads",
                self.first.len(),
                params.len(),
                grads.len()
            )));
        }
        for ((p, g), m) in params.iter().zip(&grads).zip(&self.first) {
            if p.dim() != g.dim() || p.dim() != m.dim() {
                return Err(Error::Shape(format!(
                    "adam tensor shape mismatch: param {:?}, grad {:?}, state {:?}",
                    p.dim(),
                    g.dim(),
                    m.dim()
                )));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(&grads)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            Zip::from(&mut **p)
                .and(*g)
                .and(m)
                .and(v)
                .for_each(|p, &g, m, v| {
                    let g = g + weight_decay * *p;
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *p -= lr * m_hat / (v_hat.sqrt() + eps);
                });
        }
        Ok(())
    }
}

/// Free-function form of [`AdamState::step`].
pub fn adam_step<P, G>(params: &mut P, grads: &G, state: &mut AdamState, lr: f64, weight_decay: f64) -> Result<()>
where
    P: Parameters + ?Sized,
    G: Parameters + ?Sized,
{
    state.step(params, grads, lr, weight_decay)
}
