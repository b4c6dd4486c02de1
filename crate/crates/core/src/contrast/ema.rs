use ndarray::Zip;

use crate::nn::{EncoderParams, Parameters};
use crate::{Error, Result};

pub const DEFAULT_EMA_DECAY: f64 = 0.99;

/// Slowly moving copy of an online encoder used as the bootstrap target.
#[derive(Debug, Clone)]
pub struct EmaTarget {
    pub params: EncoderParams,
    pub decay: f64,
}

impl EmaTarget {
    pub fn new(online: &EncoderParams, decay: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&decay) {
            return Err(Error::Config(format!("ema decay must lie in [0, 1], got {decay}")));
        }
        Ok(Self {
            params: online.clone(),
            decay,
        })
    }

    pub fn update(&mut self, online: &EncoderParams) -> Result<()> {
        ema_update(self, online)
    }
}

/// `target ← decay·target + (1−decay)·online`.
pub fn ema_update(target: &mut EmaTarget, online: &EncoderParams) -> Result<()> {
    let decay = target.decay;
    let dst = target.params.tensors_mut();
    let src = online.tensors();
    if dst.len() != src.len() || dst.iter().zip(&src).any(|(a, b)| a.dim() != b.dim()) {
        return Err(Error::Shape("ema target and online encoder differ in shape".into()));
    }
    for (t, o) in dst.into_iter().zip(src) {
        Zip::from(t).and(o).for_each(|t, &o| *t = decay * *t + (1.0 - decay) * o);
    }
    Ok(())
}
