use super::ops::{elu, elu_grad};
use crate::error::ensure_shape;
use crate::{Matrix, Result};

/// Two-layer MLP `ELU(Z·W1)·W2` applied on top of the encoder output for
/// contrastive losses only.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionHead {
    pub w1: Matrix,
    pub w2: Matrix,
}

#[derive(Debug, Clone)]
pub struct ProjectionTape {
    input: Matrix,
    pre_activation: Matrix,
    hidden: Matrix,
}

pub fn projection_forward(head: &ProjectionHead, z: &Matrix) -> Result<(Matrix, ProjectionTape)> {
    ensure_shape(z.ncols() == head.w1.nrows(), || {
        format!("projection expects width {}, got {}", head.w1.nrows(), z.ncols())
    })?;
    let pre_activation = z.dot(&head.w1);
    let hidden = pre_activation.mapv(elu);
    let out = hidden.dot(&head.w2);
    Ok((
        out,
        ProjectionTape {
            input: z.clone(),
            pre_activation,
            hidden,
        },
    ))
}

/// Returns the head gradients and `∂L/∂Z`.
pub fn projection_backward(
    head: &ProjectionHead,
    tape: &ProjectionTape,
    grad_out: &Matrix,
) -> Result<(ProjectionHead, Matrix)> {
    ensure_shape(grad_out.dim() == (tape.hidden.nrows(), head.w2.ncols()), || {
        format!("projection gradient has shape {:?}", grad_out.dim())
    })?;
    let grad_w2 = tape.hidden.t().dot(grad_out);
    let mut grad_pre = grad_out.dot(&head.w2.t());
    grad_pre.zip_mut_with(&tape.pre_activation, |g, &x| *g *= elu_grad(x));
    let grad_w1 = tape.input.t().dot(&grad_pre);
    let grad_z = grad_pre.dot(&head.w1.t());
    Ok((
        ProjectionHead {
            w1: grad_w1,
            w2: grad_w2,
        },
        grad_z,
    ))
}
