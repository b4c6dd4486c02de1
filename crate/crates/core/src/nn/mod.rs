//! Dense numerics and the two-layer GCN encoder with hand-derived gradients.

mod adam;
pub mod checkpoint;
mod encoder;
mod gradcheck;
mod init;
pub mod ops;
mod projection;

pub use adam::{adam_step, AdamState};
pub use encoder::{encoder_backward, encoder_forward, EncoderDims, EncoderParams, ForwardTape, GraphInput, Mode};
pub use gradcheck::{finite_diff_check, relative_error, FD_EPS};
pub use init::xavier_init;
pub use projection::{projection_backward, projection_forward, ProjectionHead, ProjectionTape};

use crate::Matrix;

/// Ordered view of a set of trainable tensors. Gradients are represented by
/// a value of the same type with identical shapes.
pub trait Parameters {
    fn tensors(&self) -> Vec<&Matrix>;
    fn tensors_mut(&mut self) -> Vec<&mut Matrix>;
}

impl Parameters for Vec<Matrix> {
    fn tensors(&self) -> Vec<&Matrix> {
        self.iter().collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        self.iter_mut().collect()
    }
}

impl Parameters for [Matrix] {
    fn tensors(&self) -> Vec<&Matrix> {
        self.iter().collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        self.iter_mut().collect()
    }
}

/// Owned copies of all tensors, in order.
pub fn flatten<P: Parameters + ?Sized>(p: &P) -> Vec<Matrix> {
    p.tensors().into_iter().cloned().collect()
}
