use ndarray::{Array2, Zip};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::init::xavier_init;
use super::projection::ProjectionHead;
use super::Parameters;
use crate::error::ensure_shape;
use crate::graphdata::{FeatureMatrix, NormalizedAdjacency};
use crate::{seed, Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderDims {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
}

/// Weights of `Z = Â · dropout(ReLU(Â X W1)) · W2`, plus an optional
/// projection head used only by contrastive objectives.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub w1: Matrix,
    pub w2: Matrix,
    pub projection: Option<ProjectionHead>,
}

impl EncoderParams {
    pub fn xavier(dims: EncoderDims, with_projection: bool, seed_value: u64) -> Self {
        let s = |i| seed::derive(seed_value, &[seed::tag("encoder-init"), i]);
        Self {
            w1: xavier_init(dims.input, dims.hidden, s(0)),
            w2: xavier_init(dims.hidden, dims.output, s(1)),
            projection: with_projection.then(|| ProjectionHead {
                w1: xavier_init(dims.output, dims.output, s(2)),
                w2: xavier_init(dims.output, dims.output, s(3)),
            }),
        }
    }

    pub fn zeros(dims: EncoderDims, with_projection: bool) -> Self {
        Self {
            w1: Array2::zeros((dims.input, dims.hidden)),
            w2: Array2::zeros((dims.hidden, dims.output)),
            projection: with_projection.then(|| ProjectionHead {
                w1: Array2::zeros((dims.output, dims.output)),
                w2: Array2::zeros((dims.output, dims.output)),
            }),
        }
    }

    pub fn dims(&self) -> EncoderDims {
        EncoderDims {
            input: self.w1.nrows(),
            hidden: self.w1.ncols(),
            output: self.w2.ncols(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.dims(), self.projection.is_some())
    }

    /// The GCN weights alone; what gets frozen for probing.
    pub fn without_projection(&self) -> Self {
        Self {
            w1: self.w1.clone(),
            w2: self.w2.clone(),
            projection: None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Rebuild from checkpoint layers: `[w1, w2]` or `[w1, w2, p1, p2]`.
    pub fn from_layers(mut layers: Vec<Matrix>) -> Result<Self> {
        let projection = match layers.len() {
            2 => None,
            4 => {
                let w2 = layers.pop().expect("len 4");
                let w1 = layers.pop().expect("len 4");
                Some(ProjectionHead { w1, w2 })
            }
            n => return Err(Error::Checkpoint(format!("expected 2 or 4 layers, found {n}"))),
        };
        let w2 = layers.pop().expect("len >= 2");
        let w1 = layers.pop().expect("len >= 2");
        let p = Self { w1, w2, projection };
        let d = p.dims();
        let consistent = p.w2.nrows() == d.hidden
            && p.projection.as_ref().is_none_or(|h| {
                h.w1.dim() == (d.output, d.output) && h.w2.dim() == (d.output, d.output)
            });
        if !consistent {
            return Err(Error::Checkpoint("inconsistent layer shapes".into()));
        }
        Ok(p)
    }
}

impl Parameters for EncoderParams {
    fn tensors(&self) -> Vec<&Matrix> {
        let mut v = vec![&self.w1, &self.w2];
        if let Some(h) = &self.projection {
            v.extend([&h.w1, &h.w2]);
        }
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut v = vec![&mut self.w1, &mut self.w2];
        if let Some(h) = &mut self.projection {
            v.extend([&mut h.w1, &mut h.w2]);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Graph operands of one forward pass. A column mask zeroes feature
/// columns (feature-masking augmentation) without copying the features.
#[derive(Debug, Clone, Copy)]
pub struct GraphInput<'a> {
    pub adj: &'a NormalizedAdjacency,
    pub features: &'a FeatureMatrix,
    pub column_mask: Option<&'a [bool]>,
}

impl<'a> GraphInput<'a> {
    pub fn new(adj: &'a NormalizedAdjacency, features: &'a FeatureMatrix) -> Self {
        Self {
            adj,
            features,
            column_mask: None,
        }
    }

    pub fn with_column_mask(self, mask: &'a [bool]) -> Self {
        Self {
            column_mask: Some(mask),
            ..self
        }
    }
}

/// Everything the backward pass needs from a forward call.
#[derive(Debug, Clone)]
pub struct ForwardTape<'a> {
    input: GraphInput<'a>,
    w2: Matrix,
    pre_activation: Matrix,
    dropout_mask: Option<Matrix>,
    propagated_hidden: Matrix,
}

impl ForwardTape<'_> {
    pub fn pre_activation(&self) -> &Matrix {
        &self.pre_activation
    }

    pub fn dropout_mask(&self) -> Option<&Matrix> {
        self.dropout_mask.as_ref()
    }
}

/// Two-layer GCN forward pass. Inverted dropout on the hidden layer is
/// active in [`Mode::Train`] only; the output layer has no nonlinearity.
pub fn encoder_forward<'a>(
    p: &EncoderParams,
    input: GraphInput<'a>,
    mode: Mode,
    dropout_p: f64,
    seed_value: u64,
) -> Result<(Matrix, ForwardTape<'a>)> {
    if !(0.0..1.0).contains(&dropout_p) {
        return Err(Error::Config(format!("dropout probability {dropout_p} not in [0, 1)")));
    }
    let n = input.adj.num_nodes();
    ensure_shape(input.features.nrows() == n, || {
        format!("{} feature rows for {} nodes", input.features.nrows(), n)
    })?;
    ensure_shape(p.w2.nrows() == p.w1.ncols(), || {
        format!("W1 is {:?} but W2 is {:?}", p.w1.dim(), p.w2.dim())
    })?;

    let xw = input.features.matmul(&p.w1, input.column_mask)?;
    let pre_activation = input.adj.spmm(&xw)?;
    let mut hidden = pre_activation.mapv(super::ops::relu);

    let dropout_mask = if mode == Mode::Train && dropout_p > 0.0 {
        let mut rng = seed::rng(seed_value);
        let keep = 1.0 / (1.0 - dropout_p);
        let mask = Array2::from_shape_simple_fn(hidden.dim(), || {
            if rng.random::<f64>() < dropout_p {
                0.0
            } else {
                keep
            }
        });
        hidden *= &mask;
        Some(mask)
    } else {
        None
    };

    let propagated_hidden = input.adj.spmm(&hidden)?;
    let z = propagated_hidden.dot(&p.w2);
    Ok((
        z,
        ForwardTape {
            input,
            w2: p.w2.clone(),
            pre_activation,
            dropout_mask,
            propagated_hidden,
        },
    ))
}

/// Exact gradients of the encoder weights given `∂L/∂Z`. The returned
/// parameters carry no projection head.
pub fn encoder_backward(tape: &ForwardTape<'_>, grad_z: &Matrix) -> Result<EncoderParams> {
    ensure_shape(grad_z.dim() == (tape.propagated_hidden.nrows(), tape.w2.ncols()), || {
        format!("grad_Z is {:?}, expected {:?}", grad_z.dim(), (tape.propagated_hidden.nrows(), tape.w2.ncols()))
    })?;
    let adj = tape.input.adj;
    let grad_w2 = tape.propagated_hidden.t().dot(grad_z);
    // Â is symmetric, so Âᵀ·G = Â·G.
    let mut grad_hidden = adj.spmm(&grad_z.dot(&tape.w2.t()))?;
    if let Some(mask) = &tape.dropout_mask {
        grad_hidden *= mask;
    }
    Zip::from(&mut grad_hidden)
        .and(&tape.pre_activation)
        .for_each(|g, &pre| {
            if pre <= 0.0 {
                *g = 0.0;
            }
        });
    let grad_xw = adj.spmm(&grad_hidden)?;
    let grad_w1 = tape.input.features.transpose_matmul(&grad_xw, tape.input.column_mask)?;
    Ok(EncoderParams {
        w1: grad_w1,
        w2: grad_w2,
        projection: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::finite_diff_check;
    use ndarray::array;

    fn eye(n: usize) -> Matrix {
        Array2::eye(n)
    }

    #[test]
    fn identity_composition_returns_features() {
        let x = array![[1.0, 2.0, 0.0], [0.5, 0.0, 3.0]];
        let f = FeatureMatrix::new(x.clone()).unwrap();
        let adj = NormalizedAdjacency::identity(2);
        let p = EncoderParams {
            w1: eye(3),
            w2: eye(3),
            projection: None,
        };
        let (z, _) = encoder_forward(&p, GraphInput::new(&adj, &f), Mode::Eval, 0.5, 0).unwrap();
        assert_eq!(z, x);
    }

    #[test]
    fn zero_first_layer_gives_zero_output() {
        let f = FeatureMatrix::new(array![[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let adj = NormalizedAdjacency::from_edges(2, &[(0, 1)]);
        let p = EncoderParams {
            w1: Array2::zeros((2, 4)),
            w2: Array2::ones((4, 3)),
            projection: None,
        };
        let (z, _) = encoder_forward(&p, GraphInput::new(&adj, &f), Mode::Train, 0.3, 1).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_node_dense_oracle() {
        let f = FeatureMatrix::new(eye(2)).unwrap();
        let adj = NormalizedAdjacency::from_edges(2, &[(0, 1)]);
        let p = EncoderParams {
            w1: eye(2),
            w2: eye(2),
            projection: None,
        };
        let (z, _) = encoder_forward(&p, GraphInput::new(&adj, &f), Mode::Eval, 0.0, 0).unwrap();
        // Â·ReLU(Â·I·I)·I with Â = 0.5·ones: Â² = Â.
        assert_eq!(z, array![[0.5, 0.5], [0.5, 0.5]]);
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_gradients() {
        let f = FeatureMatrix::new(array![[1.0, -2.0], [3.0, 4.0], [0.0, 1.0]]).unwrap();
        let adj = NormalizedAdjacency::from_edges(3, &[(0, 1), (1, 2)]);
        let p = EncoderParams::xavier(EncoderDims { input: 2, hidden: 3, output: 2 }, false, 4);
        let (z, tape) = encoder_forward(&p, GraphInput::new(&adj, &f), Mode::Train, 0.5, 2).unwrap();
        let g = encoder_backward(&tape, &Array2::zeros(z.dim())).unwrap();
        assert!(g.w1.iter().chain(g.w2.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_hand_derivative() {
        // n = d = h = 1, isolated node: Z = x·w1·w2 in the active ReLU region.
        let (x, w1, w2) = (1.5, 0.7, -2.0);
        let f = FeatureMatrix::new(array![[x]]).unwrap();
        let adj = NormalizedAdjacency::identity(1);
        let p = EncoderParams {
            w1: array![[w1]],
            w2: array![[w2]],
            projection: None,
        };
        let (z, tape) = encoder_forward(&p, GraphInput::new(&adj, &f), Mode::Eval, 0.0, 0).unwrap();
        assert!((z[[0, 0]] - x * w1 * w2).abs() < 1e-15);
        let g = encoder_backward(&tape, &array![[1.0]]).unwrap();
        assert!((g.w1[[0, 0]] - x * w2).abs() < 1e-15);
        assert!((g.w2[[0, 0]] - x * w1).abs() < 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences_with_dropout_and_mask() {
        let x = array![[1.0, -0.5, 0.3], [0.2, 0.8, -1.0], [0.0, 0.4, 0.9], [1.2, 0.0, 0.1]];
        let f = FeatureMatrix::new(x).unwrap();
        let adj = NormalizedAdjacency::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        let mask = [true, false, true];
        let input = GraphInput::new(&adj, &f).with_column_mask(&mask);
        let p = EncoderParams::xavier(EncoderDims { input: 3, hidden: 5, output: 2 }, false, 11);
        let target = array![[0.3, -0.2], [0.1, 0.5], [-0.4, 0.2], [0.0, 0.7]];
        // L = ½‖Z − T‖²
        let loss = |w: &[Matrix]| {
            let q = EncoderParams {
                w1: w[0].clone(),
                w2: w[1].clone(),
                projection: None,
            };
            let (z, _) = encoder_forward(&q, input, Mode::Train, 0.4, 99).unwrap();
            0.5 * (&z - &target).mapv(|v| v * v).sum()
        };
        let (z, tape) = encoder_forward(&p, input, Mode::Train, 0.4, 99).unwrap();
        let g = encoder_backward(&tape, &(&z - &target)).unwrap();
        let err = finite_diff_check(loss, &[p.w1.clone(), p.w2.clone()], &[g.w1, g.w2], 1e-5);
        assert!(err < 1e-6, "{err}");
    }
}
