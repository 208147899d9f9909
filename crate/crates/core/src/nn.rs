//! Two-layer graph convolutional encoder and linear softmax classifier.
//!
//! The encoder computes `H = Â · ReLU(Â · X · W1 + b1) · W2 + b2` with the
//! symmetric-normalized self-looped adjacency `Â` from
//! [`crate::graph::normalize_adjacency`]. The classifier maps embeddings to
//! row-stochastic class probabilities through a dense layer and a
//! max-stabilized softmax. Both are assembled on a [`Tape`] so the backward
//! sweep reaches every weight and bias.
//!
//! Parameters live outside the tape in [`EncoderParams`]; each training step
//! binds them as gradient-requiring leaves, runs forward/backward, then reads
//! the accumulated gradients back out for the optimizer.

use crate::autodiff::{Tape, TensorId};
use crate::graph::NormalizedAdjacency;
use crate::{error::CoreError, Result};
use ndarray::Array2;
use rand::distributions::{Distribution, Uniform};

/// Layer sizes of the encoder/classifier stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    /// Input feature width `d`.
    pub n_features: usize,
    /// First hidden width.
    pub hidden1: usize,
    /// Embedding width (second hidden layer output).
    pub embedding: usize,
    /// Number of classes.
    pub n_classes: usize,
}

impl ModelDims {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_features", self.n_features),
            ("hidden1", self.hidden1),
            ("embedding", self.embedding),
            ("n_classes", self.n_classes),
        ] {
            if v == 0 {
                return Err(CoreError::InvalidParameter {
                    name,
                    message: "layer sizes must be positive".into(),
                });
            }
        }
        Ok(())
    }
}

/// Trainable weights and biases, stored as plain matrices (biases are `1×k`).
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub w1: Array2<f64>,
    pub b1: Array2<f64>,
    pub w2: Array2<f64>,
    pub b2: Array2<f64>,
    pub wc: Array2<f64>,
    pub bc: Array2<f64>,
}

/// Order in which parameters appear in [`EncoderParams::as_slice`] and
/// friends; checkpoints and the optimizer rely on it.
pub const PARAM_NAMES: [&str; 6] = ["w1", "b1", "w2", "b2", "wc", "bc"];

impl EncoderParams {
    /// Seeded Xavier-uniform initialization: each weight matrix is drawn
    /// from `U(−a, a)` with `a = √(6 / (fan_in + fan_out))`, biases start at
    /// zero. Matrices are filled in the fixed order `w1, w2, wc`, row-major,
    /// so a seed pins every entry.
    pub fn init(dims: ModelDims, seed: u64) -> Result<Self> {
        dims.validate()?;
        let mut rng = crate::rng::rng_from(seed);
        let mut xavier = |fan_in: usize, fan_out: usize| -> Array2<f64> {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-a, a);
            Array2::from_shape_simple_fn((fan_in, fan_out), || dist.sample(&mut rng))
        };
        let w1 = xavier(dims.n_features, dims.hidden1);
        let w2 = xavier(dims.hidden1, dims.embedding);
        let wc = xavier(dims.embedding, dims.n_classes);
        Ok(Self {
            w1,
            b1: Array2::zeros((1, dims.hidden1)),
            w2,
            b2: Array2::zeros((1, dims.embedding)),
            wc,
            bc: Array2::zeros((1, dims.n_classes)),
        })
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            n_features: self.w1.nrows(),
            hidden1: self.w1.ncols(),
            embedding: self.w2.ncols(),
            n_classes: self.wc.ncols(),
        }
    }

    /// Parameters in [`PARAM_NAMES`] order.
    pub fn as_slice(&self) -> [&Array2<f64>; 6] {
        [&self.w1, &self.b1, &self.w2, &self.b2, &self.wc, &self.bc]
    }

    pub fn as_mut_slice(&mut self) -> [&mut Array2<f64>; 6] {
        [
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.wc,
            &mut self.bc,
        ]
    }

    /// Rebuilds parameters from matrices in [`PARAM_NAMES`] order.
    pub fn from_vec(mut arrays: Vec<Array2<f64>>) -> Result<Self> {
        if arrays.len() != 6 {
            return Err(CoreError::DimensionMismatch {
                context: "encoder parameter list",
                expected: 6,
                actual: arrays.len(),
            });
        }
        let bc = arrays.pop().unwrap();
        let wc = arrays.pop().unwrap();
        let b2 = arrays.pop().unwrap();
        let w2 = arrays.pop().unwrap();
        let b1 = arrays.pop().unwrap();
        let w1 = arrays.pop().unwrap();
        let params = Self { w1, b1, w2, b2, wc, bc };
        let d = params.dims();
        d.validate()?;
        let expect: [(usize, usize); 6] = [
            (d.n_features, d.hidden1),
            (1, d.hidden1),
            (d.hidden1, d.embedding),
            (1, d.embedding),
            (d.embedding, d.n_classes),
            (1, d.n_classes),
        ];
        for (arr, want) in params.as_slice().iter().zip(expect) {
            if arr.dim() != want {
                return Err(CoreError::ShapeMismatch {
                    op: "encoder parameters",
                    lhs: arr.dim(),
                    rhs: want,
                });
            }
        }
        Ok(params)
    }

    /// Registers every parameter on `tape` as a gradient-requiring leaf.
    pub fn bind(&self, tape: &mut Tape) -> Result<BoundParams> {
        Ok(BoundParams {
            w1: tape.leaf(self.w1.clone(), true)?,
            b1: tape.leaf(self.b1.clone(), true)?,
            w2: tape.leaf(self.w2.clone(), true)?,
            b2: tape.leaf(self.b2.clone(), true)?,
            wc: tape.leaf(self.wc.clone(), true)?,
            bc: tape.leaf(self.bc.clone(), true)?,
        })
    }

    /// Reads the gradients accumulated on `tape` back out, in
    /// [`PARAM_NAMES`] order. Parameters the loss never touched (for
    /// example the classifier head when the labeled term is ablated) get
    /// zero gradients.
    pub fn gradients(&self, tape: &Tape, bound: &BoundParams) -> Vec<Array2<f64>> {
        bound
            .as_slice()
            .iter()
            .zip(self.as_slice())
            .map(|(&id, param)| match tape.grad(id) {
                Some(g) => g.to_owned(),
                None => Array2::zeros(param.raw_dim()),
            })
            .collect()
    }
}

/// Tape handles for one binding of [`EncoderParams`].
#[derive(Debug, Clone, Copy)]
pub struct BoundParams {
    pub w1: TensorId,
    pub b1: TensorId,
    pub w2: TensorId,
    pub b2: TensorId,
    pub wc: TensorId,
    pub bc: TensorId,
}

impl BoundParams {
    pub fn as_slice(&self) -> [TensorId; 6] {
        [self.w1, self.b1, self.w2, self.b2, self.wc, self.bc]
    }
}

/// Builds the embedding computation `H = Â·ReLU(Â·X·W1 + b1)·W2 + b2` on the
/// tape and returns the `n×embedding` node.
pub fn encode(
    tape: &mut Tape,
    adj: &NormalizedAdjacency,
    x: TensorId,
    params: &BoundParams,
) -> Result<TensorId> {
    let xw1 = tape.matmul(x, params.w1)?;
    let prop1 = tape.spmm(adj.matrix(), xw1)?;
    let pre1 = tape.add_bias(prop1, params.b1)?;
    let act1 = tape.relu(pre1)?;
    let aw2 = tape.matmul(act1, params.w2)?;
    let prop2 = tape.spmm(adj.matrix(), aw2)?;
    tape.add_bias(prop2, params.b2)
}

/// Maps embeddings to row-stochastic class probabilities:
/// `softmax(H·Wc + bc)` with per-row max subtraction for overflow safety.
pub fn classify(tape: &mut Tape, h: TensorId, params: &BoundParams) -> Result<TensorId> {
    let logits = tape.matmul(h, params.wc)?;
    let shifted = tape.add_bias(logits, params.bc)?;
    tape.softmax_rows(shifted)
}
