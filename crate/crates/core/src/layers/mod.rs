//! The five layer kinds of the architecture: convolution, max-pooling,
//! dense, ReLU, dropout. Each exposes a forward pass producing a per-call
//! cache and a backward pass producing input- and parameter-gradients.
//!
//! Layer parameters are read-only during evaluation; per-sample scratch
//! (pool argmax maps, dropout masks) lives in the returned caches, so
//! independent samples can be processed concurrently.

mod conv;
mod dense;
mod dropout;
mod pool;

pub use conv::{ConvCache, ConvGrads, ConvLayer};
pub use dense::{DenseCache, DenseGrads, DenseLayer};
pub use dropout::{DropoutCache, DropoutLayer};
pub use pool::{MaxPoolLayer, PoolCache};

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// `g(z) = max(0, z)` applied per element.
pub fn relu_forward<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Routes the gradient where the forward input was strictly positive; the
/// subgradient at exactly zero is taken as zero.
pub fn relu_backward<T: Scalar>(input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    if input.shape() != grad_out.shape() {
        return Err(Error::ShapeMismatch {
            op: "relu_backward",
            lhs: input.shape().to_string(),
            rhs: grad_out.shape().to_string(),
        });
    }
    input.zip_map(grad_out, |x, g| if x > T::zero() { g } else { T::zero() })
}
