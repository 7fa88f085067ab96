//! From-scratch training and inference for a reduced-VGG16 convolutional
//! network on arbitrary-channel multispectral images: dense tensors, the five
//! layer kinds, backpropagation with plain gradient descent, a multispectral
//! container format with a synthetic dataset generator, flip/rotation
//! augmentation, PCA spectral reduction, and a k-fold cross-validation
//! harness with early stopping, grid search and timing reports.

pub mod dataio;
pub mod error;
pub mod gradcheck;
pub mod layers;
pub mod network;
pub mod preprocess;
pub mod rng;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use tensor::{matvec, Scalar, Shape, Tensor};
