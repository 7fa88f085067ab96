//! 2-D convolution over `(height, width, channels)` activations.
//!
//! Implemented as cross-correlation (no kernel flip), the usual CNN
//! convention. The forward accumulation order per output cell is kernel-row,
//! kernel-column, channel with a single sequential accumulator — exactly the
//! order of the brute-force nested-loop definition, so the two agree
//! bit-for-bit and not merely within rounding.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Shape, Tensor};

/// Learnable filter bank. The kernel tensor has shape
/// `(filters, k, k, in_channels)`; bias has one entry per filter.
#[derive(Clone, Debug)]
pub struct ConvLayer<T: Scalar> {
    pub kernel: Tensor<T>,
    pub bias: Tensor<T>,
    pub stride: usize,
    pub zero_pad: usize,
}

/// Per-forward-pass scratch consumed by [`ConvLayer::backward`].
#[derive(Clone)]
pub struct ConvCache<T: Scalar> {
    padded: Tensor<T>,
    input_extents: [usize; 3],
}

pub struct ConvGrads<T: Scalar> {
    pub input: Tensor<T>,
    pub kernel: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> ConvLayer<T> {
    pub fn new(kernel: Tensor<T>, bias: Tensor<T>, stride: usize, zero_pad: usize) -> Result<Self> {
        if kernel.rank() != 4 {
            return Err(Error::InvalidArgument(format!(
                "conv kernel must have rank 4 (filters, k, k, channels), got {}",
                kernel.shape()
            )));
        }
        let e = kernel.shape().extents();
        if e[1] != e[2] {
            return Err(Error::InvalidArgument(format!(
                "conv kernel must be square, got {}x{}",
                e[1], e[2]
            )));
        }
        if bias.rank() != 1 || bias.len() != e[0] {
            return Err(Error::ShapeMismatch {
                op: "conv bias",
                lhs: kernel.shape().to_string(),
                rhs: bias.shape().to_string(),
            });
        }
        if stride == 0 {
            return Err(Error::InvalidArgument("conv stride must be >= 1".into()));
        }
        Ok(ConvLayer { kernel, bias, stride, zero_pad })
    }

    pub fn filters(&self) -> usize {
        self.kernel.shape().extent(0)
    }

    pub fn kernel_size(&self) -> usize {
        self.kernel.shape().extent(1)
    }

    pub fn in_channels(&self) -> usize {
        self.kernel.shape().extent(3)
    }

    /// `(H + 2·pad − k)/stride + 1` per spatial axis; errors when the
    /// division is not exact or the padded extent is smaller than the kernel.
    pub fn output_extents(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let k = self.kernel_size();
        let span = |e: usize| -> Result<usize> {
            let padded = e + 2 * self.zero_pad;
            if padded < k {
                return Err(Error::InvalidArgument(format!(
                    "conv input extent {e} with pad {} is smaller than kernel {k}",
                    self.zero_pad
                )));
            }
            if (padded - k) % self.stride != 0 {
                return Err(Error::InvalidArgument(format!(
                    "conv output extent is not integral: ({e} + 2*{} - {k}) not divisible by stride {}",
                    self.zero_pad, self.stride
                )));
            }
            Ok((padded - k) / self.stride + 1)
        };
        Ok((span(h)?, span(w)?))
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<(Tensor<T>, ConvCache<T>)> {
        let [h, w, c] = image_extents(input)?;
        if c != self.in_channels() {
            return Err(Error::ShapeMismatch {
                op: "conv_forward channels",
                lhs: input.shape().to_string(),
                rhs: self.kernel.shape().to_string(),
            });
        }
        let (h_out, w_out) = self.output_extents(h, w)?;
        let k = self.kernel_size();
        let filters = self.filters();
        let p = self.zero_pad;

        let padded = if p == 0 {
            input.clone()
        } else {
            input.pad(&[(p, p), (p, p), (0, 0)], T::zero())?
        };
        let pw = w + 2 * p;
        let pdata = padded.data();
        let kdata = self.kernel.data();
        let bdata = self.bias.data();
        let row_len = k * c;

        let mut out = vec![T::zero(); h_out * w_out * filters];
        for oy in 0..h_out {
            for ox in 0..w_out {
                let out_base = (oy * w_out + ox) * filters;
                for f in 0..filters {
                    let kern = &kdata[f * k * row_len..(f + 1) * k * row_len];
                    let mut acc = T::zero();
                    for ky in 0..k {
                        let in_off = ((oy * self.stride + ky) * pw + ox * self.stride) * c;
                        let in_row = &pdata[in_off..in_off + row_len];
                        let k_row = &kern[ky * row_len..(ky + 1) * row_len];
                        for i in 0..row_len {
                            acc = acc + in_row[i] * k_row[i];
                        }
                    }
                    out[out_base + f] = acc + bdata[f];
                }
            }
        }

        let out = Tensor::new(Shape::new(&[h_out, w_out, filters])?, out)?;
        Ok((out, ConvCache { padded, input_extents: [h, w, c] }))
    }

    pub fn backward(&self, cache: &ConvCache<T>, grad_out: &Tensor<T>) -> Result<ConvGrads<T>> {
        let [h, w, c] = cache.input_extents;
        let (h_out, w_out) = self.output_extents(h, w)?;
        let filters = self.filters();
        let expected = Shape::new(&[h_out, w_out, filters])?;
        if grad_out.shape() != &expected {
            return Err(Error::ShapeMismatch {
                op: "conv_backward",
                lhs: grad_out.shape().to_string(),
                rhs: expected.to_string(),
            });
        }
        let k = self.kernel_size();
        let p = self.zero_pad;
        let pw = w + 2 * p;
        let row_len = k * c;
        let pdata = cache.padded.data();
        let kdata = self.kernel.data();
        let gdata = grad_out.data();

        let mut grad_kernel = vec![T::zero(); self.kernel.len()];
        let mut grad_bias = vec![T::zero(); filters];
        let mut grad_padded = vec![T::zero(); cache.padded.len()];

        for oy in 0..h_out {
            for ox in 0..w_out {
                let out_base = (oy * w_out + ox) * filters;
                for f in 0..filters {
                    let g = gdata[out_base + f];
                    grad_bias[f] = grad_bias[f] + g;
                    let kern_base = f * k * row_len;
                    for ky in 0..k {
                        let in_off = ((oy * self.stride + ky) * pw + ox * self.stride) * c;
                        let k_off = kern_base + ky * row_len;
                        for i in 0..row_len {
                            grad_kernel[k_off + i] = grad_kernel[k_off + i] + g * pdata[in_off + i];
                            grad_padded[in_off + i] = grad_padded[in_off + i] + g * kdata[k_off + i];
                        }
                    }
                }
            }
        }

        let grad_input = if p == 0 {
            Tensor::new(Shape::new(&[h, w, c])?, grad_padded)?
        } else {
            Tensor::new(Shape::new(&[h + 2 * p, pw, c])?, grad_padded)?
                .slice(&[p..p + h, p..p + w, 0..c])?
        };

        Ok(ConvGrads {
            input: grad_input,
            kernel: Tensor::new(self.kernel.shape().clone(), grad_kernel)?,
            bias: Tensor::new(self.bias.shape().clone(), grad_bias)?,
        })
    }
}

pub(crate) fn image_extents<T: Scalar>(t: &Tensor<T>) -> Result<[usize; 3]> {
    if t.rank() != 3 {
        return Err(Error::InvalidArgument(format!(
            "expected rank-3 (H, W, C) tensor, got {}",
            t.shape()
        )));
    }
    let e = t.shape().extents();
    Ok([e[0], e[1], e[2]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::relative_error;
    use rand::Rng;

    /// Brute-force cross-correlation: six nested loops, zero padding realized
    /// by bounds checks, one sequential accumulator. Kept free of the
    /// production code path on purpose.
    fn conv_oracle(
        input: &Tensor<f32>,
        kernel: &Tensor<f32>,
        bias: &Tensor<f32>,
        stride: usize,
        pad: usize,
    ) -> Tensor<f32> {
        let [h, w, c] = [
            input.shape().extent(0),
            input.shape().extent(1),
            input.shape().extent(2),
        ];
        let filters = kernel.shape().extent(0);
        let k = kernel.shape().extent(1);
        let h_out = (h + 2 * pad - k) / stride + 1;
        let w_out = (w + 2 * pad - k) / stride + 1;
        let mut out = Tensor::zeros(&[h_out, w_out, filters]);
        for oy in 0..h_out {
            for ox in 0..w_out {
                for f in 0..filters {
                    let mut acc = 0.0f32;
                    for ky in 0..k {
                        for kx in 0..k {
                            for ch in 0..c {
                                let iy = (oy * stride + ky) as isize - pad as isize;
                                let ix = (ox * stride + kx) as isize - pad as isize;
                                let v = if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < w {
                                    input.at(&[iy as usize, ix as usize, ch])
                                } else {
                                    0.0
                                };
                                acc += kernel.at(&[f, ky, kx, ch]) * v;
                            }
                        }
                    }
                    out.set(&[oy, ox, f], acc + bias.at(&[f]));
                }
            }
        }
        out
    }

    fn random_layer(
        rng: &mut rand_chacha::ChaCha12Rng,
        filters: usize,
        k: usize,
        c: usize,
        stride: usize,
        pad: usize,
    ) -> ConvLayer<f32> {
        let kernel = Tensor::<f32>::from_fn(&[filters, k, k, c], |_| rng.random::<f32>() - 0.5);
        let bias = Tensor::<f32>::from_fn(&[filters], |_| rng.random::<f32>() - 0.5);
        ConvLayer::new(kernel, bias, stride, pad).unwrap()
    }

    #[test]
    fn identity_kernel_passes_single_pixel_through() {
        let mut kernel = Tensor::<f32>::zeros(&[1, 3, 3, 1]);
        kernel.set(&[0, 1, 1, 0], 1.0);
        let layer = ConvLayer::new(kernel, Tensor::zeros(&[1]), 1, 1).unwrap();
        let input = Tensor::from_slice(&[1, 1, 1], &[5.0f32]).unwrap();
        let (out, _) = layer.forward(&input).unwrap();
        assert_eq!(out.shape().extents(), &[1, 1, 1]);
        assert_eq!(out.data(), &[5.0]);
    }

    #[test]
    fn first_paper_layer_shape() {
        let mut rng = crate::rng::RngStream::from_seed(1).derive("conv-shape").rng();
        let layer = random_layer(&mut rng, 32, 3, 16, 1, 1);
        let input = Tensor::<f32>::from_fn(&[128, 128, 16], |_| rng.random());
        let (out, _) = layer.forward(&input).unwrap();
        assert_eq!(out.shape().extents(), &[128, 128, 32]);
    }

    #[test]
    fn forward_matches_nested_loop_oracle_bit_exactly() {
        let mut rng = crate::rng::RngStream::from_seed(2).derive("conv-oracle").rng();
        let layer = random_layer(&mut rng, 3, 3, 2, 1, 1);
        let input = Tensor::<f32>::from_fn(&[5, 5, 2], |_| rng.random::<f32>() * 2.0 - 1.0);
        let (got, _) = layer.forward(&input).unwrap();
        let want = conv_oracle(&input, &layer.kernel, &layer.bias, 1, 1);
        assert_eq!(got.shape(), want.shape());
        for (a, b) in got.iter().zip(want.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn all_zero_kernel_with_bias_gives_constant_output() {
        let layer = ConvLayer::new(
            Tensor::<f32>::zeros(&[2, 3, 3, 3]),
            Tensor::from_slice(&[2], &[0.25f32, -1.5]).unwrap(),
            1,
            1,
        )
        .unwrap();
        let mut rng = crate::rng::RngStream::from_seed(4).derive("conv-bias").rng();
        let input = Tensor::<f32>::from_fn(&[6, 4, 3], |_| rng.random());
        let (out, _) = layer.forward(&input).unwrap();
        assert_eq!(out.shape().extents(), &[6, 4, 2]);
        for i in 0..out.len() / 2 {
            assert_eq!(out.data()[2 * i], 0.25);
            assert_eq!(out.data()[2 * i + 1], -1.5);
        }
    }

    #[test]
    fn channel_mismatch_is_error() {
        let mut rng = crate::rng::RngStream::from_seed(5).derive("conv-chan").rng();
        let layer = random_layer(&mut rng, 2, 3, 4, 1, 1);
        let input = Tensor::<f32>::zeros(&[5, 5, 3]);
        assert!(matches!(layer.forward(&input), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn backward_zero_cotangent_gives_zero_gradients() {
        let mut rng = crate::rng::RngStream::from_seed(6).derive("conv-zero").rng();
        let layer = random_layer(&mut rng, 2, 3, 2, 1, 1);
        let input = Tensor::<f32>::from_fn(&[4, 4, 2], |_| rng.random());
        let (out, cache) = layer.forward(&input).unwrap();
        let grads = layer.backward(&cache, &Tensor::zeros(out.shape().extents())).unwrap();
        assert!(grads.input.iter().all(|&v| v == 0.0));
        assert!(grads.kernel.iter().all(|&v| v == 0.0));
        assert!(grads.bias.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_identity_kernel_routes_gradient_to_pixel() {
        let mut kernel = Tensor::<f64>::zeros(&[1, 3, 3, 1]);
        kernel.set(&[0, 1, 1, 0], 1.0);
        let layer = ConvLayer::new(kernel, Tensor::zeros(&[1]), 1, 1).unwrap();
        let input = Tensor::from_slice(&[1, 1, 1], &[5.0f64]).unwrap();
        let (_, cache) = layer.forward(&input).unwrap();
        let grads = layer.backward(&cache, &Tensor::full(&[1, 1, 1], 1.0)).unwrap();
        assert_eq!(grads.input.data(), &[1.0]);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = crate::rng::RngStream::from_seed(7).derive("conv-fd").rng();
        let kernel = Tensor::<f64>::from_fn(&[3, 3, 3, 2], |_| rng.random::<f64>() - 0.5);
        let bias = Tensor::<f64>::from_fn(&[3], |_| rng.random::<f64>() - 0.5);
        let layer = ConvLayer::new(kernel, bias, 1, 1).unwrap();
        let input = Tensor::<f64>::from_fn(&[4, 5, 2], |_| rng.random::<f64>() - 0.5);
        let (out, cache) = layer.forward(&input).unwrap();
        let cot = Tensor::<f64>::from_fn(out.shape().extents(), |_| rng.random::<f64>() - 0.5);
        let grads = layer.backward(&cache, &cot).unwrap();

        let eps = 1e-5;
        let scalar_loss = |layer: &ConvLayer<f64>, input: &Tensor<f64>| -> f64 {
            let (out, _) = layer.forward(input).unwrap();
            out.iter().zip(cot.iter()).map(|(a, b)| a * b).sum()
        };

        for i in 0..input.len() {
            let mut plus = input.clone();
            plus.data_mut()[i] += eps;
            let mut minus = input.clone();
            minus.data_mut()[i] -= eps;
            let numeric = (scalar_loss(&layer, &plus) - scalar_loss(&layer, &minus)) / (2.0 * eps);
            assert!(
                relative_error(grads.input.data()[i], numeric) < 1e-5,
                "input grad {i}: {} vs {numeric}",
                grads.input.data()[i]
            );
        }
        for i in 0..layer.kernel.len() {
            let mut plus = layer.clone();
            plus.kernel.data_mut()[i] += eps;
            let mut minus = layer.clone();
            minus.kernel.data_mut()[i] -= eps;
            let numeric = (scalar_loss(&plus, &input) - scalar_loss(&minus, &input)) / (2.0 * eps);
            assert!(relative_error(grads.kernel.data()[i], numeric) < 1e-5);
        }
        for i in 0..layer.bias.len() {
            let mut plus = layer.clone();
            plus.bias.data_mut()[i] += eps;
            let mut minus = layer.clone();
            minus.bias.data_mut()[i] -= eps;
            let numeric = (scalar_loss(&plus, &input) - scalar_loss(&minus, &input)) / (2.0 * eps);
            assert!(relative_error(grads.bias.data()[i], numeric) < 1e-5);
        }
    }

    #[test]
    fn oracle_equivalence_over_random_instances() {
        let mut rng = crate::rng::RngStream::from_seed(8).derive("conv-sweep").rng();
        for _ in 0..20 {
            let h = rng.random_range(3..=9);
            let w = rng.random_range(3..=9);
            let c = rng.random_range(1..=4);
            let filters = rng.random_range(1..=4);
            let pad = rng.random_range(0..=1);
            let layer = random_layer(&mut rng, filters, 3, c, 1, pad);
            let input = Tensor::<f32>::from_fn(&[h, w, c], |_| rng.random::<f32>() * 2.0 - 1.0);
            let (got, _) = layer.forward(&input).unwrap();
            let want = conv_oracle(&input, &layer.kernel, &layer.bias, 1, pad);
            for (a, b) in got.iter().zip(want.iter()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
