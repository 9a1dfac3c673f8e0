use serde::{Deserialize, Serialize};

use super::{gemm, Tensor};
use crate::error::{Error, Result};

/// Geometry of a 2-D convolution layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_height: usize,
    pub kernel_width: usize,
    pub stride: usize,
    pub padding: usize,
}

impl ConvSpec {
    /// Square kernel, stride 1.
    pub fn square(in_channels: usize, out_channels: usize, kernel: usize, padding: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel_height: kernel,
            kernel_width: kernel,
            stride: 1,
            padding,
        }
    }

    /// `floor((in + 2·pad − k) / stride) + 1` along each axis.
    pub fn output_size(&self, height: usize, width: usize) -> Result<(usize, usize)> {
        if self.stride == 0 {
            return Err(Error::Config(
                "convolution stride must be at least 1".into(),
            ));
        }
        if self.kernel_height == 0 || self.kernel_width == 0 {
            return Err(Error::Config("convolution kernel must be non-empty".into()));
        }
        let axis = |n: usize, k: usize| {
            let padded = n + 2 * self.padding;
            (padded >= k).then(|| (padded - k) / self.stride + 1)
        };
        match (
            axis(height, self.kernel_height),
            axis(width, self.kernel_width),
        ) {
            (Some(h), Some(w)) => Ok((h, w)),
            _ => Err(Error::dim(format!(
                "{}×{} kernel with padding {} does not fit a {height}×{width} input",
                self.kernel_height, self.kernel_width, self.padding
            ))),
        }
    }

    pub fn weight_shape(&self) -> [usize; 4] {
        [
            self.out_channels,
            self.in_channels,
            self.kernel_height,
            self.kernel_width,
        ]
    }

    fn patch_len(&self) -> usize {
        self.in_channels * self.kernel_height * self.kernel_width
    }
}

/// What [`conv2d_backward`] needs from the forward pass.
#[derive(Debug, Clone)]
pub struct ConvCache {
    spec: ConvSpec,
    input_shape: [usize; 4],
    out_hw: (usize, usize),
    /// im2col matrices, one `patch_len × (H'·W')` block per batch item.
    cols: Vec<f64>,
    weights: Tensor,
}

impl ConvCache {
    pub fn output_shape(&self) -> [usize; 4] {
        [
            self.input_shape[0],
            self.spec.out_channels,
            self.out_hw.0,
            self.out_hw.1,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

/// Cross-correlation of an `N×C×H×W` batch with `F×C×kh×kw` filters plus a
/// per-filter bias, computed as one matrix product per batch item.
pub fn conv2d_forward(
    input: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    spec: &ConvSpec,
) -> Result<(Tensor, ConvCache)> {
    input.expect_rank(4, "convolution input")?;
    let [n, c, h, w] = [
        input.shape()[0],
        input.shape()[1],
        input.shape()[2],
        input.shape()[3],
    ];
    if c != spec.in_channels {
        return Err(Error::dim(format!(
            "convolution expects {} input channels, input has shape {:?}",
            spec.in_channels,
            input.shape()
        )));
    }
    if weights.shape() != spec.weight_shape() {
        return Err(Error::dim(format!(
            "convolution weights must be {:?}, got {:?}",
            spec.weight_shape(),
            weights.shape()
        )));
    }
    if bias.shape() != [spec.out_channels] {
        return Err(Error::dim(format!(
            "convolution bias must be [{}], got {:?}",
            spec.out_channels,
            bias.shape()
        )));
    }
    let (oh, ow) = spec.output_size(h, w)?;
    let k = spec.patch_len();
    let p = oh * ow;
    let f = spec.out_channels;

    let mut cols = vec![0.0; n * k * p];
    let mut out = vec![0.0; n * f * p];
    let image_len = c * h * w;
    for b in 0..n {
        let col = &mut cols[b * k * p..(b + 1) * k * p];
        im2col(
            &input.data()[b * image_len..(b + 1) * image_len],
            [c, h, w],
            spec,
            (oh, ow),
            col,
        );
        let dst = &mut out[b * f * p..(b + 1) * f * p];
        for (row, &bv) in dst.chunks_exact_mut(p).zip(bias.data()) {
            row.fill(bv);
        }
        gemm(f, k, p, weights.data(), false, col, false, 1.0, dst);
    }

    let output = Tensor::new(&[n, f, oh, ow], out)?;
    let cache = ConvCache {
        spec: *spec,
        input_shape: [n, c, h, w],
        out_hw: (oh, ow),
        cols,
        weights: weights.clone(),
    };
    Ok((output, cache))
}

/// Exact gradients of [`conv2d_forward`] with respect to input, weights and bias.
pub fn conv2d_backward(cache: &ConvCache, grad_output: &Tensor) -> Result<ConvGrads> {
    let (weights, bias, input) = backward_impl(cache, grad_output, true)?;
    Ok(ConvGrads {
        input: input.expect("input gradient requested"),
        weights,
        bias,
    })
}

/// Weight and bias gradients only; used for the first layer, whose input is data.
pub(crate) fn conv2d_backward_weights(
    cache: &ConvCache,
    grad_output: &Tensor,
) -> Result<(Tensor, Tensor)> {
    let (weights, bias, _) = backward_impl(cache, grad_output, false)?;
    Ok((weights, bias))
}

fn backward_impl(
    cache: &ConvCache,
    grad_output: &Tensor,
    want_input: bool,
) -> Result<(Tensor, Tensor, Option<Tensor>)> {
    if grad_output.shape() != cache.output_shape() {
        return Err(Error::dim(format!(
            "convolution gradient must match forward output {:?}, got {:?}",
            cache.output_shape(),
            grad_output.shape()
        )));
    }
    let spec = &cache.spec;
    let [n, c, h, w] = cache.input_shape;
    let k = spec.patch_len();
    let p = cache.out_hw.0 * cache.out_hw.1;
    let f = spec.out_channels;

    let mut grad_w = vec![0.0; f * k];
    let mut grad_b = vec![0.0; f];
    let mut grad_in = want_input.then(|| vec![0.0; n * c * h * w]);
    let mut grad_cols = if want_input {
        vec![0.0; k * p]
    } else {
        Vec::new()
    };

    for b in 0..n {
        let g = &grad_output.data()[b * f * p..(b + 1) * f * p];
        let col = &cache.cols[b * k * p..(b + 1) * k * p];
        for (gb, row) in grad_b.iter_mut().zip(g.chunks_exact(p)) {
            *gb += row.iter().sum::<f64>();
        }
        // dW += G · colsᵀ
        gemm(f, p, k, g, false, col, true, 1.0, &mut grad_w);
        if let Some(gi) = grad_in.as_mut() {
            // dcols = Wᵀ · G, then scatter back onto the image
            gemm(
                k,
                f,
                p,
                cache.weights.data(),
                true,
                g,
                false,
                0.0,
                &mut grad_cols,
            );
            let image_len = c * h * w;
            col2im(
                &grad_cols,
                [c, h, w],
                spec,
                cache.out_hw,
                &mut gi[b * image_len..(b + 1) * image_len],
            );
        }
    }

    Ok((
        Tensor::new(&spec.weight_shape(), grad_w)?,
        Tensor::new(&[f], grad_b)?,
        grad_in.map(|g| Tensor::new(&[n, c, h, w], g)).transpose()?,
    ))
}

/// Unfold one `C×H×W` image into a `(C·kh·kw) × (H'·W')` patch matrix.
fn im2col(
    image: &[f64],
    [c, h, w]: [usize; 3],
    spec: &ConvSpec,
    (oh, ow): (usize, usize),
    cols: &mut [f64],
) {
    let (kh, kw, s) = (spec.kernel_height, spec.kernel_width, spec.stride);
    let pad = spec.padding as isize;
    let p = oh * ow;
    for ch in 0..c {
        let plane = &image[ch * h * w..(ch + 1) * h * w];
        for ki in 0..kh {
            for kj in 0..kw {
                let row = (ch * kh + ki) * kw + kj;
                let dst = &mut cols[row * p..(row + 1) * p];
                for oy in 0..oh {
                    let iy = (oy * s + ki) as isize - pad;
                    let line = &mut dst[oy * ow..(oy + 1) * ow];
                    if iy < 0 || iy >= h as isize {
                        line.fill(0.0);
                        continue;
                    }
                    let src = &plane[iy as usize * w..(iy as usize + 1) * w];
                    for (ox, v) in line.iter_mut().enumerate() {
                        let ix = (ox * s + kj) as isize - pad;
                        *v = if ix < 0 || ix >= w as isize {
                            0.0
                        } else {
                            src[ix as usize]
                        };
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: accumulate patch-matrix entries back onto the image.
fn col2im(
    cols: &[f64],
    [c, h, w]: [usize; 3],
    spec: &ConvSpec,
    (oh, ow): (usize, usize),
    image: &mut [f64],
) {
    let (kh, kw, s) = (spec.kernel_height, spec.kernel_width, spec.stride);
    let pad = spec.padding as isize;
    let p = oh * ow;
    for ch in 0..c {
        let plane = &mut image[ch * h * w..(ch + 1) * h * w];
        for ki in 0..kh {
            for kj in 0..kw {
                let row = (ch * kh + ki) * kw + kj;
                let src = &cols[row * p..(row + 1) * p];
                for oy in 0..oh {
                    let iy = (oy * s + ki) as isize - pad;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let line = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                    for ox in 0..ow {
                        let ix = (ox * s + kj) as isize - pad;
                        if ix >= 0 && ix < w as isize {
                            line[ix as usize] += src[oy * ow + ox];
                        }
                    }
                }
            }
        }
    }
}
