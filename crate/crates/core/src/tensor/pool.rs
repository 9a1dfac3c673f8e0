use super::Tensor;
use crate::error::{Error, Result};

/// Argmax positions recorded by [`maxpool2d`], as flat indices into the input.
#[derive(Debug, Clone)]
pub struct PoolCache {
    input_shape: [usize; 4],
    argmax: Vec<usize>,
}

/// 2×2 max pooling with stride 2. Ties go to the first window member in
/// row-major order.
pub fn maxpool2d(input: &Tensor) -> Result<(Tensor, PoolCache)> {
    input.expect_rank(4, "pooling input")?;
    let [n, c, h, w] = [
        input.shape()[0],
        input.shape()[1],
        input.shape()[2],
        input.shape()[3],
    ];
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::dim(format!(
            "2×2 pooling needs even spatial dims, got {:?}",
            input.shape()
        )));
    }
    let (oh, ow) = (h / 2, w / 2);
    let src = input.data();
    let mut out = Vec::with_capacity(n * c * oh * ow);
    let mut argmax = Vec::with_capacity(n * c * oh * ow);
    for plane in 0..n * c {
        let base = plane * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let top = base + 2 * oy * w + 2 * ox;
                let mut best = top;
                for idx in [top + 1, top + w, top + w + 1] {
                    if src[idx] > src[best] {
                        best = idx;
                    }
                }
                out.push(src[best]);
                argmax.push(best);
            }
        }
    }
    let output = Tensor::new(&[n, c, oh, ow], out)?;
    Ok((
        output,
        PoolCache {
            input_shape: [n, c, h, w],
            argmax,
        },
    ))
}

/// Routes each output gradient to the input position that won its window.
pub fn maxpool2d_backward(cache: &PoolCache, grad_output: &Tensor) -> Result<Tensor> {
    let [n, c, h, w] = cache.input_shape;
    let expected = [n, c, h / 2, w / 2];
    if grad_output.shape() != expected {
        return Err(Error::dim(format!(
            "pooling gradient must be {expected:?}, got {:?}",
            grad_output.shape()
        )));
    }
    let mut grad = vec![0.0; n * c * h * w];
    for (&idx, &g) in cache.argmax.iter().zip(grad_output.data()) {
        grad[idx] += g;
    }
    Tensor::new(&cache.input_shape, grad)
}
