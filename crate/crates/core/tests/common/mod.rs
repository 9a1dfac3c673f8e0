//! Independent reference implementations used to check the optimized paths.

#![allow(dead_code)]

use image::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seedcheck::model::bce_loss;
use seedcheck::synth::KernelAppearance;
use seedcheck::tensor::ConvSpec;
use seedcheck::{Model, ModelParameters, Tensor};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor {
    Tensor::from_fn(shape, |_| rng.random_range(-scale..scale))
}

/// Triple-loop matrix product.
pub fn naive_matmul(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k, n) = (a.shape()[0], a.shape()[1], b.shape()[1]);
    assert_eq!(b.shape()[0], k);
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            let mut s = 0.0;
            for p in 0..k {
                s += a.data()[i * k + p] * b.data()[p * n + j];
            }
            out[i * n + j] = s;
        }
    }
    Tensor::new(&[m, n], out).unwrap()
}

/// Direct nested-loop cross-correlation with zero padding.
pub fn direct_conv(input: &Tensor, weights: &Tensor, bias: &Tensor, spec: &ConvSpec) -> Tensor {
    let [n, c, h, w] = [
        input.shape()[0],
        input.shape()[1],
        input.shape()[2],
        input.shape()[3],
    ];
    let (kh, kw, s, p) = (
        spec.kernel_height,
        spec.kernel_width,
        spec.stride,
        spec.padding as isize,
    );
    let f = spec.out_channels;
    let oh = (h + 2 * spec.padding - kh) / s + 1;
    let ow = (w + 2 * spec.padding - kw) / s + 1;
    let mut out = Tensor::zeros(&[n, f, oh, ow]);
    for b in 0..n {
        for o in 0..f {
            for y in 0..oh {
                for x in 0..ow {
                    let mut acc = bias.data()[o];
                    for ch in 0..c {
                        for dy in 0..kh {
                            for dx in 0..kw {
                                let iy = (y * s + dy) as isize - p;
                                let ix = (x * s + dx) as isize - p;
                                if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                    continue;
                                }
                                acc += input.at(&[b, ch, iy as usize, ix as usize])
                                    * weights.at(&[o, ch, dy, dx]);
                            }
                        }
                    }
                    out.set(&[b, o, y, x], acc);
                }
            }
        }
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Central difference of `f` at every coordinate of `x`.
pub fn numeric_gradient(x: &Tensor, h: f64, mut f: impl FnMut(&Tensor) -> f64) -> Tensor {
    let mut probe = x.clone();
    let mut grad = Tensor::zeros(x.shape());
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let up = f(&probe);
        probe.data_mut()[i] = orig - h;
        let down = f(&probe);
        probe.data_mut()[i] = orig;
        grad.data_mut()[i] = (up - down) / (2.0 * h);
    }
    grad
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale < 1e-300 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

pub fn model_loss(model: &Model, inputs: &Tensor, targets: &Tensor) -> f64 {
    let probs = model.predict(inputs).unwrap();
    bce_loss(&probs, targets).unwrap().0
}

/// Per-tensor relative error between backprop and central differences, over
/// at most `max_entries` evenly spaced entries of each tensor.
pub fn gradient_check(
    model: &Model,
    inputs: &Tensor,
    targets: &Tensor,
    h: f64,
    max_entries: usize,
) -> Vec<(String, f64)> {
    let (probs, cache) = model.forward(inputs).unwrap();
    let (_, grad) = bce_loss(&probs, targets).unwrap();
    let analytic: ModelParameters = model.backward(&cache, &grad).unwrap();

    let mut probe = model.clone();
    let mut out = Vec::new();
    let names: Vec<String> = model.params().names().map(String::from).collect();
    for name in names {
        let len = model.params().get(&name).unwrap().len();
        let step = len.div_ceil(max_entries).max(1);
        let (mut a, mut n) = (Vec::new(), Vec::new());
        for i in (0..len).step_by(step) {
            let orig = model.params().get(&name).unwrap().data()[i];
            let mut eval = |v: f64| {
                probe.params_mut().get_mut(&name).unwrap().data_mut()[i] = v;
                model_loss(&probe, inputs, targets)
            };
            let up = eval(orig + h);
            let down = eval(orig - h);
            eval(orig);
            n.push((up - down) / (2.0 * h));
            a.push(analytic.get(&name).unwrap().data()[i]);
        }
        out.push((name, relative_error(&a, &n)));
    }
    out
}

/// Colour test for healthy kernel surface: warm and bright, red ≥ green ≥ blue.
/// Everything a defect paints (dark crack, black or green blotch, grey-violet
/// wrinkle, background showing through a gap) fails it.
pub fn is_healthy_color(p: [u8; 3]) -> bool {
    p[0] >= 170 && p[0] >= p[1] && p[1] >= p[2]
}

/// Pixels inside the kernel's ellipse, and how many of them fail the healthy
/// palette, counted directly from the rendered raster.
pub fn palette_census(image: &RgbImage, kernel: &KernelAppearance) -> (usize, usize) {
    let (mut inside, mut defect) = (0, 0);
    for (x, y, p) in image.enumerate_pixels() {
        if kernel.contains_pixel(x, y) {
            inside += 1;
            defect += usize::from(!is_healthy_color(p.0));
        }
    }
    (inside, defect)
}

/// Fraction of ellipse pixels outside the healthy palette.
pub fn defect_palette_fraction(image: &RgbImage, kernel: &KernelAppearance) -> f64 {
    let (inside, defect) = palette_census(image, kernel);
    defect as f64 / inside.max(1) as f64
}
