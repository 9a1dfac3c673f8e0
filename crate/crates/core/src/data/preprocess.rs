use image::RgbImage;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Bilinear resize to `target_height × target_width`, scale channels to
/// `[0, 1]`, and lay out channel-first as `[3, H, W]`.
///
/// Sampling uses pixel-centre alignment, so a same-size resize is exact.
pub fn preprocess(image: &RgbImage, target_height: usize, target_width: usize) -> Result<Tensor> {
    if target_height == 0 || target_width == 0 {
        return Err(Error::invalid(format!(
            "target size {target_height}×{target_width} must be positive"
        )));
    }
    if image.width() == 0 || image.height() == 0 {
        return Err(Error::invalid("cannot preprocess an empty image"));
    }
    let mut out = vec![0.0; 3 * target_height * target_width];
    write_into(image, target_height, target_width, &mut out);
    Tensor::new(&[3, target_height, target_width], out)
}

/// Writes the preprocessed `[3, H, W]` planes into `out`. Inputs must be valid.
pub(crate) fn write_into(
    image: &RgbImage,
    target_height: usize,
    target_width: usize,
    out: &mut [f64],
) {
    let (src_w, src_h) = (image.width() as usize, image.height() as usize);
    let plane = target_height * target_width;
    debug_assert_eq!(out.len(), 3 * plane);

    let xs = sample_axis(src_w, target_width);
    let ys = sample_axis(src_h, target_height);
    let raw = image.as_raw();
    let px = |x: usize, y: usize, c: usize| raw[(y * src_w + x) * 3 + c] as f64;

    for (ty, &(y0, y1, fy)) in ys.iter().enumerate() {
        for (tx, &(x0, x1, fx)) in xs.iter().enumerate() {
            for c in 0..3 {
                let top = px(x0, y0, c) * (1.0 - fx) + px(x1, y0, c) * fx;
                let bottom = px(x0, y1, c) * (1.0 - fx) + px(x1, y1, c) * fx;
                let v = top * (1.0 - fy) + bottom * fy;
                out[c * plane + ty * target_width + tx] = v / 255.0;
            }
        }
    }
}

/// Source neighbours and interpolation weight for every target coordinate.
fn sample_axis(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|t| {
            let s = ((t as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let lo = s.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, s - lo as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    #[test]
    fn same_size_is_scaled_copy() {
        let img = RgbImage::from_fn(250, 250, |x, y| {
            Rgb([(x % 256) as u8, (y % 256) as u8, ((x * y) % 256) as u8])
        });
        let t = preprocess(&img, 250, 250).unwrap();
        assert_eq!(t.shape(), &[3, 250, 250]);
        for (x, y) in [(0, 0), (17, 203), (249, 249)] {
            let p = img.get_pixel(x, y);
            for c in 0..3 {
                assert_eq!(t.at(&[c, y as usize, x as usize]), p[c] as f64 / 255.0);
            }
        }
    }

    #[test]
    fn white_maps_to_one() {
        let img = RgbImage::from_pixel(37, 23, Rgb([255, 255, 255]));
        let t = preprocess(&img, 16, 16).unwrap();
        assert!(t.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn constants_survive_resampling() {
        let img = RgbImage::from_pixel(500, 500, Rgb([77, 140, 201]));
        let t = preprocess(&img, 250, 250).unwrap();
        for c in 0..3 {
            let expected = [77.0, 140.0, 201.0][c] / 255.0;
            let plane = &t.data()[c * 250 * 250..(c + 1) * 250 * 250];
            assert!(plane.iter().all(|v| (v - expected).abs() < 1e-12));
        }
    }

    #[test]
    fn values_in_unit_range() {
        let img = RgbImage::from_fn(31, 45, |x, y| Rgb([(x * 8) as u8, (y * 5) as u8, 255]));
        let t = preprocess(&img, 24, 40).unwrap();
        assert_eq!(t.shape(), &[3, 24, 40]);
        assert!(t.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn zero_target_rejected() {
        let img = RgbImage::from_pixel(4, 4, Rgb([0, 0, 0]));
        assert!(preprocess(&img, 0, 4).is_err());
    }
}
