//! Multi-seed scene inspection: find every kernel in a photograph, classify
//! each crop, and produce a per-seed report plus an annotated image.

mod annotate;
mod segment;

pub use annotate::annotate;
pub use segment::{
    connected_components, label_components, luminance, otsu_threshold, segment_foreground,
    Component, Labeling, Mask,
};

pub use crate::geometry::BoundingBox;
pub use crate::report::{InspectionReport, ReportRow, Totals};

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::data::preprocess;
use crate::error::Result;
use crate::model::Model;
use crate::tensor::Tensor;

pub const DEFAULT_MIN_AREA: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InspectConfig {
    /// Components smaller than this many pixels are treated as noise.
    pub min_area: usize,
    /// Fraction of the square crop's side taken by the kernel's longer box
    /// side; the rest is background padding.
    pub kernel_fill: f64,
}

impl Default for InspectConfig {
    fn default() -> Self {
        Self {
            min_area: DEFAULT_MIN_AREA,
            kernel_fill: 0.6,
        }
    }
}

/// A detected kernel cut out for classification.
#[derive(Debug, Clone)]
pub struct KernelCrop {
    pub bbox: BoundingBox,
    pub image: RgbImage,
}

/// Locate kernels and cut each one onto a square background-coloured canvas
/// centred on its box. Pixels belonging to other detections are blanked.
pub fn extract_crops(image: &RgbImage, config: &InspectConfig) -> Vec<KernelCrop> {
    let mask = segment_foreground(image);
    let labeling = label_components(&mask, config.min_area);
    let background = Rgb(background_color(image, &mask));
    let fill = config.kernel_fill.clamp(0.05, 1.0);

    labeling
        .components
        .iter()
        .map(|c| {
            let b = c.bbox;
            let side =
                ((b.width.max(b.height) as f64 / fill).ceil() as u32).max(b.width.max(b.height));
            let (ox, oy) = ((side - b.width) / 2, (side - b.height) / 2);
            let mut crop = RgbImage::from_pixel(side, side, background);
            for y in b.y..b.bottom() {
                for x in b.x..b.right() {
                    let owner = labeling.label_at(x, y);
                    if owner == 0 || owner == c.id {
                        crop.put_pixel(x - b.x + ox, y - b.y + oy, *image.get_pixel(x, y));
                    }
                }
            }
            KernelCrop {
                bbox: b,
                image: crop,
            }
        })
        .collect()
}

/// Detect, crop, preprocess, classify. Rows are named `Z-1`, `Z-2`, ... in
/// detection order. No detections gives an empty report and an unmodified copy
/// of the input.
pub fn inspect_scene(
    image: &RgbImage,
    model: &Model,
    config: &InspectConfig,
) -> Result<(InspectionReport, RgbImage)> {
    let crops = extract_crops(image, config);
    if crops.is_empty() {
        return Ok((InspectionReport::from_rows(Vec::new()), image.clone()));
    }
    let [c, h, w] = model.config().input_shape();
    let mut batch = Vec::with_capacity(crops.len() * c * h * w);
    for crop in &crops {
        batch.extend_from_slice(preprocess(&crop.image, h, w)?.data());
    }
    let probs = model.predict(&Tensor::new(&[crops.len(), c, h, w], batch)?)?;

    let rows = crops
        .iter()
        .zip(probs.data())
        .enumerate()
        .map(|(i, (crop, &p))| ReportRow::new(format!("Z-{}", i + 1), None, p, Some(crop.bbox)))
        .collect::<Result<Vec<_>>>()?;
    let report = InspectionReport::from_rows(rows);
    let annotated = annotate(image, &report);
    Ok((report, annotated))
}

/// Mean colour of the non-foreground pixels.
fn background_color(image: &RgbImage, mask: &Mask) -> [u8; 3] {
    let mut sum = [0u64; 3];
    let mut n = 0u64;
    for (x, y, p) in image.enumerate_pixels() {
        if !mask.get(x, y) {
            for (s, &v) in sum.iter_mut().zip(&p.0) {
                *s += v as u64;
            }
            n += 1;
        }
    }
    if n == 0 {
        return crate::synth::BACKGROUND;
    }
    sum.map(|s| ((s + n / 2) / n) as u8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn tiny_model() -> Model {
        Model::build(ModelConfig {
            filters: [2, 2, 2],
            dense_width: 4,
            ..ModelConfig::with_size(16)
        })
        .unwrap()
    }

    #[test]
    fn blank_image_yields_empty_report() {
        let img = RgbImage::from_pixel(100, 80, Rgb([30, 30, 30]));
        let (report, annotated) =
            inspect_scene(&img, &tiny_model(), &InspectConfig::default()).unwrap();
        assert!(report.rows.is_empty());
        assert_eq!(report.totals.total, 0);
        assert_eq!(annotated, img);
    }

    #[test]
    fn crops_are_square_and_blank_neighbours() {
        let img = RgbImage::from_fn(100, 60, |x, y| {
            let a = (10..40).contains(&x) && (10..30).contains(&y);
            let b = (38..70).contains(&x) && (32..50).contains(&y);
            if a || b {
                Rgb([220, 170, 40])
            } else {
                Rgb([30, 30, 30])
            }
        });
        let crops = extract_crops(&img, &InspectConfig::default());
        assert_eq!(crops.len(), 2);
        for crop in &crops {
            assert_eq!(crop.image.width(), crop.image.height());
            assert_eq!(
                crop.image.width(),
                (crop.bbox.width.max(crop.bbox.height) as f64 / 0.6).ceil() as u32
            );
        }
        let bright = |c: &KernelCrop| c.image.pixels().filter(|p| p.0[0] > 100).count();
        assert_eq!(bright(&crops[0]), 30 * 20);
        assert_eq!(bright(&crops[1]), 32 * 18);
    }

    #[test]
    fn report_rows_follow_detections() {
        let img = RgbImage::from_fn(80, 40, |x, y| {
            if ((5..20).contains(&x) || (50..70).contains(&x)) && (10..30).contains(&y) {
                Rgb([230, 180, 50])
            } else {
                Rgb([30, 30, 30])
            }
        });
        let (report, annotated) =
            inspect_scene(&img, &tiny_model(), &InspectConfig::default()).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.rows[0].seed, "Z-1");
        assert_eq!(report.totals.normal + report.totals.abnormal, 2);
        assert_ne!(annotated, img);
    }
}
