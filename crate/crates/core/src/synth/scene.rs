use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kernel::{sample_appearance, GeneratorSettings, KernelAppearance, BACKGROUND};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::label::KernelLabel;

/// Placement attempts shared by all kernels of one scene.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

/// A multi-kernel photograph to synthesise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: u32,
    pub height: u32,
    /// One entry per kernel, in placement order.
    pub labels: Vec<KernelLabel>,
    /// Range of major-axis lengths in pixels.
    pub kernel_length: (f64, f64),
    /// Minimum pixel gap between any two kernels and between kernels and the border.
    pub margin: f64,
    pub settings: GeneratorSettings,
}

impl SceneSpec {
    /// A 640×480 scene with the given class counts, interleaved.
    pub fn with_counts(normal: usize, abnormal: usize) -> Self {
        let mut labels = Vec::with_capacity(normal + abnormal);
        let (mut n, mut a) = (normal, abnormal);
        while n + a > 0 {
            if n > 0 {
                labels.push(KernelLabel::Normal);
                n -= 1;
            }
            if a > 0 {
                labels.push(KernelLabel::Abnormal);
                a -= 1;
            }
        }
        Self {
            width: 640,
            height: 480,
            labels,
            kernel_length: (44.0, 60.0),
            margin: 4.0,
            settings: GeneratorSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub label: KernelLabel,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub image: RgbImage,
    pub truth: Vec<GroundTruth>,
    pub kernels: Vec<KernelAppearance>,
}

/// Scatter non-overlapping kernels over a uniform dark background.
/// Ground-truth boxes are tight to the painted kernel pixels.
pub fn generate_scene(spec: &SceneSpec, seed: u64) -> Result<Scene> {
    let (lo, hi) = spec.kernel_length;
    if !(lo > 0.0 && hi >= lo) || spec.margin < 0.0 {
        return Err(Error::invalid(format!(
            "kernel length range {lo}..{hi} and margin {} are invalid",
            spec.margin
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (spec.width as f64, spec.height as f64);
    let mut placed: Vec<((f64, f64), f64)> = Vec::new();
    let mut attempts = 0;

    let mut kernels = Vec::with_capacity(spec.labels.len());
    for &label in &spec.labels {
        let (center, semi_major) = loop {
            attempts += 1;
            if attempts > MAX_PLACEMENT_ATTEMPTS {
                return Err(Error::Capacity(format!(
                    "could not place {} kernels on a {}×{} canvas after {MAX_PLACEMENT_ATTEMPTS} attempts; use a larger canvas",
                    spec.labels.len(),
                    spec.width,
                    spec.height
                )));
            }
            let a = if hi > lo {
                rng.random_range(lo..=hi) / 2.0
            } else {
                lo / 2.0
            };
            let reach = a + spec.margin;
            if 2.0 * reach >= w || 2.0 * reach >= h {
                continue;
            }
            let c = (
                rng.random_range(reach..w - reach),
                rng.random_range(reach..h - reach),
            );
            // Bounding circles separated by the margin keep the ellipses apart.
            let clear = placed
                .iter()
                .all(|&((x, y), r)| (c.0 - x).hypot(c.1 - y) >= a + r + spec.margin);
            if clear {
                break (c, a);
            }
        };
        placed.push((center, semi_major));
        kernels.push(sample_appearance(
            label,
            center,
            semi_major,
            (spec.width, spec.height),
            &spec.settings,
            &mut rng,
        ));
    }

    let mut image = RgbImage::from_pixel(spec.width, spec.height, Rgb(BACKGROUND));
    let mut truth = Vec::with_capacity(kernels.len());
    for kernel in &kernels {
        kernel.render_into(&mut image);
        let bbox = kernel
            .stats(spec.width, spec.height)
            .painted_box
            .ok_or_else(|| Error::invalid("kernel rendered no pixels"))?;
        truth.push(GroundTruth {
            bbox,
            label: kernel.label(),
        });
    }
    Ok(Scene {
        image,
        truth,
        kernels,
    })
}
