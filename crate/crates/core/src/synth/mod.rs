//! Procedural corn-kernel imagery.
//!
//! A kernel is a rotated ellipse in the yellow–orange band with a shaded
//! surface, a near-white tip and a gloss highlight. Abnormal kernels carry one
//! or more defects: a dark crack, a missing chunk, wrinkle ridges, or a green
//! or black blotch. Everything is a pure function of the seed.

mod dataset;
mod kernel;
mod scene;

pub use dataset::{
    generate_dataset, read_manifest, write_manifest, DatasetCounts, ManifestRecord, MANIFEST_FILE,
};
pub use kernel::{
    BlotchColor, Defect, DefectKind, GeneratorSettings, KernelAppearance, RenderStats, BACKGROUND,
    MIN_SINGLE_DEFECT_FRACTION,
};
pub use scene::{generate_scene, GroundTruth, Scene, SceneSpec};

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::LabeledImage;
use crate::error::{Error, Result};
use crate::label::KernelLabel;

pub const MIN_KERNEL_IMAGE_SIZE: u32 = 32;

/// A single kernel on a `size × size` dark canvas, plus how it was drawn.
pub fn render_kernel(
    label: KernelLabel,
    seed: u64,
    size: u32,
    settings: &GeneratorSettings,
) -> Result<(LabeledImage, KernelAppearance)> {
    if size < MIN_KERNEL_IMAGE_SIZE {
        return Err(Error::invalid(format!(
            "kernel image size {size} is below the minimum of {MIN_KERNEL_IMAGE_SIZE}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = size as f64;
    // The major axis spans 40–80% of the canvas.
    let semi_major = s * rng.random_range(0.2..0.4);
    let center = (
        s / 2.0 + rng.random_range(-0.04..0.04) * s,
        s / 2.0 + rng.random_range(-0.04..0.04) * s,
    );
    let appearance =
        kernel::sample_appearance(label, center, semi_major, (size, size), settings, &mut rng);
    let mut canvas = RgbImage::from_pixel(size, size, Rgb(BACKGROUND));
    appearance.render_into(&mut canvas);
    let image = LabeledImage::new(format!("kernel-{seed}.png"), canvas, label)?;
    Ok((image, appearance))
}

/// [`render_kernel`] with the default (easy) settings, image only.
pub fn generate_kernel_image(label: KernelLabel, seed: u64, size: u32) -> Result<LabeledImage> {
    render_kernel(label, seed, size, &GeneratorSettings::default()).map(|(img, _)| img)
}

/// Mix a base seed with a stream index into an independent 64-bit seed.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(base) ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
