use image::{imageops, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LabeledImage;

/// Label-preserving random transforms for training images. Each enabled flip
/// and the quarter-turn rotation fire independently; brightness scales every
/// channel by `1 + u` with `u` uniform in `[-brightness, brightness]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AugmentationConfig {
    pub horizontal_flip: bool,
    pub vertical_flip: bool,
    pub rotate90: bool,
    /// Maximum relative brightness change; 0 disables.
    pub brightness: f64,
    pub seed: u64,
}

impl AugmentationConfig {
    pub fn is_identity(&self) -> bool {
        !self.horizontal_flip && !self.vertical_flip && !self.rotate90 && self.brightness == 0.0
    }
}

/// Apply the configured transforms. The result depends only on
/// `(config, draw)`, never on call order.
pub fn augment(image: &LabeledImage, config: &AugmentationConfig, draw: u64) -> LabeledImage {
    if config.is_identity() {
        return image.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(draw);

    let mut pixels = image.pixels.clone();
    if config.horizontal_flip && rng.random_bool(0.5) {
        imageops::flip_horizontal_in_place(&mut pixels);
    }
    if config.vertical_flip && rng.random_bool(0.5) {
        imageops::flip_vertical_in_place(&mut pixels);
    }
    if config.rotate90 {
        pixels = match rng.random_range(0..4u8) {
            1 => imageops::rotate90(&pixels),
            2 => imageops::rotate180(&pixels),
            3 => imageops::rotate270(&pixels),
            _ => pixels,
        };
    }
    if config.brightness > 0.0 {
        let b = config.brightness;
        adjust_brightness(&mut pixels, rng.random_range(-b..=b));
    }
    LabeledImage {
        identifier: image.identifier.clone(),
        pixels,
        label: image.label,
    }
}

/// `v ← clamp(round(v · (1 + factor)), 0, 255)` on every channel.
pub fn adjust_brightness(pixels: &mut RgbImage, factor: f64) {
    for v in pixels.iter_mut() {
        *v = (*v as f64 * (1.0 + factor)).round().clamp(0.0, 255.0) as u8;
    }
}
