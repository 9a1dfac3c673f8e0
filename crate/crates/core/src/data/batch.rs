use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{augment, preprocess, AugmentationConfig, LabeledImage};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// One mini-batch: `inputs` is `N×3×H×W`, `targets` holds encoded labels.
#[derive(Debug, Clone)]
pub struct Batch {
    pub inputs: Tensor,
    pub targets: Tensor,
    pub identifiers: Vec<String>,
}

/// Iterates one epoch of mini-batches in a seeded order.
pub struct BatchIter<'a> {
    images: &'a [LabeledImage],
    order: Vec<usize>,
    cursor: usize,
    batch_size: usize,
    size: (usize, usize),
    epoch: u64,
    augmentation: Option<AugmentationConfig>,
}

/// Every image exactly once, in a permutation that depends only on
/// `(shuffle_seed, epoch)`. `shuffle_seed = None` keeps file order.
/// The last batch may be short.
pub fn batch_iter<'a>(
    images: &'a [LabeledImage],
    batch_size: usize,
    size: (usize, usize),
    shuffle_seed: Option<u64>,
    epoch: u64,
    augmentation: Option<AugmentationConfig>,
) -> Result<BatchIter<'a>> {
    if images.is_empty() {
        return Err(Error::invalid("cannot batch an empty split"));
    }
    if batch_size == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    if size.0 == 0 || size.1 == 0 {
        return Err(Error::invalid("batch image size must be positive"));
    }
    let mut order: Vec<usize> = (0..images.len()).collect();
    if let Some(seed) = shuffle_seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(epoch);
        order.shuffle(&mut rng);
    }
    Ok(BatchIter {
        images,
        order,
        cursor: 0,
        batch_size,
        size,
        epoch,
        augmentation: augmentation.filter(|a| !a.is_identity()),
    })
}

impl Iterator for BatchIter<'_> {
    type Item = Batch;

    fn next(&mut self) -> Option<Batch> {
        if self.cursor >= self.order.len() {
            return None;
        }
        let end = (self.cursor + self.batch_size).min(self.order.len());
        let picks = &self.order[self.cursor..end];
        self.cursor = end;

        let (h, w) = self.size;
        let per_image = 3 * h * w;
        let mut inputs = vec![0.0; picks.len() * per_image];
        let mut targets = Vec::with_capacity(picks.len());
        let mut identifiers = Vec::with_capacity(picks.len());
        for (slot, &idx) in picks.iter().enumerate() {
            let source = &self.images[idx];
            let dst = &mut inputs[slot * per_image..(slot + 1) * per_image];
            match &self.augmentation {
                Some(cfg) => {
                    let draw = self.epoch * self.images.len() as u64 + idx as u64;
                    let augmented = augment(source, cfg, draw);
                    preprocess::write_into(&augmented.pixels, h, w, dst);
                }
                None => preprocess::write_into(&source.pixels, h, w, dst),
            }
            targets.push(source.label.encode());
            identifiers.push(source.identifier.clone());
        }
        Some(Batch {
            inputs: Tensor::new(&[picks.len(), 3, h, w], inputs).expect("batch shape"),
            targets: Tensor::new(&[picks.len()], targets).expect("target shape"),
            identifiers,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.order.len() - self.cursor).div_ceil(self.batch_size);
        (left, Some(left))
    }
}
