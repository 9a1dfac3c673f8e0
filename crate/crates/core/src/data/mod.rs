//! Dataset ingestion, preprocessing into model tensors, augmentation and batching.
//!
//! On disk a dataset is `root/{train,validate,test}/{normal,abnormal}/*.{png,jpg,jpeg}`.

mod augment;
mod batch;
mod preprocess;

pub use augment::{adjust_brightness, augment, AugmentationConfig};
pub use batch::{batch_iter, Batch, BatchIter};
pub use preprocess::preprocess;

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::KernelLabel;

pub const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// A decoded RGB raster with its class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub identifier: String,
    pub pixels: RgbImage,
    pub label: KernelLabel,
}

impl LabeledImage {
    pub fn new(
        identifier: impl Into<String>,
        pixels: RgbImage,
        label: KernelLabel,
    ) -> Result<Self> {
        let identifier = identifier.into();
        if pixels.width() == 0 || pixels.height() == 0 {
            return Err(Error::invalid(format!("image {identifier} is empty")));
        }
        Ok(Self {
            identifier,
            pixels,
            label,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Validate,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Validate, SplitName::Test];

    pub fn dir_name(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Validate => "validate",
            SplitName::Test => "test",
        }
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir_name())
    }
}

/// Per-class image counts of one split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub normal: usize,
    pub abnormal: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.normal + self.abnormal
    }

    pub fn of(images: &[LabeledImage]) -> Self {
        let normal = images
            .iter()
            .filter(|i| i.label == KernelLabel::Normal)
            .count();
        Self {
            normal,
            abnormal: images.len() - normal,
        }
    }

    pub fn get(&self, label: KernelLabel) -> usize {
        match label {
            KernelLabel::Normal => self.normal,
            KernelLabel::Abnormal => self.abnormal,
        }
    }
}

/// The train / validate / test partition.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<LabeledImage>,
    pub validate: Vec<LabeledImage>,
    pub test: Vec<LabeledImage>,
}

impl DatasetSplit {
    pub fn get(&self, split: SplitName) -> &[LabeledImage] {
        match split {
            SplitName::Train => &self.train,
            SplitName::Validate => &self.validate,
            SplitName::Test => &self.test,
        }
    }

    fn get_mut(&mut self, split: SplitName) -> &mut Vec<LabeledImage> {
        match split {
            SplitName::Train => &mut self.train,
            SplitName::Validate => &mut self.validate,
            SplitName::Test => &mut self.test,
        }
    }

    pub fn counts(&self, split: SplitName) -> ClassCounts {
        ClassCounts::of(self.get(split))
    }
}

/// Load every split. Files within a class directory are read in lexicographic
/// order of file name, normal class first.
pub fn load_dataset(root: &Path) -> Result<DatasetSplit> {
    let mut dataset = DatasetSplit::default();
    let mut seen: HashSet<String> = HashSet::new();
    for split in SplitName::ALL {
        for label in KernelLabel::ALL {
            let dir = root.join(split.dir_name()).join(label.dir_name());
            let files = list_images(&dir)?;
            if files.is_empty() {
                return Err(Error::Layout {
                    path: dir,
                    reason: "no images found".into(),
                });
            }
            for path in files {
                let identifier = path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                if !seen.insert(identifier.clone()) {
                    return Err(Error::Layout {
                        path,
                        reason: format!("identifier {identifier} appears more than once"),
                    });
                }
                let pixels = load_rgb(&path)?;
                dataset
                    .get_mut(split)
                    .push(LabeledImage::new(identifier, pixels, label)?);
            }
        }
    }
    Ok(dataset)
}

/// Decode an image file to 8-bit RGB.
pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    let reader = image::ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    let reader = reader
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let decoded = reader.decode().map_err(|e| Error::Ingestion {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let rgb = decoded.to_rgb8();
    if rgb.width() == 0 || rgb.height() == 0 {
        return Err(Error::Ingestion {
            path: path.to_path_buf(),
            reason: "image has no pixels".into(),
        });
    }
    Ok(rgb)
}

fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::Layout {
            path: dir.to_path_buf(),
            reason: "directory is missing".into(),
        });
    }
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_image = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if is_image && path.is_file() {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}
