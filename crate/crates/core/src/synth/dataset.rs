use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{derive_seed, render_kernel, GeneratorSettings, GroundTruth};
use crate::data::{ClassCounts, SplitName};
use crate::error::{Error, Result};
use crate::label::KernelLabel;

pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// Requested images per split and class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DatasetCounts {
    pub train: ClassCounts,
    pub validate: ClassCounts,
    pub test: ClassCounts,
}

impl DatasetCounts {
    /// 500/500 train, 300/300 validate, 100/100 test.
    pub const STANDARD: Self = Self::from_array([500, 500, 300, 300, 100, 100]);

    /// `[train normal, train abnormal, validate normal, validate abnormal, test normal, test abnormal]`.
    pub const fn from_array(c: [usize; 6]) -> Self {
        Self {
            train: ClassCounts {
                normal: c[0],
                abnormal: c[1],
            },
            validate: ClassCounts {
                normal: c[2],
                abnormal: c[3],
            },
            test: ClassCounts {
                normal: c[4],
                abnormal: c[5],
            },
        }
    }

    pub fn get(&self, split: SplitName) -> ClassCounts {
        match split {
            SplitName::Train => self.train,
            SplitName::Validate => self.validate,
            SplitName::Test => self.test,
        }
    }

    pub fn total(&self) -> usize {
        SplitName::ALL.iter().map(|&s| self.get(s).total()).sum()
    }
}

/// One line of the manifest: a kernel image, or a scene with its objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub identifier: String,
    /// Path relative to the manifest, `/`-separated.
    pub path: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<KernelLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objects: Option<Vec<GroundTruth>>,
}

/// Write the standard `split/class/*.png` tree under `out_dir` and return one
/// record per image. Every class directory is created even when empty. Each
/// file depends only on `(seed, split, class, index)`.
pub fn generate_dataset(
    counts: &DatasetCounts,
    seed: u64,
    size: u32,
    settings: &GeneratorSettings,
    out_dir: &Path,
) -> Result<Vec<ManifestRecord>> {
    let mut records = Vec::with_capacity(counts.total());
    for (split_idx, split) in SplitName::ALL.into_iter().enumerate() {
        for (label_idx, label) in KernelLabel::ALL.into_iter().enumerate() {
            let rel_dir = format!("{}/{}", split.dir_name(), label.dir_name());
            let dir = out_dir.join(split.dir_name()).join(label.dir_name());
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            for index in 1..=counts.get(split).get(label) {
                let stream = ((split_idx as u64) << 40) | ((label_idx as u64) << 32) | index as u64;
                let file_seed = derive_seed(seed, stream);
                let (image, _) = render_kernel(label, file_seed, size, settings)?;
                let name = format!("{}_{}_{index:04}.png", split.dir_name(), label.dir_name());
                let path = dir.join(&name);
                image
                    .pixels
                    .save(&path)
                    .map_err(|e| Error::io(&path, std::io::Error::other(e)))?;
                records.push(ManifestRecord {
                    identifier: name.clone(),
                    path: format!("{rel_dir}/{name}"),
                    seed: file_seed,
                    split: Some(split),
                    label: Some(label),
                    objects: None,
                });
            }
        }
    }
    Ok(records)
}

/// One JSON object per line.
pub fn write_manifest(path: &Path, records: &[ManifestRecord]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in records {
        let line = serde_json::to_string(record).expect("manifest records serialize");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| {
            Error::invalid(format!(
                "{}:{}: bad manifest line: {e}",
                path.display(),
                n + 1
            ))
        })?;
        records.push(record);
    }
    Ok(records)
}
