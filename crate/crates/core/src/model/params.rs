use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Named tensors in a fixed order. Also used for gradients, which share the
/// keys and shapes of the parameters they belong to.
///
/// Every mutable access bumps an internal revision counter so a forward cache
/// taken before an update can be recognised as stale.
#[derive(Debug, Clone, Default)]
pub struct ModelParameters {
    tensors: IndexMap<String, Tensor>,
    revision: u64,
}

impl PartialEq for ModelParameters {
    fn eq(&self, other: &Self) -> bool {
        self.tensors == other.tensors
    }
}

impl ModelParameters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) {
        self.revision += 1;
        self.tensors.insert(name.into(), tensor);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub(crate) fn require(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::Usage(format!("missing parameter {name:?}")))
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.revision += 1;
        self.tensors.get_mut(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.revision += 1;
        self.tensors.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    /// Number of tensors.
    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total scalar count across all tensors.
    pub fn parameter_count(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            tensors: self
                .tensors
                .iter()
                .map(|(k, v)| (k.clone(), Tensor::zeros(v.shape())))
                .collect(),
            revision: 0,
        }
    }

    pub(crate) fn revision(&self) -> u64 {
        self.revision
    }

    /// Errors unless `other` has exactly the same names, order and shapes.
    pub fn check_compatible(&self, other: &ModelParameters) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::Usage(format!(
                "parameter sets differ in size: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        for ((ka, va), (kb, vb)) in self.iter().zip(other.iter()) {
            if ka != kb || va.shape() != vb.shape() {
                return Err(Error::Usage(format!(
                    "parameter mismatch: {ka:?} {:?} vs {kb:?} {:?}",
                    va.shape(),
                    vb.shape()
                )));
            }
        }
        Ok(())
    }
}
