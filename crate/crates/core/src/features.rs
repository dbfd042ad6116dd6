//! Cost-feature vectors and the transformations applied to them.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A nonnegative, finite, non-empty feature vector for a state or a whole trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CostFeatures(Vec<f64>);

impl CostFeatures {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid!("cost features must have at least one dimension"));
        }
        if let Some((k, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(invalid!("cost feature {k} = {v} is not a finite nonnegative value"));
        }
        Ok(CostFeatures(values))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "feature dimension must be positive");
        CostFeatures(vec![0.0; dim])
    }

    /// Caller guarantees the invariants; only checked in debug builds.
    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        debug_assert!(values.iter().all(|v| v.is_finite() && *v >= 0.0), "{values:?}");
        CostFeatures(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> core::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// Element-wise accumulation. Panics on dimension mismatch.
    pub fn add_assign(&mut self, other: &CostFeatures) {
        assert_eq!(self.dim(), other.dim(), "feature dimension mismatch");
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    /// Element-wise sum of a sequence of per-state features (the trajectory total).
    pub fn total<'a, I>(steps: I) -> Result<CostFeatures>
    where
        I: IntoIterator<Item = &'a CostFeatures>,
    {
        let mut iter = steps.into_iter();
        let mut acc = iter
            .next()
            .ok_or_else(|| invalid!("cannot total an empty feature sequence"))?
            .clone();
        for f in iter {
            if f.dim() != acc.dim() {
                return Err(invalid!("feature dimension mismatch: {} vs {}", f.dim(), acc.dim()));
            }
            acc.add_assign(f);
        }
        Ok(acc)
    }

    /// True when every entry is strictly below the matching entry of `other`.
    pub fn strictly_dominates(&self, other: &CostFeatures) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a < b)
    }
}

impl Index<usize> for CostFeatures {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

impl TryFrom<Vec<f64>> for CostFeatures {
    type Error = Error;
    fn try_from(values: Vec<f64>) -> Result<Self> {
        CostFeatures::new(values)
    }
}

impl From<CostFeatures> for Vec<f64> {
    fn from(f: CostFeatures) -> Vec<f64> {
        f.0
    }
}

/// Row-major flattening of the outer product `f fᵀ` (length K²).
pub fn quadratic_expand(f: &CostFeatures) -> CostFeatures {
    let k = f.dim();
    let mut out = Vec::with_capacity(k * k);
    for a in f.iter() {
        for b in f.iter() {
            out.push(a * b);
        }
    }
    CostFeatures::from_vec_unchecked(out)
}

/// Check that two feature vectors share a dimension.
pub(crate) fn check_same_dim(a: &CostFeatures, b: &CostFeatures) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(invalid!("feature dimension mismatch: {} vs {}", a.dim(), b.dim()));
    }
    Ok(())
}
