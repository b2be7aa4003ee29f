// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower clamp applied before logs and normal quantiles; the upper clamp is
/// `1 - P_CLAMP`.
pub const P_CLAMP: f64 = 1e-15;

/// Per-node p-values, each in `[0, 1]`, aligned with a graph's node indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PValues(Vec<f64>);

impl PValues {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfRange { label: i.to_string(), value: v });
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of entries that fall outside `[P_CLAMP, 1 - P_CLAMP]`.
    pub fn clamp_count(&self) -> usize {
        self.0.iter().filter(|&&p| clamp_p(p) != p).count()
    }

    pub(crate) fn from_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        Self(values)
    }
}

impl std::ops::Index<usize> for PValues {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[inline]
pub fn clamp_p(p: f64) -> f64 {
    p.clamp(P_CLAMP, 1.0 - P_CLAMP)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        assert!(PValues::new(vec![0.0, 1.0, 0.5]).is_ok());
        assert!(matches!(PValues::new(vec![0.2, 1.2]), Err(Error::OutOfRange { .. })));
        assert!(PValues::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn clamping() {
        let p = PValues::new(vec![0.0, 1.0, 0.3]).unwrap();
        assert_eq!(p.clamp_count(), 2);
        assert_eq!(clamp_p(0.0), P_CLAMP);
        assert_eq!(clamp_p(1.0), 1.0 - P_CLAMP);
    }
}
