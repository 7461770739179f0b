use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Default upper bound on the total dimension of a truncated space.
pub const DEFAULT_MAX_DIM: usize = 1 << 22;

/// Product of per-mode Fock ladders `0..d_j`, flattened row-major with mode 1
/// slowest.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TruncatedSpace {
    cutoffs: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
}

impl TruncatedSpace {
    pub fn new(cutoffs: &[usize]) -> Result<Self> {
        Self::with_limit(cutoffs, DEFAULT_MAX_DIM)
    }

    pub fn with_limit(cutoffs: &[usize], max_dim: usize) -> Result<Self> {
        if cutoffs.is_empty() {
            return Err(Error::InvalidArgument(
                "a space needs at least one mode".into(),
            ));
        }
        if let Some(j) = cutoffs.iter().position(|&d| d == 0) {
            return Err(Error::InvalidArgument(format!(
                "cutoff of mode {} is zero",
                j + 1
            )));
        }
        let requested = cutoffs
            .iter()
            .try_fold(1u128, |acc, &d| acc.checked_mul(d as u128))
            .unwrap_or(u128::MAX);
        if requested > max_dim as u128 {
            return Err(Error::DimensionOverflow {
                requested,
                limit: max_dim,
            });
        }
        let mut strides = vec![1usize; cutoffs.len()];
        for j in (0..cutoffs.len().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * cutoffs[j + 1];
        }
        Ok(TruncatedSpace {
            cutoffs: cutoffs.to_vec(),
            strides,
            dim: requested as usize,
        })
    }

    pub fn uniform(mode_count: usize, cutoff: usize) -> Result<Self> {
        Self::new(&vec![cutoff; mode_count])
    }

    pub fn mode_count(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stride(&self, mode: usize) -> usize {
        self.strides[mode]
    }

    /// Flat index of an occupation tuple, `None` if outside the truncation.
    pub fn index(&self, occupations: &[usize]) -> Option<usize> {
        if occupations.len() != self.cutoffs.len() {
            return None;
        }
        let mut k = 0;
        for ((&n, &d), &s) in occupations.iter().zip(&self.cutoffs).zip(&self.strides) {
            if n >= d {
                return None;
            }
            k += n * s;
        }
        Some(k)
    }

    pub fn occupation(&self, index: usize, mode: usize) -> usize {
        (index / self.strides[mode]) % self.cutoffs[mode]
    }

    pub fn occupations(&self, index: usize) -> Vec<usize> {
        (0..self.mode_count())
            .map(|j| self.occupation(index, j))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_map_is_a_bijection() {
        let s = TruncatedSpace::new(&[2, 3, 4]).unwrap();
        assert_eq!(s.dim(), 24);
        for k in 0..s.dim() {
            assert_eq!(s.index(&s.occupations(k)), Some(k));
        }
        // mode 1 slowest
        assert_eq!(s.index(&[1, 0, 0]), Some(12));
        assert_eq!(s.index(&[0, 0, 1]), Some(1));
        assert_eq!(s.index(&[0, 3, 0]), None);
    }

    #[test]
    fn limits() {
        assert!(matches!(
            TruncatedSpace::with_limit(&[10, 10, 10], 999),
            Err(Error::DimensionOverflow {
                requested: 1000,
                ..
            })
        ));
        assert!(TruncatedSpace::new(&[]).is_err());
        assert!(TruncatedSpace::new(&[3, 0]).is_err());
        assert_eq!(TruncatedSpace::uniform(1, 1).unwrap().dim(), 1);
    }
}
