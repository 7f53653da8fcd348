//! Tensor-factor structure of a finite-dimensional Hilbert space.
//!
//! Subsystem 0 is the most significant digit of the Kronecker index: for
//! dims `[d0, d1]` the basis vector `|a b>` sits at index `a * d1 + b`.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Default cap on the total dimension of any dense operator.
pub const DEFAULT_MAX_DIM: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultipartiteShape {
    dims: Vec<usize>,
    total: usize,
}

impl MultipartiteShape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(Error::InvalidShape("at least one subsystem is required"));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidShape("every local dimension must be at least 1"));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or(Error::Overflow("total dimension"))?;
        Ok(Self { dims, total })
    }

    /// A single subsystem of dimension `d`.
    pub fn single(d: usize) -> Result<Self> {
        Self::new(alloc::vec![d])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn dim(&self, subsystem: usize) -> Result<usize> {
        self.check_index(subsystem)?;
        Ok(self.dims[subsystem])
    }

    pub fn check_index(&self, subsystem: usize) -> Result<()> {
        if subsystem < self.dims.len() {
            Ok(())
        } else {
            Err(Error::SubsystemIndex { index: subsystem, parties: self.dims.len() })
        }
    }

    pub fn check_cap(&self, cap: usize) -> Result<()> {
        if self.total > cap {
            Err(Error::Capacity { dim: self.total, cap })
        } else {
            Ok(())
        }
    }

    /// Concatenation `self ⊗ other`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self::new(dims)
    }

    /// Stride of each subsystem in the flattened index.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = alloc::vec![1usize; self.dims.len()];
        for j in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * self.dims[j + 1];
        }
        strides
    }

    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = alloc::vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.dims).fold(0, |acc, (&x, &d)| acc * d + x)
    }
}

impl core::fmt::Display for MultipartiteShape {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        for (j, d) in self.dims.iter().enumerate() {
            if j > 0 {
                f.write_str("⊗")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_zero_dims() {
        assert!(MultipartiteShape::new(Vec::new()).is_err());
        assert!(MultipartiteShape::new(alloc::vec![2, 0]).is_err());
    }

    #[test]
    fn most_significant_first() {
        let s = MultipartiteShape::new(alloc::vec![2, 3]).unwrap();
        assert_eq!(s.total(), 6);
        assert_eq!(s.strides(), alloc::vec![3, 1]);
        assert_eq!(s.index(&[1, 2]), 5);
        assert_eq!(s.digits(4), alloc::vec![1, 1]);
        for i in 0..6 {
            assert_eq!(s.index(&s.digits(i)), i);
        }
    }

    #[test]
    fn index_checks() {
        let s = MultipartiteShape::new(alloc::vec![2, 2]).unwrap();
        assert!(s.check_index(1).is_ok());
        assert_eq!(s.check_index(2), Err(Error::SubsystemIndex { index: 2, parties: 2 }));
        assert!(s.check_cap(3).is_err());
    }
}
