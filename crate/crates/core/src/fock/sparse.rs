use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use num_traits::Zero;

use super::TruncatedSpace;
use crate::algebra::OperatorExpr;
use crate::{Error, Result};

/// Compressed-row complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<Complex64>,
}

impl SparseMatrix {
    /// Builds from unsorted `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            cols.push(c);
            values.push(v);
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseMatrix {
            dim,
            row_ptr,
            cols,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&col) {
            Ok(k) => self.values[range.start + k],
            Err(_) => Complex64::zero(),
        }
    }

    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::zero(); self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = Complex64::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.cols[k]];
            }
            *out = acc;
        }
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut sums = vec![0.0; self.dim];
        for (c, v) in self.cols.iter().zip(&self.values) {
            sums[*c] += v.norm();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (0..self.dim).all(|r| {
            self.row(r)
                .all(|(c, v)| (v - self.get(c, r).conj()).norm() <= tol)
        })
    }
}

/// Matrix of `expr` in the truncated Fock basis with hard truncation.
pub fn realize(expr: &OperatorExpr, space: &TruncatedSpace) -> Result<SparseMatrix> {
    if expr.mode_count() != space.mode_count() {
        return Err(Error::ModeMismatch {
            left: expr.mode_count(),
            right: space.mode_count(),
        });
    }
    let terms: Vec<_> = expr.terms().collect();
    let mut triplets = Vec::with_capacity(space.dim() * terms.len());
    for col in 0..space.dim() {
        'term: for (mono, coeff) in &terms {
            let mut row = col;
            let mut amp_sqr = 1.0;
            for (j, &(r, s)) in mono.exponents().iter().enumerate() {
                if r == 0 && s == 0 {
                    continue;
                }
                let n = space.occupation(col, j);
                let (r, s) = (r as usize, s as usize);
                if s > n || n - s + r >= space.cutoffs()[j] {
                    continue 'term;
                }
                for k in 0..s {
                    amp_sqr *= (n - k) as f64;
                }
                for k in 1..=r {
                    amp_sqr *= (n - s + k) as f64;
                }
                row = row + (n - s + r) * space.stride(j) - n * space.stride(j);
            }
            triplets.push((row, col, *coeff * amp_sqr.sqrt()));
        }
    }
    Ok(SparseMatrix::from_triplets(space.dim(), triplets))
}
