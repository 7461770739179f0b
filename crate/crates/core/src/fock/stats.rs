//! Moments over ensembles.
//!
//! Second moments use the Gram form `⟨E_k E_l⟩ = Re Σ p ⟨E_k ψ|E_l ψ⟩` of the
//! truncated matrices, which keeps every covariance matrix positive
//! semidefinite on the truncated space.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::sparse::{realize, SparseMatrix};
use super::state::inner;
use super::StateEnsemble;
use crate::algebra::OperatorExpr;
use crate::{Error, Result};

/// First moments and Gram matrix of a list of realized operators.
#[derive(Debug, Clone)]
pub struct SecondMoments {
    pub means: Vec<Complex64>,
    pub gram: DMatrix<f64>,
}

impl SecondMoments {
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.means.len();
        let mut cov = DMatrix::from_fn(n, n, |i, j| {
            self.gram[(i, j)] - self.means[i].re * self.means[j].re
        });
        cov.fill_lower_triangle_with_upper_triangle();
        cov
    }
}

pub fn second_moments(rho: &StateEnsemble, mats: &[SparseMatrix]) -> Result<SecondMoments> {
    let n = mats.len();
    if mats.iter().any(|m| m.dim() != rho.space().dim()) {
        return Err(Error::IncompatibleSpace);
    }
    let mut means = alloc::vec![Complex64::new(0.0, 0.0); n];
    let mut gram = DMatrix::zeros(n, n);
    for (w, psi) in rho.members() {
        if *w == 0.0 {
            continue;
        }
        let amps = psi.amplitudes();
        let applied: Vec<Vec<Complex64>> = mats.iter().map(|m| m.matvec(amps)).collect();
        for i in 0..n {
            means[i] += inner(amps, &applied[i]) * *w;
            for j in i..n {
                gram[(i, j)] += w * inner(&applied[i], &applied[j]).re;
            }
        }
    }
    gram.fill_lower_triangle_with_upper_triangle();
    Ok(SecondMoments { means, gram })
}

fn check_space(rho: &StateEnsemble, e: &OperatorExpr) -> Result<()> {
    if rho.space().mode_count() != e.mode_count() {
        return Err(Error::IncompatibleSpace);
    }
    Ok(())
}

pub fn expectation_matrix(rho: &StateEnsemble, m: &SparseMatrix) -> Result<Complex64> {
    if m.dim() != rho.space().dim() {
        return Err(Error::IncompatibleSpace);
    }
    Ok(rho
        .members()
        .iter()
        .filter(|(w, _)| *w != 0.0)
        .map(|(w, psi)| inner(psi.amplitudes(), &m.matvec(psi.amplitudes())) * *w)
        .sum())
}

/// `Σ_k p_k ⟨ψ_k|E|ψ_k⟩`.
pub fn expectation(rho: &StateEnsemble, e: &OperatorExpr) -> Result<Complex64> {
    check_space(rho, e)?;
    expectation_matrix(rho, &realize(e, rho.space())?)
}

pub fn variance(rho: &StateEnsemble, e: &OperatorExpr) -> Result<f64> {
    Ok(covariance_matrix(rho, core::slice::from_ref(e))?[(0, 0)])
}

pub fn covariance_matrix(rho: &StateEnsemble, basis: &[OperatorExpr]) -> Result<DMatrix<f64>> {
    let mats = realize_hermitian(rho, basis)?;
    Ok(second_moments(rho, &mats)?.covariance())
}

pub(crate) fn realize_hermitian(
    rho: &StateEnsemble,
    ops: &[OperatorExpr],
) -> Result<Vec<SparseMatrix>> {
    ops.iter()
        .map(|e| {
            check_space(rho, e)?;
            if !e.is_hermitian() {
                return Err(Error::NotHermitian);
            }
            realize(e, rho.space())
        })
        .collect()
}

/// Covariance of the concatenated per-mode sets under the product of the
/// reduced states: same-mode blocks as under `ρ`, cross-mode blocks zero.
pub fn product_state_covariance(
    rho: &StateEnsemble,
    local_sets: &[Vec<OperatorExpr>],
) -> Result<DMatrix<f64>> {
    for (mode, set) in local_sets.iter().enumerate() {
        for e in set {
            if !e.is_local_to(mode) {
                return Err(Error::NonLocal { mode });
            }
        }
    }
    let all: Vec<OperatorExpr> = local_sets.iter().flatten().cloned().collect();
    let full = covariance_matrix(rho, &all)?;
    let mut out = DMatrix::zeros(all.len(), all.len());
    let mut start = 0;
    for set in local_sets {
        let len = set.len();
        out.view_mut((start, start), (len, len))
            .copy_from(&full.view((start, start), (len, len)));
        start += len;
    }
    Ok(out)
}
