#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use trispdc_core::algebra::{Monomial, OperatorExpr};
use trispdc_core::fock::{realize, PureState, StateEnsemble, TruncatedSpace};
use trispdc_core::Complex64;

/// Random monomial on `mode_count` modes with total degree `1..=max_degree`.
pub fn random_monomial<R: Rng>(rng: &mut R, mode_count: usize, max_degree: usize) -> Monomial {
    let degree = rng.gen_range(1..=max_degree);
    let mut exps = vec![(0u16, 0u16); mode_count];
    for _ in 0..degree {
        let j = rng.gen_range(0..mode_count);
        if rng.gen_bool(0.5) {
            exps[j].0 += 1;
        } else {
            exps[j].1 += 1;
        }
    }
    Monomial::from_exponents(exps)
}

pub fn random_expr<R: Rng>(
    rng: &mut R,
    mode_count: usize,
    max_degree: usize,
    terms: usize,
) -> OperatorExpr {
    OperatorExpr::from_terms(
        mode_count,
        (0..terms).map(|_| {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            (random_monomial(rng, mode_count, max_degree), c)
        }),
    )
}

pub fn random_hermitian<R: Rng>(
    rng: &mut R,
    mode_count: usize,
    max_degree: usize,
    terms: usize,
) -> OperatorExpr {
    let e = random_expr(rng, mode_count, max_degree, terms);
    (e.clone() + e.adjoint()).scale_real(0.5)
}

pub fn random_state<R: Rng>(rng: &mut R, space: &TruncatedSpace) -> PureState {
    let amps = (0..space.dim())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    PureState::normalized(space.clone(), amps).unwrap()
}

/// `Σ p_k |ψ_k⟩⟨ψ_k|` as a dense matrix.
pub fn density_matrix(rho: &StateEnsemble) -> DMatrix<Complex64> {
    let d = rho.space().dim();
    let mut m = DMatrix::zeros(d, d);
    for (w, psi) in rho.members() {
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        m += v.clone() * v.adjoint() * Complex64::new(*w, 0.0);
    }
    m
}

/// Full-spectrum QFI of a dense density matrix.
pub fn dense_qfi(rho: &DMatrix<Complex64>, a: &DMatrix<Complex64>) -> f64 {
    let eig = SymmetricEigen::new(rho.clone());
    let u = &eig.eigenvectors;
    let a_eig = u.adjoint() * a * u;
    let p = &eig.eigenvalues;
    let mut f = 0.0;
    for k in 0..p.len() {
        for l in 0..p.len() {
            let (pk, pl) = (p[k].max(0.0), p[l].max(0.0));
            if pk + pl > 1e-300 {
                f += 2.0 * (pk - pl).powi(2) / (pk + pl) * a_eig[(k, l)].norm_sqr();
            }
        }
    }
    f
}

pub fn dense(expr: &OperatorExpr, space: &TruncatedSpace) -> DMatrix<Complex64> {
    realize(expr, space).unwrap().to_dense()
}
