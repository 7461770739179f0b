//! Quantum Fisher information, separability bounds and entanglement
//! classification.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::algebra::{
    local_generator_basis, symmetrize, OperatorExpr, Quadrature, QuadratureMonomial,
};
use crate::fock::{
    expectation, inner, product_state_covariance, realize_hermitian, second_moments, StateEnsemble,
};
use crate::linalg::sym_eigen;
use crate::{Error, Result};

/// Real quantum Fisher matrix of `ops` from the ensemble's spectral data,
/// including the contribution of the omitted zero-weight eigenstates.
pub fn qfi_matrix(rho: &StateEnsemble, ops: &[OperatorExpr]) -> Result<DMatrix<f64>> {
    let mats = realize_hermitian(rho, ops)?;
    let n = ops.len();
    let members = rho.members();
    let m = members.len();
    let p: Vec<f64> = members.iter().map(|(w, _)| *w).collect();
    // elements[i][(k, l)] = ⟨ψ_k|A_i|ψ_l⟩
    let mut elements = vec![DMatrix::<Complex64>::zeros(m, m); n];
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for (l, (_, psi_l)) in members.iter().enumerate() {
        let applied: Vec<Vec<Complex64>> =
            mats.iter().map(|a| a.matvec(psi_l.amplitudes())).collect();
        for (i, phi) in applied.iter().enumerate() {
            for (k, (_, psi_k)) in members.iter().enumerate() {
                elements[i][(k, l)] = inner(psi_k.amplitudes(), phi);
            }
            if p[l] != 0.0 {
                for j in i..n {
                    gram[(i, j)] += 4.0 * p[l] * inner(phi, &applied[j]).re;
                }
            }
        }
    }
    let mut weight = DMatrix::<f64>::zeros(m, m);
    for k in 0..m {
        for l in 0..m {
            let s = p[k] + p[l];
            let spectral = if s > 0.0 {
                2.0 * (p[k] - p[l]) * (p[k] - p[l]) / s
            } else {
                0.0
            };
            weight[(k, l)] = spectral - 4.0 * p[k];
        }
    }
    let mut q = gram;
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for k in 0..m {
                for l in 0..m {
                    let w = weight[(k, l)];
                    if w != 0.0 {
                        acc += w * (elements[i][(k, l)] * elements[j][(k, l)].conj()).re;
                    }
                }
            }
            q[(i, j)] += acc;
        }
    }
    q.fill_lower_triangle_with_upper_triangle();
    Ok(q)
}

/// `F_Q[ρ, A]`.
pub fn qfi(rho: &StateEnsemble, a: &OperatorExpr) -> Result<f64> {
    Ok(qfi_matrix(rho, core::slice::from_ref(a))?[(0, 0)])
}

/// Result of maximizing `cᵀ(Q − 4Γ_Π)c` over local generators.
#[derive(Debug, Clone)]
pub struct GeneratorChoice {
    pub coefficients: DVector<f64>,
    pub block_sizes: Vec<usize>,
    /// `Â_j` per mode.
    pub locals: Vec<OperatorExpr>,
    pub total: OperatorExpr,
    pub lambda_max: f64,
    /// Dimension of the eigenspace of `lambda_max`.
    pub degeneracy: usize,
    reference: DVector<f64>,
    local_sets: Vec<Vec<OperatorExpr>>,
}

impl GeneratorChoice {
    fn from_coefficients(
        coefficients: DVector<f64>,
        local_sets: &[Vec<OperatorExpr>],
        reference: DVector<f64>,
        lambda_max: f64,
        degeneracy: usize,
    ) -> Self {
        let mc = local_sets
            .iter()
            .flatten()
            .next()
            .map_or(0, |e| e.mode_count());
        let mut locals = Vec::with_capacity(local_sets.len());
        let mut offset = 0;
        for set in local_sets {
            let a = set
                .iter()
                .enumerate()
                .fold(OperatorExpr::zero(mc), |acc, (k, e)| {
                    acc + e.scale_real(coefficients[offset + k])
                });
            offset += set.len();
            locals.push(a);
        }
        let total = locals.iter().fold(OperatorExpr::zero(mc), |acc, a| acc + a);
        GeneratorChoice {
            coefficients,
            block_sizes: local_sets.iter().map(Vec::len).collect(),
            locals,
            total,
            lambda_max,
            degeneracy,
            reference,
            local_sets: local_sets.to_vec(),
        }
    }

    /// Coefficients of mode `mode`.
    pub fn block(&self, mode: usize) -> &[f64] {
        let start: usize = self.block_sizes[..mode].iter().sum();
        &self.coefficients.as_slice()[start..start + self.block_sizes[mode]]
    }

    /// Cosine similarity between the coefficients of `mode` and `target`.
    pub fn alignment(&self, mode: usize, target: &[f64]) -> f64 {
        let b = self.block(mode);
        let dot: f64 = b.iter().zip(target).map(|(x, y)| x * y).sum();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nt: f64 = target.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nb == 0.0 || nt == 0.0 {
            0.0
        } else {
            dot / (nb * nt)
        }
    }

    /// Rescaled so that the `x_j² + p_j²` content equals `N̂` (up to a
    /// constant), when that content is non-zero.
    pub fn number_normalized(&self) -> Option<GeneratorChoice> {
        let rr = self.reference.dot(&self.reference);
        let rc = self.reference.dot(&self.coefficients);
        if rr == 0.0 || rc.abs() < 1e-12 * self.coefficients.norm() {
            return None;
        }
        Some(Self::from_coefficients(
            &self.coefficients * (rr / (4.0 * rc)),
            &self.local_sets,
            self.reference.clone(),
            self.lambda_max,
            self.degeneracy,
        ))
    }
}

/// The per-mode sets `[x_j, p_j, x_j², p_j², (x_j p_j + p_j x_j)/2]`.
pub fn standard_local_sets(mode_count: usize) -> Vec<Vec<OperatorExpr>> {
    (0..mode_count)
        .map(|j| local_generator_basis(j, mode_count).expect("mode in range"))
        .collect()
}

fn is_square_quadrature(e: &OperatorExpr, mode: usize) -> bool {
    let mc = e.mode_count();
    [Quadrature::x(mode), Quadrature::p(mode)].iter().any(|&q| {
        let m = QuadratureMonomial::new(mc, [q, q]).expect("mode in range");
        symmetrize(&m).approx_eq(e, 1e-12)
    })
}

const DEGENERACY_TOL: f64 = 1e-9;

/// Largest eigenvalue of `Q − 4Γ_Π` over the concatenated local sets and the
/// generator built from its eigenvector. Within a degenerate top eigenspace
/// the vector closest to `Σ(x_j² + p_j²)` is chosen.
pub fn optimal_generator(
    rho: &StateEnsemble,
    local_sets: &[Vec<OperatorExpr>],
) -> Result<GeneratorChoice> {
    let all: Vec<OperatorExpr> = local_sets.iter().flatten().cloned().collect();
    if all.is_empty() {
        return Err(Error::InvalidArgument("no local operators given".into()));
    }
    let q = qfi_matrix(rho, &all)?;
    let gamma_pi = product_state_covariance(rho, local_sets)?;
    let w = q - gamma_pi * 4.0;
    let (values, vectors) = sym_eigen(&w);
    let lambda = values[0];
    let tol = DEGENERACY_TOL * lambda.abs().max(1.0);
    let degeneracy = values.iter().take_while(|&&v| lambda - v <= tol).count();

    let mut reference = DVector::zeros(all.len());
    let mut offset = 0;
    for (mode, set) in local_sets.iter().enumerate() {
        for (k, e) in set.iter().enumerate() {
            if is_square_quadrature(e, mode) {
                reference[offset + k] = 1.0;
            }
        }
        offset += set.len();
    }
    let top = vectors.columns(0, degeneracy);
    let projected = top * (top.transpose() * &reference);
    let mut c: DVector<f64> = if projected.norm() > 1e-12 {
        projected.normalize()
    } else {
        vectors.column(0).into_owned()
    };
    if c.dot(&reference) < 0.0 {
        c = -c;
    }
    Ok(GeneratorChoice::from_coefficients(
        c, local_sets, reference, lambda, degeneracy,
    ))
}

/// Separability bounds for a local generator `Σ Â_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSet {
    /// Classical bound `4⟨N̂⟩`; only defined when `Â_j = N̂_j`.
    pub b0: Option<f64>,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    /// `4[Var(Â_S) + Var(Â_{S̄})]` for each bipartition, keyed by the side
    /// containing mode 0.
    pub bipartitions: Vec<(Vec<usize>, f64)>,
}

pub fn bounds(rho: &StateEnsemble, locals: &[OperatorExpr]) -> Result<BoundSet> {
    let mc = rho.space().mode_count();
    if locals.len() != mc {
        return Err(Error::LengthMismatch {
            expected: mc,
            got: locals.len(),
        });
    }
    for (mode, a) in locals.iter().enumerate() {
        if !a.is_local_to(mode) {
            return Err(Error::NonLocal { mode });
        }
    }
    let mats = realize_hermitian(rho, locals)?;
    let cov = second_moments(rho, &mats)?.covariance();
    let var_of = |set: &[usize]| -> f64 {
        set.iter()
            .flat_map(|&i| set.iter().map(move |&j| (i, j)))
            .map(|(i, j)| cov[(i, j)])
            .sum()
    };
    let all: Vec<usize> = (0..mc).collect();
    let b1 = 4.0 * (0..mc).map(|j| cov[(j, j)]).sum::<f64>();
    let b3 = 4.0 * var_of(&all);
    let mut bipartitions = Vec::new();
    // subsets containing mode 0, excluding the full set
    for mask in 0..(1usize << (mc - 1)) {
        let side: Vec<usize> = core::iter::once(0)
            .chain((1..mc).filter(|j| mask & (1 << (j - 1)) != 0))
            .collect();
        if side.len() == mc {
            continue;
        }
        let rest: Vec<usize> = (0..mc).filter(|j| !side.contains(j)).collect();
        bipartitions.push((side.clone(), 4.0 * (var_of(&side) + var_of(&rest))));
    }
    let b2 = bipartitions.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    let is_number = locals
        .iter()
        .enumerate()
        .all(|(j, a)| a.approx_eq(&OperatorExpr::number(j, mc).expect("mode"), 1e-12));
    let b0 = if is_number {
        Some(4.0 * expectation(rho, &OperatorExpr::total_number(mc))?.re)
    } else {
        None
    };
    Ok(BoundSet {
        b0,
        b1,
        b2,
        b3,
        bipartitions,
    })
}

/// `N̂_j` for every mode, the generator for which `B0` is defined.
pub fn number_locals(mode_count: usize) -> Vec<OperatorExpr> {
    (0..mode_count)
        .map(|j| OperatorExpr::number(j, mode_count).expect("mode"))
        .collect()
}

/// Hillery–Zubairy quantity `min_i |⟨a₁a₂a₃⟩| − √(⟨N̂_i⟩⟨N̂_j N̂_k⟩)`.
pub fn hz_witness(rho: &StateEnsemble) -> Result<f64> {
    Ok(hz_terms(rho)?.into_iter().fold(f64::INFINITY, f64::min))
}

pub fn hz_terms(rho: &StateEnsemble) -> Result<[f64; 3]> {
    if rho.space().mode_count() != 3 {
        return Err(Error::ModeMismatch {
            left: 3,
            right: rho.space().mode_count(),
        });
    }
    let a = |j| OperatorExpr::annihilation(j, 3).expect("mode");
    let n = |j| OperatorExpr::number(j, 3).expect("mode");
    let triple = expectation(rho, &(a(0) * a(1) * a(2)))?.norm();
    let mut out = [0.0; 3];
    for (i, slot) in out.iter_mut().enumerate() {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let ni = expectation(rho, &n(i))?.re;
        let njk = expectation(rho, &(n(j) * n(k)))?.re;
        *slot = triple - (ni * njk).max(0.0).sqrt();
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Class {
    Undetected,
    MetrologicallyUseful,
    Entangled,
    FullyInseparable,
}

impl Class {
    pub fn as_str(self) -> &'static str {
        match self {
            Class::Undetected => "undetected",
            Class::MetrologicallyUseful => "metrologically-useful",
            Class::Entangled => "entangled",
            Class::FullyInseparable => "fully-inseparable",
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Each bound tested on its own: `value > B + margin`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassFlags {
    pub above_b0: Option<bool>,
    pub above_b1: bool,
    pub above_b2: bool,
}

pub fn class_flags(value: f64, bounds: &BoundSet, margin: f64) -> ClassFlags {
    ClassFlags {
        above_b0: bounds.b0.map(|b| value > b + margin),
        above_b1: value > bounds.b1 + margin,
        above_b2: value > bounds.b2 + margin,
    }
}

/// Strongest verdict certified by `value`.
pub fn classify(value: f64, bounds: &BoundSet, margin: f64) -> Class {
    let flags = class_flags(value, bounds, margin);
    if flags.above_b2 {
        Class::FullyInseparable
    } else if flags.above_b1 {
        Class::Entangled
    } else if flags.above_b0 == Some(true) {
        Class::MetrologicallyUseful
    } else {
        Class::Undetected
    }
}

/// Everything computed for one parameter point.
#[derive(Debug, Clone)]
pub struct WitnessReport {
    pub f_q: f64,
    pub chi2_inv: Vec<(String, f64)>,
    pub bounds: BoundSet,
    pub i_hz: f64,
    pub i_chi: f64,
    pub class: Class,
    pub flags: ClassFlags,
    pub cutoffs: Vec<usize>,
    pub discarded_mass: f64,
}
