use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigenpairs of a real symmetric matrix, eigenvalues in decreasing order.
pub(crate) fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |i, j| {
        eig.eigenvectors[(i, order[j])]
    });
    (values, vectors)
}

/// Closed-form maximum of `(n·v)² / nᵀΓn` over real `n`: the value `vᵀΓ⁺v`
/// and maximizer `Γ⁺v`, with eigenvalues below `rel_floor · λ_max` dropped.
#[derive(Debug, Clone)]
pub(crate) struct RayleighOptimum {
    pub value: f64,
    pub direction: DVector<f64>,
    pub rank: usize,
    pub condition: f64,
}

pub(crate) fn rank_one_rayleigh(
    gamma: &DMatrix<f64>,
    v: &DVector<f64>,
    rel_floor: f64,
) -> RayleighOptimum {
    let (values, vectors) = sym_eigen(gamma);
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let floor = rel_floor * top;
    let mut value = 0.0;
    let mut direction = DVector::zeros(v.len());
    let mut rank = 0;
    let mut smallest = top;
    for (k, &lambda) in values.iter().enumerate() {
        if !(lambda > floor) || lambda <= 0.0 {
            continue;
        }
        rank += 1;
        smallest = smallest.min(lambda);
        let u = vectors.column(k);
        let proj = u.dot(v);
        value += proj * proj / lambda;
        direction += u * (proj / lambda);
    }
    RayleighOptimum {
        value,
        direction,
        rank,
        condition: if rank > 0 {
            top / smallest
        } else {
            f64::INFINITY
        },
    }
}
