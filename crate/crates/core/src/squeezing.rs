//! Nonlinear squeezing parameters `χ⁻² = |⟨[A, M]⟩|² / Var(M)`.
//!
//! Commutators are formed symbolically before realization, so the Fock
//! truncation never enters `⟨[A, M]⟩` through a matrix commutator.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::algebra::{coincidence_observable, commutator, parse_operator, OperatorExpr};
use crate::fock::{covariance_matrix, expectation_matrix, realize, StateEnsemble};
use crate::linalg::rank_one_rayleigh;
use crate::{Error, Result};

/// Variances below this are treated as a degenerate measurement.
pub const VARIANCE_FLOOR: f64 = 1e-14;
/// Relative spectral floor of the covariance pseudoinverse.
pub const PINV_FLOOR: f64 = 1e-10;

/// `(|⟨[A, M]⟩|², Var(M))`.
pub fn chi2_parts(rho: &StateEnsemble, a: &OperatorExpr, m: &OperatorExpr) -> Result<(f64, f64)> {
    if !a.is_hermitian() || !m.is_hermitian() {
        return Err(Error::NotHermitian);
    }
    let c = commutator(a, m)?;
    let num = expectation_matrix(rho, &realize(&c, rho.space())?)?.norm_sqr();
    let var = covariance_matrix(rho, core::slice::from_ref(m))?[(0, 0)];
    Ok((num, var))
}

pub fn chi2_inv(rho: &StateEnsemble, a: &OperatorExpr, m: &OperatorExpr) -> Result<f64> {
    let (num, var) = chi2_parts(rho, a, m)?;
    if var < VARIANCE_FLOOR {
        return Err(Error::DegenerateMeasurement { variance: var });
    }
    Ok(num / var)
}

#[derive(Debug, Clone)]
pub struct SqueezingResult {
    pub chi2_inv: f64,
    /// `Σ n_k M_k` with `‖n‖ = 1`; zero when there is no sensitivity.
    pub measurement: OperatorExpr,
    pub coefficients: Vec<f64>,
    /// `v_k = ⟨[A, M_k]⟩ / i`.
    pub sensitivity: Vec<f64>,
    /// Rank of the covariance matrix above the spectral floor.
    pub rank: usize,
    pub condition: f64,
    /// Every `v_k` vanished: no measurement in the basis is sensitive.
    pub zero_sensitivity: bool,
}

/// Maximizes `χ⁻²` over real combinations of `basis`. Since `⟨[A, M]⟩` is
/// linear in the coefficients, the optimum is `vᵀΓ⁺v` at `n ∝ Γ⁺v`.
pub fn optimize_measurement(
    rho: &StateEnsemble,
    a: &OperatorExpr,
    basis: &[OperatorExpr],
) -> Result<SqueezingResult> {
    if basis.is_empty() {
        return Err(Error::InvalidArgument("measurement basis is empty".into()));
    }
    if !a.is_hermitian() {
        return Err(Error::NotHermitian);
    }
    let mut v = Vec::with_capacity(basis.len());
    for m in basis {
        let c = commutator(a, m)?;
        v.push(expectation_matrix(rho, &realize(&c, rho.space())?)?.im);
    }
    let gamma = covariance_matrix(rho, basis)?;
    let mc = a.mode_count();
    let scale = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if scale < 1e-14 {
        return Ok(SqueezingResult {
            chi2_inv: 0.0,
            measurement: OperatorExpr::zero(mc),
            coefficients: vec![0.0; basis.len()],
            sensitivity: v,
            rank: 0,
            condition: f64::NAN,
            zero_sensitivity: true,
        });
    }
    let vv = DVector::from_vec(v.clone());
    let opt = rank_one_rayleigh(&gamma, &vv, PINV_FLOOR);
    let n = if opt.direction.norm() > 0.0 {
        opt.direction.normalize()
    } else {
        opt.direction
    };
    let measurement = basis
        .iter()
        .zip(n.iter())
        .fold(OperatorExpr::zero(mc), |acc, (m, c)| acc + m.scale_real(*c));
    Ok(SqueezingResult {
        chi2_inv: opt.value,
        measurement,
        coefficients: n.iter().copied().collect(),
        sensitivity: v,
        rank: opt.rank,
        condition: opt.condition,
        zero_sensitivity: false,
    })
}

/// The fixed measurements `M₁⁽¹⁻⁴⁾`, `M₂`, `M₃` and `M_opt`.
pub fn simplified_measurements() -> Vec<(&'static str, OperatorExpr)> {
    [
        ("M1", "x1*x2*x3"),
        ("M1b", "x1*p2*p3"),
        ("M1c", "p1*x2*p3"),
        ("M1d", "p1*p2*x3"),
        ("M2", "x1*x2*x3 - x1*p2*p3"),
        ("M3", "x1*x2*x3 - x1*p2*p3 - p1*x2*p3"),
        ("Mopt", "x1*x2*x3 - x1*p2*p3 - p1*x2*p3 - p1*p2*x3"),
    ]
    .into_iter()
    .map(|(k, t)| (k, parse_operator(t, 3).expect("fixed measurement")))
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplifiedParameters {
    pub m1: f64,
    pub m1_variants: [f64; 4],
    pub m2: f64,
    pub m3: f64,
    pub m_opt: f64,
    /// The four single-term variants agree to 1e-9 relative.
    pub variants_agree: bool,
}

impl SimplifiedParameters {
    pub fn labeled(&self) -> [(&'static str, f64); 4] {
        [
            ("M1", self.m1),
            ("M2", self.m2),
            ("M3", self.m3),
            ("Mopt", self.m_opt),
        ]
    }
}

pub fn simplified_parameters(
    rho: &StateEnsemble,
    a: &OperatorExpr,
) -> Result<SimplifiedParameters> {
    let values = simplified_measurements()
        .iter()
        .map(|(_, m)| chi2_inv(rho, a, m))
        .collect::<Result<Vec<f64>>>()?;
    let variants = [values[0], values[1], values[2], values[3]];
    let hi = variants.iter().copied().fold(f64::MIN, f64::max);
    let lo = variants.iter().copied().fold(f64::MAX, f64::min);
    Ok(SimplifiedParameters {
        m1: values[0],
        m1_variants: variants,
        m2: values[4],
        m3: values[5],
        m_opt: values[6],
        variants_agree: hi - lo <= 1e-9 * hi.max(1e-6),
    })
}

/// Best sum of `n_terms` coincidence observables on the angle grid.
#[derive(Debug, Clone)]
pub struct CoincidenceResult {
    pub angles: Vec<[f64; 3]>,
    pub chi2_inv: f64,
    pub measurement: OperatorExpr,
    /// False when the term combinations were too many to enumerate and a
    /// greedy search with coordinate ascent was used instead.
    pub exhaustive: bool,
    pub evaluated: u64,
}

const EXHAUSTIVE_LIMIT: u128 = 20_000_000;

/// Weights of `Q(θ)` on the eight products `q₁q₂q₃`, `q ∈ {x, p}`; bit `j`
/// of the index set means `x` on mode `j`.
fn product_weights(angles: &[f64; 3]) -> [f64; 8] {
    let mut w = [1.0; 8];
    for (s, slot) in w.iter_mut().enumerate() {
        for (j, th) in angles.iter().enumerate() {
            *slot *= if s & (1 << j) != 0 {
                th.sin()
            } else {
                th.cos()
            };
        }
    }
    w
}

fn product_operator(s: usize) -> OperatorExpr {
    let text: Vec<alloc::string::String> = (0..3)
        .map(|j| format!("{}{}", if s & (1 << j) != 0 { 'x' } else { 'p' }, j + 1))
        .collect();
    parse_operator(&text.join("*"), 3).expect("product")
}

struct Objective {
    v: DVector<f64>,
    gamma: DMatrix<f64>,
}

impl Objective {
    fn eval(&self, w: &DVector<f64>) -> Option<f64> {
        let den = w.dot(&(&self.gamma * w));
        (den >= VARIANCE_FLOOR).then(|| w.dot(&self.v).powi(2) / den)
    }
}

/// Enumerates multisets `i₁ ≤ … ≤ i_n` of candidates, accumulating
/// `w·v` and `wᵀΓw` incrementally.
struct Enumerator<'a> {
    cands: &'a [([f64; 3], DVector<f64>)],
    gw: &'a [DVector<f64>],
    wv: &'a [f64],
    best: &'a mut (f64, Vec<usize>),
    evaluated: &'a mut u64,
    chosen: Vec<usize>,
}

impl Enumerator<'_> {
    fn rec(&mut self, depth: usize, start: usize, sum: &DVector<f64>, quad: f64, lin: f64) {
        for i in start..self.cands.len() {
            let q = quad + 2.0 * sum.dot(&self.gw[i]) + self.cands[i].1.dot(&self.gw[i]);
            let l = lin + self.wv[i];
            self.chosen.push(i);
            if depth == 1 {
                *self.evaluated += 1;
                if q >= VARIANCE_FLOOR {
                    let val = l * l / q;
                    if self.best.0 == f64::NEG_INFINITY || val > self.best.0 * (1.0 + 1e-12) {
                        *self.best = (val, self.chosen.clone());
                    }
                }
            } else {
                let s = sum + &self.cands[i].1;
                self.rec(depth - 1, i, &s, q, l);
            }
            self.chosen.pop();
        }
    }
}

fn combinations(n: u128, k: u128) -> u128 {
    // C(n + k − 1, k)
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n + i) / (i + 1))
}

pub fn coincidence_search(
    rho: &StateEnsemble,
    a: &OperatorExpr,
    n_terms: usize,
    grid_step: f64,
) -> Result<CoincidenceResult> {
    if !(1..=4).contains(&n_terms) {
        return Err(Error::InvalidArgument(format!(
            "n_terms {n_terms} must be 1..=4"
        )));
    }
    let k = (2.0 * PI / grid_step).round();
    if !(grid_step > 0.0) || k < 1.0 || (k * grid_step - 2.0 * PI).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "grid step {grid_step} does not divide 2π"
        )));
    }
    if a.mode_count() != 3 || !a.is_hermitian() {
        return Err(Error::InvalidArgument(
            "generator must be a Hermitian three-mode operator".into(),
        ));
    }
    let products: Vec<OperatorExpr> = (0..8).map(product_operator).collect();
    let mut v = DVector::zeros(8);
    for (s, b) in products.iter().enumerate() {
        let c = commutator(a, b)?;
        v[s] = expectation_matrix(rho, &realize(&c, rho.space())?)?.im;
    }
    let obj = Objective {
        v,
        gamma: covariance_matrix(rho, &products)?,
    };

    // distinct weight vectors on the grid, with a representative angle triple
    let k = k as usize;
    let mut distinct: BTreeMap<[i64; 8], [f64; 3]> = BTreeMap::new();
    for idx in 0..k * k * k {
        let th = [
            (idx / (k * k)) as f64 * grid_step,
            ((idx / k) % k) as f64 * grid_step,
            (idx % k) as f64 * grid_step,
        ];
        let key = product_weights(&th).map(|x| (x * 1e10).round() as i64);
        distinct.entry(key).or_insert(th);
    }
    let cands: Vec<([f64; 3], DVector<f64>)> = distinct
        .values()
        .map(|th| (*th, DVector::from_row_slice(&product_weights(th))))
        .collect();
    let gw: Vec<DVector<f64>> = cands.iter().map(|(_, w)| &obj.gamma * w).collect();
    let wv: Vec<f64> = cands.iter().map(|(_, w)| w.dot(&obj.v)).collect();

    let u = cands.len();
    let mut best: (f64, Vec<usize>) = (f64::NEG_INFINITY, vec![0; n_terms]);
    let mut evaluated = 0u64;
    let exhaustive = combinations(u as u128, n_terms as u128) <= EXHAUSTIVE_LIMIT;
    if exhaustive {
        let mut search = Enumerator {
            cands: &cands,
            gw: &gw,
            wv: &wv,
            best: &mut best,
            evaluated: &mut evaluated,
            chosen: Vec::with_capacity(n_terms),
        };
        search.rec(n_terms, 0, &DVector::zeros(8), 0.0, 0.0);
    } else {
        let mut chosen: Vec<usize> = Vec::new();
        let score = |set: &[usize], evaluated: &mut u64| -> f64 {
            *evaluated += 1;
            let w = set
                .iter()
                .fold(DVector::zeros(8), |acc, &i| acc + &cands[i].1);
            obj.eval(&w).unwrap_or(f64::NEG_INFINITY)
        };
        for _ in 0..n_terms {
            let mut pick = (f64::NEG_INFINITY, 0);
            for i in 0..u {
                chosen.push(i);
                let s = score(&chosen, &mut evaluated);
                chosen.pop();
                if s > pick.0 {
                    pick = (s, i);
                }
            }
            chosen.push(pick.1);
        }
        let mut current = score(&chosen, &mut evaluated);
        for _ in 0..20 {
            let mut improved = false;
            for t in 0..n_terms {
                for i in 0..u {
                    let old = chosen[t];
                    chosen[t] = i;
                    let s = score(&chosen, &mut evaluated);
                    if s > current * (1.0 + 1e-12) {
                        current = s;
                        improved = true;
                    } else {
                        chosen[t] = old;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        best = (current, chosen);
    }

    let mut angles: Vec<[f64; 3]> = best.1.iter().map(|&i| cands[i].0).collect();
    let mut value = best.0.max(0.0);
    if best.0 == f64::NEG_INFINITY {
        value = 0.0;
    }
    // one level of local refinement at half the grid step
    let total = |angles: &[[f64; 3]]| {
        let w = angles.iter().fold(DVector::zeros(8), |acc, th| {
            acc + DVector::from_row_slice(&product_weights(th))
        });
        obj.eval(&w).unwrap_or(0.0)
    };
    let half = grid_step / 2.0;
    for _ in 0..50 {
        let mut improved = false;
        for t in 0..angles.len() {
            for j in 0..3 {
                for delta in [half, -half] {
                    let mut trial = angles.clone();
                    let th = (trial[t][j] + delta) % (2.0 * PI);
                    trial[t][j] = if th < 0.0 { th + 2.0 * PI } else { th };
                    evaluated += 1;
                    let s = total(&trial);
                    if s > value * (1.0 + 1e-9) + 1e-300 {
                        value = s;
                        angles = trial;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    let measurement = angles.iter().fold(OperatorExpr::zero(3), |acc, th| {
        acc + coincidence_observable(th)
    });
    Ok(CoincidenceResult {
        angles,
        chi2_inv: value,
        measurement,
        exhaustive,
        evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::moment_basis;
    use crate::dynamics::{evolve, SpdcParams};
    use crate::fock::{PureState, TruncatedSpace};
    use crate::witness::qfi;
    use core::f64::consts::FRAC_PI_2;

    fn vacuum(d: usize) -> StateEnsemble {
        StateEnsemble::pure(PureState::vacuum(TruncatedSpace::uniform(3, d).unwrap()))
    }

    fn spdc(gt: f64, d: usize) -> StateEnsemble {
        evolve(&vacuum(d), &SpdcParams::vacuum(gt), 1e-10)
            .unwrap()
            .0
    }

    fn number() -> OperatorExpr {
        OperatorExpr::total_number(3)
    }

    #[test]
    fn vacuum_has_no_signal() {
        let m = parse_operator("x1*x2*x3", 3).unwrap();
        assert_eq!(chi2_inv(&vacuum(3), &number(), &m).unwrap(), 0.0);
        let s = simplified_parameters(&vacuum(3), &number()).unwrap();
        assert_eq!(s.labeled().map(|(_, v)| v), [0.0; 4]);
        let c = coincidence_search(&vacuum(3), &number(), 1, FRAC_PI_2).unwrap();
        assert_eq!(c.chi2_inv, 0.0);
    }

    #[test]
    fn equation_five_term_by_term() {
        let rho = spdc(0.05, 8);
        let (num, var) =
            chi2_parts(&rho, &number(), &parse_operator("x1*x2*x3", 3).unwrap()).unwrap();
        let sym = parse_operator("p1*x2*x3 + x1*p2*x3 + x1*x2*p3", 3).unwrap();
        let direct = crate::fock::expectation(&rho, &sym).unwrap().norm_sqr();
        let dvar = crate::fock::variance(&rho, &parse_operator("x1*x2*x3", 3).unwrap()).unwrap();
        assert!((num - direct).abs() <= 1e-10 * direct);
        assert!((var - dvar).abs() <= 1e-10 * dvar);
    }

    #[test]
    fn degenerate_measurement() {
        let m = parse_operator("n1", 3).unwrap();
        assert!(matches!(
            chi2_inv(&vacuum(3), &number(), &m),
            Err(Error::DegenerateMeasurement { .. })
        ));
    }

    #[test]
    fn scaling_invariance_and_single_element_basis() {
        let rho = spdc(0.2, 8);
        let m = parse_operator("x1*x2*x3 - p1*p2*x3", 3).unwrap();
        let a = chi2_inv(&rho, &number(), &m).unwrap();
        let b = chi2_inv(&rho, &number(), &m.scale_real(-3.7)).unwrap();
        assert!((a - b).abs() <= 1e-12 * a);
        let opt = optimize_measurement(&rho, &number(), core::slice::from_ref(&m)).unwrap();
        assert!((opt.chi2_inv - a).abs() <= 1e-10 * a);
    }

    #[test]
    fn low_orders_are_blind_and_third_order_saturates() {
        let rho = spdc(0.2, 10);
        let f = qfi(&rho, &number()).unwrap();
        for order in [1, 2] {
            let b = moment_basis(order, 3).unwrap();
            let r = optimize_measurement(&rho, &number(), b.operators()).unwrap();
            assert!(r.chi2_inv < 1e-10 * f);
        }
        let b3 = moment_basis(3, 3).unwrap();
        let r = optimize_measurement(&rho, &number(), b3.operators()).unwrap();
        assert!(r.chi2_inv <= f + 1e-8);
        assert!(r.chi2_inv >= 0.98 * f, "{} {}", r.chi2_inv, f);
        let s = simplified_parameters(&rho, &number()).unwrap();
        assert!(s.variants_agree);
        assert!(s.m1 <= s.m2 && s.m2 <= s.m3 && s.m3 <= s.m_opt * (1.0 + 1e-9));
        assert!((s.m_opt / r.chi2_inv - 1.0).abs() < 0.02);
    }

    #[test]
    fn coincidence_grid() {
        let rho = spdc(0.1, 8);
        let one = coincidence_search(&rho, &number(), 1, FRAC_PI_2).unwrap();
        let m1 = chi2_inv(&rho, &number(), &parse_operator("x1*x2*x3", 3).unwrap()).unwrap();
        assert!((one.chi2_inv / m1 - 1.0).abs() < 1e-9);
        let variants: Vec<OperatorExpr> = simplified_measurements()[..4]
            .iter()
            .map(|(_, m)| m.clone())
            .collect();
        assert!(variants.iter().any(|v| {
            one.measurement.approx_eq(v, 1e-9) || one.measurement.approx_eq(&-v, 1e-9)
        }));
        let four = coincidence_search(&rho, &number(), 4, FRAC_PI_2).unwrap();
        assert!(four.chi2_inv >= one.chi2_inv * (1.0 - 1e-12));
        assert!(coincidence_search(&rho, &number(), 1, 1.0).is_err());
        assert!(coincidence_search(&rho, &number(), 0, FRAC_PI_2).is_err());
    }
}
