//! Polynomials in bosonic ladder operators.
//!
//! An [`OperatorExpr`] is a finite sum of complex coefficients times
//! normal-ordered monomials `Π_j (a_j†)^{r_j} (a_j)^{s_j}`. Every constructor
//! and arithmetic operation returns the canonical form: terms sorted by
//! monomial (lexicographic on mode, then creation exponent, then annihilation
//! exponent), no repeated monomials, and coefficients with magnitude below
//! [`COEFF_FLOOR`] dropped. Products are normal-ordered with the canonical
//! commutation relation `[a, a†] = 1`.
//!
//! Quadratures follow `x = a + a†`, `p = -i(a - a†)` so that `[x, p] = 2i`.

mod parse;
mod quadrature;

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::Zero;

pub use parse::parse_operator;
pub use quadrature::{
    coincidence_observable, local_generator_basis, moment_basis, symmetrize, Axis, MomentBasis,
    Quadrature, QuadratureMonomial, QuadraturePolynomial,
};

use crate::{Error, Result};

/// Coefficients with magnitude below this are dropped during canonicalization.
pub const COEFF_FLOOR: f64 = 1e-14;

/// Per-mode exponents `(r, s)` of `(a†)^r a^s`.
pub type Exponents = (u16, u16);

/// A normal-ordered monomial over all modes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<Exponents>);

impl Monomial {
    pub fn identity(mode_count: usize) -> Self {
        Monomial(vec![(0, 0); mode_count])
    }

    pub fn from_exponents(exps: Vec<Exponents>) -> Self {
        Monomial(exps)
    }

    pub fn exponents(&self) -> &[Exponents] {
        &self.0
    }

    pub fn mode_count(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&(r, s)| (r + s) as usize).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&(r, s)| r == 0 && s == 0)
    }

    /// Modes on which the monomial acts non-trivially.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &(r, s))| r != 0 || s != 0)
            .map(|(j, _)| j)
    }

    fn adjoint(&self) -> Self {
        Monomial(self.0.iter().map(|&(r, s)| (s, r)).collect())
    }
}

/// Normal-ordered product of two single-mode monomials:
/// `(a†^r1 a^s1)(a†^r2 a^s2) = Σ_k C(s1,k) C(r2,k) k! a†^{r1+r2-k} a^{s1+s2-k}`.
fn mode_product(lhs: Exponents, rhs: Exponents) -> Vec<(f64, Exponents)> {
    let (r1, s1) = lhs;
    let (r2, s2) = rhs;
    let kmax = s1.min(r2);
    let mut out = Vec::with_capacity(kmax as usize + 1);
    let mut coeff = 1.0;
    for k in 0..=kmax {
        if k > 0 {
            // C(s1,k)C(r2,k)k! from the k-1 value
            coeff *= f64::from(s1 - k + 1) * f64::from(r2 - k + 1) / f64::from(k);
        }
        out.push((coeff, (r1 + r2 - k, s1 + s2 - k)));
    }
    out
}

/// A canonical polynomial in ladder operators.
#[derive(Clone, PartialEq)]
pub struct OperatorExpr {
    mode_count: usize,
    terms: BTreeMap<Monomial, Complex64>,
}

impl OperatorExpr {
    pub fn zero(mode_count: usize) -> Self {
        OperatorExpr {
            mode_count,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(mode_count: usize) -> Self {
        Self::scalar(mode_count, Complex64::new(1.0, 0.0))
    }

    pub fn scalar(mode_count: usize, value: Complex64) -> Self {
        Self::from_terms(mode_count, [(Monomial::identity(mode_count), value)])
    }

    /// Builds the canonical form of an arbitrary list of terms.
    ///
    /// Panics if a monomial does not have `mode_count` entries.
    pub fn from_terms<I>(mode_count: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, Complex64)>,
    {
        let mut map: BTreeMap<Monomial, Complex64> = BTreeMap::new();
        for (m, c) in terms {
            assert_eq!(m.mode_count(), mode_count, "monomial has wrong mode count");
            *map.entry(m).or_insert_with(Complex64::zero) += c;
        }
        let mut expr = OperatorExpr {
            mode_count,
            terms: map,
        };
        expr.prune();
        expr
    }

    fn single(mode_count: usize, mode: usize, exps: Exponents) -> Result<Self> {
        if mode >= mode_count {
            return Err(Error::ModeOutOfRange {
                index: mode,
                mode_count,
            });
        }
        let mut m = Monomial::identity(mode_count);
        m.0[mode] = exps;
        Ok(Self::from_terms(
            mode_count,
            [(m, Complex64::new(1.0, 0.0))],
        ))
    }

    /// `a_j` (0-based mode index).
    pub fn annihilation(mode: usize, mode_count: usize) -> Result<Self> {
        Self::single(mode_count, mode, (0, 1))
    }

    /// `a_j†` (0-based mode index).
    pub fn creation(mode: usize, mode_count: usize) -> Result<Self> {
        Self::single(mode_count, mode, (1, 0))
    }

    /// `a_j† a_j`.
    pub fn number(mode: usize, mode_count: usize) -> Result<Self> {
        Self::single(mode_count, mode, (1, 1))
    }

    /// Total number operator `Σ_j a_j† a_j`.
    pub fn total_number(mode_count: usize) -> Self {
        (0..mode_count)
            .map(|j| Self::number(j, mode_count).expect("mode in range"))
            .fold(Self::zero(mode_count), |acc, n| acc + n)
    }

    /// `x_j = a_j + a_j†`.
    pub fn position(mode: usize, mode_count: usize) -> Result<Self> {
        Ok(Self::annihilation(mode, mode_count)? + Self::creation(mode, mode_count)?)
    }

    /// `p_j = -i (a_j - a_j†)`.
    pub fn momentum(mode: usize, mode_count: usize) -> Result<Self> {
        let diff = Self::annihilation(mode, mode_count)? - Self::creation(mode, mode_count)?;
        Ok(diff.scale(Complex64::new(0.0, -1.0)))
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, monomial: &Monomial) -> Complex64 {
        self.terms
            .get(monomial)
            .copied()
            .unwrap_or_else(Complex64::zero)
    }

    /// Coefficient of the identity monomial.
    pub fn constant_term(&self) -> Complex64 {
        self.coefficient(&Monomial::identity(self.mode_count))
    }

    /// Highest monomial degree, 0 for constants and the zero expression.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Modes touched by at least one term.
    pub fn support(&self) -> Vec<usize> {
        let mut used = vec![false; self.mode_count];
        for m in self.terms.keys() {
            for j in m.support() {
                used[j] = true;
            }
        }
        (0..self.mode_count).filter(|&j| used[j]).collect()
    }

    /// True when every term acts only on `mode` (constants allowed).
    pub fn is_local_to(&self, mode: usize) -> bool {
        self.support().iter().all(|&j| j == mode)
    }

    pub fn max_coefficient(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() >= COEFF_FLOOR);
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::from_terms(
            self.mode_count,
            self.terms.iter().map(|(m, c)| (m.clone(), c * factor)),
        )
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    fn check_modes(&self, other: &Self) -> Result<()> {
        if self.mode_count != other.mode_count {
            return Err(Error::ModeMismatch {
                left: self.mode_count,
                right: other.mode_count,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_modes(other)?;
        Ok(Self::from_terms(
            self.mode_count,
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|(m, c)| (m.clone(), *c)),
        ))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_modes(other)?;
        Ok(Self::from_terms(
            self.mode_count,
            self.terms
                .iter()
                .map(|(m, c)| (m.clone(), *c))
                .chain(other.terms.iter().map(|(m, c)| (m.clone(), -c))),
        ))
    }

    /// Operator product `self * other`, normal-ordered.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_modes(other)?;
        let mut acc: BTreeMap<Monomial, Complex64> = BTreeMap::new();
        for (ml, cl) in &self.terms {
            for (mr, cr) in &other.terms {
                let coeff = cl * cr;
                // expand mode by mode into a list of (weight, exponents)
                let mut partial: Vec<(f64, Vec<Exponents>)> =
                    vec![(1.0, Vec::with_capacity(self.mode_count))];
                for j in 0..self.mode_count {
                    let factors = mode_product(ml.0[j], mr.0[j]);
                    if factors.len() == 1 {
                        for (_, exps) in partial.iter_mut() {
                            exps.push(factors[0].1);
                        }
                        continue;
                    }
                    let mut next = Vec::with_capacity(partial.len() * factors.len());
                    for (w, exps) in &partial {
                        for &(fw, fe) in &factors {
                            let mut e = exps.clone();
                            e.push(fe);
                            next.push((w * fw, e));
                        }
                    }
                    partial = next;
                }
                for (w, exps) in partial {
                    *acc.entry(Monomial(exps)).or_insert_with(Complex64::zero) += coeff * w;
                }
            }
        }
        let mut out = OperatorExpr {
            mode_count: self.mode_count,
            terms: acc,
        };
        out.prune();
        Ok(out)
    }

    /// Hermitian conjugate.
    pub fn adjoint(&self) -> Self {
        Self::from_terms(
            self.mode_count,
            self.terms.iter().map(|(m, c)| (m.adjoint(), c.conj())),
        )
    }

    /// Coefficient-wise comparison with an absolute tolerance.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.mode_count != other.mode_count {
            return false;
        }
        let diff = self.try_sub(other).expect("mode counts checked");
        diff.terms.values().all(|c| c.norm() <= tol)
    }

    /// Hermiticity up to a tolerance relative to the largest coefficient.
    pub fn is_hermitian(&self) -> bool {
        let tol = 1e-12 * self.max_coefficient().max(1.0);
        self.approx_eq(&self.adjoint(), tol)
    }

    /// Integer power by repeated multiplication.
    pub fn pow(&self, exponent: u32) -> Self {
        let mut out = Self::identity(self.mode_count);
        for _ in 0..exponent {
            out = &out * self;
        }
        out
    }
}

/// Normal-ordered `AB - BA`.
pub fn commutator(a: &OperatorExpr, b: &OperatorExpr) -> Result<OperatorExpr> {
    let ab = a.try_mul(b)?;
    let ba = b.try_mul(a)?;
    ab.try_sub(&ba)
}

/// Hermitian conjugate of `a`.
pub fn adjoint(a: &OperatorExpr) -> OperatorExpr {
    a.adjoint()
}

macro_rules! binop {
    ($trait:ident, $method:ident, $try:ident) => {
        impl $trait<&OperatorExpr> for &OperatorExpr {
            type Output = OperatorExpr;
            fn $method(self, rhs: &OperatorExpr) -> OperatorExpr {
                self.$try(rhs).expect("operator mode counts differ")
            }
        }
        impl $trait<OperatorExpr> for OperatorExpr {
            type Output = OperatorExpr;
            fn $method(self, rhs: OperatorExpr) -> OperatorExpr {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&OperatorExpr> for OperatorExpr {
            type Output = OperatorExpr;
            fn $method(self, rhs: &OperatorExpr) -> OperatorExpr {
                (&self).$method(rhs)
            }
        }
    };
}

// Arithmetic operators panic on mode-count mismatch; use the `try_*` methods
// for fallible composition.
binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl Neg for OperatorExpr {
    type Output = OperatorExpr;
    fn neg(self) -> OperatorExpr {
        self.scale_real(-1.0)
    }
}

impl Neg for &OperatorExpr {
    type Output = OperatorExpr;
    fn neg(self) -> OperatorExpr {
        self.scale_real(-1.0)
    }
}

impl Mul<Complex64> for &OperatorExpr {
    type Output = OperatorExpr;
    fn mul(self, rhs: Complex64) -> OperatorExpr {
        self.scale(rhs)
    }
}

impl Mul<f64> for &OperatorExpr {
    type Output = OperatorExpr;
    fn mul(self, rhs: f64) -> OperatorExpr {
        self.scale_real(rhs)
    }
}

impl fmt::Debug for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OperatorExpr[{}]({})", self.mode_count, self)
    }
}

/// Serializes to the textual grammar accepted by [`parse_operator`], in
/// canonical ladder form.
impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (idx, (m, c)) in self.terms.iter().enumerate() {
            let factors = ladder_factors(m);
            parse::write_term(f, idx == 0, *c, &factors)?;
        }
        Ok(())
    }
}

fn ladder_factors(m: &Monomial) -> Vec<alloc::string::String> {
    use alloc::format;
    let mut out = Vec::new();
    for (j, &(r, s)) in m.0.iter().enumerate() {
        for _ in 0..r {
            out.push(format!("ad{}", j + 1));
        }
        for _ in 0..s {
            out.push(format!("a{}", j + 1));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn annihilation_times_creation_is_normal_ordered() {
        let a = OperatorExpr::annihilation(0, 1).unwrap();
        let ad = OperatorExpr::creation(0, 1).unwrap();
        let prod = &a * &ad;
        // a a† = a† a + 1
        let expected = OperatorExpr::number(0, 1).unwrap() + OperatorExpr::identity(1);
        assert_eq!(prod, expected);
    }

    #[test]
    fn x_times_p_matches_hand_expansion() {
        let x = OperatorExpr::position(0, 1).unwrap();
        let p = OperatorExpr::momentum(0, 1).unwrap();
        let got = &x * &p;
        // x p = -i a² + i a†² + i
        let expected = OperatorExpr::from_terms(
            1,
            [
                (Monomial(vec![(0, 2)]), c(0.0, -1.0)),
                (Monomial(vec![(2, 0)]), c(0.0, 1.0)),
                (Monomial(vec![(0, 0)]), c(0.0, 1.0)),
            ],
        );
        assert_eq!(got, expected);
    }

    #[test]
    fn x_p_commutator_is_2i() {
        let x = OperatorExpr::position(0, 1).unwrap();
        let p = OperatorExpr::momentum(0, 1).unwrap();
        let comm = commutator(&x, &p).unwrap();
        assert_eq!(comm, OperatorExpr::scalar(1, c(0.0, 2.0)));
    }

    #[test]
    fn adjoint_of_triple_creation() {
        let m = 3;
        let prod = (0..m)
            .map(|j| OperatorExpr::creation(j, m).unwrap())
            .fold(OperatorExpr::identity(m), |acc, e| acc * e)
            .scale(c(0.0, 1.0));
        let adj = prod.adjoint();
        let expected = (0..m)
            .map(|j| OperatorExpr::annihilation(j, m).unwrap())
            .fold(OperatorExpr::identity(m), |acc, e| acc * e)
            .scale(c(0.0, -1.0));
        assert_eq!(adj, expected);
        assert_eq!(adj.adjoint(), prod);
    }

    #[test]
    fn mode_mismatch_is_reported() {
        let a = OperatorExpr::identity(2);
        let b = OperatorExpr::identity(3);
        assert_eq!(
            commutator(&a, &b),
            Err(Error::ModeMismatch { left: 2, right: 3 })
        );
        assert!(OperatorExpr::annihilation(3, 3).is_err());
    }

    #[test]
    fn tiny_coefficients_are_dropped() {
        let a = OperatorExpr::annihilation(0, 1).unwrap();
        let e = a.scale_real(1e-15);
        assert!(e.is_zero());
        assert_eq!(format!("{}", e), "0");
    }

    #[test]
    fn sum_of_quadrature_squares_is_four_n_plus_six() {
        let m = 3;
        let mut sum = OperatorExpr::zero(m);
        for j in 0..m {
            let x = OperatorExpr::position(j, m).unwrap();
            let p = OperatorExpr::momentum(j, m).unwrap();
            sum = sum + &x * &x + &p * &p;
        }
        let expected = OperatorExpr::total_number(m).scale_real(4.0)
            + OperatorExpr::identity(m).scale_real(6.0);
        assert_eq!(sum, expected);
    }

    #[test]
    fn higher_power_normal_ordering() {
        // a² a†² = a†² a² + 4 a† a + 2
        let a = OperatorExpr::annihilation(0, 1).unwrap();
        let ad = OperatorExpr::creation(0, 1).unwrap();
        let got = a.pow(2) * ad.pow(2);
        let expected = OperatorExpr::from_terms(
            1,
            [
                (Monomial(vec![(2, 2)]), c(1.0, 0.0)),
                (Monomial(vec![(1, 1)]), c(4.0, 0.0)),
                (Monomial(vec![(0, 0)]), c(2.0, 0.0)),
            ],
        );
        assert_eq!(got, expected);
    }
}
