//! Quadrature monomials and their Hermitian (Weyl-ordered) realizations.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;
use core::fmt;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use num_traits::Zero;

use super::parse::write_term;
use super::OperatorExpr;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axis {
    X,
    P,
}

/// A single quadrature symbol `x_j` or `p_j` (0-based mode).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quadrature {
    pub mode: usize,
    pub axis: Axis,
}

impl Quadrature {
    pub fn x(mode: usize) -> Self {
        Quadrature {
            mode,
            axis: Axis::X,
        }
    }

    pub fn p(mode: usize) -> Self {
        Quadrature {
            mode,
            axis: Axis::P,
        }
    }

    pub fn to_operator(self, mode_count: usize) -> Result<OperatorExpr> {
        match self.axis {
            Axis::X => OperatorExpr::position(self.mode, mode_count),
            Axis::P => OperatorExpr::momentum(self.mode, mode_count),
        }
    }

    fn name(self) -> String {
        match self.axis {
            Axis::X => format!("x{}", self.mode + 1),
            Axis::P => format!("p{}", self.mode + 1),
        }
    }
}

type DisplayKey = (Reverse<usize>, u16, Vec<Reverse<u16>>, Vec<(u16, u16)>);

/// A multiset of quadrature symbols, stored as per-mode `(#x, #p)` counts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QuadratureMonomial {
    counts: Vec<(u16, u16)>,
}

impl QuadratureMonomial {
    pub fn new<I: IntoIterator<Item = Quadrature>>(mode_count: usize, factors: I) -> Result<Self> {
        let mut counts = vec![(0u16, 0u16); mode_count];
        for q in factors {
            if q.mode >= mode_count {
                return Err(Error::ModeOutOfRange {
                    index: q.mode,
                    mode_count,
                });
            }
            match q.axis {
                Axis::X => counts[q.mode].0 += 1,
                Axis::P => counts[q.mode].1 += 1,
            }
        }
        Ok(QuadratureMonomial { counts })
    }

    pub fn mode_count(&self) -> usize {
        self.counts.len()
    }

    pub fn degree(&self) -> usize {
        self.counts.iter().map(|&(x, p)| (x + p) as usize).sum()
    }

    pub fn counts(&self) -> &[(u16, u16)] {
        &self.counts
    }

    /// Factors in mode order, `x` before `p` within a mode.
    pub fn factors(&self) -> Vec<Quadrature> {
        let mut out = Vec::with_capacity(self.degree());
        for (j, &(nx, np)) in self.counts.iter().enumerate() {
            out.extend(core::iter::repeat_n(Quadrature::x(j), nx as usize));
            out.extend(core::iter::repeat_n(Quadrature::p(j), np as usize));
        }
        out
    }

    /// Display order: higher degree first, then fewer `p` factors, then `p`
    /// on earlier modes first.
    fn display_key(&self) -> DisplayKey {
        let np: u16 = self.counts.iter().map(|c| c.1).sum();
        let order = self.counts.iter().map(|c| Reverse(c.1)).collect();
        (Reverse(self.degree()), np, order, self.counts.clone())
    }

    /// Textual factor list; same-mode mixed factors are written as their
    /// explicit ordering average so the text parses back to the symmetric
    /// operator.
    fn factor_strings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (j, &(nx, np)) in self.counts.iter().enumerate() {
            if nx == 0 || np == 0 {
                let name = if nx > 0 {
                    Quadrature::x(j).name()
                } else {
                    Quadrature::p(j).name()
                };
                for _ in 0..(nx + np) {
                    out.push(name.clone());
                }
                continue;
            }
            let orders = arrangements(nx as usize, np as usize);
            let mut s = String::from("(");
            for (k, order) in orders.iter().enumerate() {
                if k > 0 {
                    s.push_str(" + ");
                }
                let names: Vec<String> = order
                    .iter()
                    .map(|&is_x| {
                        if is_x {
                            Quadrature::x(j).name()
                        } else {
                            Quadrature::p(j).name()
                        }
                    })
                    .collect();
                s.push_str(&names.join("*"));
            }
            s.push_str(&format!(")/{}", orders.len()));
            out.push(s);
        }
        out
    }
}

impl fmt::Display for QuadratureMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.factors().into_iter().map(Quadrature::name).collect();
        if names.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&names.join("*"))
        }
    }
}

/// All distinct orderings of `nx` x-factors and `np` p-factors (`true` = x).
fn arrangements(nx: usize, np: usize) -> Vec<Vec<bool>> {
    fn rec(nx: usize, np: usize, prefix: &mut Vec<bool>, out: &mut Vec<Vec<bool>>) {
        if nx == 0 && np == 0 {
            out.push(prefix.clone());
            return;
        }
        if nx > 0 {
            prefix.push(true);
            rec(nx - 1, np, prefix, out);
            prefix.pop();
        }
        if np > 0 {
            prefix.push(false);
            rec(nx, np - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(nx, np, &mut Vec::new(), &mut out);
    out
}

/// Weyl-symmetric realization: average over all orderings of the factors,
/// normal-ordered. Factors on different modes commute, so only same-mode
/// `x`/`p` mixtures are actually averaged.
pub fn symmetrize(m: &QuadratureMonomial) -> OperatorExpr {
    let mc = m.mode_count();
    let mut out = OperatorExpr::identity(mc);
    for (j, &(nx, np)) in m.counts.iter().enumerate() {
        if nx == 0 && np == 0 {
            continue;
        }
        let x = OperatorExpr::position(j, mc).expect("mode in range");
        let p = OperatorExpr::momentum(j, mc).expect("mode in range");
        let orders = arrangements(nx as usize, np as usize);
        let mut local = OperatorExpr::zero(mc);
        for order in &orders {
            let prod = order.iter().fold(OperatorExpr::identity(mc), |acc, &is_x| {
                if is_x {
                    acc * &x
                } else {
                    acc * &p
                }
            });
            local = local + prod;
        }
        out = out * local.scale_real(1.0 / orders.len() as f64);
    }
    out
}

/// An ordered list of quadrature monomials with their symmetric realizations.
#[derive(Debug, Clone)]
pub struct MomentBasis {
    order: usize,
    monomials: Vec<QuadratureMonomial>,
    operators: Vec<OperatorExpr>,
}

impl MomentBasis {
    pub fn from_monomials(order: usize, monomials: Vec<QuadratureMonomial>) -> Self {
        let operators = monomials.iter().map(symmetrize).collect();
        MomentBasis {
            order,
            monomials,
            operators,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[QuadratureMonomial] {
        &self.monomials
    }

    pub fn operators(&self) -> &[OperatorExpr] {
        &self.operators
    }
}

/// All quadrature monomials of total degree `1..=order` on `mode_count`
/// modes, deduplicated as multisets. For three modes the sizes are 6, 27
/// and 83.
pub fn moment_basis(order: usize, mode_count: usize) -> Result<MomentBasis> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidArgument(format!(
            "moment basis order must be 1, 2 or 3 (got {order})"
        )));
    }
    let symbols: Vec<Quadrature> = (0..mode_count)
        .flat_map(|j| [Quadrature::x(j), Quadrature::p(j)])
        .collect();
    let mut monomials = Vec::new();
    for degree in 1..=order {
        // combinations with replacement, non-decreasing symbol indices
        let mut idx = vec![0usize; degree];
        loop {
            let factors = idx.iter().map(|&k| symbols[k]);
            monomials.push(QuadratureMonomial::new(mode_count, factors)?);
            let mut pos = degree;
            while pos > 0 && idx[pos - 1] == symbols.len() - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            idx[pos - 1] += 1;
            let v = idx[pos - 1];
            for slot in idx.iter_mut().skip(pos) {
                *slot = v;
            }
        }
    }
    Ok(MomentBasis::from_monomials(order, monomials))
}

/// `[x_j, p_j, x_j², p_j², (x_j p_j + p_j x_j)/2]` for 0-based `mode`.
pub fn local_generator_basis(mode: usize, mode_count: usize) -> Result<Vec<OperatorExpr>> {
    let x = Quadrature::x(mode);
    let p = Quadrature::p(mode);
    let sets: [&[Quadrature]; 5] = [&[x], &[p], &[x, x], &[p, p], &[x, p]];
    sets.iter()
        .map(|f| QuadratureMonomial::new(mode_count, f.iter().copied()).map(|m| symmetrize(&m)))
        .collect()
}

/// `Π_j [x_j sin θ_j + p_j cos θ_j]`, one angle per mode.
pub fn coincidence_observable(angles: &[f64]) -> OperatorExpr {
    let mc = angles.len();
    angles
        .iter()
        .enumerate()
        .fold(OperatorExpr::identity(mc), |acc, (j, &theta)| {
            let x = OperatorExpr::position(j, mc).expect("mode in range");
            let p = OperatorExpr::momentum(j, mc).expect("mode in range");
            acc * (x.scale_real(theta.sin()) + p.scale_real(theta.cos()))
        })
}

/// An operator written as a combination of Weyl-ordered quadrature
/// monomials. The decomposition is unique.
#[derive(Debug, Clone)]
pub struct QuadraturePolynomial {
    mode_count: usize,
    terms: Vec<(QuadratureMonomial, Complex64)>,
}

/// Commutative expansion of `((x - ip)/2)^r ((x + ip)/2)^s`; entry `k` is the
/// coefficient of `x^{r+s-k} p^k`.
fn commutative_expansion(r: u16, s: u16) -> Vec<Complex64> {
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    let factors = core::iter::repeat_n(Complex64::new(0.0, -0.5), r as usize)
        .chain(core::iter::repeat_n(Complex64::new(0.0, 0.5), s as usize));
    for p_coeff in factors {
        let mut next = vec![Complex64::zero(); poly.len() + 1];
        for (k, c) in poly.iter().enumerate() {
            next[k] += c * 0.5;
            next[k + 1] += c * p_coeff;
        }
        poly = next;
    }
    poly
}

impl QuadraturePolynomial {
    pub fn from_operator(expr: &OperatorExpr) -> Self {
        let mc = expr.mode_count();
        let mut rest = expr.clone();
        let mut acc: BTreeMap<QuadratureMonomial, Complex64> = BTreeMap::new();
        while !rest.is_zero() {
            let top = rest.degree();
            let mut level: BTreeMap<QuadratureMonomial, Complex64> = BTreeMap::new();
            for (mono, coeff) in rest.terms().filter(|(m, _)| m.degree() == top) {
                let mut partial: Vec<(Complex64, Vec<(u16, u16)>)> =
                    vec![(*coeff, Vec::with_capacity(mc))];
                for &(r, s) in mono.exponents() {
                    let exp = commutative_expansion(r, s);
                    let n = r + s;
                    let mut next = Vec::new();
                    for (w, counts) in &partial {
                        for (k, c) in exp.iter().enumerate() {
                            if c.is_zero() {
                                continue;
                            }
                            let mut cs = counts.clone();
                            cs.push((n - k as u16, k as u16));
                            next.push((w * c, cs));
                        }
                    }
                    partial = next;
                }
                for (w, counts) in partial {
                    *level
                        .entry(QuadratureMonomial { counts })
                        .or_insert_with(Complex64::zero) += w;
                }
            }
            let mut subtract = OperatorExpr::zero(mc);
            for (m, c) in &level {
                if c.norm() < super::COEFF_FLOOR {
                    continue;
                }
                subtract = subtract + symmetrize(m).scale(*c);
                *acc.entry(m.clone()).or_insert_with(Complex64::zero) += c;
            }
            let remaining = rest - subtract;
            // anything left at degree >= top is rounding residue
            rest = OperatorExpr::from_terms(
                mc,
                remaining
                    .terms()
                    .filter(|(m, _)| m.degree() < top)
                    .map(|(m, c)| (m.clone(), *c)),
            );
            if top == 0 {
                break;
            }
        }
        let mut terms: Vec<(QuadratureMonomial, Complex64)> = acc
            .into_iter()
            .filter(|(_, c)| c.norm() >= super::COEFF_FLOOR)
            .collect();
        terms.sort_by_key(|(m, _)| m.display_key());
        QuadraturePolynomial {
            mode_count: mc,
            terms,
        }
    }

    pub fn terms(&self) -> &[(QuadratureMonomial, Complex64)] {
        &self.terms
    }

    pub fn to_operator(&self) -> OperatorExpr {
        self.terms
            .iter()
            .fold(OperatorExpr::zero(self.mode_count), |acc, (m, c)| {
                acc + symmetrize(m).scale(*c)
            })
    }
}

/// Prints e.g. `i*(p1*x2*x3 + 2*x1*p2*x3)`; a common factor `i` is pulled
/// out when every coefficient is imaginary.
impl fmt::Display for QuadraturePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let scale = self.terms.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max);
        let clean = |c: Complex64| {
            let t = 1e-12 * scale;
            Complex64::new(
                if c.re.abs() < t { 0.0 } else { c.re },
                if c.im.abs() < t { 0.0 } else { c.im },
            )
        };
        let all_imag = self.terms.iter().all(|(_, c)| clean(*c).re == 0.0);
        let write_sum = |f: &mut fmt::Formatter<'_>, rotate: bool| -> fmt::Result {
            for (k, (m, c)) in self.terms.iter().enumerate() {
                let c = clean(*c);
                let c = if rotate { Complex64::new(c.im, 0.0) } else { c };
                write_term(f, k == 0, c, &m.factor_strings())?;
            }
            Ok(())
        };
        if all_imag && self.terms.len() > 1 {
            f.write_str("i*(")?;
            write_sum(f, true)?;
            f.write_str(")")
        } else {
            write_sum(f, false)
        }
    }
}
