//! Text-producing helpers behind the `commute` and `bases` subcommands.

use std::fmt::Write as _;

use anyhow::{Context, Result};
use trispdc_core::algebra::{commutator, moment_basis, parse_operator, QuadraturePolynomial};

/// `[A, B]` in the quadrature rendering, optionally followed by the
/// normal-ordered ladder form.
pub fn commute(a: &str, b: &str, modes: usize, ladder: bool) -> Result<String> {
    let a = parse_operator(a, modes).context("first operand")?;
    let b = parse_operator(b, modes).context("second operand")?;
    let c = commutator(&a, &b)?;
    let mut out = QuadraturePolynomial::from_operator(&c).to_string();
    if ladder {
        write!(out, "\n{c}")?;
    }
    Ok(out)
}

/// Listings of the moment bases `M⁽ᵏ⁾` for the requested orders. Each listed
/// monomial stands for its symmetrized (Weyl-ordered) operator.
pub fn bases(orders: &[usize], modes: usize, list: bool) -> Result<String> {
    let mut out = String::new();
    for &k in orders {
        let basis = moment_basis(k, modes)?;
        writeln!(out, "order {k}: {} elements", basis.len())?;
        if list {
            for (i, m) in basis.monomials().iter().enumerate() {
                writeln!(out, "  {:>3}  {m}", i + 1)?;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_pair() {
        assert_eq!(commute("x1", "p1", 1, false).unwrap(), "2i");
        assert_eq!(commute("p1", "x1", 1, false).unwrap(), "-2i");
        assert_eq!(commute("x1", "x2", 2, false).unwrap(), "0");
    }

    #[test]
    fn ladder_form_appended() {
        let text = commute("a1", "ad1", 1, true).unwrap();
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn counts() {
        let text = bases(&[1, 2, 3], 3, false).unwrap();
        assert_eq!(
            text,
            "order 1: 6 elements\norder 2: 27 elements\norder 3: 83 elements\n"
        );
        assert!(bases(&[4], 3, false).is_err());
    }
}
