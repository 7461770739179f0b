use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use num_traits::Zero;

use super::TruncatedSpace;
use crate::{Error, Result};

/// Tolerance on `‖ψ‖ = 1` accepted by [`PureState::new`].
pub const NORM_TOL: f64 = 1e-10;
/// Tolerance on `Σ p_k + discarded = 1`.
pub const WEIGHT_TOL: f64 = 1e-12;
/// Largest pairwise overlap accepted between ensemble members.
pub const OVERLAP_TOL: f64 = 1e-8;

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(Complex64::norm_sqr).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    space: TruncatedSpace,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Rejects vectors whose norm differs from one by more than [`NORM_TOL`].
    pub fn new(space: TruncatedSpace, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::LengthMismatch {
                expected: space.dim(),
                got: amplitudes.len(),
            });
        }
        let norm = norm_sqr(&amplitudes).sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(PureState { space, amplitudes })
    }

    /// Explicitly rescales to unit norm.
    pub fn normalized(space: TruncatedSpace, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = norm_sqr(&amplitudes).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized { norm });
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self::new(space, amplitudes)
    }

    pub(crate) fn from_parts_unchecked(space: TruncatedSpace, amplitudes: Vec<Complex64>) -> Self {
        PureState { space, amplitudes }
    }

    pub fn vacuum(space: TruncatedSpace) -> Self {
        let mut amplitudes = vec![Complex64::zero(); space.dim()];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        PureState { space, amplitudes }
    }

    pub fn fock(space: TruncatedSpace, occupations: &[usize]) -> Result<Self> {
        let k = space.index(occupations).ok_or_else(|| {
            Error::InvalidArgument(format!("{occupations:?} lies outside the truncation"))
        })?;
        let mut amplitudes = vec![Complex64::zero(); space.dim()];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Ok(PureState { space, amplitudes })
    }

    pub fn space(&self) -> &TruncatedSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amplitudes).sqrt()
    }

    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.space != other.space {
            return Err(Error::IncompatibleSpace);
        }
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }

    /// One `index re im` line per nonzero amplitude.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, a) in self.amplitudes.iter().enumerate() {
            if !a.is_zero() {
                let _ = writeln!(out, "{} {:.17e} {:.17e}", k, a.re, a.im);
            }
        }
        out
    }
}

/// Weighted list of orthonormal pure states, `ρ = Σ p_k |ψ_k⟩⟨ψ_k|`, with the
/// weight of the omitted spectrum carried separately.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEnsemble {
    members: Vec<(f64, PureState)>,
    discarded_mass: f64,
}

impl StateEnsemble {
    pub fn new(members: Vec<(f64, PureState)>, discarded_mass: f64) -> Result<Self> {
        let ens = Self::new_unchecked(members, discarded_mass)?;
        ens.check_orthonormal(OVERLAP_TOL)?;
        Ok(ens)
    }

    /// Validates weights and spaces but skips the quadratic orthonormality
    /// scan; for members orthonormal by construction.
    pub fn new_unchecked(members: Vec<(f64, PureState)>, discarded_mass: f64) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidWeights("ensemble has no members".into()));
        }
        if !(discarded_mass >= 0.0) {
            return Err(Error::InvalidWeights(format!(
                "discarded mass {discarded_mass} is negative"
            )));
        }
        let space = members[0].1.space();
        let mut total = discarded_mass;
        for (w, s) in &members {
            if !(*w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidWeights(format!(
                    "weight {w} is not a probability"
                )));
            }
            if s.space() != space {
                return Err(Error::IncompatibleSpace);
            }
            total += w;
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidWeights(format!(
                "weights and discarded mass sum to {total}"
            )));
        }
        Ok(StateEnsemble {
            members,
            discarded_mass,
        })
    }

    pub fn pure(state: PureState) -> Self {
        StateEnsemble {
            members: vec![(1.0, state)],
            discarded_mass: 0.0,
        }
    }

    pub fn check_orthonormal(&self, tol: f64) -> Result<()> {
        for (k, (_, a)) in self.members.iter().enumerate() {
            let n = a.norm();
            if (n - 1.0).abs() > tol.max(NORM_TOL) {
                return Err(Error::NotNormalized { norm: n });
            }
            for (l, (_, b)) in self.members.iter().enumerate().skip(k + 1) {
                let o = inner(a.amplitudes(), b.amplitudes()).norm();
                if o >= tol {
                    return Err(Error::NotOrthonormal(k, l, o));
                }
            }
        }
        Ok(())
    }

    pub fn members(&self) -> &[(f64, PureState)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.members.iter().map(|(w, _)| *w)
    }

    pub fn discarded_mass(&self) -> f64 {
        self.discarded_mass
    }

    pub fn space(&self) -> &TruncatedSpace {
        self.members[0].1.space()
    }

    pub(crate) fn map_members<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&PureState) -> Result<PureState>,
    {
        let members = self
            .members
            .iter()
            .map(|(w, s)| f(s).map(|t| (*w, t)))
            .collect::<Result<Vec<_>>>()?;
        Ok(StateEnsemble {
            members,
            discarded_mass: self.discarded_mass,
        })
    }

    /// Members separated by `# weight` comment lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# discarded_mass {:.17e}", self.discarded_mass);
        for (w, s) in &self.members {
            let _ = writeln!(out, "# weight {:.17e}", w);
            out.push_str(&s.to_text());
        }
        out
    }
}
