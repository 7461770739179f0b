//! Trilinear SPDC generator, thermal initial ensembles and unitary
//! propagation in a truncated space.
//!
//! The pump is treated as an undepleted classical amplitude, so with
//! `g = α_p κ` the generator is
//! `H/ħ = i g (e^{iφ} a₁†a₂†a₃† − e^{−iφ} a₁a₂a₃)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use num_traits::Zero;

use crate::algebra::{Monomial, OperatorExpr};
use crate::fock::{
    inner, norm_sqr, realize, second_moments, PureState, SparseMatrix, StateEnsemble,
    TruncatedSpace, OVERLAP_TOL,
};
use crate::{Error, Result};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Mode frequencies of the reference device, rad/s.
pub const DEVICE_OMEGAS: [f64; 3] = [2.0 * PI * 4.2e9, 2.0 * PI * 6.1e9, 2.0 * PI * 7.5e9];
/// Operating temperature of the reference device, K.
pub const DEVICE_TEMPERATURE: f64 = 0.025;
/// Pump phase used unless overridden; makes the generator
/// `g (a₁†a₂†a₃† + a₁a₂a₃)`.
pub const DEFAULT_PUMP_PHASE: f64 = -PI / 2.0;

/// How the initial temperature is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Thermal {
    /// Physical temperature in kelvin; `0` means the vacuum.
    Temperature(f64),
    /// `ħω₁/(k_B T)` directly; `f64::INFINITY` means the vacuum.
    BetaOmega1(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdcParams {
    /// Effective coupling `g = α_p κ`.
    pub coupling: f64,
    pub time: f64,
    pub omegas: [f64; 3],
    pub thermal: Thermal,
    pub pump_phase: f64,
}

impl SpdcParams {
    /// Vacuum input with `g = 1` and `t = gt`.
    pub fn vacuum(gt: f64) -> Self {
        SpdcParams {
            coupling: 1.0,
            time: gt,
            omegas: DEVICE_OMEGAS,
            thermal: Thermal::Temperature(0.0),
            pump_phase: DEFAULT_PUMP_PHASE,
        }
    }

    pub fn with_thermal(mut self, thermal: Thermal) -> Self {
        self.thermal = thermal;
        self
    }

    pub fn with_pump_phase(mut self, phase: f64) -> Self {
        self.pump_phase = phase;
        self
    }

    pub fn with_omegas(mut self, omegas: [f64; 3]) -> Self {
        self.omegas = omegas;
        self
    }

    pub fn gt(&self) -> f64 {
        self.coupling * self.time
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "coupling {} must be >= 0",
                self.coupling
            )));
        }
        if !(self.time >= 0.0 && self.time.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "time {} must be >= 0",
                self.time
            )));
        }
        if !self.pump_phase.is_finite() {
            return Err(Error::InvalidArgument("pump phase must be finite".into()));
        }
        self.beta_omegas().map(|_| ())
    }

    /// `βω_j` per mode; infinite for the vacuum.
    pub fn beta_omegas(&self) -> Result<[f64; 3]> {
        match self.thermal {
            Thermal::Temperature(t) if t < 0.0 || t.is_nan() => Err(Error::InvalidArgument(
                format!("temperature {t} K is negative"),
            )),
            Thermal::Temperature(t) if t <= 0.0 => Ok([f64::INFINITY; 3]),
            Thermal::Temperature(t) => {
                self.check_omegas()?;
                Ok(self.omegas.map(|w| HBAR * w / (BOLTZMANN * t)))
            }
            Thermal::BetaOmega1(b) if !(b > 0.0) => Err(Error::InvalidArgument(format!(
                "beta*omega_1 = {b} must be positive"
            ))),
            Thermal::BetaOmega1(b) => {
                self.check_omegas()?;
                Ok(self.omegas.map(|w| b * w / self.omegas[0]))
            }
        }
    }

    fn check_omegas(&self) -> Result<()> {
        if self.omegas.iter().all(|w| *w > 0.0 && w.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(
                "mode frequencies must be positive".into(),
            ))
        }
    }
}

/// Per-mode thermal occupations and the ensemble weight floor.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalSpec {
    pub beta_omegas: [f64; 3],
    pub occupations: [f64; 3],
    pub weight_floor: f64,
}

impl ThermalSpec {
    pub fn from_params(params: &SpdcParams, weight_floor: f64) -> Result<Self> {
        if !(weight_floor > 0.0 && weight_floor < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "weight floor {weight_floor} must lie in (0, 1)"
            )));
        }
        let beta_omegas = params.beta_omegas()?;
        Ok(ThermalSpec {
            beta_omegas,
            occupations: beta_omegas.map(mean_occupation),
            weight_floor,
        })
    }
}

/// `1/(e^{βω} − 1)`.
pub fn mean_occupation(beta_omega: f64) -> f64 {
    1.0 / beta_omega.exp_m1()
}

fn mode_weight(beta_omega: f64, n: usize) -> f64 {
    if beta_omega.is_infinite() {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    -(-beta_omega).exp_m1() * (-beta_omega * n as f64).exp()
}

/// `i g (a₁†a₂†a₃† − a₁a₂a₃)`.
pub fn spdc_generator(g: f64) -> OperatorExpr {
    spdc_generator_with_phase(g, 0.0)
}

/// `i g (e^{iφ} a₁†a₂†a₃† − e^{−iφ} a₁a₂a₃)`.
pub fn spdc_generator_with_phase(g: f64, phase: f64) -> OperatorExpr {
    let up = Complex64::new(0.0, g) * Complex64::from_polar(1.0, phase);
    let down = -Complex64::new(0.0, g) * Complex64::from_polar(1.0, -phase);
    OperatorExpr::from_terms(
        3,
        [
            (Monomial::from_exponents(vec![(1, 0); 3]), up),
            (Monomial::from_exponents(vec![(0, 1); 3]), down),
        ],
    )
}

/// Fock-diagonal thermal state restricted to `space`, keeping product states
/// with weight at least `weight_floor · p_max`. Members are sorted by
/// decreasing weight, ties by flat index.
pub fn thermal_ensemble(
    params: &SpdcParams,
    space: &TruncatedSpace,
    weight_floor: f64,
) -> Result<StateEnsemble> {
    let spec = ThermalSpec::from_params(params, weight_floor)?;
    if space.mode_count() != 3 {
        return Err(Error::ModeMismatch {
            left: 3,
            right: space.mode_count(),
        });
    }
    let p_max: f64 = spec
        .beta_omegas
        .iter()
        .map(|&b| mode_weight(b, 0))
        .product();
    let mut kept: Vec<(f64, usize)> = (0..space.dim())
        .filter_map(|k| {
            let p: f64 = (0..3)
                .map(|j| mode_weight(spec.beta_omegas[j], space.occupation(k, j)))
                .product();
            (p >= weight_floor * p_max).then_some((p, k))
        })
        .collect();
    kept.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let total: f64 = kept.iter().map(|(p, _)| p).sum();
    let discarded = (1.0 - total).max(0.0);
    let members = kept
        .into_iter()
        .map(|(p, k)| {
            let mut amps = vec![Complex64::zero(); space.dim()];
            amps[k] = Complex64::new(1.0, 0.0);
            (
                p,
                PureState::new(space.clone(), amps).expect("basis vector"),
            )
        })
        .collect();
    StateEnsemble::new_unchecked(members, discarded)
}

/// Diagnostics from a propagation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvolutionReport {
    pub steps: usize,
    pub max_taylor_terms: usize,
    pub max_norm_drift: f64,
    /// Largest pairwise member overlap, when the ensemble was small enough to
    /// scan.
    pub max_overlap: Option<f64>,
    pub retries: usize,
}

const STEP_THETA: f64 = 0.5;
const MAX_TAYLOR_TERMS: usize = 60;
const MAX_RETRIES: usize = 6;
const OVERLAP_SCAN_LIMIT: usize = 64;

/// `exp(−i h H) ψ` by a truncated Taylor series; `None` if the series did not
/// settle within the term budget.
fn taylor_step(
    h: &SparseMatrix,
    dt: f64,
    psi: &mut [Complex64],
    term: &mut [Complex64],
    scratch: &mut [Complex64],
) -> Option<usize> {
    term.copy_from_slice(psi);
    let factor = Complex64::new(0.0, -dt);
    for k in 1..=MAX_TAYLOR_TERMS {
        h.matvec_into(term, scratch);
        let c = factor / k as f64;
        let mut term_norm = 0.0;
        for (t, s) in term.iter_mut().zip(scratch.iter()) {
            *t = s * c;
            term_norm += t.norm_sqr();
        }
        for (p, t) in psi.iter_mut().zip(term.iter()) {
            *p += t;
        }
        if term_norm <= 1e-34 * norm_sqr(psi) {
            return Some(k);
        }
    }
    None
}

/// Propagates every member by `exp(−i G t)`.
pub fn propagate(
    rho0: &StateEnsemble,
    generator: &OperatorExpr,
    time: f64,
    tol: f64,
) -> Result<(StateEnsemble, EvolutionReport)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance {tol} must be positive"
        )));
    }
    if !generator.is_hermitian() {
        return Err(Error::NotHermitian);
    }
    let mut report = EvolutionReport::default();
    if generator.is_zero() || time == 0.0 {
        report.max_overlap = Some(0.0);
        return Ok((rho0.clone(), report));
    }
    let space = rho0.space().clone();
    let h = realize(generator, &space)?;
    let base_steps = ((h.norm_one() * time.abs()) / STEP_THETA).ceil().max(1.0) as usize;
    let dim = space.dim();
    let mut term = vec![Complex64::zero(); dim];
    let mut scratch = vec![Complex64::zero(); dim];

    let mut evolve_one = |psi: &PureState, report: &mut EvolutionReport| -> Result<PureState> {
        let mut last_drift = f64::INFINITY;
        for attempt in 0..=MAX_RETRIES {
            let steps = base_steps << attempt;
            let dt = time / steps as f64;
            let mut amps = psi.amplitudes().to_vec();
            let mut max_terms = 0;
            let mut settled = true;
            for _ in 0..steps {
                match taylor_step(&h, dt, &mut amps, &mut term, &mut scratch) {
                    Some(k) => max_terms = max_terms.max(k),
                    None => {
                        settled = false;
                        break;
                    }
                }
            }
            if settled {
                let drift = (norm_sqr(&amps).sqrt() - 1.0).abs();
                last_drift = drift;
                if drift < tol {
                    report.steps = report.steps.max(steps);
                    report.max_taylor_terms = report.max_taylor_terms.max(max_terms);
                    report.max_norm_drift = report.max_norm_drift.max(drift);
                    report.retries += attempt;
                    return Ok(PureState::from_parts_unchecked(space.clone(), amps));
                }
            }
        }
        Err(Error::NormDrift {
            drift: last_drift,
            tol,
        })
    };

    let evolved = rho0.map_members(|psi| evolve_one(psi, &mut report))?;
    if evolved.len() <= OVERLAP_SCAN_LIMIT {
        let mut worst: f64 = 0.0;
        let members = evolved.members();
        for k in 0..members.len() {
            for l in k + 1..members.len() {
                let o = inner(members[k].1.amplitudes(), members[l].1.amplitudes()).norm();
                if o >= OVERLAP_TOL {
                    return Err(Error::NotOrthonormal(k, l, o));
                }
                worst = worst.max(o);
            }
        }
        report.max_overlap = Some(worst);
    }
    Ok((evolved, report))
}

/// Evolves under the SPDC generator for `params.time`.
pub fn evolve(
    rho0: &StateEnsemble,
    params: &SpdcParams,
    tol: f64,
) -> Result<(StateEnsemble, EvolutionReport)> {
    params.validate()?;
    if rho0.space().mode_count() != 3 {
        return Err(Error::ModeMismatch {
            left: 3,
            right: rho0.space().mode_count(),
        });
    }
    let generator = spdc_generator_with_phase(params.coupling, params.pump_phase);
    propagate(rho0, &generator, params.time, tol)
}

/// Per-mode cutoffs tried by [`converged_evolve`] before the geometric tail.
pub const DEFAULT_SCHEDULE: [usize; 8] = [2, 3, 4, 6, 8, 12, 18, 27];

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergencePolicy {
    /// Relative change of `⟨N⟩` and `Var(N)` accepted between successive
    /// cutoffs.
    pub tol_obs: f64,
    pub evolution_tol: f64,
    pub weight_floor: f64,
    /// Uniform per-mode cutoffs; extended by factors of 1.5 once exhausted.
    pub schedule: Vec<usize>,
    pub max_dim: usize,
    /// When false, running into `max_dim` returns the largest cutoff tried
    /// with `converged = false` instead of an error.
    pub require_convergence: bool,
}

impl Default for ConvergencePolicy {
    fn default() -> Self {
        ConvergencePolicy {
            tol_obs: 1e-4,
            evolution_tol: 1e-10,
            weight_floor: 1e-9,
            schedule: DEFAULT_SCHEDULE.to_vec(),
            max_dim: 20_000,
            require_convergence: true,
        }
    }
}

impl ConvergencePolicy {
    pub fn cutoffs(&self) -> impl Iterator<Item = usize> + '_ {
        let last = self.schedule.last().copied().unwrap_or(2).max(2);
        let tail =
            core::iter::successors(Some(last), |&d| Some(((d as f64) * 1.5).ceil() as usize))
                .skip(1);
        self.schedule.iter().copied().chain(tail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffRecord {
    pub cutoff: usize,
    pub dim: usize,
    pub mean_number: f64,
    pub number_variance: f64,
    /// Relative change against the previous cutoff.
    pub change: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergedEvolution {
    pub ensemble: StateEnsemble,
    pub cutoffs: Vec<usize>,
    pub converged: bool,
    pub history: Vec<CutoffRecord>,
    pub report: EvolutionReport,
}

fn relative_change(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-14 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Repeats [`thermal_ensemble`] + [`evolve`] on growing uniform cutoffs until
/// `⟨N⟩` and `Var(N)` settle.
pub fn converged_evolve(
    params: &SpdcParams,
    policy: &ConvergencePolicy,
) -> Result<ConvergedEvolution> {
    if !(policy.tol_obs > 0.0) {
        return Err(Error::InvalidArgument("tol_obs must be positive".into()));
    }
    params.validate()?;
    let number = OperatorExpr::total_number(3);
    let mut history: Vec<CutoffRecord> = Vec::new();
    let mut best: Option<ConvergedEvolution> = None;
    for cutoff in policy.cutoffs() {
        let space = match TruncatedSpace::with_limit(&[cutoff; 3], policy.max_dim) {
            Ok(s) => s,
            Err(e @ Error::DimensionOverflow { .. }) if best.is_none() => return Err(e),
            Err(Error::DimensionOverflow { .. }) => break,
            Err(e) => return Err(e),
        };
        let rho0 = thermal_ensemble(params, &space, policy.weight_floor)?;
        let (rho, report) = evolve(&rho0, params, policy.evolution_tol)?;
        let mats = [realize(&number, &space)?];
        let m = second_moments(&rho, &mats)?;
        let mean = m.means[0].re;
        let var = m.gram[(0, 0)] - mean * mean;
        let change = history.last().map(|prev| {
            relative_change(prev.mean_number, mean).max(relative_change(prev.number_variance, var))
        });
        history.push(CutoffRecord {
            cutoff,
            dim: space.dim(),
            mean_number: mean,
            number_variance: var,
            change,
        });
        let done = change.is_some_and(|c| c < policy.tol_obs);
        best = Some(ConvergedEvolution {
            ensemble: rho,
            cutoffs: vec![cutoff; 3],
            converged: done,
            history: history.clone(),
            report,
        });
        if done {
            break;
        }
    }
    let out = best.expect("at least one cutoff evaluated");
    if !out.converged && policy.require_convergence {
        let last = out.history.last().expect("history");
        return Err(Error::NonConvergence {
            cutoff: last.cutoff,
            change: last.change.unwrap_or(f64::INFINITY),
        });
    }
    Ok(out)
}
