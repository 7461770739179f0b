//! Point evaluation and grid sweeps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use trispdc_core::algebra::{moment_basis, OperatorExpr};
use trispdc_core::dynamics::{converged_evolve, SpdcParams, BOLTZMANN, HBAR};
use trispdc_core::squeezing::{chi2_inv, optimize_measurement, simplified_measurements};
use trispdc_core::witness::{
    bounds, class_flags, classify, hz_witness, number_locals, optimal_generator, qfi,
    standard_local_sets, BoundSet, Class, ClassFlags, WitnessReport,
};

use crate::config::{GeneratorMode, SweepConfig};

pub const CSV_SCHEMA: &str = "# trispdc sweep csv v1";

/// One evaluated grid point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub gt: f64,
    pub beta_omega1: f64,
    pub report: WitnessReport,
    pub converged: bool,
    pub wall_time: f64,
}

impl SweepRow {
    pub fn f_q(&self) -> f64 {
        self.report.f_q
    }

    pub fn chi2(&self, label: &str) -> Option<f64> {
        self.report
            .chi2_inv
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, v)| *v)
    }

    pub fn bounds(&self) -> &BoundSet {
        &self.report.bounds
    }

    pub fn class(&self) -> Class {
        self.report.class
    }
}

fn point_params(cfg: &SweepConfig, gt: f64, beta_omega1: Option<f64>) -> SpdcParams {
    SpdcParams::vacuum(gt)
        .with_thermal(cfg.thermal(beta_omega1))
        .with_pump_phase(cfg.physics.pump_phase)
        .with_omegas(cfg.omegas())
}

/// `ħω₁/(k_B T)` of the point, infinite for a zero-temperature input.
fn effective_beta_omega1(cfg: &SweepConfig, beta_omega1: Option<f64>) -> f64 {
    match beta_omega1 {
        Some(b) => b,
        None if cfg.sweep.temperature == 0.0 => f64::INFINITY,
        None => HBAR * cfg.omegas()[0] / (BOLTZMANN * cfg.sweep.temperature),
    }
}

fn measurement_value(
    rho: &trispdc_core::fock::StateEnsemble,
    a: &OperatorExpr,
    label: &str,
) -> Result<f64> {
    if let Some(order) = label.strip_prefix("order") {
        let order: usize = order.parse()?;
        let basis = moment_basis(order, 3)?;
        return Ok(optimize_measurement(rho, a, basis.operators())?.chi2_inv);
    }
    let m = simplified_measurements()
        .into_iter()
        .find(|(l, _)| *l == label)
        .map(|(_, m)| m)
        .ok_or_else(|| anyhow!("unknown measurement `{label}`"))?;
    Ok(chi2_inv(rho, a, &m)?)
}

/// Evolves, then evaluates every witness quantity at `(gt, βω₁)`.
pub fn run_point(cfg: &SweepConfig, gt: f64, beta_omega1: Option<f64>) -> Result<SweepRow> {
    let start = Instant::now();
    let at = || match beta_omega1 {
        Some(b) => format!("point gt={gt}, beta_omega1={b}"),
        None => format!("point gt={gt}, T={} K", cfg.sweep.temperature),
    };
    let params = point_params(cfg, gt, beta_omega1);
    let evolved = converged_evolve(&params, &cfg.policy()).with_context(at)?;
    let rho = &evolved.ensemble;

    let locals = match cfg.physics.generator {
        GeneratorMode::Number => number_locals(3),
        GeneratorMode::Optimize => {
            let choice = optimal_generator(rho, &standard_local_sets(3)).with_context(at)?;
            choice.number_normalized().unwrap_or(choice).locals
        }
    };
    let a = locals.iter().fold(OperatorExpr::zero(3), |acc, l| acc + l);

    let evaluate = || -> Result<WitnessReport> {
        let f_q = qfi(rho, &a)?;
        let bound_set = bounds(rho, &locals)?;
        let mut chi = Vec::with_capacity(cfg.physics.measurements.len());
        for label in &cfg.physics.measurements {
            chi.push((label.clone(), measurement_value(rho, &a, label)?));
        }
        let chi_opt = match chi.iter().find(|(l, _)| l == "Mopt") {
            Some((_, v)) => *v,
            None => measurement_value(rho, &a, "Mopt")?,
        };
        let certifying = if cfg.physics.certify == "qfi" {
            f_q
        } else {
            chi.iter()
                .find(|(l, _)| *l == cfg.physics.certify)
                .map(|(_, v)| *v)
                .expect("validated certifying label")
        };
        let margin = cfg.tolerances.margin;
        Ok(WitnessReport {
            f_q,
            i_hz: hz_witness(rho)?,
            i_chi: chi_opt - bound_set.b2,
            class: classify(certifying, &bound_set, margin),
            flags: class_flags(certifying, &bound_set, margin),
            chi2_inv: chi,
            bounds: bound_set,
            cutoffs: evolved.cutoffs.clone(),
            discarded_mass: rho.discarded_mass(),
        })
    };
    let report = evaluate().with_context(at)?;
    Ok(SweepRow {
        gt,
        beta_omega1: effective_beta_omega1(cfg, beta_omega1),
        report,
        converged: evolved.converged,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        format!("{x}")
    }
}

fn flag(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "1",
        Some(false) => "0",
        None => "",
    }
}

pub fn csv_header(cfg: &SweepConfig) -> String {
    let mut cols: Vec<String> = vec!["gt".into(), "beta_omega1".into(), "f_q".into()];
    cols.extend(cfg.physics.measurements.iter().map(|l| format!("chi2_{l}")));
    cols.extend(
        [
            "b0",
            "b1",
            "b2",
            "b3",
            "i_hz",
            "i_chi",
            "class",
            "above_b0",
            "above_b1",
            "above_b2",
            "converged",
            "cutoffs",
            "discarded_mass",
            "wall_time_s",
            "error",
        ]
        .map(String::from),
    );
    cols.join(",")
}

fn csv_row(cfg: &SweepConfig, gt: f64, beta: f64, row: &Result<SweepRow>) -> String {
    let n_meas = cfg.physics.measurements.len();
    let mut fields = vec![num(gt), num(beta)];
    match row {
        Ok(r) => {
            let rep = &r.report;
            let ClassFlags {
                above_b0,
                above_b1,
                above_b2,
            } = rep.flags;
            fields.push(num(rep.f_q));
            fields.extend(rep.chi2_inv.iter().map(|(_, v)| num(*v)));
            fields.push(rep.bounds.b0.map(num).unwrap_or_default());
            fields.extend(
                [
                    rep.bounds.b1,
                    rep.bounds.b2,
                    rep.bounds.b3,
                    rep.i_hz,
                    rep.i_chi,
                ]
                .map(num),
            );
            fields.push(rep.class.as_str().into());
            fields.extend(
                [flag(above_b0), flag(Some(above_b1)), flag(Some(above_b2))].map(String::from),
            );
            fields.push(if r.converged { "1" } else { "0" }.into());
            fields.push(
                rep.cutoffs
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(";"),
            );
            fields.push(num(rep.discarded_mass));
            fields.push(format!("{:.3}", r.wall_time));
            fields.push(String::new());
        }
        Err(e) => {
            fields.extend(std::iter::repeat_n(String::new(), 1 + n_meas + 14));
            let msg = format!("{e:#}").replace(['"', '\n'], "'");
            fields.push(format!("\"{msg}\""));
        }
    }
    fields.join(",")
}

/// Result of a sweep: rows in grid order plus where they were written.
pub struct SweepOutput {
    pub rows: Vec<(f64, f64, Result<SweepRow>)>,
    pub csv_path: PathBuf,
    pub meta_path: PathBuf,
}

impl SweepOutput {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|(_, _, r)| r.is_err()).count()
    }
}

pub fn config_hash(cfg: &SweepConfig) -> String {
    hex::encode(Sha256::digest(cfg.to_toml().as_bytes()))
}

/// Evaluates all grid points on a bounded pool and writes the CSV.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let grid = cfg.grid();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.sweep.threads)
        .build()
        .context("cannot start worker pool")?;
    let rows: Vec<(f64, f64, Result<SweepRow>)> = pool.install(|| {
        grid.par_iter()
            .map(|&(gt, b)| (gt, effective_beta_omega1(cfg, b), run_point(cfg, gt, b)))
            .collect()
    });

    let mut csv = String::new();
    writeln!(csv, "{CSV_SCHEMA}")?;
    writeln!(csv, "{}", csv_header(cfg))?;
    for (gt, beta, row) in &rows {
        writeln!(csv, "{}", csv_row(cfg, *gt, *beta, row))?;
    }
    let csv_path = cfg.output.path.clone();
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(&csv_path, csv).with_context(|| format!("cannot write {}", csv_path.display()))?;
    let meta_path = meta_path(&csv_path);
    let failures = rows.iter().filter(|(_, _, r)| r.is_err()).count();
    fs::write(&meta_path, metadata(cfg, rows.len(), failures))
        .with_context(|| format!("cannot write {}", meta_path.display()))?;
    Ok(SweepOutput {
        rows,
        csv_path,
        meta_path,
    })
}

pub fn meta_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.toml");
    csv.with_file_name(name)
}

fn metadata(cfg: &SweepConfig, points: usize, failures: usize) -> String {
    let mut meta = toml::Table::new();
    meta.insert("schema".into(), CSV_SCHEMA.trim_start_matches("# ").into());
    meta.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    meta.insert("config_sha256".into(), config_hash(cfg).into());
    meta.insert("points".into(), (points as i64).into());
    meta.insert("failures".into(), (failures as i64).into());
    let mut constants = toml::Table::new();
    constants.insert("hbar".into(), HBAR.into());
    constants.insert("boltzmann".into(), BOLTZMANN.into());
    constants.insert(
        "omegas_rad_per_s".into(),
        toml::Value::Array(cfg.omegas().iter().map(|&w| w.into()).collect()),
    );
    meta.insert("constants".into(), constants.into());
    meta.insert(
        "config".into(),
        toml::Value::try_from(cfg).expect("configuration serializes"),
    );
    toml::to_string(&meta).expect("metadata serializes")
}
