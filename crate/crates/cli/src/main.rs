use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use trispdc::commands::{bases, commute};
use trispdc::config::{Axis, GeneratorMode, SweepConfig};
use trispdc::sweep::{csv_header, run_point, run_sweep};

#[derive(Parser)]
#[command(
    name = "trispdc",
    version,
    about = "Entanglement witnesses for three-mode down-conversion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a single (gt, βω₁) point and print its record.
    Point {
        #[arg(long)]
        gt: f64,
        /// Inverse temperature ħω₁/(k_B T); overrides the fixed temperature.
        #[arg(long)]
        beta_omega1: Option<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a grid sweep and write the CSV and its metadata sidecar.
    Sweep {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print the commutator [A, B] of two operator expressions.
    Commute {
        a: String,
        b: String,
        #[arg(long, default_value_t = 3)]
        modes: usize,
        /// Also print the normal-ordered ladder form.
        #[arg(long)]
        ladder: bool,
    },
    /// Print the moment bases M⁽¹⁾, M⁽²⁾, M⁽³⁾.
    Bases {
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3])]
        orders: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        modes: usize,
        /// Only print the element counts.
        #[arg(long)]
        counts_only: bool,
    },
}

/// Settings that take precedence over the configuration file.
#[derive(Args)]
struct Overrides {
    /// TOML configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Fixed input temperature in kelvin.
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long, value_parser = ["number", "optimize"])]
    generator: Option<String>,
    /// Comma-separated measurement labels.
    #[arg(long, value_delimiter = ',')]
    measurements: Option<Vec<String>>,
    #[arg(long)]
    certify: Option<String>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    max_dim: Option<usize>,
    /// Report the largest cutoff instead of failing when not converged.
    #[arg(long)]
    best_effort: bool,
    #[arg(short = 'j', long)]
    threads: Option<usize>,
}

impl Overrides {
    fn apply(self, fallback_gt: Option<f64>) -> Result<SweepConfig> {
        let mut cfg = match (&self.config, fallback_gt) {
            (Some(path), _) => SweepConfig::load(path)?,
            (None, Some(gt)) => SweepConfig::vacuum(Axis::single(gt)),
            (None, None) => bail!("a configuration file is required (--config)"),
        };
        if let Some(o) = self.output {
            cfg.output.path = o;
        }
        if let Some(t) = self.temperature {
            cfg.sweep.temperature = t;
            cfg.sweep.beta_omega1 = None;
        }
        if let Some(g) = self.generator {
            cfg.physics.generator = match g.as_str() {
                "optimize" => GeneratorMode::Optimize,
                _ => GeneratorMode::Number,
            };
        }
        if let Some(m) = self.measurements {
            cfg.physics.measurements = m;
        }
        if let Some(c) = self.certify {
            cfg.physics.certify = c;
        }
        if let Some(m) = self.margin {
            cfg.tolerances.margin = m;
        }
        if let Some(d) = self.max_dim {
            cfg.convergence.max_dim = d;
        }
        if self.best_effort {
            cfg.convergence.require = false;
        }
        if let Some(t) = self.threads {
            cfg.sweep.threads = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Point {
            gt,
            beta_omega1,
            overrides,
        } => {
            let cfg = overrides.apply(Some(gt))?;
            let row = run_point(&cfg, gt, beta_omega1)?;
            let rep = &row.report;
            println!("gt              {}", row.gt);
            println!("beta_omega1     {}", row.beta_omega1);
            println!("F_Q             {:.12e}", rep.f_q);
            for (label, v) in &rep.chi2_inv {
                println!("chi2_inv[{label:<6}] {v:.12e}");
            }
            if let Some(b0) = rep.bounds.b0 {
                println!("B0              {b0:.12e}");
            }
            println!("B1              {:.12e}", rep.bounds.b1);
            println!("B2              {:.12e}", rep.bounds.b2);
            println!("B3              {:.12e}", rep.bounds.b3);
            println!("I_HZ            {:.12e}", rep.i_hz);
            println!("I_chi           {:.12e}", rep.i_chi);
            println!("class           {}", rep.class);
            println!(
                "cutoffs         {:?}{}",
                rep.cutoffs,
                if row.converged {
                    ""
                } else {
                    " (not converged)"
                }
            );
            println!("discarded mass  {:.3e}", rep.discarded_mass);
        }
        Command::Sweep { overrides } => {
            let cfg = overrides.apply(None)?;
            eprintln!(
                "{} points -> {}",
                cfg.grid().len(),
                cfg.output.path.display()
            );
            eprintln!("columns: {}", csv_header(&cfg));
            let out = run_sweep(&cfg)?;
            let failed = out.failures();
            eprintln!(
                "wrote {} and {} ({failed} failed point(s))",
                out.csv_path.display(),
                out.meta_path.display()
            );
        }
        Command::Commute {
            a,
            b,
            modes,
            ladder,
        } => println!("{}", commute(&a, &b, modes, ladder)?),
        Command::Bases {
            orders,
            modes,
            counts_only,
        } => print!("{}", bases(&orders, modes, !counts_only)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
