use std::fs;
use std::process::Command;

use trispdc::commands::commute;
use trispdc::config::{Axis, SweepConfig};
use trispdc::sweep::{meta_path, run_point, run_sweep, CSV_SCHEMA};
use trispdc_core::algebra::parse_operator;
use trispdc_core::witness::Class;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trispdc"))
}

fn small_config(dir: &std::path::Path, text_extra: &str) -> SweepConfig {
    let text = format!(
        "[sweep]\ngt = {{ min = 0.0, max = 0.2, points = 3 }}\nbeta_omega1 = {{ min = 4.0, max = 8.0, points = 2 }}\n\
         [physics]\nmeasurements = [\"M1\", \"Mopt\", \"order2\"]\ncertify = \"Mopt\"\n{text_extra}\
         [output]\npath = \"{}\"\n",
        dir.join("out.csv").display()
    );
    SweepConfig::from_toml(&text).unwrap()
}

#[test]
fn zero_coupling_is_undetected() {
    for beta in [None, Some(3.0)] {
        let row = run_point(&SweepConfig::vacuum(Axis::single(0.0)), 0.0, beta).unwrap();
        assert_eq!(row.f_q(), 0.0);
        assert!(row.report.chi2_inv.iter().all(|(_, v)| *v == 0.0));
        assert_eq!(row.class(), Class::Undetected);
    }
}

#[test]
fn moderate_coupling_is_fully_inseparable() {
    let row = run_point(&SweepConfig::vacuum(Axis::single(0.3)), 0.3, None).unwrap();
    assert!(row.f_q() > row.bounds().b2);
    assert!(row.chi2("Mopt").unwrap() / row.f_q() >= 0.95);
    assert_eq!(row.class(), Class::FullyInseparable);
}

#[test]
fn optimized_generator_matches_number_generator() {
    let mut cfg = SweepConfig::vacuum(Axis::single(0.2));
    let by_number = run_point(&cfg, 0.2, None).unwrap();
    cfg.physics.generator = trispdc::GeneratorMode::Optimize;
    let optimized = run_point(&cfg, 0.2, None).unwrap();
    assert!((optimized.f_q() - by_number.f_q()).abs() <= 1e-8 * by_number.f_q());
    // B0 is only defined for the number generator
    assert!(optimized.bounds().b0.is_none());
}

#[test]
fn sweep_is_deterministic_and_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let strip = |text: &str| -> Vec<String> {
        // drop the wall-time column
        text.lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                if f.len() > 2 {
                    f.remove(f.len() - 2);
                }
                f.join(",")
            })
            .collect()
    };
    let first = run_sweep(&cfg).unwrap();
    let a = fs::read_to_string(&first.csv_path).unwrap();
    run_sweep(&cfg).unwrap();
    let b = fs::read_to_string(&first.csv_path).unwrap();
    assert_eq!(strip(&a), strip(&b));

    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], CSV_SCHEMA);
    assert!(lines[1].starts_with("gt,beta_omega1,f_q,chi2_M1,chi2_Mopt,chi2_order2,b0,"));
    assert_eq!(lines.len(), 2 + 6);
    let keys: Vec<(f64, f64)> = lines[2..]
        .iter()
        .map(|l| {
            let f: Vec<f64> = l.split(',').take(2).map(|x| x.parse().unwrap()).collect();
            (f[0], f[1])
        })
        .collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    assert_eq!(keys, sorted);
    assert_eq!(first.failures(), 0);

    let meta = fs::read_to_string(meta_path(&first.csv_path)).unwrap();
    let meta: toml::Table = toml::from_str(&meta).unwrap();
    assert_eq!(meta["points"].as_integer(), Some(6));
    assert_eq!(meta["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn single_point_sweep_reproduces_run_point() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path(), "");
    cfg.sweep.gt = Axis::single(0.15);
    cfg.sweep.beta_omega1 = Some(Axis::single(5.0));
    let out = run_sweep(&cfg).unwrap();
    let direct = run_point(&cfg, 0.15, Some(5.0)).unwrap();
    let swept = out.rows[0].2.as_ref().unwrap();
    assert_eq!(swept.f_q(), direct.f_q());
    assert_eq!(swept.report.chi2_inv, direct.report.chi2_inv);
    assert_eq!(swept.bounds(), direct.bounds());
    assert_eq!(swept.class(), direct.class());
}

#[test]
fn failing_points_become_error_rows() {
    let dir = tempfile::tempdir().unwrap();
    // the cap stops the cutoff ladder before the plateau at large gt
    let cfg = small_config(dir.path(), "[convergence]\nmax_dim = 64\n");
    let mut cfg = cfg;
    cfg.sweep.beta_omega1 = None;
    cfg.sweep.gt = Axis {
        min: 0.0,
        max: 0.8,
        points: 2,
        scale: Default::default(),
    };
    let out = run_sweep(&cfg).unwrap();
    assert!(out.rows[0].2.is_ok());
    assert!(out.failures() >= 1);
    let text = fs::read_to_string(&out.csv_path).unwrap();
    let last = text.lines().last().unwrap();
    assert!(last.contains("gt=0.8"), "{last}");
    let header_cols = text.lines().nth(1).unwrap().split(',').count();
    let first_row_cols = text.lines().nth(2).unwrap().split(',').count();
    assert_eq!(header_cols, first_row_cols);
}

#[test]
fn commutator_examples() {
    let canon = |s: &str| parse_operator(s, 3).unwrap();
    let n = "n1 + n2 + n3";
    assert_eq!(commute("x1", "p1", 3, false).unwrap(), "2i");
    assert_eq!(
        canon(&commute("x1*x2*x3 - x1*p2*p3", n, 3, false).unwrap()),
        canon("i*(p1*x2*x3 + 2*x1*p2*x3 + 2*x1*x2*p3 - p1*p2*p3)")
    );
    assert_eq!(
        canon(&commute("x1*x2*x3 - x1*p2*p3 - p1*x2*p3", n, 3, false).unwrap()),
        canon("i*(2*p1*x2*x3 + 2*x1*p2*x3 + 3*x1*x2*p3 - 2*p1*p2*p3)")
    );
}

#[test]
fn binary_subcommands() {
    let out = bin().args(["commute", "x1", "p1"]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "2i");

    let out = bin().args(["bases", "--counts-only"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    for count in ["6 elements", "27 elements", "83 elements"] {
        assert!(text.contains(count), "{text}");
    }
    let listed = bin().args(["bases", "--orders", "2"]).output().unwrap();
    assert_eq!(
        String::from_utf8(listed.stdout).unwrap().lines().count(),
        28
    );

    let out = bin().args(["point", "--gt", "0"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("undetected"));
}

#[test]
fn binary_fails_on_bad_input() {
    assert!(!bin()
        .args(["commute", "x1 +", "p1"])
        .status()
        .unwrap()
        .success());
    assert!(!bin().args(["sweep"]).status().unwrap().success());
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[sweep]\ngt = { min = 1.0, max = 0.0, points = 3 }\n").unwrap();
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("min <= max"));
}

#[test]
fn sweep_via_binary_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        "[sweep]\ngt = { min = 0.05, max = 0.1, points = 2 }\n",
    )
    .unwrap();
    let csv = dir.path().join("nested/o.csv");
    let status = bin()
        .args([
            "sweep",
            "-j",
            "2",
            "--measurements",
            "M1",
            "--certify",
            "M1",
            "--config",
        ])
        .arg(&cfg)
        .arg("--output")
        .arg(&csv)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.lines().nth(1).unwrap().contains("chi2_M1,b0"));
    assert_eq!(text.lines().count(), 4);
    assert!(meta_path(&csv).exists());
}

#[test]
fn recipes_parse() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../recipes");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            SweepConfig::load(&path).unwrap();
            n += 1;
        }
    }
    assert_eq!(n, 3);
    let vacuum =
        SweepConfig::load(std::path::Path::new(&format!("{dir}/vacuum_coupling.toml"))).unwrap();
    assert_eq!(vacuum.grid().len(), 50);
}

#[test]
fn doubling_converged_cutoffs_keeps_qfi() {
    use trispdc_core::algebra::OperatorExpr;
    use trispdc_core::dynamics::{evolve, SpdcParams};
    use trispdc_core::fock::{PureState, StateEnsemble, TruncatedSpace};
    use trispdc_core::witness::qfi;

    let cfg = SweepConfig::vacuum(Axis::single(0.2));
    let tol = cfg.tolerances.observables;
    for gt in [0.05, 0.2] {
        let row = run_point(&cfg, gt, None).unwrap();
        assert!(row.converged);
        let doubled = 2 * row.report.cutoffs[0];
        let space = TruncatedSpace::uniform(3, doubled).unwrap();
        let rho = StateEnsemble::pure(PureState::vacuum(space));
        let rho = evolve(&rho, &SpdcParams::vacuum(gt), 1e-10).unwrap().0;
        let f = qfi(&rho, &OperatorExpr::total_number(3)).unwrap();
        assert!(
            (f - row.f_q()).abs() < 2.0 * tol * f,
            "gt {gt}: {f} vs {}",
            row.f_q()
        );
    }
}

#[test]
fn classes_do_not_skip_levels_along_gt() {
    let mut cfg = SweepConfig::load(std::path::Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../recipes/thermal_m1_map.toml"
    )))
    .unwrap();
    cfg.sweep.beta_omega1 = Some(Axis::single(10.0));
    cfg.sweep.gt.points = 12;
    let classes: Vec<Class> = cfg
        .grid()
        .into_iter()
        .map(|(gt, b)| run_point(&cfg, gt, b).unwrap().class())
        .collect();
    for w in classes.windows(2) {
        assert!(
            !(w[0] == Class::FullyInseparable && w[1] == Class::Undetected),
            "{classes:?}"
        );
    }
}
