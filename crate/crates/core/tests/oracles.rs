mod common;

use common::{dense, dense_qfi, density_matrix, random_hermitian, random_state};
use rand::rngs::StdRng;
use rand::SeedableRng;
use trispdc_core::algebra::{commutator, moment_basis, parse_operator, OperatorExpr};
use trispdc_core::dynamics::{evolve, thermal_ensemble, SpdcParams, Thermal};
use trispdc_core::fock::{
    covariance_matrix, expectation, realize, variance, PureState, StateEnsemble, TruncatedSpace,
};
use trispdc_core::squeezing::{chi2_inv, optimize_measurement, simplified_parameters};
use trispdc_core::witness::{bounds, number_locals, qfi, qfi_matrix, standard_local_sets};
use trispdc_core::Complex64;

fn thermal_spdc(beta: f64, gt: f64, cutoff: usize, floor: f64) -> StateEnsemble {
    let params = SpdcParams::vacuum(gt).with_thermal(Thermal::BetaOmega1(beta));
    let space = TruncatedSpace::uniform(3, cutoff).unwrap();
    let rho0 = thermal_ensemble(&params, &space, floor).unwrap();
    evolve(&rho0, &params, 1e-12).unwrap().0
}

#[test]
fn thermal_single_mode_qfi_matches_dense_oracle() {
    // one mode, βω = 2, cutoff 10: rotate the thermal state so that ρ and A
    // do not commute
    let space = TruncatedSpace::new(&[10]).unwrap();
    let mut members = Vec::new();
    let z: f64 = (0..10).map(|n| (-2.0 * n as f64).exp()).sum();
    for n in 0..10 {
        members.push((
            (-2.0 * n as f64).exp() / z,
            PureState::fock(space.clone(), &[n]).unwrap(),
        ));
    }
    let rho0 = StateEnsemble::new(members, 0.0).unwrap();
    let g = parse_operator("0.3*(ad1*ad1 + a1*a1)", 1).unwrap();
    let rho = trispdc_core::dynamics::propagate(&rho0, &g, 1.0, 1e-12)
        .unwrap()
        .0;
    let a = parse_operator("n1", 1).unwrap();
    let oracle = dense_qfi(&density_matrix(&rho), &dense(&a, &space));
    let f = qfi(&rho, &a).unwrap();
    assert!(
        (f - oracle).abs() <= 1e-9 * oracle.max(1.0),
        "{f} vs {oracle}"
    );
}

#[test]
fn ensemble_qfi_matches_dense_spectrum() {
    for beta in [2.0, 5.0, 8.0] {
        let rho = thermal_spdc(beta, 0.3, 4, 1e-12);
        let n = OperatorExpr::total_number(3);
        let oracle = dense_qfi(&density_matrix(&rho), &dense(&n, rho.space()));
        let f = qfi(&rho, &n).unwrap();
        assert!(
            (f - oracle).abs() <= 1e-8 * oracle,
            "beta {beta}: {f} vs {oracle}"
        );
    }
}

#[test]
fn discarded_mass_consistency() {
    let eps = 1e-4;
    let a = thermal_spdc(2.0, 0.3, 4, eps);
    let b = thermal_spdc(2.0, 0.3, 4, eps / 10.0);
    assert!(a.len() < b.len());
    let n = OperatorExpr::total_number(3);
    let (fa, fb) = (qfi(&a, &n).unwrap(), qfi(&b, &n).unwrap());
    assert!((fa - fb).abs() <= 10.0 * eps * fb, "{fa} {fb}");
}

#[test]
fn pure_state_qfi_is_four_variance_randomized() {
    let mut rng = StdRng::seed_from_u64(7);
    let space = TruncatedSpace::uniform(3, 8).unwrap();
    for _ in 0..20 {
        let rho = StateEnsemble::pure(random_state(&mut rng, &space));
        let a = random_hermitian(&mut rng, 3, 3, 4);
        let f = qfi(&rho, &a).unwrap();
        let v = variance(&rho, &a).unwrap();
        assert!((f - 4.0 * v).abs() <= 1e-9 * f.abs().max(1e-12));
    }
}

#[test]
fn realization_is_a_homomorphism_away_from_the_boundary() {
    let mut rng = StdRng::seed_from_u64(11);
    let d = 8;
    let space = TruncatedSpace::uniform(3, d).unwrap();
    for _ in 0..10 {
        let a = random_hermitian(&mut rng, 3, 2, 3);
        let b = random_hermitian(&mut rng, 3, 2, 3);
        let lhs = realize(&commutator(&a, &b).unwrap(), &space).unwrap();
        let (ma, mb) = (realize(&a, &space).unwrap(), realize(&b, &space).unwrap());
        let inner = |k: usize| space.occupations(k).iter().all(|&n| n < d - 4);
        for c in (0..space.dim()).filter(|&c| inner(c)) {
            let mut e = vec![Complex64::new(0.0, 0.0); space.dim()];
            e[c] = Complex64::new(1.0, 0.0);
            let ab = ma.matvec(&mb.matvec(&e));
            let ba = mb.matvec(&ma.matvec(&e));
            for r in (0..space.dim()).filter(|&r| inner(r)) {
                assert!((lhs.get(r, c) - (ab[r] - ba[r])).norm() < 1e-9);
            }
        }
    }
}

#[test]
fn expectation_is_linear_and_hermitian_real() {
    let mut rng = StdRng::seed_from_u64(3);
    let rho = thermal_spdc(2.0, 0.4, 4, 1e-9);
    let a = random_hermitian(&mut rng, 3, 3, 3);
    let b = random_hermitian(&mut rng, 3, 3, 3);
    let ea = expectation(&rho, &a).unwrap();
    let eb = expectation(&rho, &b).unwrap();
    let sum = expectation(&rho, &(a.scale_real(2.0) - b)).unwrap();
    assert!((sum - (ea * 2.0 - eb)).norm() < 1e-12);
    assert!(ea.im.abs() < 1e-10);
}

#[test]
fn covariance_matrices_are_psd() {
    let rho = thermal_spdc(5.0, 0.5, 6, 1e-9);
    let basis = moment_basis(3, 3).unwrap();
    let g = covariance_matrix(&rho, basis.operators()).unwrap();
    let eig = nalgebra::SymmetricEigen::new(g);
    assert!(eig.eigenvalues.min() > -1e-9);
    let q = qfi_matrix(&rho, &standard_local_sets(3).concat()).unwrap();
    assert!(nalgebra::SymmetricEigen::new(q).eigenvalues.min() > -1e-9);
}

#[test]
fn qfi_below_b3_and_chi_below_qfi() {
    let mut rng = StdRng::seed_from_u64(5);
    let n = OperatorExpr::total_number(3);
    for (beta, gt) in [(2.0, 0.2), (5.0, 0.5), (8.0, 0.1), (f64::INFINITY, 0.6)] {
        let rho = thermal_spdc(beta, gt, 5, 1e-9);
        let b = bounds(&rho, &number_locals(3)).unwrap();
        let f = qfi(&rho, &n).unwrap();
        assert!(f <= b.b3 + 1e-9);
        let s = simplified_parameters(&rho, &n).unwrap();
        for (_, v) in s.labeled() {
            assert!(v <= f + 1e-8);
        }
        for _ in 0..5 {
            let m = random_hermitian(&mut rng, 3, 3, 3);
            if let Ok(chi) = chi2_inv(&rho, &n, &m) {
                assert!(chi <= f + 1e-8, "{chi} > {f}");
            }
        }
    }
}

#[test]
fn larger_basis_never_loses() {
    let rho = thermal_spdc(5.0, 0.3, 6, 1e-9);
    let n = OperatorExpr::total_number(3);
    let b2 = moment_basis(2, 3).unwrap();
    let b3 = moment_basis(3, 3).unwrap();
    let small = optimize_measurement(&rho, &n, &b3.operators()[..40]).unwrap();
    let large = optimize_measurement(&rho, &n, b3.operators()).unwrap();
    assert!(large.chi2_inv >= small.chi2_inv - 1e-10);
    let low = optimize_measurement(&rho, &n, b2.operators()).unwrap();
    assert!(large.chi2_inv >= low.chi2_inv - 1e-10);
}

#[test]
fn short_time_number_series() {
    let space = TruncatedSpace::uniform(3, 6).unwrap();
    let vac = StateEnsemble::pure(PureState::vacuum(space));
    for gt in [0.01, 0.03, 0.05] {
        let (rho, _) = evolve(&vac, &SpdcParams::vacuum(gt), 1e-12).unwrap();
        let n = expectation(&rho, &OperatorExpr::total_number(3))
            .unwrap()
            .re;
        assert!((n / (3.0 * gt * gt) - 1.0).abs() < 0.01);
    }
}

#[test]
fn matrices_of_hermitian_operators_are_hermitian() {
    let mut rng = StdRng::seed_from_u64(13);
    let space = TruncatedSpace::new(&[5, 4, 3]).unwrap();
    for _ in 0..10 {
        let a = random_hermitian(&mut rng, 3, 3, 5);
        assert!(realize(&a, &space).unwrap().is_hermitian(1e-12));
    }
}
