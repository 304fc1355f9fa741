use wallsim_core::correlation::*;
use wallsim_core::dynamics::RunConfig;

#[test]
fn radius_independence() {
    let pts = [SpacePoint { s: 1, k: 2 }, SpacePoint { s: 0, k: 3 }, SpacePoint { s: 2, k: 3 }];
    let base = correlation_det(3, &pts, 0.5, &ContourSpec::centered(2.0)).unwrap();
    for rho in [1.5, 3.0] {
        let d = correlation_det(3, &pts, 0.5, &ContourSpec::centered(rho)).unwrap();
        assert!((d - base).abs() < 1e-9, "ρ={rho}: {d} vs {base}");
    }
}

#[test]
fn shifted_convention_wins_calibration() {
    let rep = calibrate_convention(0.5, &ContourSpec::default()).unwrap();
    assert_eq!(rep.chosen, Convention::Shifted);
    assert!(rep.shifted_err < 1e-8);
    assert!(rep.plain_err > 0.5);
}

#[test]
fn invalid_inputs() {
    assert!(correlation_det(1, &[SpacePoint { s: 0, k: 1 }; 2], 0.5, &ContourSpec::default()).is_err());
    assert!(correlation_kernel(1, SpacePoint { s: 0, k: 1 }, SpacePoint { s: 0, k: 1 }, 0.5, &ContourSpec::centered(0.9)).is_err());
    assert!(Window::new(20, 4).is_err());
}

#[test]
fn small_ensemble_single_point() {
    let cfg = RunConfig { q: 0.5, levels: 2, steps: 2, replicas: 20_000, seed: 7, odd_wall_uses_half_time: true };
    let ens = OccupationEnsemble::simulate(&cfg, Window::new(5, 2).unwrap(), Convention::Shifted).unwrap();
    let p = SpacePoint { s: 1, k: 1 };
    let emp = empirical_correlation(&ens, 2, &[p]).unwrap();
    let exact = correlation_kernel(2, p, p, 0.5, &ContourSpec::default()).unwrap().re;
    assert!(emp.z_against(exact).abs() < 4.5);
    assert!(empirical_correlation(&ens, 9, &[p]).is_err());
}
