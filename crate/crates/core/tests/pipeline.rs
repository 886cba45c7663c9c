use csnt_core::continuity::decay_ode;
use csnt_core::coupling::{solve_fixed_point, CoupledConfig};
use csnt_core::fields::io::{read_snapshot, write_snapshot, AnyField};
use csnt_core::momentum::{energy_identity, solve_momentum};
use csnt_core::{ConstitutiveModel, Grid, MomentumProblem, RegularizationParams, ScalarField};
use proptest::prelude::*;

fn config(n: usize, delta: f64, t_final: f64) -> CoupledConfig {
    let model = ConstitutiveModel::default_with_gamma(2.0).unwrap();
    let params = RegularizationParams::new(delta, delta / 10.0, 2, 4);
    CoupledConfig::new(model, params, Grid::new(2, n).unwrap(), 5e-3, t_final)
}

fn wave(g: &Grid, a: f64, k: f64) -> ScalarField {
    ScalarField::from_fn(g, |x| 1.0 + a * (k * x[0]).cos() * x[1].sin())
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let cfg = config(32, 1e-3, 0.05);
    let rho0 = wave(&cfg.grid, 0.3, 1.0);
    let a = solve_fixed_point(&cfg, &rho0).unwrap();
    let b = solve_fixed_point(&cfg, &rho0).unwrap();
    assert_eq!(a.rho, b.rho);
    assert_eq!(a.u, b.u);
}

#[test]
fn mass_never_grows_and_density_stays_nonnegative() {
    let cfg = config(32, 1e-2, 0.1);
    let traj = solve_fixed_point(&cfg, &wave(&cfg.grid, 0.8, 2.0)).unwrap();
    let mass: Vec<f64> = traj.rho.iter().map(|r| r.integral()).collect();
    for w in mass.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-13), "{} -> {}", w[0], w[1]);
    }
    assert!(traj.rho.iter().all(|r| r.min() >= 0.0));
}

#[test]
fn final_state_survives_a_snapshot_round_trip() {
    let cfg = config(16, 1e-3, 0.02);
    let traj = solve_fixed_point(&cfg, &wave(&cfg.grid, 0.3, 1.0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (rho, u) = (traj.rho.last().unwrap(), traj.u.last().unwrap());
    let t = *traj.times.last().unwrap();
    write_snapshot(&dir.path().join("rho.csnt"), t, &AnyField::Scalar(rho.clone())).unwrap();
    write_snapshot(&dir.path().join("u.csnt"), t, &AnyField::Vector(u.clone())).unwrap();
    let r = read_snapshot(&dir.path().join("rho.csnt")).unwrap();
    let v = read_snapshot(&dir.path().join("u.csnt")).unwrap();
    assert_eq!(r.time, t);
    assert_eq!(r.field, AnyField::Scalar(rho.clone()));
    assert_eq!(v.field, AnyField::Vector(u.clone()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn constant_densities_decay_without_flow(c in 0.2f64..2.0, delta in 0.05f64..0.5) {
        let mut cfg = config(8, delta, 0.1);
        cfg.dt = 1e-3;
        let traj = solve_fixed_point(&cfg, &ScalarField::constant(&cfg.grid, c)).unwrap();
        for ((t, rho), u) in traj.times.iter().zip(&traj.rho).zip(&traj.u) {
            prop_assert!(u.max_abs() == 0.0);
            let exact = decay_ode(c, delta, 4.0, *t);
            prop_assert!((rho.max() - exact).abs() <= 1e-9 * c);
            prop_assert!((rho.min() - exact).abs() <= 1e-9 * c);
        }
    }

    #[test]
    fn momentum_solutions_satisfy_the_energy_identity(a in 0.0f64..0.9, k in 1u8..4) {
        let g = Grid::new(2, 16).unwrap();
        let model = ConstitutiveModel::default_with_gamma(2.0).unwrap();
        let params = RegularizationParams::new(1e-3, 1e-4, 2, 4);
        let pb = MomentumProblem::from_density(model, params, &wave(&g, a, k as f64)).unwrap();
        let sol = solve_momentum(&pb, 1e-11, 1000).unwrap();
        let (l, r) = energy_identity(&pb, &sol.u);
        prop_assert!((l - r).abs() <= 1e-6 * l.abs().max(r.abs()).max(1e-300));
    }
}
