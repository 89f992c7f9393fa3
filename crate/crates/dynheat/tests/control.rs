mod common;

use common::*;
use dynheat::control::*;
use dynheat::discretize::{Discretization, State};
use dynheat::evolve::{Schedule, Scheme};
use dynheat::Error;
use nalgebra::{DMatrix, DVector};

fn context(disc: &Discretization) -> ControlContext<'_> {
    let s = Schedule::new(0.0, 1.0, 1e-2, Scheme::CrankNicolson).unwrap();
    ControlContext::new(disc, s, 0.5).unwrap()
}

fn problem(psi0: State, eps: f64) -> ControlProblem {
    ControlProblem {
        psi0,
        tau: 0.5,
        t_final: 1.0,
        eps,
        kappa: KappaMode::Auto,
        cg_tol: 1e-12,
        cg_maxit: 2000,
    }
}

fn unit(disc: &Discretization, seed: u64) -> State {
    let u = gaussian(disc.grid.len(), disc.grid.n_bulk, &mut rng(seed));
    let n = disc.ops.norm(&u).unwrap();
    u.scaled(1.0 / n)
}

/// Dense Crank–Nicolson step `(I − dt/2 A)⁻¹(I + dt/2 A)`.
fn dense_cn(disc: &Discretization, dt: f64) -> DMatrix<f64> {
    let a = dense_a(disc);
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    (&id - &a * (0.5 * dt)).try_inverse().unwrap() * (&id + &a * (0.5 * dt))
}

#[test]
fn gramian_matches_dense_oracle() {
    let disc = interval_disc(12);
    let ctx = context(&disc);
    let p = dense_cn(&disc, 1e-2).pow(50);
    let n = disc.grid.len();
    let er = DMatrix::from_fn(n, n, |i, j| {
        if i == j && disc.ops.omega.contains(&i) {
            1.0
        } else {
            0.0
        }
    });
    let (kappa, eps) = (3.0, 0.1);
    let g = &p * er * &p * (kappa * kappa) + DMatrix::<f64>::identity(n, n) * (eps * eps);
    let mut r = rng(1);
    for _ in 0..5 {
        let z = gaussian(n, disc.grid.n_bulk, &mut r);
        let want = &g * DVector::from_column_slice(z.as_slice());
        let got = gramian_apply(&z, kappa, eps, &ctx).unwrap();
        let err = (DVector::from_column_slice(got.as_slice()) - &want).abs().max();
        assert!(err <= 1e-12 * want.abs().max());
    }
}

#[test]
fn gramian_trivial_cases() {
    let disc = interval_disc(16);
    let ctx = context(&disc);
    let zero = State::zeros(&disc.grid);
    assert_eq!(gramian_apply(&zero, 2.0, 0.1, &ctx).unwrap(), zero);
    let z = unit(&disc, 3);
    let got = gramian_apply(&z, 0.0, 0.1, &ctx).unwrap();
    assert!(rel_dist(&disc, &got, &z.scaled(0.01)) < 1e-15);
}

#[test]
fn zero_data_needs_no_control() {
    let disc = interval_disc(16);
    let ctx = context(&disc);
    let mut p = problem(State::zeros(&disc.grid), 0.1);
    p.kappa = KappaMode::Fixed(5.0);
    let d = solve_dual(&p, 5.0, &ctx).unwrap();
    assert!(d.theta0.as_slice().iter().all(|&v| v == 0.0));
    let r = synthesize(&p, &ctx).unwrap();
    assert!(r.h.iter().all(|&v| v == 0.0));
    assert!(r.psi_t.as_slice().iter().all(|&v| v == 0.0));
    let f = r.flags;
    assert!(f.target && f.cost && f.a_priori && f.observation);
}

#[test]
fn auto_kappa_needs_calibration() {
    let disc = interval_disc(16);
    let ctx = context(&disc);
    assert!(matches!(synthesize(&problem(unit(&disc, 1), 0.1), &ctx), Err(Error::Usage(_))));
}

#[test]
fn one_iteration_is_not_enough() {
    let disc = interval_disc(16);
    let ctx = context(&disc);
    let mut p = problem(unit(&disc, 1), 0.1);
    p.cg_maxit = 1;
    assert!(matches!(solve_dual(&p, 4.0, &ctx), Err(Error::Convergence { .. })));
}

#[test]
fn tiny_kappa_misses_the_target() {
    let disc = interval_disc(32);
    let ctx = context(&disc);
    let mut p = problem(unit(&disc, 2), 0.1);
    p.kappa = KappaMode::Fixed(1e-6);
    let r = synthesize(&p, &ctx).unwrap();
    assert!(!r.flags.target);
    assert!(r.norm_psi_t > 0.1 * r.norm_psi0);
}

#[test]
fn initial_kappa_from_fitted_constants() {
    let (m1, m2, delta) = dynheat::logconvexity::lemma31_constants(0.5, 2.0, 1.0);
    let k0 = initial_kappa(m1, m2, delta, 0.5, 0.1);
    let want = 20.0 * 4f64.exp();
    assert!((k0 - want).abs() <= 1e-12 * want);
}

#[test]
fn calibration_stops_at_first_passing_kappa() {
    let disc = interval_disc(32);
    let ctx = context(&disc);
    let p = problem(unit(&disc, 4), 0.1);
    let fitted = FittedConstants {
        m1: 2.0,
        m2: 2.0,
        delta: 1.0,
    };
    let cal = calibrate_kappa(&p, &ctx, Some(fitted), 0).unwrap();
    assert_eq!(cal.doublings, 0);
    assert_eq!(cal.kappa, cal.kappa0);
    assert!((cal.kappa0 - 20.0 * 4f64.exp()).abs() < 1e-9);
}

#[test]
fn empty_budget_reports_calibration_failure() {
    let disc = interval_disc(32);
    let ctx = context(&disc);
    let p = problem(unit(&disc, 4), 0.1);
    let tiny = FittedConstants {
        m1: 1e-6,
        m2: 0.0,
        delta: 0.0,
    };
    assert!(matches!(calibrate_kappa(&p, &ctx, Some(tiny), 0), Err(Error::Calibration { .. })));
}

#[test]
fn calibrated_control_is_certified() {
    let disc = interval_disc(32);
    let ctx = context(&disc);
    for seed in 0..5 {
        let p = problem(unit(&disc, seed), 0.1);
        let cal = calibrate_kappa(&p, &ctx, None, MAX_DOUBLINGS).unwrap();
        let r = &cal.result;
        assert!(r.flags.target && r.flags.cost && r.flags.a_priori);
        assert!(r.residuals.cg <= 1e-10 && r.residuals.euler_lagrange <= 1e-10);
        // The optimality system gives Ψ(T) = −ε²ϑ⁰.
        assert!(r.residuals.terminal <= 1e-9);
        let mut zr = rng(100 + seed);
        let mut zetas: Vec<State> = (0..20)
            .map(|_| gaussian(disc.grid.len(), disc.grid.n_bulk, &mut zr))
            .collect();
        zetas.push(State::zeros(&disc.grid));
        let d = verify_duality(r, &p.psi0, &zetas, &ctx).unwrap();
        assert!(d.max_scaled <= 1e-10);
    }
}

#[test]
fn zero_test_state_has_zero_duality_residual() {
    let disc = interval_disc(16);
    let ctx = context(&disc);
    let mut p = problem(unit(&disc, 6), 0.1);
    p.kappa = KappaMode::Fixed(4.0);
    let r = synthesize(&p, &ctx).unwrap();
    let d = verify_duality(&r, &p.psi0, &[State::zeros(&disc.grid)], &ctx).unwrap();
    assert_eq!(d.max_abs, 0.0);
}

#[test]
fn cost_grows_as_eps_shrinks() {
    let disc = interval_disc(32);
    let ctx = context(&disc);
    let members: Vec<State> = (0..5).map(|s| unit(&disc, s)).collect();
    let eps = [0.2, 0.1, 0.05, 0.025, 0.0125];
    let st = cost_study(&problem(members[0].clone(), 0.1), &eps, &members, &ctx, None, MAX_DOUBLINGS).unwrap();
    assert!(st.failure.is_none() && st.monotone && st.passed());
    assert_eq!(st.rows.len(), 5);
    assert!(st.slope.unwrap() > 0.0);
}

#[test]
fn loose_target_gives_zero_rows() {
    let disc = interval_disc(32);
    let ctx = context(&disc);
    let members: Vec<State> = (0..3).map(|s| unit(&disc, s)).collect();
    let row = cost_row(&problem(members[0].clone(), 1.0), 1.0, &members, &ctx, None, 4).unwrap();
    assert_eq!((row.sup_cost, row.members_controlled), (0.0, 0));
    assert!(row.passes);
}

#[test]
fn sweep_must_span_a_decade() {
    assert!(check_sweep(&[0.2, 0.1, 0.05, 0.025]).is_err());
    assert!(check_sweep(&[0.2, 0.1, 0.02]).is_err());
    assert!(check_sweep(&[0.2, 0.1, 0.05, 0.02]).is_ok());
}

#[test]
fn invalid_problems_are_config_errors() {
    let disc = interval_disc(16);
    let ctx = context(&disc);
    let mut p = problem(unit(&disc, 1), 0.1);
    p.eps = 0.0;
    assert!(matches!(solve_dual(&p, 1.0, &ctx), Err(Error::Config(_))));
    let mut p = problem(unit(&disc, 1), 0.1);
    p.tau = 1.0;
    assert!(matches!(solve_dual(&p, 1.0, &ctx), Err(Error::Config(_))));
    let s = Schedule::new(0.0, 1.0, 1e-2, Scheme::CrankNicolson).unwrap();
    assert!(matches!(ControlContext::new(&disc, s, 1.5), Err(Error::Config(_))));
}

#[test]
fn dual_solution_matches_dense_solve() {
    let disc = interval_disc(8);
    let ctx = context(&disc);
    let n = disc.grid.len();
    let p1 = dense_cn(&disc, 1e-2);
    let (tail, full) = (p1.pow(50), p1.pow(100));
    let er = DMatrix::from_fn(n, n, |i, j| {
        if i == j && disc.ops.omega.contains(&i) {
            1.0
        } else {
            0.0
        }
    });
    let (kappa, eps) = (2.0, 0.1);
    let g = &tail * er * &tail * (kappa * kappa) + DMatrix::<f64>::identity(n, n) * (eps * eps);
    let psi0 = unit(&disc, 8);
    let rhs = -(&full * DVector::from_column_slice(psi0.as_slice()));
    let want = g.lu().solve(&rhs).unwrap();
    let got = solve_dual(&problem(psi0, eps), kappa, &ctx).unwrap();
    let err = (DVector::from_column_slice(got.theta0.as_slice()) - &want).abs().max();
    assert!(err <= 1e-8 * want.abs().max(), "error {err}");
}
