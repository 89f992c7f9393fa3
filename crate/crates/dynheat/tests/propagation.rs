mod common;

use common::*;
use dynheat::discretize::State;
use dynheat::evolve::*;

#[test]
fn constant_state_does_not_drift() {
    for disc in [interval_disc(32), disk_disc(6, 16)] {
        let c = State::constant(&disc.grid, 1.7);
        let s = Schedule::new(0.0, 1.0, 1e-2, Scheme::CrankNicolson).unwrap();
        let out = propagate(&c, &s, &disc.ops).unwrap();
        let drift = out
            .as_slice()
            .iter()
            .map(|v| (v - 1.7).abs())
            .fold(0.0, f64::max);
        assert!(drift <= 1e-10, "drift {drift}");
    }
}

#[test]
fn matches_dense_exponential() {
    let disc = interval_disc(8);
    let e = expm(&disc, 1.0);
    let mut r = rng(11);
    for _ in 0..5 {
        let u = gaussian(disc.grid.len(), disc.grid.n_bulk, &mut r);
        let s = Schedule::new(0.0, 1.0, 1e-3, Scheme::CrankNicolson).unwrap();
        let got = propagate(&u, &s, &disc.ops).unwrap();
        let err = rel_dist(&disc, &got, &apply_dense(&e, &u));
        assert!(err <= 1e-3, "relative error {err}");
    }
}

#[test]
fn every_step_contracts() {
    for scheme in [Scheme::CrankNicolson, Scheme::BackwardEuler] {
        let disc = disk_disc(6, 16);
        let u = gaussian(disc.grid.len(), disc.grid.n_bulk, &mut rng(3));
        let traj = Stepper::new(&disc.ops, 1e-2, scheme)
            .unwrap()
            .trajectory(&u, 100)
            .unwrap();
        assert_eq!(traj.len(), 101);
        for w in traj.windows(2) {
            assert!(disc.ops.norm(&w[1]).unwrap() <= disc.ops.norm(&w[0]).unwrap() * (1.0 + 1e-14));
        }
    }
}

fn temporal_order(scheme: Scheme) -> f64 {
    let disc = interval_disc(16);
    let u = smooth_state(&disc, &mut rng(5));
    let exact = apply_dense(&expm(&disc, 0.5), &u);
    let errs: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| {
            let s = Schedule::new(0.0, 0.5, dt, scheme).unwrap();
            rel_dist(&disc, &propagate(&u, &s, &disc.ops).unwrap(), &exact)
        })
        .collect();
    (errs[1] / errs[2]).log2()
}

#[test]
fn crank_nicolson_is_second_order() {
    let p = temporal_order(Scheme::CrankNicolson);
    assert!((p - 2.0).abs() < 0.2, "order {p}");
}

#[test]
fn backward_euler_is_first_order() {
    let p = temporal_order(Scheme::BackwardEuler);
    assert!((p - 1.0).abs() < 0.2, "order {p}");
}

#[test]
fn semigroup_property() {
    let disc = disk_disc(6, 16);
    let u = gaussian(disc.grid.len(), disc.grid.n_bulk, &mut rng(9));
    let s = |a, b| Schedule::new(a, b, 1e-2, Scheme::CrankNicolson).unwrap();
    let whole = propagate(&u, &s(0.0, 0.6), &disc.ops).unwrap();
    let half = propagate(&u, &s(0.0, 0.25), &disc.ops).unwrap();
    let split = propagate(&half, &s(0.25, 0.6), &disc.ops).unwrap();
    assert!(rel_dist(&disc, &split, &whole) < 1e-12);
}

#[test]
fn large_grids_use_the_iterative_path() {
    // 40 × 16 rings give more unknowns than the dense factorization handles.
    let disc = disk_disc(40, 16);
    assert!(disc.grid.len() > 512);
    let u = gaussian(disc.grid.len(), disc.grid.n_bulk, &mut rng(1));
    let s = Schedule::new(0.0, 0.05, 1e-2, Scheme::CrankNicolson).unwrap();
    let out = propagate(&u, &s, &disc.ops).unwrap();
    // The mean ⟨U, 1⟩ is conserved.
    let one = State::constant(&disc.grid, 1.0);
    let (m0, m1) = (
        disc.ops.inner(&u, &one).unwrap(),
        disc.ops.inner(&out, &one).unwrap(),
    );
    assert!((m0 - m1).abs() < 1e-9 * disc.ops.norm(&u).unwrap());
}

#[test]
fn zero_payload_matches_plain_propagation() {
    let disc = interval_disc(32);
    let u = gaussian(disc.grid.len(), disc.grid.n_bulk, &mut rng(2));
    let s = Schedule::new(0.0, 1.0, 1e-2, Scheme::CrankNicolson).unwrap();
    let ev = ImpulseEvent {
        tau: 0.5,
        payload: vec![0.0; disc.ops.omega.len()],
    };
    let run = propagate_impulsive(&u, &ev, &s, &disc.ops).unwrap();
    assert_eq!(run.state, propagate(&u, &s, &disc.ops).unwrap());
}

#[test]
fn impulse_from_rest_is_superposition() {
    let disc = interval_disc(32);
    let mut r = rng(4);
    let v = gaussian(disc.ops.omega.len(), disc.ops.omega.len(), &mut r).into_vec();
    let s = Schedule::new(0.0, 1.0, 1e-2, Scheme::CrankNicolson).unwrap();
    let run = propagate_impulsive(
        &State::zeros(&disc.grid),
        &ImpulseEvent {
            tau: 0.5,
            payload: v.clone(),
        },
        &s,
        &disc.ops,
    )
    .unwrap();
    assert_eq!(run.tau_used, 0.5);
    let tail = Schedule::new(0.5, 1.0, 1e-2, Scheme::CrankNicolson).unwrap();
    let want = propagate(&disc.ops.embed(&v), &tail, &disc.ops).unwrap();
    assert!(rel_dist(&disc, &run.state, &want) <= 1e-12);
}
