mod common;

use common::*;
use dynheat::control::{gramian_apply, ControlContext};
use dynheat::discretize::{assemble, Resolution, State};
use dynheat::evolve::{Schedule, Scheme, Stepper};
use dynheat::geometry::{DomainSpec, WeightParams};
use dynheat::logconvexity::{build_weighted_operators, unweighted_transform, weighted_transform};
use dynheat::linalg::wdot;
use proptest::prelude::*;

fn domain() -> impl Strategy<Value = (DomainSpec, Resolution)> {
    prop_oneof![
        (-2.0..0.0f64, 0.5..3.0f64, 3usize..40).prop_map(|(a, len, n)| {
            let b = a + len;
            let c = 0.5 * (a + b);
            (
                DomainSpec::interval(a, b, c, c - 0.3 * len, c + 0.3 * len).unwrap(),
                Resolution::Interval { n },
            )
        }),
        (0.5..2.0f64, 3usize..10, 3usize..16).prop_map(|(r, nr, nt)| {
            (
                DomainSpec::disk([0.0, 0.0], r, [0.0, 0.0], [0.0, 0.0], 0.6 * r).unwrap(),
                Resolution::Disk { nr, ntheta: nt },
            )
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn operator_is_self_adjoint_and_dissipative((d, res) in domain(), seed in any::<u64>()) {
        let disc = assemble(&d, res).unwrap();
        let mut r = rng(seed);
        let u = gaussian(disc.grid.len(), disc.grid.n_bulk, &mut r);
        let v = gaussian(disc.grid.len(), disc.grid.n_bulk, &mut r);
        let ops = &disc.ops;
        let (au, av) = (ops.apply(&u), ops.apply(&v));
        let scale = ops.norm(&au).unwrap() * ops.norm(&v).unwrap() + ops.norm(&u).unwrap() * ops.norm(&av).unwrap();
        prop_assert!((ops.inner(&au, &v).unwrap() - ops.inner(&u, &av).unwrap()).abs() <= 1e-12 * scale);
        prop_assert!(ops.inner(&au, &u).unwrap() <= 1e-12 * ops.inner(&u, &u).unwrap());
        let one = State::constant(&disc.grid, 1.0);
        prop_assert!(ops.norm(&ops.apply(&one)).unwrap() <= 1e-12 * ops.norm(&one).unwrap());
    }

    #[test]
    fn steps_contract_and_are_linear((d, res) in domain(), seed in any::<u64>(), dt in 1e-3..0.1f64, be in any::<bool>()) {
        let disc = assemble(&d, res).unwrap();
        let scheme = if be { Scheme::BackwardEuler } else { Scheme::CrankNicolson };
        let st = Stepper::new(&disc.ops, dt, scheme).unwrap();
        let mut r = rng(seed);
        let u = gaussian(disc.grid.len(), disc.grid.n_bulk, &mut r);
        let v = gaussian(disc.grid.len(), disc.grid.n_bulk, &mut r);
        let (pu, pv) = (st.advance(&u, 3).unwrap(), st.advance(&v, 3).unwrap());
        prop_assert!(disc.ops.norm(&pu).unwrap() <= disc.ops.norm(&u).unwrap() * (1.0 + 1e-13));
        let sum = State::from_vec(u.as_slice().iter().zip(v.as_slice()).map(|(a, b)| 2.0 * a - b).collect(), u.n_bulk());
        let want = State::from_vec(pu.as_slice().iter().zip(pv.as_slice()).map(|(a, b)| 2.0 * a - b).collect(), u.n_bulk());
        prop_assert!(rel_dist(&disc, &st.advance(&sum, 3).unwrap(), &want) <= 1e-10);
    }

    #[test]
    fn weighted_split_is_exact((d, res) in domain(), seed in any::<u64>(), s in 0.05..0.95f64, h in 0.2..2.0f64, frac in 0.0..1.0f64) {
        let disc = assemble(&d, res).unwrap();
        let p = WeightParams::new(s, h, 1.0).unwrap();
        let t = frac;
        let w = build_weighted_operators(t, &disc, &p).unwrap();
        let mut r = rng(seed);
        let f = gaussian(disc.grid.len(), disc.grid.n_bulk, &mut r);
        let g = gaussian(disc.grid.len(), disc.grid.n_bulk, &mut r);
        let n = f.len();
        let m = &disc.ops.mass;
        let (mut sf, mut sg, mut af, mut ag) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        w.apply_s(f.as_slice(), &mut sf);
        w.apply_s(g.as_slice(), &mut sg);
        w.apply_anti(f.as_slice(), &mut af);
        w.apply_anti(g.as_slice(), &mut ag);
        let scale = (wdot(m, &sf, &sf) * wdot(m, g.as_slice(), g.as_slice())).sqrt()
            + (wdot(m, &af, &af) * wdot(m, g.as_slice(), g.as_slice())).sqrt() + 1e-300;
        prop_assert!((wdot(m, &sf, g.as_slice()) - wdot(m, f.as_slice(), &sg)).abs() <= 1e-12 * scale);
        prop_assert!((wdot(m, &af, g.as_slice()) + wdot(m, f.as_slice(), &ag)).abs() <= 1e-12 * scale);
        let back = unweighted_transform(&weighted_transform(&f, t, &p, &disc).unwrap(), t, &p, &disc).unwrap();
        prop_assert!(rel_dist(&disc, &back, &f) <= 1e-14);
    }

    #[test]
    fn gramian_is_coercive(seed in any::<u64>(), kappa in 0.0..10.0f64, eps in 0.01..1.0f64, n in 4usize..24) {
        let disc = interval_disc(n);
        let s = Schedule::new(0.0, 1.0, 0.05, Scheme::CrankNicolson).unwrap();
        let ctx = ControlContext::new(&disc, s, 0.5).unwrap();
        let mut r = rng(seed);
        let z = gaussian(disc.grid.len(), disc.grid.n_bulk, &mut r);
        let y = gaussian(disc.grid.len(), disc.grid.n_bulk, &mut r);
        let gz = gramian_apply(&z, kappa, eps, &ctx).unwrap();
        let gy = gramian_apply(&y, kappa, eps, &ctx).unwrap();
        let zz = disc.ops.inner(&z, &z).unwrap();
        prop_assert!(disc.ops.inner(&gz, &z).unwrap() >= eps * eps * zz * (1.0 - 1e-12));
        let (a, b) = (disc.ops.inner(&gz, &y).unwrap(), disc.ops.inner(&z, &gy).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * (a.abs() + b.abs() + zz));
    }
}

fn point_in((d, _): &(DomainSpec, Resolution), u: f64, v: f64) -> [f64; 2] {
    let c = d.center();
    let r = 0.999 * d.size();
    match d.dim() {
        1 => [c[0] + r * (2.0 * u - 1.0), 0.0],
        _ => {
            let (rho, th) = (r * u.sqrt(), 2.0 * std::f64::consts::PI * v);
            [c[0] + rho * th.cos(), c[1] + rho * th.sin()]
        }
    }
}

proptest! {
    #[test]
    fn gauge_is_convex_and_phi_is_eikonal(dom in domain(), u in prop::array::uniform4(0.0..1.0f64)) {
        use dynheat::geometry::{gauge_value, weight_phi_bundle};
        let (d, _) = &dom;
        let x = point_in(&dom, u[0], u[1]);
        let y = point_in(&dom, u[2], u[3]);
        let m = [0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])];
        prop_assert!(gauge_value(d, m) <= 0.5 * (gauge_value(d, x) + gauge_value(d, y)) + 1e-15);
        prop_assert!(gauge_value(d, x) < 1.0);
        let b = weight_phi_bundle(d, x);
        prop_assert!((b.phi + b.grad[0] * b.grad[0] + b.grad[1] * b.grad[1]).abs() <= 1e-15 * (1.0 + b.phi.abs()));
        prop_assert!(b.phi <= 0.0);
    }

    #[test]
    fn boundary_nodes_have_unit_gauge(dom in domain()) {
        let (d, res) = &dom;
        let disc = assemble(d, *res).unwrap();
        for &x in disc.grid.trace_nodes() {
            prop_assert!((dynheat::geometry::gauge_value(d, x) - 1.0).abs() <= 1e-12);
        }
    }
}
