use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, SymmetricEigen};
#[cfg(not(any(feature = "std", test)))]
use num_traits::Float;

use super::weighted::{build_weighted_operators, WeightedOperators};
use crate::discretize::{Discretization, State};
use crate::evolve::{Schedule, Stepper};
use crate::geometry::WeightParams;
use crate::linalg::wdot;
use crate::{Error, Result};

/// Relative slack used when checking the Step-4 bound.
pub const BOUND_SLACK: f64 = 1e-8;

/// Time series of the weighted state along one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyTrace {
    pub times: Vec<f64>,
    pub upsilon: Vec<f64>,
    /// `‖F‖²`.
    pub norm_f2: Vec<f64>,
    /// `𝒩`.
    pub n: Vec<f64>,
    /// `⟨−S′F,F⟩ − 2⟨SF,AantiF⟩`.
    pub q: Vec<f64>,
    /// `⟨−SF,F⟩`.
    pub s_form: Vec<f64>,
    /// `½(‖F_{k+1}‖² − ‖F_k‖²)/Δt + ⟨−S F_m, F_m⟩` at step midpoints.
    pub energy_residual: Vec<f64>,
    /// Centered `d𝒩/dt` at interior times (index `k` refers to `times[k + 1]`).
    pub dn_dt: Vec<f64>,
    /// Smallest `C ≥ 0` with `Q ≤ (1+C₀)/Υ⟨−SF,F⟩ + C/h²‖F‖²` along this trace.
    pub c_trace: f64,
    /// Smallest `C ≥ 0` with `d𝒩/dt ≤ (1+C₀)/Υ 𝒩 + C/h²` (finite differences).
    pub c_dn: f64,
    pub c0: f64,
    pub h: f64,
    pub t_final: f64,
}

impl FrequencyTrace {
    /// `(1+C₀)/Υ⟨−SF,F⟩ + C/h²‖F‖²` at every recorded time.
    pub fn bound(&self, c: f64) -> Vec<f64> {
        (0..self.times.len())
            .map(|k| {
                (1.0 + self.c0) / self.upsilon[k] * self.s_form[k]
                    + c / (self.h * self.h) * self.norm_f2[k]
            })
            .collect()
    }

    /// Recorded times at which `Q` exceeds the bound by more than the relative slack.
    pub fn bound_violations(&self, c: f64, slack: f64) -> usize {
        self.bound(c)
            .iter()
            .zip(&self.q)
            .filter(|(b, q)| **q - **b > slack * b.abs().max(q.abs()))
            .count()
    }

    pub fn max_energy_residual(&self) -> f64 {
        self.energy_residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Index of a recorded time, matched to rounding tolerance.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * self.t_final.max(1.0);
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }
}

fn step4_ratio(c0: f64, h: f64, y: f64, q: f64, s_form: f64, norm2: f64) -> f64 {
    h * h * (q - (1.0 + c0) / y * s_form) / norm2
}

fn check_window(sched: &Schedule, params: &WeightParams) -> Result<()> {
    params.check_time(sched.t0)?;
    params.check_time(sched.t1)
}

/// Propagates `U0`, records the weighted quantities and the energy-identity residual.
pub fn run_trace(
    u0: &State,
    params: &WeightParams,
    sched: &Schedule,
    disc: &Discretization,
) -> Result<FrequencyTrace> {
    check_window(sched, params)?;
    if u0.as_slice().iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateData("initial state is zero".into()));
    }
    let stepper = Stepper::new(&disc.ops, sched.dt, sched.scheme)?;
    let traj = stepper.trajectory(u0, sched.steps())?;
    trace_from_trajectory(&traj, params, sched, disc)
}

/// Same as [`run_trace`] for an already computed trajectory on the schedule's time grid.
pub fn trace_from_trajectory(
    traj: &[State],
    params: &WeightParams,
    sched: &Schedule,
    disc: &Discretization,
) -> Result<FrequencyTrace> {
    check_window(sched, params)?;
    let times = sched.times();
    if traj.len() != times.len() {
        return Err(Error::Usage(
            "trajectory length does not match the schedule".into(),
        ));
    }
    let c0 = params.c0();
    let h = params.h;
    let mut tr = FrequencyTrace {
        times: times.clone(),
        upsilon: Vec::with_capacity(times.len()),
        norm_f2: Vec::with_capacity(times.len()),
        n: Vec::with_capacity(times.len()),
        q: Vec::with_capacity(times.len()),
        s_form: Vec::with_capacity(times.len()),
        energy_residual: Vec::with_capacity(times.len() - 1),
        dn_dt: Vec::new(),
        c_trace: 0.0,
        c_dn: 0.0,
        c0,
        h,
        t_final: params.t_final,
    };
    let n = disc.ops.len();
    let mut f = vec![0.0; n];
    for (k, &t) in times.iter().enumerate() {
        let w = build_weighted_operators(t, disc, params)?;
        weigh(&w, traj[k].as_slice(), &mut f);
        let fm = w.forms(&f);
        if !(fm.norm2 > 0.0 && fm.norm2.is_finite()) {
            return Err(Error::DegenerateData(alloc::format!(
                "|F|^2 = {} at t = {t}",
                fm.norm2
            )));
        }
        tr.upsilon.push(w.upsilon);
        tr.norm_f2.push(fm.norm2);
        tr.n.push(fm.s_form / fm.norm2);
        tr.q.push(fm.q);
        tr.s_form.push(fm.s_form);
        tr.c_trace = tr
            .c_trace
            .max(step4_ratio(c0, h, w.upsilon, fm.q, fm.s_form, fm.norm2));
    }
    let mut mid = vec![0.0; n];
    for k in 0..times.len() - 1 {
        let dt = times[k + 1] - times[k];
        let w = build_weighted_operators(0.5 * (times[k] + times[k + 1]), disc, params)?;
        let (a, b) = (traj[k].as_slice(), traj[k + 1].as_slice());
        for i in 0..n {
            mid[i] = 0.5 * (a[i] + b[i]) * w.e[i];
        }
        let fm = w.forms(&mid);
        tr.energy_residual
            .push(0.5 * (tr.norm_f2[k + 1] - tr.norm_f2[k]) / dt + fm.s_form);
    }
    for k in 1..times.len().saturating_sub(1) {
        let d = (tr.n[k + 1] - tr.n[k - 1]) / (times[k + 1] - times[k - 1]);
        tr.dn_dt.push(d);
        tr.c_dn = tr
            .c_dn
            .max(h * h * (d - (1.0 + c0) / tr.upsilon[k] * tr.n[k]));
    }
    Ok(tr)
}

fn weigh(w: &WeightedOperators<'_>, u: &[f64], out: &mut [f64]) {
    for ((o, u), e) in out.iter_mut().zip(u).zip(&w.e) {
        *o = u * e;
    }
}

/// Fits the Step-4 constant on a training set of trajectories.
///
/// At every recorded time the bound is required for every state in the span of the
/// training states (a Rayleigh–Ritz problem on that span), so the result is never
/// smaller than the pointwise maximum over the individual traces.
pub fn fit_step4_constant(
    trajectories: &[Vec<State>],
    params: &WeightParams,
    sched: &Schedule,
    disc: &Discretization,
) -> Result<f64> {
    check_window(sched, params)?;
    if trajectories.is_empty() {
        return Err(Error::Config("no training trajectories".into()));
    }
    let times = sched.times();
    if trajectories.iter().any(|tr| tr.len() != times.len()) {
        return Err(Error::Usage(
            "trajectory length does not match the schedule".into(),
        ));
    }
    let mut c = 0.0f64;
    for (k, &t) in times.iter().enumerate() {
        let w = build_weighted_operators(t, disc, params)?;
        let basis = orthonormal_basis(&w, trajectories.iter().map(|tr| tr[k].as_slice()));
        if basis.is_empty() {
            return Err(Error::DegenerateData(alloc::format!(
                "all training states vanish at t = {t}"
            )));
        }
        c = c.max(params.h * params.h * ritz_max(&w, &basis, params.c0()));
    }
    Ok(c)
}

/// `M`-orthonormal basis of `{E uᵢ}` by twice-iterated Gram–Schmidt, dropping directions
/// that lose all but `1e-10` of their norm.
fn orthonormal_basis<'b>(
    w: &WeightedOperators<'_>,
    states: impl Iterator<Item = &'b [f64]>,
) -> Vec<Vec<f64>> {
    let m = &w.ops().mass;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for u in states {
        let mut v: Vec<f64> = u.iter().zip(&w.e).map(|(u, e)| u * e).collect();
        let n0 = wdot(m, &v, &v).sqrt();
        if n0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for b in &basis {
                let p = wdot(m, &v, b);
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= p * y;
                }
            }
        }
        let n1 = wdot(m, &v, &v).sqrt();
        if n1 > 1e-10 * n0 {
            v.iter_mut().for_each(|x| *x /= n1);
            basis.push(v);
        }
    }
    basis
}

/// Largest eigenvalue of the Step-4 form `Q − (1+C₀)/Υ⟨−S·,·⟩` restricted to the basis.
fn ritz_max(w: &WeightedOperators<'_>, basis: &[Vec<f64>], c0: f64) -> f64 {
    let m = &w.ops().mass;
    let r = basis.len();
    let n = m.len();
    let mut s = Vec::with_capacity(r);
    let mut a = Vec::with_capacity(r);
    let mut sp = Vec::with_capacity(r);
    for b in basis {
        let (mut x, mut y, mut z) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        w.apply_s(b, &mut x);
        w.apply_anti(b, &mut y);
        w.apply_s_prime(b, &mut z);
        s.push(x);
        a.push(y);
        sp.push(z);
    }
    let g = (1.0 + c0) / w.upsilon;
    let mut h = DMatrix::<f64>::zeros(r, r);
    for i in 0..r {
        for j in i..r {
            let v = -wdot(m, &sp[i], &basis[j]) - wdot(m, &s[i], &a[j]) - wdot(m, &s[j], &a[i])
                + g * wdot(m, &s[i], &basis[j]);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
}
