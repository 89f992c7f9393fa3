//! Time stepping of `∂ₜU = AU` and of the single-impulse problem.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
#[cfg(not(any(feature = "std", test)))]
use num_traits::Float;

use crate::discretize::{OperatorSet, State};
use crate::linalg::conjugate_gradient;
use crate::{Error, Result};

/// Systems up to this size are factored densely instead of solved by CG.
pub const DIRECT_MAX: usize = 512;
/// Relative residual for the iterative inner solves.
pub const SOLVE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    CrankNicolson,
    BackwardEuler,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub scheme: Scheme,
}

impl Schedule {
    pub fn new(t0: f64, t1: f64, dt: f64, scheme: Scheme) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return Err(Error::Config(format!(
                "time window [{t0}, {t1}] must satisfy t0 < t1"
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time.dt = {dt} must be positive")));
        }
        let s = Schedule { t0, t1, dt, scheme };
        let n = s.steps();
        if n == 0 || ((n as f64) * dt - (t1 - t0)).abs() > 1e-9 * (t1 - t0) {
            return Err(Error::Config(format!(
                "time.dt = {dt} does not divide the window length {}",
                t1 - t0
            )));
        }
        Ok(s)
    }

    pub fn steps(&self) -> usize {
        ((self.t1 - self.t0) / self.dt).round() as usize
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps() {
            self.t1
        } else {
            self.t0 + k as f64 * self.dt
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps()).map(|k| self.time(k)).collect()
    }
}

enum Solver {
    Direct(Cholesky<f64, Dyn>),
    Iterative { diag_inv: Vec<f64> },
}

/// One-step map `U ↦ (M + cK)⁻¹ (M − c′K) U` with a solver prepared once.
pub struct Stepper<'a> {
    ops: &'a OperatorSet,
    dt: f64,
    scheme: Scheme,
    solver: Solver,
}

impl<'a> Stepper<'a> {
    pub fn new(ops: &'a OperatorSet, dt: f64, scheme: Scheme) -> Result<Self> {
        let c = Self::implicit_weight(dt, scheme);
        let n = ops.len();
        let solver = if n <= DIRECT_MAX {
            let mut a = DMatrix::from_row_slice(n, n, &ops.dense_stiffness());
            a *= c;
            for i in 0..n {
                a[(i, i)] += ops.mass[i];
            }
            let chol = a.cholesky().ok_or_else(|| {
                Error::Assembly("time-step matrix is not positive definite".into())
            })?;
            Solver::Direct(chol)
        } else {
            let diag_inv = ops
                .mass
                .iter()
                .zip(&ops.stiffness_diag)
                .map(|(m, k)| 1.0 / (m + c * k))
                .collect();
            Solver::Iterative { diag_inv }
        };
        Ok(Stepper {
            ops,
            dt,
            scheme,
            solver,
        })
    }

    fn implicit_weight(dt: f64, scheme: Scheme) -> f64 {
        match scheme {
            Scheme::CrankNicolson => 0.5 * dt,
            Scheme::BackwardEuler => dt,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn ops(&self) -> &OperatorSet {
        self.ops
    }

    pub fn step(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        let ops = self.ops;
        let n = ops.len();
        let c = Self::implicit_weight(self.dt, self.scheme);
        let mut rhs = vec![0.0; n];
        if self.scheme == Scheme::CrankNicolson {
            ops.apply_k(u, &mut rhs);
            for v in rhs.iter_mut() {
                *v *= -c;
            }
        }
        for i in 0..n {
            rhs[i] += ops.mass[i] * u[i];
        }
        match &self.solver {
            Solver::Direct(chol) => {
                let x = chol.solve(&DVector::from_vec(rhs));
                out.copy_from_slice(x.as_slice());
            }
            Solver::Iterative { diag_inv } => {
                out.copy_from_slice(u);
                let apply = |x: &[f64], y: &mut [f64]| {
                    ops.apply_k(x, y);
                    for i in 0..n {
                        y[i] = ops.mass[i] * x[i] + c * y[i];
                    }
                    Ok(())
                };
                let ones = vec![1.0; n];
                let o = conjugate_gradient(
                    apply,
                    &ones,
                    &rhs,
                    out,
                    Some(diag_inv),
                    SOLVE_TOL,
                    20 * n + 100,
                )?;
                if !o.converged {
                    return Err(Error::Solver {
                        iterations: o.iterations,
                        residual: o.residual,
                    });
                }
            }
        }
        Ok(())
    }

    /// Applies `steps` steps.
    pub fn advance(&self, u: &State, steps: usize) -> Result<State> {
        let mut cur = u.as_slice().to_vec();
        let mut next = vec![0.0; cur.len()];
        for _ in 0..steps {
            self.step(&cur, &mut next)?;
            core::mem::swap(&mut cur, &mut next);
        }
        Ok(State::from_vec(cur, u.n_bulk()))
    }

    /// All intermediate states, the initial one included.
    pub fn trajectory(&self, u: &State, steps: usize) -> Result<Vec<State>> {
        let mut out = Vec::with_capacity(steps + 1);
        out.push(u.clone());
        let mut next = vec![0.0; u.len()];
        for k in 0..steps {
            self.step(out[k].as_slice(), &mut next)?;
            out.push(State::from_vec(next.clone(), u.n_bulk()));
        }
        Ok(out)
    }
}

/// `e^{(t1−t0)A} U0` in the discrete sense.
pub fn propagate(u0: &State, sched: &Schedule, ops: &OperatorSet) -> Result<State> {
    Stepper::new(ops, sched.dt, sched.scheme)?.advance(u0, sched.steps())
}

pub fn propagate_trajectory(u0: &State, sched: &Schedule, ops: &OperatorSet) -> Result<Vec<State>> {
    Stepper::new(ops, sched.dt, sched.scheme)?.trajectory(u0, sched.steps())
}

/// A single kick `(𝟙_ω h, 0)` at time `τ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImpulseEvent {
    pub tau: f64,
    /// Values on the `ω` nodes.
    pub payload: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImpulsiveRun {
    pub state: State,
    /// `τ` after rounding to the step grid.
    pub tau_used: f64,
    pub tau_step: usize,
}

/// Rounds `τ` to the step grid of `sched`; errors unless the result is strictly inside.
pub fn impulse_step(tau: f64, sched: &Schedule) -> Result<usize> {
    if !(tau > sched.t0 && tau < sched.t1) {
        return Err(Error::Config(format!(
            "impulse.tau = {tau} must lie in ({}, {})",
            sched.t0, sched.t1
        )));
    }
    let k = ((tau - sched.t0) / sched.dt).round() as usize;
    if k == 0 || k >= sched.steps() {
        return Err(Error::Config(format!(
            "impulse.tau = {tau} rounds onto an endpoint of the step grid"
        )));
    }
    Ok(k)
}

/// `e^{TA}Ψ⁰ + e^{(T−τ)A}(𝟙_ω h, 0)`: propagate to `τ`, add the kick to the left limit,
/// propagate to the end of the schedule.
pub fn propagate_impulsive(
    psi0: &State,
    event: &ImpulseEvent,
    sched: &Schedule,
    ops: &OperatorSet,
) -> Result<ImpulsiveRun> {
    let stepper = Stepper::new(ops, sched.dt, sched.scheme)?;
    propagate_impulsive_with(&stepper, psi0, event, sched)
}

pub fn propagate_impulsive_with(
    stepper: &Stepper<'_>,
    psi0: &State,
    event: &ImpulseEvent,
    sched: &Schedule,
) -> Result<ImpulsiveRun> {
    let ops = stepper.ops();
    let k = impulse_step(event.tau, sched)?;
    if event.payload.len() != ops.omega.len() {
        return Err(Error::Usage(format!(
            "payload has {} entries, omega has {} nodes",
            event.payload.len(),
            ops.omega.len()
        )));
    }
    if event.payload.iter().any(|v| !v.is_finite()) {
        return Err(Error::Usage("payload must be finite".into()));
    }
    let mut mid = stepper.advance(psi0, k)?;
    for (&i, &h) in ops.omega.iter().zip(&event.payload) {
        mid.as_mut_slice()[i] += h;
    }
    let state = stepper.advance(&mid, sched.steps() - k)?;
    Ok(ImpulsiveRun {
        state,
        tau_used: sched.time(k),
        tau_step: k,
    })
}
