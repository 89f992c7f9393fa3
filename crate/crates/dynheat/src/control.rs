//! Single-impulse approximate null control by minimizing
//! `J_ε(ϑ⁰) = κ²/2 ‖ϑ(T−τ)‖²_ω + ε²/2 ‖ϑ⁰‖² + ⟨e^{TA}Ψ⁰, ϑ⁰⟩`.
//!
//! The minimizer solves the Gramian system `G ϑ⁰ = −e^{TA}Ψ⁰` with
//! `G = κ² e^{(T−τ)A} E_ω R_ω e^{(T−τ)A} + ε²`; `A` is self-adjoint, so the adjoint flow is
//! realized by forward propagation.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(any(feature = "std", test)))]
use num_traits::Float;

use crate::discretize::{Discretization, State};
use crate::evolve::{impulse_step, propagate_impulsive_with, ImpulseEvent, Schedule, Stepper};
use crate::linalg::{conjugate_gradient, wdot};
use crate::{Error, Result};

/// Relative slack of the cost certificate.
pub const COST_SLACK: f64 = 1e-8;
/// Default doubling budget of the κ calibration.
pub const MAX_DOUBLINGS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KappaMode {
    Auto,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlProblem {
    pub psi0: State,
    pub tau: f64,
    pub t_final: f64,
    pub eps: f64,
    pub kappa: KappaMode,
    pub cg_tol: f64,
    pub cg_maxit: usize,
}

impl ControlProblem {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < self.t_final) {
            return Err(Error::Config(format!(
                "impulse.tau = {} must lie in (0, T = {})",
                self.tau, self.t_final
            )));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Config(format!(
                "control.eps = {} must be positive",
                self.eps
            )));
        }
        if let KappaMode::Fixed(k) = self.kappa {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::Config(format!(
                    "control.kappa = {k} must be positive"
                )));
            }
        }
        if !(self.cg_tol > 0.0) || self.cg_maxit == 0 {
            return Err(Error::Config(
                "control.cg_tol must be positive and control.cg_maxit nonzero".into(),
            ));
        }
        Ok(())
    }
}

/// Propagators shared by every control solve on one grid and schedule.
pub struct ControlContext<'a> {
    pub disc: &'a Discretization,
    pub sched: Schedule,
    pub stepper: Stepper<'a>,
    pub tau_step: usize,
}

impl<'a> ControlContext<'a> {
    /// `sched` must span `[0, T]`.
    pub fn new(disc: &'a Discretization, sched: Schedule, tau: f64) -> Result<Self> {
        if sched.t0 != 0.0 {
            return Err(Error::Config("control schedules start at t = 0".into()));
        }
        let tau_step = impulse_step(tau, &sched)?;
        Ok(ControlContext {
            disc,
            sched,
            stepper: Stepper::new(&disc.ops, sched.dt, sched.scheme)?,
            tau_step,
        })
    }

    pub fn tau_used(&self) -> f64 {
        self.sched.time(self.tau_step)
    }

    /// Steps from `τ` to `T`.
    pub fn tail_steps(&self) -> usize {
        self.sched.steps() - self.tau_step
    }

    /// `T − τ` after rounding `τ`.
    pub fn tail(&self) -> f64 {
        self.sched.t1 - self.tau_used()
    }

    fn check(&self, prob: &ControlProblem) -> Result<()> {
        prob.validate()?;
        if (prob.t_final - self.sched.t1).abs() > 1e-12 * self.sched.t1 {
            return Err(Error::Config(format!(
                "problem T = {} differs from the schedule end {}",
                prob.t_final, self.sched.t1
            )));
        }
        if impulse_step(prob.tau, &self.sched)? != self.tau_step {
            return Err(Error::Config(
                "problem tau differs from the context tau".into(),
            ));
        }
        Ok(())
    }
}

/// `κ² e^{(T−τ)A} E_ω R_ω e^{(T−τ)A} ζ⁰ + ε² ζ⁰`.
pub fn gramian_apply(
    zeta0: &State,
    kappa: f64,
    eps: f64,
    ctx: &ControlContext<'_>,
) -> Result<State> {
    let ops = &ctx.disc.ops;
    let mut out = zeta0.scaled(eps * eps);
    if kappa == 0.0 {
        return Ok(out);
    }
    let z = ctx.stepper.advance(zeta0, ctx.tail_steps())?;
    let v = ops.embed(&ops.restrict(z.as_slice()));
    let w = ctx.stepper.advance(&v, ctx.tail_steps())?;
    for (o, w) in out.as_mut_slice().iter_mut().zip(w.as_slice()) {
        *o += kappa * kappa * w;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution {
    pub theta0: State,
    /// CG's own relative residual.
    pub cg_residual: f64,
    /// `‖Gϑ⁰ − b‖_M/‖b‖_M` recomputed with one extra Gramian application.
    pub el_residual: f64,
    pub iterations: usize,
    /// Extreme Lanczos Ritz values of `G` from the CG coefficients.
    pub ritz: Option<(f64, f64)>,
}

/// Solves `G ϑ⁰ = −e^{TA}Ψ⁰` by CG in the `M`-inner product.
pub fn solve_dual(
    prob: &ControlProblem,
    kappa: f64,
    ctx: &ControlContext<'_>,
) -> Result<DualSolution> {
    ctx.check(prob)?;
    let ops = &ctx.disc.ops;
    let nb = prob.psi0.n_bulk();
    let free = ctx.stepper.advance(&prob.psi0, ctx.sched.steps())?;
    let b: Vec<f64> = free.as_slice().iter().map(|v| -v).collect();
    let mut x = vec![0.0; b.len()];
    let apply = |u: &[f64], out: &mut [f64]| {
        let g = gramian_apply(&State::from_vec(u.to_vec(), nb), kappa, prob.eps, ctx)?;
        out.copy_from_slice(g.as_slice());
        Ok(())
    };
    let o = conjugate_gradient(
        apply,
        &ops.mass,
        &b,
        &mut x,
        None,
        prob.cg_tol,
        prob.cg_maxit,
    )?;
    if !o.converged {
        return Err(Error::Convergence {
            iterations: o.iterations,
            residual: o.residual,
        });
    }
    let theta0 = State::from_vec(x, nb);
    let g = gramian_apply(&theta0, kappa, prob.eps, ctx)?;
    let r: Vec<f64> = g.as_slice().iter().zip(&b).map(|(g, b)| g - b).collect();
    let bn = wdot(&ops.mass, &b, &b).sqrt();
    let el_residual = if bn == 0.0 {
        0.0
    } else {
        wdot(&ops.mass, &r, &r).sqrt() / bn
    };
    Ok(DualSolution {
        theta0,
        cg_residual: o.residual,
        el_residual,
        iterations: o.iterations,
        ritz: o.ritz_extremes(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Flags {
    /// `‖Ψ(T)‖ ≤ ε‖Ψ⁰‖`.
    pub target: bool,
    /// `(1/κ²)‖h‖² + (1/ε²)‖Ψ(T)‖² ≤ ‖Ψ⁰‖²` up to the relative slack.
    pub cost: bool,
    /// `κ²‖ṽ(T−τ)‖²_ω + ε²‖ϑ⁰‖² ≤ ‖Ψ⁰‖ ‖ϑ(T)‖`.
    pub a_priori: bool,
    /// `‖ṽ(T−τ)‖_ω ≤ ‖Ψ⁰‖`.
    pub observation: bool,
}

impl Flags {
    pub fn certified(&self) -> bool {
        self.target && self.cost
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Residuals {
    pub cg: f64,
    pub euler_lagrange: f64,
    /// `‖Ψ(T) + ε²ϑ⁰‖/‖Ψ⁰‖`.
    pub terminal: f64,
    pub cost_value: f64,
    pub a_priori_lhs: f64,
    pub a_priori_rhs: f64,
    pub cg_iterations: usize,
    pub ritz_min: f64,
    pub ritz_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlResult {
    /// Impulse on the `ω` nodes.
    pub h: Vec<f64>,
    pub theta0: State,
    pub psi_t: State,
    pub kappa: f64,
    pub eps: f64,
    pub tau_used: f64,
    pub norm_h: f64,
    pub norm_psi_t: f64,
    pub norm_psi0: f64,
    pub flags: Flags,
    pub residuals: Residuals,
}

fn kappa_of(prob: &ControlProblem) -> Result<f64> {
    match prob.kappa {
        KappaMode::Fixed(k) => Ok(k),
        KappaMode::Auto => Err(Error::Usage("kappa is auto; run calibrate_kappa".into())),
    }
}

/// Solves the dual problem, builds `h = κ² R_ω ϑ(T−τ)` and applies it.
pub fn synthesize(prob: &ControlProblem, ctx: &ControlContext<'_>) -> Result<ControlResult> {
    synthesize_with(prob, kappa_of(prob)?, ctx)
}

pub fn synthesize_with(
    prob: &ControlProblem,
    kappa: f64,
    ctx: &ControlContext<'_>,
) -> Result<ControlResult> {
    let ops = &ctx.disc.ops;
    let dual = solve_dual(prob, kappa, ctx)?;
    let v = ctx.stepper.advance(&dual.theta0, ctx.tail_steps())?;
    let v_omega = ops.restrict(v.as_slice());
    let h: Vec<f64> = v_omega.iter().map(|x| kappa * kappa * x).collect();
    let run = propagate_impulsive_with(
        &ctx.stepper,
        &prob.psi0,
        &ImpulseEvent {
            tau: prob.tau,
            payload: h.clone(),
        },
        &ctx.sched,
    )?;
    let psi_t = run.state;
    let norm_psi0 = ops.norm(&prob.psi0)?;
    let norm_psi_t = ops.norm(&psi_t)?;
    let norm_h = ops.omega_norm(&h);
    let norm_theta = ops.norm(&dual.theta0)?;
    let theta_t = ctx.stepper.advance(&dual.theta0, ctx.sched.steps())?;
    let norm_theta_t = ops.norm(&theta_t)?;
    let eps = prob.eps;

    let mismatch: Vec<f64> = psi_t
        .as_slice()
        .iter()
        .zip(dual.theta0.as_slice())
        .map(|(p, t)| p + eps * eps * t)
        .collect();
    let mismatch = wdot(&ops.mass, &mismatch, &mismatch).sqrt();
    let cost_value = if kappa > 0.0 {
        norm_h * norm_h / (kappa * kappa) + norm_psi_t * norm_psi_t / (eps * eps)
    } else {
        norm_psi_t * norm_psi_t / (eps * eps)
    };
    let norm_v = ops.omega_norm(&v_omega);
    let a_lhs = kappa * kappa * norm_v * norm_v + eps * eps * norm_theta * norm_theta;
    let a_rhs = norm_psi0 * norm_theta_t;
    let (ritz_min, ritz_max) = dual.ritz.unwrap_or((f64::NAN, f64::NAN));
    Ok(ControlResult {
        flags: Flags {
            target: norm_psi_t <= eps * norm_psi0,
            cost: cost_value <= norm_psi0 * norm_psi0 * (1.0 + COST_SLACK),
            a_priori: a_lhs <= a_rhs * (1.0 + COST_SLACK) + f64::MIN_POSITIVE,
            observation: norm_v <= norm_psi0,
        },
        residuals: Residuals {
            cg: dual.cg_residual,
            euler_lagrange: dual.el_residual,
            terminal: if norm_psi0 > 0.0 {
                mismatch / norm_psi0
            } else {
                mismatch
            },
            cost_value,
            a_priori_lhs: a_lhs,
            a_priori_rhs: a_rhs,
            cg_iterations: dual.iterations,
            ritz_min,
            ritz_max,
        },
        h,
        theta0: dual.theta0,
        psi_t,
        kappa,
        eps,
        tau_used: run.tau_used,
        norm_h,
        norm_psi_t,
        norm_psi0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualityCheck {
    pub max_abs: f64,
    /// Maximum of `|residual| / (‖Ψ⁰‖ ‖ζ⁰‖)` over samples with a nonzero scale.
    pub max_scaled: f64,
}

/// `∫_ω h z(T−τ) + ⟨Ψ⁰, ζ(T)⟩ − ⟨Ψ(T), ζ⁰⟩` over the samples.
pub fn verify_duality(
    result: &ControlResult,
    psi0: &State,
    zetas: &[State],
    ctx: &ControlContext<'_>,
) -> Result<DualityCheck> {
    let ops = &ctx.disc.ops;
    let mut out = DualityCheck {
        max_abs: 0.0,
        max_scaled: 0.0,
    };
    for z0 in zetas {
        let z_tail = ctx.stepper.advance(z0, ctx.tail_steps())?;
        let z_end = ctx.stepper.advance(&z_tail, ctx.tau_step)?;
        let r = ops.omega_inner(&result.h, &ops.restrict(z_tail.as_slice()))
            + ops.inner(psi0, &z_end)?
            - ops.inner(&result.psi_t, z0)?;
        let scale = ops.norm(psi0)? * ops.norm(z0)?;
        out.max_abs = out.max_abs.max(r.abs());
        if scale > 0.0 {
            out.max_scaled = out.max_scaled.max(r.abs() / scale);
        }
    }
    Ok(out)
}

/// `κ₀ = M₁ e^{M₂/(T−τ)} / ε^δ`.
pub fn initial_kappa(m1: f64, m2: f64, delta: f64, tail: f64, eps: f64) -> f64 {
    m1 * (m2 / tail).exp() / eps.powf(delta)
}

/// `(M₁, M₂, δ)` from a fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FittedConstants {
    pub m1: f64,
    pub m2: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub kappa0: f64,
    pub kappa: f64,
    pub doublings: usize,
    pub result: ControlResult,
}

fn start_kappa(fitted: Option<FittedConstants>, ctx: &ControlContext<'_>, eps: f64) -> f64 {
    match fitted {
        Some(f) => initial_kappa(f.m1, f.m2, f.delta, ctx.tail(), eps),
        None => 1.0,
    }
}

/// Doubles κ from `κ₀` until the target and cost certificates both pass.
pub fn calibrate_kappa(
    prob: &ControlProblem,
    ctx: &ControlContext<'_>,
    fitted: Option<FittedConstants>,
    max_doublings: usize,
) -> Result<Calibration> {
    let kappa0 = start_kappa(fitted, ctx, prob.eps);
    let mut last = None;
    for i in 0..=max_doublings {
        let kappa = kappa0 * 2f64.powi(i as i32);
        let r = synthesize_with(prob, kappa, ctx)?;
        if r.flags.certified() {
            return Ok(Calibration {
                kappa0,
                kappa,
                doublings: i,
                result: r,
            });
        }
        last = Some(r);
    }
    let r = last.expect("at least one attempt");
    Err(Error::Calibration {
        doublings: max_doublings,
        last_kappa: r.kappa,
        last_ratio: if r.norm_psi0 > 0.0 {
            r.norm_psi_t / r.norm_psi0
        } else {
            0.0
        },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostRow {
    pub eps: f64,
    /// `sup ‖h‖_ω` over the members.
    pub sup_cost: f64,
    /// Shared κ; 0 when free decay already meets the target for every member.
    pub kappa: f64,
    pub passes: bool,
    pub members_controlled: usize,
}

/// One `ε` of the sweep: a κ shared by all members, doubled until every controlled member is
/// certified. Members whose free decay meets the target get `h = 0`.
pub fn cost_row(
    template: &ControlProblem,
    eps: f64,
    psi0s: &[State],
    ctx: &ControlContext<'_>,
    fitted: Option<FittedConstants>,
    max_doublings: usize,
) -> Result<CostRow> {
    let ops = &ctx.disc.ops;
    let mut needy = Vec::new();
    for p in psi0s {
        let free = ctx.stepper.advance(p, ctx.sched.steps())?;
        if ops.norm(&free)? > eps * ops.norm(p)? {
            needy.push(p);
        }
    }
    if needy.is_empty() {
        return Ok(CostRow {
            eps,
            sup_cost: 0.0,
            kappa: 0.0,
            passes: true,
            members_controlled: 0,
        });
    }
    let kappa0 = start_kappa(fitted, ctx, eps);
    let mut worst = 0.0;
    for i in 0..=max_doublings {
        let kappa = kappa0 * 2f64.powi(i as i32);
        let mut all = true;
        let mut sup = 0.0f64;
        for p in &needy {
            let prob = ControlProblem {
                psi0: (*p).clone(),
                eps,
                kappa: KappaMode::Fixed(kappa),
                ..template.clone()
            };
            let r = synthesize_with(&prob, kappa, ctx)?;
            worst = r.norm_psi_t / r.norm_psi0;
            sup = sup.max(r.norm_h);
            if !r.flags.certified() {
                all = false;
                break;
            }
        }
        if all {
            return Ok(CostRow {
                eps,
                sup_cost: sup,
                kappa,
                passes: true,
                members_controlled: needy.len(),
            });
        }
    }
    Err(Error::Calibration {
        doublings: max_doublings,
        last_kappa: kappa0 * 2f64.powi(max_doublings as i32),
        last_ratio: worst,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostStudy {
    pub rows: Vec<CostRow>,
    /// Least-squares slope of `ln sup‖h‖` against `ln(1/ε)` over rows with nonzero cost.
    pub slope: Option<f64>,
    pub fitted_delta: Option<f64>,
    /// `sup‖h‖` never decreases as `ε` decreases.
    pub monotone: bool,
    /// Set when a row failed; `rows` then holds the rows completed before it.
    pub failure: Option<String>,
}

impl CostStudy {
    pub fn passed(&self) -> bool {
        self.failure.is_none() && self.monotone && self.rows.iter().all(|r| r.passes)
    }
}

pub fn check_sweep(eps_list: &[f64]) -> Result<()> {
    if eps_list.len() < 4 {
        return Err(Error::Config(
            "cost study needs at least 4 eps values".into(),
        ));
    }
    if eps_list.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Config("eps values must be positive".into()));
    }
    let hi = eps_list.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = eps_list.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi < 10.0 * lo * (1.0 - 1e-12) {
        return Err(Error::Config(
            "eps values must span at least one decade".into(),
        ));
    }
    Ok(())
}

/// Assembles rows (in any order) into the study summary, sorted by decreasing `ε`.
pub fn summarize_cost(
    mut rows: Vec<CostRow>,
    fitted_delta: Option<f64>,
    failure: Option<String>,
) -> CostStudy {
    rows.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let monotone = rows.windows(2).all(|w| w[1].sup_cost >= w[0].sup_cost);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.sup_cost > 0.0)
        .map(|r| ((1.0 / r.eps).ln(), r.sup_cost.ln()))
        .collect();
    let slope = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let (mx, my) = pts
            .iter()
            .fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
        let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |(a, b), p| {
            (a + (p.0 - mx) * (p.0 - mx), b + (p.0 - mx) * (p.1 - my))
        });
        sxy / sxx
    });
    CostStudy {
        rows,
        slope,
        fitted_delta,
        monotone,
        failure,
    }
}

/// Runs [`cost_row`] for every `ε` in order, stopping at the first failure.
pub fn cost_study(
    template: &ControlProblem,
    eps_list: &[f64],
    psi0s: &[State],
    ctx: &ControlContext<'_>,
    fitted: Option<FittedConstants>,
    max_doublings: usize,
) -> Result<CostStudy> {
    check_sweep(eps_list)?;
    let mut rows = Vec::new();
    for &eps in eps_list {
        match cost_row(template, eps, psi0s, ctx, fitted, max_doublings) {
            Ok(r) => rows.push(r),
            Err(e) => {
                return Ok(summarize_cost(
                    rows,
                    fitted.map(|f| f.delta),
                    Some(e.to_string()),
                ))
            }
        }
    }
    Ok(summarize_cost(rows, fitted.map(|f| f.delta), None))
}
