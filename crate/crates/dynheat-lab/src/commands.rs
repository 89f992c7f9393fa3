//! The subcommands. Each one writes its artifacts into the output directory and returns
//! whether every certification in its scope passed.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use dynheat::control::{
    calibrate_kappa, check_sweep, cost_row, summarize_cost, synthesize_with, verify_duality, ControlContext,
    ControlProblem, ControlResult, FittedConstants, KappaMode,
};
use dynheat::discretize::{assemble, Discretization, Resolution, State};
use dynheat::evolve::Stepper;
use dynheat::geometry::{check_normal_sign, WeightParams};
use dynheat::logconvexity::{
    commutator_identity_check, fit_observability_constants, fit_step4_constant, interpolation_check,
    step7_constants, trace_from_trajectory, CompatibleDiskField, CompatibleIntervalField, ManufacturedField,
    Observation, BOUND_SLACK, MIN_ENSEMBLE,
};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::config::{DomainKind, KappaChoice, RunConfig};
use crate::ensemble::{gaussian_state, initial_state, member_rng, par_members, AUX_STREAM};
use crate::format::{write_csv, write_json, Cell};

/// Largest scaled duality residual accepted by the control certificate.
pub const DUALITY_TOL: f64 = 1e-10;
/// Smallest observed commutator order accepted on the interval.
pub const COMMUTATOR_ORDER: f64 = 1.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Observe,
    CommutatorCheck,
    Control,
    CostStudy,
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    /// Overrides `ensemble.seed`.
    pub seed: Option<u64>,
    /// Also write the assembled operator in coordinate format (`simulate`).
    pub dump_operator: bool,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub passed: bool,
    pub files: Vec<PathBuf>,
}

struct Setup {
    cfg: RunConfig,
    disc: Discretization,
    params: WeightParams,
    seed: u64,
}

impl Setup {
    fn new(cfg: &RunConfig, opts: &Options) -> anyhow::Result<Self> {
        cfg.validate()?;
        let disc = assemble(&cfg.domain_spec()?, cfg.resolution()?).context("grid")?;
        Ok(Setup {
            cfg: cfg.clone(),
            params: cfg.weight_params()?,
            seed: opts.seed.unwrap_or(cfg.ensemble.seed),
            disc,
        })
    }

    fn state(&self, member: usize) -> dynheat::Result<State> {
        initial_state(&self.cfg, &self.disc, self.seed, member)
    }
}

pub fn run(cmd: Command, cfg: &RunConfig, out: &Path, opts: &Options) -> anyhow::Result<Outcome> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let setup = Setup::new(cfg, opts)?;
    match cmd {
        Command::Simulate => simulate(&setup, out, opts),
        Command::Observe => observe(&setup, out),
        Command::CommutatorCheck => commutator(&setup, out),
        Command::Control => control(&setup, out),
        Command::CostStudy => cost_study(&setup, out),
    }
}

fn domain_name(cfg: &RunConfig) -> &'static str {
    match cfg.domain.kind {
        DomainKind::Interval => "interval",
        DomainKind::Disk => "disk",
    }
}

fn level_name(r: Resolution) -> String {
    match r {
        Resolution::Interval { n } => n.to_string(),
        Resolution::Disk { nr, ntheta } => format!("{nr}x{ntheta}"),
    }
}

#[derive(Serialize)]
struct SimulateSummary {
    domain: &'static str,
    resolution: String,
    dof: usize,
    steps: usize,
    norm_initial: f64,
    norm_final: f64,
    /// Largest `‖U_{k+1}‖ − ‖U_k‖` over the steps.
    max_norm_increase: f64,
    contraction: bool,
    normal_sign_min: f64,
    normal_sign: bool,
    passes: bool,
}

fn simulate(s: &Setup, out: &Path, opts: &Options) -> anyhow::Result<Outcome> {
    let ops = &s.disc.ops;
    let sched = s.cfg.schedule()?;
    let u0 = s.state(0)?;
    let traj = Stepper::new(ops, sched.dt, sched.scheme)?.trajectory(&u0, sched.steps())?;
    let times = sched.times();
    let mut files = Vec::new();

    let nodes = out.join("nodes.csv");
    write_csv(
        &nodes,
        &["index", "x", "y", "kind"],
        s.disc.grid.nodes.iter().enumerate().map(|(i, p)| {
            let kind = if i < s.disc.grid.n_bulk { "bulk" } else { "trace" };
            vec![i.into(), p[0].into(), p[1].into(), kind.to_string().into()]
        }),
    )?;
    files.push(nodes);

    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((0..s.disc.grid.len()).map(|i| format!("u{i}")))
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let path = out.join("trajectory.csv");
    write_csv(
        &path,
        &header,
        traj.iter().zip(&times).map(|(u, &t)| {
            std::iter::once(Cell::F(t)).chain(u.as_slice().iter().map(|&v| Cell::F(v))).collect()
        }),
    )?;
    files.push(path);

    let one = State::constant(&s.disc.grid, 1.0);
    let mut norms = Vec::with_capacity(traj.len());
    let mut rows = Vec::with_capacity(traj.len());
    for (u, &t) in traj.iter().zip(&times) {
        let mut ku = vec![0.0; u.len()];
        ops.apply_k(u.as_slice(), &mut ku);
        let dirichlet: f64 = ku.iter().zip(u.as_slice()).map(|(a, b)| a * b).sum();
        let norm2 = ops.inner(u, u)?;
        norms.push(norm2.sqrt());
        rows.push(vec![t.into(), norm2.into(), dirichlet.into(), ops.inner(u, &one)?.into()]);
    }
    let path = out.join("energy.csv");
    write_csv(&path, &["t", "norm2", "dirichlet", "mass"], rows)?;
    files.push(path);

    if opts.dump_operator {
        let path = out.join("operator_coo.csv");
        write_csv(
            &path,
            &["row", "col", "value"],
            ops.coo().into_iter().map(|(i, j, v)| vec![i.into(), j.into(), v.into()]),
        )?;
        files.push(path);
        let path = out.join("mass.csv");
        write_csv(&path, &["index", "mass"], ops.mass.iter().enumerate().map(|(i, &m)| vec![i.into(), m.into()]))?;
        files.push(path);
    }

    let max_inc = norms.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let contraction = norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-13));
    let sign = check_normal_sign(&s.disc.domain, s.disc.grid.trace_nodes())?;
    let summary = SimulateSummary {
        domain: domain_name(&s.cfg),
        resolution: level_name(s.cfg.resolution()?),
        dof: s.disc.grid.len(),
        steps: sched.steps(),
        norm_initial: norms[0],
        norm_final: *norms.last().unwrap(),
        max_norm_increase: if norms.len() > 1 { max_inc } else { 0.0 },
        contraction,
        normal_sign_min: sign.min,
        normal_sign: sign.pass,
        passes: contraction && sign.pass,
    };
    let path = out.join("simulate.json");
    write_json(&path, &summary)?;
    files.push(path);
    Ok(Outcome {
        passed: summary.passes,
        files,
    })
}

#[derive(Serialize)]
struct Constants {
    #[serde(rename = "C0")]
    c0: f64,
    #[serde(rename = "C")]
    c: f64,
    ell: f64,
    #[serde(rename = "M_ell")]
    m_ell: Option<f64>,
    #[serde(rename = "D_ell")]
    d_ell: Option<f64>,
    beta: f64,
    mu: f64,
    #[serde(rename = "K")]
    k: f64,
    #[serde(rename = "M1")]
    m1: f64,
    #[serde(rename = "M2")]
    m2: f64,
    delta: f64,
    step7_sign_value: f64,
    step7_sign_holds: bool,
    log_constant: f64,
    horizons: Vec<f64>,
    horizon_constants: Vec<f64>,
}

#[derive(Serialize)]
struct Step4Report {
    train: usize,
    test: usize,
    fitted_c: f64,
    /// Largest per-trace constant among the test trajectories.
    test_c_max: f64,
    /// Largest constant of the finite-difference `d𝒩/dt` inequality among the test trajectories.
    test_c_dn_max: f64,
    violations: usize,
    passes: bool,
}

#[derive(Serialize)]
struct InterpolationReport {
    checks: usize,
    violations: usize,
    passes: bool,
}

#[derive(Serialize)]
struct ObservabilityReport {
    train: usize,
    holdout: usize,
    holdout_violations: usize,
    passes: bool,
}

#[derive(Serialize)]
struct ObserveSummary {
    domain: &'static str,
    resolution: String,
    s: f64,
    h_weight: f64,
    #[serde(rename = "T")]
    t_final: f64,
    dt: f64,
    max_energy_residual: f64,
    step4: Step4Report,
    interpolation: InterpolationReport,
    observability: ObservabilityReport,
    step7_accepted: bool,
    passes: bool,
}

fn observe(s: &Setup, out: &Path) -> anyhow::Result<Outcome> {
    let e = &s.cfg.ensemble;
    if e.count < MIN_ENSEMBLE {
        bail!("ensemble.count = {} is below the minimum of {MIN_ENSEMBLE} for the observability fit", e.count);
    }
    let ops = &s.disc.ops;
    let sched = s.cfg.schedule()?;
    let steps = sched.steps();
    if steps < 3 {
        bail!("time.T / time.dt must give at least 3 steps for time triples");
    }
    let times = sched.times();
    let stepper = Stepper::new(ops, sched.dt, sched.scheme)?;
    let pool = (e.count + e.holdout).max(e.train + e.test);
    let inits = par_members(pool, |i| s.state(i))?;
    let trajs = par_members(pool, |i| {
        if inits[i].as_slice().iter().all(|&v| v == 0.0) {
            return Err(dynheat::Error::DegenerateData(format!("initial state of member {i} is zero")));
        }
        stepper.trajectory(&inits[i], steps)
    })?;

    let c = fit_step4_constant(&trajs[..e.train], &s.params, &sched, &s.disc)?;
    let traces = par_members(e.test, |i| trace_from_trajectory(&trajs[e.train + i], &s.params, &sched, &s.disc))?;
    let violations: usize = traces.iter().map(|t| t.bound_violations(c, BOUND_SLACK)).sum();

    let checks = traces
        .par_iter()
        .enumerate()
        .map(|(i, tr)| {
            let mut rng = member_rng(s.seed, AUX_STREAM + (e.train + i) as u64);
            (0..s.cfg.observe.triples)
                .map(|_| {
                    let mut idx = [0usize; 3];
                    while !(idx[0] < idx[1] && idx[1] < idx[2]) {
                        idx = [0; 3].map(|_| rng.random_range(1..=steps));
                        idx.sort_unstable();
                    }
                    interpolation_check(tr, idx.map(|k| tr.times[k]), c).map(|r| r.pass)
                })
                .collect::<dynheat::Result<Vec<bool>>>()
        })
        .collect::<dynheat::Result<Vec<_>>>()?;
    let n_checks: usize = checks.iter().map(Vec::len).sum();
    let interp_violations = checks.iter().flatten().filter(|p| !**p).count();

    let t_final = s.cfg.time.t_final;
    let hidx: Vec<usize> = [0.25, 0.5, 1.0]
        .iter()
        .map(|f| ((f * t_final / sched.dt).round() as usize).clamp(1, steps))
        .collect();
    let horizons: Vec<f64> = hidx.iter().map(|&k| times[k]).collect();
    let observe_at = |i: usize, ks: &[usize]| -> dynheat::Result<Vec<Observation>> {
        ks.iter().map(|&k| Observation::of(ops, &inits[i], &trajs[i][k])).collect()
    };
    let train = par_members(e.count, |i| observe_at(i, &hidx))?;
    let holdout = par_members(e.holdout, |i| Ok(observe_at(e.count + i, &hidx[2..])?[0]))?;
    let fit = fit_observability_constants(&horizons, &train, &holdout)?;
    let step7 = step7_constants(&s.disc.domain, s.params.c0(), c, s.cfg.observe.ell)?;
    let accepted = step7.sign_holds.then_some((step7.m_ell, step7.d_ell));

    let mut files = Vec::new();
    let first = &traces.first().context("ensemble.test must be at least 1")?;
    let bound = first.bound(c);
    let path = out.join("frequency_trace.csv");
    write_csv(
        &path,
        &["t", "normF2", "N", "Q", "bound"],
        (0..first.times.len()).map(|k| {
            vec![first.times[k].into(), first.norm_f2[k].into(), first.n[k].into(), first.q[k].into(), bound[k].into()]
        }),
    )?;
    files.push(path);

    let constants = Constants {
        c0: s.params.c0(),
        c,
        ell: step7.ell,
        m_ell: accepted.map(|a| a.0),
        d_ell: accepted.map(|a| a.1),
        beta: fit.beta,
        mu: fit.mu,
        k: fit.k,
        m1: fit.m1,
        m2: fit.m2,
        delta: fit.delta,
        step7_sign_value: step7.sign_value,
        step7_sign_holds: step7.sign_holds,
        log_constant: fit.log_constant,
        horizons: fit.horizons.clone(),
        horizon_constants: fit.horizon_constants.clone(),
    };
    let path = out.join("constants.json");
    write_json(&path, &constants)?;
    files.push(path);

    let step4 = Step4Report {
        train: e.train,
        test: e.test,
        fitted_c: c,
        test_c_max: traces.iter().map(|t| t.c_trace).fold(0.0, f64::max),
        test_c_dn_max: traces.iter().map(|t| t.c_dn).fold(0.0, f64::max),
        violations,
        passes: violations == 0,
    };
    let interpolation = InterpolationReport {
        checks: n_checks,
        violations: interp_violations,
        passes: interp_violations == 0,
    };
    let observability = ObservabilityReport {
        train: e.count,
        holdout: e.holdout,
        holdout_violations: fit.holdout_violations,
        passes: fit.holdout_violations <= 1,
    };
    let passes = step4.passes && interpolation.passes && observability.passes;
    let summary = ObserveSummary {
        domain: domain_name(&s.cfg),
        resolution: level_name(s.cfg.resolution()?),
        s: s.params.s,
        h_weight: s.params.h,
        t_final,
        dt: sched.dt,
        max_energy_residual: traces.iter().map(|t| t.max_energy_residual()).fold(0.0, f64::max),
        step4,
        interpolation,
        observability,
        step7_accepted: accepted.is_some(),
        passes,
    };
    let path = out.join("observe.json");
    write_json(&path, &summary)?;
    files.push(path);
    Ok(Outcome { passed: passes, files })
}

#[derive(Serialize)]
struct CommutatorSummary {
    domain: &'static str,
    t: f64,
    strictly_decreasing: bool,
    min_order: Option<f64>,
    required_order: Option<f64>,
    passes: bool,
}

fn commutator(s: &Setup, out: &Path) -> anyhow::Result<Outcome> {
    let t = s.cfg.commutator.t;
    let d = &s.disc.domain;
    let field: Box<dyn ManufacturedField> = match s.cfg.domain.kind {
        DomainKind::Interval => Box::new(CompatibleIntervalField::new(d, &s.params, t)?),
        DomainKind::Disk => Box::new(CompatibleDiskField::new(d, &s.params, t)?),
    };
    let table = commutator_identity_check(d, &s.params, t, field.as_ref(), &s.cfg.commutator_levels()?)?;
    let path = out.join("commutator.csv");
    write_csv(
        &path,
        &["resolution", "spacing", "dof", "lhs", "rhs", "rel_residual", "order"],
        table.rows.iter().map(|r| {
            vec![
                level_name(r.resolution).into(),
                r.spacing.into(),
                r.dof.into(),
                r.lhs.into(),
                r.rhs.into(),
                r.rel_residual.into(),
                r.order.into(),
            ]
        }),
    )?;
    let required = (s.cfg.domain.kind == DomainKind::Interval).then_some(COMMUTATOR_ORDER);
    let decreasing = table.strictly_decreasing();
    let min_order = table.min_order();
    let order_ok = match required {
        Some(p) => min_order.is_some_and(|o| o >= p),
        None => true,
    };
    let summary = CommutatorSummary {
        domain: domain_name(&s.cfg),
        t,
        strictly_decreasing: decreasing,
        min_order,
        required_order: required,
        passes: decreasing && order_ok,
    };
    let json = out.join("commutator.json");
    write_json(&json, &summary)?;
    Ok(Outcome {
        passed: summary.passes,
        files: vec![path, json],
    })
}

/// `(M₁, M₂, δ)` from a previous `observe` run in the same directory.
fn read_fitted(out: &Path) -> anyhow::Result<Option<FittedConstants>> {
    let path = out.join("constants.json");
    if !path.exists() {
        return Ok(None);
    }
    let v: Value = serde_json::from_slice(&fs::read(&path)?).with_context(|| format!("{}", path.display()))?;
    let get = |k: &str| v.get(k).and_then(Value::as_f64).with_context(|| format!("{} lacks `{k}`", path.display()));
    Ok(Some(FittedConstants {
        m1: get("M1")?,
        m2: get("M2")?,
        delta: get("delta")?,
    }))
}

fn kappa_start(s: &Setup, out: &Path) -> anyhow::Result<(Option<FittedConstants>, Option<f64>)> {
    let fitted = read_fitted(out)?;
    let delta = fitted.map(|f| f.delta);
    Ok(match s.cfg.kappa()? {
        KappaChoice::Auto => (None, delta),
        KappaChoice::Fitted => (
            Some(fitted.context("control.kappa = \"fitted\" needs constants.json from `observe` in the output directory")?),
            delta,
        ),
        // Start the doubling at the given value.
        KappaChoice::Fixed(k) => (
            Some(FittedConstants {
                m1: k,
                m2: 0.0,
                delta: 0.0,
            }),
            delta,
        ),
    })
}

fn problem(s: &Setup, psi0: State, eps: f64, kappa: KappaMode) -> ControlProblem {
    let c = &s.cfg.control;
    ControlProblem {
        psi0,
        tau: s.cfg.impulse.tau,
        t_final: s.cfg.time.t_final,
        eps,
        kappa,
        cg_tol: c.cg_tol,
        cg_maxit: c.cg_maxit,
    }
}

#[derive(Serialize)]
struct MemberFlags {
    target: bool,
    cost: bool,
    a_priori: bool,
    observation: bool,
    duality: bool,
}

#[derive(Serialize)]
struct MemberResiduals {
    cg: f64,
    euler_lagrange: f64,
    terminal: f64,
    duality: f64,
    cost_value: f64,
    a_priori_lhs: f64,
    a_priori_rhs: f64,
    cg_iterations: usize,
    ritz_min: f64,
    ritz_max: f64,
}

#[derive(Serialize)]
struct MemberReport {
    member: usize,
    kappa0: Option<f64>,
    kappa: f64,
    doublings: Option<usize>,
    eps: f64,
    norm_h: f64,
    #[serde(rename = "norm_PsiT")]
    norm_psi_t: f64,
    #[serde(rename = "norm_Psi0")]
    norm_psi0: f64,
    flags: MemberFlags,
    residuals: MemberResiduals,
    certified: bool,
    h: Vec<f64>,
}

#[derive(Serialize)]
struct ControlSummary {
    domain: &'static str,
    resolution: String,
    eps: f64,
    tau: f64,
    tau_used: f64,
    #[serde(rename = "T")]
    t_final: f64,
    kappa_mode: String,
    duality_samples: usize,
    members: Vec<MemberReport>,
    certified: bool,
}

fn member_report(
    member: usize,
    r: ControlResult,
    duality: f64,
    kappa0: Option<f64>,
    doublings: Option<usize>,
) -> MemberReport {
    let duality_ok = duality <= DUALITY_TOL;
    let f = r.flags;
    MemberReport {
        member,
        kappa0,
        kappa: r.kappa,
        doublings,
        eps: r.eps,
        norm_h: r.norm_h,
        norm_psi_t: r.norm_psi_t,
        norm_psi0: r.norm_psi0,
        certified: f.target && f.cost && f.a_priori && duality_ok,
        flags: MemberFlags {
            target: f.target,
            cost: f.cost,
            a_priori: f.a_priori,
            observation: f.observation,
            duality: duality_ok,
        },
        residuals: MemberResiduals {
            cg: r.residuals.cg,
            euler_lagrange: r.residuals.euler_lagrange,
            terminal: r.residuals.terminal,
            duality,
            cost_value: r.residuals.cost_value,
            a_priori_lhs: r.residuals.a_priori_lhs,
            a_priori_rhs: r.residuals.a_priori_rhs,
            cg_iterations: r.residuals.cg_iterations,
            ritz_min: r.residuals.ritz_min,
            ritz_max: r.residuals.ritz_max,
        },
        h: r.h,
    }
}

fn control(s: &Setup, out: &Path) -> anyhow::Result<Outcome> {
    let c = &s.cfg.control;
    let sched = s.cfg.schedule()?;
    let ctx = ControlContext::new(&s.disc, sched, s.cfg.impulse.tau)?;
    let choice = s.cfg.kappa()?;
    let fitted = match choice {
        KappaChoice::Fitted => kappa_start(s, out)?.0,
        _ => None,
    };
    let members = par_members(c.members, |i| {
        let psi0 = s.state(i)?;
        let (r, k0, dbl) = match choice {
            KappaChoice::Fixed(k) => {
                let p = problem(s, psi0, c.eps, KappaMode::Fixed(k));
                (synthesize_with(&p, k, &ctx)?, None, None)
            }
            _ => {
                let p = problem(s, psi0, c.eps, KappaMode::Auto);
                let cal = calibrate_kappa(&p, &ctx, fitted, c.max_doublings)?;
                (cal.result, Some(cal.kappa0), Some(cal.doublings))
            }
        };
        let mut rng = member_rng(s.seed, AUX_STREAM + i as u64);
        let zetas: Vec<State> = (0..c.duality_samples).map(|_| gaussian_state(&s.disc, &mut rng)).collect();
        let psi0 = s.state(i)?;
        let d = verify_duality(&r, &psi0, &zetas, &ctx)?;
        Ok(member_report(i, r, d.max_scaled, k0, dbl))
    })?;
    let certified = members.iter().all(|m| m.certified);
    let summary = ControlSummary {
        domain: domain_name(&s.cfg),
        resolution: level_name(s.cfg.resolution()?),
        eps: c.eps,
        tau: s.cfg.impulse.tau,
        tau_used: ctx.tau_used(),
        t_final: s.cfg.time.t_final,
        kappa_mode: match choice {
            KappaChoice::Auto => "auto".into(),
            KappaChoice::Fitted => "fitted".into(),
            KappaChoice::Fixed(_) => "fixed".into(),
        },
        duality_samples: c.duality_samples,
        members,
        certified,
    };
    let path = out.join("control.json");
    write_json(&path, &summary)?;
    Ok(Outcome {
        passed: certified,
        files: vec![path],
    })
}

#[derive(Serialize)]
struct CostRowReport {
    eps: f64,
    sup_cost: f64,
    kappa: f64,
    passes: bool,
    members_controlled: usize,
}

#[derive(Serialize)]
struct CostSummary {
    members: usize,
    rows: Vec<CostRowReport>,
    slope: Option<f64>,
    fitted_delta: Option<f64>,
    monotone: bool,
    failure: Option<String>,
    passes: bool,
}

fn cost_study(s: &Setup, out: &Path) -> anyhow::Result<Outcome> {
    let c = &s.cfg.control;
    check_sweep(&c.sweep)?;
    let ctx = ControlContext::new(&s.disc, s.cfg.schedule()?, s.cfg.impulse.tau)?;
    let (start, fitted_delta) = kappa_start(s, out)?;
    let psi0s = par_members(c.members, |i| s.state(i))?;
    let template = problem(s, psi0s[0].clone(), c.sweep[0], KappaMode::Auto);
    let results: Vec<_> = c
        .sweep
        .par_iter()
        .map(|&eps| cost_row(&template, eps, &psi0s, &ctx, start, c.max_doublings))
        .collect();
    let mut rows = Vec::new();
    let mut failure = None;
    for (r, eps) in results.into_iter().zip(&c.sweep) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                failure = Some(format!("eps = {eps}: {e}"));
                break;
            }
        }
    }
    let study = summarize_cost(rows, fitted_delta, failure);
    let path = out.join("cost_study.csv");
    write_csv(
        &path,
        &["eps", "sup_cost", "kappa", "passes", "members_controlled"],
        study.rows.iter().map(|r| {
            vec![r.eps.into(), r.sup_cost.into(), r.kappa.into(), r.passes.into(), r.members_controlled.into()]
        }),
    )?;
    let passed = study.passed();
    let summary = CostSummary {
        members: c.members,
        rows: study
            .rows
            .iter()
            .map(|r| CostRowReport {
                eps: r.eps,
                sup_cost: r.sup_cost,
                kappa: r.kappa,
                passes: r.passes,
                members_controlled: r.members_controlled,
            })
            .collect(),
        slope: study.slope,
        fitted_delta: study.fitted_delta,
        monotone: study.monotone,
        failure: study.failure.clone(),
        passes: passed,
    };
    let json = out.join("cost_study.json");
    write_json(&json, &summary)?;
    Ok(Outcome {
        passed,
        files: vec![path, json],
    })
}

/// Artifacts merged by [`report`], with the flag that certifies each one.
pub const REPORT_INPUTS: [(&str, &str, &str); 6] = [
    ("simulate", "simulate.json", "passes"),
    ("observe", "observe.json", "passes"),
    ("constants", "constants.json", ""),
    ("commutator", "commutator.json", "passes"),
    ("control", "control.json", "certified"),
    ("cost_study", "cost_study.json", "passes"),
];

/// Merges the artifacts of earlier runs in `dir` into `report.json`.
pub fn report(dir: &Path) -> anyhow::Result<Outcome> {
    let mut doc = serde_json::Map::new();
    let mut flags = serde_json::Map::new();
    let mut found = 0;
    for (key, file, flag) in REPORT_INPUTS {
        let path = dir.join(file);
        let value = if path.exists() {
            found += 1;
            let mut v: Value =
                serde_json::from_slice(&fs::read(&path)?).with_context(|| format!("cannot parse {}", path.display()))?;
            if !flag.is_empty() {
                let ok = v.get(flag).and_then(Value::as_bool).with_context(|| format!("{} lacks `{flag}`", path.display()))?;
                flags.insert(key.into(), Value::Bool(ok));
            }
            if key == "control" {
                // The impulses themselves stay in control.json.
                if let Some(ms) = v.get_mut("members").and_then(Value::as_array_mut) {
                    for m in ms.iter_mut().filter_map(Value::as_object_mut) {
                        m.remove("h");
                    }
                }
            }
            v
        } else {
            Value::Null
        };
        doc.insert(key.into(), value);
    }
    if found == 0 {
        let names: Vec<&str> = REPORT_INPUTS.iter().map(|r| r.1).collect();
        bail!("no run artifacts in {}; expected one or more of: {}", dir.display(), names.join(", "));
    }
    let certified = flags.values().all(|v| v.as_bool() == Some(true));
    doc.insert("flags".into(), Value::Object(flags));
    doc.insert("certified".into(), Value::Bool(certified));
    let path = dir.join("report.json");
    write_json(&path, &Value::Object(doc))?;
    Ok(Outcome {
        passed: certified,
        files: vec![path],
    })
}
