//! Run configuration: a TOML file with nested blocks. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use dynheat::discretize::Resolution;
use dynheat::evolve::{Schedule, Scheme};
use dynheat::geometry::{DomainSpec, WeightParams};
use serde::Deserialize;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainBlock,
    pub omega: OmegaBlock,
    pub grid: GridBlock,
    #[serde(default)]
    pub weight: WeightBlock,
    #[serde(default)]
    pub time: TimeBlock,
    #[serde(default)]
    pub impulse: ImpulseBlock,
    #[serde(default)]
    pub control: ControlBlock,
    #[serde(default)]
    pub ensemble: EnsembleBlock,
    #[serde(default)]
    pub initial: InitialBlock,
    #[serde(default)]
    pub observe: ObserveBlock,
    #[serde(default)]
    pub commutator: CommutatorBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

/// A coordinate given as a number on the interval or `[x, y]` on the disk.
#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Coord {
    Scalar(f64),
    Point([f64; 2]),
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Interval,
    Disk,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainBlock {
    pub kind: DomainKind,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub center: Option<[f64; 2]>,
    pub radius: Option<f64>,
    pub x0: Coord,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaBlock {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub center: Option<[f64; 2]>,
    pub radius: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub n: Option<usize>,
    pub nr: Option<usize>,
    pub ntheta: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightBlock {
    pub s: f64,
    pub h_weight: f64,
}

impl Default for WeightBlock {
    fn default() -> Self {
        WeightBlock { s: 0.5, h_weight: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    CrankNicolson,
    BackwardEuler,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeBlock {
    #[serde(rename = "T")]
    pub t_final: f64,
    pub dt: f64,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeName,
}

fn default_scheme() -> SchemeName {
    SchemeName::CrankNicolson
}

impl Default for TimeBlock {
    fn default() -> Self {
        TimeBlock {
            t_final: 1.0,
            dt: 1e-2,
            scheme: SchemeName::CrankNicolson,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpulseBlock {
    pub tau: f64,
}

impl Default for ImpulseBlock {
    fn default() -> Self {
        ImpulseBlock { tau: 0.5 }
    }
}

/// `"auto"` doubles from 1, `"fitted"` doubles from the κ₀ of the fitted constants, a number
/// fixes κ.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum KappaSetting {
    Fixed(f64),
    Mode(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlBlock {
    pub eps: f64,
    pub sweep: Vec<f64>,
    pub kappa: KappaSetting,
    pub cg_tol: f64,
    pub cg_maxit: usize,
    pub max_doublings: usize,
    pub members: usize,
    pub duality_samples: usize,
}

impl Default for ControlBlock {
    fn default() -> Self {
        ControlBlock {
            eps: 0.1,
            sweep: vec![0.2, 0.1, 0.05, 0.025, 0.0125],
            kappa: KappaSetting::Mode("auto".into()),
            cg_tol: 1e-12,
            cg_maxit: 5000,
            max_doublings: dynheat::control::MAX_DOUBLINGS,
            members: 5,
            duality_samples: 20,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleBlock {
    /// Training members of the observability fit.
    pub count: usize,
    /// Holdout members of the observability fit.
    pub holdout: usize,
    /// Training trajectories of the Step-4 constant.
    pub train: usize,
    /// Test trajectories for the Step-4 bound and the interpolation check.
    pub test: usize,
    pub seed: u64,
    /// Backward-Euler smoothing applied to random initial states.
    pub smoothing_steps: usize,
    pub smoothing_dt: f64,
}

impl Default for EnsembleBlock {
    fn default() -> Self {
        EnsembleBlock {
            count: 20,
            holdout: 10,
            train: 10,
            test: 50,
            seed: 20240917,
            smoothing_steps: 5,
            smoothing_dt: 0.01,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Random,
    Zero,
    Constant,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialBlock {
    pub kind: InitialKind,
    pub value: f64,
}

impl Default for InitialBlock {
    fn default() -> Self {
        InitialBlock {
            kind: InitialKind::Random,
            value: 1.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObserveBlock {
    pub ell: f64,
    /// Random time triples per test trajectory.
    pub triples: usize,
}

impl Default for ObserveBlock {
    fn default() -> Self {
        ObserveBlock {
            ell: dynheat::logconvexity::DEFAULT_ELL,
            triples: 10,
        }
    }
}

/// A refinement level: `n` on the interval, `[nr, ntheta]` on the disk.
#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Level {
    Interval(usize),
    Disk([usize; 2]),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommutatorBlock {
    pub t: f64,
    pub resolutions: Option<Vec<Level>>,
}

impl Default for CommutatorBlock {
    fn default() -> Self {
        CommutatorBlock {
            t: 0.5,
            resolutions: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: PathBuf,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { dir: "out".into() }
    }
}

fn need<T: Copy>(v: Option<T>, key: &str) -> anyhow::Result<T> {
    v.with_context(|| format!("missing key `{key}`"))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("invalid run configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Checks every block against the preconditions of the operations it feeds.
    pub fn validate(&self) -> anyhow::Result<()> {
        self.domain_spec()?;
        self.resolution()?;
        self.weight_params()?;
        self.schedule()?;
        let t = self.time.t_final;
        if !(self.impulse.tau > 0.0 && self.impulse.tau < t) {
            bail!("impulse.tau = {} must lie in (0, time.T = {t})", self.impulse.tau);
        }
        let c = &self.control;
        if !(c.eps > 0.0) {
            bail!("control.eps = {} must be positive", c.eps);
        }
        if !(c.cg_tol > 0.0) || c.cg_maxit == 0 {
            bail!("control.cg_tol must be positive and control.cg_maxit nonzero");
        }
        if c.members == 0 {
            bail!("control.members must be at least 1");
        }
        self.kappa()?;
        let e = &self.ensemble;
        if e.count == 0 || e.train == 0 {
            bail!("ensemble.count and ensemble.train must be at least 1");
        }
        if e.smoothing_steps > 0 && !(e.smoothing_dt > 0.0) {
            bail!("ensemble.smoothing_dt = {} must be positive", e.smoothing_dt);
        }
        if !(self.observe.ell > 1.0) {
            bail!("observe.ell = {} must exceed 1", self.observe.ell);
        }
        if !(self.commutator.t >= 0.0 && self.commutator.t <= t) {
            bail!("commutator.t = {} must lie in [0, time.T]", self.commutator.t);
        }
        self.commutator_levels()?;
        Ok(())
    }

    pub fn domain_spec(&self) -> anyhow::Result<DomainSpec> {
        let d = &self.domain;
        let o = &self.omega;
        let spec = match (d.kind, d.x0) {
            (DomainKind::Interval, Coord::Scalar(x0)) => DomainSpec::interval(
                need(d.a, "domain.a")?,
                need(d.b, "domain.b")?,
                x0,
                need(o.lo, "omega.lo")?,
                need(o.hi, "omega.hi")?,
            ),
            (DomainKind::Disk, Coord::Point(x0)) => DomainSpec::disk(
                need(d.center, "domain.center")?,
                need(d.radius, "domain.radius")?,
                x0,
                need(o.center, "omega.center")?,
                need(o.radius, "omega.radius")?,
            ),
            (DomainKind::Interval, _) => bail!("domain.x0 must be a number on an interval"),
            (DomainKind::Disk, _) => bail!("domain.x0 must be [x, y] on a disk"),
        };
        spec.map_err(|e| anyhow::anyhow!("domain/omega: {e}"))
    }

    pub fn resolution(&self) -> anyhow::Result<Resolution> {
        let g = &self.grid;
        Ok(match self.domain.kind {
            DomainKind::Interval => Resolution::Interval { n: need(g.n, "grid.n")? },
            DomainKind::Disk => Resolution::Disk {
                nr: need(g.nr, "grid.nr")?,
                ntheta: need(g.ntheta, "grid.ntheta")?,
            },
        })
    }

    pub fn weight_params(&self) -> anyhow::Result<WeightParams> {
        WeightParams::new(self.weight.s, self.weight.h_weight, self.time.t_final)
            .map_err(|e| anyhow::anyhow!("weight.s / weight.h_weight / time.T: {e}"))
    }

    pub fn scheme(&self) -> Scheme {
        match self.time.scheme {
            SchemeName::CrankNicolson => Scheme::CrankNicolson,
            SchemeName::BackwardEuler => Scheme::BackwardEuler,
        }
    }

    /// `[0, T]` with the configured step.
    pub fn schedule(&self) -> anyhow::Result<Schedule> {
        Schedule::new(0.0, self.time.t_final, self.time.dt, self.scheme())
            .map_err(|e| anyhow::anyhow!("time.T / time.dt: {e}"))
    }

    pub fn kappa(&self) -> anyhow::Result<KappaChoice> {
        match &self.control.kappa {
            KappaSetting::Fixed(k) if *k > 0.0 && k.is_finite() => Ok(KappaChoice::Fixed(*k)),
            KappaSetting::Fixed(k) => bail!("control.kappa = {k} must be positive"),
            KappaSetting::Mode(m) if m == "auto" => Ok(KappaChoice::Auto),
            KappaSetting::Mode(m) if m == "fitted" => Ok(KappaChoice::Fitted),
            KappaSetting::Mode(m) => bail!("control.kappa = {m:?}: expected a number, \"auto\" or \"fitted\""),
        }
    }

    pub fn commutator_levels(&self) -> anyhow::Result<Vec<Resolution>> {
        let levels = match &self.commutator.resolutions {
            Some(l) => l.clone(),
            None => match self.domain.kind {
                DomainKind::Interval => vec![Level::Interval(32), Level::Interval(64), Level::Interval(128)],
                DomainKind::Disk => vec![Level::Disk([8, 16]), Level::Disk([16, 32]), Level::Disk([32, 64])],
            },
        };
        if levels.is_empty() {
            bail!("commutator.resolutions must not be empty");
        }
        levels
            .into_iter()
            .map(|l| match (self.domain.kind, l) {
                (DomainKind::Interval, Level::Interval(n)) => Ok(Resolution::Interval { n }),
                (DomainKind::Disk, Level::Disk([nr, ntheta])) => Ok(Resolution::Disk { nr, ntheta }),
                _ => bail!("commutator.resolutions entries must match domain.kind"),
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KappaChoice {
    Auto,
    Fitted,
    Fixed(f64),
}
