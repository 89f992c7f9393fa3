use alloc::format;
use alloc::vec::Vec;
#[cfg(not(any(feature = "std", test)))]
use num_traits::Float;

use crate::discretize::{OperatorSet, State};
use crate::{Error, Result};

/// Smallest training ensemble accepted by the fit.
pub const MIN_ENSEMBLE: usize = 20;

/// Norms of one member at one horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    /// `‖U(0)‖`.
    pub initial: f64,
    /// `‖U(T)‖`.
    pub terminal: f64,
    /// `‖u(T)‖_{L²(ω)}`.
    pub observed: f64,
}

impl Observation {
    pub fn of(ops: &OperatorSet, u0: &State, ut: &State) -> Result<Self> {
        Ok(Observation {
            initial: ops.norm(u0)?,
            terminal: ops.norm(ut)?,
            observed: ops.omega_norm(&ops.restrict(ut.as_slice())),
        })
    }

    /// `(ln(‖u(T)‖_ω/‖U(0)‖), ln(‖U(T)‖/‖U(0)‖))`.
    fn logs(&self) -> Result<(f64, f64)> {
        if !(self.initial > 0.0 && self.terminal > 0.0 && self.observed > 0.0) {
            return Err(Error::DegenerateData(format!("vanishing norm in {self:?}")));
        }
        Ok((
            (self.observed / self.initial).ln(),
            (self.terminal / self.initial).ln(),
        ))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservabilityFit {
    pub beta: f64,
    pub mu: f64,
    pub k: f64,
    /// `ln(μ e^{K/T})` at the final horizon.
    pub log_constant: f64,
    pub m1: f64,
    pub m2: f64,
    pub delta: f64,
    pub horizons: Vec<f64>,
    /// Slack-shifted `ln(μ e^{K/T_j})` per horizon before the `(μ, K)` regression.
    pub horizon_constants: Vec<f64>,
    pub holdout_size: usize,
    pub holdout_violations: usize,
}

/// `M₁ = K₁^{1/β}(1−β)^{(1−β)/(2β)}β^{1/2}`, `M₂ = K₂/β`, `δ = (1−β)/β`.
pub fn lemma31_constants(beta: f64, k1: f64, k2: f64) -> (f64, f64, f64) {
    let m1 = k1.powf(1.0 / beta) * (1.0 - beta).powf((1.0 - beta) / (2.0 * beta)) * beta.sqrt();
    (m1, k2 / beta, (1.0 - beta) / beta)
}

/// Fits `‖U(T)‖ ≤ (μ e^{K/T} ‖u(T)‖_ω)^β ‖U(0)‖^{1−β}`.
///
/// `train[i][j]` is member `i` at `horizons[j]`; the last horizon is the final time `T`.
/// `β` comes from a least-squares line in log space at `T`; the per-horizon constants are
/// then shifted so that every training member satisfies the inequality (equality for at
/// least one), and `ln μ + K/T_j` is regressed over the horizons. Holdout members are
/// observed at `T`.
pub fn fit_observability_constants(
    horizons: &[f64],
    train: &[Vec<Observation>],
    holdout: &[Observation],
) -> Result<ObservabilityFit> {
    if train.len() < MIN_ENSEMBLE {
        return Err(Error::Config(format!(
            "observability fit needs at least {MIN_ENSEMBLE} members, got {}",
            train.len()
        )));
    }
    if horizons.is_empty()
        || horizons.iter().any(|&t| !(t > 0.0))
        || horizons.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::Usage(
            "horizons must be positive and increasing".into(),
        ));
    }
    if train.iter().any(|m| m.len() != horizons.len()) {
        return Err(Error::Usage(
            "every member needs one observation per horizon".into(),
        ));
    }
    let last = horizons.len() - 1;
    let pts: Vec<Vec<(f64, f64)>> = train
        .iter()
        .map(|m| m.iter().map(Observation::logs).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), p| {
        (a + p[last].0 / n, b + p[last].1 / n)
    });
    let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |(a, b), p| {
        let (dx, dy) = (p[last].0 - mx, p[last].1 - my);
        (a + dx * dx, b + dx * dy)
    });
    if sxx <= 1e-12 * n * (1.0 + mx * mx) {
        return Err(Error::Fit(
            "degenerate ensemble: observed norms do not vary".into(),
        ));
    }
    let beta = sxy / sxx;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Fit(format!(
            "least-squares beta = {beta} is outside (0, 1)"
        )));
    }

    let consts: Vec<f64> = (0..horizons.len())
        .map(|j| {
            pts.iter()
                .map(|p| p[j].1 / beta - p[j].0)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let (k, log_mu) = if horizons.len() == 1 {
        (0.0, consts[0])
    } else {
        let inv: Vec<f64> = horizons.iter().map(|t| 1.0 / t).collect();
        let m = inv.len() as f64;
        let (mi, mc) = (inv.iter().sum::<f64>() / m, consts.iter().sum::<f64>() / m);
        let (sii, sic) = inv.iter().zip(&consts).fold((0.0, 0.0), |(a, b), (i, c)| {
            (a + (i - mi) * (i - mi), b + (i - mi) * (c - mc))
        });
        let k = (sic / sii).max(0.0);
        let shift = inv
            .iter()
            .zip(&consts)
            .map(|(i, c)| c - k * i)
            .fold(f64::NEG_INFINITY, f64::max);
        (k, shift)
    };
    let t_final = horizons[last];
    let log_constant = log_mu + k / t_final;
    let mut holdout_violations = 0;
    for o in holdout {
        let (x, y) = o.logs()?;
        if y > beta * (log_constant + x) + 1e-12 {
            holdout_violations += 1;
        }
    }
    let mu = log_mu.exp();
    let (m1, m2, delta) = lemma31_constants(beta, mu, k);
    Ok(ObservabilityFit {
        beta,
        mu,
        k,
        log_constant,
        m1,
        m2,
        delta,
        horizons: horizons.to_vec(),
        horizon_constants: consts,
        holdout_size: holdout.len(),
        holdout_violations,
    })
}
