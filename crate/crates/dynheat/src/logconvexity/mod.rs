//! Weighted state `F = U e^{Φ/2}`, the `S`/`Aanti` splitting, the frequency function and the
//! checks built on it.

mod commutator;
mod interpolation;
mod observe;
mod trace;
mod weighted;

#[cfg(not(any(feature = "std", test)))]
use num_traits::Float;

pub use commutator::{
    commutator_identity_check, commutator_lhs, commutator_rhs, CommutatorRow, CommutatorTable,
    CompatibleDiskField, CompatibleIntervalField, ManufacturedField, RadialBump, ZeroField,
};
pub use interpolation::{
    interpolation_check, interpolation_exponent, InterpolationResult, INTERPOLATION_SLACK,
};
pub use observe::{
    fit_observability_constants, lemma31_constants, ObservabilityFit, Observation, MIN_ENSEMBLE,
};
pub use trace::{
    fit_step4_constant, run_trace, trace_from_trajectory, FrequencyTrace, BOUND_SLACK,
};
pub use weighted::{
    build_weighted_operators, frequency, unweighted_transform, weighted_transform, Forms,
    WeightedOperators, PHI_LIMIT,
};

use crate::geometry::DomainSpec;
use crate::{Error, Result};

/// Default multiplier `ℓ`.
pub const DEFAULT_ELL: f64 = 4.0;

/// `M_ℓ = ((ℓ+1)^{C₀} − 1)/(1 − ((ℓ+1)/(2ℓ+1))^{C₀})`.
pub fn m_ell(c0: f64, ell: f64) -> f64 {
    ((ell + 1.0).powf(c0) - 1.0) / (1.0 - ((ell + 1.0) / (2.0 * ell + 1.0)).powf(c0))
}

/// `D_ℓ = 2Cℓ²(1 + M_ℓ)`.
pub fn d_ell(c: f64, ell: f64, m_ell: f64) -> f64 {
    2.0 * c * ell * ell * (1.0 + m_ell)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step7 {
    pub ell: f64,
    pub m_ell: f64,
    pub d_ell: f64,
    /// `−(1+M_ℓ)/(1+ℓ) · min_Ω φ + max_{Ω∖ω} φ`; must be negative.
    pub sign_value: f64,
    pub sign_holds: bool,
}

pub fn step7_constants(domain: &DomainSpec, c0: f64, c: f64, ell: f64) -> Result<Step7> {
    if !(c0 > 0.0 && c0 < 1.0) {
        return Err(Error::Parameter(alloc::format!(
            "C0 = {c0} must lie in (0, 1)"
        )));
    }
    if !(ell > 1.0 && ell.is_finite()) {
        return Err(Error::Parameter(alloc::format!(
            "ell = {ell} must exceed 1"
        )));
    }
    domain.validate()?;
    let m = m_ell(c0, ell);
    let (min_phi, max_outside) = domain.phi_extremes();
    let sign_value = -(1.0 + m) / (1.0 + ell) * min_phi + max_outside;
    Ok(Step7 {
        ell,
        m_ell: m,
        d_ell: d_ell(c, ell, m),
        sign_value,
        sign_holds: sign_value < 0.0,
    })
}

/// Everything the observe pipeline reports.
#[derive(Clone, Debug, PartialEq)]
pub struct LogConvexityConstants {
    pub c0: f64,
    pub c: f64,
    pub step7: Step7,
    pub observability: ObservabilityFit,
}

impl LogConvexityConstants {
    /// `(M_ℓ, D_ℓ)`, withheld when the Step-7 sign condition fails.
    pub fn accepted_step7(&self) -> Option<(f64, f64)> {
        self.step7
            .sign_holds
            .then_some((self.step7.m_ell, self.step7.d_ell))
    }
}
