#[cfg(not(any(feature = "std", test)))]
use num_traits::Float;

use super::trace::FrequencyTrace;
use crate::{Error, Result};

/// Relative slack of the three-point check.
pub const INTERPOLATION_SLACK: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterpolationResult {
    pub m: f64,
    pub d: f64,
    /// `(1+M) ln ‖F(t₂)‖²`.
    pub log_lhs: f64,
    /// `M ln ‖F(t₁)‖² + ln ‖F(t₃)‖² + D`.
    pub log_rhs: f64,
    pub pass: bool,
}

/// `∫_{t₂}^{t₃} Υ^{−(1+C₀)} / ∫_{t₁}^{t₂} Υ^{−(1+C₀)}` from the antiderivative `Υ^{−C₀}/C₀`.
pub fn interpolation_exponent(c0: f64, t_final: f64, h: f64, t1: f64, t2: f64, t3: f64) -> f64 {
    let p = |t: f64| (t_final - t + h).powf(-c0);
    (p(t3) - p(t2)) / (p(t2) - p(t1))
}

/// Checks `‖F(t₂)‖^{2(1+M)} ≤ ‖F(t₁)‖^{2M} ‖F(t₃)‖² e^D` with
/// `D = 2(1+M)(t₃−t₁)²C/h²`, in logarithms.
pub fn interpolation_check(
    trace: &FrequencyTrace,
    times: [f64; 3],
    c: f64,
) -> Result<InterpolationResult> {
    let [t1, t2, t3] = times;
    if !(0.0 < t1 && t1 < t2 && t2 <= t3 && t3 <= trace.t_final) {
        return Err(Error::Usage(alloc::format!(
            "times must satisfy 0 < t1 < t2 <= t3 <= T, got {t1}, {t2}, {t3}"
        )));
    }
    let idx = |t: f64| {
        trace
            .index_of(t)
            .ok_or_else(|| Error::Usage(alloc::format!("t = {t} is not a recorded time")))
    };
    let (i1, i2, i3) = (idx(t1)?, idx(t2)?, idx(t3)?);
    let m = interpolation_exponent(trace.c0, trace.t_final, trace.h, t1, t2, t3);
    let d = 2.0 * (1.0 + m) * (t3 - t1) * (t3 - t1) * c / (trace.h * trace.h);
    let log_lhs = (1.0 + m) * trace.norm_f2[i2].ln();
    let log_rhs = m * trace.norm_f2[i1].ln() + trace.norm_f2[i3].ln() + d;
    Ok(InterpolationResult {
        m,
        d,
        log_lhs,
        log_rhs,
        pass: log_lhs <= log_rhs + INTERPOLATION_SLACK.ln_1p(),
    })
}
