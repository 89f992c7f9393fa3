use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(any(feature = "std", test)))]
use num_traits::Float;

use crate::discretize::{Discretization, OperatorSet, State};
use crate::geometry::{weight_phi_bundle, WeightParams};
use crate::linalg::wdot;
use crate::{Error, Result};

/// Largest `|Φ|` accepted before the exponential weights are considered unsafe.
pub const PHI_LIMIT: f64 = 600.0;

/// `Φ(·,t)` and `∂ₜΦ(·,t)` at every node.
fn weight_fields(
    t: f64,
    disc: &Discretization,
    params: &WeightParams,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    params.check_time(t)?;
    let y = params.upsilon(t);
    let mut phi = Vec::with_capacity(disc.grid.len());
    let mut phi_t = Vec::with_capacity(disc.grid.len());
    for &x in &disc.grid.nodes {
        let v = params.s * weight_phi_bundle(&disc.domain, x).phi / y;
        phi.push(v);
        phi_t.push(v / y);
    }
    let worst = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(worst <= PHI_LIMIT) {
        return Err(Error::Parameter(format!(
            "|Phi| reaches {worst:e} at t = {t}; use a larger h or a smaller s"
        )));
    }
    Ok((y, phi, phi_t))
}

/// `F = U e^{Φ/2}` node by node.
pub fn weighted_transform(
    u: &State,
    t: f64,
    params: &WeightParams,
    disc: &Discretization,
) -> Result<State> {
    let (_, phi, _) = weight_fields(t, disc, params)?;
    let data = u
        .as_slice()
        .iter()
        .zip(&phi)
        .map(|(u, p)| u * (0.5 * p).exp())
        .collect();
    Ok(State::from_vec(data, u.n_bulk()))
}

/// `U = F e^{−Φ/2}`.
pub fn unweighted_transform(
    f: &State,
    t: f64,
    params: &WeightParams,
    disc: &Discretization,
) -> Result<State> {
    let (_, phi, _) = weight_fields(t, disc, params)?;
    let data = f
        .as_slice()
        .iter()
        .zip(&phi)
        .map(|(f, p)| f * (-0.5 * p).exp())
        .collect();
    Ok(State::from_vec(data, f.n_bulk()))
}

/// The weighted generator `P1 = ½∂ₜΦ + E A E⁻¹` at a fixed time, split into its symmetric part
/// `S` and antisymmetric part `Aanti` in `⟨·,·⟩_M`.
///
/// With `A = −M⁻¹K` and `dᵢⱼ = (Φᵢ − Φⱼ)/2` an edge of weight `k` contributes
/// `k cosh dᵢⱼ / mᵢ` to `Sᵢⱼ` and `k sinh dᵢⱼ / mᵢ` to `Aantiᵢⱼ`. `S′` differentiates these
/// factors in time exactly.
pub struct WeightedOperators<'a> {
    ops: &'a OperatorSet,
    pub t: f64,
    pub upsilon: f64,
    pub phi: Vec<f64>,
    pub phi_t: Vec<f64>,
    /// `e^{Φ/2}`.
    pub e: Vec<f64>,
    /// `½(∂ₜΦ + ½|∇Φ|²)` at every node.
    pub eta: Vec<f64>,
    /// `½(∂ₜΦ + ½|∇_ΓΦ|²)` at trace nodes.
    pub theta_w: Vec<f64>,
    cosh: Vec<f64>,
    sinh: Vec<f64>,
    ddt: Vec<f64>,
}

pub fn build_weighted_operators<'a>(
    t: f64,
    disc: &'a Discretization,
    params: &WeightParams,
) -> Result<WeightedOperators<'a>> {
    let (upsilon, phi, phi_t) = weight_fields(t, disc, params)?;
    let ops = &disc.ops;
    let mut cosh = Vec::with_capacity(ops.edges.len());
    let mut sinh = Vec::with_capacity(ops.edges.len());
    let mut ddt = Vec::with_capacity(ops.edges.len());
    for e in &ops.edges {
        let d = 0.5 * (phi[e.i] - phi[e.j]);
        cosh.push(d.cosh());
        sinh.push(d.sinh());
        ddt.push(0.5 * (phi_t[e.i] - phi_t[e.j]));
    }
    let scale = params.s / upsilon;
    let mut eta = Vec::with_capacity(phi.len());
    for (i, &x) in disc.grid.nodes.iter().enumerate() {
        let g = weight_phi_bundle(&disc.domain, x).grad;
        eta.push(0.5 * (phi_t[i] + 0.5 * scale * scale * (g[0] * g[0] + g[1] * g[1])));
    }
    let theta_w = disc.grid.nodes[disc.grid.n_bulk..]
        .iter()
        .zip(&phi_t[disc.grid.n_bulk..])
        .map(|(&x, pt)| {
            let g = weight_phi_bundle(&disc.domain, x).grad;
            let nu = disc.domain.outward_normal(x);
            let gn = g[0] * nu[0] + g[1] * nu[1];
            let tang = [g[0] - gn * nu[0], g[1] - gn * nu[1]];
            0.5 * (pt + 0.5 * scale * scale * (tang[0] * tang[0] + tang[1] * tang[1]))
        })
        .collect();
    Ok(WeightedOperators {
        ops,
        t,
        upsilon,
        e: phi.iter().map(|p| (0.5 * p).exp()).collect(),
        phi,
        phi_t,
        eta,
        theta_w,
        cosh,
        sinh,
        ddt,
    })
}

/// Quadratic forms of one weighted state at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Forms {
    /// `‖F‖²`.
    pub norm2: f64,
    /// `⟨−SF,F⟩`.
    pub s_form: f64,
    /// `⟨−S′F,F⟩ − 2⟨SF, AantiF⟩`.
    pub q: f64,
}

impl<'a> WeightedOperators<'a> {
    pub fn ops(&self) -> &OperatorSet {
        self.ops
    }

    pub fn apply_s(&self, f: &[f64], out: &mut [f64]) {
        let ops = self.ops;
        for i in 0..f.len() {
            out[i] = -ops.stiffness_diag[i] * f[i];
        }
        for (e, c) in ops.edges.iter().zip(&self.cosh) {
            out[e.i] += e.k * c * f[e.j];
            out[e.j] += e.k * c * f[e.i];
        }
        for i in 0..f.len() {
            out[i] = 0.5 * self.phi_t[i] * f[i] + out[i] / ops.mass[i];
        }
    }

    pub fn apply_anti(&self, f: &[f64], out: &mut [f64]) {
        let ops = self.ops;
        out.iter_mut().for_each(|v| *v = 0.0);
        for (e, s) in ops.edges.iter().zip(&self.sinh) {
            out[e.i] += e.k * s * f[e.j];
            out[e.j] -= e.k * s * f[e.i];
        }
        for (o, m) in out.iter_mut().zip(&ops.mass) {
            *o /= m;
        }
    }

    /// `∂ₜS` with `∂ₜ²Φ = 2Φ/Υ²`.
    pub fn apply_s_prime(&self, f: &[f64], out: &mut [f64]) {
        let ops = self.ops;
        out.iter_mut().for_each(|v| *v = 0.0);
        for ((e, s), d) in ops.edges.iter().zip(&self.sinh).zip(&self.ddt) {
            let w = e.k * s * d;
            out[e.i] += w * f[e.j];
            out[e.j] += w * f[e.i];
        }
        let y2 = self.upsilon * self.upsilon;
        for i in 0..f.len() {
            out[i] = self.phi[i] / y2 * f[i] + out[i] / ops.mass[i];
        }
    }

    /// `P1 F = S F + Aanti F`.
    pub fn apply_p1(&self, f: &[f64], out: &mut [f64]) {
        let mut tmp = vec![0.0; f.len()];
        self.apply_s(f, out);
        self.apply_anti(f, &mut tmp);
        for (o, t) in out.iter_mut().zip(&tmp) {
            *o += t;
        }
    }

    pub fn forms(&self, f: &[f64]) -> Forms {
        let m = &self.ops.mass;
        let n = f.len();
        let (mut sf, mut af, mut spf) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        self.apply_s(f, &mut sf);
        self.apply_anti(f, &mut af);
        self.apply_s_prime(f, &mut spf);
        Forms {
            norm2: wdot(m, f, f),
            s_form: -wdot(m, &sf, f),
            q: -wdot(m, &spf, f) - 2.0 * wdot(m, &sf, &af),
        }
    }
}

/// `𝒩 = ⟨−SF,F⟩/‖F‖²`.
pub fn frequency(f: &State, wops: &WeightedOperators<'_>) -> Result<f64> {
    let fm = wops.forms(f.as_slice());
    if !(fm.norm2 > 0.0) {
        return Err(Error::UndefinedFrequency);
    }
    Ok(fm.s_form / fm.norm2)
}
