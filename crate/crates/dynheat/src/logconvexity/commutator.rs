use alloc::format;
use alloc::vec::Vec;
use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
#[cfg(not(any(feature = "std", test)))]
use num_traits::Float;

use super::weighted::build_weighted_operators;
use crate::discretize::{assemble, Discretization, Resolution, State};
use crate::geometry::{dist, weight_phi_bundle, DomainSpec, Point, Shape, WeightParams};
use crate::quadrature::gauss_legendre;
use crate::{Error, Result};

/// A smooth field evaluated exactly, used as the weighted state `f`.
pub trait ManufacturedField {
    fn value(&self, x: Point) -> f64;
    fn gradient(&self, x: Point) -> Point;
}

/// The zero field.
pub struct ZeroField;

impl ManufacturedField for ZeroField {
    fn value(&self, _: Point) -> f64 {
        0.0
    }
    fn gradient(&self, _: Point) -> Point {
        [0.0, 0.0]
    }
}

/// `exp(−α|x − c|²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialBump {
    pub center: Point,
    pub alpha: f64,
}

impl ManufacturedField for RadialBump {
    fn value(&self, x: Point) -> f64 {
        let r = dist(x, self.center);
        (-self.alpha * r * r).exp()
    }
    fn gradient(&self, x: Point) -> Point {
        let v = -2.0 * self.alpha * self.value(x);
        [v * (x[0] - self.center[0]), v * (x[1] - self.center[1])]
    }
}

/// A smooth field on an interval that satisfies, at both endpoints and at one time `t`,
/// the two conditions under which `SF` and `AantiF` are themselves continuous up to the
/// boundary unknown:
///
/// * `−φ′f′ + f/4 − ½νφ′f = 0`
/// * `f″ + ¼(sφ′/Υ)²f + νf′ = 0`
///
/// With `y = (x − a)/(b − a)` the field is `cos 2y + y² + Σ_{k=2}^{5} c_k (y − 0.3)^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompatibleIntervalField {
    a: f64,
    len: f64,
    coef: [f64; 4],
}

const SHIFT: f64 = 0.3;

impl CompatibleIntervalField {
    pub fn new(domain: &DomainSpec, params: &WeightParams, t: f64) -> Result<Self> {
        domain.validate()?;
        params.check_time(t)?;
        let Shape::Interval { a, b } = domain.shape else {
            return Err(Error::Unsupported(
                "compatible field needs an interval".into(),
            ));
        };
        let len = b - a;
        let y = params.upsilon(t);
        let base = CompatibleIntervalField {
            a,
            len,
            coef: [0.0; 4],
        };
        let mut mat = Matrix4::<f64>::zeros();
        let mut rhs = Vector4::<f64>::zeros();
        for (row, (p, nu)) in [(a, -1.0), (b, 1.0)].into_iter().enumerate() {
            let dphi = -(p - domain.x0[0]) / 2.0;
            let big = params.s * dphi / y;
            let conds = |d: [f64; 3]| {
                [
                    -dphi * d[1] + 0.25 * d[0] - 0.5 * nu * dphi * d[0],
                    d[2] + 0.25 * big * big * d[0] + nu * d[1],
                ]
            };
            let g = conds(base.base_derivs(p));
            for k in 0..4 {
                let c = conds(base.basis_derivs(k, p));
                mat[(2 * row, k)] = c[0];
                mat[(2 * row + 1, k)] = c[1];
            }
            rhs[2 * row] = -g[0];
            rhs[2 * row + 1] = -g[1];
        }
        let sol = mat
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Parameter("compatibility system is singular".into()))?;
        Ok(CompatibleIntervalField {
            a,
            len,
            coef: [sol[0], sol[1], sol[2], sol[3]],
        })
    }

    /// `(g, g′, g″)` in `x` for the base `cos 2y + y²`.
    fn base_derivs(&self, x: f64) -> [f64; 3] {
        let y = (x - self.a) / self.len;
        let l = self.len;
        [
            (2.0 * y).cos() + y * y,
            (-2.0 * (2.0 * y).sin() + 2.0 * y) / l,
            (-4.0 * (2.0 * y).cos() + 2.0) / (l * l),
        ]
    }

    /// `(q, q′, q″)` in `x` for `q = (y − 0.3)^{k+2}`.
    fn basis_derivs(&self, k: usize, x: f64) -> [f64; 3] {
        let p = (k + 2) as i32;
        let z = (x - self.a) / self.len - SHIFT;
        let l = self.len;
        let pf = p as f64;
        [
            z.powi(p),
            pf * z.powi(p - 1) / l,
            pf * (pf - 1.0) * z.powi(p - 2) / (l * l),
        ]
    }

    fn derivs(&self, x: f64) -> [f64; 3] {
        let mut d = self.base_derivs(x);
        for k in 0..4 {
            let q = self.basis_derivs(k, x);
            for i in 0..3 {
                d[i] += self.coef[k] * q[i];
            }
        }
        d
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        self.derivs(x)[2]
    }
}

impl ManufacturedField for CompatibleIntervalField {
    fn value(&self, x: Point) -> f64 {
        self.derivs(x[0])[0]
    }
    fn gradient(&self, x: Point) -> Point {
        [self.derivs(x[0])[1], 0.0]
    }
}

/// The disk counterpart of [`CompatibleIntervalField`] for `x₀` at the center: a radial
/// field meeting, on the circle `r = R` at one time `t`,
///
/// * `−φ_r f′ + ½f − ½φ_r f = 0`
/// * `f″ + f′/R + ¼(sφ_r/Υ)²f + f′ = 0`
///
/// With `ρ = r/R` the profile is `cos 2ρ + ρ² + c₁ρ⁴ + c₂ρ⁶`, smooth at the center.
#[derive(Clone, Debug, PartialEq)]
pub struct CompatibleDiskField {
    center: Point,
    radius: f64,
    coef: [f64; 2],
}

impl CompatibleDiskField {
    pub fn new(domain: &DomainSpec, params: &WeightParams, t: f64) -> Result<Self> {
        supported(domain)?;
        params.check_time(t)?;
        let Shape::Disk { center, radius } = domain.shape else {
            return Err(Error::Unsupported(
                "compatible disk field needs a disk".into(),
            ));
        };
        let base = CompatibleDiskField {
            center,
            radius,
            coef: [0.0; 2],
        };
        let dphi = -radius / 2.0;
        let big = params.s * dphi / params.upsilon(t);
        let conds = |d: [f64; 3]| {
            [
                -dphi * d[1] + 0.5 * d[0] - 0.5 * dphi * d[0],
                d[2] + d[1] / radius + 0.25 * big * big * d[0] + d[1],
            ]
        };
        let g = conds(base.profile(radius, None));
        let c1 = conds(base.profile(radius, Some(0)));
        let c2 = conds(base.profile(radius, Some(1)));
        let sol = Matrix2::new(c1[0], c2[0], c1[1], c2[1])
            .lu()
            .solve(&Vector2::new(-g[0], -g[1]))
            .ok_or_else(|| Error::Parameter("compatibility system is singular".into()))?;
        Ok(CompatibleDiskField {
            center,
            radius,
            coef: [sol[0], sol[1]],
        })
    }

    /// `(g, g′, g″)` in `r` for the base (`None`) or the term `ρ^{4+2k}`.
    fn profile(&self, r: f64, term: Option<usize>) -> [f64; 3] {
        let l = self.radius;
        let y = r / l;
        match term {
            None => [
                (2.0 * y).cos() + y * y,
                (-2.0 * (2.0 * y).sin() + 2.0 * y) / l,
                (-4.0 * (2.0 * y).cos() + 2.0) / (l * l),
            ],
            Some(k) => {
                let p = (4 + 2 * k) as i32;
                let pf = p as f64;
                [
                    y.powi(p),
                    pf * y.powi(p - 1) / l,
                    pf * (pf - 1.0) * y.powi(p - 2) / (l * l),
                ]
            }
        }
    }

    fn derivs(&self, r: f64) -> [f64; 3] {
        let mut d = self.profile(r, None);
        for k in 0..2 {
            let q = self.profile(r, Some(k));
            for i in 0..3 {
                d[i] += self.coef[k] * q[i];
            }
        }
        d
    }
}

impl ManufacturedField for CompatibleDiskField {
    fn value(&self, x: Point) -> f64 {
        self.derivs(dist(x, self.center))[0]
    }
    fn gradient(&self, x: Point) -> Point {
        let r = dist(x, self.center);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let d = self.derivs(r)[1] / r;
        [d * (x[0] - self.center[0]), d * (x[1] - self.center[1])]
    }
}

/// `⟨−S′F,F⟩ − 2⟨SF,AantiF⟩` for `F` sampled from `field` on the grid.
pub fn commutator_lhs(
    disc: &Discretization,
    params: &WeightParams,
    t: f64,
    field: &dyn ManufacturedField,
) -> Result<f64> {
    let w = build_weighted_operators(t, disc, params)?;
    let f = State::sample(&disc.grid, |x| field.value(x));
    Ok(w.forms(f.as_slice()).q)
}

/// Quadrature of the closed-form right side of the commutator identity for the supported
/// configurations (interval, or disk with `x₀` at the center). There `φ` is constant on
/// each boundary component, so its tangential gradient, boundary Hessian and `Δ_Γφ` vanish.
pub fn commutator_rhs(
    domain: &DomainSpec,
    params: &WeightParams,
    t: f64,
    field: &dyn ManufacturedField,
) -> Result<f64> {
    supported(domain)?;
    params.check_time(t)?;
    let s = params.s;
    let y = params.upsilon(t);
    let (y1, y3) = (y, y * y * y);
    let lap = -(domain.dim() as f64) / 2.0;
    let bulk = |x: Point| {
        let b = weight_phi_bundle(domain, x);
        let g2 = b.grad[0] * b.grad[0] + b.grad[1] * b.grad[1];
        let f = field.value(x);
        let df = field.gradient(x);
        -s / y3 * (b.phi + 0.5 * s * g2) * f * f + s / y1 * (df[0] * df[0] + df[1] * df[1])
            - s * s * (2.0 - s) / (4.0 * y3) * g2 * f * f
    };
    let bdry = |x: Point| -> Result<f64> {
        let b = weight_phi_bundle(domain, x);
        let dn_phi = b.normal_deriv()?;
        let nu = domain.outward_normal(x);
        let f = field.value(x);
        let df = field.gradient(x);
        let dn_f = df[0] * nu[0] + df[1] * nu[1];
        Ok(s / y1 * dn_phi * dn_f * dn_f - s / y3 * b.phi * f * f
            + s / y1 * (lap + dn_phi) * dn_f * f
            + s * s * s / (4.0 * y3) * dn_phi * dn_phi * dn_phi * f * f)
    };
    match domain.shape {
        Shape::Interval { a, b } => {
            let (xs, ws) = gauss_legendre(60, a, b);
            let vol: f64 = xs.iter().zip(&ws).map(|(x, w)| w * bulk([*x, 0.0])).sum();
            Ok(vol + bdry([a, 0.0])? + bdry([b, 0.0])?)
        }
        Shape::Disk { center, radius } => {
            let (rs, wr) = gauss_legendre(80, 0.0, radius);
            let nt = 256;
            let dth = 2.0 * core::f64::consts::PI / nt as f64;
            let mut vol = 0.0;
            let mut surf = 0.0;
            for j in 0..nt {
                let (sn, cs) = (j as f64 * dth).sin_cos();
                for (r, w) in rs.iter().zip(&wr) {
                    vol += w * r * dth * bulk([center[0] + r * cs, center[1] + r * sn]);
                }
                surf += radius * dth * bdry([center[0] + radius * cs, center[1] + radius * sn])?;
            }
            Ok(vol + surf)
        }
    }
}

fn supported(domain: &DomainSpec) -> Result<()> {
    domain.validate()?;
    if let Shape::Disk { center, radius } = domain.shape {
        if dist(center, domain.x0) > 1e-12 * radius {
            return Err(Error::Unsupported(
                "commutator check on a disk needs x0 at the center".into(),
            ));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorRow {
    pub resolution: Resolution,
    pub spacing: f64,
    pub dof: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `|LHS − RHS|/|RHS|` (0 when both vanish).
    pub rel_residual: f64,
    /// Observed order against the previous row, from the spacing ratio.
    pub order: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorTable {
    pub t: f64,
    pub rows: Vec<CommutatorRow>,
}

impl CommutatorTable {
    pub fn strictly_decreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].rel_residual < w[0].rel_residual)
    }

    pub fn min_order(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.order).reduce(f64::min)
    }
}

/// Compares the discrete commutator form with the closed form across resolutions.
pub fn commutator_identity_check(
    domain: &DomainSpec,
    params: &WeightParams,
    t: f64,
    field: &dyn ManufacturedField,
    resolutions: &[Resolution],
) -> Result<CommutatorTable> {
    supported(domain)?;
    if resolutions.is_empty() {
        return Err(Error::Usage("no resolutions given".into()));
    }
    let rhs = commutator_rhs(domain, params, t, field)?;
    let mut rows: Vec<CommutatorRow> = Vec::with_capacity(resolutions.len());
    for &res in resolutions {
        let disc = assemble(domain, res)?;
        let lhs = commutator_lhs(&disc, params, t, field)?;
        let rel = if rhs == 0.0 {
            if lhs == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (lhs - rhs).abs() / rhs.abs()
        };
        let order = rows.last().and_then(|p: &CommutatorRow| {
            (p.rel_residual > 0.0 && rel > 0.0)
                .then(|| (p.rel_residual / rel).ln() / (p.spacing / disc.grid.spacing).ln())
        });
        rows.push(CommutatorRow {
            resolution: res,
            spacing: disc.grid.spacing,
            dof: disc.grid.len(),
            lhs,
            rhs,
            rel_residual: rel,
            order,
        });
    }
    if rows.windows(2).any(|w| w[1].spacing >= w[0].spacing) {
        return Err(Error::Usage(format!(
            "resolutions must refine monotonically: {resolutions:?}"
        )));
    }
    Ok(CommutatorTable { t, rows })
}
