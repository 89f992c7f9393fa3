//! Domains, the gauge function and the weights `φ`, `Φ`, `Υ`.
//!
//! Points are always `[f64; 2]`; on the interval only the first coordinate is used.

use alloc::format;
#[cfg(not(any(feature = "std", test)))]
use num_traits::Float;

use crate::{Error, Result};

pub type Point = [f64; 2];

/// Distance below which a point counts as lying on the boundary, relative to the domain size.
const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Interval { a: f64, b: f64 },
    Disk { center: Point, radius: f64 },
}

/// The open observation set `ω`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ObservationRegion {
    Interval { lo: f64, hi: f64 },
    Disk { center: Point, radius: f64 },
}

impl ObservationRegion {
    pub fn contains(&self, x: Point) -> bool {
        match *self {
            ObservationRegion::Interval { lo, hi } => lo < x[0] && x[0] < hi,
            ObservationRegion::Disk { center, radius } => dist(x, center) < radius,
        }
    }
}

/// A convex domain together with the anchor `x₀` of `φ` and the observation region.
///
/// Fields are public plain data; every operation that relies on the invariants calls
/// [`DomainSpec::validate`] first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainSpec {
    pub shape: Shape,
    pub x0: Point,
    pub omega: ObservationRegion,
}

impl DomainSpec {
    pub fn interval(a: f64, b: f64, x0: f64, lo: f64, hi: f64) -> Result<Self> {
        let d = DomainSpec {
            shape: Shape::Interval { a, b },
            x0: [x0, 0.0],
            omega: ObservationRegion::Interval { lo, hi },
        };
        d.validate()?;
        Ok(d)
    }

    pub fn disk(
        center: Point,
        radius: f64,
        x0: Point,
        omega_center: Point,
        omega_radius: f64,
    ) -> Result<Self> {
        let d = DomainSpec {
            shape: Shape::Disk { center, radius },
            x0,
            omega: ObservationRegion::Disk {
                center: omega_center,
                radius: omega_radius,
            },
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidDomain(m.into()));
        match self.shape {
            Shape::Interval { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return bad("interval needs finite a < b");
                }
            }
            Shape::Disk { center, radius } => {
                if !(center[0].is_finite()
                    && center[1].is_finite()
                    && radius.is_finite()
                    && radius > 0.0)
                {
                    return bad("disk needs a finite center and radius > 0");
                }
            }
        }
        if !(self.x0[0].is_finite() && self.x0[1].is_finite()) {
            return bad("x0 must be finite");
        }
        if self.depth(self.x0) <= BOUNDARY_TOL * self.size() {
            return bad("x0 must lie strictly inside the domain");
        }
        match (self.shape, self.omega) {
            (Shape::Interval { a, b }, ObservationRegion::Interval { lo, hi }) => {
                if !(a < lo && lo < hi && hi < b) {
                    return bad("omega must satisfy a < lo < hi < b");
                }
            }
            (
                Shape::Disk { center, radius },
                ObservationRegion::Disk {
                    center: oc,
                    radius: or,
                },
            ) => {
                if !(or > 0.0 && dist(oc, center) + or < radius) {
                    return bad(
                        "omega disk must have positive radius and closure inside the domain",
                    );
                }
            }
            _ => return bad("omega kind must match the domain kind"),
        }
        if !self.omega.contains(self.x0) {
            return bad("x0 must lie in omega");
        }
        Ok(())
    }

    /// Spatial dimension `n`.
    pub fn dim(&self) -> usize {
        match self.shape {
            Shape::Interval { .. } => 1,
            Shape::Disk { .. } => 2,
        }
    }

    /// Interval midpoint or disk center; the gauge is taken about this point.
    pub fn center(&self) -> Point {
        match self.shape {
            Shape::Interval { a, b } => [0.5 * (a + b), 0.0],
            Shape::Disk { center, .. } => center,
        }
    }

    /// Half-length or radius.
    pub fn size(&self) -> f64 {
        match self.shape {
            Shape::Interval { a, b } => 0.5 * (b - a),
            Shape::Disk { radius, .. } => radius,
        }
    }

    /// `|Ω|`.
    pub fn volume(&self) -> f64 {
        match self.shape {
            Shape::Interval { a, b } => b - a,
            Shape::Disk { radius, .. } => core::f64::consts::PI * radius * radius,
        }
    }

    /// `|Γ|`: two points with unit weight on the interval, circumference on the disk.
    pub fn boundary_measure(&self) -> f64 {
        match self.shape {
            Shape::Interval { .. } => 2.0,
            Shape::Disk { radius, .. } => 2.0 * core::f64::consts::PI * radius,
        }
    }

    /// Distance from `x` to the boundary, negative outside.
    pub fn depth(&self, x: Point) -> f64 {
        match self.shape {
            Shape::Interval { a, b } => (x[0] - a).min(b - x[0]),
            Shape::Disk { center, radius } => radius - dist(x, center),
        }
    }

    pub fn on_boundary(&self, x: Point) -> bool {
        self.depth(x).abs() <= BOUNDARY_TOL * self.size().max(1.0)
    }

    /// Outward unit normal at a boundary point. For interior points the normal of the
    /// nearest boundary point is returned.
    pub fn outward_normal(&self, x: Point) -> Point {
        match self.shape {
            Shape::Interval { a, b } => {
                if x[0] - a < b - x[0] {
                    [-1.0, 0.0]
                } else {
                    [1.0, 0.0]
                }
            }
            Shape::Disk { center, .. } => {
                let r = dist(x, center);
                [(x[0] - center[0]) / r, (x[1] - center[1]) / r]
            }
        }
    }

    /// `min φ` over the closed domain and `max φ` over the closed complement of `ω`.
    /// Both enter the Step-7 sign condition.
    pub fn phi_extremes(&self) -> (f64, f64) {
        let far = match self.shape {
            Shape::Interval { a, b } => (self.x0[0] - a).max(b - self.x0[0]),
            Shape::Disk { center, radius } => dist(self.x0, center) + radius,
        };
        let near = match self.omega {
            ObservationRegion::Interval { lo, hi } => (self.x0[0] - lo).min(hi - self.x0[0]),
            ObservationRegion::Disk { center, radius } => radius - dist(self.x0, center),
        };
        (-far * far / 4.0, -near * near / 4.0)
    }
}

pub(crate) fn dist(x: Point, y: Point) -> f64 {
    (x[0] - y[0]).hypot(x[1] - y[1])
}

/// Minkowski gauge `j_Ω(x)` about the domain center: 0 at the center, 1 on the boundary,
/// positively homogeneous of degree 1.
pub fn gauge_value(domain: &DomainSpec, x: Point) -> f64 {
    let c = domain.center();
    match domain.shape {
        Shape::Interval { .. } => (x[0] - c[0]).abs() / domain.size(),
        Shape::Disk { .. } => dist(x, c) / domain.size(),
    }
}

/// Level function `θ_level = j_Ω² − 1`; negative inside, zero on the boundary.
pub fn level_value(domain: &DomainSpec, x: Point) -> f64 {
    let j = gauge_value(domain, x);
    j * j - 1.0
}

/// `φ` and its derivatives at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiBundle {
    pub phi: f64,
    pub grad: Point,
    pub laplacian: f64,
    normal: Option<f64>,
}

impl PhiBundle {
    /// `∂_νφ = −(x−x₀)·ν/2`; only defined on the boundary.
    pub fn normal_deriv(&self) -> Result<f64> {
        self.normal
            .ok_or_else(|| Error::Usage("normal derivative requested at an interior point".into()))
    }
}

/// `φ(x) = −|x−x₀|²/4` with gradient, Laplacian and (on the boundary) normal derivative.
pub fn weight_phi_bundle(domain: &DomainSpec, x: Point) -> PhiBundle {
    let n = domain.dim();
    let d = [
        x[0] - domain.x0[0],
        if n == 2 { x[1] - domain.x0[1] } else { 0.0 },
    ];
    let phi = -(d[0] * d[0] + d[1] * d[1]) / 4.0;
    let grad = [-d[0] / 2.0, -d[1] / 2.0];
    let normal = domain.on_boundary(x).then(|| {
        let nu = domain.outward_normal(x);
        -(d[0] * nu[0] + d[1] * nu[1]) / 2.0
    });
    PhiBundle {
        phi,
        grad,
        laplacian: -(n as f64) / 2.0,
        normal,
    }
}

/// Parameters of `Φ(x,t) = sφ(x)/Υ(t)` with `Υ(t) = T − t + h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightParams {
    pub s: f64,
    pub h: f64,
    pub t_final: f64,
}

/// `Υ`, `Φ` and `∂ₜΦ` at one space-time point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightSample {
    pub upsilon: f64,
    pub phi: f64,
    pub phi_t: f64,
}

impl WeightParams {
    pub fn new(s: f64, h: f64, t_final: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Parameter(format!("s = {s} must lie in (0, 1)")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Parameter(format!("h = {h} must be positive")));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::Parameter(format!("T = {t_final} must be positive")));
        }
        Ok(WeightParams { s, h, t_final })
    }

    /// `C₀ = 1 − s³`.
    pub fn c0(&self) -> f64 {
        1.0 - self.s * self.s * self.s
    }

    pub fn upsilon(&self, t: f64) -> f64 {
        self.t_final - t + self.h
    }

    /// Range check for `t ∈ [0, T]`, tolerant to step-accumulation rounding.
    pub fn check_time(&self, t: f64) -> Result<()> {
        let tol = 1e-12 * self.t_final.max(1.0);
        if t.is_finite() && t >= -tol && t <= self.t_final + tol {
            Ok(())
        } else {
            Err(Error::Range {
                what: "t",
                value: t,
                lo: 0.0,
                hi: self.t_final,
            })
        }
    }

    pub fn sample(&self, domain: &DomainSpec, x: Point, t: f64) -> Result<WeightSample> {
        self.check_time(t)?;
        let y = self.upsilon(t);
        let phi = self.s * weight_phi_bundle(domain, x).phi / y;
        Ok(WeightSample {
            upsilon: y,
            phi,
            phi_t: phi / y,
        })
    }
}

/// `Φ(x,t)`.
pub fn big_phi(params: &WeightParams, domain: &DomainSpec, x: Point, t: f64) -> Result<f64> {
    Ok(params.sample(domain, x, t)?.phi)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalSignReport {
    /// Minimum of `−(x−x₀)·ν` over the nodes.
    pub min: f64,
    /// Maximum (the value closest to zero).
    pub max: f64,
    pub pass: bool,
}

/// Evaluates `−(x−x₀)·ν(x)` at the given boundary nodes; passes iff every value is negative.
pub fn check_normal_sign(
    domain: &DomainSpec,
    boundary_nodes: &[Point],
) -> Result<NormalSignReport> {
    domain.validate()?;
    if boundary_nodes.is_empty() {
        return Err(Error::Usage("no boundary nodes given".into()));
    }
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &x in boundary_nodes {
        let nu = domain.outward_normal(x);
        let v = match domain.shape {
            Shape::Interval { .. } => -(x[0] - domain.x0[0]) * nu[0],
            Shape::Disk { .. } => -((x[0] - domain.x0[0]) * nu[0] + (x[1] - domain.x0[1]) * nu[1]),
        };
        min = min.min(v);
        max = max.max(v);
    }
    Ok(NormalSignReport {
        min,
        max,
        pass: max < 0.0,
    })
}
