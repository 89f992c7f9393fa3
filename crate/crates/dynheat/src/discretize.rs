//! Discrete `𝕃² = L²(Ω) × L²(Γ)`: grids, the Wentzell operator `A`, the mass-weighted inner
//! product and the `ω` restriction.
//!
//! `A = −M⁻¹K` where `K` comes from the Dirichlet form
//! `Σ w ∇U·∇V + Σ w_Γ ∇_Γ U·∇_Γ V` on an edge list, so symmetry in `⟨·,·⟩_M`, dissipativity and
//! `A·𝟙 = 0` hold by construction. A boundary node carries one unknown shared by the bulk and
//! the trace; its mass is the bulk half-cell plus the boundary arc weight.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(any(feature = "std", test)))]
use num_traits::Float;

use crate::geometry::{DomainSpec, Point, Shape};
use crate::linalg::wdot;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Resolution {
    Interval { n: usize },
    Disk { nr: usize, ntheta: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub resolution: Resolution,
    /// Node positions: bulk unknowns first, then trace unknowns.
    pub nodes: Vec<Point>,
    pub n_bulk: usize,
    /// Bulk quadrature weight per node; trace nodes carry their boundary half-cell.
    pub w_omega: Vec<f64>,
    /// Boundary quadrature weight per trace node.
    pub w_gamma: Vec<f64>,
    /// Primary spacing (`dx`, or `dr` on the disk).
    pub spacing: f64,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_trace(&self) -> usize {
        self.len() - self.n_bulk
    }

    pub fn trace_nodes(&self) -> &[Point] {
        &self.nodes[self.n_bulk..]
    }
}

/// One element of discrete `𝕃²`: bulk values followed by trace values in one buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    data: Vec<f64>,
    n_bulk: usize,
}

impl State {
    pub fn new(bulk: &[f64], trace: &[f64]) -> Self {
        let mut data = Vec::with_capacity(bulk.len() + trace.len());
        data.extend_from_slice(bulk);
        data.extend_from_slice(trace);
        State {
            data,
            n_bulk: bulk.len(),
        }
    }

    pub fn from_vec(data: Vec<f64>, n_bulk: usize) -> Self {
        assert!(n_bulk <= data.len());
        State { data, n_bulk }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        State {
            data: vec![c; grid.len()],
            n_bulk: grid.n_bulk,
        }
    }

    /// Samples `f` at every node.
    pub fn sample(grid: &Grid, f: impl Fn(Point) -> f64) -> Self {
        State {
            data: grid.nodes.iter().map(|&x| f(x)).collect(),
            n_bulk: grid.n_bulk,
        }
    }

    pub fn bulk(&self) -> &[f64] {
        &self.data[..self.n_bulk]
    }

    pub fn trace(&self) -> &[f64] {
        &self.data[self.n_bulk..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn n_bulk(&self) -> usize {
        self.n_bulk
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn scaled(&self, c: f64) -> State {
        State {
            data: self.data.iter().map(|v| c * v).collect(),
            n_bulk: self.n_bulk,
        }
    }
}

/// Stiffness edge `K += k (eᵢ − eⱼ)(eᵢ − eⱼ)ᵀ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub k: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSet {
    pub n_bulk: usize,
    /// Diagonal of `M`: `w_Ω` plus `w_Γ` on trace unknowns.
    pub mass: Vec<f64>,
    pub edges: Vec<Edge>,
    /// Diagonal of `K`.
    pub stiffness_diag: Vec<f64>,
    /// Bulk unknowns inside `ω`, ascending.
    pub omega: Vec<usize>,
}

impl OperatorSet {
    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// `out = K u`.
    pub fn apply_k(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for e in &self.edges {
            let d = e.k * (u[e.i] - u[e.j]);
            out[e.i] += d;
            out[e.j] -= d;
        }
    }

    /// `out = A u = −M⁻¹K u`.
    pub fn apply_a(&self, u: &[f64], out: &mut [f64]) {
        self.apply_k(u, out);
        for (o, m) in out.iter_mut().zip(&self.mass) {
            *o = -*o / m;
        }
    }

    pub fn apply(&self, u: &State) -> State {
        let mut out = vec![0.0; u.len()];
        self.apply_a(u.as_slice(), &mut out);
        State::from_vec(out, u.n_bulk())
    }

    fn check(&self, u: &State) -> Result<()> {
        if u.len() != self.len() || u.n_bulk() != self.n_bulk {
            return Err(Error::Usage(format!(
                "state shape ({} bulk, {} trace) does not match grid ({} bulk, {} trace)",
                u.n_bulk(),
                u.len() - u.n_bulk(),
                self.n_bulk,
                self.len() - self.n_bulk
            )));
        }
        Ok(())
    }

    /// `⟨U,V⟩ = Σ w_Ω u v + Σ w_Γ u_Γ v_Γ`.
    pub fn inner(&self, u: &State, v: &State) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(wdot(&self.mass, u.as_slice(), v.as_slice()))
    }

    pub fn norm(&self, u: &State) -> Result<f64> {
        Ok(self.inner(u, u)?.sqrt())
    }

    /// `R_ω`: bulk values at the `ω` nodes.
    pub fn restrict(&self, u: &[f64]) -> Vec<f64> {
        self.omega.iter().map(|&i| u[i]).collect()
    }

    /// `E_ω`: zero-padded bulk, zero trace.
    pub fn embed(&self, v: &[f64]) -> State {
        let mut data = vec![0.0; self.len()];
        for (&i, &x) in self.omega.iter().zip(v) {
            data[i] = x;
        }
        State::from_vec(data, self.n_bulk)
    }

    /// `⟨a,b⟩_ω` for vectors on the `ω` nodes.
    pub fn omega_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.omega
            .iter()
            .zip(a)
            .zip(b)
            .map(|((&i, x), y)| self.mass[i] * x * y)
            .sum()
    }

    pub fn omega_norm(&self, a: &[f64]) -> f64 {
        self.omega_inner(a, a).sqrt()
    }

    /// Entries of `A` in coordinate format, sorted by (row, column).
    pub fn coo(&self) -> Vec<(usize, usize, f64)> {
        let mut out: Vec<(usize, usize, f64)> = (0..self.len())
            .map(|i| (i, i, -self.stiffness_diag[i] / self.mass[i]))
            .collect();
        for e in &self.edges {
            out.push((e.i, e.j, e.k / self.mass[e.i]));
            out.push((e.j, e.i, e.k / self.mass[e.j]));
        }
        out.sort_by_key(|e| (e.0, e.1));
        out
    }

    /// Dense `K` in row-major order; intended for small grids.
    pub fn dense_stiffness(&self) -> Vec<f64> {
        let n = self.len();
        let mut k = vec![0.0; n * n];
        for (i, d) in self.stiffness_diag.iter().enumerate() {
            k[i * n + i] = *d;
        }
        for e in &self.edges {
            k[e.i * n + e.j] -= e.k;
            k[e.j * n + e.i] -= e.k;
        }
        k
    }
}

/// Everything a run needs about the spatial discretization.
#[derive(Clone, Debug, PartialEq)]
pub struct Discretization {
    pub domain: DomainSpec,
    pub grid: Grid,
    pub ops: OperatorSet,
}

pub fn assemble(domain: &DomainSpec, resolution: Resolution) -> Result<Discretization> {
    domain.validate()?;
    let (grid, edges) = match (domain.shape, resolution) {
        (Shape::Interval { a, b }, Resolution::Interval { n }) => {
            if n < 3 {
                return Err(Error::Config(format!("grid.n = {n} must be at least 3")));
            }
            interval_grid(a, b, n)
        }
        (Shape::Disk { center, radius }, Resolution::Disk { nr, ntheta }) => {
            if nr < 3 || ntheta < 3 {
                return Err(Error::Config(format!(
                    "grid.nr = {nr} and grid.ntheta = {ntheta} must both be at least 3"
                )));
            }
            disk_grid(center, radius, nr, ntheta)
        }
        _ => return Err(Error::Config("grid kind does not match domain kind".into())),
    };
    let mut mass = grid.w_omega.clone();
    for (m, g) in mass[grid.n_bulk..].iter_mut().zip(&grid.w_gamma) {
        *m += g;
    }
    if mass.iter().chain(&grid.w_gamma).any(|&m| !(m > 0.0)) || edges.iter().any(|e| !(e.k > 0.0)) {
        return Err(Error::Assembly(
            "non-positive quadrature or stiffness weight".into(),
        ));
    }
    let mut stiffness_diag = vec![0.0; mass.len()];
    for e in &edges {
        stiffness_diag[e.i] += e.k;
        stiffness_diag[e.j] += e.k;
    }
    let omega: Vec<usize> = (0..grid.n_bulk)
        .filter(|&i| domain.omega.contains(grid.nodes[i]))
        .collect();
    if omega.is_empty() {
        return Err(Error::Config(
            "omega contains no grid nodes; refine the grid".into(),
        ));
    }
    Ok(Discretization {
        domain: *domain,
        ops: OperatorSet {
            n_bulk: grid.n_bulk,
            mass,
            edges,
            stiffness_diag,
            omega,
        },
        grid,
    })
}

fn interval_grid(a: f64, b: f64, n: usize) -> (Grid, Vec<Edge>) {
    let dx = (b - a) / (n as f64 + 1.0);
    let mut nodes: Vec<Point> = (1..=n).map(|i| [a + dx * i as f64, 0.0]).collect();
    nodes.push([a, 0.0]);
    nodes.push([b, 0.0]);
    let mut w_omega = vec![dx; n];
    w_omega.extend([0.5 * dx, 0.5 * dx]);
    let k = 1.0 / dx;
    let mut edges = vec![Edge { i: n, j: 0, k }];
    edges.extend((0..n - 1).map(|i| Edge { i, j: i + 1, k }));
    edges.push(Edge {
        i: n - 1,
        j: n + 1,
        k,
    });
    (
        Grid {
            resolution: Resolution::Interval { n },
            nodes,
            n_bulk: n,
            w_omega,
            w_gamma: vec![1.0, 1.0],
            spacing: dx,
        },
        edges,
    )
}

fn disk_grid(center: Point, radius: f64, nr: usize, nt: usize) -> (Grid, Vec<Edge>) {
    let dr = radius / (nr as f64 + 0.5);
    let dth = 2.0 * core::f64::consts::PI / nt as f64;
    let nb = nr * nt;
    let idx = |i: usize, j: usize| i * nt + j % nt;
    let angle = |j: usize| (j as f64 + 0.5) * dth;
    let at = |r: f64, j: usize| {
        [
            center[0] + r * angle(j).cos(),
            center[1] + r * angle(j).sin(),
        ]
    };
    let mut nodes = Vec::with_capacity(nb + nt);
    let mut w_omega = Vec::with_capacity(nb + nt);
    let mut edges = Vec::new();
    for i in 0..nr {
        let r = (i as f64 + 0.5) * dr;
        for j in 0..nt {
            nodes.push(at(r, j));
            w_omega.push(r * dr * dth);
            if i + 1 < nr {
                edges.push(Edge {
                    i: idx(i, j),
                    j: idx(i + 1, j),
                    k: (i + 1) as f64 * dth,
                });
            } else {
                edges.push(Edge {
                    i: idx(i, j),
                    j: nb + j,
                    k: nr as f64 * dth,
                });
            }
            edges.push(Edge {
                i: idx(i, j),
                j: idx(i, j + 1),
                k: dr / (r * dth),
            });
        }
    }
    // Boundary half-cell spans [R − dr/2, R]; its mean radius is R − dr/4.
    let rm = radius - 0.25 * dr;
    let k_ring = 0.5 * dr / (rm * dth) + 1.0 / (radius * dth);
    for j in 0..nt {
        nodes.push(at(radius, j));
        w_omega.push(0.5 * dr * rm * dth);
        edges.push(Edge {
            i: nb + j,
            j: nb + (j + 1) % nt,
            k: k_ring,
        });
    }
    (
        Grid {
            resolution: Resolution::Disk { nr, ntheta: nt },
            nodes,
            n_bulk: nb,
            w_omega,
            w_gamma: vec![radius * dth; nt],
            spacing: dr,
        },
        edges,
    )
}
