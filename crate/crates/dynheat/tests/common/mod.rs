#![allow(dead_code)]

use dynheat::discretize::{assemble, Discretization, Resolution, State};
use dynheat::evolve::{Scheme, Stepper};
use dynheat::geometry::DomainSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_interval() -> DomainSpec {
    DomainSpec::interval(0.0, 1.0, 0.5, 0.3, 0.7).unwrap()
}

pub fn centered_disk() -> DomainSpec {
    DomainSpec::disk([0.0, 0.0], 1.0, [0.0, 0.0], [0.3, 0.0], 0.4).unwrap()
}

pub fn interval_disc(n: usize) -> Discretization {
    assemble(&unit_interval(), Resolution::Interval { n }).unwrap()
}

pub fn disk_disc(nr: usize, ntheta: usize) -> Discretization {
    assemble(&centered_disk(), Resolution::Disk { nr, ntheta }).unwrap()
}

pub fn gaussian(len: usize, n_bulk: usize, rng: &mut ChaCha8Rng) -> State {
    let v: Vec<f64> = (0..len).map(|_| StandardNormal.sample(rng)).collect();
    State::from_vec(v, n_bulk)
}

/// Gaussian nodal values smoothed by five backward-Euler steps of size 0.01, unit norm.
pub fn smooth_state(disc: &Discretization, rng: &mut ChaCha8Rng) -> State {
    let raw = gaussian(disc.grid.len(), disc.grid.n_bulk, rng);
    let st = Stepper::new(&disc.ops, 0.01, Scheme::BackwardEuler).unwrap();
    let u = st.advance(&raw, 5).unwrap();
    let n = disc.ops.norm(&u).unwrap();
    u.scaled(1.0 / n)
}

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// `M^{1/2} A M^{-1/2} = −M^{-1/2} K M^{-1/2}` as a dense symmetric matrix.
pub fn symmetrized(disc: &Discretization) -> DMatrix<f64> {
    let n = disc.grid.len();
    let k = DMatrix::from_row_slice(n, n, &disc.ops.dense_stiffness());
    let s: Vec<f64> = disc.ops.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    DMatrix::from_fn(n, n, |i, j| -s[i] * k[(i, j)] * s[j])
}

/// Dense `A`.
pub fn dense_a(disc: &Discretization) -> DMatrix<f64> {
    let n = disc.grid.len();
    let k = DMatrix::from_row_slice(n, n, &disc.ops.dense_stiffness());
    DMatrix::from_fn(n, n, |i, j| -k[(i, j)] / disc.ops.mass[i])
}

/// `e^{tA}` through the eigendecomposition of the symmetrized operator.
pub fn expm(disc: &Discretization, t: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrized(disc));
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (t * l).exp()));
    let e = &eig.eigenvectors * d * eig.eigenvectors.transpose();
    let m = &disc.ops.mass;
    DMatrix::from_fn(m.len(), m.len(), |i, j| {
        e[(i, j)] * m[j].sqrt() / m[i].sqrt()
    })
}

pub fn apply_dense(a: &DMatrix<f64>, u: &State) -> State {
    let v = a * DVector::from_column_slice(u.as_slice());
    State::from_vec(v.as_slice().to_vec(), u.n_bulk())
}

/// Relative `M`-norm distance.
pub fn rel_dist(disc: &Discretization, u: &State, v: &State) -> f64 {
    let d: Vec<f64> = u
        .as_slice()
        .iter()
        .zip(v.as_slice())
        .map(|(a, b)| a - b)
        .collect();
    disc.ops.norm(&State::from_vec(d, u.n_bulk())).unwrap() / disc.ops.norm(v).unwrap()
}
