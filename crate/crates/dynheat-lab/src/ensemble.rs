//! Seeded initial states. Member `i` draws from ChaCha stream `i` of the run seed, so results
//! do not depend on thread count or scheduling.

use dynheat::discretize::{Discretization, State};
use dynheat::evolve::{Scheme, Stepper};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::config::{InitialKind, RunConfig};

/// Streams below this offset belong to initial states; test vectors use the ones above.
pub const AUX_STREAM: u64 = 1 << 32;

pub fn member_rng(seed: u64, member: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(member);
    r
}

/// Standard normal nodal values.
pub fn gaussian_state(disc: &Discretization, rng: &mut ChaCha8Rng) -> State {
    let v = (0..disc.grid.len()).map(|_| StandardNormal.sample(rng)).collect();
    State::from_vec(v, disc.grid.n_bulk)
}

/// Gaussian draw, smoothed by backward Euler, scaled to unit norm.
pub fn random_unit_state(
    disc: &Discretization,
    rng: &mut ChaCha8Rng,
    smoothing_steps: usize,
    smoothing_dt: f64,
) -> dynheat::Result<State> {
    let mut u = gaussian_state(disc, rng);
    if smoothing_steps > 0 {
        u = Stepper::new(&disc.ops, smoothing_dt, Scheme::BackwardEuler)?.advance(&u, smoothing_steps)?;
    }
    let n = disc.ops.norm(&u)?;
    Ok(u.scaled(1.0 / n))
}

/// Initial state of member `i` according to the `[initial]` block.
pub fn initial_state(cfg: &RunConfig, disc: &Discretization, seed: u64, member: usize) -> dynheat::Result<State> {
    match cfg.initial.kind {
        InitialKind::Zero => Ok(State::zeros(&disc.grid)),
        InitialKind::Constant => Ok(State::constant(&disc.grid, cfg.initial.value)),
        InitialKind::Random => random_unit_state(
            disc,
            &mut member_rng(seed, member as u64),
            cfg.ensemble.smoothing_steps,
            cfg.ensemble.smoothing_dt,
        ),
    }
}

/// Applies `f` to `0..count` in parallel and returns results in index order; the first error
/// by index wins.
pub fn par_members<T: Send>(
    count: usize,
    f: impl Fn(usize) -> dynheat::Result<T> + Sync + Send,
) -> dynheat::Result<Vec<T>> {
    (0..count).into_par_iter().map(f).collect::<Vec<_>>().into_iter().collect()
}
