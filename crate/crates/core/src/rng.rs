//! Seeded random streams for reproducible parallel Monte-Carlo.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`], a counter-based
//! generator whose 64-bit stream selector lets independent trials run on any
//! number of threads without sharing state. A stream is addressed by
//! `(seed, index, lane)`:
//!
//! * `seed` is the user-level run seed,
//! * `index` is the trial (or cycle batch) number,
//! * `lane` separates the different consumers inside one trial, so that
//!   switching a noise source on or off does not shift the projection-noise
//!   draws of the same trial.
//!
//! The stream id is `index * LANES + lane`; results depend only on the
//! address, never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub use rand::Rng;

/// Generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

const LANES: u64 = 16;

/// Consumers of randomness inside a single trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Lane {
    /// Quantum projection noise of the simulated outcomes.
    Projection = 0,
    /// Phase (or acceleration / frequency) noise series.
    PhaseNoise = 1,
    /// Depolarization draws.
    Depolarization = 2,
    /// Local-oscillator noise of a clock run.
    Oscillator = 3,
    /// Free lane for diagnostics and tests.
    Auxiliary = 4,
}

/// Opens the stream addressed by `(seed, index, lane)`.
pub fn stream(seed: u64, index: u64, lane: Lane) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_mul(LANES).wrapping_add(lane as u64));
    rng
}

/// Draws one standard-normal variate.
#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws `N(mean, sd^2)`; `sd = 0` returns `mean` without consuming entropy.
#[inline]
pub fn normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        mean
    } else {
        mean + sd * standard_normal(rng)
    }
}
