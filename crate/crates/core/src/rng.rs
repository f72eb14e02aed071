//! Seedable, splittable random streams.
//!
//! A stream is identified by `(master seed, stream index)`. Both map onto a
//! ChaCha8 key and ChaCha stream id, so any stream can be recreated in
//! isolation without replaying its siblings. Labs assign one stream per
//! trajectory; which worker runs the trajectory has no effect on its variates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

#[derive(Clone, Debug)]
pub struct RandomStream {
    rng: ChaCha8Rng,
    master_seed: u64,
    index: u64,
}

impl RandomStream {
    pub fn new(master_seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(index);
        Self {
            rng,
            master_seed,
            index,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// One standard normal variate (ziggurat method).
    #[inline]
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Chi-square variate with `dof` degrees of freedom. Panics if `dof <= 0`.
    pub fn chi_squared(&mut self, dof: f64) -> f64 {
        ChiSquared::new(dof)
            .expect("chi-square degrees of freedom must be positive")
            .sample(&mut self.rng)
    }

    /// Uniform variate on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

/// Packs a `(cell, trajectory)` pair into one stream index.
///
/// Trajectory indices must stay below 2³².
#[inline]
pub fn stream_index(cell: u64, trajectory: u64) -> u64 {
    debug_assert!(trajectory < (1 << 32));
    (cell << 32) | trajectory
}
