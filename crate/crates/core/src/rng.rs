//! Seeded random stream used by every sampler in the crate.
//!
//! Generator: ChaCha8 (`rand_chacha`), seeded with `seed_from_u64`. Two
//! independent ChaCha streams are derived from the same seed:
//!
//! * stream 0 ("noise") supplies standard normals (ziggurat, `rand_distr`)
//!   for initial positions and Langevin increments;
//! * stream 1 ("clock") supplies the exponential swap clock and all uniform
//!   decisions (swap direction, Metropolis accept, mixture component picks).
//!
//! Splitting the streams keeps the Langevin noise sequence independent of how
//! many swap events were drawn, so a tempering run with no swaps consumes
//! exactly the same normals as a plain Langevin loop on the same seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

const NOISE_STREAM: u64 = 0;
const CLOCK_STREAM: u64 = 1;

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    noise: ChaCha8Rng,
    clock: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        let mut noise = ChaCha8Rng::seed_from_u64(seed);
        noise.set_stream(NOISE_STREAM);
        let mut clock = ChaCha8Rng::seed_from_u64(seed);
        clock.set_stream(CLOCK_STREAM);
        Self { seed, noise, clock }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// One standard normal from the noise stream.
    pub fn normal(&mut self) -> f64 {
        self.noise.sample(StandardNormal)
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for o in out {
            *o = self.noise.sample(StandardNormal);
        }
    }

    /// Uniform on [0, 1) from the clock stream.
    pub fn uniform(&mut self) -> f64 {
        self.clock.random::<f64>()
    }

    /// Exponential with density `rate·e^{-rate·t}` from the clock stream.
    pub fn exponential(&mut self, rate: f64) -> f64 {
        let e: f64 = self.clock.sample(Exp1);
        e / rate
    }

    /// A child stream for worker `index`, deterministic in (seed, index).
    pub fn child(&self, index: u64) -> Self {
        let mixed = splitmix64(self.seed ^ splitmix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15)));
        Self::new(mixed)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
