//! Seeded random sampling of generic points.
//!
//! Every identity here is meromorphic, so points are drawn from the box
//! `[−1,1] + i[−1,1]` and simply redrawn whenever a denominator lands
//! inside the pole guard.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Complex;

use crate::error::{Error, Result};
use crate::precision::Precision;

/// Denominators with modulus below this are treated as poles.
pub const POLE_GUARD: f64 = 1e-6;

/// Redraws allowed before giving up on a sample.
pub const MAX_RESAMPLES: usize = 100;

#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
    seed: u64,
    precision: Precision,
}

impl Sampler {
    pub fn new(seed: u64, precision: Precision) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
            precision,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// Independent sampler for a sub-task, derived deterministically.
    pub fn fork(&mut self) -> Sampler {
        let seed = self.rng.gen::<u64>();
        Sampler::new(seed, self.precision)
    }

    pub fn unit(&mut self) -> f64 {
        self.rng.gen_range(-1.0..=1.0)
    }

    /// Uniform point of the sampling box.
    pub fn point(&mut self) -> Complex {
        let re = self.unit();
        let im = self.unit();
        self.precision.complex(re, im)
    }

    pub fn points(&mut self, n: usize) -> Vec<Complex> {
        (0..n).map(|_| self.point()).collect()
    }

    /// Point with modulus drawn from `[lo, hi]` and a uniform phase.
    pub fn annulus(&mut self, lo: f64, hi: f64) -> Complex {
        let r = self.rng.gen_range(lo..=hi);
        let phase = self.rng.gen_range(0.0..std::f64::consts::TAU);
        self.precision.complex(r * phase.cos(), r * phase.sin())
    }

    /// Run `draw` until it stops hitting the pole guard.
    pub fn retry<T>(&mut self, mut draw: impl FnMut(&mut Sampler) -> Result<T>) -> Result<T> {
        for _ in 0..MAX_RESAMPLES {
            match draw(self) {
                Err(Error::PoleProximity { .. }) => continue,
                other => return other,
            }
        }
        Err(Error::SamplingExhausted {
            tries: MAX_RESAMPLES,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_points() {
        let p = Precision::default();
        let a = Sampler::new(9, p).points(5);
        let b = Sampler::new(9, p).points(5);
        assert_eq!(a, b);
        let c = Sampler::new(10, p).points(5);
        assert_ne!(a, c);
    }

    #[test]
    fn points_stay_in_box() {
        let mut s = Sampler::new(1, Precision::default());
        for z in s.points(200) {
            assert!(z.real().to_f64().abs() <= 1.0 && z.imag().to_f64().abs() <= 1.0);
        }
    }

    #[test]
    fn retry_gives_up_after_cap() {
        let mut s = Sampler::new(1, Precision::default());
        let mut calls = 0;
        let r: Result<()> = s.retry(|_| {
            calls += 1;
            Err(Error::PoleProximity { magnitude: 0.0 })
        });
        assert_eq!(calls, MAX_RESAMPLES);
        assert!(matches!(r, Err(Error::SamplingExhausted { .. })));
    }

    #[test]
    fn retry_passes_other_errors_through() {
        let mut s = Sampler::new(1, Precision::default());
        let r: Result<()> = s.retry(|_| Err(Error::DivisionByZero));
        assert_eq!(r, Err(Error::DivisionByZero));
    }
}
