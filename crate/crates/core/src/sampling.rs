//! Reproducible random draws of SPD matrices and companion tensors.
//!
//! Sampling law: eigenvalues log-uniform in `[1e-3, 1e3]`, eigenvectors from a
//! Haar-distributed rotation (normalized Gaussian quaternion), ChaCha8 stream
//! seeded by the caller.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::spd::{rotation_from_quaternion, SymTensor3};

pub const LOG_EIG_MIN: f64 = -3.0;
pub const LOG_EIG_MAX: f64 = 3.0;

pub struct SpdSampler {
    rng: ChaCha8Rng,
    /// Every `degenerate_every`-th draw gets two eigenvalues within `1e-12`
    /// (relative) of each other; `0` disables.
    pub degenerate_every: u64,
    count: u64,
}

impl SpdSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            degenerate_every: 0,
            count: 0,
        }
    }

    pub fn with_degenerate_every(mut self, every: u64) -> Self {
        self.degenerate_every = every;
        self
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn log_uniform(&mut self) -> f64 {
        10f64.powf(self.rng.random_range(LOG_EIG_MIN..LOG_EIG_MAX))
    }

    pub fn rotation(&mut self) -> [[f64; 3]; 3] {
        loop {
            let q: [f64; 4] = std::array::from_fn(|_| self.rng.sample(StandardNormal));
            if q.iter().map(|x| x * x).sum::<f64>() > 1e-12 {
                return rotation_from_quaternion(q);
            }
        }
    }

    /// Eigenvalues of the next draw (unsorted).
    pub fn eigenvalues(&mut self) -> [f64; 3] {
        self.count += 1;
        let mut l = [self.log_uniform(), self.log_uniform(), self.log_uniform()];
        if self.degenerate_every > 0 && self.count % self.degenerate_every == 0 {
            let bump: f64 = self.rng.random_range(-1.0..1.0);
            l[1] = l[0] * (1.0 + 1e-12 * bump);
        }
        l
    }

    pub fn spd(&mut self) -> SymTensor3 {
        let l = self.eigenvalues();
        let q = self.rotation();
        SymTensor3::from_spectrum(l, &q)
    }

    /// Symmetric matrix with independent standard normal entries times `scale`.
    pub fn symmetric(&mut self, scale: f64) -> SymTensor3 {
        SymTensor3::from_array(std::array::from_fn(|_| {
            scale * self.rng.sample::<f64, _>(StandardNormal)
        }))
    }

    /// Trace-free symmetric matrix (a rate of strain).
    pub fn trace_free(&mut self, scale: f64) -> SymTensor3 {
        let s = self.symmetric(scale);
        s - SymTensor3::IDENTITY * (s.trace() / 3.0)
    }

    /// A unit-Frobenius-norm symmetric direction.
    pub fn unit_symmetric(&mut self) -> SymTensor3 {
        loop {
            let s = self.symmetric(1.0);
            let n = s.norm();
            if n > 1e-8 {
                return s * (1.0 / n);
            }
        }
    }
}
