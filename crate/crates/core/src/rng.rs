//! Seeded random source for data generation.
//!
//! All draws come from SplitMix64 (Steele, Lea & Flood 2014): a 64-bit
//! counter advanced by `0x9E3779B97F4A7C15` and passed through a fixed mixing
//! function. The derived distributions are defined here so that another
//! implementation can reproduce a dataset bit-for-bit from its seed:
//!
//! * `uniform()` = `(next_u64() >> 11) · 2⁻⁵³`, in `[0, 1)`;
//! * `below(m)` = `next_u64() % m`, redrawing while the raw value falls in the
//!   final partial block `[2⁶⁴ − 2⁶⁴ mod m, 2⁶⁴)`;
//! * `normal()` = Marsaglia's polar method, `u, v = 2·uniform() − 1`, retried
//!   until `0 < s = u² + v² < 1`, returning `u·f` then (cached) `v·f` with
//!   `f = √(−2 ln s / s)`;
//! * `shuffle` = Fisher–Yates from the last index down, `j = below(i + 1)`.

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

pub struct SeededRng {
    inner: SplitMix64,
    spare_normal: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            inner: SplitMix64::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..m`.
    pub fn below(&mut self, m: u64) -> u64 {
        assert!(m > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX - m + 1) % m;
        loop {
            let x = self.next_u64();
            if x <= zone {
                return x % m;
            }
        }
    }

    /// Standard normal deviate.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * f);
                return u * f;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    /// Uniform direction on the unit sphere in `R^d` (normalized Gaussian vector).
    pub fn unit_vector(&mut self, d: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..d).map(|_| self.normal()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }
}
