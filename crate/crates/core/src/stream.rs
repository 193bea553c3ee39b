//! Seeded source of every random decision in the crate.
//!
//! The generator is ChaCha8 seeded through `SeedableRng::seed_from_u64`.
//! All derived draws are implemented here rather than taken from a sampling
//! library so that a given seed yields the same decisions forever:
//!
//! * `uniform_below(m)`: rejection sampling on raw `u64` words (no modulo bias),
//! * `unit()`: top 53 bits of one word, uniform on `[0, 1)`,
//! * `standard_normal()`: Box–Muller, both outputs of a pair used in order,
//! * `sample_subset(pool, s)`: partial Fisher–Yates over `pool`.
//!
//! A randomized algorithm and its naive reference consume a stream in exactly
//! the same way, so running both from the same seed couples their decisions.

use std::collections::HashMap;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

/// One recorded decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Draw {
    Uniform { bound: u64, value: u64 },
    Unit(f64),
    Subset(Vec<usize>),
}

#[derive(Clone, Debug)]
pub struct DecisionStream {
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
    log: Option<Vec<Draw>>,
}

impl DecisionStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare_normal: None,
            log: None,
        }
    }

    /// Same stream, additionally recording every decision.
    pub fn with_log(seed: u64) -> Self {
        Self {
            log: Some(Vec::new()),
            ..Self::new(seed)
        }
    }

    pub fn draws(&self) -> Option<&[Draw]> {
        self.log.as_deref()
    }

    fn record(&mut self, d: Draw) {
        if let Some(log) = self.log.as_mut() {
            log.push(d);
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn raw_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        // Words below `threshold` would over-represent small residues.
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let x = self.rng.next_u64();
            if x >= threshold {
                return x % bound;
            }
        }
    }

    /// Uniform on `0..bound`.
    pub fn uniform_below(&mut self, bound: u64) -> u64 {
        let value = self.raw_below(bound);
        self.record(Draw::Uniform { bound, value });
        value
    }

    /// Uniform on `lo..=hi`.
    pub fn uniform_inclusive(&mut self, lo: usize, hi: usize) -> usize {
        assert!(lo <= hi);
        lo + self.uniform_below((hi - lo) as u64 + 1) as usize
    }

    fn raw_unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        let u = self.raw_unit();
        self.record(Draw::Unit(u));
        u
    }

    /// Standard normal via Box–Muller. Not recorded in the draw log.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // 1 - u lies in (0, 1], keeping the logarithm finite.
        let u1 = 1.0 - self.raw_unit();
        let u2 = self.raw_unit();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// `s` distinct elements of `pool`, uniformly without replacement, in draw
    /// order. Returns all of `pool` (no draws) when `pool.len() <= s`.
    ///
    /// This is a partial Fisher–Yates shuffle of `pool`; swapped positions are
    /// tracked in a map so the pool itself is never copied.
    pub fn sample_subset(&mut self, pool: &[usize], s: usize) -> Vec<usize> {
        let m = pool.len();
        let out = if m <= s {
            pool.to_vec()
        } else {
            let mut moved: HashMap<usize, usize> = HashMap::with_capacity(2 * s);
            let mut out = Vec::with_capacity(s);
            for j in 0..s {
                let r = j + self.raw_below((m - j) as u64) as usize;
                let at_r = moved.get(&r).copied().unwrap_or(pool[r]);
                let at_j = moved.get(&j).copied().unwrap_or(pool[j]);
                moved.insert(r, at_j);
                out.push(at_r);
            }
            out
        };
        self.record(Draw::Subset(out.clone()));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = DecisionStream::new(42);
        let mut b = DecisionStream::new(42);
        for _ in 0..100 {
            assert_eq!(a.uniform_below(7), b.uniform_below(7));
            assert_eq!(a.unit().to_bits(), b.unit().to_bits());
            assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
        }
        assert_ne!(
            DecisionStream::new(1).next_u64(),
            DecisionStream::new(2).next_u64()
        );
    }

    #[test]
    fn uniform_covers_range() {
        let mut s = DecisionStream::new(3);
        let mut seen = [0usize; 5];
        for _ in 0..5000 {
            seen[s.uniform_inclusive(1, 5) - 1] += 1;
        }
        for c in seen {
            assert!((850..1150).contains(&c), "{seen:?}");
        }
    }

    #[test]
    fn sample_subset_matches_array_fisher_yates() {
        let pool: Vec<usize> = (10..40).collect();
        let mut a = DecisionStream::new(9);
        let mut b = DecisionStream::new(9);
        let got = a.sample_subset(&pool, 7);

        let mut arr = pool.clone();
        for j in 0..7 {
            let r = j + b.raw_below((arr.len() - j) as u64) as usize;
            arr.swap(j, r);
        }
        assert_eq!(got, arr[..7]);

        let mut sorted = got.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 7);
    }

    #[test]
    fn small_pool_is_returned_whole_without_draws() {
        let mut a = DecisionStream::new(5);
        let mut b = DecisionStream::new(5);
        assert_eq!(a.sample_subset(&[3, 1, 2], 3), vec![3, 1, 2]);
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn log_records_decisions() {
        let mut s = DecisionStream::with_log(1);
        s.uniform_below(3);
        s.unit();
        s.sample_subset(&[0, 1, 2, 3], 2);
        let log = s.draws().unwrap();
        assert_eq!(log.len(), 3);
        assert!(matches!(log[0], Draw::Uniform { bound: 3, .. }));
        assert!(matches!(log[2], Draw::Subset(ref v) if v.len() == 2));
    }

    #[test]
    fn normals_have_unit_scale() {
        let mut s = DecisionStream::new(11);
        let n = 20000;
        let xs: Vec<f64> = (0..n).map(|_| s.standard_normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 3.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 0.05);
    }
}
