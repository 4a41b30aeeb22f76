//! Deterministic random number generation.
//!
//! Reproducibility is a hard output contract (sweeps must be bit-identical
//! given seed and config), so the generator is pinned in-crate rather than
//! delegated to an external crate whose stream might change across versions.
//! xoshiro256++ with splitmix64 seeding; every parallel unit of work derives
//! its own stream from (seed, stream ids...), which makes results independent
//! of worker count.

#[derive(Clone, Debug)]
pub struct Rng {
    s: [u64; 4],
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let mut s = [0u64; 4];
        for slot in &mut s {
            *slot = splitmix64(&mut sm);
        }
        // Avoid the all-zero state (cannot occur from splitmix, but cheap).
        if s == [0, 0, 0, 0] {
            s[0] = 1;
        }
        Rng { s }
    }

    /// Derive an independent stream keyed by (seed, ids...).
    pub fn stream(seed: u64, ids: &[u64]) -> Self {
        let mut sm = seed ^ 0xa076_1d64_78bd_642f;
        let mut acc = splitmix64(&mut sm);
        for &id in ids {
            sm = acc ^ id.wrapping_mul(0xe703_7ed1_a0b4_28db);
            acc = splitmix64(&mut sm);
        }
        Rng::new(acc)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let result = (self.s[0].wrapping_add(self.s[3]))
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform in (0, 1] (safe to take logs of).
    #[inline]
    pub fn uniform_open0(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// Standard exponential.
    #[inline]
    pub fn exponential(&mut self) -> f64 {
        -self.uniform_open0().ln()
    }

    /// Poisson sample by inversion for small means, PTRS-free rejection-free
    /// sum of exponentials for moderate means (all our means are <= ~50).
    pub fn poisson(&mut self, mean: f64) -> usize {
        debug_assert!(mean >= 0.0);
        if mean == 0.0 {
            return 0;
        }
        // Interarrival method: count exponentials until they exceed `mean`.
        // Cost is O(mean), fine for the branching factors used here.
        let mut acc = 0.0;
        let mut count = 0usize;
        loop {
            acc += self.exponential();
            if acc > mean {
                return count;
            }
            count += 1;
            if count > 100_000 {
                return count; // safety valve, unreachable for sane means
            }
        }
    }

    /// Random sign with equal probability.
    #[inline]
    pub fn sign(&mut self) -> f64 {
        if self.next_u64() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Uniform index in [0, n).
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Lemire-style bounded sample without modulo bias worth caring about
        // at n << 2^64.
        (((self.next_u64() >> 11) as u128 * n as u128) >> 53) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_streams() {
        let mut a = Rng::stream(42, &[1, 2]);
        let mut b = Rng::stream(42, &[1, 2]);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut c = Rng::stream(42, &[1, 3]);
        assert_ne!(a.next_u64(), c.next_u64());
    }

    #[test]
    fn uniform_moments() {
        let mut rng = Rng::new(7);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let u = rng.uniform();
            sum += u;
            sum2 += u * u;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        assert!((mean - 0.5).abs() < 0.005);
        assert!((var - 1.0 / 12.0).abs() < 0.005);
    }

    #[test]
    fn poisson_mean_variance() {
        let mut rng = Rng::new(11);
        let mean = 5.0;
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let k = rng.poisson(mean) as f64;
            sum += k;
            sum2 += k * k;
        }
        let m = sum / n as f64;
        let v = sum2 / n as f64 - m * m;
        assert!((m - mean).abs() < 0.05);
        assert!((v - mean).abs() < 0.15);
    }

    #[test]
    fn index_in_range() {
        let mut rng = Rng::new(3);
        for _ in 0..10_000 {
            assert!(rng.index(17) < 17);
        }
    }
}
