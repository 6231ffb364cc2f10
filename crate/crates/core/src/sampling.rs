//! Counter-keyed random streams and order-fixed parallel reductions.
//!
//! Every Monte-Carlo draw gets its own ChaCha stream selected by
//! `(seed, draw index)`, and every parallel sum is reduced over fixed-size
//! blocks in block order. Together these make results independent of the
//! number of worker threads.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::scalar::Real;

/// Block length of the fixed reduction tree.
pub const REDUCTION_BLOCK: usize = 1024;

/// Generator for draw number `index` under `seed`.
pub fn draw_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives an independent seed for a labelled sub-experiment.
pub fn derive_seed(seed: u64, label: &[u64]) -> u64 {
    // splitmix64 over the label words
    let mut z = seed ^ 0x9e37_79b9_7f4a_7c15;
    for &w in label {
        z = z.wrapping_add(w).wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

/// `sum_{i < n} term(i)`, evaluated in parallel with a thread-count
/// independent summation order.
pub fn ordered_sum<T, F>(n: usize, term: F) -> Complex<T>
where
    T: Real,
    F: Fn(usize) -> Complex<T> + Sync,
{
    let blocks = n.div_ceil(REDUCTION_BLOCK);
    let partial: Vec<Complex<T>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * REDUCTION_BLOCK;
            let hi = (lo + REDUCTION_BLOCK).min(n);
            let mut acc = Complex::new(T::zero(), T::zero());
            for i in lo..hi {
                acc = acc + term(i);
            }
            acc
        })
        .collect();
    partial
        .into_iter()
        .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b)
}

/// Running first and second moments of a real sample, merged in a fixed order.
#[derive(Clone, Copy, Debug, Default)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(self, other: Moments) -> Moments {
        Moments {
            count: self.count + other.count,
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
        }
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Standard error of the mean from the unbiased sample variance.
    pub fn std_error(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// Moments of `value(i)` for `i < n`, reduced over fixed blocks.
pub fn ordered_moments<F>(n: u64, value: F) -> Moments
where
    F: Fn(u64) -> f64 + Sync,
{
    let block = REDUCTION_BLOCK as u64;
    let blocks = n.div_ceil(block);
    let partial: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut m = Moments::default();
            for i in b * block..((b + 1) * block).min(n) {
                m.push(value(i));
            }
            m
        })
        .collect();
    partial.into_iter().fold(Moments::default(), Moments::merge)
}

/// Moments of a complex-valued sample: the mean is complex, the standard
/// error combines both components.
#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexMoments {
    pub re: Moments,
    pub im: Moments,
}

impl ComplexMoments {
    pub fn std_error(&self) -> f64 {
        self.re.std_error().hypot(self.im.std_error())
    }
}

pub fn ordered_complex_moments<F>(n: u64, value: F) -> ComplexMoments
where
    F: Fn(u64) -> (f64, f64) + Sync,
{
    let block = REDUCTION_BLOCK as u64;
    let blocks = n.div_ceil(block);
    let partial: Vec<ComplexMoments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut m = ComplexMoments::default();
            for i in b * block..((b + 1) * block).min(n) {
                let (re, im) = value(i);
                m.re.push(re);
                m.im.push(im);
            }
            m
        })
        .collect();
    partial
        .into_iter()
        .fold(ComplexMoments::default(), |a, b| ComplexMoments {
            re: a.re.merge(b.re),
            im: a.im.merge(b.im),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = draw_rng(7, 3).gen();
        let b: u64 = draw_rng(7, 3).gen();
        let c: u64 = draw_rng(7, 4).gen();
        let d: u64 = draw_rng(8, 3).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn ordered_sum_independent_of_pool_size() {
        let term = |i: usize| Complex::new((i as f64).sin() * 1e-3, (i as f64).cos());
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| ordered_sum(100_000, term));
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(7)
            .build()
            .unwrap()
            .install(|| ordered_sum(100_000, term));
        assert_eq!(one.re.to_bits(), many.re.to_bits());
        assert_eq!(one.im.to_bits(), many.im.to_bits());
    }

    #[test]
    fn moments_of_constant_sample() {
        let m = ordered_moments(5000, |_| 1.0);
        assert_eq!(m.mean(), 1.0);
        assert_eq!(m.std_error(), 0.0);
    }
}
