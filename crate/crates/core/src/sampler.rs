//! Monte Carlo realization of `X_α` as the random signed series `Σ ε_n α^n`
//! and the dyadic step functions `f_n` of its Rademacher model.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::CoefficientSpec;
use crate::error::{Error, Result};
use crate::scalar::{fmt_rational, to_f64, Rational};

/// Deepest series a single 64-bit draw can sign.
pub const MAX_SAMPLE_LEVEL: usize = 64;
/// Deepest dyadic address resolvable in double precision.
pub const MAX_EVAL_LEVEL: usize = 52;
const CHUNK: usize = 1 << 14;

/// Sign of `f_k` on dyadic cell `cell` of `[−1, 1]` at depth `level`
/// (cells numbered from the left): the `k`-th most significant address bit.
pub fn dyadic_sign(cell: u64, k: usize, level: usize) -> i8 {
    debug_assert!(k >= 1 && k <= level);
    if (cell >> (level - k)) & 1 == 1 {
        1
    } else {
        -1
    }
}

/// Depth-`level` dyadic cell containing `x`; breakpoints belong to the cell
/// on their left.
pub fn dyadic_cell(x: f64, level: usize) -> u64 {
    let u = (x + 1.0) * (1u64 << (level - 1)) as f64;
    let last = (1u64 << level) - 1;
    (u.ceil() as i64 - 1).clamp(0, last as i64) as u64
}

/// `f(x) = Σ_{n≤N} c_n f_n(x)`.
pub fn f_eval(spec: &CoefficientSpec, x: f64, level: usize) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::InvalidInput(format!(
            "x must lie in [-1, 1], got {x}"
        )));
    }
    if level == 0 || level > MAX_EVAL_LEVEL {
        return Err(Error::InvalidInput(format!(
            "depth must be in 1..={MAX_EVAL_LEVEL}, got {level}"
        )));
    }
    let cell = dyadic_cell(x, level);
    let mut acc = 0.0;
    for k in 1..=level {
        acc += f64::from(dyadic_sign(cell, k, level)) * to_f64(&spec.real_coeff(k)?);
    }
    Ok(acc)
}

/// Smallest `N` with `α^{N+1}/(1−α)` below half of one histogram bin.
pub fn default_level(alpha: f64, bins: usize) -> usize {
    let support = alpha / (1.0 - alpha);
    let half_bin = support / bins.max(1) as f64;
    (1..MAX_SAMPLE_LEVEL)
        .find(|&n| alpha.powi(n as i32 + 1) / (1.0 - alpha) < half_bin)
        .unwrap_or(MAX_SAMPLE_LEVEL)
}

/// The `index`-th sample of the run: signs are the low `level` bits of one
/// draw from the ChaCha8 stream `index` under `seed`.
pub fn sample_at(alpha: f64, seed: u64, index: u64, level: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let bits = rng.next_u64();
    let mut pow = 1.0;
    let mut acc = 0.0;
    for n in 0..level {
        pow *= alpha;
        acc += if (bits >> n) & 1 == 1 { pow } else { -pow };
    }
    acc
}

pub fn sample_values(alpha: f64, count: usize, seed: u64, level: usize) -> Vec<f64> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| sample_at(alpha, seed, i, level))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRun {
    pub alpha: String,
    pub count: usize,
    pub seed: u64,
    pub level: usize,
    /// `Σ_{n≤N} α^n`; every sample lies in `[−support, support]`.
    pub support: f64,
    pub mean: f64,
    /// Raw moments of orders `1..=8`.
    pub moments: Vec<f64>,
    pub histogram: Histogram,
    /// Sup-distance of the empirical CDF to the uniform CDF on the support.
    pub ks_uniform: f64,
}

impl SampleRun {
    /// Raw moment of order `k` (`1..=8`).
    pub fn moment(&self, k: usize) -> f64 {
        self.moments[k - 1]
    }

    /// Standard error of the empirical `k`-th moment, `k ≤ 4`.
    pub fn standard_error(&self, k: usize) -> f64 {
        let var = self.moment(2 * k) - self.moment(k).powi(2);
        (var.max(0.0) / self.count as f64).sqrt()
    }
}

/// Kahan-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }
}

pub fn sample_series(
    alpha: &Rational,
    count: usize,
    seed: u64,
    level: usize,
    bins: usize,
) -> Result<SampleRun> {
    let a = to_f64(alpha);
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidInput(format!(
            "α must lie in (0, 1), got {}",
            fmt_rational(alpha)
        )));
    }
    if count == 0 || bins == 0 {
        return Err(Error::InvalidInput(
            "count and bins must be positive".into(),
        ));
    }
    if level == 0 || level > MAX_SAMPLE_LEVEL {
        return Err(Error::InvalidInput(format!(
            "level must be in 1..={MAX_SAMPLE_LEVEL}, got {level}"
        )));
    }
    let support = (1..=level).map(|n| a.powi(n as i32)).sum::<f64>();
    let mut values = sample_values(a, count, seed, level);
    let width = 2.0 * support / bins as f64;

    let partials: Vec<([Kahan; 8], Vec<u64>)> = values
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut sums = [Kahan::default(); 8];
            let mut counts = vec![0u64; bins];
            for &x in chunk {
                let mut p = 1.0;
                for s in sums.iter_mut() {
                    p *= x;
                    s.add(p);
                }
                let b = (((x + support) / width) as usize).min(bins - 1);
                counts[b] += 1;
            }
            (sums, counts)
        })
        .collect();
    let mut totals = [Kahan::default(); 8];
    let mut counts = vec![0u64; bins];
    for (sums, c) in &partials {
        for (t, s) in totals.iter_mut().zip(sums) {
            t.add(s.sum);
            t.add(-s.comp);
        }
        for (acc, x) in counts.iter_mut().zip(c) {
            *acc += x;
        }
    }
    let moments: Vec<f64> = totals.iter().map(|t| t.sum / count as f64).collect();
    let edges = (0..=bins).map(|i| -support + width * i as f64).collect();

    values.par_sort_unstable_by(f64::total_cmp);
    let ks_uniform = ks_distance(&values, |x| {
        ((x + support) / (2.0 * support)).clamp(0.0, 1.0)
    });

    Ok(SampleRun {
        alpha: fmt_rational(alpha),
        count,
        seed,
        level,
        support,
        mean: moments[0],
        moments,
        histogram: Histogram { edges, counts },
        ks_uniform,
    })
}

/// Kolmogorov–Smirnov distance between the empirical law of `sorted` and `cdf`.
pub fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max((f - i as f64 / n).abs())
            .max(((i + 1) as f64 / n - f).abs())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn first_step_function() {
        let one = CoefficientSpec::parse("list:1").unwrap();
        assert_eq!(f_eval(&one, 0.5, 1).unwrap(), 1.0);
        assert_eq!(f_eval(&one, -0.5, 1).unwrap(), -1.0);
        assert_eq!(f_eval(&one, 0.0, 1).unwrap(), -1.0);
        for x in [0.01, 0.3, 0.99, 1.0] {
            assert_eq!(f_eval(&one, x, 5).unwrap(), 1.0);
        }
    }

    #[test]
    fn geometric_half_is_identity() {
        let g = CoefficientSpec::geometric(rat(1, 2)).unwrap();
        for x in [0.3, -0.7, 0.123456, -0.999] {
            assert!(
                (f_eval(&g, x, 30).unwrap() - x).abs() <= 2f64.powi(-29),
                "{x}"
            );
        }
    }

    #[test]
    fn recursion_for_next_step() {
        let e2 = CoefficientSpec::parse("list:0,1").unwrap();
        let one = CoefficientSpec::parse("list:1").unwrap();
        let f1 = |y: f64| {
            if (-1.0..=1.0).contains(&y) {
                f_eval(&one, y, 1).unwrap()
            } else {
                0.0
            }
        };
        for x in [-0.9, -0.6, -0.3, -0.1, 0.1, 0.3, 0.6, 0.9] {
            assert_eq!(
                f_eval(&e2, x, 2).unwrap(),
                f1(2.0 * x + 1.0) + f1(2.0 * x - 1.0),
                "{x}"
            );
        }
    }

    #[test]
    fn deterministic_and_bounded() {
        let a = sample_series(&rat(1, 3), 1, 7, 20, 4).unwrap();
        let b = sample_series(&rat(1, 3), 1, 7, 20, 4).unwrap();
        assert_eq!(a, b);
        let run = sample_series(&rat(1, 3), 5000, 11, 20, 16).unwrap();
        assert_eq!(run.histogram.total(), 5000);
        let values = sample_values(1.0 / 3.0, 5000, 11, 20);
        assert!(values.iter().all(|x| x.abs() <= run.support));
        assert_eq!(values[17], sample_at(1.0 / 3.0, 11, 17, 20));
    }

    #[test]
    fn odd_moments_vanish_statistically() {
        let run = sample_series(&rat(1, 2), 200_000, 3, 30, 50).unwrap();
        for k in [1, 3] {
            assert!(run.moment(k).abs() <= 4.0 * run.standard_error(k), "m{k}");
        }
        assert!((run.moment(2) - 1.0 / 3.0).abs() <= 4.0 * run.standard_error(2));
    }

    #[test]
    fn level_choice() {
        let n = default_level(0.5, 100);
        assert!(0.5f64.powi(n as i32 + 1) / 0.5 < 0.01);
        assert!(0.5f64.powi(n as i32) / 0.5 >= 0.01);
    }
}
