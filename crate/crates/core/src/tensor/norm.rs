use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::opsum::OperatorSum;
use super::state::CompiledSum;
use crate::error::{Error, Result};

pub const NORM_SEED: u64 = 0x5_eed0_fa11;

/// Vectors of length `2^level` beyond this would not fit in memory.
pub const MAX_APPLY_LEVEL: usize = 30;

/// A linear map on `C^dim` that can also apply its adjoint.
pub trait LinearMap {
    fn dim(&self) -> usize;
    fn apply(&self, v: &[Complex64]) -> Vec<Complex64>;
    fn apply_adjoint(&self, v: &[Complex64]) -> Vec<Complex64>;
}

/// A compiled operator together with its compiled adjoint.
pub struct OperatorMap {
    forward: CompiledSum,
    backward: CompiledSum,
}

impl OperatorMap {
    pub fn new(x: &OperatorSum, level: usize) -> Result<Self> {
        Ok(OperatorMap {
            forward: CompiledSum::new(x, level)?,
            backward: CompiledSum::new(&x.adjoint(), level)?,
        })
    }
}

impl LinearMap for OperatorMap {
    fn dim(&self) -> usize {
        self.forward.dim()
    }
    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.forward.apply_vec(v)
    }
    fn apply_adjoint(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.backward.apply_vec(v)
    }
}

/// `M^k` applied by repetition, without expanding the power symbolically.
pub struct Power<'a, M: LinearMap> {
    pub base: &'a M,
    pub k: usize,
}

impl<M: LinearMap> LinearMap for Power<'_, M> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.k).fold(v.to_vec(), |acc, _| self.base.apply(&acc))
    }
    fn apply_adjoint(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.k).fold(v.to_vec(), |acc, _| self.base.apply_adjoint(&acc))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

fn start_vector(dim: usize) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(NORM_SEED);
    let v: Vec<Complex64> = (0..dim)
        .map(|_| {
            Complex64::new(
                1.0 + 0.1 * (rng.random::<f64>() - 0.5),
                0.1 * (rng.random::<f64>() - 0.5),
            )
        })
        .collect();
    let n = norm(&v);
    v.into_iter().map(|x| x / n).collect()
}

/// Largest singular value by power iteration on `M* M`.
///
/// Each step's estimate `‖M v‖` for unit `v` never exceeds the true norm.
pub fn largest_singular_value<M: LinearMap>(m: &M, tol: f64, max_iter: usize) -> NormEstimate {
    let mut v = start_vector(m.dim());
    let mut last = f64::NAN;
    for it in 1..=max_iter {
        let mv = m.apply(&v);
        let sigma = norm(&mv);
        if sigma == 0.0 {
            return NormEstimate {
                value: 0.0,
                iterations: it,
                converged: true,
            };
        }
        if (sigma - last).abs() < tol {
            return NormEstimate {
                value: sigma,
                iterations: it,
                converged: true,
            };
        }
        last = sigma;
        let w = m.apply_adjoint(&mv);
        let nw = norm(&w);
        if nw == 0.0 {
            return NormEstimate {
                value: sigma,
                iterations: it,
                converged: true,
            };
        }
        v = w.into_iter().map(|x| x / nw).collect();
    }
    NormEstimate {
        value: last,
        iterations: max_iter,
        converged: false,
    }
}

/// Operator norm of `x` realized on `level` sites.
pub fn op_norm(x: &OperatorSum, level: usize, tol: f64, max_iter: usize) -> Result<NormEstimate> {
    if tol <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if level > MAX_APPLY_LEVEL {
        return Err(Error::InvalidInput(format!(
            "level {level} exceeds the matrix-free limit {MAX_APPLY_LEVEL}"
        )));
    }
    let m = OperatorMap::new(x, level)?;
    Ok(largest_singular_value(&m, tol, max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::creal;
    use crate::tensor::word::TensorWord;

    fn w(s: &str) -> OperatorSum {
        OperatorSum::word(TensorWord::parse(s).unwrap())
    }

    #[test]
    fn simple_norms() {
        assert!((op_norm(&w("V"), 1, 1e-12, 100).unwrap().value - 1.0).abs() < 1e-10);
        let three = OperatorSum::scalar(creal(3, 1));
        assert!((op_norm(&three, 2, 1e-12, 100).unwrap().value - 3.0).abs() < 1e-10);
    }

    #[test]
    fn nilpotent_power_has_zero_norm() {
        let a = &w("V").scale(&creal(1, 2)) + &w("IV").scale(&creal(1, 4));
        let m = OperatorMap::new(&a, 2).unwrap();
        let est = largest_singular_value(&Power { base: &m, k: 3 }, 1e-12, 100);
        assert_eq!(est.value, 0.0);
        assert!(est.converged);
    }
}
