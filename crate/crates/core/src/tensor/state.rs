use num_complex::Complex64;
use rayon::prelude::*;

use super::opsum::OperatorSum;
use super::word::CompiledWord;
use crate::error::{Error, Result};
use crate::scalar::to_c64;

/// Amplitudes over the `2^N` site bitstrings; site 1 is the most significant
/// bit and bit 0 selects the `P`-supported coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    level: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zeros(level: usize) -> Self {
        StateVector {
            level,
            amps: vec![Complex64::new(0.0, 0.0); 1 << level],
        }
    }

    pub fn basis(level: usize, index: usize) -> Self {
        let mut v = StateVector::zeros(level);
        v.amps[index] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn from_amplitudes(level: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1 << level {
            return Err(Error::InvalidInput(format!(
                "expected {} amplitudes for level {level}, got {}",
                1usize << level,
                amps.len()
            )));
        }
        Ok(StateVector { level, amps })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }
}

/// An operator sum compiled for a fixed level: one signed partial
/// permutation per term, applied in gather form so rows parallelize.
#[derive(Debug, Clone)]
pub struct CompiledSum {
    level: usize,
    terms: Vec<(Complex64, CompiledWord)>,
}

impl CompiledSum {
    pub fn new(x: &OperatorSum, level: usize) -> Result<Self> {
        if x.level() > level {
            return Err(Error::InvalidInput(format!(
                "operator acts on {} sites but the level is {level}",
                x.level()
            )));
        }
        // Row r of a term receives the column that maps onto it; compiling
        // the adjoint word gives exactly that inverse map.
        let terms = x
            .adjoint()
            .terms()
            .map(|(w, c)| (to_c64(c).conj(), w.compile(level)))
            .collect();
        Ok(CompiledSum { level, terms })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn dim(&self) -> usize {
        1 << self.level
    }

    /// `out = x · v`.
    pub fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        out.par_iter_mut()
            .with_min_len(1024)
            .enumerate()
            .for_each(|(row, slot)| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, adj) in &self.terms {
                    // adj is w*, so adj.map(row) = (col, sign) with w e_col = sign e_row.
                    if let Some((col, neg)) = adj.map(row) {
                        let t = c * v[col];
                        if neg {
                            acc -= t;
                        } else {
                            acc += t;
                        }
                    }
                }
                *slot = acc;
            });
    }

    pub fn apply_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.apply_into(v, &mut out);
        out
    }
}

/// Matrix-free `x · v`.
pub fn apply(x: &OperatorSum, v: &StateVector) -> Result<StateVector> {
    let c = CompiledSum::new(x, v.level)?;
    Ok(StateVector {
        level: v.level,
        amps: c.apply_vec(&v.amps),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caps::Caps;
    use crate::scalar::creal;
    use crate::tensor::dense::{dense, Matrix};
    use crate::tensor::word::TensorWord;

    fn w(s: &str) -> OperatorSum {
        OperatorSum::word(TensorWord::parse(s).unwrap())
    }

    #[test]
    fn identity_is_noop() {
        let v = StateVector::from_amplitudes(
            2,
            (0..4).map(|i| Complex64::new(i as f64, 1.0)).collect(),
        )
        .unwrap();
        assert_eq!(apply(&OperatorSum::identity(), &v).unwrap(), v);
    }

    #[test]
    fn v_and_p_on_basis_vectors() {
        let e = StateVector::basis(3, 0b100);
        assert_eq!(apply(&w("V"), &e).unwrap(), StateVector::basis(3, 0));
        assert_eq!(apply(&w("P"), &e).unwrap().norm_sq(), 0.0);
    }

    #[test]
    fn matches_dense_oracle_with_signs() {
        let x = &(&w("TV*").scale(&creal(2, 3)) + &w("IRZ")) - &w("QIT").scale(&creal(1, 5));
        let m: Matrix<Complex64> = dense(&x, 3, &Caps::default()).unwrap();
        for j in 0..8 {
            let e = StateVector::basis(3, j);
            let got = apply(&x, &e).unwrap();
            let want = m.apply(e.amplitudes());
            for (a, b) in got.amplitudes().iter().zip(&want) {
                assert!((a - b).norm() < 1e-14);
            }
        }
    }
}
