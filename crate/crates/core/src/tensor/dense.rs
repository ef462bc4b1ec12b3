//! Dense `2^N x 2^N` realization, used as the independent oracle route.
//!
//! Word matrices are built as literal Kronecker products of the 2x2 letter
//! matrices (over sparse triplets, since each factor has at most two nonzero
//! entries), independently of the bit-mask machinery in `state`.

use num_complex::Complex64;
use num_traits::{Num, Zero};
use rayon::prelude::*;

use super::opsum::OperatorSum;
use super::word::TensorWord;
use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::scalar::{to_c64, CRational};

/// Scalars a dense matrix can hold.
pub trait Entry: Clone + Num + std::ops::Neg<Output = Self> + Send + Sync {
    fn from_crational(z: &CRational) -> Self;
}

impl Entry for Complex64 {
    fn from_crational(z: &CRational) -> Self {
        to_c64(z)
    }
}

impl Entry for CRational {
    fn from_crational(z: &CRational) -> Self {
        z.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Entry> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Product over the nonzero entries of both factors, rows in parallel;
    /// operator matrices here are very sparse.
    pub fn matmul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let sparse_rows: Vec<Vec<(usize, T)>> = (0..n)
            .into_par_iter()
            .map(|k| {
                other
                    .row(k)
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| !b.is_zero())
                    .map(|(j, b)| (j, b.clone()))
                    .collect()
            })
            .collect();
        let mut out: Matrix<T> = Matrix::zeros(n);
        out.data
            .par_chunks_mut(n.max(1))
            .enumerate()
            .for_each(|(i, row)| {
                for (k, a) in self.row(i).iter().enumerate() {
                    if a.is_zero() {
                        continue;
                    }
                    for (j, b) in &sparse_rows[k] {
                        row[*j] = row[*j].clone() + a.clone() * b.clone();
                    }
                }
            });
        out
    }

    pub fn trace(&self) -> T {
        (0..self.n).fold(T::zero(), |acc, i| acc + self.get(i, i).clone())
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_of_product(&self, other: &Matrix<T>) -> T {
        let n = self.n;
        let mut acc = T::zero();
        for i in 0..n {
            for j in 0..n {
                let a = self.get(i, j);
                if a.is_zero() {
                    continue;
                }
                let b = other.get(j, i);
                if !b.is_zero() {
                    acc = acc + a.clone() * b.clone();
                }
            }
        }
        acc
    }

    pub fn pow(&self, p: usize) -> Matrix<T> {
        let mut acc = Matrix::identity(self.n);
        for _ in 0..p {
            acc = acc.matmul(self);
        }
        acc
    }

    /// Unnormalized `tr(M^p)`, splitting the power to save one product.
    pub fn trace_pow(&self, p: usize) -> T {
        if p == 0 {
            return (0..self.n).fold(T::zero(), |acc, _| acc + T::one());
        }
        let half = self.pow(p / 2);
        let rest = if p.is_multiple_of(2) {
            half.clone()
        } else {
            half.matmul(self)
        };
        half.trace_of_product(&rest)
    }

    pub fn apply(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, _)| !a.is_zero())
                    .fold(T::zero(), |acc, (a, x)| acc + a.clone() * x.clone())
            })
            .collect()
    }
}

impl Matrix<CRational> {
    pub fn conj_transpose(&self) -> Matrix<CRational> {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn to_c64(&self) -> Matrix<Complex64> {
        Matrix {
            n: self.n,
            data: self.data.iter().map(to_c64).collect(),
        }
    }
}

impl Matrix<Complex64> {
    pub fn conj_transpose(&self) -> Matrix<Complex64> {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }
}

/// Nonzero entries `(row, col, value)` of the Kronecker product of the letters
/// of `w`, padded with identities up to `level` sites.
pub fn kron_word(w: &TensorWord, level: usize) -> Vec<(usize, usize, i8)> {
    let mut entries = vec![(0usize, 0usize, 1i8)];
    for site in 1..=level {
        let m = w.site(site).matrix();
        let mut next = Vec::with_capacity(entries.len() * 2);
        for &(r, c, v) in &entries {
            for (i, row) in m.iter().enumerate() {
                for (j, &x) in row.iter().enumerate() {
                    if x != 0 {
                        next.push((2 * r + i, 2 * c + j, v * x));
                    }
                }
            }
        }
        entries = next;
    }
    entries
}

/// The literal matrix of `x` on `level` sites, subject to the oracle cap.
pub fn dense<T: Entry>(x: &OperatorSum, level: usize, caps: &Caps) -> Result<Matrix<T>> {
    caps.check_oracle(level)?;
    if x.level() > level {
        return Err(Error::InvalidInput(format!(
            "operator acts on {} sites but the level is {level}",
            x.level()
        )));
    }
    let mut m: Matrix<T> = Matrix::zeros(1 << level);
    for (w, c) in x.terms() {
        let c = T::from_crational(c);
        for (r, col, s) in kron_word(w, level) {
            let v = if s < 0 { -c.clone() } else { c.clone() };
            let slot = &mut m.data[r * (1 << level) + col];
            *slot = slot.clone() + v;
        }
    }
    Ok(m)
}

/// Rank of a list of column vectors by exact Gaussian elimination.
pub fn exact_rank(columns: &[Vec<CRational>]) -> usize {
    let mut rows: Vec<Vec<CRational>> = columns
        .iter()
        .filter(|c| c.iter().any(|x| !x.is_zero()))
        .cloned()
        .collect();
    let width = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..width {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = crate::scalar::cone() / rows[rank][col].clone();
        let pivot_row = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            if row[col].is_zero() {
                continue;
            }
            let f = row[col].clone() * inv.clone();
            for (x, p) in row.iter_mut().zip(&pivot_row).skip(col) {
                if !p.is_zero() {
                    *x = x.clone() - f.clone() * p.clone();
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Columns of a dense exact matrix.
pub fn columns(m: &Matrix<CRational>) -> Vec<Vec<CRational>> {
    let n = m.dim();
    (0..n)
        .map(|j| (0..n).map(|i| m.get(i, j).clone()).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{creal, rat, real};

    fn exact(s: &str, level: usize) -> Matrix<CRational> {
        let x = OperatorSum::word(TensorWord::parse(s).unwrap());
        dense(&x, level, &Caps::default()).unwrap()
    }

    #[test]
    fn v_at_one_site() {
        let m = exact("V", 1);
        assert_eq!(*m.get(0, 1), creal(1, 1));
        assert!(m.get(0, 0).is_zero() && m.get(1, 0).is_zero() && m.get(1, 1).is_zero());
    }

    #[test]
    fn i_tensor_q_is_diag_0101() {
        let m = exact("IQ", 2);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j && i % 2 == 1 {
                    creal(1, 1)
                } else {
                    creal(0, 1)
                };
                assert_eq!(*m.get(i, j), expect);
            }
        }
    }

    #[test]
    fn empty_word_is_identity() {
        assert_eq!(exact("", 2), Matrix::identity(4));
    }

    #[test]
    fn cap_is_enforced() {
        let caps = Caps {
            oracle_level: 3,
            ..Caps::default()
        };
        assert!(dense::<Complex64>(&OperatorSum::identity(), 4, &caps).is_err());
    }

    #[test]
    fn word_trace_matches_matrix_trace() {
        for s in ["PQ", "VQ", "IIQ", "RT", "PPQ"] {
            let w = TensorWord::parse(s).unwrap();
            let m = exact(s, 3);
            assert_eq!(m.trace(), real(w.trace() * rat(8, 1)), "{s}");
        }
    }

    #[test]
    fn ranks() {
        let m = exact("PQ", 2);
        assert_eq!(exact_rank(&columns(&m)), 1);
        assert_eq!(exact_rank(&columns(&Matrix::identity(4))), 4);
        assert_eq!(exact_rank(&columns(&exact("R", 2))), 4);
    }
}
