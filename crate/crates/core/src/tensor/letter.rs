//! Single-site 2x2 matrices.
//!
//! The named letters I, P, Q, V, V*, R, T are all signed partial permutation
//! matrices, and that class is closed under multiplication. Up to sign it has
//! exactly eight nonzero members, so adding `Z = diag(1, -1)` makes the
//! alphabet closed: every product of letters is `0` or `±letter`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Letter {
    I,
    P,
    Q,
    V,
    Vstar,
    R,
    T,
    /// `diag(1, -1)`; only arises as a product (`R·T = -Z`, `V·V* - V*·V`...).
    Z,
}

pub type Mat2 = [[i8; 2]; 2];

impl Letter {
    pub const ALL: [Letter; 8] = [
        Letter::I,
        Letter::P,
        Letter::Q,
        Letter::V,
        Letter::Vstar,
        Letter::R,
        Letter::T,
        Letter::Z,
    ];

    /// The matrix in the basis (first coordinate = bit 0, second = bit 1).
    pub const fn matrix(self) -> Mat2 {
        match self {
            Letter::I => [[1, 0], [0, 1]],
            Letter::P => [[1, 0], [0, 0]],
            Letter::Q => [[0, 0], [0, 1]],
            Letter::V => [[0, 1], [0, 0]],
            Letter::Vstar => [[0, 0], [1, 0]],
            Letter::R => [[0, 1], [1, 0]],
            Letter::T => [[0, 1], [-1, 0]],
            Letter::Z => [[1, 0], [0, -1]],
        }
    }

    /// Recognizes `±letter` from a matrix, `None` for the zero matrix.
    ///
    /// Panics on matrices outside the signed-partial-permutation class; products
    /// of letters never leave it.
    pub fn from_matrix(m: Mat2) -> Option<(i8, Letter)> {
        if m == [[0, 0], [0, 0]] {
            return None;
        }
        let lead = m.iter().flatten().copied().find(|&x| x != 0).unwrap();
        let norm = [
            [m[0][0] * lead, m[0][1] * lead],
            [m[1][0] * lead, m[1][1] * lead],
        ];
        let letter = Letter::ALL
            .into_iter()
            .find(|l| l.matrix() == norm)
            .unwrap_or_else(|| panic!("{m:?} is not a signed partial permutation"));
        Some((lead, letter))
    }

    /// `self · other` as `±letter`, or `None` when the product vanishes.
    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, other: Letter) -> Option<(i8, Letter)> {
        match (self, other) {
            (Letter::I, x) | (x, Letter::I) => return Some((1, x)),
            _ => {}
        }
        let (a, b) = (self.matrix(), other.matrix());
        let mut c = [[0i8; 2]; 2];
        for (i, row) in c.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Letter::from_matrix(c)
    }

    /// Conjugate transpose as `±letter`.
    pub fn adjoint(self) -> (i8, Letter) {
        match self {
            Letter::V => (1, Letter::Vstar),
            Letter::Vstar => (1, Letter::V),
            Letter::T => (-1, Letter::T),
            other => (1, other),
        }
    }

    /// Normalized single-site trace `tr(M)/2` expressed as a power of two:
    /// `Some(0)` for 1, `Some(1)` for 1/2, `None` for 0.
    pub fn half_trace_exponent(self) -> Option<u32> {
        match self {
            Letter::I => Some(0),
            Letter::P | Letter::Q => Some(1),
            _ => None,
        }
    }

    /// Action on one bit: for input bit `b`, the output bit and sign, or
    /// `None` if the column is zero.
    pub fn act(self, b: u8) -> Option<(u8, i8)> {
        let m = self.matrix();
        let col = b as usize;
        (0..2)
            .find(|&r| m[r][col] != 0)
            .map(|r| (r as u8, m[r][col]))
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Letter::I => "I",
            Letter::P => "P",
            Letter::Q => "Q",
            Letter::V => "V",
            Letter::Vstar => "V*",
            Letter::R => "R",
            Letter::T => "T",
            Letter::Z => "Z",
        }
    }

    pub fn parse(s: &str) -> Result<Letter> {
        Ok(match s {
            "I" | "1" => Letter::I,
            "P" => Letter::P,
            "Q" => Letter::Q,
            "V" => Letter::V,
            "V*" | "Vs" | "Vstar" => Letter::Vstar,
            "R" => Letter::R,
            "T" => Letter::T,
            "Z" => Letter::Z,
            _ => return Err(Error::Parse(format!("unknown site letter {s:?}"))),
        })
    }

    /// Coordinates in the basis `{I, Z, V, V*}` as `(numerator, letter)`
    /// pairs; `P` and `Q` carry an extra overall factor 1/2 (second field).
    pub fn basis_expansion(self) -> (&'static [(i8, Letter)], bool) {
        match self {
            Letter::I => (&[(1, Letter::I)], false),
            Letter::Z => (&[(1, Letter::Z)], false),
            Letter::V => (&[(1, Letter::V)], false),
            Letter::Vstar => (&[(1, Letter::Vstar)], false),
            Letter::P => (&[(1, Letter::I), (1, Letter::Z)], true),
            Letter::Q => (&[(1, Letter::I), (-1, Letter::Z)], true),
            Letter::R => (&[(1, Letter::V), (1, Letter::Vstar)], false),
            Letter::T => (&[(1, Letter::V), (-1, Letter::Vstar)], false),
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matmul(a: Mat2, b: Mat2) -> Mat2 {
        let mut c = [[0i8; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        c
    }

    #[test]
    fn product_table_closes_and_matches_matrices() {
        for a in Letter::ALL {
            for b in Letter::ALL {
                let expect = matmul(a.matrix(), b.matrix());
                match a.mul(b) {
                    None => assert_eq!(expect, [[0, 0], [0, 0]], "{a}·{b}"),
                    Some((s, l)) => {
                        let m = l.matrix();
                        let scaled = [[s * m[0][0], s * m[0][1]], [s * m[1][0], s * m[1][1]]];
                        assert_eq!(scaled, expect, "{a}·{b}");
                    }
                }
            }
        }
    }

    #[test]
    fn relations_used_by_the_operator_identities() {
        assert_eq!(Letter::V.mul(Letter::Q), Some((1, Letter::V)));
        assert_eq!(Letter::V.mul(Letter::P), None);
        assert_eq!(Letter::Vstar.mul(Letter::P), Some((1, Letter::Vstar)));
        assert_eq!(Letter::Vstar.mul(Letter::Q), None);
        assert_eq!(Letter::V.mul(Letter::Vstar), Some((1, Letter::P)));
        assert_eq!(Letter::Vstar.mul(Letter::V), Some((1, Letter::Q)));
        assert_eq!(Letter::V.mul(Letter::V), None);
        assert_eq!(Letter::R.mul(Letter::R), Some((1, Letter::I)));
        assert_eq!(Letter::T.mul(Letter::T), Some((-1, Letter::I)));
    }

    #[test]
    fn adjoint_is_transpose() {
        for a in Letter::ALL {
            let (s, l) = a.adjoint();
            let m = a.matrix();
            let t = l.matrix();
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(s * t[i][j], m[j][i]);
                }
            }
        }
    }

    #[test]
    fn basis_expansion_reconstructs_matrix() {
        for a in Letter::ALL {
            let (terms, halved) = a.basis_expansion();
            let mut acc = [[0i8; 2]; 2];
            for &(s, u) in terms {
                let m = u.matrix();
                for i in 0..2 {
                    for j in 0..2 {
                        acc[i][j] += s * m[i][j];
                    }
                }
            }
            let scale = if halved { 2 } else { 1 };
            let m = a.matrix();
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(acc[i][j], scale * m[i][j], "{a}");
                }
            }
        }
    }
}
