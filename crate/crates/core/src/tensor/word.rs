use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::letter::Letter;
use crate::error::{Error, Result};
use crate::scalar::Rational;

/// A tensor product of site letters; site 1 is the leftmost factor and every
/// site past the end carries `I`. Trailing identities are always trimmed, so
/// structurally equal words are equal operators.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct TensorWord(Vec<Letter>);

impl TensorWord {
    pub fn identity() -> Self {
        TensorWord(Vec::new())
    }

    pub fn new(mut letters: Vec<Letter>) -> Self {
        while letters.last() == Some(&Letter::I) {
            letters.pop();
        }
        TensorWord(letters)
    }

    /// `I^{⊗(site-1)} ⊗ letter`, with 1-based `site`.
    pub fn at(site: usize, letter: Letter) -> Self {
        assert!(site >= 1, "sites are 1-based");
        let mut v = vec![Letter::I; site];
        v[site - 1] = letter;
        TensorWord::new(v)
    }

    /// Word with the given letters placed at 1-based sites.
    pub fn placed(entries: &[(usize, Letter)]) -> Self {
        let len = entries.iter().map(|&(s, _)| s).max().unwrap_or(0);
        let mut v = vec![Letter::I; len];
        for &(s, l) in entries {
            assert!(s >= 1, "sites are 1-based");
            v[s - 1] = l;
        }
        TensorWord::new(v)
    }

    pub fn repeat(letter: Letter, n: usize) -> Self {
        TensorWord::new(vec![letter; n])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    /// Number of sites up to the last non-identity letter.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Letter at the 1-based site.
    pub fn site(&self, site: usize) -> Letter {
        self.0.get(site - 1).copied().unwrap_or(Letter::I)
    }

    /// Sitewise product, `None` if some site product vanishes.
    pub fn mul(&self, other: &TensorWord) -> Option<(i8, TensorWord)> {
        let n = self.len().max(other.len());
        let mut sign = 1i8;
        let mut out = Vec::with_capacity(n);
        for k in 1..=n {
            let (s, l) = self.site(k).mul(other.site(k))?;
            sign *= s;
            out.push(l);
        }
        Some((sign, TensorWord::new(out)))
    }

    pub fn adjoint(&self) -> (i8, TensorWord) {
        let mut sign = 1i8;
        let letters = self
            .0
            .iter()
            .map(|l| {
                let (s, a) = l.adjoint();
                sign *= s;
                a
            })
            .collect();
        (sign, TensorWord(letters))
    }

    /// Normalized trace `∏ tr(M_i)/2`, exact.
    pub fn trace(&self) -> Rational {
        match self.trace_exponent() {
            Some(e) => BigRational::new(
                One::one(),
                num_traits::pow(num_bigint::BigInt::from(2), e as usize),
            ),
            None => Rational::zero(),
        }
    }

    /// The trace as `2^{-e}`, or `None` when it is zero.
    pub fn trace_exponent(&self) -> Option<u32> {
        self.0
            .iter()
            .try_fold(0u32, |acc, l| l.half_trace_exponent().map(|e| acc + e))
    }

    /// Parses `P⊗Q⊗V*`, `P.Q.V*`, `P Q V*` or, for single-character letters, `PQV`.
    pub fn parse(s: &str) -> Result<TensorWord> {
        let s = s.trim();
        if s.is_empty() || s == "1" {
            return Ok(TensorWord::identity());
        }
        let tokens: Vec<String> = if s.contains(['⊗', '.', ' ', ',']) {
            s.split(['⊗', '.', ' ', ','])
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect()
        } else {
            let mut out: Vec<String> = Vec::new();
            for c in s.chars() {
                if c == '*' {
                    match out.last_mut() {
                        Some(prev) => prev.push('*'),
                        None => return Err(Error::Parse(format!("dangling '*' in {s:?}"))),
                    }
                } else {
                    out.push(c.to_string());
                }
            }
            out
        };
        let letters = tokens
            .iter()
            .map(|t| Letter::parse(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(TensorWord::new(letters))
    }

    /// Bit-level action on a `level`-site basis index: compiled masks so that
    /// applying the word to basis vector `j` costs O(1).
    pub fn compile(&self, level: usize) -> CompiledWord {
        assert!(self.len() <= level, "word longer than level");
        let mut c = CompiledWord {
            require_mask: 0,
            require_value: 0,
            flip: 0,
            neg_if_one: 0,
            neg_if_zero: 0,
        };
        for (k, &l) in self.0.iter().enumerate() {
            let bit = 1usize << (level - 1 - k);
            let on0 = l.act(0);
            let on1 = l.act(1);
            match (on0, on1) {
                (None, None) => unreachable!("letters are nonzero"),
                (Some(_), None) => c.require_mask |= bit,
                (None, Some(_)) => {
                    c.require_mask |= bit;
                    c.require_value |= bit;
                }
                (Some(_), Some(_)) => {}
            }
            if let Some((r, s)) = on0 {
                if r == 1 {
                    c.flip |= bit;
                }
                if s < 0 {
                    c.neg_if_zero |= bit;
                }
            }
            if let Some((r, s)) = on1 {
                if r == 0 {
                    c.flip |= bit;
                }
                if s < 0 {
                    c.neg_if_one |= bit;
                }
            }
        }
        c
    }
}

/// Precomputed bit masks describing a word as a signed partial permutation of
/// basis states.
#[derive(Debug, Clone, Copy)]
pub struct CompiledWord {
    require_mask: usize,
    require_value: usize,
    flip: usize,
    neg_if_one: usize,
    neg_if_zero: usize,
}

impl CompiledWord {
    /// Image of basis state `col`: `(row, negative?)`, or `None` if annihilated.
    #[inline]
    pub fn map(&self, col: usize) -> Option<(usize, bool)> {
        if col & self.require_mask != self.require_value {
            return None;
        }
        let neg = ((col & self.neg_if_one).count_ones() + (!col & self.neg_if_zero).count_ones())
            & 1
            == 1;
        Some((col ^ self.flip, neg))
    }
}

impl fmt::Display for TensorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (k, l) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("⊗")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn traces() {
        assert_eq!(TensorWord::identity().trace(), rat(1, 1));
        assert_eq!(TensorWord::parse("VQ").unwrap().trace(), rat(0, 1));
        assert_eq!(TensorWord::parse("QP").unwrap().trace(), rat(1, 4));
        assert_eq!(TensorWord::parse("IQI").unwrap().trace(), rat(1, 2));
    }

    #[test]
    fn trims_trailing_identity() {
        assert_eq!(
            TensorWord::parse("PII").unwrap(),
            TensorWord::parse("P").unwrap()
        );
        assert_eq!(TensorWord::at(3, Letter::V).to_string(), "I⊗I⊗V");
    }

    #[test]
    fn parse_forms() {
        let w = TensorWord::new(vec![Letter::P, Letter::Vstar, Letter::Q]);
        for s in ["PV*Q", "P⊗V*⊗Q", "P.V*.Q", "P V* Q"] {
            assert_eq!(TensorWord::parse(s).unwrap(), w);
        }
        assert!(TensorWord::parse("PX").is_err());
        assert!(TensorWord::parse("*P").is_err());
    }

    #[test]
    fn sitewise_products() {
        let v = TensorWord::parse("V").unwrap();
        let q = TensorWord::parse("IQ").unwrap();
        assert_eq!(v.mul(&q), Some((1, TensorWord::parse("VQ").unwrap())));
        let p = TensorWord::parse("P").unwrap();
        assert_eq!(v.mul(&p), None);
    }

    #[test]
    fn compiled_action_matches_letters() {
        // V at site 1 of a 3-site system sends |1xx> to |0xx>.
        let c = TensorWord::parse("V").unwrap().compile(3);
        assert_eq!(c.map(0b100), Some((0b000, false)));
        assert_eq!(c.map(0b011), None);
        // T sends bit 0 to -bit 1 and bit 1 to bit 0.
        let t = TensorWord::parse("IT").unwrap().compile(2);
        assert_eq!(t.map(0b00), Some((0b01, true)));
        assert_eq!(t.map(0b01), Some((0b00, false)));
    }
}
