use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::letter::Letter;
use super::word::TensorWord;
use crate::scalar::{fmt_crational, real, CRational, Rational};

/// Finite weighted sum of tensor words with exact complex-rational weights.
///
/// Words in the letter alphabet are not linearly independent (`P + Q = I`),
/// so structural equality of two sums is not operator equality; use
/// [`OperatorSum::is_zero`] or [`OperatorSum::same_operator`] for that.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OperatorSum {
    terms: BTreeMap<TensorWord, CRational>,
}

impl OperatorSum {
    pub fn zero() -> Self {
        OperatorSum::default()
    }

    pub fn identity() -> Self {
        OperatorSum::word(TensorWord::identity())
    }

    pub fn word(w: TensorWord) -> Self {
        OperatorSum::term(CRational::one(), w)
    }

    pub fn term(weight: CRational, w: TensorWord) -> Self {
        let mut s = OperatorSum::zero();
        s.add_term(weight, w);
        s
    }

    pub fn scalar(weight: CRational) -> Self {
        OperatorSum::term(weight, TensorWord::identity())
    }

    /// `weight · (I ⊗ … ⊗ letter ⊗ I …)` with the letter at 1-based `site`.
    pub fn site(weight: CRational, site: usize, letter: Letter) -> Self {
        OperatorSum::term(weight, TensorWord::at(site, letter))
    }

    pub fn add_term(&mut self, weight: CRational, w: TensorWord) {
        if weight.is_zero() {
            return;
        }
        match self.terms.entry(w) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(weight);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += weight;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TensorWord, &CRational)> {
        self.terms.iter()
    }

    pub fn weight(&self, w: &TensorWord) -> CRational {
        self.terms.get(w).cloned().unwrap_or_else(CRational::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// No stored terms. This is structural; see [`OperatorSum::is_zero`].
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Longest word length, i.e. the smallest level the sum lives on.
    pub fn level(&self) -> usize {
        self.terms.keys().map(TensorWord::len).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &CRational) -> OperatorSum {
        if c.is_zero() {
            return OperatorSum::zero();
        }
        OperatorSum {
            terms: self.terms.iter().map(|(w, x)| (w.clone(), x * c)).collect(),
        }
    }

    pub fn scale_real(&self, r: &Rational) -> OperatorSum {
        self.scale(&real(r.clone()))
    }

    pub fn adjoint(&self) -> OperatorSum {
        let mut out = OperatorSum::zero();
        for (w, x) in &self.terms {
            let (s, wa) = w.adjoint();
            let c = x.conj();
            out.add_term(if s < 0 { -c } else { c }, wa);
        }
        out
    }

    /// Normalized trace, exact.
    pub fn trace(&self) -> CRational {
        let mut acc = CRational::zero();
        for (w, x) in &self.terms {
            if let Some(e) = w.trace_exponent() {
                acc += x.scale(Rational::new(
                    1.into(),
                    num_traits::pow(num_bigint::BigInt::from(2), e as usize),
                ));
            }
        }
        acc
    }

    pub fn pow(&self, k: usize) -> OperatorSum {
        let mut acc = OperatorSum::identity();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn commutator(&self, other: &OperatorSum) -> OperatorSum {
        &(self * other) - &(other * self)
    }

    /// `τ(x* y)`, the GNS inner product.
    pub fn inner(&self, other: &OperatorSum) -> CRational {
        (&self.adjoint() * other).trace()
    }

    /// `τ(x* x) = ‖x‖₂²`, exact and nonnegative.
    pub fn norm2_sq(&self) -> Rational {
        self.inner(self).re
    }

    /// Coordinates in the basis of words over `{I, Z, V, V*}` (trailing `I`
    /// trimmed), which is a genuine linear basis; two sums are the same
    /// operator iff their canonical forms agree.
    pub fn canonical(&self) -> OperatorSum {
        let half = Rational::new(1.into(), 2.into());
        let mut out = OperatorSum::zero();
        for (w, x) in &self.terms {
            let mut partial: Vec<(CRational, Vec<Letter>)> =
                vec![(x.clone(), Vec::with_capacity(w.len()))];
            for &l in w.letters() {
                let (parts, halved) = l.basis_expansion();
                let mut next = Vec::with_capacity(partial.len() * parts.len());
                for (c, letters) in &partial {
                    let c = if halved {
                        c.scale(half.clone())
                    } else {
                        c.clone()
                    };
                    for &(s, b) in parts {
                        let mut v = letters.clone();
                        v.push(b);
                        next.push((if s < 0 { -c.clone() } else { c.clone() }, v));
                    }
                }
                partial = next;
            }
            for (c, letters) in partial {
                out.add_term(c, TensorWord::new(letters));
            }
        }
        out
    }

    /// Operator equality to zero, exact.
    pub fn is_zero(&self) -> bool {
        self.canonical().is_empty()
    }

    pub fn same_operator(&self, other: &OperatorSum) -> bool {
        (self - other).is_zero()
    }

    pub fn is_selfadjoint(&self) -> bool {
        self.same_operator(&self.adjoint())
    }

    /// Orthogonal projection test: `x² = x` and `x* = x`, exactly.
    pub fn is_projection(&self) -> bool {
        self.is_selfadjoint() && (self * self).same_operator(self)
    }

    /// Applies `f` to every weight, dropping terms that become zero.
    pub fn map_weights(&self, f: impl Fn(&CRational) -> CRational) -> OperatorSum {
        let mut out = OperatorSum::zero();
        for (w, x) in &self.terms {
            out.add_term(f(x), w.clone());
        }
        out
    }
}

impl Add for &OperatorSum {
    type Output = OperatorSum;
    fn add(self, rhs: &OperatorSum) -> OperatorSum {
        let mut out = self.clone();
        for (w, x) in &rhs.terms {
            out.add_term(x.clone(), w.clone());
        }
        out
    }
}

impl Sub for &OperatorSum {
    type Output = OperatorSum;
    fn sub(self, rhs: &OperatorSum) -> OperatorSum {
        let mut out = self.clone();
        for (w, x) in &rhs.terms {
            out.add_term(-x.clone(), w.clone());
        }
        out
    }
}

impl Neg for &OperatorSum {
    type Output = OperatorSum;
    fn neg(self) -> OperatorSum {
        OperatorSum {
            terms: self
                .terms
                .iter()
                .map(|(w, x)| (w.clone(), -x.clone()))
                .collect(),
        }
    }
}

impl Mul for &OperatorSum {
    type Output = OperatorSum;
    fn mul(self, rhs: &OperatorSum) -> OperatorSum {
        let mut out = OperatorSum::zero();
        for (wa, xa) in &self.terms {
            for (wb, xb) in &rhs.terms {
                if let Some((s, w)) = wa.mul(wb) {
                    let c = xa * xb;
                    out.add_term(if s < 0 { -c } else { c }, w);
                }
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for OperatorSum {
            type Output = OperatorSum;
            fn $m(self, rhs: OperatorSum) -> OperatorSum {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for OperatorSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (w, x)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            if x.is_one() {
                write!(f, "{w}")?;
            } else {
                write!(f, "({})·{w}", fmt_crational(x))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{creal, imag_unit};

    fn w(s: &str) -> OperatorSum {
        OperatorSum::word(TensorWord::parse(s).unwrap())
    }

    #[test]
    fn letter_relations() {
        assert!((&w("V") * &w("Q")).same_operator(&w("V")));
        assert!((&w("V") * &w("P")).is_empty());
        assert!((&w("V") * &w("V*")).same_operator(&w("P")));
    }

    #[test]
    fn adjoint_conjugates_weights() {
        let x = OperatorSum::term(imag_unit(), TensorWord::parse("V").unwrap());
        let a = x.adjoint();
        assert_eq!(a.weight(&TensorWord::parse("V*").unwrap()), -imag_unit());
        let t = w("T").adjoint();
        assert_eq!(t.weight(&TensorWord::parse("T").unwrap()), creal(-1, 1));
    }

    #[test]
    fn traces() {
        let x = &w("QQ").scale(&creal(1, 2)) + &w("PP").scale(&creal(1, 2));
        assert_eq!(x.trace(), creal(1, 4));
        assert_eq!(OperatorSum::identity().trace(), creal(1, 1));
    }

    #[test]
    fn canonical_form_sees_hidden_zeros() {
        let z = &(&w("P") + &w("Q")) - &OperatorSum::identity();
        assert!(!z.is_empty());
        assert!(z.is_zero());
        let r = &(&w("IV") + &w("IV*")) - &w("IR");
        assert!(r.is_zero());
        // V ⊗ I and V ⊗ P + V ⊗ Q agree even though the words have different lengths.
        assert!(w("V").same_operator(&(&w("VP") + &w("VQ"))));
        assert!(!w("V").same_operator(&w("VP")));
    }

    #[test]
    fn projections() {
        assert!(w("PQ").is_projection());
        assert!(!w("V").is_projection());
        assert!(!w("R").is_projection());
    }

    #[test]
    fn powers() {
        let a = &w("V").scale(&creal(1, 2)) + &w("IV").scale(&creal(1, 4));
        let a2 = a.pow(2);
        assert!(a2.same_operator(&w("VV").scale(&creal(1, 4))));
        assert!(a.pow(3).is_zero());
        assert!(a.pow(0).same_operator(&OperatorSum::identity()));
    }
}
