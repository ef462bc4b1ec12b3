//! Growth rates `‖A^m ξ‖₂ / ‖A^m 1‖₂` for the geometric sequence `c_n = α^n`,
//! and exact non-hyperinvariance witnesses for diagonal word projections.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::caps::Caps;
use crate::coeffs::{elementary_symmetric, CoefficientSpec};
use crate::error::{Error, Result};
use crate::operators::{a_trunc, check_invariance, s_operator};
use crate::scalar::{fmt_rational, ln_rational, rational_string, to_f64, CRational, Rational};
use crate::tensor::dense::columns;
use crate::tensor::{dense, exact_rank, CompiledSum, Letter, Matrix, OperatorSum, TensorWord};

/// A word over `{P, Q}`, read from site 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct PQWord {
    letters: Vec<Letter>,
}

impl PQWord {
    pub fn new(letters: Vec<Letter>) -> Result<Self> {
        if let Some(l) = letters.iter().find(|l| !matches!(l, Letter::P | Letter::Q)) {
            return Err(Error::InvalidInput(format!(
                "projection words use only P and Q, found {l}"
            )));
        }
        Ok(PQWord { letters })
    }

    /// Parses `"PQP"`; `""` and `"1"` give the empty word.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "1" {
            return Ok(PQWord::default());
        }
        let letters = s
            .chars()
            .filter(|c| !matches!(c, '⊗' | '.' | ' '))
            .map(|c| match c {
                'P' | 'p' => Ok(Letter::P),
                'Q' | 'q' => Ok(Letter::Q),
                _ => Err(Error::Parse(format!(
                    "projection word {s:?} may only contain P and Q"
                ))),
            })
            .collect::<Result<_>>()?;
        Ok(PQWord { letters })
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn p_count(&self) -> usize {
        self.letters.iter().filter(|&&l| l == Letter::P).count()
    }

    pub fn tensor_word(&self) -> TensorWord {
        TensorWord::new(self.letters.clone())
    }

    /// All words of length exactly `len`.
    pub fn all(len: usize) -> Vec<PQWord> {
        (0..1usize << len)
            .map(|bits| PQWord {
                letters: (0..len)
                    .map(|i| {
                        if (bits >> (len - 1 - i)) & 1 == 0 {
                            Letter::P
                        } else {
                            Letter::Q
                        }
                    })
                    .collect(),
            })
            .collect()
    }
}

impl fmt::Display for PQWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("1");
        }
        for l in &self.letters {
            f.write_str(l.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PQWord {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PQWord::parse(s)
    }
}

impl Serialize for PQWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PQWord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        PQWord::parse(&String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

fn check_alpha(alpha: &Rational) -> Result<()> {
    if alpha.is_positive() && *alpha < Rational::one() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "α must lie in (0, 1), got {}",
            fmt_rational(alpha)
        )))
    }
}

/// `τ(R_m w)` for all `m ≤ m_max` and every suffix of one word, memoized.
struct RmTraces<'a> {
    alpha2: Rational,
    word: &'a [Letter],
    base: Vec<Rational>,
    memo: HashMap<(usize, usize), Rational>,
}

impl<'a> RmTraces<'a> {
    fn new(alpha: &Rational, word: &'a [Letter], m_max: usize) -> Self {
        let alpha2 = alpha * alpha;
        let mut base = vec![Rational::one()];
        for m in 1..=m_max {
            let a = num_traits::pow(alpha2.clone(), m);
            let mm = Rational::from_integer(BigInt::from(m * m));
            let f = &mm * &a / (Rational::from_integer(2.into()) * (Rational::one() - &a));
            let prev = base[m - 1].clone();
            base.push(f * prev);
        }
        RmTraces {
            alpha2,
            word,
            base,
            memo: HashMap::new(),
        }
    }

    /// `τ(R_m · word[start..])`.
    fn get(&mut self, start: usize, m: usize) -> Rational {
        if start == self.word.len() {
            return self.base[m].clone();
        }
        if let Some(v) = self.memo.get(&(start, m)) {
            return v.clone();
        }
        let half = Rational::new(1.into(), 2.into());
        let a = num_traits::pow(self.alpha2.clone(), m);
        let v = match self.word[start] {
            Letter::P => half * a * self.get(start + 1, m),
            _ => {
                let lower = if m == 0 {
                    Rational::zero()
                } else {
                    Rational::from_integer(BigInt::from(m * m)) * self.get(start + 1, m - 1)
                };
                half * a * (lower + self.get(start + 1, m))
            }
        };
        self.memo.insert((start, m), v.clone());
        v
    }
}

fn geometric_ratio(spec: &CoefficientSpec) -> Result<&Rational> {
    spec.ratio().ok_or(Error::NotGeometric)
}

/// `τ(R_m w)` with `R_m = (m!)² Σ_{q_1<…<q_m} α^{2(q_1+…+q_m)} Q_{q_1}⋯Q_{q_m}`,
/// exactly, through the letter-peeling recursions.
pub fn rm_trace(w: &PQWord, spec: &CoefficientSpec, m: usize) -> Result<Rational> {
    let alpha = geometric_ratio(spec)?;
    Ok(RmTraces::new(alpha, &w.letters, m).get(0, m))
}

/// `τ(R_m w)` evaluated directly from its defining sum truncated at `n`
/// sites, with a bound on the neglected part.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedRm {
    pub value: Rational,
    /// `τ(R_m w) − value ≤ tail_bound`.
    pub tail_bound: Rational,
}

/// `(m!)² 2^{−|w|} e_m(y_1..y_n)` with `y_q = α^{2q}` weighted by the letter
/// at site `q` (0 under `P`, 1 under `Q`, 1/2 past the word). The tail bound
/// is `(m!)² 2^{−|w|} Σ_{j≥1} e_{m−j} t^j / j!` with `t = Σ_{q>n} y_q`.
pub fn rm_truncated(w: &PQWord, alpha: &Rational, m: usize, n: usize) -> Result<TruncatedRm> {
    check_alpha(alpha)?;
    if n < w.len() {
        return Err(Error::InvalidInput(format!(
            "truncation {n} is shorter than the word {w}"
        )));
    }
    let a2 = alpha * alpha;
    let half = Rational::new(1.into(), 2.into());
    let ys: Vec<Rational> = (1..=n)
        .map(|q| {
            let a = num_traits::pow(a2.clone(), q);
            match w.letters.get(q - 1) {
                Some(Letter::P) => Rational::zero(),
                Some(_) => a,
                None => a * &half,
            }
        })
        .collect();
    let e = elementary_symmetric(&ys, m);
    let t = num_traits::pow(a2.clone(), n + 1) * &half / (Rational::one() - &a2);
    let mut tail = Rational::zero();
    let mut tj = Rational::one();
    for j in 1..=m {
        tj = tj * &t / Rational::from_integer(BigInt::from(j));
        tail += &e[m - j] * &tj;
    }
    let f = Rational::from_integer(BigInt::from(crate::scalar::factorial(m as u64)));
    let scale = &f * &f / Rational::from_integer(BigInt::one() << w.len());
    Ok(TruncatedRm {
        value: &scale * &e[m],
        tail_bound: scale * tail,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub m: usize,
    /// `τ(R_m w) / τ(R_m)`.
    #[serde(with = "rational_string")]
    pub ratio: Rational,
    /// `ratio^{1/(2m)}`.
    pub root: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioProfile {
    pub word: PQWord,
    #[serde(with = "rational_string")]
    pub alpha: Rational,
    pub rows: Vec<RatioRow>,
}

impl RatioProfile {
    /// The limit of the roots, `α^{#P(w)}`.
    pub fn limit(&self) -> f64 {
        to_f64(&self.alpha).powi(self.word.p_count() as i32)
    }

    pub fn row(&self, m: usize) -> Option<&RatioRow> {
        self.rows.iter().find(|r| r.m == m)
    }
}

pub fn ratio_profile(w: &PQWord, alpha: &Rational, m_max: usize) -> Result<RatioProfile> {
    check_alpha(alpha)?;
    let mut traces = RmTraces::new(alpha, &w.letters, m_max);
    let rows = (1..=m_max)
        .map(|m| {
            let ratio = traces.get(0, m) / &traces.base[m];
            let root = if ratio.is_zero() {
                0.0
            } else {
                (ln_rational(&ratio) / (2 * m) as f64).exp()
            };
            RatioRow { m, ratio, root }
        })
        .collect();
    Ok(RatioProfile {
        word: w.clone(),
        alpha: alpha.clone(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundRow {
    pub m: usize,
    /// `(‖A_N^m ξ‖₂ / (‖ξ‖₂ ‖A_N^m 1‖₂))^{1/m}`.
    pub root: f64,
    /// `e_m(α², …, α^{2(N−r)}) / e_m(α², …, α^{2N})`, the truncation factor.
    pub kappa: f64,
    /// `α^r κ^{1/(2m)} / √2`.
    pub bound: f64,
    pub margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub r: usize,
    pub level: usize,
    pub rows: Vec<LowerBoundRow>,
    pub holds: bool,
    pub min_margin: f64,
}

/// `‖x^m v‖² summed over the columns of `start`, for `m = 0..=m_max`.
fn column_power_norms(a: &CompiledSum, start: &[Vec<Complex64>], m_max: usize) -> Vec<f64> {
    start
        .par_iter()
        .map(|col| {
            let mut v = col.clone();
            let mut out = Vec::with_capacity(m_max + 1);
            for m in 0..=m_max {
                if m > 0 {
                    v = a.apply_vec(&v);
                }
                out.push(v.iter().map(Complex64::norm_sqr).sum::<f64>());
            }
            out
        })
        .reduce(
            || vec![0.0; m_max + 1],
            |x, y| x.iter().zip(&y).map(|(a, b)| a + b).collect(),
        )
}

/// Checks `(‖A^m ξ‖₂/‖A^m 1‖₂)^{1/m} ≥ α^r/√2` at truncation `N` for
/// `m ≤ min(m_max, N − r)`, with `ξ` normalized and the exact truncation
/// factor `κ_m`. Norms are accumulated column by column through the
/// matrix-free apply.
pub fn lower_bound_check(
    xi: &OperatorSum,
    alpha: &Rational,
    m_max: usize,
    level: usize,
    caps: &Caps,
) -> Result<LowerBoundReport> {
    check_alpha(alpha)?;
    caps.check_oracle(level)?;
    let r = xi.level();
    if r > level {
        return Err(Error::InvalidInput(format!(
            "ξ acts on {r} sites but the level is {level}"
        )));
    }
    let xi_norm2 = to_f64(&xi.norm2_sq());
    if xi_norm2 == 0.0 {
        return Err(Error::InvalidInput("ξ is the zero vector".into()));
    }
    let spec = CoefficientSpec::geometric(alpha.clone())?;
    let a = CompiledSum::new(&a_trunc(&spec, level), level)?;
    let x = CompiledSum::new(xi, level)?;
    let dim = 1usize << level;
    let m_top = m_max.min(level - r);
    let basis = |j: usize| {
        let mut e = vec![Complex64::new(0.0, 0.0); dim];
        e[j] = Complex64::new(1.0, 0.0);
        e
    };
    let xi_cols: Vec<Vec<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|j| x.apply_vec(&basis(j)))
        .collect();
    let id_cols: Vec<Vec<Complex64>> = (0..dim).map(basis).collect();
    let num = column_power_norms(&a, &xi_cols, m_top);
    let den = column_power_norms(&a, &id_cols, m_top);

    let squares: Vec<Rational> = (1..=level)
        .map(|n| num_traits::pow(alpha * alpha, n))
        .collect();
    let e_all = elementary_symmetric(&squares, m_top);
    let e_head = elementary_symmetric(&squares[..level - r], m_top);
    let alpha_f = to_f64(alpha);
    let rows: Vec<LowerBoundRow> = (1..=m_top)
        .map(|m| {
            let ratio2 = num[m] / (xi_norm2 * den[m]);
            let root = ratio2.powf(1.0 / (2 * m) as f64);
            let kappa = to_f64(&(&e_head[m] / &e_all[m]));
            let bound = alpha_f.powi(r as i32) * kappa.powf(1.0 / (2 * m) as f64)
                / std::f64::consts::SQRT_2;
            let margin = root - bound;
            LowerBoundRow {
                m,
                root,
                kappa,
                bound,
                margin,
                holds: margin >= -1e-12 * bound,
            }
        })
        .collect();
    let holds = rows.iter().all(|r| r.holds);
    let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    Ok(LowerBoundReport {
        r,
        level,
        rows,
        holds,
        min_margin,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperinvarianceReport {
    pub word: PQWord,
    pub level: usize,
    /// `(n, m)` of the commutant element `S_{n,m}` moving the range.
    pub witness: (usize, usize),
    /// `S p_w − p_w S p_w`, canonical form.
    pub residual: String,
    /// The predicted leading term of the residual.
    pub expected_term: String,
    pub expected_found: bool,
    pub rank_before: usize,
    pub rank_after: usize,
    pub pass: bool,
}

/// For `p_w` with `|w| = L ≥ 1`, shows that `S_{L,L+1}` moves its range:
/// the exact residual and the rank of `range(p_w) ∨ range(S p_w)`.
pub fn hyperinvariance_report(
    w: &PQWord,
    spec: &CoefficientSpec,
    level: usize,
    caps: &Caps,
) -> Result<HyperinvarianceReport> {
    let l = w.len();
    if l == 0 {
        return Err(Error::InvalidInput(
            "the empty word gives the identity, which is trivially hyperinvariant".into(),
        ));
    }
    if l >= level {
        return Err(Error::InvalidInput(format!(
            "word length {l} must be below the level {level}"
        )));
    }
    caps.check_oracle(level)?;
    let p = OperatorSum::word(w.tensor_word());
    let s = s_operator(spec, l, l + 1)?;
    let verdict = check_invariance(&p, &s)?;

    let head = &w.letters[..l - 1];
    let (ratio, tail) = match w.letters[l - 1] {
        Letter::P => (
            spec.coeff(l + 1) / spec.coeff(l),
            [Letter::Vstar, Letter::V],
        ),
        _ => (
            spec.coeff(l) / spec.coeff(l + 1),
            [Letter::V, Letter::Vstar],
        ),
    };
    let expected = TensorWord::new(head.iter().copied().chain(tail).collect());
    let weight: CRational = -ratio;
    let expected_found = verdict.witness_contains(&weight, &expected);

    let pm: Matrix<CRational> = dense(&p, level, caps)?;
    let spm: Matrix<CRational> = dense(&(&s * &p), level, caps)?;
    let before = columns(&pm);
    let rank_before = exact_rank(&before);
    let mut joined = before;
    joined.extend(columns(&spm));
    let rank_after = exact_rank(&joined);

    Ok(HyperinvarianceReport {
        word: w.clone(),
        level,
        witness: (l, l + 1),
        residual: verdict.residual.to_string(),
        expected_term: OperatorSum::term(weight, expected).to_string(),
        expected_found,
        rank_before,
        rank_after,
        pass: !verdict.invariant && expected_found && rank_after > rank_before,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{creal, rat};

    fn geom(p: i64, q: i64) -> CoefficientSpec {
        CoefficientSpec::geometric(rat(p, q)).unwrap()
    }

    fn word(s: &str) -> PQWord {
        PQWord::parse(s).unwrap()
    }

    #[test]
    fn rm_examples() {
        let g = geom(1, 2);
        assert_eq!(rm_trace(&word(""), &g, 1).unwrap(), rat(1, 6));
        assert_eq!(rm_trace(&word("Q"), &g, 1).unwrap(), rat(7, 48));
        assert_eq!(rm_trace(&word(""), &g, 0).unwrap(), rat(1, 1));
        assert_eq!(rm_trace(&word("PQ"), &g, 0).unwrap(), rat(1, 4));
        for m in 0..6 {
            let p = rm_trace(&word("P"), &g, m).unwrap();
            let e = rm_trace(&word(""), &g, m).unwrap();
            assert_eq!(p, rat(1, 2) * num_traits::pow(rat(1, 4), m) * e);
        }
        assert!(matches!(
            rm_trace(&word("P"), &CoefficientSpec::parse("list:1").unwrap(), 1),
            Err(Error::NotGeometric)
        ));
    }

    #[test]
    fn rm_recursion_matches_direct_sum() {
        let alpha = rat(1, 2);
        let g = geom(1, 2);
        for len in 0..=3 {
            for w in PQWord::all(len) {
                for m in 0..=5 {
                    let exact = rm_trace(&w, &g, m).unwrap();
                    let approx = rm_truncated(&w, &alpha, m, 40).unwrap().value;
                    let rel = to_f64(&((&exact - &approx) / &exact)).abs();
                    assert!(approx <= exact && rel < 1e-18, "{w} m={m} rel={rel}");
                    let t = rm_truncated(&w, &alpha, m, 12).unwrap();
                    assert!(
                        t.value <= exact && exact <= &t.value + &t.tail_bound,
                        "{w} m={m}"
                    );
                }
            }
        }
    }

    #[test]
    fn profiles() {
        let a = rat(1, 2);
        let p = ratio_profile(&word("P"), &a, 20).unwrap();
        let r20 = p.row(20).unwrap();
        assert!((r20.root - 0.5 * 2f64.powf(-1.0 / 40.0)).abs() < 1e-12);
        assert!((r20.root - 0.49141).abs() < 1e-5);
        let e = ratio_profile(&word(""), &a, 5).unwrap();
        assert!(e.rows.iter().all(|r| r.ratio.is_one() && r.root == 1.0));
        let q = ratio_profile(&word("Q"), &a, 60).unwrap();
        assert!((q.row(60).unwrap().root - 1.0).abs() <= 0.05);
        assert_eq!(q.row(1).unwrap().ratio, rat(7, 8));
    }

    #[test]
    fn lower_bounds() {
        let caps = Caps::default();
        let a = rat(1, 2);
        let one = lower_bound_check(&OperatorSum::identity(), &a, 6, 6, &caps).unwrap();
        assert!(one.holds && one.rows.iter().all(|r| (r.root - 1.0).abs() < 1e-12));
        let p = OperatorSum::word(TensorWord::parse("P").unwrap());
        let rp = lower_bound_check(&p, &a, 10, 8, &caps).unwrap();
        assert!(rp.holds);
        assert_eq!(rp.rows.len(), 7);
        let xi = &OperatorSum::term(creal(2, 3), TensorWord::parse("QP").unwrap())
            + &OperatorSum::term(creal(-1, 5), TensorWord::parse("V").unwrap());
        let rep = lower_bound_check(&xi, &a, 10, 8, &caps).unwrap();
        assert!(rep.holds && rep.min_margin > 0.0);
        assert!(lower_bound_check(&OperatorSum::zero(), &a, 3, 3, &caps).is_err());
    }

    #[test]
    fn lower_bound_matches_exact_norms() {
        let a = rat(1, 3);
        let spec = geom(1, 3);
        let xi = &OperatorSum::word(TensorWord::parse("QP").unwrap())
            + &OperatorSum::word(TensorWord::parse("R").unwrap());
        let rep = lower_bound_check(&xi, &a, 3, 5, &Caps::default()).unwrap();
        let am = a_trunc(&spec, 5);
        for row in &rep.rows {
            let num = (&am.pow(row.m) * &xi).norm2_sq();
            let den = am.pow(row.m).norm2_sq() * xi.norm2_sq();
            let root = to_f64(&(num / den)).powf(1.0 / (2 * row.m) as f64);
            assert!((root - row.root).abs() < 1e-12, "m={}", row.m);
        }
    }

    #[test]
    fn hyperinvariance() {
        let caps = Caps::default();
        let g = geom(1, 2);
        let rp = hyperinvariance_report(&word("P"), &g, 3, &caps).unwrap();
        assert!(rp.pass && rp.witness == (1, 2));
        assert_eq!(rp.expected_term, "(-1/2)·V*⊗V");
        let rq = hyperinvariance_report(&word("Q"), &g, 3, &caps).unwrap();
        assert!(rq.pass);
        let rpq = hyperinvariance_report(&word("PQ"), &g, 4, &caps).unwrap();
        assert!(rpq.pass && rpq.witness == (2, 3));
        let s34 = s_operator(&g, 3, 4).unwrap();
        assert!(
            check_invariance(&OperatorSum::word(word("PQ").tensor_word()), &s34)
                .unwrap()
                .invariant
        );
        assert!(hyperinvariance_report(&word(""), &g, 3, &caps).is_err());
        assert!(hyperinvariance_report(&word("PQP"), &g, 3, &caps).is_err());
    }
}
