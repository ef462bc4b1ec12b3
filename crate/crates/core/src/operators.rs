//! Named operators at finite truncation and exact checks of their algebraic
//! identities. Every residual is computed symbolically; nothing here uses
//! floating point.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::coeffs::{sigma_full, CoefficientSpec};
use crate::error::{Error, Result};
use crate::scalar::{factorial, fmt_rational, ln_biguint, ln_rational, real, CRational, Rational};
use crate::tensor::norm::{largest_singular_value, MAX_APPLY_LEVEL};
use crate::tensor::{Letter, OperatorMap, OperatorSum, Power, TensorWord};

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    /// `A_N = Σ_{n≤N} c_n V_n`.
    ATrunc { level: usize },
    /// `X_N = Σ_{n≤N} c_n R_n`.
    XTrunc { level: usize },
    /// `Y_N = Σ_{n≤N} c_n T_n`.
    YTrunc { level: usize },
    /// `S_{n,m} = P_n Q_m + Q_n P_m − (c_n/c_m) V_n V*_m − (c_m/c_n) V*_n V_m`.
    S { n: usize, m: usize },
    /// Diagonal projection of a word over `{P, Q}`.
    ProjWord { word: TensorWord },
    /// `W_n = D_{λ_1} ⊗ … ⊗ D_{λ_n}`, `D_λ = P + λQ`, `λ_i = a_i / b_i`.
    WSimilarity { target: CoefficientSpec, n: usize },
    /// `W = Σ_{n≤N} (a_n/b_n) P_n`.
    WCommutator { b: CoefficientSpec, level: usize },
    /// `q_k = Σ_{n≤N} c_n^k Q_n`.
    QPower { k: usize, level: usize },
    /// `p_k = Σ_{n≤N} c_n^k P_n`.
    PPower { k: usize, level: usize },
}

#[derive(Debug, Clone)]
pub struct NamedOperator {
    pub kind: OperatorKind,
    pub spec: CoefficientSpec,
    pub realization: OperatorSum,
}

impl NamedOperator {
    pub fn build(kind: OperatorKind, spec: &CoefficientSpec) -> Result<Self> {
        let realization = match &kind {
            OperatorKind::ATrunc { level } => site_sum(spec, *level, Letter::V, 1),
            OperatorKind::XTrunc { level } => site_sum(spec, *level, Letter::R, 1),
            OperatorKind::YTrunc { level } => site_sum(spec, *level, Letter::T, 1),
            OperatorKind::S { n, m } => s_operator(spec, *n, *m)?,
            OperatorKind::ProjWord { word } => proj_word(word)?,
            OperatorKind::WSimilarity { target, n } => w_similarity(spec, target, *n)?.0,
            OperatorKind::WCommutator { b, level } => w_commutator(spec, b, *level)?,
            OperatorKind::QPower { k, level } => site_sum(spec, *level, Letter::Q, *k),
            OperatorKind::PPower { k, level } => site_sum(spec, *level, Letter::P, *k),
        };
        Ok(NamedOperator {
            kind,
            spec: spec.clone(),
            realization,
        })
    }

    pub fn label(&self) -> String {
        match &self.kind {
            OperatorKind::ATrunc { level } => format!("A_{level}"),
            OperatorKind::XTrunc { level } => format!("X_{level}"),
            OperatorKind::YTrunc { level } => format!("Y_{level}"),
            OperatorKind::S { n, m } => format!("S({n},{m})"),
            OperatorKind::ProjWord { word } => format!("p[{word}]"),
            OperatorKind::WSimilarity { n, .. } => format!("W_{n}"),
            OperatorKind::WCommutator { level, .. } => format!("W[{level}]"),
            OperatorKind::QPower { k, level } => format!("q_{k}[{level}]"),
            OperatorKind::PPower { k, level } => format!("p_{k}[{level}]"),
        }
    }
}

impl fmt::Display for NamedOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.label(), self.realization)
    }
}

/// `Σ_{n≤N} c_n^k · letter_n`.
pub fn site_sum(spec: &CoefficientSpec, level: usize, letter: Letter, k: usize) -> OperatorSum {
    let mut out = OperatorSum::zero();
    for n in 1..=level {
        let c = num_traits::pow(spec.coeff(n), k);
        out.add_term(c, TensorWord::at(n, letter));
    }
    out
}

pub fn a_trunc(spec: &CoefficientSpec, level: usize) -> OperatorSum {
    site_sum(spec, level, Letter::V, 1)
}

pub fn x_trunc(spec: &CoefficientSpec, level: usize) -> OperatorSum {
    site_sum(spec, level, Letter::R, 1)
}

pub fn y_trunc(spec: &CoefficientSpec, level: usize) -> OperatorSum {
    site_sum(spec, level, Letter::T, 1)
}

fn nonzero_coeff(spec: &CoefficientSpec, n: usize) -> Result<CRational> {
    let c = spec.coeff(n);
    if c.is_zero() {
        return Err(Error::ZeroCoefficient { index: n });
    }
    Ok(c)
}

/// The four-term commutant element `S_{n,m}`, `n < m`.
pub fn s_operator(spec: &CoefficientSpec, n: usize, m: usize) -> Result<OperatorSum> {
    if n == 0 || n >= m {
        return Err(Error::InvalidInput(format!(
            "S(n,m) needs 1 ≤ n < m, got ({n},{m})"
        )));
    }
    let cn = nonzero_coeff(spec, n)?;
    let cm = nonzero_coeff(spec, m)?;
    let pair = |a: Letter, b: Letter| TensorWord::placed(&[(n, a), (m, b)]);
    let mut s = OperatorSum::zero();
    s.add_term(CRational::one(), pair(Letter::P, Letter::Q));
    s.add_term(CRational::one(), pair(Letter::Q, Letter::P));
    s.add_term(-(&cn / &cm), pair(Letter::V, Letter::Vstar));
    s.add_term(-(&cm / &cn), pair(Letter::Vstar, Letter::V));
    Ok(s)
}

/// Projection of a word over `{P, Q}` (identities allowed as padding).
pub fn proj_word(word: &TensorWord) -> Result<OperatorSum> {
    if let Some(l) = word
        .letters()
        .iter()
        .find(|l| !matches!(l, Letter::P | Letter::Q | Letter::I))
    {
        return Err(Error::NotProjection(format!("word {word} contains {l}")));
    }
    Ok(OperatorSum::word(word.clone()))
}

/// `v = Σ_{n<m≤N} c_n c_m (V_n V*_m + V*_n V_m)` for real coefficients.
pub fn v_cross(spec: &CoefficientSpec, level: usize) -> Result<OperatorSum> {
    let mut out = OperatorSum::zero();
    for n in 1..=level {
        for m in n + 1..=level {
            let w = real(spec.real_coeff(n)? * spec.real_coeff(m)?);
            out.add_term(
                w.clone(),
                TensorWord::placed(&[(n, Letter::V), (m, Letter::Vstar)]),
            );
            out.add_term(w, TensorWord::placed(&[(n, Letter::Vstar), (m, Letter::V)]));
        }
    }
    Ok(out)
}

/// `(W_n, W_n^{-1})` with `λ_i = a_i / b_i`.
pub fn w_similarity(
    a: &CoefficientSpec,
    b: &CoefficientSpec,
    n: usize,
) -> Result<(OperatorSum, OperatorSum)> {
    let mut w = OperatorSum::identity();
    let mut winv = OperatorSum::identity();
    for i in 1..=n {
        let ai = nonzero_coeff(a, i)?;
        let bi = nonzero_coeff(b, i)?;
        let lambda = &ai / &bi;
        let d = |l: CRational| {
            let mut s = OperatorSum::site(CRational::one(), i, Letter::P);
            s.add_term(l, TensorWord::at(i, Letter::Q));
            s
        };
        w = &w * &d(lambda.clone());
        winv = &winv * &d(CRational::one() / lambda);
    }
    Ok((w, winv))
}

/// `W = Σ_{n≤N} (a_n/b_n) P_n`.
pub fn w_commutator(a: &CoefficientSpec, b: &CoefficientSpec, level: usize) -> Result<OperatorSum> {
    let mut w = OperatorSum::zero();
    for n in 1..=level {
        let bn = nonzero_coeff(b, n)?;
        w.add_term(a.coeff(n) / bn, TensorWord::at(n, Letter::P));
    }
    Ok(w)
}

/// Outcome of one exact identity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    /// The identity in mathematical notation.
    pub statement: String,
    pub level: usize,
    /// `τ(r* r)` of the residual `r`, exact, printed as `p/q`.
    pub residual: String,
    pub pass: bool,
    /// Residual operator when the check fails.
    pub witness: Option<String>,
}

impl CheckReport {
    /// Compares `lhs` and `rhs` as operators.
    pub fn identity(
        name: impl Into<String>,
        statement: impl Into<String>,
        level: usize,
        lhs: &OperatorSum,
        rhs: &OperatorSum,
    ) -> Self {
        let r = lhs - rhs;
        Self::vanishing(name, statement, level, &r)
    }

    /// Checks that `r` is the zero operator.
    pub fn vanishing(
        name: impl Into<String>,
        statement: impl Into<String>,
        level: usize,
        r: &OperatorSum,
    ) -> Self {
        let canon = r.canonical();
        let pass = canon.is_empty();
        let residual = if pass { Rational::zero() } else { r.norm2_sq() };
        CheckReport {
            name: name.into(),
            statement: statement.into(),
            level,
            residual: fmt_rational(&residual),
            pass,
            witness: (!pass).then(|| canon.to_string()),
        }
    }
}

/// `τ((xy − yx)* (xy − yx))`, exact; zero iff the operators commute.
pub fn check_commutes(x: &NamedOperator, y: &NamedOperator) -> CheckReport {
    let c = x.realization.commutator(&y.realization);
    let level = x.realization.level().max(y.realization.level());
    CheckReport::vanishing(
        format!("[{}, {}] = 0", x.label(), y.label()),
        "xy - yx = 0",
        level,
        &c,
    )
}

/// `A_N^{N+1} = 0` and `A_N^N = N! c_1⋯c_N V^{⊗N}`.
pub fn check_nilpotency(spec: &CoefficientSpec, level: usize) -> Result<Vec<CheckReport>> {
    if level == 0 {
        return Err(Error::InvalidInput("level must be at least 1".into()));
    }
    let a = a_trunc(spec, level);
    let top = a.pow(level);
    let prod = (1..=level).fold(CRational::one(), |acc, n| acc * spec.coeff(n));
    let fact = real(Rational::from_integer(
        crate::scalar::factorial(level as u64).into(),
    ));
    let expect = OperatorSum::term(fact * prod, TensorWord::repeat(Letter::V, level));
    Ok(vec![
        CheckReport::vanishing(
            format!("A_{level}^{} = 0", level + 1),
            "A_N^(N+1) = 0",
            level,
            &(&top * &a),
        ),
        CheckReport::identity(
            format!("A_{level}^{level} = {level}!·c_1⋯c_{level}·V^⊗{level}"),
            "A_N^N = N! c_1...c_N V⊗...⊗V",
            level,
            &top,
            &expect,
        ),
    ])
}

/// `A*A = q_2 + v`, `AA* = p_2 + v`, `p_2 + q_2 = Σ c_n²` and
/// `A q_2 − q_2 A = Σ c_n³ V_n`, all at level `N`. Needs real coefficients.
pub fn check_generation_identities(
    spec: &CoefficientSpec,
    level: usize,
) -> Result<Vec<CheckReport>> {
    if !spec.is_real() {
        return Err(Error::NotReal);
    }
    if level < 2 {
        return Err(Error::InvalidInput(
            "generation identities need N ≥ 2".into(),
        ));
    }
    let a = a_trunc(spec, level);
    let ad = a.adjoint();
    let q2 = site_sum(spec, level, Letter::Q, 2);
    let p2 = site_sum(spec, level, Letter::P, 2);
    let v = v_cross(spec, level)?;
    let sum_sq = (1..=level).fold(CRational::zero(), |acc, n| {
        acc + num_traits::pow(spec.coeff(n), 2)
    });
    let cubes = site_sum(spec, level, Letter::V, 3);
    Ok(vec![
        CheckReport::identity(
            format!("A_{level}*A_{level} = q_2 + v"),
            "A*A = q_2 + v",
            level,
            &(&ad * &a),
            &(&q2 + &v),
        ),
        CheckReport::identity(
            format!("A_{level}A_{level}* = p_2 + v"),
            "AA* = p_2 + v",
            level,
            &(&a * &ad),
            &(&p2 + &v),
        ),
        CheckReport::identity(
            format!("p_2 + q_2 = Σc_n² (N={level})"),
            "p_2 + q_2 = (Σ c_n^2)·1",
            level,
            &(&p2 + &q2),
            &OperatorSum::scalar(sum_sq),
        ),
        CheckReport::identity(
            format!("A_{level}q_2 - q_2A_{level} = Σc_n³V_n"),
            "A q_2 - q_2 A = Σ c_n^3 V_n",
            level,
            &a.commutator(&q2),
            &cubes,
        ),
    ])
}

/// `W_n A_N W_n^{-1} = B_n + A_N − A_n` with `A` from `a` and `B` from `b`.
pub fn check_similarity(
    a: &CoefficientSpec,
    b: &CoefficientSpec,
    n: usize,
    level: usize,
) -> Result<CheckReport> {
    if n > level {
        return Err(Error::InvalidInput(format!(
            "similarity needs n ≤ N, got n={n}, N={level}"
        )));
    }
    let (w, winv) = w_similarity(a, b, n)?;
    let an = a_trunc(a, level);
    let lhs = &(&w * &an) * &winv;
    let rhs = &(&a_trunc(b, n) + &an) - &a_trunc(a, n);
    Ok(CheckReport::identity(
        format!("W_{n}A_{level}W_{n}⁻¹ = B_{n}+A_{level}-A_{n}"),
        "W_n A W_n^-1 = B_n + A - A_n",
        level,
        &lhs,
        &rhs,
    ))
}

/// `[W, B_N] = A_N` with `W = Σ (a_n/b_n) P_n` and `B_N = Σ b_n V_n`.
pub fn check_commutator_realization(
    a: &CoefficientSpec,
    b: &CoefficientSpec,
    level: usize,
) -> Result<CheckReport> {
    let w = w_commutator(a, b, level)?;
    let bn = a_trunc(b, level);
    Ok(CheckReport::identity(
        format!("[W, B_{level}] = A_{level}"),
        "WB - BW = A",
        level,
        &w.commutator(&bn),
        &a_trunc(a, level),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceVerdict {
    pub invariant: bool,
    /// `t p − p t p`; empty when invariant.
    pub residual: OperatorSum,
}

impl InvarianceVerdict {
    pub fn witness_contains(&self, weight: &CRational, word: &TensorWord) -> bool {
        let canon = self.residual.canonical();
        let target = OperatorSum::term(weight.clone(), word.clone()).canonical();
        let hit = target.terms().all(|(w, c)| canon.weight(w) == *c);
        hit
    }
}

/// Range of `p` is invariant under `t` iff `t p = p t p`.
pub fn check_invariance(p: &OperatorSum, t: &OperatorSum) -> Result<InvarianceVerdict> {
    if !p.is_projection() {
        return Err(Error::NotProjection(p.to_string()));
    }
    let tp = t * p;
    let ptp = p * &tp;
    let r = &tp - &ptp;
    let invariant = r.is_zero();
    Ok(InvarianceVerdict {
        invariant,
        residual: if invariant {
            OperatorSum::zero()
        } else {
            r.canonical()
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub k: usize,
    /// `‖A_N^k‖` by power iteration.
    pub norm: f64,
    /// `‖A_N^k‖^{1/k}`.
    pub root: f64,
    /// `k! σ_k` of the whole sequence.
    pub bound: f64,
    /// `(k! σ_k)^{1/k}`.
    pub bound_root: f64,
    pub converged: bool,
}

impl NormRow {
    pub fn within(&self, tol: f64) -> bool {
        self.norm <= self.bound + tol
    }
}

/// `‖A_N^k‖` for `k = 1..=kmax` with the bound `k! σ_k` alongside; since
/// `σ_k` only grows with `N`, the full-sequence value bounds every truncation.
pub fn power_norms(
    spec: &CoefficientSpec,
    level: usize,
    kmax: usize,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<NormRow>> {
    let a = a_trunc(spec, level);
    if level > MAX_APPLY_LEVEL {
        return Err(Error::InvalidInput(format!(
            "level {level} exceeds the matrix-free limit {MAX_APPLY_LEVEL}"
        )));
    }
    let map = OperatorMap::new(&a, level)?;
    (1..=kmax)
        .map(|k| {
            let est = largest_singular_value(&Power { base: &map, k }, tol, max_iter);
            let s = sigma_full(spec, k)?;
            let ln = ln_biguint(&factorial(k as u64)) + ln_rational(&s);
            Ok(NormRow {
                k,
                norm: est.value,
                root: est.value.powf(1.0 / k as f64),
                bound: ln.exp(),
                bound_root: (ln / k as f64).exp(),
                converged: est.converged,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{creal, rat};

    fn geom(p: i64, q: i64) -> CoefficientSpec {
        CoefficientSpec::geometric(rat(p, q)).unwrap()
    }

    fn list(s: &str) -> CoefficientSpec {
        CoefficientSpec::parse(&format!("list:{s}")).unwrap()
    }

    fn word(s: &str) -> TensorWord {
        TensorWord::parse(s).unwrap()
    }

    #[test]
    fn a_two_terms() {
        let a = a_trunc(&list("1/2,1/4"), 2);
        assert_eq!(a.len(), 2);
        assert_eq!(a.weight(&word("V")), creal(1, 2));
        assert_eq!(a.weight(&word("IV")), creal(1, 4));
    }

    #[test]
    fn s_one_two_geometric_half() {
        let s = s_operator(&geom(1, 2), 1, 2).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.weight(&word("PQ")), creal(1, 1));
        assert_eq!(s.weight(&word("QP")), creal(1, 1));
        assert_eq!(s.weight(&word("VV*")), creal(-2, 1));
        assert_eq!(s.weight(&word("V*V")), creal(-1, 2));
        assert!(s_operator(&list("1,0"), 1, 2).is_err());
        assert!(s_operator(&geom(1, 2), 2, 2).is_err());
    }

    #[test]
    fn s_commutes_with_a() {
        for spec in [geom(1, 2), list("1/2,1/2,1/3,1/5")] {
            let s = NamedOperator::build(OperatorKind::S { n: 1, m: 2 }, &spec).unwrap();
            let a = NamedOperator::build(OperatorKind::ATrunc { level: 4 }, &spec).unwrap();
            assert!(check_commutes(&s, &a).pass);
        }
        let s = s_operator(&list("1/2,1/2"), 1, 2).unwrap();
        assert!(s.is_selfadjoint());
        assert!(!s_operator(&geom(1, 2), 1, 2).unwrap().is_selfadjoint());
    }

    #[test]
    fn v_and_q_do_not_commute() {
        let spec = list("1");
        let v = NamedOperator::build(OperatorKind::ATrunc { level: 1 }, &spec).unwrap();
        let q = NamedOperator::build(OperatorKind::QPower { k: 1, level: 1 }, &spec).unwrap();
        let r = check_commutes(&v, &q);
        assert!(!r.pass);
        assert_ne!(r.residual, "0");
    }

    #[test]
    fn nilpotency() {
        let spec = list("1/2,1/4");
        let a2 = a_trunc(&spec, 2).pow(2);
        assert!(a2.same_operator(&OperatorSum::term(creal(1, 4), word("VV"))));
        assert!(check_nilpotency(&spec, 2).unwrap().iter().all(|r| r.pass));
        assert!(check_nilpotency(&list("7/3"), 1)
            .unwrap()
            .iter()
            .all(|r| r.pass));
        let a3 = a_trunc(&geom(1, 2), 3).pow(3);
        assert!(a3.same_operator(&OperatorSum::term(creal(6, 64), word("VVV"))));
    }

    #[test]
    fn generation_identities() {
        let spec = list("1/2,1/4");
        let a = a_trunc(&spec, 2);
        let q2 = site_sum(&spec, 2, Letter::Q, 2);
        let expect = &OperatorSum::term(creal(1, 8), word("V"))
            + &OperatorSum::term(creal(1, 64), word("IV"));
        assert!(a.commutator(&q2).same_operator(&expect));
        assert!(q2.commutator(&a).same_operator(&-&expect));
        let p2 = site_sum(&spec, 2, Letter::P, 2);
        assert!((&p2 + &q2).same_operator(&OperatorSum::scalar(creal(5, 16))));
        assert!(check_generation_identities(&geom(1, 2), 3)
            .unwrap()
            .iter()
            .all(|r| r.pass));
        assert!(matches!(
            check_generation_identities(&list("i,1"), 2),
            Err(Error::NotReal)
        ));
    }

    #[test]
    fn similarity() {
        let a = list("1/2,1/4");
        assert!(check_similarity(&a, &a, 2, 2).unwrap().pass);
        assert!(check_similarity(&a, &list("1/3,1/9"), 2, 3).unwrap().pass);
        assert!(check_similarity(&a, &list("1/3"), 1, 1).unwrap().pass);
        assert!(check_similarity(&a, &list("0,1"), 1, 1).is_err());
    }

    #[test]
    fn commutator_realization() {
        let a = list("3/7");
        let b = list("2/5");
        let w = w_commutator(&a, &b, 1).unwrap();
        assert!(w.commutator(&a_trunc(&b, 1)).same_operator(&a_trunc(&a, 1)));
        assert!(
            check_commutator_realization(&geom(1, 4), &geom(1, 2), 3)
                .unwrap()
                .pass
        );
        assert!(check_commutator_realization(&a, &a, 1).unwrap().pass);
        assert!(check_commutator_realization(&a, &list("0"), 1).is_err());
    }

    #[test]
    fn invariance() {
        let spec = geom(1, 2);
        let pp = proj_word(&word("PP")).unwrap();
        assert!(check_invariance(&pp, &a_trunc(&spec, 4)).unwrap().invariant);
        let p = proj_word(&word("P")).unwrap();
        let v = check_invariance(&p, &s_operator(&spec, 1, 2).unwrap()).unwrap();
        assert!(!v.invariant);
        assert!(v.witness_contains(&creal(-1, 2), &word("V*V")));
        assert!(
            check_invariance(&OperatorSum::identity(), &spec_t())
                .unwrap()
                .invariant
        );
        assert!(check_invariance(&OperatorSum::word(word("V")), &p).is_err());
    }

    #[test]
    fn norms() {
        let g = geom(1, 2);
        let one = power_norms(&g, 1, 2, 1e-12, 1000).unwrap();
        assert!((one[0].norm - 0.5).abs() < 1e-9);
        assert!((one[0].bound - 1.0).abs() < 1e-12);
        assert_eq!(one[1].norm, 0.0);
        let ten = power_norms(&g, 10, 10, 1e-12, 5000).unwrap();
        assert!(ten[9].root < ten[0].root);
        assert!(ten.iter().all(|r| r.within(1e-8)));
    }

    fn spec_t() -> OperatorSum {
        OperatorSum::word(word("TRV*"))
    }
}
