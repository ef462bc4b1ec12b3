//! Moments of `X = Σ c_n R_n`, `Y = Σ c_n T_n`, `Re A`, `Im A` and `A*A`,
//! each computable along several independent routes.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::caps::Caps;
use crate::coeffs::CoefficientSpec;
use crate::combinatorics::{alpha, gamma, shapes, PartitionShape};
use crate::error::{Error, Result};
use crate::operators::{a_trunc, x_trunc, y_trunc};
use crate::sampler::dyadic_sign;
use crate::scalar::{
    factorial, fmt_rational, imag_unit, opt_rational_string, real, to_f64, CRational, Rational,
};
use crate::tensor::{dense, Matrix, OperatorSum};

/// Deepest dyadic partition summed exactly by [`rademacher_moment`].
pub const MAX_DYADIC_LEVEL: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum MomentTarget {
    /// `τ(X^order)`.
    XPower { order: usize },
    /// `τ(Y^order)`.
    YPower { order: usize },
    /// `τ(a^order)`, `a = (A + A*)/2`.
    RePower { order: usize },
    /// `τ(b^order)`, `b = (A − A*)/2i`.
    ImPower { order: usize },
    /// `τ((A*A)^p)`.
    AstarAPower { p: usize },
    /// `τ(a^n b^m)`.
    Mixed { n: usize, m: usize },
}

impl MomentTarget {
    /// Total degree in `A` and `A*`.
    pub fn degree(&self) -> usize {
        match *self {
            MomentTarget::XPower { order }
            | MomentTarget::YPower { order }
            | MomentTarget::RePower { order }
            | MomentTarget::ImPower { order } => order,
            MomentTarget::AstarAPower { p } => 2 * p,
            MomentTarget::Mixed { n, m } => n + m,
        }
    }

    /// For the four single-variable targets, the factor `s` with
    /// `τ(target) = s · τ(X^order)`.
    fn scale_from_x(&self) -> Option<Rational> {
        let pow2 = |e: usize| Rational::from_integer(BigInt::one() << e);
        match *self {
            MomentTarget::XPower { .. } => Some(Rational::one()),
            MomentTarget::YPower { order } => Some(if order % 4 == 2 {
                -Rational::one()
            } else {
                Rational::one()
            }),
            MomentTarget::RePower { order } | MomentTarget::ImPower { order } => {
                Some(Rational::one() / pow2(order))
            }
            _ => None,
        }
    }

    fn x_order(&self) -> Option<usize> {
        match *self {
            MomentTarget::XPower { order }
            | MomentTarget::YPower { order }
            | MomentTarget::RePower { order }
            | MomentTarget::ImPower { order } => Some(order),
            _ => None,
        }
    }
}

impl fmt::Display for MomentTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MomentTarget::XPower { order } => write!(f, "X^{order}"),
            MomentTarget::YPower { order } => write!(f, "Y^{order}"),
            MomentTarget::RePower { order } => write!(f, "re^{order}"),
            MomentTarget::ImPower { order } => write!(f, "im^{order}"),
            MomentTarget::AstarAPower { p } => write!(f, "(A*A)^{p}"),
            MomentTarget::Mixed { n, m } => write!(f, "re^{n}·im^{m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Combinatorial,
    DenseOracle,
    Charfn,
    RademacherExact,
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Route::Combinatorial => "combinatorial",
            Route::DenseOracle => "dense_oracle",
            Route::Charfn => "charfn",
            Route::RademacherExact => "rademacher_exact",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub target: MomentTarget,
    pub route: Route,
    /// Exact value of the route's finite model, when it has one.
    #[serde(with = "opt_rational_string")]
    pub exact: Option<Rational>,
    pub value: f64,
    /// Bound on the route's own error relative to its finite model.
    pub error_bound: f64,
    /// Bound on the distance from the finite model to the full sequence.
    pub tail_bound: f64,
    /// Truncation level; `None` means the whole sequence.
    pub level: Option<usize>,
}

impl MomentReport {
    fn exact(
        target: MomentTarget,
        route: Route,
        v: Rational,
        tail_bound: f64,
        level: Option<usize>,
    ) -> Self {
        MomentReport {
            target,
            route,
            value: to_f64(&v),
            exact: Some(v),
            error_bound: 0.0,
            tail_bound,
            level,
        }
    }

    /// Total uncertainty about the untruncated moment.
    pub fn total_bound(&self) -> f64 {
        self.error_bound + self.tail_bound
    }

    pub fn exact_string(&self) -> Option<String> {
        self.exact.as_ref().map(fmt_rational)
    }
}

/// `Σ_{n≤N} x_n^m` with `x_n = |c_n|²`; `level = None` sums the whole
/// sequence (closed form for geometric specs).
pub fn power_sum(spec: &CoefficientSpec, m: usize, level: Option<usize>) -> Rational {
    match (spec, level) {
        (CoefficientSpec::Geometric { ratio }, _) => {
            let q = num_traits::pow(ratio.clone(), 2 * m);
            let full = &q / (Rational::one() - &q);
            match level {
                None => full,
                Some(n) => full * (Rational::one() - num_traits::pow(q, n)),
            }
        }
        (CoefficientSpec::Explicit { values }, _) => {
            let n = level.map_or(values.len(), |n| n.min(values.len()));
            (1..=n).fold(Rational::zero(), |acc, i| {
                acc + num_traits::pow(spec.abs2_coeff(i), m)
            })
        }
    }
}

/// Monomial sum over distinct indices with cached power sums.
struct DistinctSums<'a> {
    spec: &'a CoefficientSpec,
    level: Option<usize>,
    powers: HashMap<usize, Rational>,
    memo: HashMap<Vec<usize>, Rational>,
}

impl<'a> DistinctSums<'a> {
    fn new(spec: &'a CoefficientSpec, level: Option<usize>) -> Self {
        DistinctSums {
            spec,
            level,
            powers: HashMap::new(),
            memo: HashMap::new(),
        }
    }

    fn power(&mut self, m: usize) -> Rational {
        let (spec, level) = (self.spec, self.level);
        self.powers
            .entry(m)
            .or_insert_with(|| power_sum(spec, m, level))
            .clone()
    }

    /// `D(e_1..e_k) = Σ_{i_1..i_k distinct} ∏ x_{i_j}^{e_j}`, by the merge
    /// recursion `D(e_1, rest) = P_{e_1} D(rest) − Σ_j D(rest with e_j + e_1)`.
    fn get(&mut self, exps: &[usize]) -> Rational {
        let mut key = exps.to_vec();
        key.sort_unstable_by(|a, b| b.cmp(a));
        if key.is_empty() {
            return Rational::one();
        }
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let (e1, rest) = (key[0], key[1..].to_vec());
        let mut v = self.power(e1) * self.get(&rest);
        for j in 0..rest.len() {
            let mut merged = rest.clone();
            merged[j] += e1;
            v -= self.get(&merged);
        }
        self.memo.insert(key, v.clone());
        v
    }
}

/// Exact distinct-index monomial sum for `shape` with weights `|c_n|²`, and
/// its distance to the untruncated value.
#[derive(Debug, Clone, PartialEq)]
pub struct DistinctSum {
    pub value: Rational,
    pub tail: Rational,
}

pub fn distinct_monomial_sum(
    shape: &PartitionShape,
    spec: &CoefficientSpec,
    level: Option<usize>,
) -> DistinctSum {
    let value = DistinctSums::new(spec, level).get(shape.parts());
    let tail = match level {
        None => Rational::zero(),
        Some(_) => (DistinctSums::new(spec, None).get(shape.parts()) - &value).abs(),
    };
    DistinctSum { value, tail }
}

fn x_even_moment(spec: &CoefficientSpec, p: usize, level: Option<usize>) -> Rational {
    let mut sums = DistinctSums::new(spec, level);
    shapes(p).iter().fold(Rational::zero(), |acc, s| {
        acc + Rational::from_integer(BigInt::from(gamma(s))) * sums.get(s.parts())
    })
}

fn astara_moment(
    spec: &CoefficientSpec,
    p: usize,
    level: Option<usize>,
    caps: &Caps,
) -> Result<Rational> {
    let mut sums = DistinctSums::new(spec, level);
    let mut acc = Rational::zero();
    for s in shapes(p) {
        let w = Rational::new(BigInt::from(alpha(&s, caps)?), BigInt::one() << s.k());
        acc += w * sums.get(s.parts());
    }
    Ok(acc)
}

fn combinatorial_value(
    spec: &CoefficientSpec,
    target: MomentTarget,
    level: Option<usize>,
    caps: &Caps,
) -> Result<Rational> {
    if let MomentTarget::AstarAPower { p } = target {
        return astara_moment(spec, p, level, caps);
    }
    let (Some(order), Some(scale)) = (target.x_order(), target.scale_from_x()) else {
        return Err(Error::InvalidInput(format!(
            "no combinatorial formula for {target}; use the mixed-moment check"
        )));
    };
    if !spec.is_real() {
        return Err(Error::NotReal);
    }
    if order % 2 == 1 {
        return Ok(Rational::zero());
    }
    Ok(scale * x_even_moment(spec, order / 2, level))
}

/// Moment by the partition formulas (`γ` for `X`, `Y`, `Re A`, `Im A`; `α`
/// for `A*A`); exact at the given truncation with the exact tail deficit.
pub fn moment_combinatorial(
    spec: &CoefficientSpec,
    target: MomentTarget,
    level: Option<usize>,
    caps: &Caps,
) -> Result<MomentReport> {
    let v = combinatorial_value(spec, target, level, caps)?;
    let tail = match level {
        None => Rational::zero(),
        Some(_) => (combinatorial_value(spec, target, None, caps)? - &v).abs(),
    };
    Ok(MomentReport::exact(
        target,
        Route::Combinatorial,
        v,
        to_f64(&tail),
        level,
    ))
}

pub fn moment_x(
    spec: &CoefficientSpec,
    order: usize,
    level: Option<usize>,
) -> Result<MomentReport> {
    moment_combinatorial(
        spec,
        MomentTarget::XPower { order },
        level,
        &Caps::default(),
    )
}

pub fn moment_y(
    spec: &CoefficientSpec,
    order: usize,
    level: Option<usize>,
) -> Result<MomentReport> {
    moment_combinatorial(
        spec,
        MomentTarget::YPower { order },
        level,
        &Caps::default(),
    )
}

/// `τ(a^n)` (or `τ(b^n)` with `imaginary`), `a = Re A`, `b = Im A`.
pub fn moment_reim(
    spec: &CoefficientSpec,
    n: usize,
    imaginary: bool,
    level: Option<usize>,
) -> Result<MomentReport> {
    let target = if imaginary {
        MomentTarget::ImPower { order: n }
    } else {
        MomentTarget::RePower { order: n }
    };
    moment_combinatorial(spec, target, level, &Caps::default())
}

pub fn moment_astara(
    spec: &CoefficientSpec,
    p: usize,
    level: Option<usize>,
    caps: &Caps,
) -> Result<MomentReport> {
    moment_combinatorial(spec, MomentTarget::AstarAPower { p }, level, caps)
}

/// A priori bound on `|τ(target) − τ(target at level N)|`.
///
/// For the single-variable targets the truncated and tail parts act on
/// disjoint sites, so the difference expands into products of traces; for
/// the others a Lipschitz bound in the operator norm is used.
pub fn truncation_bound(spec: &CoefficientSpec, target: MomentTarget, level: usize) -> f64 {
    let t1 = to_f64(&spec.tail_l1(level));
    if t1 == 0.0 {
        return 0.0;
    }
    let head = to_f64(&(&spec.tail_l1(0) - &spec.tail_l1(level)));
    let t2 = to_f64(&(power_sum(spec, 1, None) - power_sum(spec, 1, Some(level))));
    let n = target.degree();
    let scale = match target.scale_from_x() {
        Some(s) => to_f64(&s.abs()),
        None => {
            let l = head + t1;
            return n as f64
                * l.powi(n as i32 - 1)
                * t1
                * if matches!(target, MomentTarget::Mixed { .. }) {
                    0.5f64.powi(n as i32)
                } else {
                    1.0
                };
        }
    };
    let mut acc = 0.0;
    let mut binom = 1.0;
    for j in 1..=n {
        binom = binom * (n + 1 - j) as f64 / j as f64;
        if j % 2 == 0 {
            acc += binom * head.powi((n - j) as i32) * t1.powi(j as i32 - 2) * t2;
        }
    }
    scale * acc
}

fn operator_of(
    spec: &CoefficientSpec,
    target: MomentTarget,
    level: usize,
) -> Result<(OperatorSum, usize)> {
    let a = a_trunc(spec, level);
    let re = || (&a + &a.adjoint()).scale(&real(Rational::new(1.into(), 2.into())));
    let im =
        || (&a - &a.adjoint()).scale(&(-imag_unit() * real(Rational::new(1.into(), 2.into()))));
    Ok(match target {
        MomentTarget::XPower { order } => (x_trunc(spec, level), order),
        MomentTarget::YPower { order } => (y_trunc(spec, level), order),
        MomentTarget::RePower { order } => (re(), order),
        MomentTarget::ImPower { order } => (im(), order),
        MomentTarget::AstarAPower { p } => (&a.adjoint() * &a, p),
        MomentTarget::Mixed { n, .. } => (re(), n),
    })
}

fn dense_trace<T: crate::tensor::dense::Entry>(
    spec: &CoefficientSpec,
    target: MomentTarget,
    level: usize,
    caps: &Caps,
) -> Result<T> {
    let (x, k) = operator_of(spec, target, level)?;
    let mx: Matrix<T> = dense(&x, level, caps)?;
    if let MomentTarget::Mixed { m, .. } = target {
        let (y, _) = operator_of(spec, MomentTarget::ImPower { order: m }, level)?;
        let my: Matrix<T> = dense(&y, level, caps)?;
        return Ok(mx.pow(k).trace_of_product(&my.pow(m)));
    }
    Ok(mx.trace_pow(k))
}

/// `2^{−N} tr(M^k)` of the literal matrix of the target at level `N`, in
/// exact arithmetic or in double precision.
pub fn moment_dense_oracle(
    spec: &CoefficientSpec,
    target: MomentTarget,
    level: usize,
    exact: bool,
    caps: &Caps,
) -> Result<MomentReport> {
    caps.check_oracle(level)?;
    let tail = truncation_bound(spec, target, level);
    let dim = (1u64 << level) as f64;
    if exact {
        let tr: CRational = dense_trace(spec, target, level, caps)?;
        let v = tr.re / Rational::from_integer(BigInt::one() << level);
        return Ok(MomentReport::exact(
            target,
            Route::DenseOracle,
            v,
            tail,
            Some(level),
        ));
    }
    let tr: Complex64 = dense_trace(spec, target, level, caps)?;
    let value = tr.re / dim;
    let l = to_f64(&spec.tail_l1(0)).max(1.0);
    let error_bound = 1e-13 * l.powi(target.degree() as i32) * (target.degree() as f64 + 1.0);
    Ok(MomentReport {
        target,
        route: Route::DenseOracle,
        exact: None,
        value,
        error_bound,
        tail_bound: tail,
        level: Some(level),
    })
}

/// Moments `E[X^k]`, `k = 0..=max_order`, of the truncated product
/// `∏_{n≤terms} cos(α^n t)` with a certified bound on the distance to the
/// full product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharfnMoments {
    #[serde(with = "crate::scalar::rational_string")]
    pub alpha: Rational,
    pub terms: usize,
    #[serde(serialize_with = "ser_rationals")]
    #[serde(skip_deserializing)]
    pub moments: Vec<Rational>,
    pub bounds: Vec<f64>,
}

fn ser_rationals<S: serde::Serializer>(
    v: &[Rational],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(fmt_rational))
}

/// Bound on `|E[X^d] − E[X_N^d]|` when `s = Σ_{n>N} α^{2n}` and
/// `big = Σ_n α^{2n}`: cosine coefficients are dominated by those of
/// `exp(x t²/2)`. The factor `1 + 1e-9` covers rounding in evaluating it.
fn charfn_bound(d: usize, big: f64, s: f64) -> f64 {
    if d % 2 == 1 || d == 0 {
        return 0.0;
    }
    let j = d / 2;
    let mut diff = 0.0;
    let mut binom = 1.0;
    for i in 1..=j {
        binom = binom * (j + 1 - i) as f64 / i as f64;
        diff += binom * big.powi((j - i) as i32) * s.powi(i as i32);
    }
    let mut v = diff;
    for i in 1..=j {
        v /= 2.0 * i as f64;
    }
    for i in 1..=d {
        v *= i as f64;
    }
    v * (1.0 + 1e-9)
}

pub fn charfn_moments(
    alpha: &Rational,
    max_order: usize,
    tol: f64,
    caps: &Caps,
) -> Result<CharfnMoments> {
    if !(alpha.is_positive() && *alpha < Rational::one()) {
        return Err(Error::InvalidInput(format!(
            "α must lie in (0, 1), got {}",
            fmt_rational(alpha)
        )));
    }
    let a2 = to_f64(alpha).powi(2);
    let big = a2 / (1.0 - a2);
    let mut terms = 1;
    while terms < caps.series_len
        && charfn_bound(
            max_order - max_order % 2,
            big,
            a2.powi(terms as i32 + 1) / (1.0 - a2),
        ) > tol
    {
        terms += 1;
    }
    let s = a2.powi(terms as i32 + 1) / (1.0 - a2);
    let mut series = vec![Rational::zero(); max_order + 1];
    series[0] = Rational::one();
    for n in 1..=terms {
        let an = num_traits::pow(alpha.clone(), n);
        let mut factor = vec![Rational::zero(); max_order + 1];
        let mut c = Rational::one();
        let a2n = &an * &an;
        for (j, slot) in factor.iter_mut().enumerate().step_by(2) {
            if j > 0 {
                c = -c * &a2n / Rational::from_integer(BigInt::from((j - 1) * j));
            }
            *slot = c.clone();
        }
        let mut next = vec![Rational::zero(); max_order + 1];
        for (i, x) in series.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
            for (j, y) in factor
                .iter()
                .enumerate()
                .take(max_order + 1 - i)
                .filter(|(_, y)| !y.is_zero())
            {
                next[i + j] += x * y;
            }
        }
        series = next;
    }
    let moments = series
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let v = c * Rational::from_integer(BigInt::from(factorial(k as u64)));
            if k % 4 == 2 {
                -v
            } else {
                v
            }
        })
        .collect();
    let bounds = (0..=max_order).map(|d| charfn_bound(d, big, s)).collect();
    Ok(CharfnMoments {
        alpha: alpha.clone(),
        terms,
        moments,
        bounds,
    })
}

/// Single-variable moment through the characteristic function of `X_α`.
pub fn moment_charfn(
    spec: &CoefficientSpec,
    target: MomentTarget,
    tol: f64,
    caps: &Caps,
) -> Result<MomentReport> {
    let alpha = spec.ratio().ok_or(Error::NotGeometric)?;
    let (Some(order), Some(scale)) = (target.x_order(), target.scale_from_x()) else {
        return Err(Error::InvalidInput(format!(
            "no characteristic-function route for {target}"
        )));
    };
    let cm = charfn_moments(alpha, order, tol, caps)?;
    let v = &scale * &cm.moments[order];
    let bound = to_f64(&scale.abs()) * cm.bounds[order];
    Ok(MomentReport {
        target,
        route: Route::Charfn,
        value: to_f64(&v),
        exact: Some(v),
        error_bound: bound,
        tail_bound: 0.0,
        level: None,
    })
}

/// `(1/2)∫_{−1}^{1} f^n dx` for the step function `f = Σ_{k≤N} c_k f_k`,
/// summed exactly over the `2^N` dyadic cells on which it is constant.
pub fn rademacher_moment(
    spec: &CoefficientSpec,
    target: MomentTarget,
    level: usize,
) -> Result<MomentReport> {
    let (Some(order), Some(scale)) = (target.x_order(), target.scale_from_x()) else {
        return Err(Error::InvalidInput(format!(
            "no dyadic-integral route for {target}"
        )));
    };
    if level > MAX_DYADIC_LEVEL {
        return Err(Error::CapExceeded {
            what: "dyadic integration depth N",
            requested: level,
            cap: MAX_DYADIC_LEVEL,
            estimate: format!("2^{level} cells"),
        });
    }
    let cs: Vec<Rational> = (1..=level)
        .map(|k| spec.real_coeff(k))
        .collect::<Result<_>>()?;
    let den = cs.iter().fold(BigInt::one(), |acc, c| {
        num_integer::Integer::lcm(&acc, c.denom())
    });
    let nums: Vec<BigInt> = cs.iter().map(|c| c.numer() * (&den / c.denom())).collect();
    let total: BigInt = (0..1u64 << level)
        .into_par_iter()
        .map(|cell| {
            let f: BigInt = nums
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    if dyadic_sign(cell, i + 1, level) > 0 {
                        x.clone()
                    } else {
                        -x
                    }
                })
                .sum();
            num_traits::pow(f, order)
        })
        .sum();
    let v = scale * Rational::new(total, num_traits::pow(den, order) << level);
    Ok(MomentReport::exact(
        target,
        Route::RademacherExact,
        v,
        truncation_bound(spec, target, level),
        Some(level),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedMomentReport {
    pub n: usize,
    pub m: usize,
    pub level: usize,
    /// `τ(a^n b^m)`.
    #[serde(with = "crate::scalar::rational_string")]
    pub joint: Rational,
    /// `τ(a^n) τ(b^m)`.
    #[serde(with = "crate::scalar::rational_string")]
    pub product: Rational,
    pub equal: bool,
}

/// Compares `τ(a^n b^m)` with `τ(a^n)τ(b^m)` in the exact dense oracle.
pub fn mixed_moment_check(
    spec: &CoefficientSpec,
    n: usize,
    m: usize,
    level: usize,
    caps: &Caps,
) -> Result<MixedMomentReport> {
    if !spec.is_real() {
        return Err(Error::NotReal);
    }
    let exact = |t| -> Result<Rational> {
        Ok(moment_dense_oracle(spec, t, level, true, caps)?
            .exact
            .expect("exact route"))
    };
    let joint = exact(MomentTarget::Mixed { n, m })?;
    let product =
        exact(MomentTarget::RePower { order: n })? * exact(MomentTarget::ImPower { order: m })?;
    Ok(MixedMomentReport {
        n,
        m,
        level,
        equal: joint == product,
        joint,
        product,
    })
}
