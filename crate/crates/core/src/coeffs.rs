//! Coefficient sequences `{c_n}`, their tails, elementary symmetric functions
//! and the quasinilpotence analytics (`(k! σ_k)^{1/k}` and the entire
//! function `g`).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{
    abs2, exact_sqrt, factorial, fmt_crational, fmt_rational, ln_biguint, ln_rational,
    parse_crational, parse_rational, real, to_c64, to_f64, CRational, Rational,
};

/// The sequence `{c_n}`: either `c_n = α^n` or a finite list padded with zeros.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientSpec {
    Geometric { ratio: Rational },
    Explicit { values: Vec<CRational> },
}

impl CoefficientSpec {
    pub fn geometric(ratio: Rational) -> Result<Self> {
        if !(ratio.is_positive() && ratio < Rational::one()) {
            return Err(Error::InvalidInput(format!(
                "geometric ratio must lie strictly between 0 and 1, got {}",
                fmt_rational(&ratio)
            )));
        }
        Ok(CoefficientSpec::Geometric { ratio })
    }

    pub fn explicit(values: Vec<CRational>) -> Self {
        CoefficientSpec::Explicit { values }
    }

    pub fn explicit_real(values: Vec<Rational>) -> Self {
        CoefficientSpec::Explicit {
            values: values.into_iter().map(real).collect(),
        }
    }

    /// Parses `geometric:<p>/<q>`, `list:<c1>,<c2>,...` or a JSON document
    /// `{"kind": "geometric", "ratio": "1/2"}` / `{"kind": "list", "values": [...]}`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return Self::from_json(s);
        }
        let (kind, body) = s.split_once(':').ok_or_else(|| {
            Error::Parse(format!(
                "coefficient spec {s:?} needs a 'geometric:' or 'list:' prefix"
            ))
        })?;
        match kind.trim() {
            "geometric" | "geom" => Self::geometric(parse_rational(body)?),
            "list" | "explicit" => {
                let values = body
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(parse_crational)
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::explicit(values))
            }
            other => Err(Error::Parse(format!("unknown coefficient kind {other:?}"))),
        }
    }

    fn from_json(s: &str) -> Result<Self> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let text = |x: &serde_json::Value| -> Result<String> {
            match x {
                serde_json::Value::String(t) => Ok(t.clone()),
                serde_json::Value::Number(n) => Ok(n.to_string()),
                _ => Err(Error::Parse(format!(
                    "expected a number or string, got {x}"
                ))),
            }
        };
        match v.get("kind").and_then(|k| k.as_str()) {
            Some("geometric") => {
                let r = v
                    .get("ratio")
                    .ok_or_else(|| Error::Parse("missing 'ratio'".into()))?;
                Self::geometric(parse_rational(&text(r)?)?)
            }
            Some("list") | Some("explicit") => {
                let vals = v
                    .get("values")
                    .and_then(|x| x.as_array())
                    .ok_or_else(|| Error::Parse("missing 'values' array".into()))?;
                let values = vals
                    .iter()
                    .map(|x| parse_crational(&text(x)?))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::explicit(values))
            }
            _ => Err(Error::Parse(
                "JSON coefficient spec needs kind 'geometric' or 'list'".into(),
            )),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            CoefficientSpec::Geometric { ratio } => {
                serde_json::json!({ "kind": "geometric", "ratio": fmt_rational(ratio) })
            }
            CoefficientSpec::Explicit { values } => serde_json::json!({
                "kind": "list",
                "values": values.iter().map(fmt_crational).collect::<Vec<_>>(),
            }),
        }
    }

    pub fn ratio(&self) -> Option<&Rational> {
        match self {
            CoefficientSpec::Geometric { ratio } => Some(ratio),
            CoefficientSpec::Explicit { .. } => None,
        }
    }

    /// Number of potentially nonzero coefficients; `None` when infinite.
    pub fn support_len(&self) -> Option<usize> {
        match self {
            CoefficientSpec::Geometric { .. } => None,
            CoefficientSpec::Explicit { values } => Some(values.len()),
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            CoefficientSpec::Geometric { .. } => true,
            CoefficientSpec::Explicit { values } => values.iter().all(|c| c.im.is_zero()),
        }
    }

    /// `c_n` for 1-based `n`.
    pub fn coeff(&self, n: usize) -> CRational {
        assert!(n >= 1, "coefficients are 1-based");
        match self {
            CoefficientSpec::Geometric { ratio } => real(num_traits::pow(ratio.clone(), n)),
            CoefficientSpec::Explicit { values } => {
                values.get(n - 1).cloned().unwrap_or_else(CRational::zero)
            }
        }
    }

    pub fn coeffs(&self, n: usize) -> Vec<CRational> {
        (1..=n).map(|i| self.coeff(i)).collect()
    }

    /// Real `c_n`, or [`Error::NotReal`].
    pub fn real_coeff(&self, n: usize) -> Result<Rational> {
        let c = self.coeff(n);
        if !c.im.is_zero() {
            return Err(Error::NotReal);
        }
        Ok(c.re)
    }

    /// `|c_n|`, exact when the modulus is rational.
    pub fn abs_coeff(&self, n: usize) -> Result<Rational> {
        let c = self.coeff(n);
        if c.im.is_zero() {
            return Ok(c.re.abs());
        }
        exact_sqrt(&abs2(&c)).ok_or_else(|| {
            Error::InvalidInput(format!(
                "|c_{n}| = |{}| is irrational; exact σ_k needs rational moduli",
                fmt_crational(&c)
            ))
        })
    }

    pub fn abs_coeffs(&self, n: usize) -> Result<Vec<Rational>> {
        (1..=n).map(|i| self.abs_coeff(i)).collect()
    }

    /// `|c_n|²`, always exact.
    pub fn abs2_coeff(&self, n: usize) -> Rational {
        abs2(&self.coeff(n))
    }

    /// Upper bound on `Σ_{n>N} |c_n|`: exact for geometric sequences and
    /// explicit lists with real or rationally-normed entries.
    pub fn tail_l1(&self, n: usize) -> Rational {
        match self {
            CoefficientSpec::Geometric { ratio } => {
                num_traits::pow(ratio.clone(), n + 1) / (Rational::one() - ratio)
            }
            CoefficientSpec::Explicit { values } => values
                .iter()
                .skip(n)
                .map(|c| {
                    if c.im.is_zero() {
                        c.re.abs()
                    } else {
                        exact_sqrt(&abs2(c)).unwrap_or_else(|| c.re.abs() + c.im.abs())
                    }
                })
                .fold(Rational::zero(), |a, b| a + b),
        }
    }
}

impl FromStr for CoefficientSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CoefficientSpec::parse(s)
    }
}

impl fmt::Display for CoefficientSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientSpec::Geometric { ratio } => write!(f, "geometric:{}", fmt_rational(ratio)),
            CoefficientSpec::Explicit { values } => {
                let v: Vec<String> = values.iter().map(fmt_crational).collect();
                write!(f, "list:{}", v.join(","))
            }
        }
    }
}

impl Serialize for CoefficientSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoefficientSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        CoefficientSpec::from_json(&v.to_string()).map_err(serde::de::Error::custom)
    }
}

/// `[e_0, e_1, …, e_kmax]` of `values` by the prefix recursion
/// `e_k(n) = e_k(n−1) + x_n e_{k−1}(n−1)`.
pub fn elementary_symmetric<T>(values: &[T], kmax: usize) -> Vec<T>
where
    T: Clone + Zero + One + for<'a> std::ops::Mul<&'a T, Output = T>,
    for<'a> &'a T: std::ops::Add<&'a T, Output = T>,
{
    let mut e = vec![T::zero(); kmax + 1];
    e[0] = T::one();
    for (n, x) in values.iter().enumerate() {
        for k in (1..=kmax.min(n + 1)).rev() {
            let add = e[k - 1].clone() * x;
            e[k] = &e[k] + &add;
        }
    }
    e
}

/// `σ_k` at a truncation level together with a bound on what the neglected
/// tail can add.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaValue {
    pub k: usize,
    pub level: usize,
    pub value: Rational,
    /// `σ_k(∞) − σ_k(N) ≤ tail_bound`.
    pub tail_bound: Rational,
}

/// Truncated `σ_0..=σ_kmax` with tail bounds `Σ_{j≥1} e_{k−j}(N) t^j / j!`,
/// where `t = tail_l1(N)`.
pub fn sigma_table(spec: &CoefficientSpec, kmax: usize, level: usize) -> Result<Vec<SigmaValue>> {
    let abs = spec.abs_coeffs(level)?;
    let e = elementary_symmetric(&abs, kmax);
    let t = spec.tail_l1(level);
    let mut tpow = vec![Rational::one(); kmax + 1];
    for j in 1..=kmax {
        tpow[j] = &tpow[j - 1] * &t / Rational::from_integer(BigInt::from(j));
    }
    Ok((0..=kmax)
        .map(|k| {
            let tail_bound = (1..=k).fold(Rational::zero(), |acc, j| acc + &e[k - j] * &tpow[j]);
            SigmaValue {
                k,
                level,
                value: e[k].clone(),
                tail_bound,
            }
        })
        .collect())
}

pub fn sigma(spec: &CoefficientSpec, k: usize, level: usize) -> Result<SigmaValue> {
    Ok(sigma_table(spec, k, level)?
        .pop()
        .expect("table has k+1 entries"))
}

/// `σ_k` of the whole sequence, exactly: `α^{k(k+1)/2} / ∏_{j≤k} (1 − α^j)`
/// for geometric specs and the finite sum for explicit lists.
pub fn sigma_full(spec: &CoefficientSpec, k: usize) -> Result<Rational> {
    match spec {
        CoefficientSpec::Geometric { ratio } => {
            let den = (1..=k).fold(Rational::one(), |acc, j| {
                acc * (Rational::one() - num_traits::pow(ratio.clone(), j))
            });
            Ok(num_traits::pow(ratio.clone(), k * (k + 1) / 2) / den)
        }
        CoefficientSpec::Explicit { values } => Ok(sigma(spec, k, values.len())?.value),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayEntry {
    pub k: usize,
    /// Exact truncated `σ_k`, printed as `p/q`.
    pub sigma: String,
    pub sigma_f64: f64,
    /// `k! σ_k` in double precision (may be `inf` for huge values).
    pub k_fact_sigma: f64,
    /// `(k! σ_k)^{1/k}`, computed through logarithms of the exact values.
    pub root: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub level: usize,
    pub entries: Vec<DecayEntry>,
}

pub fn decay_profile(spec: &CoefficientSpec, kmax: usize, level: usize) -> Result<DecayProfile> {
    if kmax == 0 {
        return Err(Error::InvalidInput("kmax must be at least 1".into()));
    }
    let table = sigma_table(spec, kmax, level)?;
    let entries = table
        .into_iter()
        .skip(1)
        .map(|s| {
            let k = s.k;
            let ln_fact = ln_biguint(&factorial(k as u64));
            let (root, kfs) = if s.value.is_zero() {
                (0.0, 0.0)
            } else {
                let ln = ln_fact + ln_rational(&s.value);
                ((ln / k as f64).exp(), ln.exp())
            };
            DecayEntry {
                k,
                sigma: fmt_rational(&s.value),
                sigma_f64: to_f64(&s.value),
                k_fact_sigma: kfs,
                root,
            }
        })
        .collect();
    Ok(DecayProfile { level, entries })
}

/// Partial sum `Σ_{n≤kmax} n! e_n(c_1..c_N) z^n` of the power series of `g`.
/// For nonnegative coefficients `e_n = σ_n`.
pub fn g_series(spec: &CoefficientSpec, z: Complex64, kmax: usize, level: usize) -> Complex64 {
    let e = elementary_symmetric(&spec.coeffs(level), kmax);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut zpow = Complex64::new(1.0, 0.0);
    let mut fact = 1.0f64;
    for (n, en) in e.iter().enumerate() {
        if n > 0 {
            fact *= n as f64;
            zpow *= z;
        }
        acc += to_c64(en) * fact * zpow;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadParams {
    /// Gauss–Legendre nodes per panel.
    pub order: usize,
    /// Initial panel count; doubled until the error estimate meets `tol`.
    pub panels: usize,
    pub max_panels: usize,
    pub tol: f64,
    /// Upper cutoff; chosen from the growth bound when `None`.
    pub cutoff: Option<f64>,
}

impl Default for QuadParams {
    fn default() -> Self {
        QuadParams {
            order: 16,
            panels: 8,
            max_panels: 4096,
            tol: 1e-10,
            cutoff: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GValue {
    pub re: f64,
    pub im: f64,
    /// Panel-halving difference of the quadrature on `[0, T]`.
    pub quad_error: f64,
    /// Bound on `∫_T^∞ |f(tz)| e^{−t} dt`.
    pub cutoff_error: f64,
    /// Bound on the effect of truncating the product at `level`.
    pub truncation_error: f64,
    pub cutoff: f64,
    pub level: usize,
    pub panels: usize,
}

impl GValue {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn error_estimate(&self) -> f64 {
        self.quad_error + self.cutoff_error + self.truncation_error
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 {
                1.0
            } else if n == 1 {
                x
            } else {
                p1
            };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

fn composite_gl(
    f: &impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    panels: usize,
    rule: &[(f64, f64)],
) -> Complex64 {
    let h = (b - a) / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for &(x, w) in rule {
            acc += f(mid + 0.5 * h * x) * (w * 0.5 * h);
        }
    }
    acc
}

/// `∫_T^∞ t^j e^{−t/2} dt = 2^{j+1} j! e^{−T/2} Σ_{i≤j} (T/2)^i / i!` for
/// `j = 0..=jmax`.
fn upper_gamma_half(jmax: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(jmax + 1);
    let (mut partial, mut term, mut pref) = (0.0f64, 1.0f64, 2.0f64);
    for j in 0..=jmax {
        if j > 0 {
            term *= t / 2.0 / j as f64;
            pref *= 2.0 * j as f64;
        }
        partial += term;
        out.push(pref * (-t / 2.0).exp() * partial);
    }
    out
}

/// `g(z) = ∫_0^∞ f(tz) e^{−t} dt` with `f(w) = ∏ (1 + w c_n)`, by composite
/// Gauss–Legendre quadrature on `[0, T]` plus certified cutoff and product
/// truncation bounds.
pub fn g_eval(spec: &CoefficientSpec, z: Complex64, quad: &QuadParams) -> Result<GValue> {
    let unachievable = |reason: String| Error::Unachievable {
        tol: quad.tol,
        reason,
    };
    if quad.order == 0 || quad.panels == 0 || quad.tol.is_nan() || quad.tol <= 0.0 {
        return Err(Error::InvalidInput(
            "quadrature needs order ≥ 1, panels ≥ 1 and tol > 0".into(),
        ));
    }
    let zabs = z.norm();
    let tail_f = |n: usize| to_f64(&spec.tail_l1(n));
    let moduli = |n: usize| -> Vec<f64> {
        (1..=n)
            .map(|i| to_f64(&spec.abs2_coeff(i)).sqrt())
            .collect()
    };

    // Smallest N0 with |z| tail(N0) ≤ 1/2, so |f(tz)| ≤ P(t) e^{t/2} with
    // P(t) = ∏_{n≤N0} (1 + t |z| |c_n|).
    let max_level = spec.support_len().unwrap_or(4096);
    let mut n0 = 0;
    while zabs * tail_f(n0) > 0.5 {
        n0 += 1;
        if n0 > max_level {
            return Err(unachievable(
                "product tail never drops below 1/(2|z|)".into(),
            ));
        }
    }
    let scaled: Vec<f64> = moduli(n0).into_iter().map(|c| c * zabs).collect();
    let p_coeffs = elementary_symmetric(&scaled, n0);
    let growth_integral = |t: f64| -> f64 {
        upper_gamma_half(n0, t)
            .iter()
            .zip(&p_coeffs)
            .map(|(g, e)| g * e)
            .sum()
    };

    let cutoff = match quad.cutoff {
        Some(t) => t,
        None => {
            let mut t = 8.0;
            while growth_integral(t) > quad.tol / 4.0 {
                t *= 1.25;
                if t > 1e5 {
                    return Err(unachievable("no finite cutoff meets the tolerance".into()));
                }
            }
            t
        }
    };
    let cutoff_error = growth_integral(cutoff);

    // Product truncation: each neglected factor block changes f by at most
    // a factor (e^{T |z| tail(N)} − 1) on [0, T].
    let whole = growth_integral(0.0);
    let mut level = n0;
    let trunc = |n: usize| ((cutoff * zabs * tail_f(n)).exp_m1()) * whole;
    while trunc(level) > quad.tol / 4.0 {
        level += 1;
        if level > max_level {
            return Err(unachievable(
                "product truncation error stays above tolerance".into(),
            ));
        }
    }
    let truncation_error = trunc(level);

    let cs: Vec<Complex64> = spec.coeffs(level).iter().map(to_c64).collect();
    let integrand = |t: f64| -> Complex64 {
        let w = z * t;
        cs.iter()
            .fold(Complex64::new(1.0, 0.0), |acc, c| acc * (1.0 + w * c))
            * (-t).exp()
    };
    let rule = gauss_legendre(quad.order);
    let mut panels = quad.panels;
    let mut coarse = composite_gl(&integrand, 0.0, cutoff, panels, &rule);
    loop {
        let fine = composite_gl(&integrand, 0.0, cutoff, panels * 2, &rule);
        let quad_error = (fine - coarse).norm();
        panels *= 2;
        let g = GValue {
            re: fine.re,
            im: fine.im,
            quad_error,
            cutoff_error,
            truncation_error,
            cutoff,
            level,
            panels,
        };
        if g.error_estimate() <= quad.tol {
            return Ok(g);
        }
        if panels >= quad.max_panels {
            return Err(unachievable(format!(
                "error estimate {:.3e} after {panels} panels on [0, {cutoff:.1}]",
                g.error_estimate()
            )));
        }
        coarse = fine;
    }
}
