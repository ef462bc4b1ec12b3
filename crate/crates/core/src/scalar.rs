//! Exact scalar types and the small numeric helpers shared across modules.
//!
//! Everything that enters an algebraic identity is a [`Rational`] or a
//! [`CRational`] (complex number with rational parts). Floats only appear
//! where a limit, a root or an integral forces them.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational number.
pub type Rational = BigRational;

/// Exact complex number with rational real and imaginary parts.
pub type CRational = Complex<BigRational>;

/// Builds `num/den` as an exact rational. Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn real(r: Rational) -> CRational {
    Complex::new(r, Rational::zero())
}

pub fn creal(num: i64, den: i64) -> CRational {
    real(rat(num, den))
}

pub fn cone() -> CRational {
    Complex::new(Rational::one(), Rational::zero())
}

pub fn czero() -> CRational {
    Complex::new(Rational::zero(), Rational::zero())
}

pub fn imag_unit() -> CRational {
    Complex::new(Rational::zero(), Rational::one())
}

pub fn is_real(z: &CRational) -> bool {
    z.im.is_zero()
}

/// `|z|^2`, always exact.
pub fn abs2(z: &CRational) -> Rational {
    &z.re * &z.re + &z.im * &z.im
}

/// `n!` as a big integer.
pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// Binomial coefficient `C(n, k)`, zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Exact square root of a nonnegative rational if it is a perfect square.
pub fn exact_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().magnitude();
    let d = r.denom().magnitude();
    let sn = n.sqrt();
    let sd = d.sqrt();
    if &sn * &sn == *n && &sd * &sd == *d {
        Some(BigRational::new(BigInt::from(sn), BigInt::from(sd)))
    } else {
        None
    }
}

/// Natural log of a positive big integer, accurate to double precision even
/// when the integer does not fit in an `f64`.
pub fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().map(f64::ln).unwrap_or(f64::NAN);
    }
    let shift = bits - 64;
    let top: BigUint = n >> shift;
    top.to_f64().unwrap_or(f64::NAN).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a positive rational; `-inf` for zero, `NaN` for negatives.
pub fn ln_rational(r: &Rational) -> f64 {
    match r.numer().sign() {
        Sign::NoSign => f64::NEG_INFINITY,
        Sign::Minus => f64::NAN,
        Sign::Plus => ln_biguint(r.numer().magnitude()) - ln_biguint(r.denom().magnitude()),
    }
}

/// Converts a rational to the nearest double, also for huge numerators and
/// denominators where the naive quotient would overflow.
pub fn to_f64(r: &Rational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            let q = n / d;
            if q.is_finite() && q != 0.0 {
                return q;
            }
        }
    }
    let s = if r.is_negative() { -1.0 } else { 1.0 };
    s * ln_rational(&r.abs()).exp()
}

pub fn to_c64(z: &CRational) -> Complex64 {
    Complex64::new(to_f64(&z.re), to_f64(&z.im))
}

/// Parses `p`, `p/q`, or a finite decimal like `0.25` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        let digits = format!("{whole_digits}{frac}");
        let mut n: BigInt = digits.parse().map_err(|_| bad())?;
        if neg {
            n = -n;
        }
        let d = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(BigRational::new(n, d));
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

/// Parses a complex rational: `a`, `a+bi`, `a-bi`, `bi`, `i`, `-i`.
pub fn parse_crational(s: &str) -> Result<CRational> {
    let t = s.trim();
    if !t.ends_with('i') {
        return Ok(real(parse_rational(t)?));
    }
    let body = &t[..t.len() - 1];
    // split at the last sign that is not the leading character
    let split = body
        .char_indices()
        .skip(1)
        .filter(|&(_, c)| c == '+' || c == '-')
        .map(|(i, _)| i)
        .last();
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im.trim() {
        "" | "+" => Rational::one(),
        "-" => -Rational::one(),
        other => parse_rational(other.trim_start_matches('+'))?,
    };
    Ok(Complex::new(parse_rational(re)?, im))
}

/// `p/q` form, or just `p` for integers.
pub struct DisplayRational<'a>(pub &'a Rational);

impl fmt::Display for DisplayRational<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

pub fn fmt_rational(r: &Rational) -> String {
    DisplayRational(r).to_string()
}

pub fn fmt_crational(z: &CRational) -> String {
    if z.im.is_zero() {
        return fmt_rational(&z.re);
    }
    let im = if z.im.is_one() {
        String::new()
    } else if (-&z.im).is_one() {
        "-".to_string()
    } else {
        fmt_rational(&z.im)
    };
    if z.re.is_zero() {
        format!("{im}i")
    } else if z.im.is_negative() {
        format!("{}{im}i", fmt_rational(&z.re))
    } else {
        format!("{}+{im}i", fmt_rational(&z.re))
    }
}

/// Serde adapter writing a [`Rational`] as its `p/q` string.
pub mod rational_string {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{fmt_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(v: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rational(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        parse_rational(&String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Option<Rational>` as an optional `p/q` string.
pub mod opt_rational_string {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::{fmt_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(fmt_rational).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|x| parse_rational(&x).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rationals() {
        assert_eq!(parse_rational("1/2").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("-3").unwrap(), int(-3));
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn parses_complex() {
        assert_eq!(
            parse_crational("1/2+1/3i").unwrap(),
            Complex::new(rat(1, 2), rat(1, 3))
        );
        assert_eq!(
            parse_crational("1/2-1/3i").unwrap(),
            Complex::new(rat(1, 2), rat(-1, 3))
        );
        assert_eq!(
            parse_crational("-2/5i").unwrap(),
            Complex::new(int(0), rat(-2, 5))
        );
        assert_eq!(parse_crational("i").unwrap(), imag_unit());
        assert_eq!(parse_crational("-i").unwrap(), -imag_unit());
        assert_eq!(parse_crational("-1/4").unwrap(), creal(-1, 4));
    }

    #[test]
    fn formats_round_trip() {
        for s in [
            "1/2", "-3", "1/2+1/3i", "1/2-1/3i", "-2/5i", "i", "-i", "3+i",
        ] {
            let z = parse_crational(s).unwrap();
            assert_eq!(fmt_crational(&z), s);
        }
    }

    #[test]
    fn logs_and_floats_of_huge_values() {
        let tiny = BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(2), 3000));
        assert!((ln_rational(&tiny) + 3000.0 * std::f64::consts::LN_2).abs() < 1e-9);
        assert_eq!(to_f64(&tiny), 0.0);
        let big = BigRational::new(
            num_traits::pow(BigInt::from(3), 2000) + 1u32,
            num_traits::pow(BigInt::from(3), 1999),
        );
        assert!((to_f64(&big) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn exact_square_roots() {
        assert_eq!(exact_sqrt(&rat(9, 16)), Some(rat(3, 4)));
        assert_eq!(exact_sqrt(&rat(1, 2)), None);
        assert_eq!(exact_sqrt(&rat(-1, 4)), None);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(8, 4), BigUint::from(70u32));
        assert_eq!(binomial(3, 5), BigUint::zero());
        assert_eq!(factorial(5), BigUint::from(120u32));
    }
}
