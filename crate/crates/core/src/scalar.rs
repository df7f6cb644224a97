//! Exact rational scalars: parsing of `"p/q"` strings and snapping of
//! irrationals to continued-fraction convergents.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Default bound on snapped denominators: `q < 2^128`.
pub const DEFAULT_SNAP_BITS: u32 = 128;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalarError {
    #[error("cannot parse `{0}` as a rational (expected \"p/q\", an integer or a decimal)")]
    Syntax(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("`{0}` is not a finite number")]
    NotFinite(String),
}

/// A rational obtained by truncating a continued fraction.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapped {
    pub value: BigRational,
    /// Upper bound on `|x - value|` for the real number `x` that was snapped.
    pub radius: f64,
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"-1.25"` exactly.
pub fn parse_rational(text: &str) -> Result<BigRational, ScalarError> {
    let s = text.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p
            .trim()
            .parse()
            .map_err(|_| ScalarError::Syntax(text.to_string()))?;
        let q: BigInt = q
            .trim()
            .parse()
            .map_err(|_| ScalarError::Syntax(text.to_string()))?;
        if q.is_zero() {
            return Err(ScalarError::ZeroDenominator(text.to_string()));
        }
        return Ok(BigRational::new(p, q));
    }
    if let Ok(p) = s.parse::<BigInt>() {
        return Ok(BigRational::from_integer(p));
    }
    parse_decimal(s).ok_or_else(|| ScalarError::Syntax(text.to_string()))
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}0").parse().ok()?;
    let digits = digits / BigInt::from(10);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = BigRational::from_integer(digits);
    if scale >= 0 {
        value *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -value } else { value })
}

/// Parses a real-number token: anything [`parse_rational`] accepts, plus
/// `phi` (golden ratio) and `sqrt(N)`, which are snapped to convergents with
/// denominators below `2^snap_bits`.
pub fn parse_real(text: &str, snap_bits: u32) -> Result<Snapped, ScalarError> {
    let s = text.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest.trim()),
        None => (false, s),
    };
    let snapped = if body == "phi" || body == "φ" {
        Some(golden_ratio(snap_bits))
    } else if let Some(arg) = body.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
        let n: BigInt = arg
            .trim()
            .parse()
            .map_err(|_| ScalarError::Syntax(text.to_string()))?;
        if n.is_negative() {
            return Err(ScalarError::NotFinite(text.to_string()));
        }
        Some(sqrt_snapped(&n, snap_bits))
    } else {
        None
    };
    match snapped {
        Some(mut v) => {
            if neg {
                v.value = -v.value;
            }
            Ok(v)
        }
        None => Ok(Snapped {
            value: parse_rational(s)?,
            radius: 0.0,
        }),
    }
}

/// Formats as `"p/q"` (or `"p"` for integers).
pub fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Truncates the continued fraction `[a0; a1, a2, ...]` at the last convergent
/// whose denominator is below `2^bits`.
pub fn snap_continued_fraction<I>(terms: I, bits: u32) -> Snapped
where
    I: IntoIterator<Item = BigInt>,
{
    let limit = BigInt::one() << bits;
    // Convergent recurrences h_k = a_k h_{k-1} + h_{k-2}, same for k.
    let (mut h_prev, mut h) = (BigInt::zero(), BigInt::one());
    let (mut k_prev, mut k) = (BigInt::one(), BigInt::zero());
    let mut radius = f64::INFINITY;
    for a in terms {
        let h_next = &a * &h + &h_prev;
        let k_next = &a * &k + &k_prev;
        if k_next >= limit {
            // |x - h/k| < 1/(k * k_next)
            let denom = (&k * &k_next).to_f64().unwrap_or(f64::INFINITY);
            radius = 1.0 / denom;
            break;
        }
        h_prev = std::mem::replace(&mut h, h_next);
        k_prev = std::mem::replace(&mut k, k_next);
        radius = 0.0;
    }
    if k.is_zero() {
        // First term already too large; cannot happen for bits >= 1.
        return Snapped {
            value: BigRational::zero(),
            radius: f64::INFINITY,
        };
    }
    Snapped {
        value: BigRational::new(h, k),
        radius,
    }
}

/// Golden ratio `[1; 1, 1, ...]` snapped to a Fibonacci quotient.
pub fn golden_ratio(bits: u32) -> Snapped {
    snap_continued_fraction(std::iter::repeat(BigInt::one()), bits)
}

/// `sqrt(n)` snapped via its periodic continued fraction. Perfect squares are
/// returned exactly.
pub fn sqrt_snapped(n: &BigInt, bits: u32) -> Snapped {
    let a0 = n.sqrt();
    if &(&a0 * &a0) == n {
        return Snapped {
            value: BigRational::from_integer(a0),
            radius: 0.0,
        };
    }
    // Standard recurrence m' = d a - m, d' = (n - m'^2)/d, a' = (a0 + m')/d'.
    let n = n.clone();
    let mut state = (BigInt::zero(), BigInt::one(), a0.clone());
    let terms = std::iter::once(a0.clone()).chain(std::iter::from_fn(move || {
        let (m, d, a) = &state;
        let m_next = d * a - m;
        let d_next = (&n - &m_next * &m_next) / d;
        let a_next = (&a0 + &m_next).div_floor(&d_next);
        state = (m_next, d_next, a_next.clone());
        Some(a_next)
    }));
    snap_continued_fraction(terms, bits)
}

/// Exact continued-fraction expansion of a rational.
pub fn continued_fraction(q: &BigRational) -> Vec<BigInt> {
    let mut out = Vec::new();
    let (mut p, mut r) = (q.numer().clone(), q.denom().clone());
    while !r.is_zero() {
        let (a, rem) = p.div_mod_floor(&r);
        out.push(a);
        p = std::mem::replace(&mut r, rem);
    }
    out
}

/// Snaps a double: the continued fraction of its exact binary value is
/// truncated at denominators below `2^bits`.
pub fn snap_f64(x: f64, bits: u32) -> Result<Snapped, ScalarError> {
    let exact = BigRational::from_float(x).ok_or_else(|| ScalarError::NotFinite(x.to_string()))?;
    Ok(snap_continued_fraction(continued_fraction(&exact), bits))
}
