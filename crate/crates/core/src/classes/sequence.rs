//! Exact decreasing sequences `a_k` and the sequences derived from them.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::ClassError;
use crate::interval::Interval;
use crate::scalar::format_rational;

/// Positive real `coef · 2^exp2` with rational coefficient and exponent.
/// Comparisons are exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeqValue {
    pub coef: BigRational,
    pub exp2: BigRational,
}

fn pow2_rational(p: &BigInt) -> BigRational {
    let e = p.abs().to_usize().expect("exponent fits in usize");
    let v = BigInt::one() << e;
    if p.is_negative() {
        BigRational::new(BigInt::one(), v)
    } else {
        BigRational::from_integer(v)
    }
}

/// Compares the positive rational `x` with `2^e`.
fn cmp_with_pow2(x: &BigRational, e: &BigRational) -> Ordering {
    let q = e.denom().to_usize().expect("small exponent denominator");
    let lhs = num_traits::pow(x.clone(), q);
    lhs.cmp(&pow2_rational(e.numer()))
}

impl SeqValue {
    pub fn new(coef: BigRational, exp2: BigRational) -> Self {
        assert!(coef.is_positive(), "sequence values are positive");
        SeqValue { coef, exp2 }
    }

    pub fn rational(q: BigRational) -> Self {
        SeqValue::new(q, BigRational::zero())
    }

    /// Exact value when the exponent is an integer.
    pub fn to_rational(&self) -> Option<BigRational> {
        self.exp2
            .is_integer()
            .then(|| &self.coef * pow2_rational(self.exp2.numer()))
    }

    /// Compares this value with a rational `v`.
    pub fn cmp_rational(&self, v: &BigRational) -> Ordering {
        if !v.is_positive() {
            return Ordering::Greater;
        }
        cmp_with_pow2(&(v / &self.coef), &self.exp2).reverse()
    }

    pub fn mul(&self, other: &SeqValue) -> SeqValue {
        SeqValue::new(&self.coef * &other.coef, &self.exp2 + &other.exp2)
    }

    pub fn pow(&self, m: u32) -> SeqValue {
        SeqValue::new(
            num_traits::pow(self.coef.clone(), m as usize),
            &self.exp2 * BigInt::from(m),
        )
    }

    pub fn mul_pow2(&self, e: &BigRational) -> SeqValue {
        SeqValue::new(self.coef.clone(), &self.exp2 + e)
    }

    /// Outward-rounded double enclosure.
    pub fn enclosure(&self) -> Interval {
        let c = Interval::from_rational(&self.coef);
        if self.exp2.is_integer() {
            let e = self.exp2.to_integer().to_i32().unwrap_or(i32::MIN / 2);
            scale_pow2(c, e)
        } else {
            let e = Interval::from_rational(&self.exp2);
            c * (e * Interval::point(2.0).ln()).exp()
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.enclosure().mid()
    }

    /// `ln` of the value, for log-scale work.
    pub fn ln(&self) -> f64 {
        self.coef.to_f64().unwrap_or(f64::MIN_POSITIVE).ln()
            + self.exp2.to_f64().unwrap_or(0.0) * std::f64::consts::LN_2
    }
}

// multiplication by 2^e, rounded outward when the result leaves the normal range
fn scale_pow2(x: Interval, e: i32) -> Interval {
    let mut lo = x.lo();
    let mut hi = x.hi();
    let mut rem = e;
    while rem != 0 {
        let step = rem.clamp(-1000, 1000);
        let f = 2f64.powi(step);
        lo *= f;
        hi *= f;
        rem -= step;
    }
    // below the normal range the products may have been rounded
    if hi.abs() < f64::MIN_POSITIVE || lo.abs() < f64::MIN_POSITIVE {
        lo = lo.next_down().min(lo).max(0.0);
        hi = hi.next_up();
    }
    Interval::new(lo, hi)
}

impl PartialOrd for SeqValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SeqValue {
    fn cmp(&self, other: &Self) -> Ordering {
        // self/other = (c1/c2) 2^{e1-e2}; compare c1/c2 with 2^{e2-e1}
        cmp_with_pow2(&(&self.coef / &other.coef), &(&other.exp2 - &self.exp2))
    }
}

impl fmt::Display for SeqValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp2.is_zero() {
            write!(f, "{}", format_rational(&self.coef))
        } else {
            write!(f, "{}*2^({})", format_rational(&self.coef), format_rational(&self.exp2))
        }
    }
}

/// How a sequence is defined.
#[derive(Clone, Debug, PartialEq)]
pub enum SequenceKind {
    /// `a_k = C · 2^{-τk}`.
    Geometric { c: BigRational, tau: BigRational },
    /// Explicit values for `k = 0..len`.
    Table(Vec<BigRational>),
    /// `b_k = base_k^power · 2^{shift·k}`.
    Transformed {
        base: Box<DecreasingSequence>,
        power: u32,
        shift: BigRational,
    },
}

/// Positive nonincreasing sequence with `a_0 <= 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecreasingSequence {
    kind: SequenceKind,
}

impl DecreasingSequence {
    /// `C · 2^{-τk}`. A constant `C > 1` is scaled down to 1 with a warning.
    pub fn geometric(c: BigRational, tau: BigRational) -> Result<Self, ClassError> {
        if !c.is_positive() {
            return Err(ClassError::NonPositive(format_rational(&c)));
        }
        if tau.is_negative() {
            return Err(ClassError::NotDecreasing(0));
        }
        let c = if c > BigRational::one() {
            log::warn!("normalising C = {} to 1 so that a_0 <= 1", format_rational(&c));
            BigRational::one()
        } else {
            c
        };
        Ok(DecreasingSequence {
            kind: SequenceKind::Geometric { c, tau },
        })
    }

    /// Explicit table; rescaled by `1/a_0` (with a warning) when `a_0 > 1`.
    pub fn table(values: Vec<BigRational>) -> Result<Self, ClassError> {
        if values.is_empty() {
            return Err(ClassError::EmptyTable);
        }
        if let Some(v) = values.iter().find(|v| !v.is_positive()) {
            return Err(ClassError::NonPositive(format_rational(v)));
        }
        if let Some(k) = values.windows(2).position(|w| w[1] > w[0]) {
            return Err(ClassError::NotDecreasing(k as u32 + 1));
        }
        let values = if values[0] > BigRational::one() {
            log::warn!("normalising table by a_0 = {}", format_rational(&values[0]));
            let a0 = values[0].clone();
            values.into_iter().map(|v| v / &a0).collect()
        } else {
            values
        };
        Ok(DecreasingSequence {
            kind: SequenceKind::Table(values),
        })
    }

    pub fn kind(&self) -> &SequenceKind {
        &self.kind
    }

    /// Last valid index, if the domain is finite.
    pub fn k_max(&self) -> Option<u32> {
        match &self.kind {
            SequenceKind::Geometric { .. } => None,
            SequenceKind::Table(v) => Some(v.len() as u32 - 1),
            SequenceKind::Transformed { base, .. } => base.k_max(),
        }
    }

    pub fn value(&self, k: u32) -> Result<SeqValue, ClassError> {
        match &self.kind {
            SequenceKind::Geometric { c, tau } => Ok(SeqValue::new(
                c.clone(),
                -(tau * BigInt::from(k)),
            )),
            SequenceKind::Table(v) => v
                .get(k as usize)
                .map(|q| SeqValue::rational(q.clone()))
                .ok_or(ClassError::OutOfDomain {
                    k,
                    k_max: v.len() as u32 - 1,
                }),
            SequenceKind::Transformed { base, power, shift } => Ok(base
                .value(k)?
                .pow(*power)
                .mul_pow2(&(shift * BigInt::from(k)))),
        }
    }

    fn transformed(&self, power: u32, shift: BigRational) -> Self {
        DecreasingSequence {
            kind: SequenceKind::Transformed {
                base: Box::new(self.clone()),
                power,
                shift,
            },
        }
    }
}

fn check_params(n: u32, d: u32, l: u32) -> Result<(), ClassError> {
    if n == 0 || d == 0 || l == 0 {
        return Err(ClassError::BadParameters { n, d, l });
    }
    Ok(())
}

// n + l(n+1) + (n+1)^2 d l
fn block_exponent(n: u32, d: u32, l: u32) -> BigRational {
    let (n, d, l) = (n as i64, d as i64, l as i64);
    BigRational::from_integer(BigInt::from(n + l * (n + 1) + (n + 1) * (n + 1) * d * l))
}

/// `a'_k = 2^{-k(n + l(n+1) + (n+1)² dl)} a_k^{(n+1)l}`.
pub fn derived_sequence(
    a: &DecreasingSequence,
    n: u32,
    d: u32,
    l: u32,
) -> Result<DecreasingSequence, ClassError> {
    check_params(n, d, l)?;
    Ok(a.transformed((n + 1) * l, -block_exponent(n, d, l)))
}

/// `ρ` together with the first index `N` where `ρ_k < 1/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct RhoSequence {
    pub seq: DecreasingSequence,
    /// `None` when no index in the searched domain qualifies.
    pub threshold: Option<u32>,
}

/// Cap on the search for `N` when the domain is unbounded.
pub const RHO_SEARCH_LIMIT: u32 = 4096;

/// `ρ_k = 2^{-k(n + l(n+1) + (n+1)² dl)} a_k^{(n+1)l - 1}`.
pub fn rho_sequence(
    a: &DecreasingSequence,
    n: u32,
    d: u32,
    l: u32,
) -> Result<RhoSequence, ClassError> {
    check_params(n, d, l)?;
    let seq = a.transformed((n + 1) * l - 1, -block_exponent(n, d, l));
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let last = seq.k_max().unwrap_or(RHO_SEARCH_LIMIT);
    let mut threshold = None;
    for k in 0..=last {
        // ρ is nonincreasing, so the first index below 1/2 is N
        if seq.value(k)?.cmp_rational(&half) == Ordering::Less {
            threshold = Some(k);
            break;
        }
    }
    Ok(RhoSequence { seq, threshold })
}
