//! Decreasing sequences, class membership up to a cutoff, bands around
//! small-divisor directions and the shell combinatorics of the dyadic blocks.

mod sequence;

pub use sequence::{
    derived_sequence, rho_sequence, DecreasingSequence, RhoSequence, SeqValue, SequenceKind,
    RHO_SEARCH_LIMIT,
};

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::Interval;
use crate::lattice::{
    sigma_profile, visit_ball_slice, IntVector, NormKind, SigmaError, SigmaProfile, TargetVector,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassError {
    #[error("sequence values must be positive, got {0}")]
    NonPositive(String),
    #[error("sequence increases at k={0}")]
    NotDecreasing(u32),
    #[error("empty table")]
    EmptyTable,
    #[error("k={k} is outside the sequence domain 0..={k_max}")]
    OutOfDomain { k: u32, k_max: u32 },
    #[error("n, d, l must be at least 1 (got n={n}, d={d}, l={l})")]
    BadParameters { n: u32, d: u32, l: u32 },
    #[error("exp_index is undefined for the zero vector")]
    ZeroVector,
    #[error("radius must be positive")]
    NonPositiveRadius,
    #[error("count for n={n}, k={k} exceeds the enumeration budget")]
    CountBudget { n: usize, k: u32 },
    #[error(transparent)]
    Sigma(#[from] SigmaError),
}

/// `floor(log2 ‖i‖) + 1`, i.e. the smallest `e` with `‖i‖² < 4^e`.
pub fn exp_index(i: &IntVector) -> Result<u32, ClassError> {
    exp_index_sq(i.norm_sq())
}

pub fn exp_index_sq(norm_sq: u128) -> Result<u32, ClassError> {
    if norm_sq == 0 {
        return Err(ClassError::ZeroVector);
    }
    let mut e = 0u32;
    while e < 64 && (1u128 << (2 * e)) <= norm_sq {
        e += 1;
    }
    Ok(e)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum VerdictStatus {
    /// `σ(α)_k >= a_k` for every `k <= cutoff`.
    InClassUpTo { k: u32 },
    /// First level `k` with `σ(α)_k < a_k`; `i` attains `σ(α)_k`.
    Violated {
        #[serde(serialize_with = "ser_intvec", deserialize_with = "de_intvec")]
        i: IntVector,
        k: u32,
        exp_index: u32,
        #[serde(serialize_with = "ser_rational", deserialize_with = "de_rational")]
        value: BigRational,
    },
}

fn ser_intvec<S: serde::Serializer>(v: &IntVector, s: S) -> Result<S::Ok, S::Error> {
    v.0.serialize(s)
}

fn de_intvec<'de, D: serde::Deserializer<'de>>(d: D) -> Result<IntVector, D::Error> {
    Ok(IntVector(Vec::<i64>::deserialize(d)?))
}

fn de_rational<'de, D: serde::Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
    let text = String::deserialize(d)?;
    crate::scalar::parse_rational(&text).map_err(serde::de::Error::custom)
}

fn ser_rational<S: serde::Serializer>(v: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&crate::scalar::format_rational(v))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassVerdict {
    pub cutoff: u32,
    #[serde(flatten)]
    pub status: VerdictStatus,
}

impl ClassVerdict {
    pub fn is_in_class(&self) -> bool {
        matches!(self.status, VerdictStatus::InClassUpTo { .. })
    }

    /// Re-derives a violation from scratch: `‖i‖ <= 2^k`, `|(α,i)| = value`
    /// and `value < a_{min(k, exp_index(i))}`.
    pub fn certify(&self, alpha: &TargetVector, a: &DecreasingSequence) -> bool {
        match &self.status {
            VerdictStatus::InClassUpTo { .. } => true,
            VerdictStatus::Violated {
                i,
                k,
                exp_index: e,
                value,
            } => {
                let Ok(e2) = exp_index(i) else { return false };
                let Ok(bound) = a.value((*k).min(e2)) else {
                    return false;
                };
                *e == e2
                    && i.norm_sq() <= 1u128 << (2 * k)
                    && alpha.abs_dot(i) == *value
                    && bound.cmp_rational(value) == Ordering::Greater
            }
        }
    }
}

/// Verdict from the exact profile `σ(α)_0..σ(α)_K`.
pub fn membership(
    alpha: &TargetVector,
    a: &DecreasingSequence,
    cutoff: u32,
    budget: u64,
) -> Result<ClassVerdict, ClassError> {
    if let Some(k_max) = a.k_max() {
        if cutoff > k_max {
            return Err(ClassError::OutOfDomain { k: cutoff, k_max });
        }
    }
    let profile = sigma_profile(alpha, cutoff, NormKind::Euclidean, budget)?;
    verdict_from_profile(&profile, a, cutoff)
}

pub fn verdict_from_profile(
    profile: &SigmaProfile,
    a: &DecreasingSequence,
    cutoff: u32,
) -> Result<ClassVerdict, ClassError> {
    for e in profile.entries.iter().filter(|e| e.k <= cutoff) {
        if a.value(e.k)?.cmp_rational(&e.value) == Ordering::Greater {
            return Ok(ClassVerdict {
                cutoff,
                status: VerdictStatus::Violated {
                    i: e.witness.clone(),
                    k: e.k,
                    exp_index: exp_index(&e.witness)?,
                    value: e.value.clone(),
                },
            });
        }
    }
    Ok(ClassVerdict {
        cutoff,
        status: VerdictStatus::InClassUpTo { k: cutoff },
    })
}

/// `M_i = {β : |(β,i)| < ρ_k a_k}` with `k = exp_index(i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Band {
    pub i: IntVector,
    pub k: u32,
    /// `ρ_k a_k`, the bound on `|(β,i)|`.
    pub halfwidth: SeqValue,
    /// `ρ_k a_k / ‖i‖`, half the euclidean width of the slab.
    pub distance_halfwidth: f64,
    /// Whether `a_k / 2^{k+1} < r`.
    pub in_ir: bool,
}

/// Per-level data needed to decide which bands can reach a ball.
#[derive(Clone, Debug)]
pub struct LevelData {
    pub k: u32,
    pub a: SeqValue,
    pub rho: SeqValue,
    /// `ρ_k a_k`
    pub halfwidth: SeqValue,
    /// Enclosure of `(1 - ρ_k) a_k / 2^k`.
    pub exclusion: Interval,
    /// Enclosure of `a_k / 2^{k+1}`.
    pub ir_threshold: Interval,
}

pub fn level_data(
    a: &DecreasingSequence,
    rho: &DecreasingSequence,
    k: u32,
) -> Result<LevelData, ClassError> {
    let ak = a.value(k)?;
    let rk = rho.value(k)?;
    let ae = ak.enclosure();
    let re = rk.enclosure();
    let scale = Interval::point(2f64.powi(-(k as i32)));
    let exclusion = (Interval::ONE - re) * ae * scale;
    let ir_threshold = ae * scale.scale(0.5);
    Ok(LevelData {
        k,
        halfwidth: rk.mul(&ak),
        a: ak,
        rho: rk,
        exclusion,
        ir_threshold,
    })
}

/// Whether a band of level `k` can meet a ball of radius `r` around a point
/// of `C(a)`: `|(β,i)| >= a_k - r ‖i‖ > a_k - r 2^k`, so the band is missed
/// as soon as `r <= (1 - ρ_k) a_k / 2^k`.
pub fn level_may_meet(ld: &LevelData, r: f64) -> bool {
    !(r <= ld.exclusion.lo())
}

/// All bands with `exp_index(i) <= cutoff` that can meet `B(α, r)`,
/// one per antipodal pair.
pub fn candidate_bands(
    a: &DecreasingSequence,
    rho: &DecreasingSequence,
    r: f64,
    n: usize,
    cutoff: u32,
) -> Result<Vec<Band>, ClassError> {
    if !(r > 0.0) {
        return Err(ClassError::NonPositiveRadius);
    }
    let levels: Vec<LevelData> = (1..=cutoff)
        .map(|k| level_data(a, rho, k))
        .collect::<Result<_, _>>()?;
    let live: Vec<bool> = levels.iter().map(|ld| level_may_meet(ld, r)).collect();
    if !live.iter().any(|&x| x) {
        return Ok(Vec::new());
    }
    let r2 = (1u64 << (2 * cutoff)) - 1;
    let lead_max = r2.sqrt() as i64;
    let mut bands: Vec<Band> = (0..=lead_max)
        .into_par_iter()
        .map(|lead| {
            let mut out = Vec::new();
            visit_ball_slice(n, r2, NormKind::Euclidean, lead, |c, s| {
                let k = exp_index_sq(s).expect("nonzero");
                let ld = &levels[k as usize - 1];
                if live[k as usize - 1] {
                    let norm = (s as f64).sqrt();
                    out.push(Band {
                        i: IntVector(c.to_vec()),
                        k,
                        distance_halfwidth: ld.halfwidth.to_f64() / norm,
                        halfwidth: ld.halfwidth.clone(),
                        in_ir: r > ld.ir_threshold.lo(),
                    });
                }
            });
            out
        })
        .flatten()
        .collect();
    bands.sort_by(|x, y| x.i.cmp(&y.i));
    Ok(bands)
}

/// Number of points with `‖i‖² <= r2` in `Z^n` (origin included).
fn ball_count(n: usize, r2: u64) -> u128 {
    if n == 1 {
        return 2 * r2.sqrt() as u128 + 1;
    }
    let m = r2.sqrt();
    let mut total = ball_count(n - 1, r2);
    for x in 1..=m {
        total += 2 * ball_count(n - 1, r2 - x * x);
    }
    total
}

/// `#{i ∈ Z^n \ 0 : exp_index(i) = k}`, i.e. points with `4^{k-1} <= ‖i‖² < 4^k`.
pub fn shell_count(n: usize, k: u32) -> Result<u128, ClassError> {
    if n == 0 || k == 0 {
        return Err(ClassError::BadParameters {
            n: n as u32,
            d: 1,
            l: 1,
        });
    }
    // the recursion visits about (2^k)^(n-1) rows
    if (k as f64) * (n as f64 - 1.0) > 30.0 || k > 31 {
        return Err(ClassError::CountBudget { n, k });
    }
    let upper = (1u64 << (2 * k)) - 1;
    let lower = (1u64 << (2 * (k - 1))) - 1;
    Ok(ball_count(n, upper) - ball_count(n, lower))
}

/// `Σ_{exp_index(i) <= K} 2^{-exp_index(i)(n+1)}`, exactly.
pub fn tail_sum_exact(n: usize, cutoff: u32) -> Result<BigRational, ClassError> {
    let mut total = BigRational::from_integer(BigInt::from(0));
    for k in 1..=cutoff {
        let count = BigInt::from(shell_count(n, k)?);
        let weight = BigInt::one() << (k as usize * (n + 1));
        total += BigRational::new(count, weight);
    }
    Ok(total)
}

pub fn tail_sum(n: usize, cutoff: u32) -> Result<f64, ClassError> {
    Ok(Interval::from_rational(&tail_sum_exact(n, cutoff)?).mid())
}
