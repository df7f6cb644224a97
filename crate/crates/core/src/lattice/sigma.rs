//! Exact approximation profile `σ(α)_k = min |(α,i)|` over nonzero `i` with
//! `‖i‖ <= 2^k`.
//!
//! Ties are broken by `(value, ‖i‖², canonical coordinates in lex order)`,
//! so both engines return the same witness.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::enumerate::{level_of, visit_ball_slice};
use super::reduction::{fincke_pohst, gso, lll, EnumStop};
use super::{IntVector, NormKind, TargetVector};
use crate::interval::Interval;

/// The exhaustive engine runs when `(2·2^k + 1)^n` does not exceed this.
pub const EXHAUSTIVE_BUDGET: f64 = 1e8;
/// Node cap for the branch-and-bound engine.
pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SigmaError {
    #[error("branch-and-bound node budget of {budget} exceeded at k={k}")]
    BudgetExceeded { k: u32, budget: u64 },
    #[error("exhaustive enumeration for n={n}, k={k} exceeds the budget of 1e8 box points")]
    ExhaustiveTooLarge { n: usize, k: u32 },
    #[error("the sup norm is only supported by the exhaustive engine")]
    SupNormUnsupported,
    #[error("k={0} is too large (radius 2^k must stay below 2^31)")]
    LevelTooLarge(u32),
    #[error("basis reduction failed: {0}")]
    Reduction(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Auto,
    Exhaustive,
    BranchAndBound,
}

/// One row of a profile.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaEntry {
    pub k: u32,
    pub value: BigRational,
    pub witness: IntVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SigmaProfile {
    pub entries: Vec<SigmaEntry>,
}

impl SigmaProfile {
    pub fn get(&self, k: u32) -> Option<&SigmaEntry> {
        self.entries.iter().find(|e| e.k == k)
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.entries.windows(2).all(|w| w[1].value <= w[0].value)
    }

    /// Checks `‖witness‖ <= 2^k` and `|(α, witness)| = value` exactly.
    pub fn witnesses_certify(&self, alpha: &TargetVector) -> bool {
        self.entries.iter().all(|e| {
            !e.witness.is_zero()
                && e.witness.norm_sq() <= 1u128 << (2 * e.k)
                && alpha.abs_dot(&e.witness) == e.value
        })
    }
}

pub fn exhaustive_feasible(n: usize, k: u32) -> bool {
    (2.0 * 2f64.powi(k as i32) + 1.0).powi(n as i32) <= EXHAUSTIVE_BUDGET
}

/// `α = A / D` with integer numerators, plus float data for the filter.
pub(crate) struct ScaledForm {
    numer: Vec<BigInt>,
    denom: BigInt,
    approx: Vec<f64>,
    /// `Σ_j |α_j - approx_j|`
    coord_err: f64,
    abs_sum: f64,
}

impl ScaledForm {
    pub(crate) fn new(alpha: &TargetVector) -> Self {
        let denom = alpha
            .coords()
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let numer = alpha
            .coords()
            .iter()
            .map(|c| c.numer() * (&denom / c.denom()))
            .collect();
        let mut approx = Vec::new();
        let mut coord_err = 0.0;
        for c in alpha.coords() {
            let enc = Interval::from_rational(c);
            let a = enc.mid();
            coord_err += (enc.hi() - a).max(a - enc.lo());
            approx.push(a);
        }
        let abs_sum = approx.iter().map(|a| a.abs()).sum();
        ScaledForm {
            numer,
            denom,
            approx,
            coord_err,
            abs_sum,
        }
    }

    pub(crate) fn numer_abs(&self, i: &[i64]) -> BigInt {
        self.numer
            .iter()
            .zip(i)
            .fold(BigInt::zero(), |acc, (a, &c)| acc + a * c)
            .abs()
    }

    fn float_value(&self, i: &[i64]) -> f64 {
        self.approx
            .iter()
            .zip(i)
            .map(|(a, &c)| a * c as f64)
            .sum::<f64>()
            .abs()
    }

    /// Uniform bound on `| float_value(i) - |(α,i)| |` for `|i_j| <= bound`.
    fn float_error(&self, bound: f64) -> f64 {
        let n = self.approx.len() as f64;
        let gamma = 2.0 * (n + 2.0) * f64::EPSILON;
        (self.coord_err + gamma * self.abs_sum) * bound * 1.01 + f64::MIN_POSITIVE
    }

    fn value(&self, numer: BigInt) -> BigRational {
        BigRational::new(numer, self.denom.clone())
    }
}

/// Candidate ordered by `(numerator, ‖i‖², coordinates)`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Candidate {
    numer: BigInt,
    norm_sq: u128,
    coords: Vec<i64>,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.numer
            .cmp(&other.numer)
            .then(self.norm_sq.cmp(&other.norm_sq))
            .then_with(|| self.coords.cmp(&other.coords))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn merge_best(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn check_level(k: u32) -> Result<(), SigmaError> {
    if k > 30 {
        Err(SigmaError::LevelTooLarge(k))
    } else {
        Ok(())
    }
}

/// Exact profile for `k = 0..=big_k` in one pass over the ball of radius
/// `2^big_k`, parallel over leading-coordinate slices.
fn exhaustive_profile(
    alpha: &TargetVector,
    big_k: u32,
    kind: NormKind,
) -> Result<Vec<SigmaEntry>, SigmaError> {
    check_level(big_k)?;
    let n = alpha.dim();
    if !exhaustive_feasible(n, big_k) {
        return Err(SigmaError::ExhaustiveTooLarge { n, k: big_k });
    }
    let form = ScaledForm::new(alpha);
    let radius = 1u64 << big_k;
    let r2 = radius * radius;
    let levels = big_k as usize + 1;
    let level = |c: &[i64], s: u128| {
        let sup = c.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
        level_of(s, sup, kind) as usize
    };

    // pass 1: float minimum per level
    let per_level_float = (0..=radius as i64)
        .into_par_iter()
        .map(|lead| {
            let mut best = vec![f64::INFINITY; levels];
            visit_ball_slice(n, r2, kind, lead, |c, s| {
                let l = level(c, s);
                let v = form.float_value(c);
                if v < best[l] {
                    best[l] = v;
                }
            });
            best
        })
        .reduce(
            || vec![f64::INFINITY; levels],
            |a, b| a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect(),
        );
    let mut prefix = per_level_float;
    for l in 1..levels {
        prefix[l] = prefix[l].min(prefix[l - 1]);
    }
    let slack = 2.0 * form.float_error(radius as f64);

    // pass 2: exact minimum per level among filtered candidates
    let per_level_exact = (0..=radius as i64)
        .into_par_iter()
        .map(|lead| {
            let mut best: Vec<Option<Candidate>> = vec![None; levels];
            visit_ball_slice(n, r2, kind, lead, |c, s| {
                let l = level(c, s);
                if form.float_value(c) > prefix[l] + slack {
                    return;
                }
                let cand = Candidate {
                    numer: form.numer_abs(c),
                    norm_sq: s,
                    coords: c.to_vec(),
                };
                if best[l].as_ref().map_or(true, |b| cand < *b) {
                    best[l] = Some(cand);
                }
            });
            best
        })
        .reduce(
            || vec![None; levels],
            |a, b| a.into_iter().zip(b).map(|(x, y)| merge_best(x, y)).collect(),
        );

    let mut out = Vec::with_capacity(levels);
    let mut running: Option<Candidate> = None;
    for (k, cand) in per_level_exact.into_iter().enumerate() {
        running = merge_best(running, cand);
        let c = running.clone().expect("unit vectors lie in every ball");
        out.push(SigmaEntry {
            k: k as u32,
            value: form.value(c.numer),
            witness: IntVector(c.coords),
        });
    }
    Ok(out)
}

// Relative slack on the enumeration radius absorbing float error in the
// Gram–Schmidt data.
const RADIUS_SLACK: f64 = 1e-7;

/// Branch-and-bound: Fincke–Pohst enumeration of the embedding lattice with
/// rows `(e_j / R, λ α_j)`. A vector with `‖i‖ <= R` and `|(α,i)| <= best`
/// has squared length at most `1 + (λ best)²`, so shrinking `best` shrinks
/// the search ellipsoid. Leaves are decided exactly.
fn branch_and_bound(alpha: &TargetVector, k: u32, budget: u64) -> Result<SigmaEntry, SigmaError> {
    check_level(k)?;
    let n = alpha.dim();
    let form = ScaledForm::new(alpha);
    let radius = (1u64 << k) as f64;
    let r2 = 1u128 << (2 * k);

    // seed with the unit vectors
    let mut best: Option<Candidate> = None;
    for j in 0..n {
        let mut c = vec![0i64; n];
        c[j] = 1;
        let cand = Candidate {
            numer: form.numer_abs(&c),
            norm_sq: 1,
            coords: c,
        };
        best = merge_best(best, Some(cand));
    }
    let max_abs = form.approx.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let floor = (max_abs * 2f64.powi(-40)).max(f64::MIN_POSITIVE.sqrt());
    let err = form.float_error(radius);
    let mut nodes_used = 0u64;

    loop {
        let best_f = best_float(&form, best.as_ref().unwrap());
        let lambda = 1.0 / best_f.max(floor);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let mut row = vec![0.0; n + 1];
                row[j] = 1.0 / radius;
                row[n] = lambda * form.approx[j];
                row
            })
            .collect();
        let reduced = lll(&rows, 0.99).map_err(|e| SigmaError::Reduction(e.to_string()))?;
        let g = gso(&reduced.basis);
        let restart_at = best_f / 16.0;
        let mut restart = false;
        let mut bound_sq = (1.0 + (lambda * (best_f + err)).powi(2)) * (1.0 + RADIUS_SLACK);
        let remaining = budget.saturating_sub(nodes_used);
        let outcome = fincke_pohst(&g, bound_sq, remaining, |c| {
            let mut i = vec![0i64; n];
            for (m, &cm) in c.iter().enumerate() {
                if cm == 0 {
                    continue;
                }
                for (ij, u) in i.iter_mut().zip(&reduced.transform[m]) {
                    *ij += cm * u;
                }
            }
            let v = IntVector(i);
            if !v.is_canonical() {
                return None;
            }
            let s = v.norm_sq();
            if s > r2 {
                return None;
            }
            let cand = Candidate {
                numer: form.numer_abs(&v.0),
                norm_sq: s,
                coords: v.0,
            };
            if cand < *best.as_ref().unwrap() {
                best = Some(cand);
                let bf = best_float(&form, best.as_ref().unwrap());
                if bf < restart_at && bf > floor {
                    restart = true;
                    return Some(EnumStop::Abort);
                }
                bound_sq = (1.0 + (lambda * (bf + err)).powi(2)) * (1.0 + RADIUS_SLACK);
                return Some(EnumStop::Shrink(bound_sq));
            }
            None
        });
        nodes_used += outcome.nodes;
        if outcome.exhausted_budget {
            return Err(SigmaError::BudgetExceeded { k, budget });
        }
        if !restart {
            break;
        }
    }
    let c = best.expect("seeded");
    Ok(SigmaEntry {
        k,
        value: form.value(c.numer),
        witness: IntVector(c.coords),
    })
}

// Upper bound on the true value of the candidate, in floating point.
fn best_float(form: &ScaledForm, c: &Candidate) -> f64 {
    let exact = form.value(c.numer.clone());
    Interval::from_rational(&exact).hi()
}

/// `σ(α)_k` with automatic engine choice.
pub fn sigma(alpha: &TargetVector, k: u32) -> Result<SigmaEntry, SigmaError> {
    sigma_with(alpha, k, Engine::Auto, NormKind::Euclidean, DEFAULT_NODE_BUDGET)
}

pub fn sigma_with(
    alpha: &TargetVector,
    k: u32,
    engine: Engine,
    kind: NormKind,
    budget: u64,
) -> Result<SigmaEntry, SigmaError> {
    let exhaustive = match engine {
        Engine::Exhaustive => true,
        Engine::BranchAndBound => false,
        Engine::Auto => exhaustive_feasible(alpha.dim(), k),
    };
    if exhaustive {
        let mut rows = exhaustive_profile(alpha, k, kind)?;
        Ok(rows.pop().expect("k+1 rows"))
    } else if kind == NormKind::Sup {
        Err(SigmaError::SupNormUnsupported)
    } else {
        branch_and_bound(alpha, k, budget)
    }
}

/// Profile for `k = 0..=big_k`: one exhaustive pass up to the largest
/// feasible level, branch-and-bound beyond it.
pub fn sigma_profile(
    alpha: &TargetVector,
    big_k: u32,
    kind: NormKind,
    budget: u64,
) -> Result<SigmaProfile, SigmaError> {
    let n = alpha.dim();
    let feasible = (0..=big_k).take_while(|&k| exhaustive_feasible(n, k)).last();
    let mut entries = match feasible {
        Some(k0) => exhaustive_profile(alpha, k0, kind)?,
        None => Vec::new(),
    };
    let start = feasible.map_or(0, |k0| k0 + 1);
    for k in start..=big_k {
        if kind == NormKind::Sup {
            return Err(SigmaError::SupNormUnsupported);
        }
        entries.push(branch_and_bound(alpha, k, budget)?);
    }
    Ok(SigmaProfile { entries })
}
