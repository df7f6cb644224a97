//! LLL reduction, Fincke–Pohst enumeration and certified shortest vectors.

use thiserror::Error;

use crate::exterior::DiscreteSubgroup;
use crate::interval::Interval;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeltaError {
    #[error("basis rows are linearly dependent")]
    RankDeficient,
    #[error("empty basis")]
    Empty,
    #[error("enumeration exceeded {0} nodes")]
    EnumerationOverflow(u64),
    #[error("integer transform overflowed during reduction")]
    TransformOverflow,
}

/// Reduced basis with the unimodular transform: `basis[m] = Σ_j transform[m][j] · input[j]`.
#[derive(Clone, Debug)]
pub struct Reduced {
    pub basis: Vec<Vec<f64>>,
    pub transform: Vec<Vec<i64>>,
}

/// Gram–Schmidt data: `mu[m][q]` for `q < m` and `bstar_sq[m] = ‖b*_m‖²`.
#[derive(Clone, Debug)]
pub(crate) struct Gso {
    pub mu: Vec<Vec<f64>>,
    pub bstar_sq: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn gso(b: &[Vec<f64>]) -> Gso {
    let r = b.len();
    let mut mu = vec![vec![0.0; r]; r];
    let mut bstar: Vec<Vec<f64>> = Vec::with_capacity(r);
    let mut bstar_sq = Vec::with_capacity(r);
    for m in 0..r {
        let mut v = b[m].clone();
        for q in 0..m {
            let coef = if bstar_sq[q] > 0.0 {
                dot(&b[m], &bstar[q]) / bstar_sq[q]
            } else {
                0.0
            };
            mu[m][q] = coef;
            for (vi, bq) in v.iter_mut().zip(&bstar[q]) {
                *vi -= coef * bq;
            }
        }
        bstar_sq.push(dot(&v, &v));
        bstar.push(v);
    }
    Gso { mu, bstar_sq }
}

const MAX_LLL_STEPS: usize = 200_000;

/// Textbook LLL with parameter `delta` on the rows of `basis`.
pub fn lll(basis: &[Vec<f64>], delta: f64) -> Result<Reduced, DeltaError> {
    let r = basis.len();
    if r == 0 {
        return Err(DeltaError::Empty);
    }
    let mut b = basis.to_vec();
    let mut u: Vec<Vec<i64>> = (0..r)
        .map(|m| (0..r).map(|j| (m == j) as i64).collect())
        .collect();
    let mut g = gso(&b);
    if g.bstar_sq.iter().any(|&x| !(x > 0.0)) {
        return Err(DeltaError::RankDeficient);
    }
    let mut k = 1;
    let mut steps = 0;
    while k < r && steps < MAX_LLL_STEPS {
        steps += 1;
        for j in (0..k).rev() {
            let q = g.mu[k][j].round();
            if q == 0.0 {
                continue;
            }
            if q.abs() > 2f64.powi(62) {
                return Err(DeltaError::TransformOverflow);
            }
            let qi = q as i64;
            for t in 0..b[k].len() {
                b[k][t] -= q * b[j][t];
            }
            for t in 0..r {
                u[k][t] = u[j][t]
                    .checked_mul(qi)
                    .and_then(|p| u[k][t].checked_sub(p))
                    .ok_or(DeltaError::TransformOverflow)?;
            }
            for t in 0..j {
                g.mu[k][t] -= q * g.mu[j][t];
            }
            g.mu[k][j] -= q;
        }
        let lovasz = (delta - g.mu[k][k - 1].powi(2)) * g.bstar_sq[k - 1];
        if g.bstar_sq[k] >= lovasz {
            k += 1;
        } else {
            b.swap(k, k - 1);
            u.swap(k, k - 1);
            g = gso(&b);
            k = (k - 1).max(1);
        }
    }
    Ok(Reduced {
        basis: b,
        transform: u,
    })
}

/// Returned by an enumeration visitor to steer the search.
pub(crate) enum EnumStop {
    /// Continue with a smaller squared radius.
    Shrink(f64),
    /// Stop immediately.
    Abort,
}

pub(crate) struct EnumOutcome {
    pub nodes: u64,
    pub exhausted_budget: bool,
}

/// Fincke–Pohst enumeration of coefficient vectors `c` with
/// `Σ_m bstar_sq[m] (c_m + Σ_{q>m} mu[q][m] c_q)² <= bound_sq`, depth first
/// from the last coordinate. The zero vector is skipped.
pub(crate) fn fincke_pohst<F>(g: &Gso, bound_sq: f64, budget: u64, mut visit: F) -> EnumOutcome
where
    F: FnMut(&[i64]) -> Option<EnumStop>,
{
    let r = g.bstar_sq.len();
    let mut st = FpState {
        g,
        bound: bound_sq,
        nodes: 0,
        budget,
        stop: false,
        exhausted: false,
        c: vec![0; r],
    };
    st.rec(r, 0.0, &mut visit);
    EnumOutcome {
        nodes: st.nodes,
        exhausted_budget: st.exhausted,
    }
}

struct FpState<'a> {
    g: &'a Gso,
    bound: f64,
    nodes: u64,
    budget: u64,
    stop: bool,
    exhausted: bool,
    c: Vec<i64>,
}

impl FpState<'_> {
    // `level` counts the coordinates still free; coordinate `level - 1` is set here.
    fn rec<F>(&mut self, level: usize, partial: f64, visit: &mut F)
    where
        F: FnMut(&[i64]) -> Option<EnumStop>,
    {
        if level == 0 {
            if self.c.iter().any(|&x| x != 0) {
                match visit(&self.c) {
                    Some(EnumStop::Shrink(b)) => self.bound = self.bound.min(b),
                    Some(EnumStop::Abort) => self.stop = true,
                    None => {}
                }
            }
            return;
        }
        let p = level - 1;
        let r = self.c.len();
        let center: f64 = -(p + 1..r).map(|q| self.g.mu[q][p] * self.c[q] as f64).sum::<f64>();
        let room = (self.bound - partial) / self.g.bstar_sq[p];
        if room < 0.0 {
            return;
        }
        let w = room.sqrt();
        let lo = (center - w).ceil() as i64;
        let hi = (center + w).floor() as i64;
        for v in lo..=hi {
            if self.stop {
                return;
            }
            self.nodes += 1;
            if self.nodes > self.budget {
                self.exhausted = true;
                self.stop = true;
                return;
            }
            let y = v as f64 - center;
            let np = partial + y * y * self.g.bstar_sq[p];
            if np > self.bound {
                continue;
            }
            self.c[p] = v;
            self.rec(p, np, visit);
        }
        self.c[p] = 0;
    }
}

/// Shortest nonzero vector of a discrete subgroup.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaResult {
    /// Float estimate of `δ(Γ)`.
    pub value: f64,
    /// Enclosure of `δ(Γ)`; rigorous when `certified`.
    pub enclosure: Interval,
    /// Coefficients of the minimiser in the given basis (first nonzero positive).
    pub coefficients: Vec<i64>,
    /// False when interval Gram–Schmidt broke down and the plain float
    /// enumeration was used instead.
    pub certified: bool,
}

pub const DELTA_NODE_BUDGET: u64 = 50_000_000;

/// `δ(Γ)` for a subgroup with double-precision basis.
pub fn delta(gamma: &DiscreteSubgroup) -> Result<DeltaResult, DeltaError> {
    let rows: Vec<Vec<Interval>> = gamma
        .basis()
        .iter()
        .map(|r| r.iter().map(|&x| Interval::point(x)).collect())
        .collect();
    delta_enclosed(&rows)
}

/// `δ` for a basis known only up to interval enclosures of its entries; the
/// result encloses `δ` of every basis inside the boxes.
pub fn delta_enclosed(rows: &[Vec<Interval>]) -> Result<DeltaResult, DeltaError> {
    if rows.is_empty() {
        return Err(DeltaError::Empty);
    }
    let mids: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().map(Interval::mid).collect())
        .collect();
    let reduced = lll(&mids, 0.99)?;
    let r = rows.len();
    // reduced rows as enclosures
    let red_rows: Vec<Vec<Interval>> = reduced
        .transform
        .iter()
        .map(|u| combine(rows, u))
        .collect();
    match interval_gso(&red_rows) {
        Some(ig) => certified_search(rows, &red_rows, &ig, &reduced, r),
        None => float_search(rows, &reduced),
    }
}

fn combine(rows: &[Vec<Interval>], coef: &[i64]) -> Vec<Interval> {
    let m = rows[0].len();
    let mut out = vec![Interval::ZERO; m];
    for (row, &c) in rows.iter().zip(coef) {
        if c == 0 {
            continue;
        }
        let ci = Interval::point(c as f64);
        for (o, x) in out.iter_mut().zip(row) {
            *o = *o + ci * *x;
        }
    }
    out
}

fn norm_sq(v: &[Interval]) -> Interval {
    v.iter().fold(Interval::ZERO, |acc, x| acc + x.sqr())
}

struct IntervalGso {
    mu: Vec<Vec<Interval>>,
    bstar_sq: Vec<Interval>,
}

fn interval_gso(b: &[Vec<Interval>]) -> Option<IntervalGso> {
    let r = b.len();
    let mut mu = vec![vec![Interval::ZERO; r]; r];
    let mut bstar: Vec<Vec<Interval>> = Vec::with_capacity(r);
    let mut bstar_sq: Vec<Interval> = Vec::with_capacity(r);
    for m in 0..r {
        let mut v = b[m].clone();
        for q in 0..m {
            let num = b[m]
                .iter()
                .zip(&bstar[q])
                .fold(Interval::ZERO, |acc, (x, y)| acc + *x * *y);
            let coef = num.div(&bstar_sq[q]);
            mu[m][q] = coef;
            for (vi, bq) in v.iter_mut().zip(&bstar[q]) {
                *vi = *vi - coef * *bq;
            }
        }
        let sq = norm_sq(&v);
        if !(sq.lo() > 0.0) {
            return None;
        }
        bstar_sq.push(sq);
        bstar.push(v);
    }
    Some(IntervalGso { mu, bstar_sq })
}

fn canonical_coeffs(mut c: Vec<i64>) -> Vec<i64> {
    if c.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
        for x in &mut c {
            *x = -*x;
        }
    }
    c
}

fn original_coeffs(reduced: &Reduced, c: &[i64]) -> Vec<i64> {
    let r = c.len();
    (0..r)
        .map(|j| (0..r).map(|m| c[m] * reduced.transform[m][j]).sum())
        .collect()
}

struct Best {
    lo: f64,
    hi: f64,
    hi_coeffs: Vec<i64>,
}

fn certified_search(
    rows: &[Vec<Interval>],
    red_rows: &[Vec<Interval>],
    ig: &IntervalGso,
    reduced: &Reduced,
    r: usize,
) -> Result<DeltaResult, DeltaError> {
    let first = norm_sq(&red_rows[0]);
    let mut unit = vec![0i64; r];
    unit[0] = 1;
    let mut best = Best {
        lo: first.lo(),
        hi: first.hi(),
        hi_coeffs: unit,
    };
    let mut c = vec![0i64; r];
    let mut nodes = 0u64;
    interval_rec(r, Interval::ZERO, ig, red_rows, &mut c, &mut best, &mut nodes)?;
    let coefficients = canonical_coeffs(original_coeffs(reduced, &best.hi_coeffs));
    let witness = norm_sq(&combine(rows, &coefficients)).sqrt();
    let enclosure = Interval::new(best.lo.max(0.0).min(best.hi), best.hi).sqrt();
    Ok(DeltaResult {
        value: witness.mid(),
        enclosure,
        coefficients,
        certified: true,
    })
}

#[allow(clippy::too_many_arguments)]
fn interval_rec(
    level: usize,
    partial: Interval,
    ig: &IntervalGso,
    red_rows: &[Vec<Interval>],
    c: &mut [i64],
    best: &mut Best,
    nodes: &mut u64,
) -> Result<(), DeltaError> {
    let r = c.len();
    if level == 0 {
        if c.iter().all(|&x| x == 0) {
            return Ok(());
        }
        let v = norm_sq(&combine(red_rows, c));
        best.lo = best.lo.min(v.lo());
        if v.hi() < best.hi {
            best.hi = v.hi();
            best.hi_coeffs = c.to_vec();
        }
        return Ok(());
    }
    let p = level - 1;
    let center = (p + 1..r).fold(Interval::ZERO, |acc, q| {
        acc - ig.mu[q][p] * Interval::point(c[q] as f64)
    });
    let room = best.hi - partial.lo();
    if room < 0.0 {
        return Ok(());
    }
    let w = Interval::point(room)
        .div(&Interval::point(ig.bstar_sq[p].lo()))
        .sqrt()
        .hi();
    let lo = (center.lo() - w).floor() as i64;
    let hi = (center.hi() + w).ceil() as i64;
    for v in lo..=hi {
        *nodes += 1;
        if *nodes > DELTA_NODE_BUDGET {
            return Err(DeltaError::EnumerationOverflow(DELTA_NODE_BUDGET));
        }
        let y = Interval::point(v as f64) - center;
        let np = partial + y.sqr() * ig.bstar_sq[p];
        if np.lo() > best.hi {
            continue;
        }
        c[p] = v;
        interval_rec(p, np, ig, red_rows, c, best, nodes)?;
    }
    c[p] = 0;
    Ok(())
}

fn float_search(rows: &[Vec<Interval>], reduced: &Reduced) -> Result<DeltaResult, DeltaError> {
    let g = gso(&reduced.basis);
    if g.bstar_sq.iter().any(|&x| !(x > 0.0)) {
        return Err(DeltaError::RankDeficient);
    }
    let first = dot(&reduced.basis[0], &reduced.basis[0]);
    let r = reduced.basis.len();
    let mut best_c = {
        let mut e = vec![0; r];
        e[0] = 1;
        e
    };
    let mut best = first;
    let outcome = fincke_pohst(&g, first * (1.0 + 1e-9), DELTA_NODE_BUDGET, |c| {
        let v: Vec<f64> = (0..reduced.basis[0].len())
            .map(|t| (0..r).map(|m| c[m] as f64 * reduced.basis[m][t]).sum())
            .collect();
        let s = dot(&v, &v);
        if s < best {
            best = s;
            best_c = c.to_vec();
            return Some(EnumStop::Shrink(s * (1.0 + 1e-9)));
        }
        None
    });
    if outcome.exhausted_budget {
        return Err(DeltaError::EnumerationOverflow(DELTA_NODE_BUDGET));
    }
    let coefficients = canonical_coeffs(original_coeffs(reduced, &best_c));
    let enc = norm_sq(&combine(rows, &coefficients)).sqrt();
    Ok(DeltaResult {
        value: enc.mid(),
        enclosure: enc,
        coefficients,
        certified: false,
    })
}
