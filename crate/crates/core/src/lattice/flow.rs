//! The embedding `[α] = {(i, (α,i))}` and the diagonal flow
//! `g_t = diag(e^{-t}, .., e^{-t}, e^{nt})` on `R^{n+1}`.

use thiserror::Error;

use super::{IntVector, TargetVector};
use crate::exterior::{DiscreteSubgroup, ExteriorError};
use crate::interval::Interval;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LemmaError {
    #[error("a must be positive, got {0}")]
    NonPositive(f64),
    #[error("a = {a} exceeds ‖i‖ = {norm}; t would be negative")]
    AboveNorm { a: f64, norm: f64 },
    #[error("i must be nonzero")]
    ZeroVector,
}

/// Basis rows `(e_j, α_j)` in double precision.
pub fn schmidt_embedding(alpha: &TargetVector) -> DiscreteSubgroup {
    let n = alpha.dim();
    let rows = (0..n)
        .map(|j| {
            let mut row = vec![0.0; n + 1];
            row[j] = 1.0;
            row[n] = alpha.shadow()[j];
            row
        })
        .collect();
    DiscreteSubgroup::new(rows).expect("rows (e_j, α_j) are independent")
}

/// Basis rows `(e_j, α_j)` as interval enclosures of the exact rationals.
pub fn schmidt_enclosure(alpha: &TargetVector) -> Vec<Vec<Interval>> {
    let n = alpha.dim();
    let enc = alpha.enclosure();
    (0..n)
        .map(|j| {
            let mut row = vec![Interval::ZERO; n + 1];
            row[j] = Interval::ONE;
            row[n] = enc[j];
            row
        })
        .collect()
}

/// `g_t` acting on `R^{n+1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GFlow {
    pub t: f64,
    pub n: usize,
}

impl GFlow {
    pub fn new(t: f64, n: usize) -> Self {
        GFlow { t, n }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![(-self.t).exp(); self.n];
        d.push((self.n as f64 * self.t).exp());
        d
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n + 1, "g_t acts on R^(n+1)");
        v.iter().zip(self.diagonal()).map(|(x, s)| x * s).collect()
    }

    pub fn apply_subgroup(&self, gamma: &DiscreteSubgroup) -> Result<DiscreteSubgroup, ExteriorError> {
        if gamma.ambient_dim() != self.n + 1 {
            return Err(ExteriorError::DimensionMismatch(self.n + 1, gamma.ambient_dim()));
        }
        DiscreteSubgroup::new(gamma.basis().iter().map(|r| self.apply(r)).collect())
    }

    pub fn diagonal_enclosure(&self) -> Vec<Interval> {
        let t = Interval::point(self.t);
        let mut d = vec![(-t).exp(); self.n];
        d.push((t.scale(self.n as f64)).exp());
        d
    }

    pub fn apply_enclosure(&self, rows: &[Vec<Interval>]) -> Vec<Vec<Interval>> {
        let d = self.diagonal_enclosure();
        rows.iter()
            .map(|r| r.iter().zip(&d).map(|(x, s)| *x * *s).collect())
            .collect()
    }
}

/// Enclosure of the basis of `g_t [α]`.
pub fn flowed_embedding_enclosure(alpha: &TargetVector, t: f64) -> Vec<Vec<Interval>> {
    GFlow::new(t, alpha.dim()).apply_enclosure(&schmidt_enclosure(alpha))
}

/// `‖g_t (i, (α,i))‖`, the length of one explicit vector of `g_t[α]`, hence
/// an upper bound for `δ(g_t[α])`. Returned as an enclosure.
pub fn single_vector_bound(alpha: &TargetVector, i: &IntVector, t: f64) -> Interval {
    let n = alpha.dim();
    let v = Interval::from_rational(&alpha.dot(i));
    let tt = Interval::point(t);
    let shrink = (-tt).exp();
    let grow = tt.scale(n as f64).exp();
    let s = Interval::point(i.norm_sq() as f64);
    (shrink.sqr() * s + (grow * v).sqr()).sqrt()
}

fn check(a: f64, norm: f64) -> Result<(), LemmaError> {
    if norm == 0.0 {
        return Err(LemmaError::ZeroVector);
    }
    if !(a > 0.0) {
        return Err(LemmaError::NonPositive(a));
    }
    if a > norm {
        return Err(LemmaError::AboveNorm { a, norm });
    }
    Ok(())
}

/// `ε = √2 (a ‖i‖^n)^{1/(n+1)}` and `t = ln(‖i‖ / a) / (n+1)`.
pub fn lemma_eps_t(a: f64, i: &IntVector, n: usize) -> Result<(f64, f64), LemmaError> {
    let norm = i.norm();
    check(a, norm)?;
    let np1 = (n + 1) as f64;
    let eps = 2f64.sqrt() * (a * norm.powi(n as i32)).powf(1.0 / np1);
    let t = (norm / a).ln() / np1;
    Ok((eps, t))
}

/// Enclosures of `ε` and `t`, from `a` and the exact `‖i‖²`.
pub fn lemma_eps_enclosure(a: f64, i: &IntVector, n: usize) -> Result<(Interval, Interval), LemmaError> {
    check(a, i.norm())?;
    let np1 = Interval::point((n + 1) as f64);
    let ln_a = Interval::point(a).ln();
    let ln_norm = Interval::point(i.norm_sq() as f64).ln().scale(0.5);
    let eps = Interval::point(2.0).sqrt() * (ln_a + ln_norm.scale(n as f64)).div(&np1).exp();
    let t = (ln_norm - ln_a).div(&np1);
    Ok((eps, t))
}
