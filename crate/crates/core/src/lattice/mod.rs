//! Integer-point enumeration, approximation profiles, the embedding lattice
//! of a target vector, the diagonal flow and shortest vectors.

mod enumerate;
mod flow;
mod reduction;
mod sigma;

pub use enumerate::{
    enumerate_ball, enumerate_ball_sq, level_of, radius_sq_floor, visit_ball_slice, BallIter,
};
pub use flow::{
    flowed_embedding_enclosure, lemma_eps_enclosure, lemma_eps_t, schmidt_embedding,
    schmidt_enclosure, single_vector_bound, GFlow, LemmaError,
};
pub use reduction::{delta, delta_enclosed, lll, DeltaError, DeltaResult, Reduced};
pub use sigma::{
    exhaustive_feasible, sigma, sigma_profile, sigma_with, Engine, SigmaEntry, SigmaError,
    SigmaProfile, DEFAULT_NODE_BUDGET, EXHAUSTIVE_BUDGET,
};

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::interval::Interval;
use crate::scalar::{self, ScalarError};

/// Which norm measures integer vectors. Euclidean is the default; the sup
/// norm is available for exploration in the exhaustive engine only.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    #[default]
    Euclidean,
    Sup,
}

/// Integer vector `i ∈ Z^n`. Coordinates are `i64`; every radius used here
/// stays far below `2^31`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IntVector(pub Vec<i64>);

impl IntVector {
    pub fn new(coords: Vec<i64>) -> Self {
        IntVector(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn norm_sq(&self) -> u128 {
        self.0.iter().map(|&c| (c as i128 * c as i128) as u128).sum()
    }

    pub fn norm(&self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn sup_norm(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    /// Representative of `{i, -i}` whose first nonzero coordinate is positive.
    pub fn canonical(&self) -> IntVector {
        match self.0.iter().find(|&&c| c != 0) {
            Some(&c) if c < 0 => IntVector(self.0.iter().map(|x| -x).collect()),
            _ => self.clone(),
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.0.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64).collect()
    }

    /// `"a;b;c"`, the witness format of the CSV exports.
    pub fn to_semicolon(&self) -> String {
        self.0
            .iter()
            .map(i64::to_string)
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn parse_semicolon(text: &str) -> Option<IntVector> {
        text.split(';')
            .map(|t| t.trim().parse().ok())
            .collect::<Option<Vec<i64>>>()
            .map(IntVector)
    }
}

impl fmt::Display for IntVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Target vector `α ∈ R^n` held as exact rationals, with a double shadow.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetVector {
    coords: Vec<BigRational>,
    shadow: Vec<f64>,
    /// Largest snap radius among coordinates that came from irrationals.
    snap_radius: f64,
}

impl TargetVector {
    pub fn new(coords: Vec<BigRational>) -> Self {
        assert!(!coords.is_empty(), "target vector needs n >= 1");
        let shadow = coords.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect();
        TargetVector {
            coords,
            shadow,
            snap_radius: 0.0,
        }
    }

    /// Parses tokens such as `"1/2"`, `"phi"` or `"sqrt(5)"`.
    pub fn parse(tokens: &[impl AsRef<str>], snap_bits: u32) -> Result<Self, ScalarError> {
        let mut coords = Vec::with_capacity(tokens.len());
        let mut radius = 0.0f64;
        for t in tokens {
            let s = scalar::parse_real(t.as_ref(), snap_bits)?;
            radius = radius.max(s.radius);
            coords.push(s.value);
        }
        if coords.is_empty() {
            return Err(ScalarError::Syntax(String::new()));
        }
        let mut v = TargetVector::new(coords);
        v.snap_radius = radius;
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.coords
    }

    pub fn shadow(&self) -> &[f64] {
        &self.shadow
    }

    pub fn snap_radius(&self) -> f64 {
        self.snap_radius
    }

    /// `(α, i)` exactly.
    pub fn dot(&self, i: &IntVector) -> BigRational {
        assert_eq!(i.dim(), self.dim(), "dimension mismatch");
        self.coords
            .iter()
            .zip(i.coords())
            .fold(BigRational::zero(), |acc, (a, &c)| acc + a * BigInt::from(c))
    }

    pub fn abs_dot(&self, i: &IntVector) -> BigRational {
        self.dot(i).abs()
    }

    /// `λα` for a rational `λ`.
    pub fn scale(&self, lambda: &BigRational) -> TargetVector {
        let mut v = TargetVector::new(self.coords.iter().map(|c| c * lambda).collect());
        v.snap_radius = self.snap_radius * lambda.abs().to_f64().unwrap_or(f64::INFINITY);
        v
    }

    pub fn enclosure(&self) -> Vec<Interval> {
        self.coords.iter().map(Interval::from_rational).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;

    #[test]
    fn canonical_representatives() {
        assert_eq!(IntVector(vec![0, -3, 1]).canonical(), IntVector(vec![0, 3, -1]));
        assert!(IntVector(vec![0, 2, -1]).is_canonical());
        assert!(!IntVector(vec![0, 0]).is_canonical());
    }

    #[test]
    fn semicolon_round_trip() {
        let v = IntVector(vec![3, -2, 0]);
        assert_eq!(v.to_semicolon(), "3;-2;0");
        assert_eq!(IntVector::parse_semicolon("3;-2;0"), Some(v));
    }

    #[test]
    fn exact_dot_product() {
        let a = TargetVector::new(vec![rational(1, 1), rational(1, 2)]);
        assert_eq!(a.dot(&IntVector(vec![1, -2])), rational(0, 1));
        assert_eq!(a.abs_dot(&IntVector(vec![0, -3])), rational(3, 2));
    }

    #[test]
    fn parse_golden_target() {
        let a = TargetVector::parse(&["1", "phi"], 64).unwrap();
        assert!(a.snap_radius() > 0.0 && a.snap_radius() < 1e-30);
        assert!((a.shadow()[1] - 1.618_033_988_749_895).abs() < 1e-15);
    }
}
