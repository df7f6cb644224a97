//! Measures of sublevel sets and band preimages, density curves of
//! preimages of arithmetic classes, and the bound-checking harnesses.

mod bounds;
mod density;
mod volume;

pub use bounds::{
    ctau_check, ctau_constant, fit_constant, growth_exponent_fit, km_bound_check, km_probe, loglog_slope, BoundReport,
    GrowthFit, KmInstance, KmProbe, KmProbeSpec, WitnessSlope,
};
pub use density::{
    band_polynomial, band_preimage_volume, band_preimage_volume_raw, density_at_radius,
    density_curve, sublevel_bound_1d, truncation_tail, DensityCurve, DensityOptions, DensityPoint,
    LevelWidth,
};
pub use volume::{sublevel_volume, sup_norm, wilson_interval, Method, SupBracket};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classes::{ClassError, ClassVerdict};
use crate::interval::Interval;
use crate::maps::{FloatPolynomial, Hypercube, MapError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("budget {got} is below the minimum of {min}")]
    BudgetTooSmall { got: u64, min: u64 },
    #[error("Monte-Carlo sample budget exhausted after {0} fallback bands")]
    SampleBudgetExhausted(u64),
    #[error("epsilon must be nonnegative, got {0}")]
    NegativeEpsilon(f64),
    #[error("radii must be positive and strictly decreasing")]
    BadRadii,
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("f(0) is not in the class up to the cutoff: {0:?}")]
    NotInClass(Box<ClassVerdict>),
    #[error("f is not curved of order {0} at the origin")]
    NotCurved(u32),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error(transparent)]
    Class(#[from] ClassError),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// How a [`VolumeEstimate`] was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateMethod {
    /// Interval-classified grid; the error is rigorous.
    Grid,
    /// Uniform sampling; the error is a 95% Wilson half-width.
    MonteCarlo,
    /// Certified upper bound from derivative estimates; `value` is the bound.
    Bound,
    /// Known exactly.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub error: f64,
    pub method: EstimateMethod,
    pub samples: u64,
    pub seed: u64,
}

impl VolumeEstimate {
    pub fn exact(value: f64) -> Self {
        VolumeEstimate {
            value,
            error: 0.0,
            method: EstimateMethod::Exact,
            samples: 0,
            seed: 0,
        }
    }

    pub fn lower(&self) -> f64 {
        (self.value - self.error).max(0.0)
    }

    pub fn upper(&self) -> f64 {
        self.value + self.error
    }

    /// Whether `x` lies within the stated error of the estimate.
    pub fn agrees_with(&self, x: f64) -> bool {
        (self.value - x).abs() <= self.error
    }
}

/// Integration region.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Cube(Hypercube),
    Ball { center: Vec<f64>, r: f64 },
}

impl Region {
    pub fn ball(center: Vec<f64>, r: f64) -> Self {
        Region::Ball { center, r }
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Cube(c) => c.dim(),
            Region::Ball { center, .. } => center.len(),
        }
    }

    pub fn bounding_cube(&self) -> Hypercube {
        match self {
            Region::Cube(c) => c.clone(),
            Region::Ball { center, r } => Hypercube::enclosing_ball(center, *r),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Region::Cube(c) => c.volume(),
            Region::Ball { center, r } => ball_volume(center.len(), *r),
        }
    }

    fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Cube(c) => x
                .iter()
                .zip(&c.lower)
                .all(|(xi, lo)| *xi >= *lo && *xi <= lo + c.side),
            Region::Ball { center, r } => {
                x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= r * r
            }
        }
    }

    /// `Some(true)` if the cell lies inside, `Some(false)` if outside,
    /// `None` if it straddles the boundary.
    fn classify(&self, cell: &[Interval]) -> Option<bool> {
        match self {
            Region::Cube(_) => Some(true),
            Region::Ball { center, r } => {
                let d2 = cell
                    .iter()
                    .zip(center)
                    .fold(Interval::ZERO, |acc, (x, c)| acc + (*x - Interval::point(*c)).sqr());
                let r2 = Interval::point(*r).sqr();
                if d2.hi() <= r2.lo() {
                    Some(true)
                } else if d2.lo() > r2.hi() {
                    Some(false)
                } else {
                    None
                }
            }
        }
    }
}

/// Volume of the euclidean `d`-ball of radius `r`.
pub fn ball_volume(d: usize, r: f64) -> f64 {
    unit_ball_volume(d) * r.powi(d as i32)
}

fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

/// Scalar function usable by the estimators: point and interval evaluation.
pub trait ScalarFn: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;
    fn eval_interval(&self, cell: &[Interval]) -> Interval;
}

impl ScalarFn for FloatPolynomial {
    fn dim(&self) -> usize {
        self.nvars()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        FloatPolynomial::eval(self, x)
    }

    fn eval_interval(&self, cell: &[Interval]) -> Interval {
        FloatPolynomial::eval_interval(self, cell)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert_eq!(ball_volume(1, 0.5), 1.0);
        assert!((ball_volume(2, 1.0) - std::f64::consts::PI).abs() < 1e-15);
        assert!((ball_volume(3, 2.0) - 32.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ball_cell_classification() {
        let b = Region::ball(vec![0.0, 0.0], 1.0);
        let inside = [Interval::new(0.0, 0.5), Interval::new(0.0, 0.5)];
        let outside = [Interval::new(0.9, 1.0), Interval::new(0.9, 1.0)];
        let straddle = [Interval::new(0.5, 1.0), Interval::new(0.0, 0.5)];
        assert_eq!(b.classify(&inside), Some(true));
        assert_eq!(b.classify(&outside), Some(false));
        assert_eq!(b.classify(&straddle), None);
    }
}
