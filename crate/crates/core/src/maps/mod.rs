//! Polynomial curved maps `f: R^d -> R^n`.
//!
//! Evaluation is exact on rational points; derivatives are formal. The
//! certified quantities (derivative bounds, Lipschitz constants) come from
//! interval evaluation over subdivided boxes.

mod polynomial;

pub use polynomial::{rank_and_pivot_rows, FloatPolynomial, MultiIndex, Polynomial};

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{self, Interval};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("map dimensions must be positive (d={d}, n={n}, l={l})")]
    BadDimensions { d: usize, n: usize, l: u32 },
    #[error("component {index} has {found} variables, expected {expected}")]
    VariableCount {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("point has dimension {found}, expected {expected}")]
    PointDimension { found: usize, expected: usize },
    #[error("lower bound m must be positive, got {0}")]
    NonPositiveLowerBound(f64),
    #[error(
        "derivative ∂^{order}_x{axis} vanishes on the region (sign change near {witness:?}); \
         the lower-bound hypothesis fails"
    )]
    DerivativeVanishes {
        axis: usize,
        order: u32,
        witness: Vec<f64>,
    },
    #[error(
        "could not certify a positive lower bound for ∂^{order}_x{axis} at subdivision width {width:e}"
    )]
    ToleranceTooCoarse { axis: usize, order: u32, width: f64 },
}

/// Axis-aligned cube `[a_1, a_1 + side] × .. × [a_d, a_d + side]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypercube {
    pub lower: Vec<f64>,
    pub side: f64,
}

impl Hypercube {
    pub fn new(lower: Vec<f64>, side: f64) -> Self {
        assert!(side > 0.0, "hypercube side must be positive");
        Hypercube { lower, side }
    }

    /// Smallest cube enclosing the closed ball `B(center, r)`.
    pub fn enclosing_ball(center: &[f64], r: f64) -> Self {
        Hypercube::new(center.iter().map(|c| c - r).collect(), 2.0 * r)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim() as i32)
    }

    pub fn as_box(&self) -> Vec<Interval> {
        self.lower
            .iter()
            .map(|&a| Interval::new(a, a + self.side))
            .collect()
    }

    /// The `cells^d` sub-boxes of a uniform grid, in row-major order.
    pub fn grid_cells(&self, cells: usize) -> Vec<Vec<Interval>> {
        let d = self.dim();
        let h = self.side / cells as f64;
        let total = cells.pow(d as u32);
        (0..total)
            .map(|mut idx| {
                (0..d)
                    .map(|axis| {
                        let c = idx % cells;
                        idx /= cells;
                        let lo = self.lower[axis] + c as f64 * h;
                        let hi = if c + 1 == cells {
                            self.lower[axis] + self.side
                        } else {
                            self.lower[axis] + (c + 1) as f64 * h
                        };
                        Interval::new(lo, hi)
                    })
                    .collect()
            })
            .collect()
    }
}

/// Number of grid cells per axis so that the total stays near `budget`.
pub(crate) fn cells_per_axis(d: usize, budget: usize) -> usize {
    let c = (budget as f64).powf(1.0 / d as f64).floor() as usize;
    c.max(1)
}

/// Polynomial map with curvature order `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialMap {
    d: usize,
    l: u32,
    components: Vec<Polynomial>,
}

impl PolynomialMap {
    pub fn new(d: usize, l: u32, components: Vec<Polynomial>) -> Result<Self, MapError> {
        let n = components.len();
        if d == 0 || n == 0 || l == 0 {
            return Err(MapError::BadDimensions { d, n, l });
        }
        for (index, c) in components.iter().enumerate() {
            if c.nvars() != d {
                return Err(MapError::VariableCount {
                    index,
                    found: c.nvars(),
                    expected: d,
                });
            }
        }
        Ok(PolynomialMap { d, l, components })
    }

    /// `x ↦ α + (x, x², .., x^n)` on `R^1`, curved of order `n`.
    pub fn shifted_moment_curve(alpha: &[BigRational]) -> Self {
        let n = alpha.len();
        let components = alpha
            .iter()
            .enumerate()
            .map(|(j, a)| {
                Polynomial::constant(1, a.clone())
                    .add(&Polynomial::monomial(1, vec![j as u32 + 1], BigRational::one()))
            })
            .collect();
        PolynomialMap::new(1, n as u32, components).expect("n >= 1")
    }

    /// `x ↦ offset + A x` with `A` given row-wise (`n × d`).
    pub fn affine(offset: &[BigRational], a: &[Vec<BigRational>]) -> Self {
        let d = a.first().map_or(1, Vec::len);
        let components = offset
            .iter()
            .zip(a)
            .map(|(o, row)| {
                let mut p = Polynomial::constant(d, o.clone());
                for (j, c) in row.iter().enumerate() {
                    p = p.add(&Polynomial::variable(d, j).scale(c));
                }
                p
            })
            .collect();
        PolynomialMap::new(d, 1, components).expect("valid affine map")
    }

    pub fn domain_dim(&self) -> usize {
        self.d
    }

    pub fn codomain_dim(&self) -> usize {
        self.components.len()
    }

    pub fn curvature_order(&self) -> u32 {
        self.l
    }

    pub fn with_curvature_order(mut self, l: u32) -> Self {
        assert!(l >= 1);
        self.l = l;
        self
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn degree(&self) -> u32 {
        self.components.iter().map(Polynomial::degree).max().unwrap_or(0)
    }

    fn check_point(&self, len: usize) -> Result<(), MapError> {
        if len != self.d {
            return Err(MapError::PointDimension {
                found: len,
                expected: self.d,
            });
        }
        Ok(())
    }

    pub fn eval_exact(&self, x: &[BigRational]) -> Result<Vec<BigRational>, MapError> {
        self.check_point(x.len())?;
        Ok(self.components.iter().map(|c| c.eval_exact(x)).collect())
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, MapError> {
        self.check_point(x.len())?;
        Ok(self.components.iter().map(|c| c.eval(x)).collect())
    }

    /// Componentwise `∂^j f`.
    pub fn derivative(&self, j: &MultiIndex) -> PolynomialMap {
        PolynomialMap {
            d: self.d,
            l: self.l,
            components: self.components.iter().map(|c| c.derivative(j)).collect(),
        }
    }

    /// `f ∘ A` for an invertible linear change of the domain.
    pub fn compose_linear(&self, a: &[Vec<BigRational>]) -> PolynomialMap {
        PolynomialMap {
            d: self.d,
            l: self.l,
            components: self.components.iter().map(|c| c.compose_linear(a)).collect(),
        }
    }

    pub fn to_float(&self) -> FloatMap {
        FloatMap {
            d: self.d,
            components: self.components.iter().map(Polynomial::to_float).collect(),
        }
    }

    /// Non-degeneracy test at `x`.
    ///
    /// `V` is spanned by the derivative vectors `∂^j f(x)` with `1 <= |j| <= l`
    /// (the value `f(x)` itself is excluded). The map is curved when every
    /// monomial coefficient vector of `f - f(x)` lies in `V`, i.e. the whole
    /// image sits inside the affine space `f(x) + V`.
    pub fn curvature_check(&self, x: &[BigRational], l: u32) -> Result<CurvatureReport, MapError> {
        self.check_point(x.len())?;
        let value = self.eval_exact(x)?;
        let derivative_vectors: Vec<Vec<BigRational>> = MultiIndex::up_to(self.d, 1, l)
            .iter()
            .map(|j| self.derivative(j).eval_exact(x).expect("dimension checked"))
            .collect();
        let (rank, pivots) = rank_and_pivot_rows(&derivative_vectors);
        let basis: Vec<Vec<BigRational>> =
            pivots.iter().map(|&p| derivative_vectors[p].clone()).collect();

        let mut with_value = derivative_vectors.clone();
        with_value.push(value.clone());
        let rank_with_value = rank_and_pivot_rows(&with_value).0;

        // Coefficient vectors of f - f(x), one per monomial.
        let mut monomials: std::collections::BTreeSet<Vec<u32>> = Default::default();
        for c in &self.components {
            monomials.extend(c.terms().map(|(e, _)| e.clone()));
        }
        let zero_exp = vec![0; self.d];
        let mut image_in_v = true;
        for e in &monomials {
            let mut v: Vec<BigRational> = self.components.iter().map(|c| c.coefficient(e)).collect();
            if *e == zero_exp {
                for (vi, fx) in v.iter_mut().zip(&value) {
                    *vi -= fx;
                }
            }
            if v.iter().all(Zero::is_zero) {
                continue;
            }
            let mut test = basis.clone();
            test.push(v);
            if rank_and_pivot_rows(&test).0 > rank {
                image_in_v = false;
                break;
            }
        }
        Ok(CurvatureReport {
            is_curved: image_in_v && rank > 0,
            basis,
            rank,
            rank_with_value,
        })
    }

    /// Certified bounds `m <= inf |∂^l_{x_i} f|` (over each axis `i`) and
    /// `M >= sup |∂^β f|` (over `|β| <= l`) on the cube.
    pub fn derivative_bounds(&self, cube: &Hypercube, l: u32) -> Result<DerivativeBounds, MapError> {
        self.check_point(cube.dim())?;
        let cells = cells_per_axis(self.d, 4096).min(256);
        let grid = cube.grid_cells(cells);
        let mut upper = 0.0f64;
        for beta in MultiIndex::up_to(self.d, 0, l) {
            let fm = self.derivative(&beta).to_float();
            for cell in &grid {
                upper = upper.max(fm.norm_enclosure(cell).hi());
            }
        }
        let mut lower = f64::INFINITY;
        for axis in 0..self.d {
            let dm = self.derivative(&MultiIndex::pure(self.d, axis, l)).to_float();
            let m_axis = certified_norm_lower_bound(&dm, cube, axis, l)?;
            lower = lower.min(m_axis);
        }
        Ok(DerivativeBounds {
            m: lower,
            big_m: upper,
            region: cube.clone(),
        })
    }

    /// Certified Lipschitz constant of `f` on `B(0, r)`: an upper bound of the
    /// Frobenius norm of the Jacobian over the enclosing cube, so that
    /// `‖f(x) - f(0)‖ <= κ ‖x‖` whenever `‖x‖ <= r`.
    pub fn lipschitz_bound(&self, r: f64) -> f64 {
        assert!(r > 0.0, "radius must be positive");
        let cube = Hypercube::enclosing_ball(&vec![0.0; self.d], r);
        let cells = cells_per_axis(self.d, 4096).min(256);
        let grid = cube.grid_cells(cells);
        let partials: Vec<FloatMap> = (0..self.d)
            .map(|axis| self.derivative(&MultiIndex::pure(self.d, axis, 1)).to_float())
            .collect();
        let mut kappa = 0.0f64;
        for cell in &grid {
            let sq = partials.iter().fold(Interval::ZERO, |acc, p| {
                p.components
                    .iter()
                    .fold(acc, |acc, c| acc + c.eval_interval(cell).sqr())
            });
            kappa = kappa.max(sq.sqrt().hi());
        }
        kappa
    }
}

/// Double-precision evaluation form of a [`PolynomialMap`].
#[derive(Clone, Debug)]
pub struct FloatMap {
    d: usize,
    components: Vec<FloatPolynomial>,
}

impl FloatMap {
    pub fn domain_dim(&self) -> usize {
        self.d
    }

    pub fn components(&self) -> &[FloatPolynomial] {
        &self.components
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(x);
        }
    }

    pub fn eval_interval(&self, cell: &[Interval]) -> Vec<Interval> {
        self.components.iter().map(|c| c.eval_interval(cell)).collect()
    }

    /// Enclosure of the euclidean norm of the value over a box.
    pub fn norm_enclosure(&self, cell: &[Interval]) -> Interval {
        interval::norm(&self.eval_interval(cell))
    }
}

/// Branch-and-bound lower bound of `inf_K ‖g‖` for the derivative map `g`.
fn certified_norm_lower_bound(
    g: &FloatMap,
    cube: &Hypercube,
    axis: usize,
    order: u32,
) -> Result<f64, MapError> {
    const MAX_BOXES: usize = 200_000;
    let min_width = cube.side * 2f64.powi(-30);
    let scalar = g.components.len() == 1;
    let mut sign_seen = [false; 2];
    let mut stack: Vec<Vec<Interval>> = vec![cube.as_box()];
    let mut bound = f64::INFINITY;
    let mut processed = 0usize;
    while let Some(b) = stack.pop() {
        processed += 1;
        let centre: Vec<f64> = b.iter().map(Interval::mid).collect();
        let mut value = vec![0.0; g.components.len()];
        g.eval_into(&centre, &mut value);
        if scalar {
            if value[0] == 0.0 {
                return Err(MapError::DerivativeVanishes {
                    axis,
                    order,
                    witness: centre,
                });
            }
            sign_seen[(value[0] > 0.0) as usize] = true;
            if sign_seen[0] && sign_seen[1] {
                return Err(MapError::DerivativeVanishes {
                    axis,
                    order,
                    witness: centre,
                });
            }
        } else if value.iter().all(|v| *v == 0.0) {
            return Err(MapError::DerivativeVanishes {
                axis,
                order,
                witness: centre,
            });
        }
        let lb = g.norm_enclosure(&b).lo();
        if lb > 0.0 {
            bound = bound.min(lb);
            continue;
        }
        let width = b.iter().map(Interval::width).fold(0.0, f64::max);
        if width <= min_width || processed > MAX_BOXES {
            return Err(MapError::ToleranceTooCoarse { axis, order, width });
        }
        // split along the widest side
        let split = b
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.width().total_cmp(&y.1.width()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (left, right) = b[split].bisect();
        let mut b1 = b.clone();
        b1[split] = left;
        let mut b2 = b;
        b2[split] = right;
        stack.push(b1);
        stack.push(b2);
    }
    Ok(bound)
}

/// Outcome of [`PolynomialMap::curvature_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureReport {
    pub is_curved: bool,
    /// Independent derivative vectors spanning `V`.
    pub basis: Vec<Vec<BigRational>>,
    pub rank: usize,
    /// Rank of the spanning set when `f(x)` itself is included.
    pub rank_with_value: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeBounds {
    pub m: f64,
    pub big_m: f64,
    pub region: Hypercube,
}

/// `d l (l+1) ((M/m)(l+1)(2 l^l + 1))^{1/l}`.
pub fn km_constant(d: usize, l: u32, m: f64, big_m: f64) -> Result<f64, MapError> {
    if m <= 0.0 || m.is_nan() {
        return Err(MapError::NonPositiveLowerBound(m));
    }
    let lf = l as f64;
    let inner = big_m / m * (lf + 1.0) * (2.0 * lf.powi(l as i32) + 1.0);
    Ok(d as f64 * lf * (lf + 1.0) * inner.powf(1.0 / lf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rational};

    fn moment() -> PolynomialMap {
        PolynomialMap::shifted_moment_curve(&[int(0), int(0)])
    }

    fn scalar_map(p: Polynomial, l: u32) -> PolynomialMap {
        PolynomialMap::new(p.nvars(), l, vec![p]).unwrap()
    }

    #[test]
    fn moment_map_at_one_half() {
        let v = moment().eval_exact(&[rational(1, 2)]).unwrap();
        assert_eq!(v, vec![rational(1, 2), rational(1, 4)]);
    }

    #[test]
    fn shifted_curve_at_origin_is_alpha() {
        let alpha = vec![int(1), rational(3, 7)];
        let f = PolynomialMap::shifted_moment_curve(&alpha);
        assert_eq!(f.eval_exact(&[int(0)]).unwrap(), alpha);
    }

    #[test]
    fn moment_curve_is_two_curved() {
        let r = moment().curvature_check(&[int(0)], 2).unwrap();
        assert!(r.is_curved);
        assert_eq!(r.rank, 2);
        assert_eq!(r.basis, vec![vec![int(1), int(0)], vec![int(0), int(2)]]);
    }

    #[test]
    fn diagonal_line_is_one_curved() {
        let x = Polynomial::variable(1, 0);
        let f = PolynomialMap::new(1, 1, vec![x.clone(), x]).unwrap();
        let r = f.curvature_check(&[int(0)], 1).unwrap();
        assert!(r.is_curved);
        assert_eq!(r.basis, vec![vec![int(1), int(1)]]);
    }

    #[test]
    fn moment_curve_is_not_one_curved() {
        let r = moment().curvature_check(&[int(0)], 1).unwrap();
        assert!(!r.is_curved);
        assert_eq!(r.rank, 1);
    }

    #[test]
    fn rank_with_value_is_reported() {
        let f = PolynomialMap::shifted_moment_curve(&[int(1), int(0)]).with_curvature_order(1);
        let r = f.curvature_check(&[int(0)], 1).unwrap();
        assert_eq!(r.rank, 1);
        assert_eq!(r.rank_with_value, 1);
        let g = PolynomialMap::shifted_moment_curve(&[int(0), int(1)]);
        assert_eq!(g.curvature_check(&[int(0)], 1).unwrap().rank_with_value, 2);
    }

    #[test]
    fn bounds_for_identity_on_symmetric_interval() {
        let f = scalar_map(Polynomial::variable(1, 0), 1);
        let b = f.derivative_bounds(&Hypercube::new(vec![-1.0], 2.0), 1).unwrap();
        assert_eq!(b.m, 1.0);
        assert_eq!(b.big_m, 1.0);
    }

    #[test]
    fn bounds_for_square_on_one_two() {
        let f = scalar_map(Polynomial::monomial(1, vec![2], int(1)), 1);
        let b = f.derivative_bounds(&Hypercube::new(vec![1.0], 1.0), 1).unwrap();
        assert_eq!(b.m, 2.0);
        assert_eq!(b.big_m, 4.0);
    }

    #[test]
    fn bounds_fail_when_derivative_changes_sign() {
        let f = scalar_map(Polynomial::monomial(1, vec![2], int(1)), 1);
        let err = f
            .derivative_bounds(&Hypercube::new(vec![-1.0], 2.0), 1)
            .unwrap_err();
        assert!(matches!(err, MapError::DerivativeVanishes { .. }), "{err:?}");
    }

    #[test]
    fn km_constant_examples() {
        assert_eq!(km_constant(1, 1, 1.0, 1.0).unwrap(), 12.0);
        assert_eq!(km_constant(2, 1, 1.0, 1.0).unwrap(), 24.0);
        let c1 = km_constant(1, 3, 1.0, 1.0).unwrap();
        let c2 = km_constant(1, 3, 1.0, 2.0).unwrap();
        assert!((c2 / c1 - 2f64.powf(1.0 / 3.0)).abs() < 1e-12);
        assert!(km_constant(1, 1, 0.0, 1.0).is_err());
    }

    #[test]
    fn lipschitz_examples() {
        let kappa = moment().lipschitz_bound(0.1);
        let exact = (1.0f64 + 0.2 * 0.2).sqrt();
        assert!(kappa >= exact && kappa < exact + 1e-12, "{kappa}");
        let constant = PolynomialMap::new(1, 1, vec![Polynomial::constant(1, int(3))]).unwrap();
        assert_eq!(constant.lipschitz_bound(1.0), 0.0);
    }

    #[test]
    fn linear_lipschitz_brackets_operator_norm() {
        let a = vec![vec![int(3), int(0)], vec![int(4), int(5)]];
        let f = PolynomialMap::affine(&[int(0), int(0)], &a);
        let kappa = f.lipschitz_bound(0.5);
        // operator norm sqrt(45) ≈ 6.708, Frobenius sqrt(50)
        assert!(kappa >= 45f64.sqrt() && kappa <= 50f64.sqrt() + 1e-12);
    }
}
