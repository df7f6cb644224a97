//! Exterior algebra over `R^m` with its euclidean structure.
//!
//! Basis `p`-vectors `e_S` are indexed by strictly increasing tuples `S`
//! (0-based internally). The Hodge star is fixed by `(*e_S) ∧ e_S = e_1 ∧ .. ∧ e_m`
//! and makes the `e_S` orthonormal.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::maps::PolynomialMap;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExteriorError {
    #[error("ambient dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("degrees differ ({0} vs {1})")]
    DegreeMismatch(usize, usize),
    #[error("degree {sum} exceeds ambient dimension {dim}")]
    DegreeOverflow { sum: usize, dim: usize },
    #[error("index tuple {0:?} is not strictly increasing within 0..{1}")]
    BadTuple(Vec<usize>, usize),
    #[error("basis rows are linearly dependent (rank-deficient subgroup)")]
    RankDeficient,
    #[error("subgroup needs at least one generator of positive length")]
    Empty,
}

/// Homogeneous element of `Λ^p R^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyVector {
    dim: usize,
    degree: usize,
    coeffs: BTreeMap<Vec<usize>, f64>,
}

/// Sign of the permutation sorting `seq` (distinct entries), by counting
/// inversions.
fn sort_sign(seq: &[usize]) -> f64 {
    let mut inversions = 0usize;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl PolyVector {
    pub fn zero(dim: usize, degree: usize) -> Self {
        PolyVector {
            dim,
            degree,
            coeffs: BTreeMap::new(),
        }
    }

    /// The scalar `c` as a 0-vector.
    pub fn scalar(dim: usize, c: f64) -> Self {
        let mut v = Self::zero(dim, 0);
        v.insert(Vec::new(), c);
        v
    }

    /// Basis element `e_S`.
    pub fn basis(dim: usize, tuple: &[usize]) -> Result<Self, ExteriorError> {
        let ok = tuple.windows(2).all(|w| w[0] < w[1]) && tuple.iter().all(|&i| i < dim);
        if !ok {
            return Err(ExteriorError::BadTuple(tuple.to_vec(), dim));
        }
        let mut v = Self::zero(dim, tuple.len());
        v.insert(tuple.to_vec(), 1.0);
        Ok(v)
    }

    /// 1-vector with the given coordinates.
    pub fn from_vector(coords: &[f64]) -> Self {
        let mut v = Self::zero(coords.len(), 1);
        for (i, &c) in coords.iter().enumerate() {
            v.insert(vec![i], c);
        }
        v
    }

    /// `e_1 ∧ .. ∧ e_m`.
    pub fn top(dim: usize) -> Self {
        Self::basis(dim, &(0..dim).collect::<Vec<_>>()).expect("increasing tuple")
    }

    fn insert(&mut self, tuple: Vec<usize>, c: f64) {
        if c == 0.0 {
            return;
        }
        let e = self.coeffs.entry(tuple).or_insert(0.0);
        *e += c;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coefficient(&self, tuple: &[usize]) -> f64 {
        self.coeffs.get(tuple).copied().unwrap_or(0.0)
    }

    /// Nonzero terms in lexicographic tuple order.
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, f64)> {
        self.coeffs.iter().filter(|(_, c)| **c != 0.0).map(|(t, c)| (t, *c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms().next().is_none()
    }

    pub fn add(&self, other: &PolyVector) -> Result<PolyVector, ExteriorError> {
        self.same_shape(other)?;
        let mut out = self.clone();
        for (t, c) in other.terms() {
            out.insert(t.clone(), c);
        }
        Ok(out)
    }

    pub fn scale(&self, k: f64) -> PolyVector {
        PolyVector {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|(t, c)| (t.clone(), c * k)).collect(),
        }
    }

    fn same_shape(&self, other: &PolyVector) -> Result<(), ExteriorError> {
        if self.dim != other.dim {
            return Err(ExteriorError::DimensionMismatch(self.dim, other.dim));
        }
        if self.degree != other.degree {
            return Err(ExteriorError::DegreeMismatch(self.degree, other.degree));
        }
        Ok(())
    }

    pub fn wedge(&self, other: &PolyVector) -> Result<PolyVector, ExteriorError> {
        if self.dim != other.dim {
            return Err(ExteriorError::DimensionMismatch(self.dim, other.dim));
        }
        let sum = self.degree + other.degree;
        if sum > self.dim {
            return Err(ExteriorError::DegreeOverflow { sum, dim: self.dim });
        }
        let mut out = PolyVector::zero(self.dim, sum);
        for (s, a) in self.terms() {
            for (t, b) in other.terms() {
                if s.iter().any(|i| t.contains(i)) {
                    continue;
                }
                let mut joined: Vec<usize> = s.iter().chain(t).copied().collect();
                let sign = sort_sign(&joined);
                joined.sort_unstable();
                out.insert(joined, sign * a * b);
            }
        }
        Ok(out)
    }

    /// Hodge star: `*e_S = ±e_{S^c}` with the sign making `(*e_S) ∧ e_S` the
    /// top form, extended linearly.
    pub fn hodge_star(&self) -> PolyVector {
        let mut out = PolyVector::zero(self.dim, self.dim - self.degree);
        for (s, c) in self.terms() {
            let complement: Vec<usize> = (0..self.dim).filter(|i| !s.contains(i)).collect();
            let order: Vec<usize> = complement.iter().chain(s).copied().collect();
            out.insert(complement, sort_sign(&order) * c);
        }
        out
    }

    pub fn inner(&self, other: &PolyVector) -> Result<f64, ExteriorError> {
        self.same_shape(other)?;
        Ok(self
            .terms()
            .map(|(t, c)| c * other.coefficient(t))
            .sum())
    }

    pub fn norm(&self) -> f64 {
        self.terms().map(|(_, c)| c * c).sum::<f64>().sqrt()
    }

    /// Representative of the class modulo `v ~ -v`: the first nonzero
    /// coefficient (lexicographic tuple order) is made positive.
    pub fn canonical_sign(&self) -> PolyVector {
        match self.terms().next() {
            Some((_, c)) if c < 0.0 => self.scale(-1.0),
            _ => self.clone(),
        }
    }
}

/// `u_1 ∧ .. ∧ u_r` of 1-vectors given as coordinate rows.
pub fn wedge_all(rows: &[Vec<f64>]) -> Result<PolyVector, ExteriorError> {
    let first = rows.first().ok_or(ExteriorError::Empty)?;
    let mut acc = PolyVector::scalar(first.len(), 1.0);
    for r in rows {
        acc = acc.wedge(&PolyVector::from_vector(r))?;
    }
    Ok(acc)
}

/// Discrete subgroup of `R^m` spanned by the rows of `basis`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteSubgroup {
    basis: Vec<Vec<f64>>,
    dim: usize,
}

// Relative size below which a Gram–Schmidt residual counts as dependence.
const DEPENDENCE_TOL: f64 = 1e-10;

impl DiscreteSubgroup {
    pub fn new(basis: Vec<Vec<f64>>) -> Result<Self, ExteriorError> {
        let dim = basis.first().ok_or(ExteriorError::Empty)?.len();
        if let Some(bad) = basis.iter().find(|r| r.len() != dim) {
            return Err(ExteriorError::DimensionMismatch(dim, bad.len()));
        }
        if basis.len() > dim {
            return Err(ExteriorError::RankDeficient);
        }
        let g = DiscreteSubgroup { basis, dim };
        g.orthonormal_frame()?;
        Ok(g)
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Gram–Schmidt: orthonormal frame of `span(Γ)` and the residual lengths
    /// (their product is the covolume).
    pub fn orthonormal_frame(&self) -> Result<(Vec<Vec<f64>>, Vec<f64>), ExteriorError> {
        let mut frame: Vec<Vec<f64>> = Vec::with_capacity(self.basis.len());
        let mut lengths = Vec::with_capacity(self.basis.len());
        for row in &self.basis {
            let scale = dot(row, row).sqrt();
            if scale == 0.0 {
                return Err(ExteriorError::RankDeficient);
            }
            let mut v = row.clone();
            // two passes of modified Gram–Schmidt for stability
            for _ in 0..2 {
                for q in &frame {
                    let c = dot(&v, q);
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= c * qi;
                    }
                }
            }
            let len = dot(&v, &v).sqrt();
            if len <= DEPENDENCE_TOL * scale {
                return Err(ExteriorError::RankDeficient);
            }
            frame.push(v.iter().map(|x| x / len).collect());
            lengths.push(len);
        }
        Ok((frame, lengths))
    }

    /// `‖Γ‖ = ‖u_1 ∧ .. ∧ u_r‖ = sqrt(det Gram)`. Expands the wedge when
    /// `r·m <= 12`, otherwise uses the Gram–Schmidt covolume.
    pub fn norm(&self) -> f64 {
        if self.rank() * self.dim <= 12 {
            self.wedge_norm()
        } else {
            self.gram_norm()
        }
    }

    pub fn gram_norm(&self) -> f64 {
        let (_, lengths) = self.orthonormal_frame().expect("validated on construction");
        lengths.iter().product()
    }

    pub fn wedge_norm(&self) -> f64 {
        wedge_all(&self.basis).expect("validated on construction").norm()
    }

    /// Class of `u_1 ∧ .. ∧ u_r` modulo sign.
    pub fn plucker_class(&self) -> PolyVector {
        wedge_all(&self.basis)
            .expect("validated on construction")
            .canonical_sign()
    }

    /// Orthogonal projection of `v` onto `span(Γ)`.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>, ExteriorError> {
        if v.len() != self.dim {
            return Err(ExteriorError::DimensionMismatch(self.dim, v.len()));
        }
        let (frame, _) = self.orthonormal_frame()?;
        let mut out = vec![0.0; self.dim];
        for q in &frame {
            let c = dot(v, q);
            for (o, qi) in out.iter_mut().zip(q) {
                *o += c * qi;
            }
        }
        Ok(out)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `‖h_t(x)Γ‖` from its closed form
/// `sqrt(e^{-2rt} + e^{2(n-r+1)t} ‖π_Γ f(x)‖²) ‖Γ‖`, with `Γ ⊂ R^n` of rank `r`.
pub fn ht_subgroup_norm(
    f: &PolynomialMap,
    x: &[f64],
    t: f64,
    gamma: &DiscreteSubgroup,
) -> Result<f64, ExteriorError> {
    let value = f
        .eval(x)
        .map_err(|_| ExteriorError::DimensionMismatch(f.domain_dim(), x.len()))?;
    ht_norm_at_value(&value, t, gamma)
}

/// Closed form of `‖h_t(x)Γ‖` given the value `f(x)`.
pub fn ht_norm_at_value(value: &[f64], t: f64, gamma: &DiscreteSubgroup) -> Result<f64, ExteriorError> {
    let n = gamma.ambient_dim();
    let r = gamma.rank() as f64;
    let proj = gamma.project(value)?;
    let p2 = dot(&proj, &proj);
    let inner = (-2.0 * r * t).exp() + (2.0 * (n as f64 - r + 1.0) * t).exp() * p2;
    Ok(inner.sqrt() * gamma.gram_norm())
}

/// Image basis `h_t(x)u_i = e^{-t}(u_i, 0) + e^{nt}(u_i, f(x)) e_{n+1}` in
/// `R^{n+1}`.
pub fn ht_image_basis(value: &[f64], t: f64, gamma: &DiscreteSubgroup) -> Vec<Vec<f64>> {
    let n = gamma.ambient_dim();
    let shrink = (-t).exp();
    let grow = (n as f64 * t).exp();
    gamma
        .basis()
        .iter()
        .map(|u| {
            let mut row: Vec<f64> = u.iter().map(|c| shrink * c).collect();
            row.push(grow * dot(u, value));
            row
        })
        .collect()
}
