use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::interval::Interval;

/// Exponent vector `(j_1, .., j_d)` of a partial derivative or monomial.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    /// `order` copies of axis `axis`, i.e. the pure derivative `∂^order_{x_axis}`.
    pub fn pure(d: usize, axis: usize, order: u32) -> Self {
        let mut j = vec![0; d];
        j[axis] = order;
        MultiIndex(j)
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// All multi-indices in `d` variables with `lo <= |j| <= hi`, graded then
    /// lexicographic.
    pub fn up_to(d: usize, lo: u32, hi: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for total in lo..=hi {
            let mut cur = vec![0u32; d];
            compositions(total, 0, &mut cur, &mut out);
        }
        out
    }
}

fn compositions(remaining: u32, pos: usize, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    if cur.is_empty() {
        if remaining == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return;
    }
    for v in (0..=remaining).rev() {
        cur[pos] = v;
        compositions(remaining - v, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// Sparse polynomial in `nvars` variables with exact rational coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        Self::monomial(nvars, vec![0; nvars], c)
    }

    pub fn variable(nvars: usize, var: usize) -> Self {
        let mut e = vec![0; nvars];
        e[var] = 1;
        Self::monomial(nvars, e, BigRational::one())
    }

    pub fn monomial(nvars: usize, exponents: Vec<u32>, c: BigRational) -> Self {
        assert_eq!(exponents.len(), nvars, "exponent vector length");
        let mut p = Self::zero(nvars);
        p.add_term(exponents, c);
        p
    }

    pub fn from_terms<I>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, BigRational)>,
    {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent vector length");
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, exponents: Vec<u32>, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self
            .terms
            .entry(exponents)
            .or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &BigRational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exponents: &[u32]) -> BigRational {
        self.terms
            .get(exponents)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, other.nvars);
        let mut p = self.clone();
        for (e, c) in &other.terms {
            p.add_term(e.clone(), c.clone());
        }
        p
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, k: &BigRational) -> Polynomial {
        let mut p = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            p.add_term(e.clone(), c * k);
        }
        p
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, other.nvars);
        let mut p = Self::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                p.add_term(e, c1 * c2);
            }
        }
        p
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut acc = Polynomial::constant(self.nvars, BigRational::one());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Exact formal partial derivative `∂^j`.
    pub fn derivative(&self, j: &MultiIndex) -> Polynomial {
        assert_eq!(j.dim(), self.nvars, "multi-index dimension");
        let mut p = Self::zero(self.nvars);
        'terms: for (e, c) in &self.terms {
            let mut coef = c.clone();
            let mut exps = e.clone();
            for (v, &times) in j.0.iter().enumerate() {
                if times > exps[v] {
                    continue 'terms;
                }
                // falling factorial e (e-1) .. (e - times + 1)
                for s in 0..times {
                    coef *= BigRational::from_integer(BigInt::from(exps[v] - s));
                }
                exps[v] -= times;
            }
            p.add_term(exps, coef);
        }
        p
    }

    /// Exact evaluation at a rational point.
    pub fn eval_exact(&self, x: &[BigRational]) -> BigRational {
        assert_eq!(x.len(), self.nvars);
        let mut sum = BigRational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (xv, &k) in x.iter().zip(e) {
                if k > 0 {
                    t *= num_traits::pow(xv.clone(), k as usize);
                }
            }
            sum += t;
        }
        sum
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.to_float().eval(x)
    }

    pub fn eval_interval(&self, x: &[Interval]) -> Interval {
        self.to_float().eval_interval(x)
    }

    /// Substitutes `x = A y` (`A` is `nvars × nvars`), giving `p(A y)`.
    pub fn compose_linear(&self, a: &[Vec<BigRational>]) -> Polynomial {
        let d = self.nvars;
        assert_eq!(a.len(), d);
        let images: Vec<Polynomial> = (0..d)
            .map(|row| {
                Polynomial::from_terms(
                    d,
                    (0..d).map(|col| {
                        let mut e = vec![0; d];
                        e[col] = 1;
                        (e, a[row][col].clone())
                    }),
                )
            })
            .collect();
        let mut out = Polynomial::zero(d);
        for (e, c) in &self.terms {
            let mut t = Polynomial::constant(d, c.clone());
            for (v, &k) in e.iter().enumerate() {
                t = t.mul(&images[v].pow(k));
            }
            out = out.add(&t);
        }
        out
    }

    /// Double-precision copy with interval enclosures of each coefficient.
    pub fn to_float(&self) -> FloatPolynomial {
        FloatPolynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| FloatTerm {
                    exps: e.clone(),
                    coef: c.to_f64().unwrap_or(0.0),
                    enclosure: Interval::from_rational(c),
                })
                .collect(),
        }
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (v, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "·x{}", v + 1)?,
                    _ => write!(f, "·x{}^{}", v + 1, k)?,
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct FloatTerm {
    exps: Vec<u32>,
    coef: f64,
    enclosure: Interval,
}

/// Evaluation-only double-precision form of a [`Polynomial`].
#[derive(Clone, Debug)]
pub struct FloatPolynomial {
    nvars: usize,
    terms: Vec<FloatTerm>,
}

impl FloatPolynomial {
    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        self.terms
            .iter()
            .map(|t| {
                t.exps
                    .iter()
                    .zip(x)
                    .fold(t.coef, |acc, (&k, &xv)| acc * xv.powi(k as i32))
            })
            .sum()
    }

    /// Enclosure of the range over a box (natural interval extension).
    pub fn eval_interval(&self, x: &[Interval]) -> Interval {
        debug_assert_eq!(x.len(), self.nvars);
        self.terms.iter().fold(Interval::ZERO, |acc, t| {
            let m = t
                .exps
                .iter()
                .zip(x)
                .fold(t.enclosure, |m, (&k, xv)| m * xv.powi(k));
            acc + m
        })
    }
}

/// Exact rank of a rational matrix (rows as vectors) by fraction-free
/// (Bareiss) elimination on the denominator-cleared integer matrix. Also
/// returns the indices of a maximal independent set of rows, preferring
/// earlier rows.
pub fn rank_and_pivot_rows(rows: &[Vec<BigRational>]) -> (usize, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut basis: Vec<Vec<BigInt>> = Vec::new();
    for (idx, row) in rows.iter().enumerate() {
        let mut candidate = basis.clone();
        candidate.push(clear_denominators(row));
        if bareiss_rank(&candidate) > basis.len() {
            basis = candidate;
            pivots.push(idx);
        }
    }
    (basis.len(), pivots)
}

fn clear_denominators(row: &[BigRational]) -> Vec<BigInt> {
    let lcm = row
        .iter()
        .fold(BigInt::one(), |acc, q| num_integer::lcm(acc, q.denom().clone()));
    row.iter()
        .map(|q| (q * BigRational::from_integer(lcm.clone())).to_integer())
        .collect()
}

fn bareiss_rank(rows: &[Vec<BigInt>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut m: Vec<Vec<BigInt>> = rows.to_vec();
    let ncols = m[0].len();
    let mut rank = 0;
    let mut prev = BigInt::one();
    for col in 0..ncols {
        let Some(p) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        for r in rank + 1..m.len() {
            for c in col + 1..ncols {
                let v = &m[rank][col] * &m[r][c] - &m[r][col] * &m[rank][c];
                m[r][c] = v / &prev;
            }
            m[r][col] = BigInt::zero();
        }
        prev = m[rank][col].abs();
        if prev.is_zero() {
            prev = BigInt::one();
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}
