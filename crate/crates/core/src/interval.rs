//! Closed floating-point intervals with outward rounding.
//!
//! Sums and products are rounded outward using error-free transformations,
//! so exactly representable results stay degenerate. Transcendental functions
//! are widened by two ulps on each side since libm is faithful but not
//! correctly rounded. If `x ∈ a` and `y ∈ b` then `x op y ∈ a op b`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

fn down(x: f64) -> f64 {
    if x.is_finite() {
        x.next_down()
    } else {
        x
    }
}

fn up(x: f64) -> f64 {
    if x.is_finite() {
        x.next_up()
    } else {
        x
    }
}

// Below this magnitude the error terms of the transformations may underflow.
const TINY: f64 = 1e-290;

/// Directed bounds of `a + b` from the two-sum error term.
fn add_bounds(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    if s == 0.0 {
        // Round-to-nearest only produces zero for an exact cancellation.
        return (0.0, 0.0);
    }
    if !s.is_finite() || s.abs() < TINY {
        return (down(s), up(s));
    }
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    if err > 0.0 {
        (s, up(s))
    } else if err < 0.0 {
        (down(s), s)
    } else {
        (s, s)
    }
}

/// Directed bounds of `a * b` from the fused multiply-add residual.
fn mul_bounds(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    if a == 0.0 || b == 0.0 {
        return (0.0, 0.0);
    }
    if !p.is_finite() || p.abs() < TINY {
        return (down(p), up(p));
    }
    let err = a.mul_add(b, -p);
    if err > 0.0 {
        (p, up(p))
    } else if err < 0.0 {
        (down(p), p)
    } else {
        (p, p)
    }
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    /// Panics if `lo > hi` or either bound is NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "invalid interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// Enclosure of an exact rational. Degenerate when the rational is a
    /// representable double.
    pub fn from_rational(q: &BigRational) -> Self {
        let approx = q.to_f64().unwrap_or(if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        });
        if approx.is_finite() {
            if let Some(back) = BigRational::from_float(approx) {
                if &back == q {
                    return Interval::point(approx);
                }
            }
        }
        Interval {
            lo: down(down(approx)),
            hi: up(up(approx)),
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn mid(&self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    /// Largest absolute value in the interval.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value in the interval.
    pub fn mig(&self) -> f64 {
        if self.contains_zero() {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn abs(&self) -> Interval {
        Interval {
            lo: self.mig(),
            hi: self.mag(),
        }
    }

    pub fn sqr(&self) -> Interval {
        let a = self.abs();
        Interval {
            lo: mul_bounds(a.lo, a.lo).0.max(0.0),
            hi: mul_bounds(a.hi, a.hi).1,
        }
    }

    pub fn powi(&self, e: u32) -> Interval {
        match e {
            0 => Interval::ONE,
            1 => *self,
            _ => {
                let base = if e % 2 == 0 { self.abs() } else { *self };
                let mut acc = Interval::ONE;
                // Repeated multiplication keeps the rounding analysis trivial;
                // exponents stay small here.
                for _ in 0..e {
                    acc = acc * base;
                }
                if e % 2 == 0 {
                    Interval {
                        lo: acc.lo.max(0.0),
                        hi: acc.hi,
                    }
                } else {
                    acc
                }
            }
        }
    }

    /// Square root of the nonnegative part.
    pub fn sqrt(&self) -> Interval {
        let lo = self.lo.max(0.0);
        let hi = self.hi.max(0.0);
        let (sl, sh) = (lo.sqrt(), hi.sqrt());
        let exact = |s: f64, x: f64| s.mul_add(s, -x) == 0.0;
        Interval {
            lo: if exact(sl, lo) { sl } else { down(sl).max(0.0) },
            hi: if exact(sh, hi) { sh } else { up(sh) },
        }
    }

    pub fn exp(&self) -> Interval {
        Interval {
            lo: down(down(self.lo.exp())).max(0.0),
            hi: up(up(self.hi.exp())),
        }
    }

    /// Natural logarithm; requires `lo > 0`.
    pub fn ln(&self) -> Interval {
        assert!(self.lo > 0.0, "ln of nonpositive interval");
        Interval {
            lo: down(down(self.lo.ln())),
            hi: up(up(self.hi.ln())),
        }
    }

    /// `self^p` for real `p` on a positive interval.
    pub fn powf(&self, p: f64) -> Interval {
        (self.ln() * Interval::point(p)).exp()
    }

    pub fn recip(&self) -> Interval {
        assert!(!self.contains_zero(), "reciprocal of interval containing zero");
        Interval {
            lo: down(1.0 / self.hi),
            hi: up(1.0 / self.lo),
        }
    }

    pub fn div(&self, other: &Interval) -> Interval {
        *self * other.recip()
    }

    pub fn scale(&self, k: f64) -> Interval {
        *self * Interval::point(k)
    }

    /// Splits at the midpoint.
    pub fn bisect(&self) -> (Interval, Interval) {
        let m = self.mid();
        (
            Interval { lo: self.lo, hi: m },
            Interval { lo: m, hi: self.hi },
        )
    }
}

impl Default for Interval {
    fn default() -> Self {
        Interval::ZERO
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: add_bounds(self.lo, rhs.lo).0,
            hi: add_bounds(self.hi, rhs.hi).1,
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval {
            lo: add_bounds(self.lo, -rhs.hi).0,
            hi: add_bounds(self.hi, -rhs.lo).1,
        }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let corners = [
            mul_bounds(self.lo, rhs.lo),
            mul_bounds(self.lo, rhs.hi),
            mul_bounds(self.hi, rhs.lo),
            mul_bounds(self.hi, rhs.hi),
        ];
        Interval {
            lo: corners.iter().map(|c| c.0).fold(f64::INFINITY, f64::min),
            hi: corners.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

/// Euclidean norm enclosure of a vector of intervals.
pub fn norm(v: &[Interval]) -> Interval {
    v.iter()
        .fold(Interval::ZERO, |acc, x| acc + x.sqr())
        .sqrt()
}
