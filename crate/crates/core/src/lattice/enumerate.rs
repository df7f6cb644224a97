//! Canonical enumeration of integer points in a ball: one representative
//! (first nonzero coordinate positive) per antipodal pair.

use num_integer::Roots;

use super::{IntVector, NormKind};

/// `floor(r²)` computed so that `k² <= r²` exactly for every counted `k`.
pub fn radius_sq_floor(r: f64) -> u64 {
    if !(r >= 1.0) {
        return 0;
    }
    let mut s = (r * r).floor() as u64;
    // correct the float estimate against the exact test `s <= r^2`
    while s > 0 && !le_sq(s, r) {
        s -= 1;
    }
    while le_sq(s + 1, r) {
        s += 1;
    }
    s
}

// `s <= r^2` decided exactly via the rational value of r.
fn le_sq(s: u64, r: f64) -> bool {
    use num_rational::BigRational;
    use num_bigint::BigInt;
    let q = BigRational::from_float(r).expect("finite radius");
    BigRational::from_integer(BigInt::from(s)) <= &q * &q
}

/// Smallest `k` with `‖i‖ <= 2^k` (euclidean: `‖i‖² <= 4^k`).
pub fn level_of(norm_sq: u128, sup: u64, kind: NormKind) -> u32 {
    let mut k = 0u32;
    match kind {
        NormKind::Euclidean => {
            while (1u128 << (2 * k)) < norm_sq {
                k += 1;
            }
        }
        NormKind::Sup => {
            while (1u64 << k) < sup {
                k += 1;
            }
        }
    }
    k
}

/// Stream of canonical nonzero integer vectors with `‖i‖ <= r`.
pub fn enumerate_ball(n: usize, r: f64) -> BallIter {
    BallIter::new(n, radius_sq_floor(r), NormKind::Euclidean)
}

/// Same as [`enumerate_ball`] with the bound given as `‖i‖² <= r2`
/// (sup norm: `max |i_j| <= isqrt(r2)`).
pub fn enumerate_ball_sq(n: usize, r2: u64, kind: NormKind) -> BallIter {
    BallIter::new(n, r2, kind)
}

/// Odometer over canonical lattice points, lexicographic in coordinates.
#[derive(Clone, Debug)]
pub struct BallIter {
    r2: u64,
    kind: NormKind,
    coords: Vec<i64>,
    rems: Vec<u64>,
    state: IterState,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum IterState {
    Fresh,
    Running,
    Done,
}

impl BallIter {
    fn new(n: usize, r2: u64, kind: NormKind) -> Self {
        BallIter {
            r2,
            kind,
            coords: vec![0; n],
            rems: vec![r2; n + 1],
            state: if n == 0 || r2 == 0 {
                IterState::Done
            } else {
                IterState::Fresh
            },
        }
    }

    fn bound(&self, p: usize) -> i64 {
        self.rems[p].sqrt() as i64
    }

    fn prefix_zero(&self, p: usize) -> bool {
        self.coords[..p].iter().all(|&c| c == 0)
    }

    fn low(&self, p: usize) -> i64 {
        if self.prefix_zero(p) {
            0
        } else {
            -self.bound(p)
        }
    }

    fn set(&mut self, p: usize, v: i64) {
        self.coords[p] = v;
        self.rems[p + 1] = match self.kind {
            NormKind::Euclidean => self.rems[p] - (v * v) as u64,
            NormKind::Sup => self.r2,
        };
    }

    fn reset_from(&mut self, p: usize) {
        for q in p..self.coords.len() {
            let lo = self.low(q);
            self.set(q, lo);
        }
    }

    fn advance(&mut self) -> bool {
        for p in (0..self.coords.len()).rev() {
            if self.coords[p] < self.bound(p) {
                let v = self.coords[p] + 1;
                self.set(p, v);
                self.reset_from(p + 1);
                return true;
            }
        }
        false
    }
}

impl Iterator for BallIter {
    type Item = IntVector;

    fn next(&mut self) -> Option<IntVector> {
        loop {
            match self.state {
                IterState::Done => return None,
                IterState::Fresh => {
                    self.reset_from(0);
                    self.state = IterState::Running;
                }
                IterState::Running => {
                    if !self.advance() {
                        self.state = IterState::Done;
                        return None;
                    }
                }
            }
            if self.coords.iter().any(|&c| c != 0) {
                return Some(IntVector(self.coords.clone()));
            }
        }
    }
}

/// Visits every canonical vector of the ball whose leading coordinate is
/// `lead`, passing the coordinates and `‖i‖²`. Slices for `lead = 0..=isqrt(r2)`
/// partition the ball, which is how the exhaustive engine parallelises.
pub fn visit_ball_slice<F>(n: usize, r2: u64, kind: NormKind, lead: i64, mut f: F)
where
    F: FnMut(&[i64], u128),
{
    let bound = r2.sqrt() as i64;
    if n == 0 || lead < 0 || lead > bound {
        return;
    }
    let mut buf = vec![0i64; n];
    buf[0] = lead;
    let rem = match kind {
        NormKind::Euclidean => r2 - (lead * lead) as u64,
        NormKind::Sup => r2,
    };
    rec(1, rem, lead == 0, (lead * lead) as u128, r2, kind, &mut buf, &mut f);
}

#[allow(clippy::too_many_arguments)]
fn rec<F>(
    pos: usize,
    rem: u64,
    all_zero: bool,
    acc: u128,
    r2: u64,
    kind: NormKind,
    buf: &mut [i64],
    f: &mut F,
) where
    F: FnMut(&[i64], u128),
{
    if pos == buf.len() {
        if !all_zero {
            f(buf, acc);
        }
        return;
    }
    let m = rem.sqrt() as i64;
    let lo = if all_zero { 0 } else { -m };
    for v in lo..=m {
        buf[pos] = v;
        let sq = (v * v) as u64;
        let next = match kind {
            NormKind::Euclidean => rem - sq,
            NormKind::Sup => r2,
        };
        rec(pos + 1, next, all_zero && v == 0, acc + sq as u128, r2, kind, buf, f);
    }
}
