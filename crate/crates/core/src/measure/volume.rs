use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{EstimateMethod, MeasureError, Region, ScalarFn, VolumeEstimate};
use crate::interval::Interval;
use crate::maps::{cells_per_axis, Hypercube};

/// Samples drawn from one RNG stream.
const BATCH: u64 = 4096;
const MIN_GRID_BUDGET: u64 = 1000;
const MAX_DEPTH: u32 = 48;
/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Estimator selection for [`sublevel_volume`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    /// Interval grid with at most `budget` cell evaluations, refining
    /// boundary cells adaptively.
    Grid { budget: u64 },
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Cell {
    In,
    Out,
    Boundary,
}

fn classify<F: ScalarFn + ?Sized>(g: &F, region: &Region, eps: f64, cell: &[Interval]) -> Cell {
    let in_region = region.classify(cell);
    if in_region == Some(false) {
        return Cell::Out;
    }
    let v = g.eval_interval(cell);
    if v.mig() > eps {
        Cell::Out
    } else if v.mag() <= eps && in_region == Some(true) {
        Cell::In
    } else {
        Cell::Boundary
    }
}

fn cell_volume(cell: &[Interval]) -> Interval {
    cell.iter().fold(Interval::ONE, |acc, x| {
        acc * (Interval::point(x.hi()) - Interval::point(x.lo()))
    })
}

fn split_cell(cell: &[Interval]) -> Vec<Vec<Interval>> {
    let d = cell.len();
    (0..1usize << d)
        .map(|mask| {
            cell.iter()
                .enumerate()
                .map(|(axis, x)| {
                    let (l, r) = x.bisect();
                    if mask >> axis & 1 == 1 {
                        r
                    } else {
                        l
                    }
                })
                .collect()
        })
        .collect()
}

/// Lebesgue measure of `{x ∈ region : |g(x)| <= eps}`.
pub fn sublevel_volume<F: ScalarFn + ?Sized>(
    g: &F,
    region: &Region,
    eps: f64,
    method: Method,
) -> Result<VolumeEstimate, MeasureError> {
    if !(eps >= 0.0) {
        return Err(MeasureError::NegativeEpsilon(eps));
    }
    if g.dim() != region.dim() {
        return Err(MeasureError::Dimension {
            expected: region.dim(),
            found: g.dim(),
        });
    }
    match method {
        Method::Grid { budget } => grid_volume(g, region, eps, budget),
        Method::MonteCarlo { samples, seed } => {
            let cube = region.bounding_cube();
            let hits = monte_carlo_hits(&cube, samples, seed, |x| {
                region.contains(x) && g.eval(x).abs() <= eps
            });
            Ok(mc_estimate(cube.volume(), hits, samples, seed))
        }
    }
}

fn grid_volume<F: ScalarFn + ?Sized>(
    g: &F,
    region: &Region,
    eps: f64,
    budget: u64,
) -> Result<VolumeEstimate, MeasureError> {
    if budget < MIN_GRID_BUDGET {
        return Err(MeasureError::BudgetTooSmall {
            got: budget,
            min: MIN_GRID_BUDGET,
        });
    }
    let d = region.dim();
    let cube = region.bounding_cube();
    let cells = cube.grid_cells(cells_per_axis(d, (budget / 4) as usize));
    let mut work = cells.len() as u64;
    let mut inside = Interval::ZERO;
    let mut boundary = Vec::new();
    let tally = |cells: Vec<Vec<Interval>>, inside: &mut Interval, boundary: &mut Vec<Vec<Interval>>| {
        let kinds: Vec<Cell> = cells.par_iter().map(|c| classify(g, region, eps, c)).collect();
        for (c, kind) in cells.into_iter().zip(kinds) {
            match kind {
                Cell::In => *inside = *inside + cell_volume(&c),
                Cell::Boundary => boundary.push(c),
                Cell::Out => {}
            }
        }
    };
    tally(cells, &mut inside, &mut boundary);
    let fan_out = 1u64 << d;
    let mut depth = 0;
    while !boundary.is_empty()
        && depth < MAX_DEPTH
        && work + boundary.len() as u64 * fan_out <= budget
    {
        let children: Vec<Vec<Interval>> = boundary.iter().flat_map(|c| split_cell(c)).collect();
        work += children.len() as u64;
        boundary.clear();
        tally(children, &mut inside, &mut boundary);
        depth += 1;
    }
    let rest = boundary
        .iter()
        .fold(Interval::ZERO, |acc, c| acc + cell_volume(c));
    let lo = inside.lo();
    let hi = (inside + rest).hi();
    let value = 0.5 * (lo + hi);
    Ok(VolumeEstimate {
        value,
        error: (hi - value).max(value - lo),
        method: EstimateMethod::Grid,
        samples: work,
        seed: 0,
    })
}

/// Number of uniform samples in `cube` satisfying `pred`. Batch `b` uses
/// stream `b` of the ChaCha8 generator keyed by `seed`, so the count does
/// not depend on the thread count.
pub(crate) fn monte_carlo_hits<P>(cube: &Hypercube, samples: u64, seed: u64, pred: P) -> u64
where
    P: Fn(&[f64]) -> bool + Sync,
{
    let batches = samples.div_ceil(BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let count = BATCH.min(samples - b * BATCH);
            let mut x = vec![0.0; cube.dim()];
            let mut hits = 0u64;
            for _ in 0..count {
                for (xi, lo) in x.iter_mut().zip(&cube.lower) {
                    *xi = lo + cube.side * rng.gen::<f64>();
                }
                hits += pred(&x) as u64;
            }
            hits
        })
        .sum()
}

pub(crate) fn mc_estimate(total: f64, hits: u64, samples: u64, seed: u64) -> VolumeEstimate {
    let p = if samples == 0 { 0.0 } else { hits as f64 / samples as f64 };
    let (lo, hi) = wilson_interval(hits, samples);
    VolumeEstimate {
        value: total * p,
        error: total * (hi - p).max(p - lo),
        method: EstimateMethod::MonteCarlo,
        samples,
        seed,
    }
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval(hits: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Bracket on `sup_K |g|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupBracket {
    /// Attained at a sampled point.
    pub lower: f64,
    /// Certified by interval evaluation over a covering grid.
    pub upper: f64,
}

pub fn sup_norm<F: ScalarFn + ?Sized>(g: &F, cube: &Hypercube, budget: u64) -> SupBracket {
    let d = cube.dim();
    let cells = cube.grid_cells(cells_per_axis(d, budget.max(1) as usize));
    let (lower, upper) = cells
        .par_iter()
        .map(|c| {
            let centre: Vec<f64> = c.iter().map(Interval::mid).collect();
            (g.eval(&centre).abs(), g.eval_interval(c).mag())
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let corners = (0..1usize << d).map(|mask| {
        let x: Vec<f64> = (0..d)
            .map(|axis| cube.lower[axis] + if mask >> axis & 1 == 1 { cube.side } else { 0.0 })
            .collect();
        g.eval(&x).abs()
    });
    let lower = corners.fold(lower, f64::max).min(upper);
    SupBracket { lower, upper }
}
