use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::volume::{mc_estimate, monte_carlo_hits};
use super::{
    ball_volume, sublevel_volume, EstimateMethod, MeasureError, Method, Region, VolumeEstimate,
};
use crate::classes::{
    exp_index_sq, level_data, level_may_meet, membership, rho_sequence, Band, DecreasingSequence,
};
use crate::interval::Interval;
use crate::lattice::{visit_ball_slice, NormKind, TargetVector};
use crate::maps::{cells_per_axis, FloatPolynomial, Hypercube, MultiIndex, Polynomial, PolynomialMap};

/// `(f(x), i)` as an exact polynomial.
pub fn band_polynomial(f: &PolynomialMap, i: &[i64]) -> Polynomial {
    f.components()
        .iter()
        .zip(i)
        .fold(Polynomial::zero(f.domain_dim()), |acc, (c, &im)| {
            acc.add(&c.scale(&BigRational::from_integer(BigInt::from(im))))
        })
}

/// Measure of `{x ∈ B(0,r) : |(f(x), i)| <= w}`. A zero half-width is a
/// null set.
pub fn band_preimage_volume_raw(
    f: &PolynomialMap,
    i: &[i64],
    w: f64,
    r: f64,
    method: Method,
) -> Result<VolumeEstimate, MeasureError> {
    if i.len() != f.codomain_dim() {
        return Err(MeasureError::Dimension {
            expected: f.codomain_dim(),
            found: i.len(),
        });
    }
    if w == 0.0 {
        return Ok(VolumeEstimate::exact(0.0));
    }
    let g = band_polynomial(f, i).to_float();
    sublevel_volume(&g, &Region::ball(vec![0.0; f.domain_dim()], r), w, method)
}

pub fn band_preimage_volume(
    f: &PolynomialMap,
    band: &Band,
    r: f64,
    method: Method,
) -> Result<VolumeEstimate, MeasureError> {
    band_preimage_volume_raw(f, &band.i.0, band.halfwidth.enclosure().hi(), r, method)
}

/// Upper bound on the length of `{t ∈ I : |h(t)| <= w}` when `|h^(q)| >= c`
/// on the interval `I`: `2q (w/c)^{1/q}`.
pub fn sublevel_bound_1d(q: u32, w: f64, c: f64) -> f64 {
    assert!(q >= 1 && c > 0.0);
    if w <= 0.0 {
        return 0.0;
    }
    let ratio = Interval::point(w).div(&Interval::point(c));
    let root = if q == 1 {
        ratio
    } else {
        let inv = Interval::from_rational(&BigRational::new(BigInt::from(1), BigInt::from(q)));
        (ratio.ln() * inv).exp()
    };
    root.scale(2.0 * q as f64).hi()
}

/// `(2^{1/d}) 2^n 2^{-K}`: bound on the measure lost by ignoring levels
/// beyond the cutoff `K`.
pub fn truncation_tail(n: usize, d: usize, cutoff: u32) -> f64 {
    2f64.powf(1.0 / d as f64) * 2f64.powi(n as i32 - cutoff as i32)
}

/// Per-level input of [`density_at_radius`]: whether level `k` can reach the
/// image ball and an upper bound on its band half-width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelWidth {
    pub k: u32,
    pub live: bool,
    pub width: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityOptions {
    /// Monte-Carlo budget per radius, shared by all fallback bands.
    pub mc_samples: u64,
    pub mc_per_band: u64,
    pub seed: u64,
    /// Grid cells per axis for the range enclosures over `[-r, r]^d`.
    pub range_cells: usize,
}

impl Default for DensityOptions {
    fn default() -> Self {
        DensityOptions {
            mc_samples: 1_000_000,
            mc_per_band: 16_384,
            seed: 0,
            range_cells: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub r: f64,
    /// Estimate of the relative measure of `B(0,r)` not covered by bands.
    pub density: VolumeEstimate,
    /// `max(0, 1 - Σ(v + e) / Vol B(0,r))`.
    pub density_lb: f64,
    pub kappa: f64,
    /// Bands at live levels.
    pub bands_considered: u64,
    /// Bands whose preimage could not be excluded by the range test.
    pub bands_active: u64,
    /// Bands estimated by sampling.
    pub bands_sampled: u64,
    /// Upper bound on the measure of the union of band preimages.
    pub excluded_upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub cutoff: u32,
    pub truncation_tail: f64,
    pub points: Vec<DensityPoint>,
}

/// Ranges of each component over `[-r, r]^d` as the hull over a subgrid.
fn ranges(polys: &[FloatPolynomial], cube: &[Vec<Interval>]) -> Vec<Interval> {
    polys
        .iter()
        .map(|p| {
            cube.iter()
                .map(|c| p.eval_interval(c))
                .reduce(|a, b| a.hull(&b))
                .unwrap_or(Interval::ZERO)
        })
        .collect()
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn band_seed(seed: u64, i: &[i64]) -> u64 {
    i.iter().fold(splitmix(seed), |h, &c| splitmix(h ^ c as u64))
}

#[derive(Default)]
struct SliceTally {
    considered: u64,
    active: u64,
    bound: Interval,
    fallback: Vec<(Vec<i64>, f64)>,
}

/// Union bound for the preimages of all live bands with
/// `exp_index(i) <= cutoff` inside `B(0, r)`. `alpha` must equal `f(0)`.
///
/// Each band is first tested against the range of `(f(x), i)` over the
/// cube `[-r, r]^d`. Surviving bands get the bound `(2r)^{d-1} 2q (w/c)^{1/q}`
/// from any axis `j` and order `q <= l` with `|∂_j^q (f, i)| >= c > 0` on
/// the cube; bands with no such certificate are sampled.
pub fn density_at_radius(
    f: &PolynomialMap,
    alpha: &[BigRational],
    levels: &[LevelWidth],
    r: f64,
    opts: &DensityOptions,
) -> Result<DensityPoint, MeasureError> {
    if !(r > 0.0) {
        return Err(MeasureError::BadRadii);
    }
    let (d, n, l) = (f.domain_dim(), f.codomain_dim(), f.curvature_order());
    if alpha.len() != n {
        return Err(MeasureError::Dimension {
            expected: n,
            found: alpha.len(),
        });
    }
    let vol = ball_volume(d, r);
    let cutoff = levels.len() as u32;
    let cube = Hypercube::enclosing_ball(&vec![0.0; d], r);
    let cells = cube.grid_cells(cells_per_axis(d, opts.range_cells.pow(d as u32)).max(1));

    let shifted: Vec<FloatPolynomial> = f
        .components()
        .iter()
        .zip(alpha)
        .map(|(c, a)| c.sub(&Polynomial::constant(d, a.clone())).to_float())
        .collect();
    let value_range = ranges(&shifted, &cells);
    // derivative_ranges[j][q-1][m]
    let derivative_ranges: Vec<Vec<Vec<Interval>>> = (0..d)
        .map(|j| {
            (1..=l)
                .map(|q| {
                    let dq = f.derivative(&MultiIndex::pure(d, j, q)).to_float();
                    ranges(dq.components(), &cells)
                })
                .collect()
        })
        .collect();
    let alpha_enc: Vec<Interval> = alpha.iter().map(Interval::from_rational).collect();
    let slab = Interval::point(2.0 * r).powi(d as u32 - 1);
    let vol_cap = Interval::point(vol).hi();

    let tallies: Vec<SliceTally> = if levels.iter().any(|lw| lw.live) && cutoff > 0 {
        let r2 = (1u64 << (2 * cutoff)) - 1;
        let lead_max = (r2 as f64).sqrt() as i64;
        let lead_max = (lead_max - 2..=lead_max + 2)
            .filter(|x| *x >= 0 && (*x as u64) * (*x as u64) <= r2)
            .max()
            .unwrap_or(0);
        (0..=lead_max)
            .into_par_iter()
            .map(|lead| {
                let mut t = SliceTally::default();
                visit_ball_slice(n, r2, NormKind::Euclidean, lead, |c, s| {
                    let k = exp_index_sq(s).expect("nonzero");
                    let lw = &levels[k as usize - 1];
                    if !lw.live {
                        return;
                    }
                    t.considered += 1;
                    let iv: Vec<Interval> = c.iter().map(|&x| Interval::point(x as f64)).collect();
                    let centre = iv
                        .iter()
                        .zip(&alpha_enc)
                        .fold(Interval::ZERO, |acc, (i, a)| acc + *i * *a);
                    let range = iv
                        .iter()
                        .zip(&value_range)
                        .fold(centre, |acc, (i, rg)| acc + *i * *rg);
                    if range.mig() > lw.width {
                        return;
                    }
                    t.active += 1;
                    let mut best = f64::INFINITY;
                    for per_axis in &derivative_ranges {
                        for (q, rg) in per_axis.iter().enumerate() {
                            let dq = iv
                                .iter()
                                .zip(rg)
                                .fold(Interval::ZERO, |acc, (i, x)| acc + *i * *x);
                            let lower = dq.mig();
                            if lower > 0.0 {
                                let b = sublevel_bound_1d(q as u32 + 1, lw.width, lower);
                                best = best.min((slab * Interval::point(b)).hi());
                            }
                        }
                    }
                    if best.is_finite() {
                        t.bound = t.bound + Interval::point(best.min(vol_cap));
                    } else {
                        t.fallback.push((c.to_vec(), lw.width));
                    }
                });
                t
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut considered = 0;
    let mut active = 0;
    let mut bound = Interval::ZERO;
    let mut fallback = Vec::new();
    for t in tallies {
        considered += t.considered;
        active += t.active;
        bound = bound + t.bound;
        fallback.extend(t.fallback);
    }
    let sampled = fallback.len() as u64;
    if sampled * opts.mc_per_band > opts.mc_samples {
        return Err(MeasureError::SampleBudgetExhausted(sampled));
    }
    let ball = Region::ball(vec![0.0; d], r);
    let mut mc_value = Interval::ZERO;
    let mut mc_error = Interval::ZERO;
    for (i, w) in &fallback {
        let g = band_polynomial(f, i).to_float();
        let seed = band_seed(opts.seed, i);
        let hits = monte_carlo_hits(&cube, opts.mc_per_band, seed, |x| {
            ball.contains(x) && g.eval(x).abs() <= *w
        });
        let est = mc_estimate(cube.volume(), hits, opts.mc_per_band, seed);
        mc_value = mc_value + Interval::point(est.value);
        mc_error = mc_error + Interval::point(est.error);
    }

    let vol_i = Interval::point(vol);
    let excluded_value = bound + mc_value;
    let excluded_upper = (excluded_value + mc_error).hi();
    let density_value = (Interval::ONE - excluded_value.div(&vol_i)).mid();
    let density_error = mc_error.div(&vol_i).hi();
    let density_lb = (Interval::ONE - Interval::point(excluded_upper).div(&vol_i))
        .lo()
        .max(0.0);
    Ok(DensityPoint {
        r,
        density: VolumeEstimate {
            value: density_value.max(0.0),
            error: density_error,
            method: if sampled > 0 {
                EstimateMethod::MonteCarlo
            } else {
                EstimateMethod::Bound
            },
            samples: sampled * opts.mc_per_band,
            seed: opts.seed,
        },
        density_lb,
        kappa: f64::NAN,
        bands_considered: considered,
        bands_active: active,
        bands_sampled: sampled,
        excluded_upper,
    })
}

/// Density lower bounds of `f^{-1}(C(a))` in `B(0, r)` for each radius,
/// counting bands up to the cutoff. Requires `f(0) ∈ C(a)` up to the cutoff
/// and `f` curved of its order at the origin.
#[allow(clippy::too_many_arguments)]
pub fn density_curve(
    f: &PolynomialMap,
    a: &DecreasingSequence,
    radii: &[f64],
    cutoff: u32,
    sigma_budget: u64,
    opts: &DensityOptions,
) -> Result<DensityCurve, MeasureError> {
    if radii.is_empty()
        || radii.iter().any(|r| !(*r > 0.0))
        || radii.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(MeasureError::BadRadii);
    }
    let (d, n, l) = (f.domain_dim(), f.codomain_dim(), f.curvature_order());
    let origin = vec![BigRational::zero(); d];
    let alpha = f.eval_exact(&origin)?;
    let verdict = membership(&TargetVector::new(alpha.clone()), a, cutoff, sigma_budget)?;
    if !verdict.is_in_class() {
        return Err(MeasureError::NotInClass(Box::new(verdict)));
    }
    if !f.curvature_check(&origin, l)?.is_curved {
        return Err(MeasureError::NotCurved(l));
    }
    let rho = rho_sequence(a, n as u32, d as u32, l)?.seq;
    let data = (1..=cutoff)
        .map(|k| level_data(a, &rho, k))
        .collect::<Result<Vec<_>, _>>()?;
    let mut points = Vec::with_capacity(radii.len());
    for &r in radii {
        let kappa = f.lipschitz_bound(r);
        let levels: Vec<LevelWidth> = data
            .iter()
            .map(|ld| LevelWidth {
                k: ld.k,
                live: level_may_meet(ld, kappa * r),
                width: ld.halfwidth.enclosure().hi(),
            })
            .collect();
        let mut p = density_at_radius(f, &alpha, &levels, r, opts)?;
        p.kappa = kappa;
        points.push(p);
    }
    Ok(DensityCurve {
        cutoff,
        truncation_tail: truncation_tail(n, d, cutoff),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rational};

    fn quadratic_band_length(c: f64, b: f64, a: f64, w: f64, r: f64) -> f64 {
        // measure of {x ∈ [-r, r] : |c + b x + a x²| <= w} by fine sampling
        let n = 2_000_000;
        let h = 2.0 * r / n as f64;
        (0..n)
            .filter(|k| {
                let x = -r + (*k as f64 + 0.5) * h;
                (c + b * x + a * x * x).abs() <= w
            })
            .count() as f64
            * h
    }

    #[test]
    fn one_dimensional_bound_dominates_examples() {
        // |t| <= w on the line: length 2w, bound 2w
        assert!(sublevel_bound_1d(1, 0.3, 1.0) >= 0.6);
        // |t²| <= w: length 2 sqrt(w); bound 4 sqrt(w/2)
        let w = 1e-4;
        assert!(sublevel_bound_1d(2, w, 2.0) >= 2.0 * w.sqrt());
        assert_eq!(sublevel_bound_1d(3, 0.0, 1.0), 0.0);
    }

    #[test]
    fn band_volume_for_moment_curve_matches_direct_count() {
        let f = PolynomialMap::shifted_moment_curve(&[rational(1, 3), rational(-1, 100)]);
        let i = [0, 1];
        let w = 0.002;
        let v = band_preimage_volume_raw(&f, &i, w, 0.5, Method::Grid { budget: 100_000 }).unwrap();
        let oracle = quadratic_band_length(-0.01, 0.0, 1.0, w, 0.5);
        assert!((v.value - oracle).abs() <= v.error + 1e-5, "{v:?} vs {oracle}");
        assert_eq!(
            band_preimage_volume_raw(&f, &i, 0.0, 0.5, Method::Grid { budget: 1000 }).unwrap(),
            VolumeEstimate::exact(0.0)
        );
    }

    #[test]
    fn identity_band_covering_the_ball() {
        let f = PolynomialMap::affine(&[int(0), int(0)], &[vec![int(1), int(0)], vec![int(0), int(1)]]);
        let r = 0.1;
        let v = band_preimage_volume_raw(&f, &[1, 0], 1.0, r, Method::Grid { budget: 40_000 }).unwrap();
        assert!(v.agrees_with(std::f64::consts::PI * r * r), "{v:?}");
    }

    #[test]
    fn wide_bands_leave_no_density() {
        let f = PolynomialMap::affine(&[int(0), int(0)], &[vec![int(1), int(0)], vec![int(0), int(1)]]);
        let levels = [LevelWidth { k: 1, live: true, width: 10.0 }];
        let p = density_at_radius(&f, &[int(0), int(0)], &levels, 0.1, &DensityOptions::default()).unwrap();
        assert_eq!(p.bands_considered, 4);
        assert_eq!(p.density_lb, 0.0);
    }

    #[test]
    fn dead_levels_give_full_density() {
        let f = PolynomialMap::shifted_moment_curve(&[int(1), int(0)]);
        let levels = [LevelWidth { k: 1, live: false, width: 1.0 }];
        let p = density_at_radius(&f, &[int(1), int(0)], &levels, 0.1, &DensityOptions::default()).unwrap();
        assert_eq!(p.bands_considered, 0);
        assert_eq!(p.density_lb, 1.0);
    }

    #[test]
    fn tail_value() {
        assert!((truncation_tail(2, 1, 12) - 2.0 * 4.0 / 4096.0).abs() < 1e-15);
    }
}
