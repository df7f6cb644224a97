use serde::{Deserialize, Serialize};

use super::density::band_preimage_volume_raw;
use super::{ball_volume, sublevel_volume, sup_norm, MeasureError, Method, Region, ScalarFn, VolumeEstimate};
use crate::classes::ClassError;
use crate::exterior::{ht_subgroup_norm, DiscreteSubgroup};
use crate::interval::Interval;
use crate::lattice::{sigma_profile, NormKind, TargetVector};
use crate::maps::{km_constant, Hypercube, PolynomialMap};

/// One checked inequality `lhs <= rhs`. The check passes when the lower end
/// of the estimate does not exceed the right-hand side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub id: String,
    pub lhs: VolumeEstimate,
    pub rhs: f64,
    /// `rhs - (lhs.value - lhs.error)`
    pub margin: f64,
    pub satisfied: bool,
    /// Set when the side conditions fail; such reports carry no verdict.
    pub skipped: Option<String>,
}

impl BoundReport {
    pub fn new(id: impl Into<String>, lhs: VolumeEstimate, rhs: f64) -> Self {
        let margin = rhs - (lhs.value - lhs.error);
        BoundReport {
            id: id.into(),
            lhs,
            rhs,
            margin,
            satisfied: margin >= 0.0,
            skipped: None,
        }
    }

    pub fn skipped(id: impl Into<String>, reason: impl Into<String>) -> Self {
        BoundReport {
            id: id.into(),
            lhs: VolumeEstimate::exact(f64::NAN),
            rhs: f64::NAN,
            margin: f64::NAN,
            satisfied: false,
            skipped: Some(reason.into()),
        }
    }

    pub fn is_skipped(&self) -> bool {
        self.skipped.is_some()
    }
}

/// Checks `|{x ∈ K : |g(x)| <= ε}| <= C (ε / sup_K |g|)^τ |K|` for each `ε`.
/// The upper sup bracket is used, which makes the right-hand side smallest.
pub fn ctau_check<F: ScalarFn + ?Sized>(
    g: &F,
    cube: &Hypercube,
    c: f64,
    tau: f64,
    eps: &[f64],
    method: Method,
    sup_budget: u64,
) -> Result<Vec<BoundReport>, MeasureError> {
    let sup = sup_norm(g, cube, sup_budget).upper;
    let region = Region::Cube(cube.clone());
    let vol = cube.volume();
    eps.iter()
        .enumerate()
        .map(|(idx, &e)| {
            let lhs = sublevel_volume(g, &region, e, method)?;
            let rhs = if sup > 0.0 {
                c * (e / sup).powf(tau) * vol
            } else {
                f64::INFINITY
            };
            Ok(BoundReport::new(format!("ctau-{idx}"), lhs, rhs))
        })
        .collect()
}

/// `C_{d,l}` from certified derivative bounds of a scalar-valued map on `K`.
pub fn ctau_constant(f: &PolynomialMap, cube: &Hypercube) -> Result<f64, MeasureError> {
    let l = f.curvature_order();
    let b = f.derivative_bounds(cube, l)?;
    Ok(km_constant(f.domain_dim(), l, b.m, b.big_m)?)
}

/// A band-measure instance: integer vector, half-width, radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KmInstance {
    pub i: Vec<i64>,
    pub a: f64,
    pub r: f64,
}

impl KmInstance {
    fn norm(&self) -> f64 {
        self.i.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
    }

    /// `(a ‖i‖^n)^{1/(dl(n+1))} r^{-1/d} |B(0,r)|`, the bound without its
    /// constant.
    pub fn shape(&self, d: usize, l: u32) -> f64 {
        let n = self.i.len() as f64;
        let base = self.a * self.norm().powf(n);
        base.powf(1.0 / (d as f64 * l as f64 * (n + 1.0)))
            * self.r.powf(-1.0 / d as f64)
            * ball_volume(d, self.r)
    }

    /// `(a ‖i‖^n)^{1/(n+1)} <= A r^l` and `a <= ‖i‖`.
    pub fn side_conditions(&self, l: u32, big_a: f64) -> Result<(), String> {
        let n = self.i.len() as f64;
        let lhs = (self.a * self.norm().powf(n)).powf(1.0 / (n + 1.0));
        if lhs > big_a * self.r.powi(l as i32) {
            return Err(format!("(a|i|^n)^(1/(n+1)) = {lhs:e} exceeds A r^l"));
        }
        if self.a > self.norm() {
            return Err(format!("a = {:e} exceeds |i|", self.a));
        }
        Ok(())
    }
}

/// Measures the band preimage of one instance and compares it with
/// `C · shape`.
pub fn km_bound_check(
    f: &PolynomialMap,
    inst: &KmInstance,
    c: f64,
    big_a: f64,
    method: Method,
) -> Result<BoundReport, MeasureError> {
    let id = format!(
        "km-[{}]-a{:e}",
        inst.i.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"),
        inst.a
    );
    if let Err(reason) = inst.side_conditions(f.curvature_order(), big_a) {
        return Ok(BoundReport::skipped(id, reason));
    }
    let lhs = band_preimage_volume_raw(f, &inst.i, inst.a, inst.r, method)?;
    let rhs = c * inst.shape(f.domain_dim(), f.curvature_order());
    Ok(BoundReport::new(id, lhs, rhs))
}

/// Smallest constant making `lhs <= C · shape` hold on every instance,
/// using the upper end of each estimate.
pub fn fit_constant(
    f: &PolynomialMap,
    instances: &[KmInstance],
    method: Method,
) -> Result<f64, MeasureError> {
    let (d, l) = (f.domain_dim(), f.curvature_order());
    instances.iter().try_fold(0.0f64, |acc, inst| {
        let lhs = band_preimage_volume_raw(f, &inst.i, inst.a, inst.r, method)?;
        Ok(acc.max(lhs.upper() / inst.shape(d, l)))
    })
}

/// Least-squares slope and intercept of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64), MeasureError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(MeasureError::DegenerateFit("need at least two points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(MeasureError::DegenerateFit("nonpositive value on a log scale".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(MeasureError::DegenerateFit("all abscissae coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub exponent: f64,
    pub coefficient: f64,
    /// `(r, s(r))` with `s(r) = sup_{B(0,r)} ‖h_t(x)Γ‖ - ‖h_t(0)Γ‖`.
    pub samples: Vec<(f64, f64)>,
}

/// Fits `s(r) ≈ A r^l` on the given radii. The supremum is taken over a
/// uniform grid of about `points` nodes in each ball.
pub fn growth_exponent_fit(
    f: &PolynomialMap,
    gamma: &DiscreteSubgroup,
    t: f64,
    radii: &[f64],
    points: usize,
) -> Result<GrowthFit, MeasureError> {
    if radii.len() < 3 {
        return Err(MeasureError::DegenerateFit("need at least three radii".into()));
    }
    let d = f.domain_dim();
    let norm = |x: &[f64]| {
        ht_subgroup_norm(f, x, t, gamma).map_err(|e| MeasureError::DegenerateFit(e.to_string()))
    };
    let floor = norm(&vec![0.0; d])?;
    let per_axis = ((points.max(2) as f64).powf(1.0 / d as f64).floor() as usize).max(2);
    let mut samples = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut sup = f64::NEG_INFINITY;
        let total = per_axis.pow(d as u32);
        let mut x = vec![0.0; d];
        for mut idx in 0..total {
            for xi in x.iter_mut() {
                let j = idx % per_axis;
                idx /= per_axis;
                *xi = -r + 2.0 * r * j as f64 / (per_axis - 1) as f64;
            }
            if x.iter().map(|v| v * v).sum::<f64>() <= r * r * (1.0 + 1e-12) {
                sup = sup.max(norm(&x)?);
            }
        }
        samples.push((r, sup - floor));
    }
    if samples.iter().any(|(_, s)| !(*s > 0.0)) {
        return Err(MeasureError::DegenerateFit(
            "the growth vanishes on some radius".into(),
        ));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
    let (slope, intercept) = loglog_slope(&xs, &ys)?;
    Ok(GrowthFit {
        exponent: slope,
        coefficient: intercept.exp(),
        samples,
    })
}

/// Parameters of [`km_probe`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KmProbeSpec {
    /// Witness levels `1..=k_max` are used.
    pub k_max: u32,
    /// Levels `<= calibrate_max` fit the constant; the rest validate it.
    pub calibrate_max: u32,
    pub big_a: f64,
    pub r: f64,
    /// Half-widths are `m |(α,i)|` for each multiplier `m`. Slopes are fitted
    /// on the unsaturated ones (band preimage smaller than the ball).
    pub multipliers: Vec<f64>,
    pub grid_budget: u64,
    pub sigma_budget: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessSlope {
    pub k: u32,
    pub i: Vec<i64>,
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KmProbe {
    pub fitted_c: f64,
    pub calibration: Vec<BoundReport>,
    pub validation: Vec<BoundReport>,
    pub slopes: Vec<WitnessSlope>,
}

/// Band-measure probe along the σ-witnesses of `f(0)`: fits the constant on
/// low levels, checks the remaining levels against it, and records the
/// log-log slope of the measure against the half-width for each witness.
pub fn km_probe(f: &PolynomialMap, spec: &KmProbeSpec) -> Result<KmProbe, MeasureError> {
    let origin = vec![num_rational::BigRational::from_integer(0.into()); f.domain_dim()];
    let alpha = TargetVector::new(f.eval_exact(&origin)?);
    let profile = sigma_profile(&alpha, spec.k_max, NormKind::Euclidean, spec.sigma_budget)
        .map_err(ClassError::from)?;
    let method = Method::Grid { budget: spec.grid_budget };
    let l = f.curvature_order();

    let mut witnesses: Vec<(u32, Vec<i64>, f64)> = Vec::new();
    for e in profile.entries.iter().filter(|e| e.k >= 1) {
        let c = Interval::from_rational(&e.value).mid();
        if c > 0.0 && !witnesses.iter().any(|w| w.1 == e.witness.0) {
            witnesses.push((e.k, e.witness.0.clone(), c));
        }
    }

    let mut calibration = Vec::new();
    let mut validation = Vec::new();
    let mut slopes = Vec::new();
    let mut fitted = 0.0f64;
    let mut measured: Vec<(u32, KmInstance, VolumeEstimate)> = Vec::new();
    for (k, i, c) in &witnesses {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for m in &spec.multipliers {
            let inst = KmInstance { i: i.clone(), a: c * m, r: spec.r };
            let lhs = band_preimage_volume_raw(f, &inst.i, inst.a, inst.r, method)?;
            // saturated bands carry no exponent information
            if lhs.upper() < 0.99 * ball_volume(f.domain_dim(), spec.r) {
                xs.push(inst.a);
                ys.push(lhs.value);
            }
            if inst.side_conditions(l, spec.big_a).is_ok() && *k <= spec.calibrate_max {
                fitted = fitted.max(lhs.upper() / inst.shape(f.domain_dim(), l));
            }
            measured.push((*k, inst, lhs));
        }
        if let Ok((slope, _)) = loglog_slope(&xs, &ys) {
            slopes.push(WitnessSlope { k: *k, i: i.clone(), slope });
        }
    }
    for (k, inst, lhs) in measured {
        let id = format!(
            "km-k{k}-[{}]-a{:.6e}",
            inst.i.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"),
            inst.a
        );
        let report = match inst.side_conditions(l, spec.big_a) {
            Err(reason) => BoundReport::skipped(id, reason),
            Ok(()) => BoundReport::new(id, lhs, fitted * inst.shape(f.domain_dim(), l)),
        };
        if k <= spec.calibrate_max {
            calibration.push(report);
        } else {
            validation.push(report);
        }
    }
    Ok(KmProbe {
        fitted_c: fitted,
        calibration,
        validation,
        slopes,
    })
}
