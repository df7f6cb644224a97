use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use arithclass_core::classes::{candidate_bands, rho_sequence, shell_count, tail_sum_exact};
use arithclass_core::interval::Interval;
use arithclass_core::io::{
    fmt_f64, schema_line, write_bounds_csv, write_density_csv, write_sigma_csv, write_table,
};
use arithclass_core::lattice::{
    delta_enclosed, flowed_embedding_enclosure, lemma_eps_enclosure, single_vector_bound,
    IntVector,
};
use arithclass_core::measure::{
    ctau_check, ctau_constant, density_at_radius, density_curve, km_probe, truncation_tail,
    BoundReport, DensityCurve, DensityOptions, KmProbeSpec, LevelWidth, Method,
};
use arithclass_core::scalar::{format_rational, parse_rational};
use arithclass_core::{
    membership, sigma_profile, BigInt, BigRational, Hypercube, NormKind, Polynomial, PolynomialMap,
};
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::CliError;
use crate::run_config::RunConfig;
use crate::svg;

/// Whether every requested check held.
pub struct Outcome {
    pub passed: bool,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    fn ok(files: Vec<PathBuf>) -> Self {
        Outcome { passed: true, files }
    }
}

fn create(out: &Path, name: &str) -> Result<(BufWriter<File>, PathBuf), CliError> {
    let path = out.join(name);
    Ok((BufWriter::new(File::create(&path)?), path))
}

fn write_json<T: Serialize>(out: &Path, name: &str, kind: &str, body: &T) -> Result<PathBuf, CliError> {
    #[derive(Serialize)]
    struct Stamped<'a, T> {
        schema: String,
        #[serde(flatten)]
        body: &'a T,
    }
    let text = serde_json::to_string_pretty(&Stamped {
        schema: schema_line(kind).trim_start_matches("# ").to_string(),
        body,
    })
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    let path = out.join(name);
    std::fs::write(&path, text + "\n")?;
    Ok(path)
}

fn write_text(out: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    let path = out.join(name);
    std::fs::write(&path, text)?;
    Ok(path)
}

pub fn sigma(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let alpha = cfg.alpha()?;
    let cutoff = cfg.cutoff()?;
    let profile = sigma_profile(&alpha, cutoff, NormKind::Euclidean, cfg.budget)?;
    let (w, csv_path) = create(out, "sigma.csv")?;
    write_sigma_csv(w, &profile)?;

    #[derive(Serialize)]
    struct Witness {
        k: u32,
        witness: Vec<i64>,
        value: String,
    }
    #[derive(Serialize)]
    struct Witnesses {
        witnesses: Vec<Witness>,
    }
    let body = Witnesses {
        witnesses: profile
            .entries
            .iter()
            .map(|e| Witness {
                k: e.k,
                witness: e.witness.0.clone(),
                value: format_rational(&e.value),
            })
            .collect(),
    };
    let json = write_json(out, "witnesses.json", "witnesses", &body)?;
    Ok(Outcome::ok(vec![csv_path, json]))
}

pub fn member(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let alpha = cfg.alpha()?;
    let a = cfg.sequence()?;
    let verdict = membership(&alpha, &a, cfg.cutoff()?, cfg.budget)?;
    let path = write_json(out, "verdict.json", "verdict", &verdict)?;
    Ok(Outcome::ok(vec![path]))
}

fn level_overrides(cfg: &RunConfig) -> Result<Option<Vec<LevelWidth>>, CliError> {
    let Some(levels) = &cfg.levels else {
        return Ok(None);
    };
    let mut out = Vec::with_capacity(levels.len());
    for (idx, lv) in levels.iter().enumerate() {
        if lv.k != idx as u32 + 1 {
            return Err(CliError::Config("`levels` must list k = 1, 2, .. in order".into()));
        }
        let w = parse_rational(&lv.width).map_err(|e| CliError::Config(e.to_string()))?;
        out.push(LevelWidth {
            k: lv.k,
            live: true,
            width: Interval::from_rational(&w).hi(),
        });
    }
    Ok(Some(out))
}

fn origin_value(f: &PolynomialMap) -> Result<Vec<BigRational>, CliError> {
    f.eval_exact(&vec![BigRational::zero(); f.domain_dim()])
        .map_err(|e| CliError::Config(e.to_string()))
}

pub fn density(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let f = cfg.map()?;
    let seed = cfg.seed()?;
    let radii = cfg
        .radii
        .clone()
        .ok_or_else(|| CliError::Config("missing `radii`".into()))?;
    let opts = DensityOptions {
        mc_samples: cfg.mc_samples,
        seed,
        ..DensityOptions::default()
    };
    let curve = match level_overrides(cfg)? {
        Some(levels) => {
            let alpha = origin_value(&f)?;
            if radii.is_empty() || radii.windows(2).any(|w| w[1] >= w[0]) {
                return Err(CliError::Config("radii must be strictly decreasing".into()));
            }
            let points = radii
                .iter()
                .map(|&r| density_at_radius(&f, &alpha, &levels, r, &opts))
                .collect::<Result<Vec<_>, _>>()?;
            let cutoff = levels.len() as u32;
            DensityCurve {
                cutoff,
                truncation_tail: truncation_tail(f.codomain_dim(), f.domain_dim(), cutoff),
                points,
            }
        }
        None => {
            let a = cfg.sequence()?;
            density_curve(&f, &a, &radii, cfg.cutoff()?, cfg.budget, &opts)?
        }
    };
    let (w, csv_path) = create(out, "density.csv")?;
    write_density_csv(w, &curve)?;
    let pts: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.r, p.density_lb)).collect();
    let title = format!(
        "density lower bound, bands up to level {} (truncation tail {:.3e})",
        curve.cutoff, curve.truncation_tail
    );
    let plot = write_text(out, "density.svg", &svg::density_plot(&pts, &title))?;
    let mut files = vec![csv_path, plot];
    if f.codomain_dim() == 2 && cfg.levels.is_none() {
        files.push(bands_svg(cfg, out, &f, radii[0])?);
    }
    Ok(Outcome::ok(files))
}

/// Cap on the band-picture level; pictures with more bands are unreadable.
const PICTURE_LEVEL_CAP: u32 = 6;

fn bands_svg(cfg: &RunConfig, out: &Path, f: &PolynomialMap, r_default: f64) -> Result<PathBuf, CliError> {
    let a = cfg.sequence()?;
    let (d, n, l) = (f.domain_dim(), f.codomain_dim(), f.curvature_order());
    if n != 2 {
        return Err(CliError::Config("band pictures need n = 2".into()));
    }
    let (r, cutoff) = match &cfg.bands {
        Some(b) => (b.r, b.cutoff.unwrap_or(PICTURE_LEVEL_CAP)),
        None => (r_default * f.lipschitz_bound(r_default), PICTURE_LEVEL_CAP),
    };
    let cutoff = cutoff.min(cfg.cutoff.unwrap_or(cutoff));
    let rho = rho_sequence(&a, n as u32, d as u32, l)?.seq;
    let bands = candidate_bands(&a, &rho, r, n, cutoff)?;
    let alpha = origin_value(f)?;
    let centre = [
        Interval::from_rational(&alpha[0]).mid(),
        Interval::from_rational(&alpha[1]).mid(),
    ];
    let plane: Vec<svg::PlaneBand> = bands
        .iter()
        .map(|b| svg::PlaneBand {
            i: [b.i.0[0] as f64, b.i.0[1] as f64],
            w: b.halfwidth.to_f64(),
        })
        .collect();
    let title = format!("B(alpha, {r:.3e}) and candidate bands up to level {cutoff}");
    write_text(out, "bands.svg", &svg::band_picture(centre, r, &plane, &title))
}

pub fn plot_bands(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let f = cfg.map()?;
    let spec = cfg
        .bands
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `bands`".into()))?;
    let path = bands_svg(cfg, out, &f, spec.r)?;
    Ok(Outcome::ok(vec![path]))
}

pub fn flow(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let alpha = cfg.alpha()?;
    let spec = cfg
        .flow
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `flow`".into()))?;
    if spec.steps == 0 || !(spec.t_max >= spec.t_min) {
        return Err(CliError::Config("flow needs steps >= 1 and t_max >= t_min".into()));
    }
    let cutoff = cfg.cutoff.unwrap_or(6);
    let profile = sigma_profile(&alpha, cutoff, NormKind::Euclidean, cfg.budget)?;
    let mut witnesses: Vec<(u32, IntVector, BigRational)> = Vec::new();
    for e in &profile.entries {
        if !witnesses.iter().any(|w| w.1 == e.witness) {
            witnesses.push((e.k, e.witness.clone(), e.value.clone()));
        }
    }

    let mut rows = Vec::new();
    let mut passed = true;
    for s in 0..=spec.steps {
        let t = spec.t_min + (spec.t_max - spec.t_min) * s as f64 / spec.steps as f64;
        let d = delta_enclosed(&flowed_embedding_enclosure(&alpha, t))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let (best, bound) = witnesses
            .iter()
            .map(|w| (&w.1, single_vector_bound(&alpha, &w.1, t)))
            .min_by(|x, y| x.1.hi().total_cmp(&y.1.hi()))
            .expect("profile is nonempty");
        let ok = d.enclosure.lo() <= bound.hi();
        passed &= ok;
        rows.push(vec![
            fmt_f64(t),
            fmt_f64(d.value),
            fmt_f64(d.enclosure.lo()),
            fmt_f64(d.enclosure.hi()),
            d.certified.to_string(),
            best.to_semicolon(),
            fmt_f64(bound.hi()),
        ]);
    }
    let (w, flow_path) = create(out, "flow.csv")?;
    write_table(
        w,
        "flow",
        &["t", "delta", "delta_lo", "delta_hi", "certified", "witness", "witness_bound"],
        &rows,
    )?;

    let n = alpha.dim();
    let mut lemma_rows = Vec::new();
    for (k, i, value) in &witnesses {
        let c = Interval::from_rational(value);
        if c.hi() == 0.0 {
            continue;
        }
        // smallest double strictly above |(α,i)|
        let a = (c.hi() * (1.0 + 1e-6)).max(c.hi().next_up());
        let Ok((eps, t)) = lemma_eps_enclosure(a, i, n) else {
            continue;
        };
        let t_mid = t.mid();
        let d = delta_enclosed(&flowed_embedding_enclosure(&alpha, t_mid))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let ok = d.enclosure.hi() <= eps.lo();
        passed &= ok;
        lemma_rows.push(vec![
            k.to_string(),
            i.to_semicolon(),
            fmt_f64(a),
            fmt_f64(eps.mid()),
            fmt_f64(t_mid),
            fmt_f64(d.enclosure.hi()),
            ok.to_string(),
        ]);
    }
    let (w, lemma_path) = create(out, "lemma.csv")?;
    write_table(
        w,
        "lemma",
        &["k", "witness", "a", "eps", "t", "delta_hi", "satisfied"],
        &lemma_rows,
    )?;
    Ok(Outcome {
        passed,
        files: vec![flow_path, lemma_path],
    })
}

#[derive(Serialize, Default)]
struct Tally {
    checked: usize,
    violations: usize,
    skipped: usize,
}

impl Tally {
    fn add(&mut self, reports: &[BoundReport]) {
        for r in reports {
            if r.is_skipped() {
                self.skipped += 1;
            } else {
                self.checked += 1;
                self.violations += (!r.satisfied) as usize;
            }
        }
    }
}

#[derive(Serialize)]
struct SlopeRow {
    k: u32,
    witness: Vec<i64>,
    slope: f64,
    in_range: bool,
}

#[derive(Serialize)]
struct KmSummary {
    fitted_c: f64,
    calibration: Tally,
    validation: Tally,
    slopes: Vec<SlopeRow>,
    slopes_out_of_range: usize,
}

#[derive(Serialize)]
struct ShellSummary {
    checked: usize,
    violations: Vec<String>,
    rho_threshold: Option<u32>,
}

#[derive(Serialize)]
struct VerifyReport {
    ctau: Option<Tally>,
    km: Option<KmSummary>,
    shells: Option<ShellSummary>,
    passed: bool,
}

fn pow2(e: usize) -> BigInt {
    BigInt::one() << e
}

pub fn verify(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let spec = cfg
        .verify
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `verify`".into()))?;
    let mut reports: Vec<BoundReport> = Vec::new();
    let mut passed = true;

    let ctau = match &spec.ctau {
        None => None,
        Some(c) => {
            let cube = Hypercube::new(vec![0.0], 1.0);
            let mut tally = Tally::default();
            for &l in &c.degrees {
                if l == 0 {
                    return Err(CliError::Config("degrees must be positive".into()));
                }
                let g = Polynomial::monomial(1, vec![l], BigRational::one());
                let f = PolynomialMap::new(1, l, vec![g.clone()])
                    .map_err(|e| CliError::Config(e.to_string()))?;
                let constant = ctau_constant(&f, &cube)?;
                let mut rs = ctau_check(
                    &g.to_float(),
                    &cube,
                    constant,
                    1.0 / l as f64,
                    &c.eps,
                    Method::Grid { budget: c.grid_budget },
                    4096,
                )?;
                for r in rs.iter_mut() {
                    r.id = format!("ctau-l{l}-{}", r.id.trim_start_matches("ctau-"));
                }
                tally.add(&rs);
                reports.extend(rs);
            }
            passed &= tally.violations == 0;
            Some(tally)
        }
    };

    let km = match &spec.km {
        None => None,
        Some(k) => {
            let f = cfg.map()?;
            let probe = km_probe(
                &f,
                &KmProbeSpec {
                    k_max: k.k_max,
                    calibrate_max: k.calibrate_max,
                    big_a: k.big_a,
                    r: k.r,
                    multipliers: k.multipliers.clone(),
                    grid_budget: k.grid_budget,
                    sigma_budget: cfg.budget,
                },
            )?;
            let mut calibration = Tally::default();
            calibration.add(&probe.calibration);
            let mut validation = Tally::default();
            validation.add(&probe.validation);
            let slopes: Vec<SlopeRow> = probe
                .slopes
                .iter()
                .map(|s| SlopeRow {
                    k: s.k,
                    witness: s.i.clone(),
                    slope: s.slope,
                    in_range: k.slope_range[0] <= s.slope && s.slope <= k.slope_range[1],
                })
                .collect();
            let out_of_range = slopes.iter().filter(|s| !s.in_range).count();
            passed &= calibration.violations == 0 && validation.violations == 0 && out_of_range == 0;
            reports.extend(probe.calibration);
            reports.extend(probe.validation);
            Some(KmSummary {
                fitted_c: probe.fitted_c,
                calibration,
                validation,
                slopes,
                slopes_out_of_range: out_of_range,
            })
        }
    };

    let shells = match &spec.shells {
        None => None,
        Some(s) => {
            let mut checked = 0;
            let mut violations = Vec::new();
            for &n in &s.dims {
                for k in 1..=s.k_max {
                    let count = BigInt::from(shell_count(n, k)?);
                    checked += 1;
                    if count > pow2((k as usize + 1) * n) {
                        violations.push(format!("shell n={n} k={k}: {count}"));
                    }
                    let tail = tail_sum_exact(n, k)?;
                    checked += 1;
                    if tail > BigRational::from_integer(pow2(n + 1)) {
                        violations.push(format!("tail n={n} K={k}: {}", format_rational(&tail)));
                    }
                }
            }
            let mut threshold = None;
            if let Some([n, d, l]) = s.rho {
                let a = cfg.sequence()?;
                let rho = rho_sequence(&a, n, d, l)?;
                threshold = rho.threshold;
                match rho.threshold {
                    None => violations.push("no index with rho_k < 1/2".into()),
                    Some(big_n) => {
                        let half = BigRational::new(BigInt::one(), BigInt::from(2));
                        let last = rho.seq.k_max().map_or(big_n + s.rho_span, |m| m.min(big_n + s.rho_span));
                        for k in big_n..=last {
                            checked += 1;
                            if rho.seq.value(k)?.cmp_rational(&half) != std::cmp::Ordering::Less {
                                violations.push(format!("rho_{k} >= 1/2"));
                            }
                        }
                    }
                }
            }
            passed &= violations.is_empty();
            Some(ShellSummary {
                checked,
                violations,
                rho_threshold: threshold,
            })
        }
    };

    let (w, csv_path) = create(out, "bounds.csv")?;
    write_bounds_csv(w, &reports)?;
    let json = write_json(
        out,
        "report.json",
        "verify",
        &VerifyReport {
            ctau,
            km,
            shells,
            passed,
        },
    )?;
    Ok(Outcome {
        passed,
        files: vec![csv_path, json],
    })
}
