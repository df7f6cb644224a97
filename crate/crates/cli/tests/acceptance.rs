//! Acceptance suite. Prints one PASS/FAIL line per criterion; pass numbers
//! (e.g. `cargo test --test acceptance -- 5 8`) to run a subset.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use arithclass_core::classes::{derived_sequence, rho_sequence, shell_count, tail_sum_exact};
use arithclass_core::exterior::ht_subgroup_norm;
use arithclass_core::io::{read_bounds_csv, read_density_csv};
use arithclass_core::lattice::{
    delta_enclosed, flowed_embedding_enclosure, lemma_eps_enclosure, sigma_with, Engine,
    DEFAULT_NODE_BUDGET,
};
use arithclass_core::maps::{Hypercube, Polynomial, PolynomialMap};
use arithclass_core::measure::{
    band_preimage_volume_raw, ctau_check, ctau_constant, km_probe, sublevel_volume, KmProbeSpec,
    Method,
};
use arithclass_core::scalar::parse_real;
use arithclass_core::{
    membership, sigma_profile, BigInt, BigRational, DecreasingSequence, DiscreteSubgroup,
    IntVector, NormKind, SeqValue, TargetVector, VerdictStatus,
};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BIN: &str = env!("CARGO_BIN_EXE_arithclass");

const EXTERIOR_REL_TOL: f64 = 1e-9;
const DENSITY_FLOOR: f64 = 0.99;
const TAIL_CEILING: f64 = 1e-2;
const SLOPE_RANGE: [f64; 2] = [0.4, 0.6];
const ORACLE_REL_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    /// Set when the failure is the documented one and the rest of the
    /// criterion holds.
    known: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome {
            pass,
            known: false,
            detail,
        }
    }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

fn phi() -> BigRational {
    parse_real("phi", 128).unwrap().value
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))
            .unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    d
}

fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![vec![]];
    }
    if n < r {
        return vec![];
    }
    let mut out = subsets(n - 1, r);
    for mut s in subsets(n - 1, r - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

// Norm of u_1 ∧ .. ∧ u_r as the root of the sum of squared r×r minors.
fn plucker_norm(rows: &[Vec<f64>]) -> f64 {
    let m = rows[0].len();
    subsets(m, rows.len())
        .iter()
        .map(|cols| {
            let minor: Vec<Vec<f64>> = rows
                .iter()
                .map(|row| cols.iter().map(|&c| row[c]).collect())
                .collect();
            det(minor).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 500 {
        let n = rng.gen_range(1..=5usize);
        let r = rng.gen_range(1..=n);
        let t = rng.gen_range(-3.0..=3.0);
        let basis: Vec<Vec<f64>> = (0..r)
            .map(|_| (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let gram: Vec<Vec<f64>> = basis
            .iter()
            .map(|a| basis.iter().map(|b| dot(a, b)).collect())
            .collect();
        let scale: f64 = basis.iter().map(|b| dot(b, b)).product();
        if det(gram) < 1e-6 * scale {
            continue;
        }
        let offset: Vec<BigRational> = (0..n)
            .map(|_| rat(rng.gen_range(-1000..=1000), rng.gen_range(1..=1000)))
            .collect();
        let slope: Vec<Vec<BigRational>> = (0..n)
            .map(|_| vec![rat(rng.gen_range(-100..=100), rng.gen_range(1..=100))])
            .collect();
        let f = PolynomialMap::affine(&offset, &slope);
        let x = [rng.gen_range(-1.0..1.0)];
        let gamma = DiscreteSubgroup::new(basis.clone()).unwrap();
        let closed = ht_subgroup_norm(&f, &x, t, &gamma).unwrap();

        let value = f.eval(&x).unwrap();
        let image: Vec<Vec<f64>> = basis
            .iter()
            .map(|u| {
                let mut row: Vec<f64> = u.iter().map(|c| (-t).exp() * c).collect();
                row.push((n as f64 * t).exp() * dot(u, &value));
                row
            })
            .collect();
        let brute = plucker_norm(&image);
        worst = worst.max((closed - brute).abs() / brute.abs().max(f64::MIN_POSITIVE));
        done += 1;
    }
    Outcome::new(
        worst <= EXTERIOR_REL_TOL,
        format!("500 instances, worst relative error {worst:.2e} (tolerance {EXTERIOR_REL_TOL:e})"),
    )
}

fn random_alpha(rng: &mut ChaCha8Rng, n: usize) -> TargetVector {
    TargetVector::new(
        (0..n)
            .map(|_| {
                let q = rng.gen_range(2..1_000_000i64);
                rat(rng.gen_range(-3 * q..=3 * q), q)
            })
            .collect(),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut mismatches, mut non_monotone, mut bad_witness, mut compared) = (0, 0, 0, 0);
    for _ in 0..100 {
        let n = rng.gen_range(1..=3usize);
        let alpha = random_alpha(&mut rng, n);
        for k in 0..=6 {
            let a = sigma_with(&alpha, k, Engine::Exhaustive, NormKind::Euclidean, DEFAULT_NODE_BUDGET).unwrap();
            let b = sigma_with(&alpha, k, Engine::BranchAndBound, NormKind::Euclidean, DEFAULT_NODE_BUDGET).unwrap();
            compared += 1;
            mismatches += (a.value != b.value) as u32;
        }
        let p = sigma_profile(&alpha, 6, NormKind::Euclidean, DEFAULT_NODE_BUDGET).unwrap();
        non_monotone += !p.is_nonincreasing() as u32;
        bad_witness += !p.witnesses_certify(&alpha) as u32;
    }
    Outcome::new(
        mismatches + non_monotone + bad_witness == 0,
        format!(
            "{compared} engine comparisons: {mismatches} mismatches, {non_monotone} non-monotone profiles, {bad_witness} bad witnesses"
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut checked, mut violations, mut uncertified) = (0, 0, 0);
    while checked < 200 {
        let n = rng.gen_range(2..=3usize);
        let alpha = random_alpha(&mut rng, n);
        let i = IntVector::new((0..n).map(|_| rng.gen_range(-30..=30)).collect());
        if i.is_zero() {
            continue;
        }
        let v = alpha.abs_dot(&i).to_f64().unwrap();
        let lo = (v * (1.0 + 1e-6)).max(v.next_up());
        let norm = i.norm();
        if lo >= norm {
            continue;
        }
        let a = lo + rng.gen_range(0.0..1.0) * (norm - lo);
        let (eps, t) = lemma_eps_enclosure(a, &i, n).unwrap();
        let d = delta_enclosed(&flowed_embedding_enclosure(&alpha, t.mid())).unwrap();
        checked += 1;
        uncertified += !d.certified as u32;
        violations += !(d.enclosure.hi() <= eps.lo()) as u32;
    }
    Outcome::new(
        violations == 0 && uncertified == 0,
        format!("{checked} triples, {violations} violations, {uncertified} uncertified enumerations"),
    )
}

fn worked_sequence() -> DecreasingSequence {
    DecreasingSequence::geometric(rat(1, 5), rat(1, 1)).unwrap()
}

fn criterion_4() -> Outcome {
    let mut problems = Vec::new();
    for n in 1..=3usize {
        for k in 1..=6u32 {
            let count = BigInt::from(shell_count(n, k).unwrap());
            if count > BigInt::one() << ((k as usize + 1) * n) {
                problems.push(format!("shell n={n} k={k}"));
            }
            let tail = tail_sum_exact(n, k).unwrap();
            if tail > BigRational::from_integer(BigInt::one() << (n + 1)) {
                problems.push(format!("tail n={n} K={k}"));
            }
        }
    }
    let rho = rho_sequence(&worked_sequence(), 2, 1, 2).unwrap();
    let half = rat(1, 2);
    let big_n = rho.threshold;
    match big_n {
        None => problems.push("no threshold N".into()),
        Some(start) => {
            for k in start..=start + 64 {
                if rho.seq.value(k).unwrap().cmp_rational(&half) != std::cmp::Ordering::Less {
                    problems.push(format!("rho_{k}"));
                }
            }
        }
    }
    Outcome::new(
        problems.is_empty(),
        format!("shells and tails for n<=3, k<=6; rho threshold N={big_n:?}; problems {problems:?}"),
    )
}

fn run_cli(cmd: &str, config: &Path, out: &Path, threads: usize) -> i32 {
    Command::new(BIN)
        .args([cmd, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--threads", &threads.to_string()])
        .output()
        .unwrap()
        .status
        .code()
        .unwrap_or(-1)
}

fn criterion_5(out: &Path) -> Outcome {
    let alpha = TargetVector::new(vec![BigRational::one(), phi()]);
    let a = worked_sequence();
    let verdict = membership(&alpha, &a, 12, DEFAULT_NODE_BUDGET).unwrap();
    let in_class = verdict.status == VerdictStatus::InClassUpTo { k: 12 };

    let derived = derived_sequence(&a, 2, 1, 2).unwrap();
    let c6 = rat(1, 5).pow(6);
    let formula_ok = (0..=12u32).all(|k| {
        let want = &c6 / BigRational::from_integer(BigInt::one() << (32 * k as usize));
        derived.value(k).unwrap().cmp(&SeqValue::rational(want)) == std::cmp::Ordering::Equal
    });

    let code = run_cli("density", &configs().join("density_worked.json"), out, 1);
    if code != 0 {
        return Outcome::new(false, format!("density exited with {code}"));
    }
    let rows = read_density_csv(fs::read_to_string(out.join("density.csv")).unwrap().as_bytes()).unwrap();
    let lbs: Vec<f64> = rows.iter().map(|r| r.density_lb).collect();
    let radii_ok = rows.len() == 4 && rows.windows(2).all(|w| w[1].r < w[0].r);
    let monotone = lbs.windows(2).all(|w| w[1] >= w[0]);
    let last = *lbs.last().unwrap();
    let tail = rows[0].truncation_tail;
    Outcome::new(
        in_class && formula_ok && radii_ok && monotone && last >= DENSITY_FLOOR && tail < TAIL_CEILING,
        format!(
            "f(0) in C_12(a): {in_class}; a' formula exact: {formula_ok}; density_lb {lbs:?}; tail {tail:.3e}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let cube = Hypercube::new(vec![0.0], 1.0);
    let eps = [1e-4, 1e-3, 1e-2, 1e-1, 1.0];
    let (mut oracle_misses, mut violations, mut checks) = (0, 0, 0);
    for l in 1..=3u32 {
        let g = Polynomial::monomial(1, vec![l], BigRational::one());
        let f = PolynomialMap::new(1, l, vec![g.clone()]).unwrap();
        let c = ctau_constant(&f, &cube).unwrap();
        let method = Method::Grid { budget: 100_000 };
        for &e in &eps {
            let v = sublevel_volume(&g.to_float(), &arithclass_core::measure::Region::Cube(cube.clone()), e, method).unwrap();
            oracle_misses += !v.agrees_with(e.powf(1.0 / l as f64)) as u32;
        }
        for r in ctau_check(&g.to_float(), &cube, c, 1.0 / l as f64, &eps, method, 4096).unwrap() {
            checks += 1;
            violations += !r.satisfied as u32;
        }
    }
    Outcome::new(
        oracle_misses == 0 && violations == 0,
        format!("{checks} bound checks, {violations} violations, {oracle_misses} oracle disagreements"),
    )
}

// Length of {x ∈ [-r, r] : |c0 + c1 x + c2 x²| <= w}.
fn quadratic_band_length(c0: f64, c1: f64, c2: f64, w: f64, r: f64) -> f64 {
    let q = |x: f64| c0 + c1 * x + c2 * x * x;
    let mut cuts = vec![-r, r];
    for level in [w, -w] {
        let c = c0 - level;
        if c2 == 0.0 {
            if c1 != 0.0 {
                cuts.push(-c / c1);
            }
            continue;
        }
        let disc = c1 * c1 - 4.0 * c2 * c;
        if disc < 0.0 {
            continue;
        }
        let sign = if c1 >= 0.0 { 1.0 } else { -1.0 };
        let s = -0.5 * (c1 + sign * disc.sqrt());
        if s != 0.0 {
            cuts.push(s / c2);
            cuts.push(c / s);
        } else {
            cuts.push(0.0);
        }
    }
    cuts.retain(|x| x.abs() <= r);
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2)
        .filter(|p| q(0.5 * (p[0] + p[1])).abs() <= w)
        .map(|p| p[1] - p[0])
        .sum()
}

fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn criterion_7() -> Outcome {
    let alpha = vec![BigRational::one(), phi()];
    let f = PolynomialMap::shifted_moment_curve(&alpha);
    let r = 0.1;
    let multipliers = vec![2.0, 4.0, 8.0, 16.0, 32.0];
    let spec = KmProbeSpec {
        k_max: 8,
        calibrate_max: 4,
        big_a: 1e4,
        r,
        multipliers: multipliers.clone(),
        grid_budget: 100_000,
        sigma_budget: DEFAULT_NODE_BUDGET,
    };
    let probe = km_probe(&f, &spec).unwrap();
    let active = |rs: &[arithclass_core::BoundReport]| rs.iter().filter(|b| !b.is_skipped()).count();
    let failed = |rs: &[arithclass_core::BoundReport]| {
        rs.iter().filter(|b| !b.is_skipped() && !b.satisfied).count()
    };
    let bound_failures = failed(&probe.calibration) + failed(&probe.validation);
    let validated = active(&probe.validation);

    // closed-form band lengths against the estimator, per witness
    let target = TargetVector::new(alpha.clone());
    let profile = sigma_profile(&target, 8, NormKind::Euclidean, DEFAULT_NODE_BUDGET).unwrap();
    let (mut oracle_misses, mut oracle_slopes) = (0, Vec::new());
    let mut seen: Vec<Vec<i64>> = Vec::new();
    for e in profile.entries.iter().filter(|e| e.k >= 1 && !e.value.is_zero()) {
        let i = e.witness.0.clone();
        if seen.contains(&i) {
            continue;
        }
        seen.push(i.clone());
        let c0 = target.dot(&e.witness).to_f64().unwrap();
        let base = e.value.abs().to_f64().unwrap();
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for m in &multipliers {
            let w = base * m;
            let exact = quadratic_band_length(c0, i[0] as f64, i[1] as f64, w, r);
            let est = band_preimage_volume_raw(&f, &i, w, r, Method::Grid { budget: 100_000 }).unwrap();
            if (est.value - exact).abs() > est.error + ORACLE_REL_TOL * exact {
                oracle_misses += 1;
            }
            if exact < 0.99 * 2.0 * r {
                xs.push(w);
                ys.push(exact);
            }
        }
        if xs.len() >= 2 {
            oracle_slopes.push(loglog_slope(&xs, &ys));
        }
    }
    let slopes: Vec<f64> = probe.slopes.iter().map(|s| s.slope).collect();
    let in_range = |s: &f64| SLOPE_RANGE[0] <= *s && *s <= SLOPE_RANGE[1];
    let slopes_ok = !slopes.is_empty() && slopes.iter().all(in_range);
    let core_ok = bound_failures == 0 && validated > 0 && oracle_misses == 0;
    let fmt = |v: &[f64]| v.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>().join(", ");
    Outcome {
        pass: core_ok && slopes_ok,
        known: core_ok && !slopes_ok,
        detail: format!(
            "C={:.4}, {} calibration + {validated} validation checks, {bound_failures} violations, {oracle_misses} oracle disagreements; \
             slopes [{}] (closed form [{}]) vs range {:?}",
            probe.fitted_c,
            active(&probe.calibration),
            fmt(&slopes),
            fmt(&oracle_slopes),
            SLOPE_RANGE
        ),
    }
}

fn criterion_8(density_single: &Path, scratch: &Path) -> Outcome {
    let mut diffs = Vec::new();
    let density_multi = scratch.join("density-4");
    run_cli("density", &configs().join("density_worked.json"), &density_multi, 4);
    for name in ["density.csv", "density.svg", "bands.svg"] {
        if fs::read(density_single.join(name)).ok() != fs::read(density_multi.join(name)).ok() {
            diffs.push(name.to_string());
        }
    }
    let runs: Vec<PathBuf> = [(1usize, "a"), (4, "b"), (1, "c")]
        .iter()
        .map(|(threads, tag)| {
            let dir = scratch.join(format!("verify-{tag}"));
            run_cli("verify", &configs().join("verify_worked.json"), &dir, *threads);
            dir
        })
        .collect();
    let reference = fs::read(runs[0].join("bounds.csv")).unwrap_or_default();
    let parsed = read_bounds_csv(reference.as_slice()).map(|r| r.len()).unwrap_or(0);
    for dir in &runs[1..] {
        if fs::read(dir.join("bounds.csv")).unwrap_or_default() != reference {
            diffs.push(format!("{}/bounds.csv", dir.display()));
        }
    }
    Outcome::new(
        diffs.is_empty() && parsed > 0 && density_single.join("density.csv").exists(),
        format!("density (threads 1 vs 4) and verify (threads 1, 4, 1; {parsed} bound rows); differing files {diffs:?}"),
    )
}

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let selected = |n: u32| wanted.is_empty() || wanted.contains(&n);
    let scratch = tempfile::tempdir().unwrap();
    let density_dir = scratch.path().join("density-1");
    let budgets: [(u32, Duration); 8] = [
        (1, Duration::from_secs(10)),
        (2, Duration::from_secs(60)),
        (3, Duration::from_secs(300)),
        (4, Duration::from_secs(60)),
        (5, Duration::from_secs(600)),
        (6, Duration::from_secs(60)),
        (7, Duration::from_secs(300)),
        (8, Duration::from_secs(1800)),
    ];
    let mut unexpected = 0;
    for (n, budget) in budgets {
        if !selected(n) {
            continue;
        }
        let start = Instant::now();
        let outcome = match n {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(),
            4 => criterion_4(),
            5 => criterion_5(&density_dir),
            6 => criterion_6(),
            7 => criterion_7(),
            _ => {
                if !density_dir.join("density.csv").exists() {
                    run_cli("density", &configs().join("density_worked.json"), &density_dir, 1);
                }
                criterion_8(&density_dir, scratch.path())
            }
        };
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = outcome.pass && in_time;
        let label = if pass {
            "PASS"
        } else if outcome.known && in_time {
            "FAIL (known)"
        } else {
            unexpected += 1;
            "FAIL"
        };
        println!(
            "criterion {n}: {label} [{:.1} s of {} s] {}",
            elapsed.as_secs_f64(),
            budget.as_secs(),
            outcome.detail
        );
    }
    if unexpected > 0 {
        eprintln!("{unexpected} acceptance criteria failed");
        std::process::exit(1);
    }
}
