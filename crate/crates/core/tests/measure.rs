use arithclass_core::maps::{Hypercube, Polynomial, PolynomialMap};
use arithclass_core::measure::{
    ball_volume, density_at_radius, density_curve, sublevel_volume, DensityOptions, LevelWidth,
    Method, Region,
};
use arithclass_core::scalar::parse_real;
use arithclass_core::{BigInt, BigRational, DecreasingSequence};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

fn power(l: u32) -> Polynomial {
    Polynomial::monomial(1, vec![l], rat(1, 1))
}

fn unit_interval() -> Region {
    Region::Cube(Hypercube::new(vec![0.0], 1.0))
}

// x² + y² on [-1,1]², whose ε-sublevel set is a disc of area πε.
fn paraboloid() -> Polynomial {
    Polynomial::from_terms(2, [(vec![2, 0], rat(1, 1)), (vec![0, 2], rat(1, 1))])
}

fn square() -> Region {
    Region::Cube(Hypercube::new(vec![-1.0, -1.0], 2.0))
}

#[test]
fn grid_brackets_contain_closed_forms() {
    for l in 1..=3u32 {
        let g = power(l).to_float();
        for eps in [1e-4, 1e-3, 1e-2, 0.1, 0.5] {
            let est = sublevel_volume(&g, &unit_interval(), eps, Method::Grid { budget: 20_000 }).unwrap();
            let truth = f64::powf(eps, 1.0 / l as f64);
            assert!(est.agrees_with(truth), "l={l} eps={eps}: {est:?} vs {truth}");
            assert!(est.error <= 0.05 * truth.max(1e-3), "l={l} eps={eps}: loose bracket {est:?}");
        }
    }
    let g = paraboloid().to_float();
    for eps in [0.01, 0.1, 0.5] {
        let est = sublevel_volume(&g, &square(), eps, Method::Grid { budget: 100_000 }).unwrap();
        assert!(est.agrees_with(std::f64::consts::PI * eps), "eps={eps}: {est:?}");
    }
}

#[test]
fn monte_carlo_covers_closed_forms_in_most_runs() {
    let cases: Vec<(Polynomial, Region, f64, f64)> = vec![
        (power(2), unit_interval(), 0.01, 0.1),
        (power(3), unit_interval(), 1e-3, 0.1),
        (paraboloid(), square(), 0.2, std::f64::consts::PI * 0.2),
    ];
    for (p, region, eps, truth) in cases {
        let g = p.to_float();
        let covered = (0..100u64)
            .filter(|&seed| {
                sublevel_volume(&g, &region, eps, Method::MonteCarlo { samples: 20_000, seed })
                    .unwrap()
                    .agrees_with(truth)
            })
            .count();
        assert!(covered >= 95, "eps={eps}: {covered}/100 runs cover {truth}");
    }
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let g = paraboloid().to_float();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                sublevel_volume(&g, &square(), 0.3, Method::MonteCarlo { samples: 100_000, seed: 7 })
                    .unwrap()
            })
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.error.to_bits(), b.error.to_bits());
}

fn moment(alpha: &[(i64, i64)]) -> PolynomialMap {
    PolynomialMap::shifted_moment_curve(&alpha.iter().map(|&(p, q)| rat(p, q)).collect::<Vec<_>>())
}

// (x, y) ↦ α + (x, y, x² + y²)
fn paraboloid_map(alpha: &[(i64, i64)]) -> PolynomialMap {
    let c = |k: usize| Polynomial::constant(2, rat(alpha[k].0, alpha[k].1));
    let comps = vec![
        c(0).add(&Polynomial::variable(2, 0)),
        c(1).add(&Polynomial::variable(2, 1)),
        c(2).add(&paraboloid()),
    ];
    PolynomialMap::new(2, 2, comps).unwrap()
}

fn integer_points(n: usize, cutoff: u32) -> Vec<(Vec<i64>, u32)> {
    let r = 1i64 << cutoff;
    let mut pts = vec![vec![]];
    for _ in 0..n {
        pts = pts
            .into_iter()
            .flat_map(|p: Vec<i64>| {
                (-r..=r).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    pts.into_iter()
        .filter_map(|p| {
            let s: i64 = p.iter().map(|x| x * x).sum();
            if s == 0 || s >= 1 << (2 * cutoff) {
                return None;
            }
            // 4^{k-1} <= s < 4^k
            let k = (1..=cutoff).find(|&k| s < 1 << (2 * k)).unwrap();
            Some((p, k))
        })
        .collect()
}

// Fraction of B(0,r) covered by the union of the bands, by direct sampling.
fn union_fraction(f: &PolynomialMap, widths: &[f64], r: f64, samples: u64, seed: u64) -> f64 {
    let d = f.domain_dim();
    let pts = integer_points(f.codomain_dim(), widths.len() as u32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut inside, mut hit) = (0u64, 0u64);
    while inside < samples {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-r..r)).collect();
        if x.iter().map(|v| v * v).sum::<f64>() > r * r {
            continue;
        }
        inside += 1;
        let y = f.eval(&x).unwrap();
        let covered = pts.iter().any(|(i, k)| {
            let dot: f64 = i.iter().zip(&y).map(|(&a, b)| a as f64 * b).sum();
            dot.abs() <= widths[*k as usize - 1]
        });
        hit += covered as u64;
    }
    hit as f64 / samples as f64
}

fn levels(widths: &[f64]) -> Vec<LevelWidth> {
    widths
        .iter()
        .enumerate()
        .map(|(k, &width)| LevelWidth {
            k: k as u32 + 1,
            live: true,
            width,
        })
        .collect()
}

fn alpha_of(f: &PolynomialMap) -> Vec<BigRational> {
    f.eval_exact(&vec![BigRational::from_integer(0.into()); f.domain_dim()])
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn union_bound_dominates_sampled_union(
        a1 in -50i64..=50,
        a2 in -50i64..=50,
        w1 in 0.001..0.05f64,
        shrink in 0.1..1.0f64,
        r in 0.05..0.5f64,
    ) {
        let f = moment(&[(a1, 37), (a2, 41)]);
        let widths = [w1, w1 * shrink, w1 * shrink * shrink];
        let p = density_at_radius(&f, &alpha_of(&f), &levels(&widths), r, &DensityOptions::default()).unwrap();
        let samples = 20_000;
        let frac = union_fraction(&f, &widths, r, samples, 1);
        let se = (frac * (1.0 - frac) / samples as f64).sqrt();
        let vol = ball_volume(1, r);
        prop_assert!(p.excluded_upper >= (frac - 4.0 * se - 1e-3) * vol,
            "bound {} < sampled {}", p.excluded_upper, frac * vol);
        prop_assert!(p.density_lb <= 1.0 - frac + 4.0 * se + 1e-3);
    }

    #[test]
    fn union_bound_dominates_sampled_union_on_a_surface(
        a in prop::collection::vec(-30i64..=30, 3),
        w1 in 0.001..0.03f64,
        r in 0.05..0.4f64,
    ) {
        let f = paraboloid_map(&[(a[0], 31), (a[1], 29), (a[2], 23)]);
        let widths = [w1, w1 / 2.0];
        let p = density_at_radius(&f, &alpha_of(&f), &levels(&widths), r, &DensityOptions::default()).unwrap();
        let samples = 10_000;
        let frac = union_fraction(&f, &widths, r, samples, 2);
        let se = (frac * (1.0 - frac) / samples as f64).sqrt();
        let vol = ball_volume(2, r);
        prop_assert!(p.excluded_upper >= (frac - 4.0 * se - 1e-3) * vol,
            "bound {} < sampled {}", p.excluded_upper, frac * vol);
    }

    #[test]
    fn lower_bound_shrinks_as_cutoff_grows(
        a1 in -50i64..=50,
        a2 in -50i64..=50,
        w1 in 1e-4..0.02f64,
        r in 0.01..0.5f64,
    ) {
        let f = moment(&[(a1, 37), (a2, 41)]);
        let widths = [w1, w1 / 3.0, w1 / 9.0, w1 / 27.0, w1 / 81.0];
        let alpha = alpha_of(&f);
        let mut prev = f64::INFINITY;
        for k in 1..=widths.len() {
            let p = density_at_radius(&f, &alpha, &levels(&widths[..k]), r, &DensityOptions::default()).unwrap();
            prop_assert!(p.density_lb <= prev, "K={k}: {} > {prev}", p.density_lb);
            prop_assert!((0.0..=1.0).contains(&p.density_lb));
            prop_assert!(p.density.value <= 1.0 + p.density.error);
            prop_assert!(p.density.value >= 0.0);
            prev = p.density_lb;
        }
    }
}

#[test]
fn worked_curve_is_monotone_in_cutoff_and_normalised() {
    let alpha: Vec<BigRational> = ["phi", "sqrt(2)"]
        .iter()
        .map(|t| parse_real(t, 64).unwrap().value)
        .collect();
    let f = PolynomialMap::shifted_moment_curve(&alpha);
    let a = DecreasingSequence::geometric(rat(1, 100), rat(2, 1)).unwrap();
    let radii = [0.5, 0.1, 0.01];
    let mut prev: Option<Vec<f64>> = None;
    for cutoff in 1..=6 {
        let curve = density_curve(&f, &a, &radii, cutoff, 1_000_000_000, &DensityOptions::default()).unwrap();
        let lbs: Vec<f64> = curve.points.iter().map(|p| p.density_lb).collect();
        for p in &curve.points {
            assert!((0.0..=1.0).contains(&p.density_lb));
            assert!(p.density.value <= 1.0 + p.density.error);
        }
        if let Some(prev) = &prev {
            for (now, before) in lbs.iter().zip(prev) {
                assert!(now <= before, "cutoff {cutoff}: {now} > {before}");
            }
        }
        prev = Some(lbs);
    }
}

#[test]
fn density_points_do_not_depend_on_thread_count() {
    let f = moment(&[(3, 37), (-5, 41)]);
    let widths = [0.05, 0.02, 0.01, 0.004];
    let alpha = alpha_of(&f);
    let opts = DensityOptions {
        mc_samples: 2_000_000,
        ..DensityOptions::default()
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| density_at_radius(&f, &alpha, &levels(&widths), 0.3, &opts).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a.density_lb.to_bits(), b.density_lb.to_bits());
    assert_eq!(a.excluded_upper.to_bits(), b.excluded_upper.to_bits());
    assert_eq!(a.density.value.to_bits(), b.density.value.to_bits());
}
