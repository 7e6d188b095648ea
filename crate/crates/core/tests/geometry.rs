mod common;

use common::*;
use fracmax::covering::{build_cover, build_partition_of_unity};
use fracmax::maximal::*;
use fracmax::{Metric, MetricMeasureSpace, ScalePolicy};
use proptest::prelude::*;

fn cloud(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Option<MetricMeasureSpace> {
    let n = points.len();
    MetricMeasureSpace::from_coords(fracmax::space::default_labels(n), points, Metric::Euclidean, weights).ok()
}

fn cloud_strategy() -> impl Strategy<Value = MetricMeasureSpace> {
    (2usize..14)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(prop::collection::vec(0.0f64..10.0, 2), n),
                prop::collection::vec(0.1f64..3.0, n),
            )
        })
        .prop_filter_map("distinct points", |(p, w)| cloud(p, w))
}

/// Open-ball doubling ratio sampled at every breakpoint, every midpoint
/// between breakpoints and beyond the last one.
fn scan_doubling(space: &MetricMeasureSpace) -> f64 {
    let mut radii: Vec<f64> = Vec::new();
    for x in 0..space.len() {
        for y in 0..space.len() {
            let d = space.dist(x, y);
            if d > 0.0 {
                radii.push(d);
                radii.push(d / 2.0);
            }
        }
    }
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let mut samples = radii.clone();
    samples.extend(radii.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    samples.push(radii.last().copied().unwrap_or(1.0) * 1.5);
    samples.push(radii.first().copied().unwrap_or(1.0) * 0.5);
    let mass = |x, r| space.measure(&scan_ball(space, x, r, false)).max(space.weights()[x]);
    let mut best: f64 = 1.0;
    for x in 0..space.len() {
        for &r in &samples {
            best = best.max(mass(x, 2.0 * r) / mass(x, r));
        }
    }
    best
}

#[test]
fn balls_match_scan_on_corpus() {
    let corpus = corpus("default");
    for named in &corpus.spaces {
        let space = &named.space;
        let mut radii = space.distinct_distances().to_vec();
        radii.extend(radii.clone().iter().map(|r| r * 0.75));
        for x in (0..space.len()).step_by(3) {
            for &r in &radii {
                for closed in [false, true] {
                    let mut want = scan_ball(space, x, r, closed);
                    if want.is_empty() {
                        want.push(x);
                    }
                    assert_eq!(space.ball(x, r, closed), want, "{} x={x} r={r}", named.id);
                    let m = space.ball_measure(x, r, closed);
                    assert!(rel(m, space.measure(&want)) < 1e-12);
                }
            }
        }
    }
}

#[test]
fn doubling_constant_matches_dense_scan() {
    for name in ["small", "default"] {
        for named in &corpus(name).spaces {
            let gc = named.space.geometry_constants(ScalePolicy::dyadic()).unwrap();
            let want = scan_doubling(&named.space);
            assert!(rel(gc.c_d, want) < 1e-12, "{}: {} vs {want}", named.id, gc.c_d);
            assert!((gc.q - gc.c_d.log2()).abs() < 1e-15);
        }
    }
}

#[test]
fn partition_of_unity_properties_on_corpus() {
    for name in ["small", "default"] {
        for named in &corpus(name).spaces {
            let space = &named.space;
            let fam = ScaleFamily::from_policy(space, ScalePolicy::dyadic(), None).unwrap();
            for lvl in &fam.levels {
                check_scale(space, lvl.cover.r);
            }
        }
    }
}

fn check_scale(space: &MetricMeasureSpace, r: f64) {
    let n = space.len();
    let cover = build_cover(space, r).unwrap();
    let pou = build_partition_of_unity(space, &cover).unwrap();
    let centers = &cover.centers;

    // Maximal r-separated net covering the space with open r-balls.
    for (a, &i) in centers.iter().enumerate() {
        for &j in &centers[a + 1..] {
            assert!(space.dist(i, j) >= r);
        }
    }
    for x in 0..n {
        assert!(
            centers.iter().any(|&c| space.dist(x, c) < r),
            "x={x} uncovered at r={r}"
        );
    }

    // Independent ψ and φ.
    let psi = |i: usize, x: usize| ((6.0 * r - space.dist(x, centers[i])) / (3.0 * r)).clamp(0.0, 1.0);
    let phi: Vec<Vec<f64>> = (0..n)
        .map(|x| {
            let total: f64 = (0..centers.len()).map(|i| psi(i, x)).sum();
            (0..centers.len()).map(|i| psi(i, x) / total).collect()
        })
        .collect();
    let overlap = (0..n)
        .map(|x| {
            (0..centers.len())
                .filter(|&i| space.dist(x, centers[i]) < 6.0 * r)
                .count()
        })
        .max()
        .unwrap();
    assert_eq!(pou.overlap, overlap);

    for x in 0..n {
        let sum: f64 = (0..centers.len()).map(|i| pou.value(i, x)).sum();
        assert!((sum - 1.0).abs() <= 1e-12, "sum {sum}");
        for i in 0..centers.len() {
            let v = pou.value(i, x);
            assert!((v - phi[x][i]).abs() <= 1e-14);
            let d = space.dist(x, centers[i]);
            assert_eq!(v > 0.0, d < 6.0 * r, "support at x={x} center={i}");
            if d < 3.0 * r {
                assert!(v >= 1.0 / overlap as f64 - 1e-15);
            }
        }
    }
    assert!((pou.nu.value * overlap as f64) >= 1.0 - 1e-12);

    let mut lip: f64 = 0.0;
    for x in 0..n {
        for y in x + 1..n {
            for i in 0..centers.len() {
                lip = lip.max((phi[x][i] - phi[y][i]).abs() * r / space.dist(x, y));
            }
        }
    }
    assert!((pou.lip.value - lip).abs() <= 1e-12);
    assert!(lip <= 2.0, "lip*r = {lip}");
}

#[test]
fn maximal_operators_match_brute_force() {
    let corpus = corpus("small");
    for f in &corpus.functions {
        let space = &corpus.spaces[f.space].space;
        let radii = standard_radii(space, ScalePolicy::dyadic(), None);
        let fam = ScaleFamily::from_policy(space, ScalePolicy::dyadic(), None).unwrap();
        for &alpha in &[0.0, 0.3, 1.0] {
            let got = fractional_maximal(space, &f.values, alpha, &radii).unwrap();
            let want = scan_maximal(space, &f.values, alpha, &radii);
            for x in 0..space.len() {
                assert!((got.values[x] - want[x]).abs() <= 1e-12 * want[x].max(1.0));
            }
            let got = discrete_fractional_maximal(space, &f.values, alpha, &fam);
            for x in 0..space.len() {
                let want = fam
                    .scales
                    .iter()
                    .map(|&r| scan_convolution(space, &f.values, r, alpha, x))
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!((got.values[x] - want).abs() <= 1e-12 * want.max(1.0));
            }
        }
    }
}

/// `r^α Σ_i φ_i(x) ⨍_{B(x_i,3r)} |u|` from scratch, with the greedy net
/// recomputed in index order.
fn scan_convolution(space: &MetricMeasureSpace, u: &[f64], r: f64, alpha: f64, x: usize) -> f64 {
    let mut centers: Vec<usize> = Vec::new();
    for y in 0..space.len() {
        if centers.iter().all(|&c| space.dist(y, c) >= r) {
            centers.push(y);
        }
    }
    let psi: Vec<f64> = centers
        .iter()
        .map(|&c| ((6.0 * r - space.dist(x, c)) / (3.0 * r)).clamp(0.0, 1.0))
        .collect();
    let total: f64 = psi.iter().sum();
    let conv: f64 = centers
        .iter()
        .zip(&psi)
        .map(|(&c, p)| p / total * scan_average(space, |y| u[y].abs(), &scan_ball(space, c, 3.0 * r, false)))
        .sum();
    r.powf(alpha) * conv
}

#[test]
fn comparability_band_is_finite_and_positive() {
    let corpus = corpus("default");
    for f in corpus.functions.iter().filter(|f| f.id != "constant") {
        let space = &corpus.spaces[f.space].space;
        let radii = standard_radii(space, ScalePolicy::dyadic(), None);
        let fam = ScaleFamily::from_policy(space, ScalePolicy::dyadic(), None).unwrap();
        for alpha in [0.0, 0.5] {
            let rep = comparability_report(space, &f.values, alpha, &radii, &fam).unwrap();
            assert!(rep.defined);
            assert!(rep.c_low > 0.0 && rep.c_high.is_finite() && rep.c_low <= rep.c_high);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn doubling_is_supremum_over_radii(space in cloud_strategy()) {
        let gc = space.geometry_constants(ScalePolicy::dyadic()).unwrap();
        prop_assert!(rel(gc.c_d, scan_doubling(&space)) < 1e-12);
        prop_assert!(gc.c_d >= 1.0);
    }

    #[test]
    fn partition_of_unity_on_clouds(space in cloud_strategy(), frac in 0.05f64..1.2) {
        check_scale(&space, frac * space.diam());
    }

    #[test]
    fn maximal_is_sublinear_and_homogeneous(
        space in cloud_strategy(),
        seed in any::<u64>(),
        c in -4.0f64..4.0,
        alpha in 0.0f64..1.0,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = space.len();
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let sum: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        let cu: Vec<f64> = u.iter().map(|a| c * a).collect();
        let radii = standard_radii(&space, ScalePolicy::dyadic(), None);
        let fam = ScaleFamily::from_policy(&space, ScalePolicy::dyadic(), None).unwrap();

        let m = |w: &[f64]| fractional_maximal(&space, w, alpha, &radii).unwrap().values;
        let ms = |w: &[f64]| discrete_fractional_maximal(&space, w, alpha, &fam).values;
        for op in [&m as &dyn Fn(&[f64]) -> Vec<f64>, &ms] {
            let (a, b, s, h) = (op(&u), op(&v), op(&sum), op(&cu));
            for x in 0..n {
                prop_assert!(s[x] <= (a[x] + b[x]) * (1.0 + 1e-12) + 1e-12);
                prop_assert!((h[x] - c.abs() * a[x]).abs() <= 1e-12 * h[x].max(1.0));
            }
        }
        // Singleton balls are in the radius set, so M_0 u >= |u|.
        let m0 = fractional_maximal(&space, &u, 0.0, &radii).unwrap().values;
        for x in 0..n {
            prop_assert!(m0[x] >= u[x].abs() - 1e-15);
        }
    }
}
