mod common;

use common::*;
use fracmax::hajlasz::*;
use proptest::prelude::*;

#[test]
fn assignment_oracle_sanity() {
    // Two points at distance 1, u = (0, 1): the minimal L^1 gradient has norm 1.
    let c = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    assert_eq!(max_assignment(&c), 2.0);
    // A triangle of unit constraints: ½ * 3 per unit weight.
    let c = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
    assert_eq!(max_assignment(&c), 3.0);
}

#[test]
fn l1_gradient_matches_vertex_oracle_on_small_spaces() {
    let corpus = corpus("small");
    let mut checked = 0;
    for f in &corpus.functions {
        let space = &corpus.spaces[f.space].space;
        assert!(space.len() <= 12);
        for &s in &[0.5, 1.0] {
            let got = hajlasz_norm(space, &f.values, s, 1.0).unwrap();
            let want = l1_gradient_oracle(space, &f.values, s);
            assert!(
                (got.value - want).abs() <= 1e-6 * want.max(1.0),
                "{} / {} s={s}: {} vs {}",
                corpus.spaces[f.space].id,
                f.id,
                got.value,
                want
            );
            assert_eq!(got.bound, Bound::Exact);
            checked += 1;
        }
    }
    assert_eq!(checked, 6 * 11 * 2);
}

#[test]
fn besov_decoupling_matches_joint_oracle() {
    let corpus = corpus("small");
    for f in corpus.functions.iter().filter(|f| f.id != "constant") {
        let space = &corpus.spaces[f.space].space;
        for &q in &[1.5, 3.0] {
            let got = besov_norm(space, &f.values, 0.5, 2.0, q).unwrap().norm.value;
            let want = joint_besov_oracle(space, &f.values, 0.5, q);
            assert!(
                rel(got, want) <= 1e-6,
                "{} / {} q={q}: {got} vs {want}",
                corpus.spaces[f.space].id,
                f.id
            );
        }
    }
}

#[test]
fn five_grid_two_scales() {
    let space = line(5);
    let u = [0.0, 1.0, 0.0, 2.0, 1.0];
    let got = besov_norm(&space, &u, 1.0, 2.0, 2.0).unwrap();
    let want = joint_besov_oracle(&space, &u, 1.0, 2.0);
    assert!(rel(got.norm.value, want) < 1e-6);
    // The decoupled minimiser is feasible for the joint program.
    assert!(is_fractional_gradient(&space, &u, &got.sequence, 1.0, 1e-9).unwrap().ok);
}

#[test]
fn tl_with_q_infinity_is_hajlasz() {
    for name in ["small", "default"] {
        let corpus = corpus(name);
        for f in &corpus.functions {
            let space = &corpus.spaces[f.space].space;
            for &p in &[1.0, 2.0] {
                let tl = triebel_lizorkin_norm(space, &f.values, 0.5, p, f64::INFINITY).unwrap();
                let h = hajlasz_norm(space, &f.values, 0.5, p).unwrap();
                assert!(
                    (tl.norm.value - h.value).abs() <= 1e-6 * h.value.max(1e-12),
                    "{name} {} / {} p={p}: {} vs {}",
                    corpus.spaces[f.space].id,
                    f.id,
                    tl.norm.value,
                    h.value
                );
            }
        }
    }
}

fn small_instance() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (3usize..8).prop_flat_map(|n| (Just(n), prop::collection::vec(-3.0f64..3.0, n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn canonical_is_feasible_and_dominates_optimum((n, u) in small_instance(), s in 0.2f64..1.0, p in 1.0f64..3.0) {
        let space = line(n);
        let canon = canonical_gradient(&space, &u, s);
        let check = is_hajlasz_gradient(&space, &u, &canon.g, s, 0.0);
        prop_assert!(check.ok && check.worst_violation <= 0.0);
        let (opt, norm) = optimal_gradient(&space, &u, s, p).unwrap();
        prop_assert!(is_hajlasz_gradient(&space, &u, &opt.g, s, 1e-9).ok);
        let canon_norm = fracmax::norms::lp_norm(&canon.g, space.weights(), p);
        prop_assert!(norm.value <= canon_norm * (1.0 + 1e-9));
    }

    #[test]
    fn norm_is_homogeneous((n, u) in small_instance(), c in -5.0f64..5.0, p in prop::sample::select(vec![1.0, 1.5, 2.0, f64::INFINITY])) {
        prop_assume!(c.abs() > 0.1);
        let space = line(n);
        let cu: Vec<f64> = u.iter().map(|v| c * v).collect();
        let a = hajlasz_norm(&space, &u, 0.5, p).unwrap().value;
        let b = hajlasz_norm(&space, &cu, 0.5, p).unwrap().value;
        prop_assert!((b - c.abs() * a).abs() <= 1e-7 * b.max(1e-9));
    }

    #[test]
    fn l1_matches_oracle_on_random_lines((n, u) in small_instance(), s in 0.2f64..1.0) {
        let space = line(n);
        let got = hajlasz_norm(&space, &u, s, 1.0).unwrap().value;
        let want = l1_gradient_oracle(&space, &u, s);
        prop_assert!((got - want).abs() <= 1e-6 * want.max(1.0));
    }

    #[test]
    fn sequence_norms_decrease_in_q((n, u) in small_instance()) {
        let space = line(n);
        let seq = besov_norm(&space, &u, 0.5, 2.0, 2.0).unwrap().sequence;
        let w = space.weights();
        let mut last = f64::INFINITY;
        for q in [1.0, 1.5, 2.0, 4.0, f64::INFINITY] {
            for kind in [fracmax::norms::MixedKind::LpLq, fracmax::norms::MixedKind::LqLp] {
                let v = fracmax::norms::mixed_norm(&seq.levels, w, 2.0, q, kind);
                prop_assert!(v.is_finite());
            }
            let v = fracmax::norms::mixed_norm(&seq.levels, w, 2.0, q, fracmax::norms::MixedKind::LpLq);
            prop_assert!(v <= last * (1.0 + 1e-12));
            last = v;
        }
        let mut last = f64::INFINITY;
        for q in [1.0, 2.0, 4.0, f64::INFINITY] {
            let v = triebel_lizorkin_norm(&space, &u, 0.5, 2.0, q).unwrap().norm.value;
            prop_assert!(v <= last * (1.0 + 1e-7));
            last = v;
        }
    }
}
