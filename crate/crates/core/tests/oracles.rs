//! Cross-checks against deliberately naive reimplementations.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skorohod_core::cantor::{partial_map_leq, PartialTreeMap};
use skorohod_core::fixtures;
use skorohod_core::quantile::{quantile, quantile_pushforward, top_completion, ChainMeasure};
use skorohod_core::testkit;
use skorohod_core::transport::{decide_order_maxflow, verify_refusal, verify_transport_plan, EdgeRelation};
use skorohod_core::valuation::order_oracle;
use skorohod_core::{Dyadic, FinitePoset};

fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..(1 << n)).map(move |mask| (0..n).filter(|&i| mask & (1 << i) != 0).collect())
}

fn is_upper(p: &FinitePoset, set: &[usize]) -> bool {
    set.iter()
        .all(|&x| (0..p.len()).all(|y| !p.leq(x, y) || set.contains(&y)))
}

#[test]
fn upper_sets_match_subset_filter() {
    for n in 1..=5 {
        for p in fixtures::all_posets(n) {
            let expected: BTreeSet<Vec<usize>> = subsets(n).filter(|s| is_upper(&p, s)).collect();
            let found: BTreeSet<Vec<usize>> = p
                .enumerate_upper_sets()
                .unwrap()
                .iter()
                .map(|u| u.members().to_vec())
                .collect();
            assert_eq!(found, expected);
        }
    }
}

#[test]
fn bounded_completeness_matches_meets_of_all_subsets() {
    for n in 1..=4 {
        for p in fixtures::all_posets(n) {
            let naive = subsets(n).filter(|s| !s.is_empty()).all(|s| {
                let lower: Vec<usize> = (0..n).filter(|&z| s.iter().all(|&x| p.leq(z, x))).collect();
                lower.iter().any(|&g| lower.iter().all(|&z| p.leq(z, g)))
            });
            assert_eq!(p.classify().is_bounded_complete, naive, "{:?}", p.names());
        }
    }
}

fn naive_leq(f: &PartialTreeMap, g: &PartialTreeMap) -> bool {
    let k = g.level() - f.level();
    let p = f.poset();
    (0..1u64 << f.level()).all(|w| match f.at_index(w) {
        None => true,
        Some(x) => {
            let images: Vec<usize> = ((w << k)..((w + 1) << k)).filter_map(|v| g.at_index(v)).collect();
            !images.is_empty() && images.iter().all(|&y| p.leq(x, y))
        }
    })
}

#[test]
fn partial_map_order_matches_wordwise_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let posets = [fixtures::v_poset(), fixtures::diamond(), fixtures::n_poset(), fixtures::antichain2()];
    let mut holds = 0;
    for round in 0..2000 {
        let p = &posets[round % posets.len()];
        let lf = rng.gen_range(0..=4);
        let lg = lf + rng.gen_range(0..=3);
        let f = testkit::random_partial_map(&mut rng, p, lf);
        let g = if rng.gen_bool(0.5) {
            testkit::random_saturated_extension(&mut rng, &f, lg - lf)
        } else {
            testkit::random_partial_map(&mut rng, p, lg)
        };
        let fast = partial_map_leq(&f, &g).unwrap();
        assert_eq!(fast, naive_leq(&f, &g));
        holds += usize::from(fast);
    }
    assert!(holds > 500, "too few positive instances: {holds}");
}

#[test]
fn maxflow_agrees_with_enumeration_on_named_posets() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let posets: Vec<Arc<FinitePoset>> = vec![
        fixtures::v_poset(),
        fixtures::lambda_poset(),
        fixtures::diamond(),
        fixtures::n_poset(),
        fixtures::flat_poset(),
    ];
    for p in &posets {
        for _ in 0..300 {
            let (mu, nu) = if rng.gen_bool(0.5) {
                testkit::random_comparable_pair(&mut rng, p, 4)
            } else {
                (testkit::random_valuation(&mut rng, p, 4), testkit::random_valuation(&mut rng, p, 4))
            };
            let flow = decide_order_maxflow(&mu, &nu).unwrap();
            assert_eq!(flow.holds(), order_oracle(&mu, &nu).unwrap().holds());
            match flow.plan() {
                Some(plan) => assert!(verify_transport_plan(&mu, &nu, plan).is_ok()),
                None => {
                    let refusal = flow.refusal().unwrap();
                    assert!(refusal.witness.is_some());
                    assert!(verify_refusal(&mu, &nu, &refusal.blocked_sources, EdgeRelation::Order));
                }
            }
        }
    }
}

/// Pushes Lebesgue measure along `G_μ` by sampling every cell of a fine grid.
fn grid_pushforward(mu: &ChainMeasure, depth: u32) -> ChainMeasure {
    ChainMeasure::new((1..=(1u64 << depth)).map(|i| {
        (quantile(mu, &Dyadic::new(i, depth)).unwrap(), Dyadic::half_pow(depth))
    }))
    .unwrap()
}

#[test]
fn quantile_pushforward_matches_grid_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for round in 0..300 {
        let mu = testkit::random_chain_measure(&mut rng, 5, round % 2 == 0);
        let exact = quantile_pushforward(&mu);
        assert_eq!(exact.result, grid_pushforward(&mu, 5));
        assert_eq!(exact.result, top_completion(&mu));
    }
}
