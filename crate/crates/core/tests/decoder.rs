mod common;

use std::collections::BTreeSet;

use common::{brute_force_tree_weight, connects, random_scores};
use edsparse::arcs::decode::{decode_mscg, graph_score, hamming_delta, hinge, positive_arcs, spanning_tree};
use edsparse::config::HammingCost;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Arcs = BTreeSet<(usize, usize)>;

fn tree_weight(scores: &[Vec<f64>], tree: &Arcs) -> f64 {
    graph_score(scores, tree)
}

#[test]
fn connected_decoding_properties_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..500 {
        let n = rng.gen_range(1..=6);
        let s = random_scores(&mut rng, n);
        let positive = positive_arcs(&s);
        let connected = decode_mscg(&s, true);
        assert!(connects(n, &connected), "{s:?}");
        assert!(positive.is_subset(&connected));
        assert_eq!(decode_mscg(&s, false), positive);
        let tree = spanning_tree(&s);
        assert_eq!(tree.len(), n - 1);
        assert_eq!(connected, tree.union(&positive).copied().collect::<Arcs>());
        if n <= 4 {
            let best = brute_force_tree_weight(&s);
            assert!((tree_weight(&s, &tree) - best).abs() < 1e-9, "{s:?}");
        }
    }
}

#[test]
fn tree_orients_each_edge_toward_its_better_direction() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = rng.gen_range(2..=6);
        let s = random_scores(&mut rng, n);
        for &(p, a) in &spanning_tree(&s) {
            assert!(s[p][a] >= s[a][p]);
            assert!(!spanning_tree(&s).contains(&(a, p)));
        }
    }
}

#[test]
fn hand_examples() {
    // Two nodes, both directions negative: the tree still joins them, using
    // the less negative direction.
    let s = vec![vec![0.0, -1.0], vec![-0.5, 0.0]];
    assert_eq!(decode_mscg(&s, true), [(1, 0)].into_iter().collect());
    assert!(decode_mscg(&s, false).is_empty());
    // Positive arcs in both directions both survive.
    let s = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
    assert_eq!(decode_mscg(&s, true).len(), 2);
    assert!(decode_mscg(&[vec![0.0]], true).is_empty());
}

/// All arc sets over `n` nodes.
fn all_subsets(n: usize) -> Vec<Arcs> {
    let arcs: Vec<(usize, usize)> = (0..n).flat_map(|p| (0..n).filter(move |&a| a != p).map(move |a| (p, a))).collect();
    (0u32..1 << arcs.len())
        .map(|m| arcs.iter().enumerate().filter(|(k, _)| m >> k & 1 == 1).map(|(_, &a)| a).collect())
        .collect()
}

fn random_gold<R: Rng>(rng: &mut R, n: usize) -> Arcs {
    (0..n)
        .flat_map(|p| (0..n).map(move |a| (p, a)))
        .filter(|(p, a)| p != a && rng.gen_bool(0.3))
        .collect()
}

#[test]
fn cost_augmented_decoding_is_the_exact_argmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cost = HammingCost::default();
    for _ in 0..100 {
        let n = rng.gen_range(1..=3);
        let s = random_scores(&mut rng, n);
        let gold = random_gold(&mut rng, n);
        let h = hinge(&s, &gold, cost);
        let objective = |g: &Arcs| graph_score(&s, g) + hamming_delta(&gold, g, cost);
        let best = all_subsets(n).iter().map(objective).fold(f64::NEG_INFINITY, f64::max);
        assert!((objective(&h.predicted) - best).abs() < 1e-12);
    }
}

#[test]
fn hinge_bounds_every_margin_violation() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cost = HammingCost::default();
    for _ in 0..100 {
        let n = rng.gen_range(2..=5);
        let s = random_scores(&mut rng, n);
        let gold = random_gold(&mut rng, n);
        let h = hinge(&s, &gold, cost);
        assert!(h.loss >= 0.0);
        for _ in 0..20 {
            let other = random_gold(&mut rng, n);
            let violation = hamming_delta(&gold, &other, cost) - graph_score(&s, &gold) + graph_score(&s, &other);
            assert!(h.loss >= violation - 1e-12);
        }
    }
}

#[test]
fn hinge_is_zero_when_gold_wins_the_augmented_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cost = HammingCost::default();
    let mut zero_cases = 0;
    for _ in 0..200 {
        let n = rng.gen_range(2..=5);
        let gold = random_gold(&mut rng, n);
        // Separate gold from the rest by a margin larger than the costs.
        let s: Vec<Vec<f64>> = (0..n)
            .map(|p| {
                (0..n)
                    .map(|a| match (p == a, gold.contains(&(p, a))) {
                        (true, _) => 0.0,
                        (false, true) => rng.gen_range(0.6..2.0),
                        (false, false) => rng.gen_range(-2.0..-0.41),
                    })
                    .collect()
            })
            .collect();
        let h = hinge(&s, &gold, cost);
        assert_eq!(h.predicted, gold);
        assert_eq!(h.loss, 0.0);
        assert!(h.coeff.iter().all(|&c| c == 0.0));
        zero_cases += 1;
    }
    assert_eq!(zero_cases, 200);
}

proptest! {
    #[test]
    fn delta_vanishes_only_on_equal_sets(a in proptest::collection::btree_set((0usize..4, 0usize..4), 0..8),
                                         b in proptest::collection::btree_set((0usize..4, 0usize..4), 0..8)) {
        let d = hamming_delta(&a, &b, HammingCost::default());
        prop_assert!(d >= 0.0);
        prop_assert_eq!(d == 0.0, a == b);
    }

    #[test]
    fn disconnected_output_is_the_positive_set(seed in any::<u64>(), n in 1usize..7) {
        let s = random_scores(&mut ChaCha8Rng::seed_from_u64(seed), n);
        let shifted: Vec<Vec<f64>> = s.iter().map(|r| r.iter().map(|v| v + 0.25).collect()).collect();
        let out = decode_mscg(&s, false);
        prop_assert!(out.iter().all(|&(p, a)| s[p][a] > 0.0));
        prop_assert_eq!(out.len(), s.iter().enumerate().map(|(p, r)| r.iter().enumerate().filter(|&(a, v)| a != p && *v > 0.0).count()).sum::<usize>());
        prop_assert!(decode_mscg(&shifted, false).is_superset(&out));
    }
}
