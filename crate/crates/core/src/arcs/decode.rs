//! Arc-set decoding, the weighted Hamming cost and the structured hinge.

use std::collections::BTreeSet;

use crate::config::HammingCost;

/// Ordered pair `(source, target)` of node indices.
pub type Arc = (usize, usize);

/// Square matrix of arc scores; `scores[p][a]` scores `p → a`. The diagonal
/// is ignored.
pub type ScoreMatrix = Vec<Vec<f64>>;

fn check_square(scores: &[Vec<f64>]) -> usize {
    let n = scores.len();
    assert!(scores.iter().all(|r| r.len() == n), "score matrix must be square");
    n
}

/// Arcs with strictly positive score.
pub fn positive_arcs(scores: &[Vec<f64>]) -> BTreeSet<Arc> {
    let n = check_square(scores);
    let mut out = BTreeSet::new();
    for p in 0..n {
        for a in 0..n {
            if p != a && scores[p][a] > 0.0 {
                out.insert((p, a));
            }
        }
    }
    out
}

/// Best orientation of the undirected pair `{u, v}` (`u < v`): the higher
/// scoring direction, `u → v` on ties.
fn orient(scores: &[Vec<f64>], u: usize, v: usize) -> (Arc, f64) {
    if scores[v][u] > scores[u][v] {
        ((v, u), scores[v][u])
    } else {
        ((u, v), scores[u][v])
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut root = x;
    while parent[root] != root {
        root = parent[root];
    }
    let mut cur = x;
    while parent[cur] != root {
        let next = parent[cur];
        parent[cur] = root;
        cur = next;
    }
    root
}

/// Maximum spanning tree of the undirected collapse (weight of `{u, v}` is
/// the better of its two directions), each edge oriented to its better
/// direction. Kruskal with ties broken by the oriented `(source, target)`.
pub fn spanning_tree(scores: &[Vec<f64>]) -> BTreeSet<Arc> {
    let n = check_square(scores);
    let mut candidates: Vec<(f64, Arc)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for u in 0..n {
        for v in u + 1..n {
            let (arc, w) = orient(scores, u, v);
            candidates.push((w, arc));
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut parent: Vec<usize> = (0..n).collect();
    let mut tree = BTreeSet::new();
    for (_, (p, a)) in candidates {
        let (rp, ra) = (find(&mut parent, p), find(&mut parent, a));
        if rp != ra {
            parent[rp] = ra;
            tree.insert((p, a));
            if tree.len() + 1 == n {
                break;
            }
        }
    }
    tree
}

/// Select arcs from a score matrix. Without the connectivity constraint this
/// is exactly the positive arcs; with it, a maximum spanning tree of the
/// undirected collapse is added first, so the result is connected.
pub fn decode_mscg(scores: &[Vec<f64>], connected: bool) -> BTreeSet<Arc> {
    let mut arcs = positive_arcs(scores);
    if connected {
        arcs.extend(spanning_tree(scores));
    }
    arcs
}

/// `c_fp·|pred ∖ gold| + c_fn·|gold ∖ pred|`.
pub fn hamming_delta<T: Ord>(gold: &BTreeSet<T>, pred: &BTreeSet<T>, cost: HammingCost) -> f64 {
    let fp = pred.difference(gold).count();
    let fn_ = gold.difference(pred).count();
    cost.c_fp * fp as f64 + cost.c_fn * fn_ as f64
}

pub fn graph_score(scores: &[Vec<f64>], arcs: &BTreeSet<Arc>) -> f64 {
    arcs.iter().map(|&(p, a)| scores[p][a]).sum()
}

/// Result of cost-augmented decoding against a gold arc set.
#[derive(Clone, Debug, PartialEq)]
pub struct Hinge {
    /// `Δ(G*, Ĝ) − Score(G*) + Score(Ĝ)`, never negative.
    pub loss: f64,
    pub delta: f64,
    pub predicted: BTreeSet<Arc>,
    /// Subgradient of the loss with respect to each score, row-major
    /// (`+1` on `Ĝ ∖ G*`, `−1` on `G* ∖ Ĝ`).
    pub coeff: Vec<f64>,
}

/// Cost-augmented unconstrained decoding: `Ĝ = argmax_G Score(G) + Δ(G*, G)`.
/// The objective decomposes over arcs, so each arc is decided alone: a gold
/// arc stays iff its score is at least `c_fn`, any other arc enters iff its
/// score plus `c_fp` is positive.
pub fn hinge(scores: &[Vec<f64>], gold: &BTreeSet<Arc>, cost: HammingCost) -> Hinge {
    let n = check_square(scores);
    let mut predicted = BTreeSet::new();
    for p in 0..n {
        for a in 0..n {
            if p == a {
                continue;
            }
            let s = scores[p][a];
            let keep = if gold.contains(&(p, a)) { s >= cost.c_fn } else { s + cost.c_fp > 0.0 };
            if keep {
                predicted.insert((p, a));
            }
        }
    }
    let delta = hamming_delta(gold, &predicted, cost);
    let loss = (delta - graph_score(scores, gold) + graph_score(scores, &predicted)).max(0.0);
    let mut coeff = vec![0.0; n * n];
    for &(p, a) in predicted.difference(gold) {
        coeff[p * n + a] += 1.0;
    }
    for &(p, a) in gold.difference(&predicted) {
        coeff[p * n + a] -= 1.0;
    }
    Hinge {
        loss,
        delta,
        predicted,
        coeff,
    }
}
