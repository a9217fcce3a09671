#![allow(dead_code)]

pub mod grads;
pub mod oracle;

use std::collections::BTreeSet;
use std::path::PathBuf;

use edsparse::config::TrainConfig;
use edsparse::encoder::EncoderConfig;
use edsparse::graph::{Anchor, EdsEdge, EdsGraph, EdsNode};
use proptest::prelude::*;
use rand::Rng;

pub fn data(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(path)
}

const PREDICATES: &[&str] = &["_dog_n_1", "_bark_v_1", "named", "udef_q"];
const CARGS: &[&str] = &["Kim", "Lee"];
const ROLES: &[&str] = &["ARG1", "ARG2", "BV"];

/// Small graph over a tiny label alphabet, so that random pairs share
/// plenty of candidate matches.
pub fn random_graph<R: Rng>(rng: &mut R, max_nodes: usize, max_edges: usize) -> EdsGraph {
    let n = rng.gen_range(1..=max_nodes);
    let nodes: Vec<EdsNode> = (0..n)
        .map(|i| {
            let pred = PREDICATES[rng.gen_range(0..PREDICATES.len())];
            let start = rng.gen_range(0..20);
            let mut node = EdsNode::new(format!("n{i}"), pred, Anchor::new(start, start + rng.gen_range(0..5)));
            if pred == "named" {
                node.carg = Some(CARGS[rng.gen_range(0..CARGS.len())].to_string());
            }
            node
        })
        .collect();
    let mut edges = BTreeSet::new();
    if n > 1 {
        let want = rng.gen_range(0..=max_edges);
        for _ in 0..want * 3 {
            if edges.len() >= want {
                break;
            }
            let s = rng.gen_range(0..n);
            let t = rng.gen_range(0..n);
            if s != t {
                edges.insert((s, t, ROLES[rng.gen_range(0..ROLES.len())]));
            }
        }
    }
    let edges = edges
        .into_iter()
        .map(|(s, t, r)| EdsEdge::new(format!("n{s}"), format!("n{t}"), r))
        .collect();
    let top = rng.gen_bool(0.7).then(|| format!("n{}", rng.gen_range(0..n)));
    EdsGraph::new(nodes, edges, top).expect("generated graph is valid")
}

pub fn random_scores<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|p| (0..n).map(|a| if p == a { 0.0 } else { rng.gen_range(-2.0..1.0) }).collect())
        .collect()
}

/// Undirected connectivity of `n` nodes under `arcs`.
pub fn connects(n: usize, arcs: &BTreeSet<(usize, usize)>) -> bool {
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &(p, a) in arcs {
            for (x, y) in [(p, a), (a, p)] {
                if x == u && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Best total weight of a spanning tree when every undirected edge takes
/// the better of its two directions, by enumerating all edge subsets.
pub fn brute_force_tree_weight(scores: &[Vec<f64>]) -> f64 {
    let n = scores.len();
    if n <= 1 {
        return 0.0;
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << pairs.len()) {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let chosen: BTreeSet<(usize, usize)> =
            pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &p)| p).collect();
        if !connects(n, &chosen) {
            continue;
        }
        let w: f64 = chosen.iter().map(|&(i, j)| scores[i][j].max(scores[j][i])).sum();
        best = best.max(w);
    }
    best
}

/// Configuration small enough to train on the synthetic corpus in seconds.
pub fn small_config() -> TrainConfig {
    TrainConfig {
        epochs: 50,
        batch_size: 8,
        learning_rate: 0.005,
        encoder: EncoderConfig {
            word_dim: 32,
            char_dim: 16,
            char_hidden: 16,
            pos_dim: 8,
            ctx_dim: 0,
            hidden: 32,
            layers: 1,
            ..EncoderConfig::default()
        },
        concept_dim: 16,
        mlp_hidden: 32,
        ..TrainConfig::default()
    }
}

/// Arbitrary valid graphs, including empty ones and odd predicate and
/// constant strings.
pub fn graph_strategy() -> impl Strategy<Value = EdsGraph> {
    let node = (
        "[_a-z][a-z0-9_+]{0,10}",
        0usize..60,
        0usize..8,
        proptest::option::of("[ -~]{0,6}"),
    );
    proptest::collection::vec(node, 0..9).prop_flat_map(|nodes| {
        let n = nodes.len();
        let edges = if n > 1 {
            proptest::collection::vec((0..n, 0..n, "(ARG[1-4]|BV|L-INDEX|R-HNDL)"), 0..12).boxed()
        } else {
            Just(Vec::new()).boxed()
        };
        let top = if n > 0 {
            proptest::option::of(0..n).boxed()
        } else {
            Just(None).boxed()
        };
        (Just(nodes), edges, top)
    })
    .prop_map(|(nodes, edges, top)| {
        let nodes: Vec<EdsNode> = nodes
            .into_iter()
            .enumerate()
            .map(|(i, (pred, start, len, carg))| {
                let mut node = EdsNode::new(format!("x{i}"), pred, Anchor::new(start, start + len));
                node.carg = carg;
                node
            })
            .collect();
        let mut seen = BTreeSet::new();
        let edges = edges
            .into_iter()
            .filter(|(s, t, r)| s != t && seen.insert((*s, *t, r.clone())))
            .map(|(s, t, r)| EdsEdge::new(format!("x{s}"), format!("x{t}"), r))
            .collect();
        EdsGraph::new(nodes, edges, top.map(|t| format!("x{t}"))).unwrap()
    })
}


fn node_key(n: &EdsNode) -> (String, String, Anchor, Option<String>) {
    (n.id.clone(), n.predicate.clone(), n.anchor, n.carg.clone())
}

pub fn same_graph(a: &EdsGraph, b: &EdsGraph) -> bool {
    let nodes = |g: &EdsGraph| g.nodes().iter().map(node_key).collect::<BTreeSet<_>>();
    let edges = |g: &EdsGraph| g.edges().iter().cloned().collect::<BTreeSet<_>>();
    nodes(a) == nodes(b) && edges(a) == edges(b) && a.top() == b.top()
}

/// Hand-counted report of `pheno/corrupted.eds` against `pheno/gold.pheno`
/// with `pheno/roles.toml`: phenomenon, subtype, count, recall,
/// complete-match accuracy.
pub const CORRUPTED_REPORT: &[(&str, &str, usize, f64, Option<f64>)] = &[
    ("comp", "-", 2, 0.5, None),
    ("comp", "compound", 1, 0.0, None),
    ("comp", "named_entity", 1, 1.0, None),
    ("as", "-", 4, 0.75, Some(0.5)),
    ("as", "ARG1", 2, 1.0, None),
    ("as", "ARG2", 1, 1.0, None),
    ("as", "ARG3", 1, 0.0, None),
    ("ditr", "-", 3, 1.0, Some(1.0)),
    ("ditr", "ARG1", 1, 1.0, None),
    ("ditr", "ARG2", 1, 1.0, None),
    ("ditr", "ARG3", 1, 1.0, None),
    ("causemo", "-", 3, 2.0 / 3.0, Some(0.0)),
    ("causemo", "ARG1", 1, 1.0, None),
    ("causemo", "ARG2", 1, 0.0, None),
    ("causemo", "ARG3", 1, 1.0, None),
    ("way", "-", 3, 1.0, Some(1.0)),
    ("way", "ARG1", 1, 1.0, None),
    ("way", "ARG2", 1, 1.0, None),
    ("way", "ARG3", 1, 1.0, None),
    ("passive", "-", 2, 0.5, None),
    ("vpart", "-", 1, 1.0, None),
    ("vpart", "B", 1, 1.0, None),
    ("itexpl", "-", 1, 0.0, None),
    ("ned", "-", 2, 0.5, None),
    ("ned", "A", 1, 0.0, None),
    ("ned", "B", 1, 1.0, None),
    ("argadj", "-", 2, 0.5, None),
    ("argadj", "A", 1, 1.0, None),
    ("argadj", "B", 1, 0.0, None),
    ("barerel", "-", 1, 1.0, None),
    ("barerel", "B", 1, 1.0, None),
    ("tough", "-", 2, 0.5, None),
    ("tough", "A", 1, 1.0, None),
    ("tough", "B", 1, 0.0, None),
    ("rnr", "-", 2, 0.5, None),
    ("rnr", "A", 1, 0.0, None),
    ("rnr", "B", 1, 1.0, None),
    ("absol", "-", 2, 0.5, None),
    ("absol", "A", 1, 1.0, None),
    ("absol", "B", 1, 0.0, None),
    ("vger", "-", 2, 0.5, None),
    ("vger", "A", 1, 1.0, None),
    ("vger", "B", 1, 0.0, None),
    ("control", "-", 3, 2.0 / 3.0, None),
    ("control", "A", 1, 1.0, None),
    ("control", "B", 2, 0.5, None),
    ("ALL", "-", 35, 23.0 / 35.0, None),
];

/// First disagreement between a report and [`CORRUPTED_REPORT`].
pub fn corrupted_report_mismatch(report: &edsparse::pheno::PhenoReport) -> Option<String> {
    if report.rows.len() != CORRUPTED_REPORT.len() {
        return Some(format!("{} rows, expected {}", report.rows.len(), CORRUPTED_REPORT.len()));
    }
    for (row, &(p, s, count, recall, complete)) in report.rows.iter().zip(CORRUPTED_REPORT) {
        let same_complete = match (row.complete_match, complete) {
            (Some(a), Some(b)) => (a - b).abs() < 1e-12,
            (None, None) => true,
            _ => false,
        };
        if row.phenomenon != p || row.subtype != s || row.count != count || (row.recall - recall).abs() > 1e-12 || !same_complete {
            return Some(format!("{row:?}, expected {p}/{s} count {count} recall {recall} complete {complete:?}"));
        }
    }
    None
}
