//! Smatch for EDS graphs that may be disconnected.
//!
//! Nodes match on predicate only (anchors are ignored). A graph decomposes
//! into instance triples, `CARG` constant triples, edge triples and an
//! optional top triple; the score of a node mapping is the number of
//! predicted triples it carries onto gold triples.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::EdsGraph;
use crate::metrics::Prf;

/// Largest smaller-side node count the exhaustive search accepts.
pub const ORACLE_LIMIT: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SmatchOptions {
    pub restarts: usize,
    pub seed: u64,
    pub include_top: bool,
}

impl Default for SmatchOptions {
    fn default() -> Self {
        SmatchOptions {
            restarts: 10,
            seed: 0,
            include_top: true,
        }
    }
}

/// Best node mapping found and the scores it yields.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlignmentMapping {
    /// `mapping[i]` is the gold node index of predicted node `i`.
    pub mapping: Vec<Option<usize>>,
    pub triples: Prf,
    /// Instance triples only.
    pub concept: Prf,
    /// Edge triples only (constants excluded).
    pub arc: Prf,
}

impl AlignmentMapping {
    pub fn f(&self) -> f64 {
        self.triples.f
    }

    pub fn matched(&self) -> usize {
        self.triples.matched
    }

    /// Both graphs empty of triples; scored 1.0.
    pub fn vacuous(&self) -> bool {
        self.triples.vacuous
    }

    /// Mapping as `(predicted id, gold id)` pairs.
    pub fn id_pairs<'a>(&self, pred: &'a EdsGraph, gold: &'a EdsGraph) -> Vec<(&'a str, &'a str)> {
        self.mapping
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.map(|g| (pred.nodes()[i].id.as_str(), gold.nodes()[g].id.as_str())))
            .collect()
    }
}

/// Matching problem between a left and a right graph, mapping left nodes
/// into right nodes. Symmetric in the sense that swapping sides and
/// inverting the mapping gives the same matched count.
struct Problem {
    n: usize,
    m: usize,
    /// `unary[i * m + j]`: instance + constant + top triples gained by
    /// mapping left `i` to right `j`.
    unary: Vec<u32>,
    left_edges: Vec<(usize, usize, u32)>,
    incident: Vec<Vec<usize>>,
    right_edges: HashSet<(usize, usize, u32)>,
    /// Upper bound of the unary gain of each left node.
    unary_max: Vec<u32>,
}

fn carg_of(g: &EdsGraph, i: usize) -> Option<&str> {
    g.nodes()[i].carg.as_deref()
}

impl Problem {
    fn new(left: &EdsGraph, right: &EdsGraph, include_top: bool) -> Self {
        let (n, m) = (left.node_count(), right.node_count());
        let mut roles: HashMap<String, u32> = HashMap::new();
        let role_id = |r: &str, roles: &mut HashMap<String, u32>| -> u32 {
            let next = roles.len() as u32;
            *roles.entry(r.to_string()).or_insert(next)
        };
        let left_top = if include_top { left.top().and_then(|t| left.node_index(t)) } else { None };
        let right_top = if include_top { right.top().and_then(|t| right.node_index(t)) } else { None };
        let mut unary = vec![0u32; n * m];
        for i in 0..n {
            for j in 0..m {
                let mut u = 0;
                if left.nodes()[i].predicate == right.nodes()[j].predicate {
                    u += 1;
                }
                if let (Some(a), Some(b)) = (carg_of(left, i), carg_of(right, j)) {
                    if a == b {
                        u += 1;
                    }
                }
                if left_top == Some(i) && right_top == Some(j) {
                    u += 1;
                }
                unary[i * m + j] = u;
            }
        }
        let left_edges: Vec<(usize, usize, u32)> = left
            .indexed_edges()
            .map(|(s, t, r)| (s, t, role_id(r, &mut roles)))
            .collect();
        let right_edges = right
            .indexed_edges()
            .map(|(s, t, r)| (s, t, role_id(r, &mut roles)))
            .collect();
        let mut incident = vec![Vec::new(); n];
        for (k, &(s, t, _)) in left_edges.iter().enumerate() {
            incident[s].push(k);
            incident[t].push(k);
        }
        let unary_max = (0..n)
            .map(|i| (0..m).map(|j| unary[i * m + j]).max().unwrap_or(0))
            .collect();
        Problem {
            n,
            m,
            unary,
            left_edges,
            incident,
            right_edges,
            unary_max,
        }
    }

    fn unary(&self, i: usize, j: Option<usize>) -> u32 {
        j.map_or(0, |j| self.unary[i * self.m + j])
    }

    fn edge_hit(&self, k: usize, map: &[Option<usize>]) -> u32 {
        let (s, t, r) = self.left_edges[k];
        match (map[s], map[t]) {
            (Some(a), Some(b)) => self.right_edges.contains(&(a, b, r)) as u32,
            _ => 0,
        }
    }

    fn score(&self, map: &[Option<usize>]) -> u32 {
        let unary: u32 = (0..self.n).map(|i| self.unary(i, map[i])).sum();
        let edges: u32 = (0..self.left_edges.len()).map(|k| self.edge_hit(k, map)).sum();
        unary + edges
    }

    /// Score change when the nodes in `changes` take new images.
    fn delta(&self, map: &mut [Option<usize>], changes: &[(usize, Option<usize>)]) -> i64 {
        let mut edges: Vec<usize> = changes.iter().flat_map(|&(i, _)| self.incident[i].iter().copied()).collect();
        edges.sort_unstable();
        edges.dedup();
        let mut before: i64 = changes.iter().map(|&(i, _)| self.unary(i, map[i]) as i64).sum();
        before += edges.iter().map(|&k| self.edge_hit(k, map) as i64).sum::<i64>();
        let saved: Vec<Option<usize>> = changes.iter().map(|&(i, _)| map[i]).collect();
        for &(i, j) in changes {
            map[i] = j;
        }
        let mut after: i64 = changes.iter().map(|&(i, _)| self.unary(i, map[i]) as i64).sum();
        after += edges.iter().map(|&k| self.edge_hit(k, map) as i64).sum::<i64>();
        for (&(i, _), old) in changes.iter().zip(saved) {
            map[i] = old;
        }
        after - before
    }

    /// Steepest-ascent hill climbing over moves (re-map one node to a free
    /// right node or to nothing) and swaps (exchange two images).
    fn climb(&self, map: &mut Vec<Option<usize>>) -> u32 {
        let mut used = vec![false; self.m];
        for j in map.iter().flatten() {
            used[*j] = true;
        }
        loop {
            let mut best: Option<(i64, Vec<(usize, Option<usize>)>)> = None;
            let mut consider = |d: i64, change: Vec<(usize, Option<usize>)>| {
                if d > 0 && best.as_ref().is_none_or(|(b, _)| d > *b) {
                    best = Some((d, change));
                }
            };
            for i in 0..self.n {
                for j in 0..self.m {
                    if !used[j] {
                        let change = vec![(i, Some(j))];
                        consider(self.delta(map, &change), change);
                    }
                }
                if map[i].is_some() {
                    let change = vec![(i, None)];
                    consider(self.delta(map, &change), change);
                }
                for k in i + 1..self.n {
                    if map[i] != map[k] {
                        let change = vec![(i, map[k]), (k, map[i])];
                        consider(self.delta(map, &change), change);
                    }
                }
            }
            let Some((_, change)) = best else { break };
            for &(i, _) in &change {
                if let Some(j) = map[i] {
                    used[j] = false;
                }
            }
            for &(i, j) in &change {
                map[i] = j;
            }
            for &(i, _) in &change {
                if let Some(j) = map[i] {
                    used[j] = true;
                }
            }
        }
        self.score(map)
    }

    /// Map each left node, in order, to the free right node with the largest
    /// unary gain (lowest index on ties), when that gain is positive.
    fn greedy_init(&self) -> Vec<Option<usize>> {
        let mut used = vec![false; self.m];
        let mut map = vec![None; self.n];
        for (i, slot) in map.iter_mut().enumerate() {
            let mut best: Option<(u32, usize)> = None;
            for j in 0..self.m {
                let u = self.unary[i * self.m + j];
                if !used[j] && u > 0 && best.is_none_or(|(b, _)| u > b) {
                    best = Some((u, j));
                }
            }
            if let Some((_, j)) = best {
                used[j] = true;
                *slot = Some(j);
            }
        }
        map
    }

    /// Visit left nodes in random order and map each to a random free right
    /// node, preferring ones with a positive unary gain.
    fn random_init<R: Rng>(&self, rng: &mut R) -> Vec<Option<usize>> {
        let mut used = vec![false; self.m];
        let mut map = vec![None; self.n];
        let mut order: Vec<usize> = (0..self.n).collect();
        order.shuffle(rng);
        for i in order {
            let free: Vec<usize> = (0..self.m).filter(|&j| !used[j]).collect();
            let good: Vec<usize> = free.iter().copied().filter(|&j| self.unary[i * self.m + j] > 0).collect();
            let pool = if good.is_empty() { &free } else { &good };
            if let Some(&j) = pool.choose(rng) {
                used[j] = true;
                map[i] = Some(j);
            }
        }
        map
    }

    /// Exact optimum by depth-first search over injections of every left
    /// node (all gains are non-negative, so full injections suffice when
    /// `n ≤ m`), pruned with an optimistic bound.
    fn exhaustive(&self) -> (u32, Vec<Option<usize>>) {
        debug_assert!(self.n <= self.m);
        // Edges become decidable once their later endpoint is assigned.
        let mut closing: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for (k, &(s, t, _)) in self.left_edges.iter().enumerate() {
            closing[s.max(t)].push(k);
        }
        let mut rest_bound = vec![0u32; self.n + 1];
        for i in (0..self.n).rev() {
            rest_bound[i] = rest_bound[i + 1] + self.unary_max[i] + closing[i].len() as u32;
        }
        let mut state = Search {
            problem: self,
            closing: &closing,
            rest_bound: &rest_bound,
            map: vec![None; self.n],
            used: vec![false; self.m],
            best: 0,
            best_map: vec![None; self.n],
        };
        state.best_map = self.greedy_init();
        state.best = self.score(&state.best_map);
        state.dfs(0, 0);
        (state.best, state.best_map)
    }
}

struct Search<'a> {
    problem: &'a Problem,
    closing: &'a [Vec<usize>],
    rest_bound: &'a [u32],
    map: Vec<Option<usize>>,
    used: Vec<bool>,
    best: u32,
    best_map: Vec<Option<usize>>,
}

impl Search<'_> {
    fn dfs(&mut self, i: usize, score: u32) {
        let p = self.problem;
        if score + self.rest_bound[i] <= self.best {
            return;
        }
        if i == p.n {
            self.best = score;
            self.best_map = self.map.clone();
            return;
        }
        for j in 0..p.m {
            if self.used[j] {
                continue;
            }
            self.used[j] = true;
            self.map[i] = Some(j);
            let mut gain = p.unary(i, Some(j));
            for &k in &self.closing[i] {
                gain += p.edge_hit(k, &self.map);
            }
            self.dfs(i + 1, score + gain);
            self.map[i] = None;
            self.used[j] = false;
        }
    }
}

struct Totals {
    pred: usize,
    gold: usize,
    pred_inst: usize,
    gold_inst: usize,
    pred_edges: usize,
    gold_edges: usize,
}

fn triple_count(g: &EdsGraph, include_top: bool) -> usize {
    let cargs = g.nodes().iter().filter(|n| n.carg.is_some()).count();
    g.node_count() + cargs + g.edge_count() + usize::from(include_top && g.top().is_some())
}

fn totals(pred: &EdsGraph, gold: &EdsGraph, include_top: bool) -> Totals {
    Totals {
        pred: triple_count(pred, include_top),
        gold: triple_count(gold, include_top),
        pred_inst: pred.node_count(),
        gold_inst: gold.node_count(),
        pred_edges: pred.edge_count(),
        gold_edges: gold.edge_count(),
    }
}

/// Score a given predicted-to-gold mapping.
pub fn score_mapping(pred: &EdsGraph, gold: &EdsGraph, mapping: &[Option<usize>], include_top: bool) -> AlignmentMapping {
    assert_eq!(mapping.len(), pred.node_count(), "mapping covers every predicted node");
    let problem = Problem::new(pred, gold, include_top);
    let matched = problem.score(mapping) as usize;
    let inst = (0..pred.node_count())
        .filter(|&i| matches!(mapping[i], Some(j) if pred.nodes()[i].predicate == gold.nodes()[j].predicate))
        .count();
    let edges = (0..problem.left_edges.len())
        .map(|k| problem.edge_hit(k, mapping) as usize)
        .sum();
    let t = totals(pred, gold, include_top);
    AlignmentMapping {
        mapping: mapping.to_vec(),
        triples: Prf::from_counts(matched, t.pred, t.gold),
        concept: Prf::from_counts(inst, t.pred_inst, t.gold_inst),
        arc: Prf::from_counts(edges, t.pred_edges, t.gold_edges),
    }
}

fn restart_seed(seed: u64, restart: usize) -> u64 {
    seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Hill-climbing Smatch: one greedy start plus `restarts − 1` seeded random
/// starts, keeping the best (earliest on ties).
pub fn smatch_with(pred: &EdsGraph, gold: &EdsGraph, options: &SmatchOptions) -> AlignmentMapping {
    let restarts = options.restarts.max(1);
    let problem = Problem::new(pred, gold, options.include_top);
    let runs: Vec<(u32, Vec<Option<usize>>)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut map = if r == 0 {
                problem.greedy_init()
            } else {
                problem.random_init(&mut ChaCha8Rng::seed_from_u64(restart_seed(options.seed, r)))
            };
            let s = problem.climb(&mut map);
            (s, map)
        })
        .collect();
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.0 > runs[best].0 {
            best = r;
        }
    }
    score_mapping(pred, gold, &runs[best].1, options.include_top)
}

pub fn smatch(pred: &EdsGraph, gold: &EdsGraph, restarts: usize, seed: u64) -> AlignmentMapping {
    smatch_with(
        pred,
        gold,
        &SmatchOptions {
            restarts,
            seed,
            include_top: true,
        },
    )
}

/// Exact Smatch by exhaustive search.
pub fn smatch_oracle_with(pred: &EdsGraph, gold: &EdsGraph, include_top: bool) -> Result<AlignmentMapping> {
    let (n, m) = (pred.node_count(), gold.node_count());
    if n.min(m) > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge(n, m));
    }
    let mapping = if n <= m {
        Problem::new(pred, gold, include_top).exhaustive().1
    } else {
        let inverse = Problem::new(gold, pred, include_top).exhaustive().1;
        let mut mapping = vec![None; n];
        for (g, p) in inverse.into_iter().enumerate() {
            if let Some(p) = p {
                mapping[p] = Some(g);
            }
        }
        mapping
    };
    Ok(score_mapping(pred, gold, &mapping, include_top))
}

pub fn smatch_oracle(pred: &EdsGraph, gold: &EdsGraph) -> Result<AlignmentMapping> {
    smatch_oracle_with(pred, gold, true)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphScore {
    pub id: String,
    pub result: AlignmentMapping,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusSmatch {
    pub graphs: Vec<GraphScore>,
    /// Summed triple counts.
    pub micro: Prf,
    /// Mean of per-graph F-scores.
    pub macro_f: f64,
    pub concept: Prf,
    pub arc: Prf,
}

impl CorpusSmatch {
    /// TSV with one row per graph and a final `ALL` row (micro, or macro F
    /// when `macro_average`); graphs scored vacuously are listed in a
    /// trailing comment.
    pub fn to_tsv(&self, macro_average: bool) -> String {
        let mut out = String::from("id\tP\tR\tF\tconcept_F\tarc_F\n");
        for g in &self.graphs {
            let r = &g.result;
            out.push_str(&format!(
                "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\n",
                g.id, r.triples.precision, r.triples.recall, r.triples.f, r.concept.f, r.arc.f
            ));
        }
        if macro_average {
            let n = self.graphs.len().max(1) as f64;
            let mean = |f: &dyn Fn(&AlignmentMapping) -> f64| self.graphs.iter().map(|g| f(&g.result)).sum::<f64>() / n;
            out.push_str(&format!(
                "ALL\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\n",
                mean(&|r| r.triples.precision),
                mean(&|r| r.triples.recall),
                self.macro_f,
                mean(&|r| r.concept.f),
                mean(&|r| r.arc.f)
            ));
        } else {
            out.push_str(&format!(
                "ALL\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\n",
                self.micro.precision, self.micro.recall, self.micro.f, self.concept.f, self.arc.f
            ));
        }
        let vacuous: Vec<&str> = self
            .graphs
            .iter()
            .filter(|g| g.result.vacuous())
            .map(|g| g.id.as_str())
            .collect();
        if !vacuous.is_empty() {
            out.push_str(&format!("# vacuous (both graphs empty): {}\n", vacuous.join(",")));
        }
        out
    }
}

/// Score `(id, predicted, gold)` triples and aggregate.
pub fn corpus_smatch(pairs: &[(String, EdsGraph, EdsGraph)], options: &SmatchOptions) -> CorpusSmatch {
    let graphs: Vec<GraphScore> = pairs
        .par_iter()
        .map(|(id, pred, gold)| GraphScore {
            id: id.clone(),
            result: smatch_with(pred, gold, options),
        })
        .collect();
    let zero = Prf::from_counts(0, 0, 0);
    let sum = |f: &dyn Fn(&AlignmentMapping) -> Prf| graphs.iter().fold(zero, |acc, g| acc.add(&f(&g.result)));
    let macro_f = if graphs.is_empty() {
        1.0
    } else {
        graphs.iter().map(|g| g.result.f()).sum::<f64>() / graphs.len() as f64
    };
    CorpusSmatch {
        micro: sum(&|r| r.triples),
        concept: sum(&|r| r.concept),
        arc: sum(&|r| r.arc),
        macro_f,
        graphs,
    }
}

/// Pair predicted and gold graphs by id, in gold order.
pub fn pair_by_id(
    pred: Vec<(String, EdsGraph)>,
    gold: Vec<(String, EdsGraph)>,
) -> Result<Vec<(String, EdsGraph, EdsGraph)>> {
    let mut pred_map: HashMap<String, EdsGraph> = pred.into_iter().collect();
    let mut missing = Vec::new();
    let mut out = Vec::with_capacity(gold.len());
    for (id, g) in gold {
        match pred_map.remove(&id) {
            Some(p) => out.push((id, p, g)),
            None => missing.push(id),
        }
    }
    if !missing.is_empty() || !pred_map.is_empty() {
        let mut extra: Vec<String> = pred_map.into_keys().collect();
        extra.sort();
        let mut parts = Vec::new();
        if !missing.is_empty() {
            parts.push(format!("no prediction for {}", missing.join(", ")));
        }
        if !extra.is_empty() {
            parts.push(format!("no gold graph for {}", extra.join(", ")));
        }
        return Err(Error::IdMismatch(parts.join("; ")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_eds;

    #[test]
    fn wrong_label_fixture() {
        let gold = parse_eds("{b: d:_dog_n_1<0:3>[] b:_bark_v_1<4:9>[ARG1 d]}").unwrap();
        let pred = parse_eds("{b: d:_dog_n_1<0:3>[] b:_bark_v_1<4:9>[ARG2 d]}").unwrap();
        let r = smatch(&pred, &gold, 4, 0);
        assert_eq!(r.matched(), 3);
        assert_eq!(r.f(), 0.75);
        assert_eq!(smatch_oracle(&pred, &gold).unwrap().f(), 0.75);
        assert_eq!(r.arc.f, 0.0);
        assert_eq!(r.concept.f, 1.0);
    }

    #[test]
    fn empty_cases() {
        let empty = EdsGraph::empty();
        let g = parse_eds("{x: x:pron<0:1>[]}").unwrap();
        assert_eq!(smatch(&empty, &g, 1, 0).f(), 0.0);
        assert_eq!(smatch_oracle(&empty, &g).unwrap().f(), 0.0);
        let both = smatch(&empty, &empty, 1, 0);
        assert!(both.vacuous());
        assert_eq!(both.f(), 1.0);
    }

    #[test]
    fn oracle_limit() {
        let big: String = (0..9).map(|i| format!("n{i}:p<0:1>[] ")).collect();
        let g = parse_eds(&format!("{{{big}}}")).unwrap();
        assert!(matches!(smatch_oracle(&g, &g), Err(Error::OracleTooLarge(9, 9))));
    }

    #[test]
    fn ids_must_pair() {
        let g = parse_eds("{x: x:pron<0:1>[]}").unwrap();
        let err = pair_by_id(vec![("a".into(), g.clone())], vec![("b".into(), g)]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('a') && msg.contains('b'));
    }
}
