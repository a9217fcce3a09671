//! Exhaustive Smatch over explicit triple sets.

use std::collections::HashSet;

use edsparse::graph::EdsGraph;

#[derive(Hash, PartialEq, Eq, Clone)]
pub enum T {
    Inst(usize, String),
    Carg(usize, String),
    Top(usize),
    Edge(usize, String, usize),
}

pub fn triples(g: &EdsGraph) -> Vec<T> {
    let index = |id: &str| g.node_index(id).unwrap();
    let mut out: Vec<T> = Vec::new();
    for (i, n) in g.nodes().iter().enumerate() {
        out.push(T::Inst(i, n.predicate.clone()));
        if let Some(c) = &n.carg {
            out.push(T::Carg(i, c.clone()));
        }
    }
    if let Some(t) = g.top() {
        out.push(T::Top(index(t)));
    }
    for e in g.edges() {
        out.push(T::Edge(index(&e.source), e.role.clone(), index(&e.target)));
    }
    out
}

/// Matched triple count of a mapping, computed by renaming predicted
/// variables and intersecting triple sets.
pub fn matched(pred: &[T], gold: &HashSet<T>, map: &[Option<usize>]) -> usize {
    let rename = |t: &T| -> Option<T> {
        Some(match t {
            T::Inst(i, p) => T::Inst(map[*i]?, p.clone()),
            T::Carg(i, c) => T::Carg(map[*i]?, c.clone()),
            T::Top(i) => T::Top(map[*i]?),
            T::Edge(s, r, t) => T::Edge(map[*s]?, r.clone(), map[*t]?),
        })
    };
    pred.iter().filter_map(rename).filter(|t| gold.contains(t)).count()
}

/// Best matched count over every partial injection.
pub fn brute_force_smatch(pred: &EdsGraph, gold: &EdsGraph) -> usize {
    fn go(i: usize, map: &mut Vec<Option<usize>>, used: &mut Vec<bool>, p: &[T], g: &HashSet<T>, best: &mut usize) {
        if i == map.len() {
            *best = (*best).max(matched(p, g, map));
            return;
        }
        go(i + 1, map, used, p, g, best);
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                map[i] = Some(j);
                go(i + 1, map, used, p, g, best);
                map[i] = None;
                used[j] = false;
            }
        }
    }
    let p = triples(pred);
    let g: HashSet<T> = triples(gold).into_iter().collect();
    let mut best = 0;
    go(0, &mut vec![None; pred.node_count()], &mut vec![false; gold.node_count()], &p, &g, &mut best);
    best
}
