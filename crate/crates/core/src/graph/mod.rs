//! Elementary Dependency Structure graphs.
//!
//! An [`EdsGraph`] is a set of predicate-labelled nodes anchored to character
//! ranges of the source text, connected by role-labelled directed edges. Graphs
//! are validated on construction and immutable afterwards.

mod json;
mod text;

use std::collections::{HashMap, HashSet};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use json::{graph_from_json_line, graph_to_json_line, JsonEdge, JsonGraph, JsonNode};
pub use text::{parse_eds, serialize_eds};

/// Character range `[start, end)` into the source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Anchor {
    pub start: usize,
    pub end: usize,
}

impl Anchor {
    pub fn new(start: usize, end: usize) -> Self {
        Anchor { start, end }
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdsNode {
    pub id: String,
    pub predicate: String,
    pub anchor: Anchor,
    pub carg: Option<String>,
}

impl EdsNode {
    pub fn new(id: impl Into<String>, predicate: impl Into<String>, anchor: Anchor) -> Self {
        EdsNode {
            id: id.into(),
            predicate: predicate.into(),
            anchor,
            carg: None,
        }
    }

    pub fn with_carg(mut self, carg: impl Into<String>) -> Self {
        self.carg = Some(carg.into());
        self
    }

    /// Surface predicates start with an underscore (`_drug_n_1`); all others
    /// (`compound`, `parg_d`, `named`) are abstract.
    pub fn is_surface(&self) -> bool {
        self.predicate.starts_with('_')
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdsEdge {
    pub source: String,
    pub target: String,
    pub role: String,
}

impl EdsEdge {
    pub fn new(source: impl Into<String>, target: impl Into<String>, role: impl Into<String>) -> Self {
        EdsEdge {
            source: source.into(),
            target: target.into(),
            role: role.into(),
        }
    }
}

/// A validated EDS graph. The graph may be disconnected.
#[derive(Clone, Debug, Default)]
pub struct EdsGraph {
    nodes: Vec<EdsNode>,
    edges: Vec<EdsEdge>,
    top: Option<String>,
    text: Option<String>,
    index: HashMap<String, usize>,
}

impl PartialEq for EdsGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges && self.top == other.top
    }
}

impl EdsGraph {
    /// Build and validate a graph.
    ///
    /// Rejects duplicate node ids, empty predicates, inverted anchors,
    /// dangling edge endpoints, self-loops, duplicate `(source, target, role)`
    /// edges and an unresolved top.
    pub fn new(nodes: Vec<EdsNode>, edges: Vec<EdsEdge>, top: Option<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if node.id.is_empty() {
                return Err(Error::InvalidGraph("empty node id".into()));
            }
            if node.predicate.is_empty() {
                return Err(Error::InvalidGraph(format!("node {} has an empty predicate", node.id)));
            }
            if node.anchor.end < node.anchor.start {
                return Err(Error::InvalidGraph(format!(
                    "node {} has inverted anchor <{}:{}>",
                    node.id, node.anchor.start, node.anchor.end
                )));
            }
            if index.insert(node.id.clone(), i).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate node id {}", node.id)));
            }
        }

        let mut seen = HashSet::with_capacity(edges.len());
        for edge in &edges {
            for end in [&edge.source, &edge.target] {
                if !index.contains_key(end) {
                    return Err(Error::InvalidGraph(format!(
                        "edge {} -{}-> {} refers to unknown node {}",
                        edge.source, edge.role, edge.target, end
                    )));
                }
            }
            if edge.source == edge.target {
                return Err(Error::InvalidGraph(format!(
                    "self-loop {} -{}-> {}",
                    edge.source, edge.role, edge.target
                )));
            }
            if edge.role.is_empty() {
                return Err(Error::InvalidGraph(format!(
                    "edge {} -> {} has an empty role",
                    edge.source, edge.target
                )));
            }
            if !seen.insert((&edge.source, &edge.target, &edge.role)) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge {} -{}-> {}",
                    edge.source, edge.role, edge.target
                )));
            }
        }

        if let Some(top) = &top {
            if !index.contains_key(top) {
                return Err(Error::InvalidGraph(format!("top {} is not a node", top)));
            }
        }

        Ok(EdsGraph {
            nodes,
            edges,
            top,
            text: None,
            index,
        })
    }

    pub fn empty() -> Self {
        EdsGraph::default()
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text = Some(text.into());
        self
    }

    pub fn nodes(&self) -> &[EdsNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[EdsEdge] {
        &self.edges
    }

    pub fn top(&self) -> Option<&str> {
        self.top.as_deref()
    }

    pub fn text(&self) -> Option<&str> {
        self.text.as_deref()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Position of a node in [`EdsGraph::nodes`].
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn node(&self, id: &str) -> Option<&EdsNode> {
        self.node_index(id).map(|i| &self.nodes[i])
    }

    /// Edges as `(source index, target index, role)`.
    pub fn indexed_edges(&self) -> impl Iterator<Item = (usize, usize, &str)> + '_ {
        self.edges
            .iter()
            .map(move |e| (self.index[&e.source], self.index[&e.target], e.role.as_str()))
    }

    /// Copy of this graph with one edge removed.
    pub fn without_edge(&self, edge: &EdsEdge) -> Self {
        let edges = self.edges.iter().filter(|e| *e != edge).cloned().collect();
        let mut g = EdsGraph::new(self.nodes.clone(), edges, self.top.clone())
            .expect("removing an edge keeps a graph valid");
        g.text = self.text.clone();
        g
    }

    /// True iff undirected reachability from any node spans the graph.
    pub fn is_connected(&self) -> Result<bool> {
        is_connected(self)
    }

    /// Decompose into matchable triples.
    pub fn triples(&self, include_top: bool) -> Vec<Triple> {
        to_triples(self, include_top)
    }
}

/// True iff undirected reachability spans all nodes. Empty graphs are rejected.
pub fn is_connected(g: &EdsGraph) -> Result<bool> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut adjacency = vec![Vec::new(); n];
    for (s, t, _) in g.indexed_edges() {
        adjacency[s].push(t);
        adjacency[t].push(s);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut reached = 1;
    while let Some(u) = stack.pop() {
        for &v in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                reached += 1;
                stack.push(v);
            }
        }
    }
    Ok(reached == n)
}

/// Target of a relation triple: another node variable or a constant string.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TripleTarget {
    Var(String),
    Const(String),
}

/// A Smatch-style triple. Anchors are never part of a triple; node matching
/// only looks at predicates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Triple {
    Instance { var: String, predicate: String },
    Relation { role: String, source: String, target: TripleTarget },
    Top { var: String },
}

pub const CARG_ROLE: &str = "CARG";

/// One instance triple per node, one relation triple per edge, a `CARG`
/// relation per constant argument, and a top triple when requested and set.
pub fn to_triples(g: &EdsGraph, include_top: bool) -> Vec<Triple> {
    let mut triples = Vec::with_capacity(g.node_count() * 2 + g.edge_count() + 1);
    for node in g.nodes() {
        triples.push(Triple::Instance {
            var: node.id.clone(),
            predicate: node.predicate.clone(),
        });
    }
    for node in g.nodes() {
        if let Some(carg) = &node.carg {
            triples.push(Triple::Relation {
                role: CARG_ROLE.to_string(),
                source: node.id.clone(),
                target: TripleTarget::Const(carg.clone()),
            });
        }
    }
    for edge in g.edges() {
        triples.push(Triple::Relation {
            role: edge.role.clone(),
            source: edge.source.clone(),
            target: TripleTarget::Var(edge.target.clone()),
        });
    }
    if include_top {
        if let Some(top) = g.top() {
            triples.push(Triple::Top { var: top.to_string() });
        }
    }
    triples
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: &str, pred: &str, s: usize, e: usize) -> EdsNode {
        EdsNode::new(id, pred, Anchor::new(s, e))
    }

    #[test]
    fn rejects_dangling_edge() {
        let err = EdsGraph::new(vec![node("x1", "a", 0, 1)], vec![EdsEdge::new("x1", "x2", "ARG1")], None);
        assert!(matches!(err, Err(Error::InvalidGraph(_))));
    }

    #[test]
    fn rejects_duplicate_parallel_edge() {
        let nodes = vec![node("a", "p", 0, 1), node("b", "q", 1, 2)];
        let edges = vec![EdsEdge::new("a", "b", "ARG1"), EdsEdge::new("a", "b", "ARG1")];
        assert!(EdsGraph::new(nodes, edges, None).is_err());
    }

    #[test]
    fn distinct_roles_between_same_pair_allowed() {
        let nodes = vec![node("a", "_and_c", 0, 1), node("b", "_house_v_1", 1, 2)];
        let edges = vec![EdsEdge::new("a", "b", "L-HNDL"), EdsEdge::new("a", "b", "L-INDEX")];
        assert!(EdsGraph::new(nodes, edges, None).is_ok());
    }

    #[test]
    fn rejects_self_loop_and_bad_top() {
        let nodes = vec![node("a", "p", 0, 1)];
        assert!(EdsGraph::new(nodes.clone(), vec![EdsEdge::new("a", "a", "BV")], None).is_err());
        assert!(EdsGraph::new(nodes, vec![], Some("zz".into())).is_err());
    }

    #[test]
    fn rejects_duplicate_id_and_inverted_anchor() {
        assert!(EdsGraph::new(vec![node("a", "p", 0, 1), node("a", "q", 1, 2)], vec![], None).is_err());
        assert!(EdsGraph::new(vec![node("a", "p", 3, 1)], vec![], None).is_err());
        assert!(EdsGraph::new(vec![node("a", "", 0, 1)], vec![], None).is_err());
    }

    #[test]
    fn connectivity() {
        let single = EdsGraph::new(vec![node("a", "p", 0, 1)], vec![], None).unwrap();
        assert!(is_connected(&single).unwrap());
        let two = EdsGraph::new(vec![node("a", "p", 0, 1), node("b", "q", 1, 2)], vec![], None).unwrap();
        assert!(!is_connected(&two).unwrap());
        assert!(matches!(is_connected(&EdsGraph::empty()), Err(Error::EmptyGraph)));
    }

    #[test]
    fn triple_counts() {
        let g = parse_eds("{e3: _1:_the_q<0:3>[BV x2] x2:_drug_n_1<4:8>[] e3:_introduce_v_to<13:23>[ARG2 x2]}").unwrap();
        assert_eq!(to_triples(&g, true).len(), 6);
        assert_eq!(to_triples(&g, false).len(), 5);

        let single = EdsGraph::new(vec![node("a", "p", 0, 1)], vec![], None).unwrap();
        assert_eq!(to_triples(&single, true), vec![Triple::Instance { var: "a".into(), predicate: "p".into() }]);

        let named = EdsGraph::new(vec![node("x", "named", 0, 7).with_carg("Germany")], vec![], None).unwrap();
        let triples = to_triples(&named, true);
        assert_eq!(triples.len(), 2);
        assert_eq!(
            triples[1],
            Triple::Relation {
                role: "CARG".into(),
                source: "x".into(),
                target: TripleTarget::Const("Germany".into())
            }
        );
    }
}
