//! Line-delimited JSON interchange format.

use serde::{Deserialize, Serialize};

use super::{Anchor, EdsEdge, EdsGraph, EdsNode};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsonNode {
    pub id: String,
    pub predicate: String,
    pub start: usize,
    pub end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carg: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsonEdge {
    pub src: String,
    pub tgt: String,
    pub role: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsonGraph {
    pub id: String,
    pub top: Option<String>,
    pub nodes: Vec<JsonNode>,
    pub edges: Vec<JsonEdge>,
}

impl JsonGraph {
    pub fn from_graph(id: &str, g: &EdsGraph) -> Self {
        JsonGraph {
            id: id.to_string(),
            top: g.top().map(str::to_string),
            nodes: g
                .nodes()
                .iter()
                .map(|n| JsonNode {
                    id: n.id.clone(),
                    predicate: n.predicate.clone(),
                    start: n.anchor.start,
                    end: n.anchor.end,
                    carg: n.carg.clone(),
                })
                .collect(),
            edges: g
                .edges()
                .iter()
                .map(|e| JsonEdge {
                    src: e.source.clone(),
                    tgt: e.target.clone(),
                    role: e.role.clone(),
                })
                .collect(),
        }
    }

    pub fn into_graph(self) -> Result<(String, EdsGraph)> {
        let nodes = self
            .nodes
            .into_iter()
            .map(|n| EdsNode {
                id: n.id,
                predicate: n.predicate,
                anchor: Anchor::new(n.start, n.end),
                carg: n.carg,
            })
            .collect();
        let edges = self
            .edges
            .into_iter()
            .map(|e| EdsEdge::new(e.src, e.tgt, e.role))
            .collect();
        Ok((self.id, EdsGraph::new(nodes, edges, self.top)?))
    }
}

pub fn graph_to_json_line(id: &str, g: &EdsGraph) -> String {
    serde_json::to_string(&JsonGraph::from_graph(id, g)).expect("graph serializes")
}

pub fn graph_from_json_line(line: &str) -> Result<(String, EdsGraph)> {
    let json: JsonGraph = serde_json::from_str(line)?;
    json.into_graph()
}
