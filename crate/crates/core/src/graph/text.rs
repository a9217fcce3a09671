//! Native EDS text format.
//!
//! ```text
//! {e3:
//!  _1:_the_q<0:3>[BV x2]
//!  x2:_drug_n_1<4:8>[]
//!  e3:_introduce_v_to<13:23>[ARG2 x2]
//! }
//! ```
//!
//! The top id is optional; a graph without top starts directly with its
//! first node. Constant arguments follow the predicate as `("value")`.

use std::fmt::Write;

use super::{Anchor, EdsEdge, EdsGraph, EdsNode};
use crate::error::{Error, Result};

/// Parse one graph in native EDS notation. Trailing whitespace is allowed,
/// anything else after the closing brace is an error.
pub fn parse_eds(text: &str) -> Result<EdsGraph> {
    let mut cursor = Cursor::new(text);
    let graph = cursor.graph()?;
    cursor.skip_ws();
    if !cursor.at_end() {
        return Err(cursor.error("trailing input after graph"));
    }
    Ok(graph)
}

/// Canonical serialization: nodes ordered by `(start, end, predicate, id)`,
/// edges of a node ordered by `(role, target)`.
pub fn serialize_eds(g: &EdsGraph) -> String {
    if g.is_empty() {
        return "{}".to_string();
    }
    let mut order: Vec<&EdsNode> = g.nodes().iter().collect();
    order.sort_by(|a, b| {
        (a.anchor.start, a.anchor.end, &a.predicate, &a.id).cmp(&(
            b.anchor.start,
            b.anchor.end,
            &b.predicate,
            &b.id,
        ))
    });

    let mut outgoing: Vec<Vec<&EdsEdge>> = vec![Vec::new(); g.node_count()];
    for edge in g.edges() {
        let i = g.node_index(&edge.source).expect("validated graph");
        outgoing[i].push(edge);
    }

    let mut out = String::new();
    out.push('{');
    if let Some(top) = g.top() {
        out.push_str(top);
        out.push(':');
    }
    out.push('\n');
    for node in order {
        let _ = write!(out, " {}:{}", node.id, node.predicate);
        if let Some(carg) = &node.carg {
            out.push_str("(\"");
            for c in carg.chars() {
                if c == '"' || c == '\\' {
                    out.push('\\');
                }
                out.push(c);
            }
            out.push_str("\")");
        }
        let _ = write!(out, "<{}:{}>[", node.anchor.start, node.anchor.end);
        let mut edges = outgoing[g.node_index(&node.id).unwrap()].clone();
        edges.sort_by(|a, b| (&a.role, &a.target).cmp(&(&b.role, &b.target)));
        for (k, edge) in edges.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{} {}", edge.role, edge.target);
        }
        out.push_str("]\n");
    }
    out.push('}');
    out
}

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    _src: &'a str,
}

fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || matches!(c, ':' | '{' | '}' | '[' | ']' | '<' | '>' | '(' | ')' | ',' | '"')
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor {
            chars: src.chars().collect(),
            pos: 0,
            _src: src,
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn error(&self, message: impl Into<String>) -> Error {
        let mut line = 1;
        let mut column = 1;
        for &c in &self.chars[..self.pos.min(self.chars.len())] {
            if c == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
        }
        Error::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, want: char) -> Result<()> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected '{}', found '{}'", want, c))),
            None => Err(self.error(format!("expected '{}', found end of input", want))),
        }
    }

    fn symbol(&mut self, what: &str) -> Result<String> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if !is_delimiter(c)) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error(format!("expected {}", what)));
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn predicate(&mut self) -> Result<String> {
        if self.peek() == Some('"') {
            return self.quoted();
        }
        let start = self.pos;
        while matches!(self.peek(), Some(c) if !c.is_whitespace() && !matches!(c, '<' | '(' | '[' | '"')) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("expected predicate"));
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn quoted(&mut self) -> Result<String> {
        self.expect('"')?;
        let mut value = String::new();
        loop {
            match self.peek() {
                None => return Err(self.error("unterminated string")),
                Some('"') => {
                    self.pos += 1;
                    return Ok(value);
                }
                Some('\\') => {
                    self.pos += 1;
                    match self.peek() {
                        Some(c) => {
                            value.push(c);
                            self.pos += 1;
                        }
                        None => return Err(self.error("unterminated escape")),
                    }
                }
                Some(c) => {
                    value.push(c);
                    self.pos += 1;
                }
            }
        }
    }

    fn integer(&mut self) -> Result<usize> {
        if self.peek() == Some('-') {
            return Err(self.error("negative anchor offset"));
        }
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("expected integer"));
        }
        let digits: String = self.chars[start..self.pos].iter().collect();
        digits.parse().map_err(|_| self.error("integer out of range"))
    }

    fn graph(&mut self) -> Result<EdsGraph> {
        self.skip_ws();
        self.expect('{')?;
        self.skip_ws();
        let mut top = None;
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        let mut first = true;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('}') => {
                    self.pos += 1;
                    break;
                }
                None => return Err(self.error("unterminated graph, expected '}'")),
                _ => {}
            }
            let id = self.symbol("node id")?;
            self.expect(':')?;
            let is_top = matches!(self.peek(), None | Some('}')) || self.peek().is_some_and(char::is_whitespace);
            if is_top {
                if !first {
                    return Err(self.error(format!("expected predicate after '{}:'", id)));
                }
                top = Some(id);
                first = false;
                continue;
            }
            first = false;
            let (node, node_edges) = self.node_body(id)?;
            nodes.push(node);
            edges.extend(node_edges);
        }
        EdsGraph::new(nodes, edges, top)
    }

    fn node_body(&mut self, id: String) -> Result<(EdsNode, Vec<EdsEdge>)> {
        let predicate = self.predicate()?;
        let mut carg = None;
        if self.peek() == Some('(') {
            self.pos += 1;
            carg = Some(self.quoted()?);
            self.expect(')')?;
        }
        self.expect('<')?;
        let start = self.integer()?;
        self.expect(':')?;
        let end = self.integer()?;
        self.expect('>')?;
        if end < start {
            return Err(self.error(format!("inverted anchor <{}:{}>", start, end)));
        }
        self.expect('[')?;
        let mut edges = Vec::new();
        self.skip_ws();
        if self.peek() != Some(']') {
            loop {
                self.skip_ws();
                let role = self.symbol("role")?;
                if !matches!(self.peek(), Some(c) if c.is_whitespace()) {
                    return Err(self.error("expected space between role and target"));
                }
                self.skip_ws();
                let target = self.symbol("edge target")?;
                edges.push(EdsEdge::new(id.clone(), target, role));
                self.skip_ws();
                if self.peek() == Some(',') {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(']')?;
        let mut node = EdsNode::new(id, predicate, Anchor::new(start, end));
        node.carg = carg;
        Ok((node, edges))
    }
}
