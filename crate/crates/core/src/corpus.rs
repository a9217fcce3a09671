//! Tokenized sentences, gold graphs, and train-set down-sampling.
//!
//! Sentence files hold blank-line separated blocks:
//!
//! ```text
//! #id s1
//! #text The drug was introduced .
//! 1	The	the	DT	0	3
//! 2	drug	drug	NN	4	8
//! ```
//!
//! Token columns are `index FORM LEMMA POS START END`, tab separated, with
//! character offsets into the `#text` line. Graph files hold `#id`-prefixed
//! native EDS blocks, or one JSON graph per line.

// The format example above is tab-separated on purpose.
#![allow(clippy::tabs_in_doc_comments)]

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{graph_from_json_line, graph_to_json_line, parse_eds, serialize_eds, Anchor, EdsGraph};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub form: String,
    pub lemma: String,
    pub pos: String,
    pub span: Anchor,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub text: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Length of the text in characters, the unit of all anchors.
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    /// Check token invariants: at least one token, spans strictly increasing,
    /// non-overlapping, inside the text, and equal to the token form.
    pub fn validate(&self) -> Result<()> {
        if self.tokens.is_empty() {
            return Err(Error::InvalidArgument(format!("sentence {} has no tokens", self.id)));
        }
        let chars: Vec<char> = self.text.chars().collect();
        let mut prev_end = 0;
        for (i, tok) in self.tokens.iter().enumerate() {
            let span = tok.span;
            if span.start >= span.end || span.end > chars.len() {
                return Err(Error::InvalidArgument(format!(
                    "sentence {} token {} has span <{}:{}> outside text of length {}",
                    self.id,
                    i + 1,
                    span.start,
                    span.end,
                    chars.len()
                )));
            }
            if i > 0 && span.start < prev_end {
                return Err(Error::InvalidArgument(format!(
                    "sentence {} token {} overlaps its predecessor",
                    self.id,
                    i + 1
                )));
            }
            let surface: String = chars[span.start..span.end].iter().collect();
            if surface != tok.form {
                return Err(Error::InvalidArgument(format!(
                    "sentence {} token {} form {:?} does not match text {:?}",
                    self.id,
                    i + 1,
                    tok.form,
                    surface
                )));
            }
            prev_end = span.end;
        }
        Ok(())
    }
}

/// A sentence paired with its gold graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub sentence: Sentence,
    pub graph: EdsGraph,
}

impl Instance {
    /// Pair a sentence and a graph, checking every anchor against the text.
    pub fn new(sentence: Sentence, graph: EdsGraph) -> Result<Self> {
        let len = sentence.char_len();
        for node in graph.nodes() {
            if node.anchor.end > len {
                return Err(Error::AnchorOutOfBounds {
                    sentence: sentence.id.clone(),
                    node: node.id.clone(),
                    start: node.anchor.start,
                    end: node.anchor.end,
                    len,
                });
            }
        }
        Ok(Instance { sentence, graph })
    }

    pub fn id(&self) -> &str {
        &self.sentence.id
    }
}

/// Graph file encodings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GraphFormat {
    Eds,
    Jsonl,
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn format_error(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

/// Parse the contents of a sentence file. `origin` names the source in errors.
pub fn parse_sentences(content: &str, origin: &str) -> Result<Vec<Sentence>> {
    let mut sentences = Vec::new();
    let mut seen = HashSet::new();
    let mut current: Option<(usize, Sentence)> = None;

    let mut finish = |current: &mut Option<(usize, Sentence)>, sentences: &mut Vec<Sentence>| -> Result<()> {
        if let Some((line, sentence)) = current.take() {
            sentence
                .validate()
                .map_err(|e| format_error(origin, line, e.to_string()))?;
            if !seen.insert(sentence.id.clone()) {
                return Err(format_error(origin, line, format!("duplicate sentence id {}", sentence.id)));
            }
            sentences.push(sentence);
        }
        Ok(())
    };

    for (lineno, line) in content.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            finish(&mut current, &mut sentences)?;
            continue;
        }
        if let Some(id) = line.strip_prefix("#id ") {
            finish(&mut current, &mut sentences)?;
            current = Some((
                lineno,
                Sentence {
                    id: id.trim().to_string(),
                    text: String::new(),
                    tokens: Vec::new(),
                },
            ));
            continue;
        }
        let (_, sentence) = current
            .as_mut()
            .ok_or_else(|| format_error(origin, lineno, "expected '#id <sentence-id>'"))?;
        if let Some(text) = line.strip_prefix("#text ") {
            sentence.text = text.to_string();
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 {
            return Err(format_error(
                origin,
                lineno,
                format!("expected 6 tab-separated columns, found {}", cols.len()),
            ));
        }
        let index: usize = cols[0]
            .parse()
            .map_err(|_| format_error(origin, lineno, format!("bad token index {:?}", cols[0])))?;
        if index != sentence.tokens.len() + 1 {
            return Err(format_error(
                origin,
                lineno,
                format!("token index {} out of sequence", index),
            ));
        }
        let start: usize = cols[4]
            .parse()
            .map_err(|_| format_error(origin, lineno, format!("bad start offset {:?}", cols[4])))?;
        let end: usize = cols[5]
            .parse()
            .map_err(|_| format_error(origin, lineno, format!("bad end offset {:?}", cols[5])))?;
        sentence.tokens.push(Token {
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            pos: cols[3].to_string(),
            span: Anchor::new(start, end),
        });
    }
    finish(&mut current, &mut sentences)?;
    Ok(sentences)
}

pub fn load_sentences(path: &Path) -> Result<Vec<Sentence>> {
    parse_sentences(&read_file(path)?, &path.display().to_string())
}

pub fn write_sentences(sentences: &[Sentence]) -> String {
    let mut blocks = Vec::with_capacity(sentences.len());
    for s in sentences {
        let mut block = format!("#id {}\n#text {}\n", s.id, s.text);
        for (i, t) in s.tokens.iter().enumerate() {
            block.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                i + 1,
                t.form,
                t.lemma,
                t.pos,
                t.span.start,
                t.span.end
            ));
        }
        blocks.push(block);
    }
    blocks.join("\n")
}

/// Parse a graph file, detecting JSON lines by a leading `{` on the first
/// non-empty line.
pub fn parse_graphs(content: &str, origin: &str) -> Result<Vec<(String, EdsGraph)>> {
    let first = content.lines().find(|l| !l.trim().is_empty());
    match first {
        None => Ok(Vec::new()),
        Some(l) if l.trim_start().starts_with('{') => parse_json_graphs(content, origin),
        Some(_) => parse_native_graphs(content, origin),
    }
}

fn parse_json_graphs(content: &str, origin: &str) -> Result<Vec<(String, EdsGraph)>> {
    let mut out = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let pair = graph_from_json_line(line).map_err(|e| format_error(origin, lineno + 1, e.to_string()))?;
        out.push(pair);
    }
    check_unique(&out, origin)?;
    Ok(out)
}

fn parse_native_graphs(content: &str, origin: &str) -> Result<Vec<(String, EdsGraph)>> {
    let mut out = Vec::new();
    let mut current: Option<(usize, String, String)> = None;
    let flush = |current: &mut Option<(usize, String, String)>, out: &mut Vec<(String, EdsGraph)>| -> Result<()> {
        if let Some((line, id, body)) = current.take() {
            let graph = parse_eds(&body).map_err(|e| format_error(origin, line, format!("graph {}: {}", id, e)))?;
            out.push((id, graph));
        }
        Ok(())
    };
    for (lineno, line) in content.lines().enumerate() {
        if let Some(id) = line.strip_prefix("#id ") {
            flush(&mut current, &mut out)?;
            current = Some((lineno + 1, id.trim().to_string(), String::new()));
        } else if let Some((_, _, body)) = current.as_mut() {
            body.push_str(line);
            body.push('\n');
        } else if !line.trim().is_empty() {
            return Err(format_error(origin, lineno + 1, "expected '#id <sentence-id>'"));
        }
    }
    flush(&mut current, &mut out)?;
    check_unique(&out, origin)?;
    Ok(out)
}

fn check_unique(graphs: &[(String, EdsGraph)], origin: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for (id, _) in graphs {
        if !seen.insert(id.as_str()) {
            return Err(format_error(origin, 0, format!("duplicate graph id {}", id)));
        }
    }
    Ok(())
}

pub fn load_graphs(path: &Path) -> Result<Vec<(String, EdsGraph)>> {
    parse_graphs(&read_file(path)?, &path.display().to_string())
}

pub fn write_graphs<'a, I>(graphs: I, format: GraphFormat) -> String
where
    I: IntoIterator<Item = (&'a str, &'a EdsGraph)>,
{
    match format {
        GraphFormat::Eds => graphs
            .into_iter()
            .map(|(id, g)| format!("#id {}\n{}\n", id, serialize_eds(g)))
            .collect::<Vec<_>>()
            .join("\n"),
        GraphFormat::Jsonl => graphs
            .into_iter()
            .map(|(id, g)| graph_to_json_line(id, g) + "\n")
            .collect(),
    }
}

/// Pair sentences with graphs by id, keeping sentence order. Every id must
/// occur on both sides.
pub fn pair_instances(sentences: Vec<Sentence>, graphs: Vec<(String, EdsGraph)>) -> Result<Vec<Instance>> {
    let mut by_id: HashMap<String, EdsGraph> = graphs.into_iter().collect();
    let mut missing_graph = Vec::new();
    let mut instances = Vec::with_capacity(sentences.len());
    for sentence in sentences {
        match by_id.remove(&sentence.id) {
            Some(graph) => instances.push(Instance::new(sentence, graph)?),
            None => missing_graph.push(sentence.id.clone()),
        }
    }
    let mut missing_sentence: Vec<String> = by_id.into_keys().collect();
    missing_sentence.sort();
    if !missing_graph.is_empty() || !missing_sentence.is_empty() {
        let mut parts = Vec::new();
        if !missing_sentence.is_empty() {
            parts.push(format!("graphs without sentence: {}", missing_sentence.join(", ")));
        }
        if !missing_graph.is_empty() {
            parts.push(format!("sentences without graph: {}", missing_graph.join(", ")));
        }
        return Err(Error::IdMismatch(parts.join("; ")));
    }
    Ok(instances)
}

pub fn load_corpus(sentences_path: &Path, graphs_path: &Path) -> Result<Vec<Instance>> {
    pair_instances(load_sentences(sentences_path)?, load_graphs(graphs_path)?)
}

/// Seeded subset of `round(fraction * N)` items (ties to even), in corpus order.
///
/// Subsets are prefixes of one seeded shuffle, so for a fixed seed a larger
/// fraction always yields a superset of a smaller one.
pub fn downsample<T: Clone>(items: &[T], fraction: f64, seed: u64) -> Result<Vec<T>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("fraction {} not in (0, 1]", fraction)));
    }
    if fraction == 1.0 {
        return Ok(items.to_vec());
    }
    let keep = (fraction * items.len() as f64).round_ties_even() as usize;
    if keep == 0 {
        return Err(Error::InvalidArgument(format!(
            "fraction {} of {} items selects nothing",
            fraction,
            items.len()
        )));
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut chosen = order[..keep].to_vec();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| items[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SENTS: &str = "#id s1\n#text The drug\n1\tThe\tthe\tDT\t0\t3\n2\tdrug\tdrug\tNN\t4\t8\n\n#id s2\n#text It\n1\tIt\tit\tPRP\t0\t2\n";

    #[test]
    fn sentence_round_trip_is_byte_identical() {
        let s = parse_sentences(SENTS, "t").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(write_sentences(&s), SENTS);
    }

    #[test]
    fn pairs_by_id() {
        let s = parse_sentences(SENTS, "t").unwrap();
        let g = parse_graphs("#id s2\n{x: x:pron<0:2>[]}\n\n#id s1\n{e: e:_drug_n_1<4:8>[]}\n", "g").unwrap();
        let inst = pair_instances(s, g).unwrap();
        assert_eq!(inst.len(), 2);
        assert_eq!(inst[0].id(), "s1");
    }

    #[test]
    fn missing_id_is_named() {
        let s = parse_sentences(SENTS, "t").unwrap();
        let g = parse_graphs("#id s1\n{e: e:_drug_n_1<4:8>[]}\n#id s9\n{x: x:pron<0:2>[]}\n", "g").unwrap();
        match pair_instances(s, g) {
            Err(Error::IdMismatch(msg)) => {
                assert!(msg.contains("s9"));
                assert!(msg.contains("s2"));
            }
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn anchor_out_of_bounds() {
        let s = parse_sentences(SENTS, "t").unwrap();
        let g = parse_graphs("#id s1\n{e: e:_drug_n_1<4:80>[]}\n#id s2\n{x: x:pron<0:2>[]}\n", "g").unwrap();
        assert!(matches!(pair_instances(s, g), Err(Error::AnchorOutOfBounds { .. })));
    }

    #[test]
    fn malformed_lines() {
        assert!(parse_sentences("#id a\n#text x\n1\tx\tx\tNN\t0\n", "t").is_err());
        assert!(parse_sentences("#id a\n#text x\n2\tx\tx\tNN\t0\t1\n", "t").is_err());
        assert!(parse_sentences("#id a\n#text xy\n1\tx\tx\tNN\t0\t2\n", "t").is_err());
        assert!(parse_sentences("1\tx\tx\tNN\t0\t1\n", "t").is_err());
    }

    #[test]
    fn json_graph_file() {
        let content = "{\"id\":\"s1\",\"top\":null,\"nodes\":[{\"id\":\"a\",\"predicate\":\"p\",\"start\":0,\"end\":1}],\"edges\":[]}\n";
        let g = parse_graphs(content, "j").unwrap();
        assert_eq!(g[0].0, "s1");
        assert_eq!(write_graphs(g.iter().map(|(i, g)| (i.as_str(), g)), GraphFormat::Jsonl), content);
    }

    #[test]
    fn downsample_contract() {
        let items: Vec<u32> = (0..100).collect();
        assert_eq!(downsample(&items, 1.0, 3).unwrap(), items);
        let a = downsample(&items, 0.25, 7).unwrap();
        assert_eq!(a.len(), 25);
        assert_eq!(a, downsample(&items, 0.25, 7).unwrap());
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        let ten: Vec<u32> = (0..10).collect();
        assert!(downsample(&ten, 0.05, 1).is_err());
        assert!(downsample(&ten, 0.0, 1).is_err());
        assert!(downsample(&ten, 1.5, 1).is_err());
    }
}
