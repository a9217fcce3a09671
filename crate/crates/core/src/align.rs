//! Node-to-token alignment, delexicalization and per-token concept tags.
//!
//! Every concept node is attached to exactly one token. The concepts of a
//! token, delexicalized and sorted, form its tag; the tag sequence is the
//! target of the concept tagger. Relexicalization inverts the process given
//! the sentence lemmas.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::corpus::{Instance, Sentence};
use crate::error::{Error, Result};
use crate::graph::{EdsGraph, EdsNode};

pub const EMPTY_TAG: &str = "∅";
pub const TAG_SEPARATOR: char = '⊕';
pub const LEMMA_PLACEHOLDER: char = '*';

/// Which alignment rule attached a node to its token.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlignRule {
    /// The anchor covers exactly one token.
    Single,
    /// `compound*` predicate over several tokens: first token.
    CompoundFirst,
    /// Other abstract predicate over several tokens: last token.
    AbstractLast,
    /// Surface predicate over several tokens: first token.
    SurfaceFirst,
    /// Anchor covers no whole token: the token containing its start.
    ContainsStart,
    /// Anchor only partially overlaps tokens: first overlapping token.
    Overlap,
}

/// Token index of every node, parallel to [`EdsGraph::nodes`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alignment {
    pub tokens: Vec<usize>,
    pub rules: Vec<AlignRule>,
}

impl Alignment {
    pub fn token_of(&self, graph: &EdsGraph, id: &str) -> Option<usize> {
        graph.node_index(id).map(|i| self.tokens[i])
    }

    /// Nodes placed by one of the fallback rules; worth a look when a corpus
    /// is first converted.
    pub fn fallbacks<'g>(&self, graph: &'g EdsGraph) -> Vec<&'g EdsNode> {
        self.rules
            .iter()
            .zip(graph.nodes())
            .filter(|(r, _)| matches!(r, AlignRule::ContainsStart | AlignRule::Overlap))
            .map(|(_, n)| n)
            .collect()
    }
}

/// Attach one node to a token.
pub fn align_node(node: &EdsNode, sentence: &Sentence) -> Option<(usize, AlignRule)> {
    let a = node.anchor;
    let covered: Vec<usize> = sentence
        .tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.span.start >= a.start && t.span.end <= a.end)
        .map(|(i, _)| i)
        .collect();
    match covered.len() {
        1 => return Some((covered[0], AlignRule::Single)),
        0 => {}
        _ => {
            return Some(if node.predicate.starts_with("compound") {
                (covered[0], AlignRule::CompoundFirst)
            } else if node.is_surface() {
                (covered[0], AlignRule::SurfaceFirst)
            } else {
                (*covered.last().unwrap(), AlignRule::AbstractLast)
            })
        }
    }
    if let Some(i) = sentence
        .tokens
        .iter()
        .position(|t| t.span.start <= a.start && a.start < t.span.end)
    {
        return Some((i, AlignRule::ContainsStart));
    }
    sentence
        .tokens
        .iter()
        .position(|t| t.span.start < a.end && a.start < t.span.end)
        .map(|i| (i, AlignRule::Overlap))
}

/// Align every node of `graph` to a token of `sentence`.
pub fn align_graph(graph: &EdsGraph, sentence: &Sentence) -> Result<Alignment> {
    let mut tokens = Vec::with_capacity(graph.node_count());
    let mut rules = Vec::with_capacity(graph.node_count());
    for node in graph.nodes() {
        let (tok, rule) = align_node(node, sentence).ok_or_else(|| Error::Unalignable {
            sentence: sentence.id.clone(),
            node: format!("{} ({}<{}:{}>)", node.id, node.predicate, node.anchor.start, node.anchor.end),
        })?;
        tokens.push(tok);
        rules.push(rule);
    }
    Ok(Alignment { tokens, rules })
}

pub fn align_nodes(instance: &Instance) -> Result<Alignment> {
    align_graph(&instance.graph, &instance.sentence)
}

/// Lemma segment of a surface predicate: `_drug_n_1` → `drug`.
pub fn predicate_lemma(predicate: &str) -> Option<&str> {
    let rest = predicate.strip_prefix('_')?;
    let (lemma, tail) = rest.split_once('_')?;
    if lemma.is_empty() || tail.is_empty() {
        return None;
    }
    Some(lemma)
}

/// Replace the lemma of a surface predicate by `*` when it agrees with the
/// token lemma (case-insensitively). Abstract predicates, and surface
/// predicates whose lemma differs from the token's, are returned unchanged.
pub fn delexicalize(predicate: &str, lemma: &str) -> String {
    match predicate_lemma(predicate) {
        Some(p) if p.to_lowercase() == lemma.to_lowercase() => {
            format!("{}{}", LEMMA_PLACEHOLDER, &predicate[1 + p.len()..])
        }
        _ => predicate.to_string(),
    }
}

/// Inverse of [`delexicalize`] for a given token lemma.
pub fn relexicalize_part(part: &str, lemma: &str) -> String {
    match part.strip_prefix(LEMMA_PLACEHOLDER) {
        Some(rest) => format!("_{}{}", lemma.to_lowercase(), rest),
        None => part.to_string(),
    }
}

/// The concepts triggered by one token: a sorted multiset of delexicalized
/// predicates, possibly empty.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConceptTag {
    parts: Vec<String>,
}

impl ConceptTag {
    pub fn new<I, S>(parts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut parts: Vec<String> = parts.into_iter().map(Into::into).collect();
        parts.sort();
        ConceptTag { parts }
    }

    pub fn empty() -> Self {
        ConceptTag::default()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn parts(&self) -> &[String] {
        &self.parts
    }
}

impl fmt::Display for ConceptTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return f.write_str(EMPTY_TAG);
        }
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, "{}", TAG_SEPARATOR)?;
            }
            f.write_str(p)?;
        }
        Ok(())
    }
}

impl FromStr for ConceptTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == EMPTY_TAG {
            return Ok(ConceptTag::empty());
        }
        if s.is_empty() || s.split(TAG_SEPARATOR).any(str::is_empty) {
            return Err(Error::InvalidArgument(format!("malformed concept tag {:?}", s)));
        }
        Ok(ConceptTag::new(s.split(TAG_SEPARATOR)))
    }
}

/// Per-token tags of a graph under an alignment.
pub fn compose_graph_tags(graph: &EdsGraph, sentence: &Sentence, alignment: &Alignment) -> Vec<ConceptTag> {
    let mut parts: Vec<Vec<String>> = vec![Vec::new(); sentence.len()];
    for (node, &tok) in graph.nodes().iter().zip(&alignment.tokens) {
        parts[tok].push(delexicalize(&node.predicate, &sentence.tokens[tok].lemma));
    }
    parts.into_iter().map(ConceptTag::new).collect()
}

pub fn compose_tags(instance: &Instance, alignment: &Alignment) -> Vec<ConceptTag> {
    compose_graph_tags(&instance.graph, &instance.sentence, alignment)
}

/// A concept node recovered from a tag, with the token it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelexNode {
    pub token: usize,
    pub node: EdsNode,
}

/// Expand tags back into nodes. Node ids are `n<token>_<k>` (1-based token
/// position, k-th part of the tag); `named` nodes copy the surface form into
/// their constant argument.
pub fn relexicalize(tags: &[ConceptTag], sentence: &Sentence) -> Result<Vec<RelexNode>> {
    if tags.len() != sentence.len() {
        return Err(Error::Shape(format!(
            "{} tags for {} tokens in sentence {}",
            tags.len(),
            sentence.len(),
            sentence.id
        )));
    }
    let mut nodes = Vec::new();
    for (i, (tag, token)) in tags.iter().zip(&sentence.tokens).enumerate() {
        for (k, part) in tag.parts().iter().enumerate() {
            let predicate = relexicalize_part(part, &token.lemma);
            let mut node = EdsNode::new(format!("n{}_{}", i + 1, k), predicate, token.span);
            if node.predicate == "named" {
                node.carg = Some(token.form.clone());
            }
            nodes.push(RelexNode { token: i, node });
        }
    }
    Ok(nodes)
}

/// Multiset of `(predicate, token)` pairs of a graph under an alignment.
pub fn concept_multiset(graph: &EdsGraph, alignment: &Alignment) -> BTreeMap<(String, usize), usize> {
    let mut out = BTreeMap::new();
    for (node, &tok) in graph.nodes().iter().zip(&alignment.tokens) {
        *out.entry((node.predicate.clone(), tok)).or_insert(0) += 1;
    }
    out
}

/// Does compose-then-relexicalize reproduce the gold `(predicate, token)`
/// multiset of this instance?
pub fn round_trips(instance: &Instance) -> Result<bool> {
    let alignment = align_nodes(instance)?;
    let gold = concept_multiset(&instance.graph, &alignment);
    let tags = compose_tags(instance, &alignment);
    let mut recovered = BTreeMap::new();
    for r in relexicalize(&tags, &instance.sentence)? {
        *recovered.entry((r.node.predicate, r.token)).or_insert(0) += 1;
    }
    Ok(gold == recovered)
}

/// Closed tag inventory. Id 0 is always the empty tag; remaining ids follow
/// descending training frequency, ties broken by tag string.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct TagVocabulary {
    tags: Vec<ConceptTagString>,
    counts: Vec<usize>,
    index: HashMap<String, usize>,
}

impl From<TagVocabulary> for String {
    fn from(v: TagVocabulary) -> String {
        v.to_text()
    }
}

impl TryFrom<String> for TagVocabulary {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        TagVocabulary::from_text(&s)
    }
}

type ConceptTagString = String;

impl TagVocabulary {
    /// Build from tag sequences; tags seen fewer than `min_count` times are
    /// folded into the empty tag.
    pub fn build<'a, I>(sequences: I, min_count: usize) -> Self
    where
        I: IntoIterator<Item = &'a [ConceptTag]>,
    {
        let mut counts: HashMap<String, usize> = HashMap::new();
        let mut empty = 0;
        for seq in sequences {
            for tag in seq {
                if tag.is_empty() {
                    empty += 1;
                } else {
                    *counts.entry(tag.to_string()).or_insert(0) += 1;
                }
            }
        }
        let mut entries: Vec<(String, usize)> = Vec::new();
        for (tag, count) in counts {
            if count >= min_count.max(1) {
                entries.push((tag, count));
            } else {
                empty += count;
            }
        }
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut tags = vec![EMPTY_TAG.to_string()];
        let mut cnts = vec![empty];
        for (t, c) in entries {
            tags.push(t);
            cnts.push(c);
        }
        let mut v = TagVocabulary {
            tags,
            counts: cnts,
            index: HashMap::new(),
        };
        v.reindex();
        v
    }

    pub(crate) fn reindex(&mut self) {
        self.index = self.tags.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn id(&self, tag: &ConceptTag) -> Option<usize> {
        self.index.get(&tag.to_string()).copied()
    }

    /// Id of a tag, or of the empty tag when unknown.
    pub fn id_or_empty(&self, tag: &ConceptTag) -> usize {
        self.id(tag).unwrap_or(0)
    }

    pub fn tag(&self, id: usize) -> ConceptTag {
        self.tags[id].parse().expect("vocabulary holds well-formed tags")
    }

    pub fn count(&self, id: usize) -> usize {
        self.counts[id]
    }

    /// One `tag<TAB>id<TAB>count` line per entry.
    pub fn to_text(&self) -> String {
        self.tags
            .iter()
            .zip(&self.counts)
            .enumerate()
            .map(|(i, (t, c))| format!("{}\t{}\t{}\n", t, i, c))
            .collect()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tags = Vec::new();
        let mut counts = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let bad = || Error::Format {
                path: "tag vocabulary".into(),
                line: lineno + 1,
                message: format!("malformed entry {:?}", line),
            };
            if cols.len() != 3 {
                return Err(bad());
            }
            let id: usize = cols[1].parse().map_err(|_| bad())?;
            if id != tags.len() {
                return Err(bad());
            }
            let tag: ConceptTag = cols[0].parse().map_err(|_| bad())?;
            if (id == 0) != tag.is_empty() {
                return Err(bad());
            }
            tags.push(tag.to_string());
            counts.push(cols[2].parse().map_err(|_| bad())?);
        }
        if tags.is_empty() {
            return Err(Error::Format {
                path: "tag vocabulary".into(),
                line: 0,
                message: "empty vocabulary".into(),
            });
        }
        let mut v = TagVocabulary {
            tags,
            counts,
            index: HashMap::new(),
        };
        v.reindex();
        Ok(v)
    }
}
