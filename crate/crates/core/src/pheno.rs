//! Construction-focused diagnostics.
//!
//! Gold annotations are bi-lexical triples `head --role--> dependent` over
//! 1-based token positions. System graphs are projected onto the same view
//! (every edge becomes a triple between the tokens its endpoints align to)
//! and each gold triple is checked against it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::align_node;
use crate::config::TrainConfig;
use crate::corpus::{downsample, Instance, Sentence};
use crate::encoder::ContextVectors;
use crate::error::{Error, Result};
use crate::graph::EdsGraph;
use crate::pipeline::Parser;
use crate::smatch::{corpus_smatch, smatch_with, SmatchOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phenomenon {
    Comp,
    As,
    Ditr,
    Causemo,
    Way,
    Passive,
    Vpart,
    Itexpl,
    Ned,
    Argadj,
    Barerel,
    Tough,
    Rnr,
    Absol,
    Vger,
    Control,
}

impl Phenomenon {
    pub const ALL: [Phenomenon; 16] = [
        Phenomenon::Comp,
        Phenomenon::As,
        Phenomenon::Ditr,
        Phenomenon::Causemo,
        Phenomenon::Way,
        Phenomenon::Passive,
        Phenomenon::Vpart,
        Phenomenon::Itexpl,
        Phenomenon::Ned,
        Phenomenon::Argadj,
        Phenomenon::Barerel,
        Phenomenon::Tough,
        Phenomenon::Rnr,
        Phenomenon::Absol,
        Phenomenon::Vger,
        Phenomenon::Control,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phenomenon::Comp => "comp",
            Phenomenon::As => "as",
            Phenomenon::Ditr => "ditr",
            Phenomenon::Causemo => "causemo",
            Phenomenon::Way => "way",
            Phenomenon::Passive => "passive",
            Phenomenon::Vpart => "vpart",
            Phenomenon::Itexpl => "itexpl",
            Phenomenon::Ned => "ned",
            Phenomenon::Argadj => "argadj",
            Phenomenon::Barerel => "barerel",
            Phenomenon::Tough => "tough",
            Phenomenon::Rnr => "rnr",
            Phenomenon::Absol => "absol",
            Phenomenon::Vger => "vger",
            Phenomenon::Control => "control",
        }
    }

    /// Families scored by complete match of each predicate's argument set.
    pub fn has_complete_match(self) -> bool {
        matches!(
            self,
            Phenomenon::As | Phenomenon::Ditr | Phenomenon::Causemo | Phenomenon::Way
        )
    }
}

impl fmt::Display for Phenomenon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Phenomenon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Phenomenon::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown phenomenon '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subtype {
    A,
    B,
}

/// A word of the sentence: surface form and 1-based position.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WordRef {
    pub form: String,
    pub position: usize,
}

impl WordRef {
    pub fn new(form: impl Into<String>, position: usize) -> Self {
        WordRef {
            form: form.into(),
            position,
        }
    }
}

impl fmt::Display for WordRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.form, self.position)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PhenoTriple {
    pub sentence: String,
    pub phenomenon: Phenomenon,
    pub subtype: Option<Subtype>,
    pub head: WordRef,
    pub role: String,
    pub dep: WordRef,
}

impl fmt::Display for PhenoTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let subtype = match self.subtype {
            Some(Subtype::A) => "A",
            Some(Subtype::B) => "B",
            None => "-",
        };
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.sentence, self.phenomenon, subtype, self.head, self.role, self.dep
        )
    }
}

fn parse_word(field: &str) -> std::result::Result<WordRef, String> {
    let (form, pos) = field
        .rsplit_once('_')
        .ok_or_else(|| format!("'{field}' lacks a _position suffix"))?;
    if form.is_empty() {
        return Err(format!("'{field}' has an empty form"));
    }
    let position: usize = pos
        .parse()
        .map_err(|_| format!("'{field}' has a malformed position suffix"))?;
    if position == 0 {
        return Err(format!("'{field}': positions are 1-based"));
    }
    Ok(WordRef::new(form, position))
}

/// Parse a gold annotation file. Blank lines and `#` comments are skipped.
pub fn parse_pheno_gold(content: &str, origin: &str) -> Result<Vec<PhenoTriple>> {
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fail = |message: String| Error::Format {
            path: origin.to_string(),
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(fail(format!("expected 6 fields, found {}", fields.len())));
        }
        let phenomenon: Phenomenon = fields[1].parse().map_err(|e: Error| fail(e.to_string()))?;
        let subtype = match fields[2] {
            "-" => None,
            "A" => Some(Subtype::A),
            "B" => Some(Subtype::B),
            other => return Err(fail(format!("unknown subtype '{other}'"))),
        };
        out.push(PhenoTriple {
            sentence: fields[0].to_string(),
            phenomenon,
            subtype,
            head: parse_word(fields[3]).map_err(fail)?,
            role: fields[4].to_string(),
            dep: parse_word(fields[5]).map_err(fail)?,
        });
    }
    Ok(out)
}

/// Check every triple against its sentence: the sentence must exist and
/// both positions must lie within it. Form mismatches are only logged.
pub fn validate_pheno_gold(triples: &[PhenoTriple], sentences: &[Sentence]) -> Result<()> {
    let by_id: HashMap<&str, &Sentence> = sentences.iter().map(|s| (s.id.as_str(), s)).collect();
    for t in triples {
        let s = by_id
            .get(t.sentence.as_str())
            .ok_or_else(|| Error::IdMismatch(format!("phenomenon triple for unknown sentence '{}'", t.sentence)))?;
        for w in [&t.head, &t.dep] {
            if w.position > s.len() {
                return Err(Error::InvalidArgument(format!(
                    "{}: position {} out of range (sentence has {} tokens) in triple '{}'",
                    t.sentence,
                    w.position,
                    s.len(),
                    t
                )));
            }
            let form = &s.tokens[w.position - 1].form;
            if form != &w.form {
                log::warn!("{}: token {} is '{}', annotation says '{}'", t.sentence, w.position, form, w.form);
            }
        }
    }
    Ok(())
}

pub fn load_pheno_gold(path: &Path, sentences: &[Sentence]) -> Result<Vec<PhenoTriple>> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let triples = parse_pheno_gold(&content, &path.display().to_string())?;
    validate_pheno_gold(&triples, sentences)?;
    Ok(triples)
}

/// `(head, role, dependent)` over 1-based token positions.
pub type Bilexical = (usize, String, usize);

/// Token projection of one system graph.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BilexicalView {
    pub triples: BTreeSet<Bilexical>,
    /// `(ARG1 token, ARG2 token, cargs ok)` per `compound` node.
    compounds: Vec<(usize, usize, bool)>,
    /// `(ARG1 token, ARG2 token)` per `parg_d` node.
    passives: Vec<(Option<usize>, Option<usize>)>,
}

impl BilexicalView {
    /// Project `graph` with the given node-to-token map (0-based, `None` for
    /// unaligned nodes).
    pub fn project(graph: &EdsGraph, sentence: &Sentence, tokens: &[Option<usize>]) -> Self {
        let mut view = BilexicalView::default();
        let mut args: Vec<BTreeMap<&str, usize>> = vec![BTreeMap::new(); graph.node_count()];
        for (s, t, role) in graph.indexed_edges() {
            args[s].insert(role, t);
            if let (Some(h), Some(d)) = (tokens[s], tokens[t]) {
                view.triples.insert((h + 1, role.to_string(), d + 1));
            }
        }
        let carg_ok = |i: usize| {
            let node = &graph.nodes()[i];
            node.predicate != "named"
                || matches!((tokens[i], &node.carg), (Some(t), Some(c)) if sentence.tokens[t].form == *c)
        };
        for (i, node) in graph.nodes().iter().enumerate() {
            let arg = |r: &str| args[i].get(r).copied();
            if node.predicate == "compound" {
                if let (Some(a1), Some(a2)) = (arg("ARG1"), arg("ARG2")) {
                    if let (Some(h), Some(d)) = (tokens[a1], tokens[a2]) {
                        view.triples.insert((h + 1, "compound".to_string(), d + 1));
                        view.compounds.push((h + 1, d + 1, carg_ok(a1) && carg_ok(a2)));
                    }
                }
            } else if node.predicate == "parg_d" {
                let tok = |a: Option<usize>| a.and_then(|a| tokens[a]).map(|t| t + 1);
                view.passives.push((tok(arg("ARG1")), tok(arg("ARG2"))));
            }
        }
        view
    }
}

/// Token of every node by the alignment rules; unalignable nodes are
/// skipped with a warning.
pub fn anchor_tokens(graph: &EdsGraph, sentence: &Sentence) -> Vec<Option<usize>> {
    graph
        .nodes()
        .iter()
        .map(|n| {
            let t = align_node(n, sentence).map(|(t, _)| t);
            if t.is_none() {
                log::warn!("{}: node {} ({}) aligns to no token; skipped", sentence.id, n.id, n.predicate);
            }
            t
        })
        .collect()
}

/// Token of every node of `pred` via its Smatch counterpart in `reference`;
/// unmatched nodes fall back to their own anchors.
pub fn reference_tokens(
    pred: &EdsGraph,
    reference: &EdsGraph,
    sentence: &Sentence,
    options: &SmatchOptions,
) -> Vec<Option<usize>> {
    let mapping = smatch_with(pred, reference, options).mapping;
    let own = anchor_tokens(pred, sentence);
    let gold = anchor_tokens(reference, sentence);
    mapping
        .iter()
        .zip(own)
        .map(|(m, own)| m.and_then(|g| gold[g]).or(own))
        .collect()
}

/// The bi-lexical triples of `graph`: each edge between its endpoints'
/// tokens, plus `head --compound--> dependent` for every `compound` node.
pub fn extract_bilexical(graph: &EdsGraph, sentence: &Sentence) -> BTreeSet<Bilexical> {
    BilexicalView::project(graph, sentence, &anchor_tokens(graph, sentence)).triples
}

/// Which system roles count as a gold role. Entries prefixed with `~`
/// match the system edge in the reverse direction. Roles without an entry
/// match themselves.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoleMap(pub BTreeMap<String, Vec<String>>);

impl RoleMap {
    pub fn from_toml(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct File {
            #[serde(default)]
            roles: BTreeMap<String, Vec<String>>,
        }
        let file: File = toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("role map: {e}")))?;
        Ok(RoleMap(file.roles))
    }

    pub fn load(path: &Path) -> Result<Self> {
        RoleMap::from_toml(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    fn matches(&self, triples: &BTreeSet<Bilexical>, head: usize, role: &str, dep: usize) -> bool {
        match self.0.get(role) {
            None => triples.contains(&(head, role.to_string(), dep)),
            Some(alts) => alts.iter().any(|alt| match alt.strip_prefix('~') {
                Some(r) => triples.contains(&(dep, r.to_string(), head)),
                None => triples.contains(&(head, alt.clone(), dep)),
            }),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct PhenoOptions {
    pub roles: RoleMap,
    pub smatch: SmatchOptions,
}

/// One system's graphs, keyed by sentence id.
pub struct SystemGraphs<'a> {
    pub name: &'a str,
    pub graphs: &'a [(String, EdsGraph)],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhenoRow {
    pub system: String,
    pub phenomenon: String,
    pub subtype: String,
    pub count: usize,
    pub recovered: usize,
    pub recall: f64,
    pub complete_match: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhenoReport {
    pub system: String,
    pub rows: Vec<PhenoRow>,
    /// Per gold triple, in input order.
    pub recovered: Vec<bool>,
    /// Gold sentences the system produced a graph for.
    pub covered: usize,
    pub sentences: usize,
}

impl PhenoReport {
    pub fn row(&self, phenomenon: &str, subtype: &str) -> Option<&PhenoRow> {
        self.rows
            .iter()
            .find(|r| r.phenomenon == phenomenon && r.subtype == subtype)
    }

    pub fn recall(&self, phenomenon: &str, subtype: &str) -> Option<f64> {
        self.row(phenomenon, subtype).map(|r| r.recall)
    }
}

pub const REPORT_HEADER: &str = "system,phenomenon,subtype,count,recall,complete_match";

pub fn report_csv(reports: &[PhenoReport]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in reports.iter().flat_map(|r| &r.rows) {
        let complete = r.complete_match.map(|c| format!("{c:.6}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{:.6},{}\n",
            r.system, r.phenomenon, r.subtype, r.count, r.recall, complete
        ));
    }
    out
}

/// `compound` for ordinary compounds, `named_entity` when the head is a
/// proper noun.
fn comp_kind(t: &PhenoTriple, sentence: Option<&Sentence>) -> &'static str {
    let proper = sentence
        .and_then(|s| s.tokens.get(t.head.position - 1))
        .is_some_and(|tok| tok.pos.starts_with("NNP"));
    if proper {
        "named_entity"
    } else {
        "compound"
    }
}

fn recovered(t: &PhenoTriple, view: &BilexicalView, roles: &RoleMap) -> bool {
    let (h, d) = (t.head.position, t.dep.position);
    match t.phenomenon {
        Phenomenon::Comp if t.role == "compound" => view.compounds.iter().any(|&(a, b, ok)| a == h && b == d && ok),
        Phenomenon::Passive => {
            roles.matches(&view.triples, h, &t.role, d)
                && view
                    .passives
                    .iter()
                    .any(|&(a1, a2)| a1 == Some(h) && (t.role != "ARG2" || a2 == Some(d)))
        }
        _ => roles.matches(&view.triples, h, &t.role, d),
    }
}

#[derive(Default)]
struct Tally {
    count: usize,
    hit: usize,
    groups: BTreeMap<(String, usize), bool>,
}

impl Tally {
    fn add(&mut self, t: &PhenoTriple, ok: bool) {
        self.count += 1;
        self.hit += ok as usize;
        let g = self.groups.entry((t.sentence.clone(), t.head.position)).or_insert(true);
        *g &= ok;
    }

    fn row(&self, system: &str, phenomenon: String, subtype: &str, complete: bool) -> PhenoRow {
        let complete_match = complete.then(|| {
            let full = self.groups.values().filter(|&&g| g).count();
            full as f64 / self.groups.len() as f64
        });
        PhenoRow {
            system: system.to_string(),
            phenomenon,
            subtype: subtype.to_string(),
            count: self.count,
            recovered: self.hit,
            recall: self.hit as f64 / self.count as f64,
            complete_match,
        }
    }
}

fn build_rows(
    system: &str,
    gold: &[PhenoTriple],
    outcome: &[bool],
    include: &dyn Fn(&PhenoTriple) -> bool,
    suffix: &str,
    sentences: &HashMap<&str, &Sentence>,
) -> Vec<PhenoRow> {
    let mut rows = Vec::new();
    let mut all = Tally::default();
    for p in Phenomenon::ALL {
        let mut total = Tally::default();
        let mut sub: BTreeMap<String, Tally> = BTreeMap::new();
        for (t, &ok) in gold.iter().zip(outcome) {
            if t.phenomenon != p || !include(t) {
                continue;
            }
            total.add(t, ok);
            all.add(t, ok);
            if let Some(s) = t.subtype {
                sub.entry(format!("{s:?}")).or_default().add(t, ok);
            }
            if p == Phenomenon::Comp {
                let kind = comp_kind(t, sentences.get(t.sentence.as_str()).copied());
                sub.entry(kind.to_string()).or_default().add(t, ok);
            }
            if p.has_complete_match() {
                sub.entry(t.role.clone()).or_default().add(t, ok);
            }
        }
        if total.count == 0 {
            continue;
        }
        let name = format!("{p}{suffix}");
        rows.push(total.row(system, name.clone(), "-", p.has_complete_match()));
        for (s, tally) in &sub {
            rows.push(tally.row(system, name.clone(), s, false));
        }
    }
    if all.count > 0 {
        rows.push(all.row(system, format!("ALL{suffix}"), "-", false));
    }
    rows
}

/// Score one system's graphs against the gold triples.
///
/// Sentences without a system graph count as unrecovered; when any are
/// missing, coverage-restricted rows (`name[covered]`) follow the main ones.
/// With `reference` gold graphs, system nodes take the token of their Smatch
/// counterpart instead of their own anchor.
pub fn pheno_score(
    gold: &[PhenoTriple],
    sentences: &[Sentence],
    system: &SystemGraphs,
    reference: Option<&[(String, EdsGraph)]>,
    options: &PhenoOptions,
) -> PhenoReport {
    let sents: HashMap<&str, &Sentence> = sentences.iter().map(|s| (s.id.as_str(), s)).collect();
    let graphs: HashMap<&str, &EdsGraph> = system.graphs.iter().map(|(id, g)| (id.as_str(), g)).collect();
    let refs: HashMap<&str, &EdsGraph> = reference
        .unwrap_or_default()
        .iter()
        .map(|(id, g)| (id.as_str(), g))
        .collect();
    let mut ids: Vec<&str> = gold.iter().map(|t| t.sentence.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    let views: HashMap<&str, BilexicalView> = ids
        .par_iter()
        .filter_map(|&id| {
            let (graph, sentence) = (graphs.get(id)?, sents.get(id)?);
            let tokens = match refs.get(id) {
                Some(r) => reference_tokens(graph, r, sentence, &options.smatch),
                None => anchor_tokens(graph, sentence),
            };
            Some((id, BilexicalView::project(graph, sentence, &tokens)))
        })
        .collect();
    let outcome: Vec<bool> = gold
        .iter()
        .map(|t| {
            views
                .get(t.sentence.as_str())
                .is_some_and(|v| recovered(t, v, &options.roles))
        })
        .collect();
    let mut rows = build_rows(system.name, gold, &outcome, &|_| true, "", &sents);
    if views.len() < ids.len() {
        let covered = |t: &PhenoTriple| views.contains_key(t.sentence.as_str());
        rows.extend(build_rows(system.name, gold, &outcome, &covered, "[covered]", &sents));
    }
    PhenoReport {
        system: system.name.to_string(),
        rows,
        recovered: outcome,
        covered: views.len(),
        sentences: ids.len(),
    }
}

/// Triples read off gold graphs: `compound` nodes (comp), the ARG edges of
/// verbal predicates (ditr when an ARG3 is present, as otherwise) and
/// `parg_d` passives. Used where no hand annotation exists.
pub fn derive_triples(instances: &[Instance]) -> Vec<PhenoTriple> {
    let mut out = Vec::new();
    for inst in instances {
        let (g, s) = (&inst.graph, &inst.sentence);
        let tokens = anchor_tokens(g, s);
        let word = |node: usize| tokens[node].map(|t| WordRef::new(s.tokens[t].form.clone(), t + 1));
        let mut args: Vec<BTreeMap<&str, usize>> = vec![BTreeMap::new(); g.node_count()];
        for (a, b, role) in g.indexed_edges() {
            args[a].insert(role, b);
        }
        let mut push = |phenomenon, head: Option<WordRef>, role: &str, dep: Option<WordRef>| {
            if let (Some(head), Some(dep)) = (head, dep) {
                if head.position != dep.position {
                    out.push(PhenoTriple {
                        sentence: s.id.clone(),
                        phenomenon,
                        subtype: None,
                        head,
                        role: role.to_string(),
                        dep,
                    });
                }
            }
        };
        for (i, node) in g.nodes().iter().enumerate() {
            let a = &args[i];
            if node.predicate == "compound" {
                if let (Some(&h), Some(&d)) = (a.get("ARG1"), a.get("ARG2")) {
                    push(Phenomenon::Comp, word(h), "compound", word(d));
                }
            } else if node.predicate == "parg_d" {
                if let (Some(&v), Some(&p)) = (a.get("ARG1"), a.get("ARG2")) {
                    push(Phenomenon::Passive, word(v), "ARG2", word(p));
                    if let Some(&agent) = args[v].get("ARG1") {
                        push(Phenomenon::Passive, word(v), "ARG1", word(agent));
                    }
                }
            } else if node.is_surface() && node.predicate.contains("_v_") {
                let family = if a.contains_key("ARG3") {
                    Phenomenon::Ditr
                } else {
                    Phenomenon::As
                };
                for (role, &d) in a.iter().filter(|(r, _)| r.starts_with("ARG")) {
                    push(family, word(i), role, word(d));
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub fraction: f64,
    pub metric: String,
    pub value: f64,
}

pub fn curve_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from("fraction,metric,value\n");
    for r in rows {
        out.push_str(&format!("{},{},{:.6}\n", r.fraction, r.metric, r.value));
    }
    out
}

/// Metrics of one trained parser on `dev`.
pub fn curve_metrics(
    parser: &Parser,
    dev: &[Instance],
    pheno: &[PhenoTriple],
    ctx: Option<&ContextVectors>,
    options: &PhenoOptions,
) -> Result<Vec<(String, f64)>> {
    let sentences: Vec<Sentence> = dev.iter().map(|i| i.sentence.clone()).collect();
    let parsed = parser.parse_all(&sentences, parser.config.connected, ctx)?;
    let pairs: Vec<(String, EdsGraph, EdsGraph)> = dev
        .iter()
        .zip(&parsed)
        .map(|(i, p)| (i.id().to_string(), p.clone(), i.graph.clone()))
        .collect();
    let smatch = corpus_smatch(&pairs, &options.smatch);
    let mut out = vec![("smatch".to_string(), smatch.micro.f), ("concept_f".to_string(), smatch.concept.f)];
    let system: Vec<(String, EdsGraph)> = pairs.into_iter().map(|(id, p, _)| (id, p)).collect();
    let report = pheno_score(
        pheno,
        &sentences,
        &SystemGraphs {
            name: "curve",
            graphs: &system,
        },
        None,
        options,
    );
    // ditr_arg3 isolates the argument the construction adds beyond the
    // verb's own valency.
    let picks: [(&str, &str, &str, bool); 6] = [
        ("compound", "comp", "compound", false),
        ("named_entity", "comp", "named_entity", false),
        ("arg_complete", "as", "-", true),
        ("ditr", "ditr", "-", false),
        ("ditr_arg3", "ditr", "ARG3", false),
        ("passive", "passive", "-", false),
    ];
    for (metric, phen, sub, complete) in picks {
        if let Some(row) = report.row(phen, sub) {
            let value = if complete { row.complete_match.unwrap_or(0.0) } else { row.recall };
            out.push((metric.to_string(), value));
        }
    }
    Ok(out)
}

/// Train on nested seeded subsets of `train` and evaluate each on `dev`.
///
/// Without hand annotations the phenomenon metrics use
/// [`derive_triples`] on `dev`. Metrics with no gold instance are omitted.
pub fn learning_curve(
    train: &[Instance],
    dev: &[Instance],
    fractions: &[f64],
    config: &TrainConfig,
    ctx: Option<&ContextVectors>,
    pheno: Option<&[PhenoTriple]>,
    options: &PhenoOptions,
) -> Result<Vec<CurveRow>> {
    if fractions.is_empty() {
        return Err(Error::InvalidArgument("no fractions given".into()));
    }
    if fractions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("fractions must be strictly ascending".into()));
    }
    let derived;
    let pheno = match pheno {
        Some(p) => p,
        None => {
            derived = derive_triples(dev);
            &derived
        }
    };
    let mut rows = Vec::new();
    for &fraction in fractions {
        let subset = downsample(train, fraction, config.seed)?;
        log::info!("fraction {fraction}: training on {} of {} sentences", subset.len(), train.len());
        let (parser, _) = Parser::train(&subset, dev, config, ctx, |_| {})?;
        for (metric, value) in curve_metrics(&parser, dev, pheno, ctx, options)? {
            rows.push(CurveRow { fraction, metric, value });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;
    use crate::graph::{Anchor, EdsEdge, EdsNode};

    fn sentence(id: &str, words: &[(&str, &str)]) -> Sentence {
        let mut tokens = Vec::new();
        let mut text = String::new();
        for (form, pos) in words {
            if !text.is_empty() {
                text.push(' ');
            }
            let start = text.len();
            text.push_str(form);
            tokens.push(Token {
                form: form.to_string(),
                lemma: form.to_lowercase(),
                pos: pos.to_string(),
                span: Anchor::new(start, text.len()),
            });
        }
        Sentence {
            id: id.into(),
            text,
            tokens,
        }
    }

    fn at(s: &Sentence, id: &str, pred: &str, tok: usize) -> EdsNode {
        EdsNode::new(id, pred, s.tokens[tok].span)
    }

    #[test]
    fn gold_lines_parse() {
        let t = parse_pheno_gold("s12 tough B find_7 ARG2 copies_2\ns3\tpassive\t-\taccepted_4\tARG2\tpaper_2\n", "g")
            .unwrap();
        assert_eq!(t[0].phenomenon, Phenomenon::Tough);
        assert_eq!(t[0].subtype, Some(Subtype::B));
        assert_eq!(t[0].head, WordRef::new("find", 7));
        assert_eq!(t[0].role, "ARG2");
        assert_eq!(t[0].dep, WordRef::new("copies", 2));
        assert_eq!(t[1].phenomenon, Phenomenon::Passive);
        assert_eq!(t[1].subtype, None);
        assert_eq!(t[1].to_string(), "s3\tpassive\t-\taccepted_4\tARG2\tpaper_2");
    }

    #[test]
    fn gold_errors_name_the_line() {
        let e = parse_pheno_gold("# c\ns1 tough B find_x ARG2 copies_2\n", "g.tsv").unwrap_err();
        assert!(e.to_string().starts_with("g.tsv:2:"), "{e}");
        assert!(parse_pheno_gold("s1 idiom - a_1 ARG1 b_2", "g").is_err());
        assert!(parse_pheno_gold("s1 as - a_0 ARG1 b_2", "g").is_err());
        assert!(parse_pheno_gold("s1 as - a_1 ARG1", "g").is_err());
    }

    #[test]
    fn positions_are_checked_against_sentences() {
        let s = sentence("s1", &[("Kim", "NNP"), ("slept", "VBD")]);
        let ok = parse_pheno_gold("s1 as - slept_2 ARG1 Kim_1", "g").unwrap();
        validate_pheno_gold(&ok, std::slice::from_ref(&s)).unwrap();
        let bad = parse_pheno_gold("s1 as - slept_3 ARG1 Kim_1", "g").unwrap();
        assert!(validate_pheno_gold(&bad, std::slice::from_ref(&s)).is_err());
        let missing = parse_pheno_gold("s9 as - slept_2 ARG1 Kim_1", "g").unwrap();
        assert!(validate_pheno_gold(&missing, &[s]).is_err());
    }

    #[test]
    fn single_node_graph_projects_to_nothing() {
        let s = sentence("s", &[("Rain", "NN")]);
        let g = EdsGraph::new(vec![at(&s, "x1", "_rain_n_1", 0)], vec![], None).unwrap();
        assert!(extract_bilexical(&g, &s).is_empty());
    }

    #[test]
    fn compound_projects_head_to_first_name() {
        let s = sentence("s", &[("West", "NNP"), ("Germany", "NNP")]);
        let g = EdsGraph::new(
            vec![
                at(&s, "x1", "named", 0).with_carg("West"),
                at(&s, "x2", "named", 1).with_carg("Germany"),
                EdsNode::new("e3", "compound", Anchor::new(0, 12)),
            ],
            vec![EdsEdge::new("e3", "x2", "ARG1"), EdsEdge::new("e3", "x1", "ARG2")],
            None,
        )
        .unwrap();
        let b = extract_bilexical(&g, &s);
        assert!(b.contains(&(2, "compound".into(), 1)));
        assert!(b.contains(&(1, "ARG1".into(), 2)));
    }

    #[test]
    fn role_map_accepts_alternatives_and_reversals() {
        let mut triples = BTreeSet::new();
        triples.insert((3, "ARG1".to_string(), 2));
        let map = RoleMap::from_toml("[roles]\nMOD = [\"~ARG1\"]\nX = [\"ARG1\"]\n").unwrap();
        assert!(map.matches(&triples, 2, "MOD", 3));
        assert!(!map.matches(&triples, 3, "MOD", 2));
        assert!(map.matches(&triples, 3, "X", 2));
        assert!(map.matches(&triples, 3, "ARG1", 2));
        assert!(RoleMap::from_toml("[other]\n").is_err());
    }
}
