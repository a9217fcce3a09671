//! Generate the small synthetic training corpus used by the overfit tests.
//!
//! Usage: make_synthetic <out-dir> [count] [seed]
//!
//! Writes `sentences.conll` and `graphs.eds`. Sentences come from a handful
//! of templates (transitive, passive, ditransitive, coordinated subjects,
//! compound names, prepositional and temporal modifiers).

use std::path::PathBuf;

use edsparse::corpus::{write_graphs, write_sentences, GraphFormat, Sentence, Token};
use edsparse::graph::{Anchor, EdsEdge, EdsGraph, EdsNode};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NOUNS: &[&str] = &[
    "dog", "cat", "bird", "horse", "farmer", "teacher", "doctor", "child", "student", "painter", "baker", "singer",
    "lawyer", "pilot", "nurse", "driver", "writer", "player", "worker", "officer", "boat", "car", "book", "letter",
    "box", "table", "garden", "house", "river", "market", "school", "museum", "village", "bridge", "tower", "forest",
    "sailor", "miner", "judge", "clerk", "guard", "chef", "poet", "actor", "mayor", "queen", "king", "farm", "lake",
    "hill", "ship", "train", "camera", "window", "door", "wall",
];
const VERBS: &[&str] = &[
    "chase", "watch", "visit", "follow", "push", "help", "call", "praise", "paint", "clean", "move", "carry", "kick",
    "greet", "attack", "admire", "ignore", "notice", "remember", "protect",
];
const DITRANSITIVE: &[&str] = &["hand", "offer", "pass", "show"];
const NAMES: &[&str] = &[
    "Kim", "Sandy", "Lee", "Pat", "Robin", "Alex", "Chris", "Dana", "Jordan", "Morgan", "Taylor", "Casey", "Abrams",
    "Browne", "Devito", "Smith", "Jones", "West", "Germany", "Paris", "Texas", "Berlin", "York", "Hunter",
];
const PREPS: &[&str] = &["in", "near", "behind", "under", "beside", "across"];
const DETS: &[&str] = &["the", "a", "some", "no"];

fn past(lemma: &str) -> String {
    if lemma.ends_with('e') {
        format!("{lemma}d")
    } else if let Some(stem) = lemma.strip_suffix('y') {
        format!("{stem}ied")
    } else {
        format!("{lemma}ed")
    }
}

struct Builder {
    tokens: Vec<(String, String, String)>,
    nodes: Vec<(String, String, usize, usize, Option<String>)>,
    edges: Vec<(String, String, String)>,
    next: usize,
}

impl Builder {
    fn new() -> Self {
        Builder {
            tokens: Vec::new(),
            nodes: Vec::new(),
            edges: Vec::new(),
            next: 0,
        }
    }

    fn token(&mut self, form: &str, lemma: &str, pos: &str) -> usize {
        self.tokens.push((form.into(), lemma.into(), pos.into()));
        self.tokens.len() - 1
    }

    /// Node anchored over tokens `first..=last`.
    fn node(&mut self, kind: char, predicate: &str, first: usize, last: usize) -> String {
        self.next += 1;
        let id = format!("{kind}{}", self.next);
        self.nodes.push((id.clone(), predicate.into(), first, last, None));
        id
    }

    fn edge(&mut self, source: &str, role: &str, target: &str) {
        self.edges.push((source.into(), target.into(), role.into()));
    }

    /// Noun phrase; returns the id of its head node.
    fn noun_phrase<R: Rng>(&mut self, rng: &mut R, allow_names: bool) -> String {
        if allow_names && rng.gen_bool(0.35) {
            if rng.gen_bool(0.3) {
                let (a, b) = loop {
                    let a = *NAMES.choose(rng).unwrap();
                    let b = *NAMES.choose(rng).unwrap();
                    if a != b {
                        break (a, b);
                    }
                };
                let ta = self.token(a, a, "NNP");
                let tb = self.token(b, b, "NNP");
                let na = self.named(a, ta);
                let qa = self.node('_', "proper_q", ta, ta);
                self.edge(&qa, "BV", &na);
                let nb = self.named(b, tb);
                let qb = self.node('_', "proper_q", ta, tb);
                self.edge(&qb, "BV", &nb);
                let c = self.node('e', "compound", ta, tb);
                self.edge(&c, "ARG1", &nb);
                self.edge(&c, "ARG2", &na);
                return nb;
            }
            let name = *NAMES.choose(rng).unwrap();
            let t = self.token(name, name, "NNP");
            let n = self.named(name, t);
            let q = self.node('_', "proper_q", t, t);
            self.edge(&q, "BV", &n);
            return n;
        }
        let det = *DETS.choose(rng).unwrap();
        let noun = *NOUNS.choose(rng).unwrap();
        let td = self.token(det, det, "DT");
        let tn = self.token(noun, noun, "NN");
        let q = self.node('_', &format!("_{det}_q"), td, td);
        let n = self.node('x', &format!("_{noun}_n_1"), tn, tn);
        self.edge(&q, "BV", &n);
        n
    }

    fn named(&mut self, name: &str, t: usize) -> String {
        let id = self.node('x', "named", t, t);
        self.nodes.last_mut().unwrap().4 = Some(name.to_string());
        id
    }

    fn subject<R: Rng>(&mut self, rng: &mut R) -> String {
        if rng.gen_bool(0.2) {
            let left = self.noun_phrase(rng, true);
            let t = self.token("and", "and", "CC");
            let c = self.node('x', "_and_c", t, t);
            let right = self.noun_phrase(rng, true);
            self.edge(&c, "L-INDEX", &left);
            self.edge(&c, "R-INDEX", &right);
            return c;
        }
        self.noun_phrase(rng, true)
    }

    fn verb(&mut self, lemma: &str) -> (usize, String) {
        let t = self.token(&past(lemma), lemma, "VBD");
        let v = self.node('e', &format!("_{lemma}_v_1"), t, t);
        (t, v)
    }

    fn modifiers<R: Rng>(&mut self, rng: &mut R, verb: &str) {
        if rng.gen_bool(0.35) {
            let p = *PREPS.choose(rng).unwrap();
            let t = self.token(p, p, "IN");
            let pn = self.node('e', &format!("_{p}_p"), t, t);
            let obj = self.noun_phrase(rng, false);
            self.edge(&pn, "ARG1", verb);
            self.edge(&pn, "ARG2", &obj);
        }
        if rng.gen_bool(0.2) {
            let te = self.token("every", "every", "DT");
            let ty = self.token("year", "year", "NN");
            let q = self.node('_', "_every_q", te, te);
            let y = self.node('x', "_year_n_1", ty, ty);
            let l = self.node('e', "loc_nonsp", te, ty);
            self.edge(&q, "BV", &y);
            self.edge(&l, "ARG1", verb);
            self.edge(&l, "ARG2", &y);
        }
    }

    fn finish(self, id: &str, top: &str) -> (Sentence, EdsGraph) {
        let mut text = String::new();
        let mut tokens = Vec::new();
        for (form, lemma, pos) in &self.tokens {
            if !text.is_empty() {
                text.push(' ');
            }
            let start = text.chars().count();
            text.push_str(form);
            tokens.push(Token {
                form: form.clone(),
                lemma: lemma.clone(),
                pos: pos.clone(),
                span: Anchor::new(start, start + form.chars().count()),
            });
        }
        let nodes = self
            .nodes
            .iter()
            .map(|(nid, pred, first, last, carg)| {
                let mut n = EdsNode::new(nid, pred, Anchor::new(tokens[*first].span.start, tokens[*last].span.end));
                n.carg = carg.clone();
                n
            })
            .collect();
        let edges = self.edges.iter().map(|(s, t, r)| EdsEdge::new(s, t, r)).collect();
        let graph = EdsGraph::new(nodes, edges, Some(top.to_string())).expect("generated graph is valid");
        (
            Sentence {
                id: id.to_string(),
                text,
                tokens,
            },
            graph,
        )
    }
}

fn sentence<R: Rng>(rng: &mut R, id: &str) -> (Sentence, EdsGraph) {
    let mut b = Builder::new();
    let kind = rng.gen_range(0..10);
    let verb = match kind {
        // passive: PATIENT was V-ed by AGENT
        0..=2 => {
            let patient = b.noun_phrase(rng, true);
            b.token("was", "be", "VBD");
            let lemma = *VERBS.choose(rng).unwrap();
            let (t, v) = b.verb(lemma);
            let pd = b.node('e', "parg_d", t, t);
            b.edge(&pd, "ARG1", &v);
            b.edge(&pd, "ARG2", &patient);
            b.token("by", "by", "IN");
            let agent = b.noun_phrase(rng, true);
            b.edge(&v, "ARG1", &agent);
            b.edge(&v, "ARG2", &patient);
            v
        }
        // ditransitive: AGENT V-ed RECIPIENT THEME
        3..=4 => {
            let agent = b.subject(rng);
            let lemma = *DITRANSITIVE.choose(rng).unwrap();
            let (_, v) = b.verb(lemma);
            let recipient = b.noun_phrase(rng, true);
            let theme = b.noun_phrase(rng, false);
            b.edge(&v, "ARG1", &agent);
            b.edge(&v, "ARG2", &theme);
            b.edge(&v, "ARG3", &recipient);
            v
        }
        _ => {
            let agent = b.subject(rng);
            let lemma = *VERBS.choose(rng).unwrap();
            let (_, v) = b.verb(lemma);
            let patient = b.noun_phrase(rng, true);
            b.edge(&v, "ARG1", &agent);
            b.edge(&v, "ARG2", &patient);
            v
        }
    };
    b.modifiers(rng, &verb);
    b.token(".", ".", ".");
    b.finish(id, &verb)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let out = PathBuf::from(args.get(1).expect("usage: make_synthetic <out-dir> [count] [seed]"));
    let count: usize = args.get(2).map_or(64, |s| s.parse().expect("count"));
    let seed: u64 = args.get(3).map_or(2024, |s| s.parse().expect("seed"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sentences = Vec::new();
    let mut graphs = Vec::new();
    for i in 0..count {
        let id = format!("syn{:03}", i + 1);
        let (s, g) = sentence(&mut rng, &id);
        sentences.push(s);
        graphs.push((id, g));
    }
    std::fs::create_dir_all(&out).expect("create output directory");
    std::fs::write(out.join("sentences.conll"), write_sentences(&sentences)).expect("write sentences");
    let text = write_graphs(graphs.iter().map(|(id, g)| (id.as_str(), g)), GraphFormat::Eds);
    std::fs::write(out.join("graphs.eds"), text).expect("write graphs");
}
