//! Token embeddings and the bidirectional recurrent sentence encoder.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::nn::{BiLstm, ParamId, ParamStore, Tape, Var};

pub const UNKNOWN: &str = "<unk>";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub word_dim: usize,
    pub char_dim: usize,
    pub char_hidden: usize,
    pub pos_dim: usize,
    /// Width of one external context-vector layer; 0 disables the block.
    pub ctx_dim: usize,
    pub ctx_layers: usize,
    pub hidden: usize,
    pub layers: usize,
    /// Words seen at most this many times in training go through the
    /// character composer.
    pub min_word_count: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            word_dim: 100,
            char_dim: 32,
            char_hidden: 32,
            pos_dim: 16,
            ctx_dim: 64,
            ctx_layers: 3,
            hidden: 100,
            layers: 2,
            min_word_count: 3,
        }
    }
}

impl EncoderConfig {
    pub fn input_dim(&self) -> usize {
        self.word_dim + self.ctx_dim + self.pos_dim
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("word_dim", self.word_dim),
            ("char_dim", self.char_dim),
            ("char_hidden", self.char_hidden),
            ("pos_dim", self.pos_dim),
            ("hidden", self.hidden),
            ("layers", self.layers),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if self.ctx_dim > 0 && self.ctx_layers == 0 {
            return Err(Error::InvalidArgument("ctx_layers must be positive when ctx_dim is set".into()));
        }
        Ok(())
    }
}

/// String inventory with an unknown entry at id 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocab {
    fn from(items: Vec<String>) -> Self {
        let index = items.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Vocab { items, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.items
    }
}

impl Vocab {
    /// Unknown entry first, then `items` sorted and deduplicated.
    pub fn build<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut list: Vec<String> = items.into_iter().map(Into::into).filter(|s| s != UNKNOWN).collect();
        list.sort();
        list.dedup();
        let mut all = vec![UNKNOWN.to_string()];
        all.extend(list);
        Vocab::from(all)
    }

    pub fn id(&self, item: &str) -> usize {
        self.index.get(item).copied().unwrap_or(0)
    }

    pub fn get(&self, item: &str) -> Option<usize> {
        self.index.get(item).copied()
    }

    pub fn item(&self, id: usize) -> &str {
        &self.items[id]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

fn word_key(form: &str) -> String {
    form.to_lowercase()
}

/// Word, character and POS tables plus the character composer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTables {
    pub words: Vocab,
    pub chars: Vocab,
    pub pos: Vocab,
    pub word_table: ParamId,
    pub char_table: ParamId,
    pub pos_table: ParamId,
    pub char_rnn: BiLstm,
    pub char_proj: ParamId,
    pub char_proj_bias: ParamId,
    /// Unnormalized layer-mixing logits, `1 × ctx_layers`.
    pub ctx_mix: Option<ParamId>,
    pub word_dim: usize,
    pub ctx_dim: usize,
    pub ctx_layers: usize,
}

impl EmbeddingTables {
    /// Frequent words (seen more than `min_word_count` times) get their own
    /// row; everything else goes through the character composer.
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        config: &EncoderConfig,
        sentences: &[Sentence],
        rng: &mut R,
    ) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut chars = Vec::new();
        let mut tags = Vec::new();
        for s in sentences {
            for t in &s.tokens {
                *counts.entry(word_key(&t.form)).or_insert(0) += 1;
                chars.extend(t.form.chars().map(String::from));
                tags.push(t.pos.clone());
            }
        }
        let words = Vocab::build(
            counts
                .into_iter()
                .filter(|(_, c)| *c > config.min_word_count)
                .map(|(w, _)| w),
        );
        let chars = Vocab::build(chars);
        let pos = Vocab::build(tags);
        let word_table = store.uniform(format!("{name}.word"), words.len(), config.word_dim, rng);
        let char_table = store.uniform(format!("{name}.char"), chars.len(), config.char_dim, rng);
        let pos_table = store.uniform(format!("{name}.pos"), pos.len(), config.pos_dim, rng);
        let char_rnn = BiLstm::new(store, &format!("{name}.charrnn"), config.char_dim, config.char_hidden, 1, rng);
        let char_proj = store.uniform(format!("{name}.charproj"), config.word_dim, 2 * config.char_hidden, rng);
        let char_proj_bias = store.zeros(format!("{name}.charproj.b"), 1, config.word_dim);
        let ctx_mix = (config.ctx_dim > 0).then(|| store.zeros(format!("{name}.ctxmix"), 1, config.ctx_layers));
        EmbeddingTables {
            words,
            chars,
            pos,
            word_table,
            char_table,
            pos_table,
            char_rnn,
            char_proj,
            char_proj_bias,
            ctx_mix,
            word_dim: config.word_dim,
            ctx_dim: config.ctx_dim,
            ctx_layers: config.ctx_layers,
        }
    }

    pub fn is_frequent(&self, form: &str) -> bool {
        self.words.get(&word_key(form)).is_some()
    }

    /// Character-composed vector of one word, `1 × word_dim`.
    pub fn compose_chars(&self, tape: &mut Tape, form: &str) -> Var {
        let mut ids: Vec<usize> = form.chars().map(|c| self.chars.id(c.encode_utf8(&mut [0; 4]))).collect();
        if ids.is_empty() {
            ids.push(0);
        }
        let xs = tape.gather(self.char_table, &ids);
        let states = self.char_rnn.final_states(tape, xs);
        let proj = tape.param(self.char_proj);
        let bias = tape.param(self.char_proj_bias);
        let out = tape.matmul_t(states, proj);
        tape.add_row(out, bias)
    }

    /// Overwrite rows of known words from a `word v1 v2 …` text file.
    /// Returns how many rows were replaced.
    pub fn load_pretrained(&self, store: &mut ParamStore, path: &Path) -> Result<usize> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut replaced = 0;
        for (lineno, line) in content.lines().enumerate() {
            let mut cols = line.split_whitespace();
            let Some(word) = cols.next() else { continue };
            let values: Vec<f64> = cols
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Format {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    message: "non-numeric embedding value".into(),
                })?;
            if values.len() != self.word_dim {
                return Err(Error::Format {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    message: format!("expected {} values, found {}", self.word_dim, values.len()),
                });
            }
            if let Some(id) = self.words.get(&word_key(word)) {
                if id != 0 {
                    store.get_mut(self.word_table).row_mut(id).copy_from_slice(&values);
                    replaced += 1;
                }
            }
        }
        Ok(replaced)
    }
}

/// Externally computed per-token vectors for one sentence: one row per
/// token, each row the concatenation of `layers` blocks of width `dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct SentenceVectors {
    pub layers: usize,
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContextVectors {
    pub sentences: BTreeMap<String, SentenceVectors>,
}

impl ContextVectors {
    /// Blocks of `#id <sid>` followed by one `layer0 | layer1 | …` line per
    /// token.
    pub fn parse(content: &str, origin: &str) -> Result<Self> {
        let bad = |line: usize, message: String| Error::Format {
            path: origin.to_string(),
            line,
            message,
        };
        let mut out = ContextVectors::default();
        let mut current: Option<(String, SentenceVectors)> = None;
        let mut shape: Option<(usize, usize)> = None;
        for (i, line) in content.lines().enumerate() {
            let lineno = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(id) = line.strip_prefix("#id") {
                if let Some((sid, vecs)) = current.take() {
                    out.sentences.insert(sid, vecs);
                }
                let id = id.trim();
                if id.is_empty() {
                    return Err(bad(lineno, "missing sentence id".into()));
                }
                if out.sentences.contains_key(id) {
                    return Err(bad(lineno, format!("duplicate sentence id {id}")));
                }
                current = Some((
                    id.to_string(),
                    SentenceVectors {
                        layers: 0,
                        dim: 0,
                        rows: Vec::new(),
                    },
                ));
                continue;
            }
            let Some((_, vecs)) = current.as_mut() else {
                return Err(bad(lineno, "vector line before any #id".into()));
            };
            let mut row = Vec::new();
            let mut layers = 0;
            let mut dim = None;
            for block in line.split('|') {
                let vals: Vec<f64> = block
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad(lineno, "non-numeric value".into()))?;
                if *dim.get_or_insert(vals.len()) != vals.len() || vals.is_empty() {
                    return Err(bad(lineno, "layers differ in width".into()));
                }
                row.extend(vals);
                layers += 1;
            }
            let dim = dim.unwrap_or(0);
            match shape {
                None => shape = Some((layers, dim)),
                Some(s) if s != (layers, dim) => {
                    return Err(bad(lineno, format!("expected {} layers of width {}", s.0, s.1)));
                }
                _ => {}
            }
            vecs.layers = layers;
            vecs.dim = dim;
            vecs.rows.push(row);
        }
        if let Some((sid, vecs)) = current {
            out.sentences.insert(sid, vecs);
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ContextVectors::parse(&content, &path.display().to_string())
    }

    pub fn get(&self, id: &str) -> Option<&SentenceVectors> {
        self.sentences.get(id)
    }
}

/// `a_i = w_i ⊕ e_i ⊕ t_i` for every token, `m × input_dim`.
pub fn embed_tokens(
    tape: &mut Tape,
    sentence: &Sentence,
    tables: &EmbeddingTables,
    ctx: Option<&SentenceVectors>,
) -> Result<Var> {
    let m = sentence.len();
    let mut word_rows = Vec::with_capacity(m);
    for t in &sentence.tokens {
        let w = match tables.words.get(&word_key(&t.form)) {
            Some(id) if id != 0 => tape.gather(tables.word_table, &[id]),
            _ => tables.compose_chars(tape, &t.form),
        };
        word_rows.push(w);
    }
    let words = tape.concat_rows(&word_rows);
    let pos_ids: Vec<usize> = sentence.tokens.iter().map(|t| tables.pos.id(&t.pos)).collect();
    let tags = tape.gather(tables.pos_table, &pos_ids);

    let mut parts = vec![words];
    if let Some(mix) = tables.ctx_mix {
        let block = match ctx {
            Some(v) => {
                if v.rows.len() != m {
                    return Err(Error::Shape(format!(
                        "sentence {} has {} tokens but {} context rows",
                        sentence.id,
                        m,
                        v.rows.len()
                    )));
                }
                if v.layers != tables.ctx_layers || v.dim != tables.ctx_dim {
                    return Err(Error::Shape(format!(
                        "context vectors for {} have {} layers of width {}, model expects {} of width {}",
                        sentence.id, v.layers, v.dim, tables.ctx_layers, tables.ctx_dim
                    )));
                }
                let layers: Vec<Var> = (0..v.layers)
                    .map(|l| {
                        let data = v
                            .rows
                            .iter()
                            .flat_map(|r| r[l * v.dim..(l + 1) * v.dim].iter().copied())
                            .collect();
                        tape.constant(m, v.dim, data)
                    })
                    .collect();
                let logits = tape.param(mix);
                let weights = tape.softmax(logits);
                tape.mix_layers(weights, &layers)
            }
            None => tape.zeros(m, tables.ctx_dim),
        };
        parts.push(block);
    }
    parts.push(tags);
    Ok(tape.concat_cols(&parts))
}

/// Contextual vectors `r_1:r_m`, `m × 2h`.
pub fn encode_sequence(tape: &mut Tape, a: Var, rnn: &BiLstm) -> Var {
    rnn.run(tape, a)
}

/// Embedding tables and recurrent encoder for one pipeline stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub tables: EmbeddingTables,
    pub rnn: BiLstm,
}

impl Encoder {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        config: &EncoderConfig,
        sentences: &[Sentence],
        rng: &mut R,
    ) -> Self {
        let tables = EmbeddingTables::new(store, name, config, sentences, rng);
        let rnn = BiLstm::new(
            store,
            &format!("{name}.rnn"),
            config.input_dim(),
            config.hidden,
            config.layers,
            rng,
        );
        Encoder { tables, rnn }
    }

    pub fn output_dim(&self) -> usize {
        self.rnn.output_dim()
    }

    pub fn encode(&self, tape: &mut Tape, sentence: &Sentence, ctx: Option<&SentenceVectors>) -> Result<Var> {
        let a = embed_tokens(tape, sentence, &self.tables, ctx)?;
        Ok(encode_sequence(tape, a, &self.rnn))
    }
}
