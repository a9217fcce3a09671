//! Stage 1: per-token concept-set tagging.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::align::{align_nodes, compose_tags, ConceptTag, TagVocabulary};
use crate::config::TrainConfig;
use crate::corpus::{Instance, Sentence};
use crate::encoder::{ContextVectors, Encoder, EncoderConfig};
use crate::error::{Error, Result};
use crate::metrics::Prf;
use crate::nn::{softmax_row, ParamId, ParamStore, Tape, Var};
use crate::train::{fit, EpochLog};

/// Parameter layout of the tagger; values live in a [`ParamStore`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggerNet {
    pub encoder: Encoder,
    pub vocab: TagVocabulary,
    /// `|ST| × 2h`
    pub out_w: ParamId,
    /// `1 × |ST|`
    pub out_b: ParamId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggerModel {
    pub net: TaggerNet,
    pub store: ParamStore,
}

impl TaggerNet {
    pub fn new<R: rand::Rng>(
        store: &mut ParamStore,
        config: &EncoderConfig,
        sentences: &[Sentence],
        vocab: TagVocabulary,
        rng: &mut R,
    ) -> Self {
        let encoder = Encoder::new(store, "tagger", config, sentences, rng);
        let out_w = store.uniform("tagger.out", vocab.len(), encoder.output_dim(), rng);
        let out_b = store.zeros("tagger.out.b", 1, vocab.len());
        TaggerNet {
            encoder,
            vocab,
            out_w,
            out_b,
        }
    }

    /// Unnormalized tag scores, `m × |ST|`.
    pub fn logits(&self, tape: &mut Tape, sentence: &Sentence, ctx: Option<&ContextVectors>) -> Result<Var> {
        let r = self.encoder.encode(tape, sentence, ctx.and_then(|c| c.get(&sentence.id)))?;
        let w = tape.param(self.out_w);
        let b = tape.param(self.out_b);
        let s = tape.matmul_t(r, w);
        Ok(tape.add_row(s, b))
    }
}

impl TaggerModel {
    /// Per-token softmax distributions over the tag vocabulary.
    pub fn scores(&self, sentence: &Sentence, ctx: Option<&ContextVectors>) -> Result<Vec<Vec<f64>>> {
        let mut tape = Tape::new(&self.store);
        let logits = self.net.logits(&mut tape, sentence, ctx)?;
        Ok((0..sentence.len()).map(|i| softmax_row(tape.row(logits, i))).collect())
    }

    pub fn predict_ids(&self, sentence: &Sentence, ctx: Option<&ContextVectors>) -> Result<Vec<usize>> {
        let mut tape = Tape::new(&self.store);
        let logits = self.net.logits(&mut tape, sentence, ctx)?;
        Ok((0..sentence.len()).map(|i| argmax(tape.row(logits, i))).collect())
    }

    pub fn vocab(&self) -> &TagVocabulary {
        &self.net.vocab
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Independent per-token argmax tags.
pub fn predict_tags(sentence: &Sentence, model: &TaggerModel, ctx: Option<&ContextVectors>) -> Result<Vec<ConceptTag>> {
    Ok(model
        .predict_ids(sentence, ctx)?
        .into_iter()
        .map(|id| model.vocab().tag(id))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TagMetrics {
    pub tokens: usize,
    pub correct_tags: usize,
    pub tag_accuracy: f64,
    /// Over `(token, predicate)` pairs; empty tags contribute nothing.
    pub concept: Prf,
}

/// Tag accuracy (whole tags, the empty tag included) and concept P/R/F
/// (decomposed tag parts, empty tags ignored).
pub fn tag_metrics(gold: &[Vec<ConceptTag>], pred: &[Vec<ConceptTag>]) -> Result<TagMetrics> {
    if gold.len() != pred.len() {
        return Err(Error::Shape(format!("{} gold sentences but {} predicted", gold.len(), pred.len())));
    }
    let mut tokens = 0;
    let mut correct = 0;
    let (mut matched, mut predicted, mut expected) = (0, 0, 0);
    for (s, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(Error::Shape(format!(
                "sentence {}: {} gold tags but {} predicted",
                s + 1,
                g.len(),
                p.len()
            )));
        }
        for (gt, pt) in g.iter().zip(p) {
            tokens += 1;
            if gt == pt {
                correct += 1;
            }
            let mut counts: BTreeMap<&str, isize> = BTreeMap::new();
            for part in gt.parts() {
                *counts.entry(part).or_insert(0) += 1;
            }
            for part in pt.parts() {
                if let Some(c) = counts.get_mut(part.as_str()) {
                    if *c > 0 {
                        *c -= 1;
                        matched += 1;
                    }
                }
            }
            predicted += pt.parts().len();
            expected += gt.parts().len();
        }
    }
    Ok(TagMetrics {
        tokens,
        correct_tags: correct,
        tag_accuracy: if tokens == 0 { 1.0 } else { correct as f64 / tokens as f64 },
        concept: Prf::from_counts(matched, predicted, expected),
    })
}

/// Gold tags of every instance whose nodes all align; the rest are skipped
/// with a warning.
pub fn gold_tags(instances: &[Instance]) -> Vec<(usize, Vec<ConceptTag>)> {
    instances
        .iter()
        .enumerate()
        .filter_map(|(i, inst)| match align_nodes(inst) {
            Ok(a) => Some((i, compose_tags(inst, &a))),
            Err(e) => {
                log::warn!("skipping {}: {}", inst.id(), e);
                None
            }
        })
        .collect()
}

fn evaluate(
    model: &TaggerModel,
    instances: &[Instance],
    gold: &[(usize, Vec<ConceptTag>)],
    ctx: Option<&ContextVectors>,
) -> Result<TagMetrics> {
    let mut g = Vec::with_capacity(gold.len());
    let mut p = Vec::with_capacity(gold.len());
    for (i, tags) in gold {
        g.push(tags.clone());
        p.push(predict_tags(&instances[*i].sentence, model, ctx)?);
    }
    tag_metrics(&g, &p)
}

/// Train the tagger with per-token cross-entropy; returns the parameters of
/// the epoch with the best dev concept F (training data when `dev` is empty).
pub fn train_tagger(
    train: &[Instance],
    dev: &[Instance],
    config: &TrainConfig,
    ctx: Option<&ContextVectors>,
    progress: impl FnMut(&EpochLog),
) -> Result<(TaggerModel, Vec<EpochLog>)> {
    config.validate()?;
    let train_gold = gold_tags(train);
    if train_gold.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let vocab = TagVocabulary::build(train_gold.iter().map(|(_, t)| t.as_slice()), config.min_tag_count);
    let targets: Vec<Vec<usize>> = train_gold
        .iter()
        .map(|(_, tags)| tags.iter().map(|t| vocab.id_or_empty(t)).collect())
        .collect();
    let sentences: Vec<Sentence> = train_gold.iter().map(|(i, _)| train[*i].sentence.clone()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut store = ParamStore::new();
    let net = TaggerNet::new(&mut store, &config.encoder, &sentences, vocab, &mut rng);
    let (dev_set, dev_gold) = if dev.is_empty() {
        (train, train_gold.clone())
    } else {
        (dev, gold_tags(dev))
    };

    let logs = fit(
        "tagger",
        &mut store,
        sentences.len(),
        config,
        &mut rng,
        |tape, i| {
            let logits = net.logits(tape, &sentences[i], ctx)?;
            Ok(Some(tape.softmax_xent(logits, &targets[i])))
        },
        |store| {
            let model = TaggerModel {
                net: net.clone(),
                store: store.clone(),
            };
            Ok(evaluate(&model, dev_set, &dev_gold, ctx)?.concept.f)
        },
        progress,
    )?;
    Ok((TaggerModel { net, store }, logs))
}

/// Metrics of a trained tagger against the gold graphs of `instances`.
pub fn evaluate_tagger(model: &TaggerModel, instances: &[Instance], ctx: Option<&ContextVectors>) -> Result<TagMetrics> {
    evaluate(model, instances, &gold_tags(instances), ctx)
}
