//! Gradient checks of each network component; every function returns the
//! worst relative error over the sampled entries for one seed.

use edsparse::align::{ConceptTag, TagVocabulary};
use edsparse::arcs::{ArcNet, ConceptNode};
use edsparse::corpus::{load_sentences, Sentence};
use edsparse::encoder::{EmbeddingTables, Encoder, EncoderConfig, SentenceVectors, Vocab};
use edsparse::nn::gradcheck::check;
use edsparse::nn::{ParamStore, Tape, Var};
use edsparse::tagger::TaggerNet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{data, small_config};

pub const H: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
pub const SEEDS: u64 = 10;
const PER_PARAM: usize = 6;

pub type Check = fn(u64) -> f64;

pub const COMPONENTS: [(&str, Check); 5] = [
    ("character composer", character_composer),
    ("recurrent encoder", recurrent_encoder),
    ("tagger softmax", tagger_softmax),
    ("arc MLP", arc_mlp),
    ("label MLP", label_mlp),
];

fn config() -> EncoderConfig {
    EncoderConfig {
        word_dim: 6,
        char_dim: 4,
        char_hidden: 3,
        pos_dim: 3,
        ctx_dim: 2,
        ctx_layers: 2,
        hidden: 4,
        layers: 2,
        min_word_count: 1,
    }
}

fn sentences() -> Vec<Sentence> {
    let mut all = load_sentences(&data("synthetic/sentences.conll")).unwrap();
    all.sort_by_key(|s| s.len());
    all.truncate(3);
    all
}

fn context<R: Rng>(rng: &mut R, s: &Sentence) -> SentenceVectors {
    let c = config();
    SentenceVectors {
        layers: c.ctx_layers,
        dim: c.ctx_dim,
        rows: (0..s.len())
            .map(|_| (0..c.ctx_layers * c.ctx_dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect(),
    }
}

/// Random linear read-out of a matrix, so every entry gets a distinct
/// gradient.
fn readout(tape: &mut Tape, v: Var, weights: &[f64]) -> Var {
    let (r, c) = tape.shape(v);
    tape.weighted_sum(v, weights[..r * c].to_vec())
}

fn weights<R: Rng>(rng: &mut R) -> Vec<f64> {
    (0..4096).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn character_composer(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let tables = EmbeddingTables::new(&mut store, "t", &config(), &sentences(), &mut rng);
    let w = weights(&mut rng);
    // Character table, composer LSTM and projection.
    let ids: Vec<_> = store.iter().filter(|(_, p)| p.name.starts_with("t.char")).map(|(id, _)| id).collect();
    assert_eq!(ids.len(), 9);
    let report = check(&mut store, &ids, H, PER_PARAM, &mut rng, |t| {
        let a = tables.compose_chars(t, "Abrams");
        let b = tables.compose_chars(t, "chased");
        let both = t.concat_rows(&[a, b]);
        readout(t, both, &w)
    });
    report.max_rel_error
}

pub fn recurrent_encoder(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
    let mut store = ParamStore::new();
    let sents = sentences();
    let encoder = Encoder::new(&mut store, "e", &config(), &sents, &mut rng);
    let ctx = context(&mut rng, &sents[0]);
    let w = weights(&mut rng);
    let ids = store.ids();
    let report = check(&mut store, &ids, H, PER_PARAM, &mut rng, |t| {
        let r = encoder.encode(t, &sents[0], Some(&ctx)).unwrap();
        readout(t, r, &w)
    });
    report.max_rel_error
}

pub fn tagger_softmax(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
    let mut store = ParamStore::new();
    let sents = sentences();
    let tags: Vec<ConceptTag> = ["_*_n_1", "named", "_*_v_1", "udef_q"].iter().map(|t| ConceptTag::new([*t])).collect();
    let vocab = TagVocabulary::build([tags.as_slice()], 1);
    let net = TaggerNet::new(&mut store, &config(), &sents, vocab, &mut rng);
    let gold: Vec<usize> = (0..sents[1].len()).map(|_| rng.gen_range(0..5)).collect();
    let ids = store.ids();
    let report = check(&mut store, &ids, H, PER_PARAM, &mut rng, |t| {
        let logits = net.logits(t, &sents[1], None).unwrap();
        t.softmax_xent(logits, &gold)
    });
    report.max_rel_error
}

fn arc_net<R: Rng>(store: &mut ParamStore, rng: &mut R) -> (ArcNet, Vec<ConceptNode>) {
    let mut train = small_config();
    train.encoder = config();
    train.encoder.ctx_dim = 0;
    train.concept_dim = 3;
    train.mlp_hidden = 5;
    let sents = sentences();
    let concepts = Vocab::build(["_*_n_1", "named", "_*_v_1"]);
    let roles = vec!["ARG1".to_string(), "ARG2".to_string(), "BV".to_string()];
    let net = ArcNet::new(store, &train, &sents, concepts, roles, rng);
    let nodes = (0..4)
        .map(|i| ConceptNode {
            token: i % sents[0].len(),
            concept: ["_*_n_1", "named", "_*_v_1", "unseen"][i].to_string(),
        })
        .collect();
    (net, nodes)
}

/// Arc scores plus the top-node scorer that shares their input.
pub fn arc_mlp(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
    let mut store = ParamStore::new();
    let (net, nodes) = arc_net(&mut store, &mut rng);
    let sents = sentences();
    let w = weights(&mut rng);
    let ids = store.ids();
    let report = check(&mut store, &ids, H, PER_PARAM, &mut rng, |t| {
        let c = net.concept_reprs(t, &sents[0], &nodes, None).unwrap();
        let s = net.arc_scores(t, c);
        let top = net.top_scores(t, c);
        let a = readout(t, s, &w);
        let b = t.softmax_xent(top, &[2]);
        t.add(a, b)
    });
    report.max_rel_error
}

pub fn label_mlp(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
    let mut store = ParamStore::new();
    let (net, nodes) = arc_net(&mut store, &mut rng);
    let sents = sentences();
    let arcs = [(0, 1), (2, 0), (2, 3), (3, 1)];
    let gold: Vec<usize> = arcs.iter().map(|_| rng.gen_range(0..3)).collect();
    let ids = store.ids();
    let report = check(&mut store, &ids, H, PER_PARAM, &mut rng, |t| {
        let c = net.concept_reprs(t, &sents[0], &nodes, None).unwrap();
        let l = net.label_scores(t, c, &arcs);
        t.softmax_xent(l, &gold)
    });
    report.max_rel_error
}
