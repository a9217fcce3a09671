//! Stage 2: concept representations, arc and label scoring, training.

pub mod decode;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use decode::{decode_mscg, graph_score, hamming_delta, hinge, positive_arcs, spanning_tree, Arc, Hinge, ScoreMatrix};

use crate::align::{align_nodes, delexicalize};
use crate::config::TrainConfig;
use crate::corpus::{Instance, Sentence};
use crate::encoder::{ContextVectors, Encoder, Vocab};
use crate::error::{Error, Result};
use crate::graph::EdsGraph;
use crate::metrics::Prf;
use crate::nn::{Activation, ParamId, ParamStore, Tape, Var};
use crate::tagger::argmax;
use crate::train::{fit, EpochLog};

/// A concept to be connected: its aligned token and delexicalized predicate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptNode {
    pub token: usize,
    pub concept: String,
}

/// Two-layer perceptron over a node pair, with the first layer split into
/// the halves acting on the head and on the dependent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairMlp {
    pub w_head: ParamId,
    pub w_dep: ParamId,
    pub bias: ParamId,
    pub out: ParamId,
    /// Present for the label head: one bias per label.
    pub out_bias: Option<ParamId>,
}

impl PairMlp {
    fn new<R: Rng>(store: &mut ParamStore, name: &str, input: usize, hidden: usize, outputs: Option<usize>, rng: &mut R) -> Self {
        // Glorot bounds for the full W1 of shape hidden × 2·input.
        let bound = (6.0 / (hidden + 2 * input) as f64).sqrt();
        let mut half = |suffix: &str, store: &mut ParamStore| {
            let data = (0..hidden * input).map(|_| rng.gen_range(-bound..bound)).collect();
            store.add(format!("{name}.{suffix}"), hidden, input, data)
        };
        let w_head = half("w1.head", store);
        let w_dep = half("w1.dep", store);
        let bias = store.zeros(format!("{name}.b1"), 1, hidden);
        let (out, out_bias) = match outputs {
            None => (store.uniform(format!("{name}.w2"), 1, hidden, rng), None),
            Some(l) => (
                store.uniform(format!("{name}.w2"), l, hidden, rng),
                Some(store.zeros(format!("{name}.b2"), 1, l)),
            ),
        };
        PairMlp {
            w_head,
            w_dep,
            bias,
            out,
            out_bias,
        }
    }

    fn project(&self, tape: &mut Tape, c: Var) -> (Var, Var, Var, Var) {
        let wh = tape.param(self.w_head);
        let wd = tape.param(self.w_dep);
        let head = tape.matmul_t(c, wh);
        let dep = tape.matmul_t(c, wd);
        (head, dep, tape.param(self.bias), tape.param(self.out))
    }
}

/// Parameter layout of stage 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcNet {
    pub encoder: Encoder,
    pub concepts: Vocab,
    pub concept_table: ParamId,
    pub roles: Vec<String>,
    pub arc: PairMlp,
    pub label: PairMlp,
    /// `1 × (2h + d_n)` scorer choosing the top node.
    pub top: ParamId,
    pub activation: Activation,
}

impl ArcNet {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        config: &TrainConfig,
        sentences: &[Sentence],
        concepts: Vocab,
        roles: Vec<String>,
        rng: &mut R,
    ) -> Self {
        let encoder = Encoder::new(store, "arcs", &config.encoder, sentences, rng);
        let concept_table = store.uniform("arcs.concept", concepts.len(), config.concept_dim, rng);
        let width = encoder.output_dim() + config.concept_dim;
        let arc = PairMlp::new(store, "arcs.arc", width, config.mlp_hidden, None, rng);
        let label = PairMlp::new(store, "arcs.label", width, config.mlp_hidden, Some(roles.len()), rng);
        let top = store.uniform("arcs.top", 1, width, rng);
        ArcNet {
            encoder,
            concepts,
            concept_table,
            roles,
            arc,
            label,
            top,
            activation: config.activation,
        }
    }

    /// `c_i = r_i ⊕ n_i` for every node, `n × (2h + d_n)`.
    pub fn concept_reprs(
        &self,
        tape: &mut Tape,
        sentence: &Sentence,
        nodes: &[ConceptNode],
        ctx: Option<&ContextVectors>,
    ) -> Result<Var> {
        let r = self.encoder.encode(tape, sentence, ctx.and_then(|c| c.get(&sentence.id)))?;
        Ok(self.concat_concepts(tape, r, nodes))
    }

    pub fn concat_concepts(&self, tape: &mut Tape, r: Var, nodes: &[ConceptNode]) -> Var {
        let tokens: Vec<usize> = nodes.iter().map(|n| n.token).collect();
        let ids: Vec<usize> = nodes.iter().map(|n| self.concepts.id(&n.concept)).collect();
        let rows = tape.select_rows(r, &tokens);
        let emb = tape.gather(self.concept_table, &ids);
        tape.concat_cols(&[rows, emb])
    }

    /// Unlabeled arc scores `W2 · δ(W1 · (c_p ⊕ c_a) + b)`, `n × n`.
    pub fn arc_scores(&self, tape: &mut Tape, c: Var) -> Var {
        let (head, dep, bias, out) = self.arc.project(tape, c);
        tape.pair_scores(head, dep, bias, out, self.activation)
    }

    /// Per-label scores of the given arcs, `|arcs| × |roles|`.
    pub fn label_scores(&self, tape: &mut Tape, c: Var, arcs: &[Arc]) -> Var {
        let (head, dep, bias, out) = self.label.project(tape, c);
        let out_bias = tape.param(self.label.out_bias.expect("label head has biases"));
        tape.pair_labels(head, dep, bias, out, out_bias, arcs, self.activation)
    }

    /// Top-node scores as a `1 × n` row.
    pub fn top_scores(&self, tape: &mut Tape, c: Var) -> Var {
        let w = tape.param(self.top);
        let col = tape.matmul_t(c, w);
        tape.transpose(col)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcModel {
    pub net: ArcNet,
    pub store: ParamStore,
}

/// Labeled arcs and top chosen for one sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub arcs: Vec<(usize, usize, String)>,
    pub top: Option<usize>,
}

impl ArcModel {
    pub fn score_arcs(&self, sentence: &Sentence, nodes: &[ConceptNode], ctx: Option<&ContextVectors>) -> Result<ScoreMatrix> {
        let mut tape = Tape::new(&self.store);
        let c = self.net.concept_reprs(&mut tape, sentence, nodes, ctx)?;
        let s = self.net.arc_scores(&mut tape, c);
        Ok(to_matrix(&tape, s))
    }

    /// Arg-max label of each arc, lowest label id on ties.
    pub fn label_arcs(
        &self,
        sentence: &Sentence,
        nodes: &[ConceptNode],
        arcs: &[Arc],
        ctx: Option<&ContextVectors>,
    ) -> Result<Vec<String>> {
        if arcs.is_empty() {
            return Ok(Vec::new());
        }
        let mut tape = Tape::new(&self.store);
        let c = self.net.concept_reprs(&mut tape, sentence, nodes, ctx)?;
        let l = self.net.label_scores(&mut tape, c, arcs);
        Ok((0..arcs.len()).map(|j| self.net.roles[argmax(tape.row(l, j))].clone()).collect())
    }

    /// Score, decode, label and pick a top in one forward pass.
    pub fn decode(
        &self,
        sentence: &Sentence,
        nodes: &[ConceptNode],
        connected: bool,
        ctx: Option<&ContextVectors>,
    ) -> Result<Decoded> {
        if nodes.is_empty() {
            return Ok(Decoded {
                arcs: Vec::new(),
                top: None,
            });
        }
        let mut tape = Tape::new(&self.store);
        let c = self.net.concept_reprs(&mut tape, sentence, nodes, ctx)?;
        let s = self.net.arc_scores(&mut tape, c);
        let arcs: Vec<Arc> = decode_mscg(&to_matrix(&tape, s), connected).into_iter().collect();
        let mut labeled = Vec::with_capacity(arcs.len());
        if !arcs.is_empty() {
            let l = self.net.label_scores(&mut tape, c, &arcs);
            for (j, &(p, a)) in arcs.iter().enumerate() {
                labeled.push((p, a, self.net.roles[argmax(tape.row(l, j))].clone()));
            }
        }
        let t = self.net.top_scores(&mut tape, c);
        Ok(Decoded {
            arcs: labeled,
            top: Some(argmax(tape.value(t))),
        })
    }
}

pub fn to_matrix(tape: &Tape, s: Var) -> ScoreMatrix {
    let n = tape.shape(s).0;
    (0..n).map(|p| tape.row(s, p).to_vec()).collect()
}

/// Stage-2 training example built from a gold graph and its alignment.
#[derive(Clone, Debug, PartialEq)]
pub struct GoldStructure {
    pub instance: usize,
    pub nodes: Vec<ConceptNode>,
    pub arcs: BTreeSet<Arc>,
    /// One label per unlabeled arc (the alphabetically first role when a
    /// pair carries several).
    pub labels: BTreeMap<Arc, String>,
    pub top: Option<usize>,
}

pub fn gold_structure(index: usize, instance: &Instance) -> Result<GoldStructure> {
    let alignment = align_nodes(instance)?;
    let nodes = instance
        .graph
        .nodes()
        .iter()
        .zip(&alignment.tokens)
        .map(|(n, &tok)| ConceptNode {
            token: tok,
            concept: delexicalize(&n.predicate, &instance.sentence.tokens[tok].lemma),
        })
        .collect();
    let mut labels: BTreeMap<Arc, String> = BTreeMap::new();
    for (s, t, role) in instance.graph.indexed_edges() {
        let entry = labels.entry((s, t)).or_insert_with(|| role.to_string());
        if role < entry.as_str() {
            *entry = role.to_string();
        }
    }
    Ok(GoldStructure {
        instance: index,
        nodes,
        arcs: labels.keys().copied().collect(),
        labels,
        top: instance.graph.top().and_then(|t| instance.graph.node_index(t)),
    })
}

fn gold_structures(instances: &[Instance]) -> Vec<GoldStructure> {
    instances
        .iter()
        .enumerate()
        .filter_map(|(i, inst)| match gold_structure(i, inst) {
            Ok(g) => Some(g),
            Err(e) => {
                log::warn!("skipping {}: {}", inst.id(), e);
                None
            }
        })
        .collect()
}

/// Loss of one example: structured hinge on unlabeled arcs, cross-entropy on
/// gold labels and on the top node. `None` when every term is zero.
pub fn example_loss(
    net: &ArcNet,
    tape: &mut Tape,
    sentence: &Sentence,
    gold: &GoldStructure,
    config: &TrainConfig,
    ctx: Option<&ContextVectors>,
) -> Result<Option<Var>> {
    if gold.nodes.is_empty() {
        return Ok(None);
    }
    let c = net.concept_reprs(tape, sentence, &gold.nodes, ctx)?;
    let mut terms = Vec::new();
    let s = net.arc_scores(tape, c);
    let h = hinge(&to_matrix(tape, s), &gold.arcs, config.cost);
    if h.loss > 0.0 {
        let scored = tape.weighted_sum(s, h.coeff);
        let delta = tape.constant(1, 1, vec![h.delta]);
        terms.push(tape.add(scored, delta));
    }
    if !gold.arcs.is_empty() {
        let arcs: Vec<Arc> = gold.arcs.iter().copied().collect();
        let targets: Vec<usize> = arcs
            .iter()
            .map(|a| net.roles.binary_search(&gold.labels[a]).unwrap_or(0))
            .collect();
        let l = net.label_scores(tape, c, &arcs);
        terms.push(tape.softmax_xent(l, &targets));
    }
    if let Some(top) = gold.top {
        let t = net.top_scores(tape, c);
        terms.push(tape.softmax_xent(t, &[top]));
    }
    let Some(&first) = terms.first() else { return Ok(None) };
    let mut total = first;
    for &t in &terms[1..] {
        total = tape.add(total, t);
    }
    Ok(Some(total))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DepMetrics {
    pub unlabeled: Prf,
    pub labeled: Prf,
}

impl DepMetrics {
    pub fn add(&self, other: &DepMetrics) -> DepMetrics {
        DepMetrics {
            unlabeled: self.unlabeled.add(&other.unlabeled),
            labeled: self.labeled.add(&other.labeled),
        }
    }

    pub fn empty() -> DepMetrics {
        DepMetrics {
            unlabeled: Prf::from_counts(0, 0, 0),
            labeled: Prf::from_counts(0, 0, 0),
        }
    }
}

/// Precision and recall of `⟨head, dependent, label⟩` tuples. `mapping[i]`
/// is the gold node index corresponding to predicted node `i`, if any; a
/// mapped pair only counts as the same concept when the predicates agree.
pub fn dep_metrics(gold: &EdsGraph, pred: &EdsGraph, mapping: &[Option<usize>]) -> DepMetrics {
    assert_eq!(mapping.len(), pred.node_count(), "mapping covers every predicted node");
    let gold_labeled: BTreeSet<(usize, usize, &str)> = gold.indexed_edges().collect();
    let gold_unlabeled: BTreeSet<Arc> = gold_labeled.iter().map(|&(s, t, _)| (s, t)).collect();
    let pred_labeled: BTreeSet<(usize, usize, &str)> = pred.indexed_edges().collect();
    let pred_unlabeled: BTreeSet<Arc> = pred_labeled.iter().map(|&(s, t, _)| (s, t)).collect();
    let map = |i: usize| mapping[i].filter(|&g| pred.nodes()[i].predicate == gold.nodes()[g].predicate);
    let labeled_hits = pred_labeled
        .iter()
        .filter(|&&(s, t, l)| matches!((map(s), map(t)), (Some(a), Some(b)) if gold_labeled.contains(&(a, b, l))))
        .count();
    let unlabeled_hits = pred_unlabeled
        .iter()
        .filter(|&&(s, t)| matches!((map(s), map(t)), (Some(a), Some(b)) if gold_unlabeled.contains(&(a, b))))
        .count();
    DepMetrics {
        unlabeled: Prf::from_counts(unlabeled_hits, pred_unlabeled.len(), gold_unlabeled.len()),
        labeled: Prf::from_counts(labeled_hits, pred_labeled.len(), gold_labeled.len()),
    }
}

/// Build a graph over gold concepts from decoded arcs, for stage-2 scoring.
pub fn graph_over(gold: &EdsGraph, decoded: &Decoded) -> Result<EdsGraph> {
    let nodes = gold.nodes().to_vec();
    let edges = decoded
        .arcs
        .iter()
        .map(|(p, a, l)| crate::graph::EdsEdge::new(nodes[*p].id.clone(), nodes[*a].id.clone(), l.clone()))
        .collect();
    EdsGraph::new(nodes.clone(), edges, decoded.top.map(|t| nodes[t].id.clone()))
}

/// Labeled and unlabeled scores of stage 2 on gold concepts.
pub fn evaluate_arcs(
    model: &ArcModel,
    instances: &[Instance],
    connected: bool,
    ctx: Option<&ContextVectors>,
) -> Result<DepMetrics> {
    let mut total = DepMetrics::empty();
    for gold in gold_structures(instances) {
        let inst = &instances[gold.instance];
        let decoded = model.decode(&inst.sentence, &gold.nodes, connected, ctx)?;
        let pred = graph_over(&inst.graph, &decoded)?;
        let identity: Vec<Option<usize>> = (0..pred.node_count()).map(Some).collect();
        total = total.add(&dep_metrics(&inst.graph, &pred, &identity));
    }
    Ok(total)
}

/// Train stage 2 on gold concepts and alignments. Connectivity is not
/// enforced inside the loss; dev selection uses labeled F with the decoder
/// configured by `config.connected`.
pub fn train_arcs(
    train: &[Instance],
    dev: &[Instance],
    config: &TrainConfig,
    ctx: Option<&ContextVectors>,
    progress: impl FnMut(&EpochLog),
) -> Result<(ArcModel, Vec<EpochLog>)> {
    config.validate()?;
    let golds = gold_structures(train);
    if golds.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let concepts = Vocab::build(golds.iter().flat_map(|g| g.nodes.iter().map(|n| n.concept.clone())));
    let mut roles: Vec<String> = golds.iter().flat_map(|g| g.labels.values().cloned()).collect();
    roles.sort();
    roles.dedup();
    if roles.is_empty() {
        return Err(Error::Model("training graphs contain no edges".into()));
    }
    let sentences: Vec<Sentence> = golds.iter().map(|g| train[g.instance].sentence.clone()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut store = ParamStore::new();
    let net = ArcNet::new(&mut store, config, &sentences, concepts, roles, &mut rng);
    let dev_set = if dev.is_empty() { train } else { dev };

    let logs = fit(
        "arcs",
        &mut store,
        golds.len(),
        config,
        &mut rng,
        |tape, i| example_loss(&net, tape, &sentences[i], &golds[i], config, ctx),
        |store| {
            let model = ArcModel {
                net: net.clone(),
                store: store.clone(),
            };
            Ok(evaluate_arcs(&model, dev_set, config.connected, ctx)?.labeled.f)
        },
        progress,
    )?;
    Ok((ArcModel { net, store }, logs))
}
