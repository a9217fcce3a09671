mod common;

use std::collections::BTreeMap;

use common::{corrupted_report_mismatch, data, small_config};
use edsparse::corpus::{downsample, load_corpus, load_graphs, load_sentences, Instance, Sentence};
use edsparse::graph::EdsGraph;
use edsparse::pheno::{
    curve_csv, curve_metrics, learning_curve, load_pheno_gold, pheno_score, report_csv, Phenomenon, PhenoOptions,
    PhenoReport, PhenoTriple, RoleMap, SystemGraphs, REPORT_HEADER,
};
use edsparse::pipeline::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Fixture {
    sentences: Vec<Sentence>,
    gold: Vec<PhenoTriple>,
    graphs: Vec<(String, EdsGraph)>,
    options: PhenoOptions,
}

fn fixture() -> Fixture {
    let sentences = load_sentences(&data("pheno/sentences.conll")).unwrap();
    let gold = load_pheno_gold(&data("pheno/gold.pheno"), &sentences).unwrap();
    Fixture {
        gold,
        graphs: load_graphs(&data("pheno/gold.eds")).unwrap(),
        options: PhenoOptions {
            roles: RoleMap::load(&data("pheno/roles.toml")).unwrap(),
            ..PhenoOptions::default()
        },
        sentences,
    }
}

fn score(f: &Fixture, graphs: &[(String, EdsGraph)]) -> PhenoReport {
    pheno_score(&f.gold, &f.sentences, &SystemGraphs { name: "sys", graphs }, None, &f.options)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

#[test]
fn every_family_is_annotated() {
    let f = fixture();
    let families: std::collections::BTreeSet<Phenomenon> = f.gold.iter().map(|t| t.phenomenon).collect();
    assert_eq!(families.len(), Phenomenon::ALL.len());
    assert_eq!(f.gold.len(), 35);
}

#[test]
fn gold_graphs_recover_everything() {
    let f = fixture();
    let report = score(&f, &f.graphs);
    for row in &report.rows {
        assert!(close(row.recall, 1.0), "{row:?}");
        if let Some(c) = row.complete_match {
            assert!(close(c, 1.0), "{row:?}");
        }
    }
    for p in Phenomenon::ALL {
        assert!(report.row(p.name(), "-").is_some(), "{}", p.name());
    }
    assert_eq!((report.covered, report.sentences), (16, 16));
}

#[test]
fn modifier_annotations_need_the_role_map() {
    let f = fixture();
    let plain = pheno_score(
        &f.gold,
        &f.sentences,
        &SystemGraphs { name: "sys", graphs: &f.graphs },
        None,
        &PhenoOptions::default(),
    );
    assert!(plain.recall("ned", "A").unwrap() < 1.0);
    assert!(plain.recall("ALL", "-").unwrap() < 1.0);
}

#[test]
fn corrupted_graphs_lose_exactly_the_removed_arcs() {
    let f = fixture();
    let corrupted = load_graphs(&data("pheno/corrupted.eds")).unwrap();
    let report = score(&f, &corrupted);
    assert_eq!(corrupted_report_mismatch(&report), None);
    // Row recalls agree with the per-triple outcomes.
    assert_eq!(report.recovered.iter().filter(|&&r| r).count(), 23);
    for row in &report.rows {
        assert!(close(row.recall, row.recovered as f64 / row.count as f64));
    }
}

#[test]
fn three_of_four_recovered_arcs_give_three_quarters() {
    let f = fixture();
    let base = f.sentences.iter().find(|s| s.id == "s03").unwrap();
    let graph = &f.graphs.iter().find(|(id, _)| id == "s03").unwrap().1;
    let without = graph.without_edge(graph.edges().iter().find(|e| e.role == "ARG3").unwrap());
    let mut sentences = Vec::new();
    let mut graphs = Vec::new();
    let mut gold = Vec::new();
    let template = f.gold.iter().find(|t| t.sentence == "s03" && t.role == "ARG3").unwrap();
    for k in 0..4 {
        let id = format!("d{k}");
        sentences.push(Sentence { id: id.clone(), ..base.clone() });
        graphs.push((id.clone(), if k == 2 { without.clone() } else { graph.clone() }));
        gold.push(PhenoTriple { sentence: id, ..template.clone() });
    }
    let report = pheno_score(&gold, &sentences, &SystemGraphs { name: "x", graphs: &graphs }, None, &f.options);
    assert!(close(report.recall("ditr", "-").unwrap(), 0.75));
    assert!(close(report.recall("ditr", "ARG3").unwrap(), 0.75));
}

#[test]
fn empty_and_missing_graphs() {
    let f = fixture();
    let empty: Vec<(String, EdsGraph)> = f.graphs.iter().map(|(id, _)| (id.clone(), EdsGraph::empty())).collect();
    let report = score(&f, &empty);
    assert!(report.rows.iter().all(|r| r.recall == 0.0));
    assert_eq!(report.covered, 16);

    let half: Vec<(String, EdsGraph)> = f.graphs[..8].to_vec();
    let report = score(&f, &half);
    assert_eq!(report.covered, 8);
    let covered = report.row("ALL[covered]", "-").expect("coverage rows");
    assert!(close(covered.recall, 1.0));
    assert!(report.recall("ALL", "-").unwrap() < 1.0);
}

fn remove_random_edges<R: Rng>(rng: &mut R, graphs: &[(String, EdsGraph)], p: f64) -> Vec<(String, EdsGraph)> {
    graphs
        .iter()
        .map(|(id, g)| {
            let mut out = g.clone();
            for e in g.edges() {
                if rng.gen_bool(p) {
                    out = out.without_edge(e);
                }
            }
            (id.clone(), out)
        })
        .collect()
}

#[test]
fn adding_arcs_never_loses_a_triple() {
    let f = fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let sparse = remove_random_edges(&mut rng, &f.graphs, 0.3);
        let sparser = remove_random_edges(&mut rng, &sparse, 0.3);
        let (a, b) = (score(&f, &sparser), score(&f, &sparse));
        for (x, y) in a.recovered.iter().zip(&b.recovered) {
            assert!(!x || *y);
        }
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert!(ra.recall <= rb.recall + 1e-12);
        }
    }
}

#[test]
fn complete_match_is_bounded_by_every_role() {
    let f = fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..50 {
        let report = score(&f, &remove_random_edges(&mut rng, &f.graphs, 0.25));
        // One verb with one triple per role in each of these families.
        for family in ["ditr", "causemo", "way"] {
            let complete = report.row(family, "-").unwrap().complete_match.unwrap();
            for role in ["ARG1", "ARG2", "ARG3"] {
                assert!(complete <= report.recall(family, role).unwrap() + 1e-12);
            }
        }
    }
}

#[test]
fn csv_layout() {
    let f = fixture();
    let csv = report_csv(&[score(&f, &f.graphs)]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(REPORT_HEADER));
    assert_eq!(lines.next(), Some("sys,comp,-,2,1.000000,"));
    assert!(csv.contains("sys,ditr,-,3,1.000000,1.000000\n"));
    assert!(csv.ends_with("sys,ALL,-,35,1.000000,\n"));
}

#[test]
fn downsampled_subsets_are_nested() {
    let items: Vec<usize> = (0..64).collect();
    let mut previous: Vec<usize> = Vec::new();
    for fraction in [0.1, 0.25, 0.5, 0.75, 1.0] {
        let subset = downsample(&items, fraction, 3).unwrap();
        assert_eq!(subset.len(), (fraction * 64.0_f64).round_ties_even() as usize);
        assert!(previous.iter().all(|i| subset.contains(i)));
        previous = subset;
    }
    assert!(downsample(&items[..10], 0.05, 3).is_err());
}

fn has_arg3(i: &Instance) -> bool {
    i.graph.edges().iter().any(|e| e.role == "ARG3")
}

/// Training corpus in which every ditransitive sentence sits outside the
/// 25% subset.
fn sparse_training_set(config_seed: u64) -> (Vec<Instance>, Vec<Instance>) {
    let corpus = load_corpus(&data("synthetic/sentences.conll"), &data("synthetic/graphs.eds")).unwrap();
    let (ditr, other): (Vec<Instance>, Vec<Instance>) = corpus.into_iter().partition(has_arg3);
    let n = ditr.len() + other.len();
    let chosen = downsample(&(0..n).collect::<Vec<_>>(), 0.25, config_seed).unwrap();
    let (mut d, mut o) = (ditr.iter(), other.iter());
    let train: Vec<Instance> = (0..n)
        .map(|i| if chosen.contains(&i) { o.next() } else { d.next().or_else(|| o.next()) })
        .map(|i| i.unwrap().clone())
        .collect();
    (train, ditr)
}

#[test]
fn learning_curve_tracks_sparse_constructions() {
    let mut config = small_config();
    config.epochs = 30;
    let (train, dev) = sparse_training_set(config.seed);
    assert!(downsample(&train, 0.25, config.seed).unwrap().iter().all(|i| !has_arg3(i)));
    assert!(dev.len() >= 4);

    let options = PhenoOptions::default();
    let rows = learning_curve(&train, &dev, &[0.25, 1.0], &config, None, None, &options).unwrap();
    let value = |fraction: f64, metric: &str| -> f64 {
        rows.iter()
            .find(|r| r.fraction == fraction && r.metric == metric)
            .unwrap_or_else(|| panic!("{fraction} {metric}"))
            .value
    };
    // ARG3 never occurs in the 25% subset, so no label for it exists.
    assert_eq!(value(0.25, "ditr_arg3"), 0.0);
    assert!(value(1.0, "ditr_arg3") > 0.0);
    assert!(value(0.25, "ditr") < value(1.0, "ditr"));

    // The last point is an ordinary full-data run.
    let (parser, _) = Parser::train(&train, &dev, &config, None, |_| {}).unwrap();
    let direct: BTreeMap<String, f64> = curve_metrics(&parser, &dev, &edsparse::pheno::derive_triples(&dev), None, &options)
        .unwrap()
        .into_iter()
        .collect();
    let last: BTreeMap<String, f64> = rows.iter().filter(|r| r.fraction == 1.0).map(|r| (r.metric.clone(), r.value)).collect();
    assert_eq!(direct, last);

    let csv = curve_csv(&rows);
    assert!(csv.starts_with("fraction,metric,value\n0.25,smatch,"));
}

#[test]
fn learning_curve_rejects_bad_fractions() {
    let corpus = load_corpus(&data("synthetic/sentences.conll"), &data("synthetic/graphs.eds")).unwrap();
    let config = small_config();
    let options = PhenoOptions::default();
    assert!(learning_curve(&corpus, &corpus, &[0.5, 0.25], &config, None, None, &options).is_err());
    assert!(learning_curve(&corpus, &corpus, &[], &config, None, None, &options).is_err());
    assert!(learning_curve(&corpus, &corpus, &[0.0], &config, None, None, &options).is_err());
}
