//! The `edsparse` command line: train, parse, eval, pheno, curve.
//!
//! Reports go to standard output (or `--out`), human summaries to standard
//! error. Exit status is 0 on success, 1 when a `--min` threshold is not
//! met and 2 on any input or runtime error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser as ClapParser, Subcommand, ValueEnum};

use crate::align::{align_graph, compose_graph_tags};
use crate::arcs::{dep_metrics, DepMetrics};
use crate::config::TrainConfig;
use crate::corpus::{load_corpus, load_graphs, load_sentences, pair_instances, write_graphs, GraphFormat, Instance};
use crate::encoder::ContextVectors;
use crate::error::{Error, Result};
use crate::graph::EdsGraph;
use crate::nn::OptimizerKind;
use crate::pheno::{
    curve_csv, derive_triples, learning_curve, load_pheno_gold, pheno_score, report_csv, PhenoOptions, RoleMap,
    SystemGraphs,
};
use crate::pipeline::Parser;
use crate::smatch::{corpus_smatch, pair_by_id, smatch_with, SmatchOptions};
use crate::tagger::tag_metrics;

pub const SEED_ENV: &str = "EDSPARSE_SEED";

#[derive(Debug, ClapParser)]
#[command(name = "edsparse", version, about = "Factorization-based EDS parsing and evaluation")]
pub struct Cli {
    /// Worker threads for parsing and evaluation (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train both stages and write a model file.
    Train(TrainArgs),
    /// Parse sentences with a trained model.
    Parse(ParseArgs),
    /// Compare predicted graphs with gold graphs.
    Eval(EvalArgs),
    /// Score systems on phenomenon annotations.
    Pheno(PhenoArgs),
    /// Train on nested subsets of the training data and report dev metrics.
    Curve(CurveArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long)]
    pub sentences: PathBuf,
    #[arg(long)]
    pub graphs: PathBuf,
    #[arg(long, requires = "dev_graphs")]
    pub dev_sentences: Option<PathBuf>,
    #[arg(long, requires = "dev_sentences")]
    pub dev_graphs: Option<PathBuf>,
    /// Contextual vectors file.
    #[arg(long)]
    pub ctx: Option<PathBuf>,
}

/// Hyperparameter overrides; each wins over the config file.
#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long, value_enum)]
    pub optimizer: Option<OptimizerArg>,
    /// Decode connected graphs.
    #[arg(long, overrides_with = "disconnected")]
    pub connected: bool,
    /// Decode positive arcs only, without the spanning tree.
    #[arg(long, overrides_with = "connected")]
    pub disconnected: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OptimizerArg {
    Adam,
    Sgd,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<TrainConfig> {
        let mut config = match &self.config {
            Some(path) => TrainConfig::load(path)?,
            None => TrainConfig::default(),
        };
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.epochs {
            config.epochs = v;
        }
        if let Some(v) = self.batch_size {
            config.batch_size = v;
        }
        if let Some(v) = self.learning_rate {
            config.learning_rate = v;
        }
        if let Some(v) = self.optimizer {
            config.optimizer = match v {
                OptimizerArg::Adam => OptimizerKind::Adam,
                OptimizerArg::Sgd => OptimizerKind::Sgd,
            };
        }
        if self.connected {
            config.connected = true;
        }
        if self.disconnected {
            config.connected = false;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Model file to write.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub sentences: PathBuf,
    #[arg(long)]
    pub ctx: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "eds")]
    pub format: GraphFormat,
    /// Force connected output (default: the model's setting).
    #[arg(long, overrides_with = "disconnected")]
    pub connected: bool,
    #[arg(long, overrides_with = "connected")]
    pub disconnected: bool,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    Smatch,
    Dep,
    Tags,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, value_enum, default_value = "smatch")]
    pub mode: EvalMode,
    /// Sentence file; required for `--mode tags`.
    #[arg(long)]
    pub sentences: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// Leave the top triple out of Smatch.
    #[arg(long)]
    pub no_top: bool,
    /// Report macro-averaged Smatch in the summary row.
    #[arg(long = "macro")]
    pub macro_average: bool,
    /// Exit with status 1 when the headline F is below this value.
    #[arg(long)]
    pub min: Option<f64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PhenoArgs {
    /// Gold phenomenon triples.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub sentences: PathBuf,
    /// System graphs as NAME=PATH; repeatable.
    #[arg(long = "system", value_parser = parse_system, required = true)]
    pub systems: Vec<(String, PathBuf)>,
    /// Report only these systems.
    #[arg(long)]
    pub select: Vec<String>,
    /// Gold graphs; system nodes then take token positions via Smatch.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// TOML file with a `[roles]` table mapping gold roles to system roles.
    #[arg(long)]
    pub roles: Option<PathBuf>,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub min: Option<f64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn parse_system(s: &str) -> std::result::Result<(String, PathBuf), String> {
    let (name, path) = s.split_once('=').ok_or_else(|| format!("expected NAME=PATH, got '{s}'"))?;
    if name.is_empty() || name.contains(',') {
        return Err(format!("bad system name '{name}'"));
    }
    Ok((name.to_string(), PathBuf::from(path)))
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Comma-separated ascending fractions in (0, 1].
    #[arg(long, value_delimiter = ',', required = true)]
    pub fractions: Vec<f64>,
    /// Phenomenon triples over the dev sentences (default: read off the dev
    /// graphs).
    #[arg(long)]
    pub pheno: Option<PathBuf>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// Outcome of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    BelowThreshold,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::BelowThreshold => 1,
        }
    }
}

pub const EXIT_INPUT_ERROR: i32 = 2;

/// Parse `args` (program name first), run, and return the exit status.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT_ERROR } else { 0 };
        }
    };
    match run(&cli) {
        Ok(status) => status.code(),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT_ERROR
        }
    }
}

pub fn run(cli: &Cli) -> Result<Status> {
    match cli.jobs {
        Some(0) => Err(Error::InvalidArgument("--jobs must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(|| dispatch(&cli.command)),
        None => dispatch(&cli.command),
    }
}

fn dispatch(command: &Command) -> Result<Status> {
    match command {
        Command::Train(a) => train(a),
        Command::Parse(a) => parse(a),
        Command::Eval(a) => eval(a),
        Command::Pheno(a) => pheno(a),
        Command::Curve(a) => curve(a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_ctx(path: Option<&Path>) -> Result<Option<ContextVectors>> {
    path.map(ContextVectors::load).transpose()
}

fn load_sets(corpus: &CorpusArgs) -> Result<(Vec<Instance>, Vec<Instance>)> {
    let train = load_corpus(&corpus.sentences, &corpus.graphs)?;
    let dev = match (&corpus.dev_sentences, &corpus.dev_graphs) {
        (Some(s), Some(g)) => load_corpus(s, g)?,
        _ => Vec::new(),
    };
    Ok((train, dev))
}

fn train(a: &TrainArgs) -> Result<Status> {
    let config = a.config.resolve()?;
    let (train, dev) = load_sets(&a.corpus)?;
    let ctx = load_ctx(a.corpus.ctx.as_deref())?;
    if config.encoder.ctx_dim > 0 && ctx.is_none() {
        log::warn!("no context vectors given; the context block is trained on zeros");
    }
    eprintln!(
        "training on {} sentences ({} dev), seed {}",
        train.len(),
        dev.len(),
        config.seed
    );
    let (parser, _) = Parser::train(&train, &dev, &config, ctx.as_ref(), |log| {
        eprintln!(
            "{:<6} epoch {:>3}  loss {:>12.4}  dev {:.4}",
            log.stage, log.epoch, log.loss, log.dev_score
        );
    })?;
    parser.save(&a.out)?;
    eprintln!("model written to {}", a.out.display());
    Ok(Status::Ok)
}

fn parse(a: &ParseArgs) -> Result<Status> {
    let parser = Parser::load(&a.model)?;
    let sentences = load_sentences(&a.sentences)?;
    let ctx = match &a.ctx {
        Some(path) if !path.exists() && parser.expects_context() => {
            log::warn!(
                "context file {} not found; using a zero context block",
                path.display()
            );
            None
        }
        other => load_ctx(other.as_deref())?,
    };
    if parser.expects_context() && ctx.is_none() && a.ctx.is_none() {
        log::warn!("model expects context vectors; using a zero context block");
    }
    let connected = if a.connected {
        true
    } else if a.disconnected {
        false
    } else {
        parser.config.connected
    };
    let graphs = parser.parse_all(&sentences, connected, ctx.as_ref())?;
    let text = write_graphs(sentences.iter().map(|s| s.id.as_str()).zip(&graphs), a.format);
    emit(a.out.as_deref(), &text)?;
    eprintln!("parsed {} sentences", sentences.len());
    Ok(Status::Ok)
}

fn threshold(value: f64, min: Option<f64>, what: &str) -> Status {
    match min {
        Some(m) if value < m => {
            eprintln!("{what} {value:.4} is below the threshold {m}");
            Status::BelowThreshold
        }
        _ => Status::Ok,
    }
}

fn eval(a: &EvalArgs) -> Result<Status> {
    let pairs = pair_by_id(load_graphs(&a.pred)?, load_graphs(&a.gold)?)?;
    let options = SmatchOptions {
        restarts: a.restarts,
        seed: a.seed,
        include_top: !a.no_top,
    };
    let (report, headline, what) = match a.mode {
        EvalMode::Smatch => {
            let result = corpus_smatch(&pairs, &options);
            let f = if a.macro_average { result.macro_f } else { result.micro.f };
            eprintln!("smatch {}  F {:.4}", result.micro, f);
            (result.to_tsv(a.macro_average), f, "smatch F")
        }
        EvalMode::Dep => {
            let (tsv, total) = dep_report(&pairs, &options);
            eprintln!("unlabeled {}\nlabeled   {}", total.unlabeled, total.labeled);
            (tsv, total.labeled.f, "labeled F")
        }
        EvalMode::Tags => {
            let path = a
                .sentences
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("--mode tags needs --sentences".into()))?;
            let sentences = load_sentences(path)?;
            let gold: Vec<(String, EdsGraph)> = pairs.iter().map(|(id, _, g)| (id.clone(), g.clone())).collect();
            let pred: Vec<(String, EdsGraph)> = pairs.iter().map(|(id, p, _)| (id.clone(), p.clone())).collect();
            let gold = pair_instances(sentences.clone(), gold)?;
            let pred = pair_instances(sentences, pred)?;
            let mut g = Vec::with_capacity(gold.len());
            let mut p = Vec::with_capacity(gold.len());
            for (gi, pi) in gold.iter().zip(&pred) {
                g.push(compose_graph_tags(&gi.graph, &gi.sentence, &align_graph(&gi.graph, &gi.sentence)?));
                p.push(compose_graph_tags(&pi.graph, &pi.sentence, &align_graph(&pi.graph, &pi.sentence)?));
            }
            let m = tag_metrics(&g, &p)?;
            eprintln!("tag accuracy {:.4}  concept {}", m.tag_accuracy, m.concept);
            let tsv = format!(
                "metric\tvalue\ntokens\t{}\ntag_accuracy\t{:.6}\nconcept_P\t{:.6}\nconcept_R\t{:.6}\nconcept_F\t{:.6}\n",
                m.tokens, m.tag_accuracy, m.concept.precision, m.concept.recall, m.concept.f
            );
            (tsv, m.concept.f, "concept F")
        }
    };
    emit(a.out.as_deref(), &report)?;
    Ok(threshold(headline, a.min, what))
}

/// Per-graph and summed dependency tuple scores under the Smatch mapping.
pub fn dep_report(pairs: &[(String, EdsGraph, EdsGraph)], options: &SmatchOptions) -> (String, DepMetrics) {
    use rayon::prelude::*;
    let per: Vec<DepMetrics> = pairs
        .par_iter()
        .map(|(_, pred, gold)| dep_metrics(gold, pred, &smatch_with(pred, gold, options).mapping))
        .collect();
    let mut out = String::from("id\tUP\tUR\tUF\tLP\tLR\tLF\n");
    let row = |id: &str, m: &DepMetrics| {
        format!(
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\n",
            id,
            m.unlabeled.precision,
            m.unlabeled.recall,
            m.unlabeled.f,
            m.labeled.precision,
            m.labeled.recall,
            m.labeled.f
        )
    };
    let mut total = DepMetrics::empty();
    for ((id, _, _), m) in pairs.iter().zip(&per) {
        out.push_str(&row(id, m));
        total = total.add(m);
    }
    out.push_str(&row("ALL", &total));
    (out, total)
}

fn pheno(a: &PhenoArgs) -> Result<Status> {
    let sentences = load_sentences(&a.sentences)?;
    let gold = load_pheno_gold(&a.gold, &sentences)?;
    for name in &a.select {
        if !a.systems.iter().any(|(n, _)| n == name) {
            return Err(Error::InvalidArgument(format!("unknown system '{name}'")));
        }
    }
    let reference = a.reference.as_deref().map(load_graphs).transpose()?;
    let options = PhenoOptions {
        roles: a.roles.as_deref().map(RoleMap::load).transpose()?.unwrap_or_default(),
        smatch: SmatchOptions {
            seed: a.seed,
            ..SmatchOptions::default()
        },
    };
    let mut reports = Vec::new();
    for (name, path) in &a.systems {
        if !a.select.is_empty() && !a.select.contains(name) {
            continue;
        }
        let graphs = load_graphs(path)?;
        let report = pheno_score(
            &gold,
            &sentences,
            &SystemGraphs { name, graphs: &graphs },
            reference.as_deref(),
            &options,
        );
        if let Some(all) = report.row("ALL", "-") {
            eprintln!(
                "{name}: {}/{} triples recovered ({:.4}), {}/{} sentences covered",
                all.recovered, all.count, all.recall, report.covered, report.sentences
            );
        }
        reports.push(report);
    }
    emit(a.out.as_deref(), &report_csv(&reports))?;
    let worst = reports
        .iter()
        .filter_map(|r| r.recall("ALL", "-"))
        .fold(f64::INFINITY, f64::min);
    Ok(threshold(worst, a.min, "overall recall"))
}

fn curve(a: &CurveArgs) -> Result<Status> {
    let config = a.config.resolve()?;
    let (train, dev) = load_sets(&a.corpus)?;
    let dev = if dev.is_empty() {
        log::warn!("no dev set given; evaluating on the training data");
        train.clone()
    } else {
        dev
    };
    let ctx = load_ctx(a.corpus.ctx.as_deref())?;
    let pheno = match &a.pheno {
        Some(path) => {
            let sentences: Vec<_> = dev.iter().map(|i| i.sentence.clone()).collect();
            Some(load_pheno_gold(path, &sentences)?)
        }
        None => None,
    };
    let options = PhenoOptions {
        smatch: SmatchOptions {
            restarts: config.smatch_restarts,
            seed: config.seed,
            include_top: true,
        },
        ..PhenoOptions::default()
    };
    if pheno.is_none() {
        eprintln!("{} phenomenon triples read off the dev graphs", derive_triples(&dev).len());
    }
    let rows = learning_curve(&train, &dev, &a.fractions, &config, ctx.as_ref(), pheno.as_deref(), &options)?;
    emit(a.out.as_deref(), &curve_csv(&rows))?;
    Ok(Status::Ok)
}
