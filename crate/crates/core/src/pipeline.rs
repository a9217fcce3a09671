//! The two-stage parser: concept tagging followed by arc selection.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::relexicalize;
use crate::arcs::{train_arcs, ArcModel, ConceptNode};
use crate::config::TrainConfig;
use crate::corpus::{Instance, Sentence};
use crate::encoder::ContextVectors;
use crate::error::{Error, Result};
use crate::graph::{EdsEdge, EdsGraph};
use crate::tagger::{predict_tags, train_tagger, TaggerModel};
use crate::train::EpochLog;

/// First line of every model file.
pub const MODEL_MAGIC: &str = "EDSF1";
const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parser {
    pub config: TrainConfig,
    pub tagger: TaggerModel,
    pub arcs: ArcModel,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    #[serde(flatten)]
    parser: Parser,
}

impl Parser {
    /// Train stage 1, then stage 2 on gold concepts and alignments.
    pub fn train(
        train: &[Instance],
        dev: &[Instance],
        config: &TrainConfig,
        ctx: Option<&ContextVectors>,
        mut progress: impl FnMut(&EpochLog),
    ) -> Result<(Parser, Vec<EpochLog>)> {
        if train.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        let (tagger, mut logs) = train_tagger(train, dev, config, ctx, &mut progress)?;
        let (arcs, arc_logs) = train_arcs(train, dev, config, ctx, &mut progress)?;
        logs.extend(arc_logs);
        Ok((
            Parser {
                config: config.clone(),
                tagger,
                arcs,
            },
            logs,
        ))
    }

    /// Does the model consume external context vectors?
    pub fn expects_context(&self) -> bool {
        self.tagger.net.encoder.tables.ctx_mix.is_some()
    }

    /// Tag, relexicalize, then connect the recovered concepts.
    pub fn parse(&self, sentence: &Sentence, connected: bool, ctx: Option<&ContextVectors>) -> Result<EdsGraph> {
        let tags = predict_tags(sentence, &self.tagger, ctx)?;
        let relex = relexicalize(&tags, sentence)?;
        let concepts: Vec<ConceptNode> = tags
            .iter()
            .enumerate()
            .flat_map(|(i, tag)| {
                tag.parts().iter().map(move |part| ConceptNode {
                    token: i,
                    concept: part.clone(),
                })
            })
            .collect();
        let decoded = self.arcs.decode(sentence, &concepts, connected, ctx)?;
        let nodes: Vec<_> = relex.into_iter().map(|r| r.node).collect();
        let edges = decoded
            .arcs
            .iter()
            .map(|(p, a, role)| EdsEdge::new(nodes[*p].id.clone(), nodes[*a].id.clone(), role.clone()))
            .collect();
        let top = decoded.top.map(|t| nodes[t].id.clone());
        Ok(EdsGraph::new(nodes, edges, top)?.with_text(sentence.text.clone()))
    }

    /// Parse many sentences in parallel, keeping input order.
    pub fn parse_all(&self, sentences: &[Sentence], connected: bool, ctx: Option<&ContextVectors>) -> Result<Vec<EdsGraph>> {
        sentences.par_iter().map(|s| self.parse(s, connected, ctx)).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let body = serde_json::to_string(&ModelFile {
            version: MODEL_VERSION,
            parser: self.clone(),
        })
        .expect("model serializes");
        format!("{MODEL_MAGIC}\n{body}\n").into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|_| Error::Model("model file is not UTF-8".into()))?;
        let body = text
            .strip_prefix(MODEL_MAGIC)
            .and_then(|rest| rest.strip_prefix('\n'))
            .ok_or_else(|| Error::Model(format!("missing {MODEL_MAGIC} header")))?;
        let file: ModelFile = serde_json::from_str(body)?;
        if file.version != MODEL_VERSION {
            return Err(Error::Model(format!("unsupported model version {}", file.version)));
        }
        Ok(file.parser)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Parser::from_bytes(&bytes)
    }
}
