//! Mini-batch training loop shared by both pipeline stages.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::config::TrainConfig;
use crate::error::Result;
use crate::nn::{Gradients, Optimizer, ParamStore, Tape, Var};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochLog {
    pub stage: &'static str,
    pub epoch: usize,
    pub loss: f64,
    pub dev_score: f64,
}

/// Train `store` for up to `config.epochs` epochs over `n` examples and keep
/// the parameters of the epoch with the best `evaluate` score (earliest on
/// ties).
///
/// `loss` builds the loss of one example on a fresh tape; returning `None`
/// means the example contributes no gradient.
pub(crate) fn fit<R, L, E, P>(
    stage: &'static str,
    store: &mut ParamStore,
    n: usize,
    config: &TrainConfig,
    rng: &mut R,
    loss: L,
    evaluate: E,
    mut progress: P,
) -> Result<Vec<EpochLog>>
where
    R: Rng,
    L: Fn(&mut Tape, usize) -> Result<Option<Var>>,
    E: Fn(&ParamStore) -> Result<f64>,
    P: FnMut(&EpochLog),
{
    let mut optimizer = Optimizer::new(config.optimizer, config.learning_rate, store);
    let mut grads = Gradients::zeros_like(store);
    let mut order: Vec<usize> = (0..n).collect();
    let mut best: Option<(f64, ParamStore)> = None;
    let mut logs = Vec::new();
    for epoch in 1..=config.epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.clear();
            let mut any = false;
            for &i in batch {
                let mut tape = Tape::new(store);
                if let Some(out) = loss(&mut tape, i)? {
                    total += tape.scalar(out);
                    tape.backward(out, &mut grads);
                    any = true;
                }
            }
            if !any {
                continue;
            }
            grads.scale(1.0 / batch.len() as f64);
            grads.clip_norm(config.clip);
            optimizer.step(store, &grads);
        }
        let score = evaluate(store)?;
        let log = EpochLog {
            stage,
            epoch,
            loss: total / n.max(1) as f64,
            dev_score: score,
        };
        log::info!("{stage} epoch {epoch}: loss {:.5} dev {:.4}", log.loss, score);
        progress(&log);
        logs.push(log);
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, store.clone()));
        }
        if config.stop_at_perfect && score >= 1.0 {
            break;
        }
    }
    if let Some((_, params)) = best {
        *store = params;
    }
    Ok(logs)
}
