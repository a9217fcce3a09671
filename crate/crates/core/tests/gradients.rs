//! Finite-difference checks of every differentiable component.

mod common;

use std::time::Instant;

use common::grads::{arc_mlp, character_composer, label_mlp, recurrent_encoder, tagger_softmax, SEEDS, TOLERANCE};

fn run(component: &str, check: fn(u64) -> f64) {
    let start = Instant::now();
    for seed in 0..SEEDS {
        let err = check(seed);
        assert!(err < TOLERANCE, "{component}, seed {seed}: relative error {err:e}");
    }
    eprintln!("{component}: {SEEDS} seeds in {:.2?}", start.elapsed());
}

#[test]
fn character_composer_gradients() {
    run("character composer", character_composer);
}

#[test]
fn recurrent_encoder_gradients() {
    run("recurrent encoder", recurrent_encoder);
}

#[test]
fn tagger_softmax_gradients() {
    run("tagger softmax", tagger_softmax);
}

#[test]
fn arc_mlp_gradients() {
    run("arc MLP", arc_mlp);
}

#[test]
fn label_mlp_gradients() {
    run("label MLP", label_mlp);
}
