use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{ParamId, ParamStore};
use super::tape::{Tape, Var};

/// One direction of an LSTM layer. Gate rows are laid out as `[i, f, o, g]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmCell {
    pub input: usize,
    pub hidden: usize,
    pub wx: ParamId,
    pub wh: ParamId,
    pub bias: ParamId,
}

impl LstmCell {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut R) -> Self {
        let wx = store.uniform(format!("{name}.wx"), 4 * hidden, input, rng);
        let wh = store.uniform(format!("{name}.wh"), 4 * hidden, hidden, rng);
        let bias = store.zeros(format!("{name}.b"), 1, 4 * hidden);
        LstmCell {
            input,
            hidden,
            wx,
            wh,
            bias,
        }
    }

    /// Run over the rows of `xs` (`m × input`), returning `m × hidden` in
    /// input order. With `reverse` the recurrence starts at the last row.
    pub fn run(&self, tape: &mut Tape, xs: Var, reverse: bool) -> Var {
        let (m, input) = tape.shape(xs);
        assert_eq!(input, self.input, "lstm input width");
        let h = self.hidden;
        let wx = tape.param(self.wx);
        let wh = tape.param(self.wh);
        let b = tape.param(self.bias);
        let proj = tape.matmul_t(xs, wx);
        let proj = tape.add_row(proj, b);

        let mut hprev = tape.zeros(1, h);
        let mut cprev = tape.zeros(1, h);
        let mut outs = vec![hprev; m];
        let order: Vec<usize> = if reverse { (0..m).rev().collect() } else { (0..m).collect() };
        for t in order {
            let xt = tape.slice_rows(proj, t, 1);
            let rec = tape.matmul_t(hprev, wh);
            let z = tape.add(xt, rec);
            let ifo = tape.slice_cols(z, 0, 3 * h);
            let ifo = tape.sigmoid(ifo);
            let i = tape.slice_cols(ifo, 0, h);
            let f = tape.slice_cols(ifo, h, h);
            let o = tape.slice_cols(ifo, 2 * h, h);
            let g = tape.slice_cols(z, 3 * h, h);
            let g = tape.tanh(g);
            let keep = tape.mul(f, cprev);
            let write = tape.mul(i, g);
            let c = tape.add(keep, write);
            let tc = tape.tanh(c);
            let ht = tape.mul(o, tc);
            outs[t] = ht;
            hprev = ht;
            cprev = c;
        }
        tape.concat_rows(&outs)
    }
}

/// Stacked bidirectional LSTM; each layer's output is `[forward | backward]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiLstm {
    pub layers: Vec<(LstmCell, LstmCell)>,
}

impl BiLstm {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        hidden: usize,
        layers: usize,
        rng: &mut R,
    ) -> Self {
        assert!(layers >= 1, "at least one recurrent layer");
        let mut out = Vec::with_capacity(layers);
        let mut width = input;
        for l in 0..layers {
            let fw = LstmCell::new(store, &format!("{name}.l{l}.fw"), width, hidden, rng);
            let bw = LstmCell::new(store, &format!("{name}.l{l}.bw"), width, hidden, rng);
            out.push((fw, bw));
            width = 2 * hidden;
        }
        BiLstm { layers: out }
    }

    pub fn output_dim(&self) -> usize {
        2 * self.layers[0].0.hidden
    }

    pub fn run(&self, tape: &mut Tape, xs: Var) -> Var {
        let mut x = xs;
        for (fw, bw) in &self.layers {
            let f = fw.run(tape, x, false);
            let b = bw.run(tape, x, true);
            x = tape.concat_cols(&[f, b]);
        }
        x
    }

    /// Final forward state concatenated with the final backward state
    /// (the backward pass ends at row 0), `1 × 2h`.
    pub fn final_states(&self, tape: &mut Tape, xs: Var) -> Var {
        let out = self.run(tape, xs);
        let m = tape.shape(out).0;
        let h = self.layers[0].0.hidden;
        let last = tape.slice_rows(out, m - 1, 1);
        let fw = tape.slice_cols(last, 0, h);
        let first = tape.slice_rows(out, 0, 1);
        let bw = tape.slice_cols(first, h, h);
        tape.concat_cols(&[fw, bw])
    }
}
