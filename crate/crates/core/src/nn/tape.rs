//! Reverse-mode differentiation over dense row-major matrices.
//!
//! A [`Tape`] records every operation of one forward pass. Calling
//! [`Tape::backward`] on a scalar node propagates gradients back to the
//! parameters it read, accumulating into a [`Gradients`] buffer.

use serde::{Deserialize, Serialize};

use super::params::{Gradients, ParamId, ParamStore};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative expressed through the activation output `y`.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

enum Op {
    Const,
    Param(ParamId),
    Gather(ParamId, Vec<usize>),
    SelectRows(Var, Vec<usize>),
    MatMulT(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Act(Var, Activation),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize),
    SliceRows(Var, usize),
    Transpose(Var),
    Softmax(Var),
    SoftmaxXent(Var, Vec<usize>),
    Sum(Var),
    WeightedSum(Var, Vec<f64>),
    MixLayers(Var, Vec<Var>),
    PairScores {
        head: Var,
        dep: Var,
        bias: Var,
        out: Var,
        act: Activation,
    },
    PairLabels {
        head: Var,
        dep: Var,
        bias: Var,
        out: Var,
        out_bias: Var,
        pairs: Vec<(usize, usize)>,
        act: Activation,
    },
}

struct Node {
    rows: usize,
    cols: usize,
    value: Vec<f64>,
    op: Op,
}

pub struct Tape<'p> {
    store: &'p ParamStore,
    nodes: Vec<Node>,
}

impl<'p> Tape<'p> {
    pub fn new(store: &'p ParamStore) -> Self {
        Tape {
            store,
            nodes: Vec::new(),
        }
    }

    pub fn store(&self) -> &'p ParamStore {
        self.store
    }

    fn push(&mut self, rows: usize, cols: usize, value: Vec<f64>, op: Op) -> Var {
        debug_assert_eq!(value.len(), rows * cols);
        self.nodes.push(Node { rows, cols, value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        let n = &self.nodes[v.0];
        (n.rows, n.cols)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn row(&self, v: Var, r: usize) -> &[f64] {
        let n = &self.nodes[v.0];
        &n.value[r * n.cols..(r + 1) * n.cols]
    }

    pub fn scalar(&self, v: Var) -> f64 {
        let n = &self.nodes[v.0];
        assert_eq!(n.value.len(), 1, "not a scalar");
        n.value[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn constant(&mut self, rows: usize, cols: usize, value: Vec<f64>) -> Var {
        assert_eq!(value.len(), rows * cols, "constant shape");
        self.push(rows, cols, value, Op::Const)
    }

    pub fn zeros(&mut self, rows: usize, cols: usize) -> Var {
        self.constant(rows, cols, vec![0.0; rows * cols])
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        let p = self.store.get(id);
        self.push(p.rows, p.cols, p.data.clone(), Op::Param(id))
    }

    /// Rows of a parameter matrix (embedding lookup). Indices may repeat.
    pub fn gather(&mut self, id: ParamId, rows: &[usize]) -> Var {
        let p = self.store.get(id);
        let mut value = Vec::with_capacity(rows.len() * p.cols);
        for &r in rows {
            value.extend_from_slice(p.row(r));
        }
        self.push(rows.len(), p.cols, value, Op::Gather(id, rows.to_vec()))
    }

    /// Rows of a tape value. Indices may repeat.
    pub fn select_rows(&mut self, x: Var, rows: &[usize]) -> Var {
        let cols = self.nodes[x.0].cols;
        let mut value = Vec::with_capacity(rows.len() * cols);
        for &r in rows {
            value.extend_from_slice(self.row(x, r));
        }
        self.push(rows.len(), cols, value, Op::SelectRows(x, rows.to_vec()))
    }

    /// `a · bᵀ` for `a: m×k`, `b: n×k`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Var {
        let (m, k) = self.shape(a);
        let (n, k2) = self.shape(b);
        assert_eq!(k, k2, "matmul_t inner dimension");
        let av = &self.nodes[a.0].value;
        let bv = &self.nodes[b.0].value;
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let ar = &av[i * k..(i + 1) * k];
            for j in 0..n {
                let br = &bv[j * k..(j + 1) * k];
                out[i * n + j] = dot(ar, br);
            }
        }
        self.push(m, n, out, Op::MatMulT(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(self.shape(a), self.shape(b), "add shape");
        let (r, c) = self.shape(a);
        let out = self.nodes[a.0]
            .value
            .iter()
            .zip(&self.nodes[b.0].value)
            .map(|(x, y)| x + y)
            .collect();
        self.push(r, c, out, Op::Add(a, b))
    }

    /// Broadcast-add a `1×n` row to every row of an `m×n` matrix.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let (m, n) = self.shape(a);
        assert_eq!(self.shape(row), (1, n), "add_row shape");
        let rv = &self.nodes[row.0].value;
        let out = self.nodes[a.0]
            .value
            .iter()
            .enumerate()
            .map(|(i, x)| x + rv[i % n])
            .collect();
        self.push(m, n, out, Op::AddRow(a, row))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(self.shape(a), self.shape(b), "mul shape");
        let (r, c) = self.shape(a);
        let out = self.nodes[a.0]
            .value
            .iter()
            .zip(&self.nodes[b.0].value)
            .map(|(x, y)| x * y)
            .collect();
        self.push(r, c, out, Op::Mul(a, b))
    }

    pub fn act(&mut self, x: Var, act: Activation) -> Var {
        let (r, c) = self.shape(x);
        let out = self.nodes[x.0].value.iter().map(|&v| act.apply(v)).collect();
        self.push(r, c, out, Op::Act(x, act))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.act(x, Activation::Sigmoid)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.act(x, Activation::Tanh)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let rows = self.shape(parts[0]).0;
        let widths: Vec<usize> = parts
            .iter()
            .map(|&p| {
                assert_eq!(self.shape(p).0, rows, "concat_cols rows");
                self.shape(p).1
            })
            .collect();
        let cols: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for &p in parts {
                out.extend_from_slice(self.row(p, r));
            }
        }
        self.push(rows, cols, out, Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let cols = self.shape(parts[0]).1;
        let mut rows = 0;
        let mut out = Vec::new();
        for &p in parts {
            assert_eq!(self.shape(p).1, cols, "concat_rows cols");
            rows += self.shape(p).0;
            out.extend_from_slice(&self.nodes[p.0].value);
        }
        self.push(rows, cols, out, Op::ConcatRows(parts.to_vec()))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Var {
        let (rows, cols) = self.shape(x);
        assert!(start + len <= cols, "slice_cols range");
        let mut out = Vec::with_capacity(rows * len);
        for r in 0..rows {
            out.extend_from_slice(&self.row(x, r)[start..start + len]);
        }
        self.push(rows, len, out, Op::SliceCols(x, start))
    }

    pub fn slice_rows(&mut self, x: Var, start: usize, len: usize) -> Var {
        let (rows, cols) = self.shape(x);
        assert!(start + len <= rows, "slice_rows range");
        let out = self.nodes[x.0].value[start * cols..(start + len) * cols].to_vec();
        self.push(len, cols, out, Op::SliceRows(x, start))
    }

    pub fn transpose(&mut self, x: Var) -> Var {
        let (rows, cols) = self.shape(x);
        let v = &self.nodes[x.0].value;
        let mut out = vec![0.0; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                out[c * rows + r] = v[r * cols + c];
            }
        }
        self.push(cols, rows, out, Op::Transpose(x))
    }

    /// Row-wise softmax.
    pub fn softmax(&mut self, x: Var) -> Var {
        let (rows, cols) = self.shape(x);
        let mut out = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            out.extend(softmax_row(self.row(x, r)));
        }
        self.push(rows, cols, out, Op::Softmax(x))
    }

    /// Summed negative log-likelihood of `targets[r]` under the row-wise
    /// softmax of `logits`.
    pub fn softmax_xent(&mut self, logits: Var, targets: &[usize]) -> Var {
        let (rows, cols) = self.shape(logits);
        assert_eq!(rows, targets.len(), "softmax_xent targets");
        let mut loss = 0.0;
        for (r, &t) in targets.iter().enumerate() {
            assert!(t < cols, "softmax_xent target out of range");
            let row = self.row(logits, r);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            loss += lse - row[t];
        }
        self.push(1, 1, vec![loss], Op::SoftmaxXent(logits, targets.to_vec()))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.nodes[x.0].value.iter().sum();
        self.push(1, 1, vec![s], Op::Sum(x))
    }

    /// `Σ coeff ⊙ x`, a scalar.
    pub fn weighted_sum(&mut self, x: Var, coeff: Vec<f64>) -> Var {
        assert_eq!(coeff.len(), self.nodes[x.0].value.len(), "weighted_sum shape");
        let s = dot(&self.nodes[x.0].value, &coeff);
        self.push(1, 1, vec![s], Op::WeightedSum(x, coeff))
    }

    /// `Σ_l weights[l] · layers[l]` for a `1×L` weight row.
    pub fn mix_layers(&mut self, weights: Var, layers: &[Var]) -> Var {
        assert_eq!(self.shape(weights), (1, layers.len()), "mix_layers weights");
        let (rows, cols) = self.shape(layers[0]);
        let mut out = vec![0.0; rows * cols];
        for (l, &layer) in layers.iter().enumerate() {
            assert_eq!(self.shape(layer), (rows, cols), "mix_layers layer shape");
            let w = self.nodes[weights.0].value[l];
            for (o, v) in out.iter_mut().zip(&self.nodes[layer.0].value) {
                *o += w * v;
            }
        }
        self.push(rows, cols, out, Op::MixLayers(weights, layers.to_vec()))
    }

    /// Pairwise arc scores `s[p][a] = out · δ(head[p] + dep[a] + bias)` for
    /// `p ≠ a`; the diagonal is zero and carries no gradient.
    pub fn pair_scores(&mut self, head: Var, dep: Var, bias: Var, out: Var, act: Activation) -> Var {
        let (n, hid) = self.shape(head);
        assert_eq!(self.shape(dep), (n, hid), "pair_scores dep");
        assert_eq!(self.shape(bias), (1, hid), "pair_scores bias");
        assert_eq!(self.shape(out), (1, hid), "pair_scores out");
        let hv = &self.nodes[head.0].value;
        let dv = &self.nodes[dep.0].value;
        let bv = &self.nodes[bias.0].value;
        let ov = &self.nodes[out.0].value;
        let mut scores = vec![0.0; n * n];
        for p in 0..n {
            for a in 0..n {
                if p == a {
                    continue;
                }
                let mut s = 0.0;
                for k in 0..hid {
                    s += ov[k] * act.apply(hv[p * hid + k] + dv[a * hid + k] + bv[k]);
                }
                scores[p * n + a] = s;
            }
        }
        self.push(
            n,
            n,
            scores,
            Op::PairScores {
                head,
                dep,
                bias,
                out,
                act,
            },
        )
    }

    /// Per-label scores for selected pairs:
    /// `s[j][l] = out[l] · δ(head[p_j] + dep[a_j] + bias) + out_bias[l]`.
    pub fn pair_labels(
        &mut self,
        head: Var,
        dep: Var,
        bias: Var,
        out: Var,
        out_bias: Var,
        pairs: &[(usize, usize)],
        act: Activation,
    ) -> Var {
        let (n, hid) = self.shape(head);
        let (labels, hid2) = self.shape(out);
        assert_eq!(hid, hid2, "pair_labels out");
        assert_eq!(self.shape(dep), (n, hid), "pair_labels dep");
        assert_eq!(self.shape(bias), (1, hid), "pair_labels bias");
        assert_eq!(self.shape(out_bias), (1, labels), "pair_labels out_bias");
        let hv = &self.nodes[head.0].value;
        let dv = &self.nodes[dep.0].value;
        let bv = &self.nodes[bias.0].value;
        let ov = &self.nodes[out.0].value;
        let obv = &self.nodes[out_bias.0].value;
        let mut scores = vec![0.0; pairs.len() * labels];
        let mut hidden = vec![0.0; hid];
        for (j, &(p, a)) in pairs.iter().enumerate() {
            for k in 0..hid {
                hidden[k] = act.apply(hv[p * hid + k] + dv[a * hid + k] + bv[k]);
            }
            for l in 0..labels {
                scores[j * labels + l] = dot(&ov[l * hid..(l + 1) * hid], &hidden) + obv[l];
            }
        }
        self.push(
            pairs.len(),
            labels,
            scores,
            Op::PairLabels {
                head,
                dep,
                bias,
                out,
                out_bias,
                pairs: pairs.to_vec(),
                act,
            },
        )
    }

    /// Backpropagate from scalar `loss`, adding parameter gradients to `grads`.
    pub fn backward(&self, loss: Var, grads: &mut Gradients) {
        assert_eq!(self.nodes[loss.0].value.len(), 1, "backward from a non-scalar");
        let mut g: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        g[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let Some(gi) = g[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Const => {}
                Op::Param(id) => {
                    axpy(grads.get_mut(*id), &gi, 1.0);
                }
                Op::Gather(id, rows) => {
                    let cols = node.cols;
                    let dst = grads.get_mut(*id);
                    for (j, &r) in rows.iter().enumerate() {
                        axpy(&mut dst[r * cols..(r + 1) * cols], &gi[j * cols..(j + 1) * cols], 1.0);
                    }
                }
                Op::SelectRows(x, rows) => {
                    let cols = node.cols;
                    let gx = self.grad_buf(&mut g, *x);
                    for (j, &r) in rows.iter().enumerate() {
                        axpy(&mut gx[r * cols..(r + 1) * cols], &gi[j * cols..(j + 1) * cols], 1.0);
                    }
                }
                Op::MatMulT(a, b) => {
                    let (m, k) = self.shape(*a);
                    let n = self.shape(*b).0;
                    let av = &self.nodes[a.0].value;
                    let bv = &self.nodes[b.0].value;
                    {
                        let ga = self.grad_buf(&mut g, *a);
                        for r in 0..m {
                            let dst = &mut ga[r * k..(r + 1) * k];
                            for j in 0..n {
                                let c = gi[r * n + j];
                                if c != 0.0 {
                                    axpy(dst, &bv[j * k..(j + 1) * k], c);
                                }
                            }
                        }
                    }
                    let gb = self.grad_buf(&mut g, *b);
                    for r in 0..m {
                        let src = &av[r * k..(r + 1) * k];
                        for j in 0..n {
                            let c = gi[r * n + j];
                            if c != 0.0 {
                                axpy(&mut gb[j * k..(j + 1) * k], src, c);
                            }
                        }
                    }
                }
                Op::Add(a, b) => {
                    axpy(self.grad_buf(&mut g, *a), &gi, 1.0);
                    axpy(self.grad_buf(&mut g, *b), &gi, 1.0);
                }
                Op::AddRow(a, row) => {
                    let n = node.cols;
                    axpy(self.grad_buf(&mut g, *a), &gi, 1.0);
                    let gr = self.grad_buf(&mut g, *row);
                    for chunk in gi.chunks(n) {
                        axpy(gr, chunk, 1.0);
                    }
                }
                Op::Mul(a, b) => {
                    let av = &self.nodes[a.0].value;
                    let bv = &self.nodes[b.0].value;
                    {
                        let ga = self.grad_buf(&mut g, *a);
                        for ((d, gv), y) in ga.iter_mut().zip(&gi).zip(bv) {
                            *d += gv * y;
                        }
                    }
                    let gb = self.grad_buf(&mut g, *b);
                    for ((d, gv), x) in gb.iter_mut().zip(&gi).zip(av) {
                        *d += gv * x;
                    }
                }
                Op::Act(x, act) => {
                    let gx = self.grad_buf(&mut g, *x);
                    for ((d, gv), y) in gx.iter_mut().zip(&gi).zip(&node.value) {
                        *d += gv * act.derivative_from_output(*y);
                    }
                }
                Op::ConcatCols(parts) => {
                    let rows = node.rows;
                    let cols = node.cols;
                    let mut offset = 0;
                    for &p in parts {
                        let w = self.shape(p).1;
                        let gp = self.grad_buf(&mut g, p);
                        for r in 0..rows {
                            axpy(
                                &mut gp[r * w..(r + 1) * w],
                                &gi[r * cols + offset..r * cols + offset + w],
                                1.0,
                            );
                        }
                        offset += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let len = self.nodes[p.0].value.len();
                        axpy(self.grad_buf(&mut g, p), &gi[offset..offset + len], 1.0);
                        offset += len;
                    }
                }
                Op::SliceCols(x, start) => {
                    let xcols = self.shape(*x).1;
                    let w = node.cols;
                    let gx = self.grad_buf(&mut g, *x);
                    for r in 0..node.rows {
                        axpy(
                            &mut gx[r * xcols + start..r * xcols + start + w],
                            &gi[r * w..(r + 1) * w],
                            1.0,
                        );
                    }
                }
                Op::SliceRows(x, start) => {
                    let cols = node.cols;
                    let gx = self.grad_buf(&mut g, *x);
                    axpy(&mut gx[start * cols..(start + node.rows) * cols], &gi, 1.0);
                }
                Op::Transpose(x) => {
                    let (xr, xc) = self.shape(*x);
                    let gx = self.grad_buf(&mut g, *x);
                    for r in 0..xr {
                        for c in 0..xc {
                            gx[r * xc + c] += gi[c * xr + r];
                        }
                    }
                }
                Op::Softmax(x) => {
                    let cols = node.cols;
                    let gx = self.grad_buf(&mut g, *x);
                    for r in 0..node.rows {
                        let y = &node.value[r * cols..(r + 1) * cols];
                        let gy = &gi[r * cols..(r + 1) * cols];
                        let inner = dot(y, gy);
                        for c in 0..cols {
                            gx[r * cols + c] += y[c] * (gy[c] - inner);
                        }
                    }
                }
                Op::SoftmaxXent(x, targets) => {
                    let cols = self.shape(*x).1;
                    let scale = gi[0];
                    let probs: Vec<Vec<f64>> = (0..targets.len()).map(|r| softmax_row(self.row(*x, r))).collect();
                    let gx = self.grad_buf(&mut g, *x);
                    for (r, (&t, p)) in targets.iter().zip(probs).enumerate() {
                        for c in 0..cols {
                            let indicator = if c == t { 1.0 } else { 0.0 };
                            gx[r * cols + c] += scale * (p[c] - indicator);
                        }
                    }
                }
                Op::Sum(x) => {
                    let s = gi[0];
                    for d in self.grad_buf(&mut g, *x).iter_mut() {
                        *d += s;
                    }
                }
                Op::WeightedSum(x, coeff) => {
                    axpy(self.grad_buf(&mut g, *x), coeff, gi[0]);
                }
                Op::MixLayers(weights, layers) => {
                    let wv = self.nodes[weights.0].value.clone();
                    let mut gw = vec![0.0; layers.len()];
                    for (l, &layer) in layers.iter().enumerate() {
                        gw[l] = dot(&gi, &self.nodes[layer.0].value);
                        axpy(self.grad_buf(&mut g, layer), &gi, wv[l]);
                    }
                    axpy(self.grad_buf(&mut g, *weights), &gw, 1.0);
                }
                Op::PairScores {
                    head,
                    dep,
                    bias,
                    out,
                    act,
                } => {
                    let (n, hid) = self.shape(*head);
                    let hv = &self.nodes[head.0].value;
                    let dv = &self.nodes[dep.0].value;
                    let bv = &self.nodes[bias.0].value;
                    let ov = &self.nodes[out.0].value;
                    let mut gh = vec![0.0; n * hid];
                    let mut gd = vec![0.0; n * hid];
                    let mut gb = vec![0.0; hid];
                    let mut go = vec![0.0; hid];
                    for p in 0..n {
                        for a in 0..n {
                            let s = gi[p * n + a];
                            if p == a || s == 0.0 {
                                continue;
                            }
                            for k in 0..hid {
                                let y = act.apply(hv[p * hid + k] + dv[a * hid + k] + bv[k]);
                                go[k] += s * y;
                                let dz = s * ov[k] * act.derivative_from_output(y);
                                gh[p * hid + k] += dz;
                                gd[a * hid + k] += dz;
                                gb[k] += dz;
                            }
                        }
                    }
                    axpy(self.grad_buf(&mut g, *head), &gh, 1.0);
                    axpy(self.grad_buf(&mut g, *dep), &gd, 1.0);
                    axpy(self.grad_buf(&mut g, *bias), &gb, 1.0);
                    axpy(self.grad_buf(&mut g, *out), &go, 1.0);
                }
                Op::PairLabels {
                    head,
                    dep,
                    bias,
                    out,
                    out_bias,
                    pairs,
                    act,
                } => {
                    let (n, hid) = self.shape(*head);
                    let labels = self.shape(*out).0;
                    let hv = &self.nodes[head.0].value;
                    let dv = &self.nodes[dep.0].value;
                    let bv = &self.nodes[bias.0].value;
                    let ov = &self.nodes[out.0].value;
                    let mut gh = vec![0.0; n * hid];
                    let mut gd = vec![0.0; n * hid];
                    let mut gb = vec![0.0; hid];
                    let mut go = vec![0.0; labels * hid];
                    let mut gob = vec![0.0; labels];
                    let mut hidden = vec![0.0; hid];
                    for (j, &(p, a)) in pairs.iter().enumerate() {
                        for k in 0..hid {
                            hidden[k] = act.apply(hv[p * hid + k] + dv[a * hid + k] + bv[k]);
                        }
                        let grow = &gi[j * labels..(j + 1) * labels];
                        for (l, &s) in grow.iter().enumerate() {
                            gob[l] += s;
                            axpy(&mut go[l * hid..(l + 1) * hid], &hidden, s);
                        }
                        for k in 0..hid {
                            let mut back = 0.0;
                            for (l, &s) in grow.iter().enumerate() {
                                back += s * ov[l * hid + k];
                            }
                            let dz = back * act.derivative_from_output(hidden[k]);
                            gh[p * hid + k] += dz;
                            gd[a * hid + k] += dz;
                            gb[k] += dz;
                        }
                    }
                    axpy(self.grad_buf(&mut g, *head), &gh, 1.0);
                    axpy(self.grad_buf(&mut g, *dep), &gd, 1.0);
                    axpy(self.grad_buf(&mut g, *bias), &gb, 1.0);
                    axpy(self.grad_buf(&mut g, *out), &go, 1.0);
                    axpy(self.grad_buf(&mut g, *out_bias), &gob, 1.0);
                }
            }
        }
    }

    fn grad_buf<'g>(&self, g: &'g mut [Option<Vec<f64>>], v: Var) -> &'g mut Vec<f64> {
        let len = self.nodes[v.0].value.len();
        g[v.0].get_or_insert_with(|| vec![0.0; len])
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(dst: &mut [f64], src: &[f64], alpha: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += alpha * s;
    }
}

pub fn softmax_row(row: &[f64]) -> Vec<f64> {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_t_values() {
        let store = ParamStore::new();
        let mut t = Tape::new(&store);
        let a = t.constant(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let b = t.constant(1, 2, vec![1.0, -1.0]);
        let c = t.matmul_t(a, b);
        assert_eq!(t.shape(c), (2, 1));
        assert_eq!(t.value(c), &[-1.0, -1.0]);
    }

    #[test]
    fn pair_score_hand_example() {
        // c_p = (1, -2), c_a = (3, 0), W1 = I4, b = 0, W2 = ones, ReLU
        let mut store = ParamStore::new();
        let w1 = store.add(
            "w1",
            4,
            4,
            vec![1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1.],
        );
        let mut t = Tape::new(&store);
        let c = t.constant(2, 2, vec![1.0, -2.0, 3.0, 0.0]);
        let w = t.param(w1);
        let wh = t.slice_cols(w, 0, 2);
        let wd = t.slice_cols(w, 2, 2);
        let h = t.matmul_t(c, wh);
        let d = t.matmul_t(c, wd);
        let b = t.zeros(1, 4);
        let o = t.constant(1, 4, vec![1.0; 4]);
        let s = t.pair_scores(h, d, b, o, Activation::Relu);
        assert_eq!(t.value(s)[1], 4.0);
        assert_eq!(t.value(s)[0], 0.0);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let store = ParamStore::new();
        let mut t = Tape::new(&store);
        let x = t.constant(2, 3, vec![1.0, 2.0, 3.0, -100.0, 0.0, 100.0]);
        let y = t.softmax(x);
        for r in 0..2 {
            assert!((t.row(y, r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
