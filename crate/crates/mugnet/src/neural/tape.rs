//! Reverse-mode automatic differentiation over the fixed operation set the
//! model needs. A [`Tape`] records the forward pass; [`Tape::backward`]
//! replays it in reverse and accumulates exact gradients for every node.
//!
//! The segment ops treat an edge-major column grouped by destination node:
//! `offsets` has one entry per segment boundary (length S+1), and segment s
//! covers rows `offsets[s]..offsets[s+1]`.

use crate::error::{MugError, Result};
use crate::neural::tensor::Tensor;

pub type NodeId = usize;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    /// X + broadcast of a 1 x d row bias.
    AddBias(NodeId, NodeId),
    Add(NodeId, NodeId),
    Scale(NodeId, f64),
    MulElem(NodeId, NodeId),
    LeakyRelu(NodeId, f64),
    Tanh(NodeId),
    SoftmaxRows(NodeId),
    LogSoftmaxRows(NodeId),
    ConcatCols(Vec<NodeId>),
    GatherRows(NodeId, Vec<usize>),
    SegmentSoftmax(NodeId, Vec<usize>),
    SegmentSumRows(NodeId, Vec<usize>),
    /// Row-wise scaling: out[e,:] = x[e,:] * s[e], s an E x 1 column.
    RowScale(NodeId, NodeId),
    SumAll(NodeId),
    /// Mean over rows of -log(p[r, target_r]) with p clipped to [1e-15, 1].
    NegLogPickMean(NodeId, Vec<usize>),
}

struct Node {
    op: Op,
    value: Tensor,
}

pub const PROB_CLIP: f64 = 1e-15;

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn softmax_slice(x: &[f64], out: &mut [f64]) {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &v) in out.iter_mut().zip(x) {
        let e = (v - max).exp();
        *o = e;
        sum += e;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id].value
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        debug_assert!(value.all_finite(), "non-finite value produced by {op:?}");
        self.nodes.push(Node { op, value });
        self.nodes.len() - 1
    }

    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf, value)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(Op::MatMul(a, b), value))
    }

    pub fn add_bias(&mut self, x: NodeId, bias: NodeId) -> Result<NodeId> {
        let (xv, bv) = (self.value(x), self.value(bias));
        if bv.rows() != 1 || bv.cols() != xv.cols() {
            return Err(MugError::Contract(format!(
                "bias shape {:?} incompatible with input {:?}",
                bv.shape(),
                xv.shape()
            )));
        }
        let mut out = xv.clone();
        for r in 0..out.rows() {
            for (o, &b) in out.row_mut(r).iter_mut().zip(bv.data()) {
                *o += b;
            }
        }
        Ok(self.push(Op::AddBias(x, bias), out))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).add(self.value(b))?;
        Ok(self.push(Op::Add(a, b), value))
    }

    pub fn scale(&mut self, x: NodeId, c: f64) -> NodeId {
        let value = self.value(x).scale(c);
        self.push(Op::Scale(x, c), value)
    }

    pub fn mul_elem(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(MugError::Contract("mul_elem shape mismatch".into()));
        }
        let data = av.data().iter().zip(bv.data()).map(|(x, y)| x * y).collect();
        let value = Tensor::from_vec(av.rows(), av.cols(), data)?;
        Ok(self.push(Op::MulElem(a, b), value))
    }

    pub fn leaky_relu(&mut self, x: NodeId, slope: f64) -> NodeId {
        let value = self.value(x).map(|v| if v >= 0.0 { v } else { slope * v });
        self.push(Op::LeakyRelu(x, slope), value)
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let value = self.value(x).map(f64::tanh);
        self.push(Op::Tanh(x), value)
    }

    pub fn softmax_rows(&mut self, x: NodeId) -> NodeId {
        let xv = self.value(x);
        let mut out = Tensor::zeros(xv.rows(), xv.cols());
        for r in 0..xv.rows() {
            softmax_slice(xv.row(r), out.row_mut(r));
        }
        self.push(Op::SoftmaxRows(x), out)
    }

    pub fn log_softmax_rows(&mut self, x: NodeId) -> NodeId {
        let xv = self.value(x);
        let mut out = Tensor::zeros(xv.rows(), xv.cols());
        for r in 0..xv.rows() {
            let row = xv.row(r);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
            for (o, &v) in out.row_mut(r).iter_mut().zip(row) {
                *o = v - lse;
            }
        }
        self.push(Op::LogSoftmaxRows(x), out)
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let tensors: Vec<&Tensor> = parts.iter().map(|&p| self.value(p)).collect();
        let value = Tensor::concat_cols(&tensors)?;
        Ok(self.push(Op::ConcatCols(parts.to_vec()), value))
    }

    pub fn gather_rows(&mut self, x: NodeId, idx: &[usize]) -> Result<NodeId> {
        let value = self.value(x).gather_rows(idx)?;
        Ok(self.push(Op::GatherRows(x, idx.to_vec()), value))
    }

    fn check_offsets(offsets: &[usize], rows: usize) -> Result<()> {
        let ok = !offsets.is_empty()
            && offsets[0] == 0
            && *offsets.last().unwrap() == rows
            && offsets.windows(2).all(|w| w[0] <= w[1]);
        if !ok {
            return Err(MugError::Contract("malformed segment offsets".into()));
        }
        Ok(())
    }

    /// Softmax within each segment of an E x 1 column. Empty segments are a
    /// contract error: they cannot be normalized.
    pub fn segment_softmax(&mut self, x: NodeId, offsets: &[usize]) -> Result<NodeId> {
        let xv = self.value(x);
        if xv.cols() != 1 {
            return Err(MugError::Contract("segment_softmax expects a column".into()));
        }
        Self::check_offsets(offsets, xv.rows())?;
        if offsets.windows(2).any(|w| w[0] == w[1]) {
            return Err(MugError::Contract(
                "segment_softmax over an empty neighborhood".into(),
            ));
        }
        let mut out = Tensor::zeros(xv.rows(), 1);
        for w in offsets.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mut seg = vec![0.0; hi - lo];
            softmax_slice(&xv.data()[lo..hi], &mut seg);
            out.data_mut()[lo..hi].copy_from_slice(&seg);
        }
        Ok(self.push(Op::SegmentSoftmax(x, offsets.to_vec()), out))
    }

    /// Sum the rows of each segment: E x d -> S x d.
    pub fn segment_sum_rows(&mut self, x: NodeId, offsets: &[usize]) -> Result<NodeId> {
        let xv = self.value(x);
        Self::check_offsets(offsets, xv.rows())?;
        let segs = offsets.len() - 1;
        let mut out = Tensor::zeros(segs, xv.cols());
        for (s, w) in offsets.windows(2).enumerate() {
            for e in w[0]..w[1] {
                for (o, &v) in out.row_mut(s).iter_mut().zip(xv.row(e)) {
                    *o += v;
                }
            }
        }
        Ok(self.push(Op::SegmentSumRows(x, offsets.to_vec()), out))
    }

    pub fn row_scale(&mut self, x: NodeId, s: NodeId) -> Result<NodeId> {
        let (xv, sv) = (self.value(x), self.value(s));
        if sv.cols() != 1 || sv.rows() != xv.rows() {
            return Err(MugError::Contract(format!(
                "row_scale: scale shape {:?} incompatible with {:?}",
                sv.shape(),
                xv.shape()
            )));
        }
        let mut out = xv.clone();
        for r in 0..out.rows() {
            let c = sv.at(r, 0);
            for o in out.row_mut(r) {
                *o *= c;
            }
        }
        Ok(self.push(Op::RowScale(x, s), out))
    }

    pub fn sum_all(&mut self, x: NodeId) -> NodeId {
        let s = self.value(x).data().iter().sum();
        self.push(Op::SumAll(x), Tensor::scalar(s))
    }

    /// Mean negative log-probability of the target column per row, with the
    /// probability clipped to `[PROB_CLIP, 1]`.
    pub fn neg_log_pick_mean(&mut self, probs: NodeId, targets: &[usize]) -> Result<NodeId> {
        let pv = self.value(probs);
        if targets.len() != pv.rows() {
            return Err(MugError::Contract(format!(
                "targets length {} does not match {} rows",
                targets.len(),
                pv.rows()
            )));
        }
        if pv.rows() == 0 {
            return Err(MugError::Contract("loss over zero rows".into()));
        }
        let mut acc = 0.0;
        for (r, &t) in targets.iter().enumerate() {
            if t >= pv.cols() {
                return Err(MugError::Contract(format!(
                    "target index {} out of range ({} classes)",
                    t,
                    pv.cols()
                )));
            }
            acc -= pv.at(r, t).clamp(PROB_CLIP, 1.0).ln();
        }
        let value = Tensor::scalar(acc / targets.len() as f64);
        Ok(self.push(Op::NegLogPickMean(probs, targets.to_vec()), value))
    }

    /// Reverse pass from a scalar node. Returns one gradient slot per tape
    /// node (None for nodes the loss does not depend on).
    pub fn backward(&self, loss: NodeId) -> Result<Vec<Option<Tensor>>> {
        let lv = self.value(loss);
        if lv.shape() != (1, 1) {
            return Err(MugError::Contract(format!(
                "backward from non-scalar node of shape {:?}",
                lv.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss] = Some(Tensor::scalar(1.0));

        for id in (0..=loss).rev() {
            let Some(g) = grads[id].take() else { continue };
            self.accumulate_parents(id, &g, &mut grads)?;
            grads[id] = Some(g);
        }
        for g in grads.iter().flatten() {
            if !g.all_finite() {
                return Err(MugError::Contract(
                    "non-finite gradient produced by backward pass".into(),
                ));
            }
        }
        Ok(grads)
    }

    fn accumulate_parents(
        &self,
        id: NodeId,
        g: &Tensor,
        grads: &mut [Option<Tensor>],
    ) -> Result<()> {
        let add_to = |grads: &mut [Option<Tensor>], p: NodeId, delta: Tensor| -> Result<()> {
            match &mut grads[p] {
                Some(acc) => {
                    *acc = acc.add(&delta)?;
                }
                slot @ None => *slot = Some(delta),
            }
            Ok(())
        };

        match &self.nodes[id].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                add_to(grads, *a, g.matmul(&bv.transpose())?)?;
                add_to(grads, *b, av.transpose().matmul(g)?)?;
            }
            Op::AddBias(x, bias) => {
                let mut db = Tensor::zeros(1, g.cols());
                for r in 0..g.rows() {
                    for (o, &v) in db.row_mut(0).iter_mut().zip(g.row(r)) {
                        *o += v;
                    }
                }
                add_to(grads, *x, g.clone())?;
                add_to(grads, *bias, db)?;
            }
            Op::Add(a, b) => {
                add_to(grads, *a, g.clone())?;
                add_to(grads, *b, g.clone())?;
            }
            Op::Scale(x, c) => {
                add_to(grads, *x, g.scale(*c))?;
            }
            Op::MulElem(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let da = g
                    .data()
                    .iter()
                    .zip(bv.data())
                    .map(|(gv, y)| gv * y)
                    .collect();
                let db = g
                    .data()
                    .iter()
                    .zip(av.data())
                    .map(|(gv, x)| gv * x)
                    .collect();
                add_to(grads, *a, Tensor::from_vec(g.rows(), g.cols(), da)?)?;
                add_to(grads, *b, Tensor::from_vec(g.rows(), g.cols(), db)?)?;
            }
            Op::LeakyRelu(x, slope) => {
                let xv = self.value(*x);
                let data = g
                    .data()
                    .iter()
                    .zip(xv.data())
                    .map(|(gv, &v)| if v >= 0.0 { *gv } else { slope * gv })
                    .collect();
                add_to(grads, *x, Tensor::from_vec(g.rows(), g.cols(), data)?)?;
            }
            Op::Tanh(x) => {
                let yv = &self.nodes[id].value;
                let data = g
                    .data()
                    .iter()
                    .zip(yv.data())
                    .map(|(gv, y)| gv * (1.0 - y * y))
                    .collect();
                add_to(grads, *x, Tensor::from_vec(g.rows(), g.cols(), data)?)?;
            }
            Op::SoftmaxRows(x) => {
                let yv = &self.nodes[id].value;
                let mut dx = Tensor::zeros(g.rows(), g.cols());
                for r in 0..g.rows() {
                    let y = yv.row(r);
                    let gr = g.row(r);
                    let dot: f64 = y.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for (o, (&yi, &gi)) in dx.row_mut(r).iter_mut().zip(y.iter().zip(gr)) {
                        *o = yi * (gi - dot);
                    }
                }
                add_to(grads, *x, dx)?;
            }
            Op::LogSoftmaxRows(x) => {
                let xv = self.value(*x);
                let mut dx = Tensor::zeros(g.rows(), g.cols());
                for r in 0..g.rows() {
                    let gr = g.row(r);
                    let gsum: f64 = gr.iter().sum();
                    let mut sm = vec![0.0; g.cols()];
                    softmax_slice(xv.row(r), &mut sm);
                    for (o, (&gi, &si)) in dx.row_mut(r).iter_mut().zip(gr.iter().zip(&sm)) {
                        *o = gi - si * gsum;
                    }
                }
                add_to(grads, *x, dx)?;
            }
            Op::ConcatCols(parts) => {
                let mut at = 0;
                for &p in parts {
                    let pc = self.value(p).cols();
                    let mut dp = Tensor::zeros(g.rows(), pc);
                    for r in 0..g.rows() {
                        dp.row_mut(r).copy_from_slice(&g.row(r)[at..at + pc]);
                    }
                    add_to(grads, p, dp)?;
                    at += pc;
                }
            }
            Op::GatherRows(x, idx) => {
                let xv = self.value(*x);
                let mut dx = Tensor::zeros(xv.rows(), xv.cols());
                for (e, &r) in idx.iter().enumerate() {
                    for (o, &v) in dx.row_mut(r).iter_mut().zip(g.row(e)) {
                        *o += v;
                    }
                }
                add_to(grads, *x, dx)?;
            }
            Op::SegmentSoftmax(x, offsets) => {
                let yv = &self.nodes[id].value;
                let mut dx = Tensor::zeros(g.rows(), 1);
                for w in offsets.windows(2) {
                    let (lo, hi) = (w[0], w[1]);
                    let y = &yv.data()[lo..hi];
                    let gr = &g.data()[lo..hi];
                    let dot: f64 = y.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for (o, (&yi, &gi)) in
                        dx.data_mut()[lo..hi].iter_mut().zip(y.iter().zip(gr))
                    {
                        *o = yi * (gi - dot);
                    }
                }
                add_to(grads, *x, dx)?;
            }
            Op::SegmentSumRows(x, offsets) => {
                let xv = self.value(*x);
                let mut dx = Tensor::zeros(xv.rows(), xv.cols());
                for (s, w) in offsets.windows(2).enumerate() {
                    for e in w[0]..w[1] {
                        dx.row_mut(e).copy_from_slice(g.row(s));
                    }
                }
                add_to(grads, *x, dx)?;
            }
            Op::RowScale(x, s) => {
                let (xv, sv) = (self.value(*x), self.value(*s));
                let mut dx = Tensor::zeros(xv.rows(), xv.cols());
                let mut ds = Tensor::zeros(sv.rows(), 1);
                for r in 0..xv.rows() {
                    let c = sv.at(r, 0);
                    let mut acc = 0.0;
                    for ((o, &gv), &xvv) in dx.row_mut(r).iter_mut().zip(g.row(r)).zip(xv.row(r))
                    {
                        *o = gv * c;
                        acc += gv * xvv;
                    }
                    ds.set(r, 0, acc);
                }
                add_to(grads, *x, dx)?;
                add_to(grads, *s, ds)?;
            }
            Op::SumAll(x) => {
                let xv = self.value(*x);
                let gs = g.item()?;
                add_to(grads, *x, Tensor::zeros(xv.rows(), xv.cols()).map(|_| gs))?;
            }
            Op::NegLogPickMean(p, targets) => {
                let pv = self.value(*p);
                let gs = g.item()?;
                let n = targets.len() as f64;
                let mut dp = Tensor::zeros(pv.rows(), pv.cols());
                for (r, &t) in targets.iter().enumerate() {
                    let raw = pv.at(r, t);
                    // Zero gradient outside the clip range.
                    if raw >= PROB_CLIP {
                        let pc = raw.clamp(PROB_CLIP, 1.0);
                        dp.set(r, t, -gs / (n * pc));
                    }
                }
                add_to(grads, *p, dp)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_leaves_has_unit_gradient() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(2, 2, vec![1.0, -2.0, 3.0, 4.0]).unwrap());
        let loss = tape.sum_all(x);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads[x].as_ref().unwrap().data(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn half_squared_norm_gradient_is_theta() {
        let mut tape = Tape::new();
        let theta = Tensor::from_vec(1, 3, vec![0.5, -1.5, 2.0]).unwrap();
        let x = tape.leaf(theta.clone());
        let sq = tape.mul_elem(x, x).unwrap();
        let s = tape.sum_all(sq);
        let loss = tape.scale(s, 0.5);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads[x].as_ref().unwrap().data(), theta.data());
    }

    #[test]
    fn softmax_rows_sum_to_one_and_are_positive() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(2, 4, vec![1.0, 2.0, 3.0, 4.0, -1.0, 0.0, 1.0, 2.0]).unwrap());
        let y = tape.softmax_rows(x);
        for r in 0..2 {
            let row = tape.value(y).row(r);
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn softmax_direct_evaluation_oracle() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(1, 3, vec![1.0, 2.0, 3.0]).unwrap());
        let y = tape.softmax_rows(x);
        let exps = [1.0f64.exp(), 2.0f64.exp(), 3.0f64.exp()];
        let sum: f64 = exps.iter().sum();
        for (got, want) in tape.value(y).row(0).iter().zip(exps.iter().map(|e| e / sum)) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((tape.value(y).at(0, 0) - 0.0900).abs() < 5e-5);
        assert!((tape.value(y).at(0, 1) - 0.2447).abs() < 5e-5);
        assert!((tape.value(y).at(0, 2) - 0.6652).abs() < 5e-5);
    }

    #[test]
    fn segment_softmax_normalizes_each_segment() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::column(&[0.0, 1.0, 2.0, -1.0, 5.0]));
        let y = tape.segment_softmax(x, &[0, 3, 5]).unwrap();
        let v = tape.value(y).data();
        assert!((v[0] + v[1] + v[2] - 1.0).abs() < 1e-12);
        assert!((v[3] + v[4] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_segment_is_contract_error() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::column(&[0.0, 1.0]));
        assert!(tape.segment_softmax(x, &[0, 0, 2]).is_err());
    }

    #[test]
    fn backward_from_non_scalar_is_error() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::zeros(2, 2));
        assert!(tape.backward(x).is_err());
    }
}
