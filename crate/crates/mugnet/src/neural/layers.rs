//! Layer primitives: dense affine maps, activations, the multi-head graph
//! attention layer, the two-layer MLP, and cross-entropy. Each has a plain
//! value-level entry point; the `tape_*` builders record the same
//! computation on a [`Tape`] for gradient propagation.

use crate::error::{MugError, Result};
use crate::graph::ModalityGraph;
use crate::neural::tape::{NodeId, Tape, PROB_CLIP};
use crate::neural::tensor::Tensor;

/// Negative slope shared by every LeakyReLU in the model.
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    LeakyRelu(f64),
    Tanh,
    SoftmaxRows,
    LogSoftmaxRows,
}

pub fn apply_activation(x: &Tensor, kind: Activation) -> Tensor {
    let mut tape = Tape::new();
    let id = tape.leaf(x.clone());
    let out = match kind {
        Activation::LeakyRelu(slope) => tape.leaky_relu(id, slope),
        Activation::Tanh => tape.tanh(id),
        Activation::SoftmaxRows => tape.softmax_rows(id),
        Activation::LogSoftmaxRows => tape.log_softmax_rows(id),
    };
    tape.value(out).clone()
}

/// `X W (+ b)` with `b` broadcast per row.
pub fn dense_affine(x: &Tensor, w: &Tensor, b: Option<&Tensor>) -> Result<Tensor> {
    let mut out = x.matmul(w)?;
    if let Some(bias) = b {
        if bias.rows() != 1 || bias.cols() != out.cols() {
            return Err(MugError::Contract(format!(
                "bias shape {:?} incompatible with output {:?}",
                bias.shape(),
                out.shape()
            )));
        }
        for r in 0..out.rows() {
            for (o, &bv) in out.row_mut(r).iter_mut().zip(bias.data()) {
                *o += bv;
            }
        }
    }
    Ok(out)
}

/// One attention head: projection `w` (d_in x d_head) and attention vector
/// `a` (2*d_head x 1), applied to the concatenation of the destination and
/// source projections.
#[derive(Debug, Clone, PartialEq)]
pub struct GatHeadParams {
    pub w: Tensor,
    pub a: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatLayerParams {
    pub heads: Vec<GatHeadParams>,
    pub leaky_slope: f64,
}

impl GatLayerParams {
    pub fn validate(&self) -> Result<()> {
        if self.heads.is_empty() {
            return Err(MugError::Contract("GAT layer needs at least one head".into()));
        }
        let d_in = self.heads[0].w.rows();
        let d_head = self.heads[0].w.cols();
        for h in &self.heads {
            if h.w.shape() != (d_in, d_head) {
                return Err(MugError::Contract("GAT heads disagree on shape".into()));
            }
            if h.a.shape() != (2 * d_head, 1) {
                return Err(MugError::Contract(format!(
                    "attention vector shape {:?}, expected {:?}",
                    h.a.shape(),
                    (2 * d_head, 1)
                )));
            }
        }
        Ok(())
    }

    pub fn d_in(&self) -> usize {
        self.heads[0].w.rows()
    }

    pub fn d_head(&self) -> usize {
        self.heads[0].w.cols()
    }

    pub fn head_count(&self) -> usize {
        self.heads.len()
    }
}

/// Tape node ids of one head's parameters.
#[derive(Debug, Clone, Copy)]
pub struct GatHeadIds {
    pub w: NodeId,
    pub a: NodeId,
}

/// Record one GAT layer on the tape. `src`/`offsets` is the
/// destination-grouped message structure of the graph (self-loops
/// included, so no segment is empty). Heads are concatenated when
/// `final_layer` is false and averaged when true.
pub fn tape_gat_layer(
    tape: &mut Tape,
    src: &[usize],
    offsets: &[usize],
    h: NodeId,
    heads: &[GatHeadIds],
    leaky_slope: f64,
    final_layer: bool,
) -> Result<NodeId> {
    if heads.is_empty() {
        return Err(MugError::Contract("GAT layer needs at least one head".into()));
    }
    let n = offsets.len() - 1;
    if tape.value(h).rows() != n {
        return Err(MugError::Contract(format!(
            "feature rows {} do not match node count {}",
            tape.value(h).rows(),
            n
        )));
    }
    // Destination index of every edge, in segment order.
    let mut dst = Vec::with_capacity(src.len());
    for (i, w) in offsets.windows(2).enumerate() {
        dst.extend(std::iter::repeat(i).take(w[1] - w[0]));
    }

    let mut head_outputs = Vec::with_capacity(heads.len());
    for ids in heads {
        let d_head = tape.value(ids.w).cols();
        if tape.value(ids.a).shape() != (2 * d_head, 1) {
            return Err(MugError::Contract("attention vector shape mismatch".into()));
        }
        let z = tape.matmul(h, ids.w)?;
        let dst_half: Vec<usize> = (0..d_head).collect();
        let src_half: Vec<usize> = (d_head..2 * d_head).collect();
        let a_dst = tape.gather_rows(ids.a, &dst_half)?;
        let a_src = tape.gather_rows(ids.a, &src_half)?;
        let s_dst = tape.matmul(z, a_dst)?;
        let s_src = tape.matmul(z, a_src)?;
        let e_dst = tape.gather_rows(s_dst, &dst)?;
        let e_src = tape.gather_rows(s_src, src)?;
        let sum = tape.add(e_dst, e_src)?;
        let logits = tape.leaky_relu(sum, leaky_slope);
        let alpha = tape.segment_softmax(logits, offsets)?;
        let msgs = tape.gather_rows(z, src)?;
        let weighted = tape.row_scale(msgs, alpha)?;
        head_outputs.push(tape.segment_sum_rows(weighted, offsets)?);
    }

    if final_layer {
        let mut acc = head_outputs[0];
        for &o in &head_outputs[1..] {
            acc = tape.add(acc, o)?;
        }
        Ok(tape.scale(acc, 1.0 / heads.len() as f64))
    } else {
        tape.concat_cols(&head_outputs)
    }
}

/// Value-level GAT layer over a modality graph.
pub fn gat_layer_forward(
    graph: &ModalityGraph,
    h: &Tensor,
    params: &GatLayerParams,
    final_layer: bool,
) -> Result<Tensor> {
    params.validate()?;
    if h.rows() != graph.node_count() {
        return Err(MugError::Contract(format!(
            "feature rows {} do not match node count {}",
            h.rows(),
            graph.node_count()
        )));
    }
    let (src, offsets) = graph.message_structure();
    let mut tape = Tape::new();
    let h_id = tape.leaf(h.clone());
    let head_ids: Vec<GatHeadIds> = params
        .heads
        .iter()
        .map(|head| GatHeadIds {
            w: tape.leaf(head.w.clone()),
            a: tape.leaf(head.a.clone()),
        })
        .collect();
    let out = tape_gat_layer(
        &mut tape,
        &src,
        &offsets,
        h_id,
        &head_ids,
        params.leaky_slope,
        final_layer,
    )?;
    Ok(tape.value(out).clone())
}

/// Two-layer perceptron: dense, LeakyReLU, dense. Output is logits.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub w1: Tensor,
    pub b1: Option<Tensor>,
    pub w2: Tensor,
    pub b2: Option<Tensor>,
}

impl MlpParams {
    pub fn validate(&self) -> Result<()> {
        if self.w1.cols() != self.w2.rows() {
            return Err(MugError::Contract(format!(
                "mlp dimension chain broken: {:?} then {:?}",
                self.w1.shape(),
                self.w2.shape()
            )));
        }
        if let Some(b) = &self.b1 {
            if b.shape() != (1, self.w1.cols()) {
                return Err(MugError::Contract("mlp b1 shape mismatch".into()));
            }
        }
        if let Some(b) = &self.b2 {
            if b.shape() != (1, self.w2.cols()) {
                return Err(MugError::Contract("mlp b2 shape mismatch".into()));
            }
        }
        Ok(())
    }
}

/// Tape node ids of the MLP parameters.
#[derive(Debug, Clone, Copy)]
pub struct MlpIds {
    pub w1: NodeId,
    pub b1: Option<NodeId>,
    pub w2: NodeId,
    pub b2: Option<NodeId>,
}

pub fn tape_mlp2(tape: &mut Tape, x: NodeId, ids: &MlpIds) -> Result<NodeId> {
    let mut h = tape.matmul(x, ids.w1)?;
    if let Some(b1) = ids.b1 {
        h = tape.add_bias(h, b1)?;
    }
    let act = tape.leaky_relu(h, DEFAULT_LEAKY_SLOPE);
    let mut out = tape.matmul(act, ids.w2)?;
    if let Some(b2) = ids.b2 {
        out = tape.add_bias(out, b2)?;
    }
    Ok(out)
}

pub fn mlp2_forward(x: &Tensor, params: &MlpParams) -> Result<Tensor> {
    params.validate()?;
    let mut tape = Tape::new();
    let x_id = tape.leaf(x.clone());
    let ids = MlpIds {
        w1: tape.leaf(params.w1.clone()),
        b1: params.b1.as_ref().map(|b| tape.leaf(b.clone())),
        w2: tape.leaf(params.w2.clone()),
        b2: params.b2.as_ref().map(|b| tape.leaf(b.clone())),
    };
    let out = tape_mlp2(&mut tape, x_id, &ids)?;
    Ok(tape.value(out).clone())
}

/// Mean of `-log p[target]` with probabilities clipped to `[1e-15, 1]`.
/// Rows must already sum to 1 (within 1e-6).
pub fn cross_entropy_loss(probabilities: &Tensor, targets: &[usize]) -> Result<f64> {
    if probabilities.rows() != targets.len() {
        return Err(MugError::Contract(format!(
            "{} probability rows vs {} targets",
            probabilities.rows(),
            targets.len()
        )));
    }
    if targets.is_empty() {
        return Err(MugError::Contract("cross-entropy over zero rows".into()));
    }
    for r in 0..probabilities.rows() {
        let sum: f64 = probabilities.row(r).iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(MugError::Contract(format!(
                "probability row {r} sums to {sum}, not 1"
            )));
        }
    }
    let mut acc = 0.0;
    for (r, &t) in targets.iter().enumerate() {
        if t >= probabilities.cols() {
            return Err(MugError::Contract(format!(
                "target {t} out of range ({} classes)",
                probabilities.cols()
            )));
        }
        acc -= probabilities.at(r, t).clamp(PROB_CLIP, 1.0).ln();
    }
    Ok(acc / targets.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_affine_identity_returns_weights() {
        let w = Tensor::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let eye = Tensor::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let out = dense_affine(&eye, &w, None).unwrap();
        assert_eq!(out, w);
    }

    #[test]
    fn dense_affine_scalar_case() {
        let x = Tensor::scalar(2.0);
        let w = Tensor::scalar(3.0);
        let b = Tensor::scalar(1.0);
        let out = dense_affine(&x, &w, Some(&b)).unwrap();
        assert_eq!(out.item().unwrap(), 7.0);
    }

    #[test]
    fn leaky_relu_definition() {
        let x = Tensor::scalar(-1.0);
        let y = apply_activation(&x, Activation::LeakyRelu(0.01));
        assert!((y.item().unwrap() + 0.01).abs() < 1e-15);
    }

    #[test]
    fn softmax_equal_row_is_uniform() {
        let x = Tensor::from_vec(1, 4, vec![3.0; 4]).unwrap();
        let y = apply_activation(&x, Activation::SoftmaxRows);
        for &v in y.data() {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn log_softmax_matches_log_of_softmax() {
        let x = Tensor::from_vec(2, 3, vec![0.1, -2.0, 1.5, 4.0, 4.0, 4.0]).unwrap();
        let sm = apply_activation(&x, Activation::SoftmaxRows);
        let lsm = apply_activation(&x, Activation::LogSoftmaxRows);
        for (a, b) in sm.data().iter().zip(lsm.data()) {
            assert!((a.ln() - b).abs() < 1e-12);
        }
    }

    fn tiny_gat_params(d_in: usize, d_head: usize, heads: usize, scale: f64) -> GatLayerParams {
        let heads = (0..heads)
            .map(|h| {
                let w = Tensor::from_vec(
                    d_in,
                    d_head,
                    (0..d_in * d_head)
                        .map(|i| scale * ((i + h) as f64 * 0.37 - 0.5))
                        .collect(),
                )
                .unwrap();
                let a = Tensor::from_vec(
                    2 * d_head,
                    1,
                    (0..2 * d_head)
                        .map(|i| scale * ((i * (h + 2)) as f64 * 0.21 - 0.3))
                        .collect(),
                )
                .unwrap();
                GatHeadParams { w, a }
            })
            .collect();
        GatLayerParams {
            heads,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        }
    }

    #[test]
    fn gat_single_node_returns_projection() {
        let g = ModalityGraph::from_edges(1, &[]).unwrap();
        let params = tiny_gat_params(3, 2, 1, 1.0);
        let h = Tensor::from_vec(1, 3, vec![1.0, -2.0, 0.5]).unwrap();
        let out = gat_layer_forward(&g, &h, &params, true).unwrap();
        let z = h.matmul(&params.heads[0].w).unwrap();
        for (a, b) in out.data().iter().zip(z.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gat_identical_features_complete_graph_symmetric_output() {
        let edges: Vec<(usize, usize)> = (0..4)
            .flat_map(|i| ((i + 1)..4).map(move |j| (i, j)))
            .collect();
        let g = ModalityGraph::from_edges(4, &edges).unwrap();
        let params = tiny_gat_params(3, 2, 2, 0.7);
        let h = Tensor::from_rows(&vec![vec![0.3, -1.0, 2.0]; 4]).unwrap();
        let out = gat_layer_forward(&g, &h, &params, false).unwrap();
        for r in 1..4 {
            for c in 0..out.cols() {
                assert!((out.at(r, c) - out.at(0, c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gat_two_node_path_matches_hand_trace() {
        // Direct formula evaluation for a 2-node path, one head.
        let g = ModalityGraph::from_edges(2, &[(0, 1)]).unwrap();
        let w = Tensor::from_vec(2, 1, vec![0.5, -0.25]).unwrap();
        let a = Tensor::from_vec(2, 1, vec![0.3, -0.7]).unwrap();
        let params = GatLayerParams {
            heads: vec![GatHeadParams {
                w: w.clone(),
                a: a.clone(),
            }],
            leaky_slope: 0.2,
        };
        let h = Tensor::from_vec(2, 2, vec![1.0, 2.0, -1.0, 0.5]).unwrap();
        let out = gat_layer_forward(&g, &h, &params, true).unwrap();

        let z0 = 1.0 * 0.5 + 2.0 * (-0.25);
        let z1 = -1.0 * 0.5 + 0.5 * (-0.25);
        let leaky = |v: f64| if v >= 0.0 { v } else { 0.2 * v };
        // Node 0 neighborhood {0, 1}: logits a . [z0 || z_j].
        let l00 = leaky(0.3 * z0 - 0.7 * z0);
        let l01 = leaky(0.3 * z0 - 0.7 * z1);
        let m = l00.max(l01);
        let (e00, e01) = ((l00 - m).exp(), (l01 - m).exp());
        let expect0 = (e00 * z0 + e01 * z1) / (e00 + e01);
        // Node 1 neighborhood {0, 1}.
        let l10 = leaky(0.3 * z1 - 0.7 * z0);
        let l11 = leaky(0.3 * z1 - 0.7 * z1);
        let m1 = l10.max(l11);
        let (e10, e11) = ((l10 - m1).exp(), (l11 - m1).exp());
        let expect1 = (e10 * z0 + e11 * z1) / (e10 + e11);

        assert!((out.at(0, 0) - expect0).abs() < 1e-12);
        assert!((out.at(1, 0) - expect1).abs() < 1e-12);
    }

    #[test]
    fn gat_attention_coefficients_sum_to_one() {
        let g = ModalityGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();
        let params = tiny_gat_params(2, 2, 1, 0.9);
        let h = Tensor::from_vec(5, 2, (0..10).map(|i| (i as f64) * 0.3 - 1.2).collect()).unwrap();
        let (src, offsets) = g.message_structure();
        let mut tape = Tape::new();
        let h_id = tape.leaf(h);
        let ids = GatHeadIds {
            w: tape.leaf(params.heads[0].w.clone()),
            a: tape.leaf(params.heads[0].a.clone()),
        };
        // Rebuild just the attention column to inspect it.
        let z = tape.matmul(h_id, ids.w).unwrap();
        let d_head = 2;
        let a_dst = tape.gather_rows(ids.a, &[0, 1]).unwrap();
        let a_src = tape.gather_rows(ids.a, &[d_head, d_head + 1]).unwrap();
        let s_dst = tape.matmul(z, a_dst).unwrap();
        let s_src = tape.matmul(z, a_src).unwrap();
        let mut dst = Vec::new();
        for (i, w) in offsets.windows(2).enumerate() {
            dst.extend(std::iter::repeat(i).take(w[1] - w[0]));
        }
        let e_dst = tape.gather_rows(s_dst, &dst).unwrap();
        let e_src = tape.gather_rows(s_src, &src).unwrap();
        let sum = tape.add(e_dst, e_src).unwrap();
        let logits = tape.leaky_relu(sum, 0.2);
        let alpha = tape.segment_softmax(logits, &offsets).unwrap();
        let av = tape.value(alpha);
        for w in offsets.windows(2) {
            let s: f64 = av.data()[w[0]..w[1]].iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn gat_permutation_equivariance() {
        let edges = [(0, 1), (1, 2), (0, 3), (2, 3)];
        let g = ModalityGraph::from_edges(4, &edges).unwrap();
        let params = tiny_gat_params(3, 2, 2, 0.8);
        let h = Tensor::from_vec(4, 3, (0..12).map(|i| (i as f64) * 0.17 - 1.0).collect()).unwrap();
        let out = gat_layer_forward(&g, &h, &params, false).unwrap();

        // Relabel nodes with pi = [2, 0, 3, 1] (new index of old node i).
        let pi = [2usize, 0, 3, 1];
        let p_edges: Vec<(usize, usize)> =
            edges.iter().map(|&(a, b)| (pi[a], pi[b])).collect();
        let pg = ModalityGraph::from_edges(4, &p_edges).unwrap();
        let mut ph = Tensor::zeros(4, 3);
        for old in 0..4 {
            ph.row_mut(pi[old]).copy_from_slice(h.row(old));
        }
        let pout = gat_layer_forward(&pg, &ph, &params, false).unwrap();
        for old in 0..4 {
            for c in 0..out.cols() {
                assert!((out.at(old, c) - pout.at(pi[old], c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mlp_zero_weights_give_zero_logits() {
        let params = MlpParams {
            w1: Tensor::zeros(3, 2),
            b1: Some(Tensor::zeros(1, 2)),
            w2: Tensor::zeros(2, 4),
            b2: Some(Tensor::zeros(1, 4)),
        };
        let x = Tensor::from_vec(2, 3, vec![1.0; 6]).unwrap();
        let out = mlp2_forward(&x, &params).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
        let probs = apply_activation(&out, Activation::SoftmaxRows);
        assert!(probs.data().iter().all(|&v| (v - 0.25).abs() < 1e-12));
    }

    #[test]
    fn mlp_matches_layerwise_oracle() {
        let params = MlpParams {
            w1: Tensor::from_vec(2, 3, vec![0.1, -0.2, 0.3, 0.4, 0.5, -0.6]).unwrap(),
            b1: Some(Tensor::from_vec(1, 3, vec![0.05, -0.1, 0.2]).unwrap()),
            w2: Tensor::from_vec(3, 2, vec![1.0, -1.0, 0.5, 0.25, -0.75, 0.1]).unwrap(),
            b2: Some(Tensor::from_vec(1, 2, vec![0.0, 0.3]).unwrap()),
        };
        let x = Tensor::from_vec(2, 2, vec![1.5, -0.5, 0.0, 2.0]).unwrap();
        let got = mlp2_forward(&x, &params).unwrap();
        let h = dense_affine(&x, &params.w1, params.b1.as_ref()).unwrap();
        let act = apply_activation(&h, Activation::LeakyRelu(DEFAULT_LEAKY_SLOPE));
        let want = dense_affine(&act, &params.w2, params.b2.as_ref()).unwrap();
        for (a, b) in got.data().iter().zip(want.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_entropy_perfect_prediction_is_zero() {
        let p = Tensor::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let loss = cross_entropy_loss(&p, &[0, 1]).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn cross_entropy_uniform_is_log_k() {
        let p = Tensor::from_vec(1, 4, vec![0.25; 4]).unwrap();
        let loss = cross_entropy_loss(&p, &[2]).unwrap();
        assert!((loss - 4.0f64.ln()).abs() < 1e-12);
        assert!((loss - 1.3863).abs() < 5e-5);
    }

    #[test]
    fn cross_entropy_clips_zero_probability() {
        let p = Tensor::from_vec(1, 2, vec![0.0, 1.0]).unwrap();
        let loss = cross_entropy_loss(&p, &[0]).unwrap();
        assert!(loss.is_finite());
        assert!((loss - (-(1e-15f64).ln())).abs() < 1e-9);
        assert!((loss - 34.54).abs() < 0.01);
    }

    #[test]
    fn cross_entropy_rejects_bad_rows_and_targets() {
        let p = Tensor::from_vec(1, 2, vec![0.9, 0.3]).unwrap();
        assert!(cross_entropy_loss(&p, &[0]).is_err());
        let ok = Tensor::from_vec(1, 2, vec![0.5, 0.5]).unwrap();
        assert!(cross_entropy_loss(&ok, &[5]).is_err());
    }
}
