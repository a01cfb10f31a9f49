//! MuGNet assembly: one GAT encoder stack per modality, per-sample
//! attention fusion of the three structure-aware embeddings into a single
//! convex combination, and a two-layer MLP softmax head.

use crate::dataset::ModalityFeatures;
use crate::error::{MugError, Result};
use crate::graph::MultiplexGraph;
use crate::neural::layers::{tape_gat_layer, tape_mlp2, GatHeadIds, MlpIds};
use crate::neural::tape::{NodeId, Tape};
use crate::neural::{
    GatHeadParams, GatLayerParams, GradientSet, MlpParams, NamedTensors, Tensor,
    DEFAULT_LEAKY_SLOPE,
};
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

pub const MODALITY_NAMES: [&str; 3] = ["tab", "txt", "img"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// GAT layers per modality encoder.
    pub gat_layers: usize,
    pub heads: usize,
    /// Shared structure-aware embedding width (all three encoders).
    pub d_h: usize,
    /// Fusion attention width.
    pub d_a: usize,
    pub n_classes: usize,
    /// Classifier hidden width; defaults to `d_h / 2`.
    pub cls_hidden: Option<usize>,
}

impl ModelConfig {
    pub fn with_classes(n_classes: usize) -> Self {
        ModelConfig {
            gat_layers: 2,
            heads: 4,
            d_h: 64,
            d_a: 32,
            n_classes,
            cls_hidden: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gat_layers == 0
            || self.heads == 0
            || self.d_h == 0
            || self.d_a == 0
            || self.n_classes == 0
        {
            return Err(MugError::Config("model dimensions must be positive".into()));
        }
        if self.d_h % self.heads != 0 {
            return Err(MugError::Config(format!(
                "d_h = {} must be divisible by heads = {}",
                self.d_h, self.heads
            )));
        }
        if self.cls_hidden == Some(0) {
            return Err(MugError::Config("classifier hidden width must be positive".into()));
        }
        Ok(())
    }

    pub fn classifier_hidden(&self) -> usize {
        self.cls_hidden.unwrap_or((self.d_h / 2).max(1))
    }
}

/// All learnable state: encoder stacks per modality, fusion parameters
/// (per-modality projection, shared scoring vector), classifier MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct MuGNetParams {
    pub encoders: [Vec<GatLayerParams>; 3],
    pub fuse_w1: [Tensor; 3],
    pub fuse_w2: Tensor,
    pub classifier: MlpParams,
}

/// Per-sample fusion diagnostics: the three attention weights (columns in
/// modality order), the raw fusion logits, and the fused embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionTrace {
    pub alpha: Tensor,
    pub logits: Tensor,
    pub fused: Tensor,
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub probabilities: Tensor,
    pub trace: FusionTrace,
    pub loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MuGNet {
    pub config: ModelConfig,
    pub params: MuGNetParams,
}

fn xavier(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> Tensor {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * limit)
        .collect();
    Tensor::from_vec(rows, cols, data).expect("sized data")
}

struct ParamIds {
    encoders: [Vec<Vec<GatHeadIds>>; 3],
    fuse_w1: [NodeId; 3],
    fuse_w2: NodeId,
    classifier: MlpIds,
}

impl MuGNet {
    /// Seeded Xavier-uniform initialization for the given per-modality
    /// input widths.
    pub fn init(config: ModelConfig, input_dims: [usize; 3], seed: u64) -> Result<MuGNet> {
        config.validate()?;
        use rand::SeedableRng;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let build_stack = |rng: &mut ChaCha20Rng, d_in: usize| -> Vec<GatLayerParams> {
            (0..config.gat_layers)
                .map(|li| {
                    let first_in = if li == 0 { d_in } else { config.d_h };
                    let final_layer = li + 1 == config.gat_layers;
                    let d_head = if final_layer {
                        config.d_h
                    } else {
                        config.d_h / config.heads
                    };
                    let heads = (0..config.heads)
                        .map(|_| GatHeadParams {
                            w: xavier(rng, first_in, d_head),
                            a: xavier(rng, 2 * d_head, 1),
                        })
                        .collect();
                    GatLayerParams {
                        heads,
                        leaky_slope: DEFAULT_LEAKY_SLOPE,
                    }
                })
                .collect()
        };
        let encoders = [
            build_stack(&mut rng, input_dims[0]),
            build_stack(&mut rng, input_dims[1]),
            build_stack(&mut rng, input_dims[2]),
        ];
        let fuse_w1 = [
            xavier(&mut rng, config.d_h, config.d_a),
            xavier(&mut rng, config.d_h, config.d_a),
            xavier(&mut rng, config.d_h, config.d_a),
        ];
        let fuse_w2 = xavier(&mut rng, config.d_a, 1);
        let hidden = config.classifier_hidden();
        let classifier = MlpParams {
            w1: xavier(&mut rng, config.d_h, hidden),
            b1: Some(Tensor::zeros(1, hidden)),
            w2: xavier(&mut rng, hidden, config.n_classes),
            b2: Some(Tensor::zeros(1, config.n_classes)),
        };
        Ok(MuGNet {
            config,
            params: MuGNetParams {
                encoders,
                fuse_w1,
                fuse_w2,
                classifier,
            },
        })
    }

    /// Flatten parameters into the checkpoint container, fixed order.
    pub fn to_named_tensors(&self) -> NamedTensors {
        let mut out = NamedTensors::new();
        for (m, stack) in self.params.encoders.iter().enumerate() {
            for (li, layer) in stack.iter().enumerate() {
                for (hi, head) in layer.heads.iter().enumerate() {
                    out.push(
                        format!("enc.{}.{li}.{hi}.w", MODALITY_NAMES[m]),
                        head.w.clone(),
                    );
                    out.push(
                        format!("enc.{}.{li}.{hi}.a", MODALITY_NAMES[m]),
                        head.a.clone(),
                    );
                }
            }
        }
        for (m, w1) in self.params.fuse_w1.iter().enumerate() {
            out.push(format!("fuse.{}.w1", MODALITY_NAMES[m]), w1.clone());
        }
        out.push("fuse.w2", self.params.fuse_w2.clone());
        out.push("cls.w1", self.params.classifier.w1.clone());
        if let Some(b1) = &self.params.classifier.b1 {
            out.push("cls.b1", b1.clone());
        }
        out.push("cls.w2", self.params.classifier.w2.clone());
        if let Some(b2) = &self.params.classifier.b2 {
            out.push("cls.b2", b2.clone());
        }
        out
    }

    /// Replace parameter values from a flattened container (shapes must
    /// match the current architecture).
    pub fn load_named_tensors(&mut self, named: &NamedTensors) -> Result<()> {
        let current = self.to_named_tensors();
        if !current.congruent_with(named) {
            return Err(MugError::Contract(
                "checkpoint does not match model architecture".into(),
            ));
        }
        let mut it = named.tensors().iter();
        let mut next = || it.next().expect("congruent sets have equal length").clone();
        for stack in &mut self.params.encoders {
            for layer in stack {
                for head in &mut layer.heads {
                    head.w = next();
                    head.a = next();
                }
            }
        }
        for w1 in &mut self.params.fuse_w1 {
            *w1 = next();
        }
        self.params.fuse_w2 = next();
        self.params.classifier.w1 = next();
        if self.params.classifier.b1.is_some() {
            self.params.classifier.b1 = Some(next());
        }
        self.params.classifier.w2 = next();
        if self.params.classifier.b2.is_some() {
            self.params.classifier.b2 = Some(next());
        }
        Ok(())
    }

    fn push_params(&self, tape: &mut Tape) -> ParamIds {
        let mut encoders: [Vec<Vec<GatHeadIds>>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for (m, stack) in self.params.encoders.iter().enumerate() {
            for layer in stack {
                let ids = layer
                    .heads
                    .iter()
                    .map(|head| GatHeadIds {
                        w: tape.leaf(head.w.clone()),
                        a: tape.leaf(head.a.clone()),
                    })
                    .collect();
                encoders[m].push(ids);
            }
        }
        let fuse_w1 = [
            tape.leaf(self.params.fuse_w1[0].clone()),
            tape.leaf(self.params.fuse_w1[1].clone()),
            tape.leaf(self.params.fuse_w1[2].clone()),
        ];
        let fuse_w2 = tape.leaf(self.params.fuse_w2.clone());
        let classifier = MlpIds {
            w1: tape.leaf(self.params.classifier.w1.clone()),
            b1: self
                .params
                .classifier
                .b1
                .as_ref()
                .map(|b| tape.leaf(b.clone())),
            w2: tape.leaf(self.params.classifier.w2.clone()),
            b2: self
                .params
                .classifier
                .b2
                .as_ref()
                .map(|b| tape.leaf(b.clone())),
        };
        ParamIds {
            encoders,
            fuse_w1,
            fuse_w2,
            classifier,
        }
    }

    /// Tape node ids of the parameters in `to_named_tensors` order.
    fn param_node_order(ids: &ParamIds) -> Vec<NodeId> {
        let mut order = Vec::new();
        for stack in &ids.encoders {
            for layer in stack {
                for head in layer {
                    order.push(head.w);
                    order.push(head.a);
                }
            }
        }
        order.extend(ids.fuse_w1);
        order.push(ids.fuse_w2);
        order.push(ids.classifier.w1);
        if let Some(b1) = ids.classifier.b1 {
            order.push(b1);
        }
        order.push(ids.classifier.w2);
        if let Some(b2) = ids.classifier.b2 {
            order.push(b2);
        }
        order
    }

    fn check_inputs(&self, graph: &MultiplexGraph, features: &ModalityFeatures) -> Result<()> {
        if graph.node_count() != features.len() {
            return Err(MugError::Contract(format!(
                "graph has {} nodes but features have {} rows",
                graph.node_count(),
                features.len()
            )));
        }
        for (m, (stack, block)) in self
            .params
            .encoders
            .iter()
            .zip(features.blocks())
            .enumerate()
        {
            let expect = stack[0].d_in();
            if block.cols() != expect {
                return Err(MugError::Contract(format!(
                    "{} feature width {} does not match encoder input width {expect}",
                    MODALITY_NAMES[m],
                    block.cols()
                )));
            }
        }
        Ok(())
    }

    fn tape_encode(
        &self,
        tape: &mut Tape,
        ids: &ParamIds,
        graph: &MultiplexGraph,
        features: &ModalityFeatures,
    ) -> Result<[NodeId; 3]> {
        let mut out = [0; 3];
        for m in 0..3 {
            let (src, offsets) = graph.layers()[m].message_structure();
            let mut h = tape.leaf(features.blocks()[m].clone());
            let stack = &self.params.encoders[m];
            for (li, layer) in stack.iter().enumerate() {
                let final_layer = li + 1 == stack.len();
                h = tape_gat_layer(
                    tape,
                    &src,
                    &offsets,
                    h,
                    &ids.encoders[m][li],
                    layer.leaky_slope,
                    final_layer,
                )?;
                if !final_layer {
                    h = tape.leaky_relu(h, DEFAULT_LEAKY_SLOPE);
                }
            }
            out[m] = h;
        }
        Ok(out)
    }

    fn tape_fuse(
        &self,
        tape: &mut Tape,
        ids: &ParamIds,
        encoded: [NodeId; 3],
    ) -> Result<(NodeId, NodeId, NodeId)> {
        let mut logit_cols = Vec::with_capacity(3);
        for m in 0..3 {
            let projected = tape.matmul(encoded[m], ids.fuse_w1[m])?;
            let squashed = tape.tanh(projected);
            logit_cols.push(tape.matmul(squashed, ids.fuse_w2)?);
        }
        let logits = tape.concat_cols(&logit_cols)?;
        let alpha = tape.softmax_rows(logits);
        // Column m of alpha extracted through a constant one-hot selector.
        let mut fused = None;
        for m in 0..3 {
            let mut sel = Tensor::zeros(3, 1);
            sel.set(m, 0, 1.0);
            let sel = tape.leaf(sel);
            let alpha_col = tape.matmul(alpha, sel)?;
            let scaled = tape.row_scale(encoded[m], alpha_col)?;
            fused = Some(match fused {
                None => scaled,
                Some(acc) => tape.add(acc, scaled)?,
            });
        }
        Ok((logits, alpha, fused.expect("three modalities")))
    }

    fn build_forward(
        &self,
        graph: &MultiplexGraph,
        features: &ModalityFeatures,
    ) -> Result<(Tape, ParamIds, ForwardNodes)> {
        self.check_inputs(graph, features)?;
        let mut tape = Tape::new();
        let ids = self.push_params(&mut tape);
        let encoded = self.tape_encode(&mut tape, &ids, graph, features)?;
        let (logits, alpha, fused) = self.tape_fuse(&mut tape, &ids, encoded)?;
        let cls_logits = tape_mlp2(&mut tape, fused, &ids.classifier)?;
        let probs = tape.softmax_rows(cls_logits);
        Ok((
            tape,
            ids,
            ForwardNodes {
                logits,
                alpha,
                fused,
                probs,
            },
        ))
    }

    /// Per-modality structure-aware embeddings H^m.
    pub fn encode_modalities(
        &self,
        graph: &MultiplexGraph,
        features: &ModalityFeatures,
    ) -> Result<[Tensor; 3]> {
        self.check_inputs(graph, features)?;
        let mut tape = Tape::new();
        let ids = self.push_params(&mut tape);
        let encoded = self.tape_encode(&mut tape, &ids, graph, features)?;
        Ok([
            tape.value(encoded[0]).clone(),
            tape.value(encoded[1]).clone(),
            tape.value(encoded[2]).clone(),
        ])
    }

    /// Attention fusion of three equal-shape embedding blocks.
    pub fn attention_fuse(&self, h_tab: &Tensor, h_txt: &Tensor, h_img: &Tensor) -> Result<FusionTrace> {
        let shape = h_tab.shape();
        if h_txt.shape() != shape || h_img.shape() != shape {
            return Err(MugError::Contract(format!(
                "fusion inputs disagree: {:?} / {:?} / {:?}",
                shape,
                h_txt.shape(),
                h_img.shape()
            )));
        }
        if shape.1 != self.params.fuse_w1[0].rows() {
            return Err(MugError::Contract(format!(
                "fusion input width {} does not match W1 rows {}",
                shape.1,
                self.params.fuse_w1[0].rows()
            )));
        }
        let mut tape = Tape::new();
        let ids = self.push_params(&mut tape);
        let encoded = [
            tape.leaf(h_tab.clone()),
            tape.leaf(h_txt.clone()),
            tape.leaf(h_img.clone()),
        ];
        let (logits, alpha, fused) = self.tape_fuse(&mut tape, &ids, encoded)?;
        Ok(FusionTrace {
            alpha: tape.value(alpha).clone(),
            logits: tape.value(logits).clone(),
            fused: tape.value(fused).clone(),
        })
    }

    /// Two-layer MLP head plus row softmax.
    pub fn classify_head(&self, fused: &Tensor) -> Result<Tensor> {
        if fused.cols() != self.params.classifier.w1.rows() {
            return Err(MugError::Contract(format!(
                "classifier input width {} does not match W1 rows {}",
                fused.cols(),
                self.params.classifier.w1.rows()
            )));
        }
        if fused.rows() == 0 {
            return Ok(Tensor::zeros(0, self.config.n_classes));
        }
        let mut tape = Tape::new();
        let ids = self.push_params(&mut tape);
        let x = tape.leaf(fused.clone());
        let logits = tape_mlp2(&mut tape, x, &ids.classifier)?;
        let probs = tape.softmax_rows(logits);
        Ok(tape.value(probs).clone())
    }

    /// Full forward pass. When `targets` is given, the loss is the mean
    /// cross-entropy over rows with a label.
    pub fn forward(
        &self,
        graph: &MultiplexGraph,
        features: &ModalityFeatures,
        targets: Option<&[Option<usize>]>,
    ) -> Result<ForwardOutput> {
        let (tape, _ids, nodes) = self.build_forward(graph, features)?;
        let probabilities = tape.value(nodes.probs).clone();
        let trace = FusionTrace {
            alpha: tape.value(nodes.alpha).clone(),
            logits: tape.value(nodes.logits).clone(),
            fused: tape.value(nodes.fused).clone(),
        };
        let loss = match targets {
            None => None,
            Some(t) => {
                if t.len() != features.len() {
                    return Err(MugError::Contract(format!(
                        "{} targets for {} rows",
                        t.len(),
                        features.len()
                    )));
                }
                let labeled: Vec<(usize, usize)> = t
                    .iter()
                    .enumerate()
                    .filter_map(|(r, l)| l.map(|c| (r, c)))
                    .collect();
                if labeled.is_empty() {
                    None
                } else {
                    let rows: Vec<usize> = labeled.iter().map(|(r, _)| *r).collect();
                    let classes: Vec<usize> = labeled.iter().map(|(_, c)| *c).collect();
                    let mut tape = tape;
                    let picked = tape.gather_rows(nodes.probs, &rows)?;
                    let loss_node = tape.neg_log_pick_mean(picked, &classes)?;
                    Some(tape.value(loss_node).item()?)
                }
            }
        };
        Ok(ForwardOutput {
            probabilities,
            trace,
            loss,
        })
    }

    /// Loss and exact gradients over the labeled rows `(row, class)`.
    pub fn loss_and_gradients(
        &self,
        graph: &MultiplexGraph,
        features: &ModalityFeatures,
        labeled: &[(usize, usize)],
    ) -> Result<(f64, GradientSet)> {
        if labeled.is_empty() {
            return Err(MugError::Contract("no labeled rows for the loss".into()));
        }
        let (mut tape, ids, nodes) = self.build_forward(graph, features)?;
        let rows: Vec<usize> = labeled.iter().map(|(r, _)| *r).collect();
        let classes: Vec<usize> = labeled.iter().map(|(_, c)| *c).collect();
        let picked = tape.gather_rows(nodes.probs, &rows)?;
        let loss_node = tape.neg_log_pick_mean(picked, &classes)?;
        let loss = tape.value(loss_node).item()?;
        let grads = tape.backward(loss_node)?;

        let named = self.to_named_tensors();
        let mut grad_set = NamedTensors::new();
        for (name, node) in named
            .names()
            .iter()
            .zip(Self::param_node_order(&ids))
        {
            let g = match &grads[node] {
                Some(g) => g.clone(),
                None => {
                    let v = tape.value(node);
                    Tensor::zeros(v.rows(), v.cols())
                }
            };
            grad_set.push(name.clone(), g);
        }
        Ok((loss, grad_set))
    }
}

struct ForwardNodes {
    logits: NodeId,
    alpha: NodeId,
    fused: NodeId,
    probs: NodeId,
}

/// Prediction CSV: `sample_id, predicted_label, p_<class>..., alpha_tab,
/// alpha_txt, alpha_img`.
pub fn write_predictions_csv(
    mut w: impl std::io::Write,
    ids: &[String],
    label_vocab: &[String],
    probabilities: &Tensor,
    trace: &FusionTrace,
) -> Result<()> {
    if probabilities.rows() != ids.len() || trace.alpha.rows() != ids.len() {
        return Err(MugError::Contract("prediction rows misaligned".into()));
    }
    if probabilities.cols() != label_vocab.len() {
        return Err(MugError::Contract(format!(
            "{} probability columns vs {} labels",
            probabilities.cols(),
            label_vocab.len()
        )));
    }
    let io_err = |e: std::io::Error| MugError::Format(e.to_string());
    write!(w, "sample_id,predicted_label").map_err(io_err)?;
    for name in label_vocab {
        write!(w, ",p_{name}").map_err(io_err)?;
    }
    writeln!(w, ",alpha_tab,alpha_txt,alpha_img").map_err(io_err)?;
    for (r, id) in ids.iter().enumerate() {
        let row = probabilities.row(r);
        let pred = crate::stats::argmax_row(row);
        write!(w, "{id},{}", label_vocab[pred]).map_err(io_err)?;
        for v in row {
            write!(w, ",{v}").map_err(io_err)?;
        }
        writeln!(
            w,
            ",{},{},{}",
            trace.alpha.at(r, 0),
            trace.alpha.at(r, 1),
            trace.alpha.at(r, 2)
        )
        .map_err(io_err)?;
    }
    Ok(())
}
