//! The training loop: each epoch samples one random-walk subgraph of the
//! training multiplex graph, runs a full batch over its labeled nodes, and
//! takes one AdamW step at the scheduled learning rate. Validation runs on
//! the inductively extended train+val graph; the best epoch by validation
//! log-loss is kept, with early stopping and an optional wall-clock budget.

use crate::dataset::{Dataset, ModalityFeatures, Split};
use crate::error::{MugError, Result};
use crate::graph::{build_multiplex_graph, extend_inference_graph, GraphConfig};
use crate::model::{FusionTrace, ModelConfig, MuGNet};
use crate::neural::{NamedTensors, Tensor};
use crate::stats::{accuracy_metric, argmax_row, log_loss_metric};
use crate::train::optim::{adamw_step, AdamWConfig, AdamWState};
use crate::train::sampler::sample_multiplex_subgraph;
use crate::train::schedule::cosine_annealing_lr;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

pub const TIME_BUDGET_ENV: &str = "MUG_TIME_BUDGET_SECONDS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr_max: f64,
    pub lr_min: f64,
    pub epochs: usize,
    pub adamw: AdamWConfig,
    pub root_fraction: f64,
    pub walk_length: usize,
    pub patience: usize,
    pub seed: u64,
    pub time_budget_seconds: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr_max: 0.001,
            lr_min: 0.0,
            epochs: 300,
            adamw: AdamWConfig::default(),
            root_fraction: 0.8,
            walk_length: 2,
            patience: 30,
            seed: 0,
            time_budget_seconds: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.root_fraction > 0.0 && self.root_fraction <= 1.0) {
            return Err(MugError::Config(format!(
                "root_fraction must lie in (0, 1], got {}",
                self.root_fraction
            )));
        }
        if self.lr_min > self.lr_max {
            return Err(MugError::Config("lr_min must not exceed lr_max".into()));
        }
        if self.epochs == 0 || self.patience == 0 {
            return Err(MugError::Config("epochs and patience must be positive".into()));
        }
        Ok(())
    }

    /// Budget from the config, falling back to `MUG_TIME_BUDGET_SECONDS`.
    pub fn effective_time_budget(&self) -> Option<f64> {
        self.time_budget_seconds.or_else(|| {
            std::env::var(TIME_BUDGET_ENV)
                .ok()
                .and_then(|v| v.parse().ok())
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_logloss: f64,
    pub val_acc: f64,
    pub lr: f64,
    /// Wall-clock seconds for this epoch; excluded from the determinism
    /// contract.
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub model_config: ModelConfig,
    pub best_params: NamedTensors,
    pub history: Vec<EpochRecord>,
    /// 1-based epoch whose validation log-loss was minimal.
    pub selected_epoch: usize,
    pub best_val_logloss: f64,
    pub best_val_acc: f64,
    pub train_seconds: f64,
}

/// History CSV. `seconds` is wall-clock and therefore run-dependent; all
/// other columns are bitwise deterministic under a fixed seed.
pub fn write_history_csv(mut w: impl std::io::Write, history: &[EpochRecord]) -> std::io::Result<()> {
    writeln!(w, "epoch,train_loss,val_logloss,val_acc,lr,seconds")?;
    for r in history {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.epoch, r.train_loss, r.val_logloss, r.val_acc, r.lr, r.seconds
        )?;
    }
    Ok(())
}

fn labeled_rows(dataset: &Dataset, split: Split) -> Vec<usize> {
    dataset
        .split_indices(split)
        .into_iter()
        .filter(|&i| dataset.samples[i].label.is_some())
        .collect()
}

pub fn train_model(
    dataset: &Dataset,
    features: &ModalityFeatures,
    graph_config: &GraphConfig,
    model_config: &ModelConfig,
    train_config: &TrainConfig,
) -> Result<TrainResult> {
    graph_config.validate()?;
    model_config.validate()?;
    train_config.validate()?;
    if features.len() != dataset.len() {
        return Err(MugError::Contract(format!(
            "{} feature rows for {} samples",
            features.len(),
            dataset.len()
        )));
    }

    let train_rows = labeled_rows(dataset, Split::Train);
    if train_rows.is_empty() {
        return Err(MugError::Config("training split has no labeled samples".into()));
    }
    let mut eval_rows = labeled_rows(dataset, Split::Val);
    if eval_rows.is_empty() {
        log::warn!("validation split empty; selecting on training rows instead");
        eval_rows = train_rows.clone();
    }

    let train_feats = features.subset(&train_rows)?;
    let train_graph = build_multiplex_graph(&train_feats, graph_config)?;
    let train_labels: Vec<usize> = train_rows
        .iter()
        .map(|&r| dataset.samples[r].label.expect("filtered to labeled"))
        .collect();

    // Inductive evaluation graph over train + val rows, train rows first.
    let eval_feats = train_feats.concat_rows(&features.subset(&eval_rows)?)?;
    let eval_graph = extend_inference_graph(&train_feats, &eval_feats, graph_config)?;
    let eval_labels: Vec<usize> = eval_rows
        .iter()
        .map(|&r| dataset.samples[r].label.expect("filtered to labeled"))
        .collect();
    let eval_positions: Vec<usize> =
        (train_rows.len()..train_rows.len() + eval_rows.len()).collect();

    let mut model = MuGNet::init(
        *model_config,
        [train_feats.tab.cols(), train_feats.txt.cols(), train_feats.img.cols()],
        train_config.seed,
    )?;
    let mut params = model.to_named_tensors();
    let mut opt_state = AdamWState::new(&params);
    let mut rng = ChaCha20Rng::seed_from_u64(train_config.seed);

    let budget = train_config.effective_time_budget();
    let started = Instant::now();
    let mut history: Vec<EpochRecord> = Vec::new();
    let mut best_params = params.clone();
    let mut best_val = f64::INFINITY;
    let mut best_acc = 0.0;
    let mut selected_epoch = 0usize;
    let mut stall = 0usize;

    for epoch_idx in 0..train_config.epochs {
        let epoch_started = Instant::now();
        let lr = cosine_annealing_lr(
            epoch_idx,
            train_config.epochs,
            train_config.lr_max,
            train_config.lr_min,
        );

        let (nodes, subgraph) = sample_multiplex_subgraph(
            &train_graph,
            train_config.root_fraction,
            train_config.walk_length,
            &mut rng,
        )?;
        let sub_feats = train_feats.subset(&nodes)?;
        let labeled: Vec<(usize, usize)> = nodes
            .iter()
            .enumerate()
            .map(|(new, &old)| (new, train_labels[old]))
            .collect();

        let (train_loss, grads) = model.loss_and_gradients(&subgraph, &sub_feats, &labeled)?;
        if !train_loss.is_finite() {
            return Err(MugError::Diverged(format!(
                "non-finite training loss at epoch {}",
                epoch_idx + 1
            )));
        }
        adamw_step(&mut params, &grads, &mut opt_state, lr, &train_config.adamw)?;
        model.load_named_tensors(&params)?;

        let out = model.forward(&eval_graph, &eval_feats, None)?;
        let val_probs = out.probabilities.gather_rows(&eval_positions)?;
        let val_logloss = log_loss_metric(&val_probs, &eval_labels)?;
        let predicted: Vec<usize> = (0..val_probs.rows())
            .map(|r| argmax_row(val_probs.row(r)))
            .collect();
        let val_acc = accuracy_metric(&predicted, &eval_labels)?;
        if !val_logloss.is_finite() {
            return Err(MugError::Diverged(format!(
                "non-finite validation loss at epoch {}",
                epoch_idx + 1
            )));
        }

        history.push(EpochRecord {
            epoch: epoch_idx + 1,
            train_loss,
            val_logloss,
            val_acc,
            lr,
            seconds: epoch_started.elapsed().as_secs_f64(),
        });

        if val_logloss < best_val {
            best_val = val_logloss;
            best_acc = val_acc;
            best_params = params.clone();
            selected_epoch = epoch_idx + 1;
            stall = 0;
        } else {
            stall += 1;
            if stall >= train_config.patience {
                break;
            }
        }
        if let Some(limit) = budget {
            if started.elapsed().as_secs_f64() > limit {
                log::warn!("time budget of {limit} s exhausted at epoch {}", epoch_idx + 1);
                break;
            }
        }
    }

    Ok(TrainResult {
        model_config: *model_config,
        best_params,
        history,
        selected_epoch,
        best_val_logloss: best_val,
        best_val_acc: best_acc,
        train_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Inductive prediction: rebuild the multiplex graph over train plus unseen
/// rows and return probabilities and fusion weights for the unseen rows.
pub fn predict_unseen(
    model: &MuGNet,
    train_features: &ModalityFeatures,
    unseen_features: &ModalityFeatures,
    graph_config: &GraphConfig,
) -> Result<(Tensor, FusionTrace)> {
    if unseen_features.is_empty() {
        return Ok((
            Tensor::zeros(0, model.config.n_classes),
            FusionTrace {
                alpha: Tensor::zeros(0, 3),
                logits: Tensor::zeros(0, 3),
                fused: Tensor::zeros(0, model.config.d_h),
            },
        ));
    }
    let all = train_features.concat_rows(unseen_features)?;
    let graph = extend_inference_graph(train_features, &all, graph_config)?;
    let out = model.forward(&graph, &all, None)?;
    let rows: Vec<usize> = (train_features.len()..all.len()).collect();
    Ok((
        out.probabilities.gather_rows(&rows)?,
        FusionTrace {
            alpha: out.trace.alpha.gather_rows(&rows)?,
            logits: out.trace.logits.gather_rows(&rows)?,
            fused: out.trace.fused.gather_rows(&rows)?,
        },
    ))
}
