//! Grid (or seeded-subsample) hyperparameter search over the similarity
//! family and its sparsity control, selected by validation log-loss.

use crate::dataset::{Dataset, ModalityFeatures};
use crate::error::{MugError, Result};
use crate::graph::{GraphConfig, LayerConfig, Similarity};
use crate::model::ModelConfig;
use crate::train::runner::{train_model, TrainConfig, TrainResult};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HpoSpace {
    pub families: Vec<Similarity>,
    pub spy_grid: Vec<f64>,
    pub k_grid: Vec<usize>,
    /// When set, each modality gets its own (family, sparsity) choice and
    /// the grid is the cartesian cube; otherwise one choice is shared.
    pub per_modality: bool,
    /// Maximum trials; grids larger than this are subsampled with the run
    /// seed.
    pub budget: Option<usize>,
}

impl Default for HpoSpace {
    fn default() -> Self {
        HpoSpace {
            families: vec![Similarity::Cosine, Similarity::Rbf, Similarity::Knn],
            spy_grid: vec![0.5, 0.75, 0.95],
            k_grid: vec![5, 10, 32],
            per_modality: false,
            budget: None,
        }
    }
}

impl HpoSpace {
    /// Per-modality options: each family paired with its own sparsity grid.
    fn layer_options(&self) -> Vec<LayerConfig> {
        let mut options = Vec::new();
        for &family in &self.families {
            match family {
                Similarity::Cosine => {
                    options.extend(self.spy_grid.iter().map(|&spy| LayerConfig::Cosine { spy }))
                }
                Similarity::Rbf => options.extend(self.spy_grid.iter().map(|&spy| LayerConfig::Rbf {
                    spy,
                    gamma: Default::default(),
                })),
                Similarity::Knn => {
                    options.extend(self.k_grid.iter().map(|&k| LayerConfig::Knn { k }))
                }
            }
        }
        options
    }

    /// The full trial grid before any budget subsampling.
    pub fn grid(&self) -> Vec<GraphConfig> {
        let options = self.layer_options();
        if !self.per_modality {
            return options.into_iter().map(GraphConfig::uniform).collect();
        }
        let mut grid = Vec::with_capacity(options.len().pow(3));
        for &tab in &options {
            for &txt in &options {
                for &img in &options {
                    grid.push(GraphConfig { tab, txt, img });
                }
            }
        }
        grid
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialOutcome {
    pub index: usize,
    pub config: GraphConfig,
    pub val_logloss: Option<f64>,
    pub val_acc: Option<f64>,
    pub selected_epoch: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug)]
pub struct HpoResult {
    pub best_config: GraphConfig,
    pub best_index: usize,
    pub best_result: TrainResult,
    pub trials: Vec<TrialOutcome>,
}

fn derive_seed(base: u64, trial: u64) -> u64 {
    // splitmix64 of the trial index, offset by the base seed.
    let mut z = base.wrapping_add((trial + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Evaluate the grid and keep the trial with the lowest validation
/// log-loss; ties break by higher validation accuracy, then earlier index.
pub fn hpo_search(
    dataset: &Dataset,
    features: &ModalityFeatures,
    space: &HpoSpace,
    model_config: &ModelConfig,
    train_config: &TrainConfig,
) -> Result<HpoResult> {
    let mut grid = space.grid();
    if grid.is_empty() {
        return Err(MugError::Config("hyperparameter grid is empty".into()));
    }
    if let Some(budget) = space.budget {
        if budget == 0 {
            return Err(MugError::Config("budget must be at least 1".into()));
        }
        if grid.len() > budget {
            let mut rng = ChaCha20Rng::seed_from_u64(train_config.seed);
            let mut keep = sample(&mut rng, grid.len(), budget).into_vec();
            keep.sort_unstable();
            grid = keep.into_iter().map(|i| grid[i]).collect();
        }
    }

    let mut trials = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, TrainResult)> = None;
    for (index, config) in grid.iter().enumerate() {
        let mut trial_config = *train_config;
        trial_config.seed = derive_seed(train_config.seed, index as u64);
        match train_model(dataset, features, config, model_config, &trial_config) {
            Ok(result) => {
                trials.push(TrialOutcome {
                    index,
                    config: *config,
                    val_logloss: Some(result.best_val_logloss),
                    val_acc: Some(result.best_val_acc),
                    selected_epoch: Some(result.selected_epoch),
                    error: None,
                });
                let better = match &best {
                    None => true,
                    Some((_, incumbent)) => {
                        result.best_val_logloss < incumbent.best_val_logloss
                            || (result.best_val_logloss == incumbent.best_val_logloss
                                && result.best_val_acc > incumbent.best_val_acc)
                    }
                };
                if better {
                    best = Some((index, result));
                }
            }
            Err(e) => {
                log::warn!("trial {index} ({config:?}) failed: {e}");
                trials.push(TrialOutcome {
                    index,
                    config: *config,
                    val_logloss: None,
                    val_acc: None,
                    selected_epoch: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }

    match best {
        Some((best_index, best_result)) => Ok(HpoResult {
            best_config: grid[best_index],
            best_index,
            best_result,
            trials,
        }),
        None => {
            let detail: Vec<String> = trials
                .iter()
                .map(|t| format!("trial {}: {}", t.index, t.error.as_deref().unwrap_or("?")))
                .collect();
            Err(MugError::SearchFailed(detail.join("; ")))
        }
    }
}
