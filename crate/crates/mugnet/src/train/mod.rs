//! Training: AdamW with cosine annealing, random-walk subgraph sampling,
//! inductive prediction, and hyperparameter search.

mod hpo;
mod optim;
mod runner;
mod sampler;
mod schedule;

pub use hpo::{hpo_search, HpoResult, HpoSpace, TrialOutcome};
pub use optim::{adamw_step, AdamWConfig, AdamWState};
pub use runner::{
    predict_unseen, train_model, write_history_csv, EpochRecord, TrainConfig, TrainResult,
    TIME_BUDGET_ENV,
};
pub use sampler::{sample_multiplex_subgraph, sample_random_walk_nodes};
pub use schedule::cosine_annealing_lr;
