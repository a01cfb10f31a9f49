//! Adaptive adjacency construction. Each modality gets its own similarity
//! family: cosine or RBF scores thresholded at a sparsity quantile, or a
//! union-symmetrized k-nearest-neighbor graph.

use crate::dataset::ModalityFeatures;
use crate::error::{MugError, Result};
use crate::graph::{ModalityGraph, MultiplexGraph};
use crate::neural::Tensor;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Similarity {
    Cosine,
    Rbf,
    Knn,
}

impl std::fmt::Display for Similarity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Similarity::Cosine => "cosine",
            Similarity::Rbf => "rbf",
            Similarity::Knn => "knn",
        };
        f.write_str(s)
    }
}

/// How the RBF bandwidth is chosen when not given explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GammaSpec {
    /// `1 / feature_dimension`.
    #[default]
    InverseDim,
    /// `1 / median of pairwise squared distances`.
    Median,
    Fixed(f64),
}

/// Similarity family plus its single sparsity control for one modality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "sim", rename_all = "snake_case")]
pub enum LayerConfig {
    /// Keep edges whose cosine score reaches the `spy` quantile of all
    /// off-diagonal scores (higher spy keeps fewer edges; ties kept).
    Cosine { spy: f64 },
    Rbf {
        spy: f64,
        #[serde(default)]
        gamma: GammaSpec,
    },
    /// Keep edge (i, j) when j is among the k nearest of i or vice versa.
    Knn { k: usize },
}

impl LayerConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LayerConfig::Cosine { spy } | LayerConfig::Rbf { spy, .. } => {
                if !(spy > 0.0 && spy < 1.0) {
                    return Err(MugError::Config(format!(
                        "spy must lie in (0, 1), got {spy}"
                    )));
                }
                if let LayerConfig::Rbf {
                    gamma: GammaSpec::Fixed(g),
                    ..
                } = *self
                {
                    if g <= 0.0 {
                        return Err(MugError::Config(format!(
                            "rbf gamma must be positive, got {g}"
                        )));
                    }
                }
            }
            LayerConfig::Knn { k } => {
                if k == 0 {
                    return Err(MugError::Config("knn k must be at least 1".into()));
                }
            }
        }
        Ok(())
    }

    pub fn family(&self) -> Similarity {
        match self {
            LayerConfig::Cosine { .. } => Similarity::Cosine,
            LayerConfig::Rbf { .. } => Similarity::Rbf,
            LayerConfig::Knn { .. } => Similarity::Knn,
        }
    }
}

impl std::fmt::Display for LayerConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LayerConfig::Cosine { spy } => write!(f, "cosine(spy={spy})"),
            LayerConfig::Rbf { spy, gamma } => write!(f, "rbf(spy={spy}, gamma={gamma:?})"),
            LayerConfig::Knn { k } => write!(f, "knn(k={k})"),
        }
    }
}

/// Per-modality graph construction settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub tab: LayerConfig,
    pub txt: LayerConfig,
    pub img: LayerConfig,
}

impl GraphConfig {
    pub fn uniform(layer: LayerConfig) -> Self {
        GraphConfig {
            tab: layer,
            txt: layer,
            img: layer,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.tab.validate()?;
        self.txt.validate()?;
        self.img.validate()
    }
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig::uniform(LayerConfig::Knn { k: 10 })
    }
}

fn squared_distance(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Dense symmetric pairwise score table. Cosine scores for zero-norm rows
/// are defined as 0 against everything.
pub fn similarity_scores(
    features: &Tensor,
    family: Similarity,
    gamma: Option<f64>,
) -> Result<Tensor> {
    let n = features.rows();
    let mut scores = Tensor::zeros(n, n);
    match family {
        Similarity::Cosine => {
            let norms: Vec<f64> = (0..n)
                .map(|i| features.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
                .collect();
            for i in 0..n {
                for j in i..n {
                    let s = if norms[i] == 0.0 || norms[j] == 0.0 {
                        0.0
                    } else {
                        let dot: f64 = features
                            .row(i)
                            .iter()
                            .zip(features.row(j))
                            .map(|(a, b)| a * b)
                            .sum();
                        dot / (norms[i] * norms[j])
                    };
                    scores.set(i, j, s);
                    scores.set(j, i, s);
                }
            }
        }
        Similarity::Rbf => {
            let g = gamma.ok_or_else(|| MugError::Config("rbf requires gamma".into()))?;
            if g <= 0.0 {
                return Err(MugError::Config(format!(
                    "rbf gamma must be positive, got {g}"
                )));
            }
            for i in 0..n {
                for j in i..n {
                    let s = (-g * squared_distance(features.row(i), features.row(j))).exp();
                    scores.set(i, j, s);
                    scores.set(j, i, s);
                }
            }
        }
        Similarity::Knn => {
            return Err(MugError::Config(
                "knn is rank-based and has no score table".into(),
            ));
        }
    }
    Ok(scores)
}

/// Linear-interpolation quantile of a sorted slice, `q` in [0, 1].
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn resolve_gamma(features: &Tensor, spec: GammaSpec) -> f64 {
    match spec {
        GammaSpec::Fixed(g) => g,
        GammaSpec::InverseDim => 1.0 / features.cols().max(1) as f64,
        GammaSpec::Median => {
            let n = features.rows();
            let mut d2: Vec<f64> = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
            for i in 0..n {
                for j in (i + 1)..n {
                    d2.push(squared_distance(features.row(i), features.row(j)));
                }
            }
            if d2.is_empty() {
                return 1.0;
            }
            d2.sort_by(|a, b| a.total_cmp(b));
            let med = quantile_sorted(&d2, 0.5);
            if med > 0.0 {
                1.0 / med
            } else {
                1.0
            }
        }
    }
}

fn score_threshold_edges(scores: &Tensor, spy: f64) -> Vec<(usize, usize)> {
    let n = scores.rows();
    let mut off_diag: Vec<f64> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            off_diag.push(scores.at(i, j));
        }
    }
    if off_diag.is_empty() {
        return Vec::new();
    }
    off_diag.sort_by(|a, b| a.total_cmp(b));
    let threshold = quantile_sorted(&off_diag, spy);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if scores.at(i, j) >= threshold {
                edges.push((i, j));
            }
        }
    }
    edges
}

fn knn_edges(features: &Tensor, k: usize) -> Vec<(usize, usize)> {
    let n = features.rows();
    let k = if k >= n && n > 0 {
        log::warn!("knn k={k} >= node count {n}; clamping to {}", n - 1);
        n - 1
    } else {
        k
    };
    let mut edges = Vec::new();
    for i in 0..n {
        let mut order: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (squared_distance(features.row(i), features.row(j)), j))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in order.iter().take(k) {
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges
}

/// One modality graph from one feature block, per Eq.-style similarity
/// scoring plus the family's sparsity rule. Self-loops are always added.
pub fn build_adjacency(features: &Tensor, config: &LayerConfig) -> Result<ModalityGraph> {
    config.validate()?;
    let n = features.rows();
    if n == 0 {
        return Err(MugError::Contract("adjacency over zero nodes".into()));
    }
    let edges = match *config {
        LayerConfig::Cosine { spy } => {
            let scores = similarity_scores(features, Similarity::Cosine, None)?;
            score_threshold_edges(&scores, spy)
        }
        LayerConfig::Rbf { spy, gamma } => {
            let g = resolve_gamma(features, gamma);
            let scores = similarity_scores(features, Similarity::Rbf, Some(g))?;
            score_threshold_edges(&scores, spy)
        }
        LayerConfig::Knn { k } => knn_edges(features, k),
    };
    ModalityGraph::from_edges(n, &edges)
}

/// Three independent layers, one per modality block.
pub fn build_multiplex_graph(
    features: &ModalityFeatures,
    config: &GraphConfig,
) -> Result<MultiplexGraph> {
    MultiplexGraph::new(
        build_adjacency(&features.tab, &config.tab)?,
        build_adjacency(&features.txt, &config.txt)?,
        build_adjacency(&features.img, &config.img)?,
    )
}

/// Inductive extension: rebuild the multiplex graph over the union of
/// training rows and unseen rows (training rows first in `all_features`).
pub fn extend_inference_graph(
    train_features: &ModalityFeatures,
    all_features: &ModalityFeatures,
    config: &GraphConfig,
) -> Result<MultiplexGraph> {
    if all_features.len() < train_features.len() {
        return Err(MugError::Contract(
            "all_features has fewer rows than train_features".into(),
        ));
    }
    let dims_match = train_features.tab.cols() == all_features.tab.cols()
        && train_features.txt.cols() == all_features.txt.cols()
        && train_features.img.cols() == all_features.img.cols();
    if !dims_match {
        return Err(MugError::Contract(
            "feature dimension mismatch between train and extended blocks".into(),
        ));
    }
    build_multiplex_graph(all_features, config)
}
