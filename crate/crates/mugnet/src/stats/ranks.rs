//! Mean ranks across datasets, the Friedman test, and Nemenyi critical
//! differences with maximal significance groups.

use crate::error::{MugError, Result};
use crate::stats::{Orientation, ResultsMatrix};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Nemenyi q constants at alpha = 0.05 (two-tailed studentized range over
/// sqrt(2)) for 2..=10 methods.
const NEMENYI_Q_005: [(usize, f64); 9] = [
    (2, 1.960),
    (3, 2.343),
    (4, 2.569),
    (5, 2.728),
    (6, 2.850),
    (7, 2.949),
    (8, 3.031),
    (9, 3.102),
    (10, 3.164),
];

/// Rank a single dataset column: rank 1 is best under the orientation,
/// tied values share the average of their positions.
fn rank_column(values: &[f64], orientation: Orientation) -> Vec<f64> {
    let k = values.len();
    let mut order: Vec<usize> = (0..k).collect();
    match orientation {
        Orientation::LowerBetter => order.sort_by(|&a, &b| values[a].total_cmp(&values[b])),
        Orientation::HigherBetter => order.sort_by(|&a, &b| values[b].total_cmp(&values[a])),
    }
    let mut ranks = vec![0.0; k];
    let mut pos = 0;
    while pos < k {
        let mut end = pos + 1;
        while end < k && values[order[end]] == values[order[pos]] {
            end += 1;
        }
        // Positions pos..end (0-based) hold ties; average their 1-based ranks.
        let avg = (pos + 1 + end) as f64 / 2.0;
        for &idx in &order[pos..end] {
            ranks[idx] = avg;
        }
        pos = end;
    }
    ranks
}

fn require_rankable(matrix: &ResultsMatrix) -> Result<()> {
    if matrix.method_count() < 2 || matrix.dataset_count() < 2 {
        return Err(MugError::Contract(format!(
            "rank statistics need at least 2 methods and 2 datasets, got {}x{}",
            matrix.method_count(),
            matrix.dataset_count()
        )));
    }
    Ok(())
}

/// Per-method mean rank over datasets (rank 1 = best).
pub fn mean_ranks(matrix: &ResultsMatrix) -> Vec<f64> {
    let k = matrix.method_count();
    let n = matrix.dataset_count();
    let mut sums = vec![0.0; k];
    for d in 0..n {
        for (m, r) in rank_column(&matrix.column(d), matrix.orientation())
            .into_iter()
            .enumerate()
        {
            sums[m] += r;
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
    debug_assert!(
        (means.iter().sum::<f64>() - (k * (k + 1)) as f64 / 2.0).abs() < 1e-9,
        "mean ranks must sum to K(K+1)/2"
    );
    means
}

/// Friedman chi-square statistic and its upper-tail p-value (chi-square
/// with K-1 degrees of freedom).
pub fn friedman_statistic(matrix: &ResultsMatrix) -> Result<(f64, f64)> {
    require_rankable(matrix)?;
    let k = matrix.method_count();
    let n = matrix.dataset_count();
    let mut rank_sums = vec![0.0; k];
    for d in 0..n {
        for (m, r) in rank_column(&matrix.column(d), matrix.orientation())
            .into_iter()
            .enumerate()
        {
            rank_sums[m] += r;
        }
    }
    let sum_sq: f64 = rank_sums.iter().map(|r| r * r).sum();
    let nf = n as f64;
    let kf = k as f64;
    let chi2 = 12.0 / (nf * kf * (kf + 1.0)) * sum_sq - 3.0 * nf * (kf + 1.0);
    let chi2 = chi2.max(0.0);

    let dist = ChiSquared::new((k - 1) as f64)
        .map_err(|e| MugError::Contract(format!("chi-square setup: {e}")))?;
    let p = if chi2 == 0.0 { 1.0 } else { 1.0 - dist.cdf(chi2) };
    Ok((chi2, p))
}

/// Critical difference `q_alpha * sqrt(K(K+1) / (6N))`. Only alpha = 0.05
/// is tabulated, for 2..=10 methods.
pub fn nemenyi_cd(k: usize, n: usize, alpha: f64) -> Result<f64> {
    if (alpha - 0.05).abs() > 1e-12 {
        return Err(MugError::Config(format!(
            "only alpha = 0.05 is tabulated, got {alpha}"
        )));
    }
    if n < 2 {
        return Err(MugError::Contract(format!(
            "critical difference needs at least 2 datasets, got {n}"
        )));
    }
    let q = NEMENYI_Q_005
        .iter()
        .find(|(kk, _)| *kk == k)
        .map(|(_, q)| *q)
        .ok_or_else(|| {
            MugError::Config(format!("no critical value tabulated for K = {k} methods"))
        })?;
    Ok(q * ((k * (k + 1)) as f64 / (6.0 * n as f64)).sqrt())
}

/// Maximal groups of methods whose rank spread is within the critical
/// difference. Methods are grouped contiguously on the sorted rank axis;
/// groups nested inside an earlier group are suppressed.
pub fn cd_grouping(method_names: &[String], ranks: &[f64], cd: f64) -> Vec<Vec<String>> {
    assert_eq!(method_names.len(), ranks.len());
    let mut order: Vec<usize> = (0..ranks.len()).collect();
    order.sort_by(|&a, &b| ranks[a].total_cmp(&ranks[b]));

    let mut groups: Vec<(usize, usize)> = Vec::new(); // inclusive index spans in sorted order
    for start in 0..order.len() {
        let mut end = start;
        while end + 1 < order.len() && ranks[order[end + 1]] - ranks[order[start]] <= cd {
            end += 1;
        }
        if let Some(&(_, last_end)) = groups.last() {
            if end <= last_end {
                continue; // nested in the previous maximal group
            }
        }
        groups.push((start, end));
    }
    groups
        .into_iter()
        .map(|(s, e)| {
            order[s..=e]
                .iter()
                .map(|&m| method_names[m].clone())
                .collect()
        })
        .collect()
}

/// Full critical-difference analysis of a results table.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CdReport {
    pub methods: Vec<String>,
    pub mean_ranks: Vec<f64>,
    pub chi2: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub cd: f64,
    pub groups: Vec<Vec<String>>,
}

impl CdReport {
    pub fn from_matrix(matrix: &ResultsMatrix, alpha: f64) -> Result<CdReport> {
        require_rankable(matrix)?;
        let ranks = mean_ranks(matrix);
        let (chi2, p_value) = friedman_statistic(matrix)?;
        let cd = nemenyi_cd(matrix.method_count(), matrix.dataset_count(), alpha)?;
        let groups = cd_grouping(matrix.methods(), &ranks, cd);
        Ok(CdReport {
            methods: matrix.methods().to_vec(),
            mean_ranks: ranks,
            chi2,
            p_value,
            alpha,
            cd,
            groups,
        })
    }

    /// `method,mean_rank` rows sorted best-first.
    pub fn write_rank_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "method,mean_rank")?;
        let mut order: Vec<usize> = (0..self.methods.len()).collect();
        order.sort_by(|&a, &b| self.mean_ranks[a].total_cmp(&self.mean_ranks[b]));
        for m in order {
            writeln!(w, "{},{}", self.methods[m], self.mean_ranks[m])?;
        }
        Ok(())
    }

    pub fn render_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let mut order: Vec<usize> = (0..self.methods.len()).collect();
        order.sort_by(|&a, &b| self.mean_ranks[a].total_cmp(&self.mean_ranks[b]));
        let _ = writeln!(out, "mean ranks (1 = best):");
        for m in order {
            let _ = writeln!(out, "  {:<16} {:.4}", self.methods[m], self.mean_ranks[m]);
        }
        let _ = writeln!(
            out,
            "friedman chi2 = {:.4}, p = {:.6} ({})",
            self.chi2,
            self.p_value,
            if self.p_value < self.alpha {
                "significant"
            } else {
                "not significant"
            }
        );
        let _ = writeln!(out, "CD = {:.4} (alpha = {})", self.cd, self.alpha);
        for (i, g) in self.groups.iter().enumerate() {
            let _ = writeln!(out, "group {}: {}", i + 1, g.join(", "));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(
        methods: &[&str],
        datasets: usize,
        rows: &[&[f64]],
        orientation: Orientation,
    ) -> ResultsMatrix {
        let values: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        ResultsMatrix::new(
            methods.iter().map(|s| s.to_string()).collect(),
            (0..datasets).map(|d| format!("d{d}")).collect(),
            values,
            orientation,
        )
        .unwrap()
    }

    #[test]
    fn average_rank_ties() {
        let ranks = rank_column(&[0.2, 0.2, 0.5], Orientation::LowerBetter);
        assert_eq!(ranks, vec![1.5, 1.5, 3.0]);
        let ranks = rank_column(&[0.2, 0.2, 0.5], Orientation::HigherBetter);
        assert_eq!(ranks, vec![2.5, 2.5, 1.0]);
    }

    #[test]
    fn all_identical_methods_rank_middle() {
        let m = matrix(
            &["a", "b", "c"],
            2,
            &[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]],
            Orientation::LowerBetter,
        );
        let ranks = mean_ranks(&m);
        assert!(ranks.iter().all(|&r| (r - 2.0).abs() < 1e-12));
        let (chi2, p) = friedman_statistic(&m).unwrap();
        assert_eq!(chi2, 0.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn perfectly_ordered_three_methods_chi2_is_eight() {
        // A always best, B middle, C worst over 4 datasets.
        let m = matrix(
            &["a", "b", "c"],
            4,
            &[
                &[1.0, 1.0, 1.0, 1.0],
                &[2.0, 2.0, 2.0, 2.0],
                &[3.0, 3.0, 3.0, 3.0],
            ],
            Orientation::LowerBetter,
        );
        let (chi2, p) = friedman_statistic(&m).unwrap();
        assert!((chi2 - 8.0).abs() < 1e-12);
        assert!((p - 0.0183).abs() < 1e-3, "p = {p}");
    }

    #[test]
    fn mean_rank_sum_invariant() {
        let m = matrix(
            &["a", "b", "c", "d"],
            3,
            &[
                &[0.5, 0.1, 0.9],
                &[0.5, 0.2, 0.8],
                &[0.3, 0.2, 0.7],
                &[0.3, 0.4, 0.7],
            ],
            Orientation::LowerBetter,
        );
        let sum: f64 = mean_ranks(&m).iter().sum();
        assert!((sum - 10.0).abs() < 1e-9); // K(K+1)/2 = 10
    }

    #[test]
    fn nemenyi_values() {
        // K=9, N=8 reproduces the published annotation 4.247.
        let cd = nemenyi_cd(9, 8, 0.05).unwrap();
        assert!((cd - 4.247).abs() < 1e-3, "cd = {cd}");
        // Direct formula: 2.343 * sqrt(12 / 24).
        let cd34 = nemenyi_cd(3, 4, 0.05).unwrap();
        assert!((cd34 - 2.343 * (12.0f64 / 24.0).sqrt()).abs() < 1e-9);
        assert!((cd34 - 1.657).abs() < 1e-3);
        // Quadrupling N halves CD.
        let cd_n = nemenyi_cd(5, 3, 0.05).unwrap();
        let cd_4n = nemenyi_cd(5, 12, 0.05).unwrap();
        assert!((cd_n / cd_4n - 2.0).abs() < 1e-9);
    }

    #[test]
    fn nemenyi_unsupported_k() {
        assert!(nemenyi_cd(11, 8, 0.05).is_err());
        assert!(nemenyi_cd(1, 8, 0.05).is_err());
    }

    #[test]
    fn grouping_wide_cd_connects_everything() {
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let groups = cd_grouping(&names, &[1.0, 2.0, 3.0], 2.0);
        assert_eq!(groups, vec![vec!["a", "b", "c"]]);
    }

    #[test]
    fn grouping_pairwise_span_check() {
        let names: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let groups = cd_grouping(&names, &[1.0, 3.0, 8.0], 2.5);
        assert_eq!(groups, vec![vec!["x", "y"], vec!["z"]]);
    }

    #[test]
    fn degenerate_matrix_sizes_rejected() {
        let m = matrix(&["a"], 2, &[&[1.0, 2.0]], Orientation::LowerBetter);
        assert!(friedman_statistic(&m).is_err());
    }
}
