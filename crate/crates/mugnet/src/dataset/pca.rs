//! Shared projection machinery for the text and image extractors: top
//! right-singular-vector bases with an optional centering step, backed by
//! nalgebra's SVD.

use crate::error::{MugError, Result};
use crate::neural::Tensor;
use nalgebra::DMatrix;

/// A fitted linear projection `x -> (x - mean) B` with `B` of shape
/// d x k. When fitted without centering this is a truncated SVD basis;
/// with centering it is a PCA basis. Components beyond the rank of the
/// training data are zero columns, so the output width is stable.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    mean: Vec<f64>,
    components: Tensor,
}

impl PcaBasis {
    /// Fit on an n x d training block. `k` output dimensions are kept
    /// (zero-padded past the data rank).
    pub fn fit(data: &Tensor, k: usize, center: bool) -> Result<PcaBasis> {
        let (n, d) = data.shape();
        let mean = if center && n > 0 {
            (0..d)
                .map(|c| (0..n).map(|r| data.at(r, c)).sum::<f64>() / n as f64)
                .collect()
        } else {
            vec![0.0; d]
        };

        let mut components = Tensor::zeros(d, k);
        if n > 0 && d > 0 && k > 0 {
            let mut m = DMatrix::<f64>::zeros(n, d);
            for r in 0..n {
                for c in 0..d {
                    m[(r, c)] = data.at(r, c) - mean[c];
                }
            }
            let svd = m.svd(false, true);
            let v_t = svd
                .v_t
                .ok_or_else(|| MugError::Contract("svd did not produce V^T".into()))?;
            let sigma = svd.singular_values;
            let mut order: Vec<usize> = (0..sigma.len()).collect();
            order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));
            for (col, &si) in order.iter().take(k).enumerate() {
                // Deterministic sign: largest-magnitude entry positive.
                let mut pivot = 0;
                for r in 1..d {
                    if v_t[(si, r)].abs() > v_t[(si, pivot)].abs() {
                        pivot = r;
                    }
                }
                let flip = if v_t[(si, pivot)] < 0.0 { -1.0 } else { 1.0 };
                for r in 0..d {
                    components.set(r, col, flip * v_t[(si, r)]);
                }
            }
        }
        Ok(PcaBasis { mean, components })
    }

    pub fn input_dim(&self) -> usize {
        self.components.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.components.cols()
    }

    pub fn components(&self) -> &Tensor {
        &self.components
    }

    /// Project one row.
    pub fn transform_row(&self, row: &[f64], out: &mut [f64]) {
        debug_assert_eq!(row.len(), self.input_dim());
        debug_assert_eq!(out.len(), self.output_dim());
        for o in out.iter_mut() {
            *o = 0.0;
        }
        for (r, (&v, &mu)) in row.iter().zip(&self.mean).enumerate() {
            let centered = v - mu;
            if centered == 0.0 {
                continue;
            }
            for (c, o) in out.iter_mut().enumerate() {
                *o += centered * self.components.at(r, c);
            }
        }
    }

    pub fn transform(&self, data: &Tensor) -> Result<Tensor> {
        if data.cols() != self.input_dim() {
            return Err(MugError::Contract(format!(
                "projection input width {} != fitted width {}",
                data.cols(),
                self.input_dim()
            )));
        }
        let mut out = Tensor::zeros(data.rows(), self.output_dim());
        for r in 0..data.rows() {
            let row: Vec<f64> = data.row(r).to_vec();
            self.transform_row(&row, out.row_mut(r));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leading_component_matches_covariance_eigenvector() {
        // Four 4-pixel "images"; oracle is a dense symmetric eigensolve of
        // the 4x4 covariance, an independent route from the SVD used in fit.
        let data = Tensor::from_rows(&[
            vec![1.0, 0.5, 0.0, 0.25],
            vec![0.9, 0.6, 0.1, 0.30],
            vec![0.1, 0.2, 0.9, 0.80],
            vec![0.0, 0.1, 1.0, 0.90],
        ])
        .unwrap();
        let basis = PcaBasis::fit(&data, 1, true).unwrap();

        let (n, d) = data.shape();
        let mean: Vec<f64> =
            (0..d).map(|c| (0..n).map(|r| data.at(r, c)).sum::<f64>() / n as f64).collect();
        let mut cov = nalgebra::DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for r in 0..n {
                    acc += (data.at(r, i) - mean[i]) * (data.at(r, j) - mean[j]);
                }
                cov[(i, j)] = acc;
            }
        }
        let eig = nalgebra::SymmetricEigen::new(cov);
        let top = (0..d)
            .max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
            .unwrap();
        let mut expect: Vec<f64> = (0..d).map(|r| eig.eigenvectors[(r, top)]).collect();
        let pivot = (0..d).fold(0, |p, r| if expect[r].abs() > expect[p].abs() { r } else { p });
        if expect[pivot] < 0.0 {
            expect.iter_mut().for_each(|v| *v = -*v);
        }
        for r in 0..d {
            assert!(
                (basis.components().at(r, 0) - expect[r]).abs() < 1e-9,
                "component {r}: {} vs {}",
                basis.components().at(r, 0),
                expect[r]
            );
        }
    }

    #[test]
    fn zero_variance_data_projects_to_zero() {
        let data = Tensor::from_rows(&[vec![0.3; 5]; 4]).unwrap();
        let basis = PcaBasis::fit(&data, 3, true).unwrap();
        let out = basis.transform(&data).unwrap();
        assert!(out.data().iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn requested_dims_beyond_rank_are_zero_padded() {
        let data = Tensor::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        let basis = PcaBasis::fit(&data, 5, false).unwrap();
        assert_eq!(basis.output_dim(), 5);
        let out = basis.transform(&data).unwrap();
        assert_eq!(out.cols(), 5);
        // Rank-1 data: at most one informative output column; the rest are
        // numerically negligible relative to it.
        let lead = out.at(0, 0).abs().max(out.at(1, 0).abs());
        assert!(lead > 0.1);
        for c in 2..5 {
            assert!(out.at(0, c).abs() < 1e-9 * lead.max(1.0));
        }
    }
}
