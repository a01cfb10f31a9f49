//! Central finite-difference verification of analytic gradients.

use crate::error::{MugError, Result};
use crate::neural::tensor::Tensor;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Which coordinates to probe.
#[derive(Debug, Clone, Copy)]
pub enum CoordSelection {
    All,
    /// A seeded uniform subset of at least `count` coordinates (all of them
    /// when there are fewer).
    Random { count: usize, seed: u64 },
}

/// Compare analytic gradients against central differences
/// `(f(p + eps e) - f(p - eps e)) / (2 eps)` and return the maximum
/// relative error `|g_fd - g| / max(1, |g_fd|, |g|)` over the probed
/// coordinates.
pub fn finite_difference_check<F>(
    mut loss_fn: F,
    params: &[Tensor],
    analytic: &[Tensor],
    epsilon: f64,
    selection: CoordSelection,
) -> Result<f64>
where
    F: FnMut(&[Tensor]) -> Result<f64>,
{
    if params.len() != analytic.len() {
        return Err(MugError::Contract(format!(
            "{} parameter tensors vs {} gradient tensors",
            params.len(),
            analytic.len()
        )));
    }
    for (p, g) in params.iter().zip(analytic) {
        if p.shape() != g.shape() {
            return Err(MugError::Contract(
                "gradient shape does not match parameter shape".into(),
            ));
        }
    }
    let sizes: Vec<usize> = params.iter().map(Tensor::len).collect();
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return Ok(0.0);
    }

    let coords: Vec<usize> = match selection {
        CoordSelection::All => (0..total).collect(),
        CoordSelection::Random { count, seed } => {
            if count >= total {
                (0..total).collect()
            } else {
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                let mut picked = sample(&mut rng, total, count).into_vec();
                picked.sort_unstable();
                picked
            }
        }
    };

    let locate = |flat: usize| -> (usize, usize) {
        let mut rem = flat;
        for (t, &sz) in sizes.iter().enumerate() {
            if rem < sz {
                return (t, rem);
            }
            rem -= sz;
        }
        unreachable!("coordinate within total");
    };

    let mut work: Vec<Tensor> = params.to_vec();
    let mut max_rel = 0.0f64;
    for flat in coords {
        let (t, i) = locate(flat);
        let orig = work[t].data()[i];
        work[t].data_mut()[i] = orig + epsilon;
        let f_plus = loss_fn(&work)?;
        work[t].data_mut()[i] = orig - epsilon;
        let f_minus = loss_fn(&work)?;
        work[t].data_mut()[i] = orig;

        let g_fd = (f_plus - f_minus) / (2.0 * epsilon);
        let g = analytic[t].data()[i];
        let rel = (g_fd - g).abs() / 1.0f64.max(g_fd.abs()).max(g.abs());
        max_rel = max_rel.max(rel);
    }
    Ok(max_rel)
}
