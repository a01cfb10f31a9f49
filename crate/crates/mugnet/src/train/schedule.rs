//! Cosine annealing learning-rate schedule.

use std::f64::consts::PI;

/// `lr_min + (lr_max - lr_min) (1 + cos(pi t / T)) / 2` for step `t` of `T`.
pub fn cosine_annealing_lr(t: usize, total: usize, lr_max: f64, lr_min: f64) -> f64 {
    debug_assert!(total >= 1 && t <= total);
    if t >= total {
        return lr_min;
    }
    lr_min + 0.5 * (lr_max - lr_min) * (1.0 + (PI * t as f64 / total as f64).cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_exact() {
        assert_eq!(cosine_annealing_lr(0, 300, 0.001, 0.0), 0.001);
        assert_eq!(cosine_annealing_lr(300, 300, 0.001, 0.0), 0.0);
        assert_eq!(cosine_annealing_lr(10, 10, 0.5, 0.1), 0.1);
    }

    #[test]
    fn halfway_point_is_midpoint() {
        let lr = cosine_annealing_lr(150, 300, 0.001, 0.0);
        assert!((lr - 0.0005).abs() < 1e-15);
    }

    #[test]
    fn schedule_is_non_increasing() {
        let mut prev = f64::INFINITY;
        for t in 0..=200 {
            let lr = cosine_annealing_lr(t, 200, 0.01, 1e-5);
            assert!(lr <= prev + 1e-18, "increased at t={t}");
            prev = lr;
        }
    }
}
