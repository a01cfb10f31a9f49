//! Pareto frontier over (cost, quality) points: minimize cost, maximize
//! quality.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoPoint {
    pub label: String,
    pub cost: f64,
    pub quality: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParetoResult {
    pub points: Vec<ParetoPoint>,
    /// Aligned with `points`: true when the point is on the frontier.
    pub on_frontier: Vec<bool>,
}

impl ParetoResult {
    pub fn frontier_labels(&self) -> Vec<&str> {
        self.points
            .iter()
            .zip(&self.on_frontier)
            .filter_map(|(p, &f)| f.then_some(p.label.as_str()))
            .collect()
    }

    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "method,cost,quality,pareto_optimal")?;
        for (p, on) in self.points.iter().zip(&self.on_frontier) {
            writeln!(w, "{},{},{},{}", p.label, p.cost, p.quality, on)?;
        }
        Ok(())
    }
}

/// A point is dominated when another point has cost <= and quality >= with
/// at least one strict inequality. Duplicate points do not dominate each
/// other, so both are retained.
pub fn pareto_frontier(points: &[ParetoPoint]) -> ParetoResult {
    let on_frontier = points
        .iter()
        .map(|p| {
            !points.iter().any(|q| {
                q.cost <= p.cost
                    && q.quality >= p.quality
                    && (q.cost < p.cost || q.quality > p.quality)
            })
        })
        .collect();
    ParetoResult {
        points: points.to_vec(),
        on_frontier,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(label: &str, cost: f64, quality: f64) -> ParetoPoint {
        ParetoPoint {
            label: label.into(),
            cost,
            quality,
        }
    }

    #[test]
    fn single_point_is_its_own_frontier() {
        let r = pareto_frontier(&[pt("only", 1.0, 1.0)]);
        assert_eq!(r.frontier_labels(), vec!["only"]);
    }

    #[test]
    fn empty_input_empty_output() {
        let r = pareto_frontier(&[]);
        assert!(r.points.is_empty());
        assert!(r.on_frontier.is_empty());
    }

    #[test]
    fn chain_all_on_frontier_and_dominated_point_excluded() {
        // Exhaustive dominance check by hand: each chain point trades cost
        // for quality; (2, 0.5) is dominated by (1, 1).
        let r = pareto_frontier(&[
            pt("a", 1.0, 1.0),
            pt("b", 2.0, 2.0),
            pt("c", 3.0, 3.0),
            pt("d", 2.0, 0.5),
        ]);
        assert_eq!(r.on_frontier, vec![true, true, true, false]);
    }

    #[test]
    fn duplicates_both_retained() {
        let r = pareto_frontier(&[pt("a", 1.0, 1.0), pt("b", 1.0, 1.0)]);
        assert_eq!(r.on_frontier, vec![true, true]);
    }

    #[test]
    fn idempotence() {
        let points = vec![
            pt("a", 0.1, 0.2),
            pt("b", 0.5, 0.9),
            pt("c", 0.2, 0.1),
            pt("d", 0.05, 0.95),
            pt("e", 3.0, 0.5),
        ];
        let first = pareto_frontier(&points);
        let kept: Vec<ParetoPoint> = first
            .points
            .iter()
            .zip(&first.on_frontier)
            .filter_map(|(p, &f)| f.then(|| p.clone()))
            .collect();
        let second = pareto_frontier(&kept);
        assert!(second.on_frontier.iter().all(|&f| f));
    }
}
