//! Random-walk subgraph sampling. Each step picks a fraction of root nodes
//! and walks a fixed number of hops; the union of visited nodes induces the
//! training subgraph, one shared node set across all multiplex layers.

use crate::error::{MugError, Result};
use crate::graph::{ModalityGraph, MultiplexGraph};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

/// Sampled node set (sorted original indices) from simple random walks:
/// `ceil(root_fraction * N)` roots without replacement, then `walk_length`
/// uniform steps per root over non-self edges (a node with only its
/// self-loop stays put).
pub fn sample_random_walk_nodes(
    graph: &ModalityGraph,
    root_fraction: f64,
    walk_length: usize,
    rng: &mut ChaCha20Rng,
) -> Result<Vec<usize>> {
    let n = graph.node_count();
    if n == 0 {
        return Err(MugError::Contract("sampling from an empty graph".into()));
    }
    if !(root_fraction > 0.0 && root_fraction <= 1.0) {
        return Err(MugError::Config(format!(
            "root_fraction must lie in (0, 1], got {root_fraction}"
        )));
    }
    let root_count = ((root_fraction * n as f64).ceil() as usize).clamp(1, n);
    let roots = sample(rng, n, root_count).into_vec();

    let mut visited = vec![false; n];
    for &root in &roots {
        visited[root] = true;
        let mut cur = root;
        for _ in 0..walk_length {
            let neighbors: Vec<usize> = graph
                .neighbors(cur)
                .iter()
                .copied()
                .filter(|&j| j != cur)
                .collect();
            if neighbors.is_empty() {
                break;
            }
            cur = neighbors[rng.random_range(0..neighbors.len())];
            visited[cur] = true;
        }
    }
    Ok((0..n).filter(|&i| visited[i]).collect())
}

/// One subgraph shared by every layer: nodes sampled on the union of the
/// three layers' edges, then induced per layer so rows stay aligned.
pub fn sample_multiplex_subgraph(
    graph: &MultiplexGraph,
    root_fraction: f64,
    walk_length: usize,
    rng: &mut ChaCha20Rng,
) -> Result<(Vec<usize>, MultiplexGraph)> {
    let union = graph.union_layer()?;
    let nodes = sample_random_walk_nodes(&union, root_fraction, walk_length, rng)?;
    let induced = graph.induced(&nodes)?;
    Ok((nodes, induced))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn full_roots_zero_walk_is_whole_graph() {
        let g = ModalityGraph::from_edges(6, &[(0, 1), (1, 2), (3, 4)]).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let nodes = sample_random_walk_nodes(&g, 1.0, 0, &mut rng).unwrap();
        assert_eq!(nodes, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn seeded_walk_on_path_covers_enumerated_nodes() {
        // Path a-b-c with a single root: enumerate the walk with an
        // identically-seeded generator, mirroring the sampler's draws.
        let g = ModalityGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let seed = 7;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let nodes = sample_random_walk_nodes(&g, 0.01, 2, &mut rng).unwrap();

        let mut oracle_rng = ChaCha20Rng::seed_from_u64(seed);
        let root = sample(&mut oracle_rng, 3, 1).into_vec()[0];
        let mut expect = vec![root];
        let mut cur = root;
        for _ in 0..2 {
            let nb: Vec<usize> = g
                .neighbors(cur)
                .iter()
                .copied()
                .filter(|&j| j != cur)
                .collect();
            cur = nb[oracle_rng.random_range(0..nb.len())];
            expect.push(cur);
        }
        expect.sort_unstable();
        expect.dedup();
        assert_eq!(nodes, expect);
        // From the middle node, two steps always reach all three nodes; from
        // an end node the walk visits at least two.
        assert!(nodes.len() >= 2);
    }

    #[test]
    fn sampled_nodes_bounded_and_deterministic() {
        let edges: Vec<(usize, usize)> = (0..19).map(|i| (i, i + 1)).collect();
        let g = ModalityGraph::from_edges(20, &edges).unwrap();
        let run = |seed| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            sample_random_walk_nodes(&g, 0.5, 3, &mut rng).unwrap()
        };
        let a = run(11);
        let b = run(11);
        let c = run(12);
        assert_eq!(a, b);
        assert!(a.len() <= 20);
        assert!(a.len() >= 10); // at least the roots
        assert_ne!(a, c);
    }

    #[test]
    fn isolated_node_stays_put() {
        let g = ModalityGraph::from_edges(1, &[]).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let nodes = sample_random_walk_nodes(&g, 1.0, 5, &mut rng).unwrap();
        assert_eq!(nodes, vec![0]);
    }

    #[test]
    fn empty_graph_is_contract_error() {
        let g = ModalityGraph::from_edges(0, &[]).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        assert!(sample_random_walk_nodes(&g, 1.0, 2, &mut rng).is_err());
    }

    #[test]
    fn multiplex_sampling_shares_one_node_set() {
        let tab = ModalityGraph::from_edges(8, &[(0, 1), (2, 3), (4, 5)]).unwrap();
        let txt = ModalityGraph::from_edges(8, &[(1, 2), (3, 4), (6, 7)]).unwrap();
        let img = ModalityGraph::from_edges(8, &[(0, 7)]).unwrap();
        let g = MultiplexGraph::new(tab, txt, img).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let (nodes, sub) = sample_multiplex_subgraph(&g, 0.5, 2, &mut rng).unwrap();
        assert_eq!(sub.tab.node_count(), nodes.len());
        assert_eq!(sub.txt.node_count(), nodes.len());
        assert_eq!(sub.img.node_count(), nodes.len());
    }
}
