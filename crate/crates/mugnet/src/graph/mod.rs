//! Multiplex sample-similarity graphs: one undirected graph per modality over
//! a shared node set, with a self-loop on every node.

mod build;

pub use build::{
    build_adjacency, build_multiplex_graph, extend_inference_graph, similarity_scores, GammaSpec,
    GraphConfig, LayerConfig, Similarity,
};

use crate::error::{MugError, Result};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// Undirected graph over `node_count` nodes. Neighbor lists are sorted,
/// deduplicated, and always contain the node itself (the self-loop).
#[derive(Debug, Clone, PartialEq)]
pub struct ModalityGraph {
    node_count: usize,
    neighbors: Vec<Vec<usize>>,
}

impl ModalityGraph {
    /// Build from an undirected edge list. Self-loops are added for every
    /// node whether or not they appear in `edges`.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut neighbors: Vec<Vec<usize>> = (0..node_count).map(|i| vec![i]).collect();
        for &(a, b) in edges {
            if a >= node_count || b >= node_count {
                return Err(MugError::Contract(format!(
                    "edge ({a}, {b}) out of range for {node_count} nodes"
                )));
            }
            if a != b {
                neighbors[a].push(b);
                neighbors[b].push(a);
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Ok(ModalityGraph {
            node_count,
            neighbors,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    /// Undirected edge list with `i <= j`, self-loops included.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, list) in self.neighbors.iter().enumerate() {
            for &j in list {
                if i <= j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Number of undirected edges excluding self-loops.
    pub fn edge_count(&self) -> usize {
        self.edges().iter().filter(|(a, b)| a != b).count()
    }

    /// Destination-grouped message structure for attention layers: for each
    /// node `i` in order, the sources of its in-edges (its neighbor list).
    /// Returns `(src, offsets)` with `offsets.len() == node_count + 1`.
    pub fn message_structure(&self) -> (Vec<usize>, Vec<usize>) {
        let mut src = Vec::new();
        let mut offsets = Vec::with_capacity(self.node_count + 1);
        offsets.push(0);
        for list in &self.neighbors {
            src.extend_from_slice(list);
            offsets.push(src.len());
        }
        (src, offsets)
    }

    /// Subgraph induced by `nodes` (strictly increasing original indices).
    /// Kept nodes are renumbered by their position in `nodes`.
    pub fn induced(&self, nodes: &[usize]) -> Result<ModalityGraph> {
        debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        let mut remap = vec![usize::MAX; self.node_count];
        for (new, &old) in nodes.iter().enumerate() {
            if old >= self.node_count {
                return Err(MugError::Contract(format!(
                    "induced node {old} out of range"
                )));
            }
            remap[old] = new;
        }
        let mut edges = Vec::new();
        for &old in nodes {
            for &nb in &self.neighbors[old] {
                if remap[nb] != usize::MAX && old <= nb {
                    edges.push((remap[old], remap[nb]));
                }
            }
        }
        ModalityGraph::from_edges(nodes.len(), &edges)
    }

    /// Union of the edge sets of several graphs over the same node set.
    pub fn union(graphs: &[&ModalityGraph]) -> Result<ModalityGraph> {
        let n = graphs
            .first()
            .ok_or_else(|| MugError::Contract("union of zero graphs".into()))?
            .node_count;
        if graphs.iter().any(|g| g.node_count != n) {
            return Err(MugError::Contract("union over mismatched node sets".into()));
        }
        let mut edges = Vec::new();
        for g in graphs {
            edges.extend(g.edges());
        }
        ModalityGraph::from_edges(n, &edges)
    }

    /// Text edge-list format: a `N <node_count>` header line, then one
    /// `i j` line per undirected edge (`i <= j`, self-loops included).
    pub fn write_edge_list(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "N {}", self.node_count)?;
        for (i, j) in self.edges() {
            writeln!(w, "{i} {j}")?;
        }
        Ok(())
    }

    pub fn write_edge_list_file(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| MugError::io(path, e))?;
        self.write_edge_list(std::io::BufWriter::new(f))
            .map_err(|e| MugError::io(path, e))
    }

    pub fn read_edge_list(r: impl std::io::Read) -> Result<ModalityGraph> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| MugError::Format(
            "empty edge-list file".into(),
        ))?;
        let header = header.map_err(|e| MugError::Format(e.to_string()))?;
        let node_count: usize = header
            .strip_prefix("N ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| MugError::Format(format!("bad edge-list header: {header:?}")))?;
        let mut edges = Vec::new();
        for (lineno, line) in lines {
            let line = line.map_err(|e| MugError::Format(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize> {
                tok.and_then(|t| t.parse().ok()).ok_or_else(|| {
                    MugError::Format(format!("bad edge at line {}: {line:?}", lineno + 1))
                })
            };
            let i = parse(it.next())?;
            let j = parse(it.next())?;
            edges.push((i, j));
        }
        ModalityGraph::from_edges(node_count, &edges)
    }
}

/// One graph per modality over the same node set, in the fixed order
/// tabular, text, image.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplexGraph {
    pub tab: ModalityGraph,
    pub txt: ModalityGraph,
    pub img: ModalityGraph,
}

impl MultiplexGraph {
    pub fn new(tab: ModalityGraph, txt: ModalityGraph, img: ModalityGraph) -> Result<Self> {
        if tab.node_count() != txt.node_count() || tab.node_count() != img.node_count() {
            return Err(MugError::Contract(
                "multiplex layers disagree on node count".into(),
            ));
        }
        Ok(MultiplexGraph { tab, txt, img })
    }

    pub fn node_count(&self) -> usize {
        self.tab.node_count()
    }

    pub fn layers(&self) -> [&ModalityGraph; 3] {
        [&self.tab, &self.txt, &self.img]
    }

    pub fn induced(&self, nodes: &[usize]) -> Result<MultiplexGraph> {
        MultiplexGraph::new(
            self.tab.induced(nodes)?,
            self.txt.induced(nodes)?,
            self.img.induced(nodes)?,
        )
    }

    /// Union of the three layers' edge sets, used for node sampling so that
    /// one node set can be induced on every layer.
    pub fn union_layer(&self) -> Result<ModalityGraph> {
        ModalityGraph::union(&self.layers())
    }
}
