//! Directed follower networks and their structural analysis.
//!
//! An edge `j -> i` means user `j` follows user `i`; in adjacency-matrix terms
//! this is `a_ij = 1`, so row `i` of the matrix lists the followers of `i`.
//! Node ids are dense `0..n` slots that are reused when users are replaced.

mod cycles;
pub mod io;
mod scc;

use indexmap::IndexSet;
use rand::Rng;
use thiserror::Error;

pub use cycles::{enumerate_cycles, CycleReport, DEFAULT_CYCLE_BUDGET, DEFAULT_MAX_NODES};
pub use scc::{compute_sccs, is_whole_network, strongly_connected_components, CoreAnalysis};

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("self-loop on node {0} is not allowed")]
    SelfLoop(NodeId),
    #[error("node {node} is out of range for a network of {n} nodes")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("network too large for exact enumeration: {n} nodes exceeds the limit of {max_nodes}")]
    TooLargeForEnumeration { n: usize, max_nodes: usize },
    #[error("invalid adjacency matrix at line {line}: {reason}")]
    Matrix { line: usize, reason: String },
}

/// Unweighted directed network over a fixed number of user slots.
///
/// Both directions are indexed so that a node's entire neighbourhood can be
/// dropped in `O(degree)` when the user leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedNetwork {
    following: Vec<IndexSet<NodeId>>,
    followers: Vec<IndexSet<NodeId>>,
    edge_count: usize,
}

impl DirectedNetwork {
    pub fn new(n: usize) -> Self {
        Self {
            following: vec![IndexSet::new(); n],
            followers: vec![IndexSet::new(); n],
            edge_count: 0,
        }
    }

    /// Builds a network from `(follower, followed)` pairs. Duplicates collapse.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut net = Self::new(n);
        for (from, to) in edges {
            net.add_edge(from, to)?;
        }
        Ok(net)
    }

    /// Samples every ordered pair `(j, i)`, `j != i`, independently with probability `p`.
    pub fn random<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Self {
        let mut net = Self::new(n);
        for j in 0..n {
            for i in 0..n {
                if i != j && rng.random_bool(p) {
                    net.insert_unchecked(j, i);
                }
            }
        }
        net
    }

    /// Parses a 0/1 adjacency matrix where row `i` column `j` holds `a_ij`
    /// (1 when `j` follows `i`). Rows may be whitespace- or comma-separated;
    /// blank lines and lines starting with `#` are skipped.
    pub fn from_adjacency_text(text: &str) -> Result<Self, GraphError> {
        let mut rows: Vec<(usize, Vec<&str>)> = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let cells: Vec<&str> = trimmed
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            rows.push((idx + 1, cells));
        }
        let n = rows.len();
        let mut net = Self::new(n);
        for (i, (line, cells)) in rows.iter().enumerate() {
            if cells.len() != n {
                return Err(GraphError::Matrix {
                    line: *line,
                    reason: format!(
                        "row {i} has {} entries but the matrix has {n} rows (not square)",
                        cells.len()
                    ),
                });
            }
            for (j, cell) in cells.iter().enumerate() {
                match *cell {
                    "0" => {}
                    "1" if i == j => {
                        return Err(GraphError::Matrix {
                            line: *line,
                            reason: format!("row {i}, column {j}: self-loop on the diagonal"),
                        })
                    }
                    "1" => {
                        net.insert_unchecked(j, i);
                    }
                    other => {
                        return Err(GraphError::Matrix {
                            line: *line,
                            reason: format!("row {i}, column {j}: entry {other:?} is not 0 or 1"),
                        })
                    }
                }
            }
        }
        Ok(net)
    }

    /// Renders the adjacency matrix in the orientation accepted by
    /// [`DirectedNetwork::from_adjacency_text`].
    pub fn to_adjacency_text(&self) -> String {
        let n = self.n();
        let mut out = String::with_capacity(n * (2 * n + 1));
        for i in 0..n {
            for j in 0..n {
                if j > 0 {
                    out.push(' ');
                }
                out.push(if self.has_edge(j, i) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn n(&self) -> usize {
        self.following.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    fn check_node(&self, node: NodeId) -> Result<(), GraphError> {
        if node < self.n() {
            Ok(())
        } else {
            Err(GraphError::NodeOutOfRange { node, n: self.n() })
        }
    }

    /// Adds `from -> to` ("from follows to"). Returns `false` if it already existed.
    pub fn add_edge(&mut self, from: NodeId, to: NodeId) -> Result<bool, GraphError> {
        self.check_node(from)?;
        self.check_node(to)?;
        if from == to {
            return Err(GraphError::SelfLoop(from));
        }
        Ok(self.insert_unchecked(from, to))
    }

    pub(crate) fn insert_unchecked(&mut self, from: NodeId, to: NodeId) -> bool {
        debug_assert_ne!(from, to);
        if self.following[from].insert(to) {
            self.followers[to].insert(from);
            self.edge_count += 1;
            true
        } else {
            false
        }
    }

    pub fn remove_edge(&mut self, from: NodeId, to: NodeId) -> bool {
        if from >= self.n() || to >= self.n() {
            return false;
        }
        if self.following[from].swap_remove(&to) {
            self.followers[to].swap_remove(&from);
            self.edge_count -= 1;
            true
        } else {
            false
        }
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        from < self.n() && self.following[from].contains(&to)
    }

    /// Drops every incoming and outgoing edge of `node`.
    pub fn isolate(&mut self, node: NodeId) {
        let out = std::mem::take(&mut self.following[node]);
        for &to in &out {
            self.followers[to].swap_remove(&node);
        }
        let inc = std::mem::take(&mut self.followers[node]);
        for &from in &inc {
            self.following[from].swap_remove(&node);
        }
        self.edge_count -= out.len() + inc.len();
    }

    /// Users that `node` follows.
    pub fn following(&self, node: NodeId) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        self.following[node].iter().copied()
    }

    /// Users that follow `node`.
    pub fn followers(&self, node: NodeId) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        self.followers[node].iter().copied()
    }

    pub fn in_degree(&self, node: NodeId) -> usize {
        self.followers[node].len()
    }

    pub fn out_degree(&self, node: NodeId) -> usize {
        self.following[node].len()
    }

    /// `(in_degrees, out_degrees)`: followers per user and users followed per user.
    pub fn degrees(&self) -> (Vec<usize>, Vec<usize>) {
        let ins = self.followers.iter().map(IndexSet::len).collect();
        let outs = self.following.iter().map(IndexSet::len).collect();
        (ins, outs)
    }

    pub fn max_out_degree(&self) -> usize {
        self.following.iter().map(IndexSet::len).max().unwrap_or(0)
    }

    /// All edges as `(follower, followed)`, sorted.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut edges: Vec<_> = self
            .following
            .iter()
            .enumerate()
            .flat_map(|(from, outs)| outs.iter().map(move |&to| (from, to)))
            .collect();
        edges.sort_unstable();
        edges
    }

    /// Relabels node `v` as `perm[v]`.
    pub fn permuted(&self, perm: &[NodeId]) -> Self {
        assert_eq!(
            perm.len(),
            self.n(),
            "permutation length must match node count"
        );
        let mut net = Self::new(self.n());
        for (from, to) in self.edges() {
            net.insert_unchecked(perm[from], perm[to]);
        }
        net
    }

    /// Subgraph induced by `nodes`; node `k` of the result is `nodes[k]`.
    pub fn induced_subgraph(&self, nodes: &[NodeId]) -> Self {
        let mut local = vec![usize::MAX; self.n()];
        for (k, &v) in nodes.iter().enumerate() {
            local[v] = k;
        }
        let mut sub = Self::new(nodes.len());
        for (k, &v) in nodes.iter().enumerate() {
            for to in self.following(v) {
                if local[to] != usize::MAX {
                    sub.insert_unchecked(k, local[to]);
                }
            }
        }
        sub
    }

    /// Compressed follower lists, the layout the eigen-solvers iterate over.
    pub fn follower_index(&self) -> FollowerIndex {
        let mut offsets = Vec::with_capacity(self.n() + 1);
        let mut sources = Vec::with_capacity(self.edge_count);
        offsets.push(0);
        for fol in &self.followers {
            sources.extend(fol.iter().copied());
            offsets.push(sources.len());
        }
        FollowerIndex { offsets, sources }
    }
}

/// Read-only CSR view of the follower lists: row `i` holds every `j` with `a_ij = 1`.
#[derive(Debug, Clone)]
pub struct FollowerIndex {
    offsets: Vec<usize>,
    sources: Vec<NodeId>,
}

impl FollowerIndex {
    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn row(&self, i: NodeId) -> &[NodeId] {
        &self.sources[self.offsets[i]..self.offsets[i + 1]]
    }

    /// `(A v)_i = sum_j a_ij v_j`.
    #[inline]
    pub fn row_sum(&self, i: NodeId, v: &[f64]) -> f64 {
        self.row(i).iter().map(|&j| v[j]).sum()
    }

    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.row_sum(i, v);
        }
    }
}

/// `(in_degrees, out_degrees)` of `net`.
pub fn degrees(net: &DirectedNetwork) -> (Vec<usize>, Vec<usize>) {
    net.degrees()
}
