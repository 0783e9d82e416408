//! JSON snapshot and Graphviz DOT renderings of a network.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{DirectedNetwork, GraphError, NodeId};

/// On-disk snapshot: `{ "n": .., "edges": [[from, to], ..], "core": [..] }`,
/// optionally extended with the equilibrium `b` vector and `lambda1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSnapshot {
    pub n: usize,
    pub edges: Vec<[NodeId; 2]>,
    pub core: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
}

impl NetworkSnapshot {
    pub fn new(net: &DirectedNetwork, core: &[NodeId]) -> Self {
        Self {
            n: net.n(),
            edges: net.edges().into_iter().map(|(a, b)| [a, b]).collect(),
            core: core.to_vec(),
            b: None,
            lambda1: None,
        }
    }

    pub fn with_equilibrium(mut self, b: &[f64], lambda1: f64) -> Self {
        self.b = Some(b.to_vec());
        self.lambda1 = Some(lambda1);
        self
    }

    pub fn to_network(&self) -> Result<DirectedNetwork, GraphError> {
        DirectedNetwork::from_edges(self.n, self.edges.iter().map(|e| (e[0], e[1])))
    }
}

/// Graphviz rendering. Core nodes carry `core=true` and are filled; when `b`
/// is given each label shows the user's reputation to two decimals.
pub fn to_dot(net: &DirectedNetwork, core: &[NodeId], b: Option<&[f64]>) -> String {
    let mut out = String::from("digraph network {\n");
    if net.n() > 0 {
        out.push_str("  node [shape=circle];\n");
    }
    for v in 0..net.n() {
        let label = match b {
            Some(b) => format!("{v}\\n{:.2}", b[v]),
            None => v.to_string(),
        };
        if core.contains(&v) {
            let _ = writeln!(
                out,
                "  {v} [label=\"{label}\", core=true, style=filled, fillcolor=\"#e06666\"];"
            );
        } else {
            let _ = writeln!(out, "  {v} [label=\"{label}\"];");
        }
    }
    for (from, to) in net.edges() {
        let _ = writeln!(out, "  {from} -> {to};");
    }
    out.push_str("}\n");
    out
}
