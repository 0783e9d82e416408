use serde::{Deserialize, Serialize};

use super::{DirectedNetwork, NodeId};
use crate::reputation::{equilibrium, SolverConfig};

/// Two induced-subgraph eigenvalues closer than this are treated as tied.
const LAMBDA_TIE_EPS: f64 = 1e-7;

/// Strongly connected components, each sorted ascending, ordered by smallest member.
///
/// Iterative Tarjan over the "follows" edges.
pub fn strongly_connected_components(net: &DirectedNetwork) -> Vec<Vec<NodeId>> {
    let n = net.n();
    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<NodeId> = Vec::new();
    let mut comps: Vec<Vec<NodeId>> = Vec::new();
    let mut next_index = 0usize;
    // (node, position in its successor list)
    let mut call: Vec<(NodeId, usize)> = Vec::new();
    let succ: Vec<Vec<NodeId>> = (0..n).map(|v| net.following(v).collect()).collect();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = succ[v].get(*pos) {
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                comps.push(comp);
            }
        }
    }
    comps.sort_unstable_by_key(|c| c[0]);
    comps
}

/// SCC partition of a network snapshot together with its selected core.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreAnalysis {
    pub sccs: Vec<Vec<NodeId>>,
    /// Members of the core, ascending; empty when no SCC has two or more users.
    pub core: Vec<NodeId>,
    pub core_size: usize,
    pub is_core_alive: bool,
    pub whole_network_component: bool,
}

impl CoreAnalysis {
    pub fn compute(net: &DirectedNetwork) -> Self {
        let sccs = strongly_connected_components(net);
        let core = select_core(net, &sccs);
        let core_size = core.len();
        Self {
            core,
            core_size,
            is_core_alive: core_size >= 2,
            whole_network_component: is_whole_network(net),
            sccs,
        }
    }

    pub fn is_core_member(&self, node: NodeId) -> bool {
        self.core.binary_search(&node).is_ok()
    }

    /// Nodes outside the core.
    pub fn periphery(&self, n: usize) -> Vec<NodeId> {
        (0..n).filter(|&v| !self.is_core_member(v)).collect()
    }
}

pub fn compute_sccs(net: &DirectedNetwork) -> CoreAnalysis {
    CoreAnalysis::compute(net)
}

/// Largest non-singleton SCC. Ties go to the larger induced eigenvalue, then
/// to the smallest member id (`sccs` is already ordered that way).
fn select_core(net: &DirectedNetwork, sccs: &[Vec<NodeId>]) -> Vec<NodeId> {
    let max_size = sccs.iter().map(Vec::len).max().unwrap_or(0);
    if max_size < 2 {
        return Vec::new();
    }
    let candidates: Vec<&Vec<NodeId>> = sccs.iter().filter(|c| c.len() == max_size).collect();
    if candidates.len() == 1 {
        return candidates[0].clone();
    }
    let cfg = SolverConfig::default();
    let mut best: Option<(&Vec<NodeId>, f64)> = None;
    for comp in candidates {
        let lambda = equilibrium(&net.induced_subgraph(comp), &cfg)
            .map(|eq| eq.lambda1)
            .unwrap_or(0.0);
        match best {
            Some((_, best_lambda)) if lambda <= best_lambda + LAMBDA_TIE_EPS => {}
            _ => best = Some((comp, lambda)),
        }
    }
    best.map(|(c, _)| c.clone()).unwrap_or_default()
}

/// True iff the undirected shadow is one connected component spanning all
/// nodes and no node is isolated.
pub fn is_whole_network(net: &DirectedNetwork) -> bool {
    let n = net.n();
    if n == 0 {
        return false;
    }
    if (0..n).any(|v| net.in_degree(v) + net.out_degree(v) == 0) {
        return false;
    }
    let mut seen = vec![false; n];
    let mut queue = vec![0];
    seen[0] = true;
    let mut reached = 1;
    while let Some(v) = queue.pop() {
        for w in net.following(v).chain(net.followers(v)) {
            if !seen[w] {
                seen[w] = true;
                reached += 1;
                queue.push(w);
            }
        }
    }
    reached == n
}
