use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{scc::strongly_connected_components, DirectedNetwork, GraphError, NodeId};

pub const DEFAULT_MAX_NODES: usize = 64;
pub const DEFAULT_CYCLE_BUDGET: usize = 100_000;

/// Simple directed cycles of a network.
///
/// Each cycle starts at its smallest node and follows edge direction; the
/// closing edge back to the first node is implied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleReport {
    pub cycles: Vec<Vec<NodeId>>,
    pub count_by_length: BTreeMap<usize, usize>,
    pub truncated: bool,
}

impl CycleReport {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }
}

/// Johnson's elementary-circuit enumeration, stopping after `budget` cycles.
pub fn enumerate_cycles(
    net: &DirectedNetwork,
    max_nodes: usize,
    budget: usize,
) -> Result<CycleReport, GraphError> {
    let n = net.n();
    if n > max_nodes {
        return Err(GraphError::TooLargeForEnumeration { n, max_nodes });
    }
    let mut search = Johnson {
        blocked: vec![false; n],
        blocked_by: vec![Vec::new(); n],
        stack: Vec::new(),
        cycles: Vec::new(),
        budget,
        truncated: false,
    };
    for start in 0..n {
        // Component of `start` in the subgraph induced by nodes >= start.
        let rest: Vec<NodeId> = (start..n).collect();
        let sub = net.induced_subgraph(&rest);
        let comp = strongly_connected_components(&sub)
            .into_iter()
            .find(|c| c[0] == 0)
            .expect("start node belongs to some component");
        if comp.len() < 2 {
            continue;
        }
        let mut allowed = vec![false; n];
        for &local in &comp {
            allowed[local + start] = true;
        }
        let adj: Vec<Vec<NodeId>> = (0..n)
            .map(|v| {
                if allowed[v] {
                    net.following(v).filter(|&w| allowed[w]).collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        for &v in &comp {
            let v = v + start;
            search.blocked[v] = false;
            search.blocked_by[v].clear();
        }
        search.circuit(&adj, start, start);
        if search.truncated {
            break;
        }
    }
    let mut count_by_length = BTreeMap::new();
    for c in &search.cycles {
        *count_by_length.entry(c.len()).or_insert(0) += 1;
    }
    Ok(CycleReport {
        cycles: search.cycles,
        count_by_length,
        truncated: search.truncated,
    })
}

struct Johnson {
    blocked: Vec<bool>,
    blocked_by: Vec<Vec<NodeId>>,
    stack: Vec<NodeId>,
    cycles: Vec<Vec<NodeId>>,
    budget: usize,
    truncated: bool,
}

impl Johnson {
    fn unblock(&mut self, v: NodeId) {
        let mut pending = vec![v];
        while let Some(u) = pending.pop() {
            if !self.blocked[u] {
                continue;
            }
            self.blocked[u] = false;
            pending.append(&mut self.blocked_by[u]);
        }
    }

    fn circuit(&mut self, adj: &[Vec<NodeId>], v: NodeId, start: NodeId) -> bool {
        let mut closed = false;
        self.stack.push(v);
        self.blocked[v] = true;
        for &w in &adj[v] {
            if self.truncated {
                break;
            }
            if w == start {
                if self.cycles.len() == self.budget {
                    self.truncated = true;
                    break;
                }
                self.cycles.push(self.stack.clone());
                closed = true;
            } else if !self.blocked[w] && self.circuit(adj, w, start) {
                closed = true;
            }
        }
        if closed {
            self.unblock(v);
        } else {
            for &w in &adj[v] {
                if !self.blocked_by[w].contains(&v) {
                    self.blocked_by[w].push(v);
                }
            }
        }
        self.stack.pop();
        closed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::compute_sccs;
    use crate::graph::fixtures::{figure_one, one_based};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    /// Every cycle via brute force: for each ordered node sequence starting at its
    /// minimum, check that consecutive edges (and the closing edge) exist.
    fn brute_force_cycles(net: &DirectedNetwork) -> BTreeSet<Vec<NodeId>> {
        fn extend(net: &DirectedNetwork, path: &mut Vec<NodeId>, out: &mut BTreeSet<Vec<NodeId>>) {
            let first = path[0];
            let last = *path.last().unwrap();
            if path.len() >= 2 && net.has_edge(last, first) {
                out.insert(path.clone());
            }
            for next in (first + 1)..net.n() {
                if !path.contains(&next) && net.has_edge(last, next) {
                    path.push(next);
                    extend(net, path, out);
                    path.pop();
                }
            }
        }
        let mut out = BTreeSet::new();
        for s in 0..net.n() {
            extend(net, &mut vec![s], &mut out);
        }
        out
    }

    #[test]
    fn figure_one_has_a_two_cycle_and_a_three_cycle() {
        let report =
            enumerate_cycles(&figure_one(), DEFAULT_MAX_NODES, DEFAULT_CYCLE_BUDGET).unwrap();
        let got: BTreeSet<_> = report.cycles.iter().cloned().collect();
        assert_eq!(got, BTreeSet::from([vec![0, 1], vec![0, 1, 2]]));
        assert_eq!(report.count_by_length, BTreeMap::from([(2, 1), (3, 1)]));
        assert!(!report.truncated);
    }

    #[test]
    fn dag_has_no_cycles() {
        let net = one_based(5, &[(1, 2), (1, 3), (2, 4), (3, 4), (4, 5)]);
        let report = enumerate_cycles(&net, DEFAULT_MAX_NODES, DEFAULT_CYCLE_BUDGET).unwrap();
        assert!(report.is_empty());
        assert!(report.count_by_length.is_empty());
    }

    #[test]
    fn size_guard_is_enforced() {
        let err = enumerate_cycles(&DirectedNetwork::new(10), 8, 10).unwrap_err();
        assert_eq!(
            err,
            GraphError::TooLargeForEnumeration {
                n: 10,
                max_nodes: 8
            }
        );
    }

    #[test]
    fn budget_truncates() {
        // complete digraph on 4 nodes has 20 simple cycles
        let mut net = DirectedNetwork::new(4);
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    net.add_edge(a, b).unwrap();
                }
            }
        }
        let full = enumerate_cycles(&net, 64, 1000).unwrap();
        assert_eq!(full.len(), 20);
        assert!(!full.truncated);
        let exact = enumerate_cycles(&net, 64, 20).unwrap();
        assert!(!exact.truncated);
        let cut = enumerate_cycles(&net, 64, 5).unwrap();
        assert_eq!(cut.len(), 5);
        assert!(cut.truncated);
    }

    #[test]
    fn matches_brute_force_on_random_six_node_networks() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xc1c);
        for case in 0..400 {
            let p = [0.15, 0.3, 0.5, 0.8][case % 4];
            let net = DirectedNetwork::random(6, p, &mut rng);
            let report = enumerate_cycles(&net, 64, 1_000_000).unwrap();
            let got: BTreeSet<_> = report.cycles.iter().cloned().collect();
            assert_eq!(got.len(), report.len(), "duplicate cycles reported");
            assert_eq!(got, brute_force_cycles(&net), "{net:?}");
            assert_eq!(report.count_by_length.values().sum::<usize>(), report.len());
        }
    }

    #[test]
    fn core_alive_iff_some_cycle_exists() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for case in 0..300 {
            let net = DirectedNetwork::random(7, [0.05, 0.1, 0.2][case % 3], &mut rng);
            let alive = compute_sccs(&net).is_core_alive;
            let cycles = enumerate_cycles(&net, 64, 1).unwrap();
            assert_eq!(alive, !cycles.is_empty());
        }
    }
}
