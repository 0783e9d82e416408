//! Small hand-built networks with known structure, used by tests, benches,
//! and the `analyze` workbench. Matrices use the `a_ij` orientation of
//! [`DirectedNetwork::from_adjacency_text`]: row `i` marks the followers of `i`.

use crate::graph::DirectedNetwork;

/// Core {0,1,2} (a 2-cycle and a 3-cycle sharing users 0 and 1) with the chain 1 -> 3 -> 4.
pub const CORE_WITH_CHAIN: &str = "\
0 1 1 0 0
1 0 0 0 0
0 1 0 0 0
0 1 0 0 0
0 0 0 1 0
";

/// A single 3-cycle.
pub const THREE_CYCLE: &str = "\
0 0 1
1 0 0
0 1 0
";

/// Interlocking 3-cycle and 4-cycle.
pub const CYCLES_3_4: &str = "\
0 0 1 0
1 0 0 0
0 1 0 1
0 1 0 0
";

/// The 3/4-cycle core plus a 2-cycle between users 3 and 4.
pub const CYCLES_3_4_2: &str = "\
0 0 1 0 0
1 0 0 0 0
0 1 0 1 0
0 1 0 0 1
0 0 0 1 0
";

/// The 3/4-cycle core with the 4-cycle stretched to a 5-cycle.
pub const CYCLES_3_5: &str = "\
0 0 1 0 0
1 0 0 0 0
0 1 0 0 1
0 1 0 0 0
0 0 0 1 0
";

/// The 3/4/2-cycle core with the 2-cycle stretched to a 3-cycle.
pub const CYCLES_3_4_3: &str = "\
0 0 1 0 0 0
1 0 0 0 0 0
0 1 0 1 0 0
0 1 0 0 0 1
0 0 0 1 0 0
0 0 0 0 1 0
";

fn parse(text: &str) -> DirectedNetwork {
    DirectedNetwork::from_adjacency_text(text).expect("reference matrix is well formed")
}

pub fn core_with_chain() -> DirectedNetwork {
    parse(CORE_WITH_CHAIN)
}

pub fn three_cycle() -> DirectedNetwork {
    parse(THREE_CYCLE)
}

pub fn cycles_3_4() -> DirectedNetwork {
    parse(CYCLES_3_4)
}

pub fn cycles_3_4_2() -> DirectedNetwork {
    parse(CYCLES_3_4_2)
}

pub fn cycles_3_5() -> DirectedNetwork {
    parse(CYCLES_3_5)
}

pub fn cycles_3_4_3() -> DirectedNetwork {
    parse(CYCLES_3_4_3)
}

/// The five cycle-structure examples in order: one cycle, a second cycle
/// added, a third added, the second lengthened, the third lengthened.
pub fn cycle_examples() -> [DirectedNetwork; 5] {
    [
        three_cycle(),
        cycles_3_4(),
        cycles_3_4_2(),
        cycles_3_5(),
        cycles_3_4_3(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{enumerate_cycles, fixtures::figure_one};
    use std::collections::BTreeMap;

    #[test]
    fn core_with_chain_matches_edge_list() {
        assert_eq!(core_with_chain(), figure_one());
    }

    #[test]
    fn cycle_structures() {
        let expected: [&[(usize, usize)]; 5] = [
            &[(3, 1)],
            &[(3, 1), (4, 1)],
            &[(2, 1), (3, 1), (4, 1)],
            &[(3, 1), (5, 1)],
            &[(3, 2), (4, 1)],
        ];
        for (net, want) in cycle_examples().iter().zip(expected) {
            let report = enumerate_cycles(net, 64, 1000).unwrap();
            assert_eq!(
                report.count_by_length,
                want.iter().copied().collect::<BTreeMap<_, _>>()
            );
        }
    }
}
