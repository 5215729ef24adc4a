//! Shared test graphs.

use crate::graph::FlowGraph;

/// Canonical test graph: F: 0→{1}, 1→{2,4}, 2→{3}, 3→{2}, 4→{4};
/// adjacency 0–1, 1–2, 2–3.
pub(crate) fn g1() -> FlowGraph {
    FlowGraph::new(
        5,
        &[(0, 1), (1, 2), (1, 4), (2, 3), (3, 2), (4, 4)],
        &[(0, 1), (1, 2), (2, 3)],
    )
    .unwrap()
}

/// 0→1→2→2 with no adjacency.
pub(crate) fn path_graph() -> FlowGraph {
    FlowGraph::new(3, &[(0, 1), (1, 2), (2, 2)], &[]).unwrap()
}

/// Every cell fixed, no adjacency.
pub(crate) fn all_self_loops(n: usize) -> FlowGraph {
    let dyn_edges: Vec<_> = (0..n).map(|v| (v, v)).collect();
    FlowGraph::new(n, &dyn_edges, &[]).unwrap()
}
