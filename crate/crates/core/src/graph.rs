//! The combinatorial kernel: a directed multivalued cell map together with a
//! spatial adjacency relation, and the reachability / recurrence / limit
//! primitives everything else is built from.
//!
//! Cells are dense integer ids `0..n_cells`. The dynamics relation `F` must
//! be total (every cell has at least one successor), which mirrors a flow
//! having a forward trajectory through every point. Adjacency is symmetric
//! and irreflexive and carries the spatial topology of the cell complex.
//!
//! All operations are read-only and deterministic; every returned cell set is
//! sorted ascending.

use thiserror::Error;

use crate::externology::AbsorbingFiltration;

/// Dense cell identifier.
pub type CellId = usize;

/// A set of cells, kept sorted ascending and duplicate-free.
pub type CellSet = Vec<CellId>;

/// Optional geometric meaning of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellLabel {
    /// No geometric information (graphs loaded from files).
    Plain,
    /// A box of a 2-d grid, by column and row index.
    Grid { ix: u32, iy: u32 },
    /// The added point at infinity of a one-point compactification.
    Infinity,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph must have at least one cell")]
    EmptyGraph,
    #[error("cell {cell} out of range (n_cells = {n_cells})")]
    CellOutOfRange { cell: CellId, n_cells: usize },
    #[error("F-totality violated: cell {cell} has no dynamics successor")]
    MissingSuccessors { cell: CellId },
    #[error("adjacency must be irreflexive: cell {cell} listed adjacent to itself")]
    SelfAdjacency { cell: CellId },
    #[error("cell {cell} has no dynamics predecessor, reversal undefined")]
    SourceCellWithoutPredecessor { cell: CellId },
}

/// Finite multivalued cell map plus spatial adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowGraph {
    successors: Vec<Vec<CellId>>,
    adjacency: Vec<Vec<CellId>>,
    labels: Vec<CellLabel>,
}

impl FlowGraph {
    /// Builds a graph from dynamics edges `(src, dst)` and undirected
    /// adjacency pairs. Adjacency pairs are symmetrized.
    pub fn new(
        n_cells: usize,
        dyn_edges: &[(CellId, CellId)],
        adj_edges: &[(CellId, CellId)],
    ) -> Result<Self, GraphError> {
        let mut successors = vec![Vec::new(); n_cells];
        for &(src, dst) in dyn_edges {
            check_cell(src, n_cells)?;
            check_cell(dst, n_cells)?;
            successors[src].push(dst);
        }
        Self::from_successors(successors, adj_edges)
    }

    /// Builds a graph from per-cell successor lists.
    pub fn from_successors(
        successors: Vec<Vec<CellId>>,
        adj_edges: &[(CellId, CellId)],
    ) -> Result<Self, GraphError> {
        let n_cells = successors.len();
        let labels = vec![CellLabel::Plain; n_cells];
        Self::from_parts(successors, adj_edges, labels)
    }

    /// Builds a graph with explicit per-cell labels.
    pub fn from_parts(
        mut successors: Vec<Vec<CellId>>,
        adj_edges: &[(CellId, CellId)],
        labels: Vec<CellLabel>,
    ) -> Result<Self, GraphError> {
        let n_cells = successors.len();
        if n_cells == 0 {
            return Err(GraphError::EmptyGraph);
        }
        assert_eq!(labels.len(), n_cells, "one label per cell");
        for (cell, succ) in successors.iter_mut().enumerate() {
            for &dst in succ.iter() {
                check_cell(dst, n_cells)?;
            }
            succ.sort_unstable();
            succ.dedup();
            if succ.is_empty() {
                return Err(GraphError::MissingSuccessors { cell });
            }
        }
        let mut adjacency = vec![Vec::new(); n_cells];
        for &(a, b) in adj_edges {
            check_cell(a, n_cells)?;
            check_cell(b, n_cells)?;
            if a == b {
                return Err(GraphError::SelfAdjacency { cell: a });
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
            nbrs.dedup();
        }
        Ok(FlowGraph {
            successors,
            adjacency,
            labels,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.successors.len()
    }

    /// Dynamics successors of a cell (sorted).
    pub fn successors(&self, cell: CellId) -> &[CellId] {
        &self.successors[cell]
    }

    /// Spatial neighbours of a cell (sorted).
    pub fn neighbors(&self, cell: CellId) -> &[CellId] {
        &self.adjacency[cell]
    }

    pub fn label(&self, cell: CellId) -> CellLabel {
        self.labels[cell]
    }

    /// All dynamics edges in (src, dst) lexicographic order.
    pub fn dyn_edges(&self) -> impl Iterator<Item = (CellId, CellId)> + '_ {
        self.successors
            .iter()
            .enumerate()
            .flat_map(|(src, succ)| succ.iter().map(move |&dst| (src, dst)))
    }

    /// Undirected adjacency pairs with `a < b`.
    pub fn adj_pairs(&self) -> impl Iterator<Item = (CellId, CellId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, nbrs)| nbrs.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
    }

    pub fn dyn_edge_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }
}

fn check_cell(cell: CellId, n_cells: usize) -> Result<(), GraphError> {
    if cell >= n_cells {
        Err(GraphError::CellOutOfRange { cell, n_cells })
    } else {
        Ok(())
    }
}

/// Strongly connected components id.
pub type SccId = usize;

/// Condensation of the dynamics relation. SCC ids are assigned by smallest
/// member cell, so the decomposition is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondensationDag {
    scc_of: Vec<SccId>,
    scc_members: Vec<CellSet>,
    dag_edges: Vec<(SccId, SccId)>,
    cyclic: Vec<bool>,
}

impl CondensationDag {
    pub fn n_sccs(&self) -> usize {
        self.scc_members.len()
    }

    pub fn scc_of(&self, cell: CellId) -> SccId {
        self.scc_of[cell]
    }

    pub fn members(&self, scc: SccId) -> &[CellId] {
        &self.scc_members[scc]
    }

    /// True when the SCC contains a dynamics cycle (size > 1 or a self-loop).
    pub fn is_cyclic(&self, scc: SccId) -> bool {
        self.cyclic[scc]
    }

    /// Edges between distinct SCCs, lexicographically sorted.
    pub fn dag_edges(&self) -> &[(SccId, SccId)] {
        &self.dag_edges
    }
}

/// Tarjan condensation of the dynamics edges.
pub fn scc_condensation(g: &FlowGraph) -> CondensationDag {
    let n = g.n_cells();

    // Iterative Tarjan; grids produce paths long enough to overflow the
    // stack of the recursive version.
    const UNSET: usize = usize::MAX;
    let mut index = vec![UNSET; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<CellId> = Vec::new();
    let mut next_index = 0usize;
    let mut raw_comps: Vec<Vec<CellId>> = Vec::new();
    // (cell, next successor position)
    let mut call: Vec<(CellId, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSET {
            continue;
        }
        call.push((root, 0));
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos == 0 {
                index[v] = next_index;
                lowlink[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&w) = g.successors(v).get(*pos) {
                *pos += 1;
                if index[w] == UNSET {
                    call.push((w, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
            } else {
                if lowlink[v] == index[v] {
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
                    raw_comps.push(comp);
                }
                call.pop();
                if let Some(&mut (parent, _)) = call.last_mut() {
                    lowlink[parent] = lowlink[parent].min(lowlink[v]);
                }
            }
        }
    }

    raw_comps.sort_by_key(|comp| comp[0]);
    let mut scc_of = vec![0usize; n];
    for (id, comp) in raw_comps.iter().enumerate() {
        for &v in comp {
            scc_of[v] = id;
        }
    }
    let mut cyclic = vec![false; raw_comps.len()];
    let mut dag_edges = Vec::new();
    for (src, dst) in g.dyn_edges() {
        let (a, b) = (scc_of[src], scc_of[dst]);
        if a == b {
            cyclic[a] = true; // size > 1 always hits this; size 1 needs a self-loop
        } else {
            dag_edges.push((a, b));
        }
    }
    dag_edges.sort_unstable();
    dag_edges.dedup();

    CondensationDag {
        scc_of,
        scc_members: raw_comps,
        dag_edges,
        cyclic,
    }
}

/// Cells lying on a dynamics cycle — the combinatorial periodic set.
pub fn cyclic_cells(g: &FlowGraph) -> CellSet {
    let dag = scc_condensation(g);
    let mut out = Vec::new();
    for scc in 0..dag.n_sccs() {
        if dag.is_cyclic(scc) {
            out.extend_from_slice(dag.members(scc));
        }
    }
    out.sort_unstable();
    out
}

/// Least superset of `seed` closed under the dynamics relation.
pub fn forward_reach(g: &FlowGraph, seed: &[CellId]) -> CellSet {
    let n = g.n_cells();
    let mut in_reach = vec![false; n];
    let mut queue: Vec<CellId> = Vec::new();
    for &v in seed {
        if !in_reach[v] {
            in_reach[v] = true;
            queue.push(v);
        }
    }
    while let Some(v) = queue.pop() {
        for &w in g.successors(v) {
            if !in_reach[w] {
                in_reach[w] = true;
                queue.push(w);
            }
        }
    }
    mask_to_set(&in_reach)
}

/// The decreasing chain `Im_0 = AllCells ⊇ Im_1 = F(Im_0) ⊇ …`, stopping at
/// the first repeated level. The last level is the eventual image: the
/// minimal absorbing cell set, fixed by `F`.
pub fn eventual_image(g: &FlowGraph) -> AbsorbingFiltration {
    let n = g.n_cells();
    let mut levels: Vec<CellSet> = vec![(0..n).collect()];
    loop {
        let current = levels.last().expect("at least one level");
        let mut mask = vec![false; n];
        for &v in current {
            for &w in g.successors(v) {
                mask[w] = true;
            }
        }
        let next = mask_to_set(&mask);
        if next == *current {
            break;
        }
        levels.push(next);
    }
    AbsorbingFiltration::from_image_chain(levels)
}

/// Whether every long enough forward image lands and stays inside `e`.
///
/// Decided through the eventual image: `e` is absorbing iff `EI ⊆ e`. The
/// quantifier form (`∀v ∃n₀ ∀n ≥ n₀: F^n(v) ⊆ e`) is kept as a test oracle.
pub fn is_absorbing(g: &FlowGraph, e: &[CellId]) -> bool {
    let mut in_e = vec![false; g.n_cells()];
    for &v in e {
        in_e[v] = true;
    }
    eventual_image(g).ei().iter().all(|&v| in_e[v])
}

/// Cells admitting arbitrarily long dynamics paths from `v`: the forward
/// closure of the cyclic cells reachable from `v`. Non-empty because `F` is
/// total, so every forward path runs into a cycle.
pub fn omega_limit_cell(g: &FlowGraph, v: CellId) -> CellSet {
    let reach = forward_reach(g, &[v]);
    let dag = scc_condensation(g);
    let seeds: CellSet = reach
        .into_iter()
        .filter(|&w| dag.is_cyclic(dag.scc_of(w)))
        .collect();
    forward_reach(g, &seeds)
}

/// Union of `omega_limit_cell` over all cells.
///
/// Every cell's omega set is the forward closure of the cyclic cells it
/// reaches, and every cyclic cell contributes itself, so the union collapses
/// to one forward closure of the whole cyclic set. Equality with the
/// per-cell union and with the eventual image is covered by the test suites.
pub fn big_omega(g: &FlowGraph) -> CellSet {
    forward_reach(g, &cyclic_cells(g))
}

/// Largest subset of `a` in which every cell has both a successor and a
/// predecessor — the cells of `a` lying on a bi-infinite dynamics path
/// inside `a`.
pub fn inv_set(g: &FlowGraph, a: &[CellId]) -> CellSet {
    let n = g.n_cells();
    let mut keep = vec![false; n];
    for &v in a {
        keep[v] = true;
    }
    loop {
        let mut changed = false;
        // forward prune: drop cells with no successor inside the set
        for v in 0..n {
            if keep[v] && !g.successors(v).iter().any(|&w| keep[w]) {
                keep[v] = false;
                changed = true;
            }
        }
        // backward prune: drop cells no kept cell maps into
        let mut has_pred = vec![false; n];
        for (v, &kept) in keep.iter().enumerate() {
            if kept {
                for &w in g.successors(v) {
                    has_pred[w] = true;
                }
            }
        }
        for v in 0..n {
            if keep[v] && !has_pred[v] {
                keep[v] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    mask_to_set(&keep)
}

/// Transposes the dynamics relation, keeping adjacency and labels.
///
/// Fails when some cell has no predecessor: the transpose would not be
/// F-total, which signals the input is not a flow discretization.
pub fn reverse_graph(g: &FlowGraph) -> Result<FlowGraph, GraphError> {
    let n = g.n_cells();
    let mut predecessors = vec![Vec::new(); n];
    for (src, dst) in g.dyn_edges() {
        predecessors[dst].push(src);
    }
    if let Some(cell) = (0..n).find(|&v| predecessors[v].is_empty()) {
        return Err(GraphError::SourceCellWithoutPredecessor { cell });
    }
    let adj: Vec<(CellId, CellId)> = g.adj_pairs().collect();
    FlowGraph::from_parts(predecessors, &adj, g.labels.clone())
}

pub(crate) fn mask_to_set(mask: &[bool]) -> CellSet {
    mask.iter()
        .enumerate()
        .filter_map(|(v, &m)| m.then_some(v))
        .collect()
}
