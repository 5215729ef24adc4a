//! Recurrent components, the multi-resolution end tree, and the basin
//! decomposition induced by the ends of forward trajectories.
//!
//! A recurrent component is an adjacency-connected piece of the cyclic cell
//! set; at a fixed resolution these are the candidate "ends" of the flow.
//! Refining the grid refines the components, and the levels assemble into a
//! finite tree whose maximal branches approximate the profinite end space.
//! Each cell is assigned the component its forward tail determines, when that
//! component is unique; otherwise the cell is reported unresolved together
//! with the full set of components it reaches.

use thiserror::Error;

use crate::graph::{self, CellId, CellSet, FlowGraph};

/// Recurrent component id within one partition level.
pub type ComponentId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EndError {
    #[error(
        "nesting violation: level {level} component {component} projects onto \
         {targets:?} at the previous level"
    )]
    NestingViolation {
        level: usize,
        component: ComponentId,
        /// Parent components hit by the projection; `None` marks a projected
        /// cell outside the coarse recurrent set.
        targets: Vec<Option<ComponentId>>,
    },
    #[error("recurrent components {components:?} lie on a common dynamics cycle")]
    ComponentCycle { components: Vec<ComponentId> },
}

/// Partition of the cyclic cells of one graph into adjacency components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentPartition {
    level: usize,
    components: Vec<CellSet>,
    component_of: Vec<Option<ComponentId>>,
}

impl ComponentPartition {
    pub fn level(&self) -> usize {
        self.level
    }

    /// Components ordered by smallest member cell.
    pub fn components(&self) -> &[CellSet] {
        &self.components
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Component of a recurrent cell, `None` for non-recurrent cells.
    pub fn component_of(&self, cell: CellId) -> Option<ComponentId> {
        self.component_of[cell]
    }

    pub fn with_level(mut self, level: usize) -> Self {
        self.level = level;
        self
    }
}

/// Partitions the cyclic cells by spatial adjacency restricted to them.
pub fn recurrent_components(g: &FlowGraph) -> ComponentPartition {
    let n = g.n_cells();
    let cyclic = graph::cyclic_cells(g);
    let mut is_cyclic = vec![false; n];
    for &v in &cyclic {
        is_cyclic[v] = true;
    }
    let mut component_of: Vec<Option<ComponentId>> = vec![None; n];
    let mut components: Vec<CellSet> = Vec::new();
    for &start in &cyclic {
        if component_of[start].is_some() {
            continue;
        }
        let id = components.len();
        let mut comp = vec![start];
        component_of[start] = Some(id);
        let mut queue = vec![start];
        while let Some(v) = queue.pop() {
            for &w in g.neighbors(v) {
                if is_cyclic[w] && component_of[w].is_none() {
                    component_of[w] = Some(id);
                    comp.push(w);
                    queue.push(w);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    // iteration over `cyclic` is ascending, so components are already ordered
    // by smallest member
    ComponentPartition {
        level: 0,
        components,
        component_of,
    }
}

/// One maximal root-to-leaf branch of the end tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct End {
    /// Position in the canonical (path-lexicographic) enumeration.
    pub id: usize,
    /// Component ids per level, from the root down to the leaf.
    pub path: Vec<ComponentId>,
}

impl End {
    pub fn leaf_level(&self) -> usize {
        self.path.len() - 1
    }

    pub fn leaf_component(&self) -> ComponentId {
        *self.path.last().expect("non-empty path")
    }
}

/// Multi-resolution tree of recurrent components with refinement maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndTree {
    levels: Vec<ComponentPartition>,
    /// `parents[l - 1][c]` = parent at level `l - 1` of component `c` at
    /// level `l`, for `l >= 1`.
    parents: Vec<Vec<ComponentId>>,
    ends: Vec<End>,
}

impl EndTree {
    pub fn levels(&self) -> &[ComponentPartition] {
        &self.levels
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn parent(&self, level: usize, component: ComponentId) -> Option<ComponentId> {
        if level == 0 {
            None
        } else {
            Some(self.parents[level - 1][component])
        }
    }

    /// Maximal branches, sorted by path.
    pub fn ends(&self) -> &[End] {
        &self.ends
    }

    /// Maps a component of the finest level to the end terminating there.
    pub fn end_of_finest_component(&self, component: ComponentId) -> Option<usize> {
        let last = self.levels.len() - 1;
        self.ends
            .iter()
            .find(|e| e.leaf_level() == last && e.leaf_component() == component)
            .map(|e| e.id)
    }
}

/// Assembles partitions (ordered coarse → fine) into an end tree.
///
/// `projections[l]` maps each cell of level `l + 1` to its covering cell at
/// level `l`. Every fine component must project inside exactly one coarse
/// component; anything else signals an inconsistent outer approximation.
pub fn build_end_tree(
    levels: Vec<ComponentPartition>,
    projections: &[Vec<CellId>],
) -> Result<EndTree, EndError> {
    assert!(!levels.is_empty(), "at least one level");
    assert_eq!(projections.len(), levels.len() - 1, "one projection per refinement");

    let mut parents: Vec<Vec<ComponentId>> = Vec::new();
    for l in 1..levels.len() {
        let fine = &levels[l];
        let coarse = &levels[l - 1];
        let proj = &projections[l - 1];
        let mut parent_of = Vec::with_capacity(fine.n_components());
        for (c, comp) in fine.components().iter().enumerate() {
            let mut targets: Vec<Option<ComponentId>> =
                comp.iter().map(|&v| coarse.component_of(proj[v])).collect();
            targets.sort_unstable();
            targets.dedup();
            match targets.as_slice() {
                [Some(parent)] => parent_of.push(*parent),
                _ => {
                    return Err(EndError::NestingViolation {
                        level: l,
                        component: c,
                        targets,
                    })
                }
            }
        }
        parents.push(parent_of);
    }

    // children counts decide which (level, component) pairs are leaves
    let mut has_child: Vec<Vec<bool>> = levels
        .iter()
        .map(|p| vec![false; p.n_components()])
        .collect();
    for (l, parent_of) in parents.iter().enumerate() {
        for &p in parent_of {
            has_child[l][p] = true;
        }
    }

    let mut ends = Vec::new();
    for (l, children) in has_child.iter().enumerate() {
        for (c, &has) in children.iter().enumerate() {
            let is_leaf = l == levels.len() - 1 || !has;
            if !is_leaf {
                continue;
            }
            let mut path = vec![c];
            let (mut level, mut comp) = (l, c);
            while level > 0 {
                comp = parents[level - 1][comp];
                path.push(comp);
                level -= 1;
            }
            path.reverse();
            ends.push(path);
        }
    }
    ends.sort();
    let ends = ends
        .into_iter()
        .enumerate()
        .map(|(id, path)| End { id, path })
        .collect();

    Ok(EndTree {
        levels,
        parents,
        ends,
    })
}

/// Fate of a single cell in the basin decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BasinAssignment {
    /// The forward tail determines this single component.
    Resolved(ComponentId),
    /// The cell reaches all of these components (always at least two).
    Unresolved(Vec<ComponentId>),
}

/// Total assignment of cells to ends (or unresolved component sets).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasinMap {
    assignment: Vec<BasinAssignment>,
    resolved_counts: Vec<usize>,
    unresolved_count: usize,
}

impl BasinMap {
    pub fn assignment(&self, cell: CellId) -> &BasinAssignment {
        &self.assignment[cell]
    }

    pub fn assignments(&self) -> &[BasinAssignment] {
        &self.assignment
    }

    /// Number of cells resolved to each component.
    pub fn resolved_counts(&self) -> &[usize] {
        &self.resolved_counts
    }

    pub fn unresolved_count(&self) -> usize {
        self.unresolved_count
    }

    #[cfg(test)]
    pub(crate) fn from_assignments(assignment: Vec<BasinAssignment>, n_components: usize) -> Self {
        let mut resolved_counts = vec![0; n_components];
        let mut unresolved_count = 0;
        for a in &assignment {
            match a {
                BasinAssignment::Resolved(c) => resolved_counts[*c] += 1,
                BasinAssignment::Unresolved(_) => unresolved_count += 1,
            }
        }
        BasinMap {
            assignment,
            resolved_counts,
            unresolved_count,
        }
    }
}

/// Sorted set of components reachable from each cell, computed once over the
/// condensation in reverse topological order.
fn reachable_component_sets(g: &FlowGraph, p: &ComponentPartition) -> Vec<Vec<ComponentId>> {
    let dag = graph::scc_condensation(g);
    let n_sccs = dag.n_sccs();

    let mut scc_succs: Vec<Vec<usize>> = vec![Vec::new(); n_sccs];
    let mut indegree = vec![0usize; n_sccs];
    for &(a, b) in dag.dag_edges() {
        scc_succs[a].push(b);
        indegree[b] += 1;
    }

    // Kahn order; the condensation is acyclic by construction
    let mut topo = Vec::with_capacity(n_sccs);
    let mut ready: Vec<usize> = (0..n_sccs).filter(|&s| indegree[s] == 0).collect();
    while let Some(s) = ready.pop() {
        topo.push(s);
        for &t in &scc_succs[s] {
            indegree[t] -= 1;
            if indegree[t] == 0 {
                ready.push(t);
            }
        }
    }
    debug_assert_eq!(topo.len(), n_sccs);

    let mut scc_sets: Vec<Vec<ComponentId>> = vec![Vec::new(); n_sccs];
    for &s in topo.iter().rev() {
        let mut set: Vec<ComponentId> = Vec::new();
        if dag.is_cyclic(s) {
            for &v in dag.members(s) {
                if let Some(c) = p.component_of(v) {
                    set.push(c);
                }
            }
        }
        for &t in &scc_succs[s] {
            set.extend_from_slice(&scc_sets[t]);
        }
        set.sort_unstable();
        set.dedup();
        scc_sets[s] = set;
    }

    (0..g.n_cells())
        .map(|v| scc_sets[dag.scc_of(v)].clone())
        .collect()
}

/// Assigns each cell to an end: recurrent cells to their own component,
/// other cells to the unique component their forward tail reaches. Cells
/// whose tail straddles several components stay unresolved, which surfaces
/// multivalued-map straddling instead of hiding it.
pub fn assign_basins(g: &FlowGraph, p: &ComponentPartition) -> BasinMap {
    let reach_sets = reachable_component_sets(g, p);
    let mut assignment = Vec::with_capacity(g.n_cells());
    let mut resolved_counts = vec![0usize; p.n_components()];
    let mut unresolved_count = 0usize;
    for (v, set) in reach_sets.iter().enumerate() {
        let a = match p.component_of(v) {
            Some(own) => BasinAssignment::Resolved(own),
            None => {
                debug_assert!(!set.is_empty(), "F-totality reaches some cycle");
                if set.len() == 1 {
                    BasinAssignment::Resolved(set[0])
                } else {
                    BasinAssignment::Unresolved(set.clone())
                }
            }
        };
        match &a {
            BasinAssignment::Resolved(c) => resolved_counts[*c] += 1,
            BasinAssignment::Unresolved(_) => unresolved_count += 1,
        }
        assignment.push(a);
    }
    BasinMap {
        assignment,
        resolved_counts,
        unresolved_count,
    }
}

/// Per-end verdicts of the representability checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepresentabilityVerdict {
    pub component: ComponentId,
    /// Some cell resolves to this end.
    pub omega_representable: bool,
    /// Some resolved cell reaches a recurrent cell of the component.
    pub limit_representable: bool,
    /// Every resolved cell's cyclic omega-limit stays within the component
    /// and the components it feeds.
    pub omega_soundness: bool,
    /// No cell outside the component resolves to it.
    pub self_only: bool,
}

/// Checks, per end: (a) whether it is reached by some resolved cell,
/// (b) whether a resolved cell reaches recurrent cells of the component, and
/// (c) that resolution is sound with respect to the reachable component
/// sets. Cells resolved by unique reachability are checked against their end
/// alone; recurrent cells, which own their component by definition, are
/// checked against the component plus its downstream components.
pub fn representability_report(
    g: &FlowGraph,
    p: &ComponentPartition,
    b: &BasinMap,
) -> Vec<RepresentabilityVerdict> {
    let reach_sets = reachable_component_sets(g, p);
    let edges = component_edges(p, &reach_sets);
    let downstream = downstream_closure(p.n_components(), &edges);

    let mut omega_representable = vec![false; p.n_components()];
    let mut limit_representable = vec![false; p.n_components()];
    let mut omega_soundness = vec![true; p.n_components()];
    let mut outside_resolved = vec![false; p.n_components()];

    for (v, reach) in reach_sets.iter().enumerate() {
        let BasinAssignment::Resolved(a) = *b.assignment(v) else {
            continue;
        };
        omega_representable[a] = true;
        if reach.binary_search(&a).is_ok() {
            limit_representable[a] = true;
        }
        let sound = match p.component_of(v) {
            // reachability-determined: the tail must see this end only
            None => reach.as_slice() == [a],
            // own-component priority: anything further reached must be fed
            // by the component itself
            Some(own) => {
                debug_assert_eq!(own, a);
                reach
                    .iter()
                    .all(|c| *c == a || downstream[a].binary_search(c).is_ok())
            }
        };
        if !sound {
            omega_soundness[a] = false;
        }
        if p.component_of(v) != Some(a) {
            outside_resolved[a] = true;
        }
    }

    (0..p.n_components())
        .map(|c| RepresentabilityVerdict {
            component: c,
            omega_representable: omega_representable[c],
            limit_representable: limit_representable[c],
            omega_soundness: omega_soundness[c],
            self_only: !outside_resolved[c],
        })
        .collect()
}

/// Directed edges between components: `a → b` when some cell of `a` reaches
/// a cell of `b`.
fn component_edges(
    p: &ComponentPartition,
    reach_sets: &[Vec<ComponentId>],
) -> Vec<(ComponentId, ComponentId)> {
    let mut edges = Vec::new();
    for (a, comp) in p.components().iter().enumerate() {
        for &v in comp {
            for &b in &reach_sets[v] {
                if b != a {
                    edges.push((a, b));
                }
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

fn downstream_closure(
    n_components: usize,
    edges: &[(ComponentId, ComponentId)],
) -> Vec<Vec<ComponentId>> {
    let mut succs = vec![Vec::new(); n_components];
    for &(a, b) in edges {
        succs[a].push(b);
    }
    (0..n_components)
        .map(|start| {
            let mut seen = vec![false; n_components];
            let mut queue = vec![start];
            let mut out = Vec::new();
            while let Some(c) = queue.pop() {
                for &d in &succs[c] {
                    if !seen[d] {
                        seen[d] = true;
                        out.push(d);
                        queue.push(d);
                    }
                }
            }
            out.sort_unstable();
            out
        })
        .collect()
}

/// Reachability order between recurrent components, as a DAG.
///
/// An edge `a → b` records that some cell of `a` dynamics-reaches a cell of
/// `b`. Mutual reachability between distinct components means the adjacency
/// partition split a dynamically recurrent region, which is reported as
/// `ComponentCycle` rather than silently merged.
pub fn morse_like_graph(
    g: &FlowGraph,
    p: &ComponentPartition,
) -> Result<Vec<(ComponentId, ComponentId)>, EndError> {
    let reach_sets = reachable_component_sets(g, p);
    let edges = component_edges(p, &reach_sets);

    // Kahn check: components left with positive in-degree sit on a cycle
    let n = p.n_components();
    let mut indegree = vec![0usize; n];
    let mut succs = vec![Vec::new(); n];
    for &(a, b) in &edges {
        succs[a].push(b);
        indegree[b] += 1;
    }
    let mut ready: Vec<usize> = (0..n).filter(|&c| indegree[c] == 0).collect();
    let mut consumed = 0;
    while let Some(c) = ready.pop() {
        consumed += 1;
        for &d in &succs[c] {
            indegree[d] -= 1;
            if indegree[d] == 0 {
                ready.push(d);
            }
        }
    }
    if consumed < n {
        let components = (0..n).filter(|&c| indegree[c] > 0).collect();
        return Err(EndError::ComponentCycle { components });
    }
    Ok(edges)
}
