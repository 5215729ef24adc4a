//! The combinatorial externology: the absorbing image filtration, the limit
//! and bar-limit cell sets it cuts out, the one-collar spatial closure
//! operator, and the regularity-at-infinity check.
//!
//! A filtration level stands for one cofinal absorbing open set of the flow;
//! intersecting the levels yields the limit set, intersecting their spatial
//! closures the bar-limit set. On an adjacency-free graph closure is the
//! identity and the two coincide.

use thiserror::Error;

use crate::graph::{self, CellId, CellSet, FlowGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExternologyError {
    #[error("a filtration needs at least one level")]
    EmptyFiltration,
    #[error("filtration level {level} is not contained in level {}", level - 1)]
    NotNested { level: usize },
}

/// Nested decreasing chain `Im_0 ⊇ Im_1 ⊇ … ⊇ Im_{k*}` of absorbing cell
/// sets, stabilizing at the eventual image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbsorbingFiltration {
    levels: Vec<CellSet>,
    k_star: usize,
}

impl AbsorbingFiltration {
    /// Builds a filtration from explicit levels (each sorted ascending).
    /// Trailing repeats of the stable level are dropped.
    pub fn new(levels: Vec<CellSet>) -> Result<Self, ExternologyError> {
        if levels.is_empty() {
            return Err(ExternologyError::EmptyFiltration);
        }
        for (i, level) in levels.iter().enumerate().skip(1) {
            if !is_subset(level, &levels[i - 1]) {
                return Err(ExternologyError::NotNested { level: i });
            }
        }
        let mut levels = levels;
        while levels.len() > 1 && levels[levels.len() - 1] == levels[levels.len() - 2] {
            levels.pop();
        }
        let k_star = levels.len() - 1;
        Ok(AbsorbingFiltration { levels, k_star })
    }

    /// Internal constructor for the strictly-decreasing chain produced by
    /// `graph::eventual_image`.
    pub(crate) fn from_image_chain(levels: Vec<CellSet>) -> Self {
        let k_star = levels.len() - 1;
        AbsorbingFiltration { levels, k_star }
    }

    /// The levels `Im_0 ..= Im_{k*}`.
    pub fn levels(&self) -> &[CellSet] {
        &self.levels
    }

    /// Index at which the chain stabilizes.
    pub fn k_star(&self) -> usize {
        self.k_star
    }

    /// The eventual image: the last (smallest) level.
    pub fn ei(&self) -> &CellSet {
        &self.levels[self.k_star]
    }
}

/// Intersection of all filtration levels; equals the eventual image because
/// the chain is nested.
pub fn limit_space(f: &AbsorbingFiltration) -> CellSet {
    f.ei().clone()
}

/// One-collar closure: `s` plus every cell adjacent to `s`. Not idempotent;
/// each application adds a single collar.
pub fn spatial_closure(g: &FlowGraph, s: &[CellId]) -> CellSet {
    let mut mask = vec![false; g.n_cells()];
    for &v in s {
        mask[v] = true;
        for &w in g.neighbors(v) {
            mask[w] = true;
        }
    }
    graph::mask_to_set(&mask)
}

/// Intersection of the spatial closures of all filtration levels.
pub fn bar_limit_space(g: &FlowGraph, f: &AbsorbingFiltration) -> CellSet {
    let mut out: Option<CellSet> = None;
    for level in f.levels() {
        let closed = spatial_closure(g, level);
        out = Some(match out {
            None => closed,
            Some(acc) => intersect_sorted(&acc, &closed),
        });
    }
    out.unwrap_or_default()
}

/// Whether every level contains the closure of some level.
///
/// The levels are nested, so `closure(Im_{k*})` is the smallest closure any
/// level produces: it witnesses every level or none does.
pub fn regular_at_infinity(g: &FlowGraph, f: &AbsorbingFiltration) -> bool {
    let witness = spatial_closure(g, f.ei());
    f.levels().iter().all(|level| is_subset(&witness, level))
}

/// Sizes and verdicts for the chain
/// `cyclic_cells ⊆ EI = big_omega ⊆ bar_limit_space`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InclusionChainReport {
    pub cyclic_size: usize,
    pub ei_size: usize,
    pub big_omega_size: usize,
    pub bar_limit_size: usize,
    pub cyclic_in_ei: bool,
    pub ei_equals_big_omega: bool,
    pub big_omega_in_bar_limit: bool,
}

impl InclusionChainReport {
    pub fn all_hold(&self) -> bool {
        self.cyclic_in_ei && self.ei_equals_big_omega && self.big_omega_in_bar_limit
    }
}

/// Evaluates the inclusion chain on a graph. Every verdict is a theorem of
/// the combinatorial model, so `all_hold` is expected on valid inputs.
pub fn inclusion_chain_report(g: &FlowGraph, f: &AbsorbingFiltration) -> InclusionChainReport {
    let cyclic = graph::cyclic_cells(g);
    let big_omega = graph::big_omega(g);
    let bar_limit = bar_limit_space(g, f);
    InclusionChainReport {
        cyclic_size: cyclic.len(),
        ei_size: f.ei().len(),
        big_omega_size: big_omega.len(),
        bar_limit_size: bar_limit.len(),
        cyclic_in_ei: is_subset(&cyclic, f.ei()),
        ei_equals_big_omega: f.ei() == &big_omega,
        big_omega_in_bar_limit: is_subset(&big_omega, &bar_limit),
    }
}

/// `a ⊆ b` for sorted sets.
pub(crate) fn is_subset(a: &[CellId], b: &[CellId]) -> bool {
    let mut it = b.iter();
    'outer: for &x in a {
        for &y in it.by_ref() {
            if y == x {
                continue 'outer;
            }
            if y > x {
                return false;
            }
        }
        return false;
    }
    true
}

/// Intersection of two sorted sets.
pub(crate) fn intersect_sorted(a: &[CellId], b: &[CellId]) -> CellSet {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}
