//! Shared test support: brute-force oracles over small graphs, the canonical
//! fixtures, exhaustive enumeration of tiny graphs, and a seeded random
//! graph corpus.
//!
//! The oracles deliberately take different routes than the library: image-set
//! iteration instead of worklist search, literal quantifiers instead of the
//! eventual-image shortcut, path-length dynamic programming instead of
//! pruning. Cell sets are `u32` bitmasks, so everything here stays exact and
//! allocation-free for graphs of at most 31 cells.

#![allow(dead_code)]

use exflow_core::graph::{CellId, CellSet, FlowGraph};

pub fn g1() -> FlowGraph {
    FlowGraph::new(
        5,
        &[(0, 1), (1, 2), (1, 4), (2, 3), (3, 2), (4, 4)],
        &[(0, 1), (1, 2), (2, 3)],
    )
    .unwrap()
}

pub fn mask_of(set: &[CellId]) -> u32 {
    set.iter().fold(0u32, |m, &v| m | (1 << v))
}

pub fn set_of(mask: u32, n: usize) -> CellSet {
    (0..n).filter(|&v| mask & (1 << v) != 0).collect()
}

/// One-step image of a mask.
pub fn step(g: &FlowGraph, mask: u32) -> u32 {
    let mut out = 0u32;
    for v in 0..g.n_cells() {
        if mask & (1 << v) != 0 {
            for &w in g.successors(v) {
                out |= 1 << w;
            }
        }
    }
    out
}

/// Forward reachability by accumulating image sets for `n_cells` rounds.
pub fn oracle_reach(g: &FlowGraph, seed: u32) -> u32 {
    let mut acc = seed;
    for _ in 0..g.n_cells() {
        acc |= step(g, acc);
    }
    acc
}

/// Cells on a dynamics cycle: `v ∈ F^k(v)` for some `1 ≤ k ≤ n_cells`.
pub fn oracle_cyclic(g: &FlowGraph) -> u32 {
    let n = g.n_cells();
    let mut out = 0u32;
    for v in 0..n {
        let mut cur = 1u32 << v;
        for _ in 1..=n {
            cur = step(g, cur);
            if cur & (1 << v) != 0 {
                out |= 1 << v;
                break;
            }
        }
    }
    out
}

/// Pairwise-mutual-reachability partition, ordered by smallest member.
pub fn oracle_sccs(g: &FlowGraph) -> Vec<CellSet> {
    let n = g.n_cells();
    let reach: Vec<u32> = (0..n).map(|v| oracle_reach(g, 1 << v)).collect();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for v in 0..n {
        if seen[v] {
            continue;
        }
        let comp: CellSet = (0..n)
            .filter(|&w| reach[v] & (1 << w) != 0 && reach[w] & (1 << v) != 0)
            .collect();
        for &w in &comp {
            seen[w] = true;
        }
        comps.push(comp);
    }
    comps
}

/// The literal absorbing quantifier at the stated horizon:
/// `∀v ∃n₀ ≤ 2n ∀k ∈ [n₀, 2n]: F^k(v) ⊆ e`.
pub fn oracle_absorbing(g: &FlowGraph, e_mask: u32) -> bool {
    let n = g.n_cells();
    let horizon = 2 * n;
    for v in 0..n {
        let mut images = Vec::with_capacity(horizon + 1);
        let mut cur = 1u32 << v;
        images.push(cur);
        for _ in 1..=horizon {
            cur = step(g, cur);
            images.push(cur);
        }
        let ok = (0..=horizon)
            .any(|n0| images[n0..].iter().all(|&im| im & !e_mask == 0));
        if !ok {
            return false;
        }
    }
    true
}

/// Cells of `a` on a bi-infinite dynamics path inside `a`: path-length DP in
/// both directions, to a fixed point.
pub fn oracle_inv_set(g: &FlowGraph, a_mask: u32) -> u32 {
    let n = g.n_cells();
    // forward: cells starting arbitrarily long paths within a
    let mut fwd = a_mask;
    loop {
        let mut next = 0u32;
        for v in 0..n {
            if a_mask & (1 << v) != 0
                && g.successors(v).iter().any(|&w| fwd & (1 << w) != 0)
            {
                next |= 1 << v;
            }
        }
        next &= a_mask;
        if next == fwd {
            break;
        }
        fwd = next;
    }
    // backward: cells ending arbitrarily long paths within a
    let mut bwd = a_mask;
    loop {
        let mut next = 0u32;
        for v in 0..n {
            if bwd & (1 << v) != 0 {
                for &w in g.successors(v) {
                    if a_mask & (1 << w) != 0 {
                        next |= 1 << w;
                    }
                }
            }
        }
        next &= a_mask;
        if next == bwd {
            break;
        }
        bwd = next;
    }
    fwd & bwd
}

/// Limsup of the image-set trajectory of `{v}`: union of the sets on the
/// eventual cycle of `S ↦ F(S)`.
pub fn oracle_omega(g: &FlowGraph, v: CellId) -> u32 {
    let mut seen: Vec<u32> = vec![1 << v];
    loop {
        let next = step(g, *seen.last().unwrap());
        if let Some(start) = seen.iter().position(|&s| s == next) {
            return seen[start..].iter().fold(0u32, |acc, &s| acc | s);
        }
        seen.push(next);
    }
}

/// Splitmix64; deterministic corpus seeds.
pub struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }
}

/// A random valid graph with `1..=max_n` cells.
pub fn random_graph(rng: &mut SplitMix64, max_n: usize) -> FlowGraph {
    let n = 1 + rng.below(max_n as u64) as usize;
    let mut successors = Vec::with_capacity(n);
    for _ in 0..n {
        let mask = 1 + rng.below((1u64 << n) - 1) as u32;
        successors.push(set_of(mask, n));
    }
    let mut adj = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.below(3) == 0 {
                adj.push((a, b));
            }
        }
    }
    FlowGraph::from_successors(successors, &adj).unwrap()
}

/// Number of valid graphs with exactly `n` cells.
pub fn graph_count(n: usize) -> u64 {
    let dyn_choices = ((1u64 << n) - 1).pow(n as u32);
    let adj_choices = 1u64 << (n * (n - 1) / 2);
    dyn_choices * adj_choices
}

/// Decodes graph `index` of the exhaustive enumeration for `n` cells:
/// every combination of non-empty successor sets and symmetric irreflexive
/// adjacency relations.
pub fn decode_graph(n: usize, index: u64) -> FlowGraph {
    let dyn_base = (1u64 << n) - 1;
    let mut code = index;
    let mut successors = Vec::with_capacity(n);
    for _ in 0..n {
        let mask = 1 + (code % dyn_base) as u32;
        code /= dyn_base;
        successors.push(set_of(mask, n));
    }
    let mut adj = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if code & 1 != 0 {
                adj.push((a, b));
            }
            code >>= 1;
        }
    }
    debug_assert_eq!(code, 0);
    FlowGraph::from_successors(successors, &adj).unwrap()
}
