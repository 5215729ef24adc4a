//! Sampled invariants of the outer approximation: image soundness, the
//! projection/coarsening relation, and forward/backward duality.

mod common;

use common::SplitMix64;
use exflow_core::dynamics::{
    build_flow_graph, builtin_system, integrate_tau, project_to_coarse, GridSpec,
};
use exflow_core::graph::{cyclic_cells, reverse_graph};

/// For random points of each builtin system, the true time-tau image cell is
/// among the dynamics successors of the start cell.
#[test]
fn outer_approximation_covers_true_images() {
    for name in exflow_core::dynamics::BUILTIN_NAMES {
        let sys = builtin_system::<f64>(name, &[]).unwrap();
        let g = build_flow_graph(&sys.field, &sys.grid, &sys.config).unwrap();
        let mut rng = SplitMix64(0x5eed_0001);
        for _ in 0..100 {
            let mut p = [0.0f64; 2];
            for (axis, coord) in p.iter_mut().enumerate() {
                let u = rng.below(1 << 20) as f64 / (1u64 << 20) as f64;
                *coord =
                    sys.grid.lo()[axis] + u * (sys.grid.hi()[axis] - sys.grid.lo()[axis]);
            }
            let start = sys.grid.cell_of_point(p).expect("start point in box");
            let image = integrate_tau(&sys.field, &sys.config, p).unwrap();
            let image_cell = sys
                .grid
                .cell_of_point(image)
                .unwrap_or_else(|| sys.grid.infinity_id().expect("escape needs infinity"));
            assert!(
                g.successors(start).contains(&image_cell),
                "{name}: image cell {image_cell} of {p:?} missing from successors of {start}"
            );
        }
    }
}

/// Projecting the fine graph's edges to the coarse grid yields a subrelation
/// of the directly built coarse graph.
#[test]
fn projected_edges_are_subrelation_of_direct_build() {
    let sys = builtin_system::<f64>("saddle", &[]).unwrap();
    let coarse_grid = GridSpec::new(
        sys.grid.lo(),
        sys.grid.hi(),
        [32, 32],
        sys.grid.boundary(),
    )
    .unwrap();
    let fine_grid = coarse_grid.refine();
    let fine = build_flow_graph(&sys.field, &fine_grid, &sys.config).unwrap();
    let direct = build_flow_graph(&sys.field, &coarse_grid, &sys.config).unwrap();
    let (projected, _, projection) = project_to_coarse(&fine, &fine_grid).unwrap();

    for (src, dst) in fine.dyn_edges() {
        assert!(
            projected.successors(projection[src]).contains(&projection[dst]),
            "projection must contain every projected fine edge"
        );
    }
    for (src, dst) in projected.dyn_edges() {
        assert!(
            direct.successors(src).contains(&dst),
            "projected edge ({src},{dst}) missing from the directly built coarse graph"
        );
    }
}

/// Building with the negated field agrees with transposing the forward graph
/// on the recurrent structure. The saddle is symmetric enough for exact
/// agreement; the torus keeps slack cells at the blob fringes where the
/// self-loop threshold flips under negation, so there the comparison allows
/// a small symmetric difference and checks the component structure instead.
#[test]
fn negated_field_matches_graph_reversal_on_cycles() {
    let saddle = builtin_system::<f64>("saddle", &[]).unwrap();
    let grid = GridSpec::new(
        saddle.grid.lo(),
        saddle.grid.hi(),
        [32, 32],
        saddle.grid.boundary(),
    )
    .unwrap();
    let forward = build_flow_graph(&saddle.field, &grid, &saddle.config).unwrap();
    let negated = build_flow_graph(&saddle.field.negated(), &grid, &saddle.config).unwrap();
    assert_eq!(cyclic_cells(&negated), cyclic_cells(&forward));

    let torus = builtin_system::<f64>("torus-height", &[]).unwrap();
    let grid = torus.grid.clone();
    let forward = build_flow_graph(&torus.field, &grid, &torus.config).unwrap();
    let negated = build_flow_graph(&torus.field.negated(), &grid, &torus.config).unwrap();
    let transposed = reverse_graph(&forward).expect("periodic torus graphs have no sources");
    // cycles are reversal-invariant under the combinatorial transpose
    assert_eq!(cyclic_cells(&transposed), cyclic_cells(&forward));

    let fwd: std::collections::BTreeSet<_> = cyclic_cells(&forward).into_iter().collect();
    let neg: std::collections::BTreeSet<_> = cyclic_cells(&negated).into_iter().collect();
    let slack = fwd.symmetric_difference(&neg).count();
    assert!(
        slack * 20 <= fwd.len(),
        "reversal slack {slack} exceeds 5% of {} recurrent cells",
        fwd.len()
    );
    let pf = exflow_core::ends::recurrent_components(&forward);
    let pn = exflow_core::ends::recurrent_components(&negated);
    assert_eq!(pf.n_components(), pn.n_components());
}
