//! Turning a planar vector field into a flow graph: fixed-step integration,
//! the cubical grid with its boundary policies, the sampled outer
//! approximation, and the builtin example systems.
//!
//! Everything here is generic over [`Scalar`]; the crate root exports `f64`
//! aliases. Grids either wrap an axis (`Periodic`) or compactify escape
//! through a single added vertex at infinity (`InfinityCell`), realizing a
//! one-point compactification of the plane.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::graph::{CellId, CellLabel, FlowGraph};
use crate::scalar::Scalar;

/// A point of the plane.
pub type Point<F> = [F; 2];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DynamicsError {
    #[error("state became non-finite during integration{}", fmt_cell(.cell))]
    NonFiniteState { cell: Option<CellId> },
    #[error("unknown system \"{name}\"")]
    UnknownSystem { name: String },
    #[error("system \"{system}\" has no parameter \"{name}\"")]
    UnknownParam { system: String, name: String },
    #[error("axis {axis}: box bounds must satisfy lo < hi and be finite")]
    InvalidBox { axis: usize },
    #[error("axis {axis}: grids need at least 8 cells per axis, got {dims}")]
    DimsTooSmall { axis: usize, dims: usize },
    #[error("axis {axis}: cell count {dims} cannot be coarsened (odd)")]
    DimsNotEven { axis: usize, dims: usize },
    #[error("tau must be positive and finite")]
    InvalidTau,
    #[error("rk_steps must be at least 4, got {0}")]
    TooFewRkSteps(usize),
}

fn fmt_cell(cell: &Option<CellId>) -> String {
    match cell {
        Some(c) => format!(" (cell {c})"),
        None => String::new(),
    }
}

/// A named planar vector field with inspectable parameters.
#[derive(Clone)]
pub struct VectorField<F: Scalar> {
    name: String,
    params: Vec<(String, F)>,
    eval: Arc<dyn Fn(Point<F>) -> Point<F> + Send + Sync>,
}

impl<F: Scalar> fmt::Debug for VectorField<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("name", &self.name)
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

impl<F: Scalar> VectorField<F> {
    pub fn from_fn(
        name: impl Into<String>,
        params: Vec<(String, F)>,
        eval: impl Fn(Point<F>) -> Point<F> + Send + Sync + 'static,
    ) -> Self {
        VectorField {
            name: name.into(),
            params,
            eval: Arc::new(eval),
        }
    }

    /// The zero field; the flow fixes every point.
    pub fn zero() -> Self {
        Self::from_fn("zero", Vec::new(), |_| [F::zero(), F::zero()])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[(String, F)] {
        &self.params
    }

    pub fn eval(&self, p: Point<F>) -> Point<F> {
        (self.eval)(p)
    }

    /// The field of the reversed flow.
    pub fn negated(&self) -> Self {
        let inner = Arc::clone(&self.eval);
        VectorField {
            name: format!("{}-reversed", self.name),
            params: self.params.clone(),
            eval: Arc::new(move |p| {
                let v = inner(p);
                [-v[0], -v[1]]
            }),
        }
    }
}

/// Per-axis boundary policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// The axis wraps around.
    Periodic,
    /// Escape along the axis routes to the single vertex at infinity.
    InfinityCell,
}

impl Boundary {
    pub fn as_str(&self) -> &'static str {
        match self {
            Boundary::Periodic => "periodic",
            Boundary::InfinityCell => "infinity",
        }
    }
}

/// Rectangular grid over a phase-space box.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec<F: Scalar> {
    lo: Point<F>,
    hi: Point<F>,
    dims: [usize; 2],
    boundary: [Boundary; 2],
    level: usize,
}

impl<F: Scalar> GridSpec<F> {
    pub fn new(
        lo: Point<F>,
        hi: Point<F>,
        dims: [usize; 2],
        boundary: [Boundary; 2],
    ) -> Result<Self, DynamicsError> {
        for axis in 0..2 {
            if !(lo[axis].is_finite() && hi[axis].is_finite() && lo[axis] < hi[axis]) {
                return Err(DynamicsError::InvalidBox { axis });
            }
            if dims[axis] < 8 {
                return Err(DynamicsError::DimsTooSmall {
                    axis,
                    dims: dims[axis],
                });
            }
        }
        Ok(GridSpec {
            lo,
            hi,
            dims,
            boundary,
            level: 0,
        })
    }

    pub fn lo(&self) -> Point<F> {
        self.lo
    }

    pub fn hi(&self) -> Point<F> {
        self.hi
    }

    pub fn dims(&self) -> [usize; 2] {
        self.dims
    }

    pub fn boundary(&self) -> [Boundary; 2] {
        self.boundary
    }

    /// Subdivision depth relative to the grid this one was refined from.
    pub fn level(&self) -> usize {
        self.level
    }

    /// Cell width along an axis.
    pub fn width(&self, axis: usize) -> F {
        (self.hi[axis] - self.lo[axis]) / F::from_usize(self.dims[axis]).unwrap()
    }

    /// Area of one grid cell.
    pub fn cell_area(&self) -> F {
        self.width(0) * self.width(1)
    }

    /// Doubles both axis counts.
    pub fn refine(&self) -> Self {
        GridSpec {
            lo: self.lo,
            hi: self.hi,
            dims: [self.dims[0] * 2, self.dims[1] * 2],
            boundary: self.boundary,
            level: self.level + 1,
        }
    }

    /// Refines `times` times.
    pub fn refine_times(&self, times: usize) -> Self {
        let mut g = self.clone();
        for _ in 0..times {
            g = g.refine();
        }
        g
    }

    /// Halves both axis counts.
    pub fn coarsen(&self) -> Result<Self, DynamicsError> {
        for axis in 0..2 {
            if !self.dims[axis].is_multiple_of(2) {
                return Err(DynamicsError::DimsNotEven {
                    axis,
                    dims: self.dims[axis],
                });
            }
        }
        Ok(GridSpec {
            lo: self.lo,
            hi: self.hi,
            dims: [self.dims[0] / 2, self.dims[1] / 2],
            boundary: self.boundary,
            level: self.level.saturating_sub(1),
        })
    }

    /// Number of grid cells, excluding any vertex at infinity.
    pub fn n_grid_cells(&self) -> usize {
        self.dims[0] * self.dims[1]
    }

    /// Whether the graph carries a vertex at infinity.
    pub fn has_infinity(&self) -> bool {
        self.boundary.contains(&Boundary::InfinityCell)
    }

    /// Total cell count including the vertex at infinity.
    pub fn n_cells(&self) -> usize {
        self.n_grid_cells() + usize::from(self.has_infinity())
    }

    /// Id of the vertex at infinity, when present.
    pub fn infinity_id(&self) -> Option<CellId> {
        self.has_infinity().then(|| self.n_grid_cells())
    }

    /// Row-major cell id of grid indices.
    pub fn cell_id(&self, ix: usize, iy: usize) -> CellId {
        iy * self.dims[0] + ix
    }

    pub fn cell_indices(&self, cell: CellId) -> (usize, usize) {
        (cell % self.dims[0], cell / self.dims[0])
    }

    /// Lower corner of a cell.
    pub fn cell_corner(&self, ix: usize, iy: usize) -> Point<F> {
        [
            self.lo[0] + self.width(0) * F::from_usize(ix).unwrap(),
            self.lo[1] + self.width(1) * F::from_usize(iy).unwrap(),
        ]
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Point<F> {
        let half = F::from_f64(0.5).unwrap();
        let corner = self.cell_corner(ix, iy);
        [corner[0] + self.width(0) * half, corner[1] + self.width(1) * half]
    }

    /// Cell containing a point. Periodic axes wrap; `None` when the point
    /// escapes along an infinity axis.
    pub fn cell_of_point(&self, p: Point<F>) -> Option<CellId> {
        let mut idx = [0usize; 2];
        for axis in 0..2 {
            let rel = ((p[axis] - self.lo[axis]) / self.width(axis))
                .floor()
                .to_isize()?;
            let n = self.dims[axis] as isize;
            idx[axis] = match self.boundary[axis] {
                Boundary::Periodic => rel.rem_euclid(n) as usize,
                Boundary::InfinityCell => {
                    if rel < 0 || rel >= n {
                        return None;
                    }
                    rel as usize
                }
            };
        }
        Some(self.cell_id(idx[0], idx[1]))
    }

    /// The nine sample points of a cell: corners, edge midpoints, center.
    pub fn samples(&self, ix: usize, iy: usize) -> [Point<F>; 9] {
        let corner = self.cell_corner(ix, iy);
        let half = F::from_f64(0.5).unwrap();
        let fractions = [F::zero(), half, F::one()];
        let mut out = [[F::zero(); 2]; 9];
        let mut k = 0;
        for fy in fractions {
            for fx in fractions {
                out[k] = [
                    corner[0] + self.width(0) * fx,
                    corner[1] + self.width(1) * fy,
                ];
                k += 1;
            }
        }
        out
    }
}

/// How each cell is sampled before taking image bounding boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleScheme {
    /// Four corners, four edge midpoints and the center.
    #[default]
    CornersCenterEdgeMidpoints,
}

/// Integration and inflation parameters of the outer approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterApproxConfig<F: Scalar> {
    pub tau: F,
    pub rk_steps: usize,
    pub samples: SampleScheme,
    pub bloat: usize,
}

impl<F: Scalar> OuterApproxConfig<F> {
    pub fn new(tau: F, rk_steps: usize, bloat: usize) -> Result<Self, DynamicsError> {
        if !(tau.is_finite() && tau > F::zero()) {
            return Err(DynamicsError::InvalidTau);
        }
        if rk_steps < 4 {
            return Err(DynamicsError::TooFewRkSteps(rk_steps));
        }
        Ok(OuterApproxConfig {
            tau,
            rk_steps,
            samples: SampleScheme::default(),
            bloat,
        })
    }
}

/// Classical fixed-step RK4 over time `tau` in `rk_steps` substeps.
pub fn integrate_tau<F: Scalar>(
    vf: &VectorField<F>,
    cfg: &OuterApproxConfig<F>,
    x: Point<F>,
) -> Result<Point<F>, DynamicsError> {
    let h = cfg.tau / F::from_usize(cfg.rk_steps).unwrap();
    let half = F::from_f64(0.5).unwrap();
    let two = F::from_f64(2.0).unwrap();
    let six = F::from_f64(6.0).unwrap();
    let mut y = x;
    for _ in 0..cfg.rk_steps {
        let k1 = vf.eval(y);
        let k2 = vf.eval([y[0] + h * half * k1[0], y[1] + h * half * k1[1]]);
        let k3 = vf.eval([y[0] + h * half * k2[0], y[1] + h * half * k2[1]]);
        let k4 = vf.eval([y[0] + h * k3[0], y[1] + h * k3[1]]);
        for axis in 0..2 {
            y[axis] = y[axis]
                + h * (k1[axis] + two * k2[axis] + two * k3[axis] + k4[axis]) / six;
        }
        if !(y[0].is_finite() && y[1].is_finite()) {
            return Err(DynamicsError::NonFiniteState { cell: None });
        }
    }
    Ok(y)
}

/// Builds the multivalued cell map of the time-`tau` flow.
///
/// Each cell's samples are integrated; the image cells are those whose
/// center lies in the sample bounding box inflated by `bloat` cell widths,
/// plus the cells containing the sample points themselves. Samples escaping
/// along an infinity axis route to the vertex at infinity, as does any part
/// of the inflated box sticking out of the domain on such an axis. Adjacency
/// is face adjacency (wrapping on periodic axes) plus edges between the
/// vertex at infinity and every cell that feeds it.
pub fn build_flow_graph<F: Scalar>(
    vf: &VectorField<F>,
    grid: &GridSpec<F>,
    cfg: &OuterApproxConfig<F>,
) -> Result<FlowGraph, DynamicsError> {
    let [nx, ny] = grid.dims();
    let n_grid = grid.n_grid_cells();
    let infinity = grid.infinity_id();
    let n_cells = grid.n_cells();

    let mut successors: Vec<Vec<CellId>> = vec![Vec::new(); n_cells];
    let mut outflow: Vec<bool> = vec![false; n_grid];

    let bloat = F::from_usize(cfg.bloat).unwrap();
    let half = F::from_f64(0.5).unwrap();

    for iy in 0..ny {
        for ix in 0..nx {
            let cell = grid.cell_id(ix, iy);
            let mut escaped = false;
            let mut in_domain: Vec<Point<F>> = Vec::with_capacity(9);
            for sample in grid.samples(ix, iy) {
                let image = integrate_tau(vf, cfg, sample)
                    .map_err(|_| DynamicsError::NonFiniteState { cell: Some(cell) })?;
                let out = (0..2).any(|axis| {
                    grid.boundary()[axis] == Boundary::InfinityCell
                        && (image[axis] < grid.lo()[axis] || image[axis] > grid.hi()[axis])
                });
                if out {
                    escaped = true;
                } else {
                    in_domain.push(image);
                }
            }

            let succ = &mut successors[cell];
            if escaped {
                succ.push(infinity.expect("escape needs an infinity axis"));
            }

            if !in_domain.is_empty() {
                // continuous bounding box of the landed samples, in units of
                // cells relative to the box origin
                let mut lo_units = [F::infinity(); 2];
                let mut hi_units = [F::neg_infinity(); 2];
                for p in &in_domain {
                    for axis in 0..2 {
                        let u = (p[axis] - grid.lo()[axis]) / grid.width(axis);
                        lo_units[axis] = lo_units[axis].min(u);
                        hi_units[axis] = hi_units[axis].max(u);
                    }
                }
                // cells whose center falls inside the inflated box
                let mut ranges: [(isize, isize); 2] = [(0, 0); 2];
                let mut spill = false;
                for axis in 0..2 {
                    let lo_idx = (lo_units[axis] - bloat - half).ceil().to_isize().unwrap();
                    let hi_idx = (hi_units[axis] + bloat - half).floor().to_isize().unwrap();
                    let n = grid.dims()[axis] as isize;
                    match grid.boundary()[axis] {
                        Boundary::Periodic => {
                            // a span covering the axis wraps onto all of it
                            if hi_idx - lo_idx + 1 >= n {
                                ranges[axis] = (0, n - 1);
                            } else {
                                ranges[axis] = (lo_idx, hi_idx);
                            }
                        }
                        Boundary::InfinityCell => {
                            if lo_idx < 0 || hi_idx >= n {
                                spill = true;
                            }
                            ranges[axis] = (lo_idx.max(0), hi_idx.min(n - 1));
                        }
                    }
                }
                if spill {
                    let inf = infinity.expect("spill needs an infinity axis");
                    if !succ.contains(&inf) {
                        succ.push(inf);
                    }
                }
                for jy in ranges[1].0..=ranges[1].1 {
                    let wy = wrap_index(jy, ny, grid.boundary()[1]);
                    for jx in ranges[0].0..=ranges[0].1 {
                        let wx = wrap_index(jx, nx, grid.boundary()[0]);
                        succ.push(grid.cell_id(wx, wy));
                    }
                }
                // the sample cells themselves; for bloat >= 1 these are
                // already covered, for bloat = 0 they keep F total
                for p in &in_domain {
                    if let Some(c) = grid.cell_of_point(*p) {
                        succ.push(c);
                    }
                }
            }

            succ.sort_unstable();
            succ.dedup();
            // the vertex at infinity is spatially adjacent to the cells
            // whose samples escape, not to mere bounding-box spill
            outflow[cell] = escaped;
        }
    }

    if let Some(inf) = infinity {
        successors[inf].push(inf);
    }

    // face adjacency, wrapping on periodic axes only
    let mut adj: Vec<(CellId, CellId)> = Vec::new();
    for iy in 0..ny {
        for ix in 0..nx {
            let cell = grid.cell_id(ix, iy);
            if ix + 1 < nx {
                adj.push((cell, grid.cell_id(ix + 1, iy)));
            } else if grid.boundary()[0] == Boundary::Periodic && nx > 1 {
                adj.push((cell, grid.cell_id(0, iy)));
            }
            if iy + 1 < ny {
                adj.push((cell, grid.cell_id(ix, iy + 1)));
            } else if grid.boundary()[1] == Boundary::Periodic && ny > 1 {
                adj.push((cell, grid.cell_id(ix, 0)));
            }
        }
    }
    if let Some(inf) = infinity {
        for (cell, &feeds) in outflow.iter().enumerate() {
            if feeds {
                adj.push((cell, inf));
            }
        }
    }

    let mut labels: Vec<CellLabel> = (0..n_grid)
        .map(|cell| {
            let (ix, iy) = grid.cell_indices(cell);
            CellLabel::Grid {
                ix: ix as u32,
                iy: iy as u32,
            }
        })
        .collect();
    if infinity.is_some() {
        labels.push(CellLabel::Infinity);
    }

    Ok(FlowGraph::from_parts(successors, &adj, labels)
        .expect("builder keeps F total and adjacency irreflexive"))
}

fn wrap_index(idx: isize, n: usize, boundary: Boundary) -> usize {
    let n = n as isize;
    match boundary {
        Boundary::Periodic => idx.rem_euclid(n) as usize,
        Boundary::InfinityCell => {
            debug_assert!(0 <= idx && idx < n);
            idx as usize
        }
    }
}

/// Coarsens a grid-built graph by one level: cells merge 2×2, dynamics and
/// adjacency edges project, the vertex at infinity maps to itself.
///
/// Returns the coarse graph, its grid, and the cell projection map. Deriving
/// coarse levels this way makes end-tree nesting hold by construction.
pub fn project_to_coarse<F: Scalar>(
    fine: &FlowGraph,
    fine_grid: &GridSpec<F>,
) -> Result<(FlowGraph, GridSpec<F>, Vec<CellId>), DynamicsError> {
    let coarse_grid = fine_grid.coarsen()?;
    let n_fine = fine.n_cells();
    debug_assert_eq!(n_fine, fine_grid.n_cells());

    let mut projection: Vec<CellId> = Vec::with_capacity(n_fine);
    for cell in 0..fine_grid.n_grid_cells() {
        let (ix, iy) = fine_grid.cell_indices(cell);
        projection.push(coarse_grid.cell_id(ix / 2, iy / 2));
    }
    if fine_grid.has_infinity() {
        projection.push(coarse_grid.infinity_id().expect("policy is preserved"));
    }

    let n_coarse = coarse_grid.n_cells();
    let mut successors: Vec<Vec<CellId>> = vec![Vec::new(); n_coarse];
    for (src, dst) in fine.dyn_edges() {
        successors[projection[src]].push(projection[dst]);
    }
    for succ in &mut successors {
        succ.sort_unstable();
        succ.dedup();
    }
    let mut adj: Vec<(CellId, CellId)> = fine
        .adj_pairs()
        .map(|(a, b)| (projection[a], projection[b]))
        .filter(|(a, b)| a != b)
        .collect();
    adj.sort_unstable();
    adj.dedup();

    let mut labels: Vec<CellLabel> = (0..coarse_grid.n_grid_cells())
        .map(|cell| {
            let (ix, iy) = coarse_grid.cell_indices(cell);
            CellLabel::Grid {
                ix: ix as u32,
                iy: iy as u32,
            }
        })
        .collect();
    if coarse_grid.has_infinity() {
        labels.push(CellLabel::Infinity);
    }

    let graph = FlowGraph::from_parts(successors, &adj, labels)
        .expect("projection preserves validity");
    Ok((graph, coarse_grid, projection))
}

/// A builtin system: field plus default grid and integration settings.
pub struct BuiltinSystem<F: Scalar> {
    pub field: VectorField<F>,
    pub grid: GridSpec<F>,
    pub config: OuterApproxConfig<F>,
}

/// Names of the builtin systems, in the order `systems` prints them.
pub const BUILTIN_NAMES: [&str; 4] = ["saddle", "torus-height", "limit-cycle", "irrational"];

/// Configures a builtin system, applying `--param`-style overrides.
pub fn builtin_system<F: Scalar>(
    name: &str,
    overrides: &[(String, f64)],
) -> Result<BuiltinSystem<F>, DynamicsError> {
    let f = |x: f64| F::from_f64(x).unwrap();
    let two_pi = F::from_f64(std::f64::consts::TAU).unwrap();

    let lookup = |defaults: &[(&str, f64)]| -> Result<Vec<f64>, DynamicsError> {
        let mut values: Vec<f64> = defaults.iter().map(|(_, v)| *v).collect();
        for (key, value) in overrides {
            match defaults.iter().position(|(k, _)| k == key) {
                Some(i) => values[i] = *value,
                None => {
                    return Err(DynamicsError::UnknownParam {
                        system: name.to_string(),
                        name: key.clone(),
                    })
                }
            }
        }
        Ok(values)
    };

    match name {
        "saddle" => {
            // linear saddle on the plane, compactified at infinity
            let v = lookup(&[("l1", 1.0), ("l2", -1.0)])?;
            let (l1, l2) = (f(v[0]), f(v[1]));
            let field = VectorField::from_fn(
                "saddle",
                vec![("l1".into(), l1), ("l2".into(), l2)],
                move |p| [l1 * p[0], l2 * p[1]],
            );
            let grid = GridSpec::new(
                [f(-2.0), f(-2.0)],
                [f(2.0), f(2.0)],
                [128, 128],
                [Boundary::InfinityCell; 2],
            )?;
            let config = OuterApproxConfig::new(f(0.5), 16, 1)?;
            Ok(BuiltinSystem { field, grid, config })
        }
        "torus-height" => {
            // downhill gradient of the upright-torus height
            // z = (R + r cos v) sin u; zeros at u ∈ {π/2, 3π/2}, v ∈ {0, π}
            let v = lookup(&[("R", 2.0), ("r", 1.0)])?;
            let (big_r, small_r) = (f(v[0]), f(v[1]));
            let field = VectorField::from_fn(
                "torus-height",
                vec![("R".into(), big_r), ("r".into(), small_r)],
                move |p| {
                    let (u, vv) = (p[0], p[1]);
                    [
                        -(big_r + small_r * vv.cos()) * u.cos(),
                        small_r * vv.sin() * u.sin(),
                    ]
                },
            );
            let grid = GridSpec::new(
                [F::zero(), F::zero()],
                [two_pi, two_pi],
                [128, 128],
                [Boundary::Periodic; 2],
            )?;
            let config = OuterApproxConfig::new(f(0.3), 16, 1)?;
            Ok(BuiltinSystem { field, grid, config })
        }
        "limit-cycle" => {
            // attracting unit circle, repelling origin, unreachable infinity
            lookup(&[])?;
            let field = VectorField::from_fn("limit-cycle", Vec::new(), |p| {
                let (x, y) = (p[0], p[1]);
                let s = F::one() - x * x - y * y;
                [x * s - y, y * s + x]
            });
            let grid = GridSpec::new(
                [f(-2.0), f(-2.0)],
                [f(2.0), f(2.0)],
                [128, 128],
                [Boundary::InfinityCell; 2],
            )?;
            let config = OuterApproxConfig::new(f(0.5), 16, 1)?;
            Ok(BuiltinSystem { field, grid, config })
        }
        "irrational" => {
            // constant slope flow on the torus; every trajectory is dense
            let v = lookup(&[("a", std::f64::consts::SQRT_2)])?;
            let a = f(v[0]);
            let field = VectorField::from_fn(
                "irrational",
                vec![("a".into(), a)],
                move |_| [F::one(), a],
            );
            let grid = GridSpec::new(
                [F::zero(), F::zero()],
                [two_pi, two_pi],
                [64, 64],
                [Boundary::Periodic; 2],
            )?;
            let config = OuterApproxConfig::new(f(0.5), 16, 1)?;
            Ok(BuiltinSystem { field, grid, config })
        }
        _ => Err(DynamicsError::UnknownSystem {
            name: name.to_string(),
        }),
    }
}
