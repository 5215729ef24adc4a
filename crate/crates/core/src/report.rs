//! Pipeline orchestration and report serialization.
//!
//! `analyze_pipeline` chains graph construction, the absorbing filtration,
//! limit sets, recurrent components, the end tree, basins and the
//! representability checks into one [`AnalysisReport`]. Reports serialize to
//! JSON with sorted keys; identical configurations produce byte-identical
//! files. Wall-clock timings are kept on the report struct but never
//! serialized, so they do not break that guarantee.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    build_flow_graph, project_to_coarse, DynamicsError, GridSpec, OuterApproxConfig, VectorField,
};
use crate::ends::{
    assign_basins, build_end_tree, morse_like_graph, recurrent_components, BasinAssignment,
    BasinMap, ComponentPartition, EndError, EndTree,
};
use crate::externology::{
    bar_limit_space, inclusion_chain_report, limit_space, regular_at_infinity,
};
use crate::graph::{self, CellId, CellLabel, FlowGraph, GraphError};
use crate::scalar::Scalar;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stage {stage}: {source}")]
    Dynamics {
        stage: &'static str,
        source: DynamicsError,
    },
    #[error("stage {stage}: {source}")]
    Ends {
        stage: &'static str,
        source: EndError,
    },
    #[error("invalid graph: {0}")]
    Validation(#[from] GraphError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

impl PipelineError {
    /// CLI exit code: 2 validation, 3 numeric failure, 4 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Dynamics {
                source: DynamicsError::NonFiniteState { .. },
                ..
            } => 3,
            PipelineError::Io { .. } => 4,
            _ => 2,
        }
    }
}

/// Wall-clock stage timings in milliseconds. Compares equal to anything so
/// reports can derive `PartialEq` while runs stay byte-identical.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timings {
    pub build_ms: f64,
    pub analyze_ms: f64,
    pub total_ms: f64,
}

impl PartialEq for Timings {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDescriptor {
    #[serde(rename = "box")]
    pub box_bounds: [[f64; 2]; 2],
    pub dims: [usize; 2],
    pub boundary: [String; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDescriptor {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub grid: Option<GridDescriptor>,
    pub tau: Option<f64>,
    pub rk_steps: Option<usize>,
    pub bloat: Option<usize>,
    pub levels: usize,
    pub reversed: bool,
    /// Source path when the graph came from a file.
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub id: usize,
    pub cell_count: usize,
    pub representative_cell: CellId,
    /// Real-coordinate bounding box `[x0, x1, y0, y1]` of the grid cells;
    /// absent for components without grid cells.
    pub bbox: Option<[f64; 4]>,
    pub contains_infinity: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionChainRecord {
    pub cyclic_size: usize,
    pub ei_size: usize,
    pub big_omega_size: usize,
    pub bar_limit_size: usize,
    pub cyclic_in_ei: bool,
    pub ei_equals_big_omega: bool,
    pub big_omega_in_bar_limit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    pub dims: Option<[usize; 2]>,
    pub n_cells: usize,
    pub filtration_sizes: Vec<usize>,
    pub k_star: usize,
    pub ei_size: usize,
    /// Phase-space area of the eventual image's grid cells.
    pub ei_area: Option<f64>,
    pub cyclic_size: usize,
    pub limit_size: usize,
    pub bar_limit_size: usize,
    pub regular_at_infinity: bool,
    pub inclusion_chain: InclusionChainRecord,
    pub components: Vec<ComponentRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndTreeNodeRecord {
    pub component: usize,
    pub cell_count: usize,
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndRecord {
    pub id: usize,
    pub leaf_level: usize,
    /// Component ids per level from root to leaf.
    pub path: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndTreeRecord {
    pub nodes: Vec<Vec<EndTreeNodeRecord>>,
    pub ends: Vec<EndRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndBasinRecord {
    pub end: usize,
    pub resolved: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinRecord {
    pub per_end: Vec<EndBasinRecord>,
    pub unresolved: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentabilityRecord {
    pub end: usize,
    pub omega_representable: bool,
    pub limit_representable: bool,
    pub omega_soundness: bool,
    pub self_only: bool,
}

/// Complete serialized result of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: String,
    pub system: SystemDescriptor,
    pub levels: Vec<LevelRecord>,
    pub end_tree: EndTreeRecord,
    pub basins: BasinRecord,
    pub representability: Vec<RepresentabilityRecord>,
    pub morse_edges: Vec<[usize; 2]>,
    #[serde(skip)]
    pub timings: Timings,
}

/// Pipeline result: the report plus the finest-level artifacts needed for
/// rendering and further inspection.
#[derive(Debug, Clone)]
pub struct AnalysisOutput {
    pub report: AnalysisReport,
    pub finest_graph: FlowGraph,
    pub finest_partition: ComponentPartition,
    pub basins: BasinMap,
    pub end_of_component: Vec<Option<usize>>,
    pub end_tree: EndTree,
}

/// Runs the full analysis of an ODE system.
///
/// The base grid is level 0; each further level doubles the resolution. The
/// finest graph is built from the integrator and coarser levels are its
/// projections. `reversed` analyzes the reversed flow by negating the field,
/// which is the exact discrete counterpart of running time backwards (the
/// combinatorial transpose is reserved for graphs whose every cell has a
/// predecessor).
pub fn analyze_pipeline<F: Scalar>(
    vf: &VectorField<F>,
    base_grid: &GridSpec<F>,
    cfg: &OuterApproxConfig<F>,
    levels: usize,
    reversed: bool,
) -> Result<AnalysisOutput, PipelineError> {
    assert!(levels >= 1, "at least one level");
    let started = Instant::now();

    let field = if reversed { vf.negated() } else { vf.clone() };
    let finest_grid = base_grid.refine_times(levels - 1);
    let finest_graph = build_flow_graph(&field, &finest_grid, cfg)
        .map_err(|source| PipelineError::Dynamics { stage: "build", source })?;
    let build_ms = started.elapsed().as_secs_f64() * 1e3;

    // project down to the base grid, keeping graphs fine → coarse
    let mut graphs: Vec<(FlowGraph, GridSpec<F>)> = vec![(finest_graph, finest_grid)];
    let mut projections_fine_to_coarse: Vec<Vec<CellId>> = Vec::new();
    for _ in 1..levels {
        let (g, grid) = graphs.last().expect("non-empty");
        let (coarse, coarse_grid, proj) = project_to_coarse(g, grid)
            .map_err(|source| PipelineError::Dynamics { stage: "project", source })?;
        projections_fine_to_coarse.push(proj);
        graphs.push((coarse, coarse_grid));
    }
    graphs.reverse();
    projections_fine_to_coarse.reverse();

    let grid_descriptor = GridDescriptor {
        box_bounds: [
            [
                base_grid.lo()[0].to_f64().unwrap(),
                base_grid.hi()[0].to_f64().unwrap(),
            ],
            [
                base_grid.lo()[1].to_f64().unwrap(),
                base_grid.hi()[1].to_f64().unwrap(),
            ],
        ],
        dims: base_grid.dims(),
        boundary: [
            base_grid.boundary()[0].as_str().to_string(),
            base_grid.boundary()[1].as_str().to_string(),
        ],
    };
    let system = SystemDescriptor {
        name: vf.name().to_string(),
        params: vf
            .params()
            .iter()
            .map(|(k, v)| (k.clone(), v.to_f64().unwrap()))
            .collect(),
        grid: Some(grid_descriptor),
        tau: Some(cfg.tau.to_f64().unwrap()),
        rk_steps: Some(cfg.rk_steps),
        bloat: Some(cfg.bloat),
        levels,
        reversed,
        source: None,
    };

    let level_inputs: Vec<LevelInput<'_, _>> = graphs
        .iter()
        .enumerate()
        .map(|(l, (g, grid))| LevelInput {
            graph: g,
            level: l,
            dims: Some(grid.dims()),
            cell_area: Some(grid.cell_area().to_f64().unwrap()),
            grid_corner: Some(move |cell: CellId| cell_box_f64(grid, cell)),
        })
        .collect();

    let mut output = assemble(system, &level_inputs, &projections_fine_to_coarse)?;
    output.report.timings = Timings {
        build_ms,
        analyze_ms: started.elapsed().as_secs_f64() * 1e3 - build_ms,
        total_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    Ok(output)
}

/// Runs the single-level analysis of a user-supplied graph.
pub fn analyze_graph(g: &FlowGraph, source: &str) -> Result<AnalysisOutput, PipelineError> {
    let started = Instant::now();
    let system = SystemDescriptor {
        name: "graph".to_string(),
        params: BTreeMap::new(),
        grid: None,
        tau: None,
        rk_steps: None,
        bloat: None,
        levels: 1,
        reversed: false,
        source: Some(source.to_string()),
    };
    let inputs = [LevelInput {
        graph: g,
        level: 0,
        dims: None,
        cell_area: None,
        grid_corner: None::<fn(CellId) -> Option<[f64; 4]>>,
    }];
    let mut output = assemble(system, &inputs, &[])?;
    output.report.timings = Timings {
        build_ms: 0.0,
        analyze_ms: started.elapsed().as_secs_f64() * 1e3,
        total_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    Ok(output)
}

struct LevelInput<'a, C> {
    graph: &'a FlowGraph,
    level: usize,
    dims: Option<[usize; 2]>,
    cell_area: Option<f64>,
    grid_corner: Option<C>,
}

fn cell_box_f64<F: Scalar>(grid: &GridSpec<F>, cell: CellId) -> Option<[f64; 4]> {
    if cell >= grid.n_grid_cells() {
        return None;
    }
    let (ix, iy) = grid.cell_indices(cell);
    let corner = grid.cell_corner(ix, iy);
    let w = [grid.width(0), grid.width(1)];
    Some([
        corner[0].to_f64().unwrap(),
        (corner[0] + w[0]).to_f64().unwrap(),
        corner[1].to_f64().unwrap(),
        (corner[1] + w[1]).to_f64().unwrap(),
    ])
}

fn assemble<C>(
    system: SystemDescriptor,
    inputs: &[LevelInput<'_, C>],
    projections: &[Vec<CellId>],
) -> Result<AnalysisOutput, PipelineError>
where
    C: Fn(CellId) -> Option<[f64; 4]>,
{
    let mut level_records = Vec::with_capacity(inputs.len());
    let mut partitions = Vec::with_capacity(inputs.len());

    for input in inputs {
        let g = input.graph;
        let filtration = graph::eventual_image(g);
        let partition = recurrent_components(g).with_level(input.level);
        let chain = inclusion_chain_report(g, &filtration);
        let limit = limit_space(&filtration);
        let bar_limit = bar_limit_space(g, &filtration);
        let regular = regular_at_infinity(g, &filtration);

        let ei_area = input.cell_area.map(|area| {
            let grid_cells = filtration
                .ei()
                .iter()
                .filter(|&&v| g.label(v) != CellLabel::Infinity)
                .count();
            grid_cells as f64 * area
        });

        let components = partition
            .components()
            .iter()
            .enumerate()
            .map(|(id, cells)| {
                let contains_infinity =
                    cells.iter().any(|&v| g.label(v) == CellLabel::Infinity);
                let bbox = input.grid_corner.as_ref().and_then(|corner| {
                    let mut acc: Option<[f64; 4]> = None;
                    for &v in cells {
                        if let Some(b) = corner(v) {
                            acc = Some(match acc {
                                None => b,
                                Some(a) => [
                                    a[0].min(b[0]),
                                    a[1].max(b[1]),
                                    a[2].min(b[2]),
                                    a[3].max(b[3]),
                                ],
                            });
                        }
                    }
                    acc
                });
                ComponentRecord {
                    id,
                    cell_count: cells.len(),
                    representative_cell: cells[0],
                    bbox,
                    contains_infinity,
                }
            })
            .collect();

        level_records.push(LevelRecord {
            level: input.level,
            dims: input.dims,
            n_cells: g.n_cells(),
            filtration_sizes: filtration.levels().iter().map(Vec::len).collect(),
            k_star: filtration.k_star(),
            ei_size: filtration.ei().len(),
            ei_area,
            cyclic_size: chain.cyclic_size,
            limit_size: limit.len(),
            bar_limit_size: bar_limit.len(),
            regular_at_infinity: regular,
            inclusion_chain: InclusionChainRecord {
                cyclic_size: chain.cyclic_size,
                ei_size: chain.ei_size,
                big_omega_size: chain.big_omega_size,
                bar_limit_size: chain.bar_limit_size,
                cyclic_in_ei: chain.cyclic_in_ei,
                ei_equals_big_omega: chain.ei_equals_big_omega,
                big_omega_in_bar_limit: chain.big_omega_in_bar_limit,
            },
            components,
        });
        partitions.push(partition);
    }

    let end_tree = build_end_tree(partitions, projections)
        .map_err(|source| PipelineError::Ends { stage: "ends", source })?;

    let finest_graph = inputs.last().expect("at least one level").graph;
    let finest_partition = end_tree.levels().last().expect("non-empty").clone();
    let basins = assign_basins(finest_graph, &finest_partition);
    let verdicts =
        crate::ends::representability_report(finest_graph, &finest_partition, &basins);
    let morse = morse_like_graph(finest_graph, &finest_partition)
        .map_err(|source| PipelineError::Ends { stage: "morse", source })?;

    let end_of_component: Vec<Option<usize>> = (0..finest_partition.n_components())
        .map(|c| end_tree.end_of_finest_component(c))
        .collect();

    let nodes: Vec<Vec<EndTreeNodeRecord>> = end_tree
        .levels()
        .iter()
        .enumerate()
        .map(|(l, p)| {
            (0..p.n_components())
                .map(|c| EndTreeNodeRecord {
                    component: c,
                    cell_count: p.components()[c].len(),
                    parent: end_tree.parent(l, c),
                })
                .collect()
        })
        .collect();
    let ends: Vec<EndRecord> = end_tree
        .ends()
        .iter()
        .map(|e| EndRecord {
            id: e.id,
            leaf_level: e.leaf_level(),
            path: e.path.clone(),
        })
        .collect();

    let per_end: Vec<EndBasinRecord> = end_tree
        .ends()
        .iter()
        .map(|e| {
            let resolved = if e.leaf_level() == end_tree.n_levels() - 1 {
                basins.resolved_counts()[e.leaf_component()]
            } else {
                0
            };
            EndBasinRecord {
                end: e.id,
                resolved,
            }
        })
        .collect();

    let representability: Vec<RepresentabilityRecord> = end_tree
        .ends()
        .iter()
        .map(|e| {
            if e.leaf_level() == end_tree.n_levels() - 1 {
                let v = &verdicts[e.leaf_component()];
                RepresentabilityRecord {
                    end: e.id,
                    omega_representable: v.omega_representable,
                    limit_representable: v.limit_representable,
                    omega_soundness: v.omega_soundness,
                    self_only: v.self_only,
                }
            } else {
                // the branch dies before the finest level: nothing reaches it
                RepresentabilityRecord {
                    end: e.id,
                    omega_representable: false,
                    limit_representable: false,
                    omega_soundness: true,
                    self_only: true,
                }
            }
        })
        .collect();

    let report = AnalysisReport {
        schema_version: SCHEMA_VERSION.to_string(),
        system,
        levels: level_records,
        end_tree: EndTreeRecord { nodes, ends },
        basins: BasinRecord {
            per_end,
            unresolved: basins.unresolved_count(),
        },
        representability,
        morse_edges: morse.iter().map(|&(a, b)| [a, b]).collect(),
        timings: Timings::default(),
    };

    Ok(AnalysisOutput {
        report,
        finest_graph: finest_graph.clone(),
        finest_partition,
        basins,
        end_of_component,
        end_tree,
    })
}

/// Writes a report as UTF-8 JSON with sorted keys and a schema version.
pub fn write_report_json(report: &AnalysisReport, path: &Path) -> Result<(), PipelineError> {
    let bytes = report_json_bytes(report)?;
    fs::write(path, bytes).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// The serialized bytes of a report; exposed for determinism checks.
pub fn report_json_bytes(report: &AnalysisReport) -> Result<Vec<u8>, PipelineError> {
    // round-trip through Value: its object map is a BTreeMap, which sorts keys
    let value = serde_json::to_value(report)?;
    let mut bytes = serde_json::to_vec_pretty(&value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn read_report_json(path: &Path) -> Result<AnalysisReport, PipelineError> {
    let bytes = fs::read(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_slice(&bytes)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    #[serde(rename = "dyn")]
    dyn_edges: Vec<[usize; 2]>,
    adj: Vec<[usize; 2]>,
}

/// Loads the `{"n", "dyn", "adj"}` graph format, validating the invariants.
pub fn load_graph_json(path: &Path) -> Result<FlowGraph, PipelineError> {
    let bytes = fs::read(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: GraphFile = serde_json::from_slice(&bytes)?;
    let dyn_edges: Vec<(CellId, CellId)> =
        file.dyn_edges.iter().map(|e| (e[0], e[1])).collect();
    let adj_edges: Vec<(CellId, CellId)> = file.adj.iter().map(|e| (e[0], e[1])).collect();
    Ok(FlowGraph::new(file.n, &dyn_edges, &adj_edges)?)
}

/// Writes a graph in the same format `load_graph_json` reads.
pub fn write_graph_json(g: &FlowGraph, path: &Path) -> Result<(), PipelineError> {
    let file = GraphFile {
        n: g.n_cells(),
        dyn_edges: g.dyn_edges().map(|(a, b)| [a, b]).collect(),
        adj: g.adj_pairs().map(|(a, b)| [a, b]).collect(),
    };
    let value = serde_json::to_value(&file)?;
    let mut bytes = serde_json::to_vec_pretty(&value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Sanity checks tying the report's counters together.
pub fn report_is_consistent(report: &AnalysisReport, output: &AnalysisOutput) -> bool {
    let n_cells = output.finest_graph.n_cells();
    let resolved_total: usize = report.basins.per_end.iter().map(|b| b.resolved).sum();
    let covers = resolved_total + report.basins.unresolved == n_cells;
    let partition_covers = output
        .basins
        .assignments()
        .iter()
        .filter(|a| matches!(a, BasinAssignment::Unresolved(_)))
        .count()
        == report.basins.unresolved;
    covers && partition_covers
}
