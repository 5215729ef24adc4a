//! `exflow` — analyze planar flows (or raw cell graphs) into absorbing
//! filtrations, limit sets, end trees and basin decompositions.
//!
//! Exit codes: 0 ok, 2 validation error, 3 numeric failure, 4 i/o error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use exflow_core::dynamics::{builtin_system, GridSpec, OuterApproxConfig, BUILTIN_NAMES};
use exflow_core::render::render_basins_ppm;
use exflow_core::report::{
    analyze_graph, analyze_pipeline, load_graph_json, write_report_json, PipelineError,
};

#[derive(Parser)]
#[command(name = "exflow", version, about = "Finite-resolution limit sets, ends and basins of flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a builtin ODE system on a cubical grid.
    Analyze(AnalyzeArgs),
    /// List the builtin systems and their defaults.
    Systems,
    /// Analyze a directed cell graph from a JSON file.
    Check(CheckArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Builtin system name (see `exflow systems`).
    #[arg(long)]
    system: String,
    /// Parameter override, repeatable: --param l1=2.0
    #[arg(long = "param", value_name = "K=V")]
    params: Vec<String>,
    /// Base grid cells per axis: N or N,M.
    #[arg(long, value_name = "N[,M]")]
    grid: Option<String>,
    /// Phase-space box: x0,x1,y0,y1.
    #[arg(long = "box", value_name = "X0,X1,Y0,Y1")]
    box_bounds: Option<String>,
    /// Flow time per step.
    #[arg(long)]
    tau: Option<f64>,
    /// Cell collar added to image bounding boxes.
    #[arg(long)]
    bloat: Option<usize>,
    /// Number of resolution levels (the base grid doubles per level).
    #[arg(long, default_value_t = 1)]
    levels: usize,
    /// Analyze the reversed flow.
    #[arg(long)]
    reverse: bool,
    /// Report output path (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Optional basin image output path (binary PPM).
    #[arg(long)]
    render: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Graph input path (JSON: {"n", "dyn", "adj"}).
    #[arg(long)]
    graph: PathBuf,
    /// Report output path (JSON).
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code)
        }
    }
}

struct CliError {
    code: u8,
    message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<PipelineError> for CliError {
    fn from(err: PipelineError) -> Self {
        CliError {
            code: err.exit_code() as u8,
            message: err.to_string(),
        }
    }
}

fn invalid(message: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        message: message.into(),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Systems => {
            for name in BUILTIN_NAMES {
                let sys = builtin_system::<f64>(name, &[]).map_err(|e| invalid(e.to_string()))?;
                let params: Vec<String> = sys
                    .field
                    .params()
                    .iter()
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect();
                let params = if params.is_empty() {
                    "-".to_string()
                } else {
                    params.join(", ")
                };
                println!(
                    "{name}: params [{params}], box [{},{}]x[{},{}], grid {}x{}, boundary {}/{}, tau {}, bloat {}",
                    sys.grid.lo()[0],
                    sys.grid.hi()[0],
                    sys.grid.lo()[1],
                    sys.grid.hi()[1],
                    sys.grid.dims()[0],
                    sys.grid.dims()[1],
                    sys.grid.boundary()[0].as_str(),
                    sys.grid.boundary()[1].as_str(),
                    sys.config.tau,
                    sys.config.bloat,
                );
            }
            Ok(())
        }
        Command::Check(args) => {
            let graph = load_graph_json(&args.graph)?;
            let out = analyze_graph(&graph, &args.graph.display().to_string())?;
            write_report_json(&out.report, &args.out)?;
            eprintln!(
                "analyzed {} cells in {:.1} ms -> {}",
                graph.n_cells(),
                out.report.timings.total_ms,
                args.out.display()
            );
            Ok(())
        }
        Command::Analyze(args) => {
            let overrides = parse_params(&args.params)?;
            let sys = builtin_system::<f64>(&args.system, &overrides)
                .map_err(|e| invalid(e.to_string()))?;

            let (lo, hi) = match &args.box_bounds {
                None => (sys.grid.lo(), sys.grid.hi()),
                Some(spec) => {
                    let v = parse_floats(spec, 4, "--box expects x0,x1,y0,y1")?;
                    ([v[0], v[2]], [v[1], v[3]])
                }
            };
            let dims = match &args.grid {
                None => sys.grid.dims(),
                Some(spec) => {
                    let parts: Vec<&str> = spec.split(',').collect();
                    let parse = |s: &str| {
                        s.trim()
                            .parse::<usize>()
                            .map_err(|_| invalid(format!("--grid: bad cell count \"{s}\"")))
                    };
                    match parts.as_slice() {
                        [n] => {
                            let n = parse(n)?;
                            [n, n]
                        }
                        [n, m] => [parse(n)?, parse(m)?],
                        _ => return Err(invalid("--grid expects N or N,M")),
                    }
                }
            };
            let grid = GridSpec::new(lo, hi, dims, sys.grid.boundary())
                .map_err(|e| invalid(e.to_string()))?;
            let config = OuterApproxConfig::new(
                args.tau.unwrap_or(sys.config.tau),
                sys.config.rk_steps,
                args.bloat.unwrap_or(sys.config.bloat),
            )
            .map_err(|e| invalid(e.to_string()))?;
            if args.levels == 0 {
                return Err(invalid("--levels must be at least 1"));
            }

            let out = analyze_pipeline(&sys.field, &grid, &config, args.levels, args.reverse)?;
            write_report_json(&out.report, &args.out)?;
            if let Some(render_path) = &args.render {
                let finest_dims = out
                    .report
                    .levels
                    .last()
                    .and_then(|l| l.dims)
                    .expect("ODE pipelines carry grid dims");
                render_basins_ppm(
                    finest_dims,
                    &out.basins,
                    &out.end_of_component,
                    Some(&out.finest_partition),
                    render_path,
                )
                .map_err(|e| CliError {
                    code: 4,
                    message: format!("{}: {e}", render_path.display()),
                })?;
            }
            eprintln!(
                "analyzed {} at {} levels in {:.1} ms (build {:.1} ms) -> {}",
                args.system,
                args.levels,
                out.report.timings.total_ms,
                out.report.timings.build_ms,
                args.out.display()
            );
            Ok(())
        }
    }
}

fn parse_params(specs: &[String]) -> Result<Vec<(String, f64)>, CliError> {
    specs
        .iter()
        .map(|spec| {
            let (key, value) = spec
                .split_once('=')
                .ok_or_else(|| invalid(format!("--param expects K=V, got \"{spec}\"")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| invalid(format!("--param {key}: bad number \"{value}\"")))?;
            Ok((key.trim().to_string(), value))
        })
        .collect()
}

fn parse_floats(spec: &str, count: usize, usage: &str) -> Result<Vec<f64>, CliError> {
    let values: Result<Vec<f64>, _> = spec.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match values {
        Ok(v) if v.len() == count => Ok(v),
        _ => Err(invalid(usage.to_string())),
    }
}
