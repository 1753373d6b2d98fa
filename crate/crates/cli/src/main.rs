//! `mixsys`: validate, partition and run system descriptions, and replay the
//! DRM demo scenarios.
//!
//! Exit codes: 0 success, 1 diagnostics, 2 usage error, 3 runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mixsys_core::engine::{self, InitialInputs, Mapping, SimConfig, TraceFormat};
use mixsys_core::graph::SystemModel;
use mixsys_core::model::Direction;
use mixsys_core::partition::{self, Constraints, Method, PartitionObjective, Quad, Scenario};
use mixsys_core::sysdesc;
use mixsys_core::{BehaviorRegistry, Decimal};
use mixsys_drm::demo;

const EXIT_DIAGNOSTICS: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "mixsys", version, about = "Mixed software/hardware system composition, partitioning and simulation")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a system description.
    Validate { file: PathBuf },
    /// Simulate a system description under a mapping.
    Run {
        file: PathBuf,
        /// Mapping file (`component=SW|HW` lines), `all-sw` or `all-hw-where-allowed`.
        #[arg(long, default_value = "all-sw")]
        mapping: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the trace.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value = "lines")]
        format: TraceFormat,
    },
    /// Search for the best software/hardware mapping.
    Partition {
        file: PathBuf,
        /// Objective weights `time,area,energy,security`.
        #[arg(long, default_value = "1,1,1,1")]
        weights: Quad,
        /// Reference values `time,area,energy,security`.
        #[arg(long, default_value = "1,1,1,1")]
        refs: Quad,
        /// Maximum total hardware area; unlimited when absent.
        #[arg(long)]
        area_budget: Option<Decimal>,
        #[arg(long, default_value_t = 0)]
        security_floor: i64,
        #[arg(long, default_value = "exhaustive")]
        method: Method,
        /// Where to write the full search report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run a scripted scenario on the bundled DRM system.
    DemoDrm {
        #[arg(long)]
        scenario: demo::Scenario,
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        now: i64,
    },
}

/// A failed command: what to print and which code to exit with.
struct Failure {
    code: u8,
    lines: Vec<String>,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, lines: vec![format!("error: {}", msg.into())] }
    }

    fn runtime(category: &str, msg: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_RUNTIME, lines: vec![format!("error: {category}: {msg}")] }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { file } => load(&file).map(|_| ()),
        Command::Run { file, mapping, seed, trace, format } => cmd_run(&file, &mapping, seed, trace.as_deref(), format),
        Command::Partition { file, weights, refs, area_budget, security_floor, method, report } => {
            cmd_partition(&file, weights, refs, area_budget, security_floor, method, report.as_deref())
        }
        Command::DemoDrm { scenario, now } => cmd_demo_drm(scenario, now),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            for line in f.lines {
                eprintln!("{line}");
            }
            ExitCode::from(f.code)
        }
    }
}

/// Built-in behaviors plus the DRM behaviors bound to the demo data.
fn registry() -> BehaviorRegistry {
    demo::demo_registry()
}

fn load(file: &Path) -> Result<SystemModel, Failure> {
    let text =
        std::fs::read_to_string(file).map_err(|e| Failure::usage(format!("cannot read {}: {e}", file.display())))?;
    sysdesc::parse_system(&file.display().to_string(), &text, &registry()).map_err(|diags| Failure {
        code: EXIT_DIAGNOSTICS,
        lines: diags.iter().map(ToString::to_string).collect(),
    })
}

/// The demo request, restricted to input ports the model actually has.
fn default_inputs(model: &SystemModel) -> InitialInputs {
    demo::demo_inputs()
        .into_iter()
        .filter(|(port, msg)| {
            model
                .component(&port.component)
                .and_then(|c| c.port(Direction::Input, &port.port))
                .is_some_and(|p| p.tag == msg.tag)
        })
        .collect()
}

fn mapping_arg(model: &SystemModel, arg: &str) -> Result<Mapping, Failure> {
    match arg {
        "all-sw" => Ok(Mapping::all_software(model)),
        "all-hw-where-allowed" => Ok(Mapping::all_hardware_where_allowed(model)),
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {path}: {e}")))?;
            Mapping::parse_lines(&text).map_err(|e| Failure::runtime(e.category(), e))
        }
    }
}

fn cmd_run(file: &Path, mapping: &str, seed: u64, trace_path: Option<&Path>, format: TraceFormat) -> Result<(), Failure> {
    let model = load(file)?;
    let mapping = mapping_arg(&model, mapping)?;
    let config = SimConfig::new(mapping).with_seed(seed);
    let trace = engine::run(&model, &registry(), config, &default_inputs(&model))
        .map_err(|e| Failure::runtime(e.category(), e))?;
    if let Some(path) = trace_path {
        std::fs::write(path, engine::trace_export(&trace, format))
            .map_err(|e| Failure::runtime("IoError", format!("{}: {e}", path.display())))?;
    }
    println!("sim_time={}", trace.sim_time.to_fixed6());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_partition(
    file: &Path,
    weights: Quad,
    refs: Quad,
    area_budget: Option<Decimal>,
    security_floor: i64,
    method: Method,
    report_path: Option<&Path>,
) -> Result<(), Failure> {
    let model = load(file)?;
    let objective = PartitionObjective::new(weights, refs).map_err(|e| Failure::usage(e.to_string()))?;
    let constraints = match area_budget {
        Some(budget) => Constraints::new(budget, security_floor),
        None => Constraints::new(Constraints::unconstrained().area_budget, security_floor),
    }
    .map_err(|e| Failure::usage(e.to_string()))?;
    let scenario = Scenario { inputs: default_inputs(&model), ..Default::default() };
    let (best, report) = partition::optimize(&model, &registry(), &scenario, &objective, &constraints, method)
        .map_err(|e| Failure::runtime(e.category(), e))?;
    if let Some(path) = report_path {
        std::fs::write(path, report.to_value(&best).to_pretty())
            .map_err(|e| Failure::runtime("IoError", format!("{}: {e}", path.display())))?;
    }
    for (id, kind) in &best.mapping.assignment {
        println!("{id}={}", kind.short());
    }
    println!("objective={}", best.objective_text());
    Ok(())
}

fn cmd_demo_drm(scenario: demo::Scenario, now: i64) -> Result<(), Failure> {
    let output = demo::run_scenario(scenario, now).map_err(|e| Failure::runtime(e.category(), e))?;
    for line in &output.narrative {
        println!("{line}");
    }
    println!("{}", output.verdict);
    Ok(())
}
