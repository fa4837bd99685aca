//! `blockheat` — reproducible, scriptable runs of the block-mesh heat
//! solvers.
//!
//! Subcommands: `scenario` (emit a built-in scenario file), `generate`
//! (scenario → mesh + initial field files), `solve` (integrate), `spectrum`
//! (stiffness diagnostics), `converge` (step-size sweep) and `compare`
//! (wall-time comparison). JSON for structured reports, CSV for anything
//! plottable; no plotting built in.
//!
//! Exit codes: 0 success, 2 invalid arguments or inputs, 3 I/O failure,
//! 4 solver failure (Euler divergence, adaptive underflow), 5 size guard
//! exceeded.

use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use blockheat::mesh::{build_grid, initial_field, Mesh, ScenarioSpec, TemperatureField};
use blockheat::metrics::energy_balance_error;
use blockheat::report;
use blockheat::solvers::{integrate, Method, RunResult, SolverConfig};
use blockheat::system::spectral_report;
use blockheat::{scenario_example1, scenario_example2, Error};

#[derive(Parser)]
#[command(name = "blockheat", version, about = "Block-mesh heat conduction solver benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a built-in benchmark scenario to a JSON file for editing
    Scenario(ScenarioCmd),
    /// Build the mesh and initial field of a scenario and write them out
    Generate(GenerateCmd),
    /// Integrate an initial field over a mesh with a chosen method
    Solve(SolveCmd),
    /// Eigenvalue diagnostics: stiffness ratio and Euler step limit
    Spectrum(SpectrumCmd),
    /// Error-versus-step-size sweep of the exponential method
    Converge(ConvergeCmd),
    /// Wall-time comparison: exponential method vs adaptive reference
    Compare(CompareCmd),
}

/// Where a scenario comes from: a JSON file or a built-in example.
#[derive(Args)]
#[command(group = ArgGroup::new("source").required(true).args(["scenario", "example1", "example2"]))]
struct ScenarioSource {
    /// Scenario JSON file
    #[arg(long, value_name = "FILE")]
    scenario: Option<PathBuf>,
    /// Built-in 10x10 random lattice, t in [0, 1] s
    #[arg(long)]
    example1: bool,
    /// Built-in 400x10 anisotropic lattice with a rectangular pulse,
    /// t in [0, 100] s
    #[arg(long)]
    example2: bool,
    /// Seed for the built-in scenarios
    #[arg(long, env = "BLOCKHEAT_SEED", default_value_t = 1)]
    seed: u64,
}

impl ScenarioSource {
    fn load(&self) -> Result<ScenarioSpec, Error> {
        let spec = if let Some(path) = &self.scenario {
            let spec: ScenarioSpec = load_json(path)?;
            spec.validate()?;
            spec
        } else if self.example1 {
            scenario_example1(self.seed)
        } else {
            scenario_example2(self.seed)
        };
        Ok(spec)
    }
}

#[derive(Args)]
struct ScenarioCmd {
    #[command(flatten)]
    source: ScenarioSource,
    /// Output scenario JSON path
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateCmd {
    #[command(flatten)]
    source: ScenarioSource,
    /// Output prefix; writes <out>.mesh.json and <out>.init.csv
    #[arg(long, value_name = "PREFIX")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliMethod {
    Cne,
    Euler,
    DormandPrince,
    Exact,
}

impl From<CliMethod> for Method {
    fn from(m: CliMethod) -> Method {
        match m {
            CliMethod::Cne => Method::Cne,
            CliMethod::Euler => Method::Euler,
            CliMethod::DormandPrince => Method::DormandPrince,
            CliMethod::Exact => Method::Exact,
        }
    }
}

#[derive(Args)]
struct SolveCmd {
    /// Mesh JSON file
    #[arg(long, value_name = "FILE")]
    mesh: PathBuf,
    /// Initial field CSV file (block,temperature)
    #[arg(long, value_name = "FILE")]
    init: PathBuf,
    #[arg(long, value_enum)]
    method: CliMethod,
    /// Step size for cne/euler (s)
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, default_value_t = 1e-7)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-7)]
    atol: f64,
    /// Time stamp of the initial field (s)
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    /// Integration end time (s)
    #[arg(long, value_name = "T")]
    t_fin: f64,
    /// Output prefix; writes <out>.final.csv and <out>.summary.json
    #[arg(long, value_name = "PREFIX")]
    out: PathBuf,
    /// Also write <out>.trajectory.csv (one row per step)
    #[arg(long)]
    trajectory: bool,
    /// Solver threads (default: all cores); results are identical for any
    /// thread count
    #[arg(long, env = "BLOCKHEAT_THREADS")]
    threads: Option<usize>,
}

#[derive(Args)]
struct SpectrumCmd {
    /// Mesh JSON file
    #[arg(long, value_name = "FILE")]
    mesh: PathBuf,
    /// Optional JSON report path
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Include the full eigenvalue list in the JSON report
    #[arg(long)]
    eigenvalues: bool,
}

#[derive(Args)]
struct ConvergeCmd {
    #[command(flatten)]
    source: ScenarioSource,
    /// Comma-separated, strictly decreasing step sizes
    #[arg(long, value_name = "H1,H2,...")]
    h_list: String,
    /// Output prefix; writes <out>.convergence.csv and <out>.convergence.json
    #[arg(long, value_name = "PREFIX")]
    out: PathBuf,
}

#[derive(Args)]
struct CompareCmd {
    #[command(flatten)]
    source: ScenarioSource,
    /// Output prefix; writes <out>.compare.json
    #[arg(long, value_name = "PREFIX")]
    out: PathBuf,
    /// Solver threads (default: all cores)
    #[arg(long, env = "BLOCKHEAT_THREADS")]
    threads: Option<usize>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli.command) {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => 3,
        Error::Divergence { .. } | Error::AdaptiveFailure(_) => 4,
        Error::TooLarge { .. } => 5,
        _ => 2,
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Scenario(cmd) => cmd_scenario(cmd),
        Command::Generate(cmd) => cmd_generate(cmd),
        Command::Solve(cmd) => cmd_solve(cmd),
        Command::Spectrum(cmd) => cmd_spectrum(cmd),
        Command::Converge(cmd) => cmd_converge(cmd),
        Command::Compare(cmd) => cmd_compare(cmd),
    }
}

fn io_with_path(err: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(err.kind(), format!("{}: {err}", path.display())))
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| io_with_path(e, path))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| io_with_path(e, path))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_os_string();
    name.push(suffix);
    PathBuf::from(name)
}

fn run_in_pool<T>(threads: Option<usize>, work: impl FnOnce() -> T + Send) -> Result<T, Error>
where
    T: Send,
{
    match threads {
        None => Ok(work()),
        Some(n) => {
            if n == 0 {
                return Err(Error::InvalidConfig("--threads must be at least 1".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(work))
        }
    }
}

fn cmd_scenario(cmd: ScenarioCmd) -> Result<(), Error> {
    let spec = cmd.source.load()?;
    write_text(&cmd.out, &report::to_json_string(&spec)?)?;
    println!(
        "wrote scenario: {} ({}x{} blocks, seed {}, t in [{}, {}] s)",
        cmd.out.display(),
        spec.n_x,
        spec.n_y,
        spec.seed,
        spec.t0,
        spec.t_fin
    );
    Ok(())
}

fn cmd_generate(cmd: GenerateCmd) -> Result<(), Error> {
    let spec = cmd.source.load()?;
    let mesh = build_grid(&spec)?;
    let field = initial_field(&mesh, &spec)?;

    let mesh_path = with_suffix(&cmd.out, ".mesh.json");
    let init_path = with_suffix(&cmd.out, ".init.csv");
    write_text(&mesh_path, &report::to_json_string(&mesh)?)?;
    write_text(&init_path, &report::field_csv_string(&field))?;

    println!("blocks={} edges={}", mesh.n_blocks(), mesh.edges().len());
    println!("wrote {} and {}", mesh_path.display(), init_path.display());
    Ok(())
}

/// JSON summary of a solver run.
#[derive(Serialize)]
struct RunSummary {
    method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rtol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    atol: Option<f64>,
    n_blocks: usize,
    t0: f64,
    t_fin: f64,
    steps_taken: usize,
    steps_rejected: usize,
    wall_time_s: f64,
    /// Energy balance error of the run (J).
    ebe: f64,
}

fn cmd_solve(cmd: SolveCmd) -> Result<(), Error> {
    let mesh: Mesh = load_json(&cmd.mesh)?;
    let init_values = report::parse_field_csv(
        &std::fs::read_to_string(&cmd.init).map_err(|e| io_with_path(e, &cmd.init))?,
    )?;
    let initial = TemperatureField::new(init_values, cmd.t0)?;

    let method: Method = cmd.method.into();
    let mut config = match method {
        Method::Cne | Method::Euler => {
            let h = cmd.h.ok_or_else(|| {
                Error::InvalidConfig("--h is required for cne and euler".into())
            })?;
            let mut c = SolverConfig::cne(h, cmd.t0, cmd.t_fin);
            c.method = method;
            c
        }
        Method::DormandPrince => SolverConfig::dormand_prince(cmd.rtol, cmd.atol, cmd.t0, cmd.t_fin),
        Method::Exact => SolverConfig::exact(cmd.t0, cmd.t_fin),
    };
    if cmd.trajectory {
        config = config.with_trajectory();
    }

    let result: RunResult = run_in_pool(cmd.threads, || integrate(&mesh, &initial, &config))??;

    let summary = RunSummary {
        method,
        h: config.h,
        rtol: matches!(method, Method::DormandPrince).then_some(config.rtol),
        atol: matches!(method, Method::DormandPrince).then_some(config.atol),
        n_blocks: mesh.n_blocks(),
        t0: cmd.t0,
        t_fin: cmd.t_fin,
        steps_taken: result.steps_taken,
        steps_rejected: result.steps_rejected,
        wall_time_s: result.wall_time,
        ebe: energy_balance_error(&mesh, &initial, &result.final_field)?,
    };

    let final_path = with_suffix(&cmd.out, ".final.csv");
    let summary_path = with_suffix(&cmd.out, ".summary.json");
    write_text(&final_path, &report::field_csv_string(&result.final_field))?;
    write_text(&summary_path, &report::to_json_string(&summary)?)?;
    if let Some(trajectory) = &result.trajectory {
        let path = with_suffix(&cmd.out, ".trajectory.csv");
        write_text(&path, &report::trajectory_csv_string(trajectory)?)?;
    }

    println!(
        "method={} steps={} rejected={} wall={:.3e}s ebe={:.6e}",
        method, summary.steps_taken, summary.steps_rejected, summary.wall_time_s, summary.ebe
    );
    println!("wrote {} and {}", final_path.display(), summary_path.display());
    Ok(())
}

fn cmd_spectrum(cmd: SpectrumCmd) -> Result<(), Error> {
    let mesh: Mesh = load_json(&cmd.mesh)?;
    let report_data = spectral_report(&mesh)?;
    println!(
        "n_blocks={} lambda_max_abs={:.6e} stiffness_ratio={:.6e} euler_h_max={:.6e} zero_modes={}",
        report_data.n_blocks(),
        report_data.lambda_max_abs,
        report_data.stiffness_ratio,
        report_data.euler_h_max,
        report_data.zero_modes
    );
    if let Some(out) = &cmd.out {
        write_text(out, &report::spectral_json(&report_data, cmd.eigenvalues)?)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn parse_h_list(text: &str) -> Result<Vec<f64>, Error> {
    let values: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    values.map_err(|e| Error::InvalidConfig(format!("bad --h-list: {e}")))
}

fn cmd_converge(cmd: ConvergeCmd) -> Result<(), Error> {
    let spec = cmd.source.load()?;
    let h_list = parse_h_list(&cmd.h_list)?;
    let sweep = blockheat::run_convergence_sweep(&spec, &h_list)?;

    let csv_path = with_suffix(&cmd.out, ".convergence.csv");
    let json_path = with_suffix(&cmd.out, ".convergence.json");
    write_text(&csv_path, &report::convergence_csv_string(&sweep))?;
    write_text(&json_path, &report::to_json_string(&sweep)?)?;

    println!(
        "slopes: max_d={:.3} sum_d={:.3} abs_ebe={:.3}",
        sweep.slope_max_d, sweep.slope_sum_d, sweep.slope_abs_ebe
    );
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn cmd_compare(cmd: CompareCmd) -> Result<(), Error> {
    let spec = cmd.source.load()?;
    let result = run_in_pool(cmd.threads, || blockheat::run_speed_comparison(&spec))??;

    println!(
        "{:<16} {:>9} {:>9} {:>12} {:>12} {:>12} {:>13}",
        "method", "steps", "rejected", "wall_s", "max_d", "sum_d", "ebe"
    );
    for run in &result.runs {
        println!(
            "{:<16} {:>9} {:>9} {:>12.4e} {:>12.4e} {:>12.4e} {:>13.4e}",
            run.config.method.to_string(),
            run.steps_taken,
            run.steps_rejected,
            run.wall_time,
            run.errors.max_d,
            run.errors.sum_d,
            run.errors.ebe
        );
    }

    let json_path = with_suffix(&cmd.out, ".compare.json");
    write_text(&json_path, &report::to_json_string(&result)?)?;
    println!("wrote {}", json_path.display());
    Ok(())
}
