//! Packaged benchmark scenarios, convergence sweeps and speed comparisons.
//!
//! Two scenario families are built in. Example 1 is a 10×10 lattice with
//! capacities log-uniform over (10⁻³, 10²) and both conductance families
//! over (10⁻¹, 10³), integrated over 1 s; its stiffness ratio is typically
//! around 10⁶–10⁷. Example 2 is a 400×10 lattice with capacities over
//! (10⁻³, 10³) and anisotropic conductances (x: (10⁻², 10⁴),
//! y: (10⁻⁴, 10²)), a rectangular initial pulse of 100 K on blocks
//! 400–780 (1-based), integrated over 100 s; stiffness ratios around
//! 10⁸–10¹⁰ make explicit Euler hopeless there.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{build_grid, initial_field, InitialCondition, Mesh, ScenarioSpec, TemperatureField};
use crate::metrics::{estimate_order, ConvergenceReport, ErrorReport};
use crate::solvers::{integrate, ExactSolver, RunResult, SolverConfig, DEFAULT_TOLERANCE};
use crate::system::{spectral_report, SpectralReport};

/// Step sizes over which order slopes are fitted: the smallest values of
/// a sweep, below the large-`h` stability plateau that flattens the fit.
pub const ORDER_FIT_TAIL: usize = 5;

/// Wall-time measurements repeat each run this many times and keep the
/// median.
pub const TIMING_REPETITIONS: usize = 5;

/// The 10×10 random-lattice scenario integrated over one second.
pub fn scenario_example1(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        n_x: 10,
        n_y: 10,
        capacity_exponent_range: (-3.0, 2.0),
        ux_exponent_range: (-1.0, 3.0),
        uy_exponent_range: (-1.0, 3.0),
        seed,
        // The benchmark definition leaves the initial distribution open;
        // uniform over (0, 100) matches the temperature scale of the
        // second scenario and is the documented default.
        initial_condition: InitialCondition::UniformRandom { lo: 0.0, hi: 100.0 },
        t0: 0.0,
        t_fin: 1.0,
    }
}

/// The 400×10 anisotropic scenario with a rectangular 100 K pulse on
/// blocks 400–780 (1-based), integrated over 100 seconds.
pub fn scenario_example2(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        n_x: 400,
        n_y: 10,
        capacity_exponent_range: (-3.0, 3.0),
        ux_exponent_range: (-2.0, 4.0),
        uy_exponent_range: (-4.0, 2.0),
        seed,
        initial_condition: InitialCondition::RectangularPulse {
            i_lo: 400,
            i_hi: 780,
            high_value: 100.0,
            low_value: 0.0,
        },
        t0: 0.0,
        t_fin: 100.0,
    }
}

/// One solver run inside an [`ExperimentResult`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRun {
    pub config: SolverConfig,
    pub steps_taken: usize,
    pub steps_rejected: usize,
    /// Median wall time over [`TIMING_REPETITIONS`] repetitions (s).
    pub wall_time: f64,
    pub errors: ErrorReport,
}

/// Everything a packaged experiment produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub scenario: ScenarioSpec,
    pub spectral: SpectralReport,
    pub runs: Vec<ComparisonRun>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub convergence: Option<ConvergenceReport>,
}

/// Runs the exponential method at each step size of a strictly decreasing
/// sweep and reports MaxD/SumD against the eigendecomposition reference
/// plus the signed EBE, with fitted order slopes.
pub fn run_convergence_sweep(scenario: &ScenarioSpec, h_list: &[f64]) -> Result<ConvergenceReport> {
    if h_list.len() < 3 {
        return Err(Error::InvalidConfig(format!(
            "need at least 3 step sizes, got {}",
            h_list.len()
        )));
    }
    if h_list.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return Err(Error::InvalidConfig("step sizes must be positive".into()));
    }
    if h_list.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidConfig("step sizes must be strictly decreasing".into()));
    }

    let mesh = build_grid(scenario)?;
    let t0_field = initial_field(&mesh, scenario)?;
    let reference = ExactSolver::new(&mesh)?.advance(&t0_field, scenario.t_fin)?;

    let mut max_d = Vec::with_capacity(h_list.len());
    let mut sum_d = Vec::with_capacity(h_list.len());
    let mut ebe = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let config = SolverConfig::cne(h, scenario.t0, scenario.t_fin);
        let run = integrate(&mesh, &t0_field, &config)?;
        let report = ErrorReport::compute(&mesh, &t0_field, &run.final_field, &reference)?;
        max_d.push(report.max_d);
        sum_d.push(report.sum_d);
        ebe.push(report.ebe);
    }

    let tail = h_list.len().min(ORDER_FIT_TAIL);
    let start = h_list.len() - tail;
    let fit = |errors: &[f64]| -> Result<f64> {
        let points: Vec<(f64, f64)> = h_list[start..]
            .iter()
            .zip(&errors[start..])
            .map(|(&h, &e)| (h, e.abs()))
            .collect();
        estimate_order(&points)
    };
    let slope_max_d = fit(&max_d)?;
    let slope_sum_d = fit(&sum_d)?;
    let slope_abs_ebe = fit(&ebe)?;

    Ok(ConvergenceReport {
        h_values: h_list.to_vec(),
        max_d,
        sum_d,
        ebe,
        slope_max_d,
        slope_sum_d,
        slope_abs_ebe,
    })
}

fn median_wall_time(
    mesh: &Mesh,
    field: &TemperatureField,
    config: &SolverConfig,
) -> Result<(RunResult, f64)> {
    let mut times = Vec::with_capacity(TIMING_REPETITIONS);
    let mut last = None;
    for _ in 0..TIMING_REPETITIONS {
        let run = integrate(mesh, field, config)?;
        times.push(run.wall_time);
        last = Some(run);
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok((last.expect("at least one repetition"), times[times.len() / 2]))
}

/// Benchmarks the exponential method at a coarse step (span/100) against
/// the adaptive 5(4) pair at the strict 10⁻⁷ tolerances, both checked
/// against the eigendecomposition reference.
pub fn run_speed_comparison(scenario: &ScenarioSpec) -> Result<ExperimentResult> {
    let mesh = build_grid(scenario)?;
    let t0_field = initial_field(&mesh, scenario)?;
    let spectral = spectral_report(&mesh)?;
    let reference = ExactSolver::new(&mesh)?.advance(&t0_field, scenario.t_fin)?;

    let coarse_h = scenario.time_span() / 100.0;
    let configs = [
        SolverConfig::cne(coarse_h, scenario.t0, scenario.t_fin),
        SolverConfig::dormand_prince(
            DEFAULT_TOLERANCE,
            DEFAULT_TOLERANCE,
            scenario.t0,
            scenario.t_fin,
        ),
    ];

    let mut runs = Vec::with_capacity(configs.len());
    for config in configs {
        let (run, wall) = median_wall_time(&mesh, &t0_field, &config)?;
        let errors = ErrorReport::compute(&mesh, &t0_field, &run.final_field, &reference)?;
        runs.push(ComparisonRun {
            config,
            steps_taken: run.steps_taken,
            steps_rejected: run.steps_rejected,
            wall_time: wall,
            errors,
        });
    }

    Ok(ExperimentResult { scenario: scenario.clone(), spectral, runs, convergence: None })
}
