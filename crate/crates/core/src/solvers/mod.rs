//! Time integrators for the block-mesh heat system.
//!
//! Four methods live here:
//!
//! * [`cne_step`] — the explicit exponential update. Each block relaxes
//!   toward its conductance-weighted neighbour average with its own
//!   characteristic time; the new value is a convex combination of old
//!   values, so the scheme is unconditionally stable and obeys the
//!   discrete maximum/minimum principle for any step size.
//! * [`euler_step`] — explicit Euler (the FTCS scheme on this spatial
//!   discretization), stable only for `h <= 2 / |λ_m|`.
//! * [`dormand_prince_integrate`] — an embedded 5(4) Runge–Kutta pair
//!   with PI step-size control, the adaptive reference.
//! * [`ExactSolver`] — the eigendecomposition oracle, exact up to
//!   floating-point and eigensolver accuracy.
//!
//! The fixed-step methods are pure maps over blocks: the new field is
//! computed entirely from an immutable copy of the old one (double
//! buffering), with each block's neighbour sum accumulated in ascending
//! neighbour order. Results are therefore bit-identical regardless of the
//! number of threads; run [`integrate`] inside a sized
//! [`rayon::ThreadPool`] to control parallelism.

mod cne;
mod dormand_prince;
mod euler;
mod exact;

pub use cne::{cne_step, convex_weights};
pub use dormand_prince::dormand_prince_integrate;
pub use euler::euler_step;
pub use exact::{exact_solution, ExactSolver};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, TemperatureField};

/// Meshes at least this large are stepped with data-parallel block loops.
pub(crate) const PAR_THRESHOLD: usize = 1024;

/// Relative slack when deciding whether the remaining span still needs a
/// full step; absorbs accumulated `t += h` rounding.
const STEP_SLACK: f64 = 1e-12;

/// Explicit Euler is declared divergent once `max |T_i|` exceeds
/// `10^6 * (initial max |T_i| + 1)`.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Integration method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Cne,
    Euler,
    DormandPrince,
    Exact,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Method::Cne => "cne",
            Method::Euler => "euler",
            Method::DormandPrince => "dormand-prince",
            Method::Exact => "exact",
        };
        f.write_str(name)
    }
}

/// A complete description of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    /// Step size for the fixed-step methods (s).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub h: Option<f64>,
    pub t0: f64,
    pub t_fin: f64,
    pub rtol: f64,
    pub atol: f64,
    #[serde(default)]
    pub record_trajectory: bool,
}

/// Tolerance used by the adaptive reference runs (both relative and
/// absolute).
pub const DEFAULT_TOLERANCE: f64 = 1e-7;

impl SolverConfig {
    pub fn cne(h: f64, t0: f64, t_fin: f64) -> Self {
        SolverConfig {
            method: Method::Cne,
            h: Some(h),
            t0,
            t_fin,
            rtol: DEFAULT_TOLERANCE,
            atol: DEFAULT_TOLERANCE,
            record_trajectory: false,
        }
    }

    pub fn euler(h: f64, t0: f64, t_fin: f64) -> Self {
        SolverConfig { method: Method::Euler, ..Self::cne(h, t0, t_fin) }
    }

    pub fn dormand_prince(rtol: f64, atol: f64, t0: f64, t_fin: f64) -> Self {
        SolverConfig {
            method: Method::DormandPrince,
            h: None,
            t0,
            t_fin,
            rtol,
            atol,
            record_trajectory: false,
        }
    }

    pub fn exact(t0: f64, t_fin: f64) -> Self {
        SolverConfig {
            method: Method::Exact,
            h: None,
            t0,
            t_fin,
            rtol: DEFAULT_TOLERANCE,
            atol: DEFAULT_TOLERANCE,
            record_trajectory: false,
        }
    }

    pub fn with_trajectory(mut self) -> Self {
        self.record_trajectory = true;
        self
    }

    pub fn time_span(&self) -> f64 {
        self.t_fin - self.t0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0.is_finite() && self.t_fin.is_finite() && self.t0 < self.t_fin) {
            return Err(Error::InvalidConfig(format!(
                "time window [{}, {}] is not well-ordered",
                self.t0, self.t_fin
            )));
        }
        match self.method {
            Method::Cne | Method::Euler => match self.h {
                Some(h) if h.is_finite() && h > 0.0 => Ok(()),
                Some(h) => {
                    Err(Error::InvalidConfig(format!("step size must be positive, got {h}")))
                }
                None => Err(Error::InvalidConfig(format!(
                    "method '{}' requires a step size",
                    self.method
                ))),
            },
            Method::DormandPrince => {
                if self.rtol.is_finite() && self.rtol > 0.0 && self.atol.is_finite() && self.atol > 0.0
                {
                    Ok(())
                } else {
                    Err(Error::InvalidConfig(format!(
                        "tolerances must be positive, got rtol = {}, atol = {}",
                        self.rtol, self.atol
                    )))
                }
            }
            Method::Exact => Ok(()),
        }
    }
}

/// Outcome of a solver run.
#[derive(Debug, Clone)]
pub struct RunResult {
    /// Temperatures at `t_fin`.
    pub final_field: TemperatureField,
    /// Accepted steps (fixed-step methods never reject).
    pub steps_taken: usize,
    /// Rejected trial steps of the adaptive method.
    pub steps_rejected: usize,
    /// Monotonic wall-clock duration of the run (s).
    pub wall_time: f64,
    /// Every intermediate field including the initial one, when requested.
    pub trajectory: Option<Vec<TemperatureField>>,
}

/// Runs the configured method from `initial` (stamped at `config.t0`) to
/// `config.t_fin`.
///
/// Fixed-step methods shorten the final step to land exactly on `t_fin`.
/// Given identical inputs the result is bit-identical regardless of the
/// rayon thread count in effect.
pub fn integrate(mesh: &Mesh, initial: &TemperatureField, config: &SolverConfig) -> Result<RunResult> {
    config.validate()?;
    if initial.len() != mesh.n_blocks() {
        return Err(Error::SizeMismatch { field: initial.len(), expected: mesh.n_blocks() });
    }
    if (initial.time() - config.t0).abs() > 1e-9 * config.t0.abs().max(1.0) {
        return Err(Error::TimeMismatch { a: initial.time(), b: config.t0 });
    }
    let clock = Instant::now();
    let mut result = match config.method {
        Method::Cne => fixed_step_run(mesh, initial, config, FixedStep::Cne)?,
        Method::Euler => fixed_step_run(mesh, initial, config, FixedStep::Euler)?,
        Method::DormandPrince => dormand_prince::run(
            mesh,
            initial,
            config.t_fin,
            config.rtol,
            config.atol,
            config.record_trajectory,
        )?,
        Method::Exact => {
            let final_field = ExactSolver::new(mesh)?.advance(initial, config.t_fin)?;
            let trajectory =
                config.record_trajectory.then(|| vec![initial.clone(), final_field.clone()]);
            RunResult {
                final_field,
                steps_taken: 1,
                steps_rejected: 0,
                wall_time: 0.0,
                trajectory,
            }
        }
    };
    result.wall_time = clock.elapsed().as_secs_f64();
    Ok(result)
}

#[derive(Clone, Copy, PartialEq)]
enum FixedStep {
    Cne,
    Euler,
}

fn fixed_step_run(
    mesh: &Mesh,
    initial: &TemperatureField,
    config: &SolverConfig,
    kind: FixedStep,
) -> Result<RunResult> {
    mesh.require_no_isolated()?;
    let h = config.h.expect("validated");
    let (t0, t_fin) = (config.t0, config.t_fin);
    let divergence_bound = DIVERGENCE_FACTOR * (initial.max_abs() + 1.0);

    let mut src = initial.values().to_vec();
    let mut dst = vec![0.0f64; src.len()];
    let mut trajectory = config.record_trajectory.then(|| vec![initial.clone()]);
    let mut t = t0;
    let mut steps = 0usize;
    let span = t_fin - t0;

    loop {
        // Step boundaries as t0 + k·h (multiplied, not accumulated) so a
        // long run cannot drift into a spurious extra crumb step.
        let planned = t0 + (steps + 1) as f64 * h;
        let last = planned >= t_fin - STEP_SLACK * span;
        let (h_step, t_next) = if last { (t_fin - t, t_fin) } else { (h, planned) };
        match kind {
            FixedStep::Cne => cne::step_into(mesh, &src, &mut dst, h_step),
            FixedStep::Euler => euler::step_into(mesh, &src, &mut dst, h_step),
        }
        std::mem::swap(&mut src, &mut dst);
        steps += 1;
        t = t_next;
        if kind == FixedStep::Euler {
            let max_abs = src.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !(max_abs <= divergence_bound) {
                return Err(Error::Divergence { step: steps, magnitude: max_abs });
            }
        }
        if let Some(traj) = trajectory.as_mut() {
            traj.push(TemperatureField::from_raw(src.clone(), t));
        }
        if last {
            break;
        }
    }

    Ok(RunResult {
        final_field: TemperatureField::from_raw(src, t_fin),
        steps_taken: steps,
        steps_rejected: 0,
        wall_time: 0.0,
        trajectory,
    })
}
