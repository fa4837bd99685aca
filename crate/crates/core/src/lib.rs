//! Explicit, unconditionally stable exponential stepping for heat
//! conduction on block meshes.
//!
//! Spatially discretizing the source-free heat equation over a mesh of
//! blocks — each with a heat capacity, linked by thermal conductances —
//! yields the ODE system `dT_i/dt = Σ_j (U_ij/C_i)(T_j - T_i)`. When the
//! parameters vary over orders of magnitude the system is severely stiff:
//! explicit Euler needs microscopic steps and implicit solvers carry large
//! matrices. The exponential update implemented here stays explicit yet
//! stable for *any* step size, because each block's new temperature is a
//! convex combination of old ones:
//!
//! ```
//! use blockheat::{mesh::{Mesh, TemperatureField}, solvers::cne_step};
//!
//! let mesh = Mesh::new(vec![1.0, 1.0], vec![(0, 1, 1.0)], None)?;
//! let field = TemperatureField::new(vec![1.0, 0.0], 0.0)?;
//! let next = cne_step(&mesh, &field, 1.0)?;
//! assert!((next.values()[0] - (-1.0f64).exp()).abs() < 1e-15);
//! # Ok::<(), blockheat::Error>(())
//! ```
//!
//! The crate also ships the classical baselines (explicit Euler, an
//! embedded Dormand–Prince 5(4) pair), an eigendecomposition oracle,
//! spectral stiffness diagnostics, the MaxD/SumD/EBE error measures, and
//! packaged benchmark scenarios. The `blockheat` CLI and the mdbook guide
//! under `book/` are built on exactly these APIs.

pub mod error;
pub mod experiments;
mod lapack;
pub mod mesh;
pub mod metrics;
pub mod report;
pub mod solvers;
pub mod system;

pub use error::{Error, Result};
pub use experiments::{
    run_convergence_sweep, run_speed_comparison, scenario_example1, scenario_example2,
    ExperimentResult,
};
pub use mesh::{
    build_grid, initial_field, BlockId, InitialCondition, Mesh, ScenarioSpec, TemperatureField,
};
pub use metrics::{
    energy_balance_error, estimate_order, max_deviation, sum_deviation, total_energy,
    ConvergenceReport, ErrorReport,
};
pub use solvers::{
    cne_step, convex_weights, dormand_prince_integrate, euler_step, exact_solution, integrate,
    ExactSolver, Method, RunResult, SolverConfig,
};
pub use system::{
    assemble_operator, equilibrium_temperature, rhs, spectral_report, symmetrize, SpectralReport,
    SystemOperator,
};
