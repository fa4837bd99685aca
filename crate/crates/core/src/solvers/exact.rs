//! Eigendecomposition reference solution.
//!
//! With `S = C^{1/2} M C^{-1/2} = V Λ Vᵀ`, the solution of `dT/dt = M T`
//! is
//!
//! ```text
//! T(t) = C^{-1/2} · V · exp(Λ (t - t0)) · Vᵀ · C^{1/2} · T(t0)
//! ```
//!
//! exact up to floating point and eigensolver accuracy. This replaces an
//! implicit stiff solver as the high-precision reference; it is also how
//! deviations (MaxD, SumD) are defined throughout the crate.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::lapack;
use crate::mesh::{Mesh, TemperatureField};
use crate::system::{symmetrize, DENSE_EIGEN_GUARD};

/// Precomputed eigenpairs of the symmetrized operator; reusable for any
/// initial field and any evaluation time on the same mesh.
#[derive(Debug, Clone)]
pub struct ExactSolver {
    sqrt_capacities: Vec<f64>,
    eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    eigenvectors: Array2<f64>,
}

impl ExactSolver {
    /// Eigendecomposes the mesh operator. Dense; guarded to
    /// [`DENSE_EIGEN_GUARD`] blocks.
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let n = mesh.n_blocks();
        if n > DENSE_EIGEN_GUARD {
            return Err(Error::TooLarge { n, max: DENSE_EIGEN_GUARD });
        }
        let s = symmetrize(mesh)?;
        let (mut eigenvalues, eigenvectors) = lapack::symmetric_eigen(&s)?;
        // The kernel of the operator is known analytically (one constant
        // mode per component); snap the numerically-near-zero eigenvalues
        // to exactly zero so long-time evaluation conserves energy instead
        // of drifting with exp(ε t).
        let lambda_max = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cutoff = crate::system::ZERO_MODE_RELATIVE_CUTOFF * lambda_max;
        for lambda in &mut eigenvalues {
            if lambda.abs() <= cutoff {
                *lambda = 0.0;
            }
        }
        Ok(ExactSolver {
            sqrt_capacities: mesh.capacities().iter().map(|c| c.sqrt()).collect(),
            eigenvalues,
            eigenvectors,
        })
    }

    /// Eigenvalues of the system operator, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Evaluates the exact solution at time `t`, starting from `initial`
    /// at its own time stamp.
    pub fn advance(&self, initial: &TemperatureField, t: f64) -> Result<TemperatureField> {
        let n = self.sqrt_capacities.len();
        if initial.len() != n {
            return Err(Error::SizeMismatch { field: initial.len(), expected: n });
        }
        if !t.is_finite() {
            return Err(Error::InvalidConfig(format!("non-finite evaluation time {t}")));
        }
        let dt = t - initial.time();
        let w = Array1::from_iter(
            initial.values().iter().zip(&self.sqrt_capacities).map(|(v, s)| v * s),
        );
        let mut z = self.eigenvectors.t().dot(&w);
        for (zk, lambda) in z.iter_mut().zip(&self.eigenvalues) {
            *zk *= (lambda * dt).exp();
        }
        let back = self.eigenvectors.dot(&z);
        let values: Vec<f64> =
            back.iter().zip(&self.sqrt_capacities).map(|(v, s)| v / s).collect();
        TemperatureField::new(values, t)
    }
}

/// One-shot exact solution at time `t`; decomposes the operator each call.
/// Use [`ExactSolver`] directly when evaluating several times or fields.
pub fn exact_solution(mesh: &Mesh, initial: &TemperatureField, t: f64) -> Result<TemperatureField> {
    ExactSolver::new(mesh)?.advance(initial, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::equilibrium_temperature;

    fn two_block() -> (Mesh, TemperatureField) {
        let mesh = Mesh::new(vec![1.0, 1.0], vec![(0, 1, 1.0)], None).unwrap();
        let field = TemperatureField::new(vec![1.0, 0.0], 0.0).unwrap();
        (mesh, field)
    }

    #[test]
    fn identity_at_initial_time() {
        let scenario = crate::experiments::scenario_example1(19);
        let mesh = crate::mesh::build_grid(&scenario).unwrap();
        let field = crate::mesh::initial_field(&mesh, &scenario).unwrap();
        let back = exact_solution(&mesh, &field, 0.0).unwrap();
        for (a, b) in back.values().iter().zip(field.values()) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn two_block_closed_form() {
        let (mesh, field) = two_block();
        let at_one = exact_solution(&mesh, &field, 1.0).unwrap();
        assert!((at_one.values()[0] - 0.5676676416183064).abs() < 1e-12);
        assert!((at_one.values()[1] - 0.43233235838169365).abs() < 1e-12);
    }

    #[test]
    fn long_time_limit_is_equilibrium() {
        let scenario = crate::experiments::scenario_example1(4);
        let mesh = crate::mesh::build_grid(&scenario).unwrap();
        let field = crate::mesh::initial_field(&mesh, &scenario).unwrap();
        let solver = ExactSolver::new(&mesh).unwrap();
        let report = crate::system::spectral_report(&mesh).unwrap();
        let slowest = report.lambda_max_abs / report.stiffness_ratio;
        let t = 1e3 / slowest;
        let settled = solver.advance(&field, t).unwrap();
        let equilibrium = equilibrium_temperature(&mesh, &field).unwrap();
        for &v in settled.values() {
            assert!(
                (v - equilibrium).abs() <= 1e-9 * equilibrium.abs().max(1.0),
                "{v} vs equilibrium {equilibrium}"
            );
        }
    }

    #[test]
    fn solver_is_reusable_across_times() {
        let (mesh, field) = two_block();
        let solver = ExactSolver::new(&mesh).unwrap();
        let half = solver.advance(&field, 0.5).unwrap();
        let full_via_half = solver.advance(&half, 1.0).unwrap();
        let full = solver.advance(&field, 1.0).unwrap();
        for (a, b) in full_via_half.values().iter().zip(full.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn guard_rejects_oversized_mesh() {
        let n = DENSE_EIGEN_GUARD + 1;
        let edges: Vec<(usize, usize, f64)> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        let mesh = Mesh::new(vec![1.0; n], edges, None).unwrap();
        assert!(matches!(ExactSolver::new(&mesh), Err(Error::TooLarge { .. })));
    }
}
