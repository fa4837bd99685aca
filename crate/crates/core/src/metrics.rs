//! Error measures and convergence-order estimation.
//!
//! Three global error measures are used throughout the benchmarks:
//! the maximum deviation MaxD, the summed absolute deviation SumD, and
//! the signed energy balance error EBE — the change of the total thermal
//! energy `Σ C_i T_i` over a run, which an isolated system conserves
//! exactly. EBE needs no reference solution, but beware: it is signed and
//! can pass through zero while pointwise errors stay large, so SumD here
//! is deliberately a sum of absolute deviations rather than a signed sum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, TemperatureField};

/// MaxD, SumD and EBE of one solver run against a reference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorReport {
    /// `max_i |a_i - b_i|` (K).
    pub max_d: f64,
    /// `Σ_i |a_i - b_i|` (K).
    pub sum_d: f64,
    /// Signed energy change over the run (J).
    pub ebe: f64,
}

impl ErrorReport {
    /// Deviations of `candidate` from `reference` plus the energy balance
    /// error of the run `initial → candidate`.
    pub fn compute(
        mesh: &Mesh,
        initial: &TemperatureField,
        candidate: &TemperatureField,
        reference: &TemperatureField,
    ) -> Result<Self> {
        Ok(ErrorReport {
            max_d: max_deviation(candidate, reference)?,
            sum_d: sum_deviation(candidate, reference)?,
            ebe: energy_balance_error(mesh, initial, candidate)?,
        })
    }
}

fn check_comparable(a: &TemperatureField, b: &TemperatureField) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch { field: b.len(), expected: a.len() });
    }
    let tol = 1e-12 * a.time().abs().max(1.0);
    if (a.time() - b.time()).abs() > tol {
        return Err(Error::TimeMismatch { a: a.time(), b: b.time() });
    }
    Ok(())
}

/// Maximum absolute pointwise deviation between two fields at the same
/// time stamp.
pub fn max_deviation(a: &TemperatureField, b: &TemperatureField) -> Result<f64> {
    check_comparable(a, b)?;
    Ok(a.values()
        .iter()
        .zip(b.values())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs())))
}

/// Sum of absolute pointwise deviations between two fields.
pub fn sum_deviation(a: &TemperatureField, b: &TemperatureField) -> Result<f64> {
    check_comparable(a, b)?;
    Ok(a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).sum())
}

/// Total thermal energy `Σ C_i T_i` (J).
pub fn total_energy(mesh: &Mesh, field: &TemperatureField) -> Result<f64> {
    if field.len() != mesh.n_blocks() {
        return Err(Error::SizeMismatch { field: field.len(), expected: mesh.n_blocks() });
    }
    Ok(mesh.capacities().iter().zip(field.values()).map(|(c, t)| c * t).sum())
}

/// Signed energy change `Σ C_i (T_i(final) - T_i(initial))` (J); zero for
/// the exact solution of an isolated system.
pub fn energy_balance_error(
    mesh: &Mesh,
    initial: &TemperatureField,
    fin: &TemperatureField,
) -> Result<f64> {
    Ok(total_energy(mesh, fin)? - total_energy(mesh, initial)?)
}

/// Least-squares slope of `log10(error)` against `log10(h)`: the observed
/// convergence order.
///
/// Needs at least three points with positive step sizes and errors; a
/// zero error means the method was exact at that step size and no order
/// can be fitted through it.
pub fn estimate_order(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!("{} points, need at least 3", points.len())));
    }
    for &(h, e) in points {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::DegenerateFit(format!("non-positive step size {h}")));
        }
        if !(e.is_finite() && e > 0.0) {
            return Err(Error::DegenerateFit(format!("non-positive error {e} at h = {h}")));
        }
    }
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(h, e) in points {
        let x = h.log10();
        let y = e.log10();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = n * sxx - sx * sx;
    if denom.abs() <= 1e-12 * (n * sxx).abs().max(1e-30) {
        return Err(Error::DegenerateFit("step sizes do not vary".into()));
    }
    Ok((n * sxy - sx * sy) / denom)
}

/// Errors of a step-size sweep plus their fitted orders.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Step sizes, strictly decreasing.
    pub h_values: Vec<f64>,
    pub max_d: Vec<f64>,
    pub sum_d: Vec<f64>,
    /// Signed energy balance errors (the CSV form exports `|ebe|`).
    pub ebe: Vec<f64>,
    pub slope_max_d: f64,
    pub slope_sum_d: f64,
    pub slope_abs_ebe: f64,
}

impl ConvergenceReport {
    /// Ratio of consecutive MaxD values over the smallest step sizes;
    /// near 2 when halving `h` halves the error.
    pub fn tail_halving_ratios(&self, tail: usize) -> Vec<f64> {
        let n = self.max_d.len();
        let start = n.saturating_sub(tail);
        self.max_d[start..].windows(2).map(|w| w[0] / w[1]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(values: &[f64]) -> TemperatureField {
        TemperatureField::new(values.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn deviations_of_identical_fields_are_zero() {
        let a = field(&[1.0, 2.0, 3.0]);
        assert_eq!(max_deviation(&a, &a).unwrap(), 0.0);
        assert_eq!(sum_deviation(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn deviation_examples() {
        let a = field(&[1.0, 2.0]);
        let b = field(&[0.0, 5.0]);
        assert_eq!(max_deviation(&a, &b).unwrap(), 3.0);
        assert_eq!(sum_deviation(&a, &b).unwrap(), 4.0);
        // Symmetry and the norm inequality.
        assert_eq!(max_deviation(&a, &b).unwrap(), max_deviation(&b, &a).unwrap());
        assert!(sum_deviation(&a, &b).unwrap() >= max_deviation(&a, &b).unwrap());
    }

    #[test]
    fn mismatches_are_rejected() {
        let a = field(&[1.0, 2.0]);
        let b = field(&[1.0]);
        assert!(matches!(max_deviation(&a, &b), Err(Error::SizeMismatch { .. })));
        let c = TemperatureField::new(vec![1.0, 2.0], 2.0).unwrap();
        assert!(matches!(max_deviation(&a, &c), Err(Error::TimeMismatch { .. })));
    }

    #[test]
    fn total_energy_examples() {
        let mesh = Mesh::new(vec![1.0, 3.0], vec![(0, 1, 1.0)], None).unwrap();
        assert_eq!(total_energy(&mesh, &field(&[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(total_energy(&mesh, &field(&[4.0, 0.0])).unwrap(), 4.0);
    }

    #[test]
    fn ebe_zero_for_unchanged_field() {
        let mesh = Mesh::new(vec![1.0, 3.0], vec![(0, 1, 1.0)], None).unwrap();
        let a = TemperatureField::new(vec![2.0, 5.0], 0.0).unwrap();
        assert_eq!(energy_balance_error(&mesh, &a, &a).unwrap(), 0.0);
    }

    #[test]
    fn ebe_is_signed_and_telescopes() {
        let mesh = Mesh::new(vec![2.0, 1.0], vec![(0, 1, 1.0)], None).unwrap();
        let t0 = TemperatureField::new(vec![1.0, 1.0], 0.0).unwrap();
        let t1 = TemperatureField::new(vec![2.0, 0.5], 1.0).unwrap();
        let t2 = TemperatureField::new(vec![0.0, 4.0], 2.0).unwrap();
        let direct = energy_balance_error(&mesh, &t0, &t2).unwrap();
        let summed = energy_balance_error(&mesh, &t0, &t1).unwrap()
            + energy_balance_error(&mesh, &t1, &t2).unwrap();
        assert!((direct - summed).abs() <= 1e-10 * direct.abs().max(1.0));
        assert!(energy_balance_error(&mesh, &t0, &t1).unwrap() > 0.0);
        assert!(energy_balance_error(&mesh, &t1, &t0).unwrap() < 0.0);
    }

    #[test]
    fn energy_is_invariant_along_exact_trajectory() {
        let scenario = crate::experiments::scenario_example1(6);
        let mesh = crate::mesh::build_grid(&scenario).unwrap();
        let initial = crate::mesh::initial_field(&mesh, &scenario).unwrap();
        let solver = crate::solvers::ExactSolver::new(&mesh).unwrap();
        let e0 = total_energy(&mesh, &initial).unwrap();
        for t in [1e-4, 1e-2, 1.0, 100.0] {
            let state = solver.advance(&initial, t).unwrap();
            let e = total_energy(&mesh, &state).unwrap();
            assert!((e - e0).abs() <= 1e-10 * e0.abs(), "t = {t}: {e} vs {e0}");
        }
    }

    #[test]
    fn order_fit_recovers_exact_powers() {
        let hs = [0.5, 0.25, 0.125, 0.0625, 0.03125];
        let linear: Vec<(f64, f64)> = hs.iter().map(|&h| (h, 3.0 * h)).collect();
        assert!((estimate_order(&linear).unwrap() - 1.0).abs() < 1e-12);
        let quadratic: Vec<(f64, f64)> = hs.iter().map(|&h| (h, 0.7 * h * h)).collect();
        assert!((estimate_order(&quadratic).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn order_fit_rejects_degenerate_input() {
        assert!(matches!(
            estimate_order(&[(0.5, 1.0), (0.25, 0.5)]),
            Err(Error::DegenerateFit(_))
        ));
        assert!(matches!(
            estimate_order(&[(0.5, 1.0), (0.25, 0.0), (0.125, 0.25)]),
            Err(Error::DegenerateFit(_))
        ));
        assert!(matches!(
            estimate_order(&[(0.5, 1.0), (0.5, 0.5), (0.5, 0.25)]),
            Err(Error::DegenerateFit(_))
        ));
    }

    #[test]
    fn halving_ratios_come_from_the_tail() {
        let report = ConvergenceReport {
            h_values: vec![0.4, 0.2, 0.1, 0.05],
            max_d: vec![10.0, 4.0, 2.0, 1.0],
            sum_d: vec![20.0, 8.0, 4.0, 2.0],
            ebe: vec![1.0, 0.5, 0.25, 0.125],
            slope_max_d: 1.0,
            slope_sum_d: 1.0,
            slope_abs_ebe: 1.0,
        };
        assert_eq!(report.tail_halving_ratios(3), vec![2.0, 2.0]);
        assert_eq!(report.tail_halving_ratios(10).len(), 3);
    }
}
