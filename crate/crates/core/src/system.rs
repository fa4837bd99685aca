//! The ODE system induced by a mesh, and its spectral diagnostics.
//!
//! Spatial discretization turns the heat equation on a block mesh into
//! `dT/dt = M T` with `M_ij = U_ij / C_i` for neighbours `i ≠ j` and
//! `M_ii = -Σ_j U_ij / C_i`. Every row of `M` sums to zero, off-diagonals
//! are non-negative and the diagonal is non-positive.
//!
//! `M` is not symmetric when capacities differ, but the similarity
//! transform `S = C^{1/2} M C^{-1/2}` (entrywise
//! `S_ij = U_ij / sqrt(C_i C_j)`) is, so a symmetric eigensolver applies
//! and the whole spectrum is real and non-positive.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lapack;
use crate::mesh::{Mesh, TemperatureField};

/// Largest block count accepted by the dense spectral paths
/// ([`spectral_report`], [`crate::solvers::ExactSolver`]).
pub const DENSE_EIGEN_GUARD: usize = 10_000;

/// Relative cutoff below which an eigenvalue counts as the zero mode:
/// `|λ| <= ZERO_MODE_RELATIVE_CUTOFF * |λ_m|`.
pub const ZERO_MODE_RELATIVE_CUTOFF: f64 = 1e-9;

/// Sparse form of the system operator `M`, rows in CSR order with the
/// diagonal entry included.
#[derive(Debug, Clone)]
pub struct SystemOperator {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SystemOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Matrix-vector product `M x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::SizeMismatch { field: x.len(), expected: self.n });
        }
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.offsets[i]..self.offsets[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// Entry `M_ij` (zero when the blocks are not adjacent).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i >= self.n || j >= self.n {
            return 0.0;
        }
        for k in self.offsets[i]..self.offsets[i + 1] {
            if self.cols[k] == j {
                return self.vals[k];
            }
        }
        0.0
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut dense = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for k in self.offsets[i]..self.offsets[i + 1] {
                dense[(i, self.cols[k])] = self.vals[k];
            }
        }
        dense
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.vals[self.offsets[i]..self.offsets[i + 1]].iter().sum())
            .collect()
    }
}

/// Assembles the sparse operator `M` from a mesh.
pub fn assemble_operator(mesh: &Mesh) -> Result<SystemOperator> {
    mesh.require_no_isolated()?;
    let n = mesh.n_blocks();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    offsets.push(0);
    for i in 0..n {
        let (ids, cond) = mesh.neighbor_slices(i);
        let cap = mesh.capacities()[i];
        let diag = -mesh.conductance_sum(i) / cap;
        // Neighbour ids are ascending; slot the diagonal into place.
        let mut placed = false;
        for (&j, &u) in ids.iter().zip(cond.iter()) {
            if !placed && j > i {
                cols.push(i);
                vals.push(diag);
                placed = true;
            }
            cols.push(j);
            vals.push(u / cap);
        }
        if !placed {
            cols.push(i);
            vals.push(diag);
        }
        offsets.push(cols.len());
    }
    Ok(SystemOperator { n, offsets, cols, vals })
}

/// Time derivative `dT/dt = M T`, computed matrix-free by traversing each
/// block's incident edges in ascending-neighbour order.
pub fn rhs(mesh: &Mesh, field: &TemperatureField) -> Result<Vec<f64>> {
    let n = mesh.n_blocks();
    if field.len() != n {
        return Err(Error::SizeMismatch { field: field.len(), expected: n });
    }
    let t = field.values();
    let mut out = vec![0.0; n];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = block_rate(mesh, t, i);
    }
    Ok(out)
}

/// Rate of one block: `Σ_j U_ij (T_j - T_i) / C_i`, neighbours ascending.
/// Shared by [`rhs`] and the Euler step so both follow the same
/// floating-point path.
#[inline]
pub(crate) fn block_rate(mesh: &Mesh, t: &[f64], i: usize) -> f64 {
    let (ids, cond) = mesh.neighbor_slices(i);
    let ti = t[i];
    let mut acc = 0.0;
    for (&j, &u) in ids.iter().zip(cond.iter()) {
        acc += u * (t[j] - ti);
    }
    acc / mesh.capacities()[i]
}

/// Dense symmetrized operator `S` with `S_ij = U_ij / sqrt(C_i C_j)` and
/// the unchanged diagonal `S_ii = M_ii`. `S` and `M` are similar
/// (`S = C^{1/2} M C^{-1/2}`), so they share their spectrum.
pub fn symmetrize(mesh: &Mesh) -> Result<Array2<f64>> {
    mesh.require_no_isolated()?;
    let n = mesh.n_blocks();
    let sqrt_c: Vec<f64> = mesh.capacities().iter().map(|c| c.sqrt()).collect();
    let mut s = Array2::zeros((n, n));
    for i in 0..n {
        s[(i, i)] = -mesh.conductance_sum(i) / mesh.capacities()[i];
        let (ids, cond) = mesh.neighbor_slices(i);
        for (&j, &u) in ids.iter().zip(cond.iter()) {
            s[(i, j)] = u / (sqrt_c[i] * sqrt_c[j]);
        }
    }
    Ok(s)
}

/// Spectral diagnostics of the system operator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    /// All eigenvalues of `S` (equivalently of `M`), ascending.
    pub eigenvalues: Vec<f64>,
    /// `|λ_m|`, the largest eigenvalue magnitude.
    pub lambda_max_abs: f64,
    /// `|λ_m|` divided by the smallest nonzero eigenvalue magnitude.
    pub stiffness_ratio: f64,
    /// Stability threshold of explicit Euler, `2 / |λ_m|` (s).
    pub euler_h_max: f64,
    /// Number of eigenvalues within the zero-mode cutoff band.
    ///
    /// One per connected component when the physical spectrum stays above
    /// the cutoff (Example-1 scale). At extreme stiffness the slowest
    /// *physical* modes can fall inside the band too, so this overcounts
    /// components there; [`Mesh::is_connected`] is the graph truth.
    pub zero_modes: usize,
}

impl SpectralReport {
    pub fn n_blocks(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Spectral disconnection flag: more than one eigenvalue in the
    /// zero-mode band. See the `zero_modes` caveat about extreme
    /// stiffness.
    pub fn multiple_zero_modes(&self) -> bool {
        self.zero_modes > 1
    }
}

/// Computes the full spectrum of the symmetrized operator and derives the
/// stiffness ratio and the Euler stability threshold.
///
/// Dense eigendecomposition only; refuses meshes beyond
/// [`DENSE_EIGEN_GUARD`] blocks rather than silently approximating.
pub fn spectral_report(mesh: &Mesh) -> Result<SpectralReport> {
    let n = mesh.n_blocks();
    if n > DENSE_EIGEN_GUARD {
        return Err(Error::TooLarge { n, max: DENSE_EIGEN_GUARD });
    }
    let s = symmetrize(mesh)?;
    let eigenvalues = lapack::symmetric_eigenvalues(&s)?;
    report_from_eigenvalues(eigenvalues)
}

fn report_from_eigenvalues(eigenvalues: Vec<f64>) -> Result<SpectralReport> {
    let lambda_max_abs = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if lambda_max_abs == 0.0 {
        return Err(Error::Linalg("spectrum is identically zero".into()));
    }
    let cutoff = ZERO_MODE_RELATIVE_CUTOFF * lambda_max_abs;
    let zero_modes = eigenvalues.iter().filter(|v| v.abs() <= cutoff).count();
    let smallest_nonzero = eigenvalues
        .iter()
        .map(|v| v.abs())
        .filter(|&a| a > cutoff)
        .fold(f64::INFINITY, f64::min);
    if !smallest_nonzero.is_finite() {
        return Err(Error::Linalg("no eigenvalue above the zero-mode cutoff".into()));
    }
    Ok(SpectralReport {
        eigenvalues,
        lambda_max_abs,
        stiffness_ratio: lambda_max_abs / smallest_nonzero,
        euler_h_max: 2.0 / lambda_max_abs,
        zero_modes,
    })
}

/// Conserved equilibrium temperature `Σ C_i T_i / Σ C_i` that every block
/// of a connected, thermally isolated mesh approaches.
pub fn equilibrium_temperature(mesh: &Mesh, field: &TemperatureField) -> Result<f64> {
    if field.len() != mesh.n_blocks() {
        return Err(Error::SizeMismatch { field: field.len(), expected: mesh.n_blocks() });
    }
    if !mesh.is_connected() {
        return Err(Error::Disconnected);
    }
    let energy: f64 =
        mesh.capacities().iter().zip(field.values().iter()).map(|(c, t)| c * t).sum();
    let total_capacity: f64 = mesh.capacities().iter().sum();
    Ok(energy / total_capacity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_grid, initial_field, InitialCondition, ScenarioSpec};

    fn small_scenario(seed: u64) -> ScenarioSpec {
        ScenarioSpec {
            n_x: 10,
            n_y: 10,
            capacity_exponent_range: (-3.0, 2.0),
            ux_exponent_range: (-1.0, 3.0),
            uy_exponent_range: (-1.0, 3.0),
            seed,
            initial_condition: InitialCondition::UniformRandom { lo: 0.0, hi: 100.0 },
            t0: 0.0,
            t_fin: 1.0,
        }
    }

    #[test]
    fn two_block_operator() {
        let mesh = Mesh::new(vec![1.0, 1.0], vec![(0, 1, 1.0)], None).unwrap();
        let m = assemble_operator(&mesh).unwrap();
        assert_eq!(m.entry(0, 0), -1.0);
        assert_eq!(m.entry(0, 1), 1.0);
        assert_eq!(m.entry(1, 0), 1.0);
        assert_eq!(m.entry(1, 1), -1.0);
    }

    #[test]
    fn four_block_operator_matches_hand_assembly() {
        // The 2x2 arrangement: edges (0,1), (0,2), (1,3), (2,3). Dyadic
        // capacities keep every entry exact in binary floating point.
        let (c1, c2, c3, c4) = (1.0, 2.0, 4.0, 8.0);
        let (u12, u13, u24, u34) = (3.0, 5.0, 7.0, 9.0);
        let mesh = Mesh::new(
            vec![c1, c2, c3, c4],
            vec![(0, 1, u12), (0, 2, u13), (1, 3, u24), (2, 3, u34)],
            None,
        )
        .unwrap();
        let m = assemble_operator(&mesh).unwrap();
        let expected = [
            [-(u12 + u13) / c1, u12 / c1, u13 / c1, 0.0],
            [u12 / c2, -(u12 + u24) / c2, 0.0, u24 / c2],
            [u13 / c3, 0.0, -(u13 + u34) / c3, u34 / c3],
            [0.0, u24 / c4, u34 / c4, -(u24 + u34) / c4],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m.entry(i, j), expected[i][j], "entry ({i}, {j})");
            }
        }
    }

    #[test]
    fn row_sums_vanish_on_random_mesh() {
        let mesh = build_grid(&small_scenario(21)).unwrap();
        let m = assemble_operator(&mesh).unwrap();
        let scale = (0..m.n()).map(|i| m.entry(i, i).abs()).fold(0.0f64, f64::max);
        for (i, s) in m.row_sums().iter().enumerate() {
            assert!(s.abs() <= 1e-12 * scale, "row {i} sums to {s}");
        }
    }

    #[test]
    fn rhs_constant_field_is_zero() {
        let mesh = build_grid(&small_scenario(3)).unwrap();
        let field = TemperatureField::constant(7.5, mesh.n_blocks(), 0.0).unwrap();
        let rates = rhs(&mesh, &field).unwrap();
        assert!(rates.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn rhs_two_block() {
        let mesh = Mesh::new(vec![1.0, 1.0], vec![(0, 1, 1.0)], None).unwrap();
        let field = TemperatureField::new(vec![1.0, 0.0], 0.0).unwrap();
        assert_eq!(rhs(&mesh, &field).unwrap(), vec![-1.0, 1.0]);
    }

    #[test]
    fn rhs_matches_assembled_operator() {
        let scenario = small_scenario(9);
        let mesh = build_grid(&scenario).unwrap();
        let field = initial_field(&mesh, &scenario).unwrap();
        let m = assemble_operator(&mesh).unwrap();
        let direct = rhs(&mesh, &field).unwrap();
        let product = m.apply(field.values()).unwrap();
        let scale = direct.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        for (a, b) in direct.iter().zip(product.iter()) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn rhs_size_mismatch() {
        let mesh = Mesh::new(vec![1.0, 1.0], vec![(0, 1, 1.0)], None).unwrap();
        let field = TemperatureField::new(vec![1.0], 0.0).unwrap();
        assert!(matches!(rhs(&mesh, &field), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn symmetrize_equal_capacities_is_identity_transform() {
        let mesh = Mesh::new(vec![2.0, 2.0], vec![(0, 1, 3.0)], None).unwrap();
        let s = symmetrize(&mesh).unwrap();
        let dense = assemble_operator(&mesh).unwrap().to_dense();
        // U/sqrt(C*C) rounds once more than U/C; equal to the last ulp or so.
        for i in 0..2 {
            for j in 0..2 {
                assert!((s[(i, j)] - dense[(i, j)]).abs() <= 1e-15 * dense[(i, j)].abs());
            }
        }
    }

    #[test]
    fn symmetrize_hand_computed_example() {
        let mesh = Mesh::new(vec![1.0, 4.0], vec![(0, 1, 1.0)], None).unwrap();
        let s = symmetrize(&mesh).unwrap();
        assert_eq!(s[(0, 0)], -1.0);
        assert_eq!(s[(0, 1)], 0.5);
        assert_eq!(s[(1, 0)], 0.5);
        assert_eq!(s[(1, 1)], -0.25);
    }

    #[test]
    fn symmetrize_is_similar_to_operator() {
        // S diag(sqrt C) = diag(sqrt C) M entrywise; similarity implies an
        // identical spectrum without running a second eigensolver.
        let scenario = small_scenario(33);
        let mesh = build_grid(&scenario).unwrap();
        let s = symmetrize(&mesh).unwrap();
        let m = assemble_operator(&mesh).unwrap().to_dense();
        let sqrt_c: Vec<f64> = mesh.capacities().iter().map(|c| c.sqrt()).collect();
        let n = mesh.n_blocks();
        let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0f64, f64::max);
        for i in 0..n {
            for j in 0..n {
                let lhs = s[(i, j)] * sqrt_c[j];
                let rhs = sqrt_c[i] * m[(i, j)];
                assert!((lhs - rhs).abs() <= 1e-12 * scale * sqrt_c[j].max(sqrt_c[i]));
            }
        }
    }

    #[test]
    fn symmetrize_matrix_is_symmetric() {
        let mesh = build_grid(&small_scenario(4)).unwrap();
        let s = symmetrize(&mesh).unwrap();
        for i in 0..mesh.n_blocks() {
            for j in 0..i {
                assert_eq!(s[(i, j)], s[(j, i)]);
            }
        }
    }

    #[test]
    fn spectral_report_two_block() {
        let mesh = Mesh::new(vec![1.0, 1.0], vec![(0, 1, 1.0)], None).unwrap();
        let report = spectral_report(&mesh).unwrap();
        assert!((report.eigenvalues[0] + 2.0).abs() < 1e-14);
        assert!(report.eigenvalues[1].abs() < 1e-14);
        assert!((report.stiffness_ratio - 1.0).abs() < 1e-12);
        assert!((report.euler_h_max - 1.0).abs() < 1e-12);
        assert_eq!(report.zero_modes, 1);
        assert!(!report.multiple_zero_modes());
    }

    #[test]
    fn spectral_report_flags_disconnected_mesh() {
        let mesh =
            Mesh::new(vec![1.0; 4], vec![(0, 1, 1.0), (2, 3, 2.0)], None).unwrap();
        let report = spectral_report(&mesh).unwrap();
        assert_eq!(report.zero_modes, 2);
        assert!(report.multiple_zero_modes());
    }

    #[test]
    fn spectrum_is_non_positive_with_single_zero_mode() {
        let mesh = build_grid(&small_scenario(14)).unwrap();
        let report = spectral_report(&mesh).unwrap();
        let tol = ZERO_MODE_RELATIVE_CUTOFF * report.lambda_max_abs;
        assert!(report.eigenvalues.iter().all(|&v| v <= tol));
        assert_eq!(report.zero_modes, 1);
        assert!(report.stiffness_ratio >= 1.0);
    }

    #[test]
    fn spectral_report_guard() {
        let n = DENSE_EIGEN_GUARD + 1;
        let edges: Vec<(usize, usize, f64)> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        let mesh = Mesh::new(vec![1.0; n], edges, None).unwrap();
        assert!(matches!(spectral_report(&mesh), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn operators_reject_isolated_blocks() {
        let mesh = Mesh::new(vec![1.0, 1.0, 1.0], vec![(0, 1, 1.0)], None).unwrap();
        assert!(matches!(assemble_operator(&mesh), Err(Error::IsolatedBlock(2))));
        assert!(matches!(symmetrize(&mesh), Err(Error::IsolatedBlock(2))));
    }

    #[test]
    fn characteristic_time_agrees_with_operator_diagonal() {
        use crate::mesh::BlockId;
        let mesh = build_grid(&small_scenario(6)).unwrap();
        let m = assemble_operator(&mesh).unwrap();
        for i in 0..mesh.n_blocks() {
            let tau = mesh.characteristic_time(BlockId(i)).unwrap();
            let from_diag = -1.0 / m.entry(i, i);
            assert!((tau - from_diag).abs() <= 1e-12 * tau);
        }
    }

    #[test]
    fn equilibrium_temperature_examples() {
        let mesh = Mesh::new(vec![1.0, 3.0], vec![(0, 1, 2.0)], None).unwrap();
        let constant = TemperatureField::constant(4.5, 2, 0.0).unwrap();
        assert!((equilibrium_temperature(&mesh, &constant).unwrap() - 4.5).abs() < 1e-15);

        let field = TemperatureField::new(vec![4.0, 0.0], 0.0).unwrap();
        assert!((equilibrium_temperature(&mesh, &field).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_rejects_disconnected() {
        let mesh = Mesh::new(vec![1.0; 4], vec![(0, 1, 1.0), (2, 3, 1.0)], None).unwrap();
        let field = TemperatureField::constant(1.0, 4, 0.0).unwrap();
        assert!(matches!(equilibrium_temperature(&mesh, &field), Err(Error::Disconnected)));
    }
}
