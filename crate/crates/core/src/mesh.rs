//! Block meshes, scenario recipes and initial temperature fields.
//!
//! A mesh is a graph of thermal blocks: each block carries a heat capacity
//! `C_i` (J/K) and each edge a thermal conductance `U_ij` (W/K). Regular 2D
//! lattices with log-uniform random parameters are generated from a
//! [`ScenarioSpec`]; arbitrary graphs can be built directly with
//! [`Mesh::new`].
//!
//! # Indexing
//!
//! Blocks are indexed `0..n_blocks` internally. On a lattice the linear
//! index is column-major: block `(ix, iy)` sits at `ix * n_y + iy`, so a
//! column of the grid is a contiguous index run. External artifacts that
//! mirror the benchmark definitions (scenario pulse bands, field CSV rows)
//! use 1-based indices; the conversion is exactly `external = internal + 1`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a block within a particular mesh.
///
/// Wraps the dense zero-based index; valid only for the mesh it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId(pub usize);

impl From<usize> for BlockId {
    fn from(index: usize) -> Self {
        BlockId(index)
    }
}

impl std::fmt::Display for BlockId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// An undirected conductance link between two blocks, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub conductance: f64,
}

/// Heat capacity of a block from material data: `C = c · ρ · V` (J/K).
pub fn heat_capacity(specific_heat: f64, density: f64, volume: f64) -> f64 {
    specific_heat * density * volume
}

/// Conductance between adjacent blocks from material data:
/// `U ≈ k · A / d` (W/K), with contact area `A` and centre distance `d`.
pub fn conductance(conductivity: f64, area: f64, distance: f64) -> f64 {
    conductivity * area / distance
}

/// Mirror of [`Mesh`] used for its JSON form: capacities plus an edge
/// triple list `[a, b, conductance]` with zero-based block indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshJson {
    pub n_blocks: usize,
    pub capacities: Vec<f64>,
    pub edges: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<(usize, usize)>,
}

/// An immutable block mesh: per-block heat capacities and a weighted
/// adjacency of conductances, with optional lattice metadata.
///
/// Construction validates everything once; afterwards the mesh is safe to
/// share across threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MeshJson", into = "MeshJson")]
pub struct Mesh {
    capacities: Vec<f64>,
    edges: Vec<Edge>,
    grid: Option<(usize, usize)>,
    // CSR adjacency; neighbours of each block sorted ascending.
    offsets: Vec<usize>,
    nbr_ids: Vec<usize>,
    nbr_cond: Vec<f64>,
    // Σ_j U_ij per block, accumulated in ascending-neighbour order.
    cond_sums: Vec<f64>,
    connected: bool,
    first_isolated: Option<usize>,
}

impl Mesh {
    /// Builds a mesh from capacities and an edge triple list.
    ///
    /// Edge endpoints must be distinct, in range, and each unordered pair
    /// may appear at most once. If `grid = (n_x, n_y)` is given, the edge
    /// set must be exactly the 4-neighbour lattice of that shape.
    pub fn new(
        capacities: Vec<f64>,
        edges: Vec<(usize, usize, f64)>,
        grid: Option<(usize, usize)>,
    ) -> Result<Self> {
        let n = capacities.len();
        if n == 0 {
            return Err(Error::InvalidMesh("a mesh needs at least one block".into()));
        }
        for (i, &c) in capacities.iter().enumerate() {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "capacity of block {i} must be positive and finite, got {c}"
                )));
            }
        }

        let mut canonical = Vec::with_capacity(edges.len());
        let mut seen = HashSet::with_capacity(edges.len());
        for &(a, b, u) in &edges {
            if a == b {
                return Err(Error::InvalidMesh(format!("self-loop on block {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::InvalidMesh(format!(
                    "edge ({a}, {b}) references a block outside 0..{n}"
                )));
            }
            if !(u.is_finite() && u > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "conductance of edge ({a}, {b}) must be positive and finite, got {u}"
                )));
            }
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((lo, hi)) {
                return Err(Error::InvalidMesh(format!("duplicate edge ({lo}, {hi})")));
            }
            canonical.push(Edge { a: lo, b: hi, conductance: u });
        }
        canonical.sort_by_key(|e| (e.a, e.b));

        if let Some((nx, ny)) = grid {
            Self::check_grid_metadata(n, &canonical, nx, ny)?;
        }

        // CSR adjacency with ascending neighbour ids per block.
        let mut degree = vec![0usize; n];
        for e in &canonical {
            degree[e.a] += 1;
            degree[e.b] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let m2 = offsets[n];
        let mut nbr_ids = vec![0usize; m2];
        let mut nbr_cond = vec![0.0f64; m2];
        let mut cursor = offsets.clone();
        for e in &canonical {
            nbr_ids[cursor[e.a]] = e.b;
            nbr_cond[cursor[e.a]] = e.conductance;
            cursor[e.a] += 1;
            nbr_ids[cursor[e.b]] = e.a;
            nbr_cond[cursor[e.b]] = e.conductance;
            cursor[e.b] += 1;
        }
        for i in 0..n {
            let lo = offsets[i];
            let hi = offsets[i + 1];
            let mut pairs: Vec<(usize, f64)> = nbr_ids[lo..hi]
                .iter()
                .copied()
                .zip(nbr_cond[lo..hi].iter().copied())
                .collect();
            pairs.sort_by_key(|&(j, _)| j);
            for (k, (j, u)) in pairs.into_iter().enumerate() {
                nbr_ids[lo + k] = j;
                nbr_cond[lo + k] = u;
            }
        }

        let cond_sums: Vec<f64> = (0..n)
            .map(|i| nbr_cond[offsets[i]..offsets[i + 1]].iter().sum())
            .collect();
        let first_isolated = (0..n).find(|&i| offsets[i] == offsets[i + 1]);
        let connected = Self::bfs_connected(n, &offsets, &nbr_ids);

        Ok(Mesh {
            capacities,
            edges: canonical,
            grid,
            offsets,
            nbr_ids,
            nbr_cond,
            cond_sums,
            connected,
            first_isolated,
        })
    }

    fn check_grid_metadata(n: usize, edges: &[Edge], nx: usize, ny: usize) -> Result<()> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidMesh("grid dimensions must be >= 1".into()));
        }
        if n != nx * ny {
            return Err(Error::InvalidMesh(format!(
                "grid metadata {nx}x{ny} does not match {n} blocks"
            )));
        }
        let mut expected = HashSet::new();
        for ix in 0..nx {
            for iy in 0..ny {
                let i = grid_index(ix, iy, ny);
                if ix + 1 < nx {
                    expected.insert((i, grid_index(ix + 1, iy, ny)));
                }
                if iy + 1 < ny {
                    expected.insert((i, grid_index(ix, iy + 1, ny)));
                }
            }
        }
        if edges.len() != expected.len()
            || edges.iter().any(|e| !expected.contains(&(e.a, e.b)))
        {
            return Err(Error::InvalidMesh(
                "grid metadata present but edges are not the 4-neighbour lattice".into(),
            ));
        }
        Ok(())
    }

    fn bfs_connected(n: usize, offsets: &[usize], nbr_ids: &[usize]) -> bool {
        let mut visited = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        visited[0] = true;
        queue.push_back(0usize);
        let mut count = 1usize;
        while let Some(i) = queue.pop_front() {
            for &j in &nbr_ids[offsets[i]..offsets[i + 1]] {
                if !visited[j] {
                    visited[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == n
    }

    pub fn n_blocks(&self) -> usize {
        self.capacities.len()
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    pub fn capacity(&self, i: BlockId) -> Result<f64> {
        self.check_id(i)?;
        Ok(self.capacities[i.0])
    }

    /// Canonical edge list, sorted by `(a, b)` with `a < b`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Lattice shape `(n_x, n_y)` when the mesh was built as a grid.
    pub fn grid(&self) -> Option<(usize, usize)> {
        self.grid
    }

    /// Whether the conductance graph has a single connected component.
    pub fn is_connected(&self) -> bool {
        self.connected
    }

    /// Index of some block without neighbours, if one exists.
    pub fn first_isolated_block(&self) -> Option<usize> {
        self.first_isolated
    }

    /// Incident edges of block `i` as `(neighbour, conductance)` pairs,
    /// in ascending neighbour order.
    pub fn neighbors(&self, i: BlockId) -> Result<Vec<(BlockId, f64)>> {
        self.check_id(i)?;
        let (ids, cond) = self.neighbor_slices(i.0);
        Ok(ids.iter().map(|&j| BlockId(j)).zip(cond.iter().copied()).collect())
    }

    /// Raw CSR view of block `i`'s neighbourhood (ascending neighbour ids).
    #[inline]
    pub(crate) fn neighbor_slices(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.offsets[i];
        let hi = self.offsets[i + 1];
        (&self.nbr_ids[lo..hi], &self.nbr_cond[lo..hi])
    }

    /// Total conductance `Σ_j U_ij` incident on block `i` (0 if isolated).
    #[inline]
    pub(crate) fn conductance_sum(&self, i: usize) -> f64 {
        self.cond_sums[i]
    }

    /// Characteristic time `τ_i = C_i / Σ_j U_ij` of block `i` (s): the
    /// relaxation timescale of the block against frozen neighbours.
    pub fn characteristic_time(&self, i: BlockId) -> Result<f64> {
        self.check_id(i)?;
        if self.offsets[i.0] == self.offsets[i.0 + 1] {
            return Err(Error::IsolatedBlock(i.0));
        }
        Ok(self.capacities[i.0] / self.cond_sums[i.0])
    }

    /// Errors with [`Error::IsolatedBlock`] unless every block has at
    /// least one neighbour. Solvers require this.
    pub(crate) fn require_no_isolated(&self) -> Result<()> {
        match self.first_isolated {
            Some(i) => Err(Error::IsolatedBlock(i)),
            None => Ok(()),
        }
    }

    fn check_id(&self, i: BlockId) -> Result<()> {
        if i.0 < self.n_blocks() {
            Ok(())
        } else {
            Err(Error::InvalidBlockId { index: i.0, n_blocks: self.n_blocks() })
        }
    }
}

impl From<Mesh> for MeshJson {
    fn from(mesh: Mesh) -> Self {
        MeshJson {
            n_blocks: mesh.n_blocks(),
            capacities: mesh.capacities,
            edges: mesh.edges.iter().map(|e| (e.a, e.b, e.conductance)).collect(),
            grid: mesh.grid,
        }
    }
}

impl TryFrom<MeshJson> for Mesh {
    type Error = Error;

    fn try_from(json: MeshJson) -> Result<Self> {
        if json.n_blocks != json.capacities.len() {
            return Err(Error::InvalidMesh(format!(
                "n_blocks = {} but {} capacities given",
                json.n_blocks,
                json.capacities.len()
            )));
        }
        Mesh::new(json.capacities, json.edges, json.grid)
    }
}

/// Column-major linear index of lattice block `(ix, iy)`.
#[inline]
pub fn grid_index(ix: usize, iy: usize, ny: usize) -> usize {
    ix * ny + iy
}

/// Per-block temperatures at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureField {
    values: Vec<f64>,
    time: f64,
}

impl TemperatureField {
    pub fn new(values: Vec<f64>, time: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidMesh("a field needs at least one value".into()));
        }
        if !time.is_finite() {
            return Err(Error::InvalidScenario(format!("non-finite time stamp {time}")));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidScenario(format!("non-finite temperature {v}")));
        }
        Ok(TemperatureField { values, time })
    }

    /// Constant field, handy for tests and equilibria.
    pub fn constant(value: f64, n: usize, time: f64) -> Result<Self> {
        Self::new(vec![value; n], time)
    }

    // Solvers build fields from values they just computed; divergence
    // checks happen at the stepping level, not here.
    pub(crate) fn from_raw(values: Vec<f64>, time: f64) -> Self {
        TemperatureField { values, time }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Initial temperature assignment of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum InitialCondition {
    /// Every block drawn independently and uniformly from `(lo, hi)`.
    UniformRandom { lo: f64, hi: f64 },
    /// `high_value` on the 1-based inclusive index band `[i_lo, i_hi]`
    /// (under the column-major linearization), `low_value` elsewhere.
    RectangularPulse { i_lo: usize, i_hi: usize, high_value: f64, low_value: f64 },
}

/// Seeded recipe for a random lattice and its initial temperatures.
///
/// Exponent ranges are base-10: a parameter drawn over `(lo, hi)` is
/// `10^x` with `x` uniform in `(lo, hi)`. A fixed seed reproduces the
/// mesh and the initial field bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n_x: usize,
    pub n_y: usize,
    pub capacity_exponent_range: (f64, f64),
    pub ux_exponent_range: (f64, f64),
    pub uy_exponent_range: (f64, f64),
    pub seed: u64,
    pub initial_condition: InitialCondition,
    pub t0: f64,
    pub t_fin: f64,
}

impl ScenarioSpec {
    pub fn n_blocks(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn time_span(&self) -> f64 {
        self.t_fin - self.t0
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_x < 1 || self.n_y < 1 {
            return Err(Error::InvalidScenario(format!(
                "grid dimensions must be >= 1, got {}x{}",
                self.n_x, self.n_y
            )));
        }
        for (name, (lo, hi)) in [
            ("capacity", self.capacity_exponent_range),
            ("ux", self.ux_exponent_range),
            ("uy", self.uy_exponent_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidScenario(format!(
                    "{name} exponent range ({lo}, {hi}) is not well-ordered"
                )));
            }
        }
        if !(self.t0.is_finite() && self.t_fin.is_finite() && self.t0 < self.t_fin) {
            return Err(Error::InvalidScenario(format!(
                "time window [{}, {}] is not well-ordered",
                self.t0, self.t_fin
            )));
        }
        match self.initial_condition {
            InitialCondition::UniformRandom { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(Error::InvalidScenario(format!(
                        "uniform-random range ({lo}, {hi}) is not well-ordered"
                    )));
                }
            }
            InitialCondition::RectangularPulse { i_lo, i_hi, high_value, low_value } => {
                if !(high_value.is_finite() && low_value.is_finite()) {
                    return Err(Error::InvalidScenario("non-finite pulse level".into()));
                }
                if i_lo < 1 || i_lo > i_hi {
                    return Err(Error::InvalidScenario(format!(
                        "pulse band [{i_lo}, {i_hi}] is not well-ordered (1-based, inclusive)"
                    )));
                }
                if i_hi > self.n_blocks() {
                    return Err(Error::InvalidScenario(format!(
                        "pulse band [{i_lo}, {i_hi}] exceeds {} blocks",
                        self.n_blocks()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Splitmix64 stream mapped to uniform `(0, 1)`.
///
/// Pinned and portable: a seed reproduces the same draws on every
/// platform, which is what makes scenario files reproducible. Not
/// cryptographic, and deliberately independent of any external RNG crate
/// whose stream could change between versions.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw from the open interval `(0, 1)`: a 53-bit mantissa
    /// offset by half an ulp so neither endpoint can occur.
    pub fn next_unit(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }
}

/// Draws `10^x` with `x` uniform in `(exp_lo, exp_hi)`, advancing `rng`.
pub fn log_uniform_sample(rng: &mut SplitMix64, exp_lo: f64, exp_hi: f64) -> f64 {
    let x = exp_lo + rng.next_unit() * (exp_hi - exp_lo);
    10.0f64.powf(x)
}

// The initial field is drawn from its own substream so that its values do
// not replay the capacity draws of the same seed.
const FIELD_STREAM_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

/// Builds the lattice mesh described by a scenario.
///
/// Draw order is fixed so that a seed fully determines the mesh: all
/// capacities in linear index order, then all horizontal edges
/// (`(ix, iy)-(ix+1, iy)`, outer loop over `ix`), then all vertical edges
/// (`(ix, iy)-(ix, iy+1)`, outer loop over `ix`).
pub fn build_grid(scenario: &ScenarioSpec) -> Result<Mesh> {
    scenario.validate()?;
    let (nx, ny) = (scenario.n_x, scenario.n_y);
    let n = nx * ny;
    let mut rng = SplitMix64::new(scenario.seed);

    let (clo, chi) = scenario.capacity_exponent_range;
    let capacities: Vec<f64> = (0..n).map(|_| log_uniform_sample(&mut rng, clo, chi)).collect();

    let mut edges = Vec::with_capacity(nx.saturating_sub(1) * ny + nx * ny.saturating_sub(1));
    let (xlo, xhi) = scenario.ux_exponent_range;
    for ix in 0..nx.saturating_sub(1) {
        for iy in 0..ny {
            let u = log_uniform_sample(&mut rng, xlo, xhi);
            edges.push((grid_index(ix, iy, ny), grid_index(ix + 1, iy, ny), u));
        }
    }
    let (ylo, yhi) = scenario.uy_exponent_range;
    for ix in 0..nx {
        for iy in 0..ny.saturating_sub(1) {
            let u = log_uniform_sample(&mut rng, ylo, yhi);
            edges.push((grid_index(ix, iy, ny), grid_index(ix, iy + 1, ny), u));
        }
    }

    Mesh::new(capacities, edges, Some((nx, ny)))
}

/// Builds the initial temperature field of a scenario, stamped at `t0`.
pub fn initial_field(mesh: &Mesh, scenario: &ScenarioSpec) -> Result<TemperatureField> {
    scenario.validate()?;
    let n = mesh.n_blocks();
    if n != scenario.n_blocks() {
        return Err(Error::SizeMismatch { field: scenario.n_blocks(), expected: n });
    }
    let values = match scenario.initial_condition {
        InitialCondition::UniformRandom { lo, hi } => {
            let mut rng = SplitMix64::new(scenario.seed ^ FIELD_STREAM_SALT);
            (0..n).map(|_| lo + rng.next_unit() * (hi - lo)).collect()
        }
        InitialCondition::RectangularPulse { i_lo, i_hi, high_value, low_value } => {
            let mut values = vec![low_value; n];
            for v in &mut values[i_lo - 1..i_hi] {
                *v = high_value;
            }
            values
        }
    };
    TemperatureField::new(values, scenario.t0)
}
