//! Connection fields on a shape-space grid and their Helmholtz-Hodge split.
//!
//! The planner works with scalar potentials rather than raw vector fields:
//! each body-frame connection row is evaluated on a square grid over reduced
//! shape space, split into a curl-free part (the gradient of a potential) and
//! a divergence-free remainder, and the per-pattern potentials are then
//! differenced along a shape cycle to form the weight tensor that drives the
//! contact-sequence optimization.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{local_connection, ForceModel};
use crate::error::{Error, Result};
use crate::model::{ContactPattern, RobotSpec, ShapeBasis, ShapeCycle, ShapePoint};

/// Translation direction a potential or weight tensor refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    X,
    Y,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::X => f.write_str("x"),
            Direction::Y => f.write_str("y"),
        }
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Direction::X),
            "y" => Ok(Direction::Y),
            other => Err(Error::argument(format!(
                "unknown direction {other:?}, expected \"x\" or \"y\""
            ))),
        }
    }
}

/// Square sampling grid over reduced shape space, centered on the origin.
///
/// The resolution is odd so the node set contains the origin and maps onto
/// itself under shape negation; the mirror-symmetry checks and the potential
/// gauge both rely on that.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Half-width of the square domain in radians.
    pub half_extent: f64,
    /// Node count per axis; odd and at least 5.
    pub resolution: usize,
}

impl GridSpec {
    /// Default node count per axis.
    pub const DEFAULT_RESOLUTION: usize = 31;

    /// Creates a grid after validating extent and resolution.
    pub fn new(half_extent: f64, resolution: usize) -> Result<Self> {
        if !half_extent.is_finite() || half_extent <= 0.0 {
            return Err(Error::argument(format!(
                "grid half_extent must be a positive finite number, got {half_extent}"
            )));
        }
        if resolution < 5 || resolution.is_multiple_of(2) {
            return Err(Error::argument(format!(
                "grid resolution must be odd and at least 5, got {resolution}"
            )));
        }
        Ok(Self { half_extent, resolution })
    }

    /// Grid that encloses a shape cycle of the given amplitude with a 20%
    /// margin, at the default resolution.
    pub fn for_amplitude(amplitude: f64) -> Result<Self> {
        Self::new(1.2 * amplitude, Self::DEFAULT_RESOLUTION)
    }

    /// Node spacing along each axis.
    pub fn step(&self) -> f64 {
        2.0 * self.half_extent / (self.resolution - 1) as f64
    }

    fn center(&self) -> f64 {
        ((self.resolution - 1) / 2) as f64
    }

    /// Coordinate of the node at `index` along one axis. Computed as an
    /// offset from the center node so that mirrored indices produce exactly
    /// negated coordinates.
    pub fn coordinate(&self, index: usize) -> f64 {
        (index as f64 - self.center()) * self.step()
    }

    /// Total node count.
    pub fn node_count(&self) -> usize {
        self.resolution * self.resolution
    }

    /// Flat index of node `(ix, iy)`; nodes are row-major with `ix` fastest.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.resolution + ix
    }

    /// Shape-space location of node `(ix, iy)`.
    pub fn node(&self, ix: usize, iy: usize) -> ShapePoint {
        ShapePoint::new(self.coordinate(ix), self.coordinate(iy))
    }

    /// Shape-space location of the node at a flat index.
    pub fn node_at(&self, index: usize) -> ShapePoint {
        self.node(index % self.resolution, index / self.resolution)
    }

    /// Flat index of the origin node.
    pub fn origin_index(&self) -> usize {
        let c = (self.resolution - 1) / 2;
        self.index(c, c)
    }

    /// Flat index of the node at the negated shape.
    pub fn mirror_index(&self, index: usize) -> usize {
        let ix = index % self.resolution;
        let iy = index / self.resolution;
        self.index(self.resolution - 1 - ix, self.resolution - 1 - iy)
    }

    /// Whether a shape lies inside the grid domain (with a small tolerance
    /// for roundoff at the boundary).
    pub fn contains(&self, shape: &ShapePoint) -> bool {
        shape
            .coordinates
            .iter()
            .all(|&c| self.cell_coordinate(c).is_some())
    }

    /// Maps an axis coordinate to `(cell index, fractional offset)` for
    /// bilinear interpolation, snapping values a roundoff away from a node
    /// onto it so grid-node queries reproduce stored values exactly.
    fn cell_coordinate(&self, value: f64) -> Option<(usize, f64)> {
        if !value.is_finite() {
            return None;
        }
        let limit = (self.resolution - 1) as f64;
        let u = value / self.step() + self.center();
        let tol = 1e-9 * limit;
        if u < -tol || u > limit + tol {
            return None;
        }
        let snapped = if (u - u.round()).abs() <= tol { u.round() } else { u };
        let clamped = snapped.clamp(0.0, limit);
        let cell = (clamped.floor() as usize).min(self.resolution - 2);
        Some((cell, clamped - cell as f64))
    }
}

/// Connection rows of one contact pattern sampled over the grid.
///
/// Each row of the 3×2 connection matrix is a 2-vector field over shape
/// space; the three fields share the node layout of the owning set's grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternConnectionField {
    pub pattern: ContactPattern,
    pub row_x: Vec<[f64; 2]>,
    pub row_y: Vec<[f64; 2]>,
    pub row_theta: Vec<[f64; 2]>,
}

/// Connection fields for a list of contact patterns on a common grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConnectionFieldSet {
    pub grid: GridSpec,
    pub fields: Vec<PatternConnectionField>,
}

/// Evaluates the local connection at every grid node for every pattern.
///
/// Work is distributed over (pattern, node) pairs; the output layout is
/// pattern-major with row-major nodes and does not depend on scheduling.
pub fn evaluate_connection_grid(
    robot: &RobotSpec,
    basis: &ShapeBasis,
    patterns: &[ContactPattern],
    grid: &GridSpec,
    fm: &ForceModel,
) -> Result<ConnectionFieldSet> {
    if patterns.is_empty() {
        return Err(Error::argument("pattern list is empty"));
    }
    let nn = grid.node_count();
    let matrices = (0..patterns.len() * nn)
        .into_par_iter()
        .map(|flat| {
            let pattern = &patterns[flat / nn];
            let node = grid.node_at(flat % nn);
            local_connection(robot, basis, &node, pattern, fm)
                .map(|c| c.matrix)
                .map_err(|e| {
                    e.annotate(format!("pattern {:#x} at grid node {}", pattern.id(), flat % nn))
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let fields = patterns
        .iter()
        .enumerate()
        .map(|(p, pattern)| {
            let chunk = &matrices[p * nn..(p + 1) * nn];
            PatternConnectionField {
                pattern: pattern.clone(),
                row_x: chunk.iter().map(|m| [m[(0, 0)], m[(0, 1)]]).collect(),
                row_y: chunk.iter().map(|m| [m[(1, 0)], m[(1, 1)]]).collect(),
                row_theta: chunk.iter().map(|m| [m[(2, 0)], m[(2, 1)]]).collect(),
            }
        })
        .collect();
    Ok(ConnectionFieldSet { grid: *grid, fields })
}

/// Lower-band Cholesky factorization of a symmetric positive-definite matrix
/// whose nonzeros lie within `bandwidth` of the diagonal.
struct BandedCholesky {
    n: usize,
    bandwidth: usize,
    /// Row-major band storage: entry `(i, j)` with `i - bandwidth <= j <= i`
    /// lives at `i * (bandwidth + 1) + j + bandwidth - i`.
    bands: Vec<f64>,
}

impl BandedCholesky {
    fn factor(n: usize, bandwidth: usize, mut bands: Vec<f64>) -> Result<Self> {
        let width = bandwidth + 1;
        assert_eq!(bands.len(), n * width);
        for i in 0..n {
            let jmin = i.saturating_sub(bandwidth);
            for j in jmin..=i {
                let mut s = bands[i * width + j + bandwidth - i];
                for k in jmin.max(j.saturating_sub(bandwidth))..j {
                    s -= bands[i * width + k + bandwidth - i] * bands[j * width + k + bandwidth - j];
                }
                if i == j {
                    if s <= 0.0 || s.is_nan() {
                        return Err(Error::Decomposition(format!(
                            "banded Cholesky pivot {s:.3e} at row {i}"
                        )));
                    }
                    bands[i * width + bandwidth] = s.sqrt();
                } else {
                    bands[i * width + j + bandwidth - i] = s / bands[j * width + bandwidth];
                }
            }
        }
        Ok(Self { n, bandwidth, bands })
    }

    /// Solves `L Lᵀ x = rhs` in place.
    fn solve(&self, rhs: &mut [f64]) {
        let (n, bw, width) = (self.n, self.bandwidth, self.bandwidth + 1);
        assert_eq!(rhs.len(), n);
        for i in 0..n {
            let mut s = rhs[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.bands[i * width + k + bw - i] * rhs[k];
            }
            rhs[i] = s / self.bands[i * width + bw];
        }
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for k in i + 1..n.min(i + bw + 1) {
                s -= self.bands[k * width + i + bw - k] * rhs[k];
            }
            rhs[i] = s / self.bands[i * width + bw];
        }
    }
}

/// Discrete Poisson solver for the decomposition, reusable across fields on
/// the same grid.
///
/// The scheme is in flux form over node-centered control volumes: for each
/// interior face, the potential flux `(P_nb - P_c)/h · ℓ` balances the
/// face-averaged normal component of the input field. Boundary faces carry
/// the Neumann condition `∂P/∂n = A·n̂`, so their fluxes cancel from both
/// sides of the equations and the assembled right-hand side sums to zero by
/// construction. The singular constant mode is removed by pinning the origin
/// node to zero, which also fixes the potential gauge.
struct PoissonSolver {
    grid: GridSpec,
    chol: BandedCholesky,
}

/// Extent of the control volume of node `k` along one axis.
fn cell_extent(grid: &GridSpec, k: usize) -> f64 {
    if k == 0 || k == grid.resolution - 1 {
        0.5 * grid.step()
    } else {
        grid.step()
    }
}

impl PoissonSolver {
    fn new(grid: &GridSpec) -> Result<Self> {
        let n = grid.resolution;
        let nn = grid.node_count();
        let bw = n;
        let width = bw + 1;
        let h = grid.step();
        let mut bands = vec![0.0; nn * width];
        let add = |bands: &mut Vec<f64>, i: usize, j: usize, w: f64| {
            bands[i * width + j + bw - i] += w;
        };
        for iy in 0..n {
            let w = cell_extent(grid, iy) / h;
            for ix in 0..n - 1 {
                let c = grid.index(ix, iy);
                let nb = grid.index(ix + 1, iy);
                add(&mut bands, c, c, w);
                add(&mut bands, nb, nb, w);
                add(&mut bands, nb, c, -w);
            }
        }
        for ix in 0..n {
            let w = cell_extent(grid, ix) / h;
            for iy in 0..n - 1 {
                let c = grid.index(ix, iy);
                let nb = grid.index(ix, iy + 1);
                add(&mut bands, c, c, w);
                add(&mut bands, nb, nb, w);
                add(&mut bands, nb, c, -w);
            }
        }
        let o = grid.origin_index();
        for j in o.saturating_sub(bw)..o {
            bands[o * width + j + bw - o] = 0.0;
        }
        bands[o * width + bw] = 1.0;
        for i in o + 1..nn.min(o + bw + 1) {
            bands[i * width + o + bw - i] = 0.0;
        }
        let chol = BandedCholesky::factor(nn, bw, bands)?;
        Ok(Self { grid: *grid, chol })
    }

    /// Face-flux right-hand side of the pinned system for one input field.
    fn rhs(&self, field: &[[f64; 2]]) -> Vec<f64> {
        let grid = &self.grid;
        let n = grid.resolution;
        let mut b = vec![0.0; grid.node_count()];
        for iy in 0..n {
            let ell = cell_extent(grid, iy);
            for ix in 0..n - 1 {
                let c = grid.index(ix, iy);
                let nb = grid.index(ix + 1, iy);
                let flux = 0.5 * (field[c][0] + field[nb][0]) * ell;
                b[c] -= flux;
                b[nb] += flux;
            }
        }
        for ix in 0..n {
            let ell = cell_extent(grid, ix);
            for iy in 0..n - 1 {
                let c = grid.index(ix, iy);
                let nb = grid.index(ix, iy + 1);
                let flux = 0.5 * (field[c][1] + field[nb][1]) * ell;
                b[c] -= flux;
                b[nb] += flux;
            }
        }
        let mean = b.iter().sum::<f64>() / b.len() as f64;
        for v in &mut b {
            *v -= mean;
        }
        b[grid.origin_index()] = 0.0;
        b
    }

    fn decompose(&self, field: &[[f64; 2]]) -> Result<(Vec<f64>, Vec<[f64; 2]>)> {
        if field.len() != self.grid.node_count() {
            return Err(Error::argument(format!(
                "field has {} nodes, grid expects {}",
                field.len(),
                self.grid.node_count()
            )));
        }
        let mut potential = self.rhs(field);
        self.chol.solve(&mut potential);
        let grad = potential_gradient(&potential, &self.grid);
        let div_free = field
            .iter()
            .zip(&grad)
            .map(|(a, g)| [a[0] - g[0], a[1] - g[1]])
            .collect();
        Ok((potential, div_free))
    }
}

/// Nodal gradient of a scalar grid: centered differences in the interior,
/// second-order one-sided stencils on the boundary.
pub fn potential_gradient(potential: &[f64], grid: &GridSpec) -> Vec<[f64; 2]> {
    let n = grid.resolution;
    let h = grid.step();
    assert_eq!(potential.len(), grid.node_count());
    let at = |ix: usize, iy: usize| potential[grid.index(ix, iy)];
    let mut out = vec![[0.0; 2]; grid.node_count()];
    for iy in 0..n {
        for ix in 0..n {
            let gx = if ix == 0 {
                (-3.0 * at(0, iy) + 4.0 * at(1, iy) - at(2, iy)) / (2.0 * h)
            } else if ix == n - 1 {
                (3.0 * at(n - 1, iy) - 4.0 * at(n - 2, iy) + at(n - 3, iy)) / (2.0 * h)
            } else {
                (at(ix + 1, iy) - at(ix - 1, iy)) / (2.0 * h)
            };
            let gy = if iy == 0 {
                (-3.0 * at(ix, 0) + 4.0 * at(ix, 1) - at(ix, 2)) / (2.0 * h)
            } else if iy == n - 1 {
                (3.0 * at(ix, n - 1) - 4.0 * at(ix, n - 2) + at(ix, n - 3)) / (2.0 * h)
            } else {
                (at(ix, iy + 1) - at(ix, iy - 1)) / (2.0 * h)
            };
            out[grid.index(ix, iy)] = [gx, gy];
        }
    }
    out
}

/// Splits a vector field on the grid into a gradient part and a remainder.
///
/// Returns the scalar potential, gauge-fixed to zero at the origin node, and
/// the divergence-free remainder `field - ∇P`. The sum of the gradient of
/// the potential and the remainder reproduces the input field at every node
/// up to roundoff.
pub fn helmholtz_decompose(
    field: &[[f64; 2]],
    grid: &GridSpec,
) -> Result<(Vec<f64>, Vec<[f64; 2]>)> {
    PoissonSolver::new(grid)?.decompose(field)
}

/// Potentials and remainders for one contact pattern.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternPotentials {
    pub pattern: ContactPattern,
    pub potential_x: Vec<f64>,
    pub potential_y: Vec<f64>,
    pub div_free_x: Vec<[f64; 2]>,
    pub div_free_y: Vec<[f64; 2]>,
}

/// Scalar potentials of the x and y connection rows for every pattern.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialStack {
    pub grid: GridSpec,
    pub entries: Vec<PatternPotentials>,
}

/// Size comparison between the two components of one decomposed field.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecompositionReport {
    pub pattern_id: u64,
    pub direction: Direction,
    /// Largest gradient magnitude over the grid.
    pub max_curl_free: f64,
    /// Largest remainder magnitude over the grid.
    pub max_div_free: f64,
}

impl DecompositionReport {
    /// Ratio of the divergence-free maximum to the curl-free maximum.
    pub fn ratio(&self) -> f64 {
        if self.max_curl_free == 0.0 {
            if self.max_div_free == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.max_div_free / self.max_curl_free
        }
    }

    /// Whether the remainder is small enough for potential-based planning to
    /// be trustworthy.
    pub fn is_negligible(&self) -> bool {
        self.ratio() <= 0.2
    }
}

impl PotentialStack {
    /// Decomposes the x and y rows of every pattern in the set.
    ///
    /// One Poisson factorization is shared across all right-hand sides;
    /// patterns are processed in parallel with a deterministic output order.
    pub fn from_connection_fields(set: &ConnectionFieldSet) -> Result<Self> {
        let solver = PoissonSolver::new(&set.grid)?;
        let entries = set
            .fields
            .par_iter()
            .map(|f| {
                let (potential_x, div_free_x) = solver.decompose(&f.row_x)?;
                let (potential_y, div_free_y) = solver.decompose(&f.row_y)?;
                Ok(PatternPotentials {
                    pattern: f.pattern.clone(),
                    potential_x,
                    potential_y,
                    div_free_x,
                    div_free_y,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid: set.grid, entries })
    }

    /// Number of patterns in the stack.
    pub fn n_patterns(&self) -> usize {
        self.entries.len()
    }

    /// Bilinear interpolation of one pattern's potential at a shape.
    ///
    /// Queries exactly on a grid node return the stored value; queries
    /// outside the grid domain fail with a domain error.
    pub fn potential_at(
        &self,
        pattern_index: usize,
        direction: Direction,
        shape: &ShapePoint,
    ) -> Result<f64> {
        let entry = self.entries.get(pattern_index).ok_or_else(|| {
            Error::argument(format!(
                "pattern index {pattern_index} out of range for stack of {}",
                self.entries.len()
            ))
        })?;
        let out_of_domain = || {
            Error::Domain(format!(
                "shape ({:.6}, {:.6}) outside grid domain [{:.6}, {:.6}]²",
                shape.coordinates[0],
                shape.coordinates[1],
                -self.grid.half_extent,
                self.grid.half_extent
            ))
        };
        let (cx, tx) = self
            .grid
            .cell_coordinate(shape.coordinates[0])
            .ok_or_else(out_of_domain)?;
        let (cy, ty) = self
            .grid
            .cell_coordinate(shape.coordinates[1])
            .ok_or_else(out_of_domain)?;
        let p = match direction {
            Direction::X => &entry.potential_x,
            Direction::Y => &entry.potential_y,
        };
        let p00 = p[self.grid.index(cx, cy)];
        let p10 = p[self.grid.index(cx + 1, cy)];
        let p01 = p[self.grid.index(cx, cy + 1)];
        let p11 = p[self.grid.index(cx + 1, cy + 1)];
        Ok((1.0 - tx) * (1.0 - ty) * p00
            + tx * (1.0 - ty) * p10
            + (1.0 - tx) * ty * p01
            + tx * ty * p11)
    }

    /// Component-size reports for every (pattern, direction) pair.
    pub fn reports(&self) -> Vec<DecompositionReport> {
        let max_norm =
            |v: &[[f64; 2]]| v.iter().map(|g| g[0].hypot(g[1])).fold(0.0_f64, f64::max);
        self.entries
            .iter()
            .flat_map(|e| {
                let grad_x = potential_gradient(&e.potential_x, &self.grid);
                let grad_y = potential_gradient(&e.potential_y, &self.grid);
                [
                    DecompositionReport {
                        pattern_id: e.pattern.id(),
                        direction: Direction::X,
                        max_curl_free: max_norm(&grad_x),
                        max_div_free: max_norm(&e.div_free_x),
                    },
                    DecompositionReport {
                        pattern_id: e.pattern.id(),
                        direction: Direction::Y,
                        max_curl_free: max_norm(&grad_y),
                        max_div_free: max_norm(&e.div_free_y),
                    },
                ]
            })
            .collect()
    }
}

/// Per-pattern displacement weights between cycle sites.
///
/// `d(i, j, l)` is the displacement accrued in the tensor's direction when
/// the shape moves from cycle site `j` to site `l` while pattern `i` stays
/// in stance: the potential difference `P_i(r_l) - P_i(r_j)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightTensor {
    pub n_patterns: usize,
    pub n_sites: usize,
    pub direction: Direction,
    values: Vec<f64>,
}

impl WeightTensor {
    /// Weight for pattern `i` over the move from site `j` to site `l`.
    pub fn d(&self, i: usize, j: usize, l: usize) -> f64 {
        self.values[(i * self.n_sites + j) * self.n_sites + l]
    }

    /// Tensor assembled from explicit per-pattern site potentials.
    ///
    /// The verification suites draw random site potentials instead of
    /// solving fields; differencing them here yields tensors that satisfy
    /// anti-symmetry and additivity by construction.
    pub fn from_site_potentials(potentials: &[Vec<f64>], direction: Direction) -> Result<Self> {
        let n = potentials.len();
        if n == 0 {
            return Err(Error::argument("no site potentials given"));
        }
        let m = potentials[0].len();
        if m < 2 {
            return Err(Error::argument("at least two cycle sites are required"));
        }
        if potentials.iter().any(|p| p.len() != m) {
            return Err(Error::argument("site potential rows differ in length"));
        }
        let mut values = vec![0.0; n * m * m];
        for (i, row) in potentials.iter().enumerate() {
            for j in 0..m {
                for l in 0..m {
                    values[(i * m + j) * m + l] = row[l] - row[j];
                }
            }
        }
        Ok(WeightTensor { n_patterns: n, n_sites: m, direction, values })
    }

    /// Tensor from raw values in `d(i, j, l)` layout, with no structural
    /// checks; consumers that need anti-symmetry and additivity validate at
    /// instance construction.
    pub fn from_raw(
        n_patterns: usize,
        n_sites: usize,
        direction: Direction,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != n_patterns * n_sites * n_sites {
            return Err(Error::argument(format!(
                "tensor needs {} values, got {}",
                n_patterns * n_sites * n_sites,
                values.len()
            )));
        }
        Ok(WeightTensor { n_patterns, n_sites, direction, values })
    }

    /// Replaces one entry; supports negative-control tests that break the
    /// tensor's structure deliberately.
    pub fn perturb(&mut self, i: usize, j: usize, l: usize, delta: f64) {
        self.values[(i * self.n_sites + j) * self.n_sites + l] += delta;
    }
}

/// Builds the weight tensor for a shape cycle from interpolated potentials.
pub fn build_weight_tensor(
    stack: &PotentialStack,
    cycle: &ShapeCycle,
    direction: Direction,
) -> Result<WeightTensor> {
    let n = stack.n_patterns();
    let m = cycle.len();
    if n == 0 {
        return Err(Error::argument("potential stack is empty"));
    }
    let mut potentials = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            potentials[i][j] = stack.potential_at(i, direction, &cycle.point(j))?;
        }
    }
    WeightTensor::from_site_potentials(&potentials, direction)
}

/// Writes per-node connection rows and potentials as CSV for external
/// plotting, one row per (pattern, node) in deterministic order.
pub fn write_fields_csv<W: Write>(
    mut out: W,
    set: &ConnectionFieldSet,
    stack: &PotentialStack,
) -> std::io::Result<()> {
    if set.grid != stack.grid || set.fields.len() != stack.entries.len() {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "connection set and potential stack describe different grids",
        ));
    }
    writeln!(
        out,
        "pattern,r1,r2,ax_r1,ax_r2,ay_r1,ay_r2,atheta_r1,atheta_r2,potential_x,potential_y"
    )?;
    for (field, entry) in set.fields.iter().zip(&stack.entries) {
        let id = field.pattern.id();
        for k in 0..set.grid.node_count() {
            let node = set.grid.node_at(k);
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                id,
                node.coordinates[0],
                node.coordinates[1],
                field.row_x[k][0],
                field.row_x[k][1],
                field.row_y[k][0],
                field.row_y[k][1],
                field.row_theta[k][0],
                field.row_theta[k][1],
                entry.potential_x[k],
                entry.potential_y[k],
            )?;
        }
    }
    Ok(())
}
