//! One-dimensional grids and finite-difference differentiation matrices,
//! plus the per-direction generators of the heat, pipe-flow and
//! Gross–Pitaevskii problems.
//!
//! Boundary closures keep every grid point as an unknown. Stencil points that
//! fall outside the grid are ghost points mirrored about the end node: a
//! homogeneous Dirichlet end drops them (ghost value zero), a homogeneous
//! Neumann end takes the value of the mirrored interior node.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kron::KroneckerOp;
use crate::linalg::DenseMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridKind {
    /// `[a, b)` with spacing `(b − a)/n`; the point `b` is identified with `a`.
    UniformPeriodic { a: f64, b: f64 },
    Uniform,
    Nonuniform,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid1D {
    points: Vec<f64>,
    kind: GridKind,
}

impl Grid1D {
    pub fn uniform_periodic(a: f64, b: f64, n: usize) -> Result<Self> {
        if n == 0 || !(b > a) {
            return Err(Error::InvalidGrid(format!(
                "periodic grid needs n ≥ 1 and b > a (got n={n}, [{a}, {b}))"
            )));
        }
        let h = (b - a) / n as f64;
        Ok(Grid1D {
            points: (0..n).map(|i| a + i as f64 * h).collect(),
            kind: GridKind::UniformPeriodic { a, b },
        })
    }

    /// `n` equispaced points including both ends of `[a, b]`.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 || !(b > a) {
            return Err(Error::InvalidGrid(format!(
                "uniform grid needs n ≥ 2 and b > a (got n={n}, [{a}, {b}])"
            )));
        }
        let h = (b - a) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| a + i as f64 * h).collect();
        points[n - 1] = b;
        Ok(Grid1D {
            points,
            kind: GridKind::Uniform,
        })
    }

    pub fn nonuniform(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid("need at least two points".into()));
        }
        if let Some(i) = points.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid(format!(
                "points not strictly increasing at index {}",
                i + 1
            )));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGrid("non-finite coordinate".into()));
        }
        Ok(Grid1D {
            points,
            kind: GridKind::Nonuniform,
        })
    }

    /// Symmetric grid on `[−half_width, half_width]` clustered around the
    /// origin: `x_i = L·sinh(c·s_i)/sinh(c)` for equispaced `s_i ∈ [−1, 1]`.
    /// `stretch = 0` gives the uniform grid.
    pub fn sinh_clustered(half_width: f64, n: usize, stretch: f64) -> Result<Self> {
        if n < 2 || !(half_width > 0.0) || !(stretch >= 0.0) {
            return Err(Error::InvalidGrid(format!(
                "clustered grid needs n ≥ 2, positive width and non-negative stretch (n={n})"
            )));
        }
        let points = (0..n)
            .map(|i| {
                let s = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
                if stretch == 0.0 {
                    half_width * s
                } else {
                    half_width * (stretch * s).sinh() / stretch.sinh()
                }
            })
            .collect();
        Grid1D::nonuniform(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    /// Spacing of uniform grids.
    pub fn spacing(&self) -> Option<f64> {
        match self.kind {
            GridKind::UniformPeriodic { a, b } => Some((b - a) / self.points.len() as f64),
            GridKind::Uniform => Some(self.points[1] - self.points[0]),
            GridKind::Nonuniform => None,
        }
    }

    /// Trapezoidal quadrature weights on the (non-periodic) grid.
    pub fn trapezoidal_weights(&self) -> Vec<f64> {
        let x = &self.points;
        let n = x.len();
        (0..n)
            .map(|i| {
                let lo = if i == 0 { x[0] } else { x[i - 1] };
                let hi = if i + 1 == n { x[n - 1] } else { x[i + 1] };
                0.5 * (hi - lo)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Periodic,
    DirichletZero,
    NeumannZero,
}

/// Closure at the two ends of a grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryCondition {
    left: BoundaryKind,
    right: BoundaryKind,
}

impl BoundaryCondition {
    pub fn new(left: BoundaryKind, right: BoundaryKind) -> Result<Self> {
        if (left == BoundaryKind::Periodic) != (right == BoundaryKind::Periodic) {
            return Err(Error::Config(
                "periodic boundary conditions apply to both ends or neither".into(),
            ));
        }
        Ok(BoundaryCondition { left, right })
    }

    pub fn periodic() -> Self {
        BoundaryCondition {
            left: BoundaryKind::Periodic,
            right: BoundaryKind::Periodic,
        }
    }

    pub fn dirichlet() -> Self {
        BoundaryCondition {
            left: BoundaryKind::DirichletZero,
            right: BoundaryKind::DirichletZero,
        }
    }

    pub fn neumann() -> Self {
        BoundaryCondition {
            left: BoundaryKind::NeumannZero,
            right: BoundaryKind::NeumannZero,
        }
    }

    pub fn left(&self) -> BoundaryKind {
        self.left
    }

    pub fn right(&self) -> BoundaryKind {
        self.right
    }

    pub fn is_periodic(&self) -> bool {
        self.left == BoundaryKind::Periodic
    }
}

/// Weights `c` with `Σ c_j f(nodes_j) ≈ f^{(order)}(center)`, exact for
/// polynomials of degree `< nodes.len()` (Fornberg's recursion).
pub fn fd_weights(nodes: &[f64], center: f64, order: usize) -> Result<Vec<f64>> {
    let n = nodes.len();
    if order >= n {
        return Err(Error::Config(format!(
            "derivative order {order} needs more than {n} nodes"
        )));
    }
    for i in 0..n {
        for j in i + 1..n {
            if nodes[i] == nodes[j] {
                return Err(Error::InvalidGrid(format!("repeated node {}", nodes[i])));
            }
        }
    }
    // c[j][k]: weight of node j for the k-th derivative.
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - center;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - center;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    Ok(c.into_iter().map(|row| row[order]).collect())
}

/// `n×n` matrix of the `deriv`-th derivative (1 or 2) with centered stencils
/// of accuracy order `p` (even). Non-uniform grids support `p = 2` only.
pub fn diff_matrix(grid: &Grid1D, deriv: usize, p: usize, bc: BoundaryCondition) -> Result<DenseMatrix<f64>> {
    if deriv != 1 && deriv != 2 {
        return Err(Error::Config(format!("derivative order {deriv} not supported")));
    }
    if p == 0 || p % 2 != 0 {
        return Err(Error::Config(format!("accuracy order must be even and positive, got {p}")));
    }
    let n = grid.len();
    if p + 1 > n {
        return Err(Error::Config(format!(
            "order-{p} stencil needs {} points, grid has {n}",
            p + 1
        )));
    }
    let periodic_grid = matches!(grid.kind, GridKind::UniformPeriodic { .. });
    if bc.is_periodic() != periodic_grid {
        return Err(Error::Config(
            "periodic boundary conditions require a periodic grid and vice versa".into(),
        ));
    }
    if grid.kind == GridKind::Nonuniform && p != 2 {
        return Err(Error::Config(format!(
            "non-uniform grids support accuracy order 2 only, got {p}"
        )));
    }

    let x = &grid.points;
    let half = (p / 2) as isize;
    let last = n as isize - 1;
    let mut d = DenseMatrix::zeros(n, n);
    let mut positions = Vec::with_capacity(p + 1);
    let mut columns: Vec<Option<usize>> = Vec::with_capacity(p + 1);

    for i in 0..n {
        positions.clear();
        columns.clear();
        for off in -half..=half {
            let j = i as isize + off;
            if periodic_grid {
                let h = grid.spacing().unwrap();
                positions.push(x[i] + off as f64 * h);
                columns.push(Some(j.rem_euclid(n as isize) as usize));
            } else if j < 0 {
                let r = (-j) as usize;
                positions.push(2.0 * x[0] - x[r]);
                columns.push(match bc.left {
                    BoundaryKind::NeumannZero => Some(r),
                    _ => None,
                });
            } else if j > last {
                let r = (2 * last - j) as usize;
                positions.push(2.0 * x[n - 1] - x[r]);
                columns.push(match bc.right {
                    BoundaryKind::NeumannZero => Some(r),
                    _ => None,
                });
            } else {
                positions.push(x[j as usize]);
                columns.push(Some(j as usize));
            }
        }
        let w = fd_weights(&positions, x[i], deriv)?;
        for (&wk, col) in w.iter().zip(&columns) {
            if let Some(c) = col {
                d.add_to(i, *c, wk);
            }
        }
    }
    Ok(d)
}

/// Spectral second-derivative matrix on `n` (even) equispaced points of `[0, 2π)`.
pub fn fourier_d2(n: usize) -> Result<DenseMatrix<f64>> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::Config(format!(
            "Fourier differentiation needs an even number of points, got {n}"
        )));
    }
    let h = 2.0 * PI / n as f64;
    Ok(DenseMatrix::from_fn(n, n, |i, j| {
        if i == j {
            -PI * PI / (3.0 * h * h) - 1.0 / 6.0
        } else {
            let k = i as isize - j as isize;
            let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let s = (k as f64 * h / 2.0).sin();
            -sign / (2.0 * s * s)
        }
    }))
}

/// Accuracy of the heat-equation discretization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Accuracy {
    /// Centered finite differences of even order `p`.
    Order(usize),
    /// Fourier pseudospectral differentiation (`p = ∞`).
    Spectral,
}

impl std::fmt::Display for Accuracy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Accuracy::Order(p) => write!(f, "{p}"),
            Accuracy::Spectral => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for Accuracy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "spectral" | "∞" => Ok(Accuracy::Spectral),
            other => {
                let p: usize = other
                    .parse()
                    .map_err(|_| Error::Config(format!("invalid accuracy order '{other}'")))?;
                if p == 0 || p % 2 != 0 {
                    return Err(Error::Config(format!("accuracy order must be even, got {p}")));
                }
                Ok(Accuracy::Order(p))
            }
        }
    }
}

/// Periodic grid of the heat problem, `[0, 2π)` with `n` points.
pub fn heat_grid(n: usize) -> Result<Grid1D> {
    Grid1D::uniform_periodic(0.0, 2.0 * PI, n)
}

/// Three identical periodic second-derivative factors on `[0, 2π)³`.
pub fn heat_factors(n: usize, accuracy: Accuracy) -> Result<KroneckerOp<f64>> {
    let d2 = match accuracy {
        Accuracy::Order(p) => {
            if p == 0 || p % 2 != 0 {
                return Err(Error::Config(format!("accuracy order must be even, got {p}")));
            }
            diff_matrix(&heat_grid(n)?, 2, p, BoundaryCondition::periodic())?
        }
        Accuracy::Spectral => fourier_d2(n)?,
    };
    KroneckerOp::new(vec![d2.clone(), d2.clone(), d2])
}

/// Parameters of the pipe-flow model.
pub mod pipe {
    pub const RHO_MIN: f64 = 0.1;
    pub const RHO_MAX: f64 = 5.0;
    pub const Z_MAX: f64 = 8.0;
    pub const ALPHA: f64 = 1.0 / 90.0;

    /// Advection velocity `s(z)`.
    pub fn velocity(z: f64) -> f64 {
        2.0 + (4.0 * (z - 2.5)).tanh() - (4.0 * (z - 5.0)).tanh()
    }
}

/// Grids of the pipe-flow problem. `rho` includes both ends of
/// `[ρ_min, ρ_max]`; `z` has spacing `z_max/n` and starts one step after the
/// Dirichlet end `z = 0`, which is the dropped ghost point.
#[derive(Clone, Debug)]
pub struct PipeGrids {
    pub rho: Grid1D,
    pub z: Grid1D,
}

pub fn pipeflow_grids(n: usize) -> Result<PipeGrids> {
    let h = pipe::Z_MAX / n as f64;
    Ok(PipeGrids {
        rho: Grid1D::uniform(pipe::RHO_MIN, pipe::RHO_MAX, n)?,
        z: Grid1D::uniform(h, pipe::Z_MAX, n)?,
    })
}

/// Factors `(A_ρ, A_z)` of the radially symmetric diffusion–advection model:
/// `A_ρ = α(D₂ + diag(1/ρ)D₁)` with Neumann ends and
/// `A_z = αD₂ − diag(s(z))D₁` with Dirichlet at `z = 0`, Neumann at `z_max`.
pub fn pipeflow_factors(n: usize) -> Result<(KroneckerOp<f64>, PipeGrids)> {
    if n < 8 {
        return Err(Error::Config(format!("pipe flow needs n ≥ 8, got {n}")));
    }
    let grids = pipeflow_grids(n)?;
    let rho = grids.rho.points();
    let d1r = diff_matrix(&grids.rho, 1, 2, BoundaryCondition::neumann())?;
    let d2r = diff_matrix(&grids.rho, 2, 2, BoundaryCondition::neumann())?;
    let a_rho = DenseMatrix::from_fn(n, n, |i, j| {
        pipe::ALPHA * (d2r.get(i, j) + d1r.get(i, j) / rho[i])
    });

    let zbc = BoundaryCondition::new(BoundaryKind::DirichletZero, BoundaryKind::NeumannZero)?;
    let z = grids.z.points();
    let d1z = diff_matrix(&grids.z, 1, 2, zbc)?;
    let d2z = diff_matrix(&grids.z, 2, 2, zbc)?;
    let a_z = DenseMatrix::from_fn(n, n, |i, j| {
        pipe::ALPHA * d2z.get(i, j) - pipe::velocity(z[i]) * d1z.get(i, j)
    });
    Ok((KroneckerOp::new(vec![a_rho, a_z])?, grids))
}

/// Symmetrized kinetic factors of the Gross–Pitaevskii problem.
#[derive(Clone, Debug)]
pub struct WeightedOperator {
    /// `W^{1/2}(½D₂)W^{-1/2}` per direction.
    pub op: KroneckerOp<f64>,
    /// Trapezoidal weights per direction.
    pub weights: Vec<Vec<f64>>,
}

/// One symmetrized factor `W^{1/2}(½D₂)W^{-1/2}` with Neumann closure and
/// trapezoidal weights; returns the factor and the weights.
pub fn weighted_half_laplacian(grid: &Grid1D) -> Result<(DenseMatrix<f64>, Vec<f64>)> {
    if matches!(grid.kind, GridKind::UniformPeriodic { .. }) {
        return Err(Error::InvalidGrid("expected a bounded grid".into()));
    }
    let raw = diff_matrix(grid, 2, 2, BoundaryCondition::neumann())?;
    let w = grid.trapezoidal_weights();
    let sw: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let n = grid.len();
    let a = DenseMatrix::from_fn(n, n, |i, j| 0.5 * sw[i] * raw.get(i, j) / sw[j]);
    Ok((a, w))
}

pub fn gpe_weighted_factors(grids: &[Grid1D]) -> Result<WeightedOperator> {
    let mut factors = Vec::with_capacity(grids.len());
    let mut weights = Vec::with_capacity(grids.len());
    for g in grids {
        let (a, w) = weighted_half_laplacian(g)?;
        factors.push(a);
        weights.push(w);
    }
    Ok(WeightedOperator {
        op: KroneckerOp::new(factors)?,
        weights,
    })
}
