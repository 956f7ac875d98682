//! Uniform tensor meshes with zero-flux boundaries.
//!
//! Nodes sit on cell corners, `cells + 1` per axis, and are stored in
//! row-major order (the last axis varies fastest). The discrete Laplacian uses
//! mirrored ghost nodes, `v[-1] = v[1]`, and pairs with trapezoidal weights so
//! that summation by parts holds exactly:
//!
//! ```text
//! integrate(u * laplacian(v)) == -grad_inner(u, v)
//! ```

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math;

/// Largest supported dimension. Only 1 and 2 are exercised.
pub const MAX_DIM: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub enum GridError {
    Dimension(usize),
    Cells,
    Length,
    ShapeMismatch { expected: usize, got: usize },
    NonFinite { index: usize },
    GridMismatch,
    Exponent(f64),
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Dimension(d) => write!(f, "grid dimension must be 1..={MAX_DIM}, got {d}"),
            Self::Cells => f.write_str("every axis needs at least one cell"),
            Self::Length => f.write_str("axis lengths must be positive and finite"),
            Self::ShapeMismatch { expected, got } => {
                write!(f, "field has {got} values, grid has {expected} nodes")
            }
            Self::NonFinite { index } => write!(f, "non-finite field value at node {index}"),
            Self::GridMismatch => f.write_str("fields live on different grids"),
            Self::Exponent(q) => write!(f, "norm exponent must be >= 1, got {q}"),
        }
    }
}

impl core::error::Error for GridError {}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    cells: [usize; MAX_DIM],
    lengths: [f64; MAX_DIM],
}

impl Grid {
    pub fn new(cells: &[usize], lengths: &[f64]) -> Result<Self, GridError> {
        let dim = cells.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(GridError::Dimension(dim));
        }
        if lengths.len() != dim {
            return Err(GridError::Dimension(lengths.len()));
        }
        let mut c = [1; MAX_DIM];
        let mut l = [1.0; MAX_DIM];
        for a in 0..dim {
            if cells[a] == 0 {
                return Err(GridError::Cells);
            }
            if !(lengths[a].is_finite() && lengths[a] > 0.0) {
                return Err(GridError::Length);
            }
            c[a] = cells[a];
            l[a] = lengths[a];
        }
        Ok(Self { dim, cells: c, lengths: l })
    }

    pub fn line(cells: usize, length: f64) -> Result<Self, GridError> {
        Self::new(&[cells], &[length])
    }

    pub fn rect(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self, GridError> {
        Self::new(&[nx, ny], &[lx, ly])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.cells[axis] as f64
    }

    pub fn nodes_on_axis(&self, axis: usize) -> usize {
        self.cells[axis] + 1
    }

    pub fn node_count(&self) -> usize {
        (0..self.dim).map(|a| self.nodes_on_axis(a)).product()
    }

    /// Index distance between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        (axis + 1..self.dim).map(|a| self.nodes_on_axis(a)).product()
    }

    /// |Omega|.
    pub fn measure(&self) -> f64 {
        self.lengths().iter().product()
    }

    /// Position of `index` along `axis`.
    pub fn axis_index(&self, index: usize, axis: usize) -> usize {
        (index / self.stride(axis)) % self.nodes_on_axis(axis)
    }

    pub fn coords(&self, index: usize) -> [f64; MAX_DIM] {
        let mut x = [0.0; MAX_DIM];
        for (a, xa) in x.iter_mut().enumerate().take(self.dim) {
            *xa = self.axis_index(index, a) as f64 * self.spacing(a);
        }
        x
    }

    /// Trapezoidal weight of one node.
    pub fn weight(&self, index: usize) -> f64 {
        let mut w = 1.0;
        for a in 0..self.dim {
            let i = self.axis_index(index, a);
            let h = self.spacing(a);
            w *= if i == 0 || i == self.cells[a] { 0.5 * h } else { h };
        }
        w
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.node_count()).map(|i| self.weight(i)).collect()
    }

    /// `out = lap(v)` with mirrored ghosts.
    pub fn apply_laplacian(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.node_count());
        debug_assert_eq!(out.len(), v.len());
        out.iter_mut().for_each(|o| *o = 0.0);
        for a in 0..self.dim {
            let s = self.stride(a);
            let last = self.cells[a];
            let inv_h2 = 1.0 / (self.spacing(a) * self.spacing(a));
            for (i, o) in out.iter_mut().enumerate() {
                let k = self.axis_index(i, a);
                let (lo, hi) = if k == 0 {
                    (v[i + s], v[i + s])
                } else if k == last {
                    (v[i - s], v[i - s])
                } else {
                    (v[i - s], v[i + s])
                };
                *o += (lo - 2.0 * v[i] + hi) * inv_h2;
            }
        }
    }

    /// Discrete Dirichlet form `sum over edges of (du/h)(dv/h) * edge measure`.
    pub fn grad_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut total = 0.0;
        for a in 0..self.dim {
            let s = self.stride(a);
            let h = self.spacing(a);
            for i in 0..u.len() {
                if self.axis_index(i, a) == self.cells[a] {
                    continue;
                }
                // Edge from i to i + s: length h along a, transverse weight
                // from the other axes.
                let mut m = h;
                for b in 0..self.dim {
                    if b != a {
                        let kb = self.axis_index(i, b);
                        let hb = self.spacing(b);
                        m *= if kb == 0 || kb == self.cells[b] { 0.5 * hb } else { hb };
                    }
                }
                total += (u[i + s] - u[i]) * (v[i + s] - v[i]) / (h * h) * m;
            }
        }
        total
    }

    pub fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).enumerate().map(|(i, (a, b))| self.weight(i) * a * b).sum()
    }
}

/// Nodal scalar field on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.node_count() {
            return Err(GridError::ShapeMismatch { expected: grid.node_count(), got: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.node_count()] }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let values = (0..grid.node_count()).map(|i| f(&grid.coords(i)[..grid.dim()])).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Self, GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn sup_distance(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| math::abs(a - b))
            .fold(0.0, f64::max)
    }

    /// Mean value `integrate / |Omega|`.
    pub fn mean(&self) -> f64 {
        integrate(self) / self.grid.measure()
    }
}

pub fn laplacian_neumann(field: &Field) -> Field {
    let mut out = vec![0.0; field.len()];
    field.grid.apply_laplacian(&field.values, &mut out);
    Field { grid: field.grid, values: out }
}

pub fn integrate(field: &Field) -> f64 {
    field.values.iter().enumerate().map(|(i, v)| field.grid.weight(i) * v).sum()
}

pub fn grad_sq_integral(field: &Field) -> f64 {
    field.grid.grad_inner(&field.values, &field.values)
}

/// Quadrature-weighted `L^q` norm; `q = f64::INFINITY` gives the max norm.
pub fn lq_norm(field: &Field, q: f64) -> Result<f64, GridError> {
    if q.is_nan() || q < 1.0 {
        return Err(GridError::Exponent(q));
    }
    if q.is_infinite() {
        return Ok(field.values.iter().map(|v| math::abs(*v)).fold(0.0, f64::max));
    }
    let s: f64 = field
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| field.grid.weight(i) * math::powf(math::abs(*v), q))
        .sum();
    Ok(math::powf(s, 1.0 / q))
}

pub fn l2_norm(field: &Field) -> f64 {
    math::sqrt(field.grid.dot(&field.values, &field.values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn grid_validation() {
        assert_eq!(Grid::new(&[], &[]), Err(GridError::Dimension(0)));
        assert_eq!(Grid::new(&[1, 1, 1, 1], &[1.0; 4]), Err(GridError::Dimension(4)));
        assert_eq!(Grid::new(&[0], &[1.0]), Err(GridError::Cells));
        assert_eq!(Grid::new(&[4], &[-1.0]), Err(GridError::Length));
        assert_eq!(Grid::new(&[4, 4], &[1.0]), Err(GridError::Dimension(1)));
        let g = Grid::rect(3, 5, 1.0, 2.0).unwrap();
        assert_eq!(g.node_count(), 24);
        assert_eq!(g.stride(0), 6);
        assert_eq!(g.stride(1), 1);
        assert_eq!(g.coords(7)[..2], [1.0 / 3.0, 0.4]);
        assert!(Field::new(g, vec![0.0; 23]).is_err());
        let mut v = vec![0.0; 24];
        v[3] = f64::NAN;
        assert_eq!(Field::new(g, v), Err(GridError::NonFinite { index: 3 }));
    }

    #[test]
    fn constants_in_kernel() {
        for g in [Grid::line(1, 1.0).unwrap(), Grid::line(7, 3.0).unwrap(), Grid::rect(4, 6, 1.0, 0.3).unwrap()] {
            let lap = laplacian_neumann(&Field::constant(g, 2.75));
            assert!(lap.values().iter().all(|&v| v == 0.0));
            assert_eq!(grad_sq_integral(&Field::constant(g, -1.0)), 0.0);
        }
    }

    #[test]
    fn quadrature_exact_cases() {
        let g = Grid::line(10, 1.0).unwrap();
        assert!((integrate(&Field::constant(g, 1.0)) - 1.0).abs() < 1e-15);
        assert!((integrate(&Field::from_fn(g, |x| x[0])) - 0.5).abs() < 1e-15);
        let g = Grid::line(100, 1.0).unwrap();
        assert!((integrate(&Field::from_fn(g, |x| x[0] * x[0])) - 1.0 / 3.0).abs() < 1e-4);
        let g = Grid::rect(3, 4, 2.0, 0.5).unwrap();
        assert!((integrate(&Field::constant(g, 1.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_energy() {
        let g = Grid::line(16, 1.0).unwrap();
        assert!((grad_sq_integral(&Field::from_fn(g, |x| 3.0 * x[0])) - 9.0).abs() < 1e-12);
        let g = Grid::line(256, 1.0).unwrap();
        let c = grad_sq_integral(&Field::from_fn(g, |x| (PI * x[0]).cos()));
        assert!((c - PI * PI / 2.0).abs() < 1e-4);
        let g = Grid::rect(8, 8, 1.0, 1.0).unwrap();
        let f = Field::from_fn(g, |x| 2.0 * x[0] - x[1]);
        assert!((grad_sq_integral(&f) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn norms() {
        let g = Grid::line(8, 1.0).unwrap();
        assert!((lq_norm(&Field::constant(g, -3.0), 2.0).unwrap() - 3.0).abs() < 1e-14);
        // odd cell count puts half the trapezoid mass on the first half of the nodes
        let g = Grid::line(9, 1.0).unwrap();
        let ind = Field::from_fn(g, |x| if x[0] < 0.5 { 1.0 } else { 0.0 });
        assert!((lq_norm(&ind, 4.0).unwrap() - 0.5f64.powf(0.25)).abs() < 1e-14);
        let f = Field::from_fn(g, |x| (7.0 * x[0]).sin() - 0.2);
        let m = f.values().iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert_eq!(lq_norm(&f, f64::INFINITY).unwrap(), m);
        assert!(lq_norm(&f, 0.5).is_err());
        assert!(lq_norm(&f, f64::NAN).is_err());
    }

    fn eigen_error(n: usize) -> f64 {
        let g = Grid::line(n, 1.0).unwrap();
        let f = Field::from_fn(g, |x| (PI * x[0]).cos());
        let lap = laplacian_neumann(&f);
        lap.values().iter().zip(f.values()).map(|(l, v)| (l + PI * PI * v).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn cosine_eigenfunction_second_order() {
        // The discrete eigenvalue is -(2/h^2)(1 - cos(pi h)).
        let n = 32;
        let h = 1.0 / n as f64;
        let g = Grid::line(n, 1.0).unwrap();
        let f = Field::from_fn(g, |x| (PI * x[0]).cos());
        let lam = -(2.0 / (h * h)) * (1.0 - (PI * h).cos());
        let lap = laplacian_neumann(&f);
        for (l, v) in lap.values().iter().zip(f.values()) {
            assert!((l - lam * v).abs() < 1e-10);
        }
        let ratios = [eigen_error(32) / eigen_error(64), eigen_error(64) / eigen_error(128)];
        for r in ratios {
            assert!((3.9..4.1).contains(&r), "{ratios:?}");
        }
    }

    #[test]
    fn separable_2d_eigenfunction() {
        let err = |n: usize| {
            let g = Grid::rect(n, n, 1.0, 1.0).unwrap();
            let f = Field::from_fn(g, |x| (PI * x[0]).cos() * (PI * x[1]).cos());
            let lap = laplacian_neumann(&f);
            lap.values()
                .iter()
                .zip(f.values())
                .map(|(l, v)| (l + 2.0 * PI * PI * v).abs())
                .fold(0.0, f64::max)
        };
        let r = err(16) / err(32);
        assert!((3.8..4.2).contains(&r), "{r}");
    }

    #[test]
    fn summation_by_parts_2d() {
        let g = Grid::rect(5, 7, 1.3, 0.7).unwrap();
        let u = Field::from_fn(g, |x| (3.0 * x[0]).sin() + x[1] * x[1]);
        let v = Field::from_fn(g, |x| (x[0] * x[1]).exp() - 2.0 * x[1]);
        let lhs = integrate(&u.zip_with(&laplacian_neumann(&v), |a, b| a * b).unwrap());
        let rhs = -g.grad_inner(u.values(), v.values());
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
    }
}
