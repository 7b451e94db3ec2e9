//! Symmetry-reduced grids, quadrature weights and masked scalar fields.
//!
//! All three grid kinds share one structured layout: an `ns × nz` array of
//! nodes stored row-major with `z` fastest (`index = i * nz + j`). A line grid
//! is a single column (`ns = 1`), a radial grid a single row (`nz = 1`).
//!
//! Quadrature weights are finite-volume cell measures clipped to the grid:
//! away from the axis they equal `σ · s^k · h` (times `hz` on axial grids),
//! nodes on the outer edges get half a cell, and the axis node gets the
//! measure of its half cell, which is what regularizes the `s = 0` column.

use crate::error::{Error, Result};

/// Surface area of the unit sphere `S^k ⊂ R^{k+1}`.
pub fn unit_sphere_area(k: usize) -> f64 {
    use std::f64::consts::PI;
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * unit_sphere_area(k - 2),
    }
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    unit_sphere_area(n - 1) / n as f64
}

/// Uniform 1D grid; `n` counts nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineGrid {
    pub h: f64,
    pub n: usize,
    pub origin: f64,
}

/// Radial grid for radially symmetric fields on `R^dim`; node `i` at `ρ = i·h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialGrid {
    pub h: f64,
    pub n: usize,
    pub dim: usize,
}

/// Grid in the meridian half-plane `(s, z)` for fields on `R^dim` that are
/// radially symmetric in the first `dim - 1` coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxialGrid {
    pub hs: f64,
    pub hz: f64,
    pub ns: usize,
    pub nz: usize,
    pub z0: f64,
    pub dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Grid {
    Line(LineGrid),
    Radial(RadialGrid),
    Axial(AxialGrid),
}

/// Requested grid: spacings and extents. Node counts are rounded up so the
/// grid covers the requested extent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridSpec {
    Line {
        h: f64,
        x_min: f64,
        x_max: f64,
    },
    Radial {
        h: f64,
        r_max: f64,
        dim: usize,
    },
    Axial {
        hs: f64,
        hz: f64,
        s_max: f64,
        z_min: f64,
        z_max: f64,
        dim: usize,
    },
}

fn node_count(len: f64, h: f64) -> usize {
    (len / h - 1e-9).ceil() as usize + 1
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

pub fn build_grid(spec: GridSpec) -> Result<Grid> {
    let grid = match spec {
        GridSpec::Line { h, x_min, x_max } => {
            check_positive("h", h)?;
            check_positive("line extent", x_max - x_min)?;
            Grid::Line(LineGrid {
                h,
                n: node_count(x_max - x_min, h),
                origin: x_min,
            })
        }
        GridSpec::Radial { h, r_max, dim } => {
            check_positive("h", h)?;
            check_positive("r_max", r_max)?;
            if dim < 2 {
                return Err(Error::InvalidParameter(format!(
                    "radial grid needs dim >= 2, got {dim}"
                )));
            }
            Grid::Radial(RadialGrid {
                h,
                n: node_count(r_max, h),
                dim,
            })
        }
        GridSpec::Axial {
            hs,
            hz,
            s_max,
            z_min,
            z_max,
            dim,
        } => {
            check_positive("hs", hs)?;
            check_positive("hz", hz)?;
            check_positive("s_max", s_max)?;
            check_positive("axial extent", z_max - z_min)?;
            if dim < 3 {
                return Err(Error::InvalidParameter(format!(
                    "axial grid needs dim >= 3, got {dim}"
                )));
            }
            Grid::Axial(AxialGrid {
                hs,
                hz,
                ns: node_count(s_max, hs),
                nz: node_count(z_max - z_min, hz),
                z0: z_min,
                dim,
            })
        }
    };
    if grid.ns() < 3 && !matches!(grid, Grid::Line(_)) || grid.nz() < 3 && !matches!(grid, Grid::Radial(_))
    {
        return Err(Error::InvalidParameter(format!(
            "grid needs at least 3 nodes per direction, got {}x{}",
            grid.ns(),
            grid.nz()
        )));
    }
    Ok(grid)
}

impl Grid {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Grid::Line(_) => "line",
            Grid::Radial(_) => "radial",
            Grid::Axial(_) => "axial",
        }
    }

    /// Ambient dimension of the underlying physical space.
    pub fn dim(&self) -> usize {
        match self {
            Grid::Line(_) => 1,
            Grid::Radial(g) => g.dim,
            Grid::Axial(g) => g.dim,
        }
    }

    pub fn ns(&self) -> usize {
        match self {
            Grid::Line(_) => 1,
            Grid::Radial(g) => g.n,
            Grid::Axial(g) => g.ns,
        }
    }

    pub fn nz(&self) -> usize {
        match self {
            Grid::Line(g) => g.n,
            Grid::Radial(_) => 1,
            Grid::Axial(g) => g.nz,
        }
    }

    pub fn len(&self) -> usize {
        self.ns() * self.nz()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nz() + j
    }

    /// Spacing in the radial (`s` or `ρ`) direction; zero on line grids.
    pub fn hs(&self) -> f64 {
        match self {
            Grid::Line(_) => 0.0,
            Grid::Radial(g) => g.h,
            Grid::Axial(g) => g.hs,
        }
    }

    /// Spacing along the axis; zero on radial grids.
    pub fn hz(&self) -> f64 {
        match self {
            Grid::Line(g) => g.h,
            Grid::Radial(_) => 0.0,
            Grid::Axial(g) => g.hz,
        }
    }

    /// Radial coordinate of column `i`.
    #[inline]
    pub fn s(&self, i: usize) -> f64 {
        i as f64 * self.hs()
    }

    /// Axial coordinate of row `j`.
    #[inline]
    pub fn z(&self, j: usize) -> f64 {
        match self {
            Grid::Line(g) => g.origin + j as f64 * g.h,
            Grid::Radial(_) => 0.0,
            Grid::Axial(g) => g.z0 + j as f64 * g.hz,
        }
    }

    pub fn z_range(&self) -> (f64, f64) {
        (self.z(0), self.z(self.nz() - 1))
    }

    pub fn s_max(&self) -> f64 {
        self.s(self.ns() - 1)
    }

    /// Radial part of the quadrature weight of column `i` (times `hz` on
    /// axial grids, `h` on line grids).
    pub fn column_weight(&self, i: usize) -> f64 {
        let w = self.unclipped_column_weight(i);
        if i > 0 && i + 1 == self.ns() {
            0.5 * w
        } else {
            w
        }
    }

    /// Quadrature weight of node `(i, j)`.
    #[inline]
    pub fn node_weight(&self, i: usize, j: usize) -> f64 {
        let nz = self.nz();
        if nz > 1 && (j == 0 || j + 1 == nz) {
            0.5 * self.column_weight(i)
        } else {
            self.column_weight(i)
        }
    }

    fn unclipped_column_weight(&self, i: usize) -> f64 {
        match self {
            Grid::Line(g) => g.h,
            Grid::Radial(g) => {
                let sigma = unit_sphere_area(g.dim - 1);
                let k = (g.dim - 1) as i32;
                if i == 0 {
                    sigma * (0.5 * g.h).powi(k + 1) / (k + 1) as f64
                } else {
                    sigma * (i as f64 * g.h).powi(k) * g.h
                }
            }
            Grid::Axial(g) => {
                let sigma = unit_sphere_area(g.dim - 2);
                let k = (g.dim - 2) as i32;
                if i == 0 {
                    sigma * (0.5 * g.hs).powi(k + 1) / (k + 1) as f64 * g.hz
                } else {
                    sigma * (i as f64 * g.hs).powi(k) * g.hs * g.hz
                }
            }
        }
    }

    /// Per-node quadrature weights in storage order.
    pub fn node_weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.len());
        for i in 0..self.ns() {
            for j in 0..self.nz() {
                w.push(self.node_weight(i, j));
            }
        }
        w
    }

    /// Stiffness coefficient of the edge between columns `i` and `i + 1`.
    pub fn s_edge(&self, i: usize) -> f64 {
        match self {
            Grid::Line(_) => 0.0,
            Grid::Radial(g) => {
                let sigma = unit_sphere_area(g.dim - 1);
                let rho = (i as f64 + 0.5) * g.h;
                sigma * rho.powi((g.dim - 1) as i32) / g.h
            }
            Grid::Axial(g) => {
                let sigma = unit_sphere_area(g.dim - 2);
                let s = (i as f64 + 0.5) * g.hs;
                sigma * s.powi((g.dim - 2) as i32) * g.hz / g.hs
            }
        }
    }

    /// Stiffness coefficient of the axial edges inside column `i`.
    pub fn z_edge(&self, i: usize) -> f64 {
        match self {
            Grid::Radial(_) => 0.0,
            _ => {
                let hz = self.hz();
                self.unclipped_column_weight(i) / (hz * hz)
            }
        }
    }

    /// True on the truncation boundary, where homogeneous Dirichlet data is imposed.
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        match self {
            Grid::Line(g) => j == 0 || j + 1 == g.n,
            Grid::Radial(g) => i + 1 == g.n,
            Grid::Axial(g) => i + 1 == g.ns || j == 0 || j + 1 == g.nz,
        }
    }

    /// Every node, boundary included.
    pub fn full_mask(&self) -> Vec<bool> {
        vec![true; self.len()]
    }

    /// Every node off the truncation boundary.
    pub fn interior_mask(&self) -> Vec<bool> {
        let mut m = vec![true; self.len()];
        for i in 0..self.ns() {
            for j in 0..self.nz() {
                if self.is_boundary(i, j) {
                    m[self.index(i, j)] = false;
                }
            }
        }
        m
    }

    /// Row index of `z` if it coincides with a node (to 1e-9 cells).
    pub fn row_of(&self, z: f64) -> Option<usize> {
        let hz = self.hz();
        if hz == 0.0 {
            return None;
        }
        let t = (z - self.z(0)) / hz;
        let r = t.round();
        if (t - r).abs() < 1e-9 && r >= 0.0 && (r as usize) < self.nz() {
            Some(r as usize)
        } else {
            None
        }
    }
}

/// Real values on a grid plus a domain mask (`true` = inside the domain).
/// Values at masked-out nodes are kept at exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl ScalarField {
    /// Builds a field, zeroing values outside the mask.
    pub fn new(grid: Grid, mut values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != grid.len() || mask.len() != grid.len() {
            return Err(Error::Shape(format!(
                "grid has {} nodes, got {} values and {} mask entries",
                grid.len(),
                values.len(),
                mask.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite value at node {k}")));
        }
        for (v, &m) in values.iter_mut().zip(&mask) {
            if !m {
                *v = 0.0;
            }
        }
        Ok(Self { grid, values, mask })
    }

    pub fn zeros(grid: Grid, mask: Vec<bool>) -> Self {
        let values = vec![0.0; grid.len()];
        Self::new(grid, values, mask).expect("zeros: mask length matches grid")
    }

    /// Evaluates `f(s, z)` at every node inside the mask.
    pub fn from_fn(grid: Grid, mask: Vec<bool>, mut f: impl FnMut(f64, f64) -> f64) -> Result<Self> {
        let mut values = vec![0.0; grid.len()];
        for i in 0..grid.ns() {
            let s = grid.s(i);
            for j in 0..grid.nz() {
                let k = grid.index(i, j);
                if mask[k] {
                    values[k] = f(s, grid.z(j));
                }
            }
        }
        Self::new(grid, values, mask)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Replaces the values, keeping grid and mask.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid, values, self.mask.clone())
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
            mask: self.mask.clone(),
        }
    }

    pub fn same_layout(&self, other: &ScalarField) -> bool {
        self.grid == other.grid && self.mask == other.mask
    }

    /// `self + c * other` on the union of the two masks.
    pub fn add_scaled(&self, other: &ScalarField, c: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Shape("fields live on different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + c * b)
            .collect();
        let mask = self.mask.iter().zip(&other.mask).map(|(a, b)| *a || *b).collect();
        Self::new(self.grid, values, mask)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Max-norm distance to another field on the same grid.
    pub fn max_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Interpolated value at the physical point with radial coordinate `s`
    /// and axial coordinate `z`; zero outside the grid. Radial grids are
    /// sampled at `ρ = sqrt(s² + z²)`, line grids at `z`.
    pub fn sample(&self, s: f64, z: f64) -> f64 {
        let g = &self.grid;
        match g {
            Grid::Line(_) => self.interp_row(0, z),
            Grid::Radial(r) => {
                let rho = s.hypot(z);
                let t = rho / r.h;
                let i = t.floor() as usize;
                if i + 1 >= r.n {
                    return 0.0;
                }
                let f = t - i as f64;
                (1.0 - f) * self.values[i] + f * self.values[i + 1]
            }
            Grid::Axial(a) => {
                let t = s / a.hs;
                let i = t.floor() as usize;
                if s < 0.0 || i + 1 >= a.ns {
                    return 0.0;
                }
                let f = t - i as f64;
                (1.0 - f) * self.interp_row(i, z) + f * self.interp_row(i + 1, z)
            }
        }
    }

    fn interp_row(&self, i: usize, z: f64) -> f64 {
        let g = &self.grid;
        let t = (z - g.z(0)) / g.hz();
        if t < 0.0 {
            return 0.0;
        }
        let j = t.floor() as usize;
        if j + 1 >= g.nz() {
            return 0.0;
        }
        let f = t - j as f64;
        let base = g.index(i, j);
        (1.0 - f) * self.values[base] + f * self.values[base + 1]
    }
}

/// Neumaier-compensated sum; keeps energy comparisons meaningful near convergence.
pub(crate) fn compensated_sum(it: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in it {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Weighted quadrature `Σ f_i w_i`.
pub fn integrate(f: &ScalarField) -> f64 {
    let g = f.grid();
    let nz = g.nz();
    compensated_sum(
        f.values()
            .iter()
            .enumerate()
            .map(|(k, v)| v * g.node_weight(k / nz, k % nz)),
    )
}

/// Zeroes `f` outside `mask` and attaches `mask`.
pub fn restrict_to_domain(f: &ScalarField, mask: &[bool]) -> Result<ScalarField> {
    if mask.len() != f.grid().len() {
        return Err(Error::Shape(format!(
            "mask has {} entries, grid has {} nodes",
            mask.len(),
            f.grid().len()
        )));
    }
    ScalarField::new(*f.grid(), f.values().to_vec(), mask.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn axial(hs: f64, s_max: f64, z_min: f64, z_max: f64) -> Grid {
        build_grid(GridSpec::Axial {
            hs,
            hz: hs,
            s_max,
            z_min,
            z_max,
            dim: 3,
        })
        .unwrap()
    }

    #[test]
    fn node_counts() {
        let g = build_grid(GridSpec::Line {
            h: 0.1,
            x_min: -20.0,
            x_max: 20.0,
        })
        .unwrap();
        assert_eq!(g.len(), 401);
        assert!((g.z(400) - 20.0).abs() < 1e-12);

        let g = axial(0.1, 10.0, 0.0, 20.0);
        assert_eq!((g.ns(), g.nz()), (101, 201));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            build_grid(GridSpec::Line { h: 0.0, x_min: 0.0, x_max: 1.0 }),
            Err(Error::InvalidParameter(_))
        ));
        assert!(build_grid(GridSpec::Radial { h: 0.1, r_max: -1.0, dim: 3 }).is_err());
        assert!(build_grid(GridSpec::Axial {
            hs: 0.1,
            hz: -0.1,
            s_max: 1.0,
            z_min: 0.0,
            z_max: 1.0,
            dim: 3
        })
        .is_err());
    }

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(1) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn radial_ball_volume() {
        let g = build_grid(GridSpec::Radial { h: 0.01, r_max: 2.0, dim: 3 }).unwrap();
        let f = ScalarField::from_fn(g, g.full_mask(), |_, _| 1.0).unwrap();
        let exact = 4.0 * PI * 8.0 / 3.0;
        assert!((integrate(&f) - exact).abs() / exact < 5e-3);
    }

    #[test]
    fn radial_exponential_moment() {
        let g = build_grid(GridSpec::Radial { h: 0.01, r_max: 30.0, dim: 3 }).unwrap();
        let f = ScalarField::from_fn(g, g.full_mask(), |rho, _| (-rho).exp()).unwrap();
        let exact = 8.0 * PI;
        assert!((integrate(&f) - exact).abs() / exact < 1e-3);
    }

    #[test]
    fn axial_constant_and_cylinder() {
        let g = axial(0.1, 1.0, 0.0, 1.0);
        let f = ScalarField::from_fn(g, g.full_mask(), |_, _| 2.0).unwrap();
        let v = integrate(&f);
        assert!((v - 2.0 * PI).abs() / (2.0 * PI) < 5e-3, "{v}");

        // interior rows only: cylinder {s < R, 0 < z < L} with L measured in nodes
        let g = axial(0.05, 4.0, 0.0, 3.0);
        let (r, l) = (2.0, 3.0);
        let f = ScalarField::from_fn(g, g.full_mask(), |s, _| if s < r { 1.0 } else { 0.0 }).unwrap();
        let exact = 2.0 * PI * r * r * l / 2.0;
        let rel = (integrate(&f) - exact).abs() / exact;
        assert!(rel < 3.0 * (0.05 / l + 0.05 / r), "{rel}");
    }

    #[test]
    fn quadrature_converges_under_refinement() {
        let bump = |s: f64, z: f64| {
            let r2 = s * s + z * z;
            if r2 < 4.0 {
                (1.0 - r2 / 4.0).powi(3)
            } else {
                0.0
            }
        };
        let coarse = axial(0.1, 3.0, -3.0, 3.0);
        let fine = axial(0.05, 3.0, -3.0, 3.0);
        let ic = integrate(&ScalarField::from_fn(coarse, coarse.full_mask(), bump).unwrap());
        let ifine = integrate(&ScalarField::from_fn(fine, fine.full_mask(), bump).unwrap());
        assert!((ic - ifine).abs() / ifine < 0.1 * 0.1);
    }

    #[test]
    fn weights_positive_and_finite() {
        for g in [
            axial(0.1, 2.0, -1.0, 1.0),
            build_grid(GridSpec::Radial { h: 0.1, r_max: 2.0, dim: 5 }).unwrap(),
            build_grid(GridSpec::Axial { hs: 0.1, hz: 0.2, s_max: 2.0, z_min: 0.0, z_max: 1.0, dim: 4 }).unwrap(),
        ] {
            for w in g.node_weights() {
                assert!(w.is_finite() && w > 0.0);
            }
        }
    }

    #[test]
    fn restrict_cases() {
        let g = axial(0.5, 3.0, -5.0, 5.0);
        let f = ScalarField::from_fn(g, g.full_mask(), |s, z| 1.0 + s + z * z).unwrap();
        assert_eq!(restrict_to_domain(&f, &g.full_mask()).unwrap(), f);

        let ones = ScalarField::from_fn(g, g.full_mask(), |_, _| 1.0).unwrap();
        let empty = vec![false; g.len()];
        assert!(restrict_to_domain(&ones, &empty).unwrap().is_zero());

        let strip: Vec<bool> = (0..g.len()).map(|k| g.z(k % g.nz()).abs() < 2.0).collect();
        let r = restrict_to_domain(&f, &strip).unwrap();
        for (k, v) in r.values().iter().enumerate() {
            if g.z(k % g.nz()).abs() >= 2.0 {
                assert_eq!(*v, 0.0);
            }
        }
        assert_eq!(restrict_to_domain(&r, &strip).unwrap(), r);
        assert!(matches!(restrict_to_domain(&f, &[true; 3]), Err(Error::Shape(_))));
    }

    #[test]
    fn sampling_reproduces_linear_fields() {
        let g = axial(0.25, 4.0, -2.0, 2.0);
        let f = ScalarField::from_fn(g, g.full_mask(), |s, z| 2.0 * s - z + 1.0).unwrap();
        assert!((f.sample(1.1, 0.3) - (2.2 - 0.3 + 1.0)).abs() < 1e-12);
        assert_eq!(f.sample(10.0, 0.0), 0.0);
    }
}
