//! Energy `E(u) = ∫ |∇u|² + u²`, the `L^p` constraint and the projected gradient.
//!
//! The discretization is variational: `E(u) = uᵀ A u` with `A = K + W`, where
//! `K` sums `c_e (u_a − u_b)²` over grid edges and `W` is the diagonal of
//! quadrature weights. The operator `−Δ + 1` is `W⁻¹ A` and the `H¹` inner
//! product is `⟨u, v⟩ = uᵀ A v`, so energy, operator, gradient and inner
//! product agree exactly at the discrete level.
//!
//! Multiplier bookkeeping: [`projected_gradient`] removes the component of
//! the `H¹` gradient `2u` along `T = (−Δ+1)⁻¹(p|u|^{p−2}u)`, with coefficient
//! `μ_raw`. The multiplier of the Euler–Lagrange equation
//! `−Δu + u = λ|u|^{p−2}u` is `λ = μ_raw · p / 2`; at a critical point on the
//! constraint `|u|_p = 1` it equals `E(u)`. All reported multipliers are `λ`.

use crate::error::{Error, Result};
use crate::grid::{compensated_sum, Grid, ScalarField};

/// Relative residual target of the linear solver.
pub const SOLVER_TOL: f64 = 1e-10;
/// Largest tolerated deviation of `|u|_p` from 1 in [`projected_gradient`].
pub const CONSTRAINT_DRIFT_TOL: f64 = 1e-4;

/// `E(u)`, `|u|_p`, the multiplier `λ` and the projected-gradient norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyReport {
    pub energy: f64,
    pub lp_norm: f64,
    pub multiplier: f64,
    pub pg_norm: f64,
}

#[derive(Clone, Debug)]
pub struct ProjectedGradient {
    pub gradient: ScalarField,
    /// Coefficient of `T` removed from the raw gradient.
    pub mu_raw: f64,
    /// `μ_raw · p / 2`.
    pub multiplier: f64,
    /// `H¹` norm of the projected gradient.
    pub norm: f64,
}

/// Conjugate-gradient budget and tolerance.
#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: SOLVER_TOL,
            max_iter: 50_000,
        }
    }
}

/// Assembled stencil of `−Δ + 1` on one grid and mask.
#[derive(Clone, Debug)]
pub struct Operator {
    grid: Grid,
    mask: Vec<bool>,
    active: Vec<bool>,
    weight: Vec<f64>,
    inv_weight: Vec<f64>,
    s_edge: Vec<f64>,
    z_edge: Vec<f64>,
    /// Diagonal of `A` (zero on inactive nodes).
    diag: Vec<f64>,
    pub solver: SolverOptions,
}

impl Operator {
    pub fn new(grid: &Grid, mask: &[bool]) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::Shape(format!(
                "mask has {} entries, grid has {} nodes",
                mask.len(),
                grid.len()
            )));
        }
        let (ns, nz) = (grid.ns(), grid.nz());
        let weight = grid.node_weights();
        let inv_weight = weight.iter().map(|w| 1.0 / w).collect();
        let s_edge: Vec<f64> = (0..ns.saturating_sub(1)).map(|i| grid.s_edge(i)).collect();
        let z_edge: Vec<f64> = (0..ns).map(|i| grid.z_edge(i)).collect();
        let mut active = vec![false; grid.len()];
        let mut diag = vec![0.0; grid.len()];
        for i in 0..ns {
            for j in 0..nz {
                let k = i * nz + j;
                if !mask[k] || grid.is_boundary(i, j) {
                    continue;
                }
                active[k] = true;
                let mut d = weight[k];
                if i + 1 < ns {
                    d += s_edge[i];
                }
                if i > 0 {
                    d += s_edge[i - 1];
                }
                if nz > 1 {
                    d += 2.0 * z_edge[i];
                }
                diag[k] = d;
            }
        }
        Ok(Self {
            grid: *grid,
            mask: mask.to_vec(),
            active,
            weight,
            inv_weight,
            s_edge,
            z_edge,
            diag,
            solver: SolverOptions::default(),
        })
    }

    pub fn for_field(u: &ScalarField) -> Result<Self> {
        Self::new(u.grid(), u.mask())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Nodes carrying unknowns: inside the mask and off the truncation boundary.
    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    fn check(&self, u: &ScalarField) -> Result<()> {
        if u.grid() != &self.grid {
            return Err(Error::Shape("field grid differs from operator grid".into()));
        }
        Ok(())
    }

    fn field(&self, values: Vec<f64>) -> ScalarField {
        ScalarField::new(self.grid, values, self.mask.clone()).expect("operator layout matches")
    }

    /// `y = (α W + β A) x` on active nodes, zero elsewhere.
    fn apply_matrix(&self, x: &[f64], y: &mut [f64], alpha: f64, beta: f64) {
        let (ns, nz) = (self.grid.ns(), self.grid.nz());
        for i in 0..ns {
            let cz = self.z_edge[i];
            let c_in = if i > 0 { self.s_edge[i - 1] } else { 0.0 };
            let c_out = if i + 1 < ns { self.s_edge[i] } else { 0.0 };
            let row = i * nz;
            for j in 0..nz {
                let k = row + j;
                if !self.active[k] {
                    y[k] = 0.0;
                    continue;
                }
                // active nodes are never on the truncation boundary, so all
                // neighbours referenced below exist (the axis has no inner one)
                let mut off = 0.0;
                if nz > 1 {
                    off += cz * (x[k - 1] + x[k + 1]);
                }
                if i > 0 {
                    off += c_in * x[k - nz];
                }
                if i + 1 < ns {
                    off += c_out * x[k + nz];
                }
                y[k] = alpha * self.weight[k] * x[k] + beta * (self.diag[k] * x[k] - off);
            }
        }
    }

    /// Coupling between consecutive storage indices `k` and `k + 1` of a
    /// one-dimensional layout.
    fn chain_edge(&self, k: usize) -> f64 {
        if self.grid.ns() == 1 {
            self.z_edge[0]
        } else {
            self.s_edge[k]
        }
    }

    /// Direct solve of `(α W + β A) x = b` on line and radial grids, where
    /// the matrix is tridiagonal (Thomas algorithm, no pivoting needed for
    /// this diagonally dominant M-matrix).
    fn solve_tridiagonal(&self, b: &[f64], alpha: f64, beta: f64) -> Vec<f64> {
        let n = b.len();
        let act = &self.active;
        let off = |k: usize| {
            if act[k] && act[k + 1] {
                -beta * self.chain_edge(k)
            } else {
                0.0
            }
        };
        let diag = |k: usize| {
            if act[k] {
                alpha * self.weight[k] + beta * self.diag[k]
            } else {
                1.0
            }
        };
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = diag(0);
        c[0] = if n > 1 { off(0) / denom } else { 0.0 };
        d[0] = b[0] / denom;
        for k in 1..n {
            let a = off(k - 1);
            denom = diag(k) - a * c[k - 1];
            c[k] = if k + 1 < n { off(k) / denom } else { 0.0 };
            d[k] = (b[k] - a * d[k - 1]) / denom;
        }
        let mut x = d;
        for k in (0..n - 1).rev() {
            x[k] -= c[k] * x[k + 1];
        }
        for (xk, &a) in x.iter_mut().zip(act) {
            if !a {
                *xk = 0.0;
            }
        }
        x
    }

    /// `H¹` bilinear form `uᵀ A v` evaluated edge by edge.
    pub fn h1_inner_values(&self, u: &[f64], v: &[f64]) -> f64 {
        let (ns, nz) = (self.grid.ns(), self.grid.nz());
        let mut terms = Vec::with_capacity(3 * u.len());
        for i in 0..ns {
            let row = i * nz;
            for j in 0..nz {
                let k = row + j;
                terms.push(self.weight[k] * u[k] * v[k]);
                if j + 1 < nz {
                    terms.push(self.z_edge[i] * (u[k + 1] - u[k]) * (v[k + 1] - v[k]));
                }
                if i + 1 < ns {
                    terms.push(self.s_edge[i] * (u[k + nz] - u[k]) * (v[k + nz] - v[k]));
                }
            }
        }
        compensated_sum(terms)
    }

    pub fn h1_inner(&self, u: &ScalarField, v: &ScalarField) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.h1_inner_values(u.values(), v.values()))
    }

    pub fn energy(&self, u: &ScalarField) -> Result<f64> {
        self.check(u)?;
        Ok(self.h1_inner_values(u.values(), u.values()))
    }

    /// `∫ |u|^p`.
    pub fn lp_power(&self, u: &[f64], p: f64) -> f64 {
        compensated_sum(u.iter().zip(&self.weight).map(|(v, w)| w * v.abs().powf(p)))
    }

    /// Action of `−Δ + 1` (zero off the active nodes).
    pub fn apply(&self, u: &ScalarField) -> Result<ScalarField> {
        self.check(u)?;
        let mut y = vec![0.0; u.values().len()];
        self.apply_matrix(u.values(), &mut y, 0.0, 1.0);
        for (yk, iw) in y.iter_mut().zip(&self.inv_weight) {
            *yk *= iw;
        }
        Ok(self.field(y))
    }

    /// Solves `(α I + β (−Δ + 1)) x = rhs` by Jacobi-preconditioned CG on the
    /// symmetric form `(α W + β A) x = W rhs`. The residual is measured in the
    /// weighted `L²` norm, relative to `|rhs|`.
    pub fn solve(&self, rhs: &ScalarField, alpha: f64, beta: f64) -> Result<ScalarField> {
        self.check(rhs)?;
        let n = self.grid.len();
        let b: Vec<f64> = (0..n)
            .map(|k| if self.active[k] { self.weight[k] * rhs.values()[k] } else { 0.0 })
            .collect();
        let wnorm = |r: &[f64]| -> f64 {
            r.iter().zip(&self.inv_weight).map(|(x, iw)| x * x * iw).sum::<f64>().sqrt()
        };
        let b_norm = wnorm(&b);
        if b_norm == 0.0 {
            return Ok(self.field(vec![0.0; n]));
        }
        if self.grid.ns() == 1 || self.grid.nz() == 1 {
            return Ok(self.field(self.solve_tridiagonal(&b, alpha, beta)));
        }
        let precond: Vec<f64> = (0..n)
            .map(|k| {
                if self.active[k] {
                    1.0 / (alpha * self.weight[k] + beta * self.diag[k])
                } else {
                    0.0
                }
            })
            .collect();

        // warm start from the Jacobi solution
        let mut x: Vec<f64> = b.iter().zip(&precond).map(|(b, m)| b * m).collect();
        let mut ax = vec![0.0; n];
        self.apply_matrix(&x, &mut ax, alpha, beta);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let mut z: Vec<f64> = r.iter().zip(&precond).map(|(r, m)| r * m).collect();
        let mut d = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut q = vec![0.0; n];
        let tol = self.solver.tol * b_norm;
        let mut res = wnorm(&r);
        let mut iter = 0;
        while res > tol {
            if iter >= self.solver.max_iter {
                return Err(Error::Solver {
                    iterations: iter,
                    residual: res / b_norm,
                });
            }
            self.apply_matrix(&d, &mut q, alpha, beta);
            let dq: f64 = d.iter().zip(&q).map(|(a, b)| a * b).sum();
            let step = rz / dq;
            for k in 0..n {
                x[k] += step * d[k];
                r[k] -= step * q[k];
            }
            for k in 0..n {
                z[k] = r[k] * precond[k];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let ratio = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                d[k] = z[k] + ratio * d[k];
            }
            iter += 1;
            // refresh the recursive residual now and then
            if iter % 200 == 0 {
                self.apply_matrix(&x, &mut ax, alpha, beta);
                for k in 0..n {
                    r[k] = b[k] - ax[k];
                }
            }
            res = wnorm(&r);
        }
        log::trace!("cg: {iter} iterations, residual {:.2e}", res / b_norm);
        Ok(self.field(x))
    }

    /// Solves `(I + shift (−Δ + 1)) x = rhs`; `shift = 0` returns `rhs`.
    pub fn solve_linear(&self, rhs: &ScalarField, shift: f64) -> Result<ScalarField> {
        if !(shift >= 0.0) {
            return Err(Error::InvalidParameter(format!("shift must be >= 0, got {shift}")));
        }
        if shift == 0.0 {
            self.check(rhs)?;
            return Ok(rhs.clone());
        }
        self.solve(rhs, 1.0, shift)
    }

    pub fn projected_gradient(&self, u: &ScalarField, p: f64) -> Result<ProjectedGradient> {
        self.check(u)?;
        let lp = self.lp_power(u.values(), p).powf(1.0 / p);
        if (lp - 1.0).abs() > CONSTRAINT_DRIFT_TOL {
            return Err(Error::ConstraintDrift {
                lp_norm: lp,
                tolerance: CONSTRAINT_DRIFT_TOL,
            });
        }
        let v = u.values();
        let f: Vec<f64> = v.iter().map(|x| p * x.abs().powf(p - 2.0) * x).collect();
        let t = self.solve(&self.field(f.clone()), 0.0, 1.0)?;
        // ⟨R, T⟩ = 2 ∫ u f and ⟨T, T⟩ = ∫ T f, both exact for A T = W f
        let rt = 2.0 * compensated_sum(v.iter().zip(&f).zip(&self.weight).map(|((a, b), w)| a * b * w));
        let tt = compensated_sum(t.values().iter().zip(&f).zip(&self.weight).map(|((a, b), w)| a * b * w));
        let mu_raw = rt / tt;
        let g: Vec<f64> = v.iter().zip(t.values()).map(|(a, b)| 2.0 * a - mu_raw * b).collect();
        let norm = self.h1_inner_values(&g, &g).max(0.0).sqrt();
        Ok(ProjectedGradient {
            gradient: self.field(g),
            mu_raw,
            multiplier: mu_raw * p / 2.0,
            norm,
        })
    }

    pub fn report(&self, u: &ScalarField, p: f64) -> Result<EnergyReport> {
        let pg = self.projected_gradient(u, p)?;
        Ok(EnergyReport {
            energy: self.energy(u)?,
            lp_norm: self.lp_power(u.values(), p).powf(1.0 / p),
            multiplier: pg.multiplier,
            pg_norm: pg.norm,
        })
    }
}

/// `∫ |∇u|² + u²` with homogeneous Dirichlet data outside the mask.
pub fn energy(u: &ScalarField) -> Result<f64> {
    Operator::for_field(u)?.energy(u)
}

/// `(∫ |u|^p)^{1/p}`.
pub fn lp_norm(u: &ScalarField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    let g = u.grid();
    let nz = g.nz();
    let s = compensated_sum(
        u.values()
            .iter()
            .enumerate()
            .map(|(k, v)| g.node_weight(k / nz, k % nz) * v.abs().powf(p)),
    );
    Ok(s.powf(1.0 / p))
}

/// `u / |u|_p`.
pub fn normalize(u: &ScalarField, p: f64) -> Result<ScalarField> {
    let n = lp_norm(u, p)?;
    if n == 0.0 || !n.is_finite() {
        return Err(Error::DegenerateInput("cannot normalize the zero field".into()));
    }
    Ok(u.scaled(1.0 / n))
}

pub fn apply_operator(u: &ScalarField) -> Result<ScalarField> {
    Operator::for_field(u)?.apply(u)
}

pub fn solve_linear(rhs: &ScalarField, shift: f64) -> Result<ScalarField> {
    Operator::for_field(rhs)?.solve_linear(rhs, shift)
}

pub fn projected_gradient(u: &ScalarField, p: f64) -> Result<ProjectedGradient> {
    Operator::for_field(u)?.projected_gradient(u, p)
}

pub fn energy_report(u: &ScalarField, p: f64) -> Result<EnergyReport> {
    Operator::for_field(u)?.report(u, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridSpec};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn line(h: f64, a: f64, b: f64) -> Grid {
        build_grid(GridSpec::Line { h, x_min: a, x_max: b }).unwrap()
    }

    fn soliton(g: Grid) -> ScalarField {
        let sech = |x: f64| 1.0 / x.cosh();
        ScalarField::from_fn(g, g.interior_mask(), |_, x| 2f64.sqrt() * sech(x)).unwrap()
    }

    fn axial_bump(h: f64) -> ScalarField {
        let g = build_grid(GridSpec::Axial { hs: h, hz: h, s_max: 6.0, z_min: -6.0, z_max: 6.0, dim: 3 }).unwrap();
        ScalarField::from_fn(g, g.interior_mask(), |s, z| (-(s * s + 0.7 * (z - 0.3) * (z - 0.3))).exp() * (1.0 + 0.2 * z))
            .unwrap()
    }

    #[test]
    fn energy_basics() {
        let g = line(0.05, -20.0, 20.0);
        assert_eq!(energy(&ScalarField::zeros(g, g.interior_mask())).unwrap(), 0.0);
        let w = soliton(g);
        let e = energy(&w).unwrap();
        assert!((e - 16.0 / 3.0).abs() < 1e-3, "{e}");
        let e2 = energy(&w.scaled(2.0)).unwrap();
        assert!((e2 - 4.0 * e).abs() <= 1e-14 * e2);
    }

    #[test]
    fn lp_norms() {
        let g = line(0.05, -20.0, 20.0);
        assert_eq!(lp_norm(&ScalarField::zeros(g, g.full_mask()), 4.0).unwrap(), 0.0);
        let w = soliton(g);
        let n = lp_norm(&w, 4.0).unwrap();
        assert!((n - (16.0f64 / 3.0).powf(0.25)).abs() < 1e-3);

        // constant 2 on a region of measure 8
        let g = line(0.5, 0.0, 8.0);
        let c = ScalarField::from_fn(g, g.full_mask(), |_, _| 2.0).unwrap();
        assert!((lp_norm(&c, 4.0).unwrap() - 2.0 * 8f64.powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn normalize_soliton() {
        let g = line(0.05, -20.0, 20.0);
        let w = soliton(g);
        let u = normalize(&w, 4.0).unwrap();
        assert!((lp_norm(&u, 4.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((energy(&u).unwrap() - 4.0 / 3f64.sqrt()).abs() < 1e-3);
        let u3 = normalize(&w.scaled(3.0), 4.0).unwrap();
        assert!(u3.max_diff(&u) < 1e-12);
        assert!(normalize(&u, 4.0).unwrap().max_diff(&u) < 1e-12);
        assert!(matches!(
            normalize(&ScalarField::zeros(g, g.full_mask()), 4.0),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn operator_eigenfunction() {
        let l = 3.0;
        for h in [0.02, 0.01] {
            let g = line(h, 0.0, l);
            let u = ScalarField::from_fn(g, g.interior_mask(), |_, x| (PI * x / l).sin()).unwrap();
            let au = apply_operator(&u).unwrap();
            let lam = PI * PI / (l * l) + 1.0;
            let err = au.values().iter().zip(u.values()).map(|(a, b)| (a - lam * b).abs()).fold(0.0, f64::max);
            // second order: |err| ≈ (π/L)^4 h² / 12
            assert!(err < (PI / l).powi(4) * h * h / 12.0 * 1.1, "h={h} err={err}");
        }
    }

    #[test]
    fn axis_rule_matches_regularized_laplacian() {
        // u = exp(-(s² + z²)) in N = 3: Δu = (4r² - 6) u
        let h = 0.02;
        let g = build_grid(GridSpec::Axial { hs: h, hz: h, s_max: 5.0, z_min: -5.0, z_max: 5.0, dim: 3 }).unwrap();
        let u = ScalarField::from_fn(g, g.interior_mask(), |s, z| (-(s * s + z * z)).exp()).unwrap();
        let au = apply_operator(&u).unwrap();
        for (i, j) in [(0, 250), (0, 230), (1, 250), (20, 260), (60, 200)] {
            let (s, z) = (g.s(i), g.z(j));
            let r2 = s * s + z * z;
            let exact = (1.0 - (4.0 * r2 - 6.0)) * (-r2).exp();
            assert!((au.at(i, j) - exact).abs() < 1e-2 * 6.0 * h * h * 100.0, "({i},{j})");
        }
    }

    #[test]
    fn linearity_of_operator() {
        let u = axial_bump(0.2);
        let v = ScalarField::from_fn(*u.grid(), u.mask().to_vec(), |s, z| (s - z).sin() * (-(s * s + z * z) / 4.0).exp()).unwrap();
        let lhs = apply_operator(&u.scaled(2.0).add_scaled(&v, -3.0).unwrap()).unwrap();
        let rhs = apply_operator(&u).unwrap().scaled(2.0).add_scaled(&apply_operator(&v).unwrap(), -3.0).unwrap();
        assert!(lhs.max_diff(&rhs) < 1e-10 * rhs.max_abs());
    }

    #[test]
    fn solve_linear_cases() {
        let l = 3.0;
        let g = line(0.01, 0.0, l);
        let u = ScalarField::from_fn(g, g.interior_mask(), |_, x| (PI * x / l).sin()).unwrap();
        assert_eq!(solve_linear(&u, 0.0).unwrap(), u);
        let shift = 0.7;
        let x = solve_linear(&u, shift).unwrap();
        let lam = PI * PI / (l * l) + 1.0;
        let expect = u.scaled(1.0 / (1.0 + shift * lam));
        assert!(x.max_diff(&expect) < 1e-4);
        assert!(solve_linear(&u, -1.0).is_err());
    }

    #[test]
    fn solve_linear_residual_random_rhs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let u = axial_bump(0.1);
        let rhs = u.with_values(u.values().iter().map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let op = Operator::for_field(&rhs).unwrap();
        let shift = 5.0;
        let x = op.solve_linear(&rhs, shift).unwrap();
        let ax = op.apply(&x).unwrap();
        let w = op.weights();
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..x.values().len() {
            if op.active()[k] {
                let r = x.values()[k] + shift * ax.values()[k] - rhs.values()[k];
                num += w[k] * r * r;
                den += w[k] * rhs.values()[k].powi(2);
            }
        }
        assert!((num / den).sqrt() <= 1.5e-10);
    }

    #[test]
    fn direct_solve_on_one_dimensional_grids() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let grids = [
            build_grid(GridSpec::Line { h: 0.1, x_min: -5.0, x_max: 5.0 }).unwrap(),
            build_grid(GridSpec::Radial { h: 0.1, r_max: 5.0, dim: 3 }).unwrap(),
        ];
        for g in grids {
            // a hole in the mask splits the chain
            let mut mask = g.interior_mask();
            mask[20] = false;
            let rhs = ScalarField::from_fn(g, mask, |_, _| rng.gen_range(-1.0..1.0)).unwrap();
            let op = Operator::for_field(&rhs).unwrap();
            let x = op.solve_linear(&rhs, 3.0).unwrap();
            let ax = op.apply(&x).unwrap();
            for k in 0..g.len() {
                if op.active()[k] {
                    let r = x.values()[k] + 3.0 * ax.values()[k] - rhs.values()[k];
                    assert!(r.abs() < 1e-12, "{r}");
                } else {
                    assert_eq!(x.values()[k], 0.0);
                }
            }
        }
    }

    #[test]
    fn tangency_and_directional_derivative() {
        let p = 4.0;
        let u = normalize(&axial_bump(0.2), p).unwrap();
        let op = Operator::for_field(&u).unwrap();
        let pg = op.projected_gradient(&u, p).unwrap();
        let f: Vec<f64> = u.values().iter().map(|x| p * x.abs().powf(p - 2.0) * x).collect();
        let t = op.solve(&u.with_values(f).unwrap(), 0.0, 1.0).unwrap();
        let gt = op.h1_inner(&pg.gradient, &t).unwrap();
        let scale = op.h1_inner(&t, &t).unwrap().sqrt() * pg.norm;
        assert!(gt.abs() < 1e-10 * scale.max(1.0), "{gt}");

        // tangent direction d: finite difference of E along the retraction
        let raw = ScalarField::from_fn(*u.grid(), u.mask().to_vec(), |s, z| z * (-(s * s + z * z) / 3.0).exp()).unwrap();
        let c = op.h1_inner(&raw, &t).unwrap() / op.h1_inner(&t, &t).unwrap();
        let d = raw.add_scaled(&t, -c).unwrap();
        let eps = 1e-5;
        let e_at = |s: f64| energy(&normalize(&u.add_scaled(&d, s).unwrap(), p).unwrap()).unwrap();
        let fd = (e_at(eps) - e_at(-eps)) / (2.0 * eps);
        let inner = op.h1_inner(&pg.gradient, &d).unwrap();
        assert!((fd - inner).abs() < 1e-6 * inner.abs().max(1.0), "fd={fd} inner={inner}");
    }

    #[test]
    fn constraint_drift_rejected() {
        let u = normalize(&axial_bump(0.3), 4.0).unwrap();
        assert!(matches!(projected_gradient(&u.scaled(1.01), 4.0), Err(Error::ConstraintDrift { .. })));
    }

    #[test]
    fn projected_gradient_preserves_z_parity() {
        let g = build_grid(GridSpec::Axial { hs: 0.2, hz: 0.2, s_max: 5.0, z_min: -5.0, z_max: 5.0, dim: 3 }).unwrap();
        let u = ScalarField::from_fn(g, g.interior_mask(), |s, z| (-(s * s) - 0.5 * z * z).exp() * (1.0 + 0.1 * z * z)).unwrap();
        let u = normalize(&u, 4.0).unwrap();
        let pg = projected_gradient(&u, 4.0).unwrap();
        let nz = g.nz();
        for i in 0..g.ns() {
            for j in 0..nz {
                let a = pg.gradient.at(i, j);
                let b = pg.gradient.at(i, nz - 1 - j);
                assert!((a - b).abs() < 1e-8 * pg.norm.max(1.0));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn tangency_holds_for_random_fields(a in 0.3f64..2.0, b in 0.3f64..2.0, c in -1.0f64..1.0) {
            let g = build_grid(GridSpec::Axial { hs: 0.25, hz: 0.25, s_max: 5.0, z_min: -5.0, z_max: 5.0, dim: 3 }).unwrap();
            let u = ScalarField::from_fn(g, g.interior_mask(), |s, z| (-(a * s * s + b * (z - c).powi(2))).exp()).unwrap();
            let p = 4.0;
            let u = normalize(&u, p).unwrap();
            let op = Operator::for_field(&u).unwrap();
            let pg = op.projected_gradient(&u, p).unwrap();
            let f: Vec<f64> = u.values().iter().map(|x| p * x.abs().powf(p - 2.0) * x).collect();
            let t = op.solve(&u.with_values(f).unwrap(), 0.0, 1.0).unwrap();
            let gt = op.h1_inner(&pg.gradient, &t).unwrap();
            let scale = op.h1_inner(&t, &t).unwrap().sqrt() * pg.norm;
            prop_assert!(gt.abs() <= 1e-10 * scale.max(1.0));
        }
    }
}
