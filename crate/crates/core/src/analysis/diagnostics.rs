//! Splitting diagnostics: Brezis–Lieb defect, unit-cell mass profile with an
//! empirical embedding constant, sign changes and the norm lower bound.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::functional::{energy, lp_norm};
use crate::grid::{compensated_sum, Grid, ScalarField};

/// `| |u − u0|_p^p − (|u|_p^p − |u0|_p^p) |`.
pub fn brezis_lieb_defect(u: &ScalarField, u0: &ScalarField, p: f64) -> Result<f64> {
    if u.grid() != u0.grid() {
        return Err(Error::Shape("Brezis-Lieb defect needs fields on one grid".into()));
    }
    let g = u.grid();
    let nz = g.nz();
    let (a, b) = (u.values(), u0.values());
    let terms = (0..g.len()).map(|k| {
        let w = g.node_weight(k / nz, k % nz);
        w * ((a[k] - b[k]).abs().powf(p) - a[k].abs().powf(p) + b[k].abs().powf(p))
    });
    Ok(compensated_sum(terms).abs())
}

/// Index of the unit cell holding node `(i, j)`: an `s`-annulus (or radial
/// shell) times a `z`-slab.
fn cell_of(g: &Grid, i: usize, j: usize) -> (i64, i64) {
    match g {
        Grid::Line(_) => (0, g.z(j).floor() as i64),
        Grid::Radial(_) => (g.s(i).floor() as i64, 0),
        Grid::Axial(_) => (g.s(i).floor() as i64, g.z(j).floor() as i64),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellMass {
    pub s_cell: i64,
    pub z_cell: i64,
    /// `∫_cell |u|^p`.
    pub mass: f64,
    /// Share of `‖u‖²` carried by the cell (half of each crossing edge).
    pub h1: f64,
}

#[derive(Clone, Debug)]
pub struct CubeProfile {
    pub cells: Vec<CellMass>,
    /// `max_cell (∫_cell |u|^p)^{1/p}`.
    pub d_max: f64,
}

impl CubeProfile {
    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.cells.iter().map(|c| c.mass))
    }

    pub fn total_h1(&self) -> f64 {
        compensated_sum(self.cells.iter().map(|c| c.h1))
    }
}

fn split_by_cells(u: &ScalarField, p: f64) -> BTreeMap<(i64, i64), (Vec<f64>, Vec<f64>)> {
    let g = u.grid();
    let (ns, nz) = (g.ns(), g.nz());
    let v = u.values();
    let mut cells: BTreeMap<(i64, i64), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut add = |key: (i64, i64), mass: f64, h1: f64| {
        let e = cells.entry(key).or_default();
        e.0.push(mass);
        e.1.push(h1);
    };
    for i in 0..ns {
        let cz = g.z_edge(i);
        let cs = if i + 1 < ns { g.s_edge(i) } else { 0.0 };
        for j in 0..nz {
            let k = i * nz + j;
            let w = g.node_weight(i, j);
            let here = cell_of(g, i, j);
            add(here, w * v[k].abs().powf(p), w * v[k] * v[k]);
            if j + 1 < nz && nz > 1 {
                let t = 0.5 * cz * (v[k + 1] - v[k]).powi(2);
                add(here, 0.0, t);
                add(cell_of(g, i, j + 1), 0.0, t);
            }
            if i + 1 < ns {
                let t = 0.5 * cs * (v[k + nz] - v[k]).powi(2);
                add(here, 0.0, t);
                add(cell_of(g, i + 1, j), 0.0, t);
            }
        }
    }
    cells
}

/// `L^p` mass and `H¹` share of every unit cell the grid touches.
pub fn cube_mass_profile(u: &ScalarField, p: f64) -> Result<CubeProfile> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("exponent must be >= 1, got {p}")));
    }
    let cells: Vec<CellMass> = split_by_cells(u, p)
        .into_iter()
        .map(|((s_cell, z_cell), (m, h))| CellMass { s_cell, z_cell, mass: compensated_sum(m), h1: compensated_sum(h) })
        .collect();
    let d_max = cells.iter().map(|c| c.mass.powf(1.0 / p)).fold(0.0, f64::max);
    Ok(CubeProfile { cells, d_max })
}

/// Largest observed `|v|²_{L^p(cell)} / ‖v‖²_{H¹(cell)}` over the cells where
/// `u` lives, for `v` ranging over `u` itself (with its energy share per
/// cell), its cut-off restrictions, constants, random affine profiles and
/// random node values supported in one cell.
pub fn embedding_constant(u: &ScalarField, p: f64, trials: usize, seed: u64) -> Result<f64> {
    let g = *u.grid();
    let nz = g.nz();
    let profile = cube_mass_profile(u, p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratio = |v: &ScalarField| -> Option<f64> {
        let prof = cube_mass_profile(v, p).ok()?;
        prof.cells
            .iter()
            .filter(|c| c.h1 > 0.0 && c.mass > 0.0)
            .map(|c| c.mass.powf(2.0 / p) / c.h1)
            .fold(None, |a: Option<f64>, r| Some(a.map_or(r, |x| x.max(r))))
    };
    // u itself, with its actual share of the energy in each cell
    let mut best = profile
        .cells
        .iter()
        .filter(|c| c.mass > 0.0 && c.h1 > 0.0)
        .map(|c| c.mass.powf(2.0 / p) / c.h1)
        .fold(0.0f64, f64::max);
    for cell in profile.cells.iter().filter(|c| c.mass > 0.0) {
        let key = (cell.s_cell, cell.z_cell);
        let inside: Vec<usize> = (0..g.len()).filter(|&k| cell_of(&g, k / nz, k % nz) == key).collect();
        let field = |f: &mut dyn FnMut(usize) -> f64| -> Result<ScalarField> {
            let mut vals = vec![0.0; g.len()];
            for &k in &inside {
                vals[k] = f(k);
            }
            ScalarField::new(g, vals, g.full_mask())
        };
        let mut candidates = vec![field(&mut |k| u.values()[k])?, field(&mut |_| 1.0)?];
        for _ in 0..trials {
            let (a, b, c) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            candidates.push(field(&mut |k| a + b * g.s(k / nz) + c * g.z(k % nz))?);
            let noise: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
            candidates.push(field(&mut |k| noise[k])?);
        }
        for v in &candidates {
            if let Some(r) = ratio(v) {
                best = best.max(r);
            }
        }
    }
    if best == 0.0 {
        return Err(Error::DegenerateInput("no cell carries mass".into()));
    }
    Ok(best)
}

/// Verdict of `d_max^{p−2} ≥ |u|_p^p / (s_emb ‖u‖²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MassLowerBound {
    pub d_max: f64,
    pub s_emb: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn mass_lower_bound(u: &ScalarField, p: f64, trials: usize, seed: u64) -> Result<MassLowerBound> {
    let d_max = cube_mass_profile(u, p)?.d_max;
    let s_emb = embedding_constant(u, p, trials, seed)?;
    let lhs = d_max.powf(p - 2.0);
    let rhs = lp_norm(u, p)?.powf(p) / (s_emb * energy(u)?);
    Ok(MassLowerBound { d_max, s_emb, lhs, rhs, holds: lhs >= rhs * (1.0 - 1e-12) })
}

pub const SIGN_EPS: f64 = 1e-6;

/// True iff `u` takes both signs beyond `ε max|u|`.
pub fn sign_change(u: &ScalarField) -> Result<bool> {
    let m = u.max_abs();
    if m == 0.0 {
        return Err(Error::DegenerateInput("sign of the zero field".into()));
    }
    Ok(u.min_value() < -SIGN_EPS * m && u.max_value() > SIGN_EPS * m)
}

/// `|u|_p ≥ (m/μ)^{1/(p−2)}` for a solution of `−Δu + u = μ|u|^{p−2}u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormBound {
    pub lp_norm: f64,
    pub bound: f64,
    /// `lp_norm / bound`; above 1 means the bound is strict.
    pub ratio: f64,
}

/// Rescales a normalized critical point with multiplier `lambda` to a
/// solution of the problem with coefficient `mu` and compares its norm with
/// `(m/μ)^{1/(p−2)}`.
pub fn norm_bound(lambda: f64, mu: f64, m: f64, p: f64) -> Result<NormBound> {
    if !(lambda > 0.0 && mu > 0.0 && m > 0.0 && p > 2.0) {
        return Err(Error::InvalidParameter("norm bound needs positive λ, μ, m and p > 2".into()));
    }
    let lp_norm = (lambda / mu).powf(1.0 / (p - 2.0));
    let bound = (m / mu).powf(1.0 / (p - 2.0));
    Ok(NormBound { lp_norm, bound, ratio: lp_norm / bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::normalize;
    use crate::grid::{build_grid, GridSpec};

    fn axial() -> Grid {
        build_grid(GridSpec::Axial { hs: 0.1, hz: 0.1, s_max: 6.0, z_min: -10.0, z_max: 10.0, dim: 3 }).unwrap()
    }

    fn bump(g: Grid, c: f64) -> ScalarField {
        ScalarField::from_fn(g, g.interior_mask(), |s, z| (-(s.hypot(z - c))).exp()).unwrap()
    }

    #[test]
    fn defect_cases() {
        let g = axial();
        let u = normalize(&bump(g, 0.0), 4.0).unwrap();
        let zero = ScalarField::zeros(g, g.full_mask());
        assert_eq!(brezis_lieb_defect(&u, &zero, 4.0).unwrap(), 0.0);
        let a = ScalarField::from_fn(g, g.interior_mask(), |s, z| if z < -1.0 && s < 2.0 { 1.0 } else { 0.0 }).unwrap();
        let b = ScalarField::from_fn(g, g.interior_mask(), |s, z| if z > 1.0 && s < 2.0 { 2.0 } else { 0.0 }).unwrap();
        assert_eq!(brezis_lieb_defect(&a.add_scaled(&b, 1.0).unwrap(), &b, 4.0).unwrap(), 0.0);
        let near = bump(g, 1.0);
        assert!(brezis_lieb_defect(&u.add_scaled(&near, 1.0).unwrap(), &near, 4.0).unwrap() > 1e-3);
    }

    #[test]
    fn single_cell_mass() {
        let g = axial();
        let v = ScalarField::from_fn(g, g.full_mask(), |s, z| if s < 0.95 && (2.05..2.95).contains(&z) { 1.0 } else { 0.0 })
            .unwrap();
        let target = 0.7f64;
        let v = v.scaled(target / lp_norm(&v, 4.0).unwrap());
        let prof = cube_mass_profile(&v, 4.0).unwrap();
        assert!((prof.d_max - target).abs() < 1e-12);
        assert_eq!(prof.cells.iter().filter(|c| c.mass > 0.0).count(), 1);
        let c = prof.cells.iter().find(|c| c.mass > 0.0).unwrap();
        assert_eq!((c.s_cell, c.z_cell), (0, 2));
    }

    #[test]
    fn additivity_and_energy_split() {
        let g = axial();
        let u = normalize(&bump(g, 0.3), 4.0).unwrap();
        let prof = cube_mass_profile(&u, 4.0).unwrap();
        assert!((prof.total_mass() - 1.0).abs() < 1e-10);
        assert!((prof.total_h1() - energy(&u).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn embedding_bound_holds() {
        let g = axial();
        let u = normalize(&bump(g, 0.0), 4.0).unwrap();
        let b = mass_lower_bound(&u, 4.0, 4, 0).unwrap();
        assert!(b.holds, "{b:?}");
        assert_eq!(b, mass_lower_bound(&u, 4.0, 4, 0).unwrap());
    }

    #[test]
    fn signs() {
        let g = axial();
        assert!(!sign_change(&bump(g, 0.0)).unwrap());
        assert!(!sign_change(&bump(g, 0.0).scaled(-1.0)).unwrap());
        let odd = ScalarField::from_fn(g, g.interior_mask(), |s, z| z * (-(s * s + z * z)).exp()).unwrap();
        assert!(sign_change(&odd).unwrap());
        assert!(matches!(sign_change(&ScalarField::zeros(g, g.full_mask())), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn norm_bound_matches_energy_ordering() {
        let b = norm_bound(9.0, 2.0, 8.7, 4.0).unwrap();
        assert!(b.ratio > 1.0);
        assert!((b.lp_norm - 4.5f64.sqrt()).abs() < 1e-14);
        assert!(norm_bound(8.0, 2.0, 8.7, 4.0).unwrap().ratio < 1.0);
        assert!(norm_bound(8.0, 0.0, 8.7, 4.0).is_err());
    }
}
