//! Test functions: cut-off ground-state seeds, axial translates and two-bump superpositions.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::functional::{lp_norm, normalize};
use crate::grid::{compensated_sum, Grid, ScalarField};

/// Non-increasing cut-off `φ`: 1 on `[0, 1/4]`, 0 on `[1/2, ∞)`, joined by a
/// C¹ cosine ramp. `φ_R(x) = φ(|x| / R)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffProfile {
    pub radius: f64,
}

impl CutoffProfile {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("cut-off scale must be positive, got {radius}")));
        }
        Ok(Self { radius })
    }

    pub fn phi(t: f64) -> f64 {
        if t <= 0.25 {
            1.0
        } else if t >= 0.5 {
            0.0
        } else {
            0.5 * (1.0 + (4.0 * PI * (t - 0.25)).cos())
        }
    }

    /// `φ(r / R)`.
    pub fn eval(&self, r: f64) -> f64 {
        Self::phi(r / self.radius)
    }

    /// Radius of the support ball.
    pub fn support_radius(&self) -> f64 {
        0.5 * self.radius
    }
}

fn omega_reach(omega: &ScalarField) -> f64 {
    let g = omega.grid();
    match g {
        Grid::Radial(_) => g.s_max(),
        Grid::Line(_) => {
            let (a, b) = g.z_range();
            a.abs().min(b.abs())
        }
        Grid::Axial(_) => {
            let (a, b) = g.z_range();
            g.s_max().min(a.abs()).min(b.abs())
        }
    }
}

/// `φ_R(x − c) ω(x − c) / |φ_R ω|_p` on the target grid and mask, with
/// `c = (0, …, 0, center_z)`. `omega` is a ground state centred at the origin
/// of its own grid (radial, axial or line) and is sampled by interpolation.
pub fn cutoff_seed(
    omega: &ScalarField,
    radius: f64,
    center_z: f64,
    p: f64,
    target: &Grid,
    mask: &[bool],
) -> Result<ScalarField> {
    let cut = CutoffProfile::new(radius)?;
    let reach = cut.support_radius();
    if omega_reach(omega) < reach {
        return Err(Error::Extent(format!(
            "ground state grid reaches {:.3}, cut-off support needs {reach:.3}",
            omega_reach(omega)
        )));
    }
    let (z_lo, z_hi) = target.z_range();
    let s_ok = matches!(target, Grid::Line(_)) || target.s_max() >= reach;
    let z_ok = matches!(target, Grid::Radial(_)) || (center_z - reach >= z_lo && center_z + reach <= z_hi);
    if !z_ok || !s_ok {
        return Err(Error::Extent(format!(
            "cut-off ball of radius {reach} around z = {center_z} leaves the grid"
        )));
    }
    if matches!(target, Grid::Radial(_)) && center_z != 0.0 {
        return Err(Error::InvalidParameter("radial grids only hold centred seeds".into()));
    }
    let radial_omega = matches!(omega.grid(), Grid::Radial(_));
    let seed = ScalarField::from_fn(*target, mask.to_vec(), |s, z| {
        let dz = z - center_z;
        let r = s.hypot(dz);
        let phi = cut.eval(r);
        if phi == 0.0 {
            return 0.0;
        }
        let w = if radial_omega { omega.sample(r, 0.0) } else { omega.sample(s, dz) };
        phi * w
    })?;
    normalize(&seed, p)
}

/// Result of [`translate_z`].
#[derive(Clone, Debug)]
pub struct Shifted {
    pub field: ScalarField,
    /// False when `dz` is not a multiple of `hz` and values were interpolated.
    pub grid_exact: bool,
}

/// `u(s, z − dz)`, zero-filled at the inflow end and zeroed outside the mask.
pub fn translate_z(u: &ScalarField, dz: f64) -> Result<Shifted> {
    let g = u.grid();
    if matches!(g, Grid::Radial(_)) {
        return Err(Error::InvalidParameter("radial fields have no axial direction".into()));
    }
    let hz = g.hz();
    let cells = dz / hz;
    let k = cells.round();
    let grid_exact = (cells - k).abs() < 1e-9;
    let (ns, nz) = (g.ns(), g.nz());
    let src = u.values();
    let mut out = vec![0.0; g.len()];
    if grid_exact {
        let k = k as i64;
        for i in 0..ns {
            for j in 0..nz {
                let from = j as i64 - k;
                if from >= 0 && (from as usize) < nz {
                    out[i * nz + j] = src[i * nz + from as usize];
                }
            }
        }
    } else {
        for i in 0..ns {
            for j in 0..nz {
                let t = j as f64 - cells;
                if t < 0.0 {
                    continue;
                }
                let j0 = t.floor() as usize;
                if j0 + 1 >= nz {
                    continue;
                }
                let f = t - j0 as f64;
                out[i * nz + j] = (1.0 - f) * src[i * nz + j0] + f * src[i * nz + j0 + 1];
            }
        }
    }
    Ok(Shifted {
        field: u.with_values(out)?,
        grid_exact,
    })
}

/// Normalized `u1 + u2(· − dz)` with an overlap diagnostic.
#[derive(Clone, Debug)]
pub struct TwoBump {
    pub field: ScalarField,
    /// `∫ min(|u1|, |u2|)^p / min(∫|u1|^p, ∫|u2|^p)` after the shift.
    pub overlap: f64,
    pub overlap_warning: bool,
}

pub const OVERLAP_WARNING: f64 = 1e-3;

pub fn two_bump(u1: &ScalarField, u2: &ScalarField, dz: f64, p: f64) -> Result<TwoBump> {
    if u1.grid() != u2.grid() {
        return Err(Error::Shape("two_bump needs fields on one grid".into()));
    }
    let shifted = translate_z(u2, dz)?.field;
    let g = u1.grid();
    let nz = g.nz();
    let w = |k: usize| g.node_weight(k / nz, k % nz);
    let common = compensated_sum(
        u1.values()
            .iter()
            .zip(shifted.values())
            .enumerate()
            .map(|(k, (a, b))| w(k) * a.abs().min(b.abs()).powf(p)),
    );
    let m1 = lp_norm(u1, p)?.powf(p);
    let m2 = lp_norm(&shifted, p)?.powf(p);
    let denom = m1.min(m2);
    let overlap = if denom > 0.0 { common / denom } else { 0.0 };
    let sum = u1.add_scaled(&shifted, 1.0)?;
    Ok(TwoBump {
        field: normalize(&sum, p)?,
        overlap,
        overlap_warning: overlap > OVERLAP_WARNING,
    })
}
