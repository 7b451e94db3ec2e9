//! Radial shooting for `ω″ + ((N−1)/ρ) ω′ − ω + |ω|^{p−2} ω = 0`, `ω′(0) = 0`.
//!
//! Bisection on `ω(0)`: too large a start crosses zero, too small a start
//! turns back up before decaying. The bracketed limit is the positive
//! decaying solution, independent of the grid-based flow solver.

use crate::error::{Error, Result};
use crate::grid::unit_sphere_area;

#[derive(Clone, Copy, Debug)]
pub struct ShootingConfig {
    pub dim: usize,
    pub p: f64,
    pub step: f64,
    pub rho_max: f64,
    pub bracket: (f64, f64),
    pub bisections: usize,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self { dim: 3, p: 4.0, step: 1e-3, rho_max: 40.0, bracket: (0.5, 20.0), bisections: 80 }
    }
}

#[derive(Clone, Debug)]
pub struct ShootingSolution {
    /// `ω(0)`.
    pub center: f64,
    pub rho: Vec<f64>,
    pub omega: Vec<f64>,
    pub domega: Vec<f64>,
    /// `‖ω‖²` over the trusted range.
    pub norm_sq: f64,
    /// `|ω|_p^p` over the trusted range.
    pub lp_pow: f64,
    /// `‖ω‖² / |ω|_p²`.
    pub m: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Fate {
    Overshoot,
    Undershoot,
    Undecided,
}

struct Ode {
    k: f64,
    p: f64,
}

impl Ode {
    fn rhs(&self, r: f64, y: [f64; 2]) -> [f64; 2] {
        let [w, dw] = y;
        [dw, -self.k / r * dw + w - w.abs().powf(self.p - 2.0) * w]
    }

    fn rk4(&self, r: f64, y: [f64; 2], h: f64) -> [f64; 2] {
        let add = |a: [f64; 2], b: [f64; 2], c: f64| [a[0] + c * b[0], a[1] + c * b[1]];
        let k1 = self.rhs(r, y);
        let k2 = self.rhs(r + 0.5 * h, add(y, k1, 0.5 * h));
        let k3 = self.rhs(r + 0.5 * h, add(y, k2, 0.5 * h));
        let k4 = self.rhs(r + h, add(y, k3, h));
        [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    }
}

/// Integrates from `ω(0) = a` until the fate is clear; returns the trajectory
/// up to that point.
fn shoot(cfg: &ShootingConfig, a: f64) -> (Fate, Vec<f64>, Vec<f64>, Vec<f64>) {
    let ode = Ode { k: (cfg.dim - 1) as f64, p: cfg.p };
    let h = cfg.step;
    // series start away from the singular point
    let n = cfg.dim as f64;
    let c = (a - a.abs().powf(cfg.p - 2.0) * a) / (2.0 * n);
    let mut r = h;
    let mut y = [a + c * h * h, 2.0 * c * h];
    let (mut rs, mut ws, mut dws) = (vec![0.0, r], vec![a, y[0]], vec![0.0, y[1]]);
    let mut fate = Fate::Undecided;
    while r < cfg.rho_max {
        y = ode.rk4(r, y, h);
        r += h;
        if y[0] < 0.0 {
            fate = Fate::Overshoot;
            break;
        }
        if y[1] > 0.0 {
            fate = Fate::Undershoot;
            break;
        }
        rs.push(r);
        ws.push(y[0]);
        dws.push(y[1]);
    }
    (fate, rs, ws, dws)
}

pub fn shooting_ground_state(cfg: &ShootingConfig) -> Result<ShootingSolution> {
    if cfg.dim < 2 || !(cfg.p > 2.0) || !(cfg.step > 0.0) {
        return Err(Error::InvalidParameter(format!("bad shooting config {cfg:?}")));
    }
    let (mut lo, mut hi) = cfg.bracket;
    if shoot(cfg, lo).0 != Fate::Undershoot || shoot(cfg, hi).0 != Fate::Overshoot {
        return Err(Error::InvalidParameter(format!("bracket {:?} does not straddle the ground state", cfg.bracket)));
    }
    for _ in 0..cfg.bisections {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(cfg, mid).0 {
            Fate::Overshoot => hi = mid,
            _ => lo = mid,
        }
    }
    let a = 0.5 * (lo + hi);
    let (_, rho, omega, domega) = shoot(cfg, a);
    let sigma = unit_sphere_area(cfg.dim - 1);
    let k = (cfg.dim - 1) as i32;
    let trap = |f: &dyn Fn(usize) -> f64| -> f64 {
        (1..rho.len()).map(|i| 0.5 * (rho[i] - rho[i - 1]) * (f(i) + f(i - 1))).sum::<f64>() * sigma
    };
    let norm_sq = trap(&|i| (domega[i].powi(2) + omega[i].powi(2)) * rho[i].powi(k));
    let lp_pow = trap(&|i| omega[i].powf(cfg.p) * rho[i].powi(k));
    let m = norm_sq / lp_pow.powf(2.0 / cfg.p);
    Ok(ShootingSolution { center: a, rho, omega, domega, norm_sq, lp_pow, m })
}

impl ShootingSolution {
    /// Linear interpolation of `ω`; zero beyond the trusted range.
    pub fn eval(&self, r: f64) -> f64 {
        match self.rho.iter().position(|&x| x > r) {
            Some(0) => self.omega[0],
            Some(i) => {
                let f = (r - self.rho[i - 1]) / (self.rho[i] - self.rho[i - 1]);
                (1.0 - f) * self.omega[i - 1] + f * self.omega[i]
            }
            None => 0.0,
        }
    }

    /// Largest radius the profile is trusted to.
    pub fn reach(&self) -> f64 {
        *self.rho.last().unwrap_or(&0.0)
    }
}
