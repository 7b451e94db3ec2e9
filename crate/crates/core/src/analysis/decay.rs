use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

/// Fit of `ω(ρ) ~ d ρ^{−(N−1)/2} e^{−ρ}` and of the same law for `|ω′|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub d_value: f64,
    pub d_grad: f64,
    pub window: (f64, f64),
    /// Largest relative deviation of the pointwise constant from `d_value`.
    pub residual: f64,
    /// Same for `d_grad`.
    pub residual_grad: f64,
}

pub const DECAY_HEADER: &str = "window_min,window_max,d_value,d_grad,residual";

impl DecayFit {
    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.window.0, self.window.1, self.d_value, self.d_grad, self.residual
        )
    }

    pub fn relative_gap(&self) -> f64 {
        (self.d_value - self.d_grad).abs() / self.d_value
    }
}

/// Default window `[0.4 R, 0.7 R]` for a radial grid reaching `R`.
pub fn default_window(grid: &Grid) -> (f64, f64) {
    let r = grid.s_max();
    (0.4 * r, 0.7 * r)
}

/// Least-squares constant of `log ω + ρ + ((N−1)/2) log ρ` over the window
/// (its mean), and likewise for `|ω′|` from centred differences at midpoints.
pub fn decay_fit(omega: &ScalarField, window: Option<(f64, f64)>) -> Result<DecayFit> {
    let g = omega.grid();
    let Grid::Radial(rg) = g else {
        return Err(Error::InvalidParameter("decay fit needs a radial field".into()));
    };
    let (lo, hi) = window.unwrap_or_else(|| default_window(g));
    if !(0.0 < lo && lo < hi && hi < g.s_max()) {
        return Err(Error::Window(format!("[{lo}, {hi}] not inside (0, {})", g.s_max())));
    }
    let k = 0.5 * (rg.dim - 1) as f64;
    let h = rg.h;
    let v = omega.values();
    let law = |rho: f64, x: f64| x.ln() + rho + k * rho.ln();

    let mut vals = Vec::new();
    let mut grads = Vec::new();
    for i in 0..rg.n - 1 {
        let rho = g.s(i);
        if lo <= rho && rho <= hi {
            if !(v[i] > 0.0) {
                return Err(Error::Window(format!("field not positive at ρ = {rho}")));
            }
            vals.push(law(rho, v[i]));
        }
        let mid = rho + 0.5 * h;
        if lo <= mid && mid <= hi {
            let d = (v[i] - v[i + 1]).abs() / h;
            if !(d > 0.0) {
                return Err(Error::Window(format!("flat field at ρ = {mid}")));
            }
            grads.push(law(mid, d));
        }
    }
    if vals.len() < 3 || grads.len() < 3 {
        return Err(Error::Window(format!("[{lo}, {hi}] holds fewer than 3 nodes")));
    }
    let fit = |xs: &[f64]| {
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let d = mean.exp();
        let res = xs.iter().map(|x| ((x - mean).exp() - 1.0).abs()).fold(0.0, f64::max);
        (d, res)
    };
    let (d_value, residual) = fit(&vals);
    let (d_grad, residual_grad) = fit(&grads);
    Ok(DecayFit { d_value, d_grad, window: (lo, hi), residual, residual_grad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridSpec};

    #[test]
    fn exact_yukawa_tail() {
        // e^{−ρ}/ρ solves the linear tail equation in three dimensions
        let g = build_grid(GridSpec::Radial { h: 0.01, r_max: 30.0, dim: 3 }).unwrap();
        let f = ScalarField::from_fn(g, g.full_mask(), |r, _| 2.5 * (-r).exp() / r.max(1e-3)).unwrap();
        let fit = decay_fit(&f, None).unwrap();
        assert!((fit.d_value - 2.5).abs() < 1e-9);
        assert!(fit.residual < 1e-9);
        // |ω′| carries the extra factor 1 + 1/ρ
        assert!(fit.d_grad > fit.d_value && fit.relative_gap() < 0.1);
        assert_eq!(fit.window, (12.0, 21.0));
    }

    #[test]
    fn window_errors() {
        let g = build_grid(GridSpec::Radial { h: 0.1, r_max: 10.0, dim: 3 }).unwrap();
        let f = ScalarField::from_fn(g, g.interior_mask(), |r, _| (-r).exp()).unwrap();
        assert!(matches!(decay_fit(&f, Some((5.0, 12.0))), Err(Error::Window(_))));
        assert!(matches!(decay_fit(&f, Some((5.0, 5.1))), Err(Error::Window(_))));
        let z = ScalarField::zeros(g, g.full_mask());
        assert!(matches!(decay_fit(&z, Some((2.0, 6.0))), Err(Error::Window(_))));
        let a = build_grid(GridSpec::Line { h: 0.1, x_min: -1.0, x_max: 1.0 }).unwrap();
        assert!(decay_fit(&ScalarField::zeros(a, a.full_mask()), None).is_err());
    }
}
