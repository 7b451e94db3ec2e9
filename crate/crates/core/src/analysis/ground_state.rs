use crate::domains::{build_mask, Domain, DomainKind, DomainSpec};
use crate::error::{Error, Result};
use crate::flow::{Flow, FlowConfig, FlowRun, Termination};
use crate::grid::{build_grid, Grid, GridSpec, ScalarField};

/// Minimizer found by the flow together with its diagnostics.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub field: ScalarField,
    pub energy: f64,
    pub multiplier: f64,
    pub pg_norm: f64,
    pub beta_z: f64,
    pub iters: usize,
    pub run: FlowRun,
}

impl GroundState {
    pub fn converged(&self) -> bool {
        self.run.converged()
    }

    /// Turns a budget exhaustion or stagnation into an error.
    pub fn require_converged(self) -> Result<Self> {
        match self.run.termination {
            Termination::Converged => Ok(self),
            Termination::Stagnated { dt_min } => Err(Error::Stagnation {
                iter: self.iters,
                dt_min,
                energy: self.energy,
                pg_norm: self.pg_norm,
            }),
            Termination::Budget => Err(Error::Stagnation {
                iter: self.iters,
                dt_min: 0.0,
                energy: self.energy,
                pg_norm: self.pg_norm,
            }),
        }
    }
}

/// Axial point the default seed is centred on.
pub fn default_center(domain: &Domain) -> f64 {
    let g = &domain.grid;
    let (lo, hi) = match g {
        Grid::Radial(_) => return 0.0,
        _ => g.z_range(),
    };
    let inside = |z: f64| lo < z && z < hi;
    match &domain.spec.kind {
        DomainKind::HalfSpace => (-1.5f64).max(0.5 * lo),
        DomainKind::Staircase { .. } => domain
            .anchors
            .as_ref()
            .and_then(|a| a.strips.iter().max_by(|x, y| x.width.total_cmp(&y.width)).map(|s| s.mid))
            .unwrap_or(0.0),
        _ if inside(0.0) => 0.0,
        _ => 0.5 * (lo + hi),
    }
}

/// `e^{−|x − c|}` restricted to the domain.
pub fn default_seed(domain: &Domain) -> Result<ScalarField> {
    let c = default_center(domain);
    let radial = matches!(domain.grid, Grid::Radial(_));
    ScalarField::from_fn(domain.grid, domain.mask.clone(), |s, z| {
        let r = if radial { s } else { s.hypot(z - c) };
        (-r).exp()
    })
}

pub fn ground_state_from(seed: &ScalarField, p: f64, cfg: &FlowConfig) -> Result<GroundState> {
    let flow = Flow::for_field(seed, p, *cfg)?;
    let run = flow.run(seed)?;
    let s = &run.state;
    Ok(GroundState {
        field: s.u.clone(),
        energy: s.energy,
        multiplier: s.multiplier,
        pg_norm: s.pg_norm,
        beta_z: s.barycenter_z,
        iters: s.iter,
        run,
    })
}

/// Runs the flow from [`default_seed`].
pub fn ground_state(domain: &Domain, p: f64, cfg: &FlowConfig) -> Result<GroundState> {
    ground_state_from(&default_seed(domain)?, p, cfg)
}

/// Builds the grid and the domain, then calls [`ground_state`].
pub fn ground_state_on(spec: &DomainSpec, grid: GridSpec, p: f64, cfg: &FlowConfig) -> Result<GroundState> {
    let grid = build_grid(grid)?;
    ground_state(&build_mask(spec, &grid)?, p, cfg)
}

/// Radial grid for the whole-space surrogate in dimension `dim`.
pub fn whole_space_radial(h: f64, radius: f64, dim: usize) -> GridSpec {
    GridSpec::Radial { h, r_max: radius, dim }
}

/// Axial box `[0, radius] × [−radius, radius]`.
pub fn whole_space_axial(h: f64, radius: f64, dim: usize) -> GridSpec {
    GridSpec::Axial { hs: h, hz: h, s_max: radius, z_min: -radius, z_max: radius, dim }
}

/// Lateral decay rate `sqrt(1 + π²/q²)` of the first strip mode.
pub fn strip_decay_rate(q: f64) -> f64 {
    (1.0 + (std::f64::consts::PI / q).powi(2)).sqrt()
}

/// Axial grid for `strip(q)`: the strip faces sit on nodes, the lateral
/// extent covers `depth` decay lengths, and spacing is `min(h, q/16)`.
pub fn strip_grid(q: f64, h: f64, depth: f64, dim: usize) -> GridSpec {
    let cells = (q / h.min(q / 16.0)).ceil();
    let hz = q / cells;
    GridSpec::Axial {
        hs: hz,
        hz,
        s_max: depth / strip_decay_rate(q),
        z_min: -0.5 * q,
        z_max: 0.5 * q,
        dim,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::lp_norm;

    #[test]
    fn line_soliton() {
        let spec = GridSpec::Line { h: 0.05, x_min: -20.0, x_max: 20.0 };
        let gs = ground_state_on(&DomainSpec::whole_space(), spec, 4.0, &FlowConfig::default()).unwrap();
        assert!(gs.converged());
        assert!((gs.energy - 4.0 / 3f64.sqrt()).abs() < 1e-3);
        let exact = ScalarField::from_fn(*gs.field.grid(), gs.field.mask().to_vec(), |_, x| 2f64.sqrt() / x.cosh()).unwrap();
        let norm = lp_norm(&exact, 4.0).unwrap();
        assert!(gs.field.max_diff(&exact.scaled(1.0 / norm)) < 1e-3);
        assert!((gs.multiplier - gs.energy).abs() < 1e-5);
    }

    #[test]
    fn strip_grid_puts_faces_on_nodes() {
        let g = build_grid(strip_grid(0.25, 0.1, 14.0, 3)).unwrap();
        let (lo, hi) = g.z_range();
        assert!((lo + 0.125).abs() < 1e-12 && (hi - 0.125).abs() < 1e-12);
        assert!((g.hz() - 0.25 / 16.0).abs() < 1e-15);
        let g = build_grid(strip_grid(8.0, 0.1, 14.0, 3)).unwrap();
        assert!((g.hz() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn seed_centres() {
        let g = build_grid(GridSpec::Axial { hs: 0.25, hz: 0.25, s_max: 5.0, z_min: -3.0, z_max: 16.0, dim: 3 }).unwrap();
        let d = build_mask(&DomainSpec::staircase(vec![1.0, 3.0, 8.0]), &g).unwrap();
        assert_eq!(default_center(&d), 9.5);
        let h = build_mask(&DomainSpec::half_space(), &g).unwrap();
        assert_eq!(default_center(&h), -1.5);
        assert!(!default_seed(&h).unwrap().is_zero());
    }
}
