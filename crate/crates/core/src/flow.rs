//! Normalized steepest-descent flow on the constraint sphere `|u|_p = 1`.
//!
//! One step is semi-implicit in the linear part and explicit in the
//! nonlinearity, with the multiplier frozen at the current energy:
//!
//! ```text
//! u* = (I + dt (−Δ + 1))⁻¹ (u + dt E(u) |u|^{p−2} u),    u' = u* / |u*|_p
//! ```
//!
//! Its fixed points are exactly the constrained critical points. A step is
//! accepted only if it lowers the energy; otherwise `dt` is backtracked. The
//! continuous-time rescaling by `1/‖∇E‖²` is absorbed into the adaptive `dt`.

use crate::barycenter::MollifierKernel;
use crate::constructions::translate_z;
use crate::error::{Error, Result};
use crate::functional::Operator;
use crate::grid::ScalarField;

/// Relative energy increase tolerated for a translation, i.e. round-off.
const SLIDE_SLACK: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowConfig {
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Factor applied to `dt` after a rejected step, in `(0, 1)`.
    pub backtrack: f64,
    /// Factor applied to `dt` after an accepted step, `≥ 1`.
    pub growth: f64,
    /// Stopping threshold on the `H¹` norm of the projected gradient.
    pub pg_tol: f64,
    pub max_iter: usize,
    pub checkpoint_stride: usize,
    /// Grid cells an accepted step may additionally translate the field along
    /// the axis, following the barycenter; 0 disables.
    pub shift_cells: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt0: 1.0,
            dt_min: 1e-10,
            dt_max: 1e4,
            backtrack: 0.5,
            growth: 2.0,
            pg_tol: 1e-6,
            max_iter: 2000,
            checkpoint_stride: 1,
            shift_cells: 0,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 < self.dt_min
            && self.dt_min <= self.dt0
            && self.dt0 <= self.dt_max
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.growth >= 1.0
            && self.pg_tol > 0.0
            && self.checkpoint_stride > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("inconsistent flow config {self:?}")))
        }
    }
}

/// One point of the flow.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub u: ScalarField,
    /// Accumulated pseudo-time `Σ dt`.
    pub t: f64,
    pub energy: f64,
    pub multiplier: f64,
    pub pg_norm: f64,
    pub barycenter_z: f64,
    pub iter: usize,
    /// Step size the next step starts from.
    pub dt: f64,
    pub converged: bool,
}

/// Per-checkpoint summary, one CSV row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub iter: usize,
    pub t: f64,
    pub energy: f64,
    pub multiplier: f64,
    pub pg_norm: f64,
    pub barycenter_z: f64,
}

impl From<&FlowState> for TrajectoryPoint {
    fn from(s: &FlowState) -> Self {
        Self {
            iter: s.iter,
            t: s.t,
            energy: s.energy,
            multiplier: s.multiplier,
            pg_norm: s.pg_norm,
            barycenter_z: s.barycenter_z,
        }
    }
}

pub const TRAJECTORY_HEADER: &str = "iter,t,energy,multiplier,pg_norm,barycenter_z";

impl TrajectoryPoint {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.iter, self.t, self.energy, self.multiplier, self.pg_norm, self.barycenter_z
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    Converged,
    Budget,
    Stagnated { dt_min: f64 },
}

#[derive(Clone, Debug)]
pub struct FlowRun {
    pub state: FlowState,
    pub trajectory: Vec<TrajectoryPoint>,
    pub termination: Termination,
}

impl FlowRun {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Flow machinery bound to one grid, mask and exponent.
pub struct Flow {
    op: Operator,
    kernel: Option<MollifierKernel>,
    p: f64,
    cfg: FlowConfig,
}

impl Flow {
    pub fn new(op: Operator, p: f64, cfg: FlowConfig) -> Result<Self> {
        cfg.validate()?;
        if !(p > 2.0) {
            return Err(Error::InvalidParameter(format!("exponent p must exceed 2, got {p}")));
        }
        let kernel = MollifierKernel::for_grid(op.grid()).ok();
        Ok(Self { op, kernel, p, cfg })
    }

    /// Flow on the grid and mask of `seed`.
    pub fn for_field(seed: &ScalarField, p: f64, cfg: FlowConfig) -> Result<Self> {
        Self::new(Operator::for_field(seed)?, p, cfg)
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn config(&self) -> &FlowConfig {
        &self.cfg
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn kernel(&self) -> Option<&MollifierKernel> {
        self.kernel.as_ref()
    }

    fn barycenter(&self, u: &ScalarField) -> Result<f64> {
        match &self.kernel {
            Some(k) => k.beta(u, self.p),
            None => Ok(0.0),
        }
    }

    /// Restricts `u` to the active nodes and normalizes it.
    pub fn prepare(&self, u: &ScalarField) -> Result<ScalarField> {
        let active = self.op.active();
        let v: Vec<f64> = u
            .values()
            .iter()
            .zip(active)
            .map(|(x, &a)| if a { *x } else { 0.0 })
            .collect();
        let lp = self.op.lp_power(&v, self.p).powf(1.0 / self.p);
        if lp == 0.0 || !lp.is_finite() {
            return Err(Error::DegenerateInput("seed vanishes on the domain".into()));
        }
        let v = v.into_iter().map(|x| x / lp).collect();
        ScalarField::new(*self.op.grid(), v, self.op.mask().to_vec())
    }

    /// Full diagnostics at a normalized field.
    pub fn state_at(&self, u: ScalarField, t: f64, iter: usize, dt: f64) -> Result<FlowState> {
        let report = self.op.report(&u, self.p)?;
        let barycenter_z = self.barycenter(&u)?;
        Ok(FlowState {
            converged: report.pg_norm < self.cfg.pg_tol,
            u,
            t,
            energy: report.energy,
            multiplier: report.multiplier,
            pg_norm: report.pg_norm,
            barycenter_z,
            iter,
            dt,
        })
    }

    pub fn init(&self, seed: &ScalarField) -> Result<FlowState> {
        let u = self.prepare(seed)?;
        self.state_at(u, 0.0, 0, self.cfg.dt0)
    }

    /// The semi-implicit trial point for step size `dt` and its energy.
    pub fn trial(&self, u: &ScalarField, energy: f64, dt: f64) -> Result<(ScalarField, f64)> {
        let p = self.p;
        let rhs: Vec<f64> = u
            .values()
            .iter()
            .map(|&x| x + dt * energy * x.abs().powf(p - 2.0) * x)
            .collect();
        let star = self.op.solve_linear(&u.with_values(rhs)?, dt)?;
        let lp = self.op.lp_power(star.values(), p).powf(1.0 / p);
        if lp == 0.0 || !lp.is_finite() {
            return Err(Error::DegenerateInput("flow step collapsed to zero".into()));
        }
        let next = star.scaled(1.0 / lp);
        let e = self.op.energy(&next)?;
        Ok((next, e))
    }

    /// Translates an accepted iterate by whole grid cells in the direction
    /// its barycenter moved, provided the energy does not rise. Translations
    /// are exact symmetries away from the boundary, so this follows slow drift
    /// along the nearly neutral translation mode at one move per step.
    fn slide(&self, state: &FlowState, next: ScalarField, e: f64) -> Result<(ScalarField, f64)> {
        if self.cfg.shift_cells == 0 || self.kernel.is_none() {
            return Ok((next, e));
        }
        let moved = self.barycenter(&next)? - state.barycenter_z;
        let hz = self.op.grid().hz();
        if moved.abs() < 1e-12 * hz {
            return Ok((next, e));
        }
        let dz = moved.signum() * self.cfg.shift_cells as f64 * hz;
        let Ok(cand) = self.prepare(&translate_z(&next, dz)?.field) else {
            return Ok((next, e));
        };
        let ec = self.op.energy(&cand)?;
        if ec <= e + SLIDE_SLACK * e.abs() && ec < state.energy {
            Ok((cand, ec))
        } else {
            Ok((next, e))
        }
    }

    pub fn step(&self, state: &FlowState) -> Result<FlowState> {
        if state.pg_norm < self.cfg.pg_tol {
            let mut s = state.clone();
            s.converged = true;
            return Ok(s);
        }
        let mut dt = state.dt.clamp(self.cfg.dt_min, self.cfg.dt_max);
        loop {
            let (next, e) = self.trial(&state.u, state.energy, dt)?;
            if e < state.energy {
                let grown = (dt * self.cfg.growth).min(self.cfg.dt_max);
                let (next, _) = self.slide(state, next, e)?;
                return self.state_at(next, state.t + dt, state.iter + 1, grown);
            }
            dt *= self.cfg.backtrack;
            if dt < self.cfg.dt_min {
                return Err(Error::Stagnation {
                    iter: state.iter,
                    dt_min: self.cfg.dt_min,
                    energy: state.energy,
                    pg_norm: state.pg_norm,
                });
            }
        }
    }

    pub fn run(&self, seed: &ScalarField) -> Result<FlowRun> {
        self.run_with(seed, |_| Ok(()))
    }

    /// Runs to convergence, budget or stagnation, calling `on_checkpoint` at
    /// every checkpoint (the first and last state included).
    pub fn run_with(
        &self,
        seed: &ScalarField,
        mut on_checkpoint: impl FnMut(&FlowState) -> Result<()>,
    ) -> Result<FlowRun> {
        let mut state = self.init(seed)?;
        let mut trajectory = vec![TrajectoryPoint::from(&state)];
        on_checkpoint(&state)?;
        let termination = loop {
            if state.pg_norm < self.cfg.pg_tol {
                state.converged = true;
                break Termination::Converged;
            }
            if state.iter >= self.cfg.max_iter {
                break Termination::Budget;
            }
            match self.step(&state) {
                Ok(next) => state = next,
                Err(Error::Stagnation { dt_min, .. }) => break Termination::Stagnated { dt_min },
                Err(e) => return Err(e),
            }
            if state.iter % self.cfg.checkpoint_stride == 0 {
                trajectory.push(TrajectoryPoint::from(&state));
                on_checkpoint(&state)?;
            }
        };
        if trajectory.last().map(|t| t.iter) != Some(state.iter) {
            trajectory.push(TrajectoryPoint::from(&state));
            on_checkpoint(&state)?;
        }
        log::debug!(
            "flow finished: {:?} after {} iters, E = {:.10}, pg = {:.3e}",
            termination,
            state.iter,
            state.energy,
            state.pg_norm
        );
        Ok(FlowRun {
            state,
            trajectory,
            termination,
        })
    }
}

pub fn flow_step(flow: &Flow, state: &FlowState) -> Result<FlowState> {
    flow.step(state)
}

pub fn run_flow(seed: &ScalarField, p: f64, cfg: FlowConfig) -> Result<FlowRun> {
    Flow::for_field(seed, p, cfg)?.run(seed)
}

/// Palais–Smale style classification of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsClass {
    /// Gradient vanishes with the barycenter staying put: a compact sequence.
    Compact,
    /// Gradient small while the barycenter keeps moving off: an escaping wave.
    Escaping,
    Undetermined,
}

impl PsClass {
    pub fn label(&self) -> &'static str {
        match self {
            PsClass::Compact => "a",
            PsClass::Escaping => "b",
            PsClass::Undetermined => "undetermined",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PsTraceConfig {
    pub pg_tol: f64,
    /// Gradient norm below which an unconverged run counts as nearly critical.
    pub small_pg: f64,
    /// Net barycenter displacement that counts as escape.
    pub escape_drift: f64,
    /// Largest barycenter wander over the last half of a compact run.
    pub bounded_drift: f64,
    /// Tolerated backward jitter when testing drift monotonicity.
    pub jitter: f64,
    /// Ground level, when known; enables the energy narrative.
    pub ground_level: Option<f64>,
    pub p: f64,
}

impl Default for PsTraceConfig {
    fn default() -> Self {
        Self {
            pg_tol: 1e-6,
            small_pg: 0.05,
            escape_drift: 2.0,
            bounded_drift: 0.5,
            jitter: 1e-2,
            ground_level: None,
            p: 4.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PsReport {
    pub class: PsClass,
    /// `β_end − β_start`.
    pub drift: f64,
    /// Whether the barycenter moved monotonically in the direction of `drift`.
    pub monotone: bool,
    pub final_pg: f64,
    pub final_energy: f64,
    pub narrative: String,
}

/// True if `xs` moves monotonically in direction `sign`, up to `jitter`.
pub fn is_monotone(xs: &[f64], sign: f64, jitter: f64) -> bool {
    xs.windows(2).all(|w| sign * (w[1] - w[0]) >= -jitter)
}

pub fn ps_trace(trajectory: &[TrajectoryPoint], cfg: &PsTraceConfig) -> Result<PsReport> {
    let (first, last) = match (trajectory.first(), trajectory.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::DegenerateInput("empty trajectory".into())),
    };
    let betas: Vec<f64> = trajectory.iter().map(|t| t.barycenter_z).collect();
    let drift = last.barycenter_z - first.barycenter_z;
    let monotone = is_monotone(&betas, drift.signum(), cfg.jitter);
    let tail = &betas[betas.len() / 2..];
    let wander = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - tail.iter().cloned().fold(f64::INFINITY, f64::min);

    let class = if last.pg_norm < cfg.pg_tol && wander <= cfg.bounded_drift {
        PsClass::Compact
    } else if last.pg_norm >= cfg.pg_tol
        && last.pg_norm < cfg.small_pg
        && drift.abs() > cfg.escape_drift
        && monotone
    {
        PsClass::Escaping
    } else {
        PsClass::Undetermined
    };

    let mut narrative = match class {
        PsClass::Compact => format!(
            "class (a): gradient {:.2e} below tolerance, barycenter settled at z = {:.4} (tail wander {:.2e})",
            last.pg_norm, last.barycenter_z, wander
        ),
        PsClass::Escaping => format!(
            "class (b): gradient {:.2e} small but barycenter drifted {:+.3} {}monotonically; mass escapes along the axis",
            last.pg_norm,
            drift,
            if monotone { "" } else { "non-" }
        ),
        PsClass::Undetermined => format!(
            "undetermined: gradient {:.2e}, barycenter drift {:+.3}",
            last.pg_norm, drift
        ),
    };
    if let Some(m) = cfg.ground_level {
        let split = 2f64.powf(1.0 - 2.0 / cfg.p) * m;
        narrative.push_str(&format!("; E/m = {:.6}", last.energy / m));
        if (last.energy - split).abs() < 0.02 * split {
            narrative.push_str("; energy near the two-wave level 2^(1-2/p) m, splitting into two bumps is possible");
        } else if last.energy < split {
            narrative.push_str("; below the two-wave level, at most one escaping bump");
        }
    }
    Ok(PsReport {
        class,
        drift,
        monotone,
        final_pg: last.pg_norm,
        final_energy: last.energy,
        narrative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{energy, lp_norm};
    use crate::grid::{build_grid, GridSpec};

    fn line() -> crate::grid::Grid {
        build_grid(GridSpec::Line { h: 0.05, x_min: -20.0, x_max: 20.0 }).unwrap()
    }

    fn point(iter: usize, pg: f64, beta: f64) -> TrajectoryPoint {
        TrajectoryPoint { iter, t: iter as f64, energy: 1.0, multiplier: 1.0, pg_norm: pg, barycenter_z: beta }
    }

    #[test]
    fn soliton_from_perturbed_seed() {
        let g = line();
        let seed = ScalarField::from_fn(g, g.interior_mask(), |_, x| 1.2 / (x / 1.3).cosh()).unwrap();
        let run = run_flow(&seed, 4.0, FlowConfig::default()).unwrap();
        assert!(run.converged(), "{:?}", run.termination);
        assert!((run.state.energy - 4.0 / 3f64.sqrt()).abs() < 1e-3);
        // energy decreases along the trajectory
        for w in run.trajectory.windows(2) {
            assert!(w[1].energy < w[0].energy);
        }
        assert!((lp_norm(&run.state.u, 4.0).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn critical_point_is_fixed() {
        let g = line();
        let seed = ScalarField::from_fn(g, g.interior_mask(), |_, x| 1.0 / x.cosh()).unwrap();
        let cfg = FlowConfig::default();
        let flow = Flow::for_field(&seed, 4.0, cfg).unwrap();
        let run = flow.run(&seed).unwrap();
        let again = flow.step(&run.state).unwrap();
        assert!(again.converged);
        assert_eq!(again.u, run.state.u);
        assert_eq!(again.iter, run.state.iter);

        let rerun = flow.run(&run.state.u).unwrap();
        assert!(rerun.converged());
        assert!(rerun.state.iter <= 5);
        assert!((rerun.state.energy - run.state.energy).abs() < 1e-10);
    }

    #[test]
    fn step_descends_and_keeps_positivity() {
        let g = line();
        let seed = ScalarField::from_fn(g, g.interior_mask(), |_, x| (-(x - 1.0).powi(2) / 3.0).exp() + 0.5 * (-(x + 2.0).powi(2)).exp()).unwrap();
        let flow = Flow::for_field(&seed, 4.0, FlowConfig::default()).unwrap();
        let mut s = flow.init(&seed).unwrap();
        for _ in 0..10 {
            let next = flow.step(&s).unwrap();
            assert!(next.energy < s.energy);
            assert!(next.u.min_value() >= -1e-12 * next.u.max_abs());
            assert!((lp_norm(&next.u, 4.0).unwrap() - 1.0).abs() < 1e-8);
            assert!((energy(&next.u).unwrap() - next.energy).abs() < 1e-12);
            s = next;
        }
    }

    #[test]
    fn config_validation() {
        assert!(FlowConfig::default().validate().is_ok());
        let bad = FlowConfig { backtrack: 1.5, ..FlowConfig::default() };
        assert!(bad.validate().is_err());
        let bad = FlowConfig { dt_min: 2.0, dt0: 1.0, ..FlowConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn ps_classes() {
        let cfg = PsTraceConfig::default();
        let compact: Vec<_> = (0..10).map(|k| point(k, 10f64.powi(-(k as i32)), 0.01 / (k + 1) as f64)).collect();
        assert_eq!(ps_trace(&compact, &cfg).unwrap().class, PsClass::Compact);

        let escaping: Vec<_> = (0..10).map(|k| point(k, 1e-3, -(k as f64))).collect();
        let r = ps_trace(&escaping, &cfg).unwrap();
        assert_eq!(r.class, PsClass::Escaping);
        assert!(r.monotone && r.drift < -5.0);

        let stuck: Vec<_> = (0..10).map(|k| point(k, 0.8, 0.0)).collect();
        assert_eq!(ps_trace(&stuck, &cfg).unwrap().class, PsClass::Undetermined);
        assert!(ps_trace(&[], &cfg).is_err());
    }
}
