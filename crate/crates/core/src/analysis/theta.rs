use rayon::prelude::*;

use crate::analysis::ground_state::{ground_state_on, strip_grid};
use crate::domains::DomainSpec;
use crate::error::{Error, Result};
use crate::flow::FlowConfig;
use crate::grid::ScalarField;

#[derive(Clone, Copy, Debug)]
pub struct ThetaConfig {
    pub p: f64,
    pub dim: usize,
    /// Largest spacing; strips thinner than `16 h` use `q/16`.
    pub h: f64,
    /// Lateral extent in decay lengths `1/sqrt(1 + π²/q²)`.
    pub depth: f64,
    pub flow: FlowConfig,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
    /// Keep the minimizers in the samples.
    pub keep_fields: bool,
}

impl Default for ThetaConfig {
    fn default() -> Self {
        Self { p: 4.0, dim: 3, h: 0.1, depth: 14.0, flow: FlowConfig::default(), jobs: 0, keep_fields: false }
    }
}

#[derive(Clone, Debug)]
pub struct ThetaSample {
    pub q: f64,
    /// `Err` holds the reason the sample was excluded.
    pub theta: std::result::Result<f64, String>,
    pub pg_norm: f64,
    pub iters: usize,
    pub field: Option<ScalarField>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Monotonicity {
    StrictlyDecreasing,
    TriviallyMonotone,
    Violated,
}

impl Monotonicity {
    pub fn label(&self) -> &'static str {
        match self {
            Monotonicity::StrictlyDecreasing => "strictly-decreasing",
            Monotonicity::TriviallyMonotone => "trivially-monotone",
            Monotonicity::Violated => "not-monotone",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ThetaCurve {
    pub samples: Vec<ThetaSample>,
    /// Whole-space reference level on a matching grid.
    pub m_ref: f64,
}

pub const THETA_HEADER: &str = "q,theta,gap_to_m";

impl ThetaCurve {
    /// `(q, Θ(q))` of the valid samples.
    pub fn valid(&self) -> Vec<(f64, f64)> {
        self.samples.iter().filter_map(|s| s.theta.as_ref().ok().map(|&t| (s.q, t))).collect()
    }

    pub fn monotonicity(&self) -> Monotonicity {
        let v = self.valid();
        if v.len() < 2 {
            Monotonicity::TriviallyMonotone
        } else if v.windows(2).all(|w| w[1].1 < w[0].1) {
            Monotonicity::StrictlyDecreasing
        } else {
            Monotonicity::Violated
        }
    }

    /// True when every valid sample lies strictly above `m_ref`.
    pub fn above_m(&self) -> bool {
        self.valid().iter().all(|&(_, t)| t > self.m_ref)
    }

    /// Least-squares slope of `log Θ` against `log q` over the valid samples
    /// whose `q` lies in `[q_lo, q_hi]`.
    pub fn loglog_slope(&self, q_lo: f64, q_hi: f64) -> Result<f64> {
        let pts: Vec<(f64, f64)> = self
            .valid()
            .into_iter()
            .filter(|&(q, _)| q_lo <= q && q <= q_hi)
            .map(|(q, t)| (q.ln(), t.ln()))
            .collect();
        if pts.len() < 2 {
            return Err(Error::DegenerateInput("slope needs two valid samples".into()));
        }
        let n = pts.len() as f64;
        let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Ok(sxy / sxx)
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.samples
            .iter()
            .map(|s| match &s.theta {
                Ok(t) => format!("{:.16e},{:.16e},{:.16e}", s.q, t, (t - self.m_ref) / self.m_ref),
                Err(_) => format!("{:.16e},invalid,invalid", s.q),
            })
            .collect()
    }
}

fn sample(q: f64, cfg: &ThetaConfig) -> ThetaSample {
    let run = || ground_state_on(&DomainSpec::strip(q), strip_grid(q, cfg.h, cfg.depth, cfg.dim), cfg.p, &cfg.flow)?
        .require_converged();
    match run() {
        Ok(gs) => ThetaSample {
            q,
            theta: Ok(gs.energy),
            pg_norm: gs.pg_norm,
            iters: gs.iters,
            field: cfg.keep_fields.then_some(gs.field),
        },
        Err(e) => {
            log::warn!("theta sample q = {q} excluded: {e}");
            ThetaSample { q, theta: Err(e.to_string()), pg_norm: f64::NAN, iters: 0, field: None }
        }
    }
}

/// Strip ground-state energies `Θ(q)` for each `q`, computed concurrently.
/// Failed samples are kept, marked invalid.
pub fn theta_curve(q_list: &[f64], m_ref: f64, cfg: &ThetaConfig) -> Result<ThetaCurve> {
    if q_list.is_empty() {
        return Err(Error::InvalidParameter("empty q list".into()));
    }
    if q_list.iter().any(|&q| !(q > 0.0 && q.is_finite())) {
        return Err(Error::InvalidParameter(format!("strip widths must be positive: {q_list:?}")));
    }
    if q_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(format!("q list must be strictly increasing: {q_list:?}")));
    }
    let work = || q_list.par_iter().map(|&q| sample(q, cfg)).collect::<Vec<_>>();
    let samples = if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?
            .install(work)
    } else {
        work()
    };
    Ok(ThetaCurve { samples, m_ref })
}
