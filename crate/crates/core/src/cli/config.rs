//! Flat `key = value` run configuration.
//!
//! Lines hold one `key = value` pair; `#` starts a comment. Keys are grouped by
//! dotted prefixes (`domain.kind`, `flow.dt0`). Unknown and duplicate keys are
//! errors, so typos never pass silently.
//!
//! | key | default |
//! |-----|---------|
//! | `name` | `run` |
//! | `dim` | `3` |
//! | `p` | `4` |
//! | `jobs` | `0` (all cores) |
//! | `rng.seed` | `0` |
//! | `output.dir` | `out` |
//! | `output.checkpoints` | `false` |
//! | `grid.kind` | `line` if `dim = 1`, `radial` for whole space and balls, else `axial` |
//! | `grid.h`, `grid.hs`, `grid.hz` | `0.05` on line and radial grids, `0.1` on axial grids |
//! | `grid.r_max`, `grid.s_max`, `grid.z_min`, `grid.z_max` | sized from the domain |
//! | `domain.kind` | required by `ground-state`, `staircase`, `barrier` |
//! | `domain.q`, `domain.widths`, `domain.radius`, `domain.core_radius`, `domain.gaps` | |
//! | `flow.dt0`, `flow.dt_min`, `flow.dt_max`, `flow.backtrack`, `flow.growth`, `flow.pg_tol`, `flow.max_iter`, `flow.checkpoint_stride`, `flow.shift_cells` | see [`FlowConfig`] |
//! | `reference.m` | computed on an axial box |
//! | `reference.h`, `reference.radius` | grid spacing, `12` |
//! | `omega.field` | computed |
//! | `omega.h`, `omega.radius` | `0.05`, `16` |
//! | `theta.q_list` | required by `theta` |
//! | `theta.h`, `theta.depth` | `0.1`, `14` |
//! | `staircase.seed_strip` | widest strip (1-based) |
//! | `staircase.cutoff_radius` | width of the seeded strip |
//! | `staircase.theta` | computed |
//! | `staircase.tol` | `1e-3` |
//! | `barrier.gap` | required by `barrier` (1-based) |
//! | `barrier.kappa` | `10,100` |
//! | `barrier.cutoff_radius` | `2` |
//! | `diagnose.reference` | none |
//! | `diagnose.trials` | `8` |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::domains::{parse_rational, rational_to_f64, DomainKind, DomainSpec, GapRule};
use crate::error::{Error, Result};
use crate::flow::FlowConfig;
use crate::grid::GridSpec;

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceConfig {
    /// Known ground level; skips the computation.
    pub m: Option<f64>,
    /// Spacing of the axial box; `None` uses the run grid's axial spacing.
    pub h: Option<f64>,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmegaConfig {
    /// Ground-state field file used for cut-off seeds.
    pub field: Option<PathBuf>,
    pub h: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaSection {
    pub q_list: Option<Vec<f64>>,
    pub h: f64,
    pub depth: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StaircaseSection {
    /// 1-based strip index.
    pub seed_strip: Option<usize>,
    pub cutoff_radius: Option<f64>,
    pub theta: Option<f64>,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BarrierSection {
    /// 1-based: gap `k` lies between strips `k` and `k + 1`.
    pub gap: Option<usize>,
    pub kappa: Vec<f64>,
    pub cutoff_radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnoseSection {
    pub reference: Option<PathBuf>,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub dim: usize,
    pub p: f64,
    pub grid: Option<GridSpec>,
    pub domain: Option<DomainSpec>,
    pub flow: FlowConfig,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
    pub checkpoints: bool,
    pub reference: ReferenceConfig,
    pub omega: OmegaConfig,
    pub theta: ThetaSection,
    pub staircase: StaircaseSection,
    pub barrier: BarrierSection,
    pub diagnose: DiagnoseSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::parse("").expect("empty config is valid")
    }
}

/// Raw pairs with consumption tracking.
struct Pairs {
    map: BTreeMap<String, (usize, String)>,
}

impl Pairs {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got {line:?}", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(Error::Config(format!("line {}: bad key {k:?}", n + 1)));
            }
            if let Some((first, _)) = map.insert(k.to_string(), (n + 1, v.to_string())) {
                return Err(Error::Config(format!("line {}: key {k} already set on line {first}", n + 1)));
            }
        }
        Ok(Self { map })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn get<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((n, v)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Config(format!("line {n}: cannot parse {key} = {v:?}"))),
        }
    }

    fn or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some((n, v)) => {
                if v.is_empty() {
                    return Ok(Some(Vec::new()));
                }
                v.split(',')
                    .map(|t| parse_number(t).map_err(|e| Error::Config(format!("line {n}: {key}: {e}"))))
                    .collect::<Result<Vec<_>>>()
                    .map(Some)
            }
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.into_iter().next() {
            None => Ok(()),
            Some((k, (n, _))) => Err(Error::Config(format!("line {n}: unknown key {k}"))),
        }
    }
}

/// A decimal or a positive rational `a/b`.
fn parse_number(t: &str) -> Result<f64> {
    let t = t.trim();
    if t.contains('/') {
        parse_rational(t).map(rational_to_f64)
    } else {
        t.parse::<f64>().map_err(|_| Error::Config(format!("not a number: {t:?}")))
    }
}

fn parse_domain(pairs: &mut Pairs) -> Result<Option<DomainSpec>> {
    let Some((n, kind)) = pairs.take("domain.kind") else {
        return Ok(None);
    };
    let need = |v: Option<f64>, key: &str| v.ok_or_else(|| Error::Config(format!("domain.kind = {kind} needs {key}")));
    let q = match pairs.take("domain.q") {
        Some((n, v)) => Some(parse_number(&v).map_err(|e| Error::Config(format!("line {n}: domain.q: {e}")))?),
        None => None,
    };
    let widths = pairs.list("domain.widths")?;
    let radius: Option<f64> = pairs.get("domain.radius")?;
    let core: Option<f64> = pairs.get("domain.core_radius")?;
    let gaps: Option<String> = pairs.get("domain.gaps")?;
    let spec = match kind.as_str() {
        "whole-space" | "whole" => DomainSpec::whole_space(),
        "strip" => DomainSpec::strip(need(q, "domain.q")?),
        "half-space" => DomainSpec::half_space(),
        "ball" => DomainSpec::ball(need(radius, "domain.radius")?),
        "staircase" => {
            let widths = widths.ok_or_else(|| Error::Config("domain.kind = staircase needs domain.widths".into()))?;
            let gaps = match gaps.as_deref() {
                None | Some("unit") => GapRule::Unit,
                Some("literal") => GapRule::Literal,
                Some(g) => return Err(Error::Config(format!("domain.gaps must be unit or literal, got {g}"))),
            };
            DomainSpec {
                kind: DomainKind::Staircase { widths, core_radius: core.unwrap_or(1.0), gaps },
            }
        }
        other => return Err(Error::Config(format!("line {n}: unknown domain.kind {other}"))),
    };
    spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(Some(spec))
}

fn parse_grid(pairs: &mut Pairs, dim: usize, domain: Option<&DomainSpec>) -> Result<Option<GridSpec>> {
    let kind: Option<String> = pairs.get("grid.kind")?;
    let h: Option<f64> = pairs.get("grid.h")?;
    let hs: Option<f64> = pairs.get("grid.hs")?;
    let hz: Option<f64> = pairs.get("grid.hz")?;
    let r_max: Option<f64> = pairs.get("grid.r_max")?;
    let s_max: Option<f64> = pairs.get("grid.s_max")?;
    let z_min: Option<f64> = pairs.get("grid.z_min")?;
    let z_max: Option<f64> = pairs.get("grid.z_max")?;
    let Some(domain) = domain else {
        return Ok(None);
    };
    let kind = kind.unwrap_or_else(|| {
        if dim == 1 {
            "line".into()
        } else if matches!(domain.kind, DomainKind::WholeSpace | DomainKind::Ball { .. }) {
            "radial".into()
        } else {
            "axial".into()
        }
    });
    let (lo, hi) = match &domain.kind {
        DomainKind::WholeSpace => (-12.0, 12.0),
        DomainKind::Ball { radius } => (-radius - 1.0, radius + 1.0),
        DomainKind::Strip { q } => (-0.5 * q, 0.5 * q),
        DomainKind::HalfSpace => (-40.0, 0.0),
        DomainKind::Staircase { .. } => {
            let a = domain.anchors().expect("staircase has anchors");
            (a.strips[0].bottom - 3.0, a.strips.last().expect("non-empty").top + 3.0)
        }
    };
    let spec = match kind.as_str() {
        "line" => {
            if dim != 1 {
                return Err(Error::Config(format!("line grids need dim = 1, got {dim}")));
            }
            GridSpec::Line { h: h.or(hz).unwrap_or(0.05), x_min: z_min.unwrap_or(lo), x_max: z_max.unwrap_or(hi) }
        }
        "radial" => GridSpec::Radial {
            h: h.or(hs).unwrap_or(0.05),
            r_max: r_max.or(s_max).unwrap_or(match domain.kind {
                DomainKind::Ball { radius } => radius + 1.0,
                _ => 12.0,
            }),
            dim,
        },
        "axial" => GridSpec::Axial {
            hs: hs.or(h).unwrap_or(0.1),
            hz: hz.or(h).unwrap_or(0.1),
            s_max: s_max.unwrap_or(match domain.kind {
                DomainKind::HalfSpace => 10.0,
                DomainKind::Ball { radius } => radius + 1.0,
                _ => 12.0,
            }),
            z_min: z_min.unwrap_or(lo),
            z_max: z_max.unwrap_or(hi),
            dim,
        },
        other => return Err(Error::Config(format!("unknown grid.kind {other}"))),
    };
    crate::grid::build_grid(spec).map_err(|e| Error::Config(e.to_string()))?;
    Ok(Some(spec))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Pairs::parse(text)?;
        let name = pairs.or("name", "run".to_string())?;
        let dim = pairs.or("dim", 3usize)?;
        let p = pairs.or("p", 4.0)?;
        let domain = parse_domain(&mut pairs)?;
        let grid = parse_grid(&mut pairs, dim, domain.as_ref())?;
        let d = FlowConfig::default();
        let flow = FlowConfig {
            dt0: pairs.or("flow.dt0", d.dt0)?,
            dt_min: pairs.or("flow.dt_min", d.dt_min)?,
            dt_max: pairs.or("flow.dt_max", d.dt_max)?,
            backtrack: pairs.or("flow.backtrack", d.backtrack)?,
            growth: pairs.or("flow.growth", d.growth)?,
            pg_tol: pairs.or("flow.pg_tol", d.pg_tol)?,
            max_iter: pairs.or("flow.max_iter", d.max_iter)?,
            checkpoint_stride: pairs.or("flow.checkpoint_stride", d.checkpoint_stride)?,
            shift_cells: pairs.or("flow.shift_cells", d.shift_cells)?,
        };
        let cfg = RunConfig {
            name,
            dim,
            p,
            grid,
            domain,
            flow,
            seed: pairs.or("rng.seed", 0u64)?,
            jobs: pairs.or("jobs", 0usize)?,
            out: pairs.or("output.dir", PathBuf::from("out"))?,
            checkpoints: pairs.or("output.checkpoints", false)?,
            reference: ReferenceConfig {
                m: pairs.get("reference.m")?,
                h: pairs.get("reference.h")?,
                radius: pairs.or("reference.radius", 12.0)?,
            },
            omega: OmegaConfig {
                field: pairs.get("omega.field")?,
                h: pairs.or("omega.h", 0.05)?,
                radius: pairs.or("omega.radius", 16.0)?,
            },
            theta: ThetaSection {
                q_list: pairs.list("theta.q_list")?,
                h: pairs.or("theta.h", 0.1)?,
                depth: pairs.or("theta.depth", 14.0)?,
            },
            staircase: StaircaseSection {
                seed_strip: pairs.get("staircase.seed_strip")?,
                cutoff_radius: pairs.get("staircase.cutoff_radius")?,
                theta: pairs.get("staircase.theta")?,
                tol: pairs.or("staircase.tol", 1e-3)?,
            },
            barrier: BarrierSection {
                gap: pairs.get("barrier.gap")?,
                kappa: pairs.list("barrier.kappa")?.unwrap_or_else(|| vec![10.0, 100.0]),
                cutoff_radius: pairs.or("barrier.cutoff_radius", 2.0)?,
            },
            diagnose: DiagnoseSection {
                reference: pairs.get("diagnose.reference")?,
                trials: pairs.or("diagnose.trials", 8usize)?,
            },
        };
        pairs.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and parses a config file; relative file paths inside it are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.omega.field, &mut cfg.diagnose.reference].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.check_files()?;
        Ok(cfg)
    }

    /// Largest admissible exponent, `2N/(N − 2)`, or infinity for `N ≤ 2`.
    pub fn critical_exponent(&self) -> f64 {
        if self.dim <= 2 {
            f64::INFINITY
        } else {
            2.0 * self.dim as f64 / (self.dim as f64 - 2.0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.dim == 0 {
            return bad("dim must be positive".into());
        }
        if !(self.p > 2.0 && self.p < self.critical_exponent()) {
            return bad(format!("p = {} outside (2, {})", self.p, self.critical_exponent()));
        }
        self.flow.validate().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(q) = &self.theta.q_list {
            if q.is_empty() {
                return bad("theta.q_list is empty".into());
            }
            if q.iter().any(|&x| !(x > 0.0 && x.is_finite())) || q.windows(2).any(|w| w[1] <= w[0]) {
                return bad(format!("theta.q_list must be positive and strictly increasing: {q:?}"));
            }
        }
        if !(self.theta.h > 0.0 && self.theta.depth > 0.0) {
            return bad("theta.h and theta.depth must be positive".into());
        }
        if self.barrier.kappa.is_empty() || self.barrier.kappa.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return bad(format!("barrier.kappa must be positive: {:?}", self.barrier.kappa));
        }
        if self.staircase.seed_strip == Some(0) || self.barrier.gap == Some(0) {
            return bad("strip and gap indices start at 1".into());
        }
        if let Some(m) = self.reference.m {
            if !(m > 0.0 && m.is_finite()) {
                return bad(format!("reference.m must be positive, got {m}"));
            }
        }
        if !(self.omega.h > 0.0 && self.omega.radius > 0.0 && self.reference.radius > 0.0) {
            return bad("omega and reference grids need positive sizes".into());
        }
        if self.diagnose.trials == 0 {
            return bad("diagnose.trials must be positive".into());
        }
        Ok(())
    }

    /// All referenced input files exist.
    pub fn check_files(&self) -> Result<()> {
        for p in [&self.omega.field, &self.diagnose.reference].into_iter().flatten() {
            if !p.is_file() {
                return Err(Error::Config(format!("referenced file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn require_domain(&self) -> Result<(&DomainSpec, GridSpec)> {
        match (&self.domain, self.grid) {
            (Some(d), Some(g)) => Ok((d, g)),
            _ => Err(Error::Config("missing key domain.kind".into())),
        }
    }
}
