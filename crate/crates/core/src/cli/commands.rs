use std::io::Write;
use std::path::{Path, PathBuf};

use crate::analysis::decay::DECAY_HEADER;
use crate::analysis::diagnostics::{brezis_lieb_defect, cube_mass_profile, mass_lower_bound, sign_change};
use crate::analysis::theta::THETA_HEADER;
use crate::analysis::{decay_fit, default_seed, ground_state_on, strip_grid, theta_curve, whole_space_axial, ThetaConfig};
use crate::barycenter::{self, MollifierKernel, PinnedResult};
use crate::cli::config::RunConfig;
use crate::constructions::cutoff_seed;
use crate::domains::{build_mask, Domain, DomainKind, DomainSpec, StripAnchors};
use crate::error::{Error, Result};
use crate::flow::{ps_trace, Flow, FlowConfig, FlowRun, PsClass, PsTraceConfig, Termination, TRAJECTORY_HEADER};
use crate::functional::{energy_report, lp_norm, normalize};
use crate::grid::{build_grid, Grid, GridSpec, ScalarField};
use crate::io::{read_field, write_atomic, write_csv, write_field};

pub const SUMMARY_HEADER: &str = "domain,p,energy,pg_norm,iters,beta_z";
pub const BARRIER_HEADER: &str = "kappa,zeta,estimate,energy,beta,margin";

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(|e| Error::io("<stdout>", e))?
    };
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn prepare_out(cfg: &RunConfig) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    Ok(cfg.out.clone())
}

fn build_domain(cfg: &RunConfig) -> Result<Domain> {
    let (spec, grid) = cfg.require_domain()?;
    build_mask(spec, &build_grid(grid)?)
}

/// A seed file, resampled onto the domain grid unless it already lives there.
fn load_seed(path: &Path, domain: &Domain) -> Result<ScalarField> {
    let f = read_field(path)?;
    let u = if f.grid() == &domain.grid {
        ScalarField::new(domain.grid, f.values().to_vec(), domain.mask.clone())?
    } else {
        ScalarField::from_fn(domain.grid, domain.mask.clone(), |s, z| f.sample(s, z))?
    };
    if u.is_zero() {
        return Err(Error::DegenerateInput(format!("seed {} vanishes on the domain", path.display())));
    }
    Ok(u)
}

fn trajectory_rows(run: &FlowRun) -> Vec<String> {
    run.trajectory.iter().map(|t| t.csv_row()).collect()
}

/// Ground level `m`: `reference.m` if given, else the whole-space minimizer
/// on a box with spacing `reference.h` (default `h`).
pub fn reference_level(cfg: &RunConfig, h: f64) -> Result<f64> {
    if let Some(m) = cfg.reference.m {
        return Ok(m);
    }
    let h = cfg.reference.h.unwrap_or(h);
    let r = cfg.reference.radius;
    let grid = match cfg.dim {
        1 => GridSpec::Line { h, x_min: -r, x_max: r },
        2 => GridSpec::Radial { h, r_max: r, dim: 2 },
        d => whole_space_axial(h, r, d),
    };
    let gs = ground_state_on(&DomainSpec::whole_space(), grid, cfg.p, &FlowConfig::default())?.require_converged()?;
    log::info!("reference level m = {:.10} (h = {h}, radius {r})", gs.energy);
    Ok(gs.energy)
}

/// `Θ(q)` on a strip grid with axial spacing at most `h`.
fn strip_level(cfg: &RunConfig, q: f64, h: f64) -> Result<f64> {
    let grid = strip_grid(q, h, cfg.theta.depth, cfg.dim);
    let gs = ground_state_on(&DomainSpec::strip(q), grid, cfg.p, &FlowConfig::default())?.require_converged()?;
    log::info!("strip level theta({q}) = {:.10}", gs.energy);
    Ok(gs.energy)
}

/// The ground state used for cut-off seeds: `omega.field`, or a radial
/// minimizer that is then cached as `omega.axf` in the output directory.
fn load_omega(cfg: &RunConfig, dir: &Path) -> Result<ScalarField> {
    if let Some(p) = &cfg.omega.field {
        return read_field(p);
    }
    let grid = GridSpec::Radial { h: cfg.omega.h, r_max: cfg.omega.radius, dim: cfg.dim };
    let gs = ground_state_on(&DomainSpec::whole_space(), grid, cfg.p, &FlowConfig::default())?.require_converged()?;
    write_field(&dir.join("omega.axf"), &gs.field)?;
    Ok(gs.field)
}

fn staircase_anchors(domain: &Domain) -> Result<StripAnchors> {
    match (&domain.spec.kind, &domain.anchors) {
        (DomainKind::Staircase { .. }, Some(a)) => Ok(a.clone()),
        _ => Err(Error::Config(format!("needs domain.kind = staircase, got {}", domain.spec.name()))),
    }
}

fn stagnation(run: &FlowRun) -> Option<Error> {
    let s = &run.state;
    let dt_min = match run.termination {
        Termination::Converged => return None,
        Termination::Stagnated { dt_min } => dt_min,
        Termination::Budget => 0.0,
    };
    Some(Error::Stagnation { iter: s.iter, dt_min, energy: s.energy, pg_norm: s.pg_norm })
}

/// Flow from the default seed (or `seed_field`); writes `field.axf`,
/// `trajectory.csv`, `summary.csv` and, on radial grids, `decay.csv`.
pub fn cmd_ground_state(cfg: &RunConfig, seed_field: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let domain = build_domain(cfg)?;
    let seed = match seed_field {
        Some(p) => load_seed(p, &domain)?,
        None => default_seed(&domain)?,
    };
    let flow = Flow::for_field(&seed, cfg.p, cfg.flow)?;
    let dir = prepare_out(cfg)?;
    let ck = dir.join("checkpoints");
    let run = flow.run_with(&seed, |s| {
        if cfg.checkpoints {
            write_field(&ck.join(format!("iter_{:06}.axf", s.iter)), &s.u)?;
        }
        Ok(())
    })?;
    let s = &run.state;
    write_field(&dir.join("field.axf"), &s.u)?;
    write_csv(&dir.join("trajectory.csv"), TRAJECTORY_HEADER, &trajectory_rows(&run))?;
    let summary = format!(
        "{},{},{},{},{},{}",
        domain.spec.name(),
        num(cfg.p),
        num(s.energy),
        num(s.pg_norm),
        s.iter,
        num(s.barycenter_z)
    );
    write_csv(&dir.join("summary.csv"), SUMMARY_HEADER, &[summary.clone()])?;
    say!(out, "{SUMMARY_HEADER}");
    say!(out, "{summary}");
    if let Grid::Radial(_) = s.u.grid() {
        match decay_fit(&s.u, None) {
            Ok(fit) => {
                write_csv(&dir.join("decay.csv"), DECAY_HEADER, &[fit.csv_row()])?;
                say!(out, "decay: d_value = {:.8} d_grad = {:.8} residual = {:.2e}", fit.d_value, fit.d_grad, fit.residual);
            }
            Err(e) => log::warn!("decay fit skipped: {e}"),
        }
    }
    match stagnation(&run) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Strip energies for `theta.q_list`; writes `theta.csv` and prints the
/// monotonicity verdict.
pub fn cmd_theta(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let q_list = cfg.theta.q_list.as_ref().ok_or_else(|| Error::Config("missing key theta.q_list".into()))?;
    if cfg.dim < 3 {
        return Err(Error::Config(format!("strip energies need dim >= 3, got {}", cfg.dim)));
    }
    let dir = prepare_out(cfg)?;
    let m = reference_level(cfg, cfg.theta.h)?;
    let tcfg = ThetaConfig {
        p: cfg.p,
        dim: cfg.dim,
        h: cfg.theta.h,
        depth: cfg.theta.depth,
        flow: cfg.flow,
        jobs: cfg.jobs,
        keep_fields: false,
    };
    let curve = theta_curve(q_list, m, &tcfg)?;
    write_csv(&dir.join("theta.csv"), THETA_HEADER, &curve.csv_rows())?;
    for s in &curve.samples {
        match &s.theta {
            Ok(t) => say!(out, "q = {} theta = {:.10} ({} iters)", s.q, t, s.iters),
            Err(e) => say!(out, "q = {} invalid: {e}", s.q),
        }
    }
    say!(out, "m = {m:.10}");
    if let Ok(slope) = curve.loglog_slope(0.0, 1.0) {
        say!(out, "log-log slope for q <= 1: {slope:.4}");
    }
    say!(out, "above m: {}", if curve.above_m() { "yes" } else { "no" });
    say!(out, "monotonicity: {}", curve.monotonicity().label());
    Ok(())
}

struct Check {
    name: &'static str,
    ok: bool,
    detail: String,
}

fn report_checks(checks: &[Check]) -> Vec<String> {
    checks
        .iter()
        .map(|c| format!("  [{}] {}: {}", if c.ok { "ok" } else { "FAILED" }, c.name, c.detail))
        .collect()
}

/// Seeds a staircase strip with a cut-off ground state, runs the flow and
/// checks the outcome; on a half-space, checks that the flow escapes instead.
/// Writes `solution.axf`, `trajectory.csv` and `verdict.txt`.
pub fn cmd_staircase(cfg: &RunConfig, seed_field: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let domain = build_domain(cfg)?;
    if domain.spec.kind == DomainKind::HalfSpace {
        return half_space_control(cfg, &domain, seed_field, out);
    }
    let anchors = staircase_anchors(&domain)?;
    let widest = anchors
        .strips
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.width.total_cmp(&b.1.width))
        .map(|(k, _)| k + 1)
        .unwrap_or(1);
    let k = cfg.staircase.seed_strip.unwrap_or(widest);
    if k > anchors.strips.len() {
        return Err(Error::Config(format!("staircase.seed_strip = {k} but the staircase has {} strips", anchors.strips.len())));
    }
    let strip = anchors.strips[k - 1];
    let hz = domain.grid.hz();
    let dir = prepare_out(cfg)?;
    let seed = match seed_field {
        Some(p) => load_seed(p, &domain)?,
        None => {
            let radius = cfg.staircase.cutoff_radius.unwrap_or(strip.width);
            cutoff_seed(&load_omega(cfg, &dir)?, radius, strip.mid, cfg.p, &domain.grid, &domain.mask)?
        }
    };
    let run = Flow::for_field(&seed, cfg.p, cfg.flow)?.run(&seed)?;
    let m = reference_level(cfg, hz)?;
    let theta = match cfg.staircase.theta {
        Some(t) => t,
        None => strip_level(cfg, strip.width, hz)?,
    };
    let s = &run.state;
    let u = &s.u;
    let ps = ps_trace(&run.trajectory, &PsTraceConfig { pg_tol: cfg.flow.pg_tol, ground_level: Some(m), p: cfg.p, ..Default::default() })?;
    let inside = strip.bottom < s.barycenter_z && s.barycenter_z < strip.top;
    let checks = [
        Check { name: "converged", ok: run.converged(), detail: format!("pg_norm {:.3e} after {} iters", s.pg_norm, s.iter) },
        Check { name: "sign-definite", ok: !sign_change(u)?, detail: format!("min {:.3e} max {:.3e}", u.min_value(), u.max_value()) },
        Check {
            name: "barycenter in strip",
            ok: inside,
            detail: format!("beta_z {:.4} in ({}, {})", s.barycenter_z, strip.bottom, strip.top),
        },
        Check { name: "energy above m", ok: s.energy > m, detail: format!("E {:.10} m {:.10}", s.energy, m) },
        Check {
            name: "energy below theta + tol",
            ok: s.energy <= theta + cfg.staircase.tol,
            detail: format!("E {:.10} theta({}) {:.10} tol {:e}", s.energy, strip.width, theta, cfg.staircase.tol),
        },
    ];
    let pass = checks.iter().all(|c| c.ok);
    let verdict = if pass {
        "PASS"
    } else if !run.converged() {
        "NON-CONVERGENT"
    } else if !inside {
        "ESCAPED"
    } else {
        "FAIL"
    };
    let branch = if inside {
        format!("stayed in strip {k} (width {}), E/m = {:.6}", strip.width, s.energy / m)
    } else {
        format!("left strip {k} (width {}): beta_z = {:.4}, E/m = {:.6}", strip.width, s.barycenter_z, s.energy / m)
    };
    let mut lines = vec![format!("verdict: {verdict}"), format!("branch: {branch}")];
    lines.push(format!("gap to m: {:.6e}", (s.energy - m) / m));
    lines.push(format!("ps class: {} ({})", ps.class.label(), ps.narrative));
    lines.extend(report_checks(&checks));
    write_field(&dir.join("solution.axf"), u)?;
    write_csv(&dir.join("trajectory.csv"), TRAJECTORY_HEADER, &trajectory_rows(&run))?;
    write_atomic(&dir.join("verdict.txt"), &(lines.join("\n") + "\n"))?;
    for l in &lines {
        say!(out, "{l}");
    }
    if pass {
        Ok(())
    } else {
        Err(Error::Assertion(format!("staircase verdict {verdict}: {branch}")))
    }
}

fn half_space_control(cfg: &RunConfig, domain: &Domain, seed_field: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let seed = match seed_field {
        Some(p) => load_seed(p, domain)?,
        None => default_seed(domain)?,
    };
    let dir = prepare_out(cfg)?;
    let run = Flow::for_field(&seed, cfg.p, cfg.flow)?.run(&seed)?;
    let m = reference_level(cfg, domain.grid.hz())?;
    let ps = ps_trace(&run.trajectory, &PsTraceConfig { pg_tol: cfg.flow.pg_tol, ground_level: Some(m), p: cfg.p, ..Default::default() })?;
    let s = &run.state;
    let checks = [
        Check { name: "not converged", ok: !run.converged(), detail: format!("{:?} after {} iters", run.termination, s.iter) },
        Check { name: "monotone drift beyond 5", ok: ps.monotone && ps.drift.abs() > 5.0, detail: format!("drift {:+.4}", ps.drift) },
        Check {
            name: "energy within 2% of m",
            ok: (s.energy - m).abs() < 0.02 * m,
            detail: format!("E {:.10} m {:.10}", s.energy, m),
        },
        Check { name: "escape class", ok: ps.class == PsClass::Escaping, detail: ps.narrative.clone() },
    ];
    let pass = checks.iter().all(|c| c.ok);
    let verdict = if pass { "NON-CONVERGENT" } else { "FAIL" };
    let mut lines = vec![format!("verdict: {verdict}"), format!("ps class: {}", ps.class.label())];
    lines.extend(report_checks(&checks));
    write_field(&dir.join("solution.axf"), &s.u)?;
    write_csv(&dir.join("trajectory.csv"), TRAJECTORY_HEADER, &trajectory_rows(&run))?;
    write_atomic(&dir.join("verdict.txt"), &(lines.join("\n") + "\n"))?;
    for l in &lines {
        say!(out, "{l}");
    }
    if pass {
        Ok(())
    } else {
        Err(Error::Assertion("half-space flow did not escape as expected".into()))
    }
}

/// Penalized pinned minimization at the midpoint of gap `barrier.gap`, for
/// every `κ` in `barrier.kappa`; writes `barrier.csv`.
pub fn cmd_barrier(cfg: &RunConfig, seed_field: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let domain = build_domain(cfg)?;
    let anchors = staircase_anchors(&domain)?;
    let k = cfg.barrier.gap.ok_or_else(|| Error::Config("missing key barrier.gap".into()))?;
    let gaps = anchors.gap_midpoints.len();
    if k > gaps {
        return Err(Error::Config(format!("barrier.gap = {k} out of range: the staircase has {gaps} gaps")));
    }
    let zeta = anchors.gap_midpoints[k - 1];
    let dir = prepare_out(cfg)?;
    let seed = match seed_field {
        Some(p) => load_seed(p, &domain)?,
        None => cutoff_seed(&load_omega(cfg, &dir)?, cfg.barrier.cutoff_radius, zeta, cfg.p, &domain.grid, &domain.mask)?,
    };
    let m = reference_level(cfg, domain.grid.hz())?;
    let mut kappas = cfg.barrier.kappa.clone();
    kappas.sort_by(f64::total_cmp);
    let results: Vec<PinnedResult> = kappas
        .iter()
        .map(|&kappa| barycenter::pinned_min(&seed, zeta, kappa, cfg.p, &cfg.flow))
        .collect::<Result<_>>()?;
    let rows: Vec<String> = results
        .iter()
        .map(|r| {
            format!("{},{},{},{},{},{}", num(r.kappa), num(r.zeta), num(r.estimate), num(r.energy), num(r.beta), num((r.estimate - m) / m))
        })
        .collect();
    write_csv(&dir.join("barrier.csv"), BARRIER_HEADER, &rows)?;
    say!(out, "gap {k}: zeta = {zeta}, m = {m:.10}");
    for r in &results {
        say!(
            out,
            "kappa = {}: estimate {:.10} (E {:.10}, beta {:.4}), margin over m {:.4}%",
            r.kappa,
            r.estimate,
            r.energy,
            r.beta,
            100.0 * (r.estimate - m) / m
        );
    }
    let ordered = results.windows(2).all(|w| w[1].estimate >= w[0].estimate * (1.0 - 0.01));
    say!(out, "kappa ordering (1% slack): {}", if ordered { "monotone" } else { "violated" });
    say!(out, "caveat: {}", PinnedResult::BIAS_NOTE);
    if let Some(r) = results.iter().find(|r| r.estimate <= m) {
        return Err(Error::Assertion(format!("estimate {} at kappa {} does not exceed m = {m}", r.estimate, r.kappa)));
    }
    Ok(())
}

/// Prints `β_z` and the threshold level of a field file.
pub fn cmd_barycenter(cfg: &RunConfig, field: &Path, out: &mut dyn Write) -> Result<()> {
    let u = read_field(field)?;
    if let Grid::Radial(_) = u.grid() {
        let b = barycenter::beta(&u, cfg.p)?;
        say!(out, "beta_z = {}", num(b));
        say!(out, "threshold_level = n/a (radial field)");
        return Ok(());
    }
    let (b, level) = MollifierKernel::for_grid(u.grid())?.beta_with_level(&u, cfg.p)?;
    say!(out, "beta_z = {}", num(b));
    say!(out, "threshold_level = {}", num(level));
    Ok(())
}

/// Energy, constraint, multiplier, gradient, barycenter and splitting
/// diagnostics of a field file.
pub fn cmd_diagnose(cfg: &RunConfig, field: &Path, reference: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let u = read_field(field)?;
    if u.is_zero() {
        return Err(Error::DegenerateInput(format!("{} holds the zero field", field.display())));
    }
    let p = cfg.p;
    let raw_norm = lp_norm(&u, p)?;
    let v = normalize(&u, p)?;
    let rep = energy_report(&v, p)?;
    let beta = barycenter::beta(&v, p)?;
    let profile = cube_mass_profile(&v, p)?;
    let bound = mass_lower_bound(&v, p, cfg.diagnose.trials, cfg.seed)?;
    say!(out, "lp_norm = {}", num(raw_norm));
    say!(out, "energy = {}", num(rep.energy));
    say!(out, "multiplier = {}", num(rep.multiplier));
    say!(out, "pg_norm = {}", num(rep.pg_norm));
    say!(out, "beta_z = {}", num(beta));
    say!(out, "sign_change = {}", sign_change(&v)?);
    say!(out, "d_max = {}", num(profile.d_max));
    say!(out, "embedding_constant = {}", num(bound.s_emb));
    say!(out, "mass_bound_holds = {}", bound.holds);
    let reference = reference.map(Path::to_path_buf).or_else(|| cfg.diagnose.reference.clone());
    if let Some(r) = reference {
        let u0 = read_field(&r)?;
        say!(out, "brezis_lieb_defect = {}", num(brezis_lieb_defect(&v, &u0, p)?));
    }
    Ok(())
}
