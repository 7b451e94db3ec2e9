//! No minimizer exists on a half-space: the flow slides away from the wall,
//! its energy approaching `m` while the barycenter drifts without bound.

use stripspectrum::analysis::{default_seed, ground_state_on, whole_space_axial};
use stripspectrum::domains::{build_mask, DomainSpec};
use stripspectrum::flow::{ps_trace, Flow, FlowConfig, PsTraceConfig};
use stripspectrum::grid::{build_grid, GridSpec};

fn main() -> stripspectrum::Result<()> {
    let m = ground_state_on(&DomainSpec::whole_space(), whole_space_axial(0.1, 12.0, 3), 4.0, &FlowConfig::default())?
        .require_converged()?
        .energy;
    let grid = build_grid(GridSpec::Axial { hs: 0.1, hz: 0.1, s_max: 10.0, z_min: -40.0, z_max: 0.0, dim: 3 })?;
    let domain = build_mask(&DomainSpec::half_space(), &grid)?;
    let seed = default_seed(&domain)?;

    let cfg = FlowConfig { pg_tol: 1e-8, max_iter: 160, shift_cells: 1, ..FlowConfig::default() };
    let flow = Flow::for_field(&seed, 4.0, cfg)?;
    let run = flow.run_with(&seed, |s| {
        if s.iter % 20 == 0 {
            println!("iter {:>4}  E - m = {:+.3e}  beta_z = {:>8.4}  pg = {:.2e}", s.iter, s.energy - m, s.barycenter_z, s.pg_norm);
        }
        Ok(())
    })?;
    let ps = ps_trace(&run.trajectory, &PsTraceConfig { pg_tol: cfg.pg_tol, ground_level: Some(m), ..Default::default() })?;
    println!("termination     {:?}", run.termination);
    println!("drift           {:+.4} (monotone: {})", ps.drift, ps.monotone);
    println!("{}", ps.narrative);
    Ok(())
}
