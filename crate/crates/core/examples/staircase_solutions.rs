//! A cut-off ground state placed in the widest strip of the staircase
//! `[1, 3, 8]` flows to a positive solution that stays in that strip, with
//! energy between `m` and `Θ(8)`.

use stripspectrum::analysis::diagnostics::sign_change;
use stripspectrum::analysis::{ground_state_on, strip_grid, whole_space_axial, whole_space_radial};
use stripspectrum::constructions::cutoff_seed;
use stripspectrum::domains::{build_mask, DomainSpec};
use stripspectrum::flow::{ps_trace, run_flow, FlowConfig, PsTraceConfig};
use stripspectrum::grid::{build_grid, GridSpec};

fn main() -> stripspectrum::Result<()> {
    let cfg = FlowConfig::default();
    let whole = DomainSpec::whole_space();
    let omega = ground_state_on(&whole, whole_space_radial(0.05, 16.0, 3), 4.0, &cfg)?.require_converged()?;
    let m = ground_state_on(&whole, whole_space_axial(0.1, 12.0, 3), 4.0, &cfg)?.require_converged()?.energy;
    let theta8 = ground_state_on(&DomainSpec::strip(8.0), strip_grid(8.0, 0.1, 14.0, 3), 4.0, &cfg)?.energy;

    let grid = build_grid(GridSpec::Axial { hs: 0.1, hz: 0.1, s_max: 12.0, z_min: -3.0, z_max: 17.0, dim: 3 })?;
    let domain = build_mask(&DomainSpec::staircase(vec![1.0, 3.0, 8.0]), &grid)?;
    let strip = domain.anchors.as_ref().expect("staircase").strips[2];
    let seed = cutoff_seed(&omega.field, strip.width, strip.mid, 4.0, &grid, &domain.mask)?;

    let run = run_flow(&seed, 4.0, cfg)?;
    let s = &run.state;
    let ps = ps_trace(&run.trajectory, &PsTraceConfig { ground_level: Some(m), ..Default::default() })?;
    println!("converged       {} after {} iters (pg {:.2e})", run.converged(), s.iter, s.pg_norm);
    println!("energy          {:.8}", s.energy);
    println!("m, theta(8)     {:.8}, {:.8}", m, theta8);
    println!("barycenter      {:.4} in ({}, {})", s.barycenter_z, strip.bottom, strip.top);
    println!("sign change     {}", sign_change(&s.u)?);
    println!("ps class        {}", ps.narrative);
    Ok(())
}
