//! Ground state on the line, where `√2 sech x` solves `−u″ + u = u³` exactly.

use stripspectrum::analysis::ground_state_on;
use stripspectrum::domains::DomainSpec;
use stripspectrum::flow::FlowConfig;
use stripspectrum::functional::normalize;
use stripspectrum::grid::{GridSpec, ScalarField};

fn main() -> stripspectrum::Result<()> {
    let spec = GridSpec::Line { h: 0.05, x_min: -20.0, x_max: 20.0 };
    let gs = ground_state_on(&DomainSpec::whole_space(), spec, 4.0, &FlowConfig::default())?.require_converged()?;

    let grid = *gs.field.grid();
    let exact = ScalarField::from_fn(grid, gs.field.mask().to_vec(), |_, x| 2f64.sqrt() / x.cosh())?;
    let exact = normalize(&exact, 4.0)?;

    println!("iterations      {}", gs.iters);
    println!("energy          {:.8}", gs.energy);
    println!("4/sqrt(3)       {:.8}", 4.0 / 3f64.sqrt());
    println!("multiplier      {:.8}", gs.multiplier);
    println!("max |u - sech|  {:.2e}", gs.field.max_diff(&exact));
    Ok(())
}
