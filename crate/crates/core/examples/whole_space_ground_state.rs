//! The whole-space level `m` three ways: radial flow, radial shooting and the
//! axial box that the strip and staircase runs are compared against. The
//! radial minimizer is saved for use as a seed source.
//!
//! `cargo run --release --example whole_space_ground_state -- out/omega.axf`

use stripspectrum::analysis::{decay_fit, ground_state_on, shooting_ground_state, whole_space_axial, whole_space_radial, ShootingConfig};
use stripspectrum::domains::DomainSpec;
use stripspectrum::flow::FlowConfig;
use stripspectrum::io::write_field;

fn main() -> stripspectrum::Result<()> {
    let cfg = FlowConfig::default();
    let whole = DomainSpec::whole_space();

    let shot = shooting_ground_state(&ShootingConfig::default())?;
    println!("shooting        m = {:.8}  omega(0) = {:.8}", shot.m, shot.center);

    let radial = ground_state_on(&whole, whole_space_radial(0.05, 12.0, 3), 4.0, &cfg)?.require_converged()?;
    let doubled = ground_state_on(&whole, whole_space_radial(0.05, 24.0, 3), 4.0, &cfg)?.require_converged()?;
    println!("radial R = 12   m = {:.8}  ({} iters)", radial.energy, radial.iters);
    println!("radial R = 24   m = {:.8}", doubled.energy);
    println!("flow vs shooting {:.3e}", (radial.energy - shot.m).abs() / shot.m);

    let fit = decay_fit(&doubled.field, None)?;
    println!("tail constant   d = {:.6} (from |omega'|: {:.6}) on [{}, {}]", fit.d_value, fit.d_grad, fit.window.0, fit.window.1);

    let boxed = ground_state_on(&whole, whole_space_axial(0.2, 12.0, 3), 4.0, &cfg)?.require_converged()?;
    println!("axial box h=0.2 m = {:.8}  beta_z = {:.2e}", boxed.energy, boxed.beta_z);

    if let Some(path) = std::env::args().nth(1) {
        write_field(path.as_ref(), &radial.field)?;
        println!("wrote {path}");
    }
    Ok(())
}
