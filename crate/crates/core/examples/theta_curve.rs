//! Strip energies `Θ(q)`: decreasing in `q`, above `m`, and growing like
//! `q^{−1/2}` for thin strips in three dimensions with `p = 4`.

use stripspectrum::analysis::{ground_state_on, theta_curve, whole_space_axial, ThetaConfig};
use stripspectrum::domains::DomainSpec;
use stripspectrum::flow::FlowConfig;

fn main() -> stripspectrum::Result<()> {
    let h = 0.2;
    let m = ground_state_on(&DomainSpec::whole_space(), whole_space_axial(h, 12.0, 3), 4.0, &FlowConfig::default())?
        .require_converged()?
        .energy;
    let cfg = ThetaConfig { h, depth: 12.0, ..ThetaConfig::default() };
    let curve = theta_curve(&[0.25, 0.5, 1.0, 2.0, 4.0, 8.0], m, &cfg)?;

    println!("m = {m:.6} (axial box, h = {h})");
    println!("{:>6} {:>12} {:>10}", "q", "theta", "theta/m");
    for (q, t) in curve.valid() {
        println!("{q:>6} {t:>12.6} {:>10.4}", t / m);
    }
    println!("monotonicity       {}", curve.monotonicity().label());
    println!("all above m        {}", curve.above_m());
    println!("thin-strip slope   {:.3}", curve.loglog_slope(0.25, 1.0)?);
    Ok(())
}
