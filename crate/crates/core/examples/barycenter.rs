//! The barycenter: zero for a centred ground state, equivariant under axial
//! translations, blind to scaling.

use stripspectrum::analysis::{ground_state_on, whole_space_axial};
use stripspectrum::barycenter::MollifierKernel;
use stripspectrum::constructions::translate_z;
use stripspectrum::domains::DomainSpec;
use stripspectrum::flow::FlowConfig;

fn main() -> stripspectrum::Result<()> {
    let gs = ground_state_on(&DomainSpec::whole_space(), whole_space_axial(0.2, 12.0, 3), 4.0, &FlowConfig::default())?;
    let u = gs.field;
    let kernel = MollifierKernel::for_grid(u.grid())?;

    let (b0, level) = kernel.beta_with_level(&u, 4.0)?;
    println!("beta(omega)         {b0:+.3e}  (threshold {level:.4})");
    for dz in [-3.0, 1.2, 4.0] {
        let shifted = translate_z(&u, dz)?;
        let b = kernel.beta(&shifted.field, 4.0)?;
        println!("beta(shift {dz:+.1})    {b:+.6}  (grid exact: {})", shifted.grid_exact);
    }
    println!("beta(-7.5 omega)    {:+.3e}", kernel.beta(&u.scaled(-7.5), 4.0)?);
    Ok(())
}
