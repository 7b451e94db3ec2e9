//! Writing and reading `axfield-v1` files, the format used for seeds,
//! checkpoints and solutions.

use stripspectrum::analysis::diagnostics::sign_change;
use stripspectrum::constructions::cutoff_seed;
use stripspectrum::domains::{build_mask, DomainSpec};
use stripspectrum::grid::{build_grid, GridSpec, ScalarField};
use stripspectrum::io::{read_field, write_field};

fn main() -> stripspectrum::Result<()> {
    let radial = build_grid(GridSpec::Radial { h: 0.1, r_max: 10.0, dim: 3 })?;
    let omega = ScalarField::from_fn(radial, radial.interior_mask(), |r, _| (-r).exp())?;

    let grid = build_grid(GridSpec::Axial { hs: 0.1, hz: 0.1, s_max: 6.0, z_min: -6.0, z_max: 6.0, dim: 3 })?;
    let domain = build_mask(&DomainSpec::strip(6.0), &grid)?;
    let seed = cutoff_seed(&omega, 6.0, 0.0, 4.0, &grid, &domain.mask)?;

    let dir = std::env::temp_dir().join("stripspectrum-field-files");
    let path = dir.join("seed.axf");
    write_field(&path, &seed)?;
    let back = read_field(&path)?;
    println!("wrote {} ({} nodes, {} inside)", path.display(), grid.len(), domain.count());
    println!("read back identical: {}", back == seed);
    println!("sign change: {}", sign_change(&back)?);
    let header: Vec<String> = std::fs::read_to_string(&path)
        .map_err(|e| stripspectrum::Error::io(&path, e))?
        .lines()
        .take(6)
        .map(String::from)
        .collect();
    println!("header: {header:?}");
    Ok(())
}
