//! Staircase geometry: strip widths from the Calkin–Wilf enumeration of the
//! positive rationals, strip anchors, gap midpoints and the node mask.

use stripspectrum::domains::{build_mask, enumerate_rationals, rational_to_f64, DomainSpec};
use stripspectrum::grid::{build_grid, GridSpec};

fn main() -> stripspectrum::Result<()> {
    let widths: Vec<f64> = enumerate_rationals(6).into_iter().map(rational_to_f64).collect();
    let rationals: Vec<String> = enumerate_rationals(6).iter().map(|r| r.to_string()).collect();
    println!("widths {}", rationals.join(", "));

    let spec = DomainSpec::staircase(widths);
    let anchors = spec.anchors().expect("staircase has strips");
    for (k, s) in anchors.strips.iter().enumerate() {
        println!("strip {}  width {:.4}  z in ({:.4}, {:.4})", k + 1, s.width, s.bottom, s.top);
    }
    println!("gap midpoints {:?}", anchors.gap_midpoints);

    let top = anchors.strips.last().map(|s| s.top).unwrap_or(0.0);
    let grid = build_grid(GridSpec::Axial { hs: 0.25, hz: 0.25, s_max: 4.0, z_min: -2.0, z_max: top + 2.0, dim: 3 })?;
    let domain = build_mask(&spec, &grid)?;
    println!("{} of {} nodes inside", domain.count(), grid.len());

    // meridian picture: one row per z, one column per s
    for j in (0..grid.nz()).rev() {
        let row: String = (0..grid.ns()).map(|i| if domain.mask[grid.index(i, j)] { '#' } else { '.' }).collect();
        println!("{:>6.2} {row}", grid.z(j));
    }
    Ok(())
}
