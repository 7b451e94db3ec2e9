use proptest::prelude::*;
use stripspectrum::grid::{build_grid, Grid, GridSpec, ScalarField};
use stripspectrum::io::{mask_path, read_field, write_field};
use stripspectrum::Error;

fn grid_strategy() -> impl Strategy<Value = Grid> {
    prop_oneof![
        (0.01f64..1.0, -50.0f64..0.0, 3usize..40).prop_map(|(h, lo, n)| GridSpec::Line { h, x_min: lo, x_max: lo + h * n as f64 }),
        (0.01f64..1.0, 3usize..40, 2usize..6).prop_map(|(h, n, dim)| GridSpec::Radial { h, r_max: h * n as f64, dim }),
        (0.01f64..1.0, 0.01f64..1.0, 3usize..12, 3usize..12, -9.0f64..9.0, 3usize..6).prop_map(|(hs, hz, ns, nz, z0, dim)| {
            GridSpec::Axial { hs, hz, s_max: hs * ns as f64, z_min: z0, z_max: z0 + hz * nz as f64, dim }
        }),
    ]
    .prop_map(|spec| build_grid(spec).unwrap())
}

fn field_strategy() -> impl Strategy<Value = ScalarField> {
    grid_strategy().prop_flat_map(|g| {
        let n = g.len();
        (
            prop::collection::vec(prop_oneof![-1e6f64..1e6, -1e-300f64..1e-300], n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(v, m)| ScalarField::new(g, v, m).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn files_reproduce_fields_bit_for_bit(u in field_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.axf");
        write_field(&path, &u).unwrap();
        let back = read_field(&path).unwrap();
        prop_assert_eq!(back.grid(), u.grid());
        prop_assert_eq!(back.mask(), u.mask());
        for (a, b) in back.values().iter().zip(u.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn missing_mask_is_an_io_error_and_garbage_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let g = build_grid(GridSpec::Line { h: 0.5, x_min: 0.0, x_max: 2.0 }).unwrap();
    let path = dir.path().join("u.axf");
    write_field(&path, &ScalarField::zeros(g, g.full_mask())).unwrap();
    std::fs::write(&path, "axfield-v1\nline\n5\n0.5\n0\n1\n0\n0\nnot-a-number\n0\n0\n").unwrap();
    assert!(matches!(read_field(&path), Err(Error::Format { .. })));
    std::fs::remove_file(mask_path(&path)).unwrap();
    assert!(matches!(read_field(&path), Err(Error::Io { .. })));
}
