use nlphase::energy::{kinetic_direct, kinetic_fast, kinetic_masked_fft, potential_energy, total_energy, truncated_energy};
use nlphase::fields::{Boundary, Field, Grid, Mask};
use nlphase::kernels::Kernel;
use nlphase::potentials::make_quartic;
use proptest::prelude::*;

fn grid1(n: usize, boundary: Boundary) -> Grid {
    Grid::new_1d(1.0, n, 0.0, boundary).unwrap()
}

#[test]
fn checkerboard_fast_matches_direct() {
    let g = Grid::new_2d([1.0, 1.0], [16, 16], [0.0, 0.0], Boundary::Periodic).unwrap();
    let u = Field::new(g.clone(), (0..256).map(|k| if (k % 16 + k / 16) % 2 == 0 { 1.0 } else { -1.0 }).collect()).unwrap();
    let j = Kernel::fractional(2, 0.75).unwrap().truncated(0.25).unwrap();
    let full = Mask::full(&g);
    let d = kinetic_direct(&u, &full, &full, &j, 0.1).unwrap();
    let f = kinetic_fast(&u, &j, 0.1).unwrap();
    assert!((d - f).abs() <= 1e-9 * d, "{d} {f}");
}

#[test]
fn fast_rejects_boxed_grids() {
    let g = grid1(8, Boundary::Boxed);
    assert!(kinetic_fast(&Field::constant(&g, 0.0), &Kernel::compact_radial(1, 1.0).unwrap(), 0.1).is_err());
}

#[test]
fn truncation_beyond_support_kills_kinetic() {
    let g = grid1(32, Boundary::Periodic);
    let u = Field::from_fn(&g, |c| (6.0 * c[0]).sin());
    let j = Kernel::compact_radial(1, 0.5).unwrap();
    let e = truncated_energy(&u, None, &j, 0.75, &make_quartic(), 0.1).unwrap();
    assert_eq!(e.kinetic, 0.0);
    assert!(truncated_energy(&u, None, &j, 1.0, &make_quartic(), 0.1).is_err());
}

fn field_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..=1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn symmetric_in_regions(v in field_strategy(48), cut_a in 0usize..48, cut_b in 0usize..48) {
        let g = grid1(48, Boundary::Boxed);
        let u = Field::new(g.clone(), v).unwrap();
        let a = Mask::from_fn(&g, |c| c[0] < cut_a as f64 / 48.0);
        let b = Mask::from_fn(&g, |c| c[0] >= cut_b as f64 / 48.0);
        let j = Kernel::fractional(1, 0.75).unwrap();
        let ab = kinetic_direct(&u, &a, &b, &j, 0.1).unwrap();
        let ba = kinetic_direct(&u, &b, &a, &j, 0.1).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1e-300));
        let m = kinetic_masked_fft(&u, &a, &b, &j, 0.1).unwrap();
        prop_assert!((ab - m).abs() <= 1e-9 * ab.max(1e-12));
    }

    #[test]
    fn split_identity(v in field_strategy(40), cut in 1usize..39) {
        let g = grid1(40, Boundary::Periodic);
        let u = Field::new(g.clone(), v).unwrap();
        let a = Mask::from_fn(&g, |c| c[0] < cut as f64 / 40.0);
        let b = a.complement();
        let full = Mask::full(&g);
        let j = Kernel::fractional(1, 0.75).unwrap().truncated(0.3).unwrap();
        let whole = kinetic_direct(&u, &full, &full, &j, 0.05).unwrap();
        let parts = kinetic_direct(&u, &a, &a, &j, 0.05).unwrap()
            + kinetic_direct(&u, &b, &b, &j, 0.05).unwrap()
            + 2.0 * kinetic_direct(&u, &a, &b, &j, 0.05).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-11 * whole.max(1e-12));
    }

    #[test]
    fn potential_additive(v in field_strategy(30), cut in 0usize..30) {
        let g = grid1(30, Boundary::Boxed);
        let u = Field::new(g.clone(), v).unwrap();
        let a = Mask::from_fn(&g, |c| c[0] < cut as f64 / 30.0);
        let w = make_quartic();
        let sum = potential_energy(&u, Some(&a), &w, 0.2).unwrap() + potential_energy(&u, Some(&a.complement()), &w, 0.2).unwrap();
        let all = potential_energy(&u, None, &w, 0.2).unwrap();
        prop_assert!((sum - all).abs() <= 1e-12 * all.max(1.0));
    }

    #[test]
    fn truncation_is_monotone(v in field_strategy(32)) {
        let g = grid1(32, Boundary::Periodic);
        let u = Field::new(g, v).unwrap();
        let j = Kernel::fractional(1, 0.75).unwrap();
        let w = make_quartic();
        let full = total_energy(&u, None, &j, &w, 0.1).unwrap().total;
        let mut prev = 0.0;
        for k in 1..=6 {
            let e = truncated_energy(&u, None, &j, 0.5f64.powi(k), &w, 0.1).unwrap().total;
            prop_assert!(e >= prev * (1.0 - 1e-12));
            prop_assert!(e <= full * (1.0 + 1e-12));
            prev = e;
        }
    }
}
