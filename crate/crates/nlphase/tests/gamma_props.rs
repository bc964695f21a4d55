use nlphase::cell::CellOptions;
use nlphase::fields::{inner_set, Boundary, Field, Grid, Mask};
use nlphase::gamma::{modify, recovery_flat, EpsilonSchedule, ModifyOptions};
use nlphase::kernels::Kernel;
use nlphase::potentials::make_quartic;
use proptest::prelude::*;

#[test]
fn compact_kernel_flat_recovery_approaches_psi() {
    // Finite range: the only loss is the O(ε) strip at the prism ends.
    let j = Kernel::compact_radial(2, 1.0).unwrap();
    let s = EpsilonSchedule::new(vec![0.08, 0.04, 0.02], 8.0).unwrap();
    let r = recovery_flat(&[0.0, 1.0], [0.5, 0.5], 1.0, 0.5, &j, &make_quartic(), &s, &CellOptions::default()).unwrap();
    let gaps: Vec<f64> = r.rows.iter().map(|x| (x.total / r.target - 1.0).abs()).collect();
    assert!(gaps.windows(2).all(|p| p[1] < p[0]), "{gaps:?}");
    assert!(r.final_ratio() <= 1.0 + 1e-9);
    assert!(gaps[2] < 0.05, "{gaps:?}");
}

fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..=1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn glued_field_is_exact_off_the_layer(a in values(200), b in values(200), sigma in 0.01f64..1.0, trunc in any::<bool>()) {
        let g = Grid::new_1d(1.0, 200, 0.0, Boundary::Boxed).unwrap();
        let (u, w) = (Field::new(g.clone(), a).unwrap(), Field::new(g.clone(), b).unwrap());
        let omega = Mask::full(&g);
        let d = inner_set(&omega, 0.15);
        let j = if trunc { Kernel::fractional(1, 0.75).unwrap().truncated(0.3).unwrap() } else { Kernel::compact_radial(1, 1.0).unwrap() };
        let r = modify(&u, &w, &omega, &d, 0.2, 0.02, &j, &make_quartic(), &ModifyOptions::with_sigma(sigma)).unwrap();
        prop_assert!(r.inner_exact && r.outer_exact);
        let v = r.v.unwrap();
        for k in 0..g.len() {
            let (lo, hi) = (u.values[k].min(w.values[k]), u.values[k].max(w.values[k]));
            prop_assert!(v.values[k] >= lo - 1e-12 && v.values[k] <= hi + 1e-12);
        }
        prop_assert!(r.shell as f64 * r.delta_tilde + r.micro_shells as f64 * 0.02 <= 0.2 + 1e-12);
        prop_assert!((r.slack - (r.lhs - r.rhs)).abs() < 1e-12 * r.lhs.abs().max(1.0));
    }

    #[test]
    fn smaller_budget_never_fewer_shells(a in values(120), s1 in 0.01f64..1.0) {
        let g = Grid::new_1d(1.0, 120, 0.0, Boundary::Boxed).unwrap();
        let u = Field::new(g.clone(), a).unwrap();
        let w = Field::from_fn(&g, |x| (x[0] - 0.5).signum());
        let omega = Mask::full(&g);
        let d = inner_set(&omega, 0.1);
        let j = Kernel::compact_radial(1, 1.0).unwrap();
        let big = modify(&u, &w, &omega, &d, 0.2, 0.02, &j, &make_quartic(), &ModifyOptions::with_sigma(s1)).unwrap();
        let small = modify(&u, &w, &omega, &d, 0.2, 0.02, &j, &make_quartic(), &ModifyOptions::with_sigma(0.5 * s1)).unwrap();
        prop_assert!(small.macro_shells >= big.macro_shells);
        prop_assert_eq!(small.rhs, big.rhs);
    }
}
