use proptest::prelude::*;

use slcurv_core::convexops::{kernel_weights, min_combine, mollify, MollifyConfig};
use slcurv_core::{DomainSpec, GraphFn, Grid};

fn grid() -> Grid {
    Grid::new(DomainSpec::disk(1.0).unwrap(), 16, 32).unwrap()
}

fn graph(g: &Grid, vals: &[f64]) -> GraphFn {
    GraphFn::from_fn(g.clone(), |n| if g.is_boundary(n.index) { 0.0 } else { vals[n.index] }).unwrap()
}

fn interior_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 17 * 32)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mollify_preserves_order(base in interior_values(), extra in interior_values(), eps in 0.15f64..0.3) {
        let g = grid();
        let f = graph(&g, &base);
        let sum: Vec<f64> = base.iter().zip(&extra).map(|(a, b)| a + b).collect();
        let h = graph(&g, &sum);
        let cfg = MollifyConfig::new(eps);
        let (mf, mh) = (mollify(&f, &cfg).unwrap(), mollify(&h, &cfg).unwrap());
        for (a, b) in mf.values().iter().zip(mh.values()) {
            prop_assert!(*a <= b + 1e-12);
        }
    }

    #[test]
    fn min_combine_is_a_lower_envelope(a in interior_values(), b in interior_values()) {
        let g = grid();
        let (f1, f2) = (graph(&g, &a), graph(&g, &b));
        let m = min_combine(&f1, &f2).unwrap();
        let swapped = min_combine(&f2, &f1).unwrap();
        prop_assert_eq!(m.values(), swapped.values());
        for i in 0..g.len() {
            prop_assert_eq!(m.values()[i], f1.values()[i].min(f2.values()[i]));
        }
    }

    #[test]
    fn kernel_mass_is_one(index in 0usize..16 * 32, eps in 0.125f64..0.4) {
        let g = grid();
        let w = kernel_weights(&g, &MollifyConfig::new(eps), index);
        let mass: f64 = w.iter().map(|(_, x)| x).sum();
        prop_assert!((mass - 1.0).abs() <= 1e-12);
        prop_assert!(w.iter().all(|(_, x)| *x >= 0.0));
    }
}
