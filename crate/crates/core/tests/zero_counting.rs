use proptest::prelude::*;
use q4lab_core::analysis::count_zeros;
use q4lab_core::analysis::winding::{winding_count, PolyPair, RealTrace};
use q4lab_core::ModelParams;

fn poly_with_roots(roots: &[f64], x: f64) -> f64 {
    roots.iter().map(|r| x - r).product()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn separated_simple_roots_are_all_found(mut roots in prop::collection::vec(-0.9f64..0.9, 0..6)) {
        roots.sort_by(f64::total_cmp);
        prop_assume!(roots.windows(2).all(|w| w[1] - w[0] > 0.05));
        let r = roots.clone();
        let rep = count_zeros(move |x| Ok(poly_with_roots(&r, x)), (-1.0, 1.0), 128, 1e-13).unwrap();
        prop_assert_eq!(rep.count as usize, roots.len());
        for (z, r) in rep.zeros.iter().zip(&roots) {
            prop_assert!((z.location - r).abs() < 1e-10);
        }
    }

    #[test]
    fn count_is_stable_under_grid_doubling(c in prop::array::uniform5(-1.0f64..1.0)) {
        let f = move |x: f64| Ok(c.iter().rev().fold(0.0, |acc, a| acc * x + a) + 0.3 * (5.0 * x).sin());
        let coarse = count_zeros(f, (-1.0, 1.0), 128, 1e-12).unwrap();
        let fine = count_zeros(f, (-1.0, 1.0), 256, 1e-12).unwrap();
        prop_assert_eq!(coarse.count, fine.count);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn winding_bounds_real_zeros_and_ignores_epsilon(
        k in prop::sample::select(vec![1.5, 4.0, 9.0]),
        c in prop::collection::vec(-1.0f64..1.0, 5),
    ) {
        let p = ModelParams::new(k, [0.0; 4]).unwrap();
        let pair = PolyPair::new(2, c[..3].to_vec(), c[3..].to_vec()).unwrap();
        let real = RealTrace::build(&p, 256).unwrap().real_zeros(&pair).unwrap();
        let closest = real.zeros.iter().map(|z| z.location - 1.0).fold(f64::INFINITY, f64::min);
        let eps = (0.25 * closest).min(1e-3);
        let a = winding_count(&pair, &p, eps).unwrap();
        let b = winding_count(&pair, &p, 0.5 * eps).unwrap();
        prop_assert_eq!(a.winding, b.winding);
        prop_assert!(a.winding >= i64::from(real.count));
        prop_assert!(a.winding <= 4 && a.residual < 0.2);
    }
}
