//! Moment values frozen from the area quadrature at kappa = 4, h = -1/2.

use proptest::prelude::*;
use q4lab_core::reduction::{basis_moments, BASIS, ORACLE_TOL};
use q4lab_core::{assemble_I, moment, Method, ModelParams, MomentIndex, Route};

const FROZEN: [f64; 6] = [
    0.3191939205000778,
    0.29913709387248205,
    0.3046006829454758,
    0.29941763087319956,
    0.36728793609851695,
    0.33246314619502215,
];

#[test]
fn basis_moments_at_the_midlevel() {
    let p = ModelParams::new(4.0, [0.0; 4]).unwrap();
    let v = basis_moments(-0.5, &p, ORACLE_TOL).unwrap();
    for (m, (a, b)) in v.iter().zip(FROZEN).enumerate() {
        assert!((a - b).abs() < 1e-10 * b, "{:?}: {a} vs {b}", BASIS[m]);
    }
    for ((i, j), b) in BASIS.into_iter().zip(FROZEN) {
        let a = moment(MomentIndex::symmetric(i, j), -0.5, &p, Method::Area2d, 1e-12).unwrap().value;
        assert!((a - b).abs() < 1e-9 * b);
    }
}

#[test]
fn endpoints_are_refused() {
    let p = ModelParams::new(4.0, [0.0; 4]).unwrap();
    for h in [-2.0 / 3.0, -1.0 / 3.0, -0.2] {
        assert!(moment(MomentIndex::symmetric(0, 0), h, &p, Method::Green, 1e-10).is_err());
    }
}

fn level(k: f64, frac: f64) -> (ModelParams, f64) {
    let p = ModelParams::new(k, [0.0; 4]).unwrap();
    let (lo, hi) = p.annulus();
    (p, lo + frac * (hi - lo))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quadratures_agree(k in 1.2f64..10.0, frac in 0.02f64..0.98, m in 0usize..6) {
        let (p, h) = level(k, frac);
        let ix = MomentIndex::symmetric(BASIS[m].0, BASIS[m].1);
        let g = moment(ix, h, &p, Method::Green, ORACLE_TOL).unwrap().value;
        let a = moment(ix, h, &p, Method::Area2d, 1e-10).unwrap().value;
        prop_assert!((g - a).abs() <= 1e-8 * a.abs());
    }

    #[test]
    fn melnikov_integral_is_linear_in_the_weights(
        k in 1.2f64..10.0,
        frac in 0.05f64..0.95,
        a in prop::array::uniform4(-1.0f64..1.0),
        b in prop::array::uniform4(-1.0f64..1.0),
        s in -2.0f64..2.0,
    ) {
        let (p, h) = level(k, frac);
        let combo: [f64; 4] = std::array::from_fn(|m| a[m] + s * b[m]);
        let ia = assemble_I(h, &p.with_mu(a), Route::Reduced).unwrap();
        let ib = assemble_I(h, &p.with_mu(b), Route::Reduced).unwrap();
        let ic = assemble_I(h, &p.with_mu(combo), Route::Reduced).unwrap();
        let scale = ia.abs() + s.abs() * ib.abs() + 1e-12;
        prop_assert!((ic - ia - s * ib).abs() <= 1e-9 * scale);
        for route in Route::ALL {
            let other = assemble_I(h, &p.with_mu(a), route).unwrap();
            prop_assert!((other - ia).abs() <= 1e-8 * (ia.abs() + 1e-3));
        }
    }
}
