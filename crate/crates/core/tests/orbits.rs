use num_complex::Complex64 as C;
use q4lab_core::dynamics::{annulus_family, integrate_orbit, orbit_period, time_reversal_error};
use q4lab_core::{conservation_report, ModelParams};

#[test]
fn annulus_orbits_conserve_and_reverse() {
    for k in [1.5, 4.0, 9.0] {
        let p = ModelParams::new(k, [0.0; 4]).unwrap();
        for pt in annulus_family(&p, 4).unwrap() {
            let period = orbit_period(pt.z, &p, 1e-12).unwrap();
            let orbit = integrate_orbit(pt.z, 10.0 * period, &p, 1e-12).unwrap();
            let c = conservation_report(&orbit).unwrap();
            assert!(c.max_drift < 1e-8, "k={k} {pt:?}: {}", c.max_drift);
            assert!((c.h_level - pt.h_level).abs() < 1e-12);
            assert!(time_reversal_error(pt.z, period, &p, 1e-12).unwrap() < 1e-9);
        }
    }
}

#[test]
fn escaping_orbit_is_reported() {
    let p = ModelParams::new(4.0, [0.0; 4]).unwrap();
    let far = C::new(5.0, 5.0);
    assert!(integrate_orbit(far, 100.0, &p, 1e-10).is_err());
}
