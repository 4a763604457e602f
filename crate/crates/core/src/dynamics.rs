//! The unperturbed quadratic system `z' = -iz + 4z^2 + 2|z|^2 + a conj(z)^2`
//! and the conservation of its rational first integral.

use std::ops::ControlFlow;

use num_complex::Complex64 as C;

use crate::error::{Error, Result};
use crate::model::{
    hamiltonian, in_omega, inverse_coordinate_map, invert, level_of, symmetric_hamiltonian, Form,
    ModelParams,
};
use crate::ode::Dopri5;

/// Orbits leaving this modulus are reported as blow-up.
pub const BLOW_UP_RADIUS: f64 = 1e6;

pub fn vector_field_rhs(z: C, params: &ModelParams) -> C {
    let i = C::new(0.0, 1.0);
    -i * z + 4.0 * z * z + 2.0 * z.norm_sqr() + params.alpha() * z.conj() * z.conj()
}

fn real_rhs(params: &ModelParams) -> impl Fn(f64, &[f64], &mut [f64]) + '_ {
    move |_, y, dy| {
        let v = vector_field_rhs(C::new(y[0], y[1]), params);
        dy[0] = v.re;
        dy[1] = v.im;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub samples: Vec<(f64, C)>,
    pub params: ModelParams,
    pub integrator_tol: f64,
}

/// Samples every `t_end / 1000`.
pub fn integrate_orbit(z0: C, t_end: f64, params: &ModelParams, tol: f64) -> Result<Orbit> {
    integrate_orbit_sampled(z0, t_end, params, tol, t_end.abs() / 1000.0)
}

/// Samples every `stride` time units; `t_end` may be negative.
pub fn integrate_orbit_sampled(z0: C, t_end: f64, params: &ModelParams, tol: f64, stride: f64) -> Result<Orbit> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut samples = vec![(0.0, z0)];
    if t_end == 0.0 {
        return Ok(Orbit { samples, params: params.clone(), integrator_tol: tol });
    }
    if !(stride > 0.0) {
        return Err(Error::Domain(format!("stride must be positive, got {stride}")));
    }
    let n = (t_end.abs() / stride).ceil().max(1.0) as usize;
    let mut ig = Dopri5::new(tol, tol * 1e-3);
    let mut y = vec![z0.re, z0.im];
    let f = real_rhs(params);
    let mut t = 0.0;
    for k in 1..=n {
        let t_next = if k == n { t_end } else { t_end * k as f64 / n as f64 };
        let mut escaped = None;
        let (_, y_new) = ig.integrate_observed(&f, t, &y, t_next, |s, y| {
            if y[0].hypot(y[1]) > BLOW_UP_RADIUS {
                escaped = Some(s);
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        })?;
        if let Some(s) = escaped {
            return Err(Error::BlowUp(s));
        }
        y = y_new;
        t = t_next;
        samples.push((t, C::new(y[0], y[1])));
    }
    Ok(Orbit { samples, params: params.clone(), integrator_tol: tol })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conservation {
    /// Largest `|H(z) - H(z0)| / |H(z0)|` over the samples.
    pub max_drift: f64,
    /// `H(z0)`.
    pub t_level: f64,
    /// The level `-sqrt(t)` in the cubic normalization.
    pub h_level: f64,
}

pub fn first_integral(z: C, params: &ModelParams) -> Result<f64> {
    hamiltonian(Form::OriginalRational, (z.re, z.im), params, None)
}

pub fn conservation_report(orbit: &Orbit) -> Result<Conservation> {
    let p = &orbit.params;
    let (_, z0) = orbit.samples[0];
    let t_level = first_integral(z0, p)?;
    let mut max_drift: f64 = 0.0;
    for &(t, z) in &orbit.samples {
        if !in_omega(z.re, z.im, p) {
            return Err(Error::OmegaExit(t));
        }
        max_drift = max_drift.max((first_integral(z, p)? - t_level).abs() / t_level.abs());
    }
    Ok(Conservation { max_drift, t_level, h_level: -t_level.sqrt() })
}

/// `H` drift per sample, aligned with `orbit.samples`.
pub fn drift_series(orbit: &Orbit) -> Result<Vec<f64>> {
    let t0 = first_integral(orbit.samples[0].1, &orbit.params)?;
    orbit
        .samples
        .iter()
        .map(|&(_, z)| first_integral(z, &orbit.params).map(|v| (v - t0) / t0.abs()))
        .collect()
}

/// First return time to the line through `z0` orthogonal to the flow.
pub fn orbit_period(z0: C, params: &ModelParams, tol: f64) -> Result<f64> {
    let v0 = vector_field_rhs(z0, params);
    if v0.norm() == 0.0 {
        return Err(Error::Degenerate { h: f64::NAN, reason: "equilibrium has no period".into() });
    }
    let section = |y: &[f64]| ((C::new(y[0], y[1]) - z0) * v0.conj()).re;
    let f = real_rhs(params);
    let mut ig = Dopri5::new(tol, tol * 1e-3);
    let mut prev = (0.0, vec![z0.re, z0.im]);
    let mut bracket = None;
    let mut left = false;
    let mut escaped = None;
    ig.integrate_observed(&f, 0.0, &[z0.re, z0.im], 1e6, |t, y| {
        if y[0].hypot(y[1]) > BLOW_UP_RADIUS {
            escaped = Some(t);
            return ControlFlow::Break(());
        }
        let g = section(y);
        if g < 0.0 {
            left = true;
        }
        if left && g >= 0.0 && section(&prev.1) < 0.0 {
            bracket = Some((prev.clone(), (t, y.to_vec())));
            return ControlFlow::Break(());
        }
        prev = (t, y.to_vec());
        ControlFlow::Continue(())
    })?;
    if let Some(t) = escaped {
        return Err(Error::BlowUp(t));
    }
    let ((mut ta, ya), (mut tb, _)) =
        bracket.ok_or_else(|| Error::NonConvergence("orbit did not return to its section".into()))?;
    // bisection in time, integrating afresh from the left end each time
    let (mut ga, t_start) = (section(&ya), ta);
    for _ in 0..200 {
        if tb - ta <= 4.0 * f64::EPSILON * tb {
            break;
        }
        let tm = 0.5 * (ta + tb);
        let ym = Dopri5::new(tol, tol * 1e-3).integrate(&f, t_start, &ya, tm)?;
        let gm = section(&ym);
        if gm.signum() == ga.signum() {
            ta = tm;
            ga = gm;
        } else {
            tb = tm;
        }
    }
    Ok(0.5 * (ta + tb))
}

/// `|z(0) - z0|` after integrating to `t` and back.
pub fn time_reversal_error(z0: C, t: f64, params: &ModelParams, tol: f64) -> Result<f64> {
    let f = real_rhs(params);
    let y = Dopri5::new(tol, tol * 1e-3).integrate(&f, 0.0, &[z0.re, z0.im], t)?;
    let back = Dopri5::new(tol, tol * 1e-3).integrate(&f, t, &y, 0.0)?;
    Ok(C::new(back[0] - z0.re, back[1] - z0.im).norm())
}

/// A point of the family joining the center to the saddle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyPoint {
    pub lambda: f64,
    pub z: C,
    /// Symmetric Hamiltonian at the preimage of `z`.
    pub h_symmetric: f64,
    /// Level of `z` from the original first integral.
    pub h_level: f64,
}

/// `n` points on the straight segment from the center `(1, 1)` to the
/// saddle `(0, 1/sqrt(k))` of the symmetric form, moved to the original
/// plane by inversion, shift and the inverse coordinate map.
pub fn annulus_family(params: &ModelParams, n: usize) -> Result<Vec<FamilyPoint>> {
    let k = params.kappa();
    (0..n)
        .map(|m| {
            let lambda = (m as f64 + 0.5) / n as f64;
            let (u, v) = (1.0 - lambda, 1.0 + lambda * (1.0 / k.sqrt() - 1.0));
            let (xc, yc) = invert((u, v))?;
            let (x, y) = inverse_coordinate_map((xc, yc - 1.0), params)?;
            Ok(FamilyPoint {
                lambda,
                z: C::new(x, y),
                h_symmetric: symmetric_hamiltonian(u, v, k),
                h_level: level_of((x, y), params)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p4() -> ModelParams {
        ModelParams::new(4.0, [0.0; 4]).unwrap()
    }

    #[test]
    fn origin_is_an_equilibrium() {
        let p = p4();
        assert_eq!(vector_field_rhs(C::new(0.0, 0.0), &p), C::new(0.0, 0.0));
        let o = integrate_orbit(C::new(0.0, 0.0), 5.0, &p, 1e-10).unwrap();
        assert!(o.samples.iter().all(|&(_, z)| z == C::new(0.0, 0.0)));
        let c = conservation_report(&o).unwrap();
        assert_eq!(c.t_level, 4.0 / 9.0);
        assert_eq!(c.max_drift, 0.0);
    }

    #[test]
    fn componentwise_expansion() {
        let p = p4();
        let a = p.alpha();
        let (x, y) = (0.03, -0.02);
        let v = vector_field_rhs(C::new(x, y), &p);
        let re = y + 4.0 * (x * x - y * y) + 2.0 * (x * x + y * y) + a.re * (x * x - y * y) + a.im * 2.0 * x * y;
        let im = -x + 8.0 * x * y + a.im * (x * x - y * y) - a.re * 2.0 * x * y;
        assert!((v.re - re).abs() < 1e-15 && (v.im - im).abs() < 1e-15);
    }

    #[test]
    fn linear_part_rotates() {
        // the Jacobian at 0 is [[0, 1], [-1, 0]] with eigenvalues +-i
        let p = p4();
        let e = 1e-7;
        let vx = vector_field_rhs(C::new(e, 0.0), &p) / e;
        let vy = vector_field_rhs(C::new(0.0, e), &p) / e;
        assert!((vx - C::new(0.0, -1.0)).norm() < 1e-6);
        assert!((vy - C::new(1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn small_orbit_closes() {
        let p = p4();
        let z0 = C::new(0.02, 0.0);
        let period = orbit_period(z0, &p, 1e-12).unwrap();
        assert!((period - 2.0 * std::f64::consts::PI).abs() < 0.5);
        let o = integrate_orbit(z0, period, &p, 1e-12).unwrap();
        assert!((o.samples.last().unwrap().1 - z0).norm() < 1e-6);
    }

    #[test]
    fn family_sweeps_the_annulus() {
        let p = p4();
        let fam = annulus_family(&p, 50).unwrap();
        for pt in &fam {
            assert!((pt.h_symmetric - pt.h_level).abs() < 1e-10, "{pt:?}");
        }
        let (lo, hi) = p.annulus();
        assert!(fam.windows(2).all(|w| w[0].h_level < w[1].h_level));
        assert!(fam.iter().all(|pt| lo < pt.h_level && pt.h_level < hi));
    }
}
