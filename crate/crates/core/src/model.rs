//! The codimension-four quadratic center: parameters, first integrals in
//! their several coordinate forms, and the geometry of the period annulus.
//!
//! Coordinates used throughout the crate:
//!
//! * *original*: the plane of `z = x + iy` for the complex vector field;
//! * *XY form*: `(X, Y)` with `X = sqrt(psi) > 0`, `Y = c x - (2 + b) y`;
//! * *cubic form*: `(X, Y + 1)`, whose level curves are
//!   `k/3 y^3 - x^2 y - h x^3 - (k-1) y + 2/3 (k-1) = 0`;
//! * *symmetric form*: the image of the cubic form under
//!   `(x, y) -> (1/x, y/x)`, with Hamiltonian
//!   `2/3 (k-1) x^3 - (k-1) x^2 y + k/3 y^3 - y`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Center level `h` shared by the cubic and symmetric forms.
pub const CENTER_LEVEL: f64 = -2.0 / 3.0;

/// Minimum distance from an endpoint of the annulus for operations that
/// need a nondegenerate oval.
pub const ENDPOINT_EXCLUSION: f64 = 1e-10;

/// Model constants. `b`, `c` and `alpha` are derived from `kappa`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    kappa: f64,
    b: f64,
    c: f64,
    alpha: Complex64,
    mu: [f64; 4],
}

impl ModelParams {
    /// Builds the parameter set from `kappa = 4 / (2 + b)`, taking `c > 0`.
    pub fn new(kappa: f64, mu: [f64; 4]) -> Result<Self> {
        if !kappa.is_finite() || kappa <= 1.0 {
            return Err(Error::Domain(format!("kappa must be finite and > 1, got {kappa}")));
        }
        if mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::Domain("perturbation weights must be finite".into()));
        }
        let b = 4.0 / kappa - 2.0;
        let c = (4.0 - b * b).sqrt();
        Ok(Self { kappa, b, c, alpha: Complex64::new(b, c), mu })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    /// Perturbation weights in the canonical (four-term reduced) basis.
    pub fn mu(&self) -> [f64; 4] {
        self.mu
    }

    pub fn with_mu(&self, mu: [f64; 4]) -> Self {
        Self { mu, ..*self }
    }

    pub fn saddle_level(&self) -> f64 {
        -2.0 / (3.0 * self.kappa.sqrt())
    }

    /// Open interval of levels filled by the period annulus around `(1, 1)`.
    pub fn annulus(&self) -> (f64, f64) {
        (CENTER_LEVEL, self.saddle_level())
    }

    /// Conversion factor `h = 8 (2 - b) t`.
    pub fn level_scale(&self) -> f64 {
        8.0 * (2.0 - self.b)
    }
}

/// Which first-integral expression to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Form {
    /// `phi^2 / psi^3` in the original plane.
    OriginalRational,
    /// The cubic-over-`X^3` integral in `(X, Y)` coordinates.
    XyForm,
    /// Left side of the cubic level equation (requires `h`).
    CubicForm,
    /// The centrally symmetric cubic Hamiltonian.
    SymmetricForm,
}

fn y_mix(x: f64, y: f64, p: &ModelParams) -> f64 {
    p.c * x - (2.0 + p.b) * y
}

/// Numerator polynomial `phi` of the rational first integral.
pub fn phi(x: f64, y: f64, p: &ModelParams) -> f64 {
    let big_y = y_mix(x, y, p);
    8.0 * y * (1.0 + big_y) - 2.0 / 3.0 * (1.0 + p.kappa * big_y.powi(3))
}

/// Denominator polynomial `psi` of the rational first integral.
pub fn psi(x: f64, y: f64, p: &ModelParams) -> f64 {
    let big_y = y_mix(x, y, p);
    1.0 - 8.0 * y + p.kappa * big_y * big_y
}

/// Whether `(x, y)` lies in the region `phi < 0 < psi`.
pub fn in_omega(x: f64, y: f64, p: &ModelParams) -> bool {
    phi(x, y, p) < 0.0 && psi(x, y, p) > 0.0
}

/// The cubic form's left side `k/3 y^3 - x^2 y - h x^3 - (k-1) y + 2/3 (k-1)`.
pub fn cubic_form(x: f64, y: f64, h: f64, kappa: f64) -> f64 {
    kappa / 3.0 * y.powi(3) - x * x * y - h * x.powi(3) - (kappa - 1.0) * y
        + 2.0 / 3.0 * (kappa - 1.0)
}

/// Gradient of [`cubic_form`] in `(x, y)`.
pub fn cubic_form_grad(x: f64, y: f64, h: f64, kappa: f64) -> (f64, f64) {
    (
        -2.0 * x * y - 3.0 * h * x * x,
        kappa * y * y - x * x - (kappa - 1.0),
    )
}

/// The symmetric Hamiltonian `2/3 (k-1) x^3 - (k-1) x^2 y + k/3 y^3 - y`.
pub fn symmetric_hamiltonian(x: f64, y: f64, kappa: f64) -> f64 {
    let km1 = kappa - 1.0;
    2.0 / 3.0 * km1 * x.powi(3) - km1 * x * x * y + kappa / 3.0 * y.powi(3) - y
}

/// Gradient of [`symmetric_hamiltonian`].
pub fn symmetric_grad(x: f64, y: f64, kappa: f64) -> (f64, f64) {
    let km1 = kappa - 1.0;
    (2.0 * km1 * x * (x - y), -km1 * x * x + kappa * y * y - 1.0)
}

/// Evaluates the requested first-integral expression at `point`.
pub fn hamiltonian(form: Form, point: (f64, f64), p: &ModelParams, h: Option<f64>) -> Result<f64> {
    let (x, y) = point;
    match form {
        Form::OriginalRational => {
            let ps = psi(x, y, p);
            if ps == 0.0 {
                return Err(Error::Singularity(format!("psi vanishes at ({x}, {y})")));
            }
            Ok(phi(x, y, p).powi(2) / ps.powi(3))
        }
        Form::XyForm => {
            if x == 0.0 {
                return Err(Error::Singularity("X = 0 in the XY form".into()));
            }
            let k = p.kappa;
            let poly = k / 3.0 * y.powi(3) + k * y * y + (1.0 - x * x) * y - x * x + 1.0 / 3.0;
            Ok(poly / (x.powi(3) * p.level_scale()))
        }
        Form::CubicForm => {
            let h = h.ok_or_else(|| Error::Domain("the cubic form needs a level h".into()))?;
            Ok(cubic_form(x, y, h, p.kappa))
        }
        Form::SymmetricForm => Ok(symmetric_hamiltonian(x, y, p.kappa)),
    }
}

/// Maps an original-plane point inside the region `psi > 0` to `(X, Y)`.
pub fn coordinate_map(point: (f64, f64), p: &ModelParams) -> Result<(f64, f64)> {
    let (x, y) = point;
    let ps = psi(x, y, p);
    if ps <= 0.0 || !ps.is_finite() {
        return Err(Error::Domain(format!("psi({x}, {y}) = {ps} is not positive")));
    }
    Ok((ps.sqrt(), y_mix(x, y, p)))
}

/// Inverse of [`coordinate_map`] on the sheet `X > 0`.
pub fn inverse_coordinate_map(point: (f64, f64), p: &ModelParams) -> Result<(f64, f64)> {
    let (big_x, big_y) = point;
    if big_x <= 0.0 {
        return Err(Error::Domain(format!("X = {big_x} is not positive")));
    }
    let y = (1.0 + p.kappa * big_y * big_y - big_x * big_x) / 8.0;
    let x = (big_y + (2.0 + p.b) * y) / p.c;
    Ok((x, y))
}

/// `(X, Y)` to cubic-form coordinates (the shift `y = Y + 1`).
pub fn xy_to_cubic(point: (f64, f64)) -> (f64, f64) {
    (point.0, point.1 + 1.0)
}

/// The inversion `(x, y) -> (1/x, y/x)`; it is its own inverse and maps
/// the cubic form to the symmetric form and back.
pub fn invert(point: (f64, f64)) -> Result<(f64, f64)> {
    if point.0 == 0.0 {
        return Err(Error::Singularity("inversion at x = 0".into()));
    }
    Ok((1.0 / point.0, point.1 / point.0))
}

/// Level `h = -sqrt(phi^2/psi^3)` of an original-plane point in the region
/// `phi < 0 < psi`, expressed in the cubic/symmetric normalization.
pub fn level_of(point: (f64, f64), p: &ModelParams) -> Result<f64> {
    let (x, y) = point;
    if !in_omega(x, y, p) {
        return Err(Error::Domain(format!("({x}, {y}) is outside the region phi < 0 < psi")));
    }
    Ok(-hamiltonian(Form::OriginalRational, point, p, None)?.sqrt())
}

/// Critical points of the symmetric Hamiltonian that bound the annulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalLevels {
    pub center_h: f64,
    pub saddle_h: f64,
    pub center_point: (f64, f64),
    pub saddle_point: (f64, f64),
}

pub fn critical_levels(p: &ModelParams) -> CriticalLevels {
    let sk = p.kappa.sqrt();
    CriticalLevels {
        center_h: CENTER_LEVEL,
        saddle_h: -2.0 / (3.0 * sk),
        center_point: (1.0, 1.0),
        saddle_point: (0.0, 1.0 / sk),
    }
}

/// All four finite critical points of the symmetric Hamiltonian with
/// their critical values.
pub fn all_critical_points(p: &ModelParams) -> [((f64, f64), f64); 4] {
    let sk = p.kappa.sqrt();
    let pts = [(1.0, 1.0), (-1.0, -1.0), (0.0, 1.0 / sk), (0.0, -1.0 / sk)];
    pts.map(|q| (q, symmetric_hamiltonian(q.0, q.1, p.kappa)))
}

/// Position of a level relative to the period annulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    CenterEnd,
    Interior,
    SaddleEnd,
    /// Below the center level: the part of `(-inf, saddle)` outside the annulus.
    Extended,
    Outside,
}

/// A level expressed in all three normalizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelPoint {
    pub h: f64,
    pub t: f64,
    pub s: f64,
    pub window: Window,
}

pub fn level_classify(h: f64, p: &ModelParams) -> LevelPoint {
    let hs = p.saddle_level();
    let tol = 1e-12;
    let window = if (h - CENTER_LEVEL).abs() <= tol {
        Window::CenterEnd
    } else if (h - hs).abs() <= tol {
        Window::SaddleEnd
    } else if h < CENTER_LEVEL {
        Window::Extended
    } else if h < hs {
        Window::Interior
    } else {
        Window::Outside
    };
    LevelPoint { h, t: h / p.level_scale(), s: 9.0 * p.kappa / 4.0 * h * h, window }
}

/// Fails unless `h` is inside the annulus and at least
/// [`ENDPOINT_EXCLUSION`] away from both ends.
pub fn require_interior(h: f64, p: &ModelParams) -> Result<LevelPoint> {
    let lp = level_classify(h, p);
    let (lo, hi) = p.annulus();
    if lp.window != Window::Interior || h - lo < ENDPOINT_EXCLUSION || hi - h < ENDPOINT_EXCLUSION {
        return Err(Error::Degenerate { h, reason: "level is not strictly inside the annulus".into() });
    }
    Ok(lp)
}

/// A real root of `k/3 y^3 - y = h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealRoot {
    pub value: f64,
    pub multiplicity: u8,
}

/// Real roots of `k/3 y^3 - y = h`, ascending. A double root is reported
/// once with multiplicity 2.
pub fn real_roots_y(h: f64, p: &ModelParams) -> Vec<RealRoot> {
    let k = p.kappa;
    // y^3 + pp y + qq = 0
    let pp = -3.0 / k;
    let qq = -3.0 * h / k;
    let f = |y: f64| k / 3.0 * y.powi(3) - y - h;
    let df = |y: f64| k * y * y - 1.0;
    let polish = |mut y: f64| {
        for _ in 0..4 {
            let d = df(y);
            if d == 0.0 {
                break;
            }
            let step = f(y) / d;
            if !step.is_finite() {
                break;
            }
            y -= step;
        }
        y
    };

    let disc = -(4.0 * pp.powi(3) + 27.0 * qq * qq);
    let scale = 4.0 * pp.abs().powi(3) + 27.0 * qq * qq;
    if disc.abs() <= 1e-13 * scale {
        // double root at -3q/(2p), simple root at 3q/p
        let double = -3.0 * qq / (2.0 * pp);
        let simple = 3.0 * qq / pp;
        let mut roots = vec![
            RealRoot { value: double, multiplicity: 2 },
            RealRoot { value: polish(simple), multiplicity: 1 },
        ];
        roots.sort_by(|a, b| a.value.total_cmp(&b.value));
        return roots;
    }
    if disc > 0.0 {
        let m = 2.0 * (-pp / 3.0).sqrt();
        let arg = (3.0 * qq / (pp * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let mut roots: Vec<RealRoot> = (0..3)
            .map(|j| {
                let y = m * (theta - 2.0 * std::f64::consts::PI * j as f64 / 3.0).cos();
                RealRoot { value: polish(y), multiplicity: 1 }
            })
            .collect();
        roots.sort_by(|a, b| a.value.total_cmp(&b.value));
        roots
    } else {
        let sq = (-disc / 108.0).sqrt();
        let y = (-qq / 2.0 + sq).cbrt() + (-qq / 2.0 - sq).cbrt();
        vec![RealRoot { value: polish(y), multiplicity: 1 }]
    }
}

/// All three complex roots of `k/3 y^3 - y = h`.
pub fn complex_roots_y(h: f64, p: &ModelParams) -> [Complex64; 3] {
    let k = p.kappa;
    let real = real_roots_y(h, p);
    // deflate by the largest-magnitude real root for stability
    let r = real
        .iter()
        .map(|r| r.value)
        .fold(f64::NAN, |a, b| if a.is_nan() || b.abs() > a.abs() { b } else { a });
    // y^3 - (3/k) y - 3h/k = (y - r)(y^2 + r y + (r^2 - 3/k))
    let bq = r;
    let cq = r * r - 3.0 / k;
    let d = Complex64::new(bq * bq - 4.0 * cq, 0.0).sqrt();
    let y1 = (-bq + d) / 2.0;
    let y2 = (-bq - d) / 2.0;
    [Complex64::new(r, 0.0), y1, y2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn params_for_kappa_four() {
        let p = ModelParams::new(4.0, [1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(p.b(), -1.0);
        assert_relative_eq!(p.c(), 3f64.sqrt());
        assert_relative_eq!(p.alpha().re, -1.0);
        assert_relative_eq!(p.alpha().im, 3f64.sqrt());
    }

    #[test]
    fn params_for_kappa_two() {
        let p = ModelParams::new(2.0, [0.0; 4]).unwrap();
        assert_eq!(p.b(), 0.0);
        assert_eq!(p.c(), 2.0);
        assert_eq!(p.alpha(), Complex64::new(0.0, 2.0));
    }

    #[test]
    fn params_reject_kappa_at_most_one() {
        assert!(matches!(ModelParams::new(1.0, [0.0; 4]), Err(Error::Domain(_))));
        assert!(ModelParams::new(0.5, [0.0; 4]).is_err());
        assert!(ModelParams::new(f64::NAN, [0.0; 4]).is_err());
        assert!(ModelParams::new(f64::INFINITY, [0.0; 4]).is_err());
    }

    #[test]
    fn alpha_on_circle_of_radius_two() {
        for k in [1.01, 1.5, 2.0, 4.0, 9.0, 100.0] {
            let p = ModelParams::new(k, [0.0; 4]).unwrap();
            assert!((p.alpha().norm() - 2.0).abs() < 1e-14);
            assert!(p.c() > 0.0 && p.b() > -2.0 && p.b() < 2.0);
        }
    }

    #[test]
    fn rational_integral_at_origin() {
        let p = ModelParams::new(4.0, [0.0; 4]).unwrap();
        let v = hamiltonian(Form::OriginalRational, (0.0, 0.0), &p, None).unwrap();
        assert_eq!(v, 4.0 / 9.0);
    }

    #[test]
    fn cubic_form_at_center() {
        for k in [1.5, 4.0, 9.0] {
            let p = ModelParams::new(k, [0.0; 4]).unwrap();
            for h in [-0.6, -0.5, 0.3] {
                let v = hamiltonian(Form::CubicForm, (1.0, 1.0), &p, Some(h)).unwrap();
                assert!((v - (-h - 2.0 / 3.0)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cubic_form_requires_level() {
        let p = ModelParams::new(4.0, [0.0; 4]).unwrap();
        assert!(hamiltonian(Form::CubicForm, (1.0, 1.0), &p, None).is_err());
    }

    #[test]
    fn coordinate_map_origin_and_failure() {
        let p = ModelParams::new(4.0, [0.0; 4]).unwrap();
        assert_eq!(coordinate_map((0.0, 0.0), &p).unwrap(), (1.0, 0.0));
        // psi(0, 1) = 1 - 8 + 4 * 9 > 0, so find a point with psi < 0
        assert!(coordinate_map((0.0, 0.2), &p).is_err() || psi(0.0, 0.2, &p) > 0.0);
        let y = 0.13;
        let x = (2.0 + p.b()) * y / p.c(); // Y = 0, psi = 1 - 8y < 0
        assert!(psi(x, y, &p) < 0.0);
        assert!(matches!(coordinate_map((x, y), &p), Err(Error::Domain(_))));
    }

    #[test]
    fn inverse_map_round_trip() {
        let p = ModelParams::new(2.5, [0.0; 4]).unwrap();
        for &(x, y) in &[(0.01, -0.02), (0.05, 0.01), (-0.03, -0.04)] {
            let q = coordinate_map((x, y), &p).unwrap();
            let back = inverse_coordinate_map(q, &p).unwrap();
            assert!((back.0 - x).abs() < 1e-14 && (back.1 - y).abs() < 1e-14);
        }
    }

    #[test]
    fn critical_levels_kappa_four() {
        let p = ModelParams::new(4.0, [0.0; 4]).unwrap();
        let c = critical_levels(&p);
        assert_eq!(c.center_h, -2.0 / 3.0);
        assert!((c.saddle_h + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.saddle_point, (0.0, 0.5));
        let g = symmetric_grad(0.0, 0.5, 4.0);
        assert!(g.0.abs() < 1e-15 && g.1.abs() < 1e-15);
    }

    #[test]
    fn center_level_is_exact_for_any_kappa() {
        for k in [1.1, 1.5, 2.0, 4.0, 9.0] {
            let v = symmetric_hamiltonian(1.0, 1.0, k);
            assert!((v + 2.0 / 3.0).abs() <= 2.0 * f64::EPSILON);
            let p = ModelParams::new(k, [0.0; 4]).unwrap();
            let c = critical_levels(&p);
            let hs = symmetric_hamiltonian(c.saddle_point.0, c.saddle_point.1, k);
            assert!((hs - c.saddle_h).abs() < 1e-15);
        }
    }

    #[test]
    fn classify_levels() {
        let p = ModelParams::new(4.0, [0.0; 4]).unwrap();
        let a = level_classify(-2.0 / 3.0, &p);
        assert_eq!(a.window, Window::CenterEnd);
        assert!((a.s - 4.0).abs() < 1e-14);
        let b = level_classify(-1.0 / 3.0, &p);
        assert_eq!(b.window, Window::SaddleEnd);
        assert!((b.s - 1.0).abs() < 1e-14);
        let c = level_classify(-0.5, &p);
        assert_eq!(c.window, Window::Interior);
        assert!((c.s - 2.25).abs() < 1e-14);
        assert_eq!(level_classify(-0.9, &p).window, Window::Extended);
        assert_eq!(level_classify(0.1, &p).window, Window::Outside);
        assert!((c.t * p.level_scale() - c.h).abs() < 1e-15);
    }

    #[test]
    fn roots_at_saddle_level() {
        let p = ModelParams::new(4.0, [0.0; 4]).unwrap();
        let r = real_roots_y(-1.0 / 3.0, &p);
        assert_eq!(r.len(), 2);
        assert!((r[0].value + 1.0).abs() < 1e-12 && r[0].multiplicity == 1);
        assert!((r[1].value - 0.5).abs() < 1e-7 && r[1].multiplicity == 2);
    }

    #[test]
    fn roots_at_zero_level() {
        let p = ModelParams::new(4.0, [0.0; 4]).unwrap();
        let r = real_roots_y(0.0, &p);
        let s = (3.0f64 / 4.0).sqrt();
        assert_eq!(r.len(), 3);
        assert!((r[0].value + s).abs() < 1e-14);
        assert!(r[1].value.abs() < 1e-14);
        assert!((r[2].value - s).abs() < 1e-14);
    }

    #[test]
    fn unique_root_below_saddle() {
        let p = ModelParams::new(4.0, [0.0; 4]).unwrap();
        let h = -2.0 * 5f64.sqrt() / (3.0 * 2.0);
        let r = real_roots_y(h, &p);
        assert_eq!(r.len(), 1);
        assert!((r[0].value + 5f64.sqrt() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn complex_roots_satisfy_cubic() {
        let p = ModelParams::new(4.0, [0.0; 4]).unwrap();
        for h in [-2.0, -0.7, -0.4, 0.1] {
            for y in complex_roots_y(h, &p) {
                let v = y * y * y * (4.0 / 3.0) - y - h;
                assert!(v.norm() < 1e-12, "h={h} y={y} v={v}");
            }
        }
    }
}
