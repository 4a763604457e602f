//! Moment integrals `I_{i,j}(h)` over the period-annulus disk, by two
//! independent methods.
//!
//! * `Green`: contour sums on the polar-parametrized oval; the trapezoid
//!   rule is spectral here, so the vertex count is doubled until two
//!   consecutive sums agree.
//! * `Area2d`: vertical slices. For fixed `x` the region is the interval
//!   between two real roots of a depressed cubic in `y`, so the inner
//!   integral is closed-form and only the `x` integral is numerical
//!   (adaptive Gauss–Kronrod after a cosine substitution that removes the
//!   square-root endpoints).
//!
//! Cubic-form moments come from the symmetric oval through the inversion
//! `(x, y) -> (1/x, y/x)`.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{require_interior, Form, ModelParams};
use crate::oval::{oval_on, Oval, Side};

/// Index pair of `I_{i,j}` together with the coordinates it lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MomentIndex {
    pub i: i32,
    pub j: i32,
    pub form: Form,
}

impl MomentIndex {
    pub fn cubic(i: i32, j: i32) -> Self {
        Self { i, j, form: Form::CubicForm }
    }

    pub fn symmetric(i: i32, j: i32) -> Self {
        Self { i, j, form: Form::SymmetricForm }
    }

    fn validate(&self) -> Result<()> {
        match self.form {
            Form::CubicForm | Form::SymmetricForm => {}
            _ => return Err(Error::Domain("moments are defined for the cubic and symmetric forms".into())),
        }
        if self.j < 0 || (self.i == -1 && self.j == -1) {
            return Err(Error::UnsupportedIndex { i: self.i, j: self.j });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Area2d,
    Green,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentValue {
    pub index: MomentIndex,
    pub h: f64,
    pub value: f64,
    pub method: Method,
    pub err_estimate: f64,
}

pub const DEFAULT_TOL: f64 = 1e-8;
const MIN_ABSCISSA: f64 = 1e-6;
const MAX_VERTICES: usize = 1 << 17;

/// `I_{i,j}(h)` over the disk bounded by the oval around `(1, 1)`.
pub fn moment(index: MomentIndex, h: f64, params: &ModelParams, method: Method, tol: f64) -> Result<MomentValue> {
    moment_on(Side::Primary, index, h, params, method, tol)
}

/// Several moments at one level; the Green method shares one oval.
pub fn moments(
    indices: &[MomentIndex],
    h: f64,
    params: &ModelParams,
    method: Method,
    tol: f64,
) -> Result<Vec<MomentValue>> {
    moments_on(Side::Primary, indices, h, params, method, tol)
}

pub fn moment_on(
    side: Side,
    index: MomentIndex,
    h: f64,
    params: &ModelParams,
    method: Method,
    tol: f64,
) -> Result<MomentValue> {
    Ok(moments_on(side, &[index], h, params, method, tol)?[0])
}

pub fn moments_on(
    side: Side,
    indices: &[MomentIndex],
    h: f64,
    params: &ModelParams,
    method: Method,
    tol: f64,
) -> Result<Vec<MomentValue>> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    for ix in indices {
        ix.validate()?;
        if side == Side::Dual && ix.form == Form::CubicForm {
            return Err(Error::Domain("the dual annulus is only available in symmetric coordinates".into()));
        }
    }
    match side {
        Side::Primary => {
            require_interior(h, params)?;
        }
        Side::Dual => {
            require_interior(-h, params)?;
        }
    }
    match method {
        Method::Green => green_moments(side, indices, h, params, tol),
        Method::Area2d => indices
            .iter()
            .map(|ix| {
                let (value, err) = area2d(side, *ix, h, params, tol)?;
                Ok(MomentValue { index: *ix, h, value, method, err_estimate: err })
            })
            .collect(),
    }
}

// ---------------------------------------------------------------- green

/// Trapezoid sum of the Green integrand; returns (value, sum of moduli).
fn green_sum(o: &Oval, ix: MomentIndex) -> (f64, f64) {
    let (i, j) = (ix.i, ix.j);
    let mut acc = 0.0;
    let mut mag = 0.0;
    for n in o.nodes() {
        let (x, y, dx, dy, orient) = match ix.form {
            Form::CubicForm => {
                let (u, v) = (n.x, n.y);
                // image of the oval under (u, v) -> (1/u, v/u), orientation reversed
                (1.0 / u, v / u, -n.dx / (u * u), (n.dy * u - v * n.dx) / (u * u), -1.0)
            }
            _ => (n.x, n.y, n.dx, n.dy, 1.0),
        };
        let term = if i != -1 {
            x.powi(i + 1) * y.powi(j) / f64::from(i + 1) * dy
        } else {
            -x.powi(i) * y.powi(j + 1) / f64::from(j + 1) * dx
        };
        acc += orient * term;
        mag += term.abs();
    }
    let w = o.weight();
    (acc * w, mag * w)
}

fn green_moments(
    side: Side,
    indices: &[MomentIndex],
    h: f64,
    params: &ModelParams,
    tol: f64,
) -> Result<Vec<MomentValue>> {
    let needs_positive_x = indices.iter().any(|ix| ix.form == Form::CubicForm || ix.i < 0);
    let mut o = oval_on(side, h, params, 1e-12, 64)?;
    if needs_positive_x && o.min_x() <= MIN_ABSCISSA {
        return Err(Error::Singularity(format!(
            "oval at h = {h} reaches x = {} where the integrand has a pole",
            o.min_x()
        )));
    }
    let mut prev: Vec<f64> = indices.iter().map(|ix| green_sum(&o, *ix).0).collect();
    loop {
        o = o.refine()?;
        let cur: Vec<(f64, f64)> = indices.iter().map(|ix| green_sum(&o, *ix)).collect();
        let errs: Vec<f64> = cur.iter().zip(&prev).map(|(c, p)| (c.0 - p).abs()).collect();
        let done = cur
            .iter()
            .zip(&errs)
            .all(|((v, mag), e)| *e <= tol * v.abs().max(1e-3 * mag) || *e <= 1e-15 * mag);
        if done {
            return Ok(indices
                .iter()
                .zip(cur.iter().zip(&errs))
                .map(|(ix, ((v, _), e))| MomentValue {
                    index: *ix,
                    h,
                    value: *v,
                    method: Method::Green,
                    err_estimate: *e,
                })
                .collect());
        }
        if o.len() >= MAX_VERTICES {
            return Err(Error::NonConvergence(format!(
                "contour moments at h = {h} not converged with {} vertices",
                o.len()
            )));
        }
        prev = cur.into_iter().map(|c| c.0).collect();
    }
}

// ---------------------------------------------------------------- area2d

/// Coefficients `(a, p, q)` of the slice cubic `a y^3 + p y + q` whose sign
/// defines the region at abscissa `x`.
fn slice_cubic(form: Form, x: f64, h: f64, kappa: f64) -> (f64, f64, f64) {
    let km1 = kappa - 1.0;
    match form {
        Form::CubicForm => (kappa / 3.0, -(x * x + km1), -h * x * x * x + 2.0 / 3.0 * km1),
        _ => (kappa / 3.0, -(km1 * x * x + 1.0), 2.0 / 3.0 * km1 * x * x * x - h),
    }
}

/// Discriminant of the monic slice cubic; positive means three real roots.
fn slice_disc(form: Form, x: f64, h: f64, kappa: f64) -> f64 {
    let (a, p, q) = slice_cubic(form, x, h, kappa);
    let (pp, qq) = (p / a, q / a);
    -4.0 * pp * pp * pp - 27.0 * qq * qq
}

/// Ascending real roots of `y^3 + P y + Q` when all three are real.
fn three_roots(pp: f64, qq: f64) -> Option<[f64; 3]> {
    if pp >= 0.0 {
        return None;
    }
    let m = 2.0 * (-pp / 3.0).sqrt();
    let arg = (3.0 * qq / (pp * m)).clamp(-1.0, 1.0);
    let th = arg.acos() / 3.0;
    let tau = 2.0 * std::f64::consts::PI / 3.0;
    let mut r = [m * (th - 2.0 * tau).cos(), m * (th - tau).cos(), m * th.cos()];
    r.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(r)
}

/// The `y`-interval of the region over abscissa `x`, or `None` outside.
fn slice(side: Side, form: Form, x: f64, h: f64, kappa: f64) -> Option<(f64, f64)> {
    let (a, p, q) = slice_cubic(form, x, h, kappa);
    let r = three_roots(p / a, q / a)?;
    Some(match side {
        Side::Primary => (r[1], r[2]),
        Side::Dual => (r[0], r[1]),
    })
}

/// Ends of the `x`-range of the region: first sign change of the slice
/// discriminant marching out from the center abscissa.
fn x_range(side: Side, form: Form, h: f64, kappa: f64) -> Result<(f64, f64)> {
    let x0 = side.center().0;
    let d = |x: f64| slice_disc(form, x, h, kappa);
    if d(x0) <= 0.0 {
        return Err(Error::Geometry(format!("slice through the center is degenerate at h = {h}")));
    }
    let end = |dir: f64| -> Result<f64> {
        let mut inside = x0;
        let mut step = 1e-4;
        let mut outside = x0 + dir * step;
        let mut n = 0;
        // in the symmetric form the region ends before the axis, beyond
        // which the next lobe starts
        let toward_axis = form == Form::SymmetricForm && dir * x0 < 0.0;
        while d(outside) > 0.0 {
            inside = outside;
            step *= 1.05;
            outside = inside + dir * step;
            if toward_axis && outside * x0 <= 0.0 {
                outside = 0.5 * inside;
                step = (inside - outside).abs();
            }
            n += 1;
            if n > 4000 || (toward_axis && inside.abs() <= f64::MIN_POSITIVE) {
                return Err(Error::Geometry(format!("cannot bracket the edge of the region at h = {h}")));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside {
                break;
            }
            if d(mid) > 0.0 {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(inside)
    };
    let lo = end(-1.0)?;
    let hi = end(1.0)?;
    Ok((lo, hi))
}

fn area2d(side: Side, ix: MomentIndex, h: f64, params: &ModelParams, tol: f64) -> Result<(f64, f64)> {
    let kappa = params.kappa();
    let (cx, cy) = side.center();
    match slice(side, ix.form, cx, h, kappa) {
        Some((lo, hi)) if lo < cy && cy < hi => {}
        _ => {
            return Err(Error::Consistency(format!(
                "center slice does not contain the center at h = {h}"
            )))
        }
    }
    let (xl, xr) = x_range(side, ix.form, h, kappa)?;
    if (ix.form == Form::CubicForm || ix.i < 0) && xl <= MIN_ABSCISSA {
        return Err(Error::Singularity(format!("region at h = {h} reaches x = {xl}")));
    }
    let mid = 0.5 * (xl + xr);
    let half = 0.5 * (xr - xl);
    let j1 = ix.j + 1;
    let f = |phi: f64| {
        let x = mid - half * phi.cos();
        match slice(side, ix.form, x, h, kappa) {
            Some((a, b)) => {
                let inner = (b.powi(j1) - a.powi(j1)) / f64::from(j1);
                x.powi(ix.i) * inner * half * phi.sin()
            }
            None => 0.0,
        }
    };
    gauss_kronrod(f, 0.0, std::f64::consts::PI, tol * 0.1, 1e-300)
}

// ---------------------------------------------------------------- GK 7-15

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for k in 0..7 {
        let dx = hw * XGK[k];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kron * hw, ((kron - gauss) * hw).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss–Kronrod 7-15; returns (integral, error estimate).
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rtol: f64, atol: f64) -> Result<(f64, f64)> {
    let mut heap = BinaryHeap::new();
    // a few initial panels so a narrow feature cannot hide between nodes
    let n0 = 8;
    let (mut total, mut err) = (0.0, 0.0);
    for k in 0..n0 {
        let lo = a + (b - a) * k as f64 / n0 as f64;
        let hi = a + (b - a) * (k + 1) as f64 / n0 as f64;
        let (v, e) = gk15(&f, lo, hi);
        total += v;
        err += e;
        heap.push(Panel { a: lo, b: hi, value: v, err: e });
    }
    let mut splits = 0;
    while err > rtol * total.abs() && err > atol {
        let worst = heap.pop().expect("panel heap is never empty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&f, worst.a, m);
        let (v2, e2) = gk15(&f, m, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.err;
        heap.push(Panel { a: worst.a, b: m, value: v1, err: e1 });
        heap.push(Panel { a: m, b: worst.b, value: v2, err: e2 });
        splits += 1;
        if splits > 20_000 {
            return Err(Error::NonConvergence(format!(
                "adaptive quadrature stalled with error {err:e}"
            )));
        }
    }
    // re-sum to shed accumulated cancellation from the running totals
    let (total, err) = heap.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.value, acc.1 + p.err));
    Ok((total, err))
}

// ---------------------------------------------------------------- residues

/// Residue of the differential behind `G` at the point `(0, y)`, where `y`
/// is a root of `(k/3) y^3 - y = h`.
pub fn residue_value(h: f64, y: f64, params: &ModelParams) -> Result<f64> {
    let kappa = params.kappa();
    let den = kappa * y * y - 1.0;
    if den.abs() <= 1e-14 {
        return Err(Error::Pole(format!("k y^2 = 1 at y = {y}")));
    }
    Ok((-4.0 * h + (3.0 * kappa * h * h - 4.0) * y) / den)
}

/// Discriminant of the projective cubic `{H = h}` (symmetric form), up to a
/// positive constant: the leading-form discriminant times the product over
/// the four critical values of `H`.
pub fn curve_discriminant(h: f64, params: &ModelParams) -> f64 {
    let kappa = params.kappa();
    let top = -4.0 / 3.0 * kappa * (kappa - 1.0).powi(2);
    top * (h * h - 4.0 / 9.0) * (h * h - 4.0 / (9.0 * kappa))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(k: f64) -> ModelParams {
        ModelParams::new(k, [0.0; 4]).unwrap()
    }

    #[test]
    fn both_methods_agree_on_area() {
        let pa = p(4.0);
        let ix = MomentIndex::symmetric(0, 0);
        let g = moment(ix, -0.5, &pa, Method::Green, 1e-10).unwrap();
        let a = moment(ix, -0.5, &pa, Method::Area2d, 1e-10).unwrap();
        assert!((g.value - a.value).abs() <= 1e-9 * g.value.abs(), "{} vs {}", g.value, a.value);
    }

    #[test]
    fn area_vanishes_linearly_at_center() {
        let pa = p(4.0);
        let ix = MomentIndex::symmetric(0, 0);
        let a1 = moment(ix, -2.0 / 3.0 + 1e-4, &pa, Method::Green, 1e-10).unwrap().value;
        let a2 = moment(ix, -2.0 / 3.0 + 2e-4, &pa, Method::Green, 1e-10).unwrap().value;
        assert!((a2 / a1 - 2.0).abs() < 1e-3);
    }

    #[test]
    fn cubic_moments_by_both_methods() {
        let pa = p(2.0);
        for (i, j) in [(-6, 0), (-6, 1), (-3, 0), (0, 2)] {
            let ix = MomentIndex::cubic(i, j);
            let g = moment(ix, -0.55, &pa, Method::Green, 1e-10).unwrap().value;
            let a = moment(ix, -0.55, &pa, Method::Area2d, 1e-10).unwrap().value;
            assert!((g - a).abs() <= 1e-8 * g.abs(), "({i},{j}): {g} vs {a}");
        }
    }

    #[test]
    fn fold_identity_in_cubic_form() {
        let pa = p(4.0);
        let a = moment(MomentIndex::cubic(-6, 1), -0.45, &pa, Method::Green, 1e-11).unwrap().value;
        let b = moment(MomentIndex::cubic(-6, 2), -0.45, &pa, Method::Green, 1e-11).unwrap().value;
        assert!((a - b).abs() <= 1e-9 * a.abs());
    }

    #[test]
    fn dual_annulus_moments() {
        let pa = p(4.0);
        for method in [Method::Green, Method::Area2d] {
            let a = moment_on(Side::Primary, MomentIndex::symmetric(1, 1), -0.5, &pa, method, 1e-10).unwrap();
            let b = moment_on(Side::Dual, MomentIndex::symmetric(1, 1), 0.5, &pa, method, 1e-10).unwrap();
            assert!((a.value - b.value).abs() < 1e-8 * a.value.abs());
        }
    }

    #[test]
    fn residue_examples() {
        let pa = p(4.0);
        assert!((residue_value(-1.0 / 3.0, -1.0, &pa).unwrap() - 4.0 / 3.0).abs() < 1e-14);
        let h = -2.0 * 5f64.sqrt() / 6.0;
        assert!(residue_value(h, -(5f64 / 4.0).sqrt(), &pa).unwrap().abs() < 1e-14);
        assert!(matches!(residue_value(-0.5, 0.5, &pa), Err(Error::Pole(_))));
    }

    #[test]
    fn discriminant_vanishes_on_critical_levels() {
        let pa = p(4.0);
        assert_eq!(curve_discriminant(-2.0 / 3.0, &pa).abs() < 1e-15, true);
        assert!(curve_discriminant(-1.0 / 3.0, &pa).abs() < 1e-15);
        assert!(curve_discriminant(-0.5, &pa).abs() > 1e-3);
    }

    #[test]
    fn gk_integrates_polynomials_exactly() {
        let (v, _) = gauss_kronrod(|x| x.powi(6), 0.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((v - 128.0 / 7.0).abs() < 1e-12);
    }
}
