//! The six-equation Picard–Fuchs system `V = A(h) V'` for the basis moments,
//! its derivative jets, propagation in `h`, the reduced 2x2 systems and the
//! complex continuation of `(I'00, I'11)` in the variable `s = 9 k h^2 / 4`.

use std::f64::consts::PI;

use nalgebra::{Matrix6, Vector6};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::ode::Dopri5;
use crate::reduction::basis_moments;

/// Basis moments and their first `h`-derivatives, in `BASIS` order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PFVector {
    pub h: f64,
    pub values: [f64; 6],
    pub derivs: [f64; 6],
}

/// Coefficient matrix `A(h) = A0 + h A1` of `V = A V'`.
pub fn pf_matrix(h: f64, kappa: f64) -> Matrix6<f64> {
    let k = kappa;
    Matrix6::new(
        1.5 * h, 0.0, 1.0, 0.0, 0.0, 0.0,
        0.0, h, 0.0, 2.0 / 3.0, 0.0, 0.0,
        2.0 / (3.0 * k), 0.0, h, 2.0 * (k - 1.0) / (3.0 * k), 0.0, 0.0,
        0.375 * h, 0.5, 0.25, 0.75 * h, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, 3.0 * h, 2.0,
        0.0, (k - 1.0) / k, 0.0, 0.0, 1.0 / k, 1.5 * h,
    )
}

/// `dA/dh`, which is constant.
fn pf_slope(kappa: f64) -> Matrix6<f64> {
    pf_matrix(1.0, kappa) - pf_matrix(0.0, kappa)
}

/// Levels where `A(h)` is singular: `+-2/3` and `+-2/(3 sqrt k)`.
pub fn singular_levels(kappa: f64) -> [f64; 4] {
    let r = 2.0 / (3.0 * kappa.sqrt());
    [-2.0 / 3.0, -r, r, 2.0 / 3.0]
}

fn v6(a: &[f64; 6]) -> Vector6<f64> {
    Vector6::from_column_slice(a)
}

fn arr(v: &Vector6<f64>) -> [f64; 6] {
    [v[0], v[1], v[2], v[3], v[4], v[5]]
}

/// Residual `V - A V'` of each equation.
pub fn pf_residuals(pf: &PFVector, params: &ModelParams) -> [f64; 6] {
    let r = v6(&pf.values) - pf_matrix(pf.h, params.kappa()) * v6(&pf.derivs);
    arr(&r)
}

/// 2-norm condition number of `A(h)`.
pub fn pf_condition(h: f64, kappa: f64) -> f64 {
    let sv = pf_matrix(h, kappa).singular_values();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for s in sv.iter() {
        lo = lo.min(*s);
        hi = hi.max(*s);
    }
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

const MAX_CONDITION: f64 = 1e12;

/// The primed vector solving `V = A(h) V'`.
pub fn pf_derivatives(h: f64, values: &[f64; 6], params: &ModelParams) -> Result<[f64; 6]> {
    let kappa = params.kappa();
    let condition = pf_condition(h, kappa);
    if !(condition < MAX_CONDITION) {
        return Err(Error::SingularMatrix { h, condition });
    }
    let d = pf_matrix(h, kappa)
        .lu()
        .solve(&v6(values))
        .ok_or(Error::SingularMatrix { h, condition })?;
    Ok(arr(&d))
}

/// `V, V', ..., V^(order)` at `h`. Since `A'' = 0`, differentiating
/// `V = A V'` n times gives `V^(n+1) = A^-1 (I - n A1) V^(n)`.
pub fn pf_jet(h: f64, values: &[f64; 6], params: &ModelParams, order: usize) -> Result<Vec<[f64; 6]>> {
    let kappa = params.kappa();
    let condition = pf_condition(h, kappa);
    if !(condition < MAX_CONDITION) {
        return Err(Error::SingularMatrix { h, condition });
    }
    let lu = pf_matrix(h, kappa).lu();
    let a1 = pf_slope(kappa);
    let mut out = vec![*values];
    let mut cur = v6(values);
    for n in 0..order {
        let rhs = cur - a1 * cur * n as f64;
        cur = lu.solve(&rhs).ok_or(Error::SingularMatrix { h, condition })?;
        out.push(arr(&cur));
    }
    Ok(out)
}

impl PFVector {
    /// Values from the quadrature oracle, derivatives from the linear solve.
    pub fn from_oracle(h: f64, params: &ModelParams, tol: f64) -> Result<Self> {
        let values = basis_moments(h, params, tol)?;
        let derivs = pf_derivatives(h, &values, params)?;
        Ok(Self { h, values, derivs })
    }

    pub fn from_values(h: f64, values: [f64; 6], params: &ModelParams) -> Result<Self> {
        Ok(Self { h, values, derivs: pf_derivatives(h, &values, params)? })
    }
}

fn check_no_singularity(a: f64, b: f64, kappa: f64) -> Result<()> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    for s in singular_levels(kappa) {
        if lo <= s && s <= hi {
            return Err(Error::Singularity(format!(
                "propagation interval [{lo}, {hi}] contains the critical level {s}"
            )));
        }
    }
    Ok(())
}

/// Integrates `dV/dh = A(h)^-1 V` from `from_h` to `to_h`.
pub fn propagate(from_h: f64, values0: &[f64; 6], to_h: f64, params: &ModelParams, tol: f64) -> Result<[f64; 6]> {
    let kappa = params.kappa();
    check_no_singularity(from_h, to_h, kappa)?;
    let scale = values0.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut ig = Dopri5::new(tol, tol * 1e-3 * scale);
    let y = ig.integrate(
        |h, v: &[f64], dv: &mut [f64]| {
            let x = pf_matrix(h, kappa).lu().solve(&Vector6::from_column_slice(v));
            match x {
                Some(x) => dv.copy_from_slice(x.as_slice()),
                None => dv.iter_mut().for_each(|d| *d = f64::NAN),
            }
        },
        from_h,
        values0,
        to_h,
    )?;
    Ok([y[0], y[1], y[2], y[3], y[4], y[5]])
}

/// PF vectors on a level grid, propagated from one oracle evaluation at
/// the middle of the annulus.
#[derive(Debug, Clone)]
pub struct PfTable {
    pub rows: Vec<PFVector>,
}

impl PfTable {
    pub fn build(params: &ModelParams, levels: &[f64], tol: f64) -> Result<Self> {
        let (lo, hi) = params.annulus();
        let mid = 0.5 * (lo + hi);
        let seed = basis_moments(mid, params, (tol * 1e-2).max(1e-13))?;
        let mut order: Vec<usize> = (0..levels.len()).collect();
        order.sort_by(|&a, &b| levels[a].total_cmp(&levels[b]));
        let mut rows = vec![None; levels.len()];
        // walk outward from the midpoint in both directions
        let split = order.partition_point(|&k| levels[k] < mid);
        for side in [&order[..split], &order[split..]] {
            let walk: Vec<usize> = if side.first().is_some_and(|&k| levels[k] < mid) {
                side.iter().rev().copied().collect()
            } else {
                side.to_vec()
            };
            let (mut h, mut v) = (mid, seed);
            for k in walk {
                v = propagate(h, &v, levels[k], params, tol)?;
                h = levels[k];
                rows[k] = Some(PFVector::from_values(h, v, params)?);
            }
        }
        Ok(Self { rows: rows.into_iter().map(|r| r.expect("every level visited")).collect() })
    }
}

// ---------------------------------------------------------------- 2x2 systems

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Second,
    Third,
}

/// Closed-form `(I''00, I''11)` or `(I'''00, I'''11)` in terms of
/// `J1 = I'00`, `J2 = I'11`.
pub fn derivative_formulas(order: Order, h: f64, j1: f64, j2: f64, params: &ModelParams) -> Result<[f64; 2]> {
    let k = params.kappa();
    let p = 9.0 * h * h - 4.0;
    let q = 9.0 * k * h * h - 4.0;
    if p.abs() < 1e-12 || q.abs() < 1e-12 {
        return Err(Error::Pole(format!("h = {h} is a critical level")));
    }
    let h2 = h * h;
    let h4 = h2 * h2;
    Ok(match order {
        Order::Second => [
            (-3.0 * h * q * j1 + 12.0 * (k - 1.0) * h * j2) / (p * q),
            (-3.0 * h * j1 + 3.0 * h * j2) / p,
        ],
        Order::Third => [
            (324.0 * k * h4 + (72.0 * k - 108.0) * h2 - 48.0) / (p * p * q) * j1
                - 12.0 * (k - 1.0) * (243.0 * k * h4 - 36.0 * (k + 1.0) * h2 - 16.0) / (p * p * q * q) * j2,
            (27.0 * h2 + 12.0) / (p * p) * j1
                - (162.0 * k * h4 + (144.0 * k - 108.0) * h2 - 48.0) / (p * p * q) * j2,
        ],
    })
}

/// Residuals of the second-order system for `(I'00, I'11)`; `d1`, `d2` are
/// the second derivatives.
pub fn pfs_residuals(h: f64, j: [f64; 2], d: [f64; 2], params: &ModelParams) -> [f64; 2] {
    let k = params.kappa();
    let q = 9.0 * k * h * h - 4.0;
    [
        -3.0 * k * h * j[0] - (q * d[0] - 4.0 * (k - 1.0) * d[1]),
        -3.0 * k * h * j[1] - q * (d[0] - d[1]),
    ]
}

/// Residuals of the system for `(I'-1,0, I'-1,1)`, given their second
/// derivatives `d` and `I''11`.
pub fn minus_one_residuals(h: f64, j: [f64; 2], d: [f64; 2], i11_second: f64, params: &ModelParams) -> [f64; 2] {
    let k = params.kappa();
    [
        j[0] - (-1.5 * h * d[0] - d[1]),
        j[1] - (-2.0 / k * d[0] - 3.0 * h * d[1] + 4.0 * (k - 1.0) / (3.0 * k * h) * i11_second),
    ]
}

pub fn apply_l1(i_value: f64, i_prime: f64, h: f64) -> f64 {
    h * i_prime - i_value
}

pub fn apply_l2(g: f64, g1: f64, g2: f64, h: f64, params: &ModelParams) -> f64 {
    let k = params.kappa();
    5.0 * k * h * g - (9.0 * k * h * h - 8.0) * g1 + h * (9.0 * k * h * h - 4.0) * g2
}

/// `s = 9 k h^2 / 4` on the annulus side `h < 0`.
pub fn s_map(h: f64, params: &ModelParams) -> Result<f64> {
    if !(h < 0.0) {
        return Err(Error::Domain(format!("s-map needs h < 0, got {h}")));
    }
    Ok(2.25 * params.kappa() * h * h)
}

/// `h = -(2/3) sqrt(s / k)`.
pub fn h_of_s(s: f64, params: &ModelParams) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("inverse s-map needs s > 0, got {s}")));
    }
    Ok(-2.0 / 3.0 * (s / params.kappa()).sqrt())
}

/// `s(1-s) g'' - g'/2 - 5 g / 36` in the variable `s`.
pub fn l2_s_form(g: f64, gs: f64, gss: f64, s: f64) -> f64 {
    s * (1.0 - s) * gss - 0.5 * gs - 5.0 / 36.0 * g
}

/// Factor with `apply_l2 = l2_chain_factor * l2_s_form`.
pub fn l2_chain_factor(h: f64, params: &ModelParams) -> f64 {
    -36.0 * params.kappa() * h
}

// ---------------------------------------------------------------- complex s

type C = Complex64;

/// `(I'00, I'11)` continued to complex `s`, with a fundamental matrix whose
/// columns are two independent solutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JState {
    pub s: C,
    pub j: [C; 2],
    pub w: [[C; 2]; 2],
}

impl JState {
    /// Real start on the annulus: `J` from the oracle and the PF solve,
    /// `W` the identity.
    pub fn from_level(h: f64, params: &ModelParams, tol: f64) -> Result<Self> {
        let pf = PFVector::from_oracle(h, params, tol)?;
        Ok(Self::new(C::new(s_map(h, params)?, 0.0), [pf.derivs[0], pf.derivs[3]]))
    }

    pub fn new(s: C, j: [f64; 2]) -> Self {
        let one = C::new(1.0, 0.0);
        let zero = C::new(0.0, 0.0);
        Self { s, j: [j[0].into(), j[1].into()], w: [[one, zero], [zero, one]] }
    }

    pub fn det_w(&self) -> C {
        self.w[0][0] * self.w[1][1] - self.w[0][1] * self.w[1][0]
    }

    /// Residual of the system at this state, with `dJ/ds` supplied.
    pub fn system_matrix(s: C, kappa: f64) -> [[C; 2]; 2] {
        let one = C::new(1.0, 0.0);
        let den = (s - one) * (s - kappa) * 6.0;
        [[(one - s) / den, C::new(kappa - 1.0, 0.0) / den], [(one - s) / den, (s - one) / den]]
    }
}

/// A piece of a continuation path in the `s`-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Line { from: C, to: C },
    /// `center + radius e^(i theta)` for theta from `theta0` to `theta1`.
    Arc { center: C, radius: f64, theta0: f64, theta1: f64 },
}

impl Segment {
    pub fn at(&self, t: f64) -> C {
        match *self {
            Segment::Line { from, to } => from + (to - from) * t,
            Segment::Arc { center, radius, theta0, theta1 } => {
                center + C::from_polar(radius, theta0 + (theta1 - theta0) * t)
            }
        }
    }

    pub fn velocity(&self, t: f64) -> C {
        match *self {
            Segment::Line { from, to } => to - from,
            Segment::Arc { center: _, radius, theta0, theta1 } => {
                let th = theta0 + (theta1 - theta0) * t;
                C::new(0.0, 1.0) * C::from_polar(radius, th) * (theta1 - theta0)
            }
        }
    }

    pub fn start(&self) -> C {
        self.at(0.0)
    }

    pub fn end(&self) -> C {
        self.at(1.0)
    }

    /// Smallest distance from the segment to `p`.
    pub fn distance_to(&self, p: C) -> f64 {
        match *self {
            Segment::Line { from, to } => {
                let d = to - from;
                let len2 = d.norm_sqr();
                let t = if len2 == 0.0 { 0.0 } else { ((p - from) * d.conj()).re / len2 };
                (self.at(t.clamp(0.0, 1.0)) - p).norm()
            }
            Segment::Arc { center, radius, theta0, theta1 } => {
                let rel = p - center;
                let mut best = (self.start() - p).norm().min((self.end() - p).norm());
                let phi = rel.arg();
                let (lo, hi) = if theta0 <= theta1 { (theta0, theta1) } else { (theta1, theta0) };
                for k in -2..=2 {
                    let th = phi + 2.0 * PI * f64::from(k);
                    if lo <= th && th <= hi {
                        best = best.min((rel.norm() - radius).abs());
                    }
                }
                best
            }
        }
    }

    /// Real abscissae where the segment meets the real axis transversally
    /// or touches it.
    fn real_axis_hits(&self) -> Vec<f64> {
        let mut out = Vec::new();
        match *self {
            Segment::Line { from, to } => {
                if from.im == 0.0 && to.im == 0.0 {
                    out.push(from.re.min(to.re));
                } else if from.im * to.im <= 0.0 {
                    let t = from.im / (from.im - to.im);
                    out.push(self.at(t).re);
                }
            }
            Segment::Arc { center, radius, theta0, theta1 } => {
                if center.im.abs() <= radius {
                    let a = (-center.im / radius).asin();
                    let (lo, hi) = if theta0 <= theta1 { (theta0, theta1) } else { (theta1, theta0) };
                    for base in [a, PI - a] {
                        for k in -2..=2 {
                            let th = base + 2.0 * PI * f64::from(k);
                            if lo <= th && th <= hi {
                                out.push(center.re + radius * th.cos());
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Options for complex continuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Continuation {
    pub tol: f64,
    /// Minimal allowed distance to the singular points `s = 1`, `s = k`.
    pub eps_min: f64,
    /// Permit crossing the cut `(-inf, 1)`; needed only for monodromy.
    pub cross_cut: bool,
    /// Upper bound on the step in the segment parameter `t` in `[0, 1]`.
    pub max_param_step: f64,
}

impl Default for Continuation {
    fn default() -> Self {
        Self { tol: 1e-11, eps_min: 1e-4, cross_cut: false, max_param_step: 1.0 }
    }
}

/// Analytic continuation of `J` and `W` along consecutive segments.
pub fn propagate_j(path: &[Segment], j0: &JState, params: &ModelParams, opts: &Continuation) -> Result<JState> {
    let mut state = *j0;
    for seg in path {
        state = propagate_segment(seg, &state, params, opts, |_, _| {})?;
    }
    Ok(state)
}

/// Like `propagate_j` on one segment, reporting every accepted step.
pub fn propagate_segment<F>(
    seg: &Segment,
    j0: &JState,
    params: &ModelParams,
    opts: &Continuation,
    mut observe: F,
) -> Result<JState>
where
    F: FnMut(f64, &JState),
{
    let kappa = params.kappa();
    if (seg.start() - j0.s).norm() > 1e-9 * (1.0 + j0.s.norm()) {
        return Err(Error::Domain(format!("segment does not start at the current point {}", j0.s)));
    }
    for p in [1.0, kappa] {
        let d = seg.distance_to(C::new(p, 0.0));
        if d < opts.eps_min {
            return Err(Error::Proximity { point: p, distance: d });
        }
    }
    if !opts.cross_cut {
        for x in seg.real_axis_hits() {
            if x < 1.0 {
                return Err(Error::Domain(format!("path meets the cut (-inf, 1) at {x}")));
            }
        }
    }
    // step bound from ||A(s)|| |ds/dt| dt <= 0.1
    let mut rate: f64 = 0.0;
    for n in 0..=256 {
        let t = n as f64 / 256.0;
        let m = JState::system_matrix(seg.at(t), kappa);
        let norm = m.iter().flatten().map(|z| z.norm()).sum::<f64>();
        rate = rate.max(norm * seg.velocity(t).norm());
    }
    let max_step = if rate > 0.0 { (0.1 / rate).min(1.0) } else { 1.0 }.min(opts.max_param_step);

    let y0 = [j0.j[0], j0.j[1], j0.w[0][0], j0.w[1][0], j0.w[0][1], j0.w[1][1]];
    let scale = y0.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(1e-300);
    let mut ig = Dopri5::new(opts.tol, opts.tol * 1e-3 * scale).with_max_step(max_step);
    let rhs = |t: f64, y: &[C], dy: &mut [C]| {
        let s = seg.at(t);
        let v = seg.velocity(t);
        let m = JState::system_matrix(s, kappa);
        for col in 0..3 {
            let (a, b) = (y[2 * col], y[2 * col + 1]);
            dy[2 * col] = (m[0][0] * a + m[0][1] * b) * v;
            dy[2 * col + 1] = (m[1][0] * a + m[1][1] * b) * v;
        }
    };
    let unpack = |t: f64, y: &[C]| JState {
        s: seg.at(t),
        j: [y[0], y[1]],
        w: [[y[2], y[4]], [y[3], y[5]]],
    };
    let (_, y) = ig.integrate_observed(rhs, 0.0, &y0, 1.0, |t, y| {
        observe(t, &unpack(t, y));
        std::ops::ControlFlow::Continue(())
    })?;
    let mut out = unpack(1.0, &y);
    out.s = seg.end();
    Ok(out)
}

/// Exponents of the two solutions at infinity, from the eigenvalues of the
/// transfer matrix along the ray `[radius, 2 radius]` beyond `k`.
pub fn growth_exponents(params: &ModelParams, radius: f64, tol: f64) -> Result<[f64; 2]> {
    let kappa = params.kappa();
    let a = C::new(radius.max(2.0 * kappa), 0.0);
    let b = a * 2.0;
    let start = JState::new(a, [1.0, 0.0]);
    let opts = Continuation { tol, ..Continuation::default() };
    let end = propagate_j(&[Segment::Line { from: a, to: b }], &start, params, &opts)?;
    // W(a) = I, so the transfer matrix is W(b)
    let t = end.w;
    let tr = t[0][0] + t[1][1];
    let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
    let disc = (tr * tr - det * 4.0).sqrt();
    let l1 = (tr + disc) * 0.5;
    let l2 = (tr - disc) * 0.5;
    let mut e = [l1.norm().ln() / 2f64.ln(), l2.norm().ln() / 2f64.ln()];
    e.sort_by(|x, y| x.total_cmp(y));
    Ok(e)
}
