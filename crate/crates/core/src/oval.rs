//! Ovals of the symmetric Hamiltonian, parametrized by the polar angle
//! around the center they enclose.
//!
//! Each vertex is found by shooting a ray from the center and following the
//! crossing radius while the level is raised from the center value to the
//! target (predictor from the two previous levels, Newton corrector with a
//! bracketing fallback). Since the parametrization is smooth and periodic,
//! the trapezoid rule on the vertices converges spectrally, which is what
//! the contour quadrature relies on.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    level_classify, require_interior, symmetric_grad, symmetric_hamiltonian, LevelPoint,
    ModelParams, ENDPOINT_EXCLUSION,
};

/// Which of the two centrally symmetric annuli an oval belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Around the minimum `(1, 1)`, levels `(-2/3, -2/(3 sqrt k))`,
    /// region `H < h`.
    Primary,
    /// Around the maximum `(-1, -1)`, levels `(2/(3 sqrt k), 2/3)`,
    /// region `H > h`.
    Dual,
}

impl Side {
    pub fn center(self) -> (f64, f64) {
        match self {
            Side::Primary => (1.0, 1.0),
            Side::Dual => (-1.0, -1.0),
        }
    }

    fn center_level(self) -> f64 {
        match self {
            Side::Primary => -2.0 / 3.0,
            Side::Dual => 2.0 / 3.0,
        }
    }

    /// +1 when `H` increases away from the center.
    fn outward_sign(self) -> f64 {
        match self {
            Side::Primary => 1.0,
            Side::Dual => -1.0,
        }
    }
}

/// One vertex with its derivative with respect to the polar angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OvalNode {
    pub x: f64,
    pub y: f64,
    pub dx: f64,
    pub dy: f64,
}

/// A closed, positively oriented polyline on `{H = h}`.
#[derive(Debug, Clone)]
pub struct Oval {
    pub level: LevelPoint,
    pub side: Side,
    pub center: (f64, f64),
    /// `|sum of tangent vectors| * dtheta`: zero for an exactly closed curve.
    pub closure_gap: f64,
    pub tol: f64,
    kappa: f64,
    radii: Vec<f64>,
}

const CONTINUATION_LEVELS: usize = 48;
const INITIAL_VERTICES: usize = 128;

/// Builds the oval around `(1, 1)` at an interior level.
pub fn oval(h: f64, params: &ModelParams, tol: f64) -> Result<Oval> {
    oval_on(Side::Primary, h, params, tol, INITIAL_VERTICES)
}

/// Builds the oval at level `h` on either annulus with `vertices` rays.
pub fn oval_on(side: Side, h: f64, params: &ModelParams, tol: f64, vertices: usize) -> Result<Oval> {
    let level = match side {
        Side::Primary => require_interior(h, params)?,
        Side::Dual => {
            // mirror of the primary window
            require_interior(-h, params)?;
            level_classify(h, params)
        }
    };
    if vertices < 8 {
        return Err(Error::Domain("an oval needs at least 8 vertices".into()));
    }
    let kappa = params.kappa();
    let radii = (0..vertices)
        .into_par_iter()
        .map(|k| ray_radius(side, kappa, h, 2.0 * PI * k as f64 / vertices as f64))
        .collect::<Result<Vec<_>>>()?;
    let mut o = Oval { level, side, center: side.center(), closure_gap: 0.0, tol, kappa, radii };
    o.closure_gap = o.compute_closure_gap();
    o.check_vertices()?;
    Ok(o)
}

impl Oval {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.level.h
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn angle(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.radii.len() as f64
    }

    /// Vertex `k` and its angular derivative.
    pub fn node(&self, k: usize) -> OvalNode {
        let th = self.angle(k);
        let (s, c) = th.sin_cos();
        let r = self.radii[k];
        let (cx, cy) = self.center;
        let (x, y) = (cx + r * c, cy + r * s);
        let (gx, gy) = symmetric_grad(x, y, self.kappa);
        let radial = gx * c + gy * s;
        let tangential = -gx * s + gy * c;
        let dr = -r * tangential / radial;
        OvalNode { x, y, dx: dr * c - r * s, dy: dr * s + r * c }
    }

    pub fn nodes(&self) -> impl Iterator<Item = OvalNode> + '_ {
        (0..self.len()).map(move |k| self.node(k))
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.nodes().map(|n| (n.x, n.y)).collect()
    }

    /// Trapezoid weight `dtheta`.
    pub fn weight(&self) -> f64 {
        2.0 * PI / self.len() as f64
    }

    /// Doubles the vertex count, keeping the existing vertices.
    pub fn refine(&self) -> Result<Oval> {
        let n = self.len();
        let fresh = (0..n)
            .into_par_iter()
            .map(|k| ray_radius(self.side, self.kappa, self.h(), PI * (2 * k + 1) as f64 / n as f64))
            .collect::<Result<Vec<_>>>()?;
        let mut radii = Vec::with_capacity(2 * n);
        for (a, b) in self.radii.iter().zip(&fresh) {
            radii.push(*a);
            radii.push(*b);
        }
        let mut o = Oval { radii, ..self.clone() };
        o.closure_gap = o.compute_closure_gap();
        o.check_vertices()?;
        Ok(o)
    }

    pub fn min_x(&self) -> f64 {
        self.nodes().map(|n| n.x).fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self) -> f64 {
        let pts = self.points();
        let mut d: f64 = 0.0;
        // opposite vertices suffice for a star-shaped curve up to O(1/n)
        for a in &pts {
            for b in pts.iter().step_by((pts.len() / 64).max(1)) {
                d = d.max(((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt());
            }
        }
        d
    }

    pub fn max_level_residual(&self) -> f64 {
        self.nodes()
            .map(|n| (symmetric_hamiltonian(n.x, n.y, self.kappa) - self.h()).abs())
            .fold(0.0, f64::max)
    }

    /// Signed area by the trapezoid rule on `x dy`.
    pub fn area(&self) -> f64 {
        self.nodes().map(|n| n.x * n.dy).sum::<f64>() * self.weight()
    }

    fn compute_closure_gap(&self) -> f64 {
        let (sx, sy) = self.nodes().fold((0.0, 0.0), |acc, n| (acc.0 + n.dx, acc.1 + n.dy));
        (sx * sx + sy * sy).sqrt() * self.weight()
    }

    fn check_vertices(&self) -> Result<()> {
        let scale = 1.0 + self.h().abs();
        let worst = self.max_level_residual();
        if worst > self.tol.max(1e-13) * scale {
            return Err(Error::Geometry(format!(
                "vertex level residual {worst:e} exceeds tolerance at h = {}",
                self.h()
            )));
        }
        Ok(())
    }
}

/// Radius of the first crossing of `{H = h}` along the ray at angle `theta`.
fn ray_radius(side: Side, kappa: f64, h: f64, theta: f64) -> Result<f64> {
    let (s, c) = theta.sin_cos();
    let (cx, cy) = side.center();
    let sign = side.outward_sign();
    let hc = side.center_level();
    let along = |r: f64| {
        let (x, y) = (cx + r * c, cy + r * s);
        let (gx, gy) = symmetric_grad(x, y, kappa);
        (symmetric_hamiltonian(x, y, kappa), gx * c + gy * s)
    };

    // quadratic model at the center: H - hc ~ q r^2
    let (hxx, hxy, hyy) = hessian(cx, cy, kappa);
    let q = 0.5 * (hxx * c * c + 2.0 * hxy * c * s + hyy * s * s);
    if q * sign <= 0.0 {
        return Err(Error::Geometry("center is not a nondegenerate extremum".into()));
    }

    // levels spaced quadratically so the radius grows roughly linearly in m
    let mut r_prev: f64 = 0.0;
    let mut r_last: f64 = 0.0;
    for m in 1..=CONTINUATION_LEVELS {
        let frac = (m as f64 / CONTINUATION_LEVELS as f64).powi(2);
        let target = hc + (h - hc) * frac;
        let guess = if m == 1 {
            ((target - hc) / q).sqrt()
        } else {
            (2.0 * r_last - r_prev).max(r_last)
        };
        let r = correct(&along, target, guess, r_last, sign)?;
        r_prev = r_last;
        r_last = r;
    }

    // first-crossing check: H - h must keep the interior sign along the ray
    for t in [0.2, 0.4, 0.6, 0.8, 0.9, 0.97] {
        let (v, _) = along(r_last * t);
        if (v - h) * sign >= 0.0 {
            return Err(Error::Geometry(format!(
                "ray at angle {theta} crosses the level before the located vertex"
            )));
        }
    }
    let (_, slope) = along(r_last);
    if slope * sign <= 0.0 {
        return Err(Error::Geometry(format!("oval is not star-shaped at angle {theta}")));
    }
    Ok(r_last)
}

fn hessian(x: f64, y: f64, kappa: f64) -> (f64, f64, f64) {
    let km1 = kappa - 1.0;
    (4.0 * km1 * x - 2.0 * km1 * y, -2.0 * km1 * x, 2.0 * kappa * y)
}

/// Newton from `guess`, falling back to bracketing outward from `r_min`.
fn correct<F>(along: &F, target: f64, guess: f64, r_min: f64, sign: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let mut r = guess;
    for _ in 0..40 {
        let (v, d) = along(r);
        let f = v - target;
        if d * sign <= 0.0 || !d.is_finite() {
            break;
        }
        let step = f / d;
        r -= step;
        if r <= r_min * 0.5 || !r.is_finite() {
            break;
        }
        if step.abs() <= 1e-14 * r.max(1e-300) {
            let (v, _) = along(r);
            if ((v - target) * sign).abs() <= 1e-13 * (1.0 + target.abs()) {
                return Ok(r);
            }
        }
    }
    bracket(along, target, r_min, guess, sign)
}

fn bracket<F>(along: &F, target: f64, r_min: f64, guess: f64, sign: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let g = |r: f64| (along(r).0 - target) * sign;
    let mut lo = r_min;
    if g(lo) >= 0.0 {
        lo = 0.0;
    }
    let mut step = (guess - r_min).abs().max(1e-9).min(1e-2 * guess.max(1e-6));
    let mut hi = lo + step;
    let mut n = 0;
    while g(hi) < 0.0 {
        lo = hi;
        step *= 1.1;
        hi = lo + step;
        n += 1;
        if n > 5000 || !hi.is_finite() {
            return Err(Error::Geometry("failed to bracket the level along a ray".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Whether `h` is far enough from both ends of the primary annulus.
pub fn admissible_level(h: f64, params: &ModelParams) -> bool {
    let (lo, hi) = params.annulus();
    h - lo >= ENDPOINT_EXCLUSION && hi - h >= ENDPOINT_EXCLUSION
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p4() -> ModelParams {
        ModelParams::new(4.0, [0.0; 4]).unwrap()
    }

    #[test]
    fn vertices_sit_on_the_level() {
        let o = oval(-0.5, &p4(), 1e-12).unwrap();
        assert!(o.max_level_residual() < 1e-13);
        assert!(o.closure_gap < 1e-10);
        assert!(o.area() > 0.0);
    }

    #[test]
    fn tiny_oval_near_center() {
        let o = oval(-2.0 / 3.0 + 1e-8, &p4(), 1e-12).unwrap();
        let d = o.diameter();
        assert!(d > 1e-5 && d < 1e-3, "diameter {d}");
    }

    #[test]
    fn refuses_endpoints() {
        let p = p4();
        assert!(matches!(oval(-2.0 / 3.0, &p, 1e-12), Err(Error::Degenerate { .. })));
        assert!(oval(-1.0 / 3.0, &p, 1e-12).is_err());
        assert!(oval(-1.0 / 3.0 - 1e-11, &p, 1e-12).is_err());
        assert!(oval(-0.2, &p, 1e-12).is_err());
    }

    #[test]
    fn dual_oval_is_point_reflection() {
        let p = p4();
        let a = oval_on(Side::Primary, -0.45, &p, 1e-12, 64).unwrap();
        let b = oval_on(Side::Dual, 0.45, &p, 1e-12, 64).unwrap();
        // the ray at angle theta around (1,1) reflects to angle theta + pi
        let pa = a.points();
        let pb = b.points();
        for k in 0..64 {
            let q = pb[(k + 32) % 64];
            assert!((pa[k].0 + q.0).abs() < 1e-12 && (pa[k].1 + q.1).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_keeps_old_vertices() {
        let o = oval_on(Side::Primary, -0.5, &p4(), 1e-12, 32).unwrap();
        let r = o.refine().unwrap();
        assert_eq!(r.len(), 64);
        let (a, b) = (o.points(), r.points());
        for k in 0..32 {
            assert_eq!(a[k], b[2 * k]);
        }
    }

    #[test]
    fn near_saddle_level_still_star_shaped() {
        for k in [1.1, 1.5, 4.0, 9.0] {
            let p = ModelParams::new(k, [0.0; 4]).unwrap();
            let (lo, hi) = p.annulus();
            let h = lo + 0.995 * (hi - lo);
            let o = oval_on(Side::Primary, h, &p, 1e-12, 256).unwrap();
            assert!(o.min_x() > 0.0);
        }
    }
}
