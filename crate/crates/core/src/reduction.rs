//! Moment recurrences and the reductions that bring the Melnikov integral
//! down to four terms over the basis `I00, I10, I01, I11, I-1,0, I-1,1`.
//!
//! Moments are taken with the absolute area measure. Under the inversion
//! `(x, y) -> (1/x, y/x)` the Jacobian is `-1/x^3`, so cubic-form `I_{i,j}`
//! equals symmetric-form `I_{-i-j-3,j}`; the familiar minus sign is the
//! orientation of the pulled-back area form.

use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::model::{Form, ModelParams};
use crate::quadrature::{moments, Method, MomentIndex};

/// Tolerance used when the reduction layer calls the quadrature oracle.
pub const ORACLE_TOL: f64 = 1e-11;

/// The six-moment basis in its fixed order.
pub const BASIS: [(i32, i32); 6] = [(0, 0), (1, 0), (0, 1), (1, 1), (-1, 0), (-1, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recurrence {
    /// From `d(x^i y^(j+1) H) / dy`.
    YWeighted,
    /// From `d(x^(i+1) y^j H) / dx`.
    XWeighted,
    /// `(i+4)` times the first minus `(j+1)` times the second.
    Combined,
}

/// One summand: a polynomial in `h` (ascending coefficients) times a moment.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: Vec<f64>,
    pub index: MomentIndex,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MomentCombination {
    pub terms: Vec<Term>,
}

impl MomentCombination {
    fn push(&mut self, coeff: Vec<f64>, index: MomentIndex) {
        self.terms.push(Term { coeff, index });
    }

    /// Adds `scale * other`.
    fn absorb(&mut self, scale: f64, other: &MomentCombination) {
        for t in &other.terms {
            self.push(t.coeff.iter().map(|c| c * scale).collect(), t.index);
        }
    }

    pub fn indices(&self) -> Vec<MomentIndex> {
        let mut out: Vec<MomentIndex> = Vec::new();
        for t in &self.terms {
            if !out.contains(&t.index) {
                out.push(t.index);
            }
        }
        out
    }

    /// Evaluates with moment values supplied by `value`.
    pub fn eval_with(&self, h: f64, mut value: impl FnMut(MomentIndex) -> f64) -> f64 {
        self.terms.iter().map(|t| poly_eval(&t.coeff, h) * value(t.index)).sum()
    }

    /// Each term evaluated separately, for scale-aware residuals.
    pub fn term_values_with(&self, h: f64, mut value: impl FnMut(MomentIndex) -> f64) -> Vec<f64> {
        self.terms.iter().map(|t| poly_eval(&t.coeff, h) * value(t.index)).collect()
    }

    /// Evaluates against the quadrature oracle.
    pub fn evaluate(&self, h: f64, params: &ModelParams, tol: f64) -> Result<f64> {
        let vals = oracle_values(&self.indices(), h, params, tol)?;
        Ok(self.eval_with(h, |ix| lookup(&vals, ix)))
    }
}

fn poly_eval(c: &[f64], h: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * h + a)
}

fn lookup(vals: &[(MomentIndex, f64)], ix: MomentIndex) -> f64 {
    vals.iter().find(|(k, _)| *k == ix).map(|(_, v)| *v).expect("moment was requested")
}

fn oracle_values(indices: &[MomentIndex], h: f64, params: &ModelParams, tol: f64) -> Result<Vec<(MomentIndex, f64)>> {
    let vals = moments(indices, h, params, Method::Green, tol)?;
    Ok(vals.into_iter().map(|m| (m.index, m.value)).collect())
}

/// The recurrence as a combination of cubic-form moments.
pub fn recurrence(kind: Recurrence, i: i32, j: i32, kappa: f64) -> MomentCombination {
    let (fi, fj) = (f64::from(i), f64::from(j));
    let km1 = kappa - 1.0;
    let c = MomentIndex::cubic;
    let mut out = MomentCombination::default();
    match kind {
        Recurrence::YWeighted => {
            out.push(vec![kappa / 3.0 * (fj + 4.0)], c(i, j + 3));
            out.push(vec![-(fj + 2.0)], c(i + 2, j + 1));
            out.push(vec![0.0, -(fj + 1.0)], c(i + 3, j));
            out.push(vec![-km1 * (fj + 2.0)], c(i, j + 1));
            out.push(vec![2.0 / 3.0 * km1 * (fj + 1.0)], c(i, j));
        }
        Recurrence::XWeighted => {
            out.push(vec![kappa / 3.0 * (fi + 1.0)], c(i, j + 3));
            out.push(vec![-(fi + 3.0)], c(i + 2, j + 1));
            out.push(vec![0.0, -(fi + 4.0)], c(i + 3, j));
            out.push(vec![-km1 * (fi + 1.0)], c(i, j + 1));
            out.push(vec![2.0 / 3.0 * km1 * (fi + 1.0)], c(i, j));
        }
        Recurrence::Combined => {
            let s = fi + fj + 5.0;
            out.push(vec![kappa * s], c(i, j + 3));
            out.push(vec![-s], c(i + 2, j + 1));
            out.push(vec![-km1 * (fi + 3.0 * fj + 7.0)], c(i, j + 1));
            out.push(vec![2.0 * km1 * (fj + 1.0)], c(i, j));
        }
    }
    out.terms.retain(|t| t.coeff.iter().any(|a| *a != 0.0));
    out
}

/// Left side of a recurrence with oracle moments; vanishes up to
/// quadrature error.
pub fn recurrence_residual(kind: Recurrence, i: i32, j: i32, h: f64, params: &ModelParams) -> Result<f64> {
    recurrence(kind, i, j, params.kappa()).evaluate(h, params, ORACLE_TOL)
}

/// Residual divided by the largest term in absolute value.
pub fn recurrence_relative(kind: Recurrence, i: i32, j: i32, h: f64, params: &ModelParams) -> Result<f64> {
    let comb = recurrence(kind, i, j, params.kappa());
    let vals = oracle_values(&comb.indices(), h, params, ORACLE_TOL)?;
    let terms = comb.term_values_with(h, |ix| lookup(&vals, ix));
    let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    Ok(terms.iter().sum::<f64>() / scale)
}

/// Expresses a symmetric-form moment over the six-moment basis.
pub fn moment_reduce(index: MomentIndex, params: &ModelParams) -> Result<MomentCombination> {
    let k = params.kappa();
    let km1 = k - 1.0;
    let s = MomentIndex::symmetric;
    let unsupported = Err(Error::UnsupportedIndex { i: index.i, j: index.j });
    if index.form != Form::SymmetricForm {
        return unsupported;
    }
    let mut out = MomentCombination::default();
    match (index.i, index.j) {
        (1, 2) | (2, 1) => {
            out.push(vec![0.0, 0.3], s(0, 0));
            out.push(vec![1.0], s(1, 0));
            out.push(vec![0.2], s(0, 1));
        }
        (3, 0) => {
            out.push(vec![0.0, 3.0 * k / (10.0 * km1)], s(0, 0));
            out.push(vec![1.0], s(1, 0));
            out.push(vec![k / (5.0 * km1)], s(0, 1));
        }
        (0, 3) => {
            out.push(vec![0.0, 3.0 * (k + 1.0) / (10.0 * k)], s(0, 0));
            out.push(vec![km1 / k], s(1, 0));
            out.push(vec![(k + 6.0) / (5.0 * k)], s(0, 1));
        }
        (-1, 4) => {
            out.push(vec![0.0, 6.0 / (5.0 * k)], s(-1, 1));
            out.push(vec![9.0 / (5.0 * k * k)], s(-1, 0));
            out.push(vec![9.0 * km1 / (5.0 * k * k)], s(1, 0));
            out.absorb(km1 / k, &moment_reduce(s(1, 2), params)?);
        }
        _ => return unsupported,
    }
    Ok(out)
}

/// Cubic-form `I_{i,j}` minus symmetric-form `I_{-i-j-3,j}` (absolute
/// measure); equivalently the cubic moment plus the oriented pull-back.
pub fn inversion_check(i: i32, j: i32, h: f64, params: &ModelParams) -> Result<f64> {
    let a = MomentIndex::cubic(i, j);
    let b = MomentIndex::symmetric(-i - j - 3, j);
    let vals = oracle_values(&[a, b], h, params, ORACLE_TOL)?;
    Ok(vals[0].1 - vals[1].1)
}

/// Ways of writing the Melnikov integral, from the raw integrand down to the
/// reduced four-term form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Route {
    /// `x^-6 [m1 + m2 Y + m3 Y^3 + m4 (k^2 Y^4 - x^4)]` with `Y = y - 1`,
    /// over the cubic-form region.
    RawCubic,
    /// After folding `I_{-6,2} = I_{-6,1}`: moments `I_{-6,0}`, `I_{-6,1}`,
    /// `I_{-6,3}` and `k^2 I_{-6,4} - I_{-2,0}`.
    FoldedCubic,
    /// Symmetric coordinates: `x^3, x^2 y, y^3, (k^2 y^4 - 1)/x`.
    Symmetric,
    /// `mu1 h I00 + mu2 I10 + mu3 I01 + mu4 (2 I-1,0 + 3 k h I-1,1)`.
    Reduced,
}

impl Route {
    pub const ALL: [Route; 4] = [Route::RawCubic, Route::FoldedCubic, Route::Symmetric, Route::Reduced];
}

/// Matrix taking symmetric-route weights to reduced-route weights.
fn symmetric_to_reduced(kappa: f64) -> Matrix4<f64> {
    let k = kappa;
    let km1 = k - 1.0;
    Matrix4::new(
        3.0 * k / (10.0 * km1), 0.3, 3.0 * (k + 1.0) / (10.0 * k), 0.3 * k * km1,
        1.0, 1.0, km1 / k, 1.8 * km1 + k * km1,
        k / (5.0 * km1), 0.2, (k + 6.0) / (5.0 * k), 0.2 * k * km1,
        0.0, 0.0, 0.0, 0.4,
    )
}

/// Route-native weights equivalent to the reduced-form weights `mu`.
pub fn route_weights(route: Route, mu: [f64; 4], kappa: f64) -> Result<[f64; 4]> {
    if route == Route::Reduced {
        return Ok(mu);
    }
    let lu = symmetric_to_reduced(kappa).lu();
    let sym = lu
        .solve(&Vector4::from(mu))
        .ok_or_else(|| Error::Consistency("route weight map is singular".into()))?;
    let sym = [sym[0], sym[1], sym[2], sym[3]];
    match route {
        Route::Symmetric | Route::FoldedCubic => Ok(sym),
        Route::RawCubic => {
            let k2 = kappa * kappa;
            let m4 = sym[3];
            let m3 = sym[2] + 4.0 * k2 * m4;
            let m2 = sym[1] - 2.0 * k2 * m4;
            let m1 = sym[0] + m2 + m3 - k2 * m4;
            Ok([m1, m2, m3, m4])
        }
        Route::Reduced => unreachable!(),
    }
}

/// The integrand of a route as a moment combination with weights `w`.
pub fn route_combination(route: Route, w: [f64; 4], kappa: f64) -> MomentCombination {
    let k2 = kappa * kappa;
    let c = MomentIndex::cubic;
    let s = MomentIndex::symmetric;
    let mut out = MomentCombination::default();
    match route {
        Route::RawCubic => {
            // (y-1)^n expanded by the binomial theorem
            let [m1, m2, m3, m4] = w;
            out.push(vec![m1 - m2 - m3 + k2 * m4], c(-6, 0));
            out.push(vec![m2 + 3.0 * m3 - 4.0 * k2 * m4], c(-6, 1));
            out.push(vec![-3.0 * m3 + 6.0 * k2 * m4], c(-6, 2));
            out.push(vec![m3 - 4.0 * k2 * m4], c(-6, 3));
            out.push(vec![k2 * m4], c(-6, 4));
            out.push(vec![-m4], c(-2, 0));
        }
        Route::FoldedCubic => {
            out.push(vec![w[0]], c(-6, 0));
            out.push(vec![w[1]], c(-6, 1));
            out.push(vec![w[2]], c(-6, 3));
            out.push(vec![k2 * w[3]], c(-6, 4));
            out.push(vec![-w[3]], c(-2, 0));
        }
        Route::Symmetric => {
            out.push(vec![w[0]], s(3, 0));
            out.push(vec![w[1]], s(2, 1));
            out.push(vec![w[2]], s(0, 3));
            out.push(vec![k2 * w[3]], s(-1, 4));
            out.push(vec![-w[3]], s(-1, 0));
        }
        Route::Reduced => {
            out.push(vec![0.0, w[0]], s(0, 0));
            out.push(vec![w[1]], s(1, 0));
            out.push(vec![w[2]], s(0, 1));
            out.push(vec![2.0 * w[3]], s(-1, 0));
            out.push(vec![0.0, 3.0 * kappa * w[3]], s(-1, 1));
        }
    }
    out
}

/// The Melnikov integral by `route`, with the reduced-form weights taken from
/// `params.mu()`. All routes agree.
#[allow(non_snake_case)]
pub fn assemble_I(h: f64, params: &ModelParams, route: Route) -> Result<f64> {
    let w = route_weights(route, params.mu(), params.kappa())?;
    route_combination(route, w, params.kappa()).evaluate(h, params, ORACLE_TOL)
}

/// The six basis moments at one level, in `BASIS` order.
pub fn basis_moments(h: f64, params: &ModelParams, tol: f64) -> Result<[f64; 6]> {
    let idx: Vec<MomentIndex> = BASIS.iter().map(|&(i, j)| MomentIndex::symmetric(i, j)).collect();
    let v = moments(&idx, h, params, Method::Green, tol)?;
    Ok([v[0].value, v[1].value, v[2].value, v[3].value, v[4].value, v[5].value])
}
