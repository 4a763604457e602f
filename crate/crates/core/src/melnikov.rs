//! `G = L1 I` and `R = L2 G`, by two numeric routes, and the exact
//! extraction of the coefficients of
//!
//! ```text
//! R(h) = h [ (a0 + a1 h^2 + a2 h^4 + a3 h^6) I'00 + (b0 + b1 h^2 + b2 h^4) I'11 ]
//!        / ((9h^2 - 4)^2 (9k h^2 - 4))
//! ```
//!
//! `G` is parametrized by weights `w` as
//! `G = (w1 h^2 + w3) I'00 + w2 I'11 + w4 J` with
//! `J = -4h I'-1,0 + (3k h^2 - 4) I'-1,1`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{q, q_frac, q_from_f64, q_to_f64, Poly, RatFunc, Q};
use crate::model::ModelParams;
use crate::picard_fuchs::{apply_l2, derivative_formulas, pf_jet, Order, PFVector};

/// Weights of `G` in the `(w1 h^2 + w3) I'00 + w2 I'11 + w4 J` layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GWeights(pub [f64; 4]);

impl GWeights {
    /// Weights of `h I' - I` when `I` is the reduced four-term integral with
    /// weights `mu`.
    pub fn from_reduced(mu: [f64; 4], kappa: f64) -> Self {
        let [m1, m2, m3, m4] = mu;
        GWeights([
            m1,
            -2.0 / 3.0 * m2 - 2.0 * (kappa - 1.0) / (3.0 * kappa) * m3,
            -2.0 / (3.0 * kappa) * m3,
            m4,
        ])
    }
}

/// `J = -4h I'-1,0 + (3k h^2 - 4) I'-1,1`.
pub fn j_part(h: f64, pf: &PFVector, kappa: f64) -> f64 {
    -4.0 * h * pf.derivs[4] + (3.0 * kappa * h * h - 4.0) * pf.derivs[5]
}

pub fn eval_g(h: f64, w: &GWeights, pf: &PFVector, kappa: f64) -> f64 {
    let [w1, w2, w3, w4] = w.0;
    (w1 * h * h + w3) * pf.derivs[0] + w2 * pf.derivs[3] + w4 * j_part(h, pf, kappa)
}

/// `G` with the weights read from `params.mu()`.
#[allow(non_snake_case)]
pub fn eval_G(h: f64, params: &ModelParams, pf: &PFVector) -> f64 {
    eval_g(h, &GWeights(params.mu()), pf, params.kappa())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RRoute {
    /// Closed-form second and third derivatives of `I'00`, `I'11` and the
    /// second-order equation for `J`.
    Direct,
    /// Derivative jet of the six-equation system.
    PfNumeric,
}

pub fn eval_r(h: f64, w: &GWeights, pf: &PFVector, params: &ModelParams, route: RRoute) -> Result<f64> {
    let k = params.kappa();
    let [w1, w2, w3, w4] = w.0;
    let c = w1 * h * h + w3;
    let (c1, c2) = (2.0 * w1 * h, 2.0 * w1);
    match route {
        RRoute::Direct => {
            let (j1, j2) = (pf.derivs[0], pf.derivs[3]);
            let d2 = derivative_formulas(Order::Second, h, j1, j2, params)?;
            let d3 = derivative_formulas(Order::Third, h, j1, j2, params)?;
            let g = c * j1 + w2 * j2;
            let g1 = c1 * j1 + c * d2[0] + w2 * d2[1];
            let g2 = c2 * j1 + 2.0 * c1 * d2[0] + c * d3[0] + w2 * d3[1];
            let q = 9.0 * k * h * h - 4.0;
            let lj = 4.0 / 3.0 * (k - 1.0) * (h * q * d3[1] + (6.0 * k * h * h + 8.0) * d2[1]);
            Ok(apply_l2(g, g1, g2, h, params) + w4 * lj)
        }
        RRoute::PfNumeric => {
            let p = 9.0 * h * h - 4.0;
            let q = 9.0 * k * h * h - 4.0;
            if p.abs() < 1e-12 || q.abs() < 1e-12 {
                return Err(Error::Pole(format!("h = {h} is a critical level")));
            }
            let jet = pf_jet(h, &pf.values, params, 3)?;
            let (v1, v2, v3) = (&jet[1], &jet[2], &jet[3]);
            let a = 3.0 * k * h * h - 4.0;
            let g = c * v1[0] + w2 * v1[3] + w4 * (-4.0 * h * v1[4] + a * v1[5]);
            let g1 = c1 * v1[0] + c * v2[0] + w2 * v2[3]
                + w4 * (-4.0 * v1[4] - 4.0 * h * v2[4] + 6.0 * k * h * v1[5] + a * v2[5]);
            let g2 = c2 * v1[0] + 2.0 * c1 * v2[0] + c * v3[0] + w2 * v3[3]
                + w4 * (-8.0 * v2[4] - 4.0 * h * v3[4] + 6.0 * k * v1[5] + 12.0 * k * h * v2[5] + a * v3[5]);
            Ok(apply_l2(g, g1, g2, h, params))
        }
    }
}

/// `R` with the weights read from `params.mu()`.
#[allow(non_snake_case)]
pub fn eval_R(h: f64, params: &ModelParams, pf: &PFVector, route: RRoute) -> Result<f64> {
    eval_r(h, &GWeights(params.mu()), pf, params, route)
}

/// Exact coefficients at one rational `kappa`: `a[j][m]` is the
/// coefficient of weight `w_(m+1)` in `a_j`, likewise `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct RCoefficients {
    pub kappa: Q,
    pub a: [[Q; 4]; 4],
    pub b: [[Q; 4]; 3],
}

impl RCoefficients {
    /// `(a0..a3, b0..b2)` for the weights `w`.
    pub fn for_weights(&self, w: &GWeights) -> ([f64; 4], [f64; 3]) {
        let lin = |row: &[Q; 4]| row.iter().zip(&w.0).map(|(c, x)| q_to_f64(c) * x).sum::<f64>();
        (
            [lin(&self.a[0]), lin(&self.a[1]), lin(&self.a[2]), lin(&self.a[3])],
            [lin(&self.b[0]), lin(&self.b[1]), lin(&self.b[2])],
        )
    }

    /// `R` from the coefficient template.
    pub fn eval(&self, h: f64, w: &GWeights, j1: f64, j2: f64) -> f64 {
        let (a, b) = self.for_weights(w);
        r_template(h, q_to_f64(&self.kappa), &a, &b, j1, j2)
    }
}

pub fn r_template(h: f64, kappa: f64, a: &[f64; 4], b: &[f64; 3], j1: f64, j2: f64) -> f64 {
    let h2 = h * h;
    let pa = a[0] + h2 * (a[1] + h2 * (a[2] + h2 * a[3]));
    let pb = b[0] + h2 * (b[1] + h2 * b[2]);
    let p = 9.0 * h2 - 4.0;
    h * (pa * j1 + pb * j2) / (p * p * (9.0 * kappa * h2 - 4.0))
}

type LinForm = [RatFunc; 2];

struct Calculus {
    kappa: Q,
    x: Poly,
    p: Poly,
    q: Poly,
    /// `I''00` and `I''11` as linear forms in `(I'00, I'11)`.
    second: [LinForm; 2],
}

impl Calculus {
    fn new(kappa: Q) -> Self {
        let x = Poly::new(vec![Q::zero(), Q::one()]);
        let p = Poly::new(vec![q(-4), Q::zero(), q(9)]);
        let qq = Poly::new(vec![q(-4), Q::zero(), &kappa * q(9)]);
        let pq = &p * &qq;
        let km1 = &kappa - Q::one();
        let second = [
            [
                RatFunc::new((&x * &qq).scale(&q(-3)), pq.clone()),
                RatFunc::new(x.scale(&(km1 * q(12))), pq.clone()),
            ],
            [RatFunc::new(x.scale(&q(-3)), p.clone()), RatFunc::new(x.scale(&q(3)), p.clone())],
        ];
        Self { kappa, x, p, q: qq, second }
    }

    fn rf(p: Poly) -> RatFunc {
        RatFunc::poly(p)
    }

    fn d(&self, l: &LinForm) -> LinForm {
        let [s0, s1] = &self.second;
        [
            &(&l[0].derivative() + &(&l[0] * &s0[0])) + &(&l[1] * &s1[0]),
            &(&l[1].derivative() + &(&l[0] * &s0[1])) + &(&l[1] * &s1[1]),
        ]
    }

    fn scale(l: &LinForm, c: &RatFunc) -> LinForm {
        [&l[0] * c, &l[1] * c]
    }

    fn add(a: &LinForm, b: &LinForm) -> LinForm {
        [&a[0] + &b[0], &a[1] + &b[1]]
    }

    fn l2(&self, g: &LinForm) -> LinForm {
        let g1 = self.d(g);
        let g2 = self.d(&g1);
        let c0 = Self::rf(self.x.scale(&(&self.kappa * q(5))));
        let c1 = Self::rf(-&(&self.q - &Poly::constant(q(4))));
        let c2 = Self::rf(&self.x * &self.q);
        Self::add(&Self::add(&Self::scale(g, &c0), &Self::scale(&g1, &c1)), &Self::scale(&g2, &c2))
    }

    /// `R` for a unit weight vector.
    fn r_unit(&self, m: usize) -> LinForm {
        let zero = RatFunc::zero();
        let one = RatFunc::poly(Poly::constant(Q::one()));
        match m {
            0 => self.l2(&[Self::rf(&self.x * &self.x), zero]),
            1 => self.l2(&[zero, one]),
            2 => self.l2(&[one, zero]),
            _ => {
                let i11pp = &self.second[1];
                let i11ppp = self.d(i11pp);
                let six = Self::rf(Poly::new(vec![q(8), Q::zero(), &self.kappa * q(6)]));
                let inner = Self::add(&Self::scale(&i11ppp, &Self::rf(&self.x * &self.q)), &Self::scale(i11pp, &six));
                let c = Self::rf(Poly::constant((&self.kappa - Q::one()) * q_frac(4, 3)));
                Self::scale(&inner, &c)
            }
        }
    }
}

/// Exact coefficients at the rational value of `kappa`.
pub fn extract_at(kappa: Q) -> Result<RCoefficients> {
    let calc = Calculus::new(kappa.clone());
    let clear = RatFunc::new(&(&calc.p * &calc.p) * &calc.q, calc.x.clone());
    let zero_row = || [Q::zero(), Q::zero(), Q::zero(), Q::zero()];
    let mut a = [zero_row(), zero_row(), zero_row(), zero_row()];
    let mut b = [zero_row(), zero_row(), zero_row()];
    for m in 0..4 {
        let r = calc.r_unit(m);
        for (comp, limit) in [(0usize, 6usize), (1, 4)] {
            let poly = (&r[comp] * &clear).as_poly().ok_or_else(|| {
                Error::Consistency(format!("R does not clear to the expected denominator (weight {m})"))
            })?;
            if !poly.is_even() || poly.degree().is_some_and(|d| d > limit) {
                return Err(Error::Consistency(format!(
                    "numerator of R has unexpected shape (weight {m}, component {comp}): {poly}"
                )));
            }
            for j in 0..=limit / 2 {
                let c = poly.coeff(2 * j);
                if comp == 0 {
                    a[j][m] = c;
                } else {
                    b[j][m] = c;
                }
            }
        }
    }
    Ok(RCoefficients { kappa, a, b })
}

fn cache() -> &'static Mutex<HashMap<u64, RCoefficients>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, RCoefficients>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Exact coefficients at `params.kappa()` (taken as the exact binary
/// rational it is), cached per `kappa`.
#[allow(non_snake_case)]
pub fn extract_R_coeffs(params: &ModelParams) -> Result<RCoefficients> {
    let key = params.kappa().to_bits();
    if let Some(c) = cache().lock().expect("coefficient cache poisoned").get(&key) {
        return Ok(c.clone());
    }
    let kappa = q_from_f64(params.kappa()).ok_or_else(|| Error::Domain("kappa is not finite".into()))?;
    let c = extract_at(kappa)?;
    cache().lock().expect("coefficient cache poisoned").insert(key, c.clone());
    Ok(c)
}

/// Every coefficient as an exact polynomial in `kappa`.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaPolynomials {
    pub a: [[Poly; 4]; 4],
    pub b: [[Poly; 4]; 3],
}

/// Interpolates the exact coefficients over integer `kappa` and confirms
/// the result at an extra non-integer sample.
pub fn r_kappa_polynomials() -> Result<KappaPolynomials> {
    const SAMPLES: i64 = 6;
    let xs: Vec<Q> = (2..2 + SAMPLES).map(q).collect();
    let data = xs.iter().map(|k| extract_at(k.clone())).collect::<Result<Vec<_>>>()?;
    let fit = |get: &dyn Fn(&RCoefficients) -> Q| {
        let ys: Vec<Q> = data.iter().map(get).collect();
        Poly::interpolate(&xs, &ys)
    };
    let a: [[Poly; 4]; 4] = std::array::from_fn(|j| std::array::from_fn(|m| fit(&|c| c.a[j][m].clone())));
    let b: [[Poly; 4]; 3] = std::array::from_fn(|j| std::array::from_fn(|m| fit(&|c| c.b[j][m].clone())));
    let probe = q_frac(37, 7);
    let check = extract_at(probe.clone())?;
    for j in 0..4 {
        for m in 0..4 {
            let ok_a = a[j][m].eval(&probe) == check.a[j][m];
            let ok_b = j >= 3 || b[j][m].eval(&probe) == check.b[j][m];
            if !ok_a || !ok_b {
                return Err(Error::Consistency("coefficients are not polynomial in kappa of low degree".into()));
            }
        }
    }
    Ok(KappaPolynomials { a, b })
}

impl KappaPolynomials {
    /// Text dump, one coefficient per line, polynomials in `k`.
    pub fn render(&self) -> String {
        let names = ["w1", "w2", "w3", "w4"];
        let mut out = String::new();
        let mut emit = |label: String, row: &[Poly; 4]| {
            let parts: Vec<String> = row
                .iter()
                .zip(names)
                .filter(|(p, _)| !p.is_zero())
                .map(|(p, n)| format!("({}) {n}", p.to_string().replace('x', "k")))
                .collect();
            let body = if parts.is_empty() { "0".to_string() } else { parts.join(" + ") };
            out.push_str(&format!("{label} = {body}\n"));
        };
        for (j, row) in self.a.iter().enumerate() {
            emit(format!("a{j}"), row);
        }
        for (j, row) in self.b.iter().enumerate() {
            emit(format!("b{j}"), row);
        }
        out
    }
}
