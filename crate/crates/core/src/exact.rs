//! Univariate polynomials and rational functions over exact rationals.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Exact value of a finite `f64`.
pub fn q_from_f64(x: f64) -> Option<Q> {
    Q::from_float(x)
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Dense polynomial with ascending coefficients and no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly {
    c: Vec<Q>,
}

impl Poly {
    pub fn new(mut c: Vec<Q>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        Self { c }
    }

    pub fn zero() -> Self {
        Self { c: Vec::new() }
    }

    pub fn constant(a: Q) -> Self {
        Self::new(vec![a])
    }

    /// The monomial `a x^n`.
    pub fn monomial(a: Q, n: usize) -> Self {
        let mut c = vec![Q::zero(); n + 1];
        c[n] = a;
        Self::new(c)
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&x| q(x)).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    pub fn coeff(&self, n: usize) -> Q {
        self.c.get(n).cloned().unwrap_or_else(Q::zero)
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.c
    }

    pub fn lead(&self) -> Q {
        self.c.last().cloned().unwrap_or_else(Q::zero)
    }

    pub fn scale(&self, a: &Q) -> Self {
        Self::new(self.c.iter().map(|x| x * a).collect())
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.c.iter().enumerate().skip(1).map(|(n, x)| x * q(n as i64)).collect())
    }

    pub fn eval(&self, x: &Q) -> Q {
        self.c.iter().rev().fold(Q::zero(), |acc, a| acc * x + a)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, a| acc * x + q_to_f64(a))
    }

    /// Euclidean division `self = quot * d + rem`.
    pub fn divrem(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero(), "division by the zero polynomial");
        let dd = d.degree().unwrap_or(0);
        let lead = d.lead();
        let mut rem = self.c.clone();
        if self.c.len() < d.c.len() {
            return (Poly::zero(), self.clone());
        }
        let mut quot = vec![Q::zero(); self.c.len() - dd];
        for k in (0..quot.len()).rev() {
            let t = &rem[k + dd] / &lead;
            if !t.is_zero() {
                for (i, di) in d.c.iter().enumerate() {
                    rem[k + i] = &rem[k + i] - &t * di;
                }
            }
            quot[k] = t;
        }
        rem.truncate(dd);
        (Poly::new(quot), Poly::new(rem))
    }

    pub fn monic(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let l = self.lead();
        Poly::new(self.c.iter().map(|x| x / &l).collect())
    }

    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        let (mut x, mut y) = (a.clone(), b.clone());
        while !y.is_zero() {
            let r = x.divrem(&y).1;
            x = y;
            y = r;
        }
        x.monic()
    }

    pub fn pow(&self, n: u32) -> Poly {
        (0..n).fold(Poly::constant(Q::one()), |acc, _| &acc * self)
    }

    /// Whether only even powers appear.
    pub fn is_even(&self) -> bool {
        self.c.iter().enumerate().all(|(n, x)| n % 2 == 0 || x.is_zero())
    }

    /// Polynomial through the points `(x_k, y_k)` (Newton form).
    pub fn interpolate(xs: &[Q], ys: &[Q]) -> Poly {
        let n = xs.len();
        let mut dd = ys.to_vec();
        for level in 1..n {
            for k in (level..n).rev() {
                dd[k] = (&dd[k] - &dd[k - 1]) / (&xs[k] - &xs[k - level]);
            }
        }
        let mut out = Poly::constant(dd[n - 1].clone());
        for k in (0..n - 1).rev() {
            out = &(&out * &Poly::new(vec![-xs[k].clone(), Q::one()])) + &Poly::constant(dd[k].clone());
        }
        out
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::new((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::new((0..n).map(|k| self.coeff(k) - o.coeff(k)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![Q::zero(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                c[i + j] = &c[i + j] + a * b;
            }
        }
        Poly::new(c)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.c.iter().map(|x| -x).collect())
    }
}

impl fmt::Display for Poly {
    /// Formats in the variable `x`, highest power first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (n, a) in self.c.iter().enumerate().rev() {
            if a.is_zero() {
                continue;
            }
            let sign = if a.is_negative() { "-" } else { "+" };
            if first {
                if a.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let m = a.abs();
            match n {
                0 => write!(f, "{m}")?,
                1 if m.is_one() => write!(f, "x")?,
                1 => write!(f, "{m}*x")?,
                _ if m.is_one() => write!(f, "x^{n}")?,
                _ => write!(f, "{m}*x^{n}")?,
            }
        }
        Ok(())
    }
}

/// `num / den` kept in lowest terms with a monic denominator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatFunc {
    pub num: Poly,
    pub den: Poly,
}

impl RatFunc {
    pub fn new(num: Poly, den: Poly) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return Self { num, den: Poly::constant(Q::one()) };
        }
        let g = Poly::gcd(&num, &den);
        let (n, _) = num.divrem(&g);
        let (d, _) = den.divrem(&g);
        let l = d.lead();
        Self { num: n.scale(&(Q::one() / &l)), den: d.monic() }
    }

    pub fn poly(p: Poly) -> Self {
        Self { num: p, den: Poly::constant(Q::one()) }
    }

    pub fn zero() -> Self {
        Self::poly(Poly::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn derivative(&self) -> Self {
        let n = &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative());
        RatFunc::new(n, &self.den * &self.den)
    }

    /// Exact polynomial if the denominator divides out.
    pub fn as_poly(&self) -> Option<Poly> {
        (self.den.degree() == Some(0)).then(|| self.num.scale(&(Q::one() / self.den.lead())))
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.num.eval_f64(x) / self.den.eval_f64(x)
    }
}

impl Add for &RatFunc {
    type Output = RatFunc;
    fn add(self, o: &RatFunc) -> RatFunc {
        if self.den == o.den {
            return RatFunc::new(&self.num + &o.num, self.den.clone());
        }
        RatFunc::new(&(&self.num * &o.den) + &(&o.num * &self.den), &self.den * &o.den)
    }
}

impl Sub for &RatFunc {
    type Output = RatFunc;
    fn sub(self, o: &RatFunc) -> RatFunc {
        self + &RatFunc { num: -&o.num, den: o.den.clone() }
    }
}

impl Mul for &RatFunc {
    type Output = RatFunc;
    fn mul(self, o: &RatFunc) -> RatFunc {
        RatFunc::new(&self.num * &o.num, &self.den * &o.den)
    }
}
