//! The chain of zero bounds `I <- G <- R` on the annulus interval.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analysis::zeros::{chebyshev_grid, count_zeros_sampled, ZeroReport};
use crate::error::{Error, Result};
use crate::melnikov::{eval_g, extract_R_coeffs, GWeights};
use crate::model::{ModelParams, CENTER_LEVEL};
use crate::exact::q_to_f64;
use crate::ode::Dopri5;
use crate::picard_fuchs::{pf_derivatives, propagate, PFVector, PfTable};
use crate::reduction::{assemble_I, Route};

/// Margin kept from both ends of the annulus interval.
pub const BOUND_MARGIN: f64 = 1e-6;
const PF_TOL: f64 = 1e-12;
const ZERO_TOL: f64 = 1e-12;

/// PF vectors on a level grid of one `k`, shared by every weight vector.
#[derive(Debug, Clone)]
pub struct BoundContext {
    params: ModelParams,
    pub interval: (f64, f64),
    pub levels: Vec<f64>,
    pub rows: Vec<PFVector>,
    /// `a[j][m]`, `b[j][m]` of the `R` template per unit weight `w_(m+1)`.
    a: [[f64; 4]; 4],
    b: [[f64; 4]; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    I,
    G,
    R,
}

impl Quantity {
    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::I => "I",
            Quantity::G => "G",
            Quantity::R => "R",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub kappa: f64,
    pub mu: [f64; 4],
    pub interval: (f64, f64),
    pub i: ZeroReport,
    pub g: ZeroReport,
    pub r: ZeroReport,
    pub violations: Vec<String>,
    /// Largest gap between `h * int xi^-2 G` and the oracle `I`, relative
    /// to the largest `|I|` on the grid.
    pub reconstruction_error: Option<f64>,
}

impl BoundReport {
    pub fn counts(&self) -> [u32; 3] {
        [self.i.count, self.g.count, self.r.count]
    }
}

impl BoundContext {
    pub fn build(params: &ModelParams, grid: usize) -> Result<Self> {
        let (lo, hi) = params.annulus();
        let interval = (lo + BOUND_MARGIN, hi - BOUND_MARGIN);
        let levels = chebyshev_grid(interval.0, interval.1, grid);
        let rows = PfTable::build(params, &levels, PF_TOL)?.rows;
        let coeffs = extract_R_coeffs(params)?;
        let mut a = [[0.0; 4]; 4];
        let mut b = [[0.0; 4]; 3];
        for m in 0..4 {
            for j in 0..4 {
                a[j][m] = q_to_f64(&coeffs.a[j][m]);
            }
            for j in 0..3 {
                b[j][m] = q_to_f64(&coeffs.b[j][m]);
            }
        }
        Ok(Self { params: params.clone(), interval, levels, rows, a, b })
    }

    pub fn kappa(&self) -> f64 {
        self.params.kappa()
    }

    /// PF vector at any level of the interval, from the nearest grid row.
    pub fn pf_at(&self, h: f64) -> Result<PFVector> {
        let k = self.levels.partition_point(|&x| x < h).min(self.levels.len() - 1);
        let k = if k > 0 && (self.levels[k - 1] - h).abs() < (self.levels[k] - h).abs() { k - 1 } else { k };
        let row = &self.rows[k];
        if row.h == h {
            return Ok(row.clone());
        }
        let v = propagate(row.h, &row.values, h, &self.params, PF_TOL)?;
        PFVector::from_values(h, v, &self.params)
    }

    /// `mu1 h I00 + mu2 I10 + mu3 I01 + mu4 (2 I-1,0 + 3k h I-1,1)`.
    pub fn i_value(&self, mu: &[f64; 4], pf: &PFVector) -> f64 {
        let (h, v) = (pf.h, &pf.values);
        mu[0] * h * v[0] + mu[1] * v[1] + mu[2] * v[2] + mu[3] * (2.0 * v[4] + 3.0 * self.kappa() * h * v[5])
    }

    pub fn g_value(&self, w: &GWeights, pf: &PFVector) -> f64 {
        eval_g(pf.h, w, pf, self.kappa())
    }

    /// `R (9h^2 - 4)^2 (9k h^2 - 4) / h`, which has the zeros of `R` on the
    /// interval and no poles at its ends.
    pub fn r_numerator(&self, w: &GWeights, pf: &PFVector) -> f64 {
        let h2 = pf.h * pf.h;
        let lin = |row: &[f64; 4]| row.iter().zip(&w.0).map(|(c, x)| c * x).sum::<f64>();
        let pa = lin(&self.a[0]) + h2 * (lin(&self.a[1]) + h2 * (lin(&self.a[2]) + h2 * lin(&self.a[3])));
        let pb = lin(&self.b[0]) + h2 * (lin(&self.b[1]) + h2 * lin(&self.b[2]));
        pa * pf.derivs[0] + pb * pf.derivs[3]
    }

    fn value(&self, q: Quantity, mu: &[f64; 4], w: &GWeights, pf: &PFVector) -> f64 {
        match q {
            Quantity::I => self.i_value(mu, pf),
            Quantity::G => self.g_value(w, pf),
            Quantity::R => self.r_numerator(w, pf),
        }
    }

    pub fn zeros(&self, q: Quantity, mu: &[f64; 4]) -> Result<ZeroReport> {
        let w = GWeights::from_reduced(*mu, self.kappa());
        let ys: Vec<f64> = self.rows.iter().map(|pf| self.value(q, mu, &w, pf)).collect();
        let f = |h: f64| self.pf_at(h).map(|pf| self.value(q, mu, &w, &pf));
        count_zeros_sampled(&self.levels, &ys, &f, self.interval, ZERO_TOL)
    }

    /// Zero counts of `I`, `G`, `R` for the reduced weights `mu` and the
    /// checks `#R <= 6`, `#G <= #R + 2`, `#I <= #G <= 8`.
    pub fn evaluate(&self, mu: [f64; 4], reconstruct: bool) -> Result<BoundReport> {
        let i = self.zeros(Quantity::I, &mu)?;
        let g = self.zeros(Quantity::G, &mu)?;
        let r = self.zeros(Quantity::R, &mu)?;
        let mut violations = Vec::new();
        if r.count > 6 {
            violations.push(format!("R has {} zeros (> 6)", r.count));
        }
        if g.count > r.count + 2 {
            violations.push(format!("G has {} zeros, R has {}", g.count, r.count));
        }
        if i.count > g.count {
            violations.push(format!("I has {} zeros, G has {}", i.count, g.count));
        }
        if g.count > 8 {
            violations.push(format!("G has {} zeros (> 8)", g.count));
        }
        let reconstruction_error = if reconstruct { Some(self.reconstruction_error(mu, 5)?) } else { None };
        Ok(BoundReport { kappa: self.kappa(), mu, interval: self.interval, i, g, r, violations, reconstruction_error })
    }

    /// `I(h) = h int_{-2/3}^h xi^-2 G(xi) d xi` at `points` levels against
    /// the reduced route of the moment oracle. The integral is carried as a
    /// seventh component of the PF system from the left end of the
    /// interval, with the sliver next to `-2/3` taken to first order.
    pub fn reconstruction_error(&self, mu: [f64; 4], points: usize) -> Result<f64> {
        let params = self.params.with_mu(mu);
        let w = GWeights::from_reduced(mu, self.kappa());
        let kappa = self.kappa();
        let a0 = self.interval.0;
        let start = self.pf_at(a0)?;
        let sliver = (a0 - CENTER_LEVEL) * self.g_value(&w, &start) / (a0 * a0);
        let mut y: Vec<f64> = start.values.to_vec();
        y.push(sliver);
        let scale = self.rows.iter().map(|pf| self.i_value(&mu, pf).abs()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Ok(0.0);
        }
        let rhs = |h: f64, v: &[f64], dv: &mut [f64]| {
            let vals = [v[0], v[1], v[2], v[3], v[4], v[5]];
            match pf_derivatives(h, &vals, &params) {
                Ok(d) => {
                    dv[..6].copy_from_slice(&d);
                    let pf = PFVector { h, values: vals, derivs: d };
                    dv[6] = eval_g(h, &w, &pf, kappa) / (h * h);
                }
                Err(_) => dv.iter_mut().for_each(|x| *x = f64::NAN),
            }
        };
        let (lo, hi) = self.interval;
        let mut at = a0;
        let mut worst: f64 = 0.0;
        for k in 1..=points {
            let h = lo + (hi - lo) * k as f64 / (points as f64 + 1.0);
            y = Dopri5::new(1e-12, 1e-16).integrate(rhs, at, &y, h)?;
            at = h;
            let rebuilt = h * y[6];
            let oracle = assemble_I(h, &params, Route::Reduced)?;
            worst = worst.max((rebuilt - oracle).abs() / scale);
        }
        if !worst.is_finite() {
            return Err(Error::NonConvergence("reconstruction of I from G".into()));
        }
        Ok(worst)
    }
}

/// A weight vector uniform on the unit sphere, from stream `trial` of `seed`.
pub fn random_mu(seed: u64, trial: u64) -> [f64; 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let mut mu = [0.0; 4];
    for m in &mut mu {
        *m = rng.sample(StandardNormal);
    }
    let norm = mu.iter().map(|x| x * x).sum::<f64>().sqrt();
    mu.map(|x| x / norm)
}

/// `trials` random weight vectors on one context, in trial order.
pub fn sweep(ctx: &BoundContext, trials: usize, seed: u64) -> Result<Vec<BoundReport>> {
    (0..trials)
        .into_par_iter()
        .map(|t| ctx.evaluate(random_mu(seed, t as u64), false))
        .collect()
}

/// Zero counts and chain checks for `params.mu()`.
pub fn bound_pipeline(params: &ModelParams, grid: usize) -> Result<BoundReport> {
    BoundContext::build(params, grid)?.evaluate(params.mu(), true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_have_no_zeros() {
        let params = ModelParams::new(4.0, [0.0; 4]).unwrap();
        let r = BoundContext::build(&params, 96).unwrap().evaluate([0.0; 4], false).unwrap();
        assert_eq!(r.counts(), [0, 0, 0]);
        assert!(r.violations.is_empty());
    }

    #[test]
    fn second_kind_integral_does_not_vanish() {
        // mu = (0, 1, 0, 0) in G's own weights is I'11 alone
        let params = ModelParams::new(4.0, [0.0; 4]).unwrap();
        let ctx = BoundContext::build(&params, 128).unwrap();
        let w = GWeights([0.0, 1.0, 0.0, 0.0]);
        let ys: Vec<f64> = ctx.rows.iter().map(|pf| ctx.g_value(&w, pf)).collect();
        let f = |h: f64| ctx.pf_at(h).map(|pf| ctx.g_value(&w, &pf));
        assert_eq!(count_zeros_sampled(&ctx.levels, &ys, &f, ctx.interval, 1e-12).unwrap().count, 0);
    }

    #[test]
    fn reconstruction_matches_oracle() {
        let params = ModelParams::new(2.0, [0.3, -0.5, 0.7, 0.2]).unwrap();
        let r = bound_pipeline(&params, 96).unwrap();
        assert!(r.reconstruction_error.unwrap() < 1e-6, "{:?}", r.reconstruction_error);
        assert!(r.violations.is_empty(), "{:?}", r.violations);
    }
}
