//! Solutions of `L2 G = R` by variation of parameters on a numerically
//! integrated frame, and the `k + 2` zero bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analysis::zeros::{chebyshev_grid, count_zeros_sampled};
use crate::error::Result;
use crate::melnikov::r_template;
use crate::model::ModelParams;
use crate::ode::Dopri5;
use crate::picard_fuchs::{derivative_formulas, Order, PFVector};

/// An `R` of template form and the free part of `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forcing {
    pub a: [f64; 4],
    pub b: [f64; 3],
    /// Weights of the homogeneous frame solutions added to the particular
    /// solution.
    pub c: [f64; 2],
}

impl Forcing {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let mut draw = || rng.sample::<f64, _>(StandardNormal);
        Self {
            a: [draw(), draw(), draw(), draw()],
            b: [draw(), draw(), draw()],
            c: [draw(), draw()],
        }
    }
}

/// State `(J1, J2, x1, x1', x2, x2', u1, u2)`: `J = (I'00, I'11)`, the
/// frame of `L2` normalized at the start, and the variation coefficients.
fn rhs<'a>(params: &'a ModelParams, f: &'a Forcing) -> impl Fn(f64, &[f64], &mut [f64]) + 'a {
    let kappa = params.kappa();
    move |h, y, dy| {
        let d = derivative_formulas(Order::Second, h, y[0], y[1], params).unwrap_or([f64::NAN; 2]);
        dy[0] = d[0];
        dy[1] = d[1];
        let a = h * (9.0 * kappa * h * h - 4.0);
        let b = 9.0 * kappa * h * h - 8.0;
        let c = 5.0 * kappa * h;
        for col in 0..2 {
            let (g, g1) = (y[2 + 2 * col], y[3 + 2 * col]);
            dy[2 + 2 * col] = g1;
            dy[3 + 2 * col] = (b * g1 - c * g) / a;
        }
        let r = r_template(h, kappa, &f.a, &f.b, y[0], y[1]) / a;
        let w = y[2] * y[5] - y[4] * y[3];
        dy[6] = -y[4] * r / w;
        dy[7] = y[2] * r / w;
    }
}

fn g_of(y: &[f64], f: &Forcing) -> f64 {
    (y[6] + f.c[0]) * y[2] + (y[7] + f.c[1]) * y[4]
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationTrial {
    pub forcing: Forcing,
    pub r_zeros: u32,
    pub g_zeros: u32,
    /// Largest `|L2 G - R|` relative to the terms, by differences.
    pub residual: f64,
}

/// Samples `G` and `R` on a Chebyshev grid of `window`, integrating from
/// its middle with `J` from the oracle there.
pub fn variation_trial(params: &ModelParams, window: (f64, f64), forcing: &Forcing, start: &PFVector, grid: usize) -> Result<VariationTrial> {
    let kappa = params.kappa();
    let mid = start.h;
    let y0 = vec![start.derivs[0], start.derivs[3], 1.0, 0.0, 0.0, 1.0, 0.0, 0.0];
    let levels = chebyshev_grid(window.0, window.1, grid);
    let f = rhs(params, forcing);
    let solver = || Dopri5::new(1e-11, 1e-14);
    let mut states = vec![Vec::new(); grid];
    let split = levels.partition_point(|&x| x < mid);
    for side in [(0..split).rev().collect::<Vec<_>>(), (split..grid).collect()] {
        let (mut at, mut y) = (mid, y0.clone());
        for k in side {
            y = solver().integrate(&f, at, &y, levels[k])?;
            at = levels[k];
            states[k] = y.clone();
        }
    }
    let state_at = |h: f64| -> Result<Vec<f64>> {
        let k = levels.partition_point(|&x| x < h).min(grid - 1);
        solver().integrate(&f, levels[k], &states[k], h)
    };
    let rs: Vec<f64> = levels.iter().zip(&states).map(|(&h, y)| r_template(h, kappa, &forcing.a, &forcing.b, y[0], y[1])).collect();
    let gs: Vec<f64> = states.iter().map(|y| g_of(y, forcing)).collect();
    let r_fn = |h: f64| state_at(h).map(|y| r_template(h, kappa, &forcing.a, &forcing.b, y[0], y[1]));
    let g_fn = |h: f64| state_at(h).map(|y| g_of(&y, forcing));
    let r_zeros = count_zeros_sampled(&levels, &rs, &r_fn, window, 1e-12)?.count;
    let g_zeros = count_zeros_sampled(&levels, &gs, &g_fn, window, 1e-12)?.count;

    // L2 G = R checked at a few interior levels by central differences
    let mut residual: f64 = 0.0;
    for k in 1..4 {
        let h = window.0 + (window.1 - window.0) * k as f64 / 4.0;
        let step = 1e-3 * (window.1 - window.0);
        let g: Vec<f64> = [-2.0, -1.0, 0.0, 1.0, 2.0]
            .iter()
            .map(|&o| g_fn(h + o * step))
            .collect::<Result<_>>()?;
        let d1 = (g[0] - 8.0 * g[1] + 8.0 * g[3] - g[4]) / (12.0 * step);
        let d2 = (-g[0] + 16.0 * g[1] - 30.0 * g[2] + 16.0 * g[3] - g[4]) / (12.0 * step * step);
        let terms = [
            5.0 * kappa * h * g[2],
            -(9.0 * kappa * h * h - 8.0) * d1,
            h * (9.0 * kappa * h * h - 4.0) * d2,
        ];
        let r = r_fn(h)?;
        let scale = terms.iter().map(|t| t.abs()).sum::<f64>() + r.abs();
        residual = residual.max((terms.iter().sum::<f64>() - r).abs() / scale);
    }
    Ok(VariationTrial { forcing: *forcing, r_zeros, g_zeros, residual })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationSummary {
    pub kappa: f64,
    pub window: (f64, f64),
    pub trials: Vec<VariationTrial>,
    /// Trials with more than `k + 2` zeros of `G`.
    pub violations: Vec<usize>,
    pub max_residual: f64,
}

/// The annulus interval less `1e-3` of its width at each end.
pub fn variation_window(params: &ModelParams) -> (f64, f64) {
    let (lo, hi) = params.annulus();
    let m = 1e-3 * (hi - lo);
    (lo + m, hi - m)
}

pub fn variation_sample_test(params: &ModelParams, trials: usize, seed: u64) -> Result<VariationSummary> {
    let window = variation_window(params);
    let start = PFVector::from_oracle(0.5 * (window.0 + window.1), params, 1e-13)?;
    let rows: Vec<VariationTrial> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            variation_trial(params, window, &Forcing::random(&mut rng), &start, 256)
        })
        .collect::<Result<_>>()?;
    let violations = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.g_zeros > r.r_zeros + 2)
        .map(|(k, _)| k)
        .collect();
    Ok(VariationSummary {
        kappa: params.kappa(),
        window,
        max_residual: rows.iter().map(|r| r.residual).fold(0.0, f64::max),
        trials: rows,
        violations,
    })
}
