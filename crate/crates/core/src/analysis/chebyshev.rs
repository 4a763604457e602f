//! Chebyshev probes for `L2`: the residue solution, its zeros, and the
//! rotation of a fundamental frame.

use std::f64::consts::PI;
use std::ops::ControlFlow;

use crate::analysis::zeros::{count_zeros, ZeroReport};
use crate::error::{Error, Result};
use crate::model::{real_roots_y, ModelParams, CENTER_LEVEL};
use crate::ode::Dopri5;
use crate::picard_fuchs::apply_l2;
use crate::quadrature::residue_value;

/// Margin kept from critical levels at window ends.
pub const WINDOW_MARGIN: f64 = 1e-6;

/// Residue of the `G`-differential at `(0, y0)`, with `y0` the lowest real
/// root of `(k/3) y^3 - y = h` (the only one below the saddle level).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidueSolution {
    pub h: f64,
    pub y0: f64,
    pub f: f64,
}

pub fn residue_solution(h: f64, params: &ModelParams) -> Result<ResidueSolution> {
    let roots = real_roots_y(h, params);
    let low = roots
        .first()
        .ok_or_else(|| Error::Domain(format!("no real root at h = {h}")))?;
    if low.multiplicity > 1 {
        return Err(Error::Degenerate { h, reason: "lowest root is multiple".into() });
    }
    let y0 = low.value;
    Ok(ResidueSolution { h, y0, f: residue_value(h, y0, params)? })
}

/// Where the numerator `-4h + (3k h^2 - 4) y0` vanishes on the lowest branch.
pub fn residue_zero_candidate(kappa: f64) -> f64 {
    -2.0 / 3.0 * (5.0 / kappa).sqrt()
}

/// `|L2 f| / (|5k h f| + |(9k h^2 - 8) f'| + |h (9k h^2 - 4) f''|)` with
/// five-point differences of step `step`.
pub fn l2_residual(h: f64, params: &ModelParams, step: f64) -> Result<f64> {
    let f = |x: f64| residue_solution(x, params).map(|r| r.f);
    let (m2, m1, c, p1, p2) = (f(h - 2.0 * step)?, f(h - step)?, f(h)?, f(h + step)?, f(h + 2.0 * step)?);
    let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * step);
    let d2 = (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * step * step);
    let k = params.kappa();
    let scale = (5.0 * k * h * c).abs() + ((9.0 * k * h * h - 8.0) * d1).abs() + (h * (9.0 * k * h * h - 4.0) * d2).abs();
    Ok(apply_l2(c, d1, d2, h, params).abs() / scale.max(1e-300))
}

/// Rotation of the frame `(x1, x2)` of `L2` across a window, with
/// `x1(a) = 1, x1'(a) = 0, x2(a) = 0, x2'(a) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRotation {
    pub window: (f64, f64),
    /// `max - min` of the continuous angle of `(x1, x2)`.
    pub rotation: f64,
    /// Phase `phi` of a solution `cos(phi) x1 + sin(phi) x2` without zeros,
    /// when the rotation leaves room for one.
    pub nonvanishing_phase: Option<f64>,
    pub samples: usize,
    /// Largest zero count among the sampled phases.
    pub max_sampled_zeros: u32,
    /// Every sampled phase produced at least one zero.
    pub all_sampled_vanish: bool,
}

impl FrameRotation {
    /// Whether every nontrivial solution has at most one zero.
    pub fn chebyshev(&self) -> bool {
        self.rotation < PI
    }
}

fn l2_rhs(kappa: f64) -> impl Fn(f64, &[f64], &mut [f64]) {
    move |h, y, dy| {
        let a = h * (9.0 * kappa * h * h - 4.0);
        let b = 9.0 * kappa * h * h - 8.0;
        let c = 5.0 * kappa * h;
        for col in 0..2 {
            let (g, g1) = (y[2 * col], y[2 * col + 1]);
            dy[2 * col] = g1;
            dy[2 * col + 1] = (b * g1 - c * g) / a;
        }
    }
}

/// Integrates the frame and samples `phases` evenly spaced solutions.
pub fn frame_rotation(params: &ModelParams, window: (f64, f64), phases: usize) -> Result<FrameRotation> {
    let (a, b) = window;
    let mut ig = Dopri5::new(1e-11, 1e-13).with_max_step((b - a) / 4000.0);
    let mut theta = vec![0.0f64];
    let mut last = 0.0f64;
    ig.integrate_observed(l2_rhs(params.kappa()), a, &[1.0, 0.0, 0.0, 1.0], b, |_, y| {
        let ang = y[2].atan2(y[0]);
        let mut d = ang - last.rem_euclid(2.0 * PI);
        if d > PI {
            d -= 2.0 * PI;
        } else if d < -PI {
            d += 2.0 * PI;
        }
        last += d;
        theta.push(last);
        ControlFlow::Continue(())
    })?;
    let lo = theta.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rotation = hi - lo;
    // cos(theta - phi) x-norm vanishes where theta - phi = pi/2 mod pi
    let zeros_for = |phi: f64| -> u32 {
        let first = ((lo - phi - PI / 2.0) / PI).ceil() as i64;
        let mut n = 0;
        let mut m = first;
        while phi + PI / 2.0 + m as f64 * PI < hi {
            if phi + PI / 2.0 + m as f64 * PI > lo {
                n += 1;
            }
            m += 1;
        }
        n
    };
    let counts: Vec<u32> = (0..phases).map(|k| zeros_for(PI * k as f64 / phases as f64)).collect();
    let nonvanishing_phase = (rotation < PI).then_some(0.5 * (lo + hi));
    Ok(FrameRotation {
        window,
        rotation,
        nonvanishing_phase,
        samples: phases,
        max_sampled_zeros: counts.iter().copied().max().unwrap_or(0),
        all_sampled_vanish: counts.iter().all(|&c| c > 0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Confirmed,
    Contradicted,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Confirmed => "confirmed",
            Verdict::Contradicted => "contradicted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChebReport {
    pub kappa: f64,
    pub window: (f64, f64),
    /// Largest relative `L2 f` residual over the check points.
    pub max_l2_residual: f64,
    pub zeros: ZeroReport,
    pub candidate: f64,
    pub candidate_in_window: bool,
    /// Distance from the closest zero found to the candidate.
    pub candidate_error: Option<f64>,
    /// Verdict on "the residue solution has no zero in the window".
    pub nonvanishing: Verdict,
    pub frame: FrameRotation,
    /// Verdict on "the solutions of `L2` form a Chebyshev system here".
    pub chebyshev: Verdict,
    /// Lowest root at the saddle level, and the value `-sqrt(5/k)`.
    pub saddle_y0: f64,
    pub stated_saddle_y0: f64,
}

/// The interval below the saddle level, truncated at `-3`.
pub fn extended_window(params: &ModelParams) -> (f64, f64) {
    (-3.0, params.saddle_level() - WINDOW_MARGIN)
}

pub fn annulus_window(params: &ModelParams) -> (f64, f64) {
    (CENTER_LEVEL + WINDOW_MARGIN, params.saddle_level() - WINDOW_MARGIN)
}

pub fn chebyshev_probe(params: &ModelParams, window: (f64, f64)) -> Result<ChebReport> {
    let hs = params.saddle_level();
    if !(window.0 < window.1 && window.1 < hs) {
        return Err(Error::Domain(format!("window {window:?} must lie below the saddle level {hs}")));
    }
    let kappa = params.kappa();
    let width = window.1 - window.0;
    let step = 1e-3 * width.min(1.0);
    let mut max_l2_residual: f64 = 0.0;
    for k in 0..20 {
        // stay a stencil width inside the window
        let h = window.0 + 2.0 * step + (width - 4.0 * step) * (k as f64 + 0.5) / 20.0;
        max_l2_residual = max_l2_residual.max(l2_residual(h, params, step)?);
    }
    let zeros = count_zeros(|h| residue_solution(h, params).map(|r| r.f), window, 256, 1e-13)?;
    let candidate = residue_zero_candidate(kappa);
    let candidate_error = zeros
        .zeros
        .iter()
        .map(|z| (z.location - candidate).abs())
        .min_by(|a, b| a.total_cmp(b));
    let frame = frame_rotation(params, window, 64)?;
    let saddle_y0 = residue_solution(hs, params)?.y0;
    Ok(ChebReport {
        kappa,
        window,
        max_l2_residual,
        candidate,
        candidate_in_window: window.0 < candidate && candidate < window.1,
        candidate_error,
        nonvanishing: if zeros.count == 0 { Verdict::Confirmed } else { Verdict::Contradicted },
        chebyshev: if frame.chebyshev() { Verdict::Confirmed } else { Verdict::Contradicted },
        zeros,
        frame,
        saddle_y0,
        stated_saddle_y0: -(5.0 / kappa).sqrt(),
    })
}
