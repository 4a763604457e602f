//! Argument-principle zero counts for `P J1 + Q J2` in the cut plane
//! `s in C \ (-inf, 1]`, and real zero counts on `(1, k)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analysis::zeros::{chebyshev_grid, count_zeros_sampled, ZeroReport};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::ode::Dopri5;
use crate::picard_fuchs::{propagate_segment, Continuation, JState, Segment};

/// Largest accepted change of `arg F` between consecutive samples.
const MAX_ARG_STEP: f64 = 0.3;

/// `P` of degree at most `n` and `Q` of degree at most `n - 1`, ascending
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyPair {
    n: usize,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl PolyPair {
    pub fn new(n: usize, p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.len() > n + 1 || q.len() > n {
            return Err(Error::Domain(format!(
                "degrees ({}, {}) exceed ({n}, {})",
                p.len() as i64 - 1,
                q.len() as i64 - 1,
                n as i64 - 1
            )));
        }
        Ok(Self { n, p, q })
    }

    /// Coefficients drawn uniformly on the unit sphere of dimension `2n + 1`.
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        let mut c: Vec<f64> = (0..2 * n + 1).map(|_| rng.sample(StandardNormal)).collect();
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        c.iter_mut().for_each(|x| *x /= norm);
        let q = c.split_off(n + 1);
        Self { n, p: c, q }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    fn horner(c: &[f64], s: C) -> C {
        c.iter().rev().fold(C::new(0.0, 0.0), |acc, &a| acc * s + a)
    }

    /// `P J1 + Q J2`.
    pub fn element(&self, s: C, j: [C; 2]) -> C {
        Self::horner(&self.p, s) * j[0] + Self::horner(&self.q, s) * j[1]
    }

    pub fn element_real(&self, s: f64, j: [f64; 2]) -> f64 {
        let e = self.element(C::new(s, 0.0), [j[0].into(), j[1].into()]);
        e.re
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContourPiece {
    SmallCircle,
    BigCircle,
    CutUpper,
    CutLower,
}

impl ContourPiece {
    pub fn as_str(self) -> &'static str {
        match self {
            ContourPiece::SmallCircle => "small_circle",
            ContourPiece::BigCircle => "big_circle",
            ContourPiece::CutUpper => "cut_upper",
            ContourPiece::CutLower => "cut_lower",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentArg {
    pub name: ContourPiece,
    pub arg_increment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindingReport {
    pub n: usize,
    pub epsilon: f64,
    pub segments: Vec<SegmentArg>,
    pub winding: i64,
    /// Distance of the total turn count from the nearest integer.
    pub residual: f64,
    /// Relative change of `J` around the closed contour.
    pub closure: f64,
    /// On the cut edges `Im F` against `Q Im(J2 conj J1) / |J1|^2` with the
    /// numerator frozen at the start of the edge, relative to `|F|`.
    pub cut_identity: f64,
    /// Sample density multiplier that resolved `arg F`.
    pub density: u32,
}

/// `J` sampled along the boundary of the cut plane minus a small disc
/// around `1` and the exterior of a big disc.
#[derive(Debug, Clone)]
pub struct ContourTrace {
    pub kappa: f64,
    pub epsilon: f64,
    pub density: u32,
    pub pieces: Vec<(ContourPiece, Vec<JState>)>,
    pub closure: f64,
    /// Real extent of the cut edges.
    pub cut_range: (f64, f64),
}

/// Number of simple real roots of the polynomial inside `range`.
fn real_roots_in(c: &[f64], range: (f64, f64)) -> usize {
    let mut c = c.to_vec();
    while c.last().is_some_and(|&x| x == 0.0) {
        c.pop();
    }
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return 0;
    }
    let lead = c[deg];
    let companion = DMatrix::from_fn(deg, deg, |i, j| {
        if j == deg - 1 {
            -c[i] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-9 * (1.0 + z.re.abs()) && z.re > range.0 && z.re < range.1)
        .count()
}

impl ContourTrace {
    /// Small circle `|s - 1| = epsilon`, big circle `|s| = 1 / epsilon`,
    /// edges at `Im s = +-eta` with `eta = max(1e-8 epsilon, 1e-12 / epsilon)`.
    pub fn build(params: &ModelParams, epsilon: f64, density: u32) -> Result<Self> {
        let kappa = params.kappa();
        if !(epsilon > 0.0 && 1.0 + epsilon < kappa && 1.0 / epsilon > 2.0 * kappa) {
            return Err(Error::Domain(format!("epsilon = {epsilon} does not separate 1, k and infinity")));
        }
        let big = 1.0 / epsilon;
        let eta = (1e-8 * epsilon).max(1e-12 * big);
        let d_small = (eta / epsilon).asin();
        let d_big = (eta / big).asin();
        let one = C::new(1.0, 0.0);
        let opts = Continuation { tol: 1e-12, eps_min: 0.5 * epsilon, cross_cut: false, max_param_step: 1.0 };

        let (lo, hi) = params.annulus();
        let mut state = JState::from_level(0.5 * (lo + hi), params, 1e-13)?;
        let start = one + epsilon;
        state = propagate_segment(&Segment::Line { from: state.s, to: start }, &state, params, &opts, |_, _| {})?;
        let j_start = state.j;

        // cut edges, split at distances from 1 growing geometrically
        let left_small = 1.0 - epsilon * d_small.cos();
        let left_big = -big * d_big.cos();
        let mut xs = vec![left_small];
        let mut m = (4.0 * epsilon.log10()).ceil() as i32 + 1;
        loop {
            let x = 1.0 - 10f64.powf(f64::from(m) / 4.0);
            if x <= left_big {
                break;
            }
            xs.push(x);
            m += 1;
        }
        xs.push(left_big);

        let mut plan: Vec<(ContourPiece, Segment, f64)> = Vec::new();
        let fine = 1.0 / f64::from(density);
        plan.push((
            ContourPiece::SmallCircle,
            Segment::Arc { center: one, radius: epsilon, theta0: 0.0, theta1: -(PI - d_small) },
            fine / 256.0,
        ));
        for w in xs.windows(2) {
            plan.push((
                ContourPiece::CutLower,
                Segment::Line { from: C::new(w[0], -eta), to: C::new(w[1], -eta) },
                fine / 32.0,
            ));
        }
        plan.push((
            ContourPiece::BigCircle,
            Segment::Arc { center: C::new(0.0, 0.0), radius: big, theta0: -(PI - d_big), theta1: PI - d_big },
            fine / 1024.0,
        ));
        for w in xs.windows(2).rev() {
            plan.push((
                ContourPiece::CutUpper,
                Segment::Line { from: C::new(w[1], eta), to: C::new(w[0], eta) },
                fine / 32.0,
            ));
        }
        plan.push((
            ContourPiece::SmallCircle,
            Segment::Arc { center: one, radius: epsilon, theta0: PI - d_small, theta1: 0.0 },
            fine / 256.0,
        ));

        let mut pieces: Vec<(ContourPiece, Vec<JState>)> = Vec::new();
        for (name, seg, step) in plan {
            let mut samples = vec![state];
            let o = Continuation { max_param_step: step, ..opts };
            state = propagate_segment(&seg, &state, params, &o, |_, st| samples.push(*st))?;
            // the observer already saw the end point; keep the exact end s
            if let Some(last) = samples.last_mut() {
                *last = state;
            }
            match pieces.last_mut() {
                Some((prev, list)) if *prev == name => list.extend(samples.into_iter().skip(1)),
                _ => pieces.push((name, samples)),
            }
        }
        let norm = (j_start[0].norm_sqr() + j_start[1].norm_sqr()).sqrt();
        let closure = ((state.j[0] - j_start[0]).norm_sqr() + (state.j[1] - j_start[1]).norm_sqr()).sqrt() / norm;
        Ok(Self { kappa, epsilon, density, pieces, closure, cut_range: (left_big, left_small) })
    }

    /// Argument increments of `F = P + Q J2 / J1` per piece, or `None` if
    /// the samples are too coarse for this pair.
    pub fn winding(&self, pair: &PolyPair) -> Result<Option<WindingReport>> {
        let mut segments = Vec::new();
        let mut cut_identity: f64 = 0.0;
        let q_roots = real_roots_in(&pair.q, self.cut_range);
        for (name, samples) in &self.pieces {
            let on_cut = matches!(name, ContourPiece::CutUpper | ContourPiece::CutLower);
            // with Q = 0, F = P is smooth and its imaginary part carries no sign
            let split_at_q = on_cut && pair.q.iter().any(|&c| c != 0.0);
            let mut total = 0.0;
            let mut crossings = 0;
            let mut prev: Option<C> = None;
            let frozen = samples.first().map(|st| (st.j[1] * st.j[0].conj()).im);
            for st in samples {
                if st.j[0].norm() < 1e-280 {
                    return Err(Error::Degenerate { h: st.s.re, reason: "J1 vanishes on the contour".into() });
                }
                let f = pair.element(st.s, st.j) / st.j[0];
                if on_cut {
                    let q = PolyPair::horner(&pair.q, st.s).re;
                    let predicted = q * frozen.unwrap_or(0.0) / st.j[0].norm_sqr();
                    cut_identity = cut_identity.max((f.im - predicted).abs() / f.norm().max(1e-300));
                }
                if let Some(p) = prev {
                    let d = if split_at_q {
                        // Im F has the sign of Q here, so F crosses the real
                        // axis only at zeros of Q
                        if p.im * f.im > 0.0 {
                            f.arg() - p.arg()
                        } else {
                            crossings += 1;
                            let w = p.im / (p.im - f.im);
                            let re = p.re + (f.re - p.re) * w;
                            if re.abs() < 1e-9 * p.norm().max(f.norm()) {
                                return Ok(None);
                            }
                            if re > 0.0 {
                                f.arg() - p.arg()
                            } else {
                                f.arg().rem_euclid(2.0 * PI) - p.arg().rem_euclid(2.0 * PI)
                            }
                        }
                    } else {
                        let d = (f / p).arg();
                        if d.abs() > MAX_ARG_STEP {
                            return Ok(None);
                        }
                        d
                    };
                    total += d;
                }
                prev = Some(f);
            }
            if split_at_q && crossings != q_roots {
                return Ok(None);
            }
            segments.push(SegmentArg { name: *name, arg_increment: total });
        }
        let turns = segments.iter().map(|s| s.arg_increment).sum::<f64>() / (2.0 * PI);
        let winding = turns.round() as i64;
        Ok(Some(WindingReport {
            n: pair.n,
            epsilon: self.epsilon,
            segments,
            winding,
            residual: (turns - winding as f64).abs(),
            closure: self.closure,
            cut_identity,
            density: self.density,
        }))
    }
}

/// Winding number of `F` along the boundary, refining the samples until
/// `arg F` is resolved.
pub fn winding_count(pair: &PolyPair, params: &ModelParams, epsilon: f64) -> Result<WindingReport> {
    winding_with(pair, params, &ContourTrace::build(params, epsilon, 1)?)
}

/// As `winding_count` on a prebuilt trace; builds denser traces only when
/// this pair needs them.
pub fn winding_with(pair: &PolyPair, params: &ModelParams, trace: &ContourTrace) -> Result<WindingReport> {
    if let Some(r) = trace.winding(pair)? {
        return Ok(r);
    }
    let mut density = trace.density * 2;
    while density <= 64 {
        let t = ContourTrace::build(params, trace.epsilon, density)?;
        if let Some(r) = t.winding(pair)? {
            return Ok(r);
        }
        density *= 2;
    }
    Err(Error::NonConvergence(format!("arg F unresolved at sample density {}", density / 2)))
}

/// `(J1, J2)` on a Chebyshev grid of `(1, k)`, integrated in `s` from the
/// oracle value at the middle of the annulus.
#[derive(Debug, Clone)]
pub struct RealTrace {
    pub kappa: f64,
    pub s: Vec<f64>,
    pub j: Vec<[f64; 2]>,
    pub interval: (f64, f64),
}

fn real_system(kappa: f64) -> impl Fn(f64, &[f64], &mut [f64]) {
    move |s, y, dy| {
        let den = 6.0 * (s - 1.0) * (s - kappa);
        dy[0] = ((1.0 - s) * y[0] + (kappa - 1.0) * y[1]) / den;
        dy[1] = ((1.0 - s) * y[0] + (s - 1.0) * y[1]) / den;
    }
}

impl RealTrace {
    pub fn build(params: &ModelParams, grid: usize) -> Result<Self> {
        let kappa = params.kappa();
        let margin = 1e-6 * (kappa - 1.0);
        let interval = (1.0 + margin, kappa - margin);
        let s = chebyshev_grid(interval.0, interval.1, grid);
        let (lo, hi) = params.annulus();
        let start = JState::from_level(0.5 * (lo + hi), params, 1e-13)?;
        let s0 = start.s.re;
        let j0 = [start.j[0].re, start.j[1].re];
        let mut j = vec![[0.0; 2]; grid];
        let split = s.partition_point(|&x| x < s0);
        let f = real_system(kappa);
        let mut walk = |idx: &mut dyn Iterator<Item = usize>| -> Result<()> {
            let (mut at, mut y) = (s0, j0.to_vec());
            for k in idx {
                y = Dopri5::new(1e-12, 1e-15).integrate(&f, at, &y, s[k])?;
                at = s[k];
                j[k] = [y[0], y[1]];
            }
            Ok(())
        };
        walk(&mut (0..split).rev())?;
        walk(&mut (split..grid))?;
        Ok(Self { kappa, s, j, interval })
    }

    /// `J` at any `s` in the interval, from the nearest node.
    pub fn at(&self, s: f64) -> Result<[f64; 2]> {
        let k = self.s.partition_point(|&x| x < s).min(self.s.len() - 1);
        let k = if k > 0 && (self.s[k - 1] - s).abs() < (self.s[k] - s).abs() { k - 1 } else { k };
        let y = Dopri5::new(1e-12, 1e-15).integrate(real_system(self.kappa), self.s[k], &self.j[k], s)?;
        Ok([y[0], y[1]])
    }

    /// Zeros of `P J1 + Q J2` on the interval.
    pub fn real_zeros(&self, pair: &PolyPair) -> Result<ZeroReport> {
        let ys: Vec<f64> = self.s.iter().zip(&self.j).map(|(&s, &j)| pair.element_real(s, j)).collect();
        let f = |s: f64| self.at(s).map(|j| pair.element_real(s, j));
        count_zeros_sampled(&self.s, &ys, &f, self.interval, 1e-12)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VnSummary {
    pub n: usize,
    pub trials: usize,
    pub kappa: f64,
    pub seed: u64,
    pub real_zeros: Vec<u32>,
    pub windings: Vec<i64>,
    pub max_real_zeros: u32,
    pub max_winding: i64,
    pub max_residual: f64,
    /// Smallest contour radius around `1` that was needed.
    pub min_epsilon: f64,
    /// Trials whose real count or winding exceeds `2n`, or where the real
    /// count exceeds the winding.
    pub violations: Vec<usize>,
}

/// Random elements of `V_n`, with the real zero count on `(1, k)` and the
/// winding number for each.
pub fn vn_sample_test(n: usize, trials: usize, params: &ModelParams, seed: u64) -> Result<VnSummary> {
    if !(1..=4).contains(&n) {
        return Err(Error::Domain(format!("n = {n} outside 1..=4")));
    }
    let real = RealTrace::build(params, 256)?;
    let trace = ContourTrace::build(params, 1e-3, 1)?;
    let rows: Vec<(u32, WindingReport)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let pair = PolyPair::random(n, &mut rng);
            let zeros = real.real_zeros(&pair)?;
            // the contour must enclose every real zero found
            let closest = zeros.zeros.iter().map(|z| z.location - 1.0).fold(f64::INFINITY, f64::min);
            let w = if closest > 2.0 * trace.epsilon {
                winding_with(&pair, params, &trace)?
            } else {
                winding_count(&pair, params, 0.5 * closest)?
            };
            Ok((zeros.count, w))
        })
        .collect::<Result<_>>()?;
    let bound = 2 * n as i64;
    let violations = rows
        .iter()
        .enumerate()
        .filter(|(_, (r, w))| i64::from(*r) > bound || w.winding > bound || i64::from(*r) > w.winding)
        .map(|(k, _)| k)
        .collect();
    Ok(VnSummary {
        n,
        trials,
        kappa: params.kappa(),
        seed,
        max_real_zeros: rows.iter().map(|r| r.0).max().unwrap_or(0),
        max_winding: rows.iter().map(|r| r.1.winding).max().unwrap_or(0),
        max_residual: rows.iter().map(|r| r.1.residual).fold(0.0, f64::max),
        min_epsilon: rows.iter().map(|r| r.1.epsilon).fold(f64::INFINITY, f64::min),
        real_zeros: rows.iter().map(|r| r.0).collect(),
        windings: rows.iter().map(|r| r.1.winding).collect(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(k: f64) -> ModelParams {
        ModelParams::new(k, [0.0; 4]).unwrap()
    }

    #[test]
    fn degree_bounds_enforced() {
        assert!(PolyPair::new(1, vec![1.0, 2.0], vec![3.0]).is_ok());
        assert!(PolyPair::new(1, vec![1.0, 2.0, 3.0], vec![]).is_err());
        assert!(PolyPair::new(1, vec![1.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn constant_has_no_winding() {
        let params = p(4.0);
        let r = winding_count(&PolyPair::new(0, vec![1.0], vec![]).unwrap(), &params, 1e-3).unwrap();
        assert_eq!(r.winding, 0);
        assert!(r.residual < 1e-6);
        assert!(r.closure < 1e-8, "closure {}", r.closure);
    }

    #[test]
    fn j1_alone_has_no_real_zero() {
        let params = p(4.0);
        let t = RealTrace::build(&params, 128).unwrap();
        assert_eq!(t.real_zeros(&PolyPair::new(1, vec![1.0], vec![]).unwrap()).unwrap().count, 0);
    }

    #[test]
    fn linear_polynomial_winds_once() {
        // P = s - 2 with Q = 0 has the single zero s = 2
        let params = p(4.0);
        let r = winding_count(&PolyPair::new(1, vec![-2.0, 1.0], vec![]).unwrap(), &params, 1e-3).unwrap();
        assert_eq!(r.winding, 1);
    }
}
