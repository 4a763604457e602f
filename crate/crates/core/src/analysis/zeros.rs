//! Zero counting of real functions on open intervals.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zero {
    pub location: f64,
    pub multiplicity_estimate: u32,
    /// False for tangencies, which are detected heuristically.
    pub confident: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroReport {
    pub interval: (f64, f64),
    pub zeros: Vec<Zero>,
    pub count: u32,
    pub grid_size: usize,
    pub refined: bool,
    pub warnings: Vec<String>,
}

/// Chebyshev-distributed interior nodes of `(a, b)`, ascending.
pub fn chebyshev_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    (0..n)
        .map(|k| mid - half * (std::f64::consts::PI * (k as f64 + 0.5) / n as f64).cos())
        .collect()
}

/// Counts zeros of `f` on the open interval: sign changes on a Chebyshev
/// grid refined by Illinois false position, plus tangencies found by a
/// local minimization of `|f|` around grid minima.
pub fn count_zeros<F>(f: F, interval: (f64, f64), grid: usize, tol: f64) -> Result<ZeroReport>
where
    F: Fn(f64) -> Result<f64>,
{
    if grid < 64 {
        return Err(Error::Domain(format!("zero scan needs at least 64 nodes, got {grid}")));
    }
    let xs = chebyshev_grid(interval.0, interval.1, grid);
    let ys = xs.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    count_zeros_sampled(&xs, &ys, &f, interval, tol)
}

/// As `count_zeros`, with the grid values already computed.
pub fn count_zeros_sampled<F>(xs: &[f64], ys: &[f64], f: &F, interval: (f64, f64), tol: f64) -> Result<ZeroReport>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut zeros = Vec::new();
    let mut warnings = Vec::new();
    let n = xs.len();
    if ys.iter().all(|&y| y == 0.0) {
        warnings.push("identically zero on the grid".into());
        return Ok(ZeroReport { interval, zeros, count: 0, grid_size: n, refined: false, warnings });
    }
    let mut k = 0;
    while k + 1 < n {
        let (y0, y1) = (ys[k], ys[k + 1]);
        if y0 == 0.0 {
            zeros.push(Zero { location: xs[k], multiplicity_estimate: 1, confident: true });
            k += 1;
            continue;
        }
        if y0 * y1 < 0.0 {
            let x = refine_root(f, xs[k], xs[k + 1], y0, y1, tol)?;
            zeros.push(Zero { location: x, multiplicity_estimate: 1, confident: true });
        }
        k += 1;
    }
    if n > 0 && ys[n - 1] == 0.0 {
        zeros.push(Zero { location: xs[n - 1], multiplicity_estimate: 1, confident: true });
    }

    // tangencies: interior local minima of |f| without a sign change
    for k in 1..n.saturating_sub(1) {
        let (a, b, c) = (ys[k - 1], ys[k], ys[k + 1]);
        if a * b <= 0.0 || b * c <= 0.0 {
            continue;
        }
        if b.abs() < a.abs() && b.abs() < c.abs() {
            let local = a.abs().max(c.abs());
            // only dips that a double zero could explain
            if b.abs() > 0.25 * local {
                continue;
            }
            let (xm, fm) = golden_min_abs(f, xs[k - 1], xs[k + 1], tol)?;
            if fm.abs() <= tol.max(1e-14) * local || fm * b < 0.0 {
                if fm * b < 0.0 {
                    // the dip crosses zero twice between grid nodes
                    let r1 = refine_root(f, xs[k - 1], xm, a, fm, tol)?;
                    let r2 = refine_root(f, xm, xs[k + 1], fm, c, tol)?;
                    zeros.push(Zero { location: r1, multiplicity_estimate: 1, confident: true });
                    zeros.push(Zero { location: r2, multiplicity_estimate: 1, confident: true });
                } else {
                    zeros.push(Zero { location: xm, multiplicity_estimate: 2, confident: false });
                }
            }
        }
    }
    zeros.sort_by(|p, q| p.location.total_cmp(&q.location));
    for w in zeros.windows(2) {
        if (w[1].location - w[0].location).abs() < tol {
            warnings.push(format!("unresolved zero cluster near {}", w[0].location));
        }
    }
    let count = zeros.iter().map(|z| z.multiplicity_estimate).sum();
    Ok(ZeroReport { interval, zeros, count, grid_size: n, refined: true, warnings })
}

/// Illinois false position on a bracket with `fa * fb < 0`.
pub fn refine_root<F>(f: &F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut side = 0i8;
    for _ in 0..200 {
        if (b - a).abs() <= tol.max(4.0 * f64::EPSILON * a.abs().max(b.abs())) {
            break;
        }
        let mut x = (a * fb - b * fa) / (fb - fa);
        if !(x > a.min(b) && x < a.max(b)) {
            x = 0.5 * (a + b);
        }
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx * fb < 0.0 {
            a = b;
            fa = fb;
            b = x;
            fb = fx;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            fa *= 0.5;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (a + b))
}

/// Minimizes `|f|` on `[a, b]` by golden-section search; returns the
/// minimizer and the signed value there.
fn golden_min_abs<F>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..200 {
        if (b - a).abs() <= tol || f1 * f2 < 0.0 {
            break;
        }
        if f1.abs() < f2.abs() {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1.abs() < f2.abs() { (x1, f1) } else { (x2, f2) })
}
