//! One line per acceptance criterion; exits non-zero if any fails.

use std::time::{Duration, Instant};

use num_complex::Complex64 as C;
use q4lab_core::analysis::bound::{sweep, BoundContext};
use q4lab_core::analysis::chebyshev::{annulus_window, chebyshev_probe, extended_window, residue_zero_candidate};
use q4lab_core::analysis::{variation_sample_test, vn_sample_test};
use q4lab_core::dynamics::{annulus_family, integrate_orbit, orbit_period};
use q4lab_core::melnikov::{r_kappa_polynomials, GWeights};
use q4lab_core::model::{coordinate_map, hamiltonian, in_omega};
use q4lab_core::picard_fuchs::{
    apply_l2, growth_exponents, minus_one_residuals, pf_jet, pf_residuals, pfs_residuals, propagate, propagate_segment,
    Continuation, JState, Segment,
};
use q4lab_core::reduction::{basis_moments, recurrence_relative, Recurrence, BASIS, ORACLE_TOL};
use q4lab_core::{
    conservation_report, eval_R, extract_R_coeffs, moment, Form, Method, ModelParams, MomentIndex, PFVector, RRoute,
    Result,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KAPPAS: [f64; 4] = [1.5, 2.0, 4.0, 9.0];
const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn params(kappa: f64) -> ModelParams {
    ModelParams::new(kappa, [0.3, -0.5, 0.7, 0.2]).unwrap()
}

/// `n` levels evenly inside the annulus, `(k + 1/2) / n` of the way up.
fn interior(p: &ModelParams, n: usize) -> Vec<f64> {
    let (lo, hi) = p.annulus();
    (0..n).map(|k| lo + (hi - lo) * (k as f64 + 0.5) / n as f64).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn oracle_agreement() -> Result<Outcome> {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for k in KAPPAS {
        let p = params(k);
        for h in interior(&p, 12) {
            for (i, j) in BASIS {
                let ix = MomentIndex::symmetric(i, j);
                let green = moment(ix, h, &p, Method::Green, ORACLE_TOL)?.value;
                let area = moment(ix, h, &p, Method::Area2d, 1e-10)?.value;
                worst = worst.max((green - area).abs() / area.abs());
            }
        }
    }
    let took = start.elapsed();
    outcome(worst <= 1e-6 && took < Duration::from_secs(120), format!("max rel gap {worst:.1e} (tol 1e-6), {took:.1?} (limit 2 min)"))
}

fn recurrences() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut fold: f64 = 0.0;
    for k in [1.5, 4.0] {
        let p = params(k);
        for h in interior(&p, 5) {
            for kind in [Recurrence::YWeighted, Recurrence::XWeighted] {
                for i in -6..=3 {
                    for j in 0..=3 {
                        worst = worst.max(recurrence_relative(kind, i, j, h, &p)?.abs());
                        checked += 1;
                    }
                }
            }
            let a = moment(MomentIndex::cubic(-6, 2), h, &p, Method::Green, ORACLE_TOL)?.value;
            let b = moment(MomentIndex::cubic(-6, 1), h, &p, Method::Green, ORACLE_TOL)?.value;
            fold = fold.max((a - b).abs() / b.abs());
        }
    }
    outcome(
        worst <= 1e-6 && fold <= 1e-6,
        format!("{checked} residuals, max {worst:.1e}; I-6,2 vs I-6,1 {fold:.1e} (tol 1e-6)"),
    )
}

fn picard_fuchs() -> Result<Outcome> {
    let (mut fd, mut solve, mut prop): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in KAPPAS {
        let p = params(k);
        let (lo, hi) = p.annulus();
        let step = 1e-4 * (hi - lo);
        for h in interior(&p, 6) {
            let pf = PFVector::from_oracle(h, &p, ORACLE_TOL)?;
            let scale = max_abs(&pf.values);
            solve = solve.max(max_abs(&pf_residuals(&pf, &p)) / scale);
            let (up, down) = (basis_moments(h + step, &p, ORACLE_TOL)?, basis_moments(h - step, &p, ORACLE_TOL)?);
            let derivs: [f64; 6] = std::array::from_fn(|m| (up[m] - down[m]) / (2.0 * step));
            let by_fd = PFVector { h, values: pf.values, derivs };
            fd = fd.max(max_abs(&pf_residuals(&by_fd, &p)) / scale);
        }
        let mid = 0.5 * (lo + hi);
        let start = basis_moments(mid, &p, ORACLE_TOL)?;
        for m in 0..=8 {
            let h = lo + (hi - lo) * (0.1 + 0.1 * m as f64);
            let v = propagate(mid, &start, h, &p, 1e-12)?;
            let oracle = basis_moments(h, &p, ORACLE_TOL)?;
            let gap: Vec<f64> = v.iter().zip(&oracle).map(|(a, b)| a - b).collect();
            prop = prop.max(max_abs(&gap) / max_abs(&oracle));
        }
    }
    outcome(
        fd <= 1e-4 && solve <= 1e-12 && prop <= 1e-6,
        format!("FD {fd:.1e} (1e-4), solve {solve:.1e} (1e-12), propagation over 80% {prop:.1e} (1e-6)"),
    )
}

fn systems() -> Result<Outcome> {
    let (mut pfs, mut minus, mut l2j): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in KAPPAS {
        let p = params(k);
        for h in interior(&p, 6) {
            let pf = PFVector::from_oracle(h, &p, ORACLE_TOL)?;
            let jet = pf_jet(h, &pf.values, &p, 3)?;
            let (v1, v2, v3) = (jet[1], jet[2], jet[3]);
            let j = [v1[0], v1[3]];
            let d = [v2[0], v2[3]];
            pfs = pfs.max(max_abs(&pfs_residuals(h, j, d, &p)) / max_abs(&[j[0], j[1], d[0], d[1]]));
            let jm = [v1[4], v1[5]];
            let dm = [v2[4], v2[5]];
            minus = minus.max(max_abs(&minus_one_residuals(h, jm, dm, v2[3], &p)) / max_abs(&[jm[0], jm[1], dm[0], dm[1], v2[3]]));
            // J = -4h I'-1,0 + (3k h^2 - 4) I'-1,1 and its first two derivatives
            let a = 3.0 * k * h * h - 4.0;
            let jj = -4.0 * h * v1[4] + a * v1[5];
            let j1 = -4.0 * v1[4] - 4.0 * h * v2[4] + 6.0 * k * h * v1[5] + a * v2[5];
            let j2 = -8.0 * v2[4] - 4.0 * h * v3[4] + 6.0 * k * v1[5] + 12.0 * k * h * v2[5] + a * v3[5];
            let q = 9.0 * k * h * h - 4.0;
            let rhs = 4.0 / 3.0 * (k - 1.0) * (h * q * v3[3] + (6.0 * k * h * h + 8.0) * v2[3]);
            let lhs = apply_l2(jj, j1, j2, h, &p);
            l2j = l2j.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
        }
    }
    outcome(
        pfs <= 1e-6 && minus <= 1e-6 && l2j <= 1e-6,
        format!("pfs {pfs:.1e}, I'-1 system {minus:.1e}, L2 J identity {l2j:.1e} (tol 1e-6)"),
    )
}

fn r_routes() -> Result<Outcome> {
    let (mut routes, mut template): (f64, f64) = (0.0, 0.0);
    for k in [1.5, 4.0] {
        let p = params(k);
        let coeffs = extract_R_coeffs(&p)?;
        let w = GWeights(p.mu());
        for h in interior(&p, 20) {
            let pf = PFVector::from_oracle(h, &p, ORACLE_TOL)?;
            let direct = eval_R(h, &p, &pf, RRoute::Direct)?;
            let numeric = eval_R(h, &p, &pf, RRoute::PfNumeric)?;
            routes = routes.max((direct - numeric).abs() / direct.abs().max(numeric.abs()));
            let from_coeffs = coeffs.eval(h, &w, pf.derivs[0], pf.derivs[3]);
            template = template.max((from_coeffs - direct).abs() / direct.abs());
        }
    }
    let polys = r_kappa_polynomials()?;
    // R's numerator is cubic in h^2 against J1 and quadratic against J2,
    // and the top rows do not vanish
    let structure = polys.a[3].iter().any(|q| !q.is_zero()) && polys.b[2].iter().any(|q| !q.is_zero());
    outcome(
        routes <= 1e-6 && template <= 1e-10 && structure,
        format!("direct vs PF jet {routes:.1e} (1e-6), coefficients vs direct {template:.1e} (1e-10), degrees (3, 2) in h^2: {structure}"),
    )
}

fn wronskian() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let opts = Continuation { tol: 1e-12, ..Continuation::default() };
    let mut track = |path: &[Segment], p: &ModelParams| -> Result<()> {
        let mut state = JState::new(path[0].start(), [1.0, 0.5]);
        for seg in path {
            state = propagate_segment(seg, &state, p, &opts, |_, st| {
                worst = worst.max((st.det_w() - 1.0).norm());
            })?;
        }
        Ok(())
    };
    for k in KAPPAS {
        let p = params(k);
        let d = 1e-3 * (k - 1.0);
        track(&[Segment::Line { from: C::new(1.0 + d, 0.0), to: C::new(k - d, 0.0) }], &p)?;
        let corners = [C::new(1.2, 0.5), C::new(1.2, -0.5), C::new(k + 2.0, -0.5), C::new(k + 2.0, 0.5), C::new(1.2, 0.5)];
        let rect: Vec<Segment> = corners.windows(2).map(|c| Segment::Line { from: c[0], to: c[1] }).collect();
        track(&rect, &p)?;
    }
    let mut exp_err: f64 = 0.0;
    for k in KAPPAS {
        let e = growth_exponents(&params(k), 1e6, 1e-12)?;
        exp_err = exp_err.max((e[0] + 1.0 / 6.0).abs()).max((e[1] - 1.0 / 6.0).abs());
    }
    outcome(
        worst <= 1e-8 && exp_err <= 1e-3,
        format!("det W drift {worst:.1e} (1e-8) on (1, k) and a rectangle; exponents off +-1/6 by {exp_err:.1e} (1e-3)"),
    )
}

fn bound_chain() -> Result<Outcome> {
    let start = Instant::now();
    let mut violations = 0;
    let mut most = [0u32; 3];
    for k in KAPPAS {
        let ctx = BoundContext::build(&params(k), 256)?;
        for rep in sweep(&ctx, 1000, SEED)? {
            violations += rep.violations.len();
            for (m, c) in most.iter_mut().zip(rep.counts()) {
                *m = (*m).max(c);
            }
        }
    }
    let took = start.elapsed();
    outcome(
        violations == 0 && took < Duration::from_secs(900),
        format!("4000 weight vectors, {violations} violations, max counts I/G/R = {most:?}, {took:.1?} (limit 15 min)"),
    )
}

fn winding() -> Result<Outcome> {
    let mut parts = Vec::new();
    let mut pass = true;
    for k in [1.5, 4.0, 9.0] {
        let p = params(k);
        for n in 1..=3 {
            let s = vn_sample_test(n, 200, &p, SEED)?;
            pass &= s.violations.is_empty() && s.max_residual <= 0.2;
            parts.push(format!("k={k} n={n}: real<={} wind<={} res {:.0e}", s.max_real_zeros, s.max_winding, s.max_residual));
        }
    }
    outcome(pass, format!("200 pairs each, no count above 2n; {}", parts.join("; ")))
}

fn variation() -> Result<Outcome> {
    let mut parts = Vec::new();
    let mut pass = true;
    for k in [1.5, 4.0, 9.0] {
        let s = variation_sample_test(&params(k), 100, SEED)?;
        let max_r = s.trials.iter().map(|t| t.r_zeros).max().unwrap_or(0);
        pass &= s.violations.is_empty() && max_r <= 6 && s.max_residual <= 1e-6;
        parts.push(format!("k={k}: {} violations, max #R {max_r}, residual {:.0e}", s.violations.len(), s.max_residual));
    }
    outcome(pass, format!("100 trials each; {}", parts.join("; ")))
}

fn chebyshev() -> Result<Outcome> {
    let mut parts = Vec::new();
    let mut pass = true;
    for k in [2.0, 4.0, 6.0, 9.0] {
        let p = params(k);
        for (name, window) in [("extended", extended_window(&p)), ("annulus", annulus_window(&p))] {
            let r = chebyshev_probe(&p, window)?;
            pass &= r.max_l2_residual <= 1e-6;
            if r.candidate_in_window {
                pass &= r.candidate_error.is_some_and(|e| e <= 1e-8);
            }
            parts.push(format!(
                "k={k} {name}: zero at {:.6} {}, nonvanishing {}, Chebyshev {}",
                residue_zero_candidate(k),
                if r.candidate_in_window { "inside" } else { "outside" },
                r.nonvanishing.as_str(),
                r.chebyshev.as_str()
            ));
        }
    }
    outcome(pass, format!("L2 residual <= 1e-6, zero located to 1e-8\n      {}", parts.join("\n      ")))
}

fn dynamics() -> Result<Outcome> {
    let mut drift: f64 = 0.0;
    for k in [1.5, 4.0, 9.0] {
        let p = params(k);
        for pt in annulus_family(&p, 3)? {
            let period = orbit_period(pt.z, &p, 1e-12)?;
            let orbit = integrate_orbit(pt.z, 10.0 * period, &p, 1e-12)?;
            drift = drift.max(conservation_report(&orbit)?.max_drift);
        }
    }
    let mut origin_exact = true;
    let mut corr: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for k in KAPPAS {
        let p = params(k);
        origin_exact &= hamiltonian(Form::OriginalRational, (0.0, 0.0), &p, None)? == 4.0 / 9.0;
        let mut found = 0;
        while found < 25 {
            let (x, y) = (rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
            if !in_omega(x, y, &p) {
                continue;
            }
            found += 1;
            let t = hamiltonian(Form::OriginalRational, (x, y), &p, None)?;
            let h = hamiltonian(Form::XyForm, coordinate_map((x, y), &p)?, &p, None)?;
            let b = 64.0 * (2.0 - p.b()).powi(2) * h * h;
            corr = corr.max((t - b).abs() / t.abs());
        }
    }
    outcome(
        drift <= 1e-8 && origin_exact && corr <= 1e-10,
        format!("drift over 10 periods {drift:.1e} (1e-8); H(0,0) = 4/9 exactly: {origin_exact}; 100 points of the correspondence {corr:.1e} (1e-10)"),
    )
}

fn determinism() -> Result<Outcome> {
    let p = params(4.0);
    let ctx = BoundContext::build(&p, 128)?;
    let render = || -> Result<String> {
        let mut out = String::new();
        for r in sweep(&ctx, 200, SEED)? {
            let [i, g, rr] = r.counts();
            out.push_str(&format!("{:?},{i},{g},{rr}\n", r.mu));
        }
        let v = vn_sample_test(2, 50, &p, SEED)?;
        out.push_str(&format!("{:?}{:?}\n", v.real_zeros, v.windings));
        Ok(out)
    };
    let (a, b) = (render()?, render()?);
    outcome(a == b, format!("two runs with seed {SEED}: {} bytes, identical: {}", a.len(), a == b))
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 12] = [
        ("oracle agreement", oracle_agreement),
        ("recurrences", recurrences),
        ("Picard-Fuchs system", picard_fuchs),
        ("derived systems", systems),
        ("R by two routes", r_routes),
        ("Wronskian and exponents", wronskian),
        ("bound chain", bound_chain),
        ("real zeros and winding in V_n", winding),
        ("k + 2 bound by variation", variation),
        ("Chebyshev probe", chebyshev),
        ("dynamics", dynamics),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!("[{}] {:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" }, n + 1);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
