//! The subcommands. Each returns its report rows; flagged rows mean exit 2.

use std::f64::consts::PI;
use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use q4lab_core::analysis::bound::{bound_pipeline, random_mu, sweep, BoundContext};
use q4lab_core::analysis::chebyshev::{annulus_window, chebyshev_probe, extended_window, Verdict};
use q4lab_core::analysis::vn_sample_test;
use q4lab_core::analysis::zeros::chebyshev_grid;
use q4lab_core::dynamics::{annulus_family, drift_series, integrate_orbit_sampled, orbit_period};
use q4lab_core::melnikov::r_kappa_polynomials;
use q4lab_core::picard_fuchs::{derivative_formulas, pf_residuals, pfs_residuals, Order};
use q4lab_core::quadrature::{moment, Method, MomentIndex};
use q4lab_core::reduction::{basis_moments, recurrence_relative, Recurrence, BASIS, ORACLE_TOL};
use q4lab_core::{
    assemble_I, conservation_report, eval_R, extract_R_coeffs, ModelParams, PFVector, RRoute, Route,
};
use rayon::prelude::*;

use crate::config::{MuMode, RunConfig};
use crate::report::{flagged, num, orbit_writer, write_rows, Row, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Recurrence, route, PF and R residuals at interior levels.
    Verify,
    /// Basis moments on the level grid by both quadratures.
    Moments,
    /// Zero counts of I, G and R for one weight vector.
    Zeros,
    /// Probe of the residue solution and the Chebyshev property.
    Cheb,
    /// Real zeros and winding numbers of random elements of V_n.
    Winding,
    /// Zero bound chain over random weight vectors.
    Sweep,
    /// Orbits of the unperturbed system and drift of the first integral.
    Dyn,
    /// The R template coefficients.
    Coeffs,
}

/// Outcome of one run: report rows (empty for `coeffs`) and files written.
#[derive(Debug, Default)]
pub struct Outcome {
    pub rows: Vec<Row>,
    pub files: Vec<String>,
    pub flagged: usize,
}

const FALLBACK_MU: [f64; 4] = [0.5, 0.5, 0.5, 0.5];
/// Finite differences of the oracle carry their own error floor.
const FD_TOL: f64 = 1e-4;
/// Fraction of the annulus width left out at each end of the moment table,
/// where the ovals degenerate.
const MOMENT_MARGIN: f64 = 1e-3;
const ORBITS_PER_KAPPA: usize = 3;
const PERIODS: f64 = 10.0;
const DYN_TOL: f64 = 1e-12;

fn params(kappa: f64, mu: [f64; 4]) -> Result<ModelParams> {
    ModelParams::new(kappa, mu).with_context(|| format!("kappa = {kappa}"))
}

fn chosen_mu(cfg: &RunConfig) -> Option<[f64; 4]> {
    match cfg.mu_mode {
        MuMode::Explicit => cfg.mu,
        MuMode::RandomSphere => Some(random_mu(cfg.seed, 0)),
    }
}

/// Interior levels at `k/6` of the annulus, `k = 1..5`.
fn check_levels(p: &ModelParams) -> Vec<f64> {
    let (lo, hi) = p.annulus();
    (1..6).map(|k| lo + (hi - lo) * k as f64 / 6.0).collect()
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(f64::MIN_POSITIVE)
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Outcome> {
    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    let (rows, file) = match cmd {
        Command::Verify => (verify(cfg)?, "residuals.csv"),
        Command::Moments => (moments(cfg)?, "moments.csv"),
        Command::Zeros => (zeros(cfg)?, "zeros.csv"),
        Command::Cheb => (cheb(cfg)?, "cheb.csv"),
        Command::Winding => (winding(cfg)?, "winding.csv"),
        Command::Sweep => (sweep_rows(cfg)?, "sweep.csv"),
        Command::Dyn => return dynamics(cfg),
        Command::Coeffs => return coeffs(cfg),
    };
    write_rows(&cfg.output_dir.join(file), &rows)?;
    let n = flagged(&rows);
    Ok(Outcome { rows, files: vec![file.to_string()], flagged: n })
}

fn verify(cfg: &RunConfig) -> Result<Vec<Row>> {
    let mu = chosen_mu(cfg).unwrap_or(FALLBACK_MU);
    let tol = cfg.tol;
    let mut rows = Vec::new();
    for &kappa in &cfg.kappa_list {
        let p = params(kappa, mu)?;
        let levels = check_levels(&p);
        let step = 1e-4 * (p.annulus().1 - p.annulus().0);
        let per_level: Vec<Vec<Row>> = levels
            .par_iter()
            .enumerate()
            .map(|(idx, &h)| -> Result<Vec<Row>> {
                let mut out = Vec::new();
                let at = Some(h);
                for kind in [Recurrence::YWeighted, Recurrence::XWeighted, Recurrence::Combined] {
                    for (i, j) in [(0, 0), (1, 0), (-1, 1), (2, 1), (-3, 2)] {
                        let r = recurrence_relative(kind, i, j, h, &p)?.abs();
                        out.push(Row::bounded(kappa, idx, at, format!("recurrence:{kind:?}[{i},{j}]"), r, tol));
                    }
                }
                let reduced = assemble_I(h, &p, Route::Reduced)?;
                let basis = basis_moments(h, &p, ORACLE_TOL)?;
                let scale = basis.iter().fold(reduced.abs(), |m, v| m.max(v.abs()));
                for route in [Route::RawCubic, Route::FoldedCubic, Route::Symmetric] {
                    let other = assemble_I(h, &p, route)?;
                    out.push(Row::bounded(kappa, idx, at, format!("route:{route:?}"), rel(other, reduced, scale), tol));
                }
                let pf = PFVector::from_oracle(h, &p, ORACLE_TOL)?;
                let vscale = pf.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let solve = pf_residuals(&pf, &p).iter().fold(0.0_f64, |m, v| m.max(v.abs())) / vscale;
                out.push(Row::bounded(kappa, idx, at, "pf:solve", solve, tol));
                let up = basis_moments(h + step, &p, ORACLE_TOL)?;
                let down = basis_moments(h - step, &p, ORACLE_TOL)?;
                let dscale = pf.derivs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let fd = (0..6)
                    .map(|m| ((up[m] - down[m]) / (2.0 * step) - pf.derivs[m]).abs() / dscale)
                    .fold(0.0, f64::max);
                out.push(Row::bounded(kappa, idx, at, "pf:finite_difference", fd, tol.max(FD_TOL)));
                let j = [pf.derivs[0], pf.derivs[3]];
                let d = derivative_formulas(Order::Second, h, j[0], j[1], &p)?;
                let res = pfs_residuals(h, j, d, &p);
                let sscale = j.iter().chain(&d).fold(0.0_f64, |m, v| m.max(v.abs()));
                let pfs = res.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / sscale;
                out.push(Row::bounded(kappa, idx, at, "pfs", pfs, tol));
                let direct = eval_R(h, &p, &pf, RRoute::Direct)?;
                let numeric = eval_R(h, &p, &pf, RRoute::PfNumeric)?;
                let rscale = direct.abs().max(numeric.abs()).max(1.0);
                out.push(Row::bounded(kappa, idx, at, "R:routes", rel(direct, numeric, rscale), tol));
                Ok(out)
            })
            .collect::<Result<_>>()?;
        rows.extend(per_level.into_iter().flatten());
    }
    Ok(rows)
}

fn moments(cfg: &RunConfig) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &kappa in &cfg.kappa_list {
        let p = params(kappa, [0.0; 4])?;
        let (lo, hi) = p.annulus();
        let m = MOMENT_MARGIN * (hi - lo);
        let levels = chebyshev_grid(lo + m, hi - m, cfg.grid);
        let per_level: Vec<Vec<Row>> = levels
            .par_iter()
            .enumerate()
            .map(|(idx, &h)| -> Result<Vec<Row>> {
                let green = basis_moments(h, &p, ORACLE_TOL)?;
                let mut out = Vec::new();
                for (m, &(i, j)) in BASIS.iter().enumerate() {
                    let area = moment(MomentIndex::symmetric(i, j), h, &p, Method::Area2d, 1e-10)?.value;
                    out.push(Row::info(kappa, idx, Some(h), format!("I[{i},{j}]"), green[m]));
                    let gap = rel(area, green[m], green[m].abs());
                    out.push(Row::bounded(kappa, idx, Some(h), format!("I[{i},{j}]:area_vs_green"), gap, cfg.tol));
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        rows.extend(per_level.into_iter().flatten());
    }
    Ok(rows)
}

fn zeros(cfg: &RunConfig) -> Result<Vec<Row>> {
    let Some(mu) = chosen_mu(cfg) else {
        bail!("zeros needs --mu or mu_mode = random_sphere");
    };
    let mut rows = Vec::new();
    for &kappa in &cfg.kappa_list {
        let rep = bound_pipeline(&params(kappa, mu)?, cfg.grid)?;
        let [_, g, r] = rep.counts().map(f64::from);
        // #I <= #G <= min(#R + 2, 8) and #R <= 6
        let limits = [g, (r + 2.0).min(8.0), 6.0];
        for ((name, zr), limit) in [("I", &rep.i), ("G", &rep.g), ("R", &rep.r)].into_iter().zip(limits) {
            rows.push(Row::bounded(kappa, 0, None, format!("{name}:count"), zr.count as f64, limit));
            for (k, z) in zr.zeros.iter().enumerate() {
                rows.push(Row::info(kappa, k, Some(z.location), format!("{name}:zero"), z.multiplicity_estimate as f64));
            }
        }
        if let Some(e) = rep.reconstruction_error {
            rows.push(Row::bounded(kappa, 0, None, "I:reconstruction", e, cfg.tol));
        }
    }
    Ok(rows)
}

fn cheb(cfg: &RunConfig) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &kappa in &cfg.kappa_list {
        let p = params(kappa, [0.0; 4])?;
        for (idx, (name, window)) in [("extended", extended_window(&p)), ("annulus", annulus_window(&p))].into_iter().enumerate() {
            let rep = chebyshev_probe(&p, window)?;
            let q = |s: &str| format!("{name}:{s}");
            rows.push(Row::bounded(kappa, idx, None, q("l2_residual"), rep.max_l2_residual, cfg.tol));
            let nonvanishing = Row::bounded(kappa, idx, None, q("residue_zeros"), rep.zeros.count as f64, 0.0);
            rows.push(nonvanishing.with_status(Status::check(rep.nonvanishing == Verdict::Confirmed)));
            for z in &rep.zeros.zeros {
                rows.push(Row::info(kappa, idx, Some(z.location), q("residue_zero"), z.multiplicity_estimate as f64));
            }
            rows.push(Row::info(kappa, idx, Some(rep.candidate), q("candidate_zero"), rep.candidate_in_window as u8 as f64));
            if let Some(e) = rep.candidate_error {
                rows.push(Row::bounded(kappa, idx, Some(rep.candidate), q("candidate_error"), e, cfg.tol));
            }
            let rot = Row::bounded(kappa, idx, None, q("frame_rotation"), rep.frame.rotation, PI);
            rows.push(rot.with_status(Status::check(rep.chebyshev == Verdict::Confirmed)));
            if idx == 0 {
                let hs = p.saddle_level();
                rows.push(Row::info(kappa, idx, Some(hs), "saddle_y0", rep.saddle_y0));
                let gap = (rep.saddle_y0 - rep.stated_saddle_y0).abs();
                rows.push(Row::bounded(kappa, idx, Some(hs), "saddle_y0:gap_to_sqrt5", gap, cfg.tol));
            }
        }
    }
    Ok(rows)
}

fn winding(cfg: &RunConfig) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &kappa in &cfg.kappa_list {
        let p = params(kappa, [0.0; 4])?;
        for n in 1..=4 {
            let s = vn_sample_test(n, cfg.trials, &p, cfg.seed)?;
            let bound = 2.0 * n as f64;
            for t in 0..cfg.trials {
                let (real, wind) = (s.real_zeros[t] as f64, s.windings[t] as f64);
                let bad = s.violations.contains(&t);
                let status = Status::check(!bad);
                rows.push(Row::bounded(kappa, t, None, format!("n={n}:real_zeros"), real, bound.min(wind)).with_status(status));
                rows.push(Row::bounded(kappa, t, None, format!("n={n}:winding"), wind, bound).with_status(status));
            }
            rows.push(Row::bounded(kappa, 0, None, format!("n={n}:max_residual"), s.max_residual, cfg.tol));
            rows.push(Row::info(kappa, 0, Some(1.0 + s.min_epsilon), format!("n={n}:min_epsilon"), s.min_epsilon));
        }
    }
    Ok(rows)
}

fn sweep_rows(cfg: &RunConfig) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &kappa in &cfg.kappa_list {
        let ctx = BoundContext::build(&params(kappa, [0.0; 4])?, cfg.grid)?;
        for (t, rep) in sweep(&ctx, cfg.trials, cfg.seed)?.iter().enumerate() {
            for (m, w) in rep.mu.iter().enumerate() {
                rows.push(Row::info(kappa, t, None, format!("mu{}", m + 1), *w));
            }
            let status = Status::check(rep.violations.is_empty());
            for (name, count) in ["I", "G", "R"].iter().zip(rep.counts()) {
                rows.push(Row::info(kappa, t, None, format!("{name}:count"), count as f64).with_status(status));
            }
        }
    }
    Ok(rows)
}

fn dynamics(cfg: &RunConfig) -> Result<Outcome> {
    let path = cfg.output_dir.join("orbit.csv");
    let mut w = orbit_writer(&path)?;
    let mut rows = Vec::new();
    for &kappa in &cfg.kappa_list {
        let p = params(kappa, [0.0; 4])?;
        let family = annulus_family(&p, ORBITS_PER_KAPPA)?;
        let orbits: Vec<_> = family
            .par_iter()
            .map(|pt| -> Result<_> {
                let period = orbit_period(pt.z, &p, DYN_TOL)?;
                let orbit = integrate_orbit_sampled(pt.z, PERIODS * period, &p, DYN_TOL, period / 100.0)?;
                let drift = drift_series(&orbit)?;
                let cons = conservation_report(&orbit)?;
                Ok((pt.h_level, orbit, drift, cons))
            })
            .collect::<Result<_>>()?;
        for (k, (h, orbit, drift, cons)) in orbits.iter().enumerate() {
            for (&(t, z), d) in orbit.samples.iter().zip(drift) {
                w.write_record([num(kappa), k.to_string(), num(t), num(z.re), num(z.im), num(*d)])?;
            }
            rows.push(Row::bounded(kappa, k, Some(*h), "drift", cons.max_drift, cfg.tol));
        }
    }
    w.flush()?;
    let n = flagged(&rows);
    Ok(Outcome { rows, files: vec!["orbit.csv".into()], flagged: n })
}

fn coeffs(cfg: &RunConfig) -> Result<Outcome> {
    let mut text = String::new();
    writeln!(text, "# R (9h^2-4)^2 (9kh^2-4) / h = sum_j a_j h^(2j) J1 + sum_j b_j h^(2j) J2")?;
    writeln!(text, "# J1 = I'00, J2 = I'11; w1..w4 are the weights of G")?;
    writeln!(text, "\n[polynomials in k]")?;
    text.push_str(&r_kappa_polynomials()?.render());
    for &kappa in &cfg.kappa_list {
        let c = extract_R_coeffs(&params(kappa, [0.0; 4])?)?;
        writeln!(text, "\n[k = {}]", c.kappa)?;
        let names = ["w1", "w2", "w3", "w4"];
        for (label, table) in [("a", &c.a[..]), ("b", &c.b[..])] {
            for (j, row) in table.iter().enumerate() {
                let parts: Vec<String> = row.iter().zip(names).map(|(q, n)| format!("{n}: {q}")).collect();
                writeln!(text, "{label}{j} = {}", parts.join(", "))?;
            }
        }
    }
    std::fs::write(cfg.output_dir.join("coeffs.txt"), text)?;
    Ok(Outcome { rows: Vec::new(), files: vec!["coeffs.txt".into()], flagged: 0 })
}
