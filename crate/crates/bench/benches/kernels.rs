use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use q4lab_core::analysis::bound::BoundContext;
use q4lab_core::analysis::winding::{winding_with, ContourTrace, PolyPair};
use q4lab_core::picard_fuchs::propagate;
use q4lab_core::reduction::{basis_moments, ORACLE_TOL};
use q4lab_core::{moment, Method, MomentIndex, ModelParams, PFVector};

fn params() -> ModelParams {
    ModelParams::new(4.0, [0.3, -0.5, 0.7, 0.2]).unwrap()
}

fn mid(p: &ModelParams) -> f64 {
    let (lo, hi) = p.annulus();
    0.5 * (lo + hi)
}

fn oracle(c: &mut Criterion) {
    let p = params();
    let h = mid(&p);
    c.bench_function("moment_green", |b| {
        b.iter(|| moment(MomentIndex::symmetric(1, 1), black_box(h), &p, Method::Green, ORACLE_TOL).unwrap())
    });
    c.bench_function("moment_area2d", |b| {
        b.iter(|| moment(MomentIndex::symmetric(1, 1), black_box(h), &p, Method::Area2d, 1e-10).unwrap())
    });
    c.bench_function("basis_moments", |b| b.iter(|| basis_moments(black_box(h), &p, ORACLE_TOL).unwrap()));
}

fn picard_fuchs(c: &mut Criterion) {
    let p = params();
    let (lo, hi) = p.annulus();
    let start = PFVector::from_oracle(mid(&p), &p, ORACLE_TOL).unwrap();
    let to = lo + 0.9 * (hi - lo);
    c.bench_function("pf_propagate", |b| {
        b.iter(|| propagate(start.h, &start.values, black_box(to), &p, 1e-12).unwrap())
    });
}

fn bounds(c: &mut Criterion) {
    let p = params();
    let ctx = BoundContext::build(&p, 256).unwrap();
    c.bench_function("bound_evaluate", |b| b.iter(|| ctx.evaluate(black_box(p.mu()), false).unwrap()));
}

fn winding(c: &mut Criterion) {
    let p = params();
    let trace = ContourTrace::build(&p, 1e-3, 1).unwrap();
    let pair = PolyPair::new(2, vec![0.4, -0.3, 0.5], vec![0.6, -0.2]).unwrap();
    c.bench_function("winding", |b| b.iter(|| winding_with(black_box(&pair), &p, &trace).unwrap()));
}

criterion_group!(benches, oracle, picard_fuchs, bounds, winding);
criterion_main!(benches);
