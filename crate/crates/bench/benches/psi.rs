use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;

use lorenz_psi::lab::{find_periodic_orbit, locate_orbit_singularities, LocateConfig};
use lorenz_psi::ode::{taylor_jet, State};
use lorenz_psi::psi::dense::{DenseSeries, Scaled};
use lorenz_psi::{DMode, GaussianRational, PsiSeries, SeriesFamily};

fn generation(c: &mut Criterion) {
    let mut g = c.benchmark_group("generate");
    g.sample_size(10);
    g.bench_function("symbolic m=20", |b| {
        b.iter(|| PsiSeries::generate(black_box(20), SeriesFamily::Plus, DMode::Symbolic).unwrap())
    });
    g.bench_function("numeric d=0 m=40", |b| {
        b.iter(|| {
            PsiSeries::generate(black_box(40), SeriesFamily::Plus, DMode::Numeric(GaussianRational::zero())).unwrap()
        })
    });
    g.finish();
}

fn dense(c: &mut Criterion) {
    let mut g = c.benchmark_group("dense");
    g.sample_size(10);
    g.bench_function("scaled m=200", |b| {
        b.iter(|| DenseSeries::<Scaled>::scaled(black_box(200), SeriesFamily::Plus, Complex64::new(1.0, 0.0)).unwrap())
    });
    g.finish();
}

fn jet(c: &mut Criterion) {
    let s = State::real(0.0, [1.0, 2.0, 20.0]);
    c.bench_function("taylor jet order 80", |b| b.iter(|| taylor_jet(black_box(&s), 80).unwrap()));
}

fn locate(c: &mut Criterion) {
    let orbit = find_periodic_orbit(&"AB".parse().unwrap(), None).unwrap();
    let cfg = LocateConfig::default();
    let mut g = c.benchmark_group("locate");
    g.sample_size(10);
    g.bench_function("AB", |b| b.iter(|| locate_orbit_singularities(black_box(&orbit), &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, generation, dense, jet, locate);
criterion_main!(benches);
