//! Acceptance run: one line per criterion.
//!
//! Criteria 7 and 9 are known not to hold in full (see the project notes);
//! they are still computed and reported as FAIL. The process exits nonzero
//! on any other failure, and flags a known failure that starts passing.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lorenz_psi::bounds::{
    branch_radius, branch_radius_asymptotic, eigenvector_condition, k2_estimate, majorant_sequence,
    radius_conditions_hold, radius_estimate, sweep_from, NormSource,
};
use lorenz_psi::eval::{residual_norm, BranchSpec, Evaluator, XEvaluator};
use lorenz_psi::lab::*;
use lorenz_psi::ode::{growth_check, State};
use lorenz_psi::psi::dense::{DenseSeries, ModP, Scaled};
use lorenz_psi::psi::{degree_bound, m2_top_load, recursion_residual, table1, zero_eigen_load};
use lorenz_psi::{DMode, GaussianRational, PsiSeries, Rational, SeriesFamily};

const KNOWN_FAILURES: [u32; 2] = [7, 9];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(limit: Duration, took: Duration) -> bool {
    took <= limit
}

fn criterion1() -> Outcome {
    let start = Instant::now();
    let reps: Vec<_> = [SeriesFamily::Plus, SeriesFamily::Minus].map(|f| table1::verify(f).unwrap()).into();
    let took = start.elapsed();
    let cells: usize = reps.iter().map(|r| r.cells.len()).sum();
    let bad: Vec<String> =
        reps.iter().flat_map(|r| r.mismatches().map(|c| format!("{:?} {}", r.family, c.label))).collect();
    outcome(
        bad.is_empty() && within(Duration::from_secs(1), took),
        format!("{}/{cells} cells match over both families in {took:.2?}; mismatches {bad:?}", cells - bad.len()),
    )
}

fn criterion2() -> Outcome {
    let start = Instant::now();
    let zero = GaussianRational::zero();
    let modp = DenseSeries::<ModP>::modular(200, SeriesFamily::Plus, &zero).unwrap();
    let scaled = DenseSeries::<Scaled>::scaled(200, SeriesFamily::Plus, Complex64::new(0.0, 0.0)).unwrap();
    let mut ok = true;
    let mut equal = 0;
    for m in 0..=200 {
        let bound = degree_bound(m) as usize;
        let upper = scaled.rung(m).unwrap().support_deg().unwrap();
        let lower = modp.rung(m).unwrap().deg_u().unwrap();
        ok &= lower <= upper && upper <= bound;
        equal += usize::from(lower == bound);
    }
    let took = start.elapsed();
    outcome(
        ok && within(Duration::from_secs(120), took),
        format!("deg_u(X_m) <= floor((m+2)/2) for m = 0..200; equality at {equal}/201 rungs; {took:.2?}"),
    )
}

fn criterion3() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for fam in [SeriesFamily::Plus, SeriesFamily::Minus] {
        let s = PsiSeries::generate(2, fam, DMode::Symbolic).unwrap();
        let f = s.forcing(2).unwrap();
        ok &= m2_top_load(fam, f).is_zero();
        notes.push(format!("{fam:?}: lower-order load {}", serde_json::to_string(&zero_eigen_load(fam, f)).unwrap()));
    }
    outcome(ok, format!("top-degree zero-eigenvector load of F_2 is exactly 0 ({})", notes.join("; ")))
}

fn criterion4() -> Outcome {
    let start = Instant::now();
    let s = PsiSeries::generate(60, SeriesFamily::Plus, DMode::Symbolic).unwrap();
    let bad: Vec<i64> = (0..=60)
        .filter(|&m| {
            recursion_residual(m, SeriesFamily::Plus, s.get(m).unwrap(), s.forcing(m).unwrap())
                .iter()
                .any(|p| !p.is_zero())
        })
        .collect();
    outcome(
        bad.is_empty(),
        format!("exact residual zero for m = 0..60 with symbolic D; failures {bad:?}; {:.2?}", start.elapsed()),
    )
}

fn criterion5() -> Outcome {
    let mut ok = eigenvector_condition().unwrap() == Rational::from_integer(16.into());
    let mut worst = f64::INFINITY;
    for d in [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
        let dense = DenseSeries::<Scaled>::scaled(200, SeriesFamily::Plus, d).unwrap();
        for row in sweep_from(&dense).unwrap() {
            if row.m >= 3 {
                ok &= row.f_holds == Some(true);
                worst = worst.min(row.ln_f_bound.unwrap() - row.ln_f.unwrap());
            }
            if row.m >= 8 {
                ok &= row.x_holds == Some(true);
                worst = worst.min(row.ln_x_bound.unwrap() - row.ln_norm_x);
            }
        }
    }
    outcome(
        ok,
        format!(
            "F bound m=3..200 and X bound m=8..200 for D in {{0,1,i}}; |V||V^-1| = 16; smallest log margin {worst:.3e}"
        ),
    )
}

fn criterion6() -> (Outcome, f64) {
    let start = Instant::now();
    let dense = DenseSeries::<Scaled>::scaled(200, SeriesFamily::Plus, Complex64::new(0.0, 0.0)).unwrap();
    let dominated = sweep_from(&dense).unwrap().iter().all(|r| r.dominated);
    let seed: Vec<f64> = (0..8).map(|m| dense.ln_x(m).unwrap()).collect();
    let maj = majorant_sequence(&seed, 2000).unwrap();
    let k = k2_estimate(&maj).unwrap();
    let took = start.elapsed();
    let o = outcome(
        dominated && k.rel_diff < 1e-4 && within(Duration::from_secs(60), took),
        format!(
            "|X_m| <= x_m for m = 0..200; K2 root-test {:.7} vs discriminant {:.7} (rel {:.1e}) at M = 2000; {took:.2?}",
            k.root_test, k.discriminant, k.rel_diff
        ),
    );
    (o, k.discriminant)
}

fn criterion7(k2: f64) -> Outcome {
    let cs = [Complex64::new(0.0, 0.0), Complex64::new(0.0, 2.0 * PI), Complex64::new(10.0, 0.0)];
    let radii_ok = cs.iter().all(|&c| radius_conditions_hold(k2, c, radius_estimate(k2, c)));
    let ratios: Vec<(i64, f64)> = [5, 10, 20, 100, -5]
        .iter()
        .map(|&m| (m, branch_radius(k2, Complex64::new(0.0, 0.0), m) / branch_radius_asymptotic(k2, m)))
        .collect();
    let scaling_ok = ratios.iter().all(|&(_, q)| (q - 1.0).abs() <= 0.1);
    let shown: Vec<String> = ratios.iter().map(|(m, q)| format!("m={m}: {q:.3}")).collect();
    outcome(
        radii_ok && scaling_ok,
        format!(
            "both radius conditions hold for C in {{0, 2 pi i, 10}}: {radii_ok}; branch radius / (1/(2 pi |m| K2)): {}",
            shown.join(", ")
        ),
    )
}

fn criterion8(k2: f64) -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for (c, d) in
        [(Complex64::new(0.0, 0.0), GaussianRational::zero()), (Complex64::new(1.0, 0.0), GaussianRational::i())]
    {
        let s = PsiSeries::generate(40, SeriesFamily::Plus, DMode::Numeric(d.clone())).unwrap();
        let spec = BranchSpec::new(Complex64::new(0.0, 0.3), c, d.to_complex(), SeriesFamily::Plus);
        let r = radius_estimate(k2, c);
        // b = i puts the cut along +i from t0; sample on the opposite ray.
        let t = spec.t0 + Complex64::new(0.0, -0.5 * r);
        let mut xev = XEvaluator::from_series(&s, &spec, 1024).unwrap();
        let res: Vec<f64> = (1..=8).map(|k| residual_norm(&xev.ode_residual(t, 5 * k).unwrap())).collect();
        let worst = res.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
        let last = *res.last().unwrap();
        ok &= worst <= 0.8 && last < 1e-8;
        lines.push(format!("(C={c}, D={d}): worst 5-order ratio {worst:.1e}, N=40 residual {last:.1e}"));
    }
    // Binary64 for reference: cancellation among ~1e12 terms sets its floor.
    let s = PsiSeries::generate(40, SeriesFamily::Plus, DMode::Numeric(GaussianRational::zero())).unwrap();
    let spec = BranchSpec::new(
        Complex64::new(0.0, 0.3),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        SeriesFamily::Plus,
    );
    let ev = Evaluator::from_series(&s, &spec).unwrap();
    let t = spec.t0 + Complex64::new(0.0, -0.5 * radius_estimate(k2, spec.c));
    let floor = residual_norm(&ev.ode_residual(t, 40).unwrap());
    outcome(ok, format!("at |t-t0| = r/2 with 1024-bit arithmetic: {}; binary64 floor {floor:.1e}", lines.join("; ")))
}

struct OrbitRun {
    name: &'static str,
    orbit: PeriodicOrbit,
    found: Vec<LocatedSingularity>,
}

fn criterion9() -> (Outcome, Vec<OrbitRun>) {
    let start = Instant::now();
    let cfg = LocateConfig::default();
    assert!(cfg.jet_order >= 60);
    let targets = [("AB", 0.1714501006), ("AAB", 0.1617621257), ("AAAB", 0.1563426260), ("AABB", 0.1636066901)];
    let mut ok = true;
    let mut runs = Vec::new();
    let mut parts = Vec::new();
    for (name, want) in targets {
        let orbit = find_periodic_orbit(&name.parse().unwrap(), None).unwrap();
        let found = locate_orbit_singularities(&orbit, &cfg).unwrap();
        let got = found[0].refined.t0.im.abs();
        let rel = (got / want - 1.0).abs();
        let pass = rel <= 1e-4;
        ok &= pass;
        parts.push(format!("{name} {got:.10} (rel {rel:.1e}{})", if pass { "" } else { ", FAIL" }));
        runs.push(OrbitRun { name, orbit, found });
    }
    let took = start.elapsed();
    (outcome(ok && within(Duration::from_secs(600), took), format!("{}; {took:.2?}", parts.join(", "))), runs)
}

fn criterion10(runs: &[OrbitRun]) -> Outcome {
    let mut ok = true;
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for run in runs {
        for s in &run.found {
            ok &= s.divergence.holds;
            worst = worst.min(s.divergence.min_product);
            count += 1;
        }
    }
    outcome(
        ok,
        format!(
            "|t-t0|(|x|+|y|+|z|) >= 1/8 on the last approach decade of {count} traces; smallest product {worst:.1}"
        ),
    )
}

fn criterion11(runs: &[OrbitRun]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let random: Vec<State> = (0..1_000_000)
        .map(|_| State::real(0.0, [rng.gen_range(-60.0..60.0), rng.gen_range(-60.0..60.0), rng.gen_range(-20.0..80.0)]))
        .collect();
    let rep = growth_check(&random);
    let flow = RealFlow::default();
    let mut orbit_ok = true;
    let mut orbit_max: f64 = 0.0;
    for run in runs {
        let ts: Vec<f64> = (0..2000).map(|k| k as f64 * run.orbit.period / 2000.0).collect();
        let states: Vec<State> =
            flow.sample(run.orbit.initial_state, &ts).into_iter().map(|v| State::real(0.0, v)).collect();
        let r = growth_check(&states);
        orbit_ok &= r.holds;
        orbit_max = orbit_max.max(r.max_ratio);
    }
    let min_im = runs.iter().flat_map(|r| r.found.iter().map(|s| s.refined.t0.im.abs())).fold(f64::INFINITY, f64::min);
    let names: Vec<&str> = runs.iter().map(|r| r.name).collect();
    outcome(
        rep.holds && orbit_ok && min_im > 0.037,
        format!(
            "max |dQ/dt|/Q = {:.3} over 1e6 random states, {orbit_max:.3} along {names:?}; min |Im t0| = {min_im:.4}",
            rep.max_ratio
        ),
    )
}

fn criterion12(runs: &[OrbitRun]) -> Outcome {
    let n = 15;
    let series = fit_series(n).unwrap();
    let spec = BranchSpec::new(
        Complex64::new(0.4, 0.2),
        Complex64::new(1.2, -0.7),
        Complex64::new(250.0, 40.0),
        SeriesFamily::Plus,
    );
    let ev = Evaluator::from_series(&series, &spec).unwrap();
    let mut samples = Vec::new();
    for radius in [0.01, 0.02] {
        for k in 0..25 {
            let t = spec.t0 + spec.b.conj() * Complex64::from_polar(radius, -2.8 + 5.6 * k as f64 / 24.0);
            samples.push(State::with_vars(t, ev.eval_t(t, n).unwrap()));
        }
    }
    let guess = FitGuess { t0: spec.t0, c: Complex64::new(0.0, 0.0), d: Complex64::new(0.0, 0.0) };
    let syn = fit_psi_parameters(&samples, &series, guess, n, &FitConfig::default()).unwrap();
    let (ec, ed) = ((syn.c - spec.c).norm(), (syn.d - spec.d).norm());

    let ab = runs.iter().find(|r| r.name == "AB").unwrap();
    let cfg = AnalysisConfig::default();
    let fit = fit_at(&ab.orbit, ab.found[0].refined.t0, &cfg).unwrap();
    let ratio = fit.holdout_rms / fit.rms_residual;
    outcome(
        ec < 1e-6 && ed < 1e-6 && ratio <= 3.0,
        format!(
            "synthetic |dC| = {ec:.1e}, |dD| = {ed:.1e}; AB at N = {}: training rms {:.1e}, held-out {:.1e} (ratio {ratio:.2}), C = {:.6}, D = {:.3}",
            fit.n, fit.rms_residual, fit.holdout_rms, fit.c, fit.d
        ),
    )
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "coefficient table reproduction", criterion1()),
        (2, "degree law", criterion2()),
        (3, "m = 2 cancellation", criterion3()),
        (4, "exact recursion residual", criterion4()),
        (5, "norm bound sweeps", criterion5()),
    ];
    let (c6, k2) = criterion6();
    results.push((6, "majorant dominance and K2", c6));
    results.push((7, "radius validity", criterion7(k2)));
    results.push((8, "series satisfies the ODE", criterion8(k2)));
    let (c9, runs) = criterion9();
    results.push((9, "singularity locations", c9));
    results.push((10, "divergence bound", criterion10(&runs)));
    results.push((11, "growth inequality", criterion11(&runs)));
    results.push((12, "round-trip fit", criterion12(&runs)));

    let mut unexpected = Vec::new();
    for (id, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let known = KNOWN_FAILURES.contains(id);
        let note = match (o.pass, known) {
            (false, true) => " [known]",
            (true, true) => " [known failure now passes]",
            _ => "",
        };
        println!("[{tag}] {id:>2} {name}: {}{note}", o.detail);
        if o.pass == known {
            unexpected.push(*id);
        }
    }
    let passed = results.iter().filter(|r| r.2.pass).count();
    println!("acceptance: {passed}/{} criteria pass in {:.1?}", results.len(), start.elapsed());
    if !unexpected.is_empty() {
        eprintln!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
