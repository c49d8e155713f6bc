use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use lorenz_psi::bounds::{
    branch_radius, branch_radius_asymptotic, k2_estimate, majorant_sequence, radius_conditions_hold, sweep, sweep_from,
    ConvergenceEstimate, K2Estimate, K2Method, NormSource, SweepRow,
};
use lorenz_psi::eval::{residual_norm, tail_bound, BranchSpec, Evaluator, XEvaluator};
use lorenz_psi::lab::{
    analyze_orbit, find_periodic_orbit, locate_orbit_singularities, AnalysisConfig, FitSummary, LocateConfig,
    OrbitRecord, SingularityRecord, SymbolSequence,
};
use lorenz_psi::ode::{growth_check, integrate_path, PathSpec, PrecisionConfig, State};
use lorenz_psi::psi::dense::{DenseSeries, Scaled};
use lorenz_psi::psi::{latex_table, table1};
use lorenz_psi::{DMode, PsiSeries, SeriesFamily};

use crate::job::Params;
use crate::run::{par_map, stage, Ctx, Failure};

/// Length of the majorant used for `K2`.
const MAJORANT_M: usize = 2000;

fn family_tag(f: SeriesFamily) -> &'static str {
    match f {
        SeriesFamily::Plus => "plus",
        SeriesFamily::Minus => "minus",
    }
}

fn check_max_m(m: i64, min: i64) -> Result<i64, Failure> {
    if m < min {
        return Err(Failure::Usage(format!("--max-m must be at least {min}, got {m}")));
    }
    Ok(m)
}

#[derive(Serialize)]
struct CoeffRow {
    m: i64,
    component: &'static str,
    index: i64,
    u_deg: u32,
    d_deg: u32,
    re: String,
    im: String,
}

pub fn gen_coeffs(ctx: &mut Ctx) -> Result<(), Failure> {
    let p = &ctx.params;
    let max_m = check_max_m(p.max_m.unwrap_or(3), -2)?;
    let family = p.family()?;
    let d_mode = p.d_mode()?.unwrap_or(DMode::Symbolic);
    let format = p.format.clone().unwrap_or_else(|| "json".into());
    if !["json", "latex", "csv"].contains(&format.as_str()) {
        return Err(Failure::Usage(format!("--format must be json, latex or csv, got {format:?}")));
    }
    let series = ctx.timed("generate", || PsiSeries::generate(max_m, family, d_mode)).map_err(stage("generate"))?;
    let stem = format!("coeffs_{}_m{max_m}", family_tag(family));
    match format.as_str() {
        "json" => ctx.write_json(&format!("{stem}.json"), &series.to_json())?,
        "latex" => ctx.write_text(&format!("{stem}.tex"), &latex_table(&series))?,
        _ => {
            let mut rows = Vec::new();
            for t in series.triples() {
                for (name, index, poly) in [("P", t.m + 1, &t.p), ("Q", t.m, &t.q), ("R", t.m, &t.r)] {
                    for (u, d, c) in poly.terms() {
                        let (re, im) = c.to_strings();
                        rows.push(CoeffRow { m: t.m, component: name, index, u_deg: u, d_deg: d, re, im });
                    }
                }
            }
            ctx.write_csv(&format!("{stem}.csv"), &rows)?
        }
    };
    println!("wrote {} rungs m = -2..{max_m} ({format})", series.triples().len());
    Ok(())
}

pub fn verify_table1(ctx: &mut Ctx) -> Result<(), Failure> {
    let families = match ctx.params.family {
        Some(_) => vec![ctx.params.family()?],
        None => vec![SeriesFamily::Plus, SeriesFamily::Minus],
    };
    let mut reports = Vec::new();
    for f in families {
        reports.push(ctx.timed(format!("verify_{}", family_tag(f)), || table1::verify(f)).map_err(stage("verify"))?);
    }
    ctx.write_json("table1.json", &reports)?;
    let mut bad = Vec::new();
    for r in &reports {
        let n_bad = r.mismatches().count();
        println!("{}: {}/{} cells match", family_tag(r.family), r.cells.len() - n_bad, r.cells.len());
        for c in r.mismatches() {
            println!("  {} expected {} got {}", c.label, c.expected, c.got);
            bad.push(format!("{} {}", family_tag(r.family), c.label));
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Mismatch(format!("cells differ: {}", bad.join(", "))))
    }
}

/// `K2` from the majorant seeded by the first eight rungs at this `D`.
fn convergence(d: Complex64, c: Complex64) -> Result<(ConvergenceEstimate, K2Estimate), Failure> {
    let dense = DenseSeries::<Scaled>::scaled(7, SeriesFamily::Plus, d).map_err(stage("seed"))?;
    let seed = (0..8).map(|m| dense.ln_x(m)).collect::<lorenz_psi::Result<Vec<_>>>().map_err(stage("seed"))?;
    let maj = majorant_sequence(&seed, MAJORANT_M).map_err(stage("majorant"))?;
    let k = k2_estimate(&maj).map_err(stage("k2"))?;
    Ok((ConvergenceEstimate::new(&maj, k.discriminant, K2Method::Discriminant, c, d), k))
}

#[derive(Serialize)]
struct BoundsRow {
    m: i64,
    ln_norm_x: f64,
    ln_majorant: f64,
    ln_f: Option<f64>,
    ln_f_bound: Option<f64>,
    f_margin: Option<f64>,
    ln_x_bound: Option<f64>,
    x_margin: Option<f64>,
    f_holds: Option<bool>,
    x_holds: Option<bool>,
    dominated: bool,
}

impl From<&SweepRow> for BoundsRow {
    fn from(r: &SweepRow) -> Self {
        Self {
            m: r.m,
            ln_norm_x: r.ln_norm_x,
            ln_majorant: r.ln_majorant,
            ln_f: r.ln_f,
            ln_f_bound: r.ln_f_bound,
            f_margin: r.ln_f.zip(r.ln_f_bound).map(|(a, b)| b - a),
            ln_x_bound: r.ln_x_bound,
            x_margin: r.ln_x_bound.map(|b| b - r.ln_norm_x),
            f_holds: r.f_holds,
            x_holds: r.x_holds,
            dominated: r.dominated,
        }
    }
}

/// Largest `M` swept with exact arithmetic; beyond it the scaled engine is used.
const EXACT_SWEEP_MAX: i64 = 60;

pub fn bounds(ctx: &mut Ctx) -> Result<(), Failure> {
    let p = &ctx.params;
    let max_m = check_max_m(p.max_m.unwrap_or(50), 8)?;
    let family = p.family()?;
    let d = p.d_numeric("bounds")?;
    let dc = d.to_complex();
    let seed = p.seed.unwrap_or(0);
    let growth_samples = p.growth_samples.unwrap_or(0);
    let engine = if max_m <= EXACT_SWEEP_MAX { "exact" } else { "scaled" };
    let rows = ctx
        .timed("sweep", || {
            if max_m <= EXACT_SWEEP_MAX {
                let s = PsiSeries::generate(max_m, family, DMode::Numeric(d.clone()))?;
                sweep(&s, None)
            } else {
                sweep_from(&DenseSeries::<Scaled>::scaled(max_m, family, dc)?)
            }
        })
        .map_err(stage("sweep"))?;
    let (est, k2) = ctx.timed("k2", || convergence(dc, Complex64::new(0.0, 0.0)))?;
    let growth = (growth_samples > 0).then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states: Vec<State> = (0..growth_samples)
            .map(|_| {
                State::real(0.0, [rng.gen_range(-60.0..60.0), rng.gen_range(-60.0..60.0), rng.gen_range(-20.0..80.0)])
            })
            .collect();
        growth_check(&states)
    });
    let csv_rows: Vec<BoundsRow> = rows.iter().map(BoundsRow::from).collect();
    ctx.write_csv("bounds_sweep.csv", &csv_rows)?;
    let failed: Vec<i64> = rows
        .iter()
        .filter(|r| r.f_holds == Some(false) || r.x_holds == Some(false) || !r.dominated)
        .map(|r| r.m)
        .collect();
    ctx.write_json(
        "convergence.json",
        &json!({ "engine": engine, "estimate": est, "k2": k2, "failed_rungs": failed, "growth": growth }),
    )?;
    println!(
        "m = 0..{max_m} ({engine}): {} failing rungs; K2 = {:.7} (root test {:.7}, rel {:.1e}); r = {:.4e}",
        failed.len(),
        k2.discriminant,
        k2.root_test,
        k2.rel_diff,
        est.r
    );
    if let Some(g) = &growth {
        println!("growth: max ratio {:.3} over {} states", g.max_ratio, g.samples);
    }
    if !failed.is_empty() || growth.is_some_and(|g| !g.holds) {
        return Err(Failure::Mismatch(format!("bound checks fail at m = {failed:?}")));
    }
    Ok(())
}

pub fn radius(ctx: &mut Ctx) -> Result<(), Failure> {
    let c = ctx.params.c()?;
    let d = ctx.params.d_numeric("radius")?.to_complex();
    let (est, k2) = ctx.timed("k2", || convergence(d, c))?;
    let k = est.k2;
    let holds = radius_conditions_hold(k, c, est.r);
    let branches: Vec<_> = (-10..=10i64)
        .map(|m| {
            let r = branch_radius(k, c, m);
            let asym = (m != 0).then(|| branch_radius_asymptotic(k, m));
            json!({ "m": m, "radius": r, "asymptotic": asym, "ratio": asym.map(|a| r / a) })
        })
        .collect();
    ctx.write_json(
        "radius.json",
        &json!({
            "estimate": est,
            "k2": k2,
            "k2_r": k * est.r,
            "log_condition": k * est.r * (est.r.ln().abs() + std::f64::consts::PI + c.norm()),
            "conditions_hold": holds,
            "branches": branches,
        }),
    )?;
    println!("K2 = {k:.7}, C = {c}: r = {:.6e}, conditions hold: {holds}", est.r);
    if holds {
        Ok(())
    } else {
        Err(Failure::Mismatch("radius conditions fail".into()))
    }
}

enum Engine {
    F64(Evaluator),
    Wide(Box<XEvaluator>),
}

impl Engine {
    fn eval(&mut self, t: Complex64, n: i64) -> lorenz_psi::Result<[Complex64; 3]> {
        match self {
            Engine::F64(e) => e.eval_t(t, n),
            Engine::Wide(e) => e.eval_t(t, n),
        }
    }

    fn residual(&mut self, t: Complex64, n: i64) -> lorenz_psi::Result<[Complex64; 3]> {
        match self {
            Engine::F64(e) => e.ode_residual(t, n),
            Engine::Wide(e) => e.ode_residual(t, n),
        }
    }
}

struct EvalSetup {
    spec: BranchSpec,
    engine: Engine,
    order: i64,
    points: Vec<Complex64>,
    d: Complex64,
}

fn eval_setup(ctx: &mut Ctx, default_order: i64) -> Result<EvalSetup, Failure> {
    let p = &ctx.params;
    let order = p.order.unwrap_or(default_order);
    if order < 0 {
        return Err(Failure::Usage(format!("--order must be nonnegative, got {order}")));
    }
    let family = p.family()?;
    let d = p.d_numeric("evaluation")?;
    let dc = d.to_complex();
    let mut spec = BranchSpec::new(p.t0()?, p.c()?, dc, family);
    if let Some(b) = &p.b {
        spec = spec.with_b(b.complex()?).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let points = p.points()?;
    let bits = p.precision_bits.unwrap_or(53);
    let engine = ctx
        .timed("series", || -> lorenz_psi::Result<Engine> {
            if bits <= 53 {
                let dense = DenseSeries::<Scaled>::scaled(order, family, dc)?;
                Ok(Engine::F64(Evaluator::from_dense(&dense, &spec)?))
            } else {
                let s = PsiSeries::generate(order, family, DMode::Numeric(d.clone()))?;
                Ok(Engine::Wide(Box::new(XEvaluator::from_series(&s, &spec, bits)?)))
            }
        })
        .map_err(stage("series"))?;
    Ok(EvalSetup { spec, engine, order, points, d: dc })
}

#[derive(Serialize)]
struct EvalRow {
    re_t: f64,
    im_t: f64,
    re_x: f64,
    im_x: f64,
    re_y: f64,
    im_y: f64,
    re_z: f64,
    im_z: f64,
    residual_norm: f64,
    tail_bound: Option<f64>,
}

pub fn eval(ctx: &mut Ctx) -> Result<(), Failure> {
    let mut s = eval_setup(ctx, 20)?;
    let (est, _) = convergence(s.d, s.spec.c)?;
    let mut rows = Vec::with_capacity(s.points.len());
    let start = Instant::now();
    for &t in &s.points {
        let v = s.engine.eval(t, s.order).map_err(stage("eval"))?;
        let res = s.engine.residual(t, s.order).map_err(stage("residual"))?;
        rows.push(EvalRow {
            re_t: t.re,
            im_t: t.im,
            re_x: v[0].re,
            im_x: v[0].im,
            re_y: v[1].re,
            im_y: v[1].im,
            re_z: v[2].re,
            im_z: v[2].im,
            residual_norm: residual_norm(&res),
            // Absent outside the radius where the tail majorant applies.
            tail_bound: tail_bound(&est, &s.spec, t, s.order).ok(),
        });
    }
    ctx.timed("eval", || start.elapsed());
    ctx.write_csv("eval.csv", &rows)?;
    println!("evaluated {} points at order {}", rows.len(), s.order);
    Ok(())
}

#[derive(Serialize)]
struct ResidualRow {
    re_t: f64,
    im_t: f64,
    n: i64,
    residual_norm: f64,
    ratio: Option<f64>,
}

pub fn residual(ctx: &mut Ctx) -> Result<(), Failure> {
    let mut s = eval_setup(ctx, 40)?;
    let orders: Vec<i64> = if s.order < 5 { vec![s.order] } else { (1..=s.order / 5).map(|k| 5 * k).collect() };
    let mut rows = Vec::new();
    for &t in &s.points {
        let mut prev: Option<f64> = None;
        for &n in &orders {
            let r = residual_norm(&s.engine.residual(t, n).map_err(stage("residual"))?);
            rows.push(ResidualRow { re_t: t.re, im_t: t.im, n, residual_norm: r, ratio: prev.map(|q| r / q) });
            prev = Some(r);
        }
    }
    ctx.write_csv("residual.csv", &rows)?;
    let worst = rows.iter().filter_map(|r| r.ratio).fold(0.0, f64::max);
    println!("{} points, orders {orders:?}: worst ratio per 5 orders {worst:.3e}", s.points.len());
    Ok(())
}

pub fn integrate(ctx: &mut Ctx) -> Result<(), Failure> {
    let p = &ctx.params;
    let waypoints: Vec<Complex64> = p
        .waypoints
        .as_ref()
        .ok_or_else(|| Failure::Usage("the job file must list `waypoints`".into()))?
        .iter()
        .map(|[a, b]| Complex64::new(*a, *b))
        .collect();
    let start = p.start.ok_or_else(|| Failure::Usage("the job file must give `start`".into()))?;
    if waypoints.len() < 2 {
        return Err(Failure::Usage("need at least two waypoints".into()));
    }
    let start = State::with_vars(waypoints[0], start.map(|[a, b]| Complex64::new(a, b)));
    let defaults = PrecisionConfig::default();
    let order = p.order.unwrap_or(defaults.taylor_order as i64);
    if order < 1 {
        return Err(Failure::Usage(format!("--order must be positive, got {order}")));
    }
    let cfg = PrecisionConfig {
        mantissa_bits: p.precision_bits.unwrap_or(defaults.mantissa_bits),
        taylor_order: order as usize,
        ..defaults
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let path = PathSpec::new(waypoints.clone(), p.tol.unwrap_or(1e-12), p.max_step.unwrap_or(0.1));
    path.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let result = ctx.timed("integrate", || integrate_path(&start, &path, &cfg)).map_err(stage("integrate"))?;
    let mut trace = Vec::new();
    result.write_csv(&mut trace).map_err(stage("integrate"))?;
    ctx.write_text("integrate_trace.csv", &String::from_utf8(trace).expect("csv is utf-8"))?;
    let closed = waypoints.first() == waypoints.last();
    let return_error = (closed && !result.diverged()).then(|| {
        let (a, b) = (start.vars(), result.end.vars());
        (0..3).map(|k| (a[k] - b[k]).norm()).fold(0.0, f64::max)
    });
    ctx.write_json(
        "integrate.json",
        &json!({
            "start": start,
            "end": result.end,
            "outcome": result.outcome,
            "steps": result.trace.len(),
            "closed_loop": closed,
            "return_error": return_error,
        }),
    )?;
    match return_error {
        Some(e) => println!("{} steps; closed loop returns to within {e:.3e}", result.trace.len()),
        None => println!("{} steps; diverged: {}", result.trace.len(), result.diverged()),
    }
    Ok(())
}

fn symbols(ctx: &Ctx, positional: Vec<String>) -> Result<Vec<SymbolSequence>, Failure> {
    let words = if positional.is_empty() { ctx.params.symbols.clone().unwrap_or_default() } else { positional };
    if words.is_empty() {
        return Err(Failure::Usage("give at least one symbol sequence, e.g. AB".into()));
    }
    words.iter().map(|w| w.parse().map_err(|e: lorenz_psi::Error| Failure::Usage(e.to_string()))).collect()
}

/// Runs `f` per orbit on up to `--jobs` threads; outputs are written in input order.
fn per_orbit<R: Send>(
    ctx: &mut Ctx,
    syms: &[SymbolSequence],
    f: impl Fn(&SymbolSequence) -> Result<R, Failure> + Sync,
) -> Result<Vec<(SymbolSequence, R)>, Failure> {
    let jobs = ctx.params.jobs();
    let results = par_map(syms, jobs, |s| {
        let t = Instant::now();
        (f(s), t.elapsed().as_secs_f64())
    });
    let mut out = Vec::new();
    for (s, (r, secs)) in syms.iter().zip(results) {
        ctx.timed(s.as_str(), || secs);
        out.push((s.clone(), r?));
    }
    Ok(out)
}

pub fn find_orbit(ctx: &mut Ctx, words: Vec<String>) -> Result<(), Failure> {
    let syms = symbols(ctx, words)?;
    let found = per_orbit(ctx, &syms, |s| find_periodic_orbit(s, None).map_err(stage("find_periodic_orbit")))?;
    for (s, o) in found {
        ctx.write_json(&format!("orbit_{}.json", s.as_str()), &OrbitRecord::from(&o))?;
        println!("{}: period {:.10}, closure {:.1e}", s.as_str(), o.period, o.closure_residual);
    }
    Ok(())
}

fn locate_config(p: &Params) -> Result<LocateConfig, Failure> {
    let mut cfg = LocateConfig::default();
    if let Some(n) = p.order {
        if n < 24 {
            return Err(Failure::Usage(format!("--order (jet order) must be at least 24, got {n}")));
        }
        cfg.jet_order = n as usize;
    }
    if let Some(t) = p.tol {
        cfg.refine.tol = t;
    }
    if let Some(b) = p.precision_bits {
        cfg.refine.precision.mantissa_bits = b;
    }
    Ok(cfg)
}

pub fn locate(ctx: &mut Ctx, words: Vec<String>) -> Result<(), Failure> {
    let syms = symbols(ctx, words)?;
    let cfg = locate_config(&ctx.params)?;
    let found = per_orbit(ctx, &syms, |s| {
        let orbit = find_periodic_orbit(s, None).map_err(stage("find_periodic_orbit"))?;
        let sing = locate_orbit_singularities(&orbit, &cfg).map_err(stage("locate"))?;
        Ok((orbit, sing))
    })?;
    let mut failing = Vec::new();
    for (s, (orbit, sing)) in found {
        let tag = s.as_str();
        let near = &sing[0].refined;
        ctx.write_json(&format!("orbit_{tag}.json"), &OrbitRecord::from(&orbit))?;
        let record = SingularityRecord {
            orbit: s.clone(),
            t_star: near.t_star,
            rho: near.rho,
            theta: near.theta,
            t0: near.t0,
            stage: near.stage,
            fit: None,
        };
        ctx.write_json(&format!("sing_{tag}.json"), &record)?;
        let all: Vec<_> = sing
            .iter()
            .map(|l| {
                json!({
                    "asymptotic": l.asymptotic,
                    "refined": l.refined,
                    "divergence": l.divergence,
                    "conjugate_mismatch": l.conjugate_mismatch,
                    "approach_points": l.approach.len(),
                })
            })
            .collect();
        ctx.write_json(&format!("locate_{tag}.json"), &all)?;
        println!("{tag}: t0 = {:.10} ± {:.10}i ({} singularities)", near.t0.re, near.t0.im.abs(), sing.len());
        if sing.iter().any(|l| !l.divergence.holds) {
            failing.push(tag.to_string());
        }
    }
    if failing.is_empty() {
        Ok(())
    } else {
        Err(Failure::Mismatch(format!("divergence bound fails for {failing:?}")))
    }
}

pub fn fit(ctx: &mut Ctx, words: Vec<String>) -> Result<(), Failure> {
    let syms = symbols(ctx, words)?;
    let p = &ctx.params;
    // `--order` sets the fit truncation here; the jet order keeps its default.
    let locate = locate_config(&Params { order: None, ..p.clone() })?;
    let mut cfg = AnalysisConfig { locate, ..Default::default() };
    if let Some(n) = p.order {
        if !(1..=lorenz_psi::psi::DEFAULT_SYMBOLIC_CAP).contains(&n) {
            return Err(Failure::Usage(format!("--order must be in 1..=60 for fits, got {n}")));
        }
        cfg.fit_order = n;
    }
    if let Some(t) = p.tol {
        cfg.fit.tol = t;
    }
    let done = per_orbit(ctx, &syms, |s| analyze_orbit(s, &cfg).map_err(stage("fit")))?;
    for (s, a) in done {
        let tag = s.as_str();
        ctx.write_json(&format!("orbit_{tag}.json"), &a.orbit_record())?;
        ctx.write_json(&format!("sing_{tag}.json"), &a.singularity_record())?;
        ctx.write_json(&format!("fit_{tag}.json"), &a.fit)?;
        let f = FitSummary::from(&a.fit);
        println!(
            "{tag}: family {}, C = {:.6}, D = {:.3}, rms {:.1e}, held-out {:.1e}",
            family_tag(f.family),
            f.c,
            f.d,
            f.rms,
            f.holdout_rms
        );
    }
    Ok(())
}
