//! Least-squares fit of `(t0, C, D, family)` to integrated samples near a
//! singularity.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{BranchSpec, Evaluator};
use crate::ode::{integrate_path, PathSpec, PrecisionConfig, State};
use crate::psi::{DMode, PsiSeries, SeriesFamily};

/// Samples on two rings `|t - t0| = inner, outer`, reached from a real state
/// straight below `t0` and kept `sleeve` radians clear of the cut.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnnulusSpec {
    pub inner: f64,
    pub outer: f64,
    pub per_ring: usize,
    pub sleeve: f64,
}

impl AnnulusSpec {
    /// The annulus `r/4 ≤ |t - t0| ≤ r/2`.
    pub fn from_radius(r: f64) -> Self {
        Self { inner: 0.25 * r, outer: 0.5 * r, per_ring: 24, sleeve: 0.3 }
    }
}

fn ring_path(center: Complex64, b: Complex64, radius: f64, angles: &[f64]) -> Vec<Complex64> {
    // `b (t - t0) = radius e^{iφ}`, so φ = 0 points away from the cut.
    angles.iter().map(|&a| center + b.conj() * Complex64::from_polar(radius, a)).collect()
}

/// Integrates from `start` (real, with `Re t == Re t0`) onto the annulus.
pub fn annulus_samples(start: &State, t0: Complex64, ann: &AnnulusSpec, cfg: &PrecisionConfig) -> Result<Vec<State>> {
    if !(0.0 < ann.inner && ann.inner < ann.outer) || ann.per_ring < 2 {
        return Err(Error::Precondition("annulus needs 0 < inner < outer and at least 2 points per ring".into()));
    }
    if ann.outer >= t0.im.abs() {
        return Err(Error::Precondition("annulus reaches the real axis".into()));
    }
    let b = crate::eval::default_b(t0);
    let reach = std::f64::consts::PI - ann.sleeve;
    let n = ann.per_ring;
    let half: Vec<f64> = (0..=n / 2).map(|k| reach * k as f64 / (n / 2) as f64).collect();
    let mut out = Vec::with_capacity(2 * n + 2);
    for radius in [ann.outer, ann.inner] {
        let entry = ring_path(t0, b, radius, &[0.0])[0];
        let lead = PathSpec::new(vec![start.t, entry], 1e-15, radius);
        let base = integrate_path(start, &lead, cfg)?;
        if base.diverged() {
            return Err(Error::NoConvergence("path to the annulus diverged".into()));
        }
        out.push(base.end);
        for sign in [1.0, -1.0] {
            let ang: Vec<f64> = half.iter().map(|a| sign * a).collect();
            let pts = ring_path(t0, b, radius, &ang);
            let mut here = base.end;
            for w in pts.windows(2) {
                let seg = PathSpec::new(vec![w[0], w[1]], 1e-15, 0.25 * radius);
                let r = integrate_path(&here, &seg, cfg)?;
                if r.diverged() {
                    return Err(Error::NoConvergence("ring integration diverged".into()));
                }
                here = r.end;
                out.push(here);
            }
        }
    }
    Ok(out)
}

/// Fit settings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_iter: usize,
    /// Stop when the relative drop in squared misfit is below this.
    pub tol: f64,
    /// Every `holdout`-th sample is kept out of the fit.
    pub holdout: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { max_iter: 60, tol: 1e-14, holdout: 3 }
    }
}

/// Result of [`fit_psi_parameters`].
#[derive(Clone, Debug, Serialize)]
pub struct SingularityFit {
    pub t0: Complex64,
    pub family: SeriesFamily,
    /// Relative to the principal `η = log(b (t - t0))`.
    pub c: Complex64,
    pub d: Complex64,
    pub b: Complex64,
    pub rms_residual: f64,
    pub holdout_rms: f64,
    /// Smallest and largest `|t - t0|` among the samples.
    pub window: (f64, f64),
    pub n: i64,
    pub iterations: usize,
}

/// Starting point for the fit.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FitGuess {
    pub t0: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

/// `Plus` when `τ x ≈ +2i` at the sample nearest `t0`.
pub fn detect_family(samples: &[State], t0: Complex64) -> Result<SeriesFamily> {
    let near = samples
        .iter()
        .min_by(|a, b| (a.t - t0).norm().total_cmp(&(b.t - t0).norm()))
        .ok_or_else(|| Error::Precondition("no samples".into()))?;
    let lead = (near.t - t0) * near.x;
    Ok(if lead.im >= 0.0 { SeriesFamily::Plus } else { SeriesFamily::Minus })
}

struct Model<'a> {
    series: &'a PsiSeries,
    n: i64,
}

impl Model<'_> {
    fn evaluator(&self, p: &[Complex64; 3]) -> Result<Evaluator> {
        let spec = BranchSpec::new(p[0], p[1], p[2], self.series.family);
        Evaluator::from_series(self.series, &spec)
    }

    /// Weighted misfits `τ Δx, τ² Δy, τ² Δz`; these stay O(1) across the annulus.
    fn residuals(&self, p: &[Complex64; 3], samples: &[&State]) -> Result<Vec<Complex64>> {
        let ev = self.evaluator(p)?;
        let mut out = Vec::with_capacity(3 * samples.len());
        for s in samples {
            let tau = s.t - p[0];
            let v = ev.eval_t(s.t, self.n)?;
            out.push(tau * (s.x - v[0]));
            out.push(tau * tau * (s.y - v[1]));
            out.push(tau * tau * (s.z - v[2]));
        }
        Ok(out)
    }
}

fn rms(r: &[Complex64]) -> f64 {
    if r.is_empty() {
        return 0.0;
    }
    (r.iter().map(|z| z.norm_sqr()).sum::<f64>() / r.len() as f64).sqrt()
}

fn to_real(r: &[Complex64]) -> DVector<f64> {
    DVector::from_iterator(2 * r.len(), r.iter().flat_map(|z| [z.re, z.im]))
}

/// Levenberg–Marquardt over `(t0, C, D)` as six reals, at truncation order
/// `n`. The family is read off the samples; `series` must be symbolic in `D`
/// and reach order `n`.
pub fn fit_psi_parameters(
    samples: &[State],
    series: &PsiSeries,
    guess: FitGuess,
    n: i64,
    cfg: &FitConfig,
) -> Result<SingularityFit> {
    if n < 1 || series.max_m < n {
        return Err(Error::Precondition(format!("series reaches m={}, fit needs {n}", series.max_m)));
    }
    if series.numeric_d().is_some() {
        return Err(Error::Precondition("fit needs a series symbolic in D".into()));
    }
    if samples.len() < 6 || cfg.holdout < 2 {
        return Err(Error::Precondition("need at least 6 samples and a holdout stride >= 2".into()));
    }
    let family = detect_family(samples, guess.t0)?;
    let flipped;
    let series = if series.family == family {
        series
    } else {
        flipped = series.flipped();
        &flipped
    };
    let in_fit = |i: usize| i % cfg.holdout != cfg.holdout - 1;
    let train: Vec<&State> = samples.iter().enumerate().filter(|(i, _)| in_fit(*i)).map(|(_, s)| s).collect();
    let held: Vec<&State> = samples.iter().enumerate().filter(|(i, _)| !in_fit(*i)).map(|(_, s)| s).collect();
    let model = Model { series, n };

    let mut p = [guess.t0, guess.c, guess.d];
    let mut r = model.residuals(&p, &train)?;
    let mut cost = r.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let steps = [1e-7, 1e-6, 1e-4];
    for it in 0..cfg.max_iter {
        iterations = it + 1;
        // Each misfit is analytic in each parameter: one complex difference
        // gives both real columns.
        let mut jac = DMatrix::<f64>::zeros(2 * r.len(), 6);
        for k in 0..3 {
            let h = steps[k] * (1.0 + p[k].norm());
            let (mut hi, mut lo) = (p, p);
            hi[k] += h;
            lo[k] -= h;
            let (rh, rl) = (model.residuals(&hi, &train)?, model.residuals(&lo, &train)?);
            for (row, (a, b)) in rh.iter().zip(&rl).enumerate() {
                let g = (a - b) / (2.0 * h);
                let gi = g * Complex64::i();
                jac[(2 * row, 2 * k)] = g.re;
                jac[(2 * row + 1, 2 * k)] = g.im;
                jac[(2 * row, 2 * k + 1)] = gi.re;
                jac[(2 * row + 1, 2 * k + 1)] = gi.im;
            }
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * to_real(&r);
        let mut improved = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for i in 0..6 {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(delta) = a.lu().solve(&(-&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [
                p[0] + Complex64::new(delta[0], delta[1]),
                p[1] + Complex64::new(delta[2], delta[3]),
                p[2] + Complex64::new(delta[4], delta[5]),
            ];
            match model.residuals(&trial, &train) {
                Ok(rt) => {
                    let ct = rt.iter().map(|z| z.norm_sqr()).sum::<f64>();
                    if ct < cost {
                        let drop = (cost - ct) / cost;
                        p = trial;
                        r = rt;
                        cost = ct;
                        lambda = (lambda * 0.3).max(1e-12);
                        improved = drop > cfg.tol;
                        break;
                    }
                    lambda *= 10.0;
                }
                // A trial t0 that pushes samples onto the cut.
                Err(_) => lambda *= 10.0,
            }
        }
        if !improved {
            break;
        }
    }
    if !cost.is_finite() {
        return Err(Error::NoConvergence(format!("fit diverged; best t0={}, C={}, D={}", p[0], p[1], p[2])));
    }
    let dist: Vec<f64> = samples.iter().map(|s| (s.t - p[0]).norm()).collect();
    Ok(SingularityFit {
        t0: p[0],
        family,
        c: p[1],
        d: p[2],
        b: crate::eval::default_b(p[0]),
        rms_residual: rms(&r),
        holdout_rms: rms(&model.residuals(&p, &held)?),
        window: (dist.iter().copied().fold(f64::INFINITY, f64::min), dist.iter().copied().fold(0.0, f64::max)),
        n,
        iterations,
    })
}

/// Symbolic series for fits at order `n`.
pub fn fit_series(n: i64) -> Result<PsiSeries> {
    PsiSeries::generate(n, SeriesFamily::Plus, DMode::Symbolic)
}
