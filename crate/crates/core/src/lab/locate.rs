//! Complex-time singularities of a real orbit: coefficient asymptotics, then
//! a march toward `t0` corrected by the leading psi-series terms.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::orbit::{PeriodicOrbit, RealFlow};
use crate::error::{Error, Result};
use crate::ode::{integrate_path, taylor_jet, PathSpec, PrecisionConfig, State, TaylorJet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Asymptotic,
    Refined,
}

/// A singularity near the real axis, seen from the real point `t_star`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingularityEstimate {
    pub t_star: f64,
    pub rho: f64,
    pub theta: f64,
    pub t0: Complex64,
    pub stage: Stage,
    /// One-sigma uncertainty of `t0` from the asymptotic fit.
    pub sigma: f64,
}

impl SingularityEstimate {
    pub fn conj(&self) -> Self {
        Self { theta: -self.theta, t0: self.t0.conj(), ..self.clone() }
    }
}

/// Fits `ρ_n = ρ + α/n + β/n²` by least squares; returns `(ρ, |ρ - ρ_linear|)`.
fn extrapolate(ns: &[f64], vals: &[f64]) -> Result<(f64, f64)> {
    let fit = |cols: usize| -> Result<f64> {
        let a = DMatrix::from_fn(ns.len(), cols, |i, j| ns[i].powi(-(j as i32)));
        let b = DVector::from_column_slice(vals);
        let sol =
            a.svd(true, true).solve(&b, 1e-14).map_err(|e| Error::NoConvergence(format!("asymptotic fit: {e}")))?;
        Ok(sol[0])
    };
    let (two, three) = (fit(2)?, fit(3)?);
    Ok((three, (three - two).abs()))
}

/// Conjugate-pair estimate from real Taylor coefficients `a_n`.
///
/// A pair at `t* + ρ e^{±iθ}` makes `a_{n+1} ≈ (2cosθ/ρ) a_n - a_{n-1}/ρ²`; the
/// two recurrence constants are solved from consecutive windows and then
/// extrapolated in `1/n`. Returns `(ρ, θ, σ)`.
pub fn conjugate_pair_fit(a: &[f64]) -> Result<(f64, f64, f64)> {
    let n = a.len();
    if n < 24 {
        return Err(Error::Precondition(format!("need at least 24 coefficients, got {n}")));
    }
    let (mut ns, mut rhos, mut coss) = (Vec::new(), Vec::new(), Vec::new());
    for k in n / 2..n - 2 {
        let det = a[k + 1] * a[k - 1] - a[k] * a[k];
        if det == 0.0 {
            continue;
        }
        let inv_r2 = (a[k] * a[k + 2] - a[k + 1] * a[k + 1]) / det;
        let b = (a[k - 1] * a[k + 2] - a[k] * a[k + 1]) / det;
        if inv_r2 <= 0.0 || !inv_r2.is_finite() {
            continue;
        }
        let rho = inv_r2.sqrt().recip();
        ns.push(k as f64);
        rhos.push(rho);
        coss.push(0.5 * b * rho);
    }
    if ns.len() < 6 {
        return Err(Error::NoConvergence("coefficient tail is not oscillatory".into()));
    }
    let (rho, s_rho) = extrapolate(&ns, &rhos)?;
    let (c, s_c) = extrapolate(&ns, &coss)?;
    // Also rejects NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(rho > 0.0) || c.abs() >= 1.0 {
        return Err(Error::NoConvergence(format!("no conjugate pair: rho={rho}, cos={c}")));
    }
    let theta = c.acos();
    let sigma = s_rho + rho * s_c / theta.sin().max(1e-3);
    Ok((rho, theta, sigma))
}

/// Asymptotic-stage estimate from the `z` coefficients of a real jet.
pub fn nearest_singularity_estimate(jet: &TaylorJet) -> Result<SingularityEstimate> {
    if jet.base.t.im != 0.0 || jet.base.vars().iter().any(|v| v.im != 0.0) {
        return Err(Error::Precondition("expansion point must be real".into()));
    }
    let a: Vec<f64> = jet.coeffs.iter().map(|c| c[2].re).collect();
    let (rho, theta, sigma) = conjugate_pair_fit(&a)?;
    if theta.sin().abs() < 1e-6 {
        return Err(Error::NoConvergence("estimate fell on the real axis".into()));
    }
    let t_star = jet.base.t.re;
    Ok(SingularityEstimate {
        t_star,
        rho,
        theta,
        t0: Complex64::new(t_star, 0.0) + Complex64::from_polar(rho, theta),
        stage: Stage::Asymptotic,
        sigma,
    })
}

/// Settings for the approach march.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RefineConfig {
    /// Standoffs shrink by this factor each round.
    pub shrink: f64,
    /// Smallest standoff distance.
    pub floor: f64,
    /// Stop once `t0` moves less than this.
    pub tol: f64,
    pub precision: PrecisionConfig,
    pub path_tol: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            shrink: 1.0 / 3.0,
            floor: 1e-5,
            tol: 1e-10,
            precision: PrecisionConfig { taylor_order: 30, ..PrecisionConfig::default() },
            path_tol: 1e-15,
        }
    }
}

/// `s = t - t0` from `z s² = -1/5 + (17/9) s`, the root nearest `guess`.
pub fn leading_order_offset(z: Complex64, guess: Complex64) -> Complex64 {
    let b = 17.0 / 9.0;
    let disc = (b * b - 0.8 * z).sqrt();
    let r1 = (b + disc) / (2.0 * z);
    let r2 = (b - disc) / (2.0 * z);
    if (r1 - guess).norm() <= (r2 - guess).norm() {
        r1
    } else {
        r2
    }
}

/// The march toward a singularity, with every accepted state.
#[derive(Clone, Debug, Serialize)]
pub struct Approach {
    pub estimate: SingularityEstimate,
    pub trace: Vec<State>,
    /// `t0` after each standoff.
    pub history: Vec<Complex64>,
}

/// Marches from the real point `start` toward `est.t0`, re-estimating `t0`
/// at each standoff from the two leading terms of `z`.
pub fn refine_singularity(est: &SingularityEstimate, start: &State, cfg: &RefineConfig) -> Result<Approach> {
    let mut t0 = est.t0;
    let mut here = *start;
    let mut trace = vec![here];
    let mut history = vec![t0];
    let mut standoff = 0.5 * (t0 - here.t).norm();
    let mut last_move = f64::INFINITY;
    while standoff >= cfg.floor {
        let dir = (t0 - here.t) / (t0 - here.t).norm();
        let target = t0 - dir * standoff;
        let path = PathSpec::new(vec![here.t, target], cfg.path_tol, standoff);
        let run = integrate_path(&here, &path, &cfg.precision)?;
        trace.extend(run.trace.iter().skip(1).map(|p| p.state));
        if run.diverged() {
            return Err(Error::NoConvergence(format!("march diverged before standoff {standoff:.2e}")));
        }
        here = run.end;
        let s = leading_order_offset(here.z, here.t - t0);
        let next = here.t - s;
        let moved = (next - t0).norm();
        if moved > 10.0 * last_move && moved > 1e3 * cfg.tol {
            return Err(Error::NoConvergence(format!(
                "t0 estimate oscillates: moved {moved:.2e} after {last_move:.2e}"
            )));
        }
        t0 = next;
        history.push(t0);
        last_move = moved;
        if moved < cfg.tol {
            break;
        }
        standoff *= cfg.shrink;
    }
    let off = t0 - Complex64::new(est.t_star, 0.0);
    Ok(Approach {
        estimate: SingularityEstimate {
            t_star: est.t_star,
            rho: off.norm(),
            theta: off.arg(),
            t0,
            stage: Stage::Refined,
            sigma: last_move,
        },
        trace,
        history,
    })
}

/// Outcome of the `|t - t0| (|x|+|y|+|z|) ≥ 1/8` check.
#[derive(Clone, Debug, Serialize)]
pub struct DivergenceReport {
    pub closest: f64,
    pub min_product: f64,
    pub samples: usize,
    pub holds: bool,
    /// `|t-t0|² (|y|+|z|)` at the closest sample; tends to `|Q_-2|+|R_-2| = 2/5`.
    pub yz_scale: f64,
}

/// Checks the product bound on the last decade of approach distances.
pub fn check_divergence_bound(trace: &[State], t0: Complex64) -> Result<DivergenceReport> {
    let closest = trace.iter().map(|s| (s.t - t0).norm()).fold(f64::INFINITY, f64::min);
    if closest > 1e-3 {
        return Err(Error::Precondition(format!("trace only gets within {closest:.2e} of t0")));
    }
    let decade: Vec<&State> = trace.iter().filter(|s| (s.t - t0).norm() <= 10.0 * closest).collect();
    let products: Vec<f64> = decade.iter().map(|s| (s.t - t0).norm() * s.l1()).collect();
    let min_product = products.iter().copied().fold(f64::INFINITY, f64::min);
    let near = decade.iter().min_by(|a, b| (a.t - t0).norm().total_cmp(&(b.t - t0).norm())).expect("nonempty decade");
    let d = (near.t - t0).norm();
    Ok(DivergenceReport {
        closest,
        min_product,
        samples: decade.len(),
        holds: min_product >= 0.125,
        yz_scale: d * d * (near.y.norm() + near.z.norm()),
    })
}

/// Root-test radius of the `z` series at each sample time.
fn radius_profile(
    flow: &RealFlow,
    orbit: &PeriodicOrbit,
    samples: usize,
    order: usize,
) -> Result<Vec<(f64, f64, [f64; 3])>> {
    let ts: Vec<f64> = (0..samples).map(|k| k as f64 * orbit.period / samples as f64).collect();
    let states = flow.sample(orbit.initial_state, &ts);
    ts.iter()
        .zip(states)
        .map(|(&t, v)| {
            let jet = taylor_jet(&State::real(t, v), order)?;
            let a: Vec<f64> = jet.coeffs.iter().map(|c| c[2].norm()).collect();
            // Envelope over the last few orders smooths the oscillation.
            let r = (order - 5..=order)
                .filter(|&k| a[k] > 0.0)
                .map(|k| a[k].powf(-1.0 / k as f64))
                .fold(f64::INFINITY, f64::min);
            Ok((t, r, v))
        })
        .collect()
}

/// Settings for [`locate_orbit_singularities`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocateConfig {
    pub scan_samples: usize,
    pub scan_order: usize,
    /// Jet order for the asymptotic stage.
    pub jet_order: usize,
    pub refine: RefineConfig,
}

impl Default for LocateConfig {
    fn default() -> Self {
        Self { scan_samples: 240, scan_order: 30, jet_order: 80, refine: RefineConfig::default() }
    }
}

/// One located singularity of an orbit (upper half-plane member of the pair).
#[derive(Clone, Debug, Serialize)]
pub struct LocatedSingularity {
    pub asymptotic: SingularityEstimate,
    pub refined: SingularityEstimate,
    pub divergence: DivergenceReport,
    /// `|Im t0|` of the independently refined lower member, minus that of the upper.
    pub conjugate_mismatch: f64,
    pub approach: Vec<State>,
}

fn asymptotic_at(flow: &RealFlow, orbit: &PeriodicOrbit, t: f64, order: usize) -> Result<(SingularityEstimate, State)> {
    let v = orbit.state_at(flow, t);
    let start = State::real(t, v);
    Ok((nearest_singularity_estimate(&taylor_jet(&start, order)?)?, start))
}

/// Every singularity that is locally nearest the orbit somewhere in one
/// period, sorted by `|Im t0|`.
pub fn locate_orbit_singularities(orbit: &PeriodicOrbit, cfg: &LocateConfig) -> Result<Vec<LocatedSingularity>> {
    let flow = RealFlow::default();
    let profile = radius_profile(&flow, orbit, cfg.scan_samples, cfg.scan_order)?;
    let n = profile.len();
    let minima: Vec<f64> = (0..n)
        .filter(|&k| profile[k].1 < profile[(k + n - 1) % n].1 && profile[k].1 <= profile[(k + 1) % n].1)
        .map(|k| profile[k].0)
        .collect();
    let mut found: Vec<LocatedSingularity> = Vec::new();
    for t in minima {
        // Re-expand straight below the first estimate, where the pair is closest.
        let (first, _) = asymptotic_at(&flow, orbit, t, cfg.jet_order)?;
        let (est, start) = asymptotic_at(&flow, orbit, first.t0.re, cfg.jet_order)?;
        let up = refine_singularity(&est, &start, &cfg.refine)?;
        let t0 = up.estimate.t0;
        if found.iter().any(|f| (f.refined.t0 - t0).norm() < 1e-6) {
            continue;
        }
        let down = refine_singularity(&est.conj(), &start, &cfg.refine)?;
        let divergence = check_divergence_bound(&up.trace, t0)?;
        found.push(LocatedSingularity {
            asymptotic: est,
            refined: up.estimate,
            divergence,
            conjugate_mismatch: down.estimate.t0.im.abs() - t0.im.abs(),
            approach: up.trace,
        });
    }
    if found.is_empty() {
        return Err(Error::NoConvergence("no singularity found along the orbit".into()));
    }
    found.sort_by(|a, b| a.refined.t0.im.abs().total_cmp(&b.refined.t0.im.abs()));
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_conjugate_pair_recovered() {
        // 1/((t-p)(t-conj p)) at t = 0, p = 0.3 + 0.2i.
        let p = Complex64::new(0.3, 0.2);
        let a: Vec<f64> = (0..60)
            .map(|n| {
                let w = (p.inv().powu(n + 1) - p.conj().inv().powu(n + 1)) / (p.conj() - p);
                -w.re
            })
            .collect();
        let (rho, theta, _) = conjugate_pair_fit(&a).unwrap();
        let got = Complex64::from_polar(rho, theta);
        assert!((got - p).norm() < 1e-8, "{got}");
    }

    #[test]
    fn leading_order_inverts_model() {
        let s = Complex64::new(1e-3, 2e-3);
        let z = (-0.2 + 17.0 / 9.0 * s) / (s * s);
        assert!((leading_order_offset(z, s * 1.1) - s).norm() < 1e-15);
    }
}
