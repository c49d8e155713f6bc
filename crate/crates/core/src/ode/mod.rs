//! Taylor-series integration of the Lorenz system in complex time.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::arith::{Arith, XComplex};

/// A point `(t, x, y, z)` of a solution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: Complex64,
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

impl State {
    pub fn new(t: Complex64, x: Complex64, y: Complex64, z: Complex64) -> Self {
        Self { t, x, y, z }
    }

    pub fn real(t: f64, v: [f64; 3]) -> Self {
        let c = |a: f64| Complex64::new(a, 0.0);
        Self::new(c(t), c(v[0]), c(v[1]), c(v[2]))
    }

    pub fn vars(&self) -> [Complex64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn with_vars(t: Complex64, v: [Complex64; 3]) -> Self {
        Self::new(t, v[0], v[1], v[2])
    }

    /// `|x| + |y| + |z|`.
    pub fn l1(&self) -> f64 {
        self.vars().iter().map(|v| v.norm()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.vars().iter().all(|v| v.is_finite())
    }
}

/// The Lorenz vector field.
pub fn lorenz_rhs(v: [Complex64; 3]) -> [Complex64; 3] {
    let [x, y, z] = v;
    [10.0 * (y - x), 28.0 * x - y - x * z, -8.0 / 3.0 * z + x * y]
}

/// Taylor coefficients of the Lorenz system from `v` through `order`.
pub(crate) fn jet_coeffs<T: Arith>(v: [T; 3], order: usize) -> Vec<[T; 3]> {
    let zero = v[0].zero_like();
    let mut c = Vec::with_capacity(order + 1);
    c.push(v);
    for n in 0..order {
        let (mut xz, mut xy) = (zero.clone(), zero.clone());
        for j in 0..=n {
            xz = xz.add(&c[j][0].mul(&c[n - j][2]));
            xy = xy.add(&c[j][0].mul(&c[n - j][1]));
        }
        let [x, y, z] = &c[n];
        let k = n as i64 + 1;
        let next =
            [y.sub(x).ratio(10, k), x.ratio(28, 1).sub(y).sub(&xz).ratio(1, k), z.ratio(-8, 3).add(&xy).ratio(1, k)];
        c.push(next);
    }
    c
}

pub(crate) fn horner<T: Arith>(c: &[[T; 3]], h: &T) -> [T; 3] {
    std::array::from_fn(|i| {
        let mut acc = c[c.len() - 1][i].clone();
        for k in (0..c.len() - 1).rev() {
            acc = acc.mul(h).add(&c[k][i]);
        }
        acc
    })
}

fn max_abs<T: Arith>(v: &[T; 3]) -> f64 {
    v.iter().map(|a| a.to_c64().norm()).fold(0.0, f64::max)
}

/// Root-test radius from the last two coefficients.
pub(crate) fn root_radius(norms: &[f64]) -> f64 {
    let n = norms.len() - 1;
    let r = |k: usize| if norms[k] > 0.0 { norms[k].powf(-1.0 / k as f64) } else { f64::INFINITY };
    r(n).min(r(n - 1))
}

/// Truncated Taylor expansion of the solution through a base point.
#[derive(Clone, Debug, Serialize)]
pub struct TaylorJet {
    pub base: State,
    pub order: usize,
    pub coeffs: Vec<[Complex64; 3]>,
}

/// Builds the jet by the Cauchy-product recurrences.
pub fn taylor_jet(s: &State, order: usize) -> Result<TaylorJet> {
    if order < 1 {
        return Err(Error::Precondition("jet order must be >= 1".into()));
    }
    Ok(TaylorJet { base: *s, order, coeffs: jet_coeffs(s.vars(), order) })
}

impl TaylorJet {
    fn norms(&self) -> Vec<f64> {
        self.coeffs.iter().map(max_abs).collect()
    }

    /// Radius inside which the jet is trusted.
    pub fn trust_radius(&self) -> f64 {
        root_radius(&self.norms())
    }

    /// Size of the last two retained terms at `h`.
    pub fn error_estimate(&self, h: Complex64) -> f64 {
        let n = self.order;
        let a = h.norm();
        max_abs(&self.coeffs[n - 1]) * a.powi(n as i32 - 1) + max_abs(&self.coeffs[n]) * a.powi(n as i32)
    }

    /// The jet evaluated at `base.t + h`, without step control.
    pub fn eval(&self, h: Complex64) -> [Complex64; 3] {
        horner(&self.coeffs, &h)
    }

    pub fn step(&self, h: Complex64) -> Result<State> {
        let radius = self.trust_radius();
        if h.norm() > radius {
            return Err(Error::StepRejected { h: h.norm(), radius });
        }
        Ok(State::with_vars(self.base.t + h, self.eval(h)))
    }

    /// `d/dt` of the jet at `base.t + h`.
    pub fn eval_derivative(&self, h: Complex64) -> [Complex64; 3] {
        let d: Vec<[Complex64; 3]> = (1..=self.order).map(|k| self.coeffs[k].map(|c| c * k as f64)).collect();
        horner(&d, &h)
    }
}

/// A polyline in complex time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathSpec {
    pub waypoints: Vec<Complex64>,
    pub tolerance: f64,
    pub max_step: f64,
    /// Discs `(center, radius)` the path must keep out of.
    #[serde(default)]
    pub avoid: Vec<(Complex64, f64)>,
}

fn segment_distance(a: Complex64, b: Complex64, p: Complex64) -> f64 {
    let d = b - a;
    let s = ((p - a) * d.conj()).re / d.norm_sqr();
    (a + d * s.clamp(0.0, 1.0) - p).norm()
}

impl PathSpec {
    pub fn new(waypoints: Vec<Complex64>, tolerance: f64, max_step: f64) -> Self {
        Self { waypoints, tolerance, max_step, avoid: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.waypoints.len() < 2 {
            return Err(Error::Precondition("path needs at least two waypoints".into()));
        }
        if !(self.tolerance > 0.0 && self.max_step > 0.0) {
            return Err(Error::Precondition("tolerance and max_step must be positive".into()));
        }
        for w in self.waypoints.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Precondition(format!("repeated waypoint {}", w[0])));
            }
            for &(c, r) in &self.avoid {
                if segment_distance(w[0], w[1], c) <= r {
                    return Err(Error::Precondition(format!("segment {} -> {} enters the disc at {c}", w[0], w[1])));
                }
            }
        }
        Ok(())
    }
}

/// Working precision and jet order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PrecisionConfig {
    pub mantissa_bits: usize,
    pub taylor_order: usize,
    /// Fraction of the trust radius used as the step.
    pub step_fraction: f64,
    /// Steps shorter than this mean a singularity is in the way.
    pub min_step: f64,
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        Self { mantissa_bits: 53, taylor_order: 25, step_fraction: 0.8, min_step: 1e-12 }
    }
}

impl PrecisionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.taylor_order < 4 {
            return Err(Error::Precondition(format!("taylor order must be >= 4, got {}", self.taylor_order)));
        }
        if self.mantissa_bits != 53 && self.mantissa_bits < 64 {
            return Err(Error::Precondition(format!(
                "mantissa bits must be 53 or an extended width >= 64, got {}",
                self.mantissa_bits
            )));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(Error::Precondition("step fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// One accepted step.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TracePoint {
    pub state: State,
    pub step: f64,
    pub err_est: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    /// The step size fell below the floor; `at` is the last accepted state.
    Diverged {
        at: State,
        reason: String,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct PathResult {
    pub end: State,
    pub outcome: Outcome,
    pub trace: Vec<TracePoint>,
}

impl PathResult {
    pub fn diverged(&self) -> bool {
        matches!(self.outcome, Outcome::Diverged { .. })
    }

    /// Trace as CSV: `Re t, Im t, Re x, Im x, Re y, Im y, Re z, Im z, step, err_est`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Domain(format!("csv: {e}"));
        out.write_record(["re_t", "im_t", "re_x", "im_x", "re_y", "im_y", "re_z", "im_z", "step", "err_est"])
            .map_err(io)?;
        for p in &self.trace {
            let s = p.state;
            let row = [s.t.re, s.t.im, s.x.re, s.x.im, s.y.re, s.y.im, s.z.re, s.z.im, p.step, p.err_est];
            out.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(io)?;
        }
        out.flush().map_err(|e| Error::Domain(format!("csv: {e}")))
    }
}

/// Step length at one point: `fraction × trust radius`, shrunk until the
/// last two terms are below `tol · max(1, |state|)` per unit step.
pub(crate) fn choose_step(norms: &[f64], fraction: f64, tol: f64) -> f64 {
    let n = norms.len() - 1;
    let scale = norms[0].max(1.0);
    let mut h = fraction * root_radius(norms);
    for k in [n - 1, n] {
        if norms[k] > 0.0 && k > 1 {
            h = h.min((tol * scale / norms[k]).powf(1.0 / (k - 1) as f64));
        }
    }
    h
}

fn integrate_generic<T: Arith>(start: &State, zero: &T, path: &PathSpec, cfg: &PrecisionConfig) -> Result<PathResult> {
    path.validate()?;
    cfg.validate()?;
    if (start.t - path.waypoints[0]).norm() > 1e-14 * (1.0 + start.t.norm()) {
        return Err(Error::Precondition("path must start at the state's time".into()));
    }
    let mut t = zero.lift(start.t);
    let mut v = start.vars().map(|c| zero.lift(c));
    let mut trace = vec![TracePoint { state: *start, step: 0.0, err_est: 0.0 }];
    let snapshot = |t: &T, v: &[T; 3]| State::with_vars(t.to_c64(), [v[0].to_c64(), v[1].to_c64(), v[2].to_c64()]);
    for w in path.waypoints.windows(2) {
        let target = zero.lift(w[1]);
        loop {
            let rem = target.sub(&t);
            let rem_c = rem.to_c64();
            let dist = rem_c.norm();
            if dist <= 1e-15 * (1.0 + w[1].norm()) {
                break;
            }
            let coeffs = jet_coeffs(v.clone(), cfg.taylor_order);
            let norms: Vec<f64> = coeffs.iter().map(max_abs).collect();
            let h_len = choose_step(&norms, cfg.step_fraction, path.tolerance).min(path.max_step);
            let last = snapshot(&t, &v);
            if !h_len.is_finite() || !last.is_finite() || (h_len < cfg.min_step && h_len < dist) {
                let reason = format!("step {h_len:.3e} below floor {:.1e} at t = {}", cfg.min_step, last.t);
                return Ok(PathResult { end: last, outcome: Outcome::Diverged { at: last, reason }, trace });
            }
            let (h, done) = if h_len >= dist {
                (rem, true)
            } else {
                (rem.mul(&zero.lift(Complex64::new(h_len / dist, 0.0))), false)
            };
            let hn = h.to_c64().norm();
            let err = norms[cfg.taylor_order - 1] * hn.powi(cfg.taylor_order as i32 - 1)
                + norms[cfg.taylor_order] * hn.powi(cfg.taylor_order as i32);
            v = horner(&coeffs, &h);
            t = if done { target.clone() } else { t.add(&h) };
            trace.push(TracePoint { state: snapshot(&t, &v), step: hn, err_est: err });
            if done {
                break;
            }
        }
    }
    let end = snapshot(&t, &v);
    Ok(PathResult { end, outcome: Outcome::Completed, trace })
}

/// Integrates along the polyline. Hitting the step floor is reported as
/// [`Outcome::Diverged`], not as an error.
pub fn integrate_path(start: &State, path: &PathSpec, cfg: &PrecisionConfig) -> Result<PathResult> {
    if cfg.mantissa_bits == 53 {
        integrate_generic(start, &Complex64::new(0.0, 0.0), path, cfg)
    } else {
        integrate_generic(start, &XComplex::from_c64(Complex64::new(0.0, 0.0), cfg.mantissa_bits), path, cfg)
    }
}

/// `dQ/dt` for `Q = x² + y² + z²` along real solutions.
pub fn q_rate(v: [f64; 3]) -> f64 {
    let [x, y, z] = v;
    2.0 * (-10.0 * x * x - y * y - 8.0 / 3.0 * z * z + 38.0 * x * y)
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    /// Largest `|dQ/dt| / Q` seen.
    pub max_ratio: f64,
    pub samples: usize,
    pub holds: bool,
}

/// Checks `|dQ/dt| ≤ 58 Q` at every real state given.
pub fn growth_check<'a>(states: impl IntoIterator<Item = &'a State>) -> GrowthReport {
    let mut max_ratio: f64 = 0.0;
    let mut samples = 0;
    let mut holds = true;
    for s in states {
        let v = [s.x.re, s.y.re, s.z.re];
        let q: f64 = v.iter().map(|a| a * a).sum();
        let rate = q_rate(v).abs();
        holds &= rate <= 58.0 * q * (1.0 + 1e-12);
        if q > 0.0 {
            max_ratio = max_ratio.max(rate / q);
        }
        samples += 1;
    }
    GrowthReport { max_ratio, samples, holds }
}
