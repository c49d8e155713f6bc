//! Evaluation of truncated psi series and their Lorenz residual.
//!
//! With `τ = t - t0` and `u = log(bτ) + C`,
//!
//! ```text
//! x = Σ_{k≥-1} P_k(u) τ^k,   y = Σ_{k≥-2} Q_k(u) τ^k,   z = Σ_{k≥-2} R_k(u) τ^k
//! ```
//!
//! truncated at `k ≤ N`. The cut `{t0 - conj(b) p : p ≥ 0}` is where `bτ` is a
//! negative real.

pub(crate) mod arith;

use astro_float::Consts;
use num_complex::Complex64;
use serde::Serialize;

use self::arith::{Arith, XComplex};
use crate::bounds::ConvergenceEstimate;
use crate::error::{Error, Result};
use crate::exact::{GaussianRational, PsiPoly};
use crate::psi::dense::{DenseSeries, Scaled};
use crate::psi::{PsiSeries, SeriesFamily};

/// Default half-angle of the excluded sleeve around the cut.
pub const DEFAULT_SLEEVE: f64 = 1e-3;

/// Default truncation order.
pub const DEFAULT_ORDER: i64 = 30;

/// Which singular solution, and which branch of its logarithm.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchSpec {
    pub t0: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
    pub family: SeriesFamily,
    pub sleeve: f64,
}

/// `b = -i` below the real axis, `+i` otherwise, so the cut points away from it.
pub fn default_b(t0: Complex64) -> Complex64 {
    if t0.im < 0.0 {
        Complex64::new(0.0, -1.0)
    } else {
        Complex64::new(0.0, 1.0)
    }
}

impl BranchSpec {
    pub fn new(t0: Complex64, c: Complex64, d: Complex64, family: SeriesFamily) -> Self {
        Self { t0, b: default_b(t0), c, d, family, sleeve: DEFAULT_SLEEVE }
    }

    pub fn with_b(mut self, b: Complex64) -> Result<Self> {
        if (b.norm() - 1.0).abs() > 1e-14 {
            return Err(Error::Domain(format!("|b| must be 1, got {}", b.norm())));
        }
        self.b = b;
        Ok(self)
    }

    pub fn with_sleeve(mut self, sleeve: f64) -> Self {
        self.sleeve = sleeve;
        self
    }

    pub fn point(&self, t: Complex64) -> EvalPoint {
        let w = self.b * (t - self.t0);
        let eta = w.ln();
        let in_domain = w.norm() > 0.0 && eta.im.abs() < std::f64::consts::PI - self.sleeve;
        EvalPoint { t, eta, in_domain }
    }

    fn checked(&self, t: Complex64) -> Result<EvalPoint> {
        let p = self.point(t);
        if t == self.t0 {
            return Err(Error::Domain("t = t0".into()));
        }
        if !p.in_domain {
            return Err(Error::Domain(format!("t = {t} lies within {} rad of the branch cut", self.sleeve)));
        }
        Ok(p)
    }

    /// The same singularity seen from the other family with `(x, y) → (-x, -y)`.
    pub fn flipped(&self) -> Self {
        Self { family: self.family.flipped(), ..self.clone() }
    }
}

/// A sample point with its principal `η`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvalPoint {
    pub t: Complex64,
    pub eta: Complex64,
    pub in_domain: bool,
}

/// Lowest power of `τ` in x, y, z.
const LO: [i64; 3] = [-1, -2, -2];

/// Coefficient vectors in `u`, by component and power of `τ` (from `LO`).
#[derive(Clone, Debug)]
struct Coeffs<T> {
    comps: [Vec<Vec<T>>; 3],
}

impl<T> Coeffs<T> {
    /// Highest `N` such that every component has its `τ^N` coefficient.
    fn max_order(&self) -> i64 {
        (0..3).map(|c| self.comps[c].len() as i64 + LO[c] - 1).min().unwrap_or(-3)
    }
}

fn horner2<T: Arith>(coeffs: &[T], u: &T, zero: &T) -> (T, T) {
    let (mut p, mut dp) = (zero.clone(), zero.clone());
    for c in coeffs.iter().rev() {
        dp = dp.mul(u).add(&p);
        p = p.mul(u).add(c);
    }
    (p, dp)
}

/// Values and `d/dt` of the three truncated sums.
fn sums<T: Arith>(co: &Coeffs<T>, tau: &T, u: &T, n: i64) -> ([T; 3], [T; 3]) {
    let zero = tau.zero_like();
    let inv = tau.recip();
    let mut vals: [T; 3] = std::array::from_fn(|_| zero.clone());
    let mut ders: [T; 3] = std::array::from_fn(|_| zero.clone());
    for c in 0..3 {
        // τ^LO and τ^(LO-1)
        let mut pw = if LO[c] == -1 { inv.clone() } else { inv.mul(&inv) };
        let mut pwm1 = pw.mul(&inv);
        for k in LO[c]..=n {
            let (p, dp) = horner2(&co.comps[c][(k - LO[c]) as usize], u, &zero);
            vals[c] = vals[c].add(&p.mul(&pw));
            ders[c] = ders[c].add(&dp.add(&p.ratio(k, 1)).mul(&pwm1));
            pwm1 = pw.clone();
            pw = pw.mul(tau);
        }
    }
    (vals, ders)
}

fn lorenz_residual<T: Arith>(v: &[T; 3], d: &[T; 3]) -> [T; 3] {
    let [x, y, z] = v;
    [
        d[0].sub(&y.sub(x).ratio(10, 1)),
        d[1].sub(&x.ratio(28, 1)).add(y).add(&x.mul(z)),
        d[2].add(&z.ratio(8, 3)).sub(&x.mul(y)),
    ]
}

fn check_compat(series_family: SeriesFamily, numeric_d: Option<Complex64>, spec: &BranchSpec) -> Result<()> {
    if series_family != spec.family {
        return Err(Error::Precondition("series family differs from branch spec".into()));
    }
    if let Some(d) = numeric_d {
        if (d - spec.d).norm() > 1e-15 * (1.0 + d.norm()) {
            return Err(Error::Precondition(format!("series was generated with D = {d}, spec has {}", spec.d)));
        }
    }
    Ok(())
}

/// Binary64 evaluator with `D` substituted.
#[derive(Clone, Debug)]
pub struct Evaluator {
    pub spec: BranchSpec,
    co: Coeffs<Complex64>,
}

impl Evaluator {
    pub fn from_series(series: &PsiSeries, spec: &BranchSpec) -> Result<Self> {
        check_compat(series.family, series.numeric_d().map(GaussianRational::to_complex), spec)?;
        let mut comps: [Vec<Vec<Complex64>>; 3] = Default::default();
        for t in series.triples() {
            for (c, p) in t.components().into_iter().enumerate() {
                comps[c].push(p.dense_by_u(spec.d));
            }
        }
        Ok(Self { spec: spec.clone(), co: Coeffs { comps } })
    }

    /// From the binary64 engine; overflows (and errors) once `|X_m|` leaves binary64 range.
    pub fn from_dense(series: &DenseSeries<Scaled>, spec: &BranchSpec) -> Result<Self> {
        let d = Complex64::new(series.d_value[0], series.d_value[1]);
        check_compat(series.family, Some(d), spec)?;
        let mut comps: [Vec<Vec<Complex64>>; 3] = Default::default();
        for m in -2..=series.max_m() {
            for (c, comp) in comps.iter_mut().enumerate() {
                let v = series.component(m, c).expect("rung in range");
                if v.iter().any(|z| !z.is_finite()) {
                    return Err(Error::Domain(format!("coefficients of X_{m} overflow binary64")));
                }
                comp.push(v);
            }
        }
        Ok(Self { spec: spec.clone(), co: Coeffs { comps } })
    }

    pub fn max_order(&self) -> i64 {
        self.co.max_order()
    }

    fn check_order(&self, n: i64) -> Result<()> {
        if n < -1 || n > self.max_order() {
            return Err(Error::Precondition(format!("order N={n} outside -1..={}", self.max_order())));
        }
        Ok(())
    }

    /// `(x, y, z)` at `t` on the principal branch.
    pub fn eval_t(&self, t: Complex64, n: i64) -> Result<[Complex64; 3]> {
        self.check_order(n)?;
        let p = self.spec.checked(t)?;
        Ok(sums(&self.co, &(t - self.spec.t0), &(p.eta + self.spec.c), n).0)
    }

    /// `(x, y, z)` at a given `η` on any branch, with `τ = e^η / b`.
    pub fn eval_eta(&self, eta: Complex64, n: i64) -> Result<[Complex64; 3]> {
        self.check_order(n)?;
        let tau = eta.exp() * self.spec.b.conj();
        Ok(sums(&self.co, &tau, &(eta + self.spec.c), n).0)
    }

    /// Residuals of the three Lorenz equations for the truncated series.
    pub fn ode_residual(&self, t: Complex64, n: i64) -> Result<[Complex64; 3]> {
        self.check_order(n)?;
        let p = self.spec.checked(t)?;
        let (v, d) = sums(&self.co, &(t - self.spec.t0), &(p.eta + self.spec.c), n);
        Ok(lorenz_residual(&v, &d))
    }
}

/// Extended-precision evaluator over `astro-float`.
pub struct XEvaluator {
    pub spec: BranchSpec,
    pub bits: usize,
    co: Coeffs<XComplex>,
    cc: Consts,
}

fn poly_to_x(p: &PsiPoly, d: &XComplex, bits: usize, cc: &mut Consts) -> Vec<XComplex> {
    let zero = d.zero_like();
    let mut out = vec![zero.clone(); p.deg_u().map_or(0, |k| k as usize + 1)];
    for (u, dp, c) in p.terms() {
        let mut term = XComplex::from_gaussian(c, bits, cc);
        for _ in 0..dp {
            term = term.mul(d);
        }
        out[u as usize] = out[u as usize].add(&term);
    }
    out
}

impl XEvaluator {
    pub fn from_series(series: &PsiSeries, spec: &BranchSpec, bits: usize) -> Result<Self> {
        if bits < 64 {
            return Err(Error::Precondition(format!("extended precision needs >= 64 bits, got {bits}")));
        }
        check_compat(series.family, series.numeric_d().map(GaussianRational::to_complex), spec)?;
        let mut cc = Consts::new().map_err(|e| Error::Domain(format!("astro-float constants: {e:?}")))?;
        let d = XComplex::from_c64(spec.d, bits);
        let mut comps: [Vec<Vec<XComplex>>; 3] = Default::default();
        for t in series.triples() {
            for (c, p) in t.components().into_iter().enumerate() {
                comps[c].push(poly_to_x(p, &d, bits, &mut cc));
            }
        }
        Ok(Self { spec: spec.clone(), bits, co: Coeffs { comps }, cc })
    }

    fn tau_u(&mut self, t: Complex64, n: i64) -> Result<(XComplex, XComplex)> {
        if n < -1 || n > self.co.max_order() {
            return Err(Error::Precondition(format!("order N={n} outside -1..={}", self.co.max_order())));
        }
        self.spec.checked(t)?;
        let p = self.bits;
        let tau = XComplex::from_c64(t, p).sub(&XComplex::from_c64(self.spec.t0, p));
        let eta = XComplex::from_c64(self.spec.b, p).mul(&tau).ln(&mut self.cc);
        Ok((tau, eta.add(&XComplex::from_c64(self.spec.c, p))))
    }

    pub fn eval_t(&mut self, t: Complex64, n: i64) -> Result<[Complex64; 3]> {
        let (tau, u) = self.tau_u(t, n)?;
        Ok(sums(&self.co, &tau, &u, n).0.map(|v| v.to_c64()))
    }

    pub fn ode_residual(&mut self, t: Complex64, n: i64) -> Result<[Complex64; 3]> {
        let (tau, u) = self.tau_u(t, n)?;
        let (v, d) = sums(&self.co, &tau, &u, n);
        Ok(lorenz_residual(&v, &d).map(|r| r.to_c64()))
    }
}

/// `sqrt(|r1|² + |r2|² + |r3|²)`.
pub fn residual_norm(r: &[Complex64; 3]) -> f64 {
    r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `K1 Σ_{m ≥ m0} L^{⌊(m+2)/2⌋} q^m` in closed form (`ρ = L q² < 1`).
fn log_geometric_tail(k1: f64, q: f64, l: f64, m0: i64) -> f64 {
    let rho = l * q * q;
    let m0 = m0.max(-2);
    let half = |m: i64| ((m + 2).div_euclid(2)) as i32;
    let mut total = 0.0;
    let mut j0 = m0.div_euclid(2);
    if m0.rem_euclid(2) == 1 {
        total += l.powi(half(m0)) * q.powi(m0 as i32);
        j0 += 1;
    }
    // Pair (2j, 2j+1) contributes L^{j+1} q^{2j} (1 + q).
    total += l * (1.0 + q) * rho.powi(j0 as i32) / (1.0 - rho);
    k1 * total
}

/// Bound on the dropped terms of all three sums at truncation `N`, from
/// `|X_m| ≤ K1 K2^m` and `|P(u)| ≤ |P| max(1, |u|)^deg`.
pub fn tail_bound(est: &ConvergenceEstimate, spec: &BranchSpec, t: Complex64, n: i64) -> Result<f64> {
    let tau = t - spec.t0;
    if tau.norm() >= est.r {
        return Err(Error::Domain(format!("|t - t0| = {} is not inside r = {}", tau.norm(), est.r)));
    }
    let p = spec.checked(t)?;
    let l = (p.eta + spec.c).norm().max(1.0);
    let q = est.k2 * tau.norm();
    if l * q * q >= 1.0 {
        return Err(Error::Domain("tail majorant does not converge here".into()));
    }
    // y and z drop rungs m > N; x drops P_{m+1} for m ≥ N, one extra factor of τ.
    let yz = log_geometric_tail(est.k1, q, l, n + 1);
    let x = tau.norm() * log_geometric_tail(est.k1, q, l, n);
    Ok(yz.max(x))
}
