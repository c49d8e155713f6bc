//! Coefficient norms, the majorant recurrence, and convergence radii.
//!
//! Norms can exceed the binary64 range by `m = 200`, so everything here is
//! carried as natural logarithms.

mod majorant;

pub use majorant::{
    discriminant, discriminant_k2, k2_estimate, majorant_sequence, root_test_k2, seed_constants, K2Estimate,
    MajorantSequence,
};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{log_sum_exp, GaussianRational, PsiPoly, Rational};
use crate::psi::dense::{DenseSeries, Scaled};
use crate::psi::{eigenvectors, solve_scalar_poly_ode, PsiSeries, SeriesFamily};

/// `ln |X_m|` for `m = -2 ..= M` at a fixed numeric `D`.
#[derive(Clone, Debug, Serialize)]
pub struct NormSequence {
    pub d_value: [f64; 2],
    ln_values: Vec<f64>,
}

impl NormSequence {
    pub fn max_m(&self) -> i64 {
        self.ln_values.len() as i64 - 3
    }

    pub fn ln(&self, m: i64) -> f64 {
        self.ln_values[(m + 2) as usize]
    }

    /// `|X_m|` in binary64; infinite once it overflows.
    pub fn value(&self, m: i64) -> f64 {
        self.ln(m).exp()
    }

    /// `ln |X_0|, ..., ln |X_M|`.
    pub fn ln_from_zero(&self) -> &[f64] {
        &self.ln_values[2..]
    }
}

fn d_for(series: &PsiSeries, d_value: Option<&GaussianRational>) -> Result<Option<GaussianRational>> {
    match (series.numeric_d(), d_value) {
        (Some(_), Some(_)) => Err(Error::Precondition("series already has a numeric D".into())),
        (Some(_), None) => Ok(None),
        (None, Some(d)) => Ok(Some(d.clone())),
        (None, None) if series.max_m < 2 => Ok(None),
        (None, None) => Err(Error::SymbolicD),
    }
}

fn d_pair(series: &PsiSeries, d_value: Option<&GaussianRational>) -> [f64; 2] {
    let d = d_value.or(series.numeric_d()).map(|d| d.to_complex()).unwrap_or_default();
    [d.re, d.im]
}

/// `|X_m| = max(|P_{m+1}|, |Q_m|, |R_m|)` for every generated rung.
pub fn norm_sequence(series: &PsiSeries, d_value: Option<&GaussianRational>) -> Result<NormSequence> {
    let d = d_for(series, d_value)?;
    let ln_values = series.triples().iter().map(|t| t.ln_norm(d.as_ref())).collect::<Result<Vec<_>>>()?;
    Ok(NormSequence { d_value: d_pair(series, d_value), ln_values })
}

/// Where a sweep gets `ln |X_m|` and `ln |F_m|` from.
pub trait NormSource {
    fn max_m(&self) -> i64;
    fn ln_x(&self, m: i64) -> Result<f64>;
    fn ln_f(&self, m: i64) -> Result<f64>;
    fn d_value(&self) -> [f64; 2];
}

/// Norms of an exact series, with `D` substituted exactly.
pub struct ExactNorms<'a> {
    series: &'a PsiSeries,
    d: Option<GaussianRational>,
    norms: NormSequence,
}

impl<'a> ExactNorms<'a> {
    pub fn new(series: &'a PsiSeries, d_value: Option<&GaussianRational>) -> Result<Self> {
        let d = d_for(series, d_value)?;
        let norms = norm_sequence(series, d.as_ref())?;
        Ok(Self { series, d, norms })
    }
}

impl NormSource for ExactNorms<'_> {
    fn max_m(&self) -> i64 {
        self.series.max_m
    }
    fn ln_x(&self, m: i64) -> Result<f64> {
        if m < -2 || m > self.series.max_m {
            return Err(Error::MissingHistory { needed: m, have: self.series.max_m });
        }
        Ok(self.norms.ln(m))
    }
    fn ln_f(&self, m: i64) -> Result<f64> {
        let f = self.series.forcing(m).ok_or(Error::MissingHistory { needed: m, have: self.series.max_m })?;
        let mut best = f64::NEG_INFINITY;
        for p in f {
            best = best.max(p.ln_coeff_norm(self.d.as_ref())?);
        }
        Ok(best)
    }
    fn d_value(&self) -> [f64; 2] {
        self.norms.d_value
    }
}

impl NormSource for DenseSeries<Scaled> {
    fn max_m(&self) -> i64 {
        DenseSeries::max_m(self)
    }
    fn ln_x(&self, m: i64) -> Result<f64> {
        self.ln_norm(m).ok_or(Error::MissingHistory { needed: m, have: DenseSeries::max_m(self) })
    }
    fn ln_f(&self, m: i64) -> Result<f64> {
        self.ln_forcing_norm(m).ok_or(Error::MissingHistory { needed: m, have: DenseSeries::max_m(self) })
    }
    fn d_value(&self) -> [f64; 2] {
        self.d_value
    }
}

/// One side-by-side inequality check, in logs.
#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub m: i64,
    pub ln_lhs: f64,
    pub ln_rhs: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn new(m: i64, ln_lhs: f64, ln_rhs: f64) -> Self {
        Self { m, ln_lhs, ln_rhs, holds: ln_lhs <= ln_rhs + REL_SLACK.ln_1p() }
    }

    /// `ln(rhs/lhs)`; positive when the bound holds with room.
    pub fn ln_margin(&self) -> f64 {
        self.ln_rhs - self.ln_lhs
    }
}

const REL_SLACK: f64 = 1e-12;

/// `|F_m| ≤ 30|X_{m-1}| + 28|X_{m-2}| + Σ_{j=1}^{m-1} |X_{m-j-1}||X_{j-1}|`.
pub fn check_f_bound(series: &PsiSeries, m: i64, d_value: Option<&GaussianRational>) -> Result<BoundCheck> {
    f_bound(&ExactNorms::new(series, d_value)?, m)
}

/// [`check_f_bound`] against any norm source.
pub fn f_bound(src: &impl NormSource, m: i64) -> Result<BoundCheck> {
    if m < 3 {
        return Err(Error::Precondition(format!("F-bound needs m >= 3, got {m}")));
    }
    let mut terms = vec![30f64.ln() + src.ln_x(m - 1)?, 28f64.ln() + src.ln_x(m - 2)?];
    for j in 1..m {
        terms.push(src.ln_x(m - j - 1)? + src.ln_x(j - 1)?);
    }
    Ok(BoundCheck::new(m, src.ln_f(m)?, log_sum_exp(&terms)))
}

/// `|X_m| ≤ 192 |F_m| / (m-2)` for `m ≥ 8`.
pub fn check_x_bound(series: &PsiSeries, m: i64, d_value: Option<&GaussianRational>) -> Result<BoundCheck> {
    x_bound(&ExactNorms::new(series, d_value)?, m)
}

pub fn x_bound(src: &impl NormSource, m: i64) -> Result<BoundCheck> {
    if m < 8 {
        return Err(Error::Precondition(format!("X-bound needs m >= 8, got {m}")));
    }
    let rhs = 192f64.ln() + src.ln_f(m)? - ((m - 2) as f64).ln();
    Ok(BoundCheck::new(m, src.ln_x(m)?, rhs))
}

/// `‖V‖_∞ ‖V⁻¹‖_∞` for the eigenvector matrix, exactly.
pub fn eigenvector_condition() -> Result<Rational> {
    let v = eigenvectors(SeriesFamily::Plus);
    let vinv = v.inverse()?;
    match (v.inf_norm_exact(), vinv.inf_norm_exact()) {
        (Some(a), Some(b)) => Ok(a * b),
        _ => Err(Error::Domain("eigenvector entries are not axis-aligned".into())),
    }
}

/// Outcome of the scalar-solve norm bound.
#[derive(Clone, Debug, Serialize)]
pub struct ScalarBound {
    pub norm_xi: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `|ξ| ≤ (1/|α|)(a/(a-1))|f|` for the polynomial solution of `ξ' = αξ + f`.
pub fn scalar_bound_check(alpha: &GaussianRational, f: &PsiPoly, a: f64) -> Result<ScalarBound> {
    let n = f.deg_u().unwrap_or(0) as f64;
    let abs_alpha = alpha.abs_f64();
    if a <= 1.0 || abs_alpha <= 1.0 || abs_alpha < a * (n + 0.5) {
        return Err(Error::Precondition(format!(
            "need a > 1 and |alpha| >= a(n+1/2): a={a}, |alpha|={abs_alpha}, n={n}"
        )));
    }
    let xi = solve_scalar_poly_ode(alpha, f, false)?;
    let norm_xi = xi.coeff_norm(None)?;
    let bound = f.coeff_norm(None)? / abs_alpha * a / (a - 1.0);
    Ok(ScalarBound { norm_xi, bound, holds: norm_xi <= bound * (1.0 + REL_SLACK) })
}

/// One row of a bounds sweep. Magnitudes are natural logs.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub m: i64,
    pub ln_norm_x: f64,
    pub ln_majorant: f64,
    pub ln_f: Option<f64>,
    pub ln_f_bound: Option<f64>,
    pub ln_x_bound: Option<f64>,
    pub f_holds: Option<bool>,
    pub x_holds: Option<bool>,
    pub dominated: bool,
}

/// Norm-bound sweeps plus majorant dominance for an exact series.
pub fn sweep(series: &PsiSeries, d_value: Option<&GaussianRational>) -> Result<Vec<SweepRow>> {
    sweep_from(&ExactNorms::new(series, d_value)?)
}

/// Norm-bound sweeps plus majorant dominance for `m = 0 ..= src.max_m()`.
pub fn sweep_from(src: &impl NormSource) -> Result<Vec<SweepRow>> {
    let max_m = src.max_m();
    if max_m < 7 {
        return Err(Error::Precondition("sweep needs coefficients through m = 7".into()));
    }
    let seed = (0..8).map(|m| src.ln_x(m)).collect::<Result<Vec<_>>>()?;
    let maj = majorant_sequence(&seed, max_m.max(8) as usize)?;
    let mut rows = Vec::new();
    for m in 0..=max_m {
        let fb = if m >= 3 { Some(f_bound(src, m)?) } else { None };
        let xb = if m >= 8 { Some(x_bound(src, m)?) } else { None };
        let ln_x = src.ln_x(m)?;
        let ln_maj = maj.ln(m as usize);
        rows.push(SweepRow {
            m,
            ln_norm_x: ln_x,
            ln_majorant: ln_maj,
            ln_f: fb.as_ref().map(|b| b.ln_lhs),
            ln_f_bound: fb.as_ref().map(|b| b.ln_rhs),
            ln_x_bound: xb.as_ref().map(|b| b.ln_rhs),
            f_holds: fb.map(|b| b.holds),
            x_holds: xb.map(|b| b.holds),
            dominated: ln_x <= ln_maj + REL_SLACK.ln_1p(),
        });
    }
    Ok(rows)
}

/// How `K2` was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum K2Method {
    RootTest,
    Discriminant,
}

/// Constants of `|X_m| < K1 K2^m` and a radius satisfying both conditions
/// `r < 1/K2` and `r(|log r| + π + |C|) < 1/K2`.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceEstimate {
    pub k2: f64,
    pub k1: f64,
    pub r: f64,
    pub c_used: [f64; 2],
    pub d_used: [f64; 2],
    pub method: K2Method,
}

impl ConvergenceEstimate {
    /// Builds the estimate; `K1` is the smallest constant covering the
    /// majorant over its computed range, with 1% headroom.
    pub fn new(maj: &MajorantSequence, k2: f64, method: K2Method, c: Complex64, d: Complex64) -> Self {
        let lk = k2.ln();
        let ln_k1 = (0..maj.len()).map(|m| maj.ln(m) - m as f64 * lk).fold(f64::NEG_INFINITY, f64::max);
        Self {
            k2,
            k1: (ln_k1 + 0.01f64.ln_1p()).exp(),
            r: radius_estimate(k2, c),
            c_used: [c.re, c.im],
            d_used: [d.re, d.im],
            method,
        }
    }

    pub fn c(&self) -> Complex64 {
        Complex64::new(self.c_used[0], self.c_used[1])
    }
}

const SAFETY: f64 = 0.99;

/// Largest `r` with `r < 1/K2` and `r(|log r| + a) ≤ 1/K2`, times 0.99.
pub fn radius_for_offset(k2: f64, a: f64) -> f64 {
    let target = 1.0 / k2;
    let g = |r: f64| r * (r.ln().abs() + a);
    // g increases on (0, e^{a-1}); a ≥ π keeps that above 1.
    let mut hi = target.min((a - 1.0).exp()).min(1.0);
    if g(hi) <= target {
        return hi * SAFETY;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo * SAFETY
}

/// Radius for the principal branch at a given `C`.
pub fn radius_estimate(k2: f64, c: Complex64) -> f64 {
    radius_for_offset(k2, std::f64::consts::PI + c.norm())
}

/// Radius after crossing the cut `m` times (`C → C + 2πim`, bounded by `|C| + 2π|m|`).
pub fn branch_radius(k2: f64, c: Complex64, m: i64) -> f64 {
    radius_for_offset(k2, std::f64::consts::PI * (1.0 + 2.0 * m.unsigned_abs() as f64) + c.norm())
}

/// The asymptotic branch radius `1/(2π|m| K2)`.
pub fn branch_radius_asymptotic(k2: f64, m: i64) -> f64 {
    1.0 / (2.0 * std::f64::consts::PI * m.unsigned_abs() as f64 * k2)
}

/// Whether `r` satisfies both radius conditions strictly.
pub fn radius_conditions_hold(k2: f64, c: Complex64, r: f64) -> bool {
    r > 0.0 && r < 1.0 / k2 && r * (r.ln().abs() + std::f64::consts::PI + c.norm()) < 1.0 / k2
}

/// One semi-infinite rectangle `{Re η ≤ log r_m, -π+2πm < Im η ≤ π+2πm}`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct EtaRect {
    pub branch: i64,
    pub re_max: f64,
    pub im_lo: f64,
    pub im_hi: f64,
}

/// The estimated domain of convergence in the `η` plane.
pub fn eta_domain(k2: f64, c: Complex64, branches: std::ops::RangeInclusive<i64>) -> Vec<EtaRect> {
    use std::f64::consts::PI;
    branches
        .map(|m| EtaRect {
            branch: m,
            re_max: branch_radius(k2, c, m).ln(),
            im_lo: -PI + 2.0 * PI * m as f64,
            im_hi: PI + 2.0 * PI * m as f64,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psi::DMode;

    #[test]
    fn condition_number_is_sixteen() {
        assert_eq!(eigenvector_condition().unwrap(), Rational::from_integer(16.into()));
    }

    #[test]
    fn x0_norm() {
        let s = PsiSeries::generate(0, SeriesFamily::Plus, DMode::Symbolic).unwrap();
        let n = norm_sequence(&s, None).unwrap();
        assert!((n.value(-1) - 71.0 / 9.0).abs() < 1e-12);
        assert!((n.value(0) - 9880.0 / 81.0).abs() < 1e-9);
    }

    #[test]
    fn radius_monotone_in_c() {
        let r0 = radius_estimate(500.0, Complex64::new(0.0, 0.0));
        let r1 = radius_estimate(500.0, Complex64::new(0.0, 2.0 * std::f64::consts::PI));
        assert!(r1 < r0);
        assert!(radius_conditions_hold(500.0, Complex64::new(0.0, 0.0), r0));
    }

    #[test]
    fn x_bound_precondition() {
        let s = PsiSeries::generate(8, SeriesFamily::Plus, DMode::numeric(0, 0)).unwrap();
        assert!(matches!(check_x_bound(&s, 7, None), Err(Error::Precondition(_))));
        assert!(check_x_bound(&s, 8, None).unwrap().holds);
    }
}
