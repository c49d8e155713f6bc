use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::log_sum_exp;

/// `ln x_m` for `m = 0 ..= M`, where `x_0..x_7` are seeds and
/// `x_m = 960 x_{m-1} + 896 x_{m-2} + 32 Σ_{j=1}^{m-1} x_{m-j-1} x_{j-1}`.
#[derive(Clone, Debug, Serialize)]
pub struct MajorantSequence {
    ln_values: Vec<f64>,
}

impl MajorantSequence {
    pub fn ln(&self, m: usize) -> f64 {
        self.ln_values[m]
    }

    pub fn len(&self) -> usize {
        self.ln_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_values.is_empty()
    }

    pub fn ln_values(&self) -> &[f64] {
        &self.ln_values
    }

    pub fn seed(&self) -> [f64; 8] {
        std::array::from_fn(|m| self.ln_values[m].exp())
    }
}

/// Runs the majorant recurrence in the log domain.
pub fn majorant_sequence(seed_ln: &[f64], max_m: usize) -> Result<MajorantSequence> {
    if seed_ln.len() != 8 {
        return Err(Error::Precondition(format!("need 8 seeds, got {}", seed_ln.len())));
    }
    if max_m < 8 {
        return Err(Error::Precondition(format!("need M >= 8, got {max_m}")));
    }
    if seed_ln.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("majorant seeds must be positive and finite".into()));
    }
    let (l960, l896, l32) = (960f64.ln(), 896f64.ln(), 32f64.ln());
    let mut ln = seed_ln.to_vec();
    let mut terms = Vec::with_capacity(max_m + 2);
    for m in 8..=max_m {
        terms.clear();
        terms.push(l960 + ln[m - 1]);
        terms.push(l896 + ln[m - 2]);
        for k in 0..=m - 2 {
            terms.push(l32 + ln[k] + ln[m - 2 - k]);
        }
        ln.push(log_sum_exp(&terms));
    }
    Ok(MajorantSequence { ln_values: ln })
}

/// `c_0..c_7` of the generating-function equation, from `x_0..x_7`.
pub fn seed_constants(x: &[f64; 8]) -> [f64; 8] {
    std::array::from_fn(|m| {
        let at = |k: i64| if k >= 0 { x[k as usize] } else { 0.0 };
        let conv: f64 = (0..m.saturating_sub(1)).map(|k| x[k] * x[m - 2 - k]).sum();
        x[m] - 960.0 * at(m as i64 - 1) - 896.0 * at(m as i64 - 2) - 32.0 * conv
    })
}

/// `Δ(Z) = (1 - 960Z - 896Z²)² - 128 Z² c(Z)`; `f` is analytic until `Δ` vanishes.
pub fn discriminant(c: &[f64; 8], z: f64) -> f64 {
    let lin = 1.0 - 960.0 * z - 896.0 * z * z;
    let cz = c.iter().rev().fold(0.0, |acc, ck| acc * z + ck);
    lin * lin - 128.0 * z * z * cz
}

/// `1/Z*` for the first positive zero `Z*` of the discriminant. The `x_m`
/// are positive, so the dominant singularity sits on the positive axis.
///
/// The discriminant typically grazes zero (two roots a hair apart), so a
/// sign-change scan alone misses it; local minima are refined as well.
pub fn discriminant_k2(c: &[f64; 8]) -> Result<f64> {
    let d = |z: f64| discriminant(c, z);
    let first_root = |mut lo: f64, mut hi: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if d(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        1.0 / (0.5 * (lo + hi))
    };
    let (mut zpp, mut zp) = (0.0, 1e-12);
    let mut z = zp * 1.001;
    while z < 1.0 {
        if d(z) <= 0.0 {
            return Ok(first_root(zp, z));
        }
        if d(zp) < d(zpp) && d(zp) <= d(z) {
            let (mut a, mut b) = (zpp, z);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..200 {
                let (x1, x2) = (b - g * (b - a), a + g * (b - a));
                if d(x1) < d(x2) {
                    b = x2;
                } else {
                    a = x1;
                }
            }
            let zmin = 0.5 * (a + b);
            if d(zmin) <= 0.0 {
                return Ok(first_root(zpp, zmin));
            }
        }
        zpp = zp;
        zp = z;
        z *= 1.001;
    }
    Err(Error::NoConvergence("discriminant has no zero in (0, 1)".into()))
}

/// Tail fit `ln x_m ≈ m ln K2 + s ln m + c + d/m + e/m²`, returning `(K2, s)`.
pub fn root_test_k2(maj: &MajorantSequence) -> Result<(f64, f64)> {
    let n = maj.len();
    if n < 100 {
        return Err(Error::Precondition(format!("root-test fit needs M >= 99, got {}", n - 1)));
    }
    let start = n / 2;
    let rows = n - start;
    let top = (n - 1) as f64;
    let mut a = DMatrix::<f64>::zeros(rows, 5);
    let mut b = DVector::<f64>::zeros(rows);
    for (i, m) in (start..n).enumerate() {
        let mf = m as f64;
        a[(i, 0)] = mf / top;
        a[(i, 1)] = mf.ln();
        a[(i, 2)] = 1.0;
        a[(i, 3)] = start as f64 / mf;
        a[(i, 4)] = (start as f64 / mf).powi(2);
        b[i] = maj.ln(m);
    }
    let sol = a.svd(true, true).solve(&b, 1e-14).map_err(|e| Error::NoConvergence(format!("root-test fit: {e}")))?;
    let (k2, s) = ((sol[0] / top).exp(), sol[1]);
    if !k2.is_finite() || k2 <= 0.0 {
        return Err(Error::NoConvergence(format!("root-test fit gave K2={k2}, s={s}")));
    }
    Ok((k2, s))
}

/// Both `K2` estimators side by side.
#[derive(Clone, Debug, Serialize)]
pub struct K2Estimate {
    pub root_test: f64,
    pub exponent: f64,
    pub discriminant: f64,
    pub rel_diff: f64,
    pub max_m: usize,
}

pub fn k2_estimate(maj: &MajorantSequence) -> Result<K2Estimate> {
    let (root_test, exponent) = root_test_k2(maj)?;
    let disc = discriminant_k2(&seed_constants(&maj.seed()))?;
    Ok(K2Estimate {
        root_test,
        exponent,
        discriminant: disc,
        rel_diff: (root_test - disc).abs() / disc,
        max_m: maj.len() - 1,
    })
}
