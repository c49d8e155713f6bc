//! Psi-series coefficients of the Lorenz system.
//!
//! The singular solution near `t0` is
//!
//! ```text
//! x = Σ_{m≥-1} P_m(u) (t-t0)^m,   y = Σ_{m≥-2} Q_m(u) (t-t0)^m,   z = Σ_{m≥-2} R_m(u) (t-t0)^m
//! ```
//!
//! with `u = log(b(t-t0)) + C`. Coefficients are stored by rung:
//! `X_m = (P_{m+1}, Q_m, R_m)` for `m = -2, -1, 0, …`, and each rung with
//! `m ≥ 0` solves `X_m' = A_m X_m + F_m` exactly.

pub mod dense;
mod latex;
mod recursion;
pub mod table1;

pub use latex::latex_table;
pub use recursion::{
    build_a, build_a_for, build_f, eigenvalues, eigenvectors, leading_coefficients, m2_top_load, recursion_residual,
    solve_scalar_poly_ode, step_closed_form, step_general, step_m0, step_m2, zero_eigen_load,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{GaussianRational, PsiPoly};

/// The two formal solutions, related by `(x, y, z) → (-x, -y, z)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesFamily {
    Plus,
    Minus,
}

impl SeriesFamily {
    pub fn sign(self) -> i64 {
        match self {
            SeriesFamily::Plus => 1,
            SeriesFamily::Minus => -1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            SeriesFamily::Plus => SeriesFamily::Minus,
            SeriesFamily::Minus => SeriesFamily::Plus,
        }
    }
}

impl std::str::FromStr for SeriesFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(SeriesFamily::Plus),
            "minus" | "-" => Ok(SeriesFamily::Minus),
            _ => Err(Error::Parse(format!("family must be plus or minus, got {s:?}"))),
        }
    }
}

/// Whether `D` stays a polynomial indeterminate or is fixed to an exact value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DMode {
    Symbolic,
    Numeric(GaussianRational),
}

impl DMode {
    pub fn numeric(re: i64, im: i64) -> Self {
        DMode::Numeric(GaussianRational::new(crate::exact::rat_int(re), crate::exact::rat_int(im)))
    }
}

/// One rung: `(P_{m+1}, Q_m, R_m)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoeffTriple {
    pub m: i64,
    #[serde(rename = "P")]
    pub p: PsiPoly,
    #[serde(rename = "Q")]
    pub q: PsiPoly,
    #[serde(rename = "R")]
    pub r: PsiPoly,
}

impl CoeffTriple {
    pub(crate) fn from_array(m: i64, [p, q, r]: [PsiPoly; 3]) -> Self {
        Self { m, p, q, r }
    }

    pub fn components(&self) -> [&PsiPoly; 3] {
        [&self.p, &self.q, &self.r]
    }

    /// Largest `u`-degree among the three components.
    pub fn deg_u(&self) -> Option<u32> {
        self.components().iter().filter_map(|p| p.deg_u()).max()
    }

    pub fn deg_d(&self) -> Option<u32> {
        self.components().iter().filter_map(|p| p.deg_d()).max()
    }

    /// `|X_m| = max(|P_{m+1}|, |Q_m|, |R_m|)` with `D` substituted.
    pub fn norm(&self, dval: Option<num_complex::Complex64>) -> Result<f64> {
        let mut best: f64 = 0.0;
        for p in self.components() {
            best = best.max(p.coeff_norm(dval)?);
        }
        Ok(best)
    }

    /// `ln |X_m|`, safe when `|X_m|` overflows binary64.
    pub fn ln_norm(&self, dval: Option<&GaussianRational>) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for p in self.components() {
            best = best.max(p.ln_coeff_norm(dval)?);
        }
        Ok(best)
    }

    /// The same rung in the other family.
    pub fn flipped(&self) -> Self {
        Self { m: self.m, p: -&self.p, q: -&self.q, r: self.r.clone() }
    }
}

/// Default ceiling for symbolic-`D` generation.
pub const DEFAULT_SYMBOLIC_CAP: i64 = 60;

/// Generated coefficients for `m = -2 ..= max_m`.
#[derive(Clone, Debug)]
pub struct PsiSeries {
    pub family: SeriesFamily,
    pub max_m: i64,
    pub d_mode: DMode,
    coeffs: Vec<CoeffTriple>,
    forcing: Vec<[PsiPoly; 3]>,
}

/// Per-rung degree information.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DegreeRow {
    pub m: i64,
    pub deg_p: Option<u32>,
    pub deg_q: Option<u32>,
    pub deg_r: Option<u32>,
    pub deg_d: Option<u32>,
    pub bound: u32,
}

impl DegreeRow {
    pub fn max_deg(&self) -> u32 {
        [self.deg_p, self.deg_q, self.deg_r].into_iter().flatten().max().unwrap_or(0)
    }

    pub fn within_bound(&self) -> bool {
        self.max_deg() <= self.bound
    }

    pub fn attains_bound(&self) -> bool {
        self.max_deg() == self.bound
    }
}

/// `⌊(m+2)/2⌋`.
pub fn degree_bound(m: i64) -> u32 {
    ((m + 2) / 2) as u32
}

impl PsiSeries {
    /// Coefficients through `max_m`, checking each rung's residual exactly.
    pub fn generate(max_m: i64, family: SeriesFamily, d_mode: DMode) -> Result<Self> {
        Self::generate_capped(max_m, family, d_mode, DEFAULT_SYMBOLIC_CAP)
    }

    pub fn generate_capped(max_m: i64, family: SeriesFamily, d_mode: DMode, symbolic_cap: i64) -> Result<Self> {
        if max_m < -2 {
            return Err(Error::Precondition(format!("max_m must be >= -2, got {max_m}")));
        }
        if d_mode == DMode::Symbolic && max_m > symbolic_cap {
            return Err(Error::SymbolicCapExceeded { requested: max_m, cap: symbolic_cap });
        }
        let mut rec = recursion::Recursion::new(family, d_mode.clone());
        while rec.next_m() <= max_m {
            rec.advance()?;
        }
        let mut coeffs = rec.coeffs;
        coeffs.truncate((max_m + 3) as usize);
        Ok(Self { family, max_m, d_mode, coeffs, forcing: rec.forcing })
    }

    /// The other family: `(x, y, z) → (-x, -y, z)` negates P, Q and their forcing.
    pub fn flipped(&self) -> Self {
        Self {
            family: self.family.flipped(),
            max_m: self.max_m,
            d_mode: self.d_mode.clone(),
            coeffs: self.coeffs.iter().map(CoeffTriple::flipped).collect(),
            forcing: self.forcing.iter().map(|[a, b, c]| [-a, -b, c.clone()]).collect(),
        }
    }

    /// Rung `X_m`.
    pub fn get(&self, m: i64) -> Option<&CoeffTriple> {
        if m < -2 {
            return None;
        }
        self.coeffs.get((m + 2) as usize)
    }

    pub fn triples(&self) -> &[CoeffTriple] {
        &self.coeffs
    }

    /// `F_m` as used when solving for `X_m`.
    pub fn forcing(&self, m: i64) -> Option<&[PsiPoly; 3]> {
        if m < 0 {
            return None;
        }
        self.forcing.get(m as usize)
    }

    /// `P_k`, the coefficient of `(t-t0)^k` in x.
    pub fn p(&self, k: i64) -> Option<&PsiPoly> {
        self.get(k - 1).map(|t| &t.p)
    }

    pub fn q(&self, k: i64) -> Option<&PsiPoly> {
        self.get(k).map(|t| &t.q)
    }

    pub fn r(&self, k: i64) -> Option<&PsiPoly> {
        self.get(k).map(|t| &t.r)
    }

    /// Numeric value fixed for `D`, if any.
    pub fn numeric_d(&self) -> Option<&GaussianRational> {
        match &self.d_mode {
            DMode::Numeric(d) => Some(d),
            DMode::Symbolic => None,
        }
    }

    pub fn degree_report(&self) -> Vec<DegreeRow> {
        self.coeffs
            .iter()
            .filter(|t| t.m >= 0)
            .map(|t| DegreeRow {
                m: t.m,
                deg_p: t.p.deg_u(),
                deg_q: t.q.deg_u(),
                deg_r: t.r.deg_u(),
                deg_d: t.deg_d(),
                bound: degree_bound(t.m),
            })
            .collect()
    }

    /// JSON dump: `[{"m": .., "P": [...], "Q": [...], "R": [...]}, ...]`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.coeffs).expect("coefficients serialize")
    }

    pub fn triples_from_json(v: &serde_json::Value) -> Result<Vec<CoeffTriple>> {
        serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))
    }
}
