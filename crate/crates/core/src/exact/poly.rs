use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{parse_rational, rational_to_string, GaussianRational, Rational};
use crate::error::{Error, Result};

/// Polynomial in `u = η + C` and the free constant `D`, with Gaussian-rational
/// coefficients. Keys are `(u_power, d_power)`; zero coefficients are never
/// stored, so structural equality is mathematical equality.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PsiPoly {
    terms: BTreeMap<(u32, u32), GaussianRational>,
}

/// How `coeff_norm` turns a coefficient into a magnitude.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NormMode {
    /// Binary64 modulus.
    #[default]
    Binary64,
    /// `|re| + |im|`, never below the true modulus.
    RationalOverestimate,
}

/// JSON shape of one term: `{"u":1,"d":0,"re":"0/1","im":"-988/81"}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PolyTerm {
    pub u: u32,
    pub d: u32,
    pub re: String,
    pub im: String,
}

impl PsiPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: GaussianRational) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn monomial(u: u32, d: u32, c: GaussianRational) -> Self {
        let mut p = Self::zero();
        p.add_term(u, d, &c);
        p
    }

    /// The polynomial `u`.
    pub fn u() -> Self {
        Self::monomial(1, 0, GaussianRational::one())
    }

    /// The polynomial `D`.
    pub fn d() -> Self {
        Self::monomial(0, 1, GaussianRational::one())
    }

    pub fn from_terms<I: IntoIterator<Item = ((u32, u32), GaussianRational)>>(it: I) -> Self {
        let mut p = Self::zero();
        for ((u, d), c) in it {
            p.add_term(u, d, &c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical `(u, d)` ascending order.
    pub fn terms(&self) -> impl Iterator<Item = (u32, u32, &GaussianRational)> {
        self.terms.iter().map(|(&(u, d), c)| (u, d, c))
    }

    pub fn coeff(&self, u: u32, d: u32) -> GaussianRational {
        self.terms.get(&(u, d)).cloned().unwrap_or_default()
    }

    /// Degree in `u`; `None` for the zero polynomial.
    pub fn deg_u(&self) -> Option<u32> {
        self.terms.keys().map(|k| k.0).max()
    }

    /// Degree in `D`; `None` for the zero polynomial.
    pub fn deg_d(&self) -> Option<u32> {
        self.terms.keys().map(|k| k.1).max()
    }

    pub fn has_d(&self) -> bool {
        self.terms.keys().any(|k| k.1 > 0)
    }

    pub fn add_term(&mut self, u: u32, d: u32, c: &GaussianRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry((u, d)) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c.clone());
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub(crate) fn insert_raw(&mut self, u: u32, d: u32, c: GaussianRational) {
        if !c.is_zero() {
            self.terms.insert((u, d), c);
        }
    }

    pub fn scale(&self, k: &GaussianRational) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(&key, c)| (key, c * k)).collect() }
    }

    pub fn scale_rational(&self, k: &Rational) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(&key, c)| (key, c.scale(k))).collect() }
    }

    /// Formal derivative in `u` (equivalently in `η`); `D` is inert.
    pub fn diff_u(&self) -> Self {
        let mut out = Self::zero();
        for (&(u, d), c) in &self.terms {
            if u > 0 {
                out.insert_raw(u - 1, d, c.scale(&Rational::from_integer(u.into())));
            }
        }
        out
    }

    /// Replaces `D` by an exact value.
    pub fn substitute_d(&self, dval: &GaussianRational) -> Self {
        if !self.has_d() {
            return self.clone();
        }
        let max_d = self.deg_d().unwrap_or(0);
        let mut powers = vec![GaussianRational::one()];
        for k in 1..=max_d as usize {
            let next = &powers[k - 1] * dval;
            powers.push(next);
        }
        let mut out = Self::zero();
        for (&(u, d), c) in &self.terms {
            out.add_term(u, 0, &(c * &powers[d as usize]));
        }
        out
    }

    /// Dense coefficient vector in `u` after substituting `D = dval`.
    pub fn dense_by_u(&self, dval: Complex64) -> Vec<Complex64> {
        let mut out = vec![Complex64::zero(); self.deg_u().map_or(0, |d| d as usize + 1)];
        for (&(u, d), c) in &self.terms {
            out[u as usize] += c.to_complex() * dval.powu(d);
        }
        out
    }

    /// Coefficients of `u^k` after substituting `D = dval` numerically.
    fn grouped_by_u(&self, dval: Option<Complex64>) -> Result<BTreeMap<u32, Complex64>> {
        if self.has_d() && dval.is_none() {
            return Err(Error::SymbolicD);
        }
        let dv = dval.unwrap_or_default();
        let mut grouped: BTreeMap<u32, Complex64> = BTreeMap::new();
        for (&(u, d), c) in &self.terms {
            *grouped.entry(u).or_default() += c.to_complex() * dv.powu(d);
        }
        Ok(grouped)
    }

    /// Sum of the moduli of the coefficients of the powers of `u`, with `D`
    /// substituted first. Binary64; not a rigorous bound.
    pub fn coeff_norm(&self, dval: Option<Complex64>) -> Result<f64> {
        Ok(self.grouped_by_u(dval)?.values().map(|c| c.norm()).sum())
    }

    /// One-sided exact variant: sums `|re| + |im|` of the grouped
    /// coefficients, so the result is never below the true norm.
    pub fn coeff_norm_upper(&self, dval: Option<&GaussianRational>) -> Result<Rational> {
        let p = match dval {
            Some(d) => self.substitute_d(d),
            None if self.has_d() => return Err(Error::SymbolicD),
            None => self.clone(),
        };
        Ok(p.terms.values().fold(Rational::zero(), |acc, c| acc + c.abs_upper()))
    }

    /// `ln |p|` with exact substitution of `D`, for norms beyond binary64.
    pub fn ln_coeff_norm(&self, dval: Option<&GaussianRational>) -> Result<f64> {
        let p = match dval {
            Some(d) => self.substitute_d(d),
            None if self.has_d() => return Err(Error::SymbolicD),
            None => self.clone(),
        };
        let logs: Vec<f64> = p.terms.values().map(GaussianRational::ln_abs).collect();
        Ok(log_sum_exp(&logs))
    }

    pub fn coeff_norm_mode(&self, dval: Option<Complex64>, mode: NormMode) -> Result<f64> {
        match mode {
            NormMode::Binary64 => self.coeff_norm(dval),
            NormMode::RationalOverestimate => {
                if self.has_d() && dval.is_none() {
                    return Err(Error::SymbolicD);
                }
                let dv = dval.unwrap_or_default();
                let grouped = self.grouped_by_u(Some(dv))?;
                Ok(grouped.values().map(|c| c.re.abs() + c.im.abs()).sum())
            }
        }
    }

    /// Horner evaluation at numeric `u` and `D`.
    pub fn eval(&self, u: Complex64, dval: Complex64) -> Complex64 {
        let Some(top) = self.deg_u() else {
            return Complex64::zero();
        };
        let mut by_u = vec![Complex64::zero(); top as usize + 1];
        for (&(k, d), c) in &self.terms {
            by_u[k as usize] += c.to_complex() * dval.powu(d);
        }
        by_u.iter().rev().fold(Complex64::zero(), |acc, c| acc * u + c)
    }

    /// Whether every coefficient is purely imaginary.
    pub fn all_imaginary(&self) -> bool {
        self.terms.values().all(GaussianRational::is_imaginary)
    }

    /// Whether every coefficient is real.
    pub fn all_real(&self) -> bool {
        self.terms.values().all(GaussianRational::is_real)
    }

    pub fn to_terms(&self) -> Vec<PolyTerm> {
        self.terms
            .iter()
            .map(|(&(u, d), c)| PolyTerm { u, d, re: rational_to_string(&c.re), im: rational_to_string(&c.im) })
            .collect()
    }

    pub fn from_poly_terms(terms: &[PolyTerm]) -> Result<Self> {
        let mut p = Self::zero();
        for t in terms {
            let c = GaussianRational::new(parse_rational(&t.re)?, parse_rational(&t.im)?);
            p.add_term(t.u, t.d, &c);
        }
        Ok(p)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_terms()).expect("terms serialize")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let terms: Vec<PolyTerm> = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_poly_terms(&terms)
    }
}

impl Serialize for PsiPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_terms().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PsiPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let terms = Vec::<PolyTerm>::deserialize(d)?;
        PsiPoly::from_poly_terms(&terms).map_err(serde::de::Error::custom)
    }
}

impl<'a> Add<&'a PsiPoly> for &'a PsiPoly {
    type Output = PsiPoly;
    fn add(self, rhs: &PsiPoly) -> PsiPoly {
        let mut out = self.clone();
        for (&(u, d), c) in &rhs.terms {
            out.add_term(u, d, c);
        }
        out
    }
}

impl<'a> Sub<&'a PsiPoly> for &'a PsiPoly {
    type Output = PsiPoly;
    fn sub(self, rhs: &PsiPoly) -> PsiPoly {
        let mut out = self.clone();
        for (&(u, d), c) in &rhs.terms {
            out.add_term(u, d, &-c);
        }
        out
    }
}

impl<'a> Mul<&'a PsiPoly> for &'a PsiPoly {
    type Output = PsiPoly;
    fn mul(self, rhs: &PsiPoly) -> PsiPoly {
        let mut acc: BTreeMap<(u32, u32), GaussianRational> = BTreeMap::new();
        for (&(u1, d1), a) in &self.terms {
            for (&(u2, d2), b) in &rhs.terms {
                *acc.entry((u1 + u2, d1 + d2)).or_default() += &(a * b);
            }
        }
        acc.retain(|_, c| !c.is_zero());
        PsiPoly { terms: acc }
    }
}

impl Neg for &PsiPoly {
    type Output = PsiPoly;
    fn neg(self) -> PsiPoly {
        PsiPoly { terms: self.terms.iter().map(|(&k, c)| (k, -c)).collect() }
    }
}

/// `ln Σ exp(a_i)`; `-inf` for an empty slice.
pub fn log_sum_exp(a: &[f64]) -> f64 {
    let top = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + a.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

impl Add for PsiPoly {
    type Output = PsiPoly;
    fn add(self, rhs: Self) -> Self {
        &self + &rhs
    }
}

impl Sub for PsiPoly {
    type Output = PsiPoly;
    fn sub(self, rhs: Self) -> Self {
        &self - &rhs
    }
}

impl Mul for PsiPoly {
    type Output = PsiPoly;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl Neg for PsiPoly {
    type Output = PsiPoly;
    fn neg(self) -> Self {
        -&self
    }
}
