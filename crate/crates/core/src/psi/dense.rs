//! Univariate engines for high orders with `D` fixed.
//!
//! Exact denominators grow roughly quadratically in bits, which makes the
//! rational recursion impractical far past `m = 60`. Two cheap stand-ins run
//! the same eigenbasis recursion on dense coefficient vectors:
//!
//! * [`ModP`]: arithmetic in `F_p[i]` with `p = 2^61 - 1` (`p ≡ 3 mod 4`, so
//!   `i` is not in `F_p`). A coefficient that is nonzero mod `p` is nonzero
//!   exactly, so degrees found here are lower bounds on the true degrees.
//! * [`Scaled`]: binary64 complex with one log-scale per rung. No coefficient
//!   is ever dropped, so the stored support bounds the true degree from above.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use super::{eigenvalues, eigenvectors, DMode, PsiSeries, SeriesFamily};
use crate::error::{Error, Result};
use crate::exact::{log_sum_exp, GaussianRational, Mat3};

/// Coefficient field for the dense engines.
pub trait DenseField: Clone + std::fmt::Debug {
    fn zero() -> Self;
    fn from_i64(k: i64) -> Self;
    fn from_gaussian(g: &GaussianRational) -> Result<Self>;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn inv(&self) -> Result<Self>;
    fn is_zero(&self) -> bool;
    /// `self · e^ln`; fields without a scale ignore `ln`, which is always 0 for them.
    fn scaled_exp(&self, ln: f64) -> Self;
    /// Size used for per-rung normalization; `None` disables it.
    fn magnitude(&self) -> Option<f64>;
}

/// `p = 2^61 - 1`.
pub const MOD_P: u64 = (1 << 61) - 1;

/// Element `a + bi` of `F_p[i]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModP {
    pub re: u64,
    pub im: u64,
}

fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % MOD_P as u128) as u64
}

fn powmod(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a);
        }
        a = mulmod(a, a);
        e >>= 1;
    }
    r
}

fn reduce_int(n: &BigInt) -> u64 {
    let r = n.mod_floor(&BigInt::from(MOD_P));
    r.to_u64().expect("reduced below p")
}

fn reduce_rational(r: &crate::exact::Rational) -> Result<u64> {
    let den = reduce_int(r.denom());
    if den == 0 {
        return Err(Error::Domain("denominator divisible by the modulus".into()));
    }
    Ok(mulmod(reduce_int(r.numer()), powmod(den, MOD_P - 2)))
}

impl DenseField for ModP {
    fn zero() -> Self {
        ModP { re: 0, im: 0 }
    }
    fn from_i64(k: i64) -> Self {
        ModP { re: k.rem_euclid(MOD_P as i64) as u64, im: 0 }
    }
    fn from_gaussian(g: &GaussianRational) -> Result<Self> {
        Ok(ModP { re: reduce_rational(&g.re)?, im: reduce_rational(&g.im)? })
    }
    fn add(&self, o: &Self) -> Self {
        ModP { re: (self.re + o.re) % MOD_P, im: (self.im + o.im) % MOD_P }
    }
    fn sub(&self, o: &Self) -> Self {
        ModP { re: (self.re + MOD_P - o.re) % MOD_P, im: (self.im + MOD_P - o.im) % MOD_P }
    }
    fn mul(&self, o: &Self) -> Self {
        let re = (mulmod(self.re, o.re) + MOD_P - mulmod(self.im, o.im)) % MOD_P;
        let im = (mulmod(self.re, o.im) + mulmod(self.im, o.re)) % MOD_P;
        ModP { re, im }
    }
    fn inv(&self) -> Result<Self> {
        let n = (mulmod(self.re, self.re) + mulmod(self.im, self.im)) % MOD_P;
        if n == 0 {
            return Err(Error::DivisionByZero);
        }
        let k = powmod(n, MOD_P - 2);
        Ok(ModP { re: mulmod(self.re, k), im: mulmod((MOD_P - self.im) % MOD_P, k) })
    }
    fn is_zero(&self) -> bool {
        self.re == 0 && self.im == 0
    }
    fn scaled_exp(&self, _ln: f64) -> Self {
        *self
    }
    fn magnitude(&self) -> Option<f64> {
        None
    }
}

/// Binary64 complex used with per-rung log scales.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled(pub Complex64);

impl DenseField for Scaled {
    fn zero() -> Self {
        Scaled(Complex64::new(0.0, 0.0))
    }
    fn from_i64(k: i64) -> Self {
        Scaled(Complex64::new(k as f64, 0.0))
    }
    fn from_gaussian(g: &GaussianRational) -> Result<Self> {
        Ok(Scaled(g.to_complex()))
    }
    fn add(&self, o: &Self) -> Self {
        Scaled(self.0 + o.0)
    }
    fn sub(&self, o: &Self) -> Self {
        Scaled(self.0 - o.0)
    }
    fn mul(&self, o: &Self) -> Self {
        Scaled(self.0 * o.0)
    }
    fn inv(&self) -> Result<Self> {
        if self.0.norm_sqr() == 0.0 {
            return Err(Error::DivisionByZero);
        }
        Ok(Scaled(self.0.inv()))
    }
    fn is_zero(&self) -> bool {
        self.0.norm_sqr() == 0.0
    }
    fn scaled_exp(&self, ln: f64) -> Self {
        Scaled(self.0 * ln.exp())
    }
    fn magnitude(&self) -> Option<f64> {
        Some(self.0.norm())
    }
}

/// One rung `X_m = e^{ln_scale} (P_{m+1}, Q_m, R_m)` with dense vectors in `u`.
#[derive(Clone, Debug)]
pub struct DenseRung<T> {
    pub m: i64,
    pub ln_scale: f64,
    pub comps: [Vec<T>; 3],
}

impl<T: DenseField> DenseRung<T> {
    /// Highest `u`-power with a nonzero coefficient.
    pub fn deg_u(&self) -> Option<usize> {
        self.comps.iter().filter_map(|c| c.iter().rposition(|x| !x.is_zero())).max()
    }

    /// Highest stored `u`-power, zero or not.
    pub fn support_deg(&self) -> Option<usize> {
        self.comps.iter().filter(|c| !c.is_empty()).map(|c| c.len() - 1).max()
    }
}

fn poly_add<T: DenseField>(a: &mut Vec<T>, b: &[T], sign: i64) {
    if a.len() < b.len() {
        a.resize(b.len(), T::zero());
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x = if sign > 0 { x.add(y) } else { x.sub(y) };
    }
}

fn poly_scale<T: DenseField>(a: &[T], k: &T) -> Vec<T> {
    a.iter().map(|x| x.mul(k)).collect()
}

fn poly_mul_acc<T: DenseField>(acc: &mut Vec<T>, a: &[T], b: &[T], factor: &T) {
    if a.is_empty() || b.is_empty() {
        return;
    }
    let need = a.len() + b.len() - 1;
    if acc.len() < need {
        acc.resize(need, T::zero());
    }
    let bs: Vec<T> = b.iter().map(|y| y.mul(factor)).collect();
    for (i, x) in a.iter().enumerate() {
        for (j, y) in bs.iter().enumerate() {
            acc[i + j] = acc[i + j].add(&x.mul(y));
        }
    }
}

fn mat_apply<T: DenseField>(m: &[[T; 3]; 3], v: &[Vec<T>; 3]) -> [Vec<T>; 3] {
    std::array::from_fn(|i| {
        let mut out = Vec::new();
        for j in 0..3 {
            if !m[i][j].is_zero() {
                poly_add(&mut out, &poly_scale(&v[j], &m[i][j]), 1);
            }
        }
        out
    })
}

/// Dense recursion for `m ≥ 3`, seeded exactly through `m = 2`.
#[derive(Clone, Debug)]
pub struct DenseSeries<T> {
    pub family: SeriesFamily,
    /// The fixed `D` as `[re, im]`.
    pub d_value: [f64; 2],
    rungs: Vec<DenseRung<T>>,
    /// `ln |F_m|` for `m = 0, 1, ...` (only meaningful for scaled engines).
    ln_forcing: Vec<f64>,
    v: [[T; 3]; 3],
    vinv: [[T; 3]; 3],
}

fn to_field<T: DenseField>(m: &Mat3) -> Result<[[T; 3]; 3]> {
    let mut out: [[T; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| T::zero()));
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = T::from_gaussian(m.get(i, j))?;
        }
    }
    Ok(out)
}

fn normalize<T: DenseField>(comps: [Vec<T>; 3], ln_base: f64) -> ([Vec<T>; 3], f64) {
    let top = comps.iter().flatten().filter_map(T::magnitude).fold(0.0, f64::max);
    if top > 0.0 && top.is_finite() {
        let k = -top.ln();
        (comps.map(|c| c.iter().map(|x| x.scaled_exp(k)).collect()), ln_base + top.ln())
    } else {
        (comps, ln_base)
    }
}

impl<T: DenseField> DenseSeries<T> {
    fn seed(family: SeriesFamily, convert: impl Fn(&crate::exact::PsiPoly) -> Result<Vec<T>>) -> Result<Self> {
        let exact = PsiSeries::generate(2, family, DMode::Symbolic)?;
        let mut rungs = Vec::new();
        for t in exact.triples() {
            let comps = [convert(&t.p)?, convert(&t.q)?, convert(&t.r)?];
            let (comps, ln_scale) = normalize(comps, 0.0);
            rungs.push(DenseRung { m: t.m, ln_scale, comps });
        }
        let v = eigenvectors(family);
        Ok(Self {
            family,
            d_value: [0.0, 0.0],
            rungs,
            ln_forcing: Vec::new(),
            v: to_field(&v)?,
            vinv: to_field(&v.inverse()?)?,
        })
    }

    pub fn max_m(&self) -> i64 {
        self.rungs.len() as i64 - 3
    }

    pub fn rung(&self, m: i64) -> Option<&DenseRung<T>> {
        if m < -2 {
            return None;
        }
        self.rungs.get((m + 2) as usize)
    }

    pub fn rungs(&self) -> &[DenseRung<T>] {
        &self.rungs
    }

    fn r(&self, m: i64) -> &DenseRung<T> {
        &self.rungs[(m + 2) as usize]
    }

    /// Appends `X_m` for the next `m ≥ 3`.
    pub fn advance(&mut self) -> Result<()> {
        let m = self.max_m() + 1;
        if m < 3 {
            return Err(Error::Precondition("dense engine is seeded through m = 2".into()));
        }
        // `P_j` lives in rung j-1.
        let mut sigma = self.r(m - 1).ln_scale.max(self.r(m - 2).ln_scale);
        for j in 0..=m {
            sigma = sigma.max(self.r(j - 1).ln_scale + self.r(m - j - 1).ln_scale);
        }
        let lin = |k: i64, c: usize, coef: i64| -> Vec<T> {
            let r = self.r(k);
            poly_scale(&r.comps[c], &T::from_i64(coef).scaled_exp(r.ln_scale - sigma))
        };
        let f1 = lin(m - 1, 0, -10);
        let mut f2 = lin(m - 2, 0, 28);
        poly_add(&mut f2, &lin(m - 1, 1, 1), -1);
        let mut f3 = poly_scale(&lin(m - 1, 2, -8), &T::from_i64(3).inv()?);
        let (mut pr, mut pq) = (Vec::new(), Vec::new());
        for j in 0..=m {
            let (a, b) = (self.r(j - 1), self.r(m - j - 1));
            let k = T::from_i64(1).scaled_exp(a.ln_scale + b.ln_scale - sigma);
            poly_mul_acc(&mut pr, &a.comps[0], &b.comps[2], &k);
            poly_mul_acc(&mut pq, &a.comps[0], &b.comps[1], &k);
        }
        poly_add(&mut f2, &pr, -1);
        poly_add(&mut f3, &pq, 1);
        let f = [f1, f2, f3];
        self.ln_forcing.resize(m as usize, f64::NAN);
        self.ln_forcing.push(sigma + ln_max_norm(&f));

        let load = mat_apply(&self.vinv, &f);
        let alphas = eigenvalues(m);
        let mut xi: [Vec<T>; 3] = Default::default();
        for i in 0..3 {
            let inv = T::from_i64(alphas[i]).inv()?;
            let mut out = vec![T::zero(); load[i].len()];
            let mut next = T::zero();
            for k in (0..load[i].len()).rev() {
                let x = T::from_i64(k as i64 + 1).mul(&next).sub(&load[i][k]).mul(&inv);
                out[k] = x.clone();
                next = x;
            }
            xi[i] = out;
        }
        let (comps, ln_scale) = normalize(mat_apply(&self.v, &xi), sigma);
        self.rungs.push(DenseRung { m, ln_scale, comps });
        Ok(())
    }

    pub fn extend_to(&mut self, max_m: i64) -> Result<()> {
        while self.max_m() < max_m {
            self.advance()?;
        }
        Ok(())
    }

    /// `ln |F_m|` as computed on the way to `X_m` (`m ≥ 3`).
    pub fn ln_forcing_norm(&self, m: i64) -> Option<f64> {
        self.ln_forcing.get(m as usize).copied().filter(|x| !x.is_nan())
    }
}

fn ln_max_norm<T: DenseField>(f: &[Vec<T>; 3]) -> f64 {
    f.iter().map(|c| c.iter().filter_map(T::magnitude).sum::<f64>().ln()).fold(f64::NEG_INFINITY, f64::max)
}

impl DenseSeries<ModP> {
    /// Mod-`p` coefficients through `max_m` at an exact `D`.
    pub fn modular(max_m: i64, family: SeriesFamily, d: &GaussianRational) -> Result<Self> {
        let mut s = Self::seed(family, |p| {
            let q = p.substitute_d(d);
            let mut out = vec![ModP::zero(); q.deg_u().map_or(0, |k| k as usize + 1)];
            for (u, _, c) in q.terms() {
                out[u as usize] = ModP::from_gaussian(c)?;
            }
            Ok(out)
        })?;
        let c = d.to_complex();
        s.d_value = [c.re, c.im];
        s.extend_to(max_m)?;
        Ok(s)
    }
}

impl DenseSeries<Scaled> {
    /// Binary64 coefficients through `max_m` at a numeric `D`.
    pub fn scaled(max_m: i64, family: SeriesFamily, d: Complex64) -> Result<Self> {
        let mut s = Self::seed(family, |p| Ok(p.dense_by_u(d).into_iter().map(Scaled).collect()))?;
        s.d_value = [d.re, d.im];
        s.extend_to(max_m)?;
        Ok(s)
    }

    /// `ln |X_m|`.
    pub fn ln_norm(&self, m: i64) -> Option<f64> {
        let r = self.rung(m)?;
        let logs: Vec<f64> = r.comps.iter().map(|c| c.iter().map(|x| x.0.norm()).sum::<f64>().ln()).collect();
        Some(r.ln_scale + logs.into_iter().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Coefficients of one component of `X_m`, unscaled (may overflow).
    pub fn component(&self, m: i64, c: usize) -> Option<Vec<Complex64>> {
        let r = self.rung(m)?;
        Some(r.comps[c].iter().map(|x| x.0 * r.ln_scale.exp()).collect())
    }
}

/// `ln Σ |c|` helper shared with the bounds code.
pub fn ln_sum_abs(c: &[Complex64]) -> f64 {
    let logs: Vec<f64> = c.iter().filter(|x| !x.is_zero()).map(|x| x.norm().ln()).collect();
    log_sum_exp(&logs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modp_inverse() {
        let a = ModP::from_gaussian(&GaussianRational::new(crate::exact::rat(3, 7), crate::exact::rat(-2, 5))).unwrap();
        let b = a.inv().unwrap();
        assert_eq!(a.mul(&b), ModP::from_i64(1));
    }

    #[test]
    fn dense_engines_agree_with_exact() {
        let exact = PsiSeries::generate(14, SeriesFamily::Plus, DMode::numeric(0, 0)).unwrap();
        let sc = DenseSeries::scaled(14, SeriesFamily::Plus, Complex64::new(0.0, 0.0)).unwrap();
        let md = DenseSeries::modular(14, SeriesFamily::Plus, &GaussianRational::zero()).unwrap();
        for m in 0..=14 {
            let t = exact.get(m).unwrap();
            let ln_exact = t.ln_norm(None).unwrap();
            assert!((sc.ln_norm(m).unwrap() - ln_exact).abs() < 1e-12, "m={m}");
            assert_eq!(md.rung(m).unwrap().deg_u(), t.deg_u().map(|d| d as usize));
            for (c, p) in t.components().iter().enumerate() {
                for (u, _, g) in p.terms() {
                    assert_eq!(md.rung(m).unwrap().comps[c][u as usize], ModP::from_gaussian(g).unwrap());
                }
            }
        }
    }
}
