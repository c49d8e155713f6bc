use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{parse_rational, rational_to_string, Rational};
use crate::error::{Error, Result};

/// Exact complex number `re + im·i` with rational parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct GaussianRational {
    pub re: Rational,
    pub im: Rational,
}

impl GaussianRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        Self { re, im }
    }

    pub fn real(re: Rational) -> Self {
        Self { re, im: Rational::zero() }
    }

    pub fn imag(im: Rational) -> Self {
        Self { re: Rational::zero(), im }
    }

    /// `num/den` as a real number.
    pub fn frac(num: i64, den: i64) -> Self {
        Self::real(Rational::new(num.into(), den.into()))
    }

    /// `(num/den)·i`.
    pub fn ifrac(num: i64, den: i64) -> Self {
        Self::imag(Rational::new(num.into(), den.into()))
    }

    pub fn from_int(n: i64) -> Self {
        Self::real(Rational::from_integer(n.into()))
    }

    pub fn i() -> Self {
        Self::imag(Rational::one())
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn is_imaginary(&self) -> bool {
        self.re.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: -self.im.clone() }
    }

    /// Squared modulus, exact.
    pub fn norm_sqr(&self) -> Rational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn checked_inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let n = self.norm_sqr();
        Ok(Self { re: &self.re / &n, im: -(&self.im / &n) })
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        Ok(self * &rhs.checked_inv()?)
    }

    pub fn scale(&self, k: &Rational) -> Self {
        Self { re: &self.re * k, im: &self.im * k }
    }

    /// Multiplication by `i`.
    pub fn mul_i(&self) -> Self {
        Self { re: -self.im.clone(), im: self.re.clone() }
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(rat_to_f64(&self.re), rat_to_f64(&self.im))
    }

    /// Modulus in binary64.
    pub fn abs_f64(&self) -> f64 {
        let (a, b) = (rat_to_f64(&self.re), rat_to_f64(&self.im));
        a.hypot(b)
    }

    /// `ln |z|`, valid far outside the binary64 range.
    pub fn ln_abs(&self) -> f64 {
        let (a, b) = (rat_ln_abs(&self.re), rat_ln_abs(&self.im));
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        if hi == f64::NEG_INFINITY {
            return hi;
        }
        hi + 0.5 * (2.0 * (lo - hi)).exp().ln_1p()
    }

    /// `|re| + |im|`, an exact upper bound on the modulus.
    pub fn abs_upper(&self) -> Rational {
        self.re.abs() + self.im.abs()
    }

    /// Exact modulus when the number lies on an axis.
    pub fn exact_abs(&self) -> Option<Rational> {
        if self.im.is_zero() {
            Some(self.re.abs())
        } else if self.re.is_zero() {
            Some(self.im.abs())
        } else {
            None
        }
    }

    /// Parse `"a/b"`, `"a/b+c/di"`-free form: this accepts a pair of rational strings.
    pub fn from_strs(re: &str, im: &str) -> Result<Self> {
        Ok(Self { re: parse_rational(re)?, im: parse_rational(im)? })
    }
}

pub(crate) fn rat_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fallback for magnitudes that overflow the direct conversion.
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Natural log of |r| for rationals too large or small for binary64.
pub(crate) fn rat_ln_abs(r: &Rational) -> f64 {
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    big_ln_abs(r.numer()) - big_ln_abs(r.denom())
}

pub(crate) fn big_ln_abs(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.abs().to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top: BigInt = n.abs() >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (true, true) => write!(f, "0"),
            (false, true) => write!(f, "{}", self.re),
            (true, false) => write!(f, "{}i", self.im),
            (false, false) => {
                if self.im.is_negative() {
                    write!(f, "{}-{}i", self.re, -self.im.clone())
                } else {
                    write!(f, "{}+{}i", self.re, self.im)
                }
            }
        }
    }
}

impl GaussianRational {
    /// `(re, im)` rendered as `num/den` strings.
    pub fn to_strings(&self) -> (String, String) {
        (rational_to_string(&self.re), rational_to_string(&self.im))
    }
}

impl<'a> Add<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn add(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }
}

impl<'a> Sub<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn sub(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }
}

impl<'a> Mul<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn mul(self, rhs: &GaussianRational) -> GaussianRational {
        if self.im.is_zero() && rhs.im.is_zero() {
            return GaussianRational::real(&self.re * &rhs.re);
        }
        GaussianRational { re: &self.re * &rhs.re - &self.im * &rhs.im, im: &self.re * &rhs.im + &self.im * &rhs.re }
    }
}

impl Add for GaussianRational {
    type Output = GaussianRational;
    fn add(self, rhs: Self) -> Self {
        &self + &rhs
    }
}

impl Sub for GaussianRational {
    type Output = GaussianRational;
    fn sub(self, rhs: Self) -> Self {
        &self - &rhs
    }
}

impl Mul for GaussianRational {
    type Output = GaussianRational;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl Neg for GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> Self {
        GaussianRational { re: -self.re, im: -self.im }
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational { re: -self.re.clone(), im: -self.im.clone() }
    }
}

impl AddAssign<&GaussianRational> for GaussianRational {
    fn add_assign(&mut self, rhs: &GaussianRational) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl SubAssign<&GaussianRational> for GaussianRational {
    fn sub_assign(&mut self, rhs: &GaussianRational) {
        self.re -= &rhs.re;
        self.im -= &rhs.im;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(a: i64, b: i64) -> GaussianRational {
        GaussianRational::new(Rational::from_integer(a.into()), Rational::from_integer(b.into()))
    }

    #[test]
    fn product_expands() {
        assert_eq!(&g(1, 2) * &g(3, -1), g(5, 5));
    }

    #[test]
    fn leading_coefficients_multiply_to_two_fifths() {
        let p = GaussianRational::ifrac(2, 1);
        let q = GaussianRational::ifrac(-1, 5);
        assert_eq!(&p * &q, GaussianRational::frac(2, 5));
    }

    #[test]
    fn conjugate_division() {
        let r = GaussianRational::one().checked_div(&g(1, 1)).unwrap();
        assert_eq!(r, GaussianRational::new(Rational::new(1.into(), 2.into()), Rational::new((-1).into(), 2.into())));
    }

    #[test]
    fn divide_by_zero_is_error() {
        assert_eq!(g(1, 0).checked_div(&g(0, 0)), Err(Error::DivisionByZero));
    }

    #[test]
    fn ln_abs_of_huge_rational() {
        let big = Rational::from_integer(BigInt::from(10).pow(400));
        assert!((rat_ln_abs(&big) - 400.0 * 10f64.ln()).abs() < 1e-9);
    }
}
