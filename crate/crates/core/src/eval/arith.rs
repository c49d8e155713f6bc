//! The two number types the evaluator runs on: binary64 complex and an
//! extended-precision complex over astro-float.

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigInt;
use num_complex::Complex64;

use crate::exact::{GaussianRational, Rational};

const RM: RoundingMode = RoundingMode::ToEven;

pub(crate) trait Arith: Clone {
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn ratio(&self, num: i64, den: i64) -> Self;
    fn zero_like(&self) -> Self;
    fn recip(&self) -> Self;
    /// `z` at the precision of `self`.
    fn lift(&self, z: Complex64) -> Self;
    fn to_c64(&self) -> Complex64;
}

impl Arith for Complex64 {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn ratio(&self, num: i64, den: i64) -> Self {
        self * (num as f64 / den as f64)
    }
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn recip(&self) -> Self {
        self.inv()
    }
    fn lift(&self, z: Complex64) -> Self {
        z
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
}

impl Arith for f64 {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn ratio(&self, num: i64, den: i64) -> Self {
        self * (num as f64 / den as f64)
    }
    fn zero_like(&self) -> Self {
        0.0
    }
    fn recip(&self) -> Self {
        1.0 / self
    }
    /// Real part only.
    fn lift(&self, z: Complex64) -> Self {
        z.re
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(*self, 0.0)
    }
}

/// Complex number with `BigFloat` parts at a fixed precision in bits.
#[derive(Clone, Debug)]
pub(crate) struct XComplex {
    pub re: BigFloat,
    pub im: BigFloat,
    pub p: usize,
}

impl XComplex {
    pub fn from_c64(z: Complex64, p: usize) -> Self {
        Self { re: BigFloat::from_f64(z.re, p), im: BigFloat::from_f64(z.im, p), p }
    }

    pub fn from_gaussian(g: &GaussianRational, p: usize, cc: &mut Consts) -> Self {
        Self { re: rational_to_big(&g.re, p, cc), im: rational_to_big(&g.im, p, cc), p }
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(big_to_f64(&self.re), big_to_f64(&self.im))
    }

    pub fn inv(&self) -> Self {
        let p = self.p;
        let den = self.re.mul(&self.re, p, RM).add(&self.im.mul(&self.im, p, RM), p, RM);
        Self { re: self.re.div(&den, p, RM), im: self.im.neg().div(&den, p, RM), p }
    }

    /// Principal logarithm.
    pub fn ln(&self, cc: &mut Consts) -> Self {
        let p = self.p;
        let r2 = self.re.mul(&self.re, p, RM).add(&self.im.mul(&self.im, p, RM), p, RM);
        let half = BigFloat::from_f64(0.5, p);
        let re = r2.ln(p, RM, cc).mul(&half, p, RM);
        Self { re, im: atan2(&self.im, &self.re, p, cc), p }
    }

    #[cfg(test)]
    pub fn exp(&self, cc: &mut Consts) -> Self {
        let p = self.p;
        let m = self.re.exp(p, RM, cc);
        Self { re: m.mul(&self.im.cos(p, RM, cc), p, RM), im: m.mul(&self.im.sin(p, RM, cc), p, RM), p }
    }
}

impl Arith for XComplex {
    fn add(&self, o: &Self) -> Self {
        Self { re: self.re.add(&o.re, self.p, RM), im: self.im.add(&o.im, self.p, RM), p: self.p }
    }
    fn sub(&self, o: &Self) -> Self {
        Self { re: self.re.sub(&o.re, self.p, RM), im: self.im.sub(&o.im, self.p, RM), p: self.p }
    }
    fn mul(&self, o: &Self) -> Self {
        let p = self.p;
        let re = self.re.mul(&o.re, p, RM).sub(&self.im.mul(&o.im, p, RM), p, RM);
        let im = self.re.mul(&o.im, p, RM).add(&self.im.mul(&o.re, p, RM), p, RM);
        Self { re, im, p }
    }
    fn ratio(&self, num: i64, den: i64) -> Self {
        let p = self.p;
        let k = BigFloat::from_i64(num, p).div(&BigFloat::from_i64(den, p), p, RM);
        Self { re: self.re.mul(&k, p, RM), im: self.im.mul(&k, p, RM), p }
    }
    fn zero_like(&self) -> Self {
        Self { re: BigFloat::from_f64(0.0, self.p), im: BigFloat::from_f64(0.0, self.p), p: self.p }
    }
    fn recip(&self) -> Self {
        self.inv()
    }
    fn lift(&self, z: Complex64) -> Self {
        Self::from_c64(z, self.p)
    }
    fn to_c64(&self) -> Complex64 {
        XComplex::to_c64(self)
    }
}

fn bigint_to_big(n: &BigInt, p: usize, cc: &mut Consts) -> BigFloat {
    if n.bits() < 53 {
        return BigFloat::from_i64(i64::try_from(n).expect("fits in 53 bits"), p);
    }
    BigFloat::parse(&n.to_string(), Radix::Dec, p, RM, cc)
}

pub(crate) fn rational_to_big(r: &Rational, p: usize, cc: &mut Consts) -> BigFloat {
    let n = bigint_to_big(r.numer(), p, cc);
    if r.denom() == &BigInt::from(1) {
        return n;
    }
    n.div(&bigint_to_big(r.denom(), p, cc), p, RM)
}

pub(crate) fn big_to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let mut cc = Consts::new().expect("constants cache");
    x.format(Radix::Dec, RM, &mut cc).ok().and_then(|s| s.parse::<f64>().ok()).unwrap_or(f64::NAN)
}

fn atan2(y: &BigFloat, x: &BigFloat, p: usize, cc: &mut Consts) -> BigFloat {
    let pi = cc.pi(p, RM);
    if x.is_zero() {
        let half = pi.div(&BigFloat::from_i64(2, p), p, RM);
        return if y.is_negative() { half.neg() } else { half };
    }
    let base = y.div(x, p, RM).atan(p, RM, cc);
    if x.is_positive() {
        base
    } else if y.is_negative() {
        base.sub(&pi, p, RM)
    } else {
        base.add(&pi, p, RM)
    }
}
