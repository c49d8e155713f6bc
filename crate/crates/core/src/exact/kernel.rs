//! Integer convolution kernel for the nonlinear sums of the recursion.
//!
//! A polynomial is held as Gaussian-integer numerators over one common
//! denominator. Products then need no gcd work; a sum of products is put
//! over the lcm of the pair denominators and reduced once at the end.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::{GaussianRational, PsiPoly, Rational};

#[derive(Clone, Debug)]
pub(crate) struct ScaledPoly {
    den: BigInt,
    re: Vec<(u32, u32, BigInt)>,
    im: Vec<(u32, u32, BigInt)>,
    max_u: u32,
    max_d: u32,
}

impl ScaledPoly {
    pub fn from_poly(p: &PsiPoly) -> Self {
        let mut den = BigInt::one();
        for (_, _, c) in p.terms() {
            for part in [&c.re, &c.im] {
                if !part.is_zero() {
                    den = den.lcm(part.denom());
                }
            }
        }
        let mut re = Vec::new();
        let mut im = Vec::new();
        let (mut max_u, mut max_d) = (0, 0);
        for (u, d, c) in p.terms() {
            max_u = max_u.max(u);
            max_d = max_d.max(d);
            if !c.re.is_zero() {
                re.push((u, d, c.re.numer() * (&den / c.re.denom())));
            }
            if !c.im.is_zero() {
                im.push((u, d, c.im.numer() * (&den / c.im.denom())));
            }
        }
        Self { den, re, im, max_u, max_d }
    }

    fn is_zero(&self) -> bool {
        self.re.is_empty() && self.im.is_empty()
    }

    fn len(&self) -> usize {
        self.re.len() + self.im.len()
    }

    fn scaled(&self, s: &BigInt) -> Self {
        let f = |v: &Vec<(u32, u32, BigInt)>| v.iter().map(|(u, d, x)| (*u, *d, x * s)).collect();
        Self { den: &self.den * s, re: f(&self.re), im: f(&self.im), max_u: self.max_u, max_d: self.max_d }
    }
}

struct Accum {
    stride: usize,
    re: Vec<BigInt>,
    im: Vec<BigInt>,
}

impl Accum {
    fn convolve(acc: &mut [BigInt], stride: usize, a: &[(u32, u32, BigInt)], b: &[(u32, u32, BigInt)], negate: bool) {
        for (ua, da, x) in a {
            for (ub, db, y) in b {
                let idx = (ua + ub) as usize * stride + (da + db) as usize;
                let prod = x * y;
                if negate {
                    acc[idx] -= prod;
                } else {
                    acc[idx] += prod;
                }
            }
        }
    }

    fn add_product(&mut self, a: &ScaledPoly, b: &ScaledPoly) {
        let s = self.stride;
        Self::convolve(&mut self.re, s, &a.re, &b.re, false);
        Self::convolve(&mut self.re, s, &a.im, &b.im, true);
        Self::convolve(&mut self.im, s, &a.re, &b.im, false);
        Self::convolve(&mut self.im, s, &a.im, &b.re, false);
    }
}

/// Exact `Σ a_k·b_k` over the given pairs.
pub(crate) fn sum_of_products(pairs: &[(&ScaledPoly, &ScaledPoly)]) -> PsiPoly {
    let live: Vec<_> = pairs.iter().filter(|(a, b)| !a.is_zero() && !b.is_zero()).collect();
    if live.is_empty() {
        return PsiPoly::zero();
    }
    let mut l = BigInt::one();
    let (mut max_u, mut max_d) = (0, 0);
    for (a, b) in &live {
        l = l.lcm(&(&a.den * &b.den));
        max_u = max_u.max(a.max_u + b.max_u);
        max_d = max_d.max(a.max_d + b.max_d);
    }
    let stride = max_d as usize + 1;
    let size = (max_u as usize + 1) * stride;
    let mut acc = Accum { stride, re: vec![BigInt::zero(); size], im: vec![BigInt::zero(); size] };
    for (a, b) in live {
        let s = &l / (&a.den * &b.den);
        if s.is_one() {
            acc.add_product(a, b);
        } else if a.len() <= b.len() {
            acc.add_product(&a.scaled(&s), b);
        } else {
            acc.add_product(a, &b.scaled(&s));
        }
    }
    let mut out = PsiPoly::zero();
    for idx in 0..size {
        let (re, im) = (&acc.re[idx], &acc.im[idx]);
        if re.is_zero() && im.is_zero() {
            continue;
        }
        let c = GaussianRational::new(Rational::new(re.clone(), l.clone()), Rational::new(im.clone(), l.clone()));
        out.insert_raw((idx / stride) as u32, (idx % stride) as u32, c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn matches_naive_product_sum() {
        let p = PsiPoly::from_terms([
            ((0, 0), GaussianRational::new(rat(1, 3), rat(-2, 7))),
            ((2, 1), GaussianRational::ifrac(5, 9)),
        ]);
        let q = PsiPoly::from_terms([
            ((1, 0), GaussianRational::frac(-4, 15)),
            ((0, 2), GaussianRational::new(rat(3, 2), rat(1, 11))),
        ]);
        let r = PsiPoly::from_terms([((3, 0), GaussianRational::frac(7, 6))]);
        let (sp, sq, sr) = (ScaledPoly::from_poly(&p), ScaledPoly::from_poly(&q), ScaledPoly::from_poly(&r));
        let fast = sum_of_products(&[(&sp, &sq), (&sq, &sr), (&sp, &sp)]);
        let slow = &(&(&p * &q) + &(&q * &r)) + &(&p * &p);
        assert_eq!(fast, slow);
    }

    #[test]
    fn empty_and_zero_pairs() {
        let z = ScaledPoly::from_poly(&PsiPoly::zero());
        assert!(sum_of_products(&[]).is_zero());
        assert!(sum_of_products(&[(&z, &z)]).is_zero());
    }
}
