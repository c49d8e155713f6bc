use std::ops::Mul;

use num_traits::Zero;

use super::{GaussianRational, PsiPoly, Rational};
use crate::error::{Error, Result};

/// Exact 3×3 matrix over the Gaussian rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat3(pub [[GaussianRational; 3]; 3]);

impl Mat3 {
    pub fn zero() -> Self {
        Mat3(Default::default())
    }

    pub fn identity() -> Self {
        Self::diag([GaussianRational::one(), GaussianRational::one(), GaussianRational::one()])
    }

    pub fn diag(d: [GaussianRational; 3]) -> Self {
        let mut m = Self::zero();
        for (i, v) in d.into_iter().enumerate() {
            m.0[i][i] = v;
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> &GaussianRational {
        &self.0[i][j]
    }

    pub fn det(&self) -> GaussianRational {
        let a = &self.0;
        let t1 = &a[0][0] * &(&(&a[1][1] * &a[2][2]) - &(&a[1][2] * &a[2][1]));
        let t2 = &a[0][1] * &(&(&a[1][0] * &a[2][2]) - &(&a[1][2] * &a[2][0]));
        let t3 = &a[0][2] * &(&(&a[1][0] * &a[2][1]) - &(&a[1][1] * &a[2][0]));
        &(&t1 - &t2) + &t3
    }

    /// Transpose of the cofactor matrix.
    pub fn adjugate(&self) -> Self {
        let a = &self.0;
        let mut out = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                // cofactor C_ji goes to position (i, j)
                let (r0, r1) = others(j);
                let (c0, c1) = others(i);
                let minor = &(&a[r0][c0] * &a[r1][c1]) - &(&a[r0][c1] * &a[r1][c0]);
                out.0[i][j] = if (i + j) % 2 == 0 { minor } else { -minor };
            }
        }
        out
    }

    /// Exact inverse via adjugate over determinant.
    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        if det.is_zero() {
            return Err(Error::SingularMatrix);
        }
        let inv_det = det.checked_inv()?;
        let mut adj = self.adjugate();
        for row in adj.0.iter_mut() {
            for v in row.iter_mut() {
                *v = &*v * &inv_det;
            }
        }
        Ok(adj)
    }

    /// Matrix applied to a column of polynomials.
    pub fn apply(&self, v: &[PsiPoly; 3]) -> [PsiPoly; 3] {
        std::array::from_fn(|i| {
            let mut acc = PsiPoly::zero();
            for (j, vj) in v.iter().enumerate() {
                if !self.0[i][j].is_zero() {
                    acc = &acc + &vj.scale(&self.0[i][j]);
                }
            }
            acc
        })
    }

    /// Row-sum infinity norm in binary64.
    pub fn inf_norm(&self) -> f64 {
        self.0.iter().map(|r| r.iter().map(GaussianRational::abs_f64).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Exact infinity norm when every entry is real or purely imaginary.
    pub fn inf_norm_exact(&self) -> Option<Rational> {
        let mut best = Rational::zero();
        for r in &self.0 {
            let mut s = Rational::zero();
            for v in r {
                s += v.exact_abs()?;
            }
            if s > best {
                best = s;
            }
        }
        Some(best)
    }
}

fn others(k: usize) -> (usize, usize) {
    match k {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

impl<'a> Mul<&'a Mat3> for &'a Mat3 {
    type Output = Mat3;
    fn mul(self, rhs: &Mat3) -> Mat3 {
        let mut out = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = GaussianRational::zero();
                for k in 0..3 {
                    s += &(&self.0[i][k] * &rhs.0[k][j]);
                }
                out.0[i][j] = s;
            }
        }
        out
    }
}
