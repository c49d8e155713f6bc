use num_bigint::BigInt;
use num_complex::Complex64;
use proptest::prelude::*;

use lorenz_psi::{GaussianRational, Mat3, PsiPoly, Rational};

fn rational() -> impl Strategy<Value = Rational> {
    (-60i64..=60, 1i64..=40).prop_map(|(n, d)| Rational::new(BigInt::from(n), BigInt::from(d)))
}

fn gauss() -> impl Strategy<Value = GaussianRational> {
    (rational(), rational()).prop_map(|(a, b)| GaussianRational::new(a, b))
}

fn poly() -> impl Strategy<Value = PsiPoly> {
    prop::collection::vec(((0u32..5, 0u32..3), gauss()), 0..7).prop_map(PsiPoly::from_terms)
}

fn mat() -> impl Strategy<Value = Mat3> {
    prop::collection::vec(gauss(), 9).prop_map(|v| {
        Mat3([
            [v[0].clone(), v[1].clone(), v[2].clone()],
            [v[3].clone(), v[4].clone(), v[5].clone()],
            [v[6].clone(), v[7].clone(), v[8].clone()],
        ])
    })
}

proptest! {
    #[test]
    fn gaussian_field_axioms(a in gauss(), b in gauss(), c in gauss()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&(&a - &b) + &b, a.clone());
        if !a.is_zero() {
            prop_assert_eq!(&a * &a.checked_inv().unwrap(), GaussianRational::one());
        } else {
            prop_assert!(a.checked_inv().is_err());
        }
    }

    #[test]
    fn conjugation_is_multiplicative(a in gauss(), b in gauss()) {
        prop_assert_eq!((&a * &b).conj(), &a.conj() * &b.conj());
        prop_assert!((&a * &a.conj()).is_real());
    }

    #[test]
    fn derivative_obeys_product_rule(p in poly(), q in poly()) {
        let lhs = (&p * &q).diff_u();
        let rhs = &(&p.diff_u() * &q) + &(&p * &q.diff_u());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn ring_identities(p in poly(), q in poly(), r in poly()) {
        prop_assert_eq!(&p * &(&q + &r), &(&p * &q) + &(&p * &r));
        prop_assert!((&p - &p).is_zero());
    }

    #[test]
    fn evaluation_is_a_homomorphism(p in poly(), q in poly(), ur in -2.0f64..2.0, ui in -2.0f64..2.0) {
        let (u, d) = (Complex64::new(ur, ui), Complex64::new(0.3, -0.7));
        let lhs = (&p * &q).eval(u, d);
        let rhs = p.eval(u, d) * q.eval(u, d);
        prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
    }

    #[test]
    fn norm_is_subadditive_and_submultiplicative(p in poly(), q in poly(), dr in -2.0f64..2.0) {
        let d = Some(Complex64::new(dr, 0.5));
        let (np, nq) = (p.coeff_norm(d).unwrap(), q.coeff_norm(d).unwrap());
        let slack = 1e-12 * (1.0 + np) * (1.0 + nq);
        prop_assert!((&p + &q).coeff_norm(d).unwrap() <= np + nq + slack);
        prop_assert!((&p * &q).coeff_norm(d).unwrap() <= np * nq + slack);
    }

    #[test]
    fn overestimate_never_below_norm(p in poly()) {
        let d = GaussianRational::frac(-3, 2);
        let exact = p.coeff_norm(Some(d.to_complex())).unwrap();
        let upper = p.coeff_norm_upper(Some(&d)).unwrap();
        let upper = upper.numer().to_string().parse::<f64>().unwrap() / upper.denom().to_string().parse::<f64>().unwrap();
        prop_assert!(upper >= exact * (1.0 - 1e-12));
    }

    #[test]
    fn matrix_inverse_round_trip(a in mat()) {
        match a.inverse() {
            Ok(inv) => {
                prop_assert_eq!(&a * &inv, Mat3::identity());
                prop_assert_eq!(&inv * &a, Mat3::identity());
            }
            Err(_) => prop_assert!(a.det().is_zero()),
        }
    }

    #[test]
    fn determinant_is_multiplicative(a in mat(), b in mat()) {
        prop_assert_eq!((&a * &b).det(), &a.det() * &b.det());
    }
}
