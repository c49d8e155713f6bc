use num_complex::Complex64;

use lorenz_psi::bounds::{
    branch_radius, eigenvector_condition, eta_domain, k2_estimate, majorant_sequence, radius_conditions_hold,
    radius_estimate, scalar_bound_check, sweep, sweep_from, ExactNorms, NormSource,
};
use lorenz_psi::psi::dense::{DenseSeries, Scaled};
use lorenz_psi::{DMode, GaussianRational, PsiPoly, PsiSeries, Rational, SeriesFamily};

fn d_values() -> [GaussianRational; 3] {
    [GaussianRational::zero(), GaussianRational::one(), GaussianRational::i()]
}

#[test]
fn exact_sweeps_hold_for_each_d() {
    let s = PsiSeries::generate(40, SeriesFamily::Plus, DMode::Symbolic).unwrap();
    for d in d_values() {
        let rows = sweep(&s, Some(&d)).unwrap();
        for r in &rows {
            assert!(r.f_holds.unwrap_or(true), "F bound fails at m={} for D={d}", r.m);
            assert!(r.x_holds.unwrap_or(true), "X bound fails at m={} for D={d}", r.m);
            assert!(r.dominated, "majorant below |X_m| at m={} for D={d}", r.m);
        }
    }
}

#[test]
fn dense_norms_track_exact_norms() {
    let d = GaussianRational::i();
    let s = PsiSeries::generate(40, SeriesFamily::Plus, DMode::Numeric(d.clone())).unwrap();
    let exact = ExactNorms::new(&s, None).unwrap();
    let dense = DenseSeries::<Scaled>::scaled(40, SeriesFamily::Plus, d.to_complex()).unwrap();
    for m in 0..=40 {
        let (a, b) = (exact.ln_x(m).unwrap(), dense.ln_x(m).unwrap());
        assert!((a - b).abs() < 1e-11, "m={m}: {a} vs {b}");
    }
}

#[test]
fn dense_sweep_to_one_twenty() {
    for d in d_values() {
        let dense = DenseSeries::<Scaled>::scaled(120, SeriesFamily::Plus, d.to_complex()).unwrap();
        let rows = sweep_from(&dense).unwrap();
        assert_eq!(rows.len(), 121);
        assert!(rows.iter().all(|r| r.f_holds != Some(false) && r.x_holds != Some(false) && r.dominated));
    }
}

#[test]
fn scalar_bound_for_monomial_loads() {
    // a = |α| / (deg + 1) > 1 is the regime the bound covers.
    let alpha = GaussianRational::from_int(-9);
    for k in 0..4u32 {
        let f = PsiPoly::monomial(
            k,
            0,
            GaussianRational::new(Rational::from_integer(3.into()), Rational::from_integer((-2).into())),
        );
        let a = 9.0 / (k as f64 + 1.0);
        let b = scalar_bound_check(&alpha, &f, a).unwrap();
        assert!(b.holds, "k={k}: {} > {}", b.norm_xi, b.bound);
    }
}

#[test]
fn eigenvector_condition_is_sixteen() {
    assert_eq!(eigenvector_condition().unwrap(), Rational::from_integer(16.into()));
}

#[test]
fn k2_estimators_agree_at_moderate_m() {
    let s = PsiSeries::generate(7, SeriesFamily::Plus, DMode::Numeric(GaussianRational::zero())).unwrap();
    let exact = ExactNorms::new(&s, None).unwrap();
    let seed: Vec<f64> = (0..8).map(|m| exact.ln_x(m).unwrap()).collect();
    let maj = majorant_sequence(&seed, 600).unwrap();
    let k = k2_estimate(&maj).unwrap();
    assert!(k.rel_diff < 1e-3, "{k:?}");
    assert!((k.discriminant - 969.2588).abs() < 1e-3, "{}", k.discriminant);
}

#[test]
fn radius_conditions_and_monotonicity() {
    let k2 = 969.2588;
    let cs = [Complex64::new(0.0, 0.0), Complex64::new(0.0, 2.0 * std::f64::consts::PI), Complex64::new(10.0, 0.0)];
    let rs: Vec<f64> = cs.iter().map(|&c| radius_estimate(k2, c)).collect();
    for (c, r) in cs.iter().zip(&rs) {
        assert!(radius_conditions_hold(k2, *c, *r), "C={c}");
        assert!(!radius_conditions_hold(k2, *c, r * 1.05), "radius for C={c} is not nearly tight");
    }
    assert!(rs[1] < rs[0] && rs[2] < rs[1]);
}

#[test]
fn branch_radii_shrink_and_tile_the_eta_plane() {
    let k2 = 969.2588;
    let c = Complex64::new(0.0, 0.0);
    let radii: Vec<f64> = (0..8).map(|m| branch_radius(k2, c, m)).collect();
    assert!(radii.windows(2).all(|w| w[1] < w[0]));
    assert_eq!(branch_radius(k2, c, -3), branch_radius(k2, c, 3));
    let rects = eta_domain(k2, c, -2..=2);
    for w in rects.windows(2) {
        assert!((w[0].im_hi - w[1].im_lo).abs() < 1e-12);
    }
}
