use nalgebra::Matrix3;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lorenz_psi::eval::{BranchSpec, Evaluator};
use lorenz_psi::ode::{growth_check, integrate_path, lorenz_rhs, q_rate, taylor_jet, PathSpec, PrecisionConfig, State};
use lorenz_psi::{DMode, PsiSeries, SeriesFamily};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn max_diff(a: &State, b: &State) -> f64 {
    a.vars().iter().zip(b.vars()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

#[test]
fn jet_satisfies_the_equations_term_by_term() {
    let j = taylor_jet(&State::new(c(0.0, 0.0), c(1.5, 0.2), c(-2.0, 1.0), c(20.0, -0.5)), 30).unwrap();
    // d/dt of the jet at h = 0 is the first coefficient; compare every order
    // through the derivative of the truncated series at small h.
    for h in [c(1e-3, 0.0), c(0.0, 2e-3), c(-1e-3, 1e-3)] {
        let v = j.eval(h);
        let d = j.eval_derivative(h);
        let f = lorenz_rhs(v);
        for i in 0..3 {
            assert!((d[i] - f[i]).norm() <= 1e-13 * f[i].norm().max(1.0), "h={h}");
        }
    }
}

#[test]
fn forward_then_backward_step_returns() {
    let s = State::real(0.0, [1.0, 2.0, 3.0]);
    let j = taylor_jet(&s, 25).unwrap();
    let h = c(0.25 * j.trust_radius(), 0.0);
    let there = j.step(h).unwrap();
    let back = taylor_jet(&there, 25).unwrap().step(-h).unwrap();
    assert!(max_diff(&back, &s) < 1e-12);
    assert!((back.t - s.t).norm() < 1e-15);
}

#[test]
fn two_half_steps_match_one_full_step() {
    let s = State::new(c(0.0, 0.0), c(-4.0, 0.5), c(3.0, 0.0), c(25.0, 1.0));
    let j = taylor_jet(&s, 25).unwrap();
    let h = c(0.4 * j.trust_radius(), 0.1 * j.trust_radius());
    let full = j.step(h).unwrap();
    let half = j.step(h / 2.0).unwrap();
    let two = taylor_jet(&half, 25).unwrap().step(h / 2.0).unwrap();
    let est = j.error_estimate(h).max(1e-13 * 30.0);
    assert!(max_diff(&full, &two) <= 10.0 * est, "{} vs {est}", max_diff(&full, &two));
}

#[test]
fn closed_loop_in_complex_time_returns_to_start() {
    let s = State::real(0.0, [1.0, 1.0, 20.0]);
    let path = PathSpec::new(vec![c(0.0, 0.0), c(0.3, 0.0), c(0.3, 0.05), c(0.0, 0.05), c(0.0, 0.0)], 1e-14, 0.05);
    let r = integrate_path(&s, &path, &PrecisionConfig::default()).unwrap();
    assert!(!r.diverged());
    assert!(max_diff(&r.end, &s) < 1e-9, "{}", max_diff(&r.end, &s));
}

#[test]
fn halving_max_step_barely_moves_the_endpoint() {
    let s = State::real(0.0, [-3.0, 2.0, 15.0]);
    let tol = 1e-13;
    let way = vec![c(0.0, 0.0), c(0.4, 0.08), c(0.8, 0.0)];
    let a = integrate_path(&s, &PathSpec::new(way.clone(), tol, 0.1), &PrecisionConfig::default()).unwrap();
    let b = integrate_path(&s, &PathSpec::new(way, tol, 0.05), &PrecisionConfig::default()).unwrap();
    let scale = a.end.l1();
    assert!(max_diff(&a.end, &b.end) <= 10.0 * tol * scale * 10.0);
}

#[test]
fn real_data_stays_real() {
    let s = State::real(0.0, [1.0, 1.0, 1.0]);
    let r = integrate_path(&s, &PathSpec::new(vec![c(0.0, 0.0), c(5.0, 0.0)], 1e-14, 0.1), &PrecisionConfig::default())
        .unwrap();
    for p in &r.trace {
        assert!(p.state.vars().iter().all(|v| v.im.abs() <= 1e-12 * v.norm().max(1.0)));
    }
    assert!(growth_check(r.trace.iter().map(|p| &p.state)).holds);
}

#[test]
fn extended_precision_path_matches_binary64() {
    let s = State::real(0.0, [1.0, 1.0, 1.0]);
    let path = PathSpec::new(vec![c(0.0, 0.0), c(0.5, 0.1)], 1e-14, 0.1);
    let a = integrate_path(&s, &path, &PrecisionConfig::default()).unwrap();
    let cfg = PrecisionConfig { mantissa_bits: 128, ..PrecisionConfig::default() };
    let b = integrate_path(&s, &path, &cfg).unwrap();
    assert!(max_diff(&a.end, &b.end) < 1e-10 * a.end.l1());
}

#[test]
fn heading_into_a_singularity_diverges() {
    // Start on the psi-series solution singular at t0, then aim straight at t0.
    let series = PsiSeries::generate(20, SeriesFamily::Plus, DMode::Symbolic).unwrap();
    let spec = BranchSpec::new(c(0.0, 0.3), c(0.0, 0.0), c(0.0, 0.0), SeriesFamily::Plus);
    let ev = Evaluator::from_series(&series, &spec).unwrap();
    let t = spec.t0 + c(0.0, -1e-3);
    let s = State::with_vars(t, ev.eval_t(t, 20).unwrap());
    let path = PathSpec::new(vec![t, spec.t0], 1e-13, 1e-4);
    let r = integrate_path(&s, &path, &PrecisionConfig::default()).unwrap();
    assert!(r.diverged());
    let closest = r.trace.iter().map(|p| (p.state.t - spec.t0).norm()).fold(f64::INFINITY, f64::min);
    assert!(closest < 1e-9, "{closest}");
}

#[test]
fn csv_trace_has_header_and_rows() {
    let s = State::real(0.0, [1.0, 1.0, 1.0]);
    let r =
        integrate_path(&s, &PathSpec::new(vec![c(0.0, 0.0), c(0.2, 0.0)], 1e-13, 0.05), &PrecisionConfig::default())
            .unwrap();
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("re_t,im_t,re_x"));
    assert_eq!(text.lines().count(), r.trace.len() + 1);
}

#[test]
fn growth_bound_extremal_direction() {
    // dQ/dt = vᵀ S v with S symmetric; the sharp constant is its spectral radius.
    let s: Matrix3<f64> = Matrix3::new(-20.0, 38.0, 0.0, 38.0, -2.0, 0.0, 0.0, 0.0, -16.0 / 3.0);
    let eig = s.symmetric_eigen();
    let k = eig.eigenvalues.iamax();
    let rho: f64 = eig.eigenvalues[k].abs();
    assert!(rho < 58.0);
    let v = eig.eigenvectors.column(k);
    let state = [v[0], v[1], v[2]];
    let q: f64 = state.iter().map(|a| a * a).sum();
    assert!((q_rate(state).abs() / q - rho).abs() < 1e-12);
    assert_eq!(q_rate([0.0; 3]), 0.0);
}

#[test]
fn growth_bound_on_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let states: Vec<State> = (0..100_000)
        .map(|_| State::real(0.0, [rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0), rng.gen_range(-10.0..60.0)]))
        .collect();
    let rep = growth_check(&states);
    assert!(rep.holds && rep.max_ratio < 58.0);
}

proptest! {
    #[test]
    fn jet_of_equilibrium_is_constant(sign in prop::bool::ANY) {
        let r = if sign { 72f64.sqrt() } else { -(72f64.sqrt()) };
        let j = taylor_jet(&State::real(0.0, [r, r, 27.0]), 6).unwrap();
        prop_assert!(j.coeffs[1].iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn first_coefficient_is_the_vector_field(x in -30.0f64..30.0, y in -30.0f64..30.0, z in 0.0f64..50.0) {
        let s = State::real(0.0, [x, y, z]);
        let j = taylor_jet(&s, 4).unwrap();
        let f = lorenz_rhs(s.vars());
        for (got, want) in j.coeffs[1].iter().zip(f) {
            prop_assert!((got - want).norm() <= 1e-12 * want.norm().max(1.0));
        }
    }
}
