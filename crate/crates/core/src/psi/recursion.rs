//! One rung at a time: `X_m' = A_m X_m + F_m`.

use std::sync::OnceLock;

use super::{CoeffTriple, DMode, SeriesFamily};
use crate::error::{Error, Result};
use crate::exact::kernel::{sum_of_products, ScaledPoly};
use crate::exact::{rat, rat_int, GaussianRational, Mat3, PsiPoly, Rational};

/// `(P_{-1}, Q_{-2}, R_{-2})` and `(P_0, Q_{-1}, R_{-1})`.
pub fn leading_coefficients(family: SeriesFamily) -> (CoeffTriple, CoeffTriple) {
    let s = family.sign();
    let c = |g: GaussianRational| PsiPoly::constant(g);
    let first = CoeffTriple {
        m: -2,
        p: c(GaussianRational::ifrac(2 * s, 1)),
        q: c(GaussianRational::ifrac(-s, 5)),
        r: c(GaussianRational::frac(-1, 5)),
    };
    let second = CoeffTriple {
        m: -1,
        p: c(GaussianRational::ifrac(71 * s, 9)),
        q: c(GaussianRational::ifrac(2 * s, 1)),
        r: c(GaussianRational::frac(17, 9)),
    };
    (first, second)
}

/// The plus-family matrix `A_m`.
pub fn build_a(m: i64) -> Mat3 {
    build_a_for(m, SeriesFamily::Plus)
}

/// `A_m` for either family; the minus family is `S A_m S` with `S = diag(-1,-1,1)`.
pub fn build_a_for(m: i64, family: SeriesFamily) -> Mat3 {
    let s = family.sign();
    let g = GaussianRational::from_int;
    Mat3([
        [g(-m - 1), g(10), g(0)],
        [GaussianRational::frac(1, 5), g(-m), GaussianRational::ifrac(-2 * s, 1)],
        [GaussianRational::ifrac(-s, 5), GaussianRational::ifrac(2 * s, 1), g(-m)],
    ])
}

/// Eigenvalues of `A_m` in the column order of [`eigenvectors`].
pub fn eigenvalues(m: i64) -> [i64; 3] {
    [-m + 2, -m, -m - 3]
}

/// Eigenvector matrix `V` (independent of `m`, since `A_m = A_0 - mI`).
pub fn eigenvectors(family: SeriesFamily) -> Mat3 {
    let s = family.sign();
    let (g, gi) = (GaussianRational::from_int, GaussianRational::ifrac);
    Mat3([[gi(-5 * s, 1), gi(10 * s, 1), gi(-5 * s, 1)], [gi(-3 * s, 2), gi(s, 1), gi(s, 1)], [g(1), g(1), g(1)]])
}

fn eigen_pair(family: SeriesFamily) -> &'static (Mat3, Mat3) {
    static PLUS: OnceLock<(Mat3, Mat3)> = OnceLock::new();
    static MINUS: OnceLock<(Mat3, Mat3)> = OnceLock::new();
    let cell = match family {
        SeriesFamily::Plus => &PLUS,
        SeriesFamily::Minus => &MINUS,
    };
    cell.get_or_init(|| {
        let v = eigenvectors(family);
        let vinv = v.inverse().expect("eigenvector matrix is nonsingular");
        (v, vinv)
    })
}

/// `P_k` (the k-th coefficient of x) from history indexed by `m + 2`.
fn p_of(history: &[CoeffTriple], k: i64) -> Result<&PsiPoly> {
    Ok(&triple(history, k - 1)?.p)
}

fn triple(history: &[CoeffTriple], m: i64) -> Result<&CoeffTriple> {
    history.get((m + 2) as usize).ok_or(Error::MissingHistory { needed: m, have: history.len() as i64 - 3 })
}

/// Reference construction of `F_m` with plain polynomial products.
pub fn build_f(m: i64, history: &[CoeffTriple]) -> Result<[PsiPoly; 3]> {
    if m < 0 {
        return Err(Error::Precondition(format!("F_m needs m >= 0, got {m}")));
    }
    let prev = triple(history, m - 1)?;
    let mut sum_pr = PsiPoly::zero();
    let mut sum_pq = PsiPoly::zero();
    for j in 0..=m {
        let pj = p_of(history, j)?;
        let other = triple(history, m - j - 1)?;
        sum_pr = &sum_pr + &(pj * &other.r);
        sum_pq = &sum_pq + &(pj * &other.q);
    }
    assemble_f(m, history, prev, sum_pr, sum_pq)
}

fn assemble_f(
    m: i64,
    history: &[CoeffTriple],
    prev: &CoeffTriple,
    sum_pr: PsiPoly,
    sum_pq: PsiPoly,
) -> Result<[PsiPoly; 3]> {
    let f1 = prev.p.scale_rational(&rat_int(-10));
    let f2 = &(&p_of(history, m - 1)?.scale_rational(&rat_int(28)) - &prev.q) - &sum_pr;
    let f3 = &prev.r.scale_rational(&rat(-8, 3)) + &sum_pq;
    Ok([f1, f2, f3])
}

/// Fast `F_m` through the scaled-integer convolution kernel.
pub(crate) fn build_f_fast(m: i64, history: &[CoeffTriple], scaled: &[[ScaledPoly; 3]]) -> Result<[PsiPoly; 3]> {
    let prev = triple(history, m - 1)?;
    let idx = |k: i64| (k + 2) as usize;
    if scaled.len() < idx(m - 1) + 1 {
        return Err(Error::MissingHistory { needed: m - 1, have: scaled.len() as i64 - 3 });
    }
    let mut pr = Vec::with_capacity(m as usize + 1);
    let mut pq = Vec::with_capacity(m as usize + 1);
    for j in 0..=m {
        let pj = &scaled[idx(j - 1)][0];
        let other = &scaled[idx(m - j - 1)];
        pr.push((pj, &other[2]));
        pq.push((pj, &other[1]));
    }
    assemble_f(m, history, prev, sum_of_products(&pr), sum_of_products(&pq))
}

/// Polynomial solution of `ξ' = α ξ + f` in `u`, with `D` inert.
///
/// For `α = 0` the antiderivative with zero constant term is returned, but
/// only when `allow_zero` is set; the caller owns the free constant.
pub fn solve_scalar_poly_ode(alpha: &GaussianRational, f: &PsiPoly, allow_zero: bool) -> Result<PsiPoly> {
    if alpha.is_zero() {
        if !allow_zero {
            return Err(Error::ZeroEigenvalue);
        }
        let mut out = PsiPoly::zero();
        for (u, d, c) in f.terms() {
            out.add_term(u + 1, d, &c.scale(&rat(1, u as i64 + 1)));
        }
        return Ok(out);
    }
    let inv = alpha.checked_inv()?;
    let (Some(top_u), Some(top_d)) = (f.deg_u(), f.deg_d()) else {
        return Ok(PsiPoly::zero());
    };
    let mut out = PsiPoly::zero();
    for d in 0..=top_d {
        // ξ_k = ((k+1) ξ_{k+1} - f_k) / α, from the top down.
        let mut next = GaussianRational::zero();
        for k in (0..=top_u).rev() {
            let fk = f.coeff(k, d);
            let lifted = next.scale(&Rational::from_integer((k + 1).into()));
            let xi = &(&lifted - &fk) * &inv;
            out.add_term(k, d, &xi);
            next = xi;
        }
    }
    Ok(out)
}

/// `X_m' - A_m X_m - F_m`, which must vanish identically.
pub fn recursion_residual(m: i64, family: SeriesFamily, x: &CoeffTriple, f: &[PsiPoly; 3]) -> [PsiPoly; 3] {
    let a = build_a_for(m, family);
    let v = [x.p.clone(), x.q.clone(), x.r.clone()];
    let ax = a.apply(&v);
    std::array::from_fn(|i| &(&v[i].diff_u() - &ax[i]) - &f[i])
}

/// Eigen-basis solve shared by all `m ≥ 0`. `zero_slot` supplies the free
/// solution on the zero-eigenvalue component (m = 0 and m = 2).
fn eigen_solve(m: i64, family: SeriesFamily, f: &[PsiPoly; 3], zero_slot: Option<&PsiPoly>) -> Result<[PsiPoly; 3]> {
    let (v, vinv) = eigen_pair(family);
    let load = vinv.apply(f);
    let alphas = eigenvalues(m);
    let mut xi: [PsiPoly; 3] = Default::default();
    for i in 0..3 {
        let alpha = GaussianRational::from_int(alphas[i]);
        xi[i] = if alphas[i] == 0 {
            let anti = solve_scalar_poly_ode(&alpha, &load[i], true)?;
            match zero_slot {
                Some(extra) => &anti + extra,
                None => anti,
            }
        } else {
            solve_scalar_poly_ode(&alpha, &load[i], false)?
        };
    }
    Ok(v.apply(&xi))
}

/// The load of `F_m` on the eigenvector with eigenvalue `-m + 2`.
pub fn zero_eigen_load(family: SeriesFamily, f: &[PsiPoly; 3]) -> PsiPoly {
    let (_, vinv) = eigen_pair(family);
    vinv.apply(f)[0].clone()
}

/// `X_0`, where the constant of integration is absorbed into `C`.
pub fn step_m0(family: SeriesFamily) -> Result<CoeffTriple> {
    let (a, b) = leading_coefficients(family);
    let history = [a, b];
    let f = build_f(0, &history)?;
    step_m0_with(family, &f)
}

// A constant along the zero eigenvector only shifts `C`; pick it so that
// `P_1` has no constant term.
fn step_m0_with(family: SeriesFamily, f: &[PsiPoly; 3]) -> Result<CoeffTriple> {
    let (v, _) = eigen_pair(family);
    let raw = eigen_solve(0, family, f, None)?;
    let c = -&raw[0].coeff(0, 0).checked_div(v.get(0, 1))?;
    let slot = PsiPoly::constant(c);
    Ok(CoeffTriple::from_array(0, eigen_solve(0, family, f, Some(&slot))?))
}

/// `X_2`, where the top-degree zero-eigenvalue load must cancel and `D` enters.
pub fn step_m2(history: &[CoeffTriple], family: SeriesFamily, d_mode: &DMode) -> Result<CoeffTriple> {
    let f = build_f(2, history)?;
    step_m2_with(family, d_mode, &f)
}

/// Coefficient of `u^deg F_2` in the zero-eigenvalue load. Were it nonzero,
/// `X_2` would be cubic.
pub fn m2_top_load(family: SeriesFamily, f: &[PsiPoly; 3]) -> GaussianRational {
    let top = f.iter().filter_map(PsiPoly::deg_u).max().unwrap_or(0);
    zero_eigen_load(family, f).coeff(top, 0)
}

fn step_m2_with(family: SeriesFamily, d_mode: &DMode, f: &[PsiPoly; 3]) -> Result<CoeffTriple> {
    let top = m2_top_load(family, f);
    if !top.is_zero() {
        return Err(Error::Consistency {
            m: 2,
            detail: format!("F_2 has top-degree load {top} on the zero eigenvector"),
        });
    }
    // Normalized so that P_3 carries ±iD, R_2 carries -D/5, and the
    // D-free constant of P_3 is zero.
    let (v, _) = eigen_pair(family);
    let raw = eigen_solve(2, family, f, None)?;
    let shift = PsiPoly::constant(-&raw[0].coeff(0, 0).checked_div(v.get(0, 0))?);
    let kappa = GaussianRational::frac(-1, 5);
    let d_term = match d_mode {
        DMode::Symbolic => PsiPoly::monomial(0, 1, kappa),
        DMode::Numeric(d) => PsiPoly::constant(&kappa * d),
    };
    let x = eigen_solve(2, family, f, Some(&(&shift + &d_term)))?;
    Ok(CoeffTriple::from_array(2, x))
}

/// `X_m` for `m ≥ 3` in the eigen-basis.
pub fn step_general(m: i64, history: &[CoeffTriple], family: SeriesFamily) -> Result<CoeffTriple> {
    let f = build_f(m, history)?;
    step_general_with(m, family, &f)
}

pub(crate) fn step_general_with(m: i64, family: SeriesFamily, f: &[PsiPoly; 3]) -> Result<CoeffTriple> {
    if m < 3 {
        return Err(Error::Precondition(format!("general step needs m >= 3, got {m}")));
    }
    Ok(CoeffTriple::from_array(m, eigen_solve(m, family, f, None)?))
}

/// Closed form `X_m = -Σ_j A_m^{-j-1} F_m^{(j)}`, evaluated by nesting.
pub fn step_closed_form(m: i64, family: SeriesFamily, f: &[PsiPoly; 3]) -> Result<[PsiPoly; 3]> {
    let inv = build_a_for(m, family).inverse()?;
    let top = f.iter().filter_map(PsiPoly::deg_u).max().unwrap_or(0) as i64;
    let bound = (m + 2) / 2;
    let n = top.max(bound);
    let mut derivs = vec![f.clone()];
    for j in 1..=n as usize {
        let next: [PsiPoly; 3] = std::array::from_fn(|i| derivs[j - 1][i].diff_u());
        derivs.push(next);
    }
    // y = F^{(n)}; y ← F^{(j)} + A^{-1} y; X = -A^{-1} y
    let mut y = derivs[n as usize].clone();
    for j in (0..n as usize).rev() {
        let ay = inv.apply(&y);
        y = std::array::from_fn(|i| &derivs[j][i] + &ay[i]);
    }
    let x = inv.apply(&y);
    Ok(std::array::from_fn(|i| -&x[i]))
}

/// Drives the recursion, keeping the convolution cache in step with history.
pub(crate) struct Recursion {
    pub family: SeriesFamily,
    pub d_mode: DMode,
    pub coeffs: Vec<CoeffTriple>,
    pub forcing: Vec<[PsiPoly; 3]>,
    scaled: Vec<[ScaledPoly; 3]>,
}

impl Recursion {
    pub fn new(family: SeriesFamily, d_mode: DMode) -> Self {
        let (a, b) = leading_coefficients(family);
        let mut r = Self { family, d_mode, coeffs: Vec::new(), forcing: Vec::new(), scaled: Vec::new() };
        r.push(a);
        r.push(b);
        r
    }

    fn push(&mut self, t: CoeffTriple) {
        self.scaled.push([ScaledPoly::from_poly(&t.p), ScaledPoly::from_poly(&t.q), ScaledPoly::from_poly(&t.r)]);
        self.coeffs.push(t);
    }

    pub fn next_m(&self) -> i64 {
        self.coeffs.len() as i64 - 2
    }

    /// Computes the next rung and checks its exact residual.
    pub fn advance(&mut self) -> Result<()> {
        let m = self.next_m();
        let f = build_f_fast(m, &self.coeffs, &self.scaled)?;
        let x = match m {
            0 => step_m0_with(self.family, &f)?,
            2 => step_m2_with(self.family, &self.d_mode, &f)?,
            _ => CoeffTriple::from_array(m, eigen_solve(m, self.family, &f, None)?),
        };
        let res = recursion_residual(m, self.family, &x, &f);
        if res.iter().any(|p| !p.is_zero()) {
            return Err(Error::Consistency { m, detail: "nonzero recursion residual".into() });
        }
        self.forcing.push(f);
        self.push(x);
        Ok(())
    }
}
