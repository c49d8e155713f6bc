//! Real-time flow, the z = 27 section, and periodic orbits by multiple shooting.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{choose_step, horner, jet_coeffs};

/// Height of the section plane.
pub const SECTION_Z: f64 = 27.0;

/// Itinerary over the two wings; `A` is a downward section crossing with `x > 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SymbolSequence(String);

impl SymbolSequence {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.bytes().map(|b| b == b'A')
    }

    pub fn symbol_for(x: f64) -> char {
        if x > 0.0 {
            'A'
        } else {
            'B'
        }
    }
}

impl FromStr for SymbolSequence {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() || !s.bytes().all(|b| b == b'A' || b == b'B') {
            return Err(Error::Parse(format!("symbol sequence must be a nonempty word over A, B: {s:?}")));
        }
        Ok(Self(s.to_string()))
    }
}

impl TryFrom<String> for SymbolSequence {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SymbolSequence> for String {
    fn from(s: SymbolSequence) -> String {
        s.0
    }
}

impl fmt::Display for SymbolSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Taylor flow of the real system.
#[derive(Clone, Debug)]
pub struct RealFlow {
    pub order: usize,
    pub tol: f64,
}

impl Default for RealFlow {
    fn default() -> Self {
        Self { order: 30, tol: 1e-16 }
    }
}

impl RealFlow {
    fn jet(&self, v: [f64; 3]) -> (Vec<[f64; 3]>, f64) {
        let c = jet_coeffs(v, self.order);
        let norms: Vec<f64> = c.iter().map(|a| a.iter().fold(0.0f64, |m, x| m.max(x.abs()))).collect();
        let h = choose_step(&norms, 0.8, self.tol);
        (c, h)
    }

    /// State after time `dt ≥ 0`.
    pub fn advance(&self, mut v: [f64; 3], dt: f64) -> [f64; 3] {
        let mut left = dt;
        while left > 0.0 {
            let (c, h) = self.jet(v);
            let h = h.min(left);
            v = horner(&c, &h);
            left -= h;
        }
        v
    }

    /// States at increasing times `ts` (all ≥ 0) starting from `v` at time 0.
    pub fn sample(&self, v: [f64; 3], ts: &[f64]) -> Vec<[f64; 3]> {
        let (mut t, mut v) = (0.0, v);
        ts.iter()
            .map(|&target| {
                v = self.advance(v, target - t);
                t = target;
                v
            })
            .collect()
    }

    /// Next crossing of `z = 27` from above, as (elapsed time, state).
    pub fn next_crossing(&self, mut v: [f64; 3], max_time: f64) -> Result<(f64, [f64; 3])> {
        let mut t = 0.0;
        while t < max_time {
            let (c, h) = self.jet(v);
            let end = horner(&c, &h);
            if v[2] > SECTION_Z && end[2] <= SECTION_Z {
                let s = crossing_root(&c, h)?;
                // A start sitting on the plane is not a crossing.
                if t + s > 1e-9 {
                    return Ok((t + s, horner(&c, &s)));
                }
            }
            v = end;
            t += h;
        }
        Err(Error::NoConvergence(format!("no section crossing within t = {max_time}")))
    }
}

/// Root of `z(s) = 27` in `(0, h]` for a jet that crosses it downward there.
fn crossing_root(c: &[[f64; 3]], h: f64) -> Result<f64> {
    let g = |s: f64| {
        let (mut p, mut dp) = (0.0, 0.0);
        for a in c.iter().rev() {
            dp = dp * s + p;
            p = p * s + a[2];
        }
        (p - SECTION_Z, dp)
    };
    let (mut lo, mut hi) = (0.0, h);
    let mut s = h * g(0.0).0 / (g(0.0).0 - g(h).0);
    for _ in 0..100 {
        let (f, df) = g(s);
        if f > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let next = s - f / df;
        let next = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if (next - s).abs() <= 1e-17 * (1.0 + s.abs()) {
            return Ok(next);
        }
        s = next;
    }
    if hi - lo < 1e-14 {
        return Ok(s);
    }
    Err(Error::NoConvergence("section crossing root".into()))
}

/// One sweep of the section map from `(x, y, 27)`.
fn section_map(flow: &RealFlow, p: [f64; 2]) -> Result<(f64, [f64; 2])> {
    let (dt, v) = flow.next_crossing([p[0], p[1], SECTION_Z], 20.0)?;
    Ok((dt, [v[0], v[1]]))
}

/// A closed orbit through the section.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub symbols: SymbolSequence,
    pub period: f64,
    pub initial_state: [f64; 3],
    pub closure_residual: f64,
    /// Section points `(x, y)` in itinerary order.
    pub section_points: Vec<[f64; 2]>,
    pub segment_times: Vec<f64>,
}

impl PeriodicOrbit {
    /// Orbit state at time `t` after the initial point.
    pub fn state_at(&self, flow: &RealFlow, t: f64) -> [f64; 3] {
        flow.advance(self.initial_state, t.rem_euclid(self.period))
    }
}

/// Section crossings of a long chaotic run, as (symbol, point).
fn harvest(flow: &RealFlow, count: usize) -> Result<Vec<(bool, [f64; 2])>> {
    let mut v = flow.advance([1.0, 1.0, 1.0], 30.0);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let (_, w) = flow.next_crossing(v, 50.0)?;
        out.push((w[0] > 0.0, [w[0], w[1]]));
        v = w;
    }
    Ok(out)
}

fn newton_shoot(flow: &RealFlow, mut p: Vec<[f64; 2]>) -> Result<(Vec<[f64; 2]>, Vec<f64>, f64)> {
    let n = p.len();
    let residual = |p: &[[f64; 2]]| -> Result<(DVector<f64>, Vec<f64>)> {
        let mut g = DVector::zeros(2 * n);
        let mut times = Vec::with_capacity(n);
        for i in 0..n {
            let (dt, q) = section_map(flow, p[i])?;
            let nx = p[(i + 1) % n];
            g[2 * i] = q[0] - nx[0];
            g[2 * i + 1] = q[1] - nx[1];
            times.push(dt);
        }
        Ok((g, times))
    };
    let (mut g, mut times) = residual(&p)?;
    for _ in 0..40 {
        if g.amax() < 1e-12 {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            for k in 0..2 {
                let h = 1e-7 * p[i][k].abs().max(1.0);
                let (mut a, mut b) = (p[i], p[i]);
                a[k] += h;
                b[k] -= h;
                let (qa, qb) = (section_map(flow, a)?.1, section_map(flow, b)?.1);
                jac[(2 * i, 2 * i + k)] = (qa[0] - qb[0]) / (2.0 * h);
                jac[(2 * i + 1, 2 * i + k)] = (qa[1] - qb[1]) / (2.0 * h);
            }
            let j = (i + 1) % n;
            jac[(2 * i, 2 * j)] -= 1.0;
            jac[(2 * i + 1, 2 * j + 1)] -= 1.0;
        }
        let dx = jac.lu().solve(&(-&g)).ok_or_else(|| Error::NoConvergence("singular shooting Jacobian".into()))?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<[f64; 2]> =
                (0..n).map(|i| [p[i][0] + lambda * dx[2 * i], p[i][1] + lambda * dx[2 * i + 1]]).collect();
            match residual(&trial) {
                Ok((g2, t2)) if g2.amax() < g.amax() || lambda < 1e-3 => {
                    p = trial;
                    g = g2;
                    times = t2;
                    break;
                }
                _ if lambda < 1e-3 => return Err(Error::NoConvergence("shooting line search failed".into())),
                _ => lambda *= 0.5,
            }
        }
    }
    let err = g.amax();
    if err >= 1e-10 {
        return Err(Error::NoConvergence(format!("shooting stalled at residual {err:.2e}")));
    }
    Ok((p, times, err))
}

/// Newton multiple shooting on the section map. Initial points come from
/// `guess` iterated through the section, or else from the closest matching
/// window of a long chaotic run.
pub fn find_periodic_orbit(symbols: &SymbolSequence, guess: Option<[f64; 3]>) -> Result<PeriodicOrbit> {
    let want: Vec<bool> = symbols.symbols().collect();
    let n = want.len();
    if n < 2 || want.iter().all(|&a| a) || want.iter().all(|&a| !a) {
        return Err(Error::Precondition(format!("{symbols} must have length >= 2 and use both symbols")));
    }
    let flow = RealFlow::default();
    let mut starts: Vec<Vec<[f64; 2]>> = Vec::new();
    if let Some(g) = guess {
        let mut p = [g[0], g[1]];
        let mut pts = Vec::new();
        for _ in 0..n {
            pts.push(p);
            p = section_map(&flow, p)?.1;
        }
        starts.push(pts);
    } else {
        let crossings = harvest(&flow, 4000)?;
        let mut windows: Vec<(f64, usize)> = (0..crossings.len() - n)
            .filter(|&k| (0..=n).all(|i| crossings[k + i].0 == want[i % n]))
            .map(|k| {
                let (a, b) = (crossings[k].1, crossings[k + n].1);
                ((a[0] - b[0]).hypot(a[1] - b[1]), k)
            })
            .collect();
        windows.sort_by(|a, b| a.0.total_cmp(&b.0));
        starts.extend(windows.iter().take(8).map(|&(_, k)| (0..n).map(|i| crossings[k + i].1).collect()));
    }
    let mut last_err = Error::NoConvergence(format!("no section window matches {symbols}"));
    for start in starts {
        match newton_shoot(&flow, start) {
            Ok((p, times, _)) => {
                let got: Vec<bool> = p.iter().map(|q| q[0] > 0.0).collect();
                if got != want {
                    last_err = Error::NoConvergence(format!("converged itinerary differs from {symbols}"));
                    continue;
                }
                // Closure by one uninterrupted pass through all n crossings.
                let mut v = [p[0][0], p[0][1], SECTION_Z];
                for _ in 0..n {
                    v = flow.next_crossing(v, 20.0)?.1;
                }
                let closure = (v[0] - p[0][0]).abs().max((v[1] - p[0][1]).abs());
                return Ok(PeriodicOrbit {
                    symbols: symbols.clone(),
                    period: times.iter().sum(),
                    initial_state: [p[0][0], p[0][1], SECTION_Z],
                    closure_residual: closure,
                    section_points: p,
                    segment_times: times,
                });
            }
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_validation() {
        assert!("ABBA".parse::<SymbolSequence>().is_ok());
        assert!("".parse::<SymbolSequence>().is_err());
        assert!("ABC".parse::<SymbolSequence>().is_err());
        let aaa: SymbolSequence = "AAA".parse().unwrap();
        assert!(matches!(find_periodic_orbit(&aaa, None), Err(Error::Precondition(_))));
    }

    #[test]
    fn crossing_lands_on_plane() {
        let flow = RealFlow::default();
        let (dt, v) = flow.next_crossing([1.0, 1.0, 30.0], 50.0).unwrap();
        assert!(dt > 0.0);
        assert!((v[2] - SECTION_Z).abs() < 1e-12);
    }
}
