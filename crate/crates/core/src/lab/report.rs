//! JSON records for orbits and their singularities, plus the end-to-end
//! pipeline that produces them.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fit::{annulus_samples, fit_psi_parameters, fit_series, AnnulusSpec, FitConfig, FitGuess, SingularityFit};
use super::locate::{locate_orbit_singularities, LocateConfig, LocatedSingularity, Stage};
use super::orbit::{find_periodic_orbit, PeriodicOrbit, RealFlow, SymbolSequence};
use crate::error::{Error, Result};
use crate::ode::State;
use crate::psi::SeriesFamily;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub symbols: SymbolSequence,
    pub period: f64,
    pub initial_state: [f64; 3],
    pub closure_residual: f64,
}

impl From<&PeriodicOrbit> for OrbitRecord {
    fn from(o: &PeriodicOrbit) -> Self {
        Self {
            symbols: o.symbols.clone(),
            period: o.period,
            initial_state: o.initial_state,
            closure_residual: o.closure_residual,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    #[serde(rename = "C")]
    pub c: Complex64,
    #[serde(rename = "D")]
    pub d: Complex64,
    pub family: SeriesFamily,
    pub rms: f64,
    pub holdout_rms: f64,
    pub n: i64,
}

impl From<&SingularityFit> for FitSummary {
    fn from(f: &SingularityFit) -> Self {
        Self { c: f.c, d: f.d, family: f.family, rms: f.rms_residual, holdout_rms: f.holdout_rms, n: f.n }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularityRecord {
    pub orbit: SymbolSequence,
    pub t_star: f64,
    pub rho: f64,
    pub theta: f64,
    pub t0: Complex64,
    pub stage: Stage,
    pub fit: Option<FitSummary>,
}

/// Settings for [`analyze_orbit`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub locate: LocateConfig,
    /// Annulus radius `r`; samples lie in `r/4 ≤ |t - t0| ≤ r/2`.
    pub fit_radius: f64,
    pub fit_order: i64,
    pub fit: FitConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { locate: LocateConfig::default(), fit_radius: 0.04, fit_order: 20, fit: FitConfig::default() }
    }
}

/// Orbit, its singularities (nearest first) and a fit at the nearest one.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitAnalysis {
    pub orbit: PeriodicOrbit,
    pub singularities: Vec<LocatedSingularity>,
    pub fit: SingularityFit,
}

impl OrbitAnalysis {
    pub fn orbit_record(&self) -> OrbitRecord {
        OrbitRecord::from(&self.orbit)
    }

    pub fn singularity_record(&self) -> SingularityRecord {
        let s = &self.singularities[0].refined;
        SingularityRecord {
            orbit: self.orbit.symbols.clone(),
            t_star: s.t_star,
            rho: s.rho,
            theta: s.theta,
            t0: s.t0,
            stage: s.stage,
            fit: Some(FitSummary::from(&self.fit)),
        }
    }

    /// Writes `orbit_<symbols>.json` and `sing_<symbols>.json` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let tag = self.orbit.symbols.as_str();
        Ok(vec![
            write_json(dir, &format!("orbit_{tag}.json"), &self.orbit_record())?,
            write_json(dir, &format!("sing_{tag}.json"), &self.singularity_record())?,
        ])
    }
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let io = |e: std::io::Error| Error::Domain(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(io)?;
    Ok(path)
}

/// Real state on the orbit at `t`.
pub fn orbit_state(orbit: &PeriodicOrbit, t: f64) -> State {
    State::real(t, orbit.state_at(&RealFlow::default(), t))
}

/// Fits the psi series at `t0`, starting from the real orbit point below it.
pub fn fit_at(orbit: &PeriodicOrbit, t0: Complex64, cfg: &AnalysisConfig) -> Result<SingularityFit> {
    let start = orbit_state(orbit, t0.re);
    let samples = annulus_samples(&start, t0, &AnnulusSpec::from_radius(cfg.fit_radius), &cfg.locate.refine.precision)?;
    let series = fit_series(cfg.fit_order)?;
    let guess = FitGuess { t0, c: Complex64::new(0.0, 0.0), d: Complex64::new(0.0, 0.0) };
    fit_psi_parameters(&samples, &series, guess, cfg.fit_order, &cfg.fit)
}

/// Orbit search, singularity location and a fit at the nearest singularity.
pub fn analyze_orbit(symbols: &SymbolSequence, cfg: &AnalysisConfig) -> Result<OrbitAnalysis> {
    let orbit = find_periodic_orbit(symbols, None)?;
    let singularities = locate_orbit_singularities(&orbit, &cfg.locate)?;
    let fit = fit_at(&orbit, singularities[0].refined.t0, cfg)?;
    Ok(OrbitAnalysis { orbit, singularities, fit })
}
