//! Periodic orbits of the real system, their complex-time singularities, and
//! psi-series fits at those singularities.

mod fit;
mod locate;
mod orbit;
mod report;

pub use fit::{
    annulus_samples, detect_family, fit_psi_parameters, fit_series, AnnulusSpec, FitConfig, FitGuess, SingularityFit,
};
pub use locate::{
    check_divergence_bound, conjugate_pair_fit, leading_order_offset, locate_orbit_singularities,
    nearest_singularity_estimate, refine_singularity, Approach, DivergenceReport, LocateConfig, LocatedSingularity,
    RefineConfig, SingularityEstimate, Stage,
};
pub use orbit::{find_periodic_orbit, PeriodicOrbit, RealFlow, SymbolSequence, SECTION_Z};
pub use report::{
    analyze_orbit, fit_at, orbit_state, write_json, AnalysisConfig, FitSummary, OrbitAnalysis, OrbitRecord,
    SingularityRecord,
};
