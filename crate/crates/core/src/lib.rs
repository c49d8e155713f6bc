//! Logarithmic psi-series singular solutions of the Lorenz system
//! `x' = 10(y-x)`, `y' = 28x - y - xz`, `z' = -8z/3 + xy`.
//!
//! * [`exact`]: Gaussian-rational arithmetic, polynomials in `u = η+C` and `D`.
//! * [`psi`]: the coefficient recursion for `X_m = (P_{m+1}, Q_m, R_m)`.
//! * [`bounds`]: coefficient norms, majorants, and convergence radii.
//! * [`eval`]: numeric evaluation of truncated series and their ODE residual.
//! * [`ode`]: Taylor-series integration in complex time.
//! * [`lab`]: periodic orbits, singularity location, and parameter fits.

pub mod bounds;
pub mod error;
pub mod eval;
pub mod exact;
pub mod lab;
pub mod ode;
pub mod psi;

pub use error::{Error, Result};
pub use exact::{GaussianRational, Mat3, PsiPoly, Rational};
pub use psi::{CoeffTriple, DMode, PsiSeries, SeriesFamily};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
