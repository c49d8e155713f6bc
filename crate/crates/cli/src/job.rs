//! Job parameters: command-line flags layered over an optional TOML file.

use std::path::{Path, PathBuf};

use clap::Args;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use lorenz_psi::exact::parse_rational;
use lorenz_psi::{DMode, GaussianRational, SeriesFamily};

use crate::run::Failure;

/// A complex number given as `"re,im"`, a bare real, or (in TOML) `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumArg {
    Real(f64),
    Pair([f64; 2]),
    Text(String),
}

impl std::str::FromStr for NumArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(NumArg::Text(s.to_string()))
    }
}

fn parse_f64(s: &str) -> Result<f64, Failure> {
    s.trim().parse().map_err(|_| Failure::Usage(format!("not a number: {s:?}")))
}

impl NumArg {
    pub fn complex(&self) -> Result<Complex64, Failure> {
        match self {
            NumArg::Real(x) => Ok(Complex64::new(*x, 0.0)),
            NumArg::Pair([a, b]) => Ok(Complex64::new(*a, *b)),
            NumArg::Text(s) => match s.split_once(',') {
                Some((a, b)) => Ok(Complex64::new(parse_f64(a)?, parse_f64(b)?)),
                None => Ok(Complex64::new(parse_f64(s)?, 0.0)),
            },
        }
    }
}

/// Square grid of evaluation points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub re: [f64; 2],
    pub im: [f64; 2],
    pub steps: [usize; 2],
}

impl Grid {
    pub fn points(&self) -> Vec<Complex64> {
        let axis = |[a, b]: [f64; 2], n: usize| -> Vec<f64> {
            if n <= 1 {
                vec![a]
            } else {
                (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
            }
        };
        let (xs, ys) = (axis(self.re, self.steps[0]), axis(self.im, self.steps[1]));
        ys.iter().flat_map(|&y| xs.iter().map(move |&x| Complex64::new(x, y))).collect()
    }
}

/// Every setting a subcommand may read. TOML keys are the flag names.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Params {
    /// Highest rung m
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_m: Option<i64>,
    /// plus or minus
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    /// symbolic, or numeric:<re>,<im> (exact decimals or fractions)
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<String>,
    /// Constant C as re,im
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<NumArg>,
    /// Branch direction b as re,im (unit modulus)
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<NumArg>,
    /// Singularity t0 as re,im
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<NumArg>,
    /// Truncation, Taylor or jet order, depending on the subcommand
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision_bits: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Worker threads for multi-orbit runs
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// json, latex or csv
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    /// Random real states for the growth-rate check in `bounds`
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_samples: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,

    // File-only inputs.
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 2]>>,
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub waypoints: Option<Vec<[f64; 2]>>,
    /// Initial `[x, y, z]`, each `[re, im]`.
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<[[f64; 2]; 3]>,
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbols: Option<Vec<String>>,
}

macro_rules! overlay {
    ($top:ident, $base:ident, $($f:ident),*) => {
        Params { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Params {
    /// Reads `path` (if any) and lets `self` override it.
    pub fn layered(self, path: Option<&Path>) -> Result<Params, Failure> {
        let Some(path) = path else { return Ok(self) };
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let base: Params = toml::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let top = self;
        Ok(overlay!(
            top,
            base,
            max_m,
            family,
            d,
            c,
            b,
            t0,
            order,
            tol,
            precision_bits,
            output_dir,
            jobs,
            seed,
            format,
            growth_samples,
            max_step,
            points,
            grid,
            waypoints,
            start,
            symbols
        ))
    }

    pub fn family(&self) -> Result<SeriesFamily, Failure> {
        match &self.family {
            None => Ok(SeriesFamily::Plus),
            Some(s) => s.parse().map_err(|e: lorenz_psi::Error| Failure::Usage(e.to_string())),
        }
    }

    /// `D` as given; `None` means the default for the subcommand.
    pub fn d_mode(&self) -> Result<Option<DMode>, Failure> {
        let Some(s) = &self.d else { return Ok(None) };
        if s == "symbolic" {
            return Ok(Some(DMode::Symbolic));
        }
        let bad = || Failure::Usage(format!("--d must be symbolic or numeric:<re>,<im>, got {s:?}"));
        let body = s.strip_prefix("numeric:").ok_or_else(bad)?;
        let (re, im) = body.split_once(',').unwrap_or((body, "0"));
        let g = GaussianRational::new(parse_rational(re).map_err(|_| bad())?, parse_rational(im).map_err(|_| bad())?);
        Ok(Some(DMode::Numeric(g)))
    }

    /// Numeric `D`, defaulting to 0; symbolic is a usage error here.
    pub fn d_numeric(&self, what: &str) -> Result<GaussianRational, Failure> {
        match self.d_mode()? {
            None => Ok(GaussianRational::zero()),
            Some(DMode::Numeric(g)) => Ok(g),
            Some(DMode::Symbolic) => Err(Failure::Usage(format!("{what} needs a numeric D"))),
        }
    }

    pub fn c(&self) -> Result<Complex64, Failure> {
        self.c.as_ref().map_or(Ok(Complex64::new(0.0, 0.0)), NumArg::complex)
    }

    pub fn t0(&self) -> Result<Complex64, Failure> {
        self.t0.as_ref().ok_or_else(|| Failure::Usage("--t0 is required".into()))?.complex()
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("results"))
    }

    pub fn jobs(&self) -> usize {
        self.jobs.unwrap_or(1).max(1)
    }

    /// Points from `points` or `grid`.
    pub fn points(&self) -> Result<Vec<Complex64>, Failure> {
        match (&self.points, &self.grid) {
            (Some(p), None) => Ok(p.iter().map(|[a, b]| Complex64::new(*a, *b)).collect()),
            (None, Some(g)) => Ok(g.points()),
            (None, None) => Err(Failure::Usage("the job file must list `points` or a `grid`".into())),
            (Some(_), Some(_)) => Err(Failure::Usage("give either `points` or `grid`, not both".into())),
        }
    }
}
