//! `lorenz-psi`: coefficient generation, bounds, evaluation, integration,
//! periodic orbits and complex-time singularities of the Lorenz system.

mod commands;
mod job;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use job::Params;
use run::{Ctx, Failure};

#[derive(Parser)]
#[command(name = "lorenz-psi", version, about = "Psi-series singular solutions of the Lorenz system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Run {
    /// TOML job file; keys are flag names, flags take precedence
    #[arg(long)]
    job: Option<PathBuf>,
    #[command(flatten)]
    params: Params,
}

#[derive(Args)]
struct OrbitRun {
    /// Symbol sequences over A, B (e.g. AB AAB)
    symbols: Vec<String>,
    #[command(flatten)]
    run: Run,
}

#[derive(Subcommand)]
enum Command {
    /// Dump coefficients X_m = (P_{m+1}, Q_m, R_m) as JSON, LaTeX or CSV
    GenCoeffs(Run),
    /// Compare generated coefficients with the published table
    VerifyTable1(Run),
    /// Norm bounds, majorant dominance and K2
    Bounds(Run),
    /// Convergence radius and branch radii for a given C
    Radius(Run),
    /// Evaluate a truncated series at points from the job file
    Eval(Run),
    /// ODE residual of truncated series against truncation order
    Residual(Run),
    /// Taylor integration along a complex-time path
    Integrate(Run),
    /// Periodic orbits by symbol sequence
    FindOrbit(OrbitRun),
    /// Complex singularities nearest each orbit
    Locate(OrbitRun),
    /// Fit (t0, C, D) at the nearest singularity of each orbit
    Fit(OrbitRun),
}

fn dispatch(command: Command) -> Result<(), Failure> {
    let (name, run, words): (&'static str, Run, Vec<String>) = match command {
        Command::GenCoeffs(r) => ("gen-coeffs", r, vec![]),
        Command::VerifyTable1(r) => ("verify-table1", r, vec![]),
        Command::Bounds(r) => ("bounds", r, vec![]),
        Command::Radius(r) => ("radius", r, vec![]),
        Command::Eval(r) => ("eval", r, vec![]),
        Command::Residual(r) => ("residual", r, vec![]),
        Command::Integrate(r) => ("integrate", r, vec![]),
        Command::FindOrbit(o) => ("find-orbit", o.run, o.symbols),
        Command::Locate(o) => ("locate", o.run, o.symbols),
        Command::Fit(o) => ("fit", o.run, o.symbols),
    };
    let params = run.params.layered(run.job.as_deref())?;
    let mut ctx = Ctx::new(name, params);
    let result = match name {
        "gen-coeffs" => commands::gen_coeffs(&mut ctx),
        "verify-table1" => commands::verify_table1(&mut ctx),
        "bounds" => commands::bounds(&mut ctx),
        "radius" => commands::radius(&mut ctx),
        "eval" => commands::eval(&mut ctx),
        "residual" => commands::residual(&mut ctx),
        "integrate" => commands::integrate(&mut ctx),
        "find-orbit" => commands::find_orbit(&mut ctx, words),
        "locate" => commands::locate(&mut ctx, words),
        _ => commands::fit(&mut ctx, words),
    };
    ctx.finish(&result)?;
    result
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("lorenz-psi: {f}");
            f.code()
        }
    }
}
