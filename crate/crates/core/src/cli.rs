//! Command-line driver.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 failure while
//! running or writing results. Configuration is fully resolved and checked
//! before anything is computed or written.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::convergence::{fit_power_law, run_convergence};
use crate::equilibrium::sweep;
use crate::error::{Error, Result};
use crate::increments::Z3Representation;
use crate::manifest::{ExperimentKind, ManifestLayer, RunManifest};
use crate::moments::{composition_moments, representation_moments};
use crate::report::{emit_report, ConvergenceResult, MomentReport, RunInfo, RunResults};
use crate::stability::{run_stability, stable_count};
use crate::validate::run_validation;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "heunbench", version, about = "Benchmarks for scalar SDE integrators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Strong-convergence order fits on shared Brownian paths.
    Convergence(Flags),
    /// Stable-cell scan over a (D, h) grid.
    Stability(Flags),
    /// Long-run histograms against the equilibrium density.
    Equilibrium(Flags),
    /// Analytic orders, reduction identities and increment moments.
    Validate(Flags),
    /// Moment report for the z3 representations.
    Moments(Flags),
}

/// Every flag maps onto the manifest key of the same name. List values are
/// comma-separated.
#[derive(Args, Debug, Default)]
struct Flags {
    /// TOML manifest; flags and HEUNBENCH_* variables override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scheme labels, or `all`.
    #[arg(long = "scheme", value_name = "LIST")]
    schemes: Option<String>,
    /// Noise strengths.
    #[arg(long = "D", value_name = "LIST")]
    d: Option<String>,
    /// Step sizes.
    #[arg(long = "h", value_name = "LIST")]
    h: Option<String>,
    /// Logarithmic D grid `lo,hi,n`.
    #[arg(long, value_name = "LO,HI,N")]
    grid_d: Option<String>,
    /// Logarithmic h grid `lo,hi,n`.
    #[arg(long, value_name = "LO,HI,N")]
    grid_h: Option<String>,
    #[arg(long)]
    trajectories: Option<String>,
    /// Integration horizon.
    #[arg(long)]
    t_end: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    /// Trajectories per work chunk.
    #[arg(long)]
    chunk: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// `k` in h_s = t_end / 2^k.
    #[arg(long)]
    ref_exponent: Option<String>,
    /// Coarse levels `lo,hi`.
    #[arg(long)]
    levels: Option<String>,
    /// Fit window `h_min,h_max`.
    #[arg(long)]
    fit_window: Option<String>,
    /// `same` or `exact`.
    #[arg(long)]
    reference: Option<String>,
    /// `benchmark` or `validation`.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    match_calculus: Option<String>,
    /// Stability divergence threshold on |x|.
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    sample_interval: Option<String>,
    #[arg(long)]
    bin_width: Option<String>,
    #[arg(long)]
    x_max: Option<String>,
    /// Blow-up guard on |x|.
    #[arg(long)]
    guard: Option<String>,
    /// Corrector passes for HePC and HPC-.
    #[arg(long)]
    iterations: Option<String>,
    /// Monte Carlo samples for moment estimates.
    #[arg(long)]
    samples: Option<String>,
    /// Also write plot.py next to the CSVs.
    #[arg(long)]
    plot_script: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        [
            ("schemes", &self.schemes),
            ("D", &self.d),
            ("h", &self.h),
            ("grid_d", &self.grid_d),
            ("grid_h", &self.grid_h),
            ("trajectories", &self.trajectories),
            ("t_end", &self.t_end),
            ("seed", &self.seed),
            ("workers", &self.workers),
            ("chunk", &self.chunk),
            ("out", &self.out),
            ("ref_exponent", &self.ref_exponent),
            ("levels", &self.levels),
            ("fit_window", &self.fit_window),
            ("reference", &self.reference),
            ("model", &self.model),
            ("match_calculus", &self.match_calculus),
            ("threshold", &self.threshold),
            ("sample_interval", &self.sample_interval),
            ("bin_width", &self.bin_width),
            ("x_max", &self.x_max),
            ("guard", &self.guard),
            ("iterations", &self.iterations),
            ("samples", &self.samples),
            ("plot_script", &self.plot_script),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }
}

/// Parses `args` (program name first) and runs, reading overrides from the
/// process environment.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_env(args, std::env::vars())
}

/// As [`run`] with an explicit environment.
pub fn run_with_env<I, T>(args: I, env: impl IntoIterator<Item = (String, String)>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (kind, flags) = match &cli.command {
        Command::Convergence(f) => (ExperimentKind::Convergence, f),
        Command::Stability(f) => (ExperimentKind::Stability, f),
        Command::Equilibrium(f) => (ExperimentKind::Equilibrium, f),
        Command::Validate(f) => (ExperimentKind::Validate, f),
        Command::Moments(f) => (ExperimentKind::Moments, f),
    };
    let manifest = match build_manifest(kind, flags, env) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match execute(&manifest) {
        Ok(all_passed) => {
            if all_passed {
                EXIT_OK
            } else {
                EXIT_RUNTIME
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Config(_)) {
                EXIT_CONFIG
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn build_manifest(
    kind: ExperimentKind,
    flags: &Flags,
    env: impl IntoIterator<Item = (String, String)>,
) -> Result<RunManifest> {
    let file = match &flags.config {
        Some(path) => ManifestLayer::from_file(path)?,
        None => ManifestLayer::default(),
    };
    let layer = file
        .overlay(ManifestLayer::from_env(env)?)
        .overlay(ManifestLayer::from_pairs(flags.pairs())?);
    RunManifest::resolve(kind, layer)
}

/// Runs the experiment `m` describes and writes its report. Returns `false`
/// when a validation check failed.
pub fn execute(m: &RunManifest) -> Result<bool> {
    let start = Instant::now();
    let results = compute(m)?;
    let info = RunInfo {
        version: env!("CARGO_PKG_VERSION").to_owned(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        workers: m.workers,
        chunk: m.chunk,
        seed: m.seed,
    };
    let files = emit_report(&results, m, &info, &m.out)?;
    let all_passed = print_summary(&results);
    let mut out = std::io::stdout().lock();
    for f in files {
        let _ = writeln!(out, "wrote {}", f.display());
    }
    Ok(all_passed)
}

/// Runs the experiment without writing anything.
pub fn compute(m: &RunManifest) -> Result<RunResults> {
    m.validate()?;
    Ok(match m.kind {
        ExperimentKind::Convergence => {
            let mut runs = Vec::new();
            for cfg in m.convergence_configs() {
                let curve = run_convergence(&cfg)?;
                let fit = match fit_power_law(&curve, cfg.fit_window) {
                    Ok(f) => Some(f),
                    Err(Error::TooFewPoints(_)) | Err(Error::NonPositiveError { .. }) => None,
                    Err(e) => return Err(e),
                };
                runs.push(ConvergenceResult {
                    curve,
                    window: cfg.fit_window,
                    fit,
                });
            }
            RunResults::Convergence(runs)
        }
        ExperimentKind::Stability => RunResults::Stability(run_stability(&m.stability_config())?),
        ExperimentKind::Equilibrium => RunResults::Equilibrium(sweep(
            &m.schemes,
            &m.d_values,
            &m.h_values,
            &m.histogram_config(),
        )?),
        ExperimentKind::Validate => RunResults::Validation(run_validation(&m.validation_config())?),
        ExperimentKind::Moments => {
            let mut reports = Vec::new();
            for &h in &m.h_values {
                for rep in [Z3Representation::Cup, Z3Representation::Alt] {
                    reports.push(MomentReport {
                        representation: rep.label(),
                        h,
                        moments: representation_moments(rep, h, m.samples, m.seed)?,
                        composition: composition_moments(rep, h, m.samples, m.seed)?,
                    });
                }
            }
            RunResults::Moments(reports)
        }
    })
}

fn print_summary(results: &RunResults) -> bool {
    let mut out = std::io::stdout().lock();
    let mut all_passed = true;
    let _ = match results {
        RunResults::Convergence(runs) => runs.iter().try_for_each(|r| match r.fit {
            Some(f) => writeln!(
                out,
                "{:<6} D={:<6} alpha = {:.3} ± {:.3}  A = {:.4e} ± {:.1e}",
                r.curve.scheme.label(),
                r.curve.d,
                f.alpha,
                f.sigma_alpha,
                f.a,
                f.sigma_a
            ),
            None => writeln!(out, "{:<6} D={:<6} no fit", r.curve.scheme.label(), r.curve.d),
        }),
        RunResults::Stability(grid) => {
            let mut seen = Vec::new();
            grid.cells.iter().try_for_each(|c| {
                if seen.contains(&c.scheme) {
                    return Ok(());
                }
                seen.push(c.scheme);
                writeln!(
                    out,
                    "{:<6} stable cells: {}/{}",
                    c.scheme.label(),
                    stable_count(grid, c.scheme),
                    grid.cells_for(c.scheme).count()
                )
            })
        }
        RunResults::Equilibrium(cells) => cells.iter().try_for_each(|c| {
            let s = c.primary();
            match s.metrics {
                Some(mt) => writeln!(
                    out,
                    "{:<6} D={} h={} n={}  distance = {:.4}  ratio = {:.4}  diverged = {}",
                    c.scheme.label(),
                    c.d,
                    c.h,
                    s.n,
                    mt.distance,
                    mt.ratio,
                    c.histogram.n_diverged()
                ),
                None => writeln!(out, "{:<6} D={} h={} all trajectories diverged", c.scheme.label(), c.d, c.h),
            }
        }),
        RunResults::Validation(checks) => checks.iter().try_for_each(|c| {
            all_passed &= c.passed;
            writeln!(out, "{c}")
        }),
        RunResults::Moments(reports) => reports.iter().try_for_each(|r| {
            writeln!(out, "{} h={}", r.representation, r.h)?;
            for m in &r.moments {
                writeln!(
                    out,
                    "  {:<12} {:>13.5e} ± {:.1e}  target {:>12.5e}  z = {:>8.2}",
                    m.name,
                    m.measured,
                    m.std_error,
                    m.target,
                    m.z_score()
                )?;
            }
            for c in &r.composition {
                writeln!(
                    out,
                    "  composed {:<12} {:>13.5e} vs direct {:>13.5e}  (± {:.1e})",
                    c.name, c.composed, c.direct, c.std_error
                )?;
            }
            Ok(())
        }),
    };
    all_passed
}
