//! Strong-convergence measurement on shared Brownian paths.
//!
//! Each trajectory draws its noise once at the finest step `h_s = t_end/2^k`.
//! Coarser paths are built by composing neighbouring increments, so every
//! level sees the same Brownian path. The error at level `n` is
//! `|x(h_n) − x_ref|`, where `x_ref` is either the same scheme run at `h_s`
//! or the closed-form solution when the problem has one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_points, PowerLawFit};
use crate::increments::{coarsen_pairs, draw_increment, NoiseIncrement};
use crate::model::{
    benchmark_problem, convert_drift, sample_equilibrium, validation_problem, EquilibriumSpec,
    SdeProblem,
};
use crate::parallel::Parallelism;
use crate::rng::RandomStream;
use crate::schemes::{dispatch, SchemeId, Stepper, DEFAULT_ITERATIONS};

/// Fit window used with the exact reference. Without the `h_s` bias of a
/// same-scheme reference the asymptotic regime is visible down to the finest
/// levels, while above ~1e-3 the deterministic O(h) drift error of the
/// order-1/2 schemes is still comparable to the stochastic part.
pub const ANALYTIC_FIT_WINDOW: (f64, f64) = (1e-4, 5e-4);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    /// `dx = −x(1+x²) dt + √(2D)(1+x²) ∘ dW`
    Benchmark,
    /// `dx = x dt + D x ∘ dW`
    Validation,
}

impl ModelChoice {
    pub fn build(self, d: f64) -> Result<SdeProblem> {
        match self {
            ModelChoice::Benchmark => benchmark_problem(d),
            ModelChoice::Validation => validation_problem(d),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceKind {
    /// The scheme under test at the finest step.
    Same,
    /// The closed-form solution driven by the same Wiener path.
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialCondition {
    /// Drawn from the Stratonovich equilibrium density of the benchmark at the
    /// configured `D`.
    Equilibrium,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceConfig {
    pub scheme: SchemeId,
    pub model: ModelChoice,
    pub d: f64,
    pub t_end: f64,
    /// `k` in `h_s = t_end / 2^k`.
    pub ref_exponent: u32,
    /// Inclusive `[n_lo, n_hi]`, `h_n = 2^n h_s`.
    pub coarse_levels: (u32, u32),
    pub trajectories: u64,
    pub fit_window: (f64, f64),
    pub seed: u64,
    pub reference: ReferenceKind,
    pub initial: InitialCondition,
    /// Integrate Itô-limit schemes on the Itô form of the drift, so every
    /// scheme targets the same process.
    pub match_calculus: bool,
    pub guard: f64,
    pub iterations: u32,
    pub parallelism: Parallelism,
}

impl ConvergenceConfig {
    /// Benchmark model, same-scheme reference, equilibrium start.
    pub fn benchmark(scheme: SchemeId, d: f64) -> Self {
        Self {
            scheme,
            model: ModelChoice::Benchmark,
            d,
            t_end: 1.0,
            ref_exponent: 14,
            coarse_levels: (1, 8),
            trajectories: 20_000,
            fit_window: (1e-3, 1e-2),
            seed: 1,
            reference: ReferenceKind::Same,
            initial: InitialCondition::Equilibrium,
            match_calculus: false,
            guard: 1e10,
            iterations: DEFAULT_ITERATIONS,
            parallelism: Parallelism::default(),
        }
    }

    /// Analytically solvable model with the exact solution as reference.
    pub fn analytic(scheme: SchemeId, d: f64) -> Self {
        Self {
            model: ModelChoice::Validation,
            reference: ReferenceKind::Exact,
            initial: InitialCondition::Fixed(1.0),
            match_calculus: true,
            fit_window: ANALYTIC_FIT_WINDOW,
            ..Self::benchmark(scheme, d)
        }
    }

    pub fn fine_step(&self) -> f64 {
        self.t_end / 2f64.powi(self.ref_exponent as i32)
    }

    pub fn level_step(&self, level: u32) -> f64 {
        self.fine_step() * 2f64.powi(level as i32)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::config("t_end must be positive"));
        }
        if self.ref_exponent == 0 || self.ref_exponent > 30 {
            return Err(Error::config("ref_exponent must lie in 1..=30"));
        }
        let (lo, hi) = self.coarse_levels;
        if lo == 0 || lo > hi || hi > self.ref_exponent {
            return Err(Error::config(format!(
                "coarse levels must satisfy 1 <= n_lo <= n_hi <= k, got [{lo}, {hi}] with k = {}",
                self.ref_exponent
            )));
        }
        if self.trajectories == 0 || self.trajectories >= 1 << 32 {
            return Err(Error::config("trajectories must lie in 1..2^32"));
        }
        let (wlo, whi) = self.fit_window;
        if !(wlo > 0.0 && wlo < whi) {
            return Err(Error::config("fit window must satisfy 0 < h_min < h_max"));
        }
        let in_window = (lo..=hi)
            .map(|n| self.level_step(n))
            .filter(|h| *h >= wlo && *h <= whi)
            .count();
        if in_window < 3 {
            return Err(Error::config(format!(
                "fit window [{wlo}, {whi}] holds {in_window} level step sizes; need at least 3"
            )));
        }
        if self.reference == ReferenceKind::Exact && self.model != ModelChoice::Validation {
            return Err(Error::config(
                "exact reference needs a model with a closed-form solution",
            ));
        }
        if let InitialCondition::Equilibrium = self.initial {
            EquilibriumSpec::stratonovich(self.d)?;
        }
        if !(self.guard > 0.0) {
            return Err(Error::config("divergence guard must be positive"));
        }
        self.model.build(self.d)?;
        self.parallelism.validate()
    }

    /// The problem the scheme actually integrates.
    pub fn problem(&self) -> Result<SdeProblem> {
        let p = self.model.build(self.d)?;
        let limit = self.scheme.limit_convention();
        Ok(if self.match_calculus && p.convention() != limit {
            convert_drift(&p, p.convention(), limit)
        } else {
            p
        })
    }

    fn stepper(&self) -> Stepper {
        dispatch(self.scheme).with_iterations(self.iterations)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorLevel {
    pub level: u32,
    pub h: f64,
    /// Mean of `|x(h) − x_ref|` over non-diverged trajectories; NaN when none.
    pub mean_abs_error: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub n_diverged: u64,
}

impl ErrorLevel {
    pub fn is_valid(&self) -> bool {
        self.n_samples > 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorCurve {
    pub scheme: SchemeId,
    pub d: f64,
    pub trajectories: u64,
    pub levels: Vec<ErrorLevel>,
}

impl ErrorCurve {
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.levels
            .iter()
            .filter(|l| l.is_valid())
            .map(|l| (l.h, l.mean_abs_error))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct LevelAcc {
    sum: f64,
    sum_sq: f64,
    count: u64,
    diverged: u64,
}

impl LevelAcc {
    fn add(&mut self, err: f64) {
        self.sum += err;
        self.sum_sq += err * err;
        self.count += 1;
    }

    fn merge(&mut self, other: &LevelAcc) {
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.count += other.count;
        self.diverged += other.diverged;
    }
}

struct Workspace {
    fine: Vec<NoiseIncrement>,
    a: Vec<NoiseIncrement>,
    b: Vec<NoiseIncrement>,
}

/// Runs the convergence protocol and returns the per-level error curve.
pub fn run_convergence(cfg: &ConvergenceConfig) -> Result<ErrorCurve> {
    cfg.validate()?;
    let problem = cfg.problem()?;
    let stepper = cfg.stepper();
    let (lo, hi) = cfg.coarse_levels;
    let n_levels = (hi - lo + 1) as usize;
    let eq = match cfg.initial {
        InitialCondition::Equilibrium => Some(EquilibriumSpec::stratonovich(cfg.d)?),
        InitialCondition::Fixed(_) => None,
    };
    let n_fine = 1usize << cfg.ref_exponent;
    let h_s = cfg.fine_step();

    let chunks = cfg.parallelism.map_chunks(cfg.trajectories, |range| {
        let mut acc = vec![LevelAcc::default(); n_levels];
        let mut ws = Workspace {
            fine: Vec::with_capacity(n_fine),
            a: Vec::with_capacity(n_fine / 2),
            b: Vec::with_capacity(n_fine / 4),
        };
        for traj in range {
            run_trajectory(
                cfg, &problem, &stepper, eq.as_ref(), traj, h_s, n_fine, &mut ws, &mut acc,
            )?;
        }
        Ok::<_, Error>(acc)
    })?;

    let mut total = vec![LevelAcc::default(); n_levels];
    for chunk in chunks {
        for (t, c) in total.iter_mut().zip(chunk?.iter()) {
            t.merge(c);
        }
    }

    let levels = total
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let level = lo + i as u32;
            let (mean, se) = if a.count == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let n = a.count as f64;
                let mean = a.sum / n;
                let var = if a.count > 1 {
                    ((a.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
                } else {
                    0.0
                };
                (mean, (var / n).sqrt())
            };
            ErrorLevel {
                level,
                h: cfg.level_step(level),
                mean_abs_error: mean,
                std_error: se,
                n_samples: a.count,
                n_diverged: a.diverged,
            }
        })
        .collect();

    Ok(ErrorCurve {
        scheme: cfg.scheme,
        d: cfg.d,
        trajectories: cfg.trajectories,
        levels,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_trajectory(
    cfg: &ConvergenceConfig,
    problem: &SdeProblem,
    stepper: &Stepper,
    eq: Option<&EquilibriumSpec>,
    traj: u64,
    h_s: f64,
    n_fine: usize,
    ws: &mut Workspace,
    acc: &mut [LevelAcc],
) -> Result<()> {
    let mut stream = RandomStream::new(cfg.seed, traj);
    let x0 = match (cfg.initial, eq) {
        (InitialCondition::Fixed(x), _) => x,
        (InitialCondition::Equilibrium, Some(spec)) => sample_equilibrium(&mut stream, spec),
        (InitialCondition::Equilibrium, None) => unreachable!("spec built when equilibrium start"),
    };

    ws.fine.clear();
    for _ in 0..n_fine {
        ws.fine.push(draw_increment(&mut stream, h_s, stepper.needs())?);
    }

    let x_ref = match cfg.reference {
        ReferenceKind::Same => stepper.integrate(problem, x0, 0.0, &ws.fine, cfg.guard).ok(),
        ReferenceKind::Exact => {
            let w: f64 = ws.fine.iter().map(|i| i.z1()).sum();
            problem.exact_solution(x0, cfg.t_end, w)
        }
    };
    let Some(x_ref) = x_ref else {
        for a in acc.iter_mut() {
            a.diverged += 1;
        }
        return Ok(());
    };

    let (lo, hi) = cfg.coarse_levels;
    coarsen_pairs(&ws.fine, &mut ws.a);
    for level in 1..=hi {
        if level > 1 {
            coarsen_pairs(&ws.a, &mut ws.b);
            std::mem::swap(&mut ws.a, &mut ws.b);
        }
        if level < lo {
            continue;
        }
        let slot = &mut acc[(level - lo) as usize];
        match stepper.integrate(problem, x0, 0.0, &ws.a, cfg.guard) {
            Ok(x) => slot.add((x - x_ref).abs()),
            Err(_) => slot.diverged += 1,
        }
    }
    Ok(())
}

/// Fits `A·h^α` to the valid levels of `curve` inside `window`.
pub fn fit_power_law(curve: &ErrorCurve, window: (f64, f64)) -> Result<PowerLawFit> {
    fit_points(&curve.points(), window)
}
