//! Stability scan over a `(D, h)` grid.
//!
//! A cell is unstable as soon as one trajectory leaves `|x| ≤ threshold`.
//! Trajectories within a cell run in index order and the cell stops at the
//! first blow-up, so the reported divergence is always the one of the lowest
//! diverging trajectory index.

use crate::error::{Error, Result};
use crate::increments::draw_increment;
use crate::model::{benchmark_problem, sample_equilibrium, EquilibriumSpec};
use crate::parallel::Parallelism;
use crate::rng::{stream_index, RandomStream};
use crate::schemes::{dispatch, SchemeId, StepInput, DEFAULT_ITERATIONS};

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityConfig {
    pub schemes: Vec<SchemeId>,
    pub d_values: Vec<f64>,
    pub h_values: Vec<f64>,
    pub trajectories: u64,
    pub horizon: f64,
    pub threshold: f64,
    pub seed: u64,
    pub iterations: u32,
    pub parallelism: Parallelism,
}

impl StabilityConfig {
    /// 10×10 logarithmic grid, D ∈ [0.01, 0.5], h ∈ [0.001, 0.5],
    /// 300 trajectories to T = 1000.
    pub fn desk(schemes: Vec<SchemeId>) -> Self {
        Self {
            schemes,
            d_values: log_grid(1e-2, 0.5, 10),
            h_values: log_grid(1e-3, 0.5, 10),
            trajectories: 300,
            horizon: 1e3,
            threshold: 100.0,
            seed: 1,
            iterations: DEFAULT_ITERATIONS,
            parallelism: Parallelism::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() || self.d_values.is_empty() || self.h_values.is_empty() {
            return Err(Error::config("stability grids must be non-empty"));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::config("divergence threshold must be positive"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::config("horizon must be positive"));
        }
        if self.trajectories == 0 || self.trajectories >= 1 << 32 {
            return Err(Error::config("trajectories must lie in 1..2^32"));
        }
        for &d in &self.d_values {
            EquilibriumSpec::stratonovich(d)?;
        }
        for &h in &self.h_values {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::NonPositiveStep(h));
            }
        }
        self.parallelism.validate()
    }
}

/// `n` values from `lo` to `hi` equally spaced in `ln`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let mut v: Vec<f64> = (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect();
            v[0] = lo;
            v[n - 1] = hi;
            v
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityCell {
    pub scheme: SchemeId,
    pub d: f64,
    pub h: f64,
    pub stable: bool,
    pub first_divergence_time: Option<f64>,
    /// Trajectories integrated, including the one that diverged.
    pub trajectories_completed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityGrid {
    pub cells: Vec<StabilityCell>,
}

impl StabilityGrid {
    pub fn cells_for(&self, scheme: SchemeId) -> impl Iterator<Item = &StabilityCell> {
        self.cells.iter().filter(move |c| c.scheme == scheme)
    }
}

/// Number of stable cells for `scheme`.
pub fn stable_count(grid: &StabilityGrid, scheme: SchemeId) -> usize {
    grid.cells_for(scheme).filter(|c| c.stable).count()
}

pub fn run_stability(cfg: &StabilityConfig) -> Result<StabilityGrid> {
    cfg.validate()?;
    let n_h = cfg.h_values.len();
    let mut tasks = Vec::new();
    for &scheme in &cfg.schemes {
        for (di, &d) in cfg.d_values.iter().enumerate() {
            for (hi, &h) in cfg.h_values.iter().enumerate() {
                tasks.push((scheme, (di * n_h + hi) as u64, d, h));
            }
        }
    }
    let cells = cfg
        .parallelism
        .map_tasks(&tasks, |&(scheme, cell, d, h)| run_cell(cfg, scheme, cell, d, h))?;
    Ok(StabilityGrid {
        cells: cells.into_iter().collect::<Result<_>>()?,
    })
}

fn run_cell(cfg: &StabilityConfig, scheme: SchemeId, cell: u64, d: f64, h: f64) -> Result<StabilityCell> {
    let problem = benchmark_problem(d)?;
    let eq = EquilibriumSpec::stratonovich(d)?;
    let stepper = dispatch(scheme).with_iterations(cfg.iterations);
    let needs = stepper.needs();
    let n_steps = (cfg.horizon / h).ceil() as u64;
    let mut completed = 0;
    for traj in 0..cfg.trajectories {
        completed += 1;
        // Streams depend on the (D, h) cell only, so all schemes see the same noise.
        let mut stream = RandomStream::new(cfg.seed, stream_index(cell, traj));
        let mut x = sample_equilibrium(&mut stream, &eq);
        let mut t = 0.0;
        for k in 0..n_steps {
            let inc = draw_increment(&mut stream, h, needs)?;
            x = stepper.step(&problem, &StepInput::new(x, t, inc));
            t = (k + 1) as f64 * h;
            if x.abs() > cfg.threshold {
                return Ok(StabilityCell {
                    scheme,
                    d,
                    h,
                    stable: false,
                    first_divergence_time: Some(t),
                    trajectories_completed: completed,
                });
            }
        }
    }
    Ok(StabilityCell {
        scheme,
        d,
        h,
        stable: true,
        first_divergence_time: None,
        trajectories_completed: completed,
    })
}
