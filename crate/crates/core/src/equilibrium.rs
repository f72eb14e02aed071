//! Long-run sampling of the stationary distribution and its comparison with
//! the closed-form density.
//!
//! Two L¹-type scores are computed on the histogram bins:
//!
//! * distance: `∫ |P_eq − P| dx` over the histogram range;
//! * ratio: `∫ |1 − P/P_eq| dx` over `|x| ≤ x_cut`, where
//!   `P_eq(x_cut) = 10⁻⁴ P_eq(0)`.
//!
//! Both use the midpoint rule on bins, which is exact in the piecewise
//! constant empirical factor.

use crate::error::{Error, Result};
use crate::increments::draw_increment;
use crate::model::{
    benchmark_problem, sample_equilibrium, CalculusConvention, EquilibriumSpec,
};
use crate::parallel::Parallelism;
use crate::rng::RandomStream;
use crate::schemes::{dispatch, SchemeId, StepInput, DEFAULT_ITERATIONS};

/// Fraction of the peak density that bounds the ratio-metric support.
pub const RATIO_SUPPORT_FRACTION: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct HistogramConfig {
    pub bin_width: f64,
    /// Bins cover `[−x_max, x_max]`.
    pub x_max: f64,
    pub sample_interval: f64,
    pub horizon: f64,
    pub trajectories: u64,
    pub seed: u64,
    /// Trajectories with `|x|` above this (or non-finite) are dropped.
    pub guard: f64,
    pub iterations: u32,
    pub parallelism: Parallelism,
}

impl HistogramConfig {
    /// Width 0.02 on [−10, 10], ΔT = 1, T = 500, 2000 trajectories
    /// (10⁶ samples per run).
    pub fn desk() -> Self {
        Self {
            bin_width: 0.02,
            x_max: 10.0,
            sample_interval: 1.0,
            horizon: 500.0,
            trajectories: 2000,
            seed: 1,
            guard: 1e6,
            iterations: DEFAULT_ITERATIONS,
            parallelism: Parallelism::default(),
        }
    }

    pub fn samples_per_trajectory(&self) -> u64 {
        (self.horizon / self.sample_interval).round() as u64
    }

    /// Integration steps between two recorded samples.
    pub fn steps_per_sample(&self, h: f64) -> Result<u64> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::NonPositiveStep(h));
        }
        let k = (self.sample_interval / h).round();
        if k < 1.0 || (k * h - self.sample_interval).abs() > 1e-9 * self.sample_interval {
            return Err(Error::config(format!(
                "sample interval {} is not a whole number of steps h = {h}",
                self.sample_interval
            )));
        }
        Ok(k as u64)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bin_width > 0.0) || !(self.x_max > 0.0) {
            return Err(Error::config("bin width and x_max must be positive"));
        }
        if self.bin_width > self.x_max {
            return Err(Error::config("bin width exceeds the histogram half-range"));
        }
        if !(self.sample_interval > 0.0) || !(self.horizon >= self.sample_interval) {
            return Err(Error::config(
                "need 0 < sample interval <= horizon",
            ));
        }
        if self.trajectories == 0 {
            return Err(Error::config("trajectories must be at least 1"));
        }
        if !(self.guard > 0.0) {
            return Err(Error::config("divergence guard must be positive"));
        }
        self.parallelism.validate()
    }

    /// Checks that the bins cover the ratio-metric support at noise level `d`.
    pub fn validate_for(&self, d: f64) -> Result<()> {
        self.validate()?;
        for conv in [CalculusConvention::Stratonovich, CalculusConvention::Ito] {
            let cut = EquilibriumSpec::new(d, conv)?.support_cut(RATIO_SUPPORT_FRACTION);
            if cut > self.x_max {
                return Err(Error::config(format!(
                    "x_max = {} does not cover the ratio support {cut:.3} at D = {d}",
                    self.x_max
                )));
            }
        }
        Ok(())
    }
}

/// Integer-count histogram on uniform bins over `[−x_max, x_max]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmpiricalDistribution {
    counts: Vec<u64>,
    total: u64,
    out_of_range: u64,
    n_diverged: u64,
    // Stored as bits so the type can be `Eq`.
    bin_width_bits: u64,
    x_max_bits: u64,
}

impl EmpiricalDistribution {
    pub fn new(bin_width: f64, x_max: f64) -> Self {
        let n = (2.0 * x_max / bin_width).round() as usize;
        Self {
            counts: vec![0; n],
            total: 0,
            out_of_range: 0,
            n_diverged: 0,
            bin_width_bits: bin_width.to_bits(),
            x_max_bits: x_max.to_bits(),
        }
    }

    /// A histogram from precomputed counts.
    pub fn from_counts(bin_width: f64, x_max: f64, counts: Vec<u64>, out_of_range: u64) -> Result<Self> {
        let mut e = Self::new(bin_width, x_max);
        if counts.len() != e.counts.len() {
            return Err(Error::config(format!(
                "expected {} bins, got {}",
                e.counts.len(),
                counts.len()
            )));
        }
        e.total = counts.iter().sum::<u64>() + out_of_range;
        e.counts = counts;
        e.out_of_range = out_of_range;
        Ok(e)
    }

    pub fn bin_width(&self) -> f64 {
        f64::from_bits(self.bin_width_bits)
    }

    pub fn x_max(&self) -> f64 {
        f64::from_bits(self.x_max_bits)
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn out_of_range(&self) -> u64 {
        self.out_of_range
    }

    pub fn in_range(&self) -> u64 {
        self.total - self.out_of_range
    }

    pub fn n_diverged(&self) -> u64 {
        self.n_diverged
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let w = self.bin_width();
        let lo = -self.x_max() + i as f64 * w;
        (lo, lo + w)
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        -self.x_max() + (i as f64 + 0.5) * self.bin_width()
    }

    #[inline]
    pub fn record(&mut self, x: f64) {
        self.total += 1;
        let pos = (x + self.x_max()) / self.bin_width();
        if pos >= 0.0 && pos < self.counts.len() as f64 {
            self.counts[pos as usize] += 1;
        } else {
            self.out_of_range += 1;
        }
    }

    /// Adds another histogram with the same binning.
    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.counts.len(), other.counts.len(), "binning mismatch");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
        self.out_of_range += other.out_of_range;
        self.n_diverged += other.n_diverged;
    }

    /// Empirical density of bin `i`, normalised by all recorded samples.
    pub fn density(&self, i: usize) -> f64 {
        self.counts[i] as f64 / (self.total as f64 * self.bin_width())
    }

    /// Sample mean of the bin centres and its standard error.
    pub fn mean_with_error(&self) -> (f64, f64) {
        let n = self.in_range() as f64;
        let (mut s, mut s2) = (0.0, 0.0);
        for (i, &c) in self.counts.iter().enumerate() {
            let x = self.bin_center(i);
            s += c as f64 * x;
            s2 += c as f64 * x * x;
        }
        let mean = s / n;
        let var = s2 / n - mean * mean;
        (mean, (var / n).sqrt())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistributionMetrics {
    pub distance: f64,
    pub ratio: f64,
    pub x_cut: f64,
}

fn ensure_non_empty(e: &EmpiricalDistribution) -> Result<()> {
    if e.in_range() == 0 {
        Err(Error::EmptyHistogram)
    } else {
        Ok(())
    }
}

pub fn distance_metric(e: &EmpiricalDistribution, spec: &EquilibriumSpec) -> Result<f64> {
    ensure_non_empty(e)?;
    let w = e.bin_width();
    Ok((0..e.n_bins())
        .map(|i| (spec.density(e.bin_center(i)) - e.density(i)).abs() * w)
        .sum())
}

pub fn ratio_metric(e: &EmpiricalDistribution, spec: &EquilibriumSpec) -> Result<f64> {
    ensure_non_empty(e)?;
    let cut = spec.support_cut(RATIO_SUPPORT_FRACTION);
    let mut sum = 0.0;
    for i in 0..e.n_bins() {
        let (lo, hi) = e.bin_edges(i);
        let (a, b) = (lo.max(-cut), hi.min(cut));
        if b <= a {
            continue;
        }
        let p_eq = spec.density(e.bin_center(i));
        sum += (1.0 - e.density(i) / p_eq).abs() * (b - a);
    }
    Ok(sum)
}

pub fn metrics(e: &EmpiricalDistribution, spec: &EquilibriumSpec) -> Result<DistributionMetrics> {
    Ok(DistributionMetrics {
        distance: distance_metric(e, spec)?,
        ratio: ratio_metric(e, spec)?,
        x_cut: spec.support_cut(RATIO_SUPPORT_FRACTION),
    })
}

/// Integrates the benchmark with `scheme` at step `h` and histograms the state
/// every `sample_interval`, starting from Stratonovich equilibrium draws.
///
/// Trajectory `i` uses stream `i` of the configured seed, independent of
/// scheme, `D` and `h`.
pub fn run_equilibrium(
    scheme: SchemeId,
    d: f64,
    h: f64,
    cfg: &HistogramConfig,
) -> Result<EmpiricalDistribution> {
    cfg.validate()?;
    let problem = benchmark_problem(d)?;
    let eq = EquilibriumSpec::stratonovich(d)?;
    let stepper = dispatch(scheme).with_iterations(cfg.iterations);
    let needs = stepper.needs();
    let per_sample = cfg.steps_per_sample(h)?;
    let n_samples = cfg.samples_per_trajectory();

    let parts = cfg.parallelism.map_chunks(cfg.trajectories, |range| {
        let mut hist = EmpiricalDistribution::new(cfg.bin_width, cfg.x_max);
        // A diverged trajectory contributes no samples at all.
        let mut pending = Vec::with_capacity(n_samples as usize);
        'traj: for traj in range {
            let mut stream = RandomStream::new(cfg.seed, traj);
            let mut x = sample_equilibrium(&mut stream, &eq);
            let mut step = 0u64;
            pending.clear();
            for _ in 0..n_samples {
                for _ in 0..per_sample {
                    let t = step as f64 * h;
                    let inc = draw_increment(&mut stream, h, needs)?;
                    match stepper.advance(&problem, &StepInput::new(x, t, inc), cfg.guard) {
                        Ok(next) => x = next,
                        Err(_) => {
                            hist.n_diverged += 1;
                            continue 'traj;
                        }
                    }
                    step += 1;
                }
                pending.push(x);
            }
            for &x in &pending {
                hist.record(x);
            }
        }
        Ok::<_, Error>(hist)
    })?;
    merge_parts(cfg, parts)
}

/// Histogram of direct equilibrium draws, with the same sample count as
/// [`run_equilibrium`]. Gives the Monte Carlo noise floor of the metrics.
pub fn run_sampler_only(d: f64, cfg: &HistogramConfig) -> Result<EmpiricalDistribution> {
    cfg.validate()?;
    let eq = EquilibriumSpec::stratonovich(d)?;
    let n_samples = cfg.samples_per_trajectory();
    let parts = cfg.parallelism.map_chunks(cfg.trajectories, |range| {
        let mut hist = EmpiricalDistribution::new(cfg.bin_width, cfg.x_max);
        for traj in range {
            let mut stream = RandomStream::new(cfg.seed, traj);
            for _ in 0..n_samples {
                hist.record(sample_equilibrium(&mut stream, &eq));
            }
        }
        Ok::<_, Error>(hist)
    })?;
    merge_parts(cfg, parts)
}

fn merge_parts(
    cfg: &HistogramConfig,
    parts: Vec<Result<EmpiricalDistribution>>,
) -> Result<EmpiricalDistribution> {
    let mut out = EmpiricalDistribution::new(cfg.bin_width, cfg.x_max);
    for p in parts {
        out.merge(&p?);
    }
    Ok(out)
}

/// Metrics against the density of one calculus (`n` = 0 Stratonovich, 1 Itô).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Score {
    pub n: u8,
    /// `None` when every trajectory diverged.
    pub metrics: Option<DistributionMetrics>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub scheme: SchemeId,
    pub d: f64,
    pub h: f64,
    pub histogram: EmpiricalDistribution,
    pub scores: Vec<Score>,
}

impl SweepCell {
    /// Score against the density of the calculus the scheme converges to.
    pub fn primary(&self) -> &Score {
        let n = self.scheme.limit_convention().equilibrium_offset();
        self.scores
            .iter()
            .find(|s| s.n == n)
            .expect("limit-calculus score is always computed")
    }

    pub fn score(&self, n: u8) -> Option<&Score> {
        self.scores.iter().find(|s| s.n == n)
    }
}

/// Scores a histogram against the Stratonovich density and, for Itô-limit
/// schemes, also against the Itô density.
pub fn score_cell(scheme: SchemeId, d: f64, e: &EmpiricalDistribution) -> Result<Vec<Score>> {
    let mut conventions = vec![CalculusConvention::Stratonovich];
    if scheme.limit_convention() == CalculusConvention::Ito {
        conventions.push(CalculusConvention::Ito);
    }
    conventions
        .into_iter()
        .map(|conv| {
            let spec = EquilibriumSpec::new(d, conv)?;
            let m = match metrics(e, &spec) {
                Ok(m) => Some(m),
                Err(Error::EmptyHistogram) => None,
                Err(err) => return Err(err),
            };
            Ok(Score {
                n: conv.equilibrium_offset(),
                metrics: m,
            })
        })
        .collect()
}

pub fn sweep(
    schemes: &[SchemeId],
    d_values: &[f64],
    h_values: &[f64],
    cfg: &HistogramConfig,
) -> Result<Vec<SweepCell>> {
    for &d in d_values {
        cfg.validate_for(d)?;
    }
    for &h in h_values {
        cfg.steps_per_sample(h)?;
    }
    let mut cells = Vec::with_capacity(schemes.len() * d_values.len() * h_values.len());
    for &scheme in schemes {
        for &d in d_values {
            for &h in h_values {
                let histogram = run_equilibrium(scheme, d, h, cfg)?;
                let scores = score_cell(scheme, d, &histogram)?;
                cells.push(SweepCell {
                    scheme,
                    d,
                    h,
                    histogram,
                    scores,
                });
            }
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> HistogramConfig {
        HistogramConfig {
            horizon: 20.0,
            trajectories: 50,
            parallelism: Parallelism::new(2, 8),
            ..HistogramConfig::desk()
        }
    }

    /// Counts proportional to `scale·P_eq(centre)` with `big` total samples.
    fn scaled(spec: &EquilibriumSpec, scale: f64, inside: impl Fn(f64) -> bool) -> EmpiricalDistribution {
        let big = 1e12;
        let mut e = EmpiricalDistribution::new(0.02, 10.0);
        let counts: Vec<u64> = (0..e.n_bins())
            .map(|i| {
                let c = e.bin_center(i);
                if inside(c) {
                    (scale * spec.density(c) * 0.02 * big).round() as u64
                } else {
                    0
                }
            })
            .collect();
        let used: u64 = counts.iter().sum();
        e = EmpiricalDistribution::from_counts(0.02, 10.0, counts, big as u64 - used).unwrap();
        e
    }

    #[test]
    fn record_and_merge() {
        let mut a = EmpiricalDistribution::new(0.5, 1.0);
        assert_eq!(a.n_bins(), 4);
        for x in [-0.9, -0.1, 0.1, 0.99, 1.0, -1.5, f64::NAN] {
            a.record(x);
        }
        assert_eq!(a.counts(), &[1, 1, 1, 1]);
        assert_eq!(a.out_of_range(), 3);
        let mut b = a.clone();
        b.merge(&a);
        assert_eq!(b.total(), 14);
        assert_eq!(b.counts().iter().sum::<u64>() + b.out_of_range(), b.total());
    }

    #[test]
    fn density_view_integrates_to_in_range_fraction() {
        let mut e = EmpiricalDistribution::new(0.1, 2.0);
        for i in 0..1000 {
            e.record(-3.0 + 6.0 * i as f64 / 1000.0);
        }
        let integral: f64 = (0..e.n_bins()).map(|i| e.density(i) * 0.1).sum();
        assert!((integral - e.in_range() as f64 / e.total() as f64).abs() < 1e-12);
    }

    #[test]
    fn exact_match_gives_zero() {
        let spec = EquilibriumSpec::stratonovich(0.1).unwrap();
        let e = scaled(&spec, 1.0, |_| true);
        assert!(distance_metric(&e, &spec).unwrap() < 1e-9);
        assert!(ratio_metric(&e, &spec).unwrap() < 1e-7);
    }

    #[test]
    fn scaled_density_distance() {
        let spec = EquilibriumSpec::stratonovich(0.25).unwrap();
        let eps = -0.02;
        let e = scaled(&spec, 1.0 + eps, |_| true);
        // Midpoint mass of P_eq on the histogram range.
        let mass: f64 = (0..e.n_bins()).map(|i| spec.density(e.bin_center(i)) * 0.02).sum();
        let got = distance_metric(&e, &spec).unwrap();
        assert!((got - eps.abs() * mass).abs() < 1e-8, "{got}");
    }

    #[test]
    fn halved_density_ratio() {
        let spec = EquilibriumSpec::stratonovich(0.05).unwrap();
        let cut = spec.support_cut(RATIO_SUPPORT_FRACTION);
        let e = scaled(&spec, 0.5, |c| c.abs() < cut + 0.02);
        // ∫_{−x_cut}^{x_cut} |1 − 1/2| dx = x_cut.
        let got = ratio_metric(&e, &spec).unwrap();
        assert!((got - cut).abs() < 1e-7, "{got} vs {cut}");
    }

    #[test]
    fn disjoint_masses_give_two() {
        let spec = EquilibriumSpec::stratonovich(0.01).unwrap();
        let mut e = EmpiricalDistribution::new(0.02, 10.0);
        for _ in 0..1000 {
            e.record(9.5);
        }
        let d = distance_metric(&e, &spec).unwrap();
        assert!((d - 2.0).abs() < 1e-6, "{d}");
    }

    #[test]
    fn empty_histogram_is_an_error() {
        let spec = EquilibriumSpec::stratonovich(0.1).unwrap();
        let mut e = EmpiricalDistribution::new(0.02, 10.0);
        assert!(matches!(distance_metric(&e, &spec), Err(Error::EmptyHistogram)));
        e.record(50.0);
        assert!(matches!(ratio_metric(&e, &spec), Err(Error::EmptyHistogram)));
    }

    #[test]
    fn run_is_worker_independent_and_conserves_counts() {
        let mut cfg = small_cfg();
        let a = run_equilibrium(SchemeId::HePC, 0.1, 0.05, &cfg).unwrap();
        cfg.parallelism.workers = 1;
        let b = run_equilibrium(SchemeId::HePC, 0.1, 0.05, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total(), 50 * 20);
        assert_eq!(a.counts().iter().sum::<u64>() + a.out_of_range(), a.total());
    }

    #[test]
    fn steps_per_sample_must_be_whole() {
        let cfg = small_cfg();
        assert_eq!(cfg.steps_per_sample(0.01).unwrap(), 100);
        assert_eq!(cfg.steps_per_sample(0.2).unwrap(), 5);
        assert!(cfg.steps_per_sample(0.3).is_err());
    }

    #[test]
    fn range_must_cover_ratio_support() {
        let mut cfg = small_cfg();
        assert!(cfg.validate_for(0.5).is_ok());
        cfg.x_max = 3.0;
        assert!(cfg.validate_for(0.5).is_err());
    }

    #[test]
    fn single_cell_sweep_matches_direct_run() {
        let cfg = small_cfg();
        let cells = sweep(&[SchemeId::Euler], &[0.1], &[0.05], &cfg).unwrap();
        assert_eq!(cells.len(), 1);
        let direct = run_equilibrium(SchemeId::Euler, 0.1, 0.05, &cfg).unwrap();
        assert_eq!(cells[0].histogram, direct);
        let m = metrics(&direct, &EquilibriumSpec::stratonovich(0.1).unwrap()).unwrap();
        assert_eq!(cells[0].score(0).unwrap().metrics, Some(m));
        assert_eq!(cells[0].scores.len(), 2);
        assert_eq!(cells[0].primary().n, 1);
    }
}
