//! Run manifests: flat key-value configuration for one experiment.
//!
//! A manifest is assembled from layers, lowest precedence first: built-in
//! defaults for the experiment kind, a TOML file, `HEUNBENCH_*` environment
//! variables, command-line flags. Environment and flag values are plain text;
//! list-valued keys take comma-separated items.
//!
//! ```toml
//! kind = "convergence"
//! schemes = ["Heun", "Euler"]
//! D = [0.05]
//! trajectories = 20000
//! seed = 7
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::convergence::{
    ConvergenceConfig, InitialCondition, ModelChoice, ReferenceKind, ANALYTIC_FIT_WINDOW,
};
use crate::equilibrium::HistogramConfig;
use crate::error::{Error, Result};
use crate::parallel::{available_workers, Parallelism, DEFAULT_CHUNK};
use crate::schemes::{SchemeId, DEFAULT_ITERATIONS};
use crate::stability::{log_grid, StabilityConfig};
use crate::validate::ValidationConfig;

pub const ENV_PREFIX: &str = "HEUNBENCH_";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Convergence,
    Stability,
    Equilibrium,
    Validate,
    Moments,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::Stability => "stability",
            ExperimentKind::Equilibrium => "equilibrium",
            ExperimentKind::Validate => "validate",
            ExperimentKind::Moments => "moments",
        }
    }

    /// Keys that mean something for this kind, besides the common ones.
    fn keys(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::Convergence => &[
                "schemes", "D", "grid_d", "trajectories", "t_end", "ref_exponent", "levels",
                "fit_window", "reference", "model", "match_calculus", "guard", "iterations",
            ],
            ExperimentKind::Stability => &[
                "schemes", "D", "grid_d", "h", "grid_h", "trajectories", "t_end", "threshold",
                "iterations",
            ],
            ExperimentKind::Equilibrium => &[
                "schemes", "D", "grid_d", "h", "grid_h", "trajectories", "t_end",
                "sample_interval", "bin_width", "x_max", "guard", "iterations",
            ],
            ExperimentKind::Validate => &["trajectories", "samples"],
            ExperimentKind::Moments => &["h", "grid_h", "samples"],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const COMMON_KEYS: [&str; 6] = ["kind", "seed", "workers", "chunk", "out", "plot_script"];

/// Keys whose text form is a comma-separated list.
const LIST_KEYS: [&str; 7] = ["schemes", "D", "h", "grid_d", "grid_h", "levels", "fit_window"];

/// A partial manifest; every key optional. This is also the file format.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestLayer {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schemes: Option<Vec<String>>,
    #[serde(rename = "D", skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<f64>>,
    /// `[lo, hi, n]`, logarithmically spaced.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_d: Option<(f64, f64, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_h: Option<(f64, f64, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chunk: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ref_exponent: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<(u32, u32)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub match_calculus: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_interval: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guard: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plot_script: Option<bool>,
    /// Metadata table written into run summaries; ignored on input.
    #[serde(skip_serializing)]
    pub run: Option<toml::Table>,
}

fn config_err(e: impl fmt::Display) -> Error {
    Error::config(e.to_string())
}

fn scalar_value(text: &str) -> toml::Value {
    let t = text.trim();
    if let Ok(i) = t.parse::<i64>() {
        toml::Value::Integer(i)
    } else if let Ok(x) = t.parse::<f64>() {
        toml::Value::Float(x)
    } else if let Ok(b) = t.parse::<bool>() {
        toml::Value::Boolean(b)
    } else {
        toml::Value::String(t.to_owned())
    }
}

macro_rules! overlay_fields {
    ($lo:ident, $hi:ident; $($f:ident),*) => {
        $( if $hi.$f.is_some() { $lo.$f = $hi.$f; } )*
    };
}

impl ManifestLayer {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(config_err)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    /// A layer from `(key, text)` pairs as given on the command line.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut table = toml::Table::new();
        for (key, text) in pairs {
            let value = if LIST_KEYS.contains(&key) {
                toml::Value::Array(
                    text.split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(scalar_value)
                        .collect(),
                )
            } else if key == "out" {
                toml::Value::String(text.to_owned())
            } else {
                scalar_value(text)
            };
            table.insert(key.to_owned(), value);
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e| Error::config(format!("{e}")))
    }

    /// The layer given by `HEUNBENCH_<KEY>` variables, matched
    /// case-insensitively against the manifest keys.
    pub fn from_env(vars: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let known: Vec<&str> = ALL_KEYS.to_vec();
        let mut pairs = Vec::new();
        for (name, value) in vars {
            let Some(rest) = name.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let key = known
                .iter()
                .find(|k| k.eq_ignore_ascii_case(rest))
                .ok_or_else(|| Error::config(format!("unknown environment override {name}")))?;
            pairs.push((*key, value));
        }
        Self::from_pairs(pairs.iter().map(|(k, v)| (*k, v.as_str())))
    }

    /// `self` with every key set in `higher` replaced. An explicit list and a
    /// grid for the same axis replace each other.
    pub fn overlay(mut self, higher: ManifestLayer) -> Self {
        if higher.d.is_some() || higher.grid_d.is_some() {
            self.d = None;
            self.grid_d = None;
        }
        if higher.h.is_some() || higher.grid_h.is_some() {
            self.h = None;
            self.grid_h = None;
        }
        overlay_fields!(self, higher;
            kind, schemes, d, grid_d, h, grid_h, trajectories, t_end, seed, workers, chunk, out,
            ref_exponent, levels, fit_window, reference, model, match_calculus, threshold,
            sample_interval, bin_width, x_max, guard, iterations, samples, plot_script);
        self
    }

    fn set_keys(&self) -> Vec<&'static str> {
        let v = toml::Value::try_from(self).expect("layer serialises");
        let table = v.as_table().expect("layer is a table");
        ALL_KEYS
            .iter()
            .copied()
            .filter(|k| table.contains_key(*k))
            .collect()
    }
}

const ALL_KEYS: [&str; 26] = [
    "kind", "schemes", "D", "grid_d", "h", "grid_h", "trajectories", "t_end", "seed", "workers",
    "chunk", "out", "ref_exponent", "levels", "fit_window", "reference", "model",
    "match_calculus", "threshold", "sample_interval", "bin_width", "x_max", "guard",
    "iterations", "samples", "plot_script",
];

/// A fully resolved manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub kind: ExperimentKind,
    pub schemes: Vec<SchemeId>,
    pub d_values: Vec<f64>,
    pub h_values: Vec<f64>,
    pub trajectories: u64,
    pub t_end: f64,
    pub seed: u64,
    pub workers: usize,
    pub chunk: u64,
    pub out: PathBuf,
    pub ref_exponent: u32,
    pub levels: (u32, u32),
    pub fit_window: (f64, f64),
    pub reference: ReferenceKind,
    pub model: ModelChoice,
    pub match_calculus: bool,
    pub threshold: f64,
    pub sample_interval: f64,
    pub bin_width: f64,
    pub x_max: f64,
    pub guard: f64,
    pub iterations: u32,
    pub samples: u64,
    pub plot_script: bool,
}

pub const DEFAULT_OUT: &str = "heunbench-out";

fn parse_schemes(names: &[String]) -> Result<Vec<SchemeId>> {
    let mut out = Vec::new();
    for n in names {
        if n.eq_ignore_ascii_case("all") {
            out.extend(SchemeId::BENCHMARKED);
        } else {
            out.push(SchemeId::from_str(n)?);
        }
    }
    let mut seen = BTreeSet::new();
    out.retain(|s| seen.insert(s.label()));
    Ok(out)
}

fn axis(list: Option<Vec<f64>>, grid: Option<(f64, f64, usize)>, default: Vec<f64>) -> Result<Vec<f64>> {
    match (list, grid) {
        (Some(v), _) => Ok(v),
        (None, Some((lo, hi, n))) => {
            if !(lo > 0.0 && hi >= lo && n >= 1) {
                return Err(Error::config(format!(
                    "grid [{lo}, {hi}, {n}] needs 0 < lo <= hi and n >= 1"
                )));
            }
            Ok(log_grid(lo, hi, n))
        }
        (None, None) => Ok(default),
    }
}

impl RunManifest {
    /// Resolves `layer` for `kind` over the built-in defaults. A `kind` key
    /// in the layer must agree with `kind`; keys that do not apply to the
    /// kind are rejected.
    pub fn resolve(kind: ExperimentKind, layer: ManifestLayer) -> Result<Self> {
        if let Some(k) = layer.kind {
            if k != kind {
                return Err(Error::config(format!(
                    "manifest is for a {k} run, not {kind}"
                )));
            }
        }
        for key in layer.set_keys() {
            if !COMMON_KEYS.contains(&key) && !kind.keys().contains(&key) {
                return Err(Error::config(format!(
                    "key `{key}` does not apply to {kind} runs"
                )));
            }
        }

        use ExperimentKind as K;
        let default_schemes = match kind {
            K::Convergence => vec![SchemeId::Heun],
            K::Stability | K::Equilibrium => SchemeId::BENCHMARKED.to_vec(),
            K::Validate | K::Moments => Vec::new(),
        };
        let schemes = match &layer.schemes {
            Some(names) => parse_schemes(names)?,
            None => default_schemes,
        };
        let d_values = axis(
            layer.d,
            layer.grid_d,
            match kind {
                K::Convergence => vec![0.05],
                K::Stability => log_grid(1e-2, 0.5, 10),
                K::Equilibrium => vec![0.1],
                K::Validate | K::Moments => Vec::new(),
            },
        )?;
        let h_values = axis(
            layer.h,
            layer.grid_h,
            match kind {
                K::Stability => log_grid(1e-3, 0.5, 10),
                K::Equilibrium => vec![0.01, 0.2],
                K::Moments => vec![0.1],
                K::Convergence | K::Validate => Vec::new(),
            },
        )?;
        let model = layer.model.unwrap_or(ModelChoice::Benchmark);
        let reference = layer.reference.unwrap_or(match model {
            ModelChoice::Validation => ReferenceKind::Exact,
            ModelChoice::Benchmark => ReferenceKind::Same,
        });
        let default_window = match reference {
            ReferenceKind::Exact => ANALYTIC_FIT_WINDOW,
            ReferenceKind::Same => (1e-3, 1e-2),
        };
        let m = RunManifest {
            kind,
            schemes,
            d_values,
            h_values,
            trajectories: layer.trajectories.unwrap_or(match kind {
                K::Convergence => 20_000,
                K::Stability => 300,
                K::Equilibrium | K::Validate => 2000,
                K::Moments => 0,
            }),
            t_end: layer.t_end.unwrap_or(match kind {
                K::Stability => 1e3,
                K::Equilibrium => 500.0,
                _ => 1.0,
            }),
            seed: layer.seed.unwrap_or(1),
            workers: layer.workers.unwrap_or_else(available_workers),
            chunk: layer.chunk.unwrap_or(DEFAULT_CHUNK),
            out: layer.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            ref_exponent: layer.ref_exponent.unwrap_or(14),
            levels: layer.levels.unwrap_or((1, 8)),
            fit_window: layer.fit_window.unwrap_or(default_window),
            reference,
            model,
            match_calculus: layer
                .match_calculus
                .unwrap_or(reference == ReferenceKind::Exact),
            threshold: layer.threshold.unwrap_or(100.0),
            sample_interval: layer.sample_interval.unwrap_or(1.0),
            bin_width: layer.bin_width.unwrap_or(0.02),
            x_max: layer.x_max.unwrap_or(10.0),
            guard: layer.guard.unwrap_or(match kind {
                K::Equilibrium => 1e6,
                _ => 1e10,
            }),
            iterations: layer.iterations.unwrap_or(DEFAULT_ITERATIONS),
            samples: layer.samples.unwrap_or(match kind {
                K::Moments => 1_000_000,
                K::Validate => 200_000,
                _ => 0,
            }),
            plot_script: layer.plot_script.unwrap_or(false),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn parallelism(&self) -> Parallelism {
        Parallelism::new(self.workers, self.chunk)
    }

    /// One convergence config per `(scheme, D)`, scheme-major.
    pub fn convergence_configs(&self) -> Vec<ConvergenceConfig> {
        let mut out = Vec::new();
        for &scheme in &self.schemes {
            for &d in &self.d_values {
                out.push(ConvergenceConfig {
                    scheme,
                    model: self.model,
                    d,
                    t_end: self.t_end,
                    ref_exponent: self.ref_exponent,
                    coarse_levels: self.levels,
                    trajectories: self.trajectories,
                    fit_window: self.fit_window,
                    seed: self.seed,
                    reference: self.reference,
                    initial: match self.model {
                        ModelChoice::Benchmark => InitialCondition::Equilibrium,
                        ModelChoice::Validation => InitialCondition::Fixed(1.0),
                    },
                    match_calculus: self.match_calculus,
                    guard: self.guard,
                    iterations: self.iterations,
                    parallelism: self.parallelism(),
                });
            }
        }
        out
    }

    pub fn stability_config(&self) -> StabilityConfig {
        StabilityConfig {
            schemes: self.schemes.clone(),
            d_values: self.d_values.clone(),
            h_values: self.h_values.clone(),
            trajectories: self.trajectories,
            horizon: self.t_end,
            threshold: self.threshold,
            seed: self.seed,
            iterations: self.iterations,
            parallelism: self.parallelism(),
        }
    }

    pub fn histogram_config(&self) -> HistogramConfig {
        HistogramConfig {
            bin_width: self.bin_width,
            x_max: self.x_max,
            sample_interval: self.sample_interval,
            horizon: self.t_end,
            trajectories: self.trajectories,
            seed: self.seed,
            guard: self.guard,
            iterations: self.iterations,
            parallelism: self.parallelism(),
        }
    }

    pub fn validation_config(&self) -> ValidationConfig {
        ValidationConfig {
            trajectories: self.trajectories,
            samples: self.samples,
            seed: self.seed,
            parallelism: self.parallelism(),
        }
    }

    /// Checks the manifest against every lab config it will build, so that
    /// nothing is computed for a run that would fail on configuration.
    pub fn validate(&self) -> Result<()> {
        // TOML integers are signed 64-bit; larger seeds could not be echoed.
        if self.seed > i64::MAX as u64 {
            return Err(Error::config("seed must be at most 2^63 - 1"));
        }
        if self.out.as_os_str().is_empty() {
            return Err(Error::config("output directory must not be empty"));
        }
        self.parallelism().validate()?;
        match self.kind {
            ExperimentKind::Convergence => {
                for cfg in self.convergence_configs() {
                    cfg.validate()?;
                }
            }
            ExperimentKind::Stability => self.stability_config().validate()?,
            ExperimentKind::Equilibrium => {
                let cfg = self.histogram_config();
                cfg.validate()?;
                for &d in &self.d_values {
                    cfg.validate_for(d)?;
                }
                for &h in &self.h_values {
                    cfg.steps_per_sample(h)?;
                }
            }
            ExperimentKind::Validate => {
                if self.trajectories < 2 || self.samples < 2 {
                    return Err(Error::config("validate needs at least 2 trajectories and samples"));
                }
            }
            ExperimentKind::Moments => {
                if self.samples < 2 {
                    return Err(Error::config("moments needs at least 2 samples"));
                }
                if self.h_values.is_empty() {
                    return Err(Error::config("moments needs at least one step size"));
                }
                for &h in &self.h_values {
                    if !(h > 0.0 && h.is_finite()) {
                        return Err(Error::NonPositiveStep(h));
                    }
                }
            }
        }
        Ok(())
    }

    /// The manifest as a layer holding exactly the keys that apply to its
    /// kind, all set.
    pub fn to_layer(&self) -> ManifestLayer {
        let mut l = ManifestLayer {
            kind: Some(self.kind),
            schemes: Some(self.schemes.iter().map(|s| s.label().to_owned()).collect()),
            d: Some(self.d_values.clone()),
            h: Some(self.h_values.clone()),
            trajectories: Some(self.trajectories),
            t_end: Some(self.t_end),
            seed: Some(self.seed),
            workers: Some(self.workers),
            chunk: Some(self.chunk),
            out: Some(self.out.clone()),
            ref_exponent: Some(self.ref_exponent),
            levels: Some(self.levels),
            fit_window: Some(self.fit_window),
            reference: Some(self.reference),
            model: Some(self.model),
            match_calculus: Some(self.match_calculus),
            threshold: Some(self.threshold),
            sample_interval: Some(self.sample_interval),
            bin_width: Some(self.bin_width),
            x_max: Some(self.x_max),
            guard: Some(self.guard),
            iterations: Some(self.iterations),
            samples: Some(self.samples),
            plot_script: Some(self.plot_script),
            ..ManifestLayer::default()
        };
        let keep = |k: &str| COMMON_KEYS.contains(&k) || self.kind.keys().contains(&k);
        macro_rules! drop_unless {
            ($($key:literal => $f:ident),*) => { $( if !keep($key) { l.$f = None; } )* };
        }
        drop_unless!(
            "schemes" => schemes, "D" => d, "h" => h, "trajectories" => trajectories,
            "t_end" => t_end, "ref_exponent" => ref_exponent, "levels" => levels,
            "fit_window" => fit_window, "reference" => reference, "model" => model,
            "match_calculus" => match_calculus, "threshold" => threshold,
            "sample_interval" => sample_interval, "bin_width" => bin_width, "x_max" => x_max,
            "guard" => guard, "iterations" => iterations, "samples" => samples
        );
        l
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&self.to_layer()).map_err(config_err)
    }
}
