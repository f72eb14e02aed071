//! CSV and summary output for finished runs.
//!
//! Floats are written in shortest round-trip form, so a CSV parsed back gives
//! the exact `f64` values that were computed. Missing values (a fit with too
//! few points, a score with no samples) are written as empty fields.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::convergence::ErrorCurve;
use crate::equilibrium::SweepCell;
use crate::error::Result;
use crate::fit::PowerLawFit;
use crate::manifest::RunManifest;
use crate::moments::{CompositionCheck, MomentCheck};
use crate::stability::{stable_count, StabilityGrid};
use crate::validate::Check;

/// One scheme/D convergence run.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceResult {
    pub curve: ErrorCurve,
    pub window: (f64, f64),
    /// `None` when fewer than three valid levels fall in the window.
    pub fit: Option<PowerLawFit>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    pub representation: &'static str,
    pub h: f64,
    pub moments: Vec<MomentCheck>,
    pub composition: Vec<CompositionCheck>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunResults {
    Convergence(Vec<ConvergenceResult>),
    Stability(StabilityGrid),
    Equilibrium(Vec<SweepCell>),
    Validation(Vec<Check>),
    Moments(Vec<MomentReport>),
}

/// Run metadata appended to the summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunInfo {
    pub version: String,
    pub wall_time_seconds: f64,
    pub workers: usize,
    pub chunk: u64,
    pub seed: u64,
}

#[derive(Serialize)]
struct ConvergenceRow<'a> {
    scheme: &'a str,
    #[serde(rename = "D")]
    d: f64,
    level: u32,
    h: f64,
    mean_abs_error: f64,
    std_error: f64,
    n_samples: u64,
    n_diverged: u64,
}

#[derive(Serialize)]
struct FitRow<'a> {
    scheme: &'a str,
    #[serde(rename = "D")]
    d: f64,
    #[serde(rename = "A")]
    a: Option<f64>,
    #[serde(rename = "sigma_A")]
    sigma_a: Option<f64>,
    alpha: Option<f64>,
    sigma_alpha: Option<f64>,
    h_min: f64,
    h_max: f64,
}

#[derive(Serialize)]
struct StabilityRow<'a> {
    scheme: &'a str,
    #[serde(rename = "D")]
    d: f64,
    h: f64,
    stable: bool,
    n_trajectories: u64,
    first_divergence_time: Option<f64>,
}

#[derive(Serialize)]
struct StabilitySummaryRow<'a> {
    scheme: &'a str,
    stable_count: usize,
    total_cells: usize,
}

#[derive(Serialize)]
struct HistogramRow<'a> {
    scheme: &'a str,
    #[serde(rename = "D")]
    d: f64,
    h: f64,
    bin_center: f64,
    count: u64,
}

#[derive(Serialize)]
struct MetricsRow<'a> {
    scheme: &'a str,
    #[serde(rename = "D")]
    d: f64,
    h: f64,
    distance: Option<f64>,
    ratio: Option<f64>,
    n_samples: u64,
    n_diverged: u64,
    /// Equilibrium family index scored against (0 Stratonovich, 1 Itô).
    n: u8,
}

#[derive(Serialize)]
struct ValidationRow<'a> {
    group: &'a str,
    name: &'a str,
    measured: f64,
    expected: &'a str,
    passed: bool,
}

#[derive(Serialize)]
struct MomentRow<'a> {
    representation: &'a str,
    h: f64,
    moment: &'a str,
    measured: f64,
    std_error: f64,
    target: f64,
    z_score: f64,
}

#[derive(Serialize)]
struct CompositionRow<'a> {
    representation: &'a str,
    h: f64,
    moment: &'a str,
    direct: f64,
    composed: f64,
    std_error: f64,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Label safe for file names: `T3/2` becomes `T3_2`.
pub fn file_label(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

/// Writes the lab CSVs, `summary.toml` and, when the manifest asks for it,
/// `plot.py` into `dir`. Returns the written paths in creation order.
pub fn emit_report(
    results: &RunResults,
    manifest: &RunManifest,
    info: &RunInfo,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut out = |name: &str| {
        let p = dir.join(name);
        files.push(p.clone());
        p
    };

    match results {
        RunResults::Convergence(runs) if !runs.is_empty() => {
            write_csv(
                &out("convergence.csv"),
                runs.iter().flat_map(|r| {
                    r.curve.levels.iter().map(|l| ConvergenceRow {
                        scheme: r.curve.scheme.label(),
                        d: r.curve.d,
                        level: l.level,
                        h: l.h,
                        mean_abs_error: l.mean_abs_error,
                        std_error: l.std_error,
                        n_samples: l.n_samples,
                        n_diverged: l.n_diverged,
                    })
                }),
            )?;
            write_csv(
                &out("fit.csv"),
                runs.iter().map(|r| FitRow {
                    scheme: r.curve.scheme.label(),
                    d: r.curve.d,
                    a: r.fit.map(|f| f.a),
                    sigma_a: r.fit.map(|f| f.sigma_a),
                    alpha: r.fit.map(|f| f.alpha),
                    sigma_alpha: r.fit.map(|f| f.sigma_alpha),
                    h_min: r.window.0,
                    h_max: r.window.1,
                }),
            )?;
        }
        RunResults::Stability(grid) if !grid.cells.is_empty() => {
            write_csv(
                &out("stability.csv"),
                grid.cells.iter().map(|c| StabilityRow {
                    scheme: c.scheme.label(),
                    d: c.d,
                    h: c.h,
                    stable: c.stable,
                    n_trajectories: c.trajectories_completed,
                    first_divergence_time: c.first_divergence_time,
                }),
            )?;
            let mut schemes: Vec<_> = Vec::new();
            for c in &grid.cells {
                if !schemes.contains(&c.scheme) {
                    schemes.push(c.scheme);
                }
            }
            write_csv(
                &out("stability_summary.csv"),
                schemes.iter().map(|&s| StabilitySummaryRow {
                    scheme: s.label(),
                    stable_count: stable_count(grid, s),
                    total_cells: grid.cells_for(s).count(),
                }),
            )?;
        }
        RunResults::Equilibrium(cells) if !cells.is_empty() => {
            write_csv(
                &out("metrics.csv"),
                cells.iter().flat_map(|c| {
                    c.scores.iter().map(|s| MetricsRow {
                        scheme: c.scheme.label(),
                        d: c.d,
                        h: c.h,
                        distance: s.metrics.map(|m| m.distance),
                        ratio: s.metrics.map(|m| m.ratio),
                        n_samples: c.histogram.total(),
                        n_diverged: c.histogram.n_diverged(),
                        n: s.n,
                    })
                }),
            )?;
            fs::create_dir_all(dir.join("histograms"))?;
            for c in cells {
                let name = format!(
                    "histograms/{}_D{}_h{}.csv",
                    file_label(c.scheme.label()),
                    c.d,
                    c.h
                );
                let e = &c.histogram;
                write_csv(
                    &out(&name),
                    e.counts().iter().enumerate().map(|(i, &count)| HistogramRow {
                        scheme: c.scheme.label(),
                        d: c.d,
                        h: c.h,
                        bin_center: e.bin_center(i),
                        count,
                    }),
                )?;
            }
        }
        RunResults::Validation(checks) if !checks.is_empty() => {
            write_csv(
                &out("validation.csv"),
                checks.iter().map(|c| ValidationRow {
                    group: c.group,
                    name: &c.name,
                    measured: c.measured,
                    expected: &c.expected,
                    passed: c.passed,
                }),
            )?;
        }
        RunResults::Moments(reports) if !reports.is_empty() => {
            write_csv(
                &out("moments.csv"),
                reports.iter().flat_map(|r| {
                    r.moments.iter().map(|m| MomentRow {
                        representation: r.representation,
                        h: r.h,
                        moment: m.name,
                        measured: m.measured,
                        std_error: m.std_error,
                        target: m.target,
                        z_score: m.z_score(),
                    })
                }),
            )?;
            write_csv(
                &out("composition.csv"),
                reports.iter().flat_map(|r| {
                    r.composition.iter().map(|c| CompositionRow {
                        representation: r.representation,
                        h: r.h,
                        moment: c.name,
                        direct: c.direct,
                        composed: c.composed,
                        std_error: c.std_error,
                    })
                }),
            )?;
        }
        _ => {}
    }

    fs::write(out("summary.toml"), summary_toml(manifest, info)?)?;
    if manifest.plot_script {
        fs::write(out("plot.py"), plot_script(results))?;
    }
    Ok(files)
}

/// The manifest echo followed by a `[run]` table. Loading this file as a
/// manifest reproduces the run.
pub fn summary_toml(manifest: &RunManifest, info: &RunInfo) -> Result<String> {
    let mut s = manifest.to_toml()?;
    #[derive(Serialize)]
    struct Wrapper<'a> {
        run: &'a RunInfo,
    }
    s.push('\n');
    s.push_str(
        &toml::to_string(&Wrapper { run: info })
            .map_err(|e| crate::Error::config(format!("cannot serialise run info: {e}")))?,
    );
    Ok(s)
}

fn plot_script(results: &RunResults) -> String {
    let body = match results {
        RunResults::Convergence(_) => {
            "d = pd.read_csv('convergence.csv')\n\
             for (s, D), g in d.groupby(['scheme', 'D']):\n    \
             plt.errorbar(g.h, g.mean_abs_error, g.std_error, label=f'{s} D={D}', marker='o')\n\
             plt.xscale('log'); plt.yscale('log'); plt.xlabel('h'); plt.ylabel('E|x(h) - x_ref|')\n"
        }
        RunResults::Stability(_) => {
            "d = pd.read_csv('stability.csv')\n\
             schemes = d.scheme.unique()\n\
             fig, axes = plt.subplots(1, len(schemes), figsize=(3 * len(schemes), 3), squeeze=False)\n\
             for ax, s in zip(axes[0], schemes):\n    \
             g = d[d.scheme == s]\n    \
             ax.scatter(g.h, g.D, c=g.stable, cmap='RdYlGn', vmin=0, vmax=1)\n    \
             ax.set_xscale('log'); ax.set_yscale('log'); ax.set_title(s); ax.set_xlabel('h')\n\
             axes[0][0].set_ylabel('D')\n"
        }
        RunResults::Equilibrium(_) => {
            "for f in sorted(glob.glob('histograms/*.csv')):\n    \
             g = pd.read_csv(f)\n    \
             w = g.bin_center.diff().iloc[1]\n    \
             plt.plot(g.bin_center, g['count'] / (g['count'].sum() * w), label=os.path.basename(f)[:-4])\n\
             plt.xlim(-3, 3); plt.xlabel('x'); plt.ylabel('density')\n"
        }
        RunResults::Validation(_) | RunResults::Moments(_) => "print('no plot for this run kind')\nraise SystemExit\n",
    };
    format!(
        "import glob, os\nimport matplotlib.pyplot as plt\nimport pandas as pd\n\n\
         os.chdir(os.path.dirname(os.path.abspath(__file__)))\n{body}\
         plt.legend(fontsize='small')\nplt.savefig('plot.png', dpi=150)\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_labels() {
        assert_eq!(file_label("T3/2"), "T3_2");
        assert_eq!(file_label("Mil-"), "Mil-");
        assert_eq!(file_label("HPC-"), "HPC-");
    }

    #[test]
    fn floats_round_trip_through_csv() {
        #[derive(Serialize)]
        struct R {
            x: f64,
        }
        let xs = [0.1, 1.0 / 3.0, 2.5e-300, -7.0, 1e21, f64::MIN_POSITIVE];
        let mut w = csv::Writer::from_writer(vec![]);
        for &x in &xs {
            w.serialize(R { x }).unwrap();
        }
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        let back: Vec<f64> = text.lines().skip(1).map(|l| l.parse().unwrap()).collect();
        assert_eq!(back, xs);
    }
}
