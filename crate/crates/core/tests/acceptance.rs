//! Acceptance criteria at their stated scale and tolerance.
//!
//! Prints one `[PASS]`/`[FAIL]` line per criterion with the measurements
//! behind it. Criteria listed in `KNOWN_UNATTAINABLE` are expected to fail;
//! for those the run only fails if the measured values stop matching the
//! analysis of why they cannot pass.
//!
//!     cargo test --release --test acceptance            # all, ~45 min on one core
//!     cargo test --release --test acceptance -- ac2 ac4 # a subset

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use heunbench::cli::compute;
use heunbench::convergence::{fit_power_law, run_convergence, ConvergenceConfig};
use heunbench::equilibrium::{sweep, HistogramConfig};
use heunbench::manifest::{ExperimentKind, ManifestLayer, RunManifest};
use heunbench::moments::{composition_moments, representation_moments, MomentCheck};
use heunbench::report::{emit_report, RunInfo};
use heunbench::stability::{run_stability, stable_count, StabilityConfig};
use heunbench::validate::{analytic_order_checks, reduction_checks};
use heunbench::{SchemeId, Z3Representation};

struct Verdict {
    passed: bool,
    details: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self {
            passed: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.details.push(format!("{} {line}", if ok { "ok  " } else { "MISS" }));
    }

    fn note(&mut self, line: String) {
        self.details.push(format!("     {line}"));
    }
}

type Criterion = fn() -> Verdict;

const SEED: u64 = 20_240_601;

/// Criteria that cannot pass as stated, with the reason.
const KNOWN_UNATTAINABLE: &[(&str, &str)] = &[(
    "AC5",
    "neither z3 formula has <z1^2 z3> = h^3/4 (ALT gives h^3, CUP about h^3/2), and a \
     composed ALT pair gives h^3/2 against h^3 for a direct step",
)];

fn in_band(x: f64, (lo, hi): (f64, f64)) -> bool {
    x >= lo && x <= hi
}

fn ac1_analytic_orders() -> Verdict {
    let mut v = Verdict::new();
    let checks = analytic_order_checks(20_000, SEED, Default::default()).expect("analytic runs");
    for c in checks {
        v.check(c.passed, format!("{:<28} {:.4}  {}", c.name, c.measured, c.expected));
    }
    v
}

fn ac2_benchmark_orders() -> Verdict {
    let mut v = Verdict::new();
    let bands = [
        (SchemeId::Euler, (0.45, 0.62)),
        (SchemeId::Heun, (0.90, 1.10)),
        (SchemeId::Miln, (0.45, 0.62)),
        (SchemeId::MilMinus, (0.90, 1.10)),
        (SchemeId::HePC, (0.90, 1.10)),
        (SchemeId::T32, (0.90, 1.15)),
        (SchemeId::CUP1, (0.90, 1.15)),
        (SchemeId::CUP2, (0.90, 1.15)),
    ];
    for (id, band) in bands {
        let cfg = ConvergenceConfig {
            trajectories: 50_000,
            seed: SEED,
            ..ConvergenceConfig::benchmark(id, 0.05)
        };
        let curve = run_convergence(&cfg).expect("convergence run");
        let fit = fit_power_law(&curve, cfg.fit_window).expect("fit");
        let diverged: u64 = curve.levels.iter().map(|l| l.n_diverged).max().unwrap_or(0);
        v.check(
            in_band(fit.alpha, band),
            format!(
                "{:<5} alpha = {:.3} ± {:.3}  A = {:.3e}  band [{:.2}, {:.2}]  diverged {diverged}",
                id.label(),
                fit.alpha,
                fit.sigma_alpha,
                fit.a,
                band.0,
                band.1
            ),
        );
    }
    v
}

/// Stability column of the reference table, in its order.
const REFERENCE_STABILITY: [(SchemeId, f64); 10] = [
    (SchemeId::Heun, 191.0),
    (SchemeId::HeSt, 172.0),
    (SchemeId::HePC, 169.0),
    (SchemeId::MilMinus, 165.0),
    (SchemeId::T32, 134.0),
    (SchemeId::HPCMinus, 132.0),
    (SchemeId::CUP1, 117.0),
    (SchemeId::CUP2, 117.0),
    (SchemeId::Stra, 115.0),
    (SchemeId::Miln, 91.0),
];

/// Ranks with ties sharing their average rank.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn ac3_stability_ranking() -> Verdict {
    let mut v = Verdict::new();
    let mut schemes: Vec<SchemeId> = REFERENCE_STABILITY.iter().map(|(s, _)| *s).collect();
    schemes.push(SchemeId::Euler);
    let cfg = StabilityConfig {
        seed: SEED,
        ..StabilityConfig::desk(schemes)
    };
    let grid = run_stability(&cfg).expect("stability scan");
    let counts: Vec<f64> = REFERENCE_STABILITY
        .iter()
        .map(|(s, _)| stable_count(&grid, *s) as f64)
        .collect();
    let reference: Vec<f64> = REFERENCE_STABILITY.iter().map(|(_, c)| *c).collect();
    for ((s, r), c) in REFERENCE_STABILITY.iter().zip(&counts) {
        v.note(format!("{:<5} {:>3} stable cells (reference {r})", s.label(), c));
    }
    let euler = stable_count(&grid, SchemeId::Euler) as f64;
    v.note(format!("Euler {euler:>3} stable cells (no reference entry; not ranked)"));

    let heun = counts[0];
    let others_max = counts[1..].iter().copied().fold(f64::MIN, f64::max);
    v.check(
        heun > others_max,
        format!("Heun {heun} strictly above every other ranked scheme (next {others_max})"),
    );
    let miln = counts[9];
    let all_min = counts[..9].iter().copied().chain([euler]).fold(f64::MAX, f64::min);
    v.check(
        miln <= all_min,
        format!("Miln {miln} at or below every other scheme (next {all_min})"),
    );
    let rho = spearman(&counts, &reference);
    v.check(rho >= 0.8, format!("Spearman rho = {rho:.3} (need >= 0.8)"));
    v
}

fn ac4_equilibrium_metrics() -> Verdict {
    let mut v = Verdict::new();
    let cfg = HistogramConfig {
        seed: SEED,
        ..HistogramConfig::desk()
    };
    let d = 0.1;
    let cells = sweep(&SchemeId::BENCHMARKED, &[d], &[0.01, 0.2], &cfg).expect("sweep");
    let distance = |s: SchemeId, h: f64| {
        cells
            .iter()
            .find(|c| c.scheme == s && c.h == h)
            .and_then(|c| c.primary().metrics)
            .map_or(f64::INFINITY, |m| m.distance)
    };
    let mut grew = 0;
    for s in SchemeId::BENCHMARKED {
        let (small, large) = (distance(s, 0.01), distance(s, 0.2));
        let n = s.limit_convention().equilibrium_offset();
        v.check(
            small < 0.05,
            format!("{:<5} n={n} distance(h=0.01) = {small:.4}  distance(h=0.2) = {large:.4}", s.label()),
        );
        if large > small {
            grew += 1;
        }
    }
    let samples = cells[0].histogram.total();
    v.note(format!("{samples} samples per cell"));
    let (stra, heun) = (distance(SchemeId::Stra, 0.2), distance(SchemeId::Heun, 0.2));
    v.check(stra > heun, format!("h=0.2: Stra {stra:.4} > Heun {heun:.4}"));
    v.check(grew >= 9, format!("distance grows from h=0.01 to 0.2 for {grew}/11 schemes (need >= 9)"));
    v
}

fn moment<'a>(ms: &'a [MomentCheck], name: &str) -> &'a MomentCheck {
    ms.iter().find(|m| m.name == name).expect("tabulated moment")
}

fn ac5_increment_suite() -> Verdict {
    let mut v = Verdict::new();
    let (h, n) = (0.1, 1_000_000);
    let alt = representation_moments(Z3Representation::Alt, h, n, SEED).expect("moments");
    let mut within = |m: &MomentCheck, target: f64, what: &str| {
        let z = (m.measured - target) / m.std_error;
        v.check(
            z.abs() <= 5.0,
            format!("{what:<4} {:<10} {:+.4e} vs {target:+.4e}  z = {z:+.1}", m.name, m.measured),
        );
    };
    within(moment(&alt, "<z2^2>"), h.powi(3) / 3.0, "");
    within(moment(&alt, "<z1 z2>"), h * h / 2.0, "");
    within(moment(&alt, "<z3>"), 0.0, "ALT");
    within(moment(&alt, "<z1 z3>"), 0.0, "ALT");
    within(moment(&alt, "<z2 z3>"), 0.0, "ALT");
    within(moment(&alt, "<z1^2 z3>"), h.powi(3) / 4.0, "ALT");

    for rep in [Z3Representation::Alt, Z3Representation::Cup] {
        for c in composition_moments(rep, h, n, SEED + 1).expect("composition") {
            let z = (c.composed - c.direct) / c.std_error;
            v.check(
                c.within(5.0),
                format!(
                    "{} two h/2 vs one h  {:<10} {:+.4e} vs {:+.4e}  z = {z:+.1}",
                    rep.label(),
                    c.name,
                    c.composed,
                    c.direct
                ),
            );
        }
    }
    v
}

/// Whether AC5 fails exactly where the analysis says it must: ALT
/// `<z1^2 z3>` at h^3 rather than h^3/4, composed ALT at h^3/2, and nothing
/// else out of line.
fn ac5_matches_analysis(v: &Verdict) -> bool {
    let misses: Vec<&String> = v.details.iter().filter(|d| d.starts_with("MISS")).collect();
    !misses.is_empty() && misses.iter().all(|d| d.contains("<z1^2 z3>"))
}

fn ac6_reductions() -> Verdict {
    let mut v = Verdict::new();
    for seed in [1, 2, 3] {
        for c in reduction_checks(seed) {
            v.check(c.passed, format!("seed {seed}: {:<32} {:.1e}", c.name, c.measured));
        }
    }
    v.details.retain(|d| d.starts_with("MISS") || d.contains("seed 1"));
    v
}

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                let name = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((name, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn ac7_determinism() -> Verdict {
    let mut v = Verdict::new();
    let tmp = tempfile::tempdir().expect("temp dir");
    let runs: [(ExperimentKind, &str); 5] = [
        (
            ExperimentKind::Convergence,
            "schemes = [\"Heun\", \"CUP1\", \"Euler\"]\nD = [0.05, 0.2]\ntrajectories = 300\nref_exponent = 10\nlevels = [1, 6]\nfit_window = [0.002, 0.07]",
        ),
        (
            ExperimentKind::Stability,
            "schemes = [\"Heun\", \"Miln\"]\ngrid_d = [0.05, 0.5, 3]\ngrid_h = [0.01, 0.5, 3]\ntrajectories = 5\nt_end = 50.0",
        ),
        (
            ExperimentKind::Equilibrium,
            "schemes = [\"Stra\", \"T3/2\"]\nh = [0.05, 0.2]\ntrajectories = 100\nt_end = 20.0",
        ),
        (ExperimentKind::Validate, "trajectories = 100\nsamples = 5000"),
        (ExperimentKind::Moments, "samples = 5000\nh = [0.1, 0.5]"),
    ];
    for (kind, text) in runs {
        let mut outputs = Vec::new();
        for (tag, workers) in [("a", 1), ("b", 3), ("c", 2), ("d", 1)] {
            let dir = tmp.path().join(format!("{kind}-{tag}"));
            let layer = ManifestLayer::from_toml_str(&format!(
                "{text}\nseed = {SEED}\nchunk = 16\nworkers = {workers}\nout = {:?}",
                dir.display().to_string()
            ))
            .expect("manifest");
            let m = RunManifest::resolve(kind, layer).expect("valid manifest");
            let results = compute(&m).expect("run");
            let info = RunInfo {
                version: String::new(),
                wall_time_seconds: 0.0,
                workers,
                chunk: m.chunk,
                seed: m.seed,
            };
            emit_report(&results, &m, &info, &dir).expect("report");
            outputs.push(csv_bytes(&dir));
        }
        let same = outputs.iter().all(|o| *o == outputs[0]) && !outputs[0].is_empty();
        let bytes: usize = outputs[0].iter().map(|(_, b)| b.len()).sum();
        v.check(
            same,
            format!(
                "{kind:<12} {} CSV files, {bytes} bytes, identical for workers 1, 3, 2 and a rerun",
                outputs[0].len()
            ),
        );
    }
    v
}

fn main() -> ExitCode {
    let criteria: [(&str, &str, Criterion); 7] = [
        ("AC1", "analytic-SDE order recovery", ac1_analytic_orders),
        ("AC2", "benchmark order reproduction", ac2_benchmark_orders),
        ("AC3", "stability ranking", ac3_stability_ranking),
        ("AC4", "equilibrium metrics", ac4_equilibrium_metrics),
        ("AC5", "increment property suite", ac5_increment_suite),
        ("AC6", "reduction identities", ac6_reductions),
        ("AC7", "determinism", ac7_determinism),
    ];
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .map(|a| a.to_ascii_uppercase())
        .collect();

    let mut summary = Vec::new();
    let mut ok = true;
    for (id, name, run) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| id.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let verdict = run();
        let secs = start.elapsed().as_secs_f64();
        let known = KNOWN_UNATTAINABLE.iter().find(|(k, _)| *k == id);
        let line = format!(
            "[{}] {id} {name} ({secs:.0} s){}",
            if verdict.passed { "PASS" } else { "FAIL" },
            match known {
                Some(_) if !verdict.passed => " (known unattainable)",
                _ => "",
            }
        );
        println!("{line}");
        for d in &verdict.details {
            println!("       {d}");
        }
        if let (Some((_, why)), false) = (known, verdict.passed) {
            println!("       reason: {why}");
            if !ac5_matches_analysis(&verdict) {
                println!("       failure differs from the recorded analysis");
                ok = false;
            }
        } else if !verdict.passed {
            ok = false;
        }
        summary.push(line);
    }
    println!("\nsummary");
    for l in summary {
        println!("  {l}");
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
