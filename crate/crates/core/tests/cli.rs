//! End-to-end runs of the command-line driver into temporary directories.

use std::fs;
use std::path::Path;

use heunbench::cli::{run_with_env, EXIT_CONFIG, EXIT_OK};

fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["heunbench"];
    argv.extend_from_slice(args);
    run_with_env(argv, [])
}

fn listing(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = walk(dir)
        .into_iter()
        .map(|p| p.strip_prefix(dir).unwrap().display().to_string())
        .collect();
    v.sort();
    v
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

const SMALL_CONV: &[&str] = &[
    "--trajectories", "40", "--ref-exponent", "9", "--levels", "1,6", "--fit-window", "0.005,0.2",
];

#[test]
fn missing_config_is_a_config_error_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let code = run(&[
        "convergence",
        "--config",
        tmp.path().join("absent.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(!out.exists());
}

#[test]
fn invalid_values_fail_before_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = out.to_str().unwrap();
    assert_eq!(run(&["convergence", "--levels", "5,40", "--out", o]), EXIT_CONFIG);
    assert_eq!(run(&["equilibrium", "--h", "0.3", "--out", o]), EXIT_CONFIG);
    assert_eq!(run(&["stability", "--scheme", "rk4", "--out", o]), EXIT_CONFIG);
    assert_eq!(run(&["convergence", "--threshold", "3", "--out", o]), EXIT_CONFIG);
    assert_eq!(run(&["convergence", "--bogus", "--out", o]), EXIT_CONFIG);
    assert!(!out.exists());
}

#[test]
fn convergence_writes_two_csvs_and_a_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("conv");
    let mut args = vec!["convergence", "--scheme", "heun,euler", "--D", "0.05", "--out", out.to_str().unwrap()];
    args.extend_from_slice(SMALL_CONV);
    assert_eq!(run(&args), EXIT_OK);
    assert_eq!(listing(&out), ["convergence.csv", "fit.csv", "summary.toml"]);
    let fit = fs::read_to_string(out.join("fit.csv")).unwrap();
    let mut lines = fit.lines();
    assert_eq!(lines.next().unwrap(), "scheme,D,A,sigma_A,alpha,sigma_alpha,h_min,h_max");
    assert!(lines.next().unwrap().starts_with("Heun,0.05,"));
    assert!(lines.next().unwrap().starts_with("Euler,0.05,"));
    let conv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(
        conv.lines().next().unwrap(),
        "scheme,D,level,h,mean_abs_error,std_error,n_samples,n_diverged"
    );
    assert_eq!(conv.lines().count(), 1 + 2 * 6);
}

#[test]
fn empty_sweep_writes_summary_only() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("eq");
    assert_eq!(run(&["equilibrium", "--scheme", "", "--out", out.to_str().unwrap()]), EXIT_OK);
    assert_eq!(listing(&out), ["summary.toml"]);
}

#[test]
fn reruns_are_byte_identical_and_summary_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let common = [
        "equilibrium", "--scheme", "heun,euler,cup2", "--h", "0.05,0.25", "--t-end", "10",
        "--trajectories", "30", "--seed", "17", "--chunk", "4",
    ];
    let mut args = common.to_vec();
    args.extend(["--workers", "1", "--out", a.to_str().unwrap()]);
    assert_eq!(run(&args), EXIT_OK);
    let mut args = common.to_vec();
    args.extend(["--workers", "3", "--out", b.to_str().unwrap()]);
    assert_eq!(run(&args), EXIT_OK);

    let files = listing(&a);
    assert_eq!(files, listing(&b));
    assert_eq!(files.len(), 1 + 6 + 1);
    for f in files.iter().filter(|f| f.ends_with(".csv")) {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }

    // Replaying the summary alone, into a fresh directory.
    let c = tmp.path().join("c");
    let summary = a.join("summary.toml");
    assert_eq!(
        run(&["equilibrium", "--config", summary.to_str().unwrap(), "--out", c.to_str().unwrap()]),
        EXIT_OK
    );
    for f in files.iter().filter(|f| f.ends_with(".csv")) {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(c.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn writes_stay_inside_the_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("nested/st");
    let code = run(&[
        "stability", "--scheme", "heun,stra", "--grid-d", "0.05,0.5,2", "--grid-h", "0.01,0.4,2",
        "--trajectories", "2", "--t-end", "20", "--plot-script", "true", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(
        listing(tmp.path()),
        ["nested/st/plot.py", "nested/st/stability.csv", "nested/st/stability_summary.csv", "nested/st/summary.toml"]
    );
    let summary = fs::read_to_string(out.join("stability_summary.csv")).unwrap();
    assert_eq!(summary.lines().next().unwrap(), "scheme,stable_count,total_cells");
    assert!(summary.lines().nth(1).unwrap().ends_with(",4"));
}

#[test]
fn environment_overrides_file_and_flags_override_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("m.toml");
    fs::write(&cfg, "kind = \"moments\"\nsamples = 1000\nseed = 2\nh = [0.5]\n").unwrap();
    let out = tmp.path().join("m");
    let env = [
        ("HEUNBENCH_SEED".to_owned(), "9".to_owned()),
        ("HEUNBENCH_SAMPLES".to_owned(), "500".to_owned()),
    ];
    let code = run_with_env(
        ["heunbench", "moments", "--config", cfg.to_str().unwrap(), "--samples", "300", "--out", out.to_str().unwrap()],
        env,
    );
    assert_eq!(code, EXIT_OK);
    let s = fs::read_to_string(out.join("summary.toml")).unwrap();
    assert!(s.contains("seed = 9"), "{s}");
    assert!(s.contains("samples = 300"), "{s}");
    assert!(s.contains("h = [0.5]"), "{s}");
}

#[test]
fn kind_mismatch_in_config_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("m.toml");
    fs::write(&cfg, "kind = \"moments\"\n").unwrap();
    assert_eq!(run(&["stability", "--config", cfg.to_str().unwrap()]), EXIT_CONFIG);
}
