//! Driving a run from a TOML manifest, as the command-line tool does, and
//! reading the summary back to reproduce it.
//!
//!     cargo run --release --example run_manifest

use heunbench::cli::execute;
use heunbench::manifest::{ExperimentKind, ManifestLayer, RunManifest};

fn main() -> heunbench::Result<()> {
    let out = std::env::temp_dir().join("heunbench-manifest-example");
    let text = format!(
        r#"
kind = "convergence"
schemes = ["Heun", "Mil-"]
D = [0.05]
trajectories = 500
seed = 3
out = {out:?}
"#,
        out = out.display().to_string()
    );
    let m = RunManifest::resolve(ExperimentKind::Convergence, ManifestLayer::from_toml_str(&text)?)?;
    execute(&m)?;

    let summary = std::fs::read_to_string(out.join("summary.toml"))?;
    let again = RunManifest::resolve(ExperimentKind::Convergence, ManifestLayer::from_toml_str(&summary)?)?;
    assert_eq!(again, m);
    println!("\nsummary.toml reproduces the manifest:\n{summary}");
    Ok(())
}
