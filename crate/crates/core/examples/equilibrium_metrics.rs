//! Long-run histograms of Heun and Stra at a small and a large step,
//! compared with the equilibrium density, next to the noise floor of a
//! direct sampler with the same sample count.
//!
//!     cargo run --release --example equilibrium_metrics [trajectories]

use heunbench::equilibrium::{metrics, run_equilibrium, run_sampler_only, HistogramConfig};
use heunbench::{EquilibriumSpec, SchemeId};

fn main() -> heunbench::Result<()> {
    let trajectories: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("trajectory count"))
        .unwrap_or(200);
    let d = 0.1;
    let cfg = HistogramConfig {
        trajectories,
        ..HistogramConfig::desk()
    };
    let spec = EquilibriumSpec::stratonovich(d)?;
    println!(
        "D = {d}, {} samples per run",
        cfg.trajectories * cfg.samples_per_trajectory()
    );

    let floor = metrics(&run_sampler_only(d, &cfg)?, &spec)?;
    println!("{:<14} distance {:.4}  ratio {:.4}", "direct draws", floor.distance, floor.ratio);

    for h in [0.01, 0.2] {
        for id in [SchemeId::Heun, SchemeId::Stra] {
            let e = run_equilibrium(id, d, h, &cfg)?;
            let m = metrics(&e, &spec)?;
            let (mean, se) = e.mean_with_error();
            println!(
                "{:<5} h = {:<5} distance {:.4}  ratio {:.4}  <x> = {mean:+.4} ± {se:.4}",
                id.label(),
                h,
                m.distance,
                m.ratio
            );
        }
    }
    Ok(())
}
