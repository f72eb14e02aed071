//! Strong order of several schemes on the benchmark model, each against its
//! own fine-step solution on the same Brownian path.
//!
//!     cargo run --release --example convergence_order [trajectories]

use heunbench::convergence::{fit_power_law, run_convergence, ConvergenceConfig};
use heunbench::SchemeId;

fn main() -> heunbench::Result<()> {
    let trajectories: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("trajectory count"))
        .unwrap_or(1000);
    let d = 0.05;
    println!("benchmark model, D = {d}, {trajectories} trajectories\n");
    println!("{:<6} {:>14} {:>18}", "scheme", "alpha", "A");
    for id in [
        SchemeId::Euler,
        SchemeId::Heun,
        SchemeId::Miln,
        SchemeId::MilMinus,
        SchemeId::T32,
        SchemeId::CUP2,
    ] {
        let cfg = ConvergenceConfig {
            trajectories,
            ..ConvergenceConfig::benchmark(id, d)
        };
        let curve = run_convergence(&cfg)?;
        let fit = fit_power_law(&curve, cfg.fit_window)?;
        println!(
            "{:<6} {:>7.3} ± {:.3} {:>10.3e} ± {:.1e}",
            id.label(),
            fit.alpha,
            fit.sigma_alpha,
            fit.a,
            fit.sigma_a
        );
    }
    Ok(())
}
