//! Checks the integrators against the closed-form solution of
//! `dx = x dt + D x ∘ dW`, then prints the full validation table.
//!
//!     cargo run --release --example analytic_validation

use heunbench::convergence::{fit_power_law, run_convergence, ConvergenceConfig};
use heunbench::validate::{run_validation, ValidationConfig};
use heunbench::SchemeId;

fn main() -> heunbench::Result<()> {
    let cfg = ConvergenceConfig {
        trajectories: 1000,
        ..ConvergenceConfig::analytic(SchemeId::Heun, 0.2)
    };
    let curve = run_convergence(&cfg)?;
    println!("Heun, error against the exact solution:");
    for l in &curve.levels {
        println!("  h = {:.3e}   E|x - x_exact| = {:.4e} ± {:.1e}", l.h, l.mean_abs_error, l.std_error);
    }
    let fit = fit_power_law(&curve, cfg.fit_window)?;
    println!("  alpha = {:.3} ± {:.3}\n", fit.alpha, fit.sigma_alpha);

    let checks = run_validation(&ValidationConfig {
        trajectories: 1000,
        samples: 100_000,
        ..ValidationConfig::default()
    })?;
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("\n{} checks, {failed} failed", checks.len());
    Ok(())
}
