//! Stable region of a few schemes on a coarse `(D, h)` grid.
//!
//!     cargo run --release --example stability_scan

use heunbench::stability::{log_grid, run_stability, stable_count, StabilityConfig};
use heunbench::SchemeId;

fn main() -> heunbench::Result<()> {
    let schemes = vec![SchemeId::Heun, SchemeId::Stra, SchemeId::Miln];
    let cfg = StabilityConfig {
        d_values: log_grid(0.01, 0.5, 6),
        h_values: log_grid(0.005, 0.5, 6),
        trajectories: 10,
        horizon: 200.0,
        ..StabilityConfig::desk(schemes.clone())
    };
    let grid = run_stability(&cfg)?;

    for s in schemes {
        println!("{} ({} stable cells)", s.label(), stable_count(&grid, s));
        print!("{:>8}", "D \\ h");
        for h in &cfg.h_values {
            print!("{h:>7.3}");
        }
        println!();
        let cells: Vec<_> = grid.cells_for(s).collect();
        for (row, d) in cells.chunks(cfg.h_values.len()).zip(&cfg.d_values) {
            print!("{d:>8.3}");
            for c in row {
                print!("{:>7}", if c.stable { "o" } else { "." });
            }
            println!();
        }
        println!();
    }
    Ok(())
}
