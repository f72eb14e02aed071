//! Measured moments of the step integrals for both `z3` surrogates, and the
//! effect of building one step from two half steps.
//!
//!     cargo run --release --example increment_moments [samples]

use heunbench::moments::{composition_moments, representation_moments};
use heunbench::Z3Representation;

fn main() -> heunbench::Result<()> {
    let samples: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("sample count"))
        .unwrap_or(400_000);
    let h = 0.1;
    for rep in [Z3Representation::Cup, Z3Representation::Alt] {
        println!("{} (h = {h}, {samples} samples)", rep.label());
        for m in representation_moments(rep, h, samples, 11)? {
            println!(
                "  {:<12} {:>12.4e} ± {:.1e}   tabulated {:>10.3e}   z = {:>7.1}",
                m.name, m.measured, m.std_error, m.target, m.z_score()
            );
        }
        for c in composition_moments(rep, h, samples, 12)? {
            let flag = if c.within(5.0) { "" } else { "  <- differs" };
            println!(
                "  two halves {:<12} {:>12.4e}  one step {:>12.4e}{flag}",
                c.name, c.composed, c.direct
            );
        }
        println!();
    }
    Ok(())
}
