//! Integrating a user-defined SDE: an Ornstein-Uhlenbeck process with
//! multiplicative noise, `dx = −θx dt + σ(1 + x²)^{1/2} ∘ dW`.
//!
//! Every scheme needs `f, g` and their derivatives; the higher-order Taylor
//! schemes use them up to `f″` and `g‴`.
//!
//!     cargo run --example custom_problem

use heunbench::{
    dispatch, make_increment, sample_triple, CalculusConvention, Coefficients, RandomStream,
    SchemeId, SdeProblem, Z3Representation,
};

fn main() -> heunbench::Result<()> {
    let (theta, sigma) = (1.5, 0.4);
    let p = SdeProblem::custom("ou-mult", CalculusConvention::Stratonovich, move |x, _t| {
        let s = (1.0 + x * x).sqrt();
        Coefficients {
            f: -theta * x,
            df: -theta,
            d2f: 0.0,
            g: sigma * s,
            dg: sigma * x / s,
            d2g: sigma / s.powi(3),
            d3g: -3.0 * sigma * x / s.powi(5),
        }
    });

    let h = 0.01;
    let steps = 2000;
    for id in [SchemeId::Heun, SchemeId::Stra, SchemeId::T32, SchemeId::CUP2] {
        let stepper = dispatch(id);
        // Full triples for everyone, so all schemes see the same Brownian path
        // even though most of them ignore y2 and y3.
        let rep = stepper.needs().z3().unwrap_or(Z3Representation::Alt);
        let mut stream = RandomStream::new(42, 0);
        let incs = (0..steps)
            .map(|_| make_increment(h, sample_triple(&mut stream), rep))
            .collect::<heunbench::Result<Vec<_>>>()?;
        match stepper.integrate(&p, 1.0, 0.0, &incs, 1e8) {
            Ok(x) => println!("{:<5} x(T = {}) = {x:.10}", id.label(), steps as f64 * h),
            Err(d) => println!("{:<5} diverged at t = {}", id.label(), d.time),
        }
    }
    Ok(())
}
