//! One step of every scheme from the same point and the same noise.
//!
//!     cargo run --example single_step

use heunbench::{
    benchmark_problem, dispatch, make_increment, GaussianTriple, SchemeId, StepInput,
    Z3Representation,
};

fn main() -> heunbench::Result<()> {
    let p = benchmark_problem(0.1)?;
    let (x, h) = (0.5, 0.05);
    let triple = GaussianTriple {
        y1: 0.8,
        y2: -0.3,
        y3: 1.1,
    };

    println!("D = 0.1, x = {x}, h = {h}, y = {triple:?}\n");
    println!("{:<9} {:>20}", "scheme", "x(t + h)");
    for id in SchemeId::ALL {
        let stepper = dispatch(id);
        let rep = stepper.needs().z3().unwrap_or(Z3Representation::Alt);
        let inc = make_increment(h, triple, rep)?;
        let next = stepper.step(&p, &StepInput::new(x, 0.0, inc));
        println!("{:<9} {:>20.15}", id.label(), next);
    }
    Ok(())
}
