//! Property tests for the algebraic invariants.

use heunbench::increments::NoiseIncrement;
use heunbench::schemes::{euler_step, heun_step, hepc_step, hest_step, mil_minus_step, miln_step, stra_step};
use heunbench::validate::{additive_problem, deterministic_heun, noiseless_problem, taylor2};
use heunbench::{
    benchmark_problem, compose, convert_drift, dispatch, make_increment, validation_problem,
    CalculusConvention, EquilibriumSpec, GaussianTriple, SchemeId, StepInput, Z3Representation,
};
use proptest::prelude::*;

fn increment() -> impl Strategy<Value = NoiseIncrement> {
    (1e-4f64..2.0, -3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0, any::<bool>()).prop_map(
        |(h, y1, y2, y3, alt)| {
            let rep = if alt { Z3Representation::Alt } else { Z3Representation::Cup };
            make_increment(h, GaussianTriple { y1, y2, y3 }, rep).unwrap()
        },
    )
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn input() -> impl Strategy<Value = StepInput> {
    (-2.0f64..2.0, 0.0f64..5.0, increment()).prop_map(|(x, t, inc)| StepInput::new(x, t, inc))
}

proptest! {
    #[test]
    fn compose_is_associative(a in increment(), b in increment(), c in increment()) {
        let l = compose(&compose(&a, &b), &c);
        let r = compose(&a, &compose(&b, &c));
        prop_assert!(close(l.h(), r.h(), 1e-14));
        prop_assert!(close(l.z1(), r.z1(), 1e-13));
        prop_assert!(close(l.z2(), r.z2(), 1e-13));
        prop_assert!(close(l.z3(), r.z3(), 1e-12), "{} vs {}", l.z3(), r.z3());
    }

    #[test]
    fn compose_with_zero_noise_shifts_z2(a in increment(), hb in 1e-3f64..1.0) {
        let b = NoiseIncrement::zero(hb).unwrap();
        let c = compose(&a, &b);
        prop_assert_eq!(c.z1(), a.z1());
        prop_assert!(close(c.z2(), a.z2() + hb * a.z1(), 1e-14));
    }

    #[test]
    fn steppers_are_pure(i in input(), d in 0.01f64..0.5) {
        let p = benchmark_problem(d).unwrap();
        for id in SchemeId::ALL {
            let s = dispatch(id);
            let a = s.step(&p, &i);
            let b = s.step(&p, &i);
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn drift_conversion_round_trips(x in -3.0f64..3.0, d in 0.01f64..1.0) {
        for p in [benchmark_problem(d).unwrap(), validation_problem(d).unwrap()] {
            let ito = convert_drift(&p, CalculusConvention::Stratonovich, CalculusConvention::Ito);
            let back = convert_drift(&ito, CalculusConvention::Ito, CalculusConvention::Stratonovich);
            let (c0, c1, c2) = (p.eval(x, 0.0), ito.eval(x, 0.0), back.eval(x, 0.0));
            prop_assert!(close(c1.f - c0.f, 0.5 * c0.g * c0.dg, 1e-12));
            prop_assert!(close(c2.f, c0.f, 1e-12));
            prop_assert!(close(c2.df, c0.df, 1e-12));
            prop_assert!(close(c2.d2f, c0.d2f, 1e-12));
            prop_assert_eq!(c1.g, c0.g);
        }
    }

    #[test]
    fn equilibrium_density_is_even_and_decreasing(x in 0.0f64..50.0, d in 0.01f64..2.0, ito in any::<bool>()) {
        let conv = if ito { CalculusConvention::Ito } else { CalculusConvention::Stratonovich };
        let spec = EquilibriumSpec::new(d, conv).unwrap();
        prop_assert_eq!(spec.density(x), spec.density(-x));
        prop_assert!(spec.density(x + 0.1) <= spec.density(x));
    }

    #[test]
    fn noiseless_reductions(i in input()) {
        let p = noiseless_problem();
        let heun = deterministic_heun(&p, i.x, i.t, i.inc.h());
        for s in [heun_step, miln_step, mil_minus_step, hest_step] {
            prop_assert!(close(s(&p, &i), heun, 1e-12));
        }
        prop_assert!(close(hepc_step(&p, &i, 1), heun, 1e-12));
        let cup = dispatch(SchemeId::CUP1).step(&p, &i);
        prop_assert!(close(cup, taylor2(&p, i.x, i.t, i.inc.h()), 1e-12));
    }

    #[test]
    fn additive_noise_reductions(i in input()) {
        let p = additive_problem();
        let e = euler_step(&p, &i);
        prop_assert!(close(stra_step(&p, &i), e, 1e-12));
        prop_assert!(close(dispatch(SchemeId::Milstein).step(&p, &i), e, 1e-12));
        let h = heun_step(&p, &i);
        for s in [miln_step, mil_minus_step, hest_step] {
            prop_assert!(close(s(&p, &i), h, 1e-12));
        }
    }
}
