//! Monte Carlo moment diagnostics for the step integrals.

use crate::increments::{compose, make_increment, sample_triple, NoiseIncrement, Z3Representation};
use crate::rng::RandomStream;
use crate::error::Result;

/// Running mean with a standard error.
#[derive(Clone, Copy, Debug, Default)]
pub struct MeanEstimator {
    sum: f64,
    sum_sq: f64,
    n: u64,
}

impl MeanEstimator {
    #[inline]
    pub fn push(&mut self, v: f64) {
        self.sum += v;
        self.sum_sq += v * v;
        self.n += 1;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    pub fn std_error(&self) -> f64 {
        let n = self.n as f64;
        let m = self.mean();
        ((self.sum_sq / n - m * m).max(0.0) / n).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentCheck {
    pub name: &'static str,
    pub measured: f64,
    pub std_error: f64,
    pub target: f64,
}

impl MomentCheck {
    /// Deviation from the target in standard errors.
    pub fn z_score(&self) -> f64 {
        (self.measured - self.target) / self.std_error
    }

    pub fn within(&self, sigmas: f64) -> bool {
        (self.measured - self.target).abs() <= sigmas * self.std_error
    }
}

type MomentFn = fn(&NoiseIncrement) -> f64;

/// Low-order moments of `(z1, z2, z3)` and the values the true integrals
/// have to leading order in `h`, as tabulated for the iterated integral.
fn moment_table(h: f64) -> Vec<(&'static str, MomentFn, f64)> {
    vec![
        ("<z1^2>", |i| i.z1() * i.z1(), h),
        ("<z2^2>", |i| i.z2() * i.z2(), h.powi(3) / 3.0),
        ("<z1 z2>", |i| i.z1() * i.z2(), h * h / 2.0),
        ("<z3>", |i| i.z3(), 0.0),
        ("<z3^2>", |i| i.z3() * i.z3(), h.powi(4) / 12.0),
        ("<z1 z3>", |i| i.z1() * i.z3(), 0.0),
        ("<z2 z3>", |i| i.z2() * i.z3(), 0.0),
        ("<z1^2 z3>", |i| i.z1() * i.z1() * i.z3(), h.powi(3) / 4.0),
        ("<z1 z2 z3>", |i| i.z1() * i.z2() * i.z3(), h.powi(4) / 12.0),
        ("<z2^2 z3>", |i| i.z2() * i.z2() * i.z3(), h.powi(5) / 15.0),
    ]
}

/// Measures every tabulated moment for one `z3` surrogate.
pub fn representation_moments(
    rep: Z3Representation,
    h: f64,
    samples: u64,
    seed: u64,
) -> Result<Vec<MomentCheck>> {
    let table = moment_table(h);
    let mut acc = vec![MeanEstimator::default(); table.len()];
    let mut stream = RandomStream::new(seed, 0);
    for _ in 0..samples {
        let inc = make_increment(h, sample_triple(&mut stream), rep)?;
        for (a, (_, f, _)) in acc.iter_mut().zip(&table) {
            a.push(f(&inc));
        }
    }
    Ok(table
        .iter()
        .zip(&acc)
        .map(|((name, _, target), a)| MomentCheck {
            name,
            measured: a.mean(),
            std_error: a.std_error(),
            target: *target,
        })
        .collect())
}

/// A moment of increments composed from two half steps, against the same
/// moment of direct full-step increments.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositionCheck {
    pub name: &'static str,
    pub direct: f64,
    pub composed: f64,
    /// Standard error of `composed − direct` (independent samples).
    pub std_error: f64,
}

impl CompositionCheck {
    pub fn within(&self, sigmas: f64) -> bool {
        (self.composed - self.direct).abs() <= sigmas * self.std_error
    }
}

/// Compares `compose(a, b)` over two `h/2` steps with direct `h` steps.
pub fn composition_moments(
    rep: Z3Representation,
    h: f64,
    samples: u64,
    seed: u64,
) -> Result<Vec<CompositionCheck>> {
    let table: Vec<(&'static str, MomentFn)> = vec![
        ("<z1>", |i| i.z1()),
        ("<z2>", |i| i.z2()),
        ("<z1^2>", |i| i.z1() * i.z1()),
        ("<z2^2>", |i| i.z2() * i.z2()),
        ("<z1 z2>", |i| i.z1() * i.z2()),
        ("<z1^2 z3>", |i| i.z1() * i.z1() * i.z3()),
    ];
    let mut direct = vec![MeanEstimator::default(); table.len()];
    let mut composed = vec![MeanEstimator::default(); table.len()];
    let mut s_direct = RandomStream::new(seed, 0);
    let mut s_comp = RandomStream::new(seed, 1);
    for _ in 0..samples {
        let d = make_increment(h, sample_triple(&mut s_direct), rep)?;
        let a = make_increment(0.5 * h, sample_triple(&mut s_comp), rep)?;
        let b = make_increment(0.5 * h, sample_triple(&mut s_comp), rep)?;
        let c = compose(&a, &b);
        for (k, (_, f)) in table.iter().enumerate() {
            direct[k].push(f(&d));
            composed[k].push(f(&c));
        }
    }
    Ok(table
        .iter()
        .enumerate()
        .map(|(k, (name, _))| CompositionCheck {
            name,
            direct: direct[k].mean(),
            composed: composed[k].mean(),
            std_error: direct[k].std_error().hypot(composed[k].std_error()),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z1_z2_moments_match() {
        let h = 0.1;
        for rep in [Z3Representation::Alt, Z3Representation::Cup] {
            let checks = representation_moments(rep, h, 200_000, 4).unwrap();
            for c in checks.iter().take(3) {
                assert!(c.within(5.0), "{rep:?} {}: z = {}", c.name, c.z_score());
            }
        }
    }

    #[test]
    fn composition_preserves_gaussian_moments() {
        let checks = composition_moments(Z3Representation::Alt, 0.1, 200_000, 8).unwrap();
        for c in checks.iter().take(5) {
            assert!(c.within(5.0), "{}: {} vs {}", c.name, c.composed, c.direct);
        }
    }
}
