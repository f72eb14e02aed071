//! Scalar SDE problems `dx = f(x,t) dt + g(x,t) dW` and the benchmark model.

use std::fmt;
use std::sync::Arc;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Drift, diffusion and the x-derivatives the Taylor schemes need, at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Coefficients {
    pub f: f64,
    pub df: f64,
    pub d2f: f64,
    pub g: f64,
    pub dg: f64,
    pub d2g: f64,
    pub d3g: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CalculusConvention {
    Ito,
    Stratonovich,
}

impl CalculusConvention {
    /// Exponent offset `n` of the benchmark's equilibrium density.
    pub fn equilibrium_offset(self) -> u8 {
        match self {
            CalculusConvention::Stratonovich => 0,
            CalculusConvention::Ito => 1,
        }
    }
}

type CoefficientFn = dyn Fn(f64, f64) -> Coefficients + Send + Sync;

#[derive(Clone)]
enum Kind {
    /// `f = −x(1+x²)`, `g = amp·(1+x²)` with `amp = √(2D)`.
    Benchmark { amp: f64 },
    /// `f = x`, `g = d·x`.
    Validation { d: f64 },
    Custom(Arc<CoefficientFn>),
}

/// A scalar SDE with analytic derivatives.
///
/// The drift may carry a shift of `k·½gg′` (set by [`convert_drift`]); all
/// derivatives of the shifted drift are derived from `g` and its derivatives.
#[derive(Clone)]
pub struct SdeProblem {
    label: String,
    kind: Kind,
    convention: CalculusConvention,
    drift_shift: f64,
}

impl fmt::Debug for SdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeProblem")
            .field("label", &self.label)
            .field("convention", &self.convention)
            .field("drift_shift", &self.drift_shift)
            .finish_non_exhaustive()
    }
}

impl SdeProblem {
    /// A problem from a user callable returning all coefficients at `(x, t)`.
    pub fn custom(
        label: impl Into<String>,
        convention: CalculusConvention,
        coefficients: impl Fn(f64, f64) -> Coefficients + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            kind: Kind::Custom(Arc::new(coefficients)),
            convention,
            drift_shift: 0.0,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The calculus in which `f` is to be read.
    pub fn convention(&self) -> CalculusConvention {
        self.convention
    }

    #[inline]
    pub fn eval(&self, x: f64, t: f64) -> Coefficients {
        let mut c = match &self.kind {
            Kind::Benchmark { amp } => {
                let x2 = x * x;
                Coefficients {
                    f: -x * (1.0 + x2),
                    df: -1.0 - 3.0 * x2,
                    d2f: -6.0 * x,
                    g: amp * (1.0 + x2),
                    dg: 2.0 * amp * x,
                    d2g: 2.0 * amp,
                    d3g: 0.0,
                }
            }
            Kind::Validation { d } => Coefficients {
                f: x,
                df: 1.0,
                d2f: 0.0,
                g: d * x,
                dg: *d,
                d2g: 0.0,
                d3g: 0.0,
            },
            Kind::Custom(func) => func(x, t),
        };
        if self.drift_shift != 0.0 {
            let k = 0.5 * self.drift_shift;
            c.f += k * c.g * c.dg;
            c.df += k * (c.dg * c.dg + c.g * c.d2g);
            c.d2f += k * (3.0 * c.dg * c.d2g + c.g * c.d3g);
        }
        c
    }

    pub fn f(&self, x: f64, t: f64) -> f64 {
        self.eval(x, t).f
    }

    pub fn g(&self, x: f64, t: f64) -> f64 {
        self.eval(x, t).g
    }

    /// Closed-form solution `x(t)` given the driving Wiener value `W(t)`, when
    /// the problem has one.
    pub fn exact_solution(&self, x0: f64, t: f64, w: f64) -> Option<f64> {
        match self.kind {
            Kind::Validation { d } => Some(validation_exact_solution(d, x0, t, w)),
            _ => None,
        }
    }
}

/// `dx = −x(1+x²) dt + √(2D)(1+x²) dW`, read in the Stratonovich sense.
pub fn benchmark_problem(d: f64) -> Result<SdeProblem> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::NonPositiveNoise(d));
    }
    Ok(SdeProblem {
        label: format!("benchmark(D={d})"),
        kind: Kind::Benchmark {
            amp: (2.0 * d).sqrt(),
        },
        convention: CalculusConvention::Stratonovich,
        drift_shift: 0.0,
    })
}

/// `dx = x dt + D x ∘ dW`, solvable in closed form (see [`validation_exact_solution`]).
pub fn validation_problem(d: f64) -> Result<SdeProblem> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::NonPositiveNoise(d));
    }
    Ok(SdeProblem {
        label: format!("validation(D={d})"),
        kind: Kind::Validation { d },
        convention: CalculusConvention::Stratonovich,
        drift_shift: 0.0,
    })
}

/// `x(t) = x0·exp(t + D·W(t))`.
pub fn validation_exact_solution(d: f64, x0: f64, t: f64, w: f64) -> f64 {
    x0 * (t + d * w).exp()
}

/// Rewrites the drift for another calculus: Stratonovich → Itô adds `½gg′`,
/// Itô → Stratonovich subtracts it. The process described is unchanged.
pub fn convert_drift(
    problem: &SdeProblem,
    from: CalculusConvention,
    to: CalculusConvention,
) -> SdeProblem {
    let mut out = problem.clone();
    let delta = match (from, to) {
        (CalculusConvention::Stratonovich, CalculusConvention::Ito) => 1.0,
        (CalculusConvention::Ito, CalculusConvention::Stratonovich) => -1.0,
        _ => return out,
    };
    out.drift_shift += delta;
    out.convention = to;
    out
}

/// Stationary density `N/(1+x²)^(1+α+n)` of the benchmark model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquilibriumSpec {
    d: f64,
    alpha: f64,
    n: u8,
    norm: f64,
}

impl EquilibriumSpec {
    pub fn new(d: f64, convention: CalculusConvention) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::NonPositiveNoise(d));
        }
        let alpha = 1.0 / (2.0 * d);
        let n = convention.equilibrium_offset();
        let nf = f64::from(n);
        // ∫ (1+x²)^(−s) dx = √π Γ(s − ½)/Γ(s) with s = 1 + α + n.
        let norm = (ln_gamma(1.0 + nf + alpha) - ln_gamma(0.5 + nf + alpha)).exp()
            / std::f64::consts::PI.sqrt();
        Ok(Self { d, alpha, n, norm })
    }

    pub fn stratonovich(d: f64) -> Result<Self> {
        Self::new(d, CalculusConvention::Stratonovich)
    }

    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn n(&self) -> u8 {
        self.n
    }
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Tail exponent `1 + α + n`.
    pub fn exponent(&self) -> f64 {
        1.0 + self.alpha + f64::from(self.n)
    }

    /// Degrees of freedom of the Student-t variable with `x = t/√ν`.
    pub fn degrees_of_freedom(&self) -> f64 {
        2.0 * self.exponent() - 1.0
    }

    #[inline]
    pub fn density(&self, x: f64) -> f64 {
        equilibrium_density(x, self)
    }

    /// Solves `P(x_cut) = fraction·P(0)` for `x_cut ≥ 0`.
    pub fn support_cut(&self, fraction: f64) -> f64 {
        (fraction.recip().powf(1.0 / self.exponent()) - 1.0).sqrt()
    }
}

#[inline]
pub fn equilibrium_density(x: f64, spec: &EquilibriumSpec) -> f64 {
    spec.norm * (1.0 + x * x).powf(-spec.exponent())
}

/// Exact draw from the equilibrium density: a Student-t variate with
/// `ν = 1 + 2α + 2n` degrees of freedom, scaled by `1/√ν`.
///
/// Consumes one normal, then one chi-square variate.
pub fn sample_equilibrium(stream: &mut RandomStream, spec: &EquilibriumSpec) -> f64 {
    let nu = spec.degrees_of_freedom();
    let z = stream.normal();
    let chi2 = stream.chi_squared(nu);
    let t = z / (chi2 / nu).sqrt();
    t / nu.sqrt()
}
