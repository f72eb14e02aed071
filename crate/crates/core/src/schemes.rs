//! Single-step update rules.
//!
//! Every step function is a pure map `(problem, x, t, noise) → x'`. Subscript
//! `0` marks coefficients at the start point, a tilde those at the predictor.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::increments::{NoiseIncrement, NoiseNeeds, Z3Representation};
use crate::model::{CalculusConvention, Coefficients, SdeProblem};

/// Default corrector passes of the iterated schemes.
pub const DEFAULT_ITERATIONS: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    Euler,
    Heun,
    Stra,
    Miln,
    HeSt,
    HePC,
    MilMinus,
    T32,
    HPCMinus,
    CUP1,
    CUP2,
    /// Plain Milstein step. Not one of the benchmarked variants, but a
    /// building block and a reference point in the analytic checks.
    Milstein,
}

impl SchemeId {
    /// The eleven benchmarked schemes, in table order.
    pub const BENCHMARKED: [SchemeId; 11] = [
        SchemeId::Euler,
        SchemeId::Heun,
        SchemeId::Stra,
        SchemeId::Miln,
        SchemeId::HeSt,
        SchemeId::HePC,
        SchemeId::MilMinus,
        SchemeId::T32,
        SchemeId::HPCMinus,
        SchemeId::CUP1,
        SchemeId::CUP2,
    ];

    pub const ALL: [SchemeId; 12] = [
        SchemeId::Euler,
        SchemeId::Heun,
        SchemeId::Stra,
        SchemeId::Miln,
        SchemeId::HeSt,
        SchemeId::HePC,
        SchemeId::MilMinus,
        SchemeId::T32,
        SchemeId::HPCMinus,
        SchemeId::CUP1,
        SchemeId::CUP2,
        SchemeId::Milstein,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SchemeId::Euler => "Euler",
            SchemeId::Heun => "Heun",
            SchemeId::Stra => "Stra",
            SchemeId::Miln => "Miln",
            SchemeId::HeSt => "HeSt",
            SchemeId::HePC => "HePC",
            SchemeId::MilMinus => "Mil-",
            SchemeId::T32 => "T3/2",
            SchemeId::HPCMinus => "HPC-",
            SchemeId::CUP1 => "CUP1",
            SchemeId::CUP2 => "CUP2",
            SchemeId::Milstein => "Milstein",
        }
    }

    /// Calculus the scheme converges to as `h → 0`.
    pub fn limit_convention(self) -> CalculusConvention {
        match self {
            SchemeId::Euler | SchemeId::Milstein => CalculusConvention::Ito,
            _ => CalculusConvention::Stratonovich,
        }
    }

    pub fn noise_needs(self) -> NoiseNeeds {
        match self {
            SchemeId::T32 => NoiseNeeds::Z1Z2,
            SchemeId::CUP1 => NoiseNeeds::Full(Z3Representation::Cup),
            SchemeId::CUP2 => NoiseNeeds::Full(Z3Representation::Alt),
            _ => NoiseNeeds::Z1,
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let id = match key.as_str() {
            "euler" => SchemeId::Euler,
            "heun" => SchemeId::Heun,
            "stra" => SchemeId::Stra,
            "miln" => SchemeId::Miln,
            "hest" => SchemeId::HeSt,
            "hepc" => SchemeId::HePC,
            "mil-" | "milminus" | "mil_minus" => SchemeId::MilMinus,
            "t3/2" | "t32" => SchemeId::T32,
            "hpc-" | "hpcminus" | "hpc_minus" => SchemeId::HPCMinus,
            "cup1" => SchemeId::CUP1,
            "cup2" => SchemeId::CUP2,
            "milstein" => SchemeId::Milstein,
            _ => return Err(Error::UnknownScheme(s.to_owned())),
        };
        Ok(id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInput {
    pub x: f64,
    pub t: f64,
    pub inc: NoiseIncrement,
}

impl StepInput {
    pub fn new(x: f64, t: f64, inc: NoiseIncrement) -> Self {
        Self { x, t, inc }
    }
}

/// Trajectory blow-up: the state left the finite range or crossed the guard.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diverged {
    /// Time at the end of the offending step.
    pub time: f64,
    pub value: f64,
}

#[inline]
fn gg(c: &Coefficients) -> f64 {
    c.g * c.dg
}

/// `x + h·f + g·z1`.
#[inline]
pub fn euler_step(p: &SdeProblem, input: &StepInput) -> f64 {
    let c = p.eval(input.x, input.t);
    input.x + input.inc.h() * c.f + c.g * input.inc.z1()
}

#[inline]
fn heun_corrector(p: &SdeProblem, input: &StepInput, c0: &Coefficients, pred: f64) -> f64 {
    let (h, z1) = (input.inc.h(), input.inc.z1());
    let cp = p.eval(pred, input.t + h);
    input.x + 0.5 * h * (c0.f + cp.f) + 0.5 * (c0.g + cp.g) * z1
}

/// Euler predictor, then the trapezoidal average with the same `z1`.
#[inline]
pub fn heun_step(p: &SdeProblem, input: &StepInput) -> f64 {
    hepc_step(p, input, 1)
}

/// `x + g·z1 + h·f + ½gg′z1²`.
#[inline]
pub fn stra_step(p: &SdeProblem, input: &StepInput) -> f64 {
    let c = p.eval(input.x, input.t);
    input.x + stra_forward_increment(&c, &input.inc)
}

#[inline]
fn stra_forward_increment(c: &Coefficients, inc: &NoiseIncrement) -> f64 {
    let (h, z1) = (inc.h(), inc.z1());
    c.g * z1 + h * c.f + 0.5 * gg(c) * z1 * z1
}

/// `g·z1 + h·f − ½gg′z1²` with coefficients taken at `x_eval`, the expansion
/// about the end point of the step.
#[inline]
pub fn stra_final_step_increment(p: &SdeProblem, x_eval: f64, input: &StepInput) -> f64 {
    let c = p.eval(x_eval, input.t + input.inc.h());
    stra_final_increment(&c, &input.inc)
}

#[inline]
fn stra_final_increment(c: &Coefficients, inc: &NoiseIncrement) -> f64 {
    let (h, z1) = (inc.h(), inc.z1());
    c.g * z1 + h * c.f - 0.5 * gg(c) * z1 * z1
}

/// `x + g·z1 + h·f + ½gg′(z1² − h)`.
#[inline]
pub fn milstein_step(p: &SdeProblem, input: &StepInput) -> f64 {
    let c = p.eval(input.x, input.t);
    let (h, z1) = (input.inc.h(), input.inc.z1());
    input.x + c.g * z1 + h * c.f + 0.5 * gg(&c) * (z1 * z1 - h)
}

#[inline]
fn milstein_corrected(p: &SdeProblem, input: &StepInput, sign: f64) -> f64 {
    let c0 = p.eval(input.x, input.t);
    let (h, z1) = (input.inc.h(), input.inc.z1());
    let pred = input.x + c0.g * z1 + h * c0.f + 0.5 * gg(&c0) * (z1 * z1 - h);
    let cp = p.eval(pred, input.t + h);
    input.x
        + 0.5 * h * (c0.f + cp.f)
        + 0.5 * (c0.g + cp.g) * z1
        + 0.25 * (gg(&c0) + sign * gg(&cp)) * (z1 * z1 - h)
}

/// Heun built from Milstein blocks: Milstein predictor, corrector averaging
/// the Milstein increment at the start point and at the predictor.
#[inline]
pub fn miln_step(p: &SdeProblem, input: &StepInput) -> f64 {
    milstein_corrected(p, input, 1.0)
}

/// As [`miln_step`] with the predictor's `½gg′` correction entering negated.
#[inline]
pub fn mil_minus_step(p: &SdeProblem, input: &StepInput) -> f64 {
    milstein_corrected(p, input, -1.0)
}

/// Euler–Stratonovich predictor, end-point Stratonovich corrector.
#[inline]
pub fn hest_step(p: &SdeProblem, input: &StepInput) -> f64 {
    hpc_minus_step(p, input, 1)
}

/// Heun with the corrector re-applied: `iterations` corrector passes in total,
/// each using the previous pass's output as the end point.
#[inline]
pub fn hepc_step(p: &SdeProblem, input: &StepInput, iterations: u32) -> f64 {
    let c0 = p.eval(input.x, input.t);
    let mut x_end = input.x + input.inc.h() * c0.f + c0.g * input.inc.z1();
    for _ in 0..iterations.max(1) {
        x_end = heun_corrector(p, input, &c0, x_end);
    }
    x_end
}

/// Iterated [`hest_step`]: `iterations` end-point Stratonovich corrector passes.
#[inline]
pub fn hpc_minus_step(p: &SdeProblem, input: &StepInput, iterations: u32) -> f64 {
    let c0 = p.eval(input.x, input.t);
    let forward = stra_forward_increment(&c0, &input.inc);
    let t_end = input.t + input.inc.h();
    let mut x_end = input.x + forward;
    for _ in 0..iterations.max(1) {
        let cp = p.eval(x_end, t_end);
        x_end = input.x + 0.5 * (forward + stra_final_increment(&cp, &input.inc));
    }
    x_end
}

#[inline]
fn taylor_t32_increment(c: &Coefficients, inc: &NoiseIncrement) -> f64 {
    let (h, z1, z2) = (inc.h(), inc.z1(), inc.z2());
    c.g * z1
        + h * c.f
        + 0.5 * gg(c) * z1 * z1
        + (c.g * c.df - c.f * c.dg) * z2
        + h * c.f * c.dg * z1
        + c.g * (c.dg * c.dg + c.d2g * c.g) * z1 * z1 * z1 / 6.0
}

/// Stratonovich–Taylor expansion through the `h^{3/2}` terms.
#[inline]
pub fn t32_step(p: &SdeProblem, input: &StepInput) -> f64 {
    let c = p.eval(input.x, input.t);
    input.x + taylor_t32_increment(&c, &input.inc)
}

/// Stratonovich–Taylor expansion through the `h²` terms. Which `z3`
/// surrogate is used is fixed when the increment is built.
#[inline]
pub fn cup_step(p: &SdeProblem, input: &StepInput) -> f64 {
    let c = p.eval(input.x, input.t);
    let inc = &input.inc;
    let (h, z1, z2, z3) = (inc.h(), inc.z1(), inc.z2(), inc.z3());
    let z1z2_z3 = z1 * z2 - z3;
    let z1sq = z1 * z1;
    // (g g′)′ = g′² + g g″
    let dgg = c.dg * c.dg + c.g * c.d2g;
    let second = 0.5 * h * h * c.f * c.df
        + 0.5 * c.df * c.dg * c.g * z1z2_z3
        + 0.5 * c.d2f * c.g * c.g * z1z2_z3
        + c.dg * (c.g * c.df - c.f * c.dg) * z3
        + 0.5 * c.dg * c.dg * c.f * (h * z1sq - 0.5 * z1 * z2 + 0.5 * z3)
        + c.g * (c.g * c.g * c.d3g + c.dg * dgg) * z1sq * z1sq / 24.0
        + 0.25 * h * c.d2g * c.g * c.f * (z1sq - 0.5 * z1z2_z3);
    input.x + taylor_t32_increment(&c, inc) + second
}

/// A scheme bound to its noise requirements and iteration count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stepper {
    id: SchemeId,
    needs: NoiseNeeds,
    iterations: u32,
}

/// Looks up the stepper for a scheme with the default iteration count.
pub fn dispatch(id: SchemeId) -> Stepper {
    Stepper {
        id,
        needs: id.noise_needs(),
        iterations: DEFAULT_ITERATIONS,
    }
}

/// Looks up a stepper by textual label (case-insensitive).
pub fn dispatch_name(name: &str) -> Result<Stepper> {
    name.parse().map(dispatch)
}

impl Stepper {
    /// Overrides the corrector pass count of HePC and HPC-. Values below 1
    /// are treated as 1.
    pub fn with_iterations(mut self, iterations: u32) -> Self {
        self.iterations = iterations.max(1);
        self
    }

    pub fn id(&self) -> SchemeId {
        self.id
    }

    pub fn needs(&self) -> NoiseNeeds {
        self.needs
    }

    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    #[inline]
    pub fn step(&self, p: &SdeProblem, input: &StepInput) -> f64 {
        match self.id {
            SchemeId::Euler => euler_step(p, input),
            SchemeId::Heun => heun_step(p, input),
            SchemeId::Stra => stra_step(p, input),
            SchemeId::Miln => miln_step(p, input),
            SchemeId::HeSt => hest_step(p, input),
            SchemeId::HePC => hepc_step(p, input, self.iterations),
            SchemeId::MilMinus => mil_minus_step(p, input),
            SchemeId::T32 => t32_step(p, input),
            SchemeId::HPCMinus => hpc_minus_step(p, input, self.iterations),
            SchemeId::CUP1 | SchemeId::CUP2 => cup_step(p, input),
            SchemeId::Milstein => milstein_step(p, input),
        }
    }

    /// One step with divergence detection: non-finite results and `|x'| > guard`
    /// are reported as [`Diverged`].
    #[inline]
    pub fn advance(
        &self,
        p: &SdeProblem,
        input: &StepInput,
        guard: f64,
    ) -> std::result::Result<f64, Diverged> {
        let x = self.step(p, input);
        if x.is_finite() && !(x.abs() > guard) {
            Ok(x)
        } else {
            Err(Diverged {
                time: input.t + input.inc.h(),
                value: x,
            })
        }
    }

    /// Integrates over a sequence of increments starting at `(x0, t0)`.
    pub fn integrate<'a>(
        &self,
        p: &SdeProblem,
        x0: f64,
        t0: f64,
        increments: impl IntoIterator<Item = &'a NoiseIncrement>,
        guard: f64,
    ) -> std::result::Result<f64, Diverged> {
        let (mut x, mut t) = (x0, t0);
        for inc in increments {
            x = self.advance(p, &StepInput::new(x, t, *inc), guard)?;
            t += inc.h();
        }
        Ok(x)
    }
}
