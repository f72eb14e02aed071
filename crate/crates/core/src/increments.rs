//! Multiple stochastic integrals over one step.
//!
//! For a step of length `h` driven by a Wiener path `W`:
//!
//! ```text
//! z1 = ∫ dW            (the Wiener increment)
//! z2 = ∫ z1(s) ds      (time integral of the increment)
//! z3 = ∫ z2(s) dW(s)   (iterated integral)
//! ```
//!
//! `z1` and `z2` are jointly Gaussian and represented exactly from two
//! independent standard normals. `z3` is not Gaussian; two closed-form
//! surrogates are provided, selected by [`Z3Representation`]. Neither
//! reproduces every low-order moment of the true integral.

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Three independent standard normals, drawn in the order `y1`, `y2`, `y3`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GaussianTriple {
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
}

/// Surrogate used for the iterated integral `z3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Z3Representation {
    /// `z3 = (h²/6)(y1² − h + y3)`.
    Cup,
    /// `z3 = z1·z2 − (h²/2)(1 + y3/3)`.
    Alt,
}

impl Z3Representation {
    pub fn label(self) -> &'static str {
        match self {
            Z3Representation::Cup => "CUP",
            Z3Representation::Alt => "ALT",
        }
    }
}

/// Which integrals a scheme reads. Variates that are not needed are not drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NoiseNeeds {
    Z1,
    Z1Z2,
    Full(Z3Representation),
}

impl NoiseNeeds {
    pub fn needs_z2(self) -> bool {
        !matches!(self, NoiseNeeds::Z1)
    }

    pub fn z3(self) -> Option<Z3Representation> {
        match self {
            NoiseNeeds::Full(rep) => Some(rep),
            _ => None,
        }
    }
}

/// Noise for one step of length `h`.
///
/// Increments built by [`make_increment`] satisfy `z1 == √h·y1` bit for bit and
/// keep their source triple. Composed increments carry no source triple.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseIncrement {
    h: f64,
    z1: f64,
    z2: f64,
    z3: f64,
    source: Option<GaussianTriple>,
}

impl NoiseIncrement {
    /// Builds an increment from precomputed integrals.
    pub fn from_parts(h: f64, z1: f64, z2: f64, z3: f64) -> Result<Self> {
        check_step(h)?;
        Ok(Self {
            h,
            z1,
            z2,
            z3,
            source: None,
        })
    }

    /// Noise-free increment of length `h`.
    pub fn zero(h: f64) -> Result<Self> {
        Self::from_parts(h, 0.0, 0.0, 0.0)
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }
    #[inline]
    pub fn z1(&self) -> f64 {
        self.z1
    }
    #[inline]
    pub fn z2(&self) -> f64 {
        self.z2
    }
    #[inline]
    pub fn z3(&self) -> f64 {
        self.z3
    }
    pub fn source(&self) -> Option<GaussianTriple> {
        self.source
    }
}

#[inline]
fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveStep(h))
    }
}

/// Draws `y1`, `y2`, `y3` from the stream, in that order.
#[inline]
pub fn sample_triple(stream: &mut RandomStream) -> GaussianTriple {
    let y1 = stream.normal();
    let y2 = stream.normal();
    let y3 = stream.normal();
    GaussianTriple { y1, y2, y3 }
}

/// Builds `(z1, z2, z3)` for a step of length `h` from a Gaussian triple.
#[inline]
pub fn make_increment(
    h: f64,
    t: GaussianTriple,
    rep: Z3Representation,
) -> Result<NoiseIncrement> {
    check_step(h)?;
    let sqrt_h = h.sqrt();
    let z1 = sqrt_h * t.y1;
    let z2 = h * (0.5 * z1 + sqrt_h / (2.0 * 3f64.sqrt()) * t.y2);
    let z3 = match rep {
        // The `- h` term is kept as published even though it is not
        // dimensionally homogeneous with y1².
        Z3Representation::Cup => h * h / 6.0 * (t.y1 * t.y1 - h + t.y3),
        Z3Representation::Alt => z1 * z2 - 0.5 * h * h * (1.0 + t.y3 / 3.0),
    };
    Ok(NoiseIncrement {
        h,
        z1,
        z2,
        z3,
        source: Some(t),
    })
}

/// Draws only the variates `needs` requires (always in order `y1, y2, y3`) and
/// builds the increment. Integrals that are not needed are zero, as are the
/// corresponding entries of the source triple.
#[inline]
pub fn draw_increment(
    stream: &mut RandomStream,
    h: f64,
    needs: NoiseNeeds,
) -> Result<NoiseIncrement> {
    match needs {
        NoiseNeeds::Z1 => {
            check_step(h)?;
            let y1 = stream.normal();
            Ok(NoiseIncrement {
                h,
                z1: h.sqrt() * y1,
                z2: 0.0,
                z3: 0.0,
                source: Some(GaussianTriple {
                    y1,
                    y2: 0.0,
                    y3: 0.0,
                }),
            })
        }
        NoiseNeeds::Z1Z2 => {
            let y1 = stream.normal();
            let y2 = stream.normal();
            let mut inc = make_increment(
                h,
                GaussianTriple { y1, y2, y3: 0.0 },
                Z3Representation::Alt,
            )?;
            inc.z3 = 0.0;
            Ok(inc)
        }
        NoiseNeeds::Full(rep) => make_increment(h, sample_triple(stream), rep),
    }
}

/// Noise of the step `[0, a.h + b.h]` from the noise of two consecutive steps.
///
/// Splitting the defining integrals at `a.h`, with `∫₀ᵗ u dW = t·z1 − z2` on
/// the second piece:
///
/// ```text
/// z1 = a.z1 + b.z1
/// z2 = a.z2 + b.h·a.z1 + b.z2
/// z3 = a.z3 + a.z2·b.z1 + a.z1·(b.h·b.z1 − b.z2) + b.z3
/// ```
#[inline]
pub fn compose(a: &NoiseIncrement, b: &NoiseIncrement) -> NoiseIncrement {
    NoiseIncrement {
        h: a.h + b.h,
        z1: a.z1 + b.z1,
        z2: a.z2 + b.h * a.z1 + b.z2,
        z3: a.z3 + a.z2 * b.z1 + a.z1 * (b.h * b.z1 - b.z2) + b.z3,
        source: None,
    }
}

/// Halves a path by composing neighbouring pairs. `fine` must have even length.
pub fn coarsen_pairs(fine: &[NoiseIncrement], out: &mut Vec<NoiseIncrement>) {
    debug_assert!(fine.len() % 2 == 0);
    out.clear();
    out.extend(fine.chunks_exact(2).map(|p| compose(&p[0], &p[1])));
}
