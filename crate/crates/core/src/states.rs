//! The four BB84 polarization states, projective measurement and the
//! Breidbart (intermediate) basis.
//!
//! States live in a real two-dimensional space spanned by horizontal `|x⟩`
//! and vertical `|y⟩` polarization. The conjugate basis is `|u⟩ = (|x⟩+|y⟩)/√2`
//! and `|v⟩ = (|x⟩-|y⟩)/√2`. Logical bits are encoded as
//!
//! | basis       | bit 0 | bit 1 |
//! |-------------|-------|-------|
//! | rectilinear | `|x⟩` | `|y⟩` |
//! | diagonal    | `|v⟩` | `|u⟩` |

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_8};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::IDENTITY_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bit {
    Zero,
    One,
}

impl Bit {
    pub fn index(self) -> usize {
        match self {
            Bit::Zero => 0,
            Bit::One => 1,
        }
    }

    pub fn from_index(i: usize) -> Bit {
        if i == 0 {
            Bit::Zero
        } else {
            Bit::One
        }
    }

    pub fn flip(self) -> Bit {
        match self {
            Bit::Zero => Bit::One,
            Bit::One => Bit::Zero,
        }
    }
}

impl From<bool> for Bit {
    fn from(b: bool) -> Self {
        if b {
            Bit::One
        } else {
            Bit::Zero
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// `{|x⟩, |y⟩}`.
    Rectilinear,
    /// `{|u⟩, |v⟩}`, the Hadamard image of the rectilinear basis.
    Diagonal,
}

impl Basis {
    /// The states carrying bit 0 and bit 1, in that order.
    pub fn states(self) -> (StateVec2, StateVec2) {
        match self {
            Basis::Rectilinear => (StateVec2::X, StateVec2::Y),
            Basis::Diagonal => (StateVec2::V, StateVec2::U),
        }
    }

    pub fn state_for(self, bit: Bit) -> StateVec2 {
        let (zero, one) = self.states();
        match bit {
            Bit::Zero => zero,
            Bit::One => one,
        }
    }
}

impl From<bool> for Basis {
    fn from(b: bool) -> Self {
        if b {
            Basis::Diagonal
        } else {
            Basis::Rectilinear
        }
    }
}

/// A real unit vector in the polarization plane, components along `|x⟩` and `|y⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateVec2 {
    x: f64,
    y: f64,
}

impl StateVec2 {
    pub const X: StateVec2 = StateVec2 { x: 1.0, y: 0.0 };
    pub const Y: StateVec2 = StateVec2 { x: 0.0, y: 1.0 };
    pub const U: StateVec2 = StateVec2 {
        x: FRAC_1_SQRT_2,
        y: FRAC_1_SQRT_2,
    };
    pub const V: StateVec2 = StateVec2 {
        x: FRAC_1_SQRT_2,
        y: -FRAC_1_SQRT_2,
    };

    pub fn new(x: f64, y: f64) -> Result<Self> {
        let norm2 = x * x + y * y;
        if (norm2 - 1.0).abs() > IDENTITY_TOL || !norm2.is_finite() {
            return Err(Error::NotNormalized(norm2));
        }
        Ok(StateVec2 { x, y })
    }

    /// `cos θ |x⟩ + sin θ |y⟩`.
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        StateVec2 { x: c, y: s }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn norm_sqr(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dot(&self, other: &StateVec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Applies `H = [[1, 1], [1, -1]] / √2`.
    pub fn hadamard(&self) -> StateVec2 {
        StateVec2 {
            x: (self.x + self.y) * FRAC_1_SQRT_2,
            y: (self.x - self.y) * FRAC_1_SQRT_2,
        }
    }

    fn check_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > IDENTITY_TOL {
            Err(Error::NotNormalized(n))
        } else {
            Ok(())
        }
    }
}

/// The unit Alice prepares: a basis, a bit, and the polarization encoding them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bb84Signal {
    pub basis: Basis,
    pub bit: Bit,
    pub state: StateVec2,
}

pub fn encode(bit: Bit, basis: Basis) -> Bb84Signal {
    Bb84Signal {
        basis,
        bit,
        state: basis.state_for(bit),
    }
}

/// Projective measurement probability `⟨outcome|state⟩²`.
pub fn born_prob(state: &StateVec2, outcome: &StateVec2) -> Result<f64> {
    state.check_normalized()?;
    outcome.check_normalized()?;
    let amp = state.dot(outcome);
    Ok((amp * amp).min(1.0))
}

/// Eve's measurement basis `|0⟩ = cos θ|x⟩ − sin θ|y⟩`, `|1⟩ = sin θ|x⟩ + cos θ|y⟩`.
///
/// Outcome `|0⟩` is read as bit 0, `|1⟩` as bit 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BreidbartBasis {
    pub theta: f64,
    pub ket0: StateVec2,
    pub ket1: StateVec2,
}

impl BreidbartBasis {
    pub fn new(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        BreidbartBasis {
            theta,
            ket0: StateVec2 { x: c, y: -s },
            ket1: StateVec2 { x: s, y: c },
        }
    }

    /// The intermediate basis at θ = π/8.
    pub fn optimal() -> Self {
        Self::new(FRAC_PI_8)
    }

    pub fn kets(&self) -> (StateVec2, StateVec2) {
        (self.ket0, self.ket1)
    }

    pub fn ket(&self, bit: Bit) -> StateVec2 {
        match bit {
            Bit::Zero => self.ket0,
            Bit::One => self.ket1,
        }
    }
}

/// Probability that a measurement in the basis at angle `theta` yields the
/// logical bit Alice encoded, averaged over the four equiprobable signals.
pub fn breidbart_guess_prob(theta: f64) -> f64 {
    let two = 2.0 * theta;
    0.5 + 0.25 * (two.cos() + two.sin())
}

/// Same quantity as [`breidbart_guess_prob`] but summed projector by
/// projector over the four signals.
pub fn breidbart_guess_prob_by_projectors(theta: f64) -> f64 {
    let basis = BreidbartBasis::new(theta);
    let p = |s: StateVec2, k: StateVec2| {
        let a = s.dot(&k);
        a * a
    };
    0.25 * (p(StateVec2::X, basis.ket0)
        + p(StateVec2::V, basis.ket0)
        + p(StateVec2::Y, basis.ket1)
        + p(StateVec2::U, basis.ket1))
}

/// Samples a projective measurement of `state` in `basis_states`.
///
/// Returns 0 with probability `born_prob(state, basis_states.0)`. Consumes
/// exactly one uniform draw.
pub fn measure<R: Rng + ?Sized>(
    state: &StateVec2,
    basis_states: (StateVec2, StateVec2),
    rng: &mut R,
) -> Result<usize> {
    let (b0, b1) = basis_states;
    let dev = (b0.norm_sqr() - 1.0)
        .abs()
        .max((b1.norm_sqr() - 1.0).abs())
        .max(b0.dot(&b1).abs());
    if dev > IDENTITY_TOL {
        return Err(Error::NotOrthonormal(dev));
    }
    let p0 = born_prob(state, &b0)?;
    Ok(sample_outcome(p0, rng))
}

#[inline]
pub(crate) fn sample_outcome<R: Rng + ?Sized>(p0: f64, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    if u < p0 {
        0
    } else {
        1
    }
}
