//! Mutual information on the binary symmetric channel and the one-way
//! privacy-amplification thresholds.
//!
//! Alice and Bob can distill a key by one-way privacy amplification when
//! `I(A;B) ≥ max{I(A;E), I(E;B)}`. For the strategies here Eve's two
//! informations coincide and both sides are `½φ(·)` of a flip rate, so the
//! condition collapses to `D_AB < 1 − P_c`: φ is even and increasing on
//! `[0, 1]`, so `½φ(1−2D) > ½φ(2P_c−1)` iff `1 − 2D > 2P_c − 1`.

use std::f64::consts::{LN_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::optics::check_mu;
use crate::pulse_attacks::{bs_ir_predict, bs_opt_predict, kappa_for_channel, pns_predict};
use crate::single_photon::{ir_guess_given_disturbance, opt_guess_prob, IR_MAX_DISTURBANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogUnit {
    #[default]
    Bits,
    Nats,
}

impl LogUnit {
    fn scale(self) -> f64 {
        match self {
            LogUnit::Bits => 1.0 / LN_2,
            LogUnit::Nats => 1.0,
        }
    }
}

/// `x ln x` with `0 ln 0 = 0`.
fn x_ln_x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `φ(z) = (1−z)log(1−z) + (1+z)log(1+z)`.
pub fn phi(z: f64, unit: LogUnit) -> Result<f64> {
    check_range("z", z, -1.0, 1.0, "[-1, 1]")?;
    Ok((x_ln_x(1.0 - z) + x_ln_x(1.0 + z)) * unit.scale())
}

/// Binary entropy `H₂(d)`.
pub fn binary_entropy(d: f64, unit: LogUnit) -> Result<f64> {
    check_range("d", d, 0.0, 1.0, "[0, 1]")?;
    Ok(-(x_ln_x(d) + x_ln_x(1.0 - d)) * unit.scale())
}

/// `I(A;B) = ½φ(1 − 2D)` for a channel flipping bits with probability `d`.
pub fn i_ab(d: f64) -> Result<f64> {
    i_ab_in(d, LogUnit::Bits)
}

pub fn i_ab_in(d: f64, unit: LogUnit) -> Result<f64> {
    check_range("d", d, 0.0, 0.5, "[0, 1/2]")?;
    Ok(0.5 * phi(1.0 - 2.0 * d, unit)?)
}

/// The entropy form `log 2 + D log D + (1−D) log(1−D)` of [`i_ab_in`].
pub fn i_ab_entropy_form(d: f64, unit: LogUnit) -> Result<f64> {
    check_range("d", d, 0.0, 0.5, "[0, 1/2]")?;
    Ok((LN_2 + x_ln_x(d) + x_ln_x(1.0 - d)) * unit.scale())
}

/// `I(A;E) = I(E;B) = ½φ(1 − 2(1 − P_c))`.
pub fn i_eve(p_correct: f64) -> Result<f64> {
    i_eve_in(p_correct, LogUnit::Bits)
}

pub fn i_eve_in(p_correct: f64, unit: LogUnit) -> Result<f64> {
    check_range("p_correct", p_correct, 0.5, 1.0, "[1/2, 1]")?;
    Ok(0.5 * phi(1.0 - 2.0 * (1.0 - p_correct), unit)?)
}

/// One-way privacy amplification is possible: `d_ab < 1 − p_correct`.
pub fn feasible(d_ab: f64, p_correct: f64) -> Result<bool> {
    check_range("d_ab", d_ab, 0.0, 0.5, "[0, 1/2]")?;
    check_range("p_correct", p_correct, 0.5, 1.0, "[1/2, 1]")?;
    Ok(d_ab < 1.0 - p_correct)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Ir,
    Opt,
    BsIr,
    BsOpt,
    Pns,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::Ir,
        StrategyKind::Opt,
        StrategyKind::BsIr,
        StrategyKind::BsOpt,
        StrategyKind::Pns,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Ir => "ir",
            StrategyKind::Opt => "opt",
            StrategyKind::BsIr => "bs-ir",
            StrategyKind::BsOpt => "bs-opt",
            StrategyKind::Pns => "pns",
        }
    }

    /// Whether μ and η enter the strategy.
    pub fn uses_pulses(self) -> bool {
        !matches!(self, StrategyKind::Ir | StrategyKind::Opt)
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy '{s}'")))
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn check_pulse_args(kind: StrategyKind, mu: f64, eta: f64) -> Result<()> {
    if kind.uses_pulses() {
        check_mu(mu)?;
        if mu <= 0.0 {
            return Err(Error::Domain {
                name: "mu",
                value: mu,
                expected: "> 0",
            });
        }
        check_range("eta", eta, 0.0, 1.0, "[0, 1]")?;
    }
    Ok(())
}

/// Largest tolerable `D_AB` for a strategy, from the closed-form bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub kind: StrategyKind,
    pub max_d_ab: f64,
    /// Photon-number splitting can recover the whole key with no errors;
    /// `max_d_ab` is then reported as 0.
    pub break_possible: bool,
}

/// Threshold `D_AB` below which a key can be distilled against `kind`.
///
/// Splitter attacks take `t = η`; photon-number splitting takes the κ that
/// restores Bob's non-empty pulse rate.
pub fn threshold(kind: StrategyKind, mu: f64, eta: f64) -> Result<Threshold> {
    check_pulse_args(kind, mu, eta)?;
    let opt_bound = (2.0 - SQRT_2) / 4.0;
    let (max_d_ab, break_possible) = match kind {
        StrategyKind::Ir => (1.0 / (2.0 * (1.0 + SQRT_2)), false),
        StrategyKind::Opt => (opt_bound, false),
        StrategyKind::BsIr => {
            let share = (-mu * (1.0 - eta)).exp();
            (
                (2.0 - SQRT_2 * (1.0 - share)) / (4.0 * (1.0 + SQRT_2)),
                false,
            )
        }
        StrategyKind::BsOpt => (opt_bound * (-mu * (1.0 - eta)).exp(), false),
        StrategyKind::Pns => {
            let bracket = (1.0 + mu) * (-mu).exp() - (-eta * mu).exp();
            if bracket <= 0.0 {
                (0.0, true)
            } else {
                (opt_bound * bracket / -(-eta * mu).exp_m1(), false)
            }
        }
    };
    Ok(Threshold {
        kind,
        max_d_ab,
        break_possible,
    })
}

/// Eve's guess probability as a function of the `D_AB` she causes, for one
/// strategy at fixed μ and η.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EveCurve {
    pub kind: StrategyKind,
    pub mu: f64,
    pub eta: f64,
    /// `D_AB / D`: fraction of sifted bits exposed to the disturbing attack.
    pub exposure: f64,
    /// Largest attack-level disturbance the strategy supports.
    pub max_d: f64,
    /// κ used by photon-number splitting (clamped to 1).
    pub kappa: Option<f64>,
}

impl EveCurve {
    pub fn new(kind: StrategyKind, mu: f64, eta: f64) -> Result<Self> {
        check_pulse_args(kind, mu, eta)?;
        let share = || (-mu * (1.0 - eta)).exp();
        let (exposure, max_d, kappa) = match kind {
            StrategyKind::Ir => (1.0, IR_MAX_DISTURBANCE, None),
            StrategyKind::Opt => (1.0, 0.5, None),
            StrategyKind::BsIr => (share(), IR_MAX_DISTURBANCE, None),
            StrategyKind::BsOpt => (share(), 0.5, None),
            StrategyKind::Pns => {
                let kappa = kappa_for_channel(mu, eta)?.clamped();
                let exposure = pns_predict(mu, kappa, 0.5)?.d_ab / 0.5;
                (exposure, 0.5, Some(kappa))
            }
        };
        Ok(EveCurve {
            kind,
            mu,
            eta,
            exposure,
            max_d,
            kappa,
        })
    }

    pub fn max_d_ab(&self) -> f64 {
        self.exposure * self.max_d
    }

    /// Eve's guess probability when Alice and Bob see error rate `d_ab`.
    pub fn guess_prob(&self, d_ab: f64) -> Result<f64> {
        let max = self.max_d_ab();
        if !(d_ab >= 0.0 && d_ab <= max * (1.0 + 1e-12)) {
            return Err(Error::Domain {
                name: "d_ab",
                value: d_ab,
                expected: "within the strategy's attainable error rates",
            });
        }
        let d = if self.exposure > 0.0 {
            (d_ab / self.exposure).min(self.max_d)
        } else {
            0.0
        };
        Ok(match self.kind {
            StrategyKind::Ir => ir_guess_given_disturbance(d)?,
            StrategyKind::Opt => opt_guess_prob(d)?,
            StrategyKind::BsIr => bs_ir_predict(self.mu, self.eta, d)?.guess_prob,
            StrategyKind::BsOpt => bs_opt_predict(self.mu, self.eta, d)?.guess_prob,
            StrategyKind::Pns => pns_predict(self.mu, self.kappa.unwrap_or(0.0), d)?.guess_prob,
        })
    }

    pub fn point(&self, d_ab: f64) -> Result<InfoCurvePoint> {
        let p = self.guess_prob(d_ab)?;
        Ok(InfoCurvePoint {
            d_ab,
            i_ab: i_ab(d_ab)?,
            i_ae: i_eve(p.clamp(0.5, 1.0))?,
        })
    }
}

/// One row of a mutual-information curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfoCurvePoint {
    pub d_ab: f64,
    /// `I(A;B)` in bits.
    pub i_ab: f64,
    /// `I(A;E) = I(E;B)` in bits.
    pub i_ae: f64,
}

impl InfoCurvePoint {
    pub fn feasible(&self) -> bool {
        self.i_ab > self.i_ae
    }
}

/// Where `I(A;B)` meets `I(A;E)` along a strategy's curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Crossing {
    Interior {
        d_ab: f64,
    },
    /// Eve's information never reaches Alice and Bob's over the attainable
    /// range; the bound is the strategy's largest `D_AB`.
    Boundary {
        max_d_ab: f64,
    },
    /// Eve has full information at zero disturbance.
    Break,
}

impl Crossing {
    pub fn d_ab(&self) -> f64 {
        match *self {
            Crossing::Interior { d_ab } => d_ab,
            Crossing::Boundary { max_d_ab } => max_d_ab,
            Crossing::Break => 0.0,
        }
    }
}

const BRACKET_EPS: f64 = 1e-12;
const MAX_BISECTIONS: usize = 200;

/// Solves `I(A;B)(D_AB) = I(A;E)(D_AB)` by bisection.
pub fn crossing_point(kind: StrategyKind, mu: f64, eta: f64) -> Result<Crossing> {
    let curve = EveCurve::new(kind, mu, eta)?;
    if curve.exposure <= 0.0 || curve.guess_prob(0.0)? >= 1.0 {
        return Ok(Crossing::Break);
    }
    let gap = |d: f64| -> Result<f64> { Ok(i_ab(d)? - i_eve(curve.guess_prob(d)?)?) };

    let mut lo = BRACKET_EPS;
    let mut hi = (0.5 - BRACKET_EPS).min(curve.max_d_ab());
    if gap(hi)? > 0.0 {
        return Ok(Crossing::Boundary {
            max_d_ab: curve.max_d_ab(),
        });
    }
    if gap(lo)? <= 0.0 {
        return Ok(Crossing::Interior { d_ab: 0.0 });
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Crossing::Interior {
        d_ab: 0.5 * (lo + hi),
    })
}
