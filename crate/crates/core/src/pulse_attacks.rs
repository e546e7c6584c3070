//! Attacks that exploit multi-photon pulses: beam-splitting combined with
//! intercept-resend or with the optimal incoherent attack, and
//! photon-number splitting with selective blocking of single-photon pulses.
//!
//! In every case Eve replaces the lossy line with a lossless one. The
//! predictions are per sifted bit: `guess_prob` is Eve's probability of
//! naming Alice's bit, `d_ab` the error rate Alice and Bob observe.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, check_range, Error, Result};
use crate::optics::{check_mu, poisson_pmf, scenario_probs};
use crate::single_photon::{
    ir_disturbance, ir_guess_given_disturbance, ir_guess_prob, opt_guess_prob, IR_FULL_GUESS,
    IR_MAX_DISTURBANCE,
};

/// Eavesdropping strategy and its parameters.
///
/// For the splitter variants `d` is the disturbance Eve inflicts on the
/// pulses that reach Bob untouched by the splitter (scenario C). The
/// intercept-resend hybrid realizes it by measuring a fraction `ε = 4d` of
/// those pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AttackStrategy {
    #[serde(rename = "ir")]
    InterceptResend { eps: f64 },
    #[serde(rename = "opt")]
    OptimalIncoherent { d: f64 },
    #[serde(rename = "bs-ir")]
    BsInterceptResend { t: f64, d: f64 },
    #[serde(rename = "bs-opt")]
    BsOptimal { t: f64, d: f64 },
    #[serde(rename = "pns")]
    Pns { kappa: f64, d: f64 },
}

impl AttackStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AttackStrategy::InterceptResend { eps } => {
                check_probability("eps", eps)?;
            }
            AttackStrategy::OptimalIncoherent { d } => {
                check_range("d", d, 0.0, 0.5, "[0, 1/2]")?;
            }
            AttackStrategy::BsInterceptResend { t, d } => {
                check_probability("t", t)?;
                check_range("d", d, 0.0, IR_MAX_DISTURBANCE, "[0, 1/4]")?;
            }
            AttackStrategy::BsOptimal { t, d } => {
                check_probability("t", t)?;
                check_range("d", d, 0.0, 0.5, "[0, 1/2]")?;
            }
            AttackStrategy::Pns { kappa, d } => {
                check_probability("kappa", kappa)?;
                check_range("d", d, 0.0, 0.5, "[0, 1/2]")?;
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            AttackStrategy::InterceptResend { .. } => "ir",
            AttackStrategy::OptimalIncoherent { .. } => "opt",
            AttackStrategy::BsInterceptResend { .. } => "bs-ir",
            AttackStrategy::BsOptimal { .. } => "bs-opt",
            AttackStrategy::Pns { .. } => "pns",
        }
    }

    /// `true` for the variants that route photons through Eve's splitter.
    pub fn uses_splitter(&self) -> bool {
        matches!(
            self,
            AttackStrategy::BsInterceptResend { .. } | AttackStrategy::BsOptimal { .. }
        )
    }

    /// `true` when Eve swaps the lossy line for a lossless one.
    pub fn replaces_line(&self) -> bool {
        matches!(
            self,
            AttackStrategy::BsInterceptResend { .. }
                | AttackStrategy::BsOptimal { .. }
                | AttackStrategy::Pns { .. }
        )
    }

    /// Closed-form prediction for pulses of mean photon number `mu`.
    pub fn predict(&self, mu: f64) -> Result<AttackPrediction> {
        match *self {
            AttackStrategy::InterceptResend { eps } => Ok(AttackPrediction {
                guess_prob: ir_guess_prob(eps)?,
                d_ab: ir_disturbance(eps)?,
            }),
            AttackStrategy::OptimalIncoherent { d } => Ok(AttackPrediction {
                guess_prob: opt_guess_prob(d)?,
                d_ab: d,
            }),
            AttackStrategy::BsInterceptResend { t, d } => bs_ir_predict(mu, t, d),
            AttackStrategy::BsOptimal { t, d } => bs_opt_predict(mu, t, d),
            AttackStrategy::Pns { kappa, d } => pns_predict(mu, kappa, d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttackPrediction {
    /// Eve's probability of guessing a sifted bit.
    pub guess_prob: f64,
    /// Error rate in Alice and Bob's sifted key.
    pub d_ab: f64,
}

/// Surviving fraction `e^{−μ(1−t)}` of sifted bits that pass through the
/// single-photon part of a splitter attack.
fn scenario_c_share(mu: f64, t: f64) -> f64 {
    (-mu * (1.0 - t)).exp()
}

fn check_splitter_args(mu: f64, t: f64) -> Result<()> {
    check_mu(mu)?;
    check_probability("t", t)?;
    Ok(())
}

/// Beam-splitter plus intercept-resend.
pub fn bs_ir_predict(mu: f64, t: f64, d: f64) -> Result<AttackPrediction> {
    check_splitter_args(mu, t)?;
    check_range("d", d, 0.0, IR_MAX_DISTURBANCE, "[0, 1/4]")?;
    let share = scenario_c_share(mu, t);
    Ok(AttackPrediction {
        guess_prob: IR_FULL_GUESS - share * SQRT_2 * (0.25 - d),
        d_ab: d * share,
    })
}

/// Splitter-hybrid guess probability assembled from scenario weights:
/// `(P_A·P_A-guess + P_C·P_C-guess) / (1 − P₀ − P_B)`.
fn assemble_splitter(mu: f64, t: f64, a_guess: f64, c_guess: f64) -> Result<f64> {
    let s = scenario_probs(mu, t)?;
    let norm = 1.0 - s.p_0 - s.p_b;
    if norm <= 0.0 {
        return Err(Error::Domain {
            name: "mu*t",
            value: mu * t,
            expected: "> 0 (Bob must receive photons)",
        });
    }
    Ok((s.p_a * a_guess + s.p_c * c_guess) / norm)
}

/// [`bs_ir_predict`]'s guess probability rebuilt from the scenario probabilities.
pub fn bs_ir_guess_assembled(mu: f64, t: f64, d: f64) -> Result<f64> {
    assemble_splitter(mu, t, IR_FULL_GUESS, ir_guess_given_disturbance(d)?)
}

/// Beam-splitter plus optimal incoherent attack.
pub fn bs_opt_predict(mu: f64, t: f64, d: f64) -> Result<AttackPrediction> {
    check_splitter_args(mu, t)?;
    check_range("d", d, 0.0, 0.5, "[0, 1/2]")?;
    let share = scenario_c_share(mu, t);
    Ok(AttackPrediction {
        guess_prob: 1.0 - share * (0.5 - (d * (1.0 - d)).sqrt()),
        d_ab: d * share,
    })
}

/// [`bs_opt_predict`]'s guess probability rebuilt from the scenario probabilities.
pub fn bs_opt_guess_assembled(mu: f64, t: f64, d: f64) -> Result<f64> {
    assemble_splitter(mu, t, 1.0, opt_guess_prob(d)?)
}

/// `P_{n>1} = 1 − e^{−μ}(1+μ)`, summed as a series for small μ.
fn multi_photon_prob(mu: f64) -> f64 {
    if mu < 0.5 {
        let mut term = (-mu).exp() * mu;
        let mut sum = 0.0;
        for n in 2..60 {
            term *= mu / n as f64;
            sum += term;
            if term < sum * 1e-18 {
                break;
            }
        }
        sum
    } else {
        1.0 - (-mu).exp() * (1.0 + mu)
    }
}

fn check_pns_args(mu: f64, kappa: f64, d: f64) -> Result<()> {
    check_mu(mu)?;
    if mu <= 0.0 {
        return Err(Error::Domain {
            name: "mu",
            value: mu,
            expected: "> 0 (no non-empty pulses otherwise)",
        });
    }
    check_probability("kappa", kappa)?;
    check_range("d", d, 0.0, 0.5, "[0, 1/2]")?;
    Ok(())
}

/// Photon-number splitting: Eve keeps one photon of every multi-photon
/// pulse, blocks a fraction `kappa` of single-photon pulses and attacks the
/// rest with the optimal incoherent probe at disturbance `d`.
pub fn pns_predict(mu: f64, kappa: f64, d: f64) -> Result<AttackPrediction> {
    check_pns_args(mu, kappa, d)?;
    let multi = multi_photon_prob(mu);
    let single_kept = (1.0 - kappa) * mu * (-mu).exp();
    // 1 − e^{−μ}(1 + μκ)
    let denom = multi + single_kept;
    Ok(AttackPrediction {
        guess_prob: (multi + single_kept * (0.5 + (d * (1.0 - d)).sqrt())) / denom,
        d_ab: single_kept * d / denom,
    })
}

/// [`pns_predict`]'s guess probability from the photon-number components
/// `(P_{n>1} + (1−κ)P₁·P_opt(d)) / (1 − P₀ − κP₁)`.
pub fn pns_guess_assembled(mu: f64, kappa: f64, d: f64) -> Result<f64> {
    check_pns_args(mu, kappa, d)?;
    let p0 = poisson_pmf(mu, 0)?;
    let p1 = poisson_pmf(mu, 1)?;
    let multi = 1.0 - p0 - p1;
    Ok((multi + (1.0 - kappa) * p1 * opt_guess_prob(d)?) / (1.0 - p0 - kappa * p1))
}

/// Blocking fraction that restores Bob's expected rate of non-empty pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaCalibration {
    /// Raw value of `(e^{μ(1−η)} − 1)/μ`, not clamped to 1.
    pub kappa: f64,
    /// Eve can block every single-photon pulse and still match the rate.
    pub break_possible: bool,
}

impl KappaCalibration {
    /// κ limited to the physically usable range `[0, 1]`.
    pub fn clamped(&self) -> f64 {
        self.kappa.min(1.0)
    }
}

pub fn kappa_for_channel(mu: f64, eta: f64) -> Result<KappaCalibration> {
    check_mu(mu)?;
    if mu <= 0.0 {
        return Err(Error::Domain {
            name: "mu",
            value: mu,
            expected: "> 0",
        });
    }
    check_probability("eta", eta)?;
    let kappa = (mu * (1.0 - eta)).exp_m1() / mu;
    Ok(KappaCalibration {
        kappa,
        break_possible: kappa >= 1.0,
    })
}

/// Channel transmission at or below which photon-number splitting yields
/// the whole key without errors: `η* = 1 − ln(1+μ)/μ`.
pub fn eta_star(mu: f64) -> Result<f64> {
    check_mu(mu)?;
    if mu <= 0.0 {
        return Err(Error::Domain {
            name: "mu",
            value: mu,
            expected: "> 0",
        });
    }
    Ok((mu - mu.ln_1p()) / mu)
}

/// Probability per pulse that both of Bob's detectors fire under
/// photon-number splitting. Single-photon pulses never double-click, so
/// this depends only on the multi-photon pulses, each reaching Bob with one
/// photon fewer over the lossless line.
pub fn pns_coincidence_prob(mu: f64) -> Result<f64> {
    check_mu(mu)?;
    if mu < 0.5 {
        // Σ_{n≥3} P_n (1 − 2^{2−n}) / 2, summed directly to avoid cancellation.
        let mut total = 0.0;
        for n in 3..=60u32 {
            total += crate::optics::poisson_pmf_unchecked(mu, n) * (1.0 - 2f64.powi(2 - n as i32));
        }
        return Ok(0.5 * total);
    }
    let e = (-mu).exp();
    let three_plus = 1.0 - e * (1.0 + mu + 0.5 * mu * mu);
    let halved = 4.0 * e * ((0.5 * mu).exp_m1() - 0.5 * mu - 0.125 * mu * mu);
    Ok(0.5 * (three_plus - halved))
}
