//! Poissonian pulse source, lossy channel and lossless beam-splitter.
//!
//! A beam-splitter of transmission `t` routes each photon independently to
//! Bob (probability `t`) or to Eve (probability `r = 1 − t`). Combining that
//! with a Poisson source of mean `μ` gives four routing scenarios:
//!
//! * A: at least one photon on each side;
//! * B: every photon reflected to Eve;
//! * C: every photon transmitted to Bob;
//! * D: the vacuum, probability `P₀ = e^{−μ}`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, check_range, Error, Result};

/// Upper limit on the mean photon number accepted by [`OpticalConfig`].
pub const MAX_MEAN_PHOTON_NUMBER: f64 = 20.0;

/// Truncation point of every infinite photon-number series.
pub const SERIES_CUTOFF: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalConfig {
    /// Mean photon number per pulse.
    pub mu: f64,
    /// Per-photon survival probability of the quantum channel.
    pub eta: f64,
    /// Transmission of Eve's beam-splitter towards Bob.
    pub t: f64,
}

impl OpticalConfig {
    pub fn new(mu: f64, eta: f64, t: f64) -> Result<Self> {
        let cfg = OpticalConfig { mu, eta, t };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_mu(self.mu)?;
        check_probability("eta", self.eta)?;
        check_probability("t", self.t)?;
        Ok(())
    }

    /// Reflection towards Eve.
    pub fn r(&self) -> f64 {
        1.0 - self.t
    }

    pub fn scenario_probs(&self) -> Result<ScenarioProbs> {
        scenario_probs(self.mu, self.t)
    }
}

pub(crate) fn check_mu(mu: f64) -> Result<f64> {
    check_range("mu", mu, 0.0, MAX_MEAN_PHOTON_NUMBER, "[0, 20]")
}

/// Probabilities of the four beam-splitter routing scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScenarioProbs {
    pub p_a: f64,
    pub p_b: f64,
    pub p_c: f64,
    pub p_0: f64,
}

impl ScenarioProbs {
    pub fn sum(&self) -> f64 {
        self.p_a + self.p_b + self.p_c + self.p_0
    }

    /// Probability the pulse leaves at least one photon on Bob's side
    /// (`1 − P₀ − P_B`), the normalizer of every sifted-key quantity.
    pub fn bob_nonempty(&self) -> f64 {
        self.p_a + self.p_c
    }
}

/// Poisson probability of `n` photons at mean `mu`.
pub fn poisson_pmf(mu: f64, n: u32) -> Result<f64> {
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::Domain {
            name: "mu",
            value: mu,
            expected: ">= 0",
        });
    }
    Ok(poisson_pmf_unchecked(mu, n))
}

pub(crate) fn poisson_pmf_unchecked(mu: f64, n: u32) -> f64 {
    if mu == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if n <= 100 {
        let mut p = (-mu).exp();
        for k in 1..=n {
            p *= mu / k as f64;
        }
        p
    } else {
        let n = n as f64;
        (-mu + n * mu.ln() - statrs::function::gamma::ln_gamma(n + 1.0)).exp()
    }
}

/// Samples a photon number from Poisson(`mu`) by sequential inversion.
///
/// Uses one uniform draw. No truncation: the search walks the CDF until it
/// passes the draw or the remaining mass underflows.
pub fn sample_photon_number<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> u32 {
    let u: f64 = rng.random();
    if mu <= 0.0 {
        return 0;
    }
    let mut n = 0u32;
    let mut p = (-mu).exp();
    let mut cdf = p;
    while cdf <= u {
        n += 1;
        p *= mu / n as f64;
        if p == 0.0 && n as f64 > mu {
            break;
        }
        cdf += p;
    }
    n
}

/// Binomial probability that `j` of `n` photons are transmitted.
pub fn split_pmf(n: u32, t: f64, j: u32) -> Result<f64> {
    check_probability("t", t)?;
    if j > n {
        return Err(Error::Domain {
            name: "j",
            value: j as f64,
            expected: "0 <= j <= n",
        });
    }
    Ok(binomial_coefficient(n, j) * t.powi(j as i32) * (1.0 - t).powi((n - j) as i32))
}

pub(crate) fn binomial_coefficient(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Routes `n` photons through a splitter of transmission `t`. Returns
/// `(to_bob, to_eve)`. One Bernoulli draw per photon.
pub fn binomial_split<R: Rng + ?Sized>(n: u32, t: f64, rng: &mut R) -> (u32, u32) {
    let mut bob = 0;
    for _ in 0..n {
        let u: f64 = rng.random();
        bob += u32::from(u < t);
    }
    (bob, n - bob)
}

/// Closed forms for the four routing scenarios.
///
/// `P_A = (1 − e^{−μt})(1 − e^{−μ(1−t)})`, the factorized form of
/// `1 + e^{−μ} − e^{−μt} − e^{−μ(1−t)}`, keeps full precision as μ → 0.
pub fn scenario_probs(mu: f64, t: f64) -> Result<ScenarioProbs> {
    check_mu(mu)?;
    check_probability("t", t)?;
    let p_0 = (-mu).exp();
    Ok(ScenarioProbs {
        p_a: (-mu * t).exp_m1() * (-mu * (1.0 - t)).exp_m1(),
        p_b: p_0 * (mu * (1.0 - t)).exp_m1(),
        p_c: p_0 * (mu * t).exp_m1(),
        p_0,
    })
}

/// Bob's photon-number distribution behind a splitter of transmission `t`:
/// still Poissonian, with mean `μt`.
pub fn bob_count_pmf_after_splitter(mu: f64, t: f64, i: u32) -> Result<f64> {
    check_mu(mu)?;
    check_probability("t", t)?;
    poisson_pmf(mu * t, i)
}

/// Probability of a coincidence (both of Bob's detectors firing) per pulse
/// sent through a channel of transmission `eta`.
///
/// The half accounts for Bob picking the wrong basis; in the wrong basis
/// each photon lands on either detector with probability 1/2, giving
/// `½(1 − e^{−ημ/2})²`. [`series::coincidence_prob`] sums the same quantity
/// photon number by photon number.
pub fn coincidence_prob(eta: f64, mu: f64) -> Result<f64> {
    check_probability("eta", eta)?;
    check_mu(mu)?;
    let half = (-eta * mu / 2.0).exp_m1();
    Ok(0.5 * half * half)
}

/// Truncated-series evaluations of the optics closed forms. These sum the
/// photon-number expansions term by term and serve as an independent route
/// for the closed forms above.
pub mod series {
    use super::*;

    /// `Σ_{n≥2} p_n (1 − tⁿ − (1−t)ⁿ)`.
    pub fn scenario_a(mu: f64, t: f64) -> f64 {
        (2..=SERIES_CUTOFF)
            .map(|n| {
                poisson_pmf_unchecked(mu, n) * (1.0 - t.powi(n as i32) - (1.0 - t).powi(n as i32))
            })
            .sum()
    }

    /// `Σ_{n≥1} p_n (1−t)ⁿ`.
    pub fn scenario_b(mu: f64, t: f64) -> f64 {
        (1..=SERIES_CUTOFF)
            .map(|n| poisson_pmf_unchecked(mu, n) * (1.0 - t).powi(n as i32))
            .sum()
    }

    /// `Σ_{n≥1} p_n tⁿ`.
    pub fn scenario_c(mu: f64, t: f64) -> f64 {
        (1..=SERIES_CUTOFF)
            .map(|n| poisson_pmf_unchecked(mu, n) * t.powi(n as i32))
            .sum()
    }

    /// `Σ_{n≥i} p_n · C(n, i) tⁱ (1−t)^{n−i}`.
    pub fn bob_count_pmf(mu: f64, t: f64, i: u32) -> f64 {
        (i..=SERIES_CUTOFF)
            .map(|n| {
                poisson_pmf_unchecked(mu, n)
                    * binomial_coefficient(n, i)
                    * t.powi(i as i32)
                    * (1.0 - t).powi((n - i) as i32)
            })
            .sum()
    }

    /// `½ e^{−ημ} Σ_{n≥2} (ημ)ⁿ/n! Σ_{i=1}^{n−1} C(n,i) 2^{−n}`.
    pub fn coincidence_prob(eta: f64, mu: f64) -> f64 {
        let x = eta * mu;
        0.5 * (2..=SERIES_CUTOFF)
            .map(|n| {
                let inner: f64 =
                    (1..n).map(|i| binomial_coefficient(n, i)).sum::<f64>() * 0.5f64.powi(n as i32);
                poisson_pmf_unchecked(x, n) * inner
            })
            .sum::<f64>()
    }
}
