//! Binomial rate estimates and a Poisson goodness-of-fit test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// An empirical proportion `successes / trials` with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub value: f64,
    pub stderr: f64,
    pub successes: u64,
    pub trials: u64,
}

impl Rate {
    pub fn from_counts(successes: u64, trials: u64) -> Rate {
        if trials == 0 {
            return Rate {
                value: 0.0,
                stderr: 0.0,
                successes,
                trials,
            };
        }
        let p = successes as f64 / trials as f64;
        Rate {
            value: p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
            successes,
            trials,
        }
    }

    /// A fixed value with no sampling error.
    pub fn exact(value: f64) -> Rate {
        Rate {
            value,
            stderr: 0.0,
            successes: 0,
            trials: 0,
        }
    }

    /// Binomial σ evaluated at the expected proportion rather than the
    /// observed one, so a degenerate sample (all 0 or all 1) is still tested.
    pub fn sigma_at(&self, expected: f64) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        (expected * (1.0 - expected) / self.trials as f64).sqrt()
    }

    /// Distance from `expected` in units of [`Rate::sigma_at`]. Returns 0 when
    /// both σ and the difference vanish and infinity when only σ does.
    pub fn sigma_distance(&self, expected: f64) -> f64 {
        let diff = (self.value - expected).abs();
        let sigma = self.sigma_at(expected);
        if sigma > 0.0 {
            diff / sigma
        } else if diff <= 1e-15 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Result of a Pearson chi-square goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of `observed[i]` counts against probabilities
/// `expected_pmf(i)`. Bins are merged from the upper tail until every bin
/// expects at least 5 events; the last bin absorbs all remaining mass.
pub fn chi_square_test(
    observed: &[u64],
    expected_pmf: impl Fn(usize) -> f64,
) -> Result<ChiSquareResult> {
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::Config(
            "chi-square test on an empty histogram".into(),
        ));
    }
    let n = total as f64;

    // Head bins while expectation >= 5, tail bin collects the rest.
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut cumulative = 0.0;
    let mut i = 0;
    loop {
        let e = expected_pmf(i) * n;
        if e < 5.0 || n - (cumulative + e) < 5.0 {
            break;
        }
        let o = observed.get(i).copied().unwrap_or(0) as f64;
        bins.push((o, e));
        cumulative += e;
        i += 1;
    }
    let tail_obs: u64 = observed.iter().skip(i).sum();
    bins.push((tail_obs as f64, (n - cumulative).max(0.0)));

    if bins.len() < 2 {
        return Err(Error::Config(
            "chi-square test needs at least two bins".into(),
        ));
    }
    let statistic: f64 = bins
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = bins.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Config(e.to_string()))?;
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: dist.sf(statistic),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_from_counts() {
        let r = Rate::from_counts(25, 100);
        assert_eq!(r.value, 0.25);
        assert!((r.stderr - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
        assert_eq!(Rate::from_counts(0, 0).value, 0.0);
    }

    #[test]
    fn sigma_distance_degenerate() {
        let r = Rate::from_counts(0, 1000);
        assert_eq!(r.sigma_distance(0.0), 0.0);
        assert!(r.sigma_distance(0.5) > 30.0);
    }

    #[test]
    fn chi_square_perfect_fit_has_p_one() {
        let pmf = [0.5, 0.3, 0.2];
        let observed = [500u64, 300, 200];
        let r = chi_square_test(&observed, |i| pmf.get(i).copied().unwrap_or(0.0)).unwrap();
        assert!(r.statistic.abs() < 1e-12);
        assert!(r.p_value > 0.999);
    }

    #[test]
    fn chi_square_detects_mismatch() {
        let pmf = [0.5, 0.5];
        let observed = [700u64, 300];
        let r = chi_square_test(&observed, |i| pmf.get(i).copied().unwrap_or(0.0)).unwrap();
        assert!(r.p_value < 1e-10);
    }
}
