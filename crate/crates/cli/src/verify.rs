//! Deterministic self-checks: probe construction, optics closed forms
//! against their photon-number series, and the pulse-attack identities.

use std::fmt::Write as _;

use bb84_attacks::optics::{
    self, bob_count_pmf_after_splitter, coincidence_prob, poisson_pmf, scenario_probs, series,
};
use bb84_attacks::pulse_attacks::{
    bs_ir_guess_assembled, bs_ir_predict, bs_opt_guess_assembled, bs_opt_predict,
    pns_guess_assembled, pns_predict,
};
use bb84_attacks::single_photon::{opt_guess_prob, opt_guess_prob_assembled, verify_unitarity};
use bb84_attacks::{ProbeModel, IDENTITY_TOL};
use serde::Serialize;
use serde_json::json;

use crate::config::{FileConfig, Format};
use crate::{to_json, with_schema, Rendered, EXIT_FAILED, EXIT_OK};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn worst(&self) -> Option<&CheckResult> {
        self.checks.iter().max_by(|a, b| {
            (a.max_deviation / a.tolerance).total_cmp(&(b.max_deviation / b.tolerance))
        })
    }
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    cases: usize,
    max: f64,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Tally {
            name,
            tolerance,
            cases: 0,
            max: 0.0,
        }
    }

    /// Records one deviation; a failed evaluation counts as infinite.
    fn add(&mut self, deviation: Result<f64, bb84_attacks::Error>) {
        self.cases += 1;
        let d = deviation.unwrap_or(f64::INFINITY);
        self.max = if d.is_nan() {
            f64::INFINITY
        } else {
            self.max.max(d)
        };
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name,
            cases: self.cases,
            max_deviation: self.max,
            tolerance: self.tolerance,
            passed: self.max < self.tolerance,
        }
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> + Clone {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

pub fn cmd_verify() -> VerifyReport {
    let mut gram = Tally::new("probe-inner-products", IDENTITY_TOL);
    let mut symmetry = Tally::new("hadamard-symmetry", IDENTITY_TOL);
    let mut linearity = Tally::new("probe-linearity", IDENTITY_TOL);
    let mut constraints = Tally::new("probe-constraints", IDENTITY_TOL);
    let mut assembly = Tally::new("opt-guess-assembly", IDENTITY_TOL);
    for d in grid(0.0, 0.5, 501) {
        let model = ProbeModel::from_disturbance(d);
        let report = model
            .as_ref()
            .map_err(Clone::clone)
            .and_then(verify_unitarity);
        gram.add(
            report
                .as_ref()
                .map(|r| r.gram_deviation)
                .map_err(Clone::clone),
        );
        symmetry.add(
            report
                .as_ref()
                .map(|r| r.symmetry_deviation)
                .map_err(Clone::clone),
        );
        linearity.add(report.map(|r| r.linearity_deviation));
        constraints.add(
            model
                .as_ref()
                .map(|m| m.constraint_residual())
                .map_err(Clone::clone),
        );
        assembly.add(
            model.and_then(|m| Ok((opt_guess_prob(d)? - opt_guess_prob_assembled(&m)?).abs())),
        );
    }

    let mut partition = Tally::new("scenario-partition", IDENTITY_TOL);
    let mut scenario_series = Tally::new("scenario-series", IDENTITY_TOL);
    let mut bob_series = Tally::new("splitter-count-series", IDENTITY_TOL);
    let mut coincidence_series = Tally::new("coincidence-series", IDENTITY_TOL);
    for mu in grid(0.0, optics::MAX_MEAN_PHOTON_NUMBER, 50) {
        for t in grid(0.0, 1.0, 50) {
            partition.add(scenario_probs(mu, t).map(|p| (p.sum() - 1.0).abs()));
        }
    }
    // The truncated series are exact to 1e-12 only while the Poisson tail
    // beyond the cutoff is negligible.
    for mu in grid(0.0, 10.0, 41) {
        for t in grid(0.0, 1.0, 21) {
            scenario_series.add(scenario_probs(mu, t).map(|p| {
                (p.p_a - series::scenario_a(mu, t))
                    .abs()
                    .max((p.p_b - series::scenario_b(mu, t)).abs())
                    .max((p.p_c - series::scenario_c(mu, t)).abs())
            }));
            bob_series.add((0..30).try_fold(0.0f64, |acc, i| {
                Ok(acc.max(
                    (bob_count_pmf_after_splitter(mu, t, i)? - series::bob_count_pmf(mu, t, i))
                        .abs(),
                ))
            }));
            coincidence_series
                .add(coincidence_prob(t, mu).map(|c| (c - series::coincidence_prob(t, mu)).abs()));
        }
    }

    let mut normalization = Tally::new("poisson-normalization", IDENTITY_TOL);
    for mu in grid(0.0, optics::MAX_MEAN_PHOTON_NUMBER, 41) {
        normalization.add(
            (0..=200)
                .try_fold(0.0, |acc, n| Ok(acc + poisson_pmf(mu, n)?))
                .map(|s: f64| (s - 1.0).abs()),
        );
    }

    let mut hybrids = Tally::new("pulse-attack-identities", IDENTITY_TOL);
    for mu in grid(0.05, 5.0, 12) {
        for t in grid(0.05, 1.0, 12) {
            for i in 0..12 {
                let frac = i as f64 / 11.0;
                hybrids.add((|| {
                    let d_ir = 0.25 * frac;
                    let d_opt = 0.5 * frac;
                    let a = (bs_ir_predict(mu, t, d_ir)?.guess_prob
                        - bs_ir_guess_assembled(mu, t, d_ir)?)
                    .abs();
                    let b = (bs_opt_predict(mu, t, d_opt)?.guess_prob
                        - bs_opt_guess_assembled(mu, t, d_opt)?)
                    .abs();
                    let c = (pns_predict(mu, t, d_opt)?.guess_prob
                        - pns_guess_assembled(mu, t, d_opt)?)
                    .abs();
                    Ok(a.max(b).max(c))
                })());
            }
        }
    }

    let checks: Vec<CheckResult> = [
        gram,
        symmetry,
        linearity,
        constraints,
        assembly,
        partition,
        scenario_series,
        bob_series,
        coincidence_series,
        normalization,
        hybrids,
    ]
    .into_iter()
    .map(Tally::finish)
    .collect();
    VerifyReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

pub fn verify(format: Format) -> Rendered {
    let report = cmd_verify();
    let stdout = match format {
        Format::Json => to_json(&with_schema("verify", json!(report))),
        Format::Csv => {
            let mut s = String::from("check,cases,max_deviation,tolerance,passed\n");
            for c in &report.checks {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    c.name, c.cases, c.max_deviation, c.tolerance, c.passed
                );
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            for c in &report.checks {
                let _ = writeln!(
                    s,
                    "[{}] {:<24} max deviation {:.3e} over {} cases (tol {:.0e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.max_deviation,
                    c.cases,
                    c.tolerance
                );
            }
            let _ = writeln!(s, "{}", if report.passed { "PASS" } else { "FAIL" });
            s
        }
    };
    let diagnostics = (!report.passed).then(|| {
        let w = report.worst().expect("checks are not empty");
        format!(
            "verification failed: {} deviates by {:e} (tolerance {:e})",
            w.name, w.max_deviation, w.tolerance
        )
    });
    Rendered {
        stdout,
        exit_code: if report.passed { EXIT_OK } else { EXIT_FAILED },
        command: "verify",
        parameters: FileConfig::default(),
        diagnostics,
    }
}
