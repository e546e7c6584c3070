use std::fmt::Write as _;

use bb84_attacks::info::{crossing_point, threshold, EveCurve};
use bb84_attacks::pulse_attacks::{eta_star, kappa_for_channel};
use bb84_attacks::sim::{check_against_closed_forms, run_sharded, Check};
use bb84_attacks::{AttackStrategy, Rate, SessionConfig, SessionStats, StrategyKind};
use serde::Serialize;
use serde_json::json;

use crate::config::{pick, AttackKind, FileConfig, Format, RuleArg};
use crate::{
    to_json, with_schema, ChannelArgs, CliError, Rendered, SimulateArgs, SweepArgs, EXIT_FAILED,
    EXIT_OK,
};

const DEFAULT_MU: f64 = 1.0;
const DEFAULT_ETA: f64 = 0.9;
const DEFAULT_STEPS: u64 = 100;
const DEFAULT_PULSES: u64 = 1_000_000;
/// σ-distance beyond which `simulate --check` fails.
pub const CHECK_SIGMAS: f64 = 3.0;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn channel(args: &ChannelArgs, file: &FileConfig) -> (f64, f64) {
    (
        pick(args.mu, file.mu, DEFAULT_MU),
        pick(args.eta, file.eta, DEFAULT_ETA),
    )
}

fn check_channel(mu: f64, eta: f64) -> Result<(), CliError> {
    if !(mu > 0.0 && mu <= bb84_attacks::optics::MAX_MEAN_PHOTON_NUMBER) {
        return Err(usage(format!("--mu must be in (0, 20], got {mu}")));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(usage(format!("--eta must be in [0, 1], got {eta}")));
    }
    Ok(())
}

/// Writes a finite float in shortest round-trip form.
fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub strategy: StrategyKind,
    /// Closed-form bound on the tolerable error rate.
    pub max_d_ab: f64,
    /// The same bound found numerically where the information curves cross.
    pub crossing_d_ab: f64,
    pub break_possible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdTable {
    pub mu: f64,
    pub eta: f64,
    pub eta_star: f64,
    /// Calibrated blocking fraction before capping at 1.
    pub kappa: f64,
    pub rows: Vec<ThresholdRow>,
}

pub fn cmd_thresholds(mu: f64, eta: f64) -> Result<ThresholdTable, CliError> {
    check_channel(mu, eta)?;
    let rows = StrategyKind::ALL
        .into_iter()
        .map(|kind| {
            let t = threshold(kind, mu, eta)?;
            Ok(ThresholdRow {
                strategy: kind,
                max_d_ab: t.max_d_ab,
                crossing_d_ab: crossing_point(kind, mu, eta)?.d_ab(),
                break_possible: t.break_possible,
            })
        })
        .collect::<Result<_, bb84_attacks::Error>>()?;
    Ok(ThresholdTable {
        mu,
        eta,
        eta_star: eta_star(mu)?,
        kappa: kappa_for_channel(mu, eta)?.kappa,
        rows,
    })
}

pub fn thresholds(
    args: &ChannelArgs,
    file: &FileConfig,
    format: Format,
) -> Result<Rendered, CliError> {
    let (mu, eta) = channel(args, file);
    let table = cmd_thresholds(mu, eta)?;
    let stdout = match format {
        Format::Json => to_json(&with_schema("thresholds", json!(table))),
        Format::Csv => {
            let mut s =
                String::from("strategy,max_d_ab,crossing_d_ab,break_possible,mu,eta,eta_star\n");
            for r in &table.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    r.strategy,
                    num(r.max_d_ab),
                    num(r.crossing_d_ab),
                    r.break_possible,
                    num(mu),
                    num(eta),
                    num(table.eta_star)
                );
            }
            s
        }
        Format::Text => {
            let mut s = format!(
                "mu = {mu}, eta = {eta}, eta* = {:.6}, kappa = {:.6}\n",
                table.eta_star, table.kappa
            );
            let _ = writeln!(
                s,
                "{:<8} {:>10} {:>10}  break",
                "strategy", "max_d_ab", "crossing"
            );
            for r in &table.rows {
                let _ = writeln!(
                    s,
                    "{:<8} {:>10.6} {:>10.6}  {}",
                    r.strategy.name(),
                    r.max_d_ab,
                    r.crossing_d_ab,
                    if r.break_possible { "yes" } else { "no" }
                );
            }
            s
        }
    };
    Ok(Rendered {
        stdout,
        exit_code: EXIT_OK,
        command: "thresholds",
        parameters: FileConfig {
            mu: Some(mu),
            eta: Some(eta),
            ..FileConfig::default()
        },
        diagnostics: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub d_ab: f64,
    pub i_ab_bits: f64,
    pub i_ae_bits: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub strategy: StrategyKind,
    pub mu: f64,
    pub eta: f64,
    pub max_d_ab: f64,
    pub rows: Vec<SweepRow>,
}

pub fn cmd_sweep(
    strategy: StrategyKind,
    mu: f64,
    eta: f64,
    d_min: f64,
    d_max: Option<f64>,
    steps: u64,
) -> Result<Sweep, CliError> {
    if strategy.uses_pulses() {
        check_channel(mu, eta)?;
    }
    let curve = EveCurve::new(strategy, mu, eta)?;
    let max = curve.max_d_ab();
    let d_max = d_max.unwrap_or(max);
    if steps == 0 {
        return Err(usage("--steps must be at least 1"));
    }
    if !(d_min >= 0.0 && d_min <= d_max) {
        return Err(usage(format!(
            "need 0 <= d-min <= d-max, got {d_min} and {d_max}"
        )));
    }
    if d_max > max * (1.0 + 1e-12) {
        return Err(usage(format!(
            "--d-max {d_max} exceeds the largest error rate {} attainable with {strategy}",
            num(max)
        )));
    }
    let rows = (0..=steps)
        .map(|i| {
            let d = if i == steps {
                d_max
            } else {
                d_min + (d_max - d_min) * i as f64 / steps as f64
            };
            let p = curve.point(d)?;
            Ok(SweepRow {
                d_ab: d,
                i_ab_bits: p.i_ab,
                i_ae_bits: p.i_ae,
                feasible: p.feasible(),
            })
        })
        .collect::<Result<_, bb84_attacks::Error>>()?;
    Ok(Sweep {
        strategy,
        mu,
        eta,
        max_d_ab: max,
        rows,
    })
}

pub fn sweep(args: &SweepArgs, file: &FileConfig, format: Format) -> Result<Rendered, CliError> {
    let strategy = args
        .strategy
        .or(file.strategy)
        .ok_or_else(|| usage("--strategy is required"))?;
    let (mu, eta) = channel(&args.channel, file);
    let d_min = pick(args.d_min, file.d_min, 0.0);
    let d_max = args.d_max.or(file.d_max);
    let steps = pick(args.steps, file.steps, DEFAULT_STEPS);
    let sweep = cmd_sweep(strategy, mu, eta, d_min, d_max, steps)?;
    let stdout = match format {
        Format::Json => to_json(&with_schema("sweep", json!(sweep))),
        Format::Csv => {
            let mut s = String::from("d_ab,i_ab_bits,i_ae_bits,feasible\n");
            for r in &sweep.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    num(r.d_ab),
                    num(r.i_ab_bits),
                    num(r.i_ae_bits),
                    r.feasible
                );
            }
            s
        }
        Format::Text => {
            let mut s = format!("{strategy} (mu = {mu}, eta = {eta})\n");
            let _ = writeln!(
                s,
                "{:>10} {:>10} {:>10}  feasible",
                "d_ab", "I(A;B)", "I(A;E)"
            );
            for r in &sweep.rows {
                let _ = writeln!(
                    s,
                    "{:>10.6} {:>10.6} {:>10.6}  {}",
                    r.d_ab, r.i_ab_bits, r.i_ae_bits, r.feasible
                );
            }
            s
        }
    };
    Ok(Rendered {
        stdout,
        exit_code: EXIT_OK,
        command: "sweep",
        parameters: FileConfig {
            strategy: Some(strategy),
            mu: Some(mu),
            eta: Some(eta),
            d_min: Some(d_min),
            d_max: Some(sweep.rows.last().map_or(d_min, |r| r.d_ab)),
            steps: Some(steps),
            ..FileConfig::default()
        },
        diagnostics: None,
    })
}

/// Fully resolved `simulate` parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulateParams {
    pub session: SessionConfig,
    pub shards: u64,
    pub attack_kind: AttackKind,
    pub rule: RuleArg,
    pub check: bool,
}

impl SimulateParams {
    pub fn resolve(args: &SimulateArgs, file: &FileConfig) -> Result<Self, CliError> {
        let (mu, eta) = channel(&args.channel, file);
        let kind = pick(args.attack, file.attack, AttackKind::None);
        let d = pick(args.d, file.d, 0.0);
        let t = || pick(args.t, file.t, eta);
        let attack = match kind {
            AttackKind::None => None,
            AttackKind::Ir => Some(AttackStrategy::InterceptResend {
                eps: pick(args.eps, file.eps, 1.0),
            }),
            AttackKind::Opt => Some(AttackStrategy::OptimalIncoherent { d }),
            AttackKind::BsIr => Some(AttackStrategy::BsInterceptResend { t: t(), d }),
            AttackKind::BsOpt => Some(AttackStrategy::BsOptimal { t: t(), d }),
            AttackKind::Pns => {
                let kappa = match args.kappa.or(file.kappa) {
                    Some(k) => k,
                    None => kappa_for_channel(mu, eta)?.clamped(),
                };
                Some(AttackStrategy::Pns { kappa, d })
            }
        };
        let rule = pick(args.rule, file.rule, RuleArg::SingleResult);
        let session = SessionConfig {
            mu,
            eta,
            attack,
            n_pulses: pick(args.pulses, file.pulses, DEFAULT_PULSES),
            seed: pick(args.seed, file.seed, 0),
            scenario_a_rule: rule.into(),
        };
        session.validate()?;
        let shards = pick(args.shards, file.shards, 1);
        if shards == 0 {
            return Err(usage("--shards must be at least 1"));
        }
        Ok(SimulateParams {
            session,
            shards,
            attack_kind: kind,
            rule,
            check: args.check || file.check.unwrap_or(false),
        })
    }

    pub fn as_file_config(&self) -> FileConfig {
        let s = &self.session;
        let mut f = FileConfig {
            mu: Some(s.mu),
            eta: Some(s.eta),
            pulses: Some(s.n_pulses),
            seed: Some(s.seed),
            shards: Some(self.shards),
            attack: Some(self.attack_kind),
            rule: Some(self.rule),
            check: Some(self.check),
            ..FileConfig::default()
        };
        match s.attack {
            None => {}
            Some(AttackStrategy::InterceptResend { eps }) => f.eps = Some(eps),
            Some(AttackStrategy::OptimalIncoherent { d }) => f.d = Some(d),
            Some(
                AttackStrategy::BsInterceptResend { t, d } | AttackStrategy::BsOptimal { t, d },
            ) => {
                f.t = Some(t);
                f.d = Some(d);
            }
            Some(AttackStrategy::Pns { kappa, d }) => {
                f.kappa = Some(kappa);
                f.d = Some(d);
            }
        }
        f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateReport {
    pub stats: SessionStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<Check>>,
}

impl SimulateReport {
    pub fn check_passed(&self) -> bool {
        self.checks
            .as_ref()
            .is_none_or(|c| c.iter().all(|c| c.sigma_distance <= CHECK_SIGMAS))
    }
}

pub fn cmd_simulate(params: &SimulateParams) -> Result<SimulateReport, CliError> {
    let stats = run_sharded(&params.session, params.shards)?;
    let checks = if params.check {
        Some(check_against_closed_forms(&params.session, &stats)?)
    } else {
        None
    };
    Ok(SimulateReport { stats, checks })
}

fn rate_line(s: &mut String, name: &str, r: &Rate) {
    let _ = writeln!(
        s,
        "{name:<17} {:.6} ± {:.6}  ({}/{})",
        r.value, r.stderr, r.successes, r.trials
    );
}

pub fn simulate(
    args: &SimulateArgs,
    file: &FileConfig,
    format: Format,
) -> Result<Rendered, CliError> {
    let params = SimulateParams::resolve(args, file)?;
    let report = cmd_simulate(&params)?;
    let passed = report.check_passed();
    let parameters = params.as_file_config();
    let stats = &report.stats;
    let rates = [
        ("qber", &stats.qber),
        ("eve_accuracy", &stats.eve_accuracy),
        ("nonempty_rate", &stats.nonempty_rate),
        ("coincidence_rate", &stats.coincidence_rate),
    ];
    let stdout = match format {
        Format::Json => {
            let mut body = json!({ "parameters": parameters, "stats": stats });
            if let Some(checks) = &report.checks {
                body["checks"] = json!(checks);
                body["check_passed"] = json!(passed);
            }
            to_json(&with_schema("simulate", body))
        }
        Format::Csv => {
            let mut s =
                String::from("quantity,value,stderr,successes,trials,expected,sigma_distance\n");
            for (name, r) in rates {
                let check = report
                    .checks
                    .as_ref()
                    .and_then(|cs| cs.iter().find(|c| c.quantity == name));
                let (expected, sigma) = check.map_or((String::new(), String::new()), |c| {
                    (num(c.expected), num(c.sigma_distance))
                });
                let _ = writeln!(
                    s,
                    "{name},{},{},{},{},{expected},{sigma}",
                    num(r.value),
                    num(r.stderr),
                    r.successes,
                    r.trials
                );
            }
            s
        }
        Format::Text => {
            let mut s = format!(
                "pulses {}, sifted {}, double clicks in sifted basis {}\n",
                stats.n_pulses, stats.sifted_count, stats.sifted_double_clicks
            );
            for (name, r) in rates {
                rate_line(&mut s, name, r);
            }
            if let Some(sc) = &stats.scenario_counts {
                let _ = writeln!(s, "scenarios A {} B {} C {} D {}", sc.a, sc.b, sc.c, sc.d);
            }
            if let Some(checks) = &report.checks {
                let _ = writeln!(
                    s,
                    "{:<17} {:>10} {:>10} {:>8}",
                    "check", "observed", "expected", "sigma"
                );
                for c in checks {
                    let _ = writeln!(
                        s,
                        "{:<17} {:>10.6} {:>10.6} {:>8.3}",
                        c.quantity, c.observed, c.expected, c.sigma_distance
                    );
                }
                let _ = writeln!(s, "{}", if passed { "PASS" } else { "FAIL" });
            }
            s
        }
    };
    let diagnostics = (!passed).then(|| {
        let worst = report
            .checks
            .iter()
            .flatten()
            .max_by(|a, b| a.sigma_distance.total_cmp(&b.sigma_distance))
            .expect("a failed check exists");
        format!(
            "check failed: {} is {:.3} sigma from {}",
            worst.quantity, worst.sigma_distance, worst.expected
        )
    });
    Ok(Rendered {
        stdout,
        exit_code: if passed { EXIT_OK } else { EXIT_FAILED },
        command: "simulate",
        parameters,
        diagnostics,
    })
}
