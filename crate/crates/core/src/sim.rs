//! Photon-level Monte Carlo of complete BB84 sessions.
//!
//! Per pulse: Alice draws a uniform bit and basis and a Poisson photon
//! number; the configured attack transforms the pulse into the photons that
//! continue to Bob plus Eve's record; the lossy line (unless Eve replaced
//! it) drops each photon independently with probability `1 − η`; Bob picks a
//! uniform basis and every photon lands on one of his two threshold
//! detectors by the Born rule. Pulses where Bob's basis matches Alice's and
//! at least one detector fired form the sifted key.
//!
//! # Random streams
//!
//! Shard `i` of a run with seed `s` draws from `ChaCha8Rng::seed_from_u64(s)`
//! with `set_stream(i)`. Pulses are split so that shard `i` simulates
//! `n / k` pulses plus one if `i < n % k`. Merged counts are integer sums,
//! so a run is bit-identical for fixed `(seed, n_shards)` regardless of how
//! shards are scheduled.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::optics::{
    binomial_split, check_mu, coincidence_prob, poisson_pmf, sample_photon_number,
};
use crate::pulse_attacks::{pns_coincidence_prob, AttackPrediction, AttackStrategy};
use crate::single_photon::{helstrom, ProbeModel};
use crate::states::{encode, sample_outcome, Basis, Bb84Signal, Bit, BreidbartBasis, StateVec2};
use crate::stats::Rate;

/// How Eve turns measurements of several photons into one bit guess.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioARule {
    /// Only one photon is measured, as if Eve always obtained a single
    /// result. Matches the closed forms.
    #[default]
    SingleResult,
    /// Every photon is measured in the Breidbart basis and Eve takes the
    /// majority outcome, ties broken by a fair coin.
    Majority,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub mu: f64,
    pub eta: f64,
    pub attack: Option<AttackStrategy>,
    pub n_pulses: u64,
    pub seed: u64,
    #[serde(default)]
    pub scenario_a_rule: ScenarioARule,
}

impl SessionConfig {
    pub fn new(
        mu: f64,
        eta: f64,
        attack: Option<AttackStrategy>,
        n_pulses: u64,
        seed: u64,
    ) -> Self {
        SessionConfig {
            mu,
            eta,
            attack,
            n_pulses,
            seed,
            scenario_a_rule: ScenarioARule::SingleResult,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_mu(self.mu)?;
        check_probability("eta", self.eta)?;
        if self.n_pulses == 0 {
            return Err(Error::Config("n_pulses must be at least 1".into()));
        }
        if let Some(attack) = &self.attack {
            attack.validate()?;
        }
        Ok(())
    }
}

/// Splitter routing outcome of one pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Photons on both sides of the splitter.
    A,
    /// Every photon reflected to Eve.
    B,
    /// Every photon transmitted to Bob.
    C,
    /// Vacuum.
    D,
}

impl Scenario {
    fn classify(to_bob: u32, to_eve: u32) -> Scenario {
        match (to_bob, to_eve) {
            (0, 0) => Scenario::D,
            (0, _) => Scenario::B,
            (_, 0) => Scenario::C,
            _ => Scenario::A,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// What Eve holds about a pulse once the basis is public.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EveRecord {
    /// No eavesdropper on the line.
    Absent,
    /// Eve has nothing on this pulse and guesses with a fair coin.
    NoInfo,
    Guess(Bit),
}

/// Photons that continue towards Bob. All share one polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BobPulse {
    pub photons: u32,
    pub state: StateVec2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseOutcome {
    pub bob: BobPulse,
    pub eve: EveRecord,
    pub scenario: Option<Scenario>,
}

/// Precomputed per-session attack constants.
#[derive(Debug, Clone, Copy)]
struct AttackKernel {
    attack: AttackStrategy,
    rule: ScenarioARule,
    breidbart: BreidbartBasis,
    /// Breidbart outcome-0 probability for each of the four signals, indexed
    /// by `basis * 2 + bit`.
    breidbart_p0: [f64; 4],
    /// Eve's Helstrom success probability after the optimal probe.
    probe_success: f64,
}

fn signal_index(signal: &Bb84Signal) -> usize {
    let basis = match signal.basis {
        Basis::Rectilinear => 0,
        Basis::Diagonal => 1,
    };
    basis * 2 + signal.bit.index()
}

impl AttackKernel {
    fn new(attack: AttackStrategy, rule: ScenarioARule) -> Result<Self> {
        let breidbart = BreidbartBasis::optimal();
        let mut breidbart_p0 = [0.0; 4];
        for basis in [Basis::Rectilinear, Basis::Diagonal] {
            for bit in [Bit::Zero, Bit::One] {
                let s = encode(bit, basis);
                let a = s.state.dot(&breidbart.ket0);
                breidbart_p0[signal_index(&s)] = a * a;
            }
        }
        let d = match attack {
            AttackStrategy::OptimalIncoherent { d }
            | AttackStrategy::BsOptimal { d, .. }
            | AttackStrategy::Pns { d, .. } => d,
            _ => 0.0,
        };
        let model = ProbeModel::from_disturbance(d)?;
        Ok(AttackKernel {
            attack,
            rule,
            breidbart,
            breidbart_p0,
            probe_success: helstrom(model.overlap_ratio())?,
        })
    }

    /// Eve measures `photons` (>= 1) copies of the signal in the Breidbart basis.
    fn breidbart_guess<R: Rng + ?Sized>(
        &self,
        signal: &Bb84Signal,
        photons: u32,
        rng: &mut R,
    ) -> Bit {
        let p0 = self.breidbart_p0[signal_index(signal)];
        match self.rule {
            ScenarioARule::SingleResult => Bit::from_index(sample_outcome(p0, rng)),
            ScenarioARule::Majority => {
                let zeros = (0..photons)
                    .filter(|_| sample_outcome(p0, rng) == 0)
                    .count() as u32;
                let ones = photons - zeros;
                if zeros > ones {
                    Bit::Zero
                } else if ones > zeros {
                    Bit::One
                } else {
                    Bit::from(rng.random::<bool>())
                }
            }
        }
    }

    /// Measure-and-resend: Eve forwards a single photon in the Breidbart ket
    /// matching her result.
    fn intercept<R: Rng + ?Sized>(
        &self,
        signal: &Bb84Signal,
        photons: u32,
        rng: &mut R,
    ) -> (BobPulse, EveRecord) {
        let guess = self.breidbart_guess(signal, photons, rng);
        (
            BobPulse {
                photons: 1,
                state: self.breidbart.ket(guess),
            },
            EveRecord::Guess(guess),
        )
    }

    /// Optimal incoherent probe at the outcome level: Bob's photons flip to
    /// the orthogonal state with probability `d`; Eve names the bit with the
    /// Helstrom probability of her branch.
    fn probe<R: Rng + ?Sized>(
        &self,
        signal: &Bb84Signal,
        photons: u32,
        d: f64,
        rng: &mut R,
    ) -> (BobPulse, EveRecord) {
        let flipped = sample_outcome(d, rng) == 0;
        let bob_bit = if flipped {
            signal.bit.flip()
        } else {
            signal.bit
        };
        let eve_right = sample_outcome(self.probe_success, rng) == 0;
        let guess = if eve_right {
            signal.bit
        } else {
            signal.bit.flip()
        };
        (
            BobPulse {
                photons,
                state: signal.basis.state_for(bob_bit),
            },
            EveRecord::Guess(guess),
        )
    }

    fn transform<R: Rng + ?Sized>(&self, signal: &Bb84Signal, n: u32, rng: &mut R) -> PulseOutcome {
        let untouched = |photons| BobPulse {
            photons,
            state: signal.state,
        };
        let nothing = PulseOutcome {
            bob: untouched(0),
            eve: EveRecord::NoInfo,
            scenario: None,
        };
        match self.attack {
            AttackStrategy::InterceptResend { eps } => {
                if n == 0 {
                    return nothing;
                }
                let (bob, eve) = if sample_outcome(eps, rng) == 0 {
                    self.intercept(signal, n, rng)
                } else {
                    (untouched(n), EveRecord::NoInfo)
                };
                PulseOutcome {
                    bob,
                    eve,
                    scenario: None,
                }
            }
            AttackStrategy::OptimalIncoherent { d } => {
                if n == 0 {
                    return nothing;
                }
                let (bob, eve) = self.probe(signal, n, d, rng);
                PulseOutcome {
                    bob,
                    eve,
                    scenario: None,
                }
            }
            AttackStrategy::BsInterceptResend { t, d } => {
                let (to_bob, to_eve) = binomial_split(n, t, rng);
                let scenario = Scenario::classify(to_bob, to_eve);
                let (bob, eve) = match scenario {
                    Scenario::A => (
                        untouched(to_bob),
                        EveRecord::Guess(self.breidbart_guess(signal, to_eve, rng)),
                    ),
                    Scenario::C if sample_outcome(4.0 * d, rng) == 0 => {
                        self.intercept(signal, to_bob, rng)
                    }
                    _ => (untouched(to_bob), EveRecord::NoInfo),
                };
                PulseOutcome {
                    bob,
                    eve,
                    scenario: Some(scenario),
                }
            }
            AttackStrategy::BsOptimal { t, d } => {
                let (to_bob, to_eve) = binomial_split(n, t, rng);
                let scenario = Scenario::classify(to_bob, to_eve);
                let (bob, eve) = match scenario {
                    // Eve holds an undisturbed copy and reads it in the announced basis.
                    Scenario::A => (untouched(to_bob), EveRecord::Guess(signal.bit)),
                    Scenario::C => self.probe(signal, to_bob, d, rng),
                    _ => (untouched(to_bob), EveRecord::NoInfo),
                };
                PulseOutcome {
                    bob,
                    eve,
                    scenario: Some(scenario),
                }
            }
            AttackStrategy::Pns { kappa, d } => match n {
                0 => nothing,
                1 => {
                    if sample_outcome(kappa, rng) == 0 {
                        PulseOutcome {
                            bob: untouched(0),
                            eve: EveRecord::NoInfo,
                            scenario: None,
                        }
                    } else {
                        let (bob, eve) = self.probe(signal, 1, d, rng);
                        PulseOutcome {
                            bob,
                            eve,
                            scenario: None,
                        }
                    }
                }
                _ => PulseOutcome {
                    bob: untouched(n - 1),
                    eve: EveRecord::Guess(signal.bit),
                    scenario: None,
                },
            },
        }
    }
}

/// Raw integer tallies of a (partial) session. Merging is associative.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCounts {
    pub pulses: u64,
    /// Pulses delivering at least one photon to Bob.
    pub nonempty: u64,
    pub sifted: u64,
    pub errors: u64,
    pub eve_correct: u64,
    /// Pulses where both of Bob's detectors fired.
    pub coincidences: u64,
    /// Double clicks in the sifted basis; all photons share one polarization
    /// so this must stay zero.
    pub sifted_double_clicks: u64,
    /// Scenario A, B, C, D tallies for splitter attacks.
    pub scenarios: Option<[u64; 4]>,
    /// `bob_photons[k]` = pulses that delivered exactly `k` photons to Bob.
    pub bob_photons: Vec<u64>,
}

impl SessionCounts {
    pub fn merge(&mut self, other: &SessionCounts) {
        self.pulses += other.pulses;
        self.nonempty += other.nonempty;
        self.sifted += other.sifted;
        self.errors += other.errors;
        self.eve_correct += other.eve_correct;
        self.coincidences += other.coincidences;
        self.sifted_double_clicks += other.sifted_double_clicks;
        self.scenarios = match (self.scenarios, other.scenarios) {
            (Some(a), Some(b)) => Some([a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]),
            (a, b) => a.or(b),
        };
        if self.bob_photons.len() < other.bob_photons.len() {
            self.bob_photons.resize(other.bob_photons.len(), 0);
        }
        for (mine, theirs) in self.bob_photons.iter_mut().zip(&other.bob_photons) {
            *mine += theirs;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioCounts {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    pub n_pulses: u64,
    pub sifted_count: u64,
    pub qber: Rate,
    /// Fraction of sifted bits Eve names correctly; 0.5 with no eavesdropper.
    pub eve_accuracy: Rate,
    pub nonempty_rate: Rate,
    pub coincidence_rate: Rate,
    pub sifted_double_clicks: u64,
    pub scenario_counts: Option<ScenarioCounts>,
    pub bob_photon_histogram: Vec<u64>,
}

impl SessionStats {
    pub fn from_counts(counts: &SessionCounts, eve_present: bool) -> SessionStats {
        SessionStats {
            n_pulses: counts.pulses,
            sifted_count: counts.sifted,
            qber: Rate::from_counts(counts.errors, counts.sifted),
            eve_accuracy: if eve_present {
                Rate::from_counts(counts.eve_correct, counts.sifted)
            } else {
                Rate::exact(0.5)
            },
            nonempty_rate: Rate::from_counts(counts.nonempty, counts.pulses),
            coincidence_rate: Rate::from_counts(counts.coincidences, counts.pulses),
            sifted_double_clicks: counts.sifted_double_clicks,
            scenario_counts: counts.scenarios.map(|s| ScenarioCounts {
                a: s[0],
                b: s[1],
                c: s[2],
                d: s[3],
            }),
            bob_photon_histogram: counts.bob_photons.clone(),
        }
    }
}

fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

fn simulate_pulses(
    config: &SessionConfig,
    kernel: Option<&AttackKernel>,
    n_pulses: u64,
    rng: &mut ChaCha8Rng,
) -> SessionCounts {
    let mut c = SessionCounts {
        scenarios: kernel.filter(|k| k.attack.uses_splitter()).map(|_| [0; 4]),
        ..SessionCounts::default()
    };
    let line_replaced = kernel.is_some_and(|k| k.attack.replaces_line());

    for _ in 0..n_pulses {
        let signal = encode(
            Bit::from(rng.random::<bool>()),
            Basis::from(rng.random::<bool>()),
        );
        let n = sample_photon_number(config.mu, rng);

        let outcome = match kernel {
            Some(k) => k.transform(&signal, n, rng),
            None => PulseOutcome {
                bob: BobPulse {
                    photons: n,
                    state: signal.state,
                },
                eve: EveRecord::Absent,
                scenario: None,
            },
        };
        if let (Some(tally), Some(s)) = (c.scenarios.as_mut(), outcome.scenario) {
            tally[s.index()] += 1;
        }

        let mut bob = outcome.bob;
        if !line_replaced {
            bob.photons = binomial_split(bob.photons, config.eta, rng).0;
        }

        let bob_basis = Basis::from(rng.random::<bool>());
        let (zero_state, _) = bob_basis.states();
        let amp = bob.state.dot(&zero_state);
        let p0 = amp * amp;
        let mut clicks = [0u32; 2];
        for _ in 0..bob.photons {
            clicks[sample_outcome(p0, rng)] += 1;
        }

        let k = bob.photons as usize;
        if c.bob_photons.len() <= k {
            c.bob_photons.resize(k + 1, 0);
        }
        c.bob_photons[k] += 1;
        c.pulses += 1;
        if bob.photons == 0 {
            continue;
        }
        c.nonempty += 1;
        let double = clicks[0] > 0 && clicks[1] > 0;
        c.coincidences += u64::from(double);

        if bob_basis != signal.basis {
            continue;
        }
        c.sifted += 1;
        let bob_bit = if double {
            c.sifted_double_clicks += 1;
            Bit::from(rng.random::<bool>())
        } else if clicks[0] > 0 {
            Bit::Zero
        } else {
            Bit::One
        };
        c.errors += u64::from(bob_bit != signal.bit);
        let eve_right = match outcome.eve {
            EveRecord::Absent => false,
            EveRecord::NoInfo => rng.random::<bool>(),
            EveRecord::Guess(g) => g == signal.bit,
        };
        c.eve_correct += u64::from(eve_right);
    }
    c
}

/// Runs one shard of a session and returns its raw counts.
pub fn run_shard_counts(
    config: &SessionConfig,
    shard: u64,
    n_shards: u64,
) -> Result<SessionCounts> {
    config.validate()?;
    if n_shards == 0 || shard >= n_shards {
        return Err(Error::Config(format!(
            "shard {shard} out of range for {n_shards} shards"
        )));
    }
    let kernel = config
        .attack
        .map(|a| AttackKernel::new(a, config.scenario_a_rule))
        .transpose()?;
    let base = config.n_pulses / n_shards;
    let extra = u64::from(shard < config.n_pulses % n_shards);
    let mut rng = shard_rng(config.seed, shard);
    Ok(simulate_pulses(
        config,
        kernel.as_ref(),
        base + extra,
        &mut rng,
    ))
}

/// Runs a whole session on a single random stream.
pub fn run_session(config: &SessionConfig) -> Result<SessionStats> {
    run_sharded(config, 1)
}

/// Runs a session split over `n_shards` independent streams in parallel.
pub fn run_sharded(config: &SessionConfig, n_shards: u64) -> Result<SessionStats> {
    if n_shards == 0 {
        return Err(Error::Config("n_shards must be at least 1".into()));
    }
    config.validate()?;
    let parts: Vec<SessionCounts> = (0..n_shards)
        .into_par_iter()
        .map(|i| run_shard_counts(config, i, n_shards))
        .collect::<Result<_>>()?;
    let mut total = SessionCounts::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(SessionStats::from_counts(&total, config.attack.is_some()))
}

/// Closed-form expectations for the statistics of a session, where known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Expectations {
    pub qber: f64,
    pub eve_accuracy: Option<f64>,
    pub nonempty_rate: f64,
    pub coincidence_rate: Option<f64>,
}

pub fn expectations(config: &SessionConfig) -> Result<Expectations> {
    config.validate()?;
    let (mu, eta) = (config.mu, config.eta);
    let lossy_nonempty = -(-eta * mu).exp_m1();
    let prediction = match &config.attack {
        Some(a) => Some(a.predict(mu)?),
        None => None,
    };
    let exact_rule = config.scenario_a_rule == ScenarioARule::SingleResult;
    let (nonempty, coincidence) = match config.attack {
        None | Some(AttackStrategy::OptimalIncoherent { .. }) => {
            (lossy_nonempty, Some(coincidence_prob(eta, mu)?))
        }
        Some(AttackStrategy::InterceptResend { eps }) => {
            let any = -(-mu).exp_m1();
            (eps * any * eta + (1.0 - eps) * lossy_nonempty, None)
        }
        Some(AttackStrategy::BsOptimal { t, .. }) => {
            (-(-t * mu).exp_m1(), Some(coincidence_prob(t, mu)?))
        }
        Some(AttackStrategy::BsInterceptResend { t, d }) => (
            -(-t * mu).exp_m1(),
            if d == 0.0 {
                Some(coincidence_prob(t, mu)?)
            } else {
                None
            },
        ),
        Some(AttackStrategy::Pns { kappa, .. }) => {
            let p0 = poisson_pmf(mu, 0)?;
            let p1 = poisson_pmf(mu, 1)?;
            (1.0 - p0 - kappa * p1, Some(pns_coincidence_prob(mu)?))
        }
    };
    let uses_rule = matches!(
        config.attack,
        Some(AttackStrategy::BsInterceptResend { .. } | AttackStrategy::InterceptResend { .. })
    );
    Ok(Expectations {
        qber: prediction.map_or(0.0, |p: AttackPrediction| p.d_ab),
        eve_accuracy: prediction
            .filter(|_| exact_rule || !uses_rule)
            .map(|p| p.guess_prob),
        nonempty_rate: nonempty,
        coincidence_rate: coincidence,
    })
}

/// One observed-vs-predicted comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub quantity: &'static str,
    pub observed: f64,
    pub expected: f64,
    pub sigma_distance: f64,
}

/// Compares a session's statistics with its closed-form expectations.
pub fn check_against_closed_forms(
    config: &SessionConfig,
    stats: &SessionStats,
) -> Result<Vec<Check>> {
    let e = expectations(config)?;
    let mut out = Vec::new();
    let mut push = |quantity, rate: &Rate, expected: f64| {
        out.push(Check {
            quantity,
            observed: rate.value,
            expected,
            sigma_distance: rate.sigma_distance(expected),
        })
    };
    push("qber", &stats.qber, e.qber);
    if let (Some(exp), true) = (e.eve_accuracy, config.attack.is_some()) {
        push("eve_accuracy", &stats.eve_accuracy, exp);
    }
    push("nonempty_rate", &stats.nonempty_rate, e.nonempty_rate);
    if let Some(exp) = e.coincidence_rate {
        push("coincidence_rate", &stats.coincidence_rate, exp);
    }
    Ok(out)
}
