//! Eavesdropping calculus for BB84 run over attenuated laser pulses and
//! lossy channels.
//!
//! The crate has two halves that are meant to be checked against each other:
//!
//! * closed-form evaluators for intercept-resend in the Breidbart basis, the
//!   symmetric optimal incoherent probe attack, the two beam-splitter hybrids
//!   and photon-number splitting, together with the mutual-information
//!   thresholds for one-way privacy amplification;
//! * a photon-level Monte Carlo of whole sessions ([`sim`]) whose statistics
//!   must agree with those closed forms.
//!
//! Everything is real-amplitude: the four BB84 polarizations and every probe
//! overlap used by the attacks are real numbers.

pub mod error;
pub mod info;
pub mod optics;
pub mod pulse_attacks;
pub mod sim;
pub mod single_photon;
pub mod states;
pub mod stats;

pub use error::{Error, Result};
pub use info::{EveCurve, InfoCurvePoint, LogUnit, StrategyKind, Threshold};
pub use optics::{OpticalConfig, ScenarioProbs};
pub use pulse_attacks::{AttackPrediction, AttackStrategy, KappaCalibration};
pub use sim::{ScenarioARule, SessionConfig, SessionCounts, SessionStats};
pub use single_photon::{ProbeModel, ProbeVectors, UnitarityReport};
pub use states::{Basis, Bb84Signal, Bit, BreidbartBasis, StateVec2};
pub use stats::Rate;

/// Tolerance used for every exact algebraic identity in the crate.
pub const IDENTITY_TOL: f64 = 1e-12;
