//! Attacks on ideal single-photon BB84: intercept-resend in the Breidbart
//! basis and the symmetric optimal incoherent probe attack.

use std::f64::consts::SQRT_2;

use rand::Rng;
use serde::Serialize;

use crate::error::{check_range, Result};
use crate::states::{encode, measure, sample_outcome, Basis, Bit, BreidbartBasis};
use crate::stats::Rate;
use crate::IDENTITY_TOL;

/// Eve's success probability for intercept-resend at full strength, `(2+√2)/4`.
pub const IR_FULL_GUESS: f64 = (2.0 + SQRT_2) / 4.0;

/// Largest disturbance intercept-resend can cause (every signal measured).
pub const IR_MAX_DISTURBANCE: f64 = 0.25;

/// Fraction of signals Eve measures in the intercept-resend attack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterceptResendParams {
    epsilon: f64,
}

impl InterceptResendParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        check_range("epsilon", epsilon, 0.0, 1.0, "[0, 1]")?;
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

pub fn ir_guess_prob(eps: f64) -> Result<f64> {
    check_range("epsilon", eps, 0.0, 1.0, "[0, 1]")?;
    Ok(eps * 0.5 * (1.0 + 1.0 / SQRT_2) + (1.0 - eps) * 0.5)
}

pub fn ir_disturbance(eps: f64) -> Result<f64> {
    check_range("epsilon", eps, 0.0, 1.0, "[0, 1]")?;
    Ok(eps / 4.0)
}

/// Eve's guess probability for intercept-resend tuned to cause disturbance `d`.
pub fn ir_guess_given_disturbance(d: f64) -> Result<f64> {
    check_range("disturbance", d, 0.0, IR_MAX_DISTURBANCE, "[0, 1/4]")?;
    Ok(SQRT_2 * d + 0.5)
}

/// Parameters of the symmetric probe interaction.
///
/// `fidelity` and `disturbance` are the squared norms of the unnormalized
/// probe states in the undisturbed and disturbed branches; `f1` and `d1` are
/// the overlaps inside each branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeModel {
    pub fidelity: f64,
    pub disturbance: f64,
    pub f1: f64,
    pub d1: f64,
}

impl ProbeModel {
    /// Solves `F + D = 1`, `F − D = F₁ + D₁` and `F₁/F = D₁/D` for a given D.
    pub fn from_disturbance(d: f64) -> Result<Self> {
        check_range("disturbance", d, 0.0, 0.5, "[0, 1/2]")?;
        let f = 1.0 - d;
        let ratio = f - d;
        Ok(ProbeModel {
            fidelity: f,
            disturbance: d,
            f1: f * ratio,
            d1: d * ratio,
        })
    }

    /// Common value of `⟨â₀₀|â₁₁⟩ = F₁/F` and `⟨â₀₁|â₁₀⟩ = D₁/D`.
    ///
    /// At the endpoints one branch has zero weight and its ratio is taken
    /// by continuity.
    pub fn overlap_ratio(&self) -> f64 {
        self.fidelity - self.disturbance
    }

    pub fn undisturbed_overlap(&self) -> f64 {
        if self.fidelity > 0.0 {
            self.f1 / self.fidelity
        } else {
            self.overlap_ratio()
        }
    }

    pub fn disturbed_overlap(&self) -> f64 {
        if self.disturbance > 0.0 {
            self.d1 / self.disturbance
        } else {
            self.overlap_ratio()
        }
    }

    /// Largest violation of the three defining constraints.
    pub fn constraint_residual(&self) -> f64 {
        let sum = (self.fidelity + self.disturbance - 1.0).abs();
        let diff = (self.fidelity - self.disturbance - self.f1 - self.d1).abs();
        let ratio = (self.undisturbed_overlap() - self.disturbed_overlap()).abs();
        sum.max(diff).max(ratio)
    }
}

/// Helstrom minimum-error probability of telling two pure states apart.
pub fn helstrom(overlap: f64) -> Result<f64> {
    check_range("overlap", overlap, -1.0, 1.0, "[-1, 1]")?;
    Ok(0.5 + 0.5 * (1.0 - overlap * overlap).max(0.0).sqrt())
}

/// Eve's guess probability under the optimal incoherent attack at disturbance `d`.
pub fn opt_guess_prob(d: f64) -> Result<f64> {
    check_range("disturbance", d, 0.0, 0.5, "[0, 1/2]")?;
    Ok(0.5 + (d * (1.0 - d)).sqrt())
}

/// The same probability assembled branch by branch: `F·P_F + D·P_D`.
pub fn opt_guess_prob_assembled(model: &ProbeModel) -> Result<f64> {
    Ok(model.fidelity * helstrom(model.undisturbed_overlap())?
        + model.disturbance * helstrom(model.disturbed_overlap())?)
}

/// Normalized probe states in a real 4-dimensional space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeVectors {
    pub a00: [f64; 4],
    pub a01: [f64; 4],
    pub a10: [f64; 4],
    pub a11: [f64; 4],
}

impl ProbeVectors {
    pub fn as_array(&self) -> [[f64; 4]; 4] {
        [self.a00, self.a01, self.a10, self.a11]
    }

    /// Gram matrix in the order `a00, a01, a10, a11`.
    pub fn gram(&self) -> [[f64; 4]; 4] {
        let v = self.as_array();
        let mut g = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                g[i][j] = dot(&v[i], &v[j]);
            }
        }
        g
    }

    /// Gram matrix the construction must reproduce.
    pub fn target_gram(model: &ProbeModel) -> [[f64; 4]; 4] {
        let f = model.undisturbed_overlap();
        let d = model.disturbed_overlap();
        // order a00, a01, a10, a11
        [
            [1.0, 0.0, 0.0, f],
            [0.0, 1.0, d, 0.0],
            [0.0, d, 1.0, 0.0],
            [f, 0.0, 0.0, 1.0],
        ]
    }
}

/// Canonical embedding: the undisturbed pair spans the first two axes, the
/// disturbed pair the last two, each pair opened to the required overlap.
pub fn construct_probe_vectors(model: &ProbeModel) -> Result<ProbeVectors> {
    let f_ratio = check_range("F1/F", model.undisturbed_overlap(), -1.0, 1.0, "[-1, 1]")?;
    let d_ratio = check_range("D1/D", model.disturbed_overlap(), -1.0, 1.0, "[-1, 1]")?;
    let alpha = 0.5 * f_ratio.acos();
    let beta = 0.5 * d_ratio.acos();
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    Ok(ProbeVectors {
        a00: [ca, sa, 0.0, 0.0],
        a11: [ca, -sa, 0.0, 0.0],
        a01: [0.0, 0.0, cb, sb],
        a10: [0.0, 0.0, cb, -sb],
    })
}

/// Deviations measured by [`verify_unitarity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitarityReport {
    pub disturbance: f64,
    /// max |⟨Ψᵢ|Ψⱼ⟩ − ⟨sᵢ|sⱼ⟩| over the four BB84 inputs.
    pub gram_deviation: f64,
    /// max difference between overlaps of diagonal-basis and rectilinear-basis probe entries.
    pub symmetry_deviation: f64,
    /// max difference between Ψ_u, Ψ_v from the conjugated probe matrix and
    /// from linearity applied to Ψ_x, Ψ_y.
    pub linearity_deviation: f64,
}

impl UnitarityReport {
    pub fn max_deviation(&self) -> f64 {
        self.gram_deviation
            .max(self.symmetry_deviation)
            .max(self.linearity_deviation)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_deviation() < tol
    }
}

type Joint = [f64; 8];

/// `Σ_k probe_k ⊗ bob_k` in the 8-dim joint space, index `probe * 2 + bob`.
fn joint(terms: &[([f64; 4], [f64; 2])]) -> Joint {
    let mut out = [0.0; 8];
    for (probe, bob) in terms {
        for p in 0..4 {
            for b in 0..2 {
                out[p * 2 + b] += probe[p] * bob[b];
            }
        }
    }
    out
}

fn scale4(v: &[f64; 4], s: f64) -> [f64; 4] {
    [v[0] * s, v[1] * s, v[2] * s, v[3] * s]
}

fn dot<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Builds the joint output states of the probe interaction for all four
/// BB84 inputs and checks that inner products are preserved.
pub fn verify_unitarity(model: &ProbeModel) -> Result<UnitarityReport> {
    let hats = construct_probe_vectors(model)?;
    let sf = model.fidelity.sqrt();
    let sd = model.disturbance.sqrt();

    // Unnormalized rectilinear probe matrix.
    let exy = [
        [scale4(&hats.a00, sf), scale4(&hats.a01, sd)],
        [scale4(&hats.a10, sd), scale4(&hats.a11, sf)],
    ];
    // H ε H with H symmetric.
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let hm = [[h, h], [h, -h]];
    let mut euv = [[[0.0; 4]; 2]; 2];
    for (i, row) in euv.iter_mut().enumerate() {
        for (l, entry) in row.iter_mut().enumerate() {
            for j in 0..2 {
                for k in 0..2 {
                    let w = hm[i][j] * hm[k][l];
                    for c in 0..4 {
                        entry[c] += w * exy[j][k][c];
                    }
                }
            }
        }
    }

    let x = [1.0, 0.0];
    let y = [0.0, 1.0];
    let u = [h, h];
    let v = [h, -h];

    let psi_x = joint(&[(exy[0][0], x), (exy[0][1], y)]);
    let psi_y = joint(&[(exy[1][0], x), (exy[1][1], y)]);
    let psi_u = joint(&[(euv[0][0], u), (euv[0][1], v)]);
    let psi_v = joint(&[(euv[1][0], u), (euv[1][1], v)]);

    let outputs = [psi_x, psi_y, psi_u, psi_v];
    let inputs = [x, y, u, v];
    let mut gram_dev: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let lhs = dot(&outputs[i], &outputs[j]);
            let rhs = dot(&inputs[i], &inputs[j]);
            gram_dev = gram_dev.max((lhs - rhs).abs());
        }
    }

    let flat = |e: &[[[f64; 4]; 2]; 2]| [e[0][0], e[0][1], e[1][0], e[1][1]];
    let (fx, fu) = (flat(&exy), flat(&euv));
    let mut sym_dev: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            sym_dev = sym_dev.max((dot(&fx[i], &fx[j]) - dot(&fu[i], &fu[j])).abs());
        }
    }

    let mut lin_dev: f64 = 0.0;
    for k in 0..8 {
        let lin_u = h * (psi_x[k] + psi_y[k]);
        let lin_v = h * (psi_x[k] - psi_y[k]);
        lin_dev = lin_dev
            .max((lin_u - psi_u[k]).abs())
            .max((lin_v - psi_v[k]).abs());
    }

    Ok(UnitarityReport {
        disturbance: model.disturbance,
        gram_deviation: gram_dev,
        symmetry_deviation: sym_dev,
        linearity_deviation: lin_dev,
    })
}

/// Sifted-key statistics from a single-photon attack simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttackEstimate {
    pub guess_rate: Rate,
    pub disturbance: Rate,
}

fn random_signal<R: Rng + ?Sized>(rng: &mut R) -> (Bit, Basis) {
    (
        Bit::from(rng.random::<bool>()),
        Basis::from(rng.random::<bool>()),
    )
}

/// Signal-by-signal intercept-resend: Eve measures each signal with
/// probability `eps` in the Breidbart basis and forwards the ket she saw.
pub fn simulate_ir_attack<R: Rng + ?Sized>(
    eps: f64,
    n_trials: u64,
    rng: &mut R,
) -> Result<AttackEstimate> {
    check_range("epsilon", eps, 0.0, 1.0, "[0, 1]")?;
    let breidbart = BreidbartBasis::optimal();
    let (mut sifted, mut errors, mut correct) = (0u64, 0u64, 0u64);
    for _ in 0..n_trials {
        let (bit, basis) = random_signal(rng);
        let signal = encode(bit, basis);
        let attacked = rng.random_bool(eps);
        let (to_bob, eve_guess) = if attacked {
            let guess = Bit::from_index(measure(&signal.state, breidbart.kets(), rng)?);
            (breidbart.ket(guess), guess)
        } else {
            (signal.state, Bit::from(rng.random::<bool>()))
        };
        let bob_basis = Basis::from(rng.random::<bool>());
        if bob_basis != basis {
            continue;
        }
        let bob_bit = Bit::from_index(measure(&to_bob, bob_basis.states(), rng)?);
        sifted += 1;
        errors += u64::from(bob_bit != bit);
        correct += u64::from(eve_guess == bit);
    }
    Ok(AttackEstimate {
        guess_rate: Rate::from_counts(correct, sifted),
        disturbance: Rate::from_counts(errors, sifted),
    })
}

/// Outcome-level simulation of the optimal incoherent attack. On each sifted
/// signal Bob's bit flips with probability `d`; Eve learns which branch
/// occurred and then guesses with the Helstrom probability for that branch.
pub fn simulate_opt_attack<R: Rng + ?Sized>(
    d: f64,
    n_trials: u64,
    rng: &mut R,
) -> Result<AttackEstimate> {
    let model = ProbeModel::from_disturbance(d)?;
    let p_undisturbed = helstrom(model.undisturbed_overlap())?;
    let p_disturbed = helstrom(model.disturbed_overlap())?;
    let (mut sifted, mut errors, mut correct) = (0u64, 0u64, 0u64);
    for _ in 0..n_trials {
        let (_bit, basis) = random_signal(rng);
        let bob_basis = Basis::from(rng.random::<bool>());
        if bob_basis != basis {
            continue;
        }
        let flipped = sample_outcome(d, rng) == 0;
        let p_guess = if flipped { p_disturbed } else { p_undisturbed };
        let eve_right = sample_outcome(p_guess, rng) == 0;
        sifted += 1;
        errors += u64::from(flipped);
        correct += u64::from(eve_right);
    }
    Ok(AttackEstimate {
        guess_rate: Rate::from_counts(correct, sifted),
        disturbance: Rate::from_counts(errors, sifted),
    })
}

/// `true` when every identity the probe construction must satisfy holds.
pub fn probe_model_is_consistent(model: &ProbeModel) -> bool {
    model.constraint_residual() < IDENTITY_TOL
}
