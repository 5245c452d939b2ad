//! The CRAC game engine.
//!
//! One trial: Alice samples a database value and an encoding angle φ inside
//! its quadrant, measures her half of the shared singlet in the {|φ⟩, |φ⊥⟩}
//! basis and announces the one-bit result β; Bob's qubit thereby collapses
//! to the antipodally related phase state χ = φ + βπ. Bob couples it to a
//! probe with the cloner, reads axis â off the probe, hands the disturbed
//! object to a second probe by swapping, reads axis b̂ off that, and
//! corrects both outcome bits by β.
//!
//! Two engines produce statistics: [`run_trials`] samples honestly from the
//! Born rule with deterministic per-(seed, shard, role) streams, and
//! [`exact_statistics`] computes the same joint tables in closed operator
//! form — fixed-angle ensembles exactly, quadrant-uniform ensembles by
//! adaptive quadrature over the arcs.
//!
//! A fixed-φ configuration is an ensemble, not a point: Alice's codebook
//! pairs φ with its antipode φ + π (which encodes the complementary
//! database value), weighted by the bits prior restricted to those two
//! patterns. This is the unique fixed-angle ensemble whose two channels are
//! binary-symmetric for arbitrary axes, and its per-channel tables coincide
//! with the four-representative picture whenever the axes are orthogonal.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{CracError, Result};
use crate::geometry::{
    database_bits, phase_state, quadrant_arcs, sample_in_quadrant, DatabaseBits, EquatorDirection,
    QuadrantPartition,
};
use crate::infotheory::{information_gain, InformationGain, JointDistribution};
use crate::machines::{pcc_op, swap_op, ClonerAngle};
use crate::qcore::{
    identity, kron2, mat_vec, measure_second, partial_trace, Keep, Projector, PureState, Sign,
};
use crate::quad::adaptive_simpson;
use crate::rng::{stream, Role};
use rand::Rng;

/// How Alice chooses the encoding angle for each database value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PhiMode {
    /// The antipodal codebook {φ, φ+π} described in the module docs.
    Fixed { angle: EquatorDirection },
    /// Uniform over the quadrant arc of the drawn database value.
    UniformQuadrant,
}

/// Prior over the four database values, indexed 00, 01, 10, 11.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BitsPrior(pub [f64; 4]);

impl BitsPrior {
    pub fn uniform() -> Self {
        BitsPrior([0.25; 4])
    }

    pub fn weight(&self, bits: DatabaseBits) -> f64 {
        self.0[bits.index()]
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(CracError::contract("bits prior has a negative weight"));
        }
        let sum: f64 = self.0.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(CracError::contract(format!(
                "bits prior sums to {sum}, not 1"
            )));
        }
        Ok(())
    }
}

/// Full parameterisation of one experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub axis_a: EquatorDirection,
    pub axis_b: EquatorDirection,
    pub cloner_eta: ClonerAngle,
    pub phi_mode: PhiMode,
    pub bits_prior: BitsPrior,
    pub trials: u64,
    pub seed: u64,
}

impl ProtocolConfig {
    /// Orthogonal axes, symmetric cloner, fixed φ halfway between the axes,
    /// uniform prior — the configuration of the protocol's optimum.
    pub fn baseline() -> Self {
        ProtocolConfig {
            axis_a: EquatorDirection::new(0.0),
            axis_b: EquatorDirection::new(std::f64::consts::FRAC_PI_2),
            cloner_eta: ClonerAngle::symmetric(),
            phi_mode: PhiMode::Fixed {
                angle: EquatorDirection::new(std::f64::consts::FRAC_PI_4),
            },
            bits_prior: BitsPrior::uniform(),
            trials: 10_000,
            seed: 7,
        }
    }

    pub fn partition(&self) -> Result<QuadrantPartition> {
        QuadrantPartition::new(self.axis_a, self.axis_b)
    }

    pub fn validate(&self) -> Result<()> {
        self.partition()?;
        self.bits_prior.validate()?;
        Ok(())
    }
}

/// Everything observable about one sampled trial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub bits: DatabaseBits,
    pub phi: EquatorDirection,
    pub beta: u8,
    pub outcome_a: i8,
    pub outcome_b: i8,
    pub guess_a: u8,
    pub guess_b: u8,
}

/// Joint (x, g) tables for both channels plus the classical-bit ledger.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub joint_a: JointDistribution,
    pub joint_b: JointDistribution,
    /// Classical bits consumed by the run that produced these tables;
    /// zero for exact distributions, which consume none.
    pub classical_bits_used: u64,
}

impl ChannelStats {
    pub fn information(&self) -> InformationGain {
        information_gain(self)
    }
}

// ---------------------------------------------------------------------------
// single-trial physics
// ---------------------------------------------------------------------------

/// Alice's Bell-basis measurement on her half of the singlet. Returns the
/// announced bit β (1 when she post-selected |φ⟩, leaving Bob with |φ⊥⟩)
/// and Bob's collapsed state.
pub fn encode(phi: EquatorDirection, rng: &mut impl Rng) -> Result<(u8, PureState)> {
    let singlet = PureState::singlet();
    let plus = Projector::equator(phi.radians(), Sign::Plus);
    let lifted = kron2(plus.data(), &identity(2));
    let projected = mat_vec(4, &lifted, singlet.amplitudes());
    let p_plus: f64 = projected.iter().map(|z| z.norm_sqr()).sum();
    let u: f64 = rng.gen();
    let (beta, branch) = if u < p_plus {
        (1u8, projected)
    } else {
        let lifted = kron2(plus.complement().data(), &identity(2));
        (0u8, mat_vec(4, &lifted, singlet.amplitudes()))
    };
    // The collapsed state is a product; Bob's factor is any nonzero row of
    // the 2×2 amplitude matrix c[2i+j].
    let rows = [[branch[0], branch[1]], [branch[2], branch[3]]];
    let norms: Vec<f64> = rows
        .iter()
        .map(|r| (r[0].norm_sqr() + r[1].norm_sqr()).sqrt())
        .collect();
    let pick = if norms[0] >= norms[1] { 0 } else { 1 };
    if norms[pick] < 1e-9 {
        return Err(CracError::contract("collapsed branch vanished"));
    }
    let bob = PureState::new(vec![rows[pick][0] / norms[pick], rows[pick][1] / norms[pick]])?;
    Ok((beta, bob))
}

/// Bob's decoding chain: cloner, probe readout along â, swap to the second
/// probe, readout along b̂. Returns the two ±1 outcomes; draws exactly two
/// uniforms, in that order.
pub fn decode(
    bob_state: &PureState,
    cfg: &ProtocolConfig,
    rng: &mut impl Rng,
) -> Result<(i8, i8)> {
    let probe = PureState::basis(2, 0).density();
    let joint = bob_state.density().tensor(&probe)?;
    let evolved = joint.evolve(&pcc_op(cfg.cloner_eta))?;

    let proj_a = Projector::equator(cfg.axis_a.radians(), Sign::Plus);
    let (p_plus, post_plus) = measure_second(&evolved, &proj_a)?;
    let u: f64 = rng.gen();
    let (outcome_a, collapsed) = if u < p_plus {
        (1i8, post_plus)
    } else {
        (-1i8, measure_second(&evolved, &proj_a.complement())?.1)
    };
    let collapsed = collapsed
        .ok_or_else(|| CracError::contract("sampled a measurement branch of zero weight"))?;

    let object = partial_trace(&collapsed, Keep::First)?;
    let joint2 = object.tensor(&probe)?;
    let evolved2 = joint2.evolve(&swap_op())?;
    let proj_b = Projector::equator(cfg.axis_b.radians(), Sign::Plus);
    let (q_plus, _) = measure_second(&evolved2, &proj_b)?;
    let u2: f64 = rng.gen();
    let outcome_b = if u2 < q_plus { 1i8 } else { -1i8 };
    Ok((outcome_a, outcome_b))
}

/// Decoding rule g = (1 − O)/2 + β (mod 2).
pub fn guess(outcome: i8, beta: u8) -> u8 {
    debug_assert!(outcome == 1 || outcome == -1);
    let o_prime = ((1 - outcome as i32) / 2) as u8;
    (o_prime + beta) & 1
}

/// One Alice-side sample: database value, encoding angle, announced bit,
/// and the canonical collapsed angle χ = φ + βπ that Bob's qubit embodies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct AliceDraw {
    pub bits: DatabaseBits,
    pub phi: EquatorDirection,
    pub beta: u8,
    pub chi: EquatorDirection,
}

pub(crate) fn alice_draw(cfg: &ProtocolConfig, rng: &mut impl Rng) -> Result<AliceDraw> {
    let part = cfg.partition()?;
    let (bits, phi) = match cfg.phi_mode {
        PhiMode::Fixed { .. } => {
            let members = fixed_ensemble(cfg, &part)?;
            let u: f64 = rng.gen();
            let m = if u < members[0].weight {
                members[0]
            } else {
                members[1]
            };
            (m.bits, m.phi)
        }
        PhiMode::UniformQuadrant => {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = DatabaseBits::from_index(3);
            for idx in 0..4 {
                acc += cfg.bits_prior.0[idx];
                if u < acc {
                    chosen = DatabaseBits::from_index(idx);
                    break;
                }
            }
            let phi = sample_in_quadrant(chosen, &part, rng)?;
            (chosen, phi)
        }
    };
    let (beta, _bob_state) = encode(phi, rng)?;
    // The wire and the in-process path share this canonical angle so that
    // both compute Bob's probabilities from bit-identical inputs.
    let chi = if beta == 1 { phi.antipode() } else { phi };
    Ok(AliceDraw {
        bits,
        phi,
        beta,
        chi,
    })
}

/// One member of a fixed-φ ensemble.
#[derive(Clone, Copy, Debug, PartialEq)]
struct FixedMember {
    phi: EquatorDirection,
    bits: DatabaseBits,
    weight: f64,
}

fn fixed_ensemble(
    cfg: &ProtocolConfig,
    part: &QuadrantPartition,
) -> Result<[FixedMember; 2]> {
    let angle = match cfg.phi_mode {
        PhiMode::Fixed { angle } => angle,
        PhiMode::UniformQuadrant => {
            return Err(CracError::contract("fixed ensemble requested in uniform mode"))
        }
    };
    let phi0 = angle;
    let phi1 = angle.antipode();
    let b0 = database_bits(phi0, part);
    let b1 = database_bits(phi1, part);
    debug_assert_ne!(b0, b1, "antipodal pair encodes one pattern");
    let w0 = cfg.bits_prior.weight(b0);
    let w1 = cfg.bits_prior.weight(b1);
    let total = w0 + w1;
    if total < 1e-12 {
        return Err(CracError::contract(
            "bits prior gives zero weight to both patterns reachable from the fixed angle",
        ));
    }
    Ok([
        FixedMember {
            phi: phi0,
            bits: b0,
            weight: w0 / total,
        },
        FixedMember {
            phi: phi1,
            bits: b1,
            weight: w1 / total,
        },
    ])
}

// ---------------------------------------------------------------------------
// Monte Carlo engine
// ---------------------------------------------------------------------------

fn run_shard(cfg: &ProtocolConfig, shard: u64, trials: u64) -> Result<Vec<TrialRecord>> {
    let mut alice = stream(cfg.seed, shard, Role::Alice);
    let mut bob = stream(cfg.seed, shard, Role::Bob);
    let mut records = Vec::with_capacity(trials as usize);
    for _ in 0..trials {
        let draw = alice_draw(cfg, &mut alice)?;
        let bob_state = phase_state(draw.chi);
        let (outcome_a, outcome_b) = decode(&bob_state, cfg, &mut bob)?;
        records.push(TrialRecord {
            bits: draw.bits,
            phi: draw.phi,
            beta: draw.beta,
            outcome_a,
            outcome_b,
            guess_a: guess(outcome_a, draw.beta),
            guess_b: guess(outcome_b, draw.beta),
        });
    }
    Ok(records)
}

/// Empirical joint tables from a list of trials.
pub fn stats_from_records(records: &[TrialRecord], classical_bits_used: u64) -> Result<ChannelStats> {
    if records.is_empty() {
        return Err(CracError::EmptyRun("no trials recorded".into()));
    }
    let mut counts_a = [[0u64; 2]; 2];
    let mut counts_b = [[0u64; 2]; 2];
    for r in records {
        counts_a[r.bits.x_a as usize][r.guess_a as usize] += 1;
        counts_b[r.bits.x_b as usize][r.guess_b as usize] += 1;
    }
    Ok(ChannelStats {
        joint_a: JointDistribution::from_counts(counts_a)?,
        joint_b: JointDistribution::from_counts(counts_b)?,
        classical_bits_used,
    })
}

/// Seeded Monte Carlo run, single shard.
pub fn run_trials(cfg: &ProtocolConfig) -> Result<(Vec<TrialRecord>, ChannelStats)> {
    run_trials_sharded(cfg, 1)
}

/// Seeded Monte Carlo run split over `shards` worker threads. Each shard
/// draws from its own (seed, shard, role) streams, so the transcript is a
/// deterministic function of (config, shard count); shard 1 reproduces
/// [`run_trials`] exactly.
pub fn run_trials_sharded(
    cfg: &ProtocolConfig,
    shards: usize,
) -> Result<(Vec<TrialRecord>, ChannelStats)> {
    cfg.validate()?;
    if cfg.trials == 0 {
        return Err(CracError::EmptyRun("trials = 0".into()));
    }
    let shards = shards.clamp(1, cfg.trials.min(1024) as usize) as u64;
    let base = cfg.trials / shards;
    let rem = cfg.trials % shards;
    let quota = |i: u64| base + u64::from(i < rem);

    let records: Vec<TrialRecord> = if shards == 1 {
        run_shard(cfg, 0, cfg.trials)?
    } else {
        let mut parts: Vec<Result<Vec<TrialRecord>>> = Vec::new();
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..shards)
                .map(|i| scope.spawn(move || run_shard(cfg, i, quota(i))))
                .collect();
            for h in handles {
                parts.push(h.join().expect("shard worker panicked"));
            }
        });
        let mut merged = Vec::with_capacity(cfg.trials as usize);
        for p in parts {
            merged.extend(p?);
        }
        merged
    };
    let stats = stats_from_records(&records, cfg.trials)?;
    Ok((records, stats))
}

/// CSV export of a trial list: one row per trial, angles at fixed 9
/// decimal places.
pub fn records_to_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from("trial,x_a,x_b,phi_rad,beta,o_a,o_b,g_a,g_b\n");
    for (i, r) in records.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{:.9},{},{},{},{},{}",
            i,
            r.bits.x_a,
            r.bits.x_b,
            r.phi.radians(),
            r.beta,
            r.outcome_a,
            r.outcome_b,
            r.guess_a,
            r.guess_b
        );
    }
    out
}

// ---------------------------------------------------------------------------
// exact engine
// ---------------------------------------------------------------------------

/// Marginal probabilities P(O_A = +1) and P(O_B = +1) for a given encoding
/// angle and β branch, from the full operator pipeline. The probe-A readout
/// acts on a different subsystem than the object, so the O_B marginal is
/// computed with the probe readout skipped (a test asserts the
/// collapse-averaged route agrees).
pub fn outcome_marginals(
    phi: EquatorDirection,
    beta: u8,
    cfg: &ProtocolConfig,
) -> Result<(f64, f64)> {
    let chi = if beta == 1 { phi.antipode() } else { phi };
    let probe = PureState::basis(2, 0).density();
    let joint = phase_state(chi).density().tensor(&probe)?;
    let evolved = joint.evolve(&pcc_op(cfg.cloner_eta))?;
    let proj_a = Projector::equator(cfg.axis_a.radians(), Sign::Plus);
    let (p_a, _) = measure_second(&evolved, &proj_a)?;

    let object = partial_trace(&evolved, Keep::First)?;
    let joint2 = object.tensor(&probe)?;
    let evolved2 = joint2.evolve(&swap_op())?;
    let proj_b = Projector::equator(cfg.axis_b.radians(), Sign::Plus);
    let (p_b, _) = measure_second(&evolved2, &proj_b)?;
    Ok((p_a, p_b))
}

/// How a readout probability becomes a guess-0 probability.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum GuessRule {
    /// g = o′ ⊕ β — the protocol's decoding.
    BetaCorrected,
    /// g = o′ with no correction (used by the dual-route consistency check
    /// and the β-ablation analysis).
    RawOutcome,
}

fn guess_zero_probability(p_plus: f64, beta: u8, rule: GuessRule) -> f64 {
    match rule {
        GuessRule::BetaCorrected => {
            if beta == 0 {
                p_plus
            } else {
                1.0 - p_plus
            }
        }
        GuessRule::RawOutcome => p_plus,
    }
}

/// Fold one ensemble member's outcome marginals `(p_a, p_b)` into the
/// channel-A/channel-B joint tables with the given total weight.
fn accumulate_member(
    joints: &mut [[[f64; 2]; 2]; 2],
    bits: DatabaseBits,
    weight: f64,
    marginals: (f64, f64),
    beta: u8,
    rule: GuessRule,
) {
    let [joint_a, joint_b] = joints;
    for (joint, x, p_plus) in [
        (&mut *joint_a, bits.x_a as usize, marginals.0),
        (&mut *joint_b, bits.x_b as usize, marginals.1),
    ] {
        let g0 = guess_zero_probability(p_plus, beta, rule);
        joint[x][0] += weight * g0;
        joint[x][1] += weight * (1.0 - g0);
    }
}

fn exact_tables(
    cfg: &ProtocolConfig,
    betas: &[u8],
    rule: GuessRule,
) -> Result<(JointDistribution, JointDistribution)> {
    cfg.validate()?;
    let part = cfg.partition()?;
    let beta_weight = 1.0 / betas.len() as f64;
    let mut joints = [[[0.0; 2]; 2]; 2];
    match cfg.phi_mode {
        PhiMode::Fixed { .. } => {
            for member in fixed_ensemble(cfg, &part)? {
                for &beta in betas {
                    let marginals = outcome_marginals(member.phi, beta, cfg)?;
                    accumulate_member(
                        &mut joints,
                        member.bits,
                        member.weight * beta_weight,
                        marginals,
                        beta,
                        rule,
                    );
                }
            }
        }
        PhiMode::UniformQuadrant => {
            for arc in quadrant_arcs(&part)? {
                let weight = cfg.bits_prior.weight(arc.bits);
                if weight == 0.0 {
                    continue;
                }
                for &beta in betas {
                    for channel_a in [true, false] {
                        let mut integrand = |t: f64| -> Result<f64> {
                            let phi = EquatorDirection::new(t);
                            let (p_a, p_b) = outcome_marginals(phi, beta, cfg)?;
                            Ok(if channel_a { p_a } else { p_b })
                        };
                        let avg = adaptive_simpson(&mut integrand, arc.start, arc.end, 1e-9)?
                            / arc.length();
                        let (joint, x) = if channel_a {
                            (&mut joints[0], arc.bits.x_a as usize)
                        } else {
                            (&mut joints[1], arc.bits.x_b as usize)
                        };
                        let g0 = guess_zero_probability(avg, beta, rule);
                        joint[x][0] += weight * beta_weight * g0;
                        joint[x][1] += weight * beta_weight * (1.0 - g0);
                    }
                }
            }
        }
    }
    Ok((
        JointDistribution::new(joints[0])?,
        JointDistribution::new(joints[1])?,
    ))
}

/// Exact joint tables: Born probabilities averaged over the β branches and
/// the φ ensemble, no sampling.
pub fn exact_statistics(cfg: &ProtocolConfig) -> Result<ChannelStats> {
    let (joint_a, joint_b) = exact_tables(cfg, &[0, 1], GuessRule::BetaCorrected)?;
    Ok(ChannelStats {
        joint_a,
        joint_b,
        classical_bits_used: 0,
    })
}

/// Exact joint tables conditioned on one β branch. The protocol's
/// antipodal symmetry makes these independent of β; a test pins that.
pub fn beta_branch_stats(cfg: &ProtocolConfig, beta: u8) -> Result<ChannelStats> {
    let (joint_a, joint_b) = exact_tables(cfg, &[beta], GuessRule::BetaCorrected)?;
    Ok(ChannelStats {
        joint_a,
        joint_b,
        classical_bits_used: 0,
    })
}

/// Exact per-channel success probabilities P(g_w = x_w).
pub fn success_probabilities(cfg: &ProtocolConfig) -> Result<(f64, f64)> {
    let stats = exact_statistics(cfg)?;
    Ok((
        stats.joint_a.success_probability(),
        stats.joint_b.success_probability(),
    ))
}

/// Both information-accounting routes: through the β-corrected guesses,
/// and through the raw outcome bits conditioned per β branch (averaged).
/// The two must coincide; a divergence flags an engine inconsistency
/// rather than silently preferring one.
pub fn dual_route_information(cfg: &ProtocolConfig) -> Result<(InformationGain, InformationGain)> {
    let guess_based = exact_statistics(cfg)?.information();
    let mut i_a = 0.0;
    let mut i_b = 0.0;
    for beta in [0u8, 1] {
        let (ja, jb) = exact_tables(cfg, &[beta], GuessRule::RawOutcome)?;
        i_a += 0.5 * crate::infotheory::mutual_information(&ja);
        i_b += 0.5 * crate::infotheory::mutual_information(&jb);
    }
    let outcome_based = InformationGain {
        i_a,
        i_b,
        total: i_a + i_b,
    };
    Ok((guess_based, outcome_based))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::orthogonal_state;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};

    fn cfg_fixed(axis_a: f64, axis_b: f64, eta: f64, phi: f64) -> ProtocolConfig {
        ProtocolConfig {
            axis_a: EquatorDirection::new(axis_a),
            axis_b: EquatorDirection::new(axis_b),
            cloner_eta: ClonerAngle::new(eta).unwrap(),
            phi_mode: PhiMode::Fixed {
                angle: EquatorDirection::new(phi),
            },
            bits_prior: BitsPrior::uniform(),
            trials: 1000,
            seed: 7,
        }
    }

    #[test]
    fn guess_fixtures() {
        assert_eq!(guess(1, 0), 0);
        assert_eq!(guess(-1, 0), 1);
        assert_eq!(guess(-1, 1), 0);
        assert_eq!(guess(1, 1), 1);
    }

    #[test]
    fn encode_branches_give_the_right_states() {
        let mut rng = stream(123, 0, Role::Alice);
        let phi = EquatorDirection::new(1.1);
        let mut seen = [false; 2];
        for _ in 0..64 {
            let (beta, bob) = encode(phi, &mut rng).unwrap();
            seen[beta as usize] = true;
            let overlap_phi = bob.inner(&phase_state(phi)).norm();
            let overlap_orth = bob.inner(&orthogonal_state(phi)).norm();
            if beta == 1 {
                assert!(overlap_phi < 1e-12, "β=1 bob state overlaps |φ⟩: {overlap_phi}");
                assert_abs_diff_eq!(overlap_orth, 1.0, epsilon = 1e-12);
            } else {
                assert!(overlap_orth < 1e-12);
                assert_abs_diff_eq!(overlap_phi, 1.0, epsilon = 1e-12);
            }
        }
        assert!(seen[0] && seen[1], "both β branches should occur in 64 draws");
    }

    #[test]
    fn beta_is_fair_within_four_sigma() {
        let mut rng = stream(5150, 0, Role::Alice);
        let n = 100_000;
        let mut ones = 0u64;
        let phi = EquatorDirection::new(0.3);
        for _ in 0..n {
            let (beta, _) = encode(phi, &mut rng).unwrap();
            ones += u64::from(beta);
        }
        let freq = ones as f64 / n as f64;
        let sigma = 0.5 / (n as f64).sqrt();
        assert!(
            (freq - 0.5).abs() < 4.0 * sigma,
            "β frequency {freq} off fair by more than 4σ"
        );
    }

    #[test]
    fn decode_endpoints() {
        // η = 0: probe untouched (50/50 on any equator axis), object fully
        // biased along b̂·φ̂.
        let cfg = cfg_fixed(0.0, FRAC_PI_2, 0.0, 0.9);
        let (p_a, p_b) = outcome_marginals(EquatorDirection::new(0.9), 0, &cfg).unwrap();
        assert_abs_diff_eq!(p_a, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p_b, (1.0 + (0.9f64 - FRAC_PI_2).cos()) / 2.0, epsilon = 1e-12);
        // η = π/2: roles exchanged.
        let cfg = cfg_fixed(0.0, FRAC_PI_2, FRAC_PI_2, 0.9);
        let (p_a, p_b) = outcome_marginals(EquatorDirection::new(0.9), 0, &cfg).unwrap();
        assert_abs_diff_eq!(p_a, (1.0 + 0.9f64.cos()) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p_b, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_cloner_readout_fixture() {
        // η = π/4, χ aligned with â: P(O_A = +1) = (1 + 1/√2)/2.
        let cfg = cfg_fixed(0.0, FRAC_PI_2, FRAC_PI_4, 0.0);
        let (p_a, _) = outcome_marginals(EquatorDirection::new(0.0), 0, &cfg).unwrap();
        assert_abs_diff_eq!(p_a, (1.0 + FRAC_PI_4.sin()) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p_a, 0.8535533905932737, epsilon = 1e-12);
    }

    /// The O_B marginal is the same whether or not the probe-A readout is
    /// collapsed first — the two act on different subsystems.
    #[test]
    fn probe_readout_commutes_with_object() {
        let cfg = cfg_fixed(0.4, 1.9, 0.6, 1.3);
        let phi = EquatorDirection::new(1.3);
        let (_, p_b_skipped) = outcome_marginals(phi, 0, &cfg).unwrap();

        // Collapse-averaged route.
        let probe = PureState::basis(2, 0).density();
        let joint = phase_state(phi).density().tensor(&probe).unwrap();
        let evolved = joint.evolve(&pcc_op(cfg.cloner_eta)).unwrap();
        let proj_a = Projector::equator(cfg.axis_a.radians(), Sign::Plus);
        let mut p_b_avg = 0.0;
        for proj in [proj_a.clone(), proj_a.complement()] {
            let (p, post) = measure_second(&evolved, &proj).unwrap();
            if p < 1e-14 {
                continue;
            }
            let object = partial_trace(&post.unwrap(), Keep::First).unwrap();
            let joint2 = object.tensor(&probe).unwrap();
            let evolved2 = joint2.evolve(&swap_op()).unwrap();
            let proj_b = Projector::equator(cfg.axis_b.radians(), Sign::Plus);
            let (q, _) = measure_second(&evolved2, &proj_b).unwrap();
            p_b_avg += p * q;
        }
        assert_abs_diff_eq!(p_b_skipped, p_b_avg, epsilon = 1e-12);
    }

    #[test]
    fn exact_statistics_at_the_symmetric_point() {
        let cfg = cfg_fixed(0.0, FRAC_PI_2, FRAC_PI_4, FRAC_PI_4);
        let (s_a, s_b) = success_probabilities(&cfg).unwrap();
        assert_abs_diff_eq!(s_a, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(s_b, 0.75, epsilon = 1e-12);
        let gain = exact_statistics(&cfg).unwrap().information();
        let expected = 1.0 - crate::infotheory::binary_entropy(0.75).unwrap();
        assert_abs_diff_eq!(gain.i_a, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(gain.i_b, expected, epsilon = 1e-12);
    }

    #[test]
    fn exact_statistics_with_phi_on_axis_a() {
        // δ = 0 on orthogonal axes: channel B carries nothing.
        for eta in [0.3, FRAC_PI_4, 1.2] {
            let cfg = cfg_fixed(0.0, FRAC_PI_2, eta, 0.0);
            let (s_a, s_b) = success_probabilities(&cfg).unwrap();
            assert_abs_diff_eq!(s_a, (1.0 + eta.sin()) / 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s_b, 0.5, epsilon = 1e-10);
        }
    }

    #[test]
    fn beta_branches_are_statistically_identical() {
        let cfg = cfg_fixed(0.2, 1.4, 0.7, 2.2);
        let b0 = beta_branch_stats(&cfg, 0).unwrap();
        let b1 = beta_branch_stats(&cfg, 1).unwrap();
        for x in 0..2 {
            for g in 0..2 {
                assert_abs_diff_eq!(
                    b0.joint_a.cell(x, g),
                    b1.joint_a.cell(x, g),
                    epsilon = 1e-12
                );
                assert_abs_diff_eq!(
                    b0.joint_b.cell(x, g),
                    b1.joint_b.cell(x, g),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn dual_routes_coincide() {
        for (a, b, eta, phi) in [
            (0.0, FRAC_PI_2, FRAC_PI_4, FRAC_PI_4),
            (0.3, 1.8, 0.9, 2.5),
            (5.0, 0.7, 0.2, 4.0),
        ] {
            let cfg = cfg_fixed(a, b, eta, phi);
            let (by_guess, by_outcome) = dual_route_information(&cfg).unwrap();
            assert_abs_diff_eq!(by_guess.i_a, by_outcome.i_a, epsilon = 1e-12);
            assert_abs_diff_eq!(by_guess.i_b, by_outcome.i_b, epsilon = 1e-12);
        }
    }

    #[test]
    fn runs_are_deterministic_and_accounted() {
        let mut cfg = ProtocolConfig::baseline();
        cfg.trials = 2000;
        let (r1, s1) = run_trials(&cfg).unwrap();
        let (r2, s2) = run_trials(&cfg).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(s1, s2);
        assert_eq!(s1.classical_bits_used, 2000);
        for r in &r1 {
            assert_eq!(r.guess_a, guess(r.outcome_a, r.beta));
            assert_eq!(r.guess_b, guess(r.outcome_b, r.beta));
        }
    }

    #[test]
    fn sharded_runs_are_deterministic_per_shard_count() {
        let mut cfg = ProtocolConfig::baseline();
        cfg.trials = 1001;
        let (r3a, _) = run_trials_sharded(&cfg, 3).unwrap();
        let (r3b, _) = run_trials_sharded(&cfg, 3).unwrap();
        assert_eq!(r3a, r3b);
        assert_eq!(r3a.len(), 1001);
        let (r1, _) = run_trials_sharded(&cfg, 1).unwrap();
        let (r0, _) = run_trials(&cfg).unwrap();
        assert_eq!(r1, r0);
    }

    #[test]
    fn monte_carlo_matches_exact_within_four_sigma() {
        let mut cfg = ProtocolConfig::baseline();
        cfg.trials = 30_000;
        let exact = exact_statistics(&cfg).unwrap();
        let (_, empirical) = run_trials(&cfg).unwrap();
        let n = cfg.trials as f64;
        for (je, jm) in [
            (&exact.joint_a, &empirical.joint_a),
            (&exact.joint_b, &empirical.joint_b),
        ] {
            for x in 0..2 {
                for g in 0..2 {
                    let p = je.cell(x, g);
                    let se = (p * (1.0 - p) / n).sqrt();
                    let diff = (jm.cell(x, g) - p).abs();
                    assert!(
                        diff <= 4.0 * se + 1e-12,
                        "cell ({x},{g}): |{} − {p}| > 4σ = {}",
                        jm.cell(x, g),
                        4.0 * se
                    );
                }
            }
        }
    }

    #[test]
    fn concentrated_prior_yields_single_row() {
        let mut cfg = cfg_fixed(0.0, FRAC_PI_2, FRAC_PI_4, FRAC_PI_4);
        // φ = π/4 encodes (0,0); its antipode encodes (1,1).
        cfg.bits_prior = BitsPrior([1.0, 0.0, 0.0, 0.0]);
        let exact = exact_statistics(&cfg).unwrap();
        assert_abs_diff_eq!(
            exact.joint_a.cell(0, 0) + exact.joint_a.cell(0, 1),
            1.0,
            epsilon = 1e-12
        );
        cfg.trials = 500;
        let (records, stats) = run_trials(&cfg).unwrap();
        assert!(records.iter().all(|r| r.bits == DatabaseBits::new(0, 0).unwrap()));
        assert_abs_diff_eq!(
            stats.joint_a.cell(1, 0) + stats.joint_a.cell(1, 1),
            0.0,
            epsilon = 0.0
        );
    }

    #[test]
    fn uniform_quadrant_exact_matches_sampling() {
        let mut cfg = ProtocolConfig::baseline();
        cfg.phi_mode = PhiMode::UniformQuadrant;
        cfg.trials = 30_000;
        let exact = exact_statistics(&cfg).unwrap();
        let (_, empirical) = run_trials(&cfg).unwrap();
        let n = cfg.trials as f64;
        for (je, jm) in [
            (&exact.joint_a, &empirical.joint_a),
            (&exact.joint_b, &empirical.joint_b),
        ] {
            for x in 0..2 {
                for g in 0..2 {
                    let p = je.cell(x, g);
                    let se = (p * (1.0 - p) / n).sqrt().max(1e-9);
                    assert!(
                        (jm.cell(x, g) - p).abs() <= 4.0 * se,
                        "cell ({x},{g}) off by more than 4σ"
                    );
                }
            }
        }
    }

    #[test]
    fn empty_runs_are_rejected() {
        let mut cfg = ProtocolConfig::baseline();
        cfg.trials = 0;
        assert!(matches!(run_trials(&cfg), Err(CracError::EmptyRun(_))));
    }

    #[test]
    fn csv_schema_is_stable() {
        let mut cfg = ProtocolConfig::baseline();
        cfg.trials = 3;
        let (records, _) = run_trials(&cfg).unwrap();
        let csv = records_to_csv(&records);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "trial,x_a,x_b,phi_rad,beta,o_a,o_b,g_a,g_b"
        );
        let first = lines.next().unwrap();
        assert!(first.starts_with("0,"));
        assert_eq!(first.split(',').count(), 9);
        // phi printed at fixed 9 decimals.
        let phi_field = first.split(',').nth(3).unwrap();
        assert_eq!(phi_field.split('.').nth(1).unwrap().len(), 9);
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn config_serde_round_trip() {
        let cfg = ProtocolConfig::baseline();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ProtocolConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
        // Angles normalise on the way in.
        let wrapped: ProtocolConfig = serde_json::from_str(
            &json.replace("\"axis_a\":0.0", &format!("\"axis_a\":{}", TAU + 1.0)),
        )
        .unwrap();
        assert_abs_diff_eq!(wrapped.axis_a.radians(), 1.0, epsilon = 1e-12);
        // Out-of-range cloner angles are rejected.
        assert!(serde_json::from_str::<ProtocolConfig>(
            &json.replace("\"cloner_eta\":0.7853981633974483", "\"cloner_eta\":2.0")
        )
        .is_err());
    }

    #[test]
    fn fixed_mode_rejects_zero_weight_pair() {
        let mut cfg = cfg_fixed(0.0, FRAC_PI_2, FRAC_PI_4, FRAC_PI_4);
        // φ = π/4 reaches patterns 00 and 11; starve both.
        cfg.bits_prior = BitsPrior([0.0, 0.5, 0.5, 0.0]);
        assert!(exact_statistics(&cfg).is_err());
    }
}
