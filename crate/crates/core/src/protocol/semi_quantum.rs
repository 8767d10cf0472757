//! Semi-quantum protocol: Bob can only measure-and-resend or reflect.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::walk::{basis_index, split_index, CoinState, Stepper, WalkParams};
use crate::ComplexMatrix;

use super::channel::{
    transmit, AttackKind, AttackModel, ChannelModel, EntanglingAttack, JointState, Leg,
    PublicWalks,
};
use super::transcript::{
    AliceAction, BobAction, IterationRecord, ProtocolTranscript, RoundChoices, RoundTag,
};
use super::{ProtocolConfig, ProtocolKind};

/// Smallest squared amplitude counted as "reaches the target".
pub const TARGET_THRESHOLD: f64 = 1e-18;

/// Hadamard walk (shift before coin) whose output overlaps both `|l,s⟩` and `|l',s'⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaWalk {
    pub targets: [(usize, CoinState); 2],
    pub q: usize,
    pub q0: usize,
    pub initial: (usize, CoinState),
    pub walk: WalkParams,
    /// `|⟨target|U|initial⟩|²` for both targets.
    pub target_probabilities: [f64; 2],
}

fn lemma_error(
    positions: usize,
    a: (usize, CoinState),
    b: (usize, CoinState),
    reason: impl Into<String>,
) -> Error {
    Error::LemmaConstruction {
        positions,
        l: a.0,
        s: a.1.label(),
        l2: b.0,
        s2: b.1.label(),
        reason: reason.into(),
    }
}

/// Solves `q − q₀ ≡ l`, `q + q₀ ≡ l'` (mod P) with the smallest `|q₀|`, then walks from
/// `|q+1, R⟩` for `q₀ + 1` steps, adding steps until both targets carry amplitude.
pub fn lemma_walk(
    l: usize,
    s: CoinState,
    l2: usize,
    s2: CoinState,
    positions: usize,
) -> Result<LemmaWalk> {
    let (a, b) = ((l, s), (l2, s2));
    if positions % 2 == 0 {
        return Err(Error::EvenPositions(positions));
    }
    if l >= positions || l2 >= positions {
        return Err(Error::OutOfRange {
            what: "position",
            value: l.max(l2),
            bound: positions,
        });
    }
    let p = positions;
    let inv2 = (p + 1) / 2;
    let q = (l + l2) * inv2 % p;
    let mut q0 = (l2 + p - l) * inv2 % p;
    let mut targets = [a, b];
    if q0 > p / 2 {
        // negative representative: exchange the roles of the two targets
        q0 = p - q0;
        targets.swap(0, 1);
    }
    let initial = ((q + 1) % p, CoinState::R);
    let base = WalkParams::hadamard(p, 0)?;
    let mut amps = vec![Complex64::new(0.0, 0.0); 2 * p];
    amps[basis_index(initial.0, initial.1)] = Complex64::new(1.0, 0.0);
    let mut stepper = Stepper::new(&base);
    let limit = (p * p) as u64;
    let start = q0 as u64 + 1;
    for steps in 1..=limit.max(start) {
        stepper.forward(&mut amps);
        if steps < start {
            continue;
        }
        let probs = targets.map(|(x, c)| amps[basis_index(x, c)].norm_sqr());
        if probs.iter().all(|&v| v > TARGET_THRESHOLD) {
            return Ok(LemmaWalk {
                targets,
                q,
                q0,
                initial,
                walk: base.with_steps(steps),
                target_probabilities: probs,
            });
        }
        if steps >= limit {
            break;
        }
    }
    Err(lemma_error(
        p,
        a,
        b,
        format!("no step count in [{start}, {limit}] reaches both targets"),
    ))
}

/// One walk of the public set `𝒬`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QMember {
    pub walk: WalkParams,
    /// Lemma start state; `None` for the identity.
    pub initial: Option<(usize, CoinState)>,
}

impl QMember {
    pub fn is_identity(&self) -> bool {
        self.walk.steps() == 0
    }
}

/// Union of the lemma walks over all target pairs, plus the identity (listed first).
pub fn build_q_set(positions: usize) -> Result<Vec<QMember>> {
    if positions % 2 == 0 {
        return Err(Error::EvenPositions(positions));
    }
    let mut members = vec![QMember {
        walk: WalkParams::hadamard(positions, 0)?,
        initial: None,
    }];
    let mut seen = BTreeSet::new();
    let d = 2 * positions;
    for i in 0..d {
        for j in 0..d {
            let (l, s) = split_index(i);
            let (l2, s2) = split_index(j);
            let lw = lemma_walk(l, s, l2, s2, positions)?;
            let key = (lw.walk.steps(), basis_index(lw.initial.0, lw.initial.1));
            if seen.insert(key) {
                members.push(QMember {
                    walk: lw.walk,
                    initial: Some(lw.initial),
                });
            }
        }
    }
    Ok(members)
}

/// Per-key-round view passed to observers: Alice's symbol and the post-round joint state.
type KeyObserver<'a> = dyn FnMut(usize, &JointState) + 'a;

fn run<R: Rng>(
    config: &ProtocolConfig,
    q_set: &[QMember],
    channel: &ChannelModel,
    rng: &mut R,
    mut observer: Option<&mut KeyObserver<'_>>,
) -> Result<ProtocolTranscript> {
    config.validate()?;
    channel.check_positions(config.positions)?;
    if q_set.is_empty() {
        return Err(crate::error::invalid("the walk set is empty"));
    }
    if let Some(m) = q_set.iter().find(|m| m.walk.positions() != config.positions) {
        return Err(Error::DimensionMismatch {
            expected: 2 * config.positions,
            actual: m.walk.dim(),
        });
    }
    let d = 2 * config.positions;
    let draw = |rng: &mut dyn RngCore| q_set[rng.random_range(0..q_set.len())].walk.clone();
    let public = PublicWalks { walks: &draw };

    let mut records = Vec::with_capacity(config.iterations);
    let mut sifted = Vec::new();
    for index in 0..config.iterations {
        let member = rng.random_range(0..q_set.len());
        let l = rng.random_range(0..config.positions);
        let s = CoinState::from_index(rng.random_range(0..2));
        let walk = &q_set[member].walk;
        let mut state = JointState::basis(d, channel.ancilla_dim(), basis_index(l, s));
        state.evolve(walk);
        transmit(&mut state, channel, Leg::Forward, &public, rng);

        let bob = if rng.random_bool(0.5) {
            BobAction::MeasureResend
        } else {
            BobAction::Reflect
        };
        // measuring collapses the walker to |κ_B⟩, which Bob then resends
        let bob_outcome = (bob == BobAction::MeasureResend).then(|| state.measure_system(rng));
        transmit(&mut state, channel, Leg::Return, &public, rng);

        let alice = if rng.random_bool(0.5) {
            AliceAction::MeasureZ
        } else {
            AliceAction::InverseWalk
        };
        if alice == AliceAction::InverseWalk {
            state.inverse_evolve(walk);
        }
        let alice_outcome = state.measure_system(rng);

        let (tag, error) = match (bob, alice) {
            (BobAction::MeasureResend, AliceAction::MeasureZ) => {
                sifted.push(index);
                if let Some(obs) = observer.as_mut() {
                    obs(alice_outcome, &state);
                }
                (RoundTag::Key, Some(alice_outcome) != bob_outcome)
            }
            (BobAction::Reflect, AliceAction::InverseWalk) => {
                (RoundTag::Check, alice_outcome != basis_index(l, s))
            }
            _ => (RoundTag::Discarded, false),
        };
        records.push(IterationRecord {
            index,
            choices: RoundChoices::SemiQuantum {
                member,
                l,
                s,
                bob,
                alice,
                bob_outcome,
                alice_outcome,
            },
            tag,
            error,
        });
    }

    for j in sample(rng, sifted.len(), sifted.len() / 2) {
        records[sifted[j]].tag = RoundTag::KeyCheck;
    }
    let keys = records
        .iter()
        .filter(|r| r.tag == RoundTag::Key)
        .map(|r| match r.choices {
            RoundChoices::SemiQuantum {
                bob_outcome,
                alice_outcome,
                ..
            } => (alice_outcome, bob_outcome.expect("key rounds are measured by Bob")),
            _ => unreachable!(),
        })
        .collect();
    Ok(ProtocolTranscript::new(
        ProtocolKind::SemiQuantum,
        config.positions,
        config.seed,
        records,
        keys,
        (d as f64).log2(),
    ))
}

/// `N = iterations` rounds with walks drawn uniformly from `q_set`.
///
/// Measure-resend rounds answered by a `Z` measurement form the sifted key (each symbol
/// worth `1 + log2 P` bits), a random half of which is disclosed; reflect rounds answered
/// by the inverse walk are checked against Alice's `(l, s)`.
pub fn protocol3_run<R: Rng>(
    config: &ProtocolConfig,
    q_set: &[QMember],
    channel: &ChannelModel,
    rng: &mut R,
) -> Result<ProtocolTranscript> {
    run(config, q_set, channel, rng, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    /// Fraction of reflect/inverse check rounds that failed.
    pub detection_rate: f64,
    /// Mean pairwise trace distance between Eve's memory states conditioned on
    /// different key symbols.
    pub eve_info_proxy: f64,
    pub check_rounds: usize,
    pub check_errors: usize,
    pub key_rounds: usize,
    pub key_errors: usize,
}

/// Trace distance `½ ‖ρ − σ‖₁` of two density matrices.
pub fn trace_distance(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> f64 {
    let diff = rho - sigma;
    // symmetrize against rounding so the Hermitian solver sees an exact Hermitian input
    let herm = (&diff + diff.adjoint()) * Complex64::new(0.5, 0.0);
    0.5 * herm.symmetric_eigenvalues().iter().map(|v| v.abs()).sum::<f64>()
}

/// Runs the semi-quantum protocol against an entangling attack, tracking Eve's memory.
pub fn robustness_experiment<R: Rng>(
    q_set: &[QMember],
    attack: &EntanglingAttack,
    n: usize,
    rng: &mut R,
) -> Result<RobustnessReport> {
    let positions = attack.positions();
    let mut config = ProtocolConfig::new(ProtocolKind::SemiQuantum, positions, n);
    config.seed = 0;
    let channel = ChannelModel::Adversary(AttackModel {
        kind: AttackKind::EntanglingPair(Box::new(attack.clone())),
        leg: Leg::Both,
    });
    let d = 2 * positions;
    let d_e = attack.ancilla_dim();
    let mut sums = vec![ComplexMatrix::zeros(d_e, d_e); d];
    let mut counts = vec![0usize; d];
    let mut observe = |symbol: usize, state: &JointState| {
        let chi = nalgebra::DVector::from_vec(state.memory_state());
        sums[symbol] += &chi * chi.adjoint();
        counts[symbol] += 1;
    };
    let transcript = run(&config, q_set, &channel, rng, Some(&mut observe))?;

    let averaged: Vec<ComplexMatrix> = sums
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .map(|(m, &c)| m / Complex64::new(c as f64, 0.0))
        .collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..averaged.len() {
        for j in i + 1..averaged.len() {
            total += trace_distance(&averaged[i], &averaged[j]);
            pairs += 1;
        }
    }
    let a = &transcript.aggregates;
    Ok(RobustnessReport {
        detection_rate: a.check_failure_rate().unwrap_or(0.0),
        eve_info_proxy: if pairs > 0 { total / pairs as f64 } else { 0.0 },
        check_rounds: a.check_rounds,
        check_errors: a.check_errors,
        key_rounds: a.sifted,
        key_errors: a.key_errors + a.key_check_errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{evolve, StateVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lemma_equal_positions_needs_one_step() {
        for p in [1usize, 3, 5, 7] {
            for l in 0..p {
                let w = lemma_walk(l, CoinState::R, l, CoinState::L, p).unwrap();
                assert_eq!(w.q0, 0);
                assert_eq!(w.walk.steps(), 1);
                assert!((w.target_probabilities[0] - 0.5).abs() < 1e-12);
                assert!((w.target_probabilities[1] - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lemma_example_p5() {
        let w = lemma_walk(1, CoinState::R, 3, CoinState::L, 5).unwrap();
        assert_eq!((w.q, w.q0), (2, 1));
        let start = StateVector::basis(5, w.initial.0, w.initial.1).unwrap();
        let out = evolve(&start, &w.walk).unwrap();
        assert!(out.amplitude(1, CoinState::R).norm_sqr() > TARGET_THRESHOLD);
        assert!(out.amplitude(3, CoinState::L).norm_sqr() > TARGET_THRESHOLD);
    }

    #[test]
    fn lemma_rejects_bad_input() {
        assert!(matches!(
            lemma_walk(0, CoinState::R, 1, CoinState::R, 4),
            Err(Error::EvenPositions(4))
        ));
        assert!(lemma_walk(5, CoinState::R, 1, CoinState::R, 5).is_err());
    }

    #[test]
    fn q_set_small_cases() {
        let one = build_q_set(1).unwrap();
        assert_eq!(one.len(), 2);
        assert!(one[0].is_identity());
        assert_eq!(one[1].walk.steps(), 1);

        let three = build_q_set(3).unwrap();
        assert!(three.len() <= 37);
        assert!(three[0].is_identity());
    }

    #[test]
    fn reflect_rounds_recover_alice_state() {
        let q = build_q_set(3).unwrap();
        let config = ProtocolConfig::new(ProtocolKind::SemiQuantum, 3, 400);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = protocol3_run(&config, &q, &ChannelModel::Ideal, &mut rng).unwrap();
        assert!(t.aggregates.check_rounds > 0);
        assert_eq!(t.aggregates.check_errors, 0);
        assert_eq!(t.aggregates.key_errors, 0);
        assert_eq!(t.aggregates.key_check_errors, 0);
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states_is_one() {
        let mut a = ComplexMatrix::zeros(2, 2);
        let mut b = ComplexMatrix::zeros(2, 2);
        a[(0, 0)] = Complex64::new(1.0, 0.0);
        b[(1, 1)] = Complex64::new(1.0, 0.0);
        assert!((trace_distance(&a, &b) - 1.0).abs() < 1e-12);
        assert!(trace_distance(&a, &a).abs() < 1e-12);
    }

    #[test]
    fn identity_attack_is_invisible() {
        let q = build_q_set(3).unwrap();
        let attack = EntanglingAttack::identity(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let r = robustness_experiment(&q, &attack, 500, &mut rng).unwrap();
        assert_eq!(r.detection_rate, 0.0);
        assert_eq!(r.eve_info_proxy, 0.0);
    }
}
