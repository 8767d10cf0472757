//! One-way protocol: BB84-style sifting between the computational and walk bases.

use rand::seq::index::sample;
use rand::{Rng, RngCore};

use crate::error::Result;
use crate::security::{key_rate, overlap_constant, symmetric_error_entropy};
use crate::walk::WalkParams;

use super::channel::{transmit, ChannelModel, JointState, Leg, PublicWalks};
use super::transcript::{IterationRecord, ProtocolTranscript, RoundChoices, RoundTag};
use super::{ProtocolConfig, ProtocolKind};

/// `N = iterations` rounds with the public walk `walk`.
///
/// Alice sends `|i_A⟩` (`w_A = 0`) or `U^t (I ⊗ F) |i_A⟩` (`w_A = 1`); Bob measures in
/// the matching basis for `w_B`. Rounds with `w_A = w_B` are kept; a random half of them
/// is disclosed to estimate `Q_Z` and `Q_W`, from which the asymptotic rate is reported.
pub fn protocol2_run<R: Rng>(
    config: &ProtocolConfig,
    walk: &WalkParams,
    channel: &ChannelModel,
    rng: &mut R,
) -> Result<ProtocolTranscript> {
    config.validate()?;
    channel.check_positions(config.positions)?;
    if walk.positions() != config.positions {
        return Err(crate::Error::DimensionMismatch {
            expected: 2 * config.positions,
            actual: walk.dim(),
        });
    }
    let d = 2 * config.positions;
    let public_walk = walk.clone();
    let draw = move |_: &mut dyn RngCore| public_walk.clone();
    let public = PublicWalks { walks: &draw };

    let mut rounds = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        let w_a = rng.random_range(0..2u8);
        let w_b = rng.random_range(0..2u8);
        let sent = rng.random_range(0..d);
        let mut state = JointState::basis(d, channel.ancilla_dim(), sent);
        if w_a == 1 {
            state.evolve(walk);
        }
        transmit(&mut state, channel, Leg::Forward, &public, rng);
        if w_b == 1 {
            state.inverse_evolve(walk);
        }
        let received = state.measure_system(rng);
        rounds.push((w_a, w_b, sent, received));
    }

    let sifted: Vec<usize> = (0..rounds.len())
        .filter(|&i| rounds[i].0 == rounds[i].1)
        .collect();
    let mut disclosed = vec![false; rounds.len()];
    for j in sample(rng, sifted.len(), sifted.len() / 2) {
        disclosed[sifted[j]] = true;
    }

    let mut records = Vec::with_capacity(rounds.len());
    let mut keys = Vec::new();
    let mut checks = [(0usize, 0usize); 2];
    for (index, &(w_a, w_b, sent, received)) in rounds.iter().enumerate() {
        let error = sent != received;
        let tag = if w_a != w_b {
            RoundTag::Discarded
        } else if disclosed[index] {
            let c = &mut checks[w_a as usize];
            c.0 += 1;
            c.1 += error as usize;
            RoundTag::KeyCheck
        } else {
            keys.push((sent, received));
            RoundTag::Key
        };
        records.push(IterationRecord {
            index,
            choices: RoundChoices::OneWay {
                w_a,
                w_b,
                sent,
                received,
            },
            tag,
            error: error && tag != RoundTag::Discarded,
        });
    }

    let mut transcript = ProtocolTranscript::new(
        ProtocolKind::OneWay,
        config.positions,
        config.seed,
        records,
        keys,
        (d as f64).log2(),
    );
    let rate = |(n, e): (usize, usize)| (n > 0).then(|| e as f64 / n as f64);
    let (q_z, q_w) = (rate(checks[0]), rate(checks[1]));
    let a = &mut transcript.aggregates;
    a.q_z = q_z;
    a.q_w = q_w;
    if let (Some(qz), Some(qw)) = (q_z, q_w) {
        let c = overlap_constant(walk);
        a.key_rate = key_rate(
            c,
            symmetric_error_entropy(qz, d),
            symmetric_error_entropy(qw, d),
        )
        .ok();
    }
    Ok(transcript)
}
