//! Discrete-event simulation of the three key-distribution protocols.
//!
//! * [`two_way`]: Alice's secret walk hides Bob's translation key; cut-and-choose and
//!   entanglement verifications.
//! * [`one_way`]: prepare-and-measure in the computational and walk bases.
//! * [`semi_quantum`]: Bob restricted to measure-resend or reflect, the lemma walk set
//!   and robustness experiments against entangling attacks.
//!
//! Every run is driven by a caller-supplied random source; seeding it from
//! [`ProtocolConfig::seed`] makes a transcript exactly reproducible.

pub mod channel;
pub mod config;
pub mod one_way;
pub mod semi_quantum;
pub mod transcript;
pub mod two_way;

pub use channel::{AttackKind, AttackModel, ChannelModel, EntanglingAttack, JointState, Leg};
pub use config::{parse_angle, ChannelSpec, EntanglingPreset, ProtocolConfig, ProtocolKind, WalkSpec};
pub use one_way::protocol2_run;
pub use semi_quantum::{
    build_q_set, lemma_walk, protocol3_run, robustness_experiment, LemmaWalk, QMember,
    RobustnessReport,
};
pub use transcript::{Aggregates, IterationRecord, ProtocolTranscript, RoundChoices, RoundTag};
pub use two_way::{
    bell_verification, protocol1_run, protocol1_verified_run, verification1, verification2,
    BellOutcome,
};

use crate::error::{invalid, Result};

/// Runs the protocol described by `config`, seeding the random source from it.
pub fn run_protocol(config: &ProtocolConfig) -> Result<ProtocolTranscript> {
    config.validate()?;
    let channel = config.channel.build(config.positions)?;
    let mut rng = config.rng();
    match config.protocol {
        ProtocolKind::TwoWay if config.verify => protocol1_verified_run(config, &channel, &mut rng),
        ProtocolKind::TwoWay => protocol1_run(config, &channel, &mut rng),
        ProtocolKind::OneWay => {
            let walk = config
                .walk
                .as_ref()
                .ok_or_else(|| invalid("the one-way protocol needs a 'walk' section"))?
                .build(config.positions)?;
            protocol2_run(config, &walk, &channel, &mut rng)
        }
        ProtocolKind::SemiQuantum => {
            let q_set = build_q_set(config.positions)?;
            protocol3_run(config, &q_set, &channel, &mut rng)
        }
    }
}
