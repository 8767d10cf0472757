//! Per-iteration records and aggregate statistics of a protocol run.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::walk::CoinState;

use super::ProtocolKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundTag {
    /// Contributes to the final key.
    Key,
    /// Sifted key round disclosed to estimate errors.
    KeyCheck,
    /// Dedicated test round (verification, reflect/inverse check).
    Check,
    Discarded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BobAction {
    MeasureResend,
    Reflect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AliceAction {
    MeasureZ,
    InverseWalk,
}

/// What each party chose and observed in one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
pub enum RoundChoices {
    TwoWay {
        k: usize,
        t: u64,
        l: usize,
        s: CoinState,
        /// Bob's translation.
        #[serde(skip_serializing_if = "Option::is_none")]
        r: Option<usize>,
        /// Alice's position outcome after undoing the walk.
        #[serde(skip_serializing_if = "Option::is_none")]
        position: Option<usize>,
        /// `position − l mod P`.
        #[serde(skip_serializing_if = "Option::is_none")]
        recovered: Option<usize>,
        /// Bob's outcome when he checks a disclosed state.
        #[serde(skip_serializing_if = "Option::is_none")]
        verified: Option<usize>,
    },
    OneWay {
        w_a: u8,
        w_b: u8,
        sent: usize,
        received: usize,
    },
    SemiQuantum {
        member: usize,
        l: usize,
        s: CoinState,
        bob: BobAction,
        alice: AliceAction,
        bob_outcome: Option<usize>,
        alice_outcome: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: usize,
    #[serde(flatten)]
    pub choices: RoundChoices,
    pub tag: RoundTag,
    /// The parties' symbols disagree (key rounds) or the test failed (check rounds).
    pub error: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregates {
    pub iterations: usize,
    /// Rounds surviving sifting (key plus key-check rounds).
    pub sifted: usize,
    pub bits_per_symbol: f64,
    /// `sifted · bits_per_symbol`.
    pub raw_key_bits: f64,
    pub key_alice: Vec<usize>,
    pub key_bob: Vec<usize>,
    /// Disagreements in the undisclosed key (visible only to the simulator).
    pub key_errors: usize,
    pub key_check_rounds: usize,
    pub key_check_errors: usize,
    pub check_rounds: usize,
    pub check_errors: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key_rate: Option<f64>,
    /// Outcome of the verification stages, where the protocol has them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification_passed: Option<bool>,
}

impl Aggregates {
    /// Some disclosed round disagreed.
    pub fn detected(&self) -> bool {
        self.check_errors > 0
            || self.key_check_errors > 0
            || self.verification_passed == Some(false)
    }

    pub fn check_failure_rate(&self) -> Option<f64> {
        (self.check_rounds > 0).then(|| self.check_errors as f64 / self.check_rounds as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTranscript {
    pub protocol: ProtocolKind,
    #[serde(rename = "P")]
    pub positions: usize,
    pub seed: u64,
    pub records: Vec<IterationRecord>,
    pub aggregates: Aggregates,
}

impl ProtocolTranscript {
    /// Fills the key-related aggregates from the records.
    pub(crate) fn new(
        protocol: ProtocolKind,
        positions: usize,
        seed: u64,
        records: Vec<IterationRecord>,
        keys: Vec<(usize, usize)>,
        bits_per_symbol: f64,
    ) -> Self {
        let count = |tag: RoundTag| records.iter().filter(|r| r.tag == tag).count();
        let errors = |tag: RoundTag| records.iter().filter(|r| r.tag == tag && r.error).count();
        let sifted = count(RoundTag::Key) + count(RoundTag::KeyCheck);
        let (key_alice, key_bob): (Vec<_>, Vec<_>) = keys.into_iter().unzip();
        let aggregates = Aggregates {
            iterations: records.len(),
            sifted,
            bits_per_symbol,
            raw_key_bits: sifted as f64 * bits_per_symbol,
            key_errors: key_alice.iter().zip(&key_bob).filter(|(a, b)| a != b).count(),
            key_alice,
            key_bob,
            key_check_rounds: count(RoundTag::KeyCheck),
            key_check_errors: errors(RoundTag::KeyCheck),
            check_rounds: count(RoundTag::Check),
            check_errors: errors(RoundTag::Check),
            ..Default::default()
        };
        ProtocolTranscript {
            protocol,
            positions,
            seed,
            records,
            aggregates,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let a = &self.aggregates;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SUMMARY_HEADER)?;
        w.write_record([
            self.protocol.label().to_string(),
            self.positions.to_string(),
            self.seed.to_string(),
            a.iterations.to_string(),
            a.sifted.to_string(),
            format!("{:.6}", a.raw_key_bits),
            a.key_alice.len().to_string(),
            a.key_errors.to_string(),
            a.check_rounds.to_string(),
            a.check_errors.to_string(),
            a.key_check_rounds.to_string(),
            a.key_check_errors.to_string(),
            opt(a.q_z),
            opt(a.q_w),
            opt(a.key_rate),
            a.verification_passed.map(|b| b.to_string()).unwrap_or_default(),
        ])?;
        w.flush()?;
        Ok(())
    }
}

pub const SUMMARY_HEADER: [&str; 16] = [
    "protocol",
    "P",
    "seed",
    "iterations",
    "sifted",
    "raw_key_bits",
    "key_symbols",
    "key_errors",
    "check_rounds",
    "check_errors",
    "key_check_rounds",
    "key_check_errors",
    "Q_Z",
    "Q_W",
    "key_rate",
    "verification_passed",
];
