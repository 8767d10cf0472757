//! JSON-facing run configuration.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{invalid, Error, Result};
use crate::walk::{Flip, StepOrder, WalkParams};

use super::channel::{AttackKind, AttackModel, ChannelModel, EntanglingAttack, Leg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    TwoWay,
    OneWay,
    SemiQuantum,
}

impl ProtocolKind {
    pub fn label(self) -> &'static str {
        match self {
            ProtocolKind::TwoWay => "two_way",
            ProtocolKind::OneWay => "one_way",
            ProtocolKind::SemiQuantum => "semi_quantum",
        }
    }
}

/// Parses `"0.4pi"`, `"pi/4"`-free decimal multiples of π, or plain radians.
pub fn parse_angle(text: &str) -> Result<f64> {
    let (t, divisor) = match text.trim().split_once('/') {
        Some((num, den)) => {
            let den: f64 = den
                .trim()
                .parse()
                .map_err(|_| invalid(format!("cannot parse angle '{text}'")))?;
            (num.trim(), den)
        }
        None => (text.trim(), 1.0),
    };
    let value = if let Some(mult) = t.strip_suffix("pi").or_else(|| t.strip_suffix("π")) {
        let mult = mult.trim().trim_end_matches('*');
        let m: f64 = if mult.is_empty() {
            1.0
        } else {
            mult.parse()
                .map_err(|_| invalid(format!("cannot parse angle '{text}'")))?
        };
        m * PI
    } else {
        t.parse()
            .map_err(|_| invalid(format!("cannot parse angle '{text}'")))?
    };
    let value = value / divisor;
    if !value.is_finite() {
        return Err(invalid(format!("angle '{text}' is not finite")));
    }
    Ok(value)
}

fn angle<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Number(x) => Ok(x),
        Raw::Text(s) => parse_angle(&s).map_err(serde::de::Error::custom),
    }
}

/// Walk used by the one-way protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkSpec {
    #[serde(deserialize_with = "angle")]
    pub theta: f64,
    #[serde(default, deserialize_with = "angle")]
    pub phi: f64,
    pub t: u64,
    #[serde(default = "flip_i", rename = "F")]
    pub flip: Flip,
    #[serde(default)]
    pub order: StepOrder,
}

fn flip_i() -> Flip {
    Flip::I
}

impl WalkSpec {
    pub fn build(&self, positions: usize) -> Result<WalkParams> {
        Ok(WalkParams::new(positions, self.theta, self.phi, self.t)?
            .with_flip(self.flip)
            .with_order(self.order))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntanglingPreset {
    Identity,
    ControlledShift,
    Random,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    #[default]
    Ideal,
    Pauli {
        error_weight: f64,
    },
    InterceptResendZ {
        #[serde(default)]
        leg: Leg,
    },
    InterceptResendW {
        #[serde(default)]
        leg: Leg,
    },
    ImpersonateMitm {
        #[serde(default)]
        leg: Leg,
    },
    Entangling {
        preset: EntanglingPreset,
        #[serde(default)]
        ancilla_dim: Option<usize>,
        #[serde(default)]
        leg: Leg,
        /// Seed for the random preset.
        #[serde(default)]
        seed: Option<u64>,
    },
}

impl ChannelSpec {
    pub fn build(&self, positions: usize) -> Result<ChannelModel> {
        let adversary = |kind, leg| Ok(ChannelModel::Adversary(AttackModel { kind, leg }));
        match self {
            ChannelSpec::Ideal => Ok(ChannelModel::Ideal),
            ChannelSpec::Pauli { error_weight } => ChannelModel::pauli(*error_weight, positions),
            ChannelSpec::InterceptResendZ { leg } => adversary(AttackKind::InterceptResendZ, *leg),
            ChannelSpec::InterceptResendW { leg } => adversary(AttackKind::InterceptResendW, *leg),
            ChannelSpec::ImpersonateMitm { leg } => adversary(AttackKind::ImpersonateMitm, *leg),
            ChannelSpec::Entangling {
                preset,
                ancilla_dim,
                leg,
                seed,
            } => {
                let attack = match preset {
                    EntanglingPreset::Identity => {
                        EntanglingAttack::identity(positions, ancilla_dim.unwrap_or(2 * positions))?
                    }
                    EntanglingPreset::ControlledShift => {
                        if ancilla_dim.is_some_and(|d| d != 2 * positions) {
                            return Err(invalid("controlled-shift attack needs ancilla_dim = 2P"));
                        }
                        EntanglingAttack::controlled_shift(positions)?
                    }
                    EntanglingPreset::Random => {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(crate::DEFAULT_SEED));
                        EntanglingAttack::random(
                            positions,
                            ancilla_dim.unwrap_or(2 * positions),
                            &mut rng,
                        )?
                    }
                };
                adversary(AttackKind::EntanglingPair(Box::new(attack)), *leg)
            }
        }
    }
}

fn default_k() -> usize {
    8
}

fn default_t_range() -> [u64; 2] {
    [1, 100]
}

fn default_seed() -> u64 {
    crate::DEFAULT_SEED
}

/// One protocol run. `iterations` is the number of states `m` (two-way) or rounds `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub protocol: ProtocolKind,
    #[serde(rename = "P")]
    pub positions: usize,
    /// Size of the coin-parameter set; `θ_k = 2πk/K`.
    #[serde(rename = "K", default = "default_k")]
    pub k: usize,
    /// Inclusive `[T_0, T_max]` for the step count.
    #[serde(default = "default_t_range")]
    pub t_range: [u64; 2],
    /// Coin phase shared by the two-way walk family.
    #[serde(default, deserialize_with = "angle")]
    pub phi: f64,
    pub iterations: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub walk: Option<WalkSpec>,
    #[serde(default)]
    pub channel: ChannelSpec,
    /// Run both cut-and-choose verifications in the two-way protocol.
    #[serde(default)]
    pub verify: bool,
}

impl ProtocolConfig {
    pub fn new(protocol: ProtocolKind, positions: usize, iterations: usize) -> Self {
        ProtocolConfig {
            protocol,
            positions,
            k: default_k(),
            t_range: default_t_range(),
            phi: 0.0,
            iterations,
            seed: default_seed(),
            walk: None,
            channel: ChannelSpec::Ideal,
            verify: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ProtocolConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions == 0 {
            return Err(invalid("cycle length P must be at least 1"));
        }
        if self.k == 0 {
            return Err(invalid("K must be at least 1"));
        }
        if self.t_range[0] > self.t_range[1] {
            return Err(invalid("t_range must satisfy T_0 ≤ T_max"));
        }
        if self.iterations == 0 {
            return Err(invalid("iterations must be positive"));
        }
        if !self.phi.is_finite() {
            return Err(invalid("phi must be finite"));
        }
        match self.protocol {
            ProtocolKind::TwoWay => {
                if self.verify && self.iterations % 3 != 0 {
                    return Err(invalid("verified two-way runs need m divisible by 3"));
                }
            }
            ProtocolKind::OneWay => {
                if self.positions % 2 == 0 {
                    return Err(Error::EvenPositions(self.positions));
                }
            }
            ProtocolKind::SemiQuantum => {
                if self.positions % 2 == 0 {
                    return Err(Error::EvenPositions(self.positions));
                }
            }
        }
        Ok(())
    }

    /// Non-fatal remarks about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.protocol == ProtocolKind::TwoWay {
            let key_bits = self.iterations as f64 * (self.positions as f64).log2();
            if (self.k as f64).log2() < key_bits {
                out.push(format!(
                    "K = {} is not exponential in the {:.1}-bit key; the walk family is small",
                    self.k, key_bits
                ));
            }
        }
        out
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}
