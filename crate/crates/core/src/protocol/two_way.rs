//! Two-way protocol: Alice's walk states carry Bob's translation back to her.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::walk::{basis_index, CoinState, WalkParams};
use crate::ComplexMatrix;

use super::channel::{transmit, AttackKind, AttackModel, ChannelModel, JointState, Leg, PublicWalks};
use super::transcript::{IterationRecord, ProtocolTranscript, RoundChoices, RoundTag};
use super::{ProtocolConfig, ProtocolKind};

/// Walk `U_k^t` of the public family, `θ_k = 2πk/K`.
pub fn family_walk(config: &ProtocolConfig, k: usize, t: u64) -> Result<WalkParams> {
    WalkParams::new(
        config.positions,
        2.0 * PI * k as f64 / config.k as f64,
        config.phi,
        t,
    )
}

fn draw_walk(config: &ProtocolConfig, rng: &mut dyn RngCore) -> (usize, u64) {
    let k = rng.random_range(1..=config.k);
    let t = rng.random_range(config.t_range[0]..=config.t_range[1]);
    (k, t)
}

fn translate_in_place(amps: &mut [Complex64], r: usize) {
    let p = amps.len() / 2;
    let src = amps.to_vec();
    for (i, a) in src.into_iter().enumerate() {
        let (x, s) = (i / 2, i % 2);
        amps[2 * ((x + r) % p) + s] = a;
    }
}

/// A state Alice prepared and sent; Bob holds `state`.
#[derive(Debug, Clone)]
pub struct PreparedState {
    pub index: usize,
    pub k: usize,
    pub t: u64,
    pub l: usize,
    pub s: CoinState,
    pub state: JointState,
}

/// Secret walk parameters Alice discloses for a checked state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisclosedState {
    pub index: usize,
    pub k: usize,
    pub t: u64,
    pub l: usize,
    pub s: CoinState,
}

fn with_family<T>(
    config: &ProtocolConfig,
    f: impl FnOnce(&PublicWalks<'_>) -> T,
) -> T {
    let draw = |rng: &mut dyn RngCore| {
        let (k, t) = draw_walk(config, rng);
        family_walk(config, k, t).expect("validated configuration")
    };
    f(&PublicWalks { walks: &draw })
}

fn prepare<R: Rng>(
    config: &ProtocolConfig,
    channel: &ChannelModel,
    public: &PublicWalks<'_>,
    index: usize,
    rng: &mut R,
) -> Result<PreparedState> {
    let (k, t) = draw_walk(config, rng);
    let l = rng.random_range(0..config.positions);
    let s = CoinState::from_index(rng.random_range(0..2));
    let walk = family_walk(config, k, t)?;
    let mut state = JointState::basis(
        2 * config.positions,
        channel.ancilla_dim(),
        basis_index(l, s),
    );
    state.evolve(&walk);
    transmit(&mut state, channel, Leg::Forward, public, rng);
    Ok(PreparedState {
        index,
        k,
        t,
        l,
        s,
        state,
    })
}

struct Returned {
    r: usize,
    position: usize,
    recovered: usize,
}

/// Bob encrypts `r`, the state travels back, Alice undoes the walk and reads the position.
fn encrypt_and_return<R: Rng>(
    config: &ProtocolConfig,
    channel: &ChannelModel,
    public: &PublicWalks<'_>,
    mut prepared: PreparedState,
    rng: &mut R,
) -> Result<Returned> {
    let p = config.positions;
    let r = rng.random_range(0..p);
    prepared.state.map_system(|b| translate_in_place(b, r));
    transmit(&mut prepared.state, channel, Leg::Return, public, rng);
    let walk = family_walk(config, prepared.k, prepared.t)?;
    prepared.state.inverse_evolve(&walk);
    let position = prepared.state.measure_system(rng) / 2;
    Ok(Returned {
        r,
        position,
        recovered: (position + p - prepared.l) % p,
    })
}

fn check_config(config: &ProtocolConfig, channel: &ChannelModel) -> Result<()> {
    config.validate()?;
    channel.check_positions(config.positions)
}

/// Runs `m = iterations` rounds without verification; every round yields a key symbol.
pub fn protocol1_run<R: Rng>(
    config: &ProtocolConfig,
    channel: &ChannelModel,
    rng: &mut R,
) -> Result<ProtocolTranscript> {
    check_config(config, channel)?;
    with_family(config, |public| {
        let mut records = Vec::with_capacity(config.iterations);
        let mut keys = Vec::with_capacity(config.iterations);
        for index in 0..config.iterations {
            let prepared = prepare(config, channel, public, index, rng)?;
            let (k, t, l, s) = (prepared.k, prepared.t, prepared.l, prepared.s);
            let back = encrypt_and_return(config, channel, public, prepared, rng)?;
            records.push(IterationRecord {
                index,
                choices: RoundChoices::TwoWay {
                    k,
                    t,
                    l,
                    s,
                    r: Some(back.r),
                    position: Some(back.position),
                    recovered: Some(back.recovered),
                    verified: None,
                },
                tag: RoundTag::Key,
                error: back.recovered != back.r,
            });
            keys.push((back.recovered, back.r));
        }
        Ok(ProtocolTranscript::new(
            ProtocolKind::TwoWay,
            config.positions,
            config.seed,
            records,
            keys,
            (config.positions as f64).log2(),
        ))
    })
}

#[derive(Debug, Clone)]
pub struct Verification1 {
    /// No disclosed state failed.
    pub passed: bool,
    pub failures: usize,
    pub disclosed: Vec<DisclosedState>,
    /// Bob's outcome index for each disclosed state.
    pub outcomes: Vec<usize>,
    /// States kept for the key, in sending order.
    pub surviving: Vec<PreparedState>,
}

/// Alice sends `m` states and discloses a random third; Bob undoes each disclosed walk
/// and checks that he finds `|l_j, s_j⟩`.
pub fn verification1<R: Rng>(
    config: &ProtocolConfig,
    channel: &ChannelModel,
    rng: &mut R,
) -> Result<Verification1> {
    check_config(config, channel)?;
    let m = config.iterations;
    if m % 3 != 0 {
        return Err(invalid("verification needs m divisible by 3"));
    }
    with_family(config, |public| {
        let mut states = Vec::with_capacity(m);
        for index in 0..m {
            states.push(Some(prepare(config, channel, public, index, rng)?));
        }
        let mut chosen = sample(rng, m, m / 3).into_vec();
        chosen.sort_unstable();
        let mut disclosed = Vec::with_capacity(chosen.len());
        let mut outcomes = Vec::with_capacity(chosen.len());
        let mut failures = 0;
        for j in chosen {
            let mut p = states[j].take().expect("each index disclosed once");
            let walk = family_walk(config, p.k, p.t)?;
            p.state.inverse_evolve(&walk);
            let outcome = p.state.measure_system(rng);
            if outcome != basis_index(p.l, p.s) {
                failures += 1;
            }
            outcomes.push(outcome);
            disclosed.push(DisclosedState {
                index: j,
                k: p.k,
                t: p.t,
                l: p.l,
                s: p.s,
            });
        }
        Ok(Verification1 {
            passed: failures == 0,
            failures,
            disclosed,
            outcomes,
            surviving: states.into_iter().flatten().collect(),
        })
    })
}

#[derive(Debug, Clone)]
pub struct Verification2 {
    pub passed: bool,
    pub failures: usize,
    /// Indices (into the sending order) of the states Bob disclosed.
    pub disclosed: Vec<usize>,
    pub key_alice: Vec<usize>,
    pub key_bob: Vec<usize>,
    /// `key length · log2 P`.
    pub key_bits: f64,
    /// Per surviving state: `(index, r, position, recovered, disclosed)`.
    pub rounds: Vec<(usize, usize, usize, usize, bool)>,
}

/// Bob encrypts a key symbol into every surviving state and discloses a random half;
/// Alice's decoded symbols must match the disclosed ones.
pub fn verification2<R: Rng>(
    config: &ProtocolConfig,
    channel: &ChannelModel,
    rng: &mut R,
    surviving: Vec<PreparedState>,
) -> Result<Verification2> {
    check_config(config, channel)?;
    with_family(config, |public| {
        let n = surviving.len();
        let mut rounds = Vec::with_capacity(n);
        for p in surviving {
            let index = p.index;
            let back = encrypt_and_return(config, channel, public, p, rng)?;
            rounds.push((index, back.r, back.position, back.recovered, false));
        }
        let mut failures = 0;
        let mut disclosed = Vec::new();
        for j in sample(rng, n, n / 2) {
            rounds[j].4 = true;
            disclosed.push(rounds[j].0);
            if rounds[j].1 != rounds[j].3 {
                failures += 1;
            }
        }
        disclosed.sort_unstable();
        let (key_alice, key_bob): (Vec<_>, Vec<_>) = rounds
            .iter()
            .filter(|r| !r.4)
            .map(|r| (r.3, r.1))
            .unzip();
        let key_bits = key_alice.len() as f64 * (config.positions as f64).log2();
        Ok(Verification2 {
            passed: failures == 0,
            failures,
            disclosed,
            key_alice,
            key_bob,
            key_bits,
            rounds,
        })
    })
}

/// Both verifications followed by key extraction; stops after a failed first verification.
pub fn protocol1_verified_run<R: Rng>(
    config: &ProtocolConfig,
    channel: &ChannelModel,
    rng: &mut R,
) -> Result<ProtocolTranscript> {
    let v1 = verification1(config, channel, rng)?;
    let mut records: Vec<Option<IterationRecord>> = vec![None; config.iterations];
    for (d, &outcome) in v1.disclosed.iter().zip(&v1.outcomes) {
        records[d.index] = Some(IterationRecord {
            index: d.index,
            choices: RoundChoices::TwoWay {
                k: d.k,
                t: d.t,
                l: d.l,
                s: d.s,
                r: None,
                position: None,
                recovered: None,
                verified: Some(outcome),
            },
            tag: RoundTag::Check,
            error: outcome != basis_index(d.l, d.s),
        });
    }
    let secrets: Vec<_> = v1.surviving.iter().map(|p| (p.index, p.k, p.t, p.l, p.s)).collect();
    let bits = (config.positions as f64).log2();
    let mut keys = Vec::new();
    let passed;
    if v1.passed {
        let v2 = verification2(config, channel, rng, v1.surviving)?;
        for (&(index, k, t, l, s), &(_, r, position, recovered, shown)) in
            secrets.iter().zip(&v2.rounds)
        {
            records[index] = Some(IterationRecord {
                index,
                choices: RoundChoices::TwoWay {
                    k,
                    t,
                    l,
                    s,
                    r: Some(r),
                    position: Some(position),
                    recovered: Some(recovered),
                    verified: None,
                },
                tag: if shown { RoundTag::KeyCheck } else { RoundTag::Key },
                error: recovered != r,
            });
        }
        keys = v2.key_alice.into_iter().zip(v2.key_bob).collect();
        passed = v2.passed;
    } else {
        for &(index, k, t, l, s) in &secrets {
            records[index] = Some(IterationRecord {
                index,
                choices: RoundChoices::TwoWay {
                    k,
                    t,
                    l,
                    s,
                    r: None,
                    position: None,
                    recovered: None,
                    verified: None,
                },
                tag: RoundTag::Discarded,
                error: false,
            });
        }
        passed = false;
    }
    let records = records.into_iter().map(|r| r.expect("every round recorded")).collect();
    let mut transcript = ProtocolTranscript::new(
        ProtocolKind::TwoWay,
        config.positions,
        config.seed,
        records,
        keys,
        bits,
    );
    transcript.aggregates.verification_passed = Some(passed);
    Ok(transcript)
}

/// Conjugate basis for the entanglement check: Walsh–Hadamard when the dimension is a
/// power of two (a product of qubit `X` bases), Fourier otherwise. Columns are basis vectors.
pub fn conjugate_basis(dim: usize) -> ComplexMatrix {
    let norm = 1.0 / (dim as f64).sqrt();
    if dim.is_power_of_two() {
        ComplexMatrix::from_fn(dim, dim, |i, j| {
            let sign = if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            Complex64::new(sign * norm, 0.0)
        })
    } else {
        ComplexMatrix::from_fn(dim, dim, |i, j| {
            Complex64::from_polar(norm, 2.0 * PI * ((i * j) % dim) as f64 / dim as f64)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellOutcome {
    pub passed: bool,
    pub z_checks: usize,
    pub z_agreement: f64,
    pub conjugate_checks: usize,
    pub conjugate_agreement: f64,
}

/// Dual-basis test of `(1/√(2P)) Σ_i |i, i⟩` after its second half crosses the channel.
///
/// Even-numbered checks measure both halves in the computational basis, odd-numbered
/// ones in the conjugate basis (Alice in its complex conjugate, so that the ideal state
/// gives equal outcomes). Passes when both agreement rates reach `1 − epsilon`.
pub fn bell_verification<R: Rng>(
    positions: usize,
    n_checks: usize,
    epsilon: f64,
    channel: &ChannelModel,
    rng: &mut R,
) -> Result<BellOutcome> {
    if positions == 0 || n_checks == 0 {
        return Err(invalid("need P ≥ 1 and at least one check"));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(invalid("epsilon must lie in [0, 1]"));
    }
    if let ChannelModel::Adversary(AttackModel {
        kind: AttackKind::EntanglingPair(_) | AttackKind::InterceptResendW,
        ..
    }) = channel
    {
        return Err(invalid("the entanglement check supports Z and substitution attacks only"));
    }
    channel.check_positions(positions)?;
    let d = 2 * positions;
    let f = conjugate_basis(d);
    let f_conj = f.map(|z| z.conj());
    let no_walks = |_: &mut dyn RngCore| -> WalkParams { unreachable!("no walk-basis attack") };
    let public = PublicWalks { walks: &no_walks };

    let (mut z_checks, mut z_hits, mut x_checks, mut x_hits) = (0usize, 0usize, 0usize, 0usize);
    for j in 0..n_checks {
        // Alice's half indexes the memory slot, the travelling half is the walker.
        let mut amps = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            amps[i * d + i] = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
        }
        let mut state = JointState::from_amplitudes(d, d, amps)?;
        transmit(&mut state, channel, Leg::Forward, &public, rng);
        // m[(a, b)]: a = Alice, b = Bob
        let m = ComplexMatrix::from_fn(d, d, |a, b| state.amplitudes()[a * d + b]);
        let amps = if j % 2 == 0 {
            m
        } else {
            // ⟨f̄_a| ⊗ ⟨f_b| applied to the state
            f.transpose() * m * &f_conj
        };
        let probs: Vec<f64> = amps.transpose().iter().map(|z| z.norm_sqr()).collect();
        let outcome = crate::walk::sample_index(&probs, rng);
        let agree = outcome / d == outcome % d;
        if j % 2 == 0 {
            z_checks += 1;
            z_hits += agree as usize;
        } else {
            x_checks += 1;
            x_hits += agree as usize;
        }
    }
    let rate = |hits: usize, n: usize| if n == 0 { 1.0 } else { hits as f64 / n as f64 };
    let z_agreement = rate(z_hits, z_checks);
    let conjugate_agreement = rate(x_hits, x_checks);
    Ok(BellOutcome {
        passed: z_agreement >= 1.0 - epsilon && conjugate_agreement >= 1.0 - epsilon,
        z_checks,
        z_agreement,
        conjugate_checks: x_checks,
        conjugate_agreement,
    })
}
