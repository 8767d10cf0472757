//! Quantum channel between the parties: noise and eavesdroppers.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::security::{apply_pauli, PauliChannel};
use crate::walk::{evolve_in_place, inverse_evolve_in_place, sample_index, WalkParams};
use crate::ComplexMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const UNITARY_TOLERANCE: f64 = 1e-10;

/// Which transmission an adversary acts on in a two-pass protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leg {
    /// Alice to Bob.
    Forward,
    /// Bob back to Alice.
    Return,
    #[default]
    Both,
}

impl Leg {
    pub fn covers(self, leg: Leg) -> bool {
        self == Leg::Both || self == leg
    }
}

/// Entangling attack: `U_F` on the forward pass and `U_R` on the return pass,
/// both acting on the walker and Eve's `d_E`-dimensional memory.
///
/// Joint basis index is `e · 2P + i` for walker index `i` and memory index `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntanglingAttack {
    positions: usize,
    ancilla_dim: usize,
    forward: ComplexMatrix,
    reverse: ComplexMatrix,
}

fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - ComplexMatrix::identity(n, n)).camax()
}

/// Haar-random unitary from the QR decomposition of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let z = ComplexMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

impl EntanglingAttack {
    pub fn new(
        positions: usize,
        ancilla_dim: usize,
        forward: ComplexMatrix,
        reverse: ComplexMatrix,
    ) -> Result<Self> {
        if positions == 0 || ancilla_dim == 0 {
            return Err(invalid("attack dimensions must be positive"));
        }
        let n = 2 * positions * ancilla_dim;
        for u in [&forward, &reverse] {
            if u.nrows() != n || u.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: u.nrows(),
                });
            }
            let defect = unitarity_defect(u);
            if defect > UNITARY_TOLERANCE {
                return Err(Error::NotUnitary(defect));
            }
        }
        Ok(EntanglingAttack {
            positions,
            ancilla_dim,
            forward,
            reverse,
        })
    }

    /// `U_F = U_R = I`.
    pub fn identity(positions: usize, ancilla_dim: usize) -> Result<Self> {
        let n = 2 * positions * ancilla_dim;
        Self::new(
            positions,
            ancilla_dim,
            ComplexMatrix::identity(n, n),
            ComplexMatrix::identity(n, n),
        )
    }

    /// `U_F |i, e⟩ = |i, e + i mod 2P⟩` with `d_E = 2P`; `U_R = I`.
    pub fn controlled_shift(positions: usize) -> Result<Self> {
        let d = 2 * positions;
        let n = d * d;
        let mut forward = ComplexMatrix::zeros(n, n);
        for e in 0..d {
            for i in 0..d {
                forward[(((e + i) % d) * d + i, e * d + i)] = ONE;
            }
        }
        Self::new(positions, d, forward, ComplexMatrix::identity(n, n))
    }

    /// Independent Haar-random `U_F` and `U_R`.
    pub fn random<R: Rng + ?Sized>(positions: usize, ancilla_dim: usize, rng: &mut R) -> Result<Self> {
        let n = 2 * positions * ancilla_dim;
        let forward = random_unitary(n, rng);
        let reverse = random_unitary(n, rng);
        Self::new(positions, ancilla_dim, forward, reverse)
    }

    pub fn positions(&self) -> usize {
        self.positions
    }

    pub fn ancilla_dim(&self) -> usize {
        self.ancilla_dim
    }

    pub fn forward(&self) -> &ComplexMatrix {
        &self.forward
    }

    pub fn reverse(&self) -> &ComplexMatrix {
        &self.reverse
    }
}

/// Eavesdropping strategies.
#[derive(Debug, Clone, PartialEq)]
pub enum AttackKind {
    /// Measure in the computational basis, resend the outcome.
    InterceptResendZ,
    /// Measure in the walk basis of a walk drawn from the public family, resend the outcome.
    InterceptResendW,
    /// Discard the transmitted state and send a uniformly random basis state instead.
    ImpersonateMitm,
    EntanglingPair(Box<EntanglingAttack>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackModel {
    pub kind: AttackKind,
    pub leg: Leg,
}

impl AttackModel {
    pub fn new(kind: AttackKind) -> Self {
        AttackModel {
            kind,
            leg: Leg::Both,
        }
    }

    pub fn on(mut self, leg: Leg) -> Self {
        self.leg = leg;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum ChannelModel {
    #[default]
    Ideal,
    Pauli(PauliChannel),
    Adversary(AttackModel),
}

impl ChannelModel {
    pub fn pauli(error_weight: f64, positions: usize) -> Result<Self> {
        Ok(ChannelModel::Pauli(PauliChannel::from_error_weight(error_weight, positions)?))
    }

    pub fn attack(kind: AttackKind) -> Self {
        ChannelModel::Adversary(AttackModel::new(kind))
    }

    pub fn ancilla_dim(&self) -> usize {
        match self {
            ChannelModel::Adversary(AttackModel {
                kind: AttackKind::EntanglingPair(a),
                ..
            }) => a.ancilla_dim(),
            _ => 1,
        }
    }

    pub(crate) fn check_positions(&self, positions: usize) -> Result<()> {
        let actual = match self {
            ChannelModel::Ideal => return Ok(()),
            ChannelModel::Pauli(ch) => ch.positions(),
            ChannelModel::Adversary(AttackModel {
                kind: AttackKind::EntanglingPair(a),
                ..
            }) => a.positions(),
            ChannelModel::Adversary(_) => return Ok(()),
        };
        if actual != positions {
            return Err(Error::DimensionMismatch {
                expected: 2 * positions,
                actual: 2 * actual,
            });
        }
        Ok(())
    }
}

/// Walker plus Eve's memory as a pure state, index `e · 2P + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    sys_dim: usize,
    anc_dim: usize,
    amps: Vec<Complex64>,
}

impl JointState {
    /// `|index⟩ ⊗ |0⟩`.
    pub fn basis(sys_dim: usize, anc_dim: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; sys_dim * anc_dim];
        amps[index] = ONE;
        JointState {
            sys_dim,
            anc_dim,
            amps,
        }
    }

    pub fn from_amplitudes(sys_dim: usize, anc_dim: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != sys_dim * anc_dim {
            return Err(Error::DimensionMismatch {
                expected: sys_dim * anc_dim,
                actual: amps.len(),
            });
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > crate::walk::NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(JointState {
            sys_dim,
            anc_dim,
            amps,
        })
    }

    pub fn sys_dim(&self) -> usize {
        self.sys_dim
    }

    pub fn anc_dim(&self) -> usize {
        self.anc_dim
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Applies the same walker operation to every memory branch.
    pub fn map_system(&mut self, mut f: impl FnMut(&mut [Complex64])) {
        for branch in self.amps.chunks_exact_mut(self.sys_dim) {
            f(branch);
        }
    }

    pub fn evolve(&mut self, walk: &WalkParams) {
        self.map_system(|b| evolve_in_place(b, walk));
    }

    pub fn inverse_evolve(&mut self, walk: &WalkParams) {
        self.map_system(|b| inverse_evolve_in_place(b, walk));
    }

    pub fn apply_joint(&mut self, u: &ComplexMatrix) {
        let v = nalgebra::DVector::from_column_slice(&self.amps);
        self.amps = (u * v).iter().copied().collect();
    }

    /// Probability of each walker outcome, memory traced out.
    pub fn system_distribution(&self) -> Vec<f64> {
        let mut probs = vec![0.0; self.sys_dim];
        for branch in self.amps.chunks_exact(self.sys_dim) {
            for (p, a) in probs.iter_mut().zip(branch) {
                *p += a.norm_sqr();
            }
        }
        probs
    }

    /// Computational-basis measurement of the walker; the state collapses to
    /// `|i⟩ ⊗ |χ_i⟩`.
    pub fn measure_system<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let i = sample_index(&self.system_distribution(), rng);
        self.collapse(i);
        i
    }

    fn collapse(&mut self, i: usize) {
        let norm: f64 = self
            .amps
            .chunks_exact(self.sys_dim)
            .map(|b| b[i].norm_sqr())
            .sum::<f64>()
            .sqrt();
        for branch in self.amps.chunks_exact_mut(self.sys_dim) {
            let keep = branch[i] / norm;
            branch.fill(ZERO);
            branch[i] = keep;
        }
    }

    /// Measures the walker in the basis `{W|y⟩}` and leaves it in `W|y⟩`.
    fn measure_in_walk_basis<R: Rng + ?Sized>(&mut self, walk: &WalkParams, rng: &mut R) -> usize {
        self.inverse_evolve(walk);
        let y = self.measure_system(rng);
        self.evolve(walk);
        y
    }

    /// Replaces the walker by `|index⟩`, keeping Eve's memory untouched.
    fn replace_system(&mut self, index: usize) {
        let mut amps = vec![ZERO; self.amps.len()];
        let memory = self.memory_marginal_vector();
        for (e, m) in memory.into_iter().enumerate() {
            amps[e * self.sys_dim + index] = m;
        }
        self.amps = amps;
    }

    /// Memory amplitudes for a product state `|i⟩ ⊗ |χ⟩` (after a walker measurement).
    fn memory_marginal_vector(&self) -> Vec<Complex64> {
        let probs = self.system_distribution();
        let i = probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut chi: Vec<Complex64> = self.amps.chunks_exact(self.sys_dim).map(|b| b[i]).collect();
        let n: f64 = chi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        chi.iter_mut().for_each(|a| *a /= n);
        chi
    }

    /// Eve's memory `|χ⟩` when the walker has been measured to a basis state.
    pub fn memory_state(&self) -> Vec<Complex64> {
        self.memory_marginal_vector()
    }
}

/// Context an eavesdropper may use: the walks that are public knowledge.
pub(crate) struct PublicWalks<'a> {
    pub walks: &'a dyn Fn(&mut dyn rand::RngCore) -> WalkParams,
}

/// Sends `state` across one pass of the channel.
pub(crate) fn transmit<R: Rng>(
    state: &mut JointState,
    channel: &ChannelModel,
    leg: Leg,
    public: &PublicWalks<'_>,
    rng: &mut R,
) {
    match channel {
        ChannelModel::Ideal => {}
        ChannelModel::Pauli(ch) => {
            let (m, n) = ch.sample(rng);
            if (m, n) != (0, 0) {
                state.map_system(|b| {
                    let out = apply_pauli(m, n, b);
                    b.copy_from_slice(&out);
                });
            }
        }
        ChannelModel::Adversary(attack) => {
            if !attack.leg.covers(leg) {
                return;
            }
            match &attack.kind {
                AttackKind::InterceptResendZ => {
                    let i = state.measure_system(rng);
                    state.replace_system(i);
                }
                AttackKind::InterceptResendW => {
                    let walk = (public.walks)(rng);
                    state.measure_in_walk_basis(&walk, rng);
                }
                AttackKind::ImpersonateMitm => {
                    state.measure_system(rng);
                    let fresh = rng.random_range(0..state.sys_dim());
                    state.replace_system(fresh);
                }
                AttackKind::EntanglingPair(a) => {
                    let u = if leg == Leg::Return {
                        a.reverse()
                    } else {
                        a.forward()
                    };
                    state.apply_joint(u);
                }
            }
        }
    }
}
