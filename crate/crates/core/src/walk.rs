//! Discrete-time coined quantum walks on a cycle of `P` positions.
//!
//! States live in `H_p ⊗ H_c` with the interleaved layout `i = 2x + s`, where
//! `s = 0` is the coin state `|R⟩` and `s = 1` is `|L⟩`. Everything here is a
//! pure function over immutable values; the only stateful input is the random
//! source handed to the sampling helpers.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ComplexMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Tolerance on the norm of a state handed in from outside.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Internal coin state of the walker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CoinState {
    R,
    L,
}

impl CoinState {
    pub const ALL: [CoinState; 2] = [CoinState::R, CoinState::L];

    pub fn index(self) -> usize {
        match self {
            CoinState::R => 0,
            CoinState::L => 1,
        }
    }

    pub fn from_index(s: usize) -> Self {
        if s % 2 == 0 {
            CoinState::R
        } else {
            CoinState::L
        }
    }

    pub fn label(self) -> char {
        match self {
            CoinState::R => 'R',
            CoinState::L => 'L',
        }
    }
}

impl fmt::Display for CoinState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl FromStr for CoinState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "R" | "r" | "0" => Ok(CoinState::R),
            "L" | "l" | "1" => Ok(CoinState::L),
            other => Err(invalid(format!("unknown coin state {other:?}, expected R or L"))),
        }
    }
}

/// Initial coin flip `F` applied once before the walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Flip {
    I,
    X,
    Y,
}

impl Flip {
    pub const ALL: [Flip; 3] = [Flip::I, Flip::X, Flip::Y];

    pub fn label(self) -> &'static str {
        match self {
            Flip::I => "I",
            Flip::X => "X",
            Flip::Y => "Y",
        }
    }
}

impl fmt::Display for Flip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Flip {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "I" | "i" => Ok(Flip::I),
            "X" | "x" => Ok(Flip::X),
            "Y" | "y" => Ok(Flip::Y),
            other => Err(invalid(format!("unknown flip {other:?}, expected I, X or Y"))),
        }
    }
}

/// Order of the two factors inside one walk step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum StepOrder {
    /// `S · (I_p ⊗ R_c)`.
    #[default]
    CoinThenShift,
    /// `(I_p ⊗ R_c) · S`.
    ShiftThenCoin,
}

/// Direction in which the shift moves the `|R⟩` component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum ShiftOrientation {
    /// `|x,R⟩ → |x+1,R⟩`, `|x,L⟩ → |x−1,L⟩`.
    #[default]
    Standard,
    /// `|x,R⟩ → |x−1,R⟩`, `|x,L⟩ → |x+1,L⟩`.
    Mirrored,
}

impl ShiftOrientation {
    fn right_step(self) -> isize {
        match self {
            ShiftOrientation::Standard => 1,
            ShiftOrientation::Mirrored => -1,
        }
    }
}

/// A 2×2 complex matrix acting on the coin, rows and columns ordered `(|R⟩, |L⟩)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinMatrix(pub [[Complex64; 2]; 2]);

impl CoinMatrix {
    pub fn identity() -> Self {
        CoinMatrix([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn hadamard() -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        CoinMatrix([[h, h], [h, -h]])
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.0[row][col]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        CoinMatrix([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        CoinMatrix([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn mul(&self, rhs: &CoinMatrix) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        CoinMatrix(out)
    }

    #[inline]
    pub fn apply(&self, r: Complex64, l: Complex64) -> (Complex64, Complex64) {
        let m = &self.0;
        (m[0][0] * r + m[0][1] * l, m[1][0] * r + m[1][1] * l)
    }

    pub fn determinant(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Largest entrywise deviation of `M†M` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint().mul(self).max_abs_diff(&CoinMatrix::identity())
    }

    pub fn max_abs_diff(&self, other: &CoinMatrix) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }
}

/// Generalized coin `R_c(θ, φ)`.
pub fn coin_matrix(theta: f64, phi: f64) -> CoinMatrix {
    let (s, c) = theta.sin_cos();
    let e = Complex64::from_polar(1.0, phi);
    let ec = e.conj();
    CoinMatrix([[e * c, e * s], [-ec * s, ec * c]])
}

/// Initial flip operator `F`.
pub fn flip_matrix(flip: Flip) -> CoinMatrix {
    let h = FRAC_1_SQRT_2;
    match flip {
        Flip::I => CoinMatrix::identity(),
        Flip::X => CoinMatrix([
            [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
            [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
        ]),
        Flip::Y => CoinMatrix([
            [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
            [Complex64::new(0.0, h), Complex64::new(0.0, -h)],
        ]),
    }
}

/// The coin operator used by a walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CoinOperator {
    Rotation { theta: f64, phi: f64 },
    Hadamard,
}

impl CoinOperator {
    pub fn matrix(&self) -> CoinMatrix {
        match *self {
            CoinOperator::Rotation { theta, phi } => coin_matrix(theta, phi),
            CoinOperator::Hadamard => CoinMatrix::hadamard(),
        }
    }
}

/// Reduce an angle into `[0, 2π)`.
pub fn reduce_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Full description of one coined walk on a `P`-cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    positions: usize,
    coin: CoinOperator,
    steps: u64,
    flip: Flip,
    order: StepOrder,
    orientation: ShiftOrientation,
}

impl WalkParams {
    /// Rotation-coin walk with `F = I`, coin-then-shift steps and the standard shift.
    pub fn new(positions: usize, theta: f64, phi: f64, steps: u64) -> Result<Self> {
        if positions == 0 {
            return Err(invalid("cycle length P must be at least 1"));
        }
        if !theta.is_finite() || !phi.is_finite() {
            return Err(invalid("walk angles must be finite"));
        }
        Ok(WalkParams {
            positions,
            coin: CoinOperator::Rotation {
                theta: reduce_angle(theta),
                phi: reduce_angle(phi),
            },
            steps,
            flip: Flip::I,
            order: StepOrder::CoinThenShift,
            orientation: ShiftOrientation::Standard,
        })
    }

    /// Hadamard-coin walk with shift-before-coin steps and the mirrored shift.
    pub fn hadamard(positions: usize, steps: u64) -> Result<Self> {
        if positions == 0 {
            return Err(invalid("cycle length P must be at least 1"));
        }
        Ok(WalkParams {
            positions,
            coin: CoinOperator::Hadamard,
            steps,
            flip: Flip::I,
            order: StepOrder::ShiftThenCoin,
            orientation: ShiftOrientation::Mirrored,
        })
    }

    pub fn with_flip(mut self, flip: Flip) -> Self {
        self.flip = flip;
        self
    }

    pub fn with_order(mut self, order: StepOrder) -> Self {
        self.order = order;
        self
    }

    pub fn with_orientation(mut self, orientation: ShiftOrientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn with_steps(mut self, steps: u64) -> Self {
        self.steps = steps;
        self
    }

    pub fn positions(&self) -> usize {
        self.positions
    }

    pub fn dim(&self) -> usize {
        2 * self.positions
    }

    pub fn coin(&self) -> CoinOperator {
        self.coin
    }

    /// θ of a rotation coin; the Hadamard coin reports π/4.
    pub fn theta(&self) -> f64 {
        match self.coin {
            CoinOperator::Rotation { theta, .. } => theta,
            CoinOperator::Hadamard => std::f64::consts::FRAC_PI_4,
        }
    }

    pub fn phi(&self) -> f64 {
        match self.coin {
            CoinOperator::Rotation { phi, .. } => phi,
            CoinOperator::Hadamard => 0.0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn flip(&self) -> Flip {
        self.flip
    }

    pub fn order(&self) -> StepOrder {
        self.order
    }

    pub fn orientation(&self) -> ShiftOrientation {
        self.orientation
    }

    pub fn coin_matrix(&self) -> CoinMatrix {
        self.coin.matrix()
    }

    pub fn flip_matrix(&self) -> CoinMatrix {
        flip_matrix(self.flip)
    }
}

/// Flat index of `(x, s)`.
#[inline]
pub fn basis_index(x: usize, s: CoinState) -> usize {
    2 * x + s.index()
}

/// Inverse of [`basis_index`].
#[inline]
pub fn split_index(i: usize) -> (usize, CoinState) {
    (i / 2, CoinState::from_index(i % 2))
}

/// Pure state of the walker, `2P` amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|l⟩ ⊗ |s⟩` on a cycle of `positions` nodes.
    pub fn basis(positions: usize, l: usize, s: CoinState) -> Result<Self> {
        if positions == 0 {
            return Err(invalid("cycle length P must be at least 1"));
        }
        if l >= positions {
            return Err(Error::OutOfRange {
                what: "position",
                value: l,
                bound: positions,
            });
        }
        Ok(Self::basis_index(2 * positions, basis_index(l, s)))
    }

    pub(crate) fn basis_index(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        StateVector { amplitudes }
    }

    /// Wrap amplitudes, checking the layout and the unit norm.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() || amplitudes.len() % 2 != 0 {
            return Err(invalid(format!(
                "state length must be a positive even number, got {}",
                amplitudes.len()
            )));
        }
        let state = StateVector { amplitudes };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(state)
    }

    /// Amplitudes renormalized to unit length. Zero vectors are rejected.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        Self::from_amplitudes(amplitudes.into_iter().map(|a| a / norm).collect())
    }

    pub(crate) fn from_raw(amplitudes: Vec<Complex64>) -> Self {
        StateVector { amplitudes }
    }

    /// Haar-random unit state.
    pub fn random<R: Rng + ?Sized>(positions: usize, rng: &mut R) -> Self {
        let amplitudes: Vec<Complex64> = (0..2 * positions.max(1))
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        StateVector {
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        }
    }

    pub fn positions(&self) -> usize {
        self.amplitudes.len() / 2
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn amplitude(&self, x: usize, s: CoinState) -> Complex64 {
        self.amplitudes[basis_index(x, s)]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn check_positions(&self, positions: usize) -> Result<()> {
        if self.positions() != positions {
            return Err(Error::DimensionMismatch {
                expected: 2 * positions,
                actual: self.dim(),
            });
        }
        Ok(())
    }
}

pub(crate) fn coin_in_place(amps: &mut [Complex64], m: &CoinMatrix) {
    for pair in amps.chunks_exact_mut(2) {
        let (r, l) = m.apply(pair[0], pair[1]);
        pair[0] = r;
        pair[1] = l;
    }
}

/// Moves `|x,R⟩` by `+right` and `|x,L⟩` by `−right`, writing into `out`.
pub(crate) fn shift_into(src: &[Complex64], out: &mut [Complex64], right: isize) {
    let p = (src.len() / 2) as isize;
    for x in 0..p {
        let xr = (x + right).rem_euclid(p) as usize;
        let xl = (x - right).rem_euclid(p) as usize;
        out[2 * xr] = src[2 * x as usize];
        out[2 * xl + 1] = src[2 * x as usize + 1];
    }
}

/// Applies `I_p ⊗ M`.
pub fn apply_coin(state: &StateVector, m: &CoinMatrix) -> StateVector {
    let mut amps = state.amplitudes.clone();
    coin_in_place(&mut amps, m);
    StateVector::from_raw(amps)
}

/// Standard shift operator `S`.
pub fn apply_shift(state: &StateVector) -> StateVector {
    apply_oriented_shift(state, ShiftOrientation::Standard)
}

pub fn apply_oriented_shift(state: &StateVector, orientation: ShiftOrientation) -> StateVector {
    let mut out = vec![ZERO; state.dim()];
    shift_into(&state.amplitudes, &mut out, orientation.right_step());
    StateVector::from_raw(out)
}

/// `S⁻¹` for the given orientation.
pub fn apply_inverse_shift(state: &StateVector, orientation: ShiftOrientation) -> StateVector {
    let mut out = vec![ZERO; state.dim()];
    shift_into(&state.amplitudes, &mut out, -orientation.right_step());
    StateVector::from_raw(out)
}

/// In-place stepper reused by the evolution routines.
pub(crate) struct Stepper {
    coin: CoinMatrix,
    coin_inv: CoinMatrix,
    order: StepOrder,
    right: isize,
    scratch: Vec<Complex64>,
}

impl Stepper {
    pub(crate) fn new(params: &WalkParams) -> Self {
        let coin = params.coin_matrix();
        Stepper {
            coin,
            coin_inv: coin.adjoint(),
            order: params.order,
            right: params.orientation.right_step(),
            scratch: vec![ZERO; params.dim()],
        }
    }

    pub(crate) fn forward(&mut self, amps: &mut [Complex64]) {
        match self.order {
            StepOrder::CoinThenShift => {
                coin_in_place(amps, &self.coin);
                shift_into(amps, &mut self.scratch, self.right);
                amps.copy_from_slice(&self.scratch);
            }
            StepOrder::ShiftThenCoin => {
                shift_into(amps, &mut self.scratch, self.right);
                amps.copy_from_slice(&self.scratch);
                coin_in_place(amps, &self.coin);
            }
        }
    }

    pub(crate) fn backward(&mut self, amps: &mut [Complex64]) {
        match self.order {
            StepOrder::CoinThenShift => {
                shift_into(amps, &mut self.scratch, -self.right);
                amps.copy_from_slice(&self.scratch);
                coin_in_place(amps, &self.coin_inv);
            }
            StepOrder::ShiftThenCoin => {
                coin_in_place(amps, &self.coin_inv);
                shift_into(amps, &mut self.scratch, -self.right);
                amps.copy_from_slice(&self.scratch);
            }
        }
    }
}

/// `U^t (I_p ⊗ F) |state⟩`.
pub fn evolve(state: &StateVector, params: &WalkParams) -> Result<StateVector> {
    state.check_positions(params.positions)?;
    let mut amps = state.amplitudes.clone();
    evolve_in_place(&mut amps, params);
    Ok(StateVector::from_raw(amps))
}

pub(crate) fn evolve_in_place(amps: &mut [Complex64], params: &WalkParams) {
    coin_in_place(amps, &params.flip_matrix());
    let mut stepper = Stepper::new(params);
    for _ in 0..params.steps {
        stepper.forward(amps);
    }
}

/// `(I_p ⊗ F†) U^{−t} |state⟩`, the exact inverse of [`evolve`].
pub fn inverse_evolve(state: &StateVector, params: &WalkParams) -> Result<StateVector> {
    state.check_positions(params.positions)?;
    let mut amps = state.amplitudes.clone();
    inverse_evolve_in_place(&mut amps, params);
    Ok(StateVector::from_raw(amps))
}

pub(crate) fn inverse_evolve_in_place(amps: &mut [Complex64], params: &WalkParams) {
    let mut stepper = Stepper::new(params);
    for _ in 0..params.steps {
        stepper.backward(amps);
    }
    coin_in_place(amps, &params.flip_matrix().adjoint());
}

/// `(T_r ⊗ I_c)|state⟩`: every amplitude moves from `x` to `x + r mod P`.
pub fn translate(state: &StateVector, r: usize) -> Result<StateVector> {
    let p = state.positions();
    if r >= p {
        return Err(Error::OutOfRange {
            what: "translation",
            value: r,
            bound: p,
        });
    }
    let mut out = vec![ZERO; state.dim()];
    for x in 0..p {
        let y = (x + r) % p;
        out[2 * y] = state.amplitudes[2 * x];
        out[2 * y + 1] = state.amplitudes[2 * x + 1];
    }
    Ok(StateVector::from_raw(out))
}

/// The walk-basis matrix: column `y` is `evolve(|y⟩)`, so entry `(x, y)` is `⟨x|ψ_y⟩`.
pub fn walk_basis_amplitudes(params: &WalkParams) -> ComplexMatrix {
    let dim = params.dim();
    let mut out = ComplexMatrix::zeros(dim, dim);
    let mut amps = vec![ZERO; dim];
    for y in 0..dim {
        amps.fill(ZERO);
        amps[y] = ONE;
        evolve_in_place(&mut amps, params);
        for (x, a) in amps.iter().enumerate() {
            out[(x, y)] = *a;
        }
    }
    out
}

/// `M^t` for a 2×2 unitary, via its spectral decomposition.
///
/// Writes `M = e^{iα} V` with `V ∈ SU(2)`; `V` has eigenvalues `e^{±iω}` and
/// `V^t = cos(tω) I + sin(tω)/sin(ω) (V − cos(ω) I)`.
pub fn unitary_power(m: &CoinMatrix, t: u64) -> CoinMatrix {
    if t == 0 {
        return CoinMatrix::identity();
    }
    let phase = m.determinant().sqrt();
    let v = CoinMatrix(m.0.map(|row| row.map(|e| e / phase)));
    let p = v.0[0][0];
    let q = v.0[0][1];
    let cos_w = 0.5 * (v.0[0][0] + v.0[1][1]).re;
    let sin_w = (p.im * p.im + q.norm_sqr()).sqrt();
    let w = sin_w.atan2(cos_w);
    let tf = t as f64;
    let ratio = if sin_w.abs() > 1e-300 {
        (tf * w).sin() / sin_w
    } else {
        0.0
    };
    let cos_tw = Complex64::new((tf * w).cos(), 0.0);
    let mut out = [[ZERO; 2]; 2];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            let id = if r == c { ONE } else { ZERO };
            let centered = v.0[r][c] - id * cos_w;
            *cell = cos_tw * id + centered * ratio;
        }
    }
    let global = Complex64::from_polar(1.0, tf * phase.arg());
    CoinMatrix(out.map(|row| row.map(|e| e * global)))
}

/// Same matrix as [`walk_basis_amplitudes`], computed in the momentum basis.
///
/// For momentum `m` the shift is `diag(e^{−iσκ}, e^{iσκ})` with `κ = 2πm/P`,
/// the one-step operator is a 2×2 unitary, and its `t`-th power comes from
/// [`unitary_power`]. The position-space matrix is the inverse Fourier sum
/// `⟨x,s|A|y,s'⟩ = (1/P) Σ_m e^{iκ(x−y)} [U(m)^t F]_{s,s'}`.
pub fn fourier_amplitudes(params: &WalkParams) -> ComplexMatrix {
    let p = params.positions;
    let sigma = params.orientation.right_step() as f64;
    let coin = params.coin_matrix();
    let flip = params.flip_matrix();
    let blocks: Vec<CoinMatrix> = (0..p)
        .map(|m| {
            let kappa = TAU * m as f64 / p as f64;
            let shift = CoinMatrix([
                [Complex64::from_polar(1.0, -sigma * kappa), ZERO],
                [ZERO, Complex64::from_polar(1.0, sigma * kappa)],
            ]);
            let step = match params.order {
                StepOrder::CoinThenShift => shift.mul(&coin),
                StepOrder::ShiftThenCoin => coin.mul(&shift),
            };
            unitary_power(&step, params.steps).mul(&flip)
        })
        .collect();

    let dim = params.dim();
    let mut out = ComplexMatrix::zeros(dim, dim);
    let inv_p = 1.0 / p as f64;
    for dx in 0..p {
        let mut block = [[ZERO; 2]; 2];
        for (m, b) in blocks.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, TAU * ((m * dx) % p) as f64 / p as f64);
            for s in 0..2 {
                for s2 in 0..2 {
                    block[s][s2] += phase * b.0[s][s2];
                }
            }
        }
        for y in 0..p {
            let x = (y + dx) % p;
            for s in 0..2 {
                for s2 in 0..2 {
                    out[(2 * x + s, 2 * y + s2)] = block[s][s2] * inv_p;
                }
            }
        }
    }
    out
}

/// `|amplitude_i|²` for every basis index.
pub fn born_distribution(state: &StateVector) -> Vec<f64> {
    state.amplitudes.iter().map(|a| a.norm_sqr()).collect()
}

/// Position marginal: the two coin entries of each position summed.
pub fn position_distribution(state: &StateVector) -> Vec<f64> {
    state
        .amplitudes
        .chunks_exact(2)
        .map(|pair| pair[0].norm_sqr() + pair[1].norm_sqr())
        .collect()
}

/// Draws an index from a discrete distribution by inverse CDF.
pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_nonzero = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last_nonzero
}

/// Samples a full (position, coin) measurement and returns the basis index.
pub fn sample_measurement<R: Rng + ?Sized>(state: &StateVector, rng: &mut R) -> usize {
    sample_index(&born_distribution(state), rng)
}

/// Samples a position-only measurement.
pub fn sample_position<R: Rng + ?Sized>(state: &StateVector, rng: &mut R) -> usize {
    sample_index(&position_distribution(state), rng)
}
