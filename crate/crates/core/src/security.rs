//! Key-rate analysis for the one-way protocol.
//!
//! The rate bound is `r = log2(1/c) − H(A_Z|B_Z) − H(A_W|B_W)`, where `c` is the
//! largest squared overlap between a computational basis state and a walk-basis
//! state. Noise is modelled by the generalized Pauli channel on the `2P`-dimensional
//! walker space.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::walk::{walk_basis_amplitudes, Stepper, WalkParams};
use crate::ComplexMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Result of the search for the step count minimizing `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    /// `c = max |⟨x|ψ_y⟩|²` at `t_star`.
    pub c: f64,
    /// Row (computational basis index) of the maximizing entry.
    pub row: usize,
    /// Column (walk basis index) of the maximizing entry.
    pub col: usize,
    pub t_star: u64,
    /// `c(t)` for `t = 1..=T_max`, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<f64>>,
}

fn require_odd(positions: usize) -> Result<()> {
    if positions % 2 == 0 {
        return Err(Error::EvenPositions(positions));
    }
    Ok(())
}

/// Evolves the two walk-basis columns that start at position 0.
///
/// Every other column is a translate of one of these (the walk commutes with
/// `T_r ⊗ I_c`), so their entries carry the full set of overlap magnitudes.
struct ColumnPair {
    columns: [Vec<Complex64>; 2],
    stepper: Stepper,
}

impl ColumnPair {
    fn new(params: &WalkParams) -> Self {
        let f = params.flip_matrix();
        let dim = params.dim();
        let mut columns = [vec![ZERO; dim], vec![ZERO; dim]];
        for (s, col) in columns.iter_mut().enumerate() {
            col[0] = f.entry(0, s);
            col[1] = f.entry(1, s);
        }
        ColumnPair {
            columns,
            stepper: Stepper::new(params),
        }
    }

    fn step(&mut self) {
        for col in self.columns.iter_mut() {
            self.stepper.forward(col);
        }
    }

    fn max_entry(&self) -> (f64, usize, usize) {
        let mut best = (-1.0, 0, 0);
        for (s, col) in self.columns.iter().enumerate() {
            for (i, a) in col.iter().enumerate() {
                let v = a.norm_sqr();
                if v > best.0 {
                    best = (v, i, s);
                }
            }
        }
        best
    }
}

fn search_c(params: &WalkParams, t_max: u64, keep_trace: bool) -> Result<OverlapReport> {
    require_odd(params.positions())?;
    if t_max == 0 {
        return Err(invalid("T_max must be at least 1"));
    }
    let mut pair = ColumnPair::new(params);
    let mut trace = keep_trace.then(|| Vec::with_capacity(t_max as usize));
    let mut best = OverlapReport {
        c: f64::INFINITY,
        row: 0,
        col: 0,
        t_star: 0,
        trace: None,
    };
    for t in 1..=t_max {
        pair.step();
        let (c, row, col) = pair.max_entry();
        if let Some(tr) = trace.as_mut() {
            tr.push(c);
        }
        // strict: ties keep the earlier t
        if c < best.c {
            best = OverlapReport {
                c,
                row,
                col,
                t_star: t,
                trace: None,
            };
        }
    }
    best.trace = trace;
    Ok(best)
}

/// Finds `t ≤ t_max` minimizing `c(t)` for the walk (its own step count is ignored).
pub fn compute_c(params: &WalkParams, t_max: u64) -> Result<OverlapReport> {
    search_c(params, t_max, false)
}

/// [`compute_c`], also returning the whole `c(t)` series.
pub fn compute_c_traced(params: &WalkParams, t_max: u64) -> Result<OverlapReport> {
    search_c(params, t_max, true)
}

/// `c` for the walk exactly as parameterized (at `params.steps()`).
pub fn overlap_constant(params: &WalkParams) -> f64 {
    let mut pair = ColumnPair::new(params);
    for _ in 0..params.steps() {
        pair.step();
    }
    pair.max_entry().0
}

/// Generalized Pauli operator `U_{m,n} = Σ_k ω^{kn} |k+m⟩⟨k|` with `ω = e^{iπ/P}`.
pub fn pauli_unitary(m: usize, n: usize, positions: usize) -> Result<ComplexMatrix> {
    let d = 2 * positions;
    if positions == 0 {
        return Err(invalid("cycle length P must be at least 1"));
    }
    if m >= d || n >= d {
        return Err(invalid(format!("Pauli indices ({m},{n}) out of range for dimension {d}")));
    }
    let mut u = ComplexMatrix::zeros(d, d);
    for k in 0..d {
        u[((k + m) % d, k)] = pauli_phase(k, n, positions);
    }
    Ok(u)
}

#[inline]
fn pauli_phase(k: usize, n: usize, positions: usize) -> Complex64 {
    let d = 2 * positions;
    Complex64::from_polar(1.0, PI * ((k * n) % d) as f64 / positions as f64)
}

/// Applies `U_{m,n}` to a vector of amplitudes.
pub fn apply_pauli(m: usize, n: usize, amps: &[Complex64]) -> Vec<Complex64> {
    let d = amps.len();
    let positions = d / 2;
    let mut out = vec![ZERO; d];
    for (k, a) in amps.iter().enumerate() {
        out[(k + m) % d] = pauli_phase(k, n, positions) * a;
    }
    out
}

/// Generalized Pauli channel `ρ ↦ Σ p_{m,n} U_{m,n} ρ U_{m,n}†`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliChannel {
    positions: usize,
    error_weight: Option<f64>,
    /// Row-major `p[m][n]`, `(2P)²` entries.
    probs: Vec<f64>,
}

impl PauliChannel {
    /// `p_{0,0} = 1 − E_r`, every other entry `E_r / ((2P)² − 1)`.
    pub fn from_error_weight(error_weight: f64, positions: usize) -> Result<Self> {
        if positions == 0 {
            return Err(invalid("cycle length P must be at least 1"));
        }
        if !(0.0..=1.0).contains(&error_weight) {
            return Err(invalid(format!("error weight {error_weight} outside [0, 1]")));
        }
        let d = 2 * positions;
        let n = d * d;
        let mut probs = vec![error_weight / (n - 1) as f64; n];
        probs[0] = 1.0 - error_weight;
        Ok(PauliChannel {
            positions,
            error_weight: Some(error_weight),
            probs,
        })
    }

    /// Arbitrary `p[m][n]` table (rows indexed by `m`).
    pub fn from_table(positions: usize, table: &[Vec<f64>]) -> Result<Self> {
        let d = 2 * positions;
        if positions == 0 || table.len() != d || table.iter().any(|r| r.len() != d) {
            return Err(invalid(format!("Pauli table must be {d}×{d}")));
        }
        let probs: Vec<f64> = table.iter().flatten().copied().collect();
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(invalid("Pauli probabilities must be non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("Pauli probabilities sum to {total}, not 1")));
        }
        Ok(PauliChannel {
            positions,
            error_weight: None,
            probs,
        })
    }

    pub fn positions(&self) -> usize {
        self.positions
    }

    pub fn dim(&self) -> usize {
        2 * self.positions
    }

    pub fn error_weight(&self) -> Option<f64> {
        self.error_weight
    }

    pub fn prob(&self, m: usize, n: usize) -> f64 {
        self.probs[m * self.dim() + n]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Draws one Kraus index `(m, n)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let d = self.dim();
        let idx = match self.error_weight {
            Some(e) => {
                if rng.random::<f64>() < 1.0 - e {
                    0
                } else {
                    1 + rng.random_range(0..d * d - 1)
                }
            }
            None => crate::walk::sample_index(&self.probs, rng),
        };
        (idx / d, idx % d)
    }

    /// Kraus-sum action on a density matrix.
    pub fn apply_to_density(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = self.dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: rho.nrows(),
            });
        }
        let mut out = ComplexMatrix::zeros(d, d);
        for m in 0..d {
            for n in 0..d {
                let p = self.prob(m, n);
                if p == 0.0 {
                    continue;
                }
                let u = pauli_unitary(m, n, self.positions)?;
                out += (&u * rho * u.adjoint()) * Complex64::new(p, 0.0);
            }
        }
        Ok(out)
    }
}

/// `channel_probs(E_r, P)`.
pub fn channel_probs(error_weight: f64, positions: usize) -> Result<PauliChannel> {
    PauliChannel::from_error_weight(error_weight, positions)
}

/// Closed form of the uniform Pauli channel as a depolarizing channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Depolarizing {
    /// `ρ ↦ (1 − λ) ρ + λ I / (2P)`.
    pub lambda: f64,
    /// Error rate in any orthonormal basis.
    pub qber: f64,
}

/// `λ = E_r (2P)² / ((2P)² − 1)`, `Q = λ (2P − 1) / (2P) = 2P E_r / (2P + 1)`.
pub fn depolarizing_closed_form(error_weight: f64, positions: usize) -> Result<Depolarizing> {
    if positions == 0 {
        return Err(invalid("cycle length P must be at least 1"));
    }
    if !(0.0..=1.0).contains(&error_weight) {
        return Err(invalid(format!("error weight {error_weight} outside [0, 1]")));
    }
    let d = (2 * positions) as f64;
    let lambda = error_weight * d * d / (d * d - 1.0);
    Ok(Depolarizing {
        lambda,
        qber: lambda * (d - 1.0) / d,
    })
}

/// Which basis Alice and Bob both measure in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasurementBasis {
    Z,
    W,
}

/// `Pr(Alice = i, Bob = j)` over `2P` outcomes each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    dim: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    /// Row-major `dim × dim` table; entries must be non-negative and sum to 1.
    pub fn new(dim: usize, probs: Vec<f64>) -> Result<Self> {
        if dim == 0 || probs.len() != dim * dim {
            return Err(invalid(format!("joint table must have {} entries", dim * dim)));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < -1e-15) {
            return Err(invalid("joint probabilities must be non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(invalid(format!("joint probabilities sum to {total}, not 1")));
        }
        Ok(JointDistribution { dim, probs })
    }

    /// Diagonal mass `1 − q`, the rest spread evenly over the `dim − 1` wrong symbols.
    pub fn symmetric_errors(dim: usize, q: f64) -> Result<Self> {
        if dim < 2 && q > 0.0 {
            return Err(invalid("errors need at least two symbols"));
        }
        let d = dim as f64;
        let mut probs = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                probs[i * dim + j] = if i == j {
                    (1.0 - q) / d
                } else {
                    q / (d * (d - 1.0))
                };
            }
        }
        Self::new(dim, probs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.dim + j]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn alice_marginal(&self) -> Vec<f64> {
        self.probs.chunks_exact(self.dim).map(|r| r.iter().sum()).collect()
    }

    pub fn bob_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for row in self.probs.chunks_exact(self.dim) {
            for (o, p) in out.iter_mut().zip(row) {
                *o += p;
            }
        }
        out
    }
}

/// Bob-side states for each of Alice's outcomes and Bob's measurement basis.
///
/// Alice's walk-basis measurement is taken in the conjugate walk basis, so that
/// her outcome `i` leaves Bob holding `|ψ_i⟩` exactly as in the prepare-and-measure
/// protocol (`(A ⊗ I)|φ_0⟩ = (I ⊗ Aᵀ)|φ_0⟩`).
fn basis_vectors(basis: MeasurementBasis, walk: &WalkParams) -> Vec<Vec<Complex64>> {
    let d = walk.dim();
    match basis {
        MeasurementBasis::Z => (0..d)
            .map(|i| {
                let mut v = vec![ZERO; d];
                v[i] = Complex64::new(1.0, 0.0);
                v
            })
            .collect(),
        MeasurementBasis::W => {
            let w = walk_basis_amplitudes(walk);
            (0..d).map(|y| w.column(y).iter().copied().collect()).collect()
        }
    }
}

/// Exact joint distribution by summing every Kraus term of the channel.
///
/// Cost grows as `(2P)^5`; meant for small `P` and non-uniform tables.
pub fn joint_distribution(
    basis: MeasurementBasis,
    walk: &WalkParams,
    channel: &PauliChannel,
) -> Result<JointDistribution> {
    require_odd(walk.positions())?;
    let d = walk.dim();
    if channel.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: channel.dim(),
        });
    }
    let vectors = basis_vectors(basis, walk);
    let mut probs = vec![0.0; d * d];
    let weight = 1.0 / d as f64;
    for (i, sent) in vectors.iter().enumerate() {
        for m in 0..d {
            for n in 0..d {
                let p = channel.prob(m, n);
                if p == 0.0 {
                    continue;
                }
                let received = apply_pauli(m, n, sent);
                for (j, b) in vectors.iter().enumerate() {
                    let amp: Complex64 = b.iter().zip(&received).map(|(x, y)| x.conj() * y).sum();
                    probs[i * d + j] += weight * p * amp.norm_sqr();
                }
            }
        }
    }
    JointDistribution::new(d, probs)
}

/// Joint distribution for the uniform channel via the depolarizing closed form.
pub fn joint_distribution_depolarizing(
    walk: &WalkParams,
    error_weight: f64,
) -> Result<JointDistribution> {
    require_odd(walk.positions())?;
    let dep = depolarizing_closed_form(error_weight, walk.positions())?;
    let d = walk.dim();
    let df = d as f64;
    // both bases are orthonormal, so |⟨b_j|a_i⟩|² = δ_ij in either of them
    let probs = (0..d * d)
        .map(|k| {
            let overlap = if k / d == k % d { 1.0 } else { 0.0 };
            ((1.0 - dep.lambda) * overlap + dep.lambda / df) / df
        })
        .collect();
    JointDistribution::new(d, probs)
}

/// `Q = Σ_{i≠j} p(i, j)`.
pub fn qber(joint: &JointDistribution) -> f64 {
    let d = joint.dim();
    joint
        .probs
        .iter()
        .enumerate()
        .filter(|(k, _)| k / d != k % d)
        .map(|(_, p)| p)
        .sum()
}

fn shannon(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

/// `H(A|B) = H(AB) − H(B)` in bits.
pub fn conditional_entropy(joint: &JointDistribution) -> f64 {
    (shannon(joint.probs.iter().copied()) - shannon(joint.bob_marginal())).max(0.0)
}

/// Binary entropy `h₂(p)` in bits.
pub fn binary_entropy(p: f64) -> f64 {
    shannon([p, 1.0 - p])
}

/// `h₂(Q) + Q log2(dim − 1)`: conditional entropy when errors are uniform over wrong symbols.
pub fn symmetric_error_entropy(q: f64, dim: usize) -> f64 {
    let tail = if dim > 1 && q > 0.0 {
        q * ((dim - 1) as f64).log2()
    } else {
        0.0
    };
    binary_entropy(q) + tail
}

/// Devetak–Winter lower bound `log2(1/c) − H_Z − H_W`.
pub fn key_rate(c: f64, h_z: f64, h_w: f64) -> Result<f64> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(invalid(format!("overlap constant c = {c} outside (0, 1]")));
    }
    if h_z < 0.0 || h_w < 0.0 {
        return Err(invalid("entropies must be non-negative"));
    }
    Ok((1.0 / c).log2() - h_z - h_w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateReport {
    pub c: f64,
    pub h_z: f64,
    pub h_w: f64,
    pub rate: f64,
    pub qber: f64,
}

/// Rate when both bases see the same symmetric error rate `q`.
pub fn key_rate_report(c: f64, positions: usize, q: f64) -> Result<KeyRateReport> {
    let h = symmetric_error_entropy(q, 2 * positions);
    let rate = key_rate(c, h, h)?;
    Ok(KeyRateReport {
        c,
        h_z: h,
        h_w: h,
        rate,
        qber: q,
    })
}

/// Largest `Q` with a non-negative rate under symmetric errors in both bases.
///
/// Solves `log2(1/c) = 2 [h₂(Q) + Q log2(2P − 1)]` by bisection on
/// `[0, (2P−1)/(2P))`, where the right-hand side is increasing.
pub fn max_tolerated_qber(c: f64, positions: usize) -> Result<f64> {
    if positions == 0 {
        return Err(invalid("cycle length P must be at least 1"));
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err(invalid(format!("overlap constant c = {c} outside (0, 1]")));
    }
    let dim = 2 * positions;
    let budget = (1.0 / c).log2();
    let rate = |q: f64| budget - 2.0 * symmetric_error_entropy(q, dim);
    if rate(0.0) <= 0.0 {
        return Ok(0.0);
    }
    if c < 1.0 / dim as f64 - 1e-12 {
        return Err(invalid(format!(
            "c = {c} is below 1/(2P) = {}; no walk attains it",
            1.0 / dim as f64
        )));
    }
    let mut lo = 0.0;
    let mut hi = (dim - 1) as f64 / dim as f64;
    debug_assert!(rate(hi) < 0.0);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if rate(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{Flip, StepOrder};
    use std::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn c_for_single_position_hadamard_like_walk() {
        let w = WalkParams::new(1, FRAC_PI_4, 0.0, 0).unwrap();
        let r = compute_c(&w, 1).unwrap();
        assert!((r.c - 0.5).abs() < 1e-12);
        assert_eq!(r.t_star, 1);
    }

    #[test]
    fn c_rejects_even_positions_and_zero_horizon() {
        let w = WalkParams::new(4, 0.3, 0.0, 0).unwrap();
        assert!(matches!(compute_c(&w, 10), Err(Error::EvenPositions(4))));
        let w = WalkParams::new(3, 0.3, 0.0, 0).unwrap();
        assert!(compute_c(&w, 0).is_err());
    }

    #[test]
    fn fast_path_matches_full_matrix() {
        for flip in Flip::ALL {
            for order in [StepOrder::CoinThenShift, StepOrder::ShiftThenCoin] {
                let base = WalkParams::new(5, 0.3 * PI, 0.7 * PI, 0)
                    .unwrap()
                    .with_flip(flip)
                    .with_order(order);
                let report = compute_c_traced(&base, 30).unwrap();
                let trace = report.trace.as_ref().unwrap();
                for t in 1..=30u64 {
                    let m = walk_basis_amplitudes(&base.with_steps(t));
                    let full = m.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
                    assert!((trace[t as usize - 1] - full).abs() < 1e-12);
                    assert!((overlap_constant(&base.with_steps(t)) - full).abs() < 1e-12);
                }
                let min = trace.iter().cloned().fold(f64::INFINITY, f64::min);
                assert_eq!(report.c, min);
                assert_eq!(trace[report.t_star as usize - 1], min);
            }
        }
    }

    #[test]
    fn c_bounds_hold() {
        for p in [1usize, 3, 5, 7] {
            let w = WalkParams::new(p, 0.37, 1.1, 0).unwrap().with_flip(Flip::X);
            let r = compute_c_traced(&w, 200).unwrap();
            for c in r.trace.unwrap() {
                assert!(c >= 1.0 / (2 * p) as f64 - 1e-12 && c <= 1.0 + 1e-12);
            }
        }
        let identity = WalkParams::new(3, 0.4, 0.0, 0).unwrap();
        assert!((overlap_constant(&identity) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pauli_unitary_examples() {
        let id = pauli_unitary(0, 0, 3).unwrap();
        assert!((id - ComplexMatrix::identity(6, 6)).norm() < 1e-15);

        let x = pauli_unitary(1, 0, 1).unwrap();
        assert!((x[(0, 1)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((x[(1, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(x[(0, 0)].norm() < 1e-15);

        let z = pauli_unitary(0, 1, 1).unwrap();
        assert!((z[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((z[(1, 1)] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);

        assert!(pauli_unitary(2, 0, 1).is_err());
    }

    #[test]
    fn pauli_unitaries_are_unitary_and_match_vector_action() {
        let p = 3;
        let v: Vec<Complex64> = (0..6).map(|k| Complex64::new(k as f64, 1.0 - k as f64)).collect();
        for m in 0..6 {
            for n in 0..6 {
                let u = pauli_unitary(m, n, p).unwrap();
                let defect = (u.adjoint() * &u - ComplexMatrix::identity(6, 6)).norm();
                assert!(defect < 1e-12);
                let dense = &u * nalgebra::DVector::from_vec(v.clone());
                let fast = apply_pauli(m, n, &v);
                for k in 0..6 {
                    assert!((dense[k] - fast[k]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn channel_probabilities() {
        let ch = channel_probs(0.0, 2).unwrap();
        assert_eq!(ch.prob(0, 0), 1.0);
        assert_eq!(ch.probs().iter().sum::<f64>(), 1.0);

        let ch = channel_probs(0.3, 1).unwrap();
        assert!((ch.prob(0, 0) - 0.7).abs() < 1e-15);
        for (m, n) in [(0, 1), (1, 0), (1, 1)] {
            assert!((ch.prob(m, n) - 0.1).abs() < 1e-15);
        }
        assert!(channel_probs(1.5, 1).is_err());
        assert!(PauliChannel::from_table(1, &[vec![0.5, 0.5], vec![0.1, 0.0]]).is_err());
    }

    #[test]
    fn depolarizing_values() {
        let d = depolarizing_closed_form(0.0, 3).unwrap();
        assert_eq!((d.lambda, d.qber), (0.0, 0.0));
        let d = depolarizing_closed_form(0.15, 1).unwrap();
        assert!((d.qber - 0.10).abs() < 1e-15);
        assert!((d.lambda - 0.2).abs() < 1e-15);
    }

    #[test]
    fn joint_distribution_noiseless_and_p1() {
        let walk = WalkParams::new(3, 0.4 * PI, 0.2 * PI, 7).unwrap();
        let ch = channel_probs(0.0, 3).unwrap();
        let j = joint_distribution(MeasurementBasis::Z, &walk, &ch).unwrap();
        for i in 0..6 {
            for k in 0..6 {
                let expected = if i == k { 1.0 / 6.0 } else { 0.0 };
                assert!((j.get(i, k) - expected).abs() < 1e-15);
            }
        }
        let walk = WalkParams::new(1, FRAC_PI_4, 0.0, 1).unwrap();
        let ch = channel_probs(0.15, 1).unwrap();
        let j = joint_distribution(MeasurementBasis::Z, &walk, &ch).unwrap();
        assert!((qber(&j) - 0.10).abs() < 1e-12);
    }

    #[test]
    fn entropy_examples() {
        let diag = JointDistribution::symmetric_errors(6, 0.0).unwrap();
        assert!(conditional_entropy(&diag).abs() < 1e-15);
        assert_eq!(qber(&diag), 0.0);

        let uniform = JointDistribution::new(6, vec![1.0 / 36.0; 36]).unwrap();
        assert!((conditional_entropy(&uniform) - 6f64.log2()).abs() < 1e-12);
        assert!((qber(&uniform) - 5.0 / 6.0).abs() < 1e-12);

        for q in [0.01, 0.11, 0.25, 0.5] {
            for dim in [2usize, 6, 10] {
                let j = JointDistribution::symmetric_errors(dim, q).unwrap();
                let direct = conditional_entropy(&j);
                assert!((direct - symmetric_error_entropy(q, dim)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn key_rate_examples() {
        assert!((key_rate(0.5, 0.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        let h = symmetric_error_entropy(0.11, 2);
        assert!(key_rate(0.5, h, h).unwrap().abs() < 0.005);
        let h = symmetric_error_entropy(0.220, 6);
        assert!(key_rate(0.171, h, h).unwrap().abs() < 0.01);
        assert!(key_rate(0.0, 0.0, 0.0).is_err());

        let rep = key_rate_report(0.3, 3, 0.1).unwrap();
        assert!((rep.rate - ((1.0 / rep.c).log2() - rep.h_z - rep.h_w)).abs() < 1e-12);
    }

    #[test]
    fn noise_tolerance_examples() {
        assert_eq!(max_tolerated_qber(1.0, 3).unwrap(), 0.0);
        let q = max_tolerated_qber(0.5, 1).unwrap();
        assert!((q - 0.110).abs() < 0.001, "{q}");
        let q = max_tolerated_qber(0.054, 11).unwrap();
        assert!((q - 0.284).abs() < 0.002, "{q}");
        assert!(max_tolerated_qber(0.01, 3).is_err());
        assert!(max_tolerated_qber(1.5, 3).is_err());
    }

    #[test]
    fn noise_tolerance_is_a_root() {
        for (c, p) in [(0.2, 3usize), (0.1, 5), (0.05, 11), (0.0126, 229)] {
            let q = max_tolerated_qber(c, p).unwrap();
            let h = symmetric_error_entropy(q, 2 * p);
            assert!(key_rate(c, h, h).unwrap().abs() < 1e-9);
        }
    }
}
