//! Dense statevectors and gate application.
//!
//! The kernel addresses qubits by *bit position*: qubit `p` contributes
//! `2^p` to a basis label. For a gate acting on `targets = [t0, t1, ...]`,
//! the gate's local row/column index takes `t0` as its most significant bit.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const NORM_TOLERANCE: f64 = 1e-9;
pub const MAX_HAAR_QUBITS: usize = 12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Unit vector of `2^n_qubits` complex amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

pub(crate) fn log2_exact(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    Ok(len.trailing_zeros() as usize)
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

impl PureState {
    /// Builds a state from amplitudes whose norm is already 1 (within
    /// [`NORM_TOLERANCE`]); the residual is renormalized away. Global phase is kept.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n_qubits = log2_exact(amplitudes.len())?;
        let norm = norm_sqr(&amplitudes).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self::scaled(n_qubits, amplitudes, norm))
    }

    /// Builds a state from any nonzero vector by dividing out its norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n_qubits = log2_exact(amplitudes.len())?;
        let norm = norm_sqr(&amplitudes).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self::scaled(n_qubits, amplitudes, norm))
    }

    fn scaled(n_qubits: usize, mut amplitudes: Vec<Complex64>, norm: f64) -> Self {
        if norm != 1.0 {
            let inv = 1.0 / norm;
            amplitudes.iter_mut().for_each(|a| *a *= inv);
        }
        Self {
            n_qubits,
            amplitudes,
        }
    }

    /// Real-valued convenience constructor.
    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn basis(n_qubits: usize, label: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if n_qubits == 0 || label >= dim {
            return Err(Error::InvalidTargets(format!(
                "basis label {label} out of range for {n_qubits} qubits"
            )));
        }
        let mut amps = vec![ZERO; dim];
        amps[label] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes: amps,
        })
    }

    /// Equal superposition over all `2^n` labels.
    pub fn uniform(n_qubits: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        Self::normalized(vec![ONE; dim])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
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

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amplitudes).sqrt()
    }

    /// `|a_k|^2` for every label.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Multiplies every amplitude by `e^{i alpha}`.
    pub fn with_global_phase(&self, alpha: f64) -> Self {
        let phase = Complex64::from_polar(1.0, alpha);
        Self {
            n_qubits: self.n_qubits,
            amplitudes: self.amplitudes.iter().map(|a| a * phase).collect(),
        }
    }

    /// `|ancilla_bit>|self>`: the state with one more qubit, placed as the most
    /// significant bit.
    pub fn with_ancilla(&self, ancilla_bit: u8) -> Self {
        let d = self.dim();
        let mut amps = vec![ZERO; 2 * d];
        let offset = if ancilla_bit == 0 { 0 } else { d };
        amps[offset..offset + d].copy_from_slice(&self.amplitudes);
        Self {
            n_qubits: self.n_qubits + 1,
            amplitudes: amps,
        }
    }
}

/// Square unitary matrix acting on `arity` qubits, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix {
    arity: usize,
    entries: Vec<Complex64>,
}

impl GateMatrix {
    pub const UNITARY_TOLERANCE: f64 = 1e-10;

    /// Validates shape and unitarity.
    pub fn new(arity: usize, entries: Vec<Complex64>) -> Result<Self> {
        let gate = Self::from_entries(arity, entries)?;
        let residual = gate.unitarity_residual();
        if residual > Self::UNITARY_TOLERANCE {
            return Err(Error::NotUnitary(residual));
        }
        Ok(gate)
    }

    /// Shape check only.
    pub(crate) fn from_entries(arity: usize, entries: Vec<Complex64>) -> Result<Self> {
        let dim = 1usize << arity;
        if arity == 0 || entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        Ok(Self { arity, entries })
    }

    pub fn from_rows(rows: &[&[Complex64]]) -> Result<Self> {
        let arity = log2_exact(rows.len())?;
        let mut entries = Vec::with_capacity(rows.len() * rows.len());
        for row in rows {
            if row.len() != rows.len() {
                return Err(Error::DimensionMismatch {
                    expected: rows.len(),
                    actual: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::new(arity, entries)
    }

    pub fn identity(arity: usize) -> Self {
        let dim = 1usize << arity;
        let mut entries = vec![ZERO; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = ONE;
        }
        Self { arity, entries }
    }

    pub fn pauli_x() -> Self {
        Self {
            arity: 1,
            entries: vec![ZERO, ONE, ONE, ZERO],
        }
    }

    pub fn hadamard() -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self {
            arity: 1,
            entries: vec![h, h, h, -h],
        }
    }

    pub fn s_dagger() -> Self {
        Self {
            arity: 1,
            entries: vec![ONE, ZERO, ZERO, Complex64::new(0.0, -1.0)],
        }
    }

    /// The `U(theta, phi, lambda)` single-qubit rotation used by OpenQASM.
    pub fn u(theta: f64, phi: f64, lambda: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self {
            arity: 1,
            entries: vec![
                Complex64::new(c, 0.0),
                -Complex64::from_polar(s, lambda),
                Complex64::from_polar(s, phi),
                Complex64::from_polar(c, phi + lambda),
            ],
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        1 << self.arity
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim() + col]
    }

    pub fn column(&self, col: usize) -> Vec<Complex64> {
        (0..self.dim()).map(|r| self.get(r, col)).collect()
    }

    pub fn adjoint(&self) -> Self {
        let dim = self.dim();
        let mut entries = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                entries[c * dim + r] = self.entries[r * dim + c].conj();
            }
        }
        Self {
            arity: self.arity,
            entries,
        }
    }

    pub fn transpose(&self) -> Self {
        let dim = self.dim();
        let mut entries = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                entries[c * dim + r] = self.entries[r * dim + c];
            }
        }
        Self {
            arity: self.arity,
            entries,
        }
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.arity != rhs.arity {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: rhs.dim(),
            });
        }
        let dim = self.dim();
        let mut entries = vec![ZERO; dim * dim];
        for r in 0..dim {
            for k in 0..dim {
                let a = self.entries[r * dim + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.entries[k * dim..(k + 1) * dim];
                for (out, b) in entries[r * dim..(r + 1) * dim].iter_mut().zip(row) {
                    *out += a * b;
                }
            }
        }
        Ok(Self {
            arity: self.arity,
            entries,
        })
    }

    /// Max-entry deviation of `G^dagger G` from the identity.
    pub fn unitarity_residual(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = ZERO;
                for k in 0..dim {
                    acc += self.entries[k * dim + i].conj() * self.entries[k * dim + j];
                }
                let expect = if i == j { ONE } else { ZERO };
                worst = worst.max((acc - expect).norm());
            }
        }
        worst
    }

    /// Max-entry distance to another matrix of the same size.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(
                if self.arity == other.arity {
                    0.0
                } else {
                    f64::INFINITY
                },
                f64::max,
            )
    }

    /// Distance to `other` after removing the best global phase.
    pub fn diff_up_to_phase(&self, other: &Self) -> f64 {
        let overlap: Complex64 = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum();
        if overlap.norm() == 0.0 {
            return f64::INFINITY;
        }
        let phase = overlap / overlap.norm();
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a * phase - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Control condition on one bit position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitControl {
    pub position: usize,
    /// `true` fires on `|1>` (solid), `false` on `|0>` (hollow).
    pub on_one: bool,
}

fn check_positions(
    n_qubits: usize,
    gate: &GateMatrix,
    targets: &[usize],
    controls: &[BitControl],
) -> Result<()> {
    if targets.len() != gate.arity() {
        return Err(Error::InvalidTargets(format!(
            "gate of arity {} given {} targets",
            gate.arity(),
            targets.len()
        )));
    }
    let mut seen = 0u64;
    let all = targets
        .iter()
        .copied()
        .chain(controls.iter().map(|c| c.position));
    for p in all {
        if p >= n_qubits {
            return Err(Error::InvalidTargets(format!(
                "qubit {p} out of range for {n_qubits} qubits"
            )));
        }
        if seen & (1 << p) != 0 {
            return Err(Error::InvalidTargets(format!("qubit {p} used twice")));
        }
        seen |= 1 << p;
    }
    Ok(())
}

/// Applies `gate` in place, restricted to basis labels that satisfy every
/// control. Iterates strided index groups; the full tensored matrix is never built.
pub fn apply_controlled_in_place(
    amps: &mut [Complex64],
    gate: &GateMatrix,
    targets: &[usize],
    controls: &[BitControl],
) -> Result<()> {
    let n_qubits = log2_exact(amps.len())?;
    check_positions(n_qubits, gate, targets, controls)?;

    let k = targets.len();
    let gdim = 1usize << k;
    let offsets: Vec<usize> = (0..gdim)
        .map(|local| {
            targets
                .iter()
                .enumerate()
                .filter(|(i, _)| (local >> (k - 1 - i)) & 1 == 1)
                .map(|(_, &t)| 1usize << t)
                .sum()
        })
        .collect();
    let target_mask: usize = targets.iter().map(|&t| 1usize << t).sum();
    let control_mask: usize = controls.iter().map(|c| 1usize << c.position).sum();
    let control_value: usize = controls
        .iter()
        .filter(|c| c.on_one)
        .map(|c| 1usize << c.position)
        .sum();

    if k == 1 {
        let (g00, g01, g10, g11) = (
            gate.get(0, 0),
            gate.get(0, 1),
            gate.get(1, 0),
            gate.get(1, 1),
        );
        let step = offsets[1];
        for base in 0..amps.len() {
            if base & target_mask != 0 || base & control_mask != control_value {
                continue;
            }
            let (a0, a1) = (amps[base], amps[base + step]);
            amps[base] = g00 * a0 + g01 * a1;
            amps[base + step] = g10 * a0 + g11 * a1;
        }
        return Ok(());
    }

    let mut input = vec![ZERO; gdim];
    for base in 0..amps.len() {
        if base & target_mask != 0 || base & control_mask != control_value {
            continue;
        }
        for (slot, off) in input.iter_mut().zip(&offsets) {
            *slot = amps[base + off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let row = &gate.entries()[r * gdim..(r + 1) * gdim];
            amps[base + off] = row.iter().zip(&input).map(|(g, a)| g * a).sum();
        }
    }
    Ok(())
}

/// Applies `gate` to the listed bit positions and returns the new state.
pub fn apply_gate(state: &PureState, gate: &GateMatrix, targets: &[usize]) -> Result<PureState> {
    let mut amps = state.amplitudes.clone();
    apply_controlled_in_place(&mut amps, gate, targets, &[])?;
    Ok(PureState {
        n_qubits: state.n_qubits,
        amplitudes: amps,
    })
}

/// Haar-distributed pure state: normalized vector of i.i.d. standard complex
/// Gaussians drawn from a ChaCha8 stream seeded with `seed`.
pub fn haar_random_state(n_qubits: usize, seed: u64) -> Result<PureState> {
    if !(1..=MAX_HAAR_QUBITS).contains(&n_qubits) {
        return Err(Error::QubitRange {
            n: n_qubits,
            min: 1,
            max: MAX_HAAR_QUBITS,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..1usize << n_qubits)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    PureState::normalized(amps)
}

/// `<a|b>`.
pub fn inner(a: &PureState, b: &PureState) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// `|<a|b>|^2`, clamped to `[0, 1]`.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(inner(a, b)?.norm_sqr().clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Unitary from Gram-Schmidt over Gaussian columns.
    pub(crate) fn random_unitary(arity: usize, seed: u64) -> GateMatrix {
        let dim = 1usize << arity;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols: Vec<Vec<Complex64>> = Vec::new();
        while cols.len() < dim {
            let mut v: Vec<Complex64> = (0..dim)
                .map(|_| {
                    c(
                        StandardNormal.sample(&mut rng),
                        StandardNormal.sample(&mut rng),
                    )
                })
                .collect();
            for u in &cols {
                let proj: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= proj * y);
            }
            let n = norm_sqr(&v).sqrt();
            v.iter_mut().for_each(|x| *x /= n);
            cols.push(v);
        }
        let mut entries = vec![ZERO; dim * dim];
        for (j, col) in cols.iter().enumerate() {
            for (i, x) in col.iter().enumerate() {
                entries[i * dim + j] = *x;
            }
        }
        GateMatrix::new(arity, entries).unwrap()
    }

    /// Oracle: the full `2^n x 2^n` matrix of `gate` on `targets`, built
    /// entrywise from the definition of a tensor embedding.
    fn embed_dense(gate: &GateMatrix, targets: &[usize], n: usize) -> Vec<Vec<Complex64>> {
        let dim = 1usize << n;
        let k = targets.len();
        let local = |i: usize| {
            targets
                .iter()
                .enumerate()
                .map(|(j, &t)| ((i >> t) & 1) << (k - 1 - j))
                .sum::<usize>()
        };
        let tmask: usize = targets.iter().map(|t| 1 << t).sum();
        (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| {
                        if i & !tmask == j & !tmask {
                            gate.get(local(i), local(j))
                        } else {
                            ZERO
                        }
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn make_state_examples() {
        let s = PureState::from_real(&[1.0, 0.0]).unwrap();
        assert_eq!(s.amplitudes()[0], ONE);
        let u = PureState::from_real(&[0.5; 4]).unwrap();
        assert_eq!(u.n_qubits(), 2);
        let t = PureState::new(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        assert!((t.amplitudes()[1].arg() - FRAC_PI_2).abs() < 1e-15);
        assert!((t.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn make_state_errors() {
        assert!(matches!(
            PureState::from_real(&[0.0, 0.0]),
            Err(Error::ZeroVector)
        ));
        assert!(matches!(
            PureState::from_real(&[1.0, 0.0, 0.0]),
            Err(Error::NotPowerOfTwo(3))
        ));
        assert!(matches!(
            PureState::from_real(&[1.0]),
            Err(Error::NotPowerOfTwo(1))
        ));
        assert!(matches!(
            PureState::from_real(&[1.0, 1.0]),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn haar_is_deterministic_and_normalized() {
        let a = haar_random_state(1, 7).unwrap();
        let b = haar_random_state(1, 7).unwrap();
        assert_eq!(a, b);
        for seed in 0..20 {
            let s = haar_random_state(3, seed).unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
        assert!(haar_random_state(0, 1).is_err());
        assert!(haar_random_state(13, 1).is_err());
    }

    #[test]
    fn haar_marginal_mean() {
        // Uniform marginal: E|a_0|^2 = 1/4 for two qubits.
        let trials = 10_000;
        let mean: f64 = (0..trials)
            .map(|s| haar_random_state(2, s).unwrap().amplitudes()[0].norm_sqr())
            .sum::<f64>()
            / trials as f64;
        assert!((mean - 0.25).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn x_flips_and_h_is_involution() {
        let zero = PureState::basis(1, 0).unwrap();
        let one = apply_gate(&zero, &GateMatrix::pauli_x(), &[0]).unwrap();
        assert_eq!(one, PureState::basis(1, 1).unwrap());

        let psi = haar_random_state(4, 3).unwrap();
        let h = GateMatrix::hadamard();
        let back = apply_gate(&apply_gate(&psi, &h, &[2]).unwrap(), &h, &[2]).unwrap();
        for (a, b) in back.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn two_qubit_gate_matches_dense_oracle() {
        let psi = haar_random_state(4, 11).unwrap();
        for (seed, targets) in [(1, [1usize, 3]), (2, [3, 0]), (3, [0, 2])] {
            let g = random_unitary(2, seed);
            let fast = apply_gate(&psi, &g, &targets).unwrap();
            let m = embed_dense(&g, &targets, 4);
            for (i, row) in m.iter().enumerate() {
                let expect: Complex64 = row.iter().zip(psi.amplitudes()).map(|(x, y)| x * y).sum();
                assert!((fast.amplitudes()[i] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn controlled_gate_touches_only_matching_labels() {
        let psi = haar_random_state(3, 5).unwrap();
        let mut amps = psi.amplitudes().to_vec();
        let ctrl = [BitControl {
            position: 2,
            on_one: false,
        }];
        apply_controlled_in_place(&mut amps, &GateMatrix::pauli_x(), &[0], &ctrl).unwrap();
        // labels with bit 2 set untouched, others have bit 0 swapped
        for (i, a) in amps.iter().enumerate() {
            let src = if i & 4 == 0 { i ^ 1 } else { i };
            assert_eq!(*a, psi.amplitudes()[src]);
        }
    }

    #[test]
    fn apply_gate_errors() {
        let psi = haar_random_state(3, 5).unwrap();
        let cnot_like = GateMatrix::identity(2);
        assert!(apply_gate(&psi, &cnot_like, &[0]).is_err());
        assert!(apply_gate(&psi, &cnot_like, &[1, 1]).is_err());
        assert!(apply_gate(&psi, &GateMatrix::hadamard(), &[3]).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let psi = haar_random_state(3, 9).unwrap();
        assert!((fidelity(&psi, &psi).unwrap() - 1.0).abs() < 1e-12);
        let z0 = PureState::basis(1, 0).unwrap();
        let z1 = PureState::basis(1, 1).unwrap();
        assert_eq!(fidelity(&z0, &z1).unwrap(), 0.0);
        let plus = PureState::uniform(1).unwrap();
        assert!((fidelity(&z0, &plus).unwrap() - 0.5).abs() < 1e-15);
        assert!(fidelity(&z0, &psi).is_err());
    }

    #[test]
    fn fidelity_ignores_global_phase() {
        let a = haar_random_state(3, 21).unwrap();
        let b = haar_random_state(3, 22).unwrap();
        let f = fidelity(&a, &b).unwrap();
        for alpha in [0.0, FRAC_PI_3, PI] {
            let fa = fidelity(&a.with_global_phase(alpha), &b).unwrap();
            assert!((fa - f).abs() < 1e-15, "alpha {alpha}");
            assert!((fidelity(&b, &a).unwrap() - f).abs() < 1e-15);
        }
    }

    #[test]
    fn elementary_gates_are_unitary() {
        for g in [
            GateMatrix::pauli_x(),
            GateMatrix::hadamard(),
            GateMatrix::s_dagger(),
            GateMatrix::u(0.3, 1.1, -2.0),
        ] {
            assert!(g.unitarity_residual() < 1e-12);
        }
        let bad = vec![ONE, ONE, ZERO, ONE];
        assert!(matches!(GateMatrix::new(1, bad), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn norm_preserved_over_many_random_applications() {
        let mut seed = 0u64;
        for n in 1..=8usize {
            for _ in 0..125 {
                seed += 1;
                let psi = haar_random_state(n, seed).unwrap();
                let arity = if n == 1 { 1 } else { 1 + (seed as usize % 2) };
                let g = random_unitary(arity, seed ^ 0xabc);
                let t0 = seed as usize % n;
                let targets: Vec<usize> = (0..arity).map(|i| (t0 + i) % n).collect();
                let out = apply_gate(&psi, &g, &targets).unwrap();
                assert!((out.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn fidelity_is_symmetric(sa in 0u64..1000, sb in 0u64..1000, n in 1usize..5) {
            let a = haar_random_state(n, sa).unwrap();
            let b = haar_random_state(n, sb).unwrap();
            let f = fidelity(&a, &b).unwrap();
            prop_assert!((f - fidelity(&b, &a).unwrap()).abs() < 1e-14);
            prop_assert!((0.0..=1.0).contains(&f));
        }
    }
}
