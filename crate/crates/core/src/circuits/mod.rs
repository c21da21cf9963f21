//! Gate-level basis-change circuits.
//!
//! Logical qubits are `q_0..q_{N-1}` (data) plus, when present, the ancilla
//! with index `N`. The simulator bit position of `q_i` is `N-1-i` and the
//! ancilla sits at position `N`, so measured labels read `a*d + k`.
//!
//! A circuit realizes a projective measurement onto basis `B` by applying
//! `U_B^dagger` and then measuring every qubit in `Z`: outcome `m` then
//! corresponds to the basis element equal (up to phase) to column `m` of the
//! circuit's adjoint. [`outcome_map`] recovers that correspondence.

mod qasm;

pub use qasm::{emit_qasm, expand_for_qasm, simulate_ops, QasmAngle, QasmOp};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bases::{self, MeasurementBasis, DENSE_QUBIT_CAP};
use crate::exec::Exec;
use crate::qcore::{apply_controlled_in_place, BitControl, GateMatrix};
use crate::{Error, Result};

pub const MAX_SHIFT_QUBITS: usize = 12;
pub const FACTORIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    X,
    H,
    Sdg,
    V1,
    V2,
    /// Arbitrary one- or two-qubit unitary.
    Matrix(GateMatrix),
}

impl GateKind {
    pub fn matrix(&self) -> GateMatrix {
        match self {
            GateKind::X => GateMatrix::pauli_x(),
            GateKind::H => GateMatrix::hadamard(),
            GateKind::Sdg => GateMatrix::s_dagger(),
            GateKind::V1 => bases::v1_matrix(),
            GateKind::V2 => bases::v2_matrix(),
            GateKind::Matrix(m) => m.clone(),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            GateKind::Matrix(m) => m.arity(),
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Control {
    pub qubit: usize,
    /// Solid control (fires on `|1>`); hollow when `false`.
    pub on_one: bool,
}

impl Control {
    pub fn solid(qubit: usize) -> Self {
        Self {
            qubit,
            on_one: true,
        }
    }

    pub fn hollow(qubit: usize) -> Self {
        Self {
            qubit,
            on_one: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub controls: Vec<Control>,
}

impl Gate {
    pub fn single(kind: GateKind, target: usize) -> Self {
        Self {
            kind,
            targets: vec![target],
            controls: Vec::new(),
        }
    }

    pub fn controlled(kind: GateKind, target: usize, controls: Vec<Control>) -> Self {
        Self {
            kind,
            targets: vec![target],
            controls,
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::controlled(GateKind::X, target, vec![Control::solid(control)])
    }

    /// Multi-controlled X.
    pub fn mcx(target: usize, controls: Vec<Control>) -> Self {
        Self::controlled(GateKind::X, target, controls)
    }

    fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets
            .iter()
            .copied()
            .chain(self.controls.iter().map(|c| c.qubit))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_data: usize,
    has_ancilla: bool,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_data: usize, has_ancilla: bool) -> Self {
        Self {
            n_data,
            has_ancilla,
            gates: Vec::new(),
        }
    }

    pub fn n_data(&self) -> usize {
        self.n_data
    }

    pub fn has_ancilla(&self) -> bool {
        self.has_ancilla
    }

    pub fn ancilla(&self) -> Option<usize> {
        self.has_ancilla.then_some(self.n_data)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_data + usize::from(self.has_ancilla)
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Simulator bit position of a logical qubit.
    pub fn bit_position(&self, qubit: usize) -> usize {
        if qubit < self.n_data {
            self.n_data - 1 - qubit
        } else {
            qubit
        }
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        if gate.targets.len() != gate.kind.arity() {
            return Err(Error::InvalidTargets(format!(
                "{:?} needs {} targets, got {}",
                gate.kind,
                gate.kind.arity(),
                gate.targets.len()
            )));
        }
        let mut seen = vec![false; self.n_qubits()];
        for q in gate.qubits() {
            if q >= self.n_qubits() {
                return Err(Error::InvalidTargets(format!(
                    "qubit {q} out of range for a {}-qubit circuit",
                    self.n_qubits()
                )));
            }
            if std::mem::replace(&mut seen[q], true) {
                return Err(Error::InvalidTargets(format!(
                    "qubit {q} appears twice in one gate"
                )));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend<I: IntoIterator<Item = Gate>>(&mut self, gates: I) -> Result<()> {
        gates.into_iter().try_for_each(|g| self.push(g))
    }

    /// Same circuit with every gate passed through `f`.
    pub fn map_gates(&self, f: impl Fn(&Gate) -> Gate) -> Result<Self> {
        let mut out = Circuit::new(self.n_data, self.has_ancilla);
        out.extend(self.gates.iter().map(f))?;
        Ok(out)
    }

    fn bit_controls(&self, gate: &Gate) -> Vec<BitControl> {
        gate.controls
            .iter()
            .map(|c| BitControl {
                position: self.bit_position(c.qubit),
                on_one: c.on_one,
            })
            .collect()
    }

    fn apply_one(&self, amps: &mut [Complex64], gate: &Gate, matrix: &GateMatrix) -> Result<()> {
        let targets: Vec<usize> = gate.targets.iter().map(|&t| self.bit_position(t)).collect();
        apply_controlled_in_place(amps, matrix, &targets, &self.bit_controls(gate))
    }

    /// Runs the circuit on a full register state.
    pub fn apply_in_place(&self, amps: &mut [Complex64]) -> Result<()> {
        self.check_len(amps.len())?;
        for gate in &self.gates {
            self.apply_one(amps, gate, &gate.kind.matrix())?;
        }
        Ok(())
    }

    /// Runs the circuit's adjoint on a full register state.
    pub fn apply_adjoint_in_place(&self, amps: &mut [Complex64]) -> Result<()> {
        self.check_len(amps.len())?;
        for gate in self.gates.iter().rev() {
            self.apply_one(amps, gate, &gate.kind.matrix().adjoint())?;
        }
        Ok(())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: len,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// `k -> k+1 mod 2^n`
    Increment,
    /// `k -> k-1 mod 2^n`
    Decrement,
}

impl Direction {
    pub fn from_sign(sign: i32) -> Result<Self> {
        match sign {
            1 => Ok(Direction::Increment),
            -1 => Ok(Direction::Decrement),
            s => Err(Error::InvalidTargets(format!(
                "shift direction must be +1 or -1, got {s}"
            ))),
        }
    }
}

/// The two multi-controlled-X cascades for a cyclic shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CascadeVariant {
    /// Solid controls. Decrement starts with `X` on the least significant qubit
    /// and climbs toward the most significant one.
    #[default]
    Solid,
    /// Hollow controls. Decrement starts at the most significant qubit and ends
    /// with `X` on the least significant one.
    Hollow,
}

/// Gates shifting the register `order` (most significant first) by one.
pub fn shift_cascade(order: &[usize], direction: Direction, variant: CascadeVariant) -> Vec<Gate> {
    let m = order.len();
    let controls = |j: usize, on_one: bool| -> Vec<Control> {
        order[j + 1..]
            .iter()
            .map(|&q| Control { qubit: q, on_one })
            .collect()
    };
    // Increment cascades; decrement is the same list reversed (all gates self-inverse).
    let mut gates: Vec<Gate> = match variant {
        CascadeVariant::Solid => (0..m)
            .map(|j| Gate::mcx(order[j], controls(j, true)))
            .collect(),
        CascadeVariant::Hollow => (0..m)
            .rev()
            .map(|j| Gate::mcx(order[j], controls(j, false)))
            .collect(),
    };
    if direction == Direction::Decrement {
        gates.reverse();
    }
    gates
}

fn check_shift_qubits(n: usize) -> Result<()> {
    if !(1..=MAX_SHIFT_QUBITS).contains(&n) {
        return Err(Error::QubitRange {
            n,
            min: 1,
            max: MAX_SHIFT_QUBITS,
        });
    }
    Ok(())
}

/// `n`-qubit increment or decrement built from the solid-control cascade.
pub fn build_increment_circuit(n: usize, direction: Direction) -> Result<Circuit> {
    build_increment_circuit_variant(n, direction, CascadeVariant::Solid)
}

pub fn build_increment_circuit_variant(
    n: usize,
    direction: Direction,
    variant: CascadeVariant,
) -> Result<Circuit> {
    check_shift_qubits(n)?;
    let mut c = Circuit::new(n, false);
    let order: Vec<usize> = (0..n).collect();
    c.extend(shift_cascade(&order, direction, variant))?;
    Ok(c)
}

/// `U2^dagger` on `(q, a)`: H(a), controlled-S^dagger, H(q), then a SWAP made of three CNOTs.
pub fn u2_dagger_gates(q: usize, a: usize) -> Vec<Gate> {
    vec![
        Gate::single(GateKind::H, a),
        Gate::controlled(GateKind::Sdg, a, vec![Control::solid(q)]),
        Gate::single(GateKind::H, q),
        Gate::cnot(q, a),
        Gate::cnot(a, q),
        Gate::cnot(q, a),
    ]
}

/// `U3^dagger` on `(q, a)`: CNOT, controlled-V1, CNOT, hollow-controlled V2,
/// hollow-controlled H.
pub fn u3_dagger_gates(q: usize, a: usize) -> Vec<Gate> {
    vec![
        Gate::cnot(a, q),
        Gate::controlled(GateKind::V1, a, vec![Control::solid(q)]),
        Gate::cnot(a, q),
        Gate::controlled(GateKind::V2, a, vec![Control::hollow(q)]),
        Gate::controlled(GateKind::H, q, vec![Control::hollow(a)]),
    ]
}

fn check_protocol_qubits(n: usize) -> Result<()> {
    if !(1..MAX_SHIFT_QUBITS).contains(&n) {
        return Err(Error::QubitRange {
            n,
            min: 1,
            max: MAX_SHIFT_QUBITS - 1,
        });
    }
    Ok(())
}

/// Protocol-1 circuit: conditional decrement of the data register (as `X` on
/// the ancilla followed by the `(N+1)`-qubit decrement that treats the
/// ancilla as least significant), then `U2^dagger` on `(q_{N-1}, a)`.
pub fn build_protocol1_circuit(n: usize) -> Result<Circuit> {
    check_protocol_qubits(n)?;
    let a = n;
    let mut c = Circuit::new(n, true);
    c.push(Gate::single(GateKind::X, a))?;
    let order: Vec<usize> = (0..n).chain([a]).collect();
    c.extend(shift_cascade(
        &order,
        Direction::Decrement,
        CascadeVariant::Solid,
    ))?;
    c.extend(u2_dagger_gates(n - 1, a))?;
    Ok(c)
}

/// The gate added when growing a protocol-1 circuit from `n` to `n+1` data
/// qubits: flip the new `q_0` when every other qubit is `|1>`.
pub fn protocol1_extension_gate(n: usize) -> Gate {
    Gate::mcx(0, (1..=n + 1).map(Control::solid).collect())
}

/// Rebuilds the `(n+1)`-qubit protocol-1 circuit from the `n`-qubit one:
/// relabel `q_i -> q_{i+1}` and insert [`protocol1_extension_gate`] after
/// the shift cascade.
pub fn extend_protocol1_circuit(c: &Circuit) -> Result<Circuit> {
    let n = c.n_data();
    let relabel = |q: usize| q + 1;
    let mut out = Circuit::new(n + 1, true);
    let gates = c.gates();
    let split = gates.len() - u2_dagger_gates(0, 1).len();
    for (i, g) in gates.iter().enumerate() {
        if i == split {
            out.push(protocol1_extension_gate(n))?;
        }
        out.push(Gate {
            kind: g.kind.clone(),
            targets: g.targets.iter().map(|&t| relabel(t)).collect(),
            controls: g
                .controls
                .iter()
                .map(|ctl| Control {
                    qubit: relabel(ctl.qubit),
                    on_one: ctl.on_one,
                })
                .collect(),
        })?;
    }
    Ok(out)
}

/// Protocol-2 circuits `(D1, D2)`: `U3^dagger` on `(q_{N-1}, a)`, and the same
/// preceded by the global decrement of all `N+1` qubits (ancilla most significant).
pub fn build_protocol2_circuits(n: usize) -> Result<(Circuit, Circuit)> {
    check_protocol_qubits(n)?;
    let a = n;
    let mut d1 = Circuit::new(n, true);
    d1.extend(u3_dagger_gates(n - 1, a))?;
    let mut d2 = Circuit::new(n, true);
    let order: Vec<usize> = [a].into_iter().chain(0..n).collect();
    d2.extend(shift_cascade(
        &order,
        Direction::Decrement,
        CascadeVariant::Solid,
    ))?;
    d2.extend(u3_dagger_gates(n - 1, a))?;
    Ok((d1, d2))
}

/// Dense unitary of the circuit, with columns computed independently.
pub fn circuit_unitary(c: &Circuit) -> Result<GateMatrix> {
    circuit_unitary_with(c, Exec::default())
}

pub fn circuit_unitary_with(c: &Circuit, exec: Exec) -> Result<GateMatrix> {
    let n = c.n_qubits();
    if n > DENSE_QUBIT_CAP {
        return Err(Error::DimensionCap {
            qubits: n,
            cap: DENSE_QUBIT_CAP,
        });
    }
    let dim = c.dim();
    let columns = exec.map_range(dim, |j| {
        let mut col = vec![Complex64::new(0.0, 0.0); dim];
        col[j] = Complex64::new(1.0, 0.0);
        c.apply_in_place(&mut col).map(|_| col)
    });
    let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
    for (j, col) in columns.into_iter().enumerate() {
        for (i, x) in col?.into_iter().enumerate() {
            entries[i * dim + j] = x;
        }
    }
    GateMatrix::from_entries(n, entries)
}

/// Circuit outcome `m` corresponds to basis element `permutation[m]`, with
/// `adjoint column m = phases[m] * element`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeMap {
    pub permutation: Vec<usize>,
    pub phases: Vec<Complex64>,
    /// Worst entry deviation over all columns.
    pub residual: f64,
}

impl OutcomeMap {
    pub fn identity(dim: usize) -> Self {
        Self {
            permutation: (0..dim).collect(),
            phases: vec![Complex64::new(1.0, 0.0); dim],
            residual: 0.0,
        }
    }

    /// `element index -> outcome index`.
    pub fn outcome_of_element(&self) -> Vec<usize> {
        let mut inv = vec![0; self.permutation.len()];
        for (m, &e) in self.permutation.iter().enumerate() {
            inv[e] = m;
        }
        inv
    }

    pub fn is_bijective(&self) -> bool {
        let mut seen = vec![false; self.permutation.len()];
        self.permutation
            .iter()
            .all(|&e| e < seen.len() && !std::mem::replace(&mut seen[e], true))
    }
}

/// Factors the circuit against `basis` as permutation times diagonal phase.
pub fn outcome_map(c: &Circuit, basis: &MeasurementBasis) -> Result<OutcomeMap> {
    outcome_map_with(c, basis, Exec::default())
}

pub fn outcome_map_with(c: &Circuit, basis: &MeasurementBasis, exec: Exec) -> Result<OutcomeMap> {
    if c.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            actual: c.dim(),
        });
    }
    let dim = basis.dim();
    let label_index = basis.label_index();
    let fail = |reason: String| Error::NoFactorization {
        basis: basis.name().to_string(),
        reason,
    };
    let matches = exec.map_range(dim, |m| -> Result<(usize, Complex64, f64)> {
        let mut col = vec![Complex64::new(0.0, 0.0); dim];
        col[m] = Complex64::new(1.0, 0.0);
        c.apply_adjoint_in_place(&mut col)?;
        let pivot = (0..dim)
            .max_by(|&i, &j| col[i].norm().total_cmp(&col[j].norm()))
            .unwrap_or(0);
        let mut best: Option<(usize, Complex64, f64)> = None;
        for &e in &label_index[pivot] {
            let elem = basis.element(e);
            let ov = elem.overlap(&col);
            if ov.norm() < 0.5 {
                continue;
            }
            let phase = ov / ov.norm();
            let dense = elem.to_dense(dim);
            let residual = col
                .iter()
                .zip(&dense)
                .map(|(x, y)| (x - phase * y).norm())
                .fold(0.0, f64::max);
            if best.is_none_or(|(_, _, r)| residual < r) {
                best = Some((e, phase, residual));
            }
        }
        match best {
            Some(b) if b.2 < FACTORIZATION_TOLERANCE => Ok(b),
            Some((e, _, r)) => Err(fail(format!(
                "outcome {m}: closest element {e} has residual {r:e}"
            ))),
            None => Err(fail(format!("outcome {m} matches no element"))),
        }
    });
    let mut map = OutcomeMap {
        permutation: Vec::with_capacity(dim),
        phases: Vec::with_capacity(dim),
        residual: 0.0,
    };
    for r in matches {
        let (e, phase, residual) = r?;
        map.permutation.push(e);
        map.phases.push(phase);
        map.residual = map.residual.max(residual);
    }
    if !map.is_bijective() {
        return Err(fail("two outcomes map to the same element".into()));
    }
    Ok(map)
}

/// Dense check of `U_c * U_B = P * diag(phases)`; returns the worst deviation.
pub fn dense_factorization_residual(c: &Circuit, basis: &MeasurementBasis) -> Result<f64> {
    let uc = circuit_unitary(c)?;
    let ub = bases::basis_unitary(basis)?;
    let prod = uc.matmul(&ub)?;
    let dim = prod.dim();
    let mut worst = 0.0f64;
    // Each column of the product must have exactly one unit-modulus entry.
    for col in 0..dim {
        let column = prod.column(col);
        let pivot = (0..dim)
            .max_by(|&i, &j| column[i].norm().total_cmp(&column[j].norm()))
            .unwrap_or(0);
        for (i, x) in column.iter().enumerate() {
            let dev = if i == pivot {
                (x.norm() - 1.0).abs()
            } else {
                x.norm()
            };
            worst = worst.max(dev);
        }
    }
    Ok(worst)
}
