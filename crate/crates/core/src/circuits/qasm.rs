//! OpenQASM 2.0 emission.
//!
//! Gates are first lowered to [`QasmOp`]s drawn from `qelib1.inc`. Lowering rules:
//!
//! * hollow controls are conjugated by `x` on the control;
//! * `X` with up to two controls maps to `x`/`cx`/`ccx`; with more, it becomes
//!   `h . C^kZ . h`, and `C^kZ` is expanded ancilla-free as a product of parity
//!   phases `u1(+-pi/2^(m-1))` walked in Gray-code order with `cx` ladders;
//! * `V1` is `u3(pi/2,-pi/2,2*pi/3)` up to the phase `pi/6`, which becomes a
//!   `u1(pi/6)` on the control when the gate is controlled;
//! * `V2` is exactly `u3(2*acos(sqrt(2/3)),0,pi)`.
//!
//! Measurements write qubit `q[i]` to the classical bit at its label weight,
//! so a counts key printed most-significant-first reads `a q_0 ... q_{N-1}`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use super::{Circuit, Gate, GateKind};
use crate::qcore::{apply_controlled_in_place, BitControl, GateMatrix};
use crate::{Error, Result};

/// Angle printed either as a rational multiple of pi or as a decimal literal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QasmAngle {
    Pi { num: i64, den: u64 },
    Literal(f64),
}

impl QasmAngle {
    pub const ZERO: QasmAngle = QasmAngle::Pi { num: 0, den: 1 };

    pub fn pi(num: i64, den: u64) -> Self {
        QasmAngle::Pi { num, den }
    }

    pub fn value(self) -> f64 {
        match self {
            QasmAngle::Pi { num, den } => num as f64 * PI / den as f64,
            QasmAngle::Literal(x) => x,
        }
    }
}

impl std::fmt::Display for QasmAngle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            QasmAngle::Pi { num: 0, .. } => f.write_str("0"),
            QasmAngle::Pi { num, den } => {
                let sign = if num < 0 { "-" } else { "" };
                let mag = num.unsigned_abs();
                let head = if mag == 1 {
                    "pi".to_string()
                } else {
                    format!("{mag}*pi")
                };
                if den == 1 {
                    write!(f, "{sign}{head}")
                } else {
                    write!(f, "{sign}{head}/{den}")
                }
            }
            QasmAngle::Literal(x) => write!(f, "{x}"),
        }
    }
}

/// One `qelib1.inc` instruction on logical qubit indices.
#[derive(Debug, Clone, PartialEq)]
pub enum QasmOp {
    X(usize),
    H(usize),
    Sdg(usize),
    U1(QasmAngle, usize),
    U3([QasmAngle; 3], usize),
    Cx(usize, usize),
    Ccx(usize, usize, usize),
    Ch(usize, usize),
    Cu1(QasmAngle, usize, usize),
    Cu3([QasmAngle; 3], usize, usize),
}

impl QasmOp {
    fn render(&self, out: &mut String) {
        let q = |i: usize| format!("q[{i}]");
        let a3 = |a: &[QasmAngle; 3]| format!("{},{},{}", a[0], a[1], a[2]);
        let line = match self {
            QasmOp::X(t) => format!("x {};", q(*t)),
            QasmOp::H(t) => format!("h {};", q(*t)),
            QasmOp::Sdg(t) => format!("sdg {};", q(*t)),
            QasmOp::U1(a, t) => format!("u1({a}) {};", q(*t)),
            QasmOp::U3(a, t) => format!("u3({}) {};", a3(a), q(*t)),
            QasmOp::Cx(c, t) => format!("cx {},{};", q(*c), q(*t)),
            QasmOp::Ccx(c1, c2, t) => format!("ccx {},{},{};", q(*c1), q(*c2), q(*t)),
            QasmOp::Ch(c, t) => format!("ch {},{};", q(*c), q(*t)),
            QasmOp::Cu1(a, c, t) => format!("cu1({a}) {},{};", q(*c), q(*t)),
            QasmOp::Cu3(a, c, t) => format!("cu3({}) {},{};", a3(a), q(*c), q(*t)),
        };
        out.push_str(&line);
        out.push('\n');
    }

    /// `(matrix, targets, solid controls)` in logical qubits, for simulation.
    fn semantics(&self) -> (GateMatrix, Vec<usize>, Vec<usize>) {
        let u3 = |a: &[QasmAngle; 3]| GateMatrix::u(a[0].value(), a[1].value(), a[2].value());
        let u1 = |a: QasmAngle| GateMatrix::u(0.0, 0.0, a.value());
        match self {
            QasmOp::X(t) => (GateMatrix::pauli_x(), vec![*t], vec![]),
            QasmOp::H(t) => (GateMatrix::hadamard(), vec![*t], vec![]),
            QasmOp::Sdg(t) => (GateMatrix::s_dagger(), vec![*t], vec![]),
            QasmOp::U1(a, t) => (u1(*a), vec![*t], vec![]),
            QasmOp::U3(a, t) => (u3(a), vec![*t], vec![]),
            QasmOp::Cx(c, t) => (GateMatrix::pauli_x(), vec![*t], vec![*c]),
            QasmOp::Ccx(c1, c2, t) => (GateMatrix::pauli_x(), vec![*t], vec![*c1, *c2]),
            QasmOp::Ch(c, t) => (GateMatrix::hadamard(), vec![*t], vec![*c]),
            QasmOp::Cu1(a, c, t) => (u1(*a), vec![*t], vec![*c]),
            QasmOp::Cu3(a, c, t) => (u3(a), vec![*t], vec![*c]),
        }
    }
}

fn v1_angles() -> ([QasmAngle; 3], QasmAngle) {
    (
        [
            QasmAngle::pi(1, 2),
            QasmAngle::pi(-1, 2),
            QasmAngle::pi(2, 3),
        ],
        QasmAngle::pi(1, 6),
    )
}

fn v2_angles() -> [QasmAngle; 3] {
    [
        QasmAngle::Literal(2.0 * (2.0f64 / 3.0).sqrt().acos()),
        QasmAngle::ZERO,
        QasmAngle::pi(1, 1),
    ]
}

/// `U = e^{i gamma} U3(theta, phi, lambda)`.
fn zyz(m: &GateMatrix) -> ([QasmAngle; 3], f64) {
    let (u00, u01, u10, u11) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
    let theta = 2.0 * u10.norm().atan2(u00.norm());
    let (gamma, phi, lambda);
    if u00.norm() > 1e-12 {
        gamma = u00.arg();
        let sum = u11.arg() - gamma;
        if u10.norm() > 1e-12 {
            phi = u10.arg() - gamma;
            lambda = sum - phi;
        } else {
            phi = 0.0;
            lambda = sum;
        }
    } else {
        gamma = u10.arg();
        phi = 0.0;
        lambda = (-u01).arg() - gamma;
    }
    let lit = QasmAngle::Literal;
    ([lit(theta), lit(phi), lit(lambda)], gamma)
}

/// Multi-controlled phase `e^{i pi}` on the all-ones pattern of `qubits`.
fn mcz(qubits: &[usize], ops: &mut Vec<QasmOp>) {
    let m = qubits.len();
    let den = 1u64 << (m - 1);
    for j in 0..m {
        let lead = qubits[j];
        let walk = 1usize << j;
        for g in 0..walk {
            let gray = g ^ (g >> 1);
            let size = gray.count_ones() as usize + 1;
            let sign = if size % 2 == 1 { 1 } else { -1 };
            ops.push(QasmOp::U1(QasmAngle::pi(sign, den), lead));
            if g + 1 < walk {
                let flip = (g + 1).trailing_zeros() as usize;
                ops.push(QasmOp::Cx(qubits[flip], lead));
            }
        }
        if j > 0 {
            ops.push(QasmOp::Cx(qubits[j - 1], lead));
        }
    }
}

fn lower_gate(gate: &Gate, ops: &mut Vec<QasmOp>) -> Result<()> {
    let hollow: Vec<usize> = gate
        .controls
        .iter()
        .filter(|c| !c.on_one)
        .map(|c| c.qubit)
        .collect();
    ops.extend(hollow.iter().map(|&q| QasmOp::X(q)));
    let ctl: Vec<usize> = gate.controls.iter().map(|c| c.qubit).collect();
    let t = gate.targets[0];
    let too_many = || Error::Inexpressible(format!("{:?} with {} controls", gate.kind, ctl.len()));
    match (&gate.kind, ctl.as_slice()) {
        (GateKind::X, []) => ops.push(QasmOp::X(t)),
        (GateKind::X, [c]) => ops.push(QasmOp::Cx(*c, t)),
        (GateKind::X, [c1, c2]) => ops.push(QasmOp::Ccx(*c1, *c2, t)),
        (GateKind::X, many) => {
            ops.push(QasmOp::H(t));
            let all: Vec<usize> = many.iter().copied().chain([t]).collect();
            mcz(&all, ops);
            ops.push(QasmOp::H(t));
        }
        (GateKind::H, []) => ops.push(QasmOp::H(t)),
        (GateKind::H, [c]) => ops.push(QasmOp::Ch(*c, t)),
        (GateKind::Sdg, []) => ops.push(QasmOp::Sdg(t)),
        (GateKind::Sdg, [c]) => ops.push(QasmOp::Cu1(QasmAngle::pi(-1, 2), *c, t)),
        (GateKind::V1, []) => ops.push(QasmOp::U3(v1_angles().0, t)),
        (GateKind::V1, [c]) => {
            let (angles, phase) = v1_angles();
            ops.push(QasmOp::Cu3(angles, *c, t));
            ops.push(QasmOp::U1(phase, *c));
        }
        (GateKind::V2, []) => ops.push(QasmOp::U3(v2_angles(), t)),
        (GateKind::V2, [c]) => ops.push(QasmOp::Cu3(v2_angles(), *c, t)),
        (GateKind::Matrix(m), controls) if m.arity() == 1 && controls.len() <= 1 => {
            let (angles, gamma) = zyz(m);
            match controls {
                [] => ops.push(QasmOp::U3(angles, t)),
                [c] => {
                    ops.push(QasmOp::Cu3(angles, *c, t));
                    ops.push(QasmOp::U1(QasmAngle::Literal(gamma), *c));
                }
                _ => unreachable!(),
            }
        }
        (GateKind::Matrix(m), _) if m.arity() > 1 => {
            return Err(Error::Inexpressible(format!(
                "{}-qubit matrix gate",
                m.arity()
            )))
        }
        _ => return Err(too_many()),
    }
    ops.extend(hollow.iter().map(|&q| QasmOp::X(q)));
    Ok(())
}

/// Lowers every gate to `qelib1.inc` instructions.
pub fn expand_for_qasm(c: &Circuit) -> Result<Vec<QasmOp>> {
    let mut ops = Vec::new();
    for g in c.gates() {
        lower_gate(g, &mut ops)?;
    }
    Ok(ops)
}

/// Runs a lowered instruction list on a register state (logical qubits of `c`).
pub fn simulate_ops(c: &Circuit, ops: &[QasmOp], amps: &mut [Complex64]) -> Result<()> {
    for op in ops {
        let (m, targets, controls) = op.semantics();
        let targets: Vec<usize> = targets.iter().map(|&q| c.bit_position(q)).collect();
        let controls: Vec<BitControl> = controls
            .iter()
            .map(|&q| BitControl {
                position: c.bit_position(q),
                on_one: true,
            })
            .collect();
        apply_controlled_in_place(amps, &m, &targets, &controls)?;
    }
    Ok(())
}

/// OpenQASM 2.0 text for `c`, optionally followed by measurement of every qubit.
pub fn emit_qasm(c: &Circuit, measured: bool) -> Result<String> {
    let ops = expand_for_qasm(c)?;
    let n = c.n_qubits();
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let _ = writeln!(out, "qreg q[{n}];");
    let _ = writeln!(out, "creg c[{n}];");
    for op in &ops {
        op.render(&mut out);
    }
    if measured {
        for q in 0..n {
            let _ = writeln!(out, "measure q[{q}] -> c[{}];", c.bit_position(q));
        }
    }
    Ok(out)
}
