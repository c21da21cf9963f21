//! Self-test suite run by the `verify` command.

use std::fmt;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::bases::{self, ElementRole, MeasurementBasis, ShiftKind};
use crate::circuits::{self, CascadeVariant, Circuit, Direction, Gate, GateKind};
use crate::exec::Exec;
use crate::qcore::{self, haar_random_state};
use crate::reconstruct::{ReconstructOptions, Reconstructor};
use crate::sampling::{
    outcome_probabilities, run_protocol_with, NoisyPreparation, Protocol, Shots,
};
use crate::{Complex64, Error, Result};

pub const MAX_VERIFY_QUBITS: usize = 6;
pub const FACTORIZATION_THRESHOLD: f64 = 1e-10;
const ROUND_TRIP_STATES: u64 = 20;
const ZERO_COLLAPSE_STATES: u64 = 20;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(serialize_with = "as_seconds")]
    pub elapsed: Duration,
}

fn as_seconds<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<32} {:>9.3} ms  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.elapsed.as_secs_f64() * 1e3,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Runs `body`, which returns `(passed, detail)`. Errors count as failures.
fn timed(name: impl Into<String>, body: impl FnOnce() -> Result<(bool, String)>) -> CheckOutcome {
    let start = Instant::now();
    let (passed, detail) = body().unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckOutcome {
        name: name.into(),
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

/// Passes when `circuit` maps every element of `basis` to a phased outcome.
pub fn check_factorization(
    name: impl Into<String>,
    circuit: &Circuit,
    basis: &MeasurementBasis,
    exec: Exec,
) -> CheckOutcome {
    timed(name, || {
        match circuits::outcome_map_with(circuit, basis, exec) {
            Ok(map) => Ok((
                map.residual < FACTORIZATION_THRESHOLD && map.is_bijective(),
                format!("residual {:.2e}", map.residual),
            )),
            Err(e @ Error::NoFactorization { .. }) => Ok((false, e.to_string())),
            Err(e) => Err(e),
        }
    })
}

/// Protocol-2 `D1` circuit with `V1` replaced by its transpose. Must not
/// factorize against `D1`.
pub fn transposed_v1_fixture(n: usize) -> Result<Circuit> {
    let (d1, _) = circuits::build_protocol2_circuits(n)?;
    d1.map_gates(|g| match g.kind {
        GateKind::V1 => Gate {
            kind: GateKind::Matrix(bases::v1_matrix().transpose()),
            ..g.clone()
        },
        _ => g.clone(),
    })
}

fn basis_vector(dim: usize, k: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    v[k] = Complex64::new(1.0, 0.0);
    v
}

fn increment_deviation(n: usize, direction: Direction, variant: CascadeVariant) -> Result<f64> {
    let c = circuits::build_increment_circuit_variant(n, direction, variant)?;
    let kind = match direction {
        Direction::Increment => ShiftKind::Increment,
        Direction::Decrement => ShiftKind::Decrement,
    };
    let shift = bases::shift_operator(1 << n, kind)?;
    let mut worst = 0.0f64;
    for k in 0..c.dim() {
        let mut v = basis_vector(c.dim(), k);
        c.apply_in_place(&mut v)?;
        let expect = basis_vector(c.dim(), shift.map(k));
        worst = v
            .iter()
            .zip(&expect)
            .map(|(a, b)| (a - b).norm())
            .fold(worst, f64::max);
    }
    Ok(worst)
}

/// Largest `Phi_0` probability on a kept element of `D1`/`D2` whose label lies
/// in the ancilla-one block.
pub fn zero_collapse_max(n: usize, seed: u64) -> Result<f64> {
    let d = 1usize << n;
    let prep = NoisyPreparation::pure(haar_random_state(n, seed)?);
    let mut worst = 0.0f64;
    for basis in [bases::build_d1(d)?, bases::build_d2(d)?] {
        let p = outcome_probabilities(&prep, 0, &basis)?;
        for (i, e) in basis.elements().iter().enumerate() {
            if matches!(e.role, ElementRole::Kept { .. }) && e.terms.iter().all(|&(l, _)| l >= d) {
                worst = worst.max(p[i]);
            }
        }
    }
    Ok(worst)
}

/// Runs the suite for `1 <= N <= max_n`.
pub fn run_verify(max_n: usize, exec: Exec) -> Result<VerifyReport> {
    if !(1..=MAX_VERIFY_QUBITS).contains(&max_n) {
        return Err(Error::QubitRange {
            n: max_n,
            min: 1,
            max: MAX_VERIFY_QUBITS,
        });
    }
    let mut checks = Vec::new();
    for n in 1..=max_n {
        let d = 1usize << n;
        checks.push(timed(format!("bases orthonormal N={n}"), || {
            let worst = [
                bases::build_c1(d)?,
                bases::build_d1(d)?,
                bases::build_d2(d)?,
            ]
            .iter()
            .map(MeasurementBasis::gram_residual)
            .fold(0.0, f64::max);
            Ok((worst < 1e-12, format!("gram residual {worst:.2e}")))
        }));
    }
    for n in 1..=(max_n + 1) {
        checks.push(timed(format!("increment permutation n={n}"), || {
            let mut worst = 0.0f64;
            for dir in [Direction::Increment, Direction::Decrement] {
                for v in [CascadeVariant::Solid, CascadeVariant::Hollow] {
                    worst = worst.max(increment_deviation(n, dir, v)?);
                }
            }
            Ok((worst == 0.0, format!("max deviation {worst:.2e}")))
        }));
    }
    for n in 1..=max_n {
        let d = 1usize << n;
        let c1 = circuits::build_protocol1_circuit(n)?;
        checks.push(check_factorization(
            format!("protocol 1 factorization N={n}"),
            &c1,
            &bases::build_c1(d)?,
            exec,
        ));
        let (cd1, cd2) = circuits::build_protocol2_circuits(n)?;
        checks.push(check_factorization(
            format!("protocol 2 D1 factorization N={n}"),
            &cd1,
            &bases::build_d1(d)?,
            exec,
        ));
        checks.push(check_factorization(
            format!("protocol 2 D2 factorization N={n}"),
            &cd2,
            &bases::build_d2(d)?,
            exec,
        ));
    }
    for n in 1..max_n {
        checks.push(timed(
            format!("protocol 1 extension N={n}->{}", n + 1),
            || {
                let grown =
                    circuits::extend_protocol1_circuit(&circuits::build_protocol1_circuit(n)?)?;
                let direct = circuits::build_protocol1_circuit(n + 1)?;
                let mut worst = 0.0f64;
                for k in 0..direct.dim() {
                    let (mut a, mut b) =
                        (basis_vector(direct.dim(), k), basis_vector(direct.dim(), k));
                    grown.apply_in_place(&mut a)?;
                    direct.apply_in_place(&mut b)?;
                    worst = a
                        .iter()
                        .zip(&b)
                        .map(|(x, y)| (x - y).norm())
                        .fold(worst, f64::max);
                }
                Ok((worst < 1e-12, format!("max deviation {worst:.2e}")))
            },
        ));
    }
    for n in 1..=max_n.min(4) {
        checks.push(timed(format!("qasm lowering N={n}"), || {
            let (cd1, cd2) = circuits::build_protocol2_circuits(n)?;
            let mut worst = 0.0f64;
            for c in [circuits::build_protocol1_circuit(n)?, cd1, cd2] {
                let ops = circuits::expand_for_qasm(&c)?;
                for seed in 0..4 {
                    let start = haar_random_state(c.n_qubits(), seed)?.into_amplitudes();
                    let (mut a, mut b) = (start.clone(), start);
                    c.apply_in_place(&mut a)?;
                    circuits::simulate_ops(&c, &ops, &mut b)?;
                    worst = a
                        .iter()
                        .zip(&b)
                        .map(|(x, y)| (x - y).norm())
                        .fold(worst, f64::max);
                }
            }
            Ok((worst < 1e-10, format!("max deviation {worst:.2e}")))
        }));
    }
    for n in 2..=max_n {
        checks.push(timed(format!("zero collapse d={}", 1 << n), || {
            let mut worst = 0.0f64;
            for seed in 0..ZERO_COLLAPSE_STATES {
                worst = worst.max(zero_collapse_max(n, seed)?);
            }
            Ok((worst < 1e-14, format!("max probability {worst:.2e}")))
        }));
    }
    for protocol in [Protocol::One, Protocol::Two] {
        for n in 1..=max_n {
            checks.push(timed(
                format!("round trip protocol {protocol} N={n}"),
                || {
                    let r = Reconstructor::new(protocol, n, ReconstructOptions::default())?;
                    let seeds: Vec<u64> = (0..ROUND_TRIP_STATES).collect();
                    let fidelities = exec.map_slice(&seeds, |&seed| -> Result<f64> {
                        let state = haar_random_state(n, seed)?;
                        let data = run_protocol_with(
                            &NoisyPreparation::pure(state.clone()),
                            r.layout(),
                            Shots::Exact,
                            seed,
                        )?;
                        qcore::fidelity(&r.reconstruct_data(&data)?.estimate, &state)
                    });
                    let worst = fidelities
                        .into_iter()
                        .collect::<Result<Vec<_>>>()?
                        .into_iter()
                        .fold(1.0, f64::min);
                    Ok((worst >= 1.0 - 1e-9, format!("min fidelity {worst:.12}")))
                },
            ));
        }
    }
    checks.push(timed("negative control (transposed V1)", || {
        let n = max_n.min(3);
        let bad = check_factorization(
            "",
            &transposed_v1_fixture(n)?,
            &bases::build_d1(1 << n)?,
            exec,
        );
        Ok((
            !bad.passed,
            format!("corrupted circuit rejected: {}", bad.detail),
        ))
    }));
    Ok(VerifyReport { checks })
}
