//! Adaptive tomography of pure states using partial Fourier measurement bases.
//!
//! An unknown `N`-qubit pure state is paired with one ancilla qubit. Amplitudes
//! come from a canonical `Z` measurement; relative phases of neighbouring
//! labels come from projective measurements onto bases built out of small
//! Fourier transforms (four-point for protocol 1, three-point for protocol 2)
//! followed by cyclic shifts.
//!
//! Module map:
//!
//! * [`qcore`]: dense statevectors, gate application, Haar sampling, fidelity.
//! * [`bases`]: the analytic bases `B0`, `C1`, `D1`, `D2`, shift operators and
//!   the small gate matrices used by the circuits.
//! * [`circuits`]: gate-level basis-change circuits, unitary extraction,
//!   outcome maps and OpenQASM 2.0 emission.
//! * [`sampling`]: Born-rule probabilities under white noise and seeded
//!   multinomial shot sampling.
//! * [`reconstruct`]: amplitude and phase-chain estimation from counts.
//! * [`sweep`] and [`verify`]: batch drivers used by the command-line tool.
//!
//! Basis labels follow one convention everywhere: the ancilla is the most
//! significant bit, so `|j>|k>` is label `j*d + k`, and among the data qubits
//! `q_0` is the most significant.

pub mod bases;
pub mod circuits;
mod error;
pub mod exec;
pub mod qcore;
pub mod reconstruct;
pub mod sampling;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Exec;
pub use num_complex::Complex64;
