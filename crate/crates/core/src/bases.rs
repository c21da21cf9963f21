//! Measurement bases on the `2d`-dimensional ancilla-plus-data space.
//!
//! Every basis is a list of sparse elements. Ordering is fixed and shared with
//! the circuits and reconstruction modules:
//!
//! * `C1`: group-major over `k = 0..d/2`, then the four Fourier rows. Group `k`
//!   lives on labels `(2k, 2k+1, 2k+1+d, (2k+2 mod d)+d)` with coefficients
//!   `i^{row*col}/2`. Row 0 carries the cosine of `theta_{2k+1}-theta_{2k}` and
//!   row 1 the sine.
//! * `D1`: group-major; rows 0..3 are the three-point Fourier vectors on
//!   `(2k, 2k+1, 2k+d)` with coefficients `w^{row*col}/sqrt(3)`; row 3 is the
//!   kept canonical vector `|2k+1+d>`.
//! * `D2`: `D1` shifted by one label, modulo `2d`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::qcore::{log2_exact, GateMatrix};
use crate::{Error, Result};

/// Largest qubit count for which dense unitaries are materialized.
pub const DENSE_QUBIT_CAP: usize = 10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Primitive cube root of unity `e^{i 2pi/3}`.
pub fn omega() -> Complex64 {
    let (s, c) = (2.0 * PI / 3.0).sin_cos();
    Complex64::new(c, s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisName {
    B0,
    C1,
    D1,
    D2,
}

impl std::fmt::Display for BasisName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BasisName::B0 => "B0",
            BasisName::C1 => "C1",
            BasisName::D1 => "D1",
            BasisName::D2 => "D2",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementRole {
    Canonical,
    Fourier { group: usize, row: usize },
    Kept { group: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisElement {
    pub role: ElementRole,
    /// `(label, coefficient)` pairs with nonzero coefficient.
    pub terms: Vec<(usize, Complex64)>,
}

impl BasisElement {
    pub fn support(&self) -> Vec<usize> {
        self.terms.iter().map(|&(l, _)| l).collect()
    }

    /// `<element|amps>`.
    pub fn overlap(&self, amps: &[Complex64]) -> Complex64 {
        self.terms.iter().map(|&(l, c)| c.conj() * amps[l]).sum()
    }

    pub fn to_dense(&self, dim: usize) -> Vec<Complex64> {
        let mut v = vec![ZERO; dim];
        for &(l, c) in &self.terms {
            v[l] += c;
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis {
    name: BasisName,
    dim: usize,
    elements: Vec<BasisElement>,
}

impl MeasurementBasis {
    pub fn name(&self) -> BasisName {
        self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[BasisElement] {
        &self.elements
    }

    pub fn element(&self, index: usize) -> &BasisElement {
        &self.elements[index]
    }

    pub fn supports(&self) -> Vec<Vec<usize>> {
        self.elements.iter().map(BasisElement::support).collect()
    }

    /// Index of the element with the given role.
    pub fn index_of(&self, role: ElementRole) -> Option<usize> {
        self.elements.iter().position(|e| e.role == role)
    }

    /// For each label, the elements whose support contains it.
    pub fn label_index(&self) -> Vec<Vec<usize>> {
        let mut index = vec![Vec::new(); self.dim];
        for (i, e) in self.elements.iter().enumerate() {
            for &(l, _) in &e.terms {
                index[l].push(i);
            }
        }
        index
    }

    /// Max deviation of the Gram matrix from the identity, over all pairs.
    pub fn gram_residual(&self) -> f64 {
        if self.elements.len() != self.dim {
            return f64::INFINITY;
        }
        let index = self.label_index();
        let mut worst = 0.0f64;
        let mut row = vec![ZERO; self.elements.len()];
        for (i, e) in self.elements.iter().enumerate() {
            let mut touched = Vec::new();
            for &(l, c) in &e.terms {
                for &j in &index[l] {
                    let cj = self.elements[j]
                        .terms
                        .iter()
                        .find(|&&(lj, _)| lj == l)
                        .map(|&(_, v)| v)
                        .unwrap_or(ZERO);
                    row[j] += c.conj() * cj;
                    if !touched.contains(&j) {
                        touched.push(j);
                    }
                }
            }
            let diag_seen = touched.contains(&i);
            for &j in &touched {
                let expect = if i == j { ONE } else { ZERO };
                worst = worst.max((row[j] - expect).norm());
                row[j] = ZERO;
            }
            if !diag_seen {
                worst = worst.max(1.0);
            }
        }
        worst
    }
}

fn half_dim(d: usize) -> Result<()> {
    if d < 2 || !d.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(d));
    }
    Ok(())
}

/// Canonical basis of dimension `dim`.
pub fn build_b0(dim: usize) -> Result<MeasurementBasis> {
    log2_exact(dim)?;
    let elements = (0..dim)
        .map(|l| BasisElement {
            role: ElementRole::Canonical,
            terms: vec![(l, ONE)],
        })
        .collect();
    Ok(MeasurementBasis {
        name: BasisName::B0,
        dim,
        elements,
    })
}

/// Protocol-1 basis over `2d` labels.
pub fn build_c1(d: usize) -> Result<MeasurementBasis> {
    half_dim(d)?;
    let i_pow = [
        ONE,
        Complex64::new(0.0, 1.0),
        -ONE,
        Complex64::new(0.0, -1.0),
    ];
    let mut elements = Vec::with_capacity(2 * d);
    for k in 0..d / 2 {
        let labels = [2 * k, 2 * k + 1, 2 * k + 1 + d, (2 * k + 2) % d + d];
        for row in 0..4 {
            let terms = labels
                .iter()
                .enumerate()
                .map(|(col, &l)| (l, i_pow[(row * col) % 4] * 0.5))
                .collect();
            elements.push(BasisElement {
                role: ElementRole::Fourier { group: k, row },
                terms,
            });
        }
    }
    Ok(MeasurementBasis {
        name: BasisName::C1,
        dim: 2 * d,
        elements,
    })
}

/// Protocol-2 first basis over `2d` labels.
pub fn build_d1(d: usize) -> Result<MeasurementBasis> {
    half_dim(d)?;
    Ok(three_point_basis(d, 0, BasisName::D1))
}

/// Protocol-2 second basis: `D1` with every label shifted by one, modulo `2d`.
pub fn build_d2(d: usize) -> Result<MeasurementBasis> {
    half_dim(d)?;
    Ok(three_point_basis(d, 1, BasisName::D2))
}

fn three_point_basis(d: usize, shift: usize, name: BasisName) -> MeasurementBasis {
    let w = omega();
    let w_pow = [ONE, w, w * w];
    let norm = 1.0 / 3f64.sqrt();
    let wrap = |l: usize| (l + shift) % (2 * d);
    let mut elements = Vec::with_capacity(2 * d);
    for k in 0..d / 2 {
        let labels = [2 * k, 2 * k + 1, 2 * k + d].map(wrap);
        for row in 0..3 {
            let terms = labels
                .iter()
                .enumerate()
                .map(|(col, &l)| (l, w_pow[(row * col) % 3] * norm))
                .collect();
            elements.push(BasisElement {
                role: ElementRole::Fourier { group: k, row },
                terms,
            });
        }
        elements.push(BasisElement {
            role: ElementRole::Kept { group: k },
            terms: vec![(wrap(2 * k + 1 + d), ONE)],
        });
    }
    MeasurementBasis {
        name,
        dim: 2 * d,
        elements,
    }
}

/// Dense unitary whose `k`-th column is the `k`-th element.
pub fn basis_unitary(basis: &MeasurementBasis) -> Result<GateMatrix> {
    let arity = log2_exact(basis.dim)?;
    if arity > DENSE_QUBIT_CAP {
        return Err(Error::DimensionCap {
            qubits: arity,
            cap: DENSE_QUBIT_CAP,
        });
    }
    let dim = basis.dim;
    let mut entries = vec![ZERO; dim * dim];
    for (col, e) in basis.elements.iter().enumerate() {
        for &(l, c) in &e.terms {
            entries[l * dim + col] += c;
        }
    }
    GateMatrix::from_entries(arity, entries)
}

/// Number of elements a state `|ancilla_bit>|phi>` can collapse into for
/// generic `phi` (all amplitudes nonzero): elements whose support meets the
/// `ancilla_bit` block of labels.
pub fn achievable_outcomes(basis: &MeasurementBasis, ancilla_bit: u8) -> usize {
    let d = basis.dim / 2;
    let block = if ancilla_bit == 0 { 0..d } else { d..2 * d };
    basis
        .elements
        .iter()
        .filter(|e| e.terms.iter().any(|(l, _)| block.contains(l)))
        .count()
}

/// Four-point Fourier transform on `(ancilla, q_{N-1})`, local index `2a+b`.
pub fn u2_matrix() -> GateMatrix {
    let i_pow = [
        ONE,
        Complex64::new(0.0, 1.0),
        -ONE,
        Complex64::new(0.0, -1.0),
    ];
    let entries = (0..16)
        .map(|e| i_pow[((e / 4) * (e % 4)) % 4] * 0.5)
        .collect();
    GateMatrix::from_entries(2, entries).expect("4x4")
}

/// Three-point Fourier transform padded with an identity on local index 3.
pub fn u3_matrix() -> GateMatrix {
    let w = omega();
    let w_pow = [ONE, w, w * w];
    let s = 1.0 / 3f64.sqrt();
    let mut entries = vec![ZERO; 16];
    for r in 0..3 {
        for c in 0..3 {
            entries[r * 4 + c] = w_pow[(r * c) % 3] * s;
        }
    }
    entries[15] = ONE;
    GateMatrix::from_entries(2, entries).expect("4x4")
}

pub fn v1_matrix() -> GateMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let p = |angle: f64| Complex64::from_polar(s, angle);
    GateMatrix::from_entries(
        1,
        vec![p(PI / 6.0), p(-PI / 6.0), p(-PI / 3.0), p(PI / 3.0)],
    )
    .expect("2x2")
}

pub fn v2_matrix() -> GateMatrix {
    let s = 1.0 / 3f64.sqrt();
    let r2 = 2f64.sqrt() * s;
    let entries = [r2, s, s, -r2].map(|x| Complex64::new(x, 0.0)).to_vec();
    GateMatrix::from_entries(1, entries).expect("2x2")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShiftKind {
    /// Identity on the lower half, cyclic `+1` on the upper half.
    ConditionalT1,
    /// Cyclic `+1` on all labels.
    GlobalT2,
    Increment,
    Decrement,
}

/// Label permutation `k -> permutation[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftOperator {
    dim: usize,
    kind: ShiftKind,
    permutation: Vec<usize>,
}

pub fn shift_operator(dim: usize, kind: ShiftKind) -> Result<ShiftOperator> {
    log2_exact(dim)?;
    let half = dim / 2;
    let permutation = (0..dim)
        .map(|k| match kind {
            ShiftKind::Increment | ShiftKind::GlobalT2 => (k + 1) % dim,
            ShiftKind::Decrement => (k + dim - 1) % dim,
            ShiftKind::ConditionalT1 if k < half => k,
            ShiftKind::ConditionalT1 => half + (k - half + 1) % half,
        })
        .collect();
    Ok(ShiftOperator {
        dim,
        kind,
        permutation,
    })
}

impl ShiftOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> ShiftKind {
        self.kind
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn map(&self, label: usize) -> usize {
        self.permutation[label]
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.dim];
        for &p in &self.permutation {
            if p >= self.dim || std::mem::replace(&mut seen[p], true) {
                return false;
            }
        }
        true
    }

    pub fn inverse_permutation(&self) -> Vec<usize> {
        let mut inv = vec![0; self.dim];
        for (k, &p) in self.permutation.iter().enumerate() {
            inv[p] = k;
        }
        inv
    }

    /// Permutation matrix with `U|k> = |permutation[k]>`.
    pub fn unitary(&self) -> Result<GateMatrix> {
        let arity = log2_exact(self.dim)?;
        if arity > DENSE_QUBIT_CAP {
            return Err(Error::DimensionCap {
                qubits: arity,
                cap: DENSE_QUBIT_CAP,
            });
        }
        let mut entries = vec![ZERO; self.dim * self.dim];
        for (k, &p) in self.permutation.iter().enumerate() {
            entries[p * self.dim + k] = ONE;
        }
        GateMatrix::from_entries(arity, entries)
    }

    /// Image of a basis under this operator, relabelled as `name`.
    pub fn apply_to_basis(
        &self,
        basis: &MeasurementBasis,
        name: BasisName,
    ) -> Result<MeasurementBasis> {
        if basis.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: basis.dim,
            });
        }
        let elements = basis
            .elements
            .iter()
            .map(|e| BasisElement {
                role: e.role,
                terms: e
                    .terms
                    .iter()
                    .map(|&(l, c)| (self.permutation[l], c))
                    .collect(),
            })
            .collect();
        Ok(MeasurementBasis {
            name,
            dim: basis.dim,
            elements,
        })
    }
}
