use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{check_unitary, ISOMETRY_TOLERANCE, RANK_THRESHOLD};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A bipartite unitary coupling Alice's and Bob's gate wires. The row/column
/// index concatenates Alice's bits (most significant) with Bob's.
#[derive(Debug, Clone)]
pub struct BipartiteGate {
    pub name: String,
    pub alice_width: usize,
    pub bob_width: usize,
    matrix: DMatrix<Complex64>,
    schmidt_number: usize,
}

impl BipartiteGate {
    pub fn new(
        name: &str,
        alice_width: usize,
        bob_width: usize,
        matrix: DMatrix<Complex64>,
    ) -> Result<Self> {
        let dim = 1usize << (alice_width + bob_width);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: matrix.nrows(),
            });
        }
        check_unitary(&matrix, ISOMETRY_TOLERANCE)?;
        let schmidt_number = operator_schmidt_rank(&matrix, alice_width, bob_width);
        Ok(Self {
            name: name.to_string(),
            alice_width,
            bob_width,
            matrix,
            schmidt_number,
        })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Operator-Schmidt rank across the Alice/Bob cut, computed at
    /// construction.
    pub fn schmidt_number(&self) -> usize {
        self.schmidt_number
    }

    /// CNOT with Alice's wire as control, Bob's as target.
    pub fn cnot() -> Self {
        let mut m = DMatrix::<Complex64>::zeros(4, 4);
        m[(0, 0)] = Complex64::ONE;
        m[(1, 1)] = Complex64::ONE;
        m[(2, 3)] = Complex64::ONE;
        m[(3, 2)] = Complex64::ONE;
        Self::new("cnot", 1, 1, m).unwrap()
    }

    /// The noiseless crossing gate on wires (A1, A1r | B1, B1r):
    /// CNOT(A1 -> B1r) composed with CNOT(B1 -> A1r), as one 4-qubit
    /// bipartite unitary. Sends one classical bit each way.
    pub fn crossing() -> Self {
        let mut m = DMatrix::<Complex64>::zeros(16, 16);
        for a1 in 0..2usize {
            for a1r in 0..2usize {
                for b1 in 0..2usize {
                    for b1r in 0..2usize {
                        let src = (a1 << 3) | (a1r << 2) | (b1 << 1) | b1r;
                        let dst = (a1 << 3) | ((a1r ^ b1) << 2) | (b1 << 1) | (b1r ^ a1);
                        m[(dst, src)] = Complex64::ONE;
                    }
                }
            }
        }
        Self::new("crossing", 2, 2, m).unwrap()
    }

    /// SWAP between Alice's and Bob's single wires.
    pub fn swap() -> Self {
        let mut m = DMatrix::<Complex64>::zeros(4, 4);
        m[(0, 0)] = Complex64::ONE;
        m[(1, 2)] = Complex64::ONE;
        m[(2, 1)] = Complex64::ONE;
        m[(3, 3)] = Complex64::ONE;
        Self::new("swap", 1, 1, m).unwrap()
    }

    /// Identity coupling (a gate that communicates nothing).
    pub fn identity() -> Self {
        Self::new("identity", 1, 1, DMatrix::identity(4, 4)).unwrap()
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "cnot" => Ok(Self::cnot()),
            "crossing" => Ok(Self::crossing()),
            "swap" => Ok(Self::swap()),
            "identity" => Ok(Self::identity()),
            other => Err(Error::InvalidProtocol(format!(
                "unknown builtin gate `{other}`"
            ))),
        }
    }
}

/// Operator-Schmidt rank of a bipartite matrix: the rank of the reshuffled
/// operator, with singular values below `RANK_THRESHOLD` (relative to the
/// Frobenius norm) counted as zero.
pub fn operator_schmidt_rank(u: &DMatrix<Complex64>, alice_width: usize, bob_width: usize) -> usize {
    let da = 1usize << alice_width;
    let db = 1usize << bob_width;
    let mut r = DMatrix::<Complex64>::zeros(da * da, db * db);
    for ia in 0..da {
        for ja in 0..da {
            for ib in 0..db {
                for jb in 0..db {
                    r[(ia * da + ja, ib * db + jb)] = u[(ia * db + ib, ja * db + jb)];
                }
            }
        }
    }
    let gram = if r.nrows() <= r.ncols() {
        &r * r.adjoint()
    } else {
        r.adjoint() * &r
    };
    let evals = gram.symmetric_eigen().eigenvalues;
    let total: f64 = evals.iter().sum();
    evals
        .iter()
        .filter(|&&e| e.max(0.0).sqrt() > RANK_THRESHOLD * total.sqrt())
        .count()
}

/// Local gates usable inside protocol rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "lowercase")]
pub enum LocalGate {
    X,
    Y,
    Z,
    H,
    S,
    Cnot,
    Cz,
    Swap,
    Ry { angle: f64 },
    Rz { angle: f64 },
    Matrix { qubits: usize, entries: Vec<(f64, f64)> },
}

impl LocalGate {
    pub fn qubits(&self) -> usize {
        match self {
            LocalGate::X
            | LocalGate::Y
            | LocalGate::Z
            | LocalGate::H
            | LocalGate::S
            | LocalGate::Ry { .. }
            | LocalGate::Rz { .. } => 1,
            LocalGate::Cnot | LocalGate::Cz | LocalGate::Swap => 2,
            LocalGate::Matrix { qubits, .. } => *qubits,
        }
    }

    pub fn matrix(&self) -> Result<DMatrix<Complex64>> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Ok(match self {
            LocalGate::X => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
            LocalGate::Y => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
            LocalGate::Z => DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
            LocalGate::H => DMatrix::from_row_slice(2, 2, &[c(s, 0.), c(s, 0.), c(s, 0.), c(-s, 0.)]),
            LocalGate::S => DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 1.)]),
            LocalGate::Cnot => {
                let mut m = DMatrix::<Complex64>::zeros(4, 4);
                m[(0, 0)] = Complex64::ONE;
                m[(1, 1)] = Complex64::ONE;
                m[(2, 3)] = Complex64::ONE;
                m[(3, 2)] = Complex64::ONE;
                m
            }
            LocalGate::Cz => {
                let mut m = DMatrix::<Complex64>::identity(4, 4);
                m[(3, 3)] = -Complex64::ONE;
                m
            }
            LocalGate::Swap => {
                let mut m = DMatrix::<Complex64>::zeros(4, 4);
                m[(0, 0)] = Complex64::ONE;
                m[(1, 2)] = Complex64::ONE;
                m[(2, 1)] = Complex64::ONE;
                m[(3, 3)] = Complex64::ONE;
                m
            }
            LocalGate::Ry { angle } => {
                let (sin, cos) = (angle / 2.0).sin_cos();
                DMatrix::from_row_slice(2, 2, &[c(cos, 0.), c(-sin, 0.), c(sin, 0.), c(cos, 0.)])
            }
            LocalGate::Rz { angle } => {
                let half = angle / 2.0;
                DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        Complex64::from_polar(1.0, -half),
                        c(0., 0.),
                        c(0., 0.),
                        Complex64::from_polar(1.0, half),
                    ],
                )
            }
            LocalGate::Matrix { qubits, entries } => {
                let dim = 1usize << qubits;
                if entries.len() != dim * dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim * dim,
                        got: entries.len(),
                    });
                }
                DMatrix::from_row_slice(
                    dim,
                    dim,
                    &entries.iter().map(|&(re, im)| c(re, im)).collect::<Vec<_>>(),
                )
            }
        })
    }
}
