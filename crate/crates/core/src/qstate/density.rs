use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qstate::layout::{Register, RegisterLayout};
use crate::qstate::state::{check_same_layout, QuantumState};

const TRACE_TOLERANCE: f64 = 1e-9;
const PSD_TOLERANCE: f64 = -1e-9;

/// Reduced state on a subset of registers, stored as a dense Hermitian
/// matrix with unit trace.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    layout: RegisterLayout,
    matrix: DMatrix<Complex64>,
}

impl DensityOperator {
    pub fn new(layout: RegisterLayout, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = layout.dimension();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: matrix.nrows(),
            });
        }
        let mut herm_dev: f64 = 0.0;
        for i in 0..dim {
            for j in i..dim {
                herm_dev = herm_dev.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if herm_dev > TRACE_TOLERANCE {
            return Err(Error::LayoutMismatch(format!(
                "matrix not Hermitian (deviation {herm_dev:.3e})"
            )));
        }
        let trace: Complex64 = (0..dim).map(|i| matrix[(i, i)]).sum();
        if (trace.re - 1.0).abs() > TRACE_TOLERANCE || trace.im.abs() > TRACE_TOLERANCE {
            return Err(Error::NotNormalized {
                norm: trace.re,
                tolerance: TRACE_TOLERANCE,
            });
        }
        let min_eig = matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < PSD_TOLERANCE {
            return Err(Error::OutOfRange(format!(
                "density matrix has eigenvalue {min_eig:.3e} below tolerance"
            )));
        }
        Ok(Self { layout, matrix })
    }

    pub fn from_pure(state: &QuantumState) -> Self {
        let amps = state.amplitudes();
        let dim = amps.len();
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = amps[i] * amps[j].conj();
            }
        }
        Self {
            layout: state.layout().clone(),
            matrix: m,
        }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        e.sort_by(|a, b| b.partial_cmp(a).unwrap());
        e
    }
}

/// Trace out every register not in `keep`; the result's registers follow the
/// order of the `keep` list.
pub fn partial_trace(state: &QuantumState, keep: &[&str]) -> Result<DensityOperator> {
    if keep.is_empty() {
        return Err(Error::EmptyKeep);
    }
    let layout = state.layout();
    let keep_shifts = layout.bit_shifts(keep)?;
    let all: Vec<&str> = layout.registers().iter().map(|r| r.name.as_str()).collect();
    let rest: Vec<&str> = all.iter().filter(|n| !keep.contains(n)).copied().collect();
    let rest_shifts = layout.bit_shifts(&rest)?;

    let kept_regs: Vec<Register> = keep
        .iter()
        .map(|n| layout.register(n).unwrap().clone())
        .collect();
    let kept_layout = RegisterLayout::new(kept_regs)?;

    let nk = 1usize << keep_shifts.len();
    let ne = 1usize << rest_shifts.len();
    // m[i, e] = amplitude with kept bits i and environment bits e
    let mut m = DMatrix::<Complex64>::zeros(nk, ne);
    for i in 0..nk {
        let mut base = 0usize;
        for (b, shift) in keep_shifts.iter().enumerate() {
            if (i >> (keep_shifts.len() - 1 - b)) & 1 == 1 {
                base |= 1usize << shift;
            }
        }
        for e in 0..ne {
            let mut idx = base;
            for (b, shift) in rest_shifts.iter().enumerate() {
                if (e >> (rest_shifts.len() - 1 - b)) & 1 == 1 {
                    idx |= 1usize << shift;
                }
            }
            m[(i, e)] = state.amplitudes()[idx];
        }
    }
    let rho = &m * m.adjoint();
    DensityOperator::new(kept_layout, rho)
}

/// Trace distance (1/2)||rho - sigma||_1 via Hermitian eigendecomposition.
pub fn trace_distance_density(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    check_same_layout(&a.layout, &b.layout)?;
    let diff = &a.matrix - &b.matrix;
    let evals = diff.symmetric_eigen().eigenvalues;
    Ok(0.5 * evals.iter().map(|e| e.abs()).sum::<f64>())
}

/// Trace distance between a mixed state and a pure state.
pub fn trace_distance_to_pure(rho: &DensityOperator, pure: &QuantumState) -> Result<f64> {
    trace_distance_density(rho, &DensityOperator::from_pure(pure))
}
