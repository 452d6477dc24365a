use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::layout::{pack_index, parse_bits, Party, Register, RegisterLayout};

/// Default 2-norm tolerance for normalized states.
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Default threshold below which a Schmidt coefficient counts as zero.
pub const RANK_THRESHOLD: f64 = 1e-9;
/// Default tolerance on `max |U'U - I|` for isometry checks.
pub const ISOMETRY_TOLERANCE: f64 = 1e-10;

/// A normalized pure state over a register layout, stored as a dense
/// amplitude vector indexed by concatenated register bits (most significant
/// register first).
#[derive(Debug, Clone)]
pub struct QuantumState {
    layout: RegisterLayout,
    amplitudes: Vec<Complex64>,
    norm_tolerance: f64,
}

/// A subnormalized branch of a pure state, e.g. one term of a projective
/// decomposition. Never interchangeable with `QuantumState`.
#[derive(Debug, Clone)]
pub struct Branch {
    pub layout: RegisterLayout,
    pub amplitudes: Vec<Complex64>,
}

impl Branch {
    /// Squared norm of the branch.
    pub fn weight(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<QuantumState> {
        let w = self.weight();
        if w < 1e-24 {
            return Err(Error::ZeroWeightBranch(w));
        }
        let s = 1.0 / w.sqrt();
        QuantumState::from_amplitudes(
            self.layout.clone(),
            self.amplitudes.iter().map(|a| a * s).collect(),
        )
    }

    /// Overlap `<self|other>` of the raw (subnormalized) branch vectors.
    pub fn overlap(&self, other: &Branch) -> Result<Complex64> {
        check_same_layout(&self.layout, &other.layout)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Fidelity |<a|b>|^2 between the normalized branch states.
    pub fn fidelity(&self, other: &Branch) -> Result<f64> {
        let wa = self.weight();
        let wb = other.weight();
        if wa < 1e-24 || wb < 1e-24 {
            return Err(Error::ZeroWeightBranch(wa.min(wb)));
        }
        Ok(self.overlap(other)?.norm_sqr() / (wa * wb))
    }
}

pub(crate) fn check_same_layout(a: &RegisterLayout, b: &RegisterLayout) -> Result<()> {
    if a != b {
        return Err(Error::LayoutMismatch(format!("{:?} vs {:?}", a, b)));
    }
    Ok(())
}

impl QuantumState {
    /// Wrap an amplitude vector, checking normalization.
    pub fn from_amplitudes(layout: RegisterLayout, amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::from_amplitudes_with_tolerance(layout, amplitudes, NORM_TOLERANCE)
    }

    pub fn from_amplitudes_with_tolerance(
        layout: RegisterLayout,
        amplitudes: Vec<Complex64>,
        norm_tolerance: f64,
    ) -> Result<Self> {
        if amplitudes.len() != layout.dimension() {
            return Err(Error::DimensionMismatch {
                expected: layout.dimension(),
                got: amplitudes.len(),
            });
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > norm_tolerance {
            return Err(Error::NotNormalized {
                norm,
                tolerance: norm_tolerance,
            });
        }
        Ok(Self {
            layout,
            amplitudes,
            norm_tolerance,
        })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_tolerance(&self) -> f64 {
        self.norm_tolerance
    }

    pub fn overlap(&self, other: &QuantumState) -> Result<Complex64> {
        check_same_layout(&self.layout, &other.layout)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn fidelity(&self, other: &QuantumState) -> Result<f64> {
        Ok(self.overlap(other)?.norm_sqr())
    }

    /// Tensor product; `other`'s registers are appended to `self`'s.
    pub fn tensor(&self, other: &QuantumState) -> Result<QuantumState> {
        let mut regs = self.layout.registers().to_vec();
        regs.extend_from_slice(other.layout.registers().to_vec().as_slice());
        let layout = RegisterLayout::new(regs)?;
        let mut amps = Vec::with_capacity(self.amplitudes.len() * other.amplitudes.len());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amps.push(a * b);
            }
        }
        QuantumState::from_amplitudes_with_tolerance(layout, amps, self.norm_tolerance)
    }

    /// Rename every register (e.g. to suffix per-position copies before a
    /// tensor product). The amplitudes are untouched.
    pub fn with_renamed_registers<F: Fn(&str) -> String>(&self, rename: F) -> Result<QuantumState> {
        let regs = self
            .layout
            .registers()
            .iter()
            .map(|r| Register {
                name: rename(&r.name),
                party: r.party,
                width: r.width,
            })
            .collect();
        Ok(QuantumState {
            layout: RegisterLayout::new(regs)?,
            amplitudes: self.amplitudes.clone(),
            norm_tolerance: self.norm_tolerance,
        })
    }

    /// Reassign a register's owner (models sending it to the other party).
    /// The amplitudes are untouched.
    pub fn with_party(&self, name: &str, party: Party) -> Result<QuantumState> {
        let idx = self.layout.index_of(name)?;
        let mut regs = self.layout.registers().to_vec();
        regs[idx].party = party;
        Ok(QuantumState {
            layout: RegisterLayout::new(regs)?,
            amplitudes: self.amplitudes.clone(),
            norm_tolerance: self.norm_tolerance,
        })
    }

    /// Append a fresh register in |0...0>.
    pub fn with_register(&self, name: &str, party: Party, width: usize) -> Result<QuantumState> {
        let mut regs = self.layout.registers().to_vec();
        regs.push(Register {
            name: name.to_string(),
            party,
            width,
        });
        let layout = RegisterLayout::new(regs)?;
        let mut amps = vec![Complex64::ZERO; self.amplitudes.len() << width];
        for (i, a) in self.amplitudes.iter().enumerate() {
            amps[i << width] = *a;
        }
        QuantumState::from_amplitudes_with_tolerance(layout, amps, self.norm_tolerance)
    }
}

/// Computational basis state with every register assigned a bitstring of its
/// exact width.
pub fn basis_state(layout: &RegisterLayout, assignment: &[(&str, &str)]) -> Result<QuantumState> {
    let mut values = Vec::new();
    let mut assigned = std::collections::HashSet::new();
    for (name, bits) in assignment {
        let reg = layout.register(name)?;
        values.push((*name, parse_bits(name, reg.width, bits)?));
        assigned.insert(*name);
    }
    for r in layout.registers() {
        if !assigned.contains(r.name.as_str()) {
            return Err(Error::InvalidProtocol(format!(
                "register `{}` not assigned",
                r.name
            )));
        }
    }
    basis_state_values(layout, &values)
}

/// Basis state from integer register values; unassigned registers are zero.
pub fn basis_state_values(
    layout: &RegisterLayout,
    values: &[(&str, usize)],
) -> Result<QuantumState> {
    let idx = pack_index(layout, values)?;
    let mut amps = vec![Complex64::ZERO; layout.dimension()];
    amps[idx] = Complex64::ONE;
    QuantumState::from_amplitudes(layout.clone(), amps)
}

fn isometry_deviation(u: &DMatrix<Complex64>) -> f64 {
    let gram = u.adjoint() * u;
    let mut dev: f64 = 0.0;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { Complex64::ONE } else { Complex64::ZERO };
            dev = dev.max((gram[(i, j)] - target).norm());
        }
    }
    dev
}

/// Check that a square matrix is unitary within `tol`.
pub fn check_unitary(u: &DMatrix<Complex64>, tol: f64) -> Result<()> {
    if u.nrows() != u.ncols() {
        return Err(Error::DimensionMismatch {
            expected: u.nrows(),
            got: u.ncols(),
        });
    }
    let deviation = isometry_deviation(u);
    if deviation > tol {
        return Err(Error::NotIsometric { deviation });
    }
    Ok(())
}

/// Apply a unitary to the named target registers, identity elsewhere.
/// Targets may span several registers; their bits are ordered as listed,
/// most significant first.
pub fn apply_local(
    state: &QuantumState,
    unitary: &DMatrix<Complex64>,
    targets: &[&str],
) -> Result<QuantumState> {
    apply_local_with_tolerance(state, unitary, targets, ISOMETRY_TOLERANCE)
}

pub fn apply_local_with_tolerance(
    state: &QuantumState,
    unitary: &DMatrix<Complex64>,
    targets: &[&str],
    isometry_tol: f64,
) -> Result<QuantumState> {
    let layout = &state.layout;
    let tshifts = layout.bit_shifts(targets)?;
    let t = tshifts.len();
    let dim = 1usize << t;
    if unitary.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: unitary.nrows(),
        });
    }
    check_unitary(unitary, isometry_tol)?;

    let w = layout.total_width();
    let target_mask: usize = tshifts.iter().map(|s| 1usize << s).sum();
    // Offsets of each target sub-index within a global index.
    let mut sub_offsets = vec![0usize; dim];
    for (j, off) in sub_offsets.iter_mut().enumerate() {
        for (m, shift) in tshifts.iter().enumerate() {
            if (j >> (t - 1 - m)) & 1 == 1 {
                *off |= 1usize << shift;
            }
        }
    }
    // Shifts of the untouched bits.
    let rest_shifts: Vec<usize> = (0..w).filter(|s| target_mask >> s & 1 == 0).collect();

    let mut out = state.amplitudes.clone();
    let mut block = vec![Complex64::ZERO; dim];
    for r in 0..(1usize << rest_shifts.len()) {
        let mut base = 0usize;
        for (m, shift) in rest_shifts.iter().enumerate() {
            if (r >> m) & 1 == 1 {
                base |= 1usize << shift;
            }
        }
        for (j, off) in sub_offsets.iter().enumerate() {
            block[j] = out[base | off];
        }
        for (j, off) in sub_offsets.iter().enumerate() {
            let mut acc = Complex64::ZERO;
            for (jp, b) in block.iter().enumerate() {
                acc += unitary[(j, jp)] * b;
            }
            out[base | off] = acc;
        }
    }
    QuantumState::from_amplitudes_with_tolerance(layout.clone(), out, state.norm_tolerance)
}

/// Reorder the layout registers. The physical state is unchanged: amplitudes
/// are reindexed so expectation values are invariant.
pub fn permute_registers(state: &QuantumState, new_order: &[&str]) -> Result<QuantumState> {
    let layout = &state.layout;
    if new_order.len() != layout.registers().len() {
        return Err(Error::NotAPermutation);
    }
    let mut seen = std::collections::HashSet::new();
    for name in new_order {
        if !layout.contains(name) || !seen.insert(*name) {
            return Err(Error::NotAPermutation);
        }
    }
    let new_regs: Vec<Register> = new_order
        .iter()
        .map(|n| layout.register(n).unwrap().clone())
        .collect();
    let new_layout = RegisterLayout::new(new_regs)?;

    // For each register: shift in the old index and shift in the new one.
    let w = layout.total_width();
    let moves: Vec<(usize, usize, usize)> = new_order
        .iter()
        .map(|n| {
            let reg = layout.register(n).unwrap();
            let old_shift = w - layout.offset_of(n).unwrap() - reg.width;
            let new_shift = w - new_layout.offset_of(n).unwrap() - reg.width;
            let mask = (1usize << reg.width) - 1;
            (old_shift, new_shift, mask)
        })
        .collect();

    let mut amps = vec![Complex64::ZERO; state.amplitudes.len()];
    for (old_idx, a) in state.amplitudes.iter().enumerate() {
        let mut new_idx = 0usize;
        for &(old_shift, new_shift, mask) in &moves {
            new_idx |= ((old_idx >> old_shift) & mask) << new_shift;
        }
        amps[new_idx] = *a;
    }
    QuantumState::from_amplitudes_with_tolerance(new_layout, amps, state.norm_tolerance)
}

/// Gather amplitudes into a matrix whose rows are indexed by the `row_regs`
/// bits and columns by the remaining registers.
pub(crate) fn bipartition_matrix(
    state: &QuantumState,
    row_regs: &[&str],
) -> Result<DMatrix<Complex64>> {
    let layout = &state.layout;
    let row_shifts = layout.bit_shifts(row_regs)?;
    let all: Vec<&str> = layout.registers().iter().map(|r| r.name.as_str()).collect();
    let col_regs: Vec<&str> = all
        .iter()
        .filter(|n| !row_regs.contains(n))
        .copied()
        .collect();
    let col_shifts = layout.bit_shifts(&col_regs)?;
    let nr = 1usize << row_shifts.len();
    let nc = 1usize << col_shifts.len();
    let mut m = DMatrix::<Complex64>::zeros(nr, nc);
    for i in 0..nr {
        let mut base = 0usize;
        for (b, shift) in row_shifts.iter().enumerate() {
            if (i >> (row_shifts.len() - 1 - b)) & 1 == 1 {
                base |= 1usize << shift;
            }
        }
        for j in 0..nc {
            let mut idx = base;
            for (b, shift) in col_shifts.iter().enumerate() {
                if (j >> (col_shifts.len() - 1 - b)) & 1 == 1 {
                    idx |= 1usize << shift;
                }
            }
            m[(i, j)] = state.amplitudes[idx];
        }
    }
    Ok(m)
}

/// Result of a Schmidt decomposition across a party cut.
#[derive(Debug, Clone, Serialize)]
pub struct SchmidtDecomposition {
    /// Schmidt coefficients, descending. Squares sum to 1.
    pub coefficients: Vec<f64>,
    pub rank: usize,
    /// Entanglement entropy in bits: -sum_i c_i^2 log2 c_i^2.
    pub entropy_bits: f64,
}

/// Schmidt analysis of `state` across the cut separating `left_parties` from
/// the rest of the layout.
pub fn schmidt(state: &QuantumState, left_parties: &[Party]) -> Result<SchmidtDecomposition> {
    schmidt_with_threshold(state, left_parties, RANK_THRESHOLD)
}

pub fn schmidt_with_threshold(
    state: &QuantumState,
    left_parties: &[Party],
    rank_threshold: f64,
) -> Result<SchmidtDecomposition> {
    let left = state.layout.names_of_parties(left_parties);
    let total = state.layout.registers().len();
    if left.is_empty() || left.len() == total {
        return Err(Error::OneSidedCut);
    }
    let left_width: usize = left
        .iter()
        .map(|n| state.layout.register(n).unwrap().width)
        .sum();
    let right_width = state.layout.total_width() - left_width;
    // Work with the smaller Gram matrix.
    let m = bipartition_matrix(state, &left)?;
    let gram = if left_width <= right_width {
        &m * m.adjoint()
    } else {
        m.adjoint() * &m
    };
    let mut evals: Vec<f64> = gram.symmetric_eigen().eigenvalues.iter().copied().collect();
    evals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let coefficients: Vec<f64> = evals.iter().map(|&e| e.max(0.0).sqrt()).collect();
    let rank = coefficients.iter().filter(|&&c| c > rank_threshold).count();
    let entropy_bits = -coefficients
        .iter()
        .map(|&c| {
            let p = c * c;
            if p > 0.0 {
                p * p.log2()
            } else {
                0.0
            }
        })
        .sum::<f64>();
    Ok(SchmidtDecomposition {
        coefficients,
        rank,
        entropy_bits,
    })
}

/// Trace distance between two pure states: sqrt(1 - |<b|a>|^2).
pub fn trace_distance(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    let f = a.fidelity(b)?;
    Ok((1.0 - f.min(1.0)).max(0.0).sqrt())
}

/// Euclidean distance between amplitude vectors. Upper-bounds the pure-state
/// trace distance by a factor sqrt(2), without the floating-point floor the
/// overlap formula hits near zero distance.
pub fn amplitude_distance(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    check_same_layout(&a.layout, &b.layout)?;
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

impl Serialize for QuantumState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut interleaved = Vec::with_capacity(self.amplitudes.len() * 2);
        for a in &self.amplitudes {
            interleaved.push(a.re);
            interleaved.push(a.im);
        }
        let mut s = serializer.serialize_struct("QuantumState", 2)?;
        s.serialize_field("layout", self.layout.registers())?;
        s.serialize_field("amplitudes", &interleaved)?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for QuantumState {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            layout: Vec<Register>,
            amplitudes: Vec<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let layout = RegisterLayout::new(raw.layout).map_err(serde::de::Error::custom)?;
        if raw.amplitudes.len() % 2 != 0 {
            return Err(serde::de::Error::custom("odd amplitude array length"));
        }
        let amps: Vec<Complex64> = raw
            .amplitudes
            .chunks(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect();
        QuantumState::from_amplitudes(layout, amps).map_err(serde::de::Error::custom)
    }
}
