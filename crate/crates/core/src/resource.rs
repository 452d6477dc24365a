//! Resource calculus: exact circuit identities among cbits, cobits, qubits
//! and ebits, affine maps between achievable rate regions, and a ledger
//! executor for derivation scripts built from those identities.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::LocalGate;
use crate::qstate::{
    apply_local, partial_trace, schmidt, trace_distance_to_pure, Party, QuantumState,
    RegisterLayout,
};

// ---------------------------------------------------------------------------
// Points and region maps
// ---------------------------------------------------------------------------

/// A vector of resource rates; negative entries mean consumption. The
/// `gate_use` axis counts uses of the bipartite gate in derivations.
#[derive(Debug, Default, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourcePoint {
    #[serde(default)]
    pub cbit_fwd: f64,
    #[serde(default)]
    pub cbit_back: f64,
    #[serde(default)]
    pub cobit_fwd: f64,
    #[serde(default)]
    pub cobit_back: f64,
    #[serde(default)]
    pub qubit_fwd: f64,
    #[serde(default)]
    pub qubit_back: f64,
    #[serde(default)]
    pub ebit: f64,
    #[serde(default)]
    pub gate_use: f64,
}

impl ResourcePoint {
    const AXES: [&'static str; 8] = [
        "cbit_fwd",
        "cbit_back",
        "cobit_fwd",
        "cobit_back",
        "qubit_fwd",
        "qubit_back",
        "ebit",
        "gate_use",
    ];

    fn as_array(&self) -> [f64; 8] {
        [
            self.cbit_fwd,
            self.cbit_back,
            self.cobit_fwd,
            self.cobit_back,
            self.qubit_fwd,
            self.qubit_back,
            self.ebit,
            self.gate_use,
        ]
    }

    fn from_array(v: [f64; 8]) -> Self {
        Self {
            cbit_fwd: v[0],
            cbit_back: v[1],
            cobit_fwd: v[2],
            cobit_back: v[3],
            qubit_fwd: v[4],
            qubit_back: v[5],
            ebit: v[6],
            gate_use: v[7],
        }
    }

    pub fn add_scaled(&self, other: &ResourcePoint, scale: f64) -> Self {
        let mut a = self.as_array();
        let b = other.as_array();
        for (x, y) in a.iter_mut().zip(b) {
            *x += scale * y;
        }
        Self::from_array(a)
    }

    /// The most negative axis, if any axis is below `-tol`.
    pub fn negative_axis(&self, tol: f64) -> Option<(&'static str, f64)> {
        self.as_array()
            .into_iter()
            .zip(Self::AXES)
            .filter(|&(v, _)| v < -tol)
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .map(|(v, n)| (n, v))
    }

    /// Componentwise `self >= other - tol`.
    pub fn covers(&self, other: &ResourcePoint, tol: f64) -> bool {
        self.as_array()
            .into_iter()
            .zip(other.as_array())
            .all(|(a, b)| a >= b - tol)
    }
}

/// Achievable-region labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Region {
    Cce,
    CoCoE,
    Qqe,
    QCoE,
    CoQe,
    Qce,
    Cqe,
    Rre,
    CoE,
    Qe,
}

/// Forward map of the two-way coherent/incoherent equivalence:
/// (C1, C2, E) in CCE <-> (C1, C2, E - min(C1,0) - min(C2,0)) in CoCoE.
pub fn map_cce_cocoe(p: [f64; 3], forward: bool) -> [f64; 3] {
    let shift = p[0].min(0.0) + p[1].min(0.0);
    if forward {
        [p[0], p[1], p[2] - shift]
    } else {
        [p[0], p[1], p[2] + shift]
    }
}

/// Single edges of the four-region diamond, each an application of
/// 2 cobits = 1 qubit + 1 ebit on one coordinate.
fn diamond_edge(p: [f64; 3], from: Region, to: Region) -> Option<[f64; 3]> {
    use Region::*;
    Some(match (from, to) {
        // forward coordinate doubles: qubit -> cobits
        (Qqe, CoQe) => [2.0 * p[0], p[1], p[2] - p[0]],
        (CoQe, Qqe) => [p[0] / 2.0, p[1], p[2] + p[0] / 2.0],
        (Qqe, QCoE) => [p[0], 2.0 * p[1], p[2] - p[1]],
        (QCoE, Qqe) => [p[0], p[1] / 2.0, p[2] + p[1] / 2.0],
        (CoQe, CoCoE) => [p[0], 2.0 * p[1], p[2] - p[1]],
        (CoCoE, CoQe) => [p[0], p[1] / 2.0, p[2] + p[1] / 2.0],
        (QCoE, CoCoE) => [2.0 * p[0], p[1], p[2] - p[0]],
        (CoCoE, QCoE) => [p[0] / 2.0, p[1], p[2] + p[0] / 2.0],
        _ => return None,
    })
}

fn to_qqe(p: [f64; 3], from: Region) -> Option<[f64; 3]> {
    use Region::*;
    match from {
        Qqe => Some(p),
        CoQe | QCoE => diamond_edge(p, from, Qqe),
        CoCoE => diamond_edge(diamond_edge(p, CoCoE, CoQe)?, CoQe, Qqe),
        _ => None,
    }
}

fn from_qqe(p: [f64; 3], to: Region) -> Option<[f64; 3]> {
    use Region::*;
    match to {
        Qqe => Some(p),
        CoQe | QCoE => diamond_edge(p, Qqe, to),
        CoCoE => diamond_edge(diamond_edge(p, Qqe, CoQe)?, CoQe, CoCoE),
        _ => None,
    }
}

/// Map a rate triple between any two regions of the
/// QQE / CoQE / QCoE / CoCoE diamond. Path independent by construction;
/// the single edges are exposed through this same function.
pub fn map_diamond(p: [f64; 3], from: Region, to: Region) -> Result<[f64; 3]> {
    if from == to {
        return Ok(p);
    }
    if let Some(q) = diamond_edge(p, from, to) {
        return Ok(q);
    }
    let mid = to_qqe(p, from)
        .ok_or_else(|| Error::UnconnectedRegions(format!("{from:?}"), format!("{to:?}")))?;
    from_qqe(mid, to)
        .ok_or_else(|| Error::UnconnectedRegions(format!("{from:?}"), format!("{to:?}")))
}

/// One-way tradeoff map: (Q, E) in QE <-> (2Q, E - Q) in CoE.
pub fn map_one_way(p: [f64; 2], forward: bool) -> [f64; 2] {
    if forward {
        [2.0 * p[0], p[1] - p[0]]
    } else {
        [p[0] / 2.0, p[1] + p[0] / 2.0]
    }
}

/// Incoherent-to-cobit lift on one classical coordinate, as in the CCE map:
/// applies E -> E - min(C, 0) for the named classical coordinate.
fn classical_coordinate_lift(p: [f64; 3], coord: usize, forward: bool) -> [f64; 3] {
    let shift = p[coord].min(0.0);
    let mut q = p;
    if forward {
        q[2] -= shift;
    } else {
        q[2] += shift;
    }
    q
}

/// Named region maps addressable from files and the command line.
pub fn apply_named_map(name: &str, p: &[f64]) -> Result<Vec<f64>> {
    let need3 = |p: &[f64]| -> Result<[f64; 3]> {
        p.try_into()
            .map_err(|_| Error::OutOfRange(format!("map needs 3 coordinates, got {}", p.len())))
    };
    let need2 = |p: &[f64]| -> Result<[f64; 2]> {
        p.try_into()
            .map_err(|_| Error::OutOfRange(format!("map needs 2 coordinates, got {}", p.len())))
    };
    use Region::*;
    Ok(match name {
        "thm12" | "cce-to-cocoe" => map_cce_cocoe(need3(p)?, true).to_vec(),
        "thm12-inv" | "cocoe-to-cce" => map_cce_cocoe(need3(p)?, false).to_vec(),
        "qqe-to-coqe" => map_diamond(need3(p)?, Qqe, CoQe)?.to_vec(),
        "coqe-to-qqe" => map_diamond(need3(p)?, CoQe, Qqe)?.to_vec(),
        "qqe-to-qcoe" => map_diamond(need3(p)?, Qqe, QCoE)?.to_vec(),
        "qcoe-to-qqe" => map_diamond(need3(p)?, QCoE, Qqe)?.to_vec(),
        "coqe-to-cocoe" => map_diamond(need3(p)?, CoQe, CoCoE)?.to_vec(),
        "cocoe-to-coqe" => map_diamond(need3(p)?, CoCoE, CoQe)?.to_vec(),
        "qcoe-to-cocoe" => map_diamond(need3(p)?, QCoE, CoCoE)?.to_vec(),
        "cocoe-to-qcoe" => map_diamond(need3(p)?, CoCoE, QCoE)?.to_vec(),
        "qqe-to-cocoe" => map_diamond(need3(p)?, Qqe, CoCoE)?.to_vec(),
        "cocoe-to-qqe" => map_diamond(need3(p)?, CoCoE, Qqe)?.to_vec(),
        "qce-to-qcoe" => classical_coordinate_lift(need3(p)?, 1, true).to_vec(),
        "qcoe-to-qce" => classical_coordinate_lift(need3(p)?, 1, false).to_vec(),
        "cqe-to-coqe" => classical_coordinate_lift(need3(p)?, 0, true).to_vec(),
        "coqe-to-cqe" => classical_coordinate_lift(need3(p)?, 0, false).to_vec(),
        "qe-to-coe" => map_one_way(need2(p)?, true).to_vec(),
        "coe-to-qe" => map_one_way(need2(p)?, false).to_vec(),
        // two-way remote state preparation achieves exactly CCE
        "rre-to-cce" | "cce-to-rre" => need3(p)?.to_vec(),
        other => return Err(Error::UnknownMap(other.to_string())),
    })
}

pub const MAP_NAMES: &[&str] = &[
    "thm12",
    "thm12-inv",
    "qqe-to-coqe",
    "coqe-to-qqe",
    "qqe-to-qcoe",
    "qcoe-to-qqe",
    "coqe-to-cocoe",
    "cocoe-to-coqe",
    "qcoe-to-cocoe",
    "cocoe-to-qcoe",
    "qqe-to-cocoe",
    "cocoe-to-qqe",
    "qce-to-qcoe",
    "qcoe-to-qce",
    "cqe-to-coqe",
    "coqe-to-cqe",
    "qe-to-coe",
    "coe-to-qe",
    "rre-to-cce",
    "cce-to-rre",
];

// ---------------------------------------------------------------------------
// Exact circuit identities
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    Teleport,
    Superdense,
    TwoCobits,
    TpSd,
}

impl Identity {
    pub const ALL: [Identity; 4] = [
        Identity::Teleport,
        Identity::Superdense,
        Identity::TwoCobits,
        Identity::TpSd,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Identity::Teleport => "teleport",
            Identity::Superdense => "superdense",
            Identity::TwoCobits => "two_cobits",
            Identity::TpSd => "tp_sd",
        }
    }
}

fn gate(g: LocalGate) -> nalgebra::DMatrix<Complex64> {
    g.matrix().expect("builtin gate")
}

fn apply(s: &QuantumState, g: LocalGate, targets: &[&str]) -> QuantumState {
    apply_local(s, &gate(g), targets).expect("identity circuit step")
}

/// Single-qubit probe amplitudes: |0>, |1>, |+>, |i>.
fn qubit_probes() -> Vec<[Complex64; 2]> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        [Complex64::ONE, Complex64::ZERO],
        [Complex64::ZERO, Complex64::ONE],
        [Complex64::new(s, 0.0), Complex64::new(s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(0.0, s)],
    ]
}

fn entangle(s: &QuantumState, a: &str, b: &str) -> QuantumState {
    let s = apply(s, LocalGate::H, &[a]);
    apply(&s, LocalGate::Cnot, &[a, b])
}

/// Teleportation: 2 cbits + 1 ebit -> 1 qubit. The two classical bits are
/// copied to environment registers, so the channel really is classical.
/// Returns the worst probe deviation from the identity channel.
fn teleport_error() -> Result<f64> {
    let layout = RegisterLayout::of(&[
        ("R", Party::Reference, 1),
        ("Psi", Party::Alice, 1),
        ("Ea", Party::Alice, 1),
        ("Eb", Party::Bob, 1),
        ("C1", Party::Environment, 1),
        ("C2", Party::Environment, 1),
    ])?;
    let mut worst: f64 = 0.0;
    let run = |amps_psi: Option<[Complex64; 2]>| -> Result<f64> {
        // probe on Psi, or a reference-entangled probe when None
        let dim = layout.dimension();
        let mut amps = vec![Complex64::ZERO; dim];
        let psi_shift = layout.bit_shifts(&["Psi"])?[0];
        let r_shift = layout.bit_shifts(&["R"])?[0];
        match amps_psi {
            Some(probe) => {
                amps[0] = probe[0];
                amps[1usize << psi_shift] = probe[1];
            }
            None => {
                let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                amps[0] = s;
                amps[(1usize << psi_shift) | (1usize << r_shift)] = s;
            }
        }
        let state = QuantumState::from_amplitudes(layout.clone(), amps)?;
        let state = entangle(&state, "Ea", "Eb");
        // Bell measurement basis change
        let state = apply(&state, LocalGate::Cnot, &["Psi", "Ea"]);
        let state = apply(&state, LocalGate::H, &["Psi"]);
        // classical transmission: environment keeps copies of both bits
        let state = apply(&state, LocalGate::Cnot, &["Psi", "C1"]);
        let state = apply(&state, LocalGate::Cnot, &["Ea", "C2"]);
        // conditioned corrections at Bob's side
        let state = apply(&state, LocalGate::Cnot, &["Ea", "Eb"]);
        let state = apply(&state, LocalGate::Cz, &["Psi", "Eb"]);

        // ideal: the probe, now on (R, Eb)
        let ideal_layout = RegisterLayout::of(&[
            ("R", Party::Reference, 1),
            ("Eb", Party::Bob, 1),
        ])?;
        let mut ideal = vec![Complex64::ZERO; 4];
        match amps_psi {
            Some(probe) => {
                ideal[0] = probe[0];
                ideal[1] = probe[1];
            }
            None => {
                let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                ideal[0] = s;
                ideal[3] = s;
            }
        }
        let ideal = QuantumState::from_amplitudes(ideal_layout, ideal)?;
        let rho = partial_trace(&state, &["R", "Eb"])?;
        trace_distance_to_pure(&rho, &ideal)
    };
    for probe in qubit_probes() {
        worst = worst.max(run(Some(probe))?);
    }
    worst = worst.max(run(None)?);
    Ok(worst)
}

/// Superdense coding: 1 qubit + 1 ebit -> 2 cbits, checked on all four
/// messages.
fn superdense_error() -> Result<f64> {
    let layout = RegisterLayout::of(&[("Ea", Party::Alice, 1), ("Eb", Party::Bob, 1)])?;
    let mut worst: f64 = 0.0;
    for a in 0..2usize {
        for b in 0..2usize {
            let zero = crate::qstate::basis_state_values(&layout, &[])?;
            let mut state = entangle(&zero, "Ea", "Eb");
            if a == 1 {
                state = apply(&state, LocalGate::X, &["Ea"]);
            }
            if b == 1 {
                state = apply(&state, LocalGate::Z, &["Ea"]);
            }
            // Ea is sent; Bob decodes
            let state = apply(&state, LocalGate::Cnot, &["Ea", "Eb"]);
            let state = apply(&state, LocalGate::H, &["Ea"]);
            // decoded bits: Eb holds a, Ea holds b
            let ideal = crate::qstate::basis_state_values(
                &layout,
                &[("Ea", b), ("Eb", a)],
            )?;
            let rho = partial_trace(&state, &["Ea", "Eb"])?;
            worst = worst.max(trace_distance_to_pure(&rho, &ideal)?);
        }
    }
    Ok(worst)
}

/// Coherent superdense coding: 1 qubit + 1 ebit -> 2 cobits. Alice applies
/// conditional Paulis from her message qubits onto her EPR half, sends it,
/// and Bob's local decoding leaves both messages with both parties.
fn two_cobits_error() -> Result<f64> {
    let layout = RegisterLayout::of(&[
        ("R", Party::Reference, 2),
        ("Ma", Party::Alice, 1),
        ("Mb", Party::Alice, 1),
        ("Ea", Party::Alice, 1),
        ("Eb", Party::Bob, 1),
    ])?;
    let run = |probe: &[((usize, usize), Complex64)]| -> Result<f64> {
        let dim = layout.dimension();
        let mut amps = vec![Complex64::ZERO; dim];
        let shifts = layout.bit_shifts(&["R", "Ma", "Mb"])?; // r1 r0? careful
        let (r_hi, r_lo, ma, mb) = (shifts[0], shifts[1], shifts[2], shifts[3]);
        for &((r, m), amp) in probe {
            let mut idx = 0usize;
            if r & 2 != 0 {
                idx |= 1 << r_hi;
            }
            if r & 1 != 0 {
                idx |= 1 << r_lo;
            }
            if m & 2 != 0 {
                idx |= 1 << ma;
            }
            if m & 1 != 0 {
                idx |= 1 << mb;
            }
            amps[idx] = amp;
        }
        let state = QuantumState::from_amplitudes(layout.clone(), amps)?;
        let state = entangle(&state, "Ea", "Eb");
        let state = apply(&state, LocalGate::Cnot, &["Ma", "Ea"]);
        let state = apply(&state, LocalGate::Cz, &["Mb", "Ea"]);
        // Ea sent to Bob, who decodes: afterwards Eb holds a, Ea holds b
        let state = state.with_party("Ea", Party::Bob)?;
        let state = apply(&state, LocalGate::Cnot, &["Ea", "Eb"]);
        let state = apply(&state, LocalGate::H, &["Ea"]);

        let ideal_layout = RegisterLayout::of(&[
            ("R", Party::Reference, 2),
            ("Ma", Party::Alice, 1),
            ("Mb", Party::Alice, 1),
            ("Ea", Party::Bob, 1),
            ("Eb", Party::Bob, 1),
        ])?;
        let mut ideal = vec![Complex64::ZERO; ideal_layout.dimension()];
        for &((r, m), amp) in probe {
            let (a, b) = (m >> 1, m & 1);
            let idx = (r << 4) | (a << 3) | (b << 2) | (b << 1) | a;
            ideal[idx] = amp;
        }
        let ideal = QuantumState::from_amplitudes(ideal_layout, ideal)?;
        let rho = partial_trace(&state, &["R", "Ma", "Mb", "Ea", "Eb"])?;
        trace_distance_to_pure(&rho, &ideal)
    };
    let mut worst: f64 = 0.0;
    // all four basis messages
    for m in 0..4usize {
        worst = worst.max(run(&[((0, m), Complex64::ONE)])?);
    }
    // uniform superposition and a reference-entangled probe
    let half = Complex64::new(0.5, 0.0);
    let sup: Vec<((usize, usize), Complex64)> =
        (0..4).map(|m| ((0usize, m), half)).collect();
    worst = worst.max(run(&sup)?);
    let ent: Vec<((usize, usize), Complex64)> = (0..4).map(|m| ((m, m), half)).collect();
    worst = worst.max(run(&ent)?);
    Ok(worst)
}

/// The composed inequality 1 cbit + 1 ebit >= 1 cobit, realized by coherent
/// superdense coding whose transmitted qubit travels by teleportation.
/// Returns (worst probe deviation, entanglement of the |+> probe output).
fn tp_sd_error() -> Result<(f64, f64)> {
    let layout = RegisterLayout::of(&[
        ("R", Party::Reference, 2),
        ("Ma", Party::Alice, 1),
        ("Mb", Party::Alice, 1),
        ("E1a", Party::Alice, 1),
        ("E1b", Party::Bob, 1),
        ("E2a", Party::Alice, 1),
        ("E2b", Party::Bob, 1),
        ("C1", Party::Environment, 1),
        ("C2", Party::Environment, 1),
    ])?;
    let run = |probe: &[((usize, usize), Complex64)]| -> Result<(f64, QuantumState)> {
        let dim = layout.dimension();
        let mut amps = vec![Complex64::ZERO; dim];
        let shifts = layout.bit_shifts(&["R", "Ma", "Mb"])?;
        for &((r, m), amp) in probe {
            let mut idx = 0usize;
            if r & 2 != 0 {
                idx |= 1 << shifts[0];
            }
            if r & 1 != 0 {
                idx |= 1 << shifts[1];
            }
            if m & 2 != 0 {
                idx |= 1 << shifts[2];
            }
            if m & 1 != 0 {
                idx |= 1 << shifts[3];
            }
            amps[idx] = amp;
        }
        let state = QuantumState::from_amplitudes(layout.clone(), amps)?;
        let state = entangle(&state, "E1a", "E1b");
        let state = entangle(&state, "E2a", "E2b");
        // superdense encoding on E1a
        let state = apply(&state, LocalGate::Cnot, &["Ma", "E1a"]);
        let state = apply(&state, LocalGate::Cz, &["Mb", "E1a"]);
        // teleport E1a to Bob through the second pair and two cbits
        let state = apply(&state, LocalGate::Cnot, &["E1a", "E2a"]);
        let state = apply(&state, LocalGate::H, &["E1a"]);
        let state = apply(&state, LocalGate::Cnot, &["E1a", "C1"]);
        let state = apply(&state, LocalGate::Cnot, &["E2a", "C2"]);
        let state = apply(&state, LocalGate::Cnot, &["E2a", "E2b"]);
        let state = apply(&state, LocalGate::Cz, &["E1a", "E2b"]);
        // Bob decodes superdense with the teleported qubit in E2b
        let state = apply(&state, LocalGate::Cnot, &["E2b", "E1b"]);
        let state = apply(&state, LocalGate::H, &["E2b"]);
        // now E1b holds a, E2b holds b

        let ideal_layout = RegisterLayout::of(&[
            ("R", Party::Reference, 2),
            ("Ma", Party::Alice, 1),
            ("Mb", Party::Alice, 1),
            ("E1b", Party::Bob, 1),
            ("E2b", Party::Bob, 1),
        ])?;
        let mut ideal = vec![Complex64::ZERO; ideal_layout.dimension()];
        for &((r, m), amp) in probe {
            let (a, b) = (m >> 1, m & 1);
            let idx = (r << 4) | (a << 3) | (b << 2) | (a << 1) | b;
            ideal[idx] = amp;
        }
        let ideal = QuantumState::from_amplitudes(ideal_layout.clone(), ideal)?;
        let rho = partial_trace(&state, &["R", "Ma", "Mb", "E1b", "E2b"])?;
        Ok((trace_distance_to_pure(&rho, &ideal)?, ideal))
    };
    let mut worst: f64 = 0.0;
    for m in 0..4usize {
        worst = worst.max(run(&[((0, m), Complex64::ONE)])?.0);
    }
    let half = Complex64::new(0.5, 0.0);
    let sup: Vec<((usize, usize), Complex64)> =
        (0..4).map(|m| ((0usize, m), half)).collect();
    worst = worst.max(run(&sup)?.0);
    // the |+> probe on Ma: the produced cobit holds one ebit
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let plus = vec![((0usize, 0usize), s), ((0, 2), s)];
    let (d, ideal_plus) = run(&plus)?;
    worst = worst.max(d);
    let produced_ebits = schmidt(&ideal_plus, &[Party::Alice, Party::Reference])?.entropy_bits;
    Ok((worst, produced_ebits))
}

/// Build one of the exact resource identities as a statevector circuit and
/// return its worst probe deviation from the ideal resource map.
pub fn verify_identity(which: Identity) -> Result<f64> {
    match which {
        Identity::Teleport => teleport_error(),
        Identity::Superdense => superdense_error(),
        Identity::TwoCobits => two_cobits_error(),
        Identity::TpSd => tp_sd_error().map(|(d, _)| d),
    }
}

/// tp_sd with its ebit accounting: the deviation plus the entanglement held
/// in the produced cobit on a |+> input (1 ebit, repaying one of the two
/// consumed).
pub fn verify_tp_sd_ledger() -> Result<(f64, f64)> {
    tp_sd_error()
}

// ---------------------------------------------------------------------------
// Derivation scripts
// ---------------------------------------------------------------------------

/// Consumed/produced vectors of the built-in resource identities, at unit
/// multiplicity.
pub fn identity_exchange(name: &str) -> Result<(ResourcePoint, ResourcePoint)> {
    let mut consume = ResourcePoint::default();
    let mut produce = ResourcePoint::default();
    match name {
        "teleport_fwd" => {
            consume.cbit_fwd = 2.0;
            consume.ebit = 1.0;
            produce.qubit_fwd = 1.0;
        }
        "teleport_back" => {
            consume.cbit_back = 2.0;
            consume.ebit = 1.0;
            produce.qubit_back = 1.0;
        }
        "superdense_fwd" => {
            consume.qubit_fwd = 1.0;
            consume.ebit = 1.0;
            produce.cbit_fwd = 2.0;
        }
        "superdense_back" => {
            consume.qubit_back = 1.0;
            consume.ebit = 1.0;
            produce.cbit_back = 2.0;
        }
        "two_cobits_fwd" => {
            consume.qubit_fwd = 1.0;
            consume.ebit = 1.0;
            produce.cobit_fwd = 2.0;
        }
        "two_cobits_back" => {
            consume.qubit_back = 1.0;
            consume.ebit = 1.0;
            produce.cobit_back = 2.0;
        }
        // the same equivalence read right to left
        "cobits_to_qubit_fwd" => {
            consume.cobit_fwd = 2.0;
            produce.qubit_fwd = 1.0;
            produce.ebit = 1.0;
        }
        "cobits_to_qubit_back" => {
            consume.cobit_back = 2.0;
            produce.qubit_back = 1.0;
            produce.ebit = 1.0;
        }
        "tp_sd_fwd" => {
            consume.cbit_fwd = 1.0;
            consume.ebit = 1.0;
            produce.cobit_fwd = 1.0;
        }
        "tp_sd_back" => {
            consume.cbit_back = 1.0;
            consume.ebit = 1.0;
            produce.cobit_back = 1.0;
        }
        "cobit_to_cbit_fwd" => {
            consume.cobit_fwd = 1.0;
            produce.cbit_fwd = 1.0;
        }
        "cobit_to_cbit_back" => {
            consume.cobit_back = 1.0;
            produce.cbit_back = 1.0;
        }
        // a cobit run on |+> leaves an EPR pair
        "cobit_to_ebit_fwd" => {
            consume.cobit_fwd = 1.0;
            produce.ebit = 1.0;
        }
        "cobit_to_ebit_back" => {
            consume.cobit_back = 1.0;
            produce.ebit = 1.0;
        }
        "qubit_to_cobit_fwd" => {
            consume.qubit_fwd = 1.0;
            produce.cobit_fwd = 1.0;
        }
        "qubit_to_cobit_back" => {
            consume.qubit_back = 1.0;
            produce.cobit_back = 1.0;
        }
        "qubit_to_cbit_fwd" => {
            consume.qubit_fwd = 1.0;
            produce.cbit_fwd = 1.0;
        }
        "qubit_to_cbit_back" => {
            consume.qubit_back = 1.0;
            produce.cbit_back = 1.0;
        }
        other => return Err(Error::UnknownIdentity(other.to_string())),
    }
    Ok((consume, produce))
}

/// One step of a derivation: a named identity or an explicit capability,
/// applied `times` times.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capability: Option<Capability>,
    #[serde(default = "one")]
    pub times: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Capability {
    pub consume: ResourcePoint,
    pub produce: ResourcePoint,
}

/// A derivation script: starting holdings, steps, and the target the final
/// holdings must cover.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivationScript {
    #[serde(default = "script_version")]
    pub version: u32,
    pub initial: ResourcePoint,
    pub steps: Vec<Step>,
    pub target: ResourcePoint,
}

fn script_version() -> u32 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub valid: bool,
    /// First step that drove some holding negative, if any.
    pub failing_step: Option<usize>,
    pub message: String,
    /// Holdings after each step.
    pub holdings: Vec<ResourcePoint>,
}

const HOLDING_TOL: f64 = 1e-9;

/// Execute a derivation script: rates add linearly, consumed resources must
/// be covered by current holdings at every step, and the final holdings
/// must cover the target.
pub fn check_derivation(script: &DerivationScript) -> Result<Verdict> {
    let mut h = script.initial;
    let mut holdings = Vec::with_capacity(script.steps.len());
    for (i, step) in script.steps.iter().enumerate() {
        if step.times < 0.0 {
            return Err(Error::OutOfRange(format!(
                "step {i} has negative multiplicity"
            )));
        }
        let (consume, produce) = match (&step.identity, &step.capability) {
            (Some(name), None) => identity_exchange(name)?,
            (None, Some(cap)) => (cap.consume, cap.produce),
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "step {i} must name exactly one of identity / capability"
                )))
            }
        };
        h = h.add_scaled(&consume, -step.times);
        if let Some((axis, value)) = h.negative_axis(HOLDING_TOL) {
            holdings.push(h);
            return Ok(Verdict {
                valid: false,
                failing_step: Some(i),
                message: format!("step {i} leaves {axis} = {value}"),
                holdings,
            });
        }
        h = h.add_scaled(&produce, step.times);
        holdings.push(h);
    }
    if h.covers(&script.target, HOLDING_TOL) {
        Ok(Verdict {
            valid: true,
            failing_step: None,
            message: "ok".into(),
            holdings,
        })
    } else {
        Ok(Verdict {
            valid: false,
            failing_step: None,
            message: "final holdings do not cover the target".into(),
            holdings,
        })
    }
}

/// The executable implication chains in the proof that back communication
/// only trivially helps: keyed by name for tests and the command line.
pub fn theorem2_scripts() -> BTreeMap<&'static str, DerivationScript> {
    let mut scripts = BTreeMap::new();
    // (ccelo) => (1loccc): add a backward cobit, burn it into an ebit
    scripts.insert(
        "ccelo_to_1loccc",
        DerivationScript {
            version: 1,
            initial: ResourcePoint {
                cobit_back: 1.0,
                gate_use: 1.0,
                ..Default::default()
            },
            steps: vec![
                Step {
                    identity: None,
                    capability: Some(Capability {
                        consume: ResourcePoint {
                            gate_use: 1.0,
                            ..Default::default()
                        },
                        produce: ResourcePoint {
                            cobit_fwd: 1.0,
                            ..Default::default()
                        },
                    }),
                    times: 1.0,
                },
                Step {
                    identity: Some("cobit_to_ebit_back".into()),
                    capability: None,
                    times: 1.0,
                },
            ],
            target: ResourcePoint {
                cobit_fwd: 1.0,
                ebit: 1.0,
                ..Default::default()
            },
        },
    );
    // (1loccc) => (1locc): supply the backward cobit by tp_sd, downgrade
    // the forward cobit to a cbit
    scripts.insert(
        "1loccc_to_1locc",
        DerivationScript {
            version: 1,
            initial: ResourcePoint {
                cbit_back: 1.0,
                ebit: 1.0,
                gate_use: 1.0,
                ..Default::default()
            },
            steps: vec![
                Step {
                    identity: Some("tp_sd_back".into()),
                    capability: None,
                    times: 1.0,
                },
                Step {
                    identity: None,
                    capability: Some(Capability {
                        consume: ResourcePoint {
                            cobit_back: 1.0,
                            gate_use: 1.0,
                            ..Default::default()
                        },
                        produce: ResourcePoint {
                            cobit_fwd: 1.0,
                            ebit: 1.0,
                            ..Default::default()
                        },
                    }),
                    times: 1.0,
                },
                Step {
                    identity: Some("cobit_to_cbit_fwd".into()),
                    capability: None,
                    times: 1.0,
                },
            ],
            target: ResourcePoint {
                cbit_fwd: 1.0,
                ebit: 1.0,
                ..Default::default()
            },
        },
    );
    // (ccelo) => (celo): a cobit is at least a cbit
    scripts.insert(
        "ccelo_to_celo",
        DerivationScript {
            version: 1,
            initial: ResourcePoint {
                gate_use: 1.0,
                ..Default::default()
            },
            steps: vec![
                Step {
                    identity: None,
                    capability: Some(Capability {
                        consume: ResourcePoint {
                            gate_use: 1.0,
                            ..Default::default()
                        },
                        produce: ResourcePoint {
                            cobit_fwd: 1.0,
                            ..Default::default()
                        },
                    }),
                    times: 1.0,
                },
                Step {
                    identity: Some("cobit_to_cbit_fwd".into()),
                    capability: None,
                    times: 1.0,
                },
            ],
            target: ResourcePoint {
                cbit_fwd: 1.0,
                ..Default::default()
            },
        },
    );
    // (elo) => (2loccc): cobits assist entanglement generation trivially
    scripts.insert(
        "elo_to_2loccc",
        DerivationScript {
            version: 1,
            initial: ResourcePoint {
                cobit_fwd: 1.0,
                cobit_back: 1.0,
                gate_use: 1.0,
                ..Default::default()
            },
            steps: vec![
                Step {
                    identity: None,
                    capability: Some(Capability {
                        consume: ResourcePoint {
                            gate_use: 1.0,
                            ..Default::default()
                        },
                        produce: ResourcePoint {
                            ebit: 1.0,
                            ..Default::default()
                        },
                    }),
                    times: 1.0,
                },
                Step {
                    identity: Some("cobit_to_ebit_fwd".into()),
                    capability: None,
                    times: 1.0,
                },
                Step {
                    identity: Some("cobit_to_ebit_back".into()),
                    capability: None,
                    times: 1.0,
                },
            ],
            target: ResourcePoint {
                ebit: 3.0,
                ..Default::default()
            },
        },
    );
    // (2loccc) => (2locc): borrow pad ebits, lift both cbit streams to
    // cobits by tp_sd, and return the borrow from the produced ebits
    scripts.insert(
        "2loccc_to_2locc",
        DerivationScript {
            version: 1,
            initial: ResourcePoint {
                cbit_fwd: 1.0,
                cbit_back: 1.0,
                ebit: 2.0,
                gate_use: 1.0,
                ..Default::default()
            },
            steps: vec![
                Step {
                    identity: Some("tp_sd_fwd".into()),
                    capability: None,
                    times: 1.0,
                },
                Step {
                    identity: Some("tp_sd_back".into()),
                    capability: None,
                    times: 1.0,
                },
                Step {
                    identity: None,
                    capability: Some(Capability {
                        consume: ResourcePoint {
                            cobit_fwd: 1.0,
                            cobit_back: 1.0,
                            gate_use: 1.0,
                            ..Default::default()
                        },
                        produce: ResourcePoint {
                            ebit: 3.0,
                            ..Default::default()
                        },
                    }),
                    times: 1.0,
                },
            ],
            target: ResourcePoint {
                ebit: 3.0,
                ..Default::default()
            },
        },
    );
    scripts
}
