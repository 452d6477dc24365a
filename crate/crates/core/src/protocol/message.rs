use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::gates::{BipartiteGate, LocalGate};
use crate::qstate::{
    apply_local, basis_state_values, Party, QuantumState, Register, RegisterLayout,
};

/// Register names reserved for the coherentification machinery: message
/// copies (A0/B0), one-time-pad keys (A3/B3, A4/B4) and probe references.
pub const RESERVED_NAMES: &[&str] = &["A0", "B0", "A3", "B3", "A4", "B4", "R"];

/// One local gate application inside a round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalOp {
    #[serde(flatten)]
    pub gate: LocalGate,
    pub targets: Vec<String>,
}

/// Local isometries applied by both parties between gate uses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Round {
    #[serde(default)]
    pub alice: Vec<LocalOp>,
    #[serde(default)]
    pub bob: Vec<LocalOp>,
}

/// Declaration of one protocol register. Environment-tagged registers model
/// deliberate leaks (measurement) by their owning party.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRegister {
    pub name: String,
    pub width: usize,
    #[serde(default)]
    pub environment: bool,
}

impl ProtocolRegister {
    pub fn new(name: &str, width: usize) -> Self {
        Self {
            name: name.to_string(),
            width,
            environment: false,
        }
    }

    pub fn env(name: &str, width: usize) -> Self {
        Self {
            name: name.to_string(),
            width,
            environment: true,
        }
    }
}

/// A two-way message protocol built from `n_uses` applications of one
/// bipartite gate, interleaved with local rounds:
/// rounds[0], gate, rounds[1], gate, ..., gate, rounds[n_uses].
///
/// Messages enter in `msg_in_a`/`msg_in_b`; after the protocol the received
/// messages sit in `msg_out_a` (Bob's message, on Alice's side) and
/// `msg_out_b` (Alice's message, on Bob's side).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MessageProtocol {
    pub name: String,
    pub gate: GateSpec,
    pub alice_registers: Vec<ProtocolRegister>,
    pub bob_registers: Vec<ProtocolRegister>,
    pub c1_bits: usize,
    pub c2_bits: usize,
    #[serde(default)]
    pub e_in_ebits: usize,
    #[serde(default)]
    pub declared_epsilon: f64,
    pub msg_in_a: Option<String>,
    pub msg_in_b: Option<String>,
    pub msg_out_a: Option<String>,
    pub msg_out_b: Option<String>,
    /// Register on Alice's side still holding her message after the protocol
    /// (needed by the cobit check). Defaults to `msg_in_a`.
    #[serde(default)]
    pub kept_a: Option<String>,
    #[serde(default)]
    pub kept_b: Option<String>,
    pub gate_targets_a: Vec<String>,
    pub gate_targets_b: Vec<String>,
    pub n_uses: usize,
    pub rounds: Vec<Round>,
}

/// Gate description in protocol files: a builtin name or an explicit matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GateSpec {
    Builtin {
        builtin: String,
    },
    Matrix {
        alice_width: usize,
        bob_width: usize,
        entries: Vec<(f64, f64)>,
    },
}

impl GateSpec {
    pub fn resolve(&self) -> Result<BipartiteGate> {
        match self {
            GateSpec::Builtin { builtin } => BipartiteGate::builtin(builtin),
            GateSpec::Matrix {
                alice_width,
                bob_width,
                entries,
            } => {
                let dim = 1usize << (alice_width + bob_width);
                if entries.len() != dim * dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim * dim,
                        got: entries.len(),
                    });
                }
                let m = nalgebra::DMatrix::from_row_slice(
                    dim,
                    dim,
                    &entries
                        .iter()
                        .map(|&(re, im)| num_complex::Complex64::new(re, im))
                        .collect::<Vec<_>>(),
                );
                BipartiteGate::new("matrix", *alice_width, *bob_width, m)
            }
        }
    }
}

impl MessageProtocol {
    /// Layout used by `run_protocol`: Alice's registers then Bob's, in
    /// declared order.
    pub fn protocol_layout(&self) -> Result<RegisterLayout> {
        let mut regs = Vec::new();
        for (list, party) in [
            (&self.alice_registers, Party::Alice),
            (&self.bob_registers, Party::Bob),
        ] {
            for r in list {
                regs.push(Register {
                    name: r.name.clone(),
                    party: if r.environment {
                        Party::Environment
                    } else {
                        party
                    },
                    width: r.width,
                });
            }
        }
        RegisterLayout::new(regs)
    }

    fn reg_width(&self, name: &str) -> Option<usize> {
        self.alice_registers
            .iter()
            .chain(&self.bob_registers)
            .find(|r| r.name == name)
            .map(|r| r.width)
    }

    fn check_named(&self, field: &str, name: &Option<String>, width: usize) -> Result<()> {
        match name {
            None if width == 0 => Ok(()),
            None => Err(Error::InvalidProtocol(format!(
                "{field} must name a register of width {width}"
            ))),
            Some(n) => {
                let got = self
                    .reg_width(n)
                    .ok_or_else(|| Error::UnknownRegister(n.clone()))?;
                if got != width {
                    return Err(Error::WidthMismatch {
                        name: n.clone(),
                        width,
                        got,
                    });
                }
                Ok(())
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds.len() != self.n_uses + 1 {
            return Err(Error::InvalidProtocol(format!(
                "{} rounds declared for {} gate uses; need n_uses + 1",
                self.rounds.len(),
                self.n_uses
            )));
        }
        for r in self.alice_registers.iter().chain(&self.bob_registers) {
            if RESERVED_NAMES.contains(&r.name.as_str()) {
                return Err(Error::InvalidProtocol(format!(
                    "register name `{}` is reserved",
                    r.name
                )));
            }
        }
        let layout = self.protocol_layout()?;
        self.check_named("msg_in_a", &self.msg_in_a, self.c1_bits)?;
        self.check_named("msg_in_b", &self.msg_in_b, self.c2_bits)?;
        self.check_named("msg_out_a", &self.msg_out_a, self.c2_bits)?;
        self.check_named("msg_out_b", &self.msg_out_b, self.c1_bits)?;
        if let Some(k) = &self.kept_a {
            self.check_named("kept_a", &Some(k.clone()), self.c1_bits)?;
        }
        if let Some(k) = &self.kept_b {
            self.check_named("kept_b", &Some(k.clone()), self.c2_bits)?;
        }
        let gate = self.gate.resolve()?;
        let wa: usize = self
            .gate_targets_a
            .iter()
            .map(|n| self.reg_width(n).unwrap_or(0))
            .sum();
        let wb: usize = self
            .gate_targets_b
            .iter()
            .map(|n| self.reg_width(n).unwrap_or(0))
            .sum();
        if wa != gate.alice_width || wb != gate.bob_width {
            return Err(Error::InvalidProtocol(format!(
                "gate targets have widths ({wa},{wb}), gate needs ({},{})",
                gate.alice_width, gate.bob_width
            )));
        }
        let alice_names: Vec<&str> = self.alice_registers.iter().map(|r| r.name.as_str()).collect();
        let bob_names: Vec<&str> = self.bob_registers.iter().map(|r| r.name.as_str()).collect();
        for t in &self.gate_targets_a {
            let reg = self
                .alice_registers
                .iter()
                .find(|r| &r.name == t)
                .ok_or_else(|| Error::CrossParty(format!("gate target `{t}` is not Alice's")))?;
            if reg.environment {
                return Err(Error::CrossParty(format!(
                    "gate target `{t}` is an environment register"
                )));
            }
        }
        for t in &self.gate_targets_b {
            let reg = self
                .bob_registers
                .iter()
                .find(|r| &r.name == t)
                .ok_or_else(|| Error::CrossParty(format!("gate target `{t}` is not Bob's")))?;
            if reg.environment {
                return Err(Error::CrossParty(format!(
                    "gate target `{t}` is an environment register"
                )));
            }
        }
        for round in &self.rounds {
            for (ops, names, party) in [
                (&round.alice, &alice_names, "Alice"),
                (&round.bob, &bob_names, "Bob"),
            ] {
                for op in ops {
                    let width: usize = op
                        .targets
                        .iter()
                        .map(|t| self.reg_width(t).unwrap_or(0))
                        .sum();
                    if width != op.gate.qubits() {
                        return Err(Error::DimensionMismatch {
                            expected: 1usize << op.gate.qubits(),
                            got: 1usize << width,
                        });
                    }
                    for t in &op.targets {
                        if !names.contains(&t.as_str()) {
                            return Err(Error::CrossParty(format!(
                                "{party} round op targets `{t}`"
                            )));
                        }
                    }
                    let _ = layout.bit_shifts(
                        &op.targets.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
                    )?;
                }
            }
        }
        if self.e_in_ebits > 0 {
            for name in ["A5", "B5"] {
                match self.reg_width(name) {
                    Some(w) if w == self.e_in_ebits => {}
                    _ => {
                        return Err(Error::InvalidProtocol(format!(
                            "e_in_ebits = {} requires a register `{name}` of that width",
                            self.e_in_ebits
                        )))
                    }
                }
            }
        }
        if !(0.0..1.0).contains(&self.declared_epsilon) {
            return Err(Error::OutOfRange(format!(
                "declared_epsilon {} outside [0, 1)",
                self.declared_epsilon
            )));
        }
        Ok(())
    }

    /// Gamma (junk) registers left with each party after the received
    /// messages are set aside: everything but `msg_out_a` / `msg_out_b`.
    pub fn gamma_registers(&self) -> (Vec<String>, Vec<String>) {
        let a = self
            .alice_registers
            .iter()
            .map(|r| r.name.clone())
            .filter(|n| Some(n) != self.msg_out_a.as_ref())
            .collect();
        let b = self
            .bob_registers
            .iter()
            .map(|r| r.name.clone())
            .filter(|n| Some(n) != self.msg_out_b.as_ref())
            .collect();
        (a, b)
    }

    /// Apply rounds and gate uses to a prepared state. The protocol's
    /// registers must all be present in the state's layout (extra registers
    /// are untouched).
    pub fn apply(&self, state: &QuantumState) -> Result<QuantumState> {
        let gate = self.gate.resolve()?;
        let gate_targets: Vec<&str> = self
            .gate_targets_a
            .iter()
            .chain(&self.gate_targets_b)
            .map(|s| s.as_str())
            .collect();
        let mut s = state.clone();
        for (i, round) in self.rounds.iter().enumerate() {
            for op in round.alice.iter().chain(&round.bob) {
                let targets: Vec<&str> = op.targets.iter().map(|s| s.as_str()).collect();
                s = apply_local(&s, &op.gate.matrix()?, &targets)?;
            }
            if i < self.n_uses {
                s = apply_local(&s, gate.matrix(), &gate_targets)?;
            }
        }
        Ok(s)
    }

    /// Initial protocol state |a>|b> with ancillas zeroed and, when declared,
    /// `e_in_ebits` EPR pairs shared on A5/B5.
    pub fn initial_state(&self, a: usize, b: usize) -> Result<QuantumState> {
        if self.c1_bits > 0 && a >= (1usize << self.c1_bits) {
            return Err(Error::MessageWidth {
                which: "a",
                expected: self.c1_bits,
                got: usize::BITS as usize - a.leading_zeros() as usize,
            });
        }
        if self.c2_bits > 0 && b >= (1usize << self.c2_bits) {
            return Err(Error::MessageWidth {
                which: "b",
                expected: self.c2_bits,
                got: usize::BITS as usize - b.leading_zeros() as usize,
            });
        }
        if self.c1_bits == 0 && a != 0 || self.c2_bits == 0 && b != 0 {
            return Err(Error::MessageWidth {
                which: "a/b",
                expected: 0,
                got: 1,
            });
        }
        let layout = self.protocol_layout()?;
        let mut values = Vec::new();
        if let Some(n) = &self.msg_in_a {
            values.push((n.as_str(), a));
        }
        if let Some(n) = &self.msg_in_b {
            values.push((n.as_str(), b));
        }
        let mut s = basis_state_values(&layout, &values)?;
        if self.e_in_ebits > 0 {
            s = entangle_pairwise(&s, "A5", "B5")?;
        }
        Ok(s)
    }
}

/// Turn |0>|0> on two equal-width registers into EPR pairs, bit by bit.
pub(crate) fn entangle_pairwise(state: &QuantumState, ra: &str, rb: &str) -> Result<QuantumState> {
    let width = state.layout().register(ra)?.width;
    if state.layout().register(rb)?.width != width {
        return Err(Error::WidthMismatch {
            name: rb.to_string(),
            width,
            got: state.layout().register(rb)?.width,
        });
    }
    // H on each A5 bit then CNOT to the matching B5 bit, via single-register
    // unitaries built over the pair.
    let h = LocalGate::H.matrix()?;
    let cx = LocalGate::Cnot.matrix()?;
    let mut s = state.clone();
    for bit in 0..width {
        s = apply_bit(&s, &h, ra, bit)?;
        s = apply_two_bits(&s, &cx, ra, bit, rb, bit)?;
    }
    Ok(s)
}

/// Apply a single-qubit unitary to one bit of a register.
pub(crate) fn apply_bit(
    state: &QuantumState,
    u: &nalgebra::DMatrix<num_complex::Complex64>,
    reg: &str,
    bit: usize,
) -> Result<QuantumState> {
    let layout = state.layout().clone();
    let width = layout.register(reg)?.width;
    if bit >= width {
        return Err(Error::OutOfRange(format!("bit {bit} of {width}-bit register")));
    }
    // Promote to a register-wide unitary acting on the chosen bit.
    let dim = 1usize << width;
    let mut m = nalgebra::DMatrix::<num_complex::Complex64>::zeros(dim, dim);
    let shift = width - 1 - bit;
    for i in 0..dim {
        let ib = (i >> shift) & 1;
        for ob in 0..2usize {
            let j = (i & !(1usize << shift)) | (ob << shift);
            m[(j, i)] += u[(ob, ib)];
        }
    }
    apply_local(state, &m, &[reg])
}

/// Apply a two-qubit unitary to one bit each of two registers.
pub(crate) fn apply_two_bits(
    state: &QuantumState,
    u: &nalgebra::DMatrix<num_complex::Complex64>,
    reg_a: &str,
    bit_a: usize,
    reg_b: &str,
    bit_b: usize,
) -> Result<QuantumState> {
    let layout = state.layout();
    let wa = layout.register(reg_a)?.width;
    let wb = layout.register(reg_b)?.width;
    let dim = 1usize << (wa + wb);
    let sa = wa + wb - 1 - bit_a;
    let sb = wb - 1 - bit_b;
    let mut m = nalgebra::DMatrix::<num_complex::Complex64>::zeros(dim, dim);
    for i in 0..dim {
        let in_bits = (((i >> sa) & 1) << 1) | ((i >> sb) & 1);
        for out_bits in 0..4usize {
            let j = (i & !(1usize << sa) & !(1usize << sb))
                | ((out_bits >> 1) << sa)
                | ((out_bits & 1) << sb);
            m[(j, i)] += u[(out_bits, in_bits)];
        }
    }
    apply_local(state, &m, &[reg_a, reg_b])
}

/// Run the bare message protocol on inputs (a, b).
pub fn run_protocol(p: &MessageProtocol, a: usize, b: usize) -> Result<QuantumState> {
    p.validate()?;
    p.apply(&p.initial_state(a, b)?)
}

// ---------------------------------------------------------------------------
// Builtin protocols
// ---------------------------------------------------------------------------

impl MessageProtocol {
    /// The noiseless crossing protocol: one use of the crossing gate sends
    /// one bit each way exactly.
    pub fn crossing() -> Self {
        Self {
            name: "crossing".into(),
            gate: GateSpec::Builtin {
                builtin: "crossing".into(),
            },
            alice_registers: vec![
                ProtocolRegister::new("A1", 1),
                ProtocolRegister::new("A1r", 1),
            ],
            bob_registers: vec![
                ProtocolRegister::new("B1", 1),
                ProtocolRegister::new("B1r", 1),
            ],
            c1_bits: 1,
            c2_bits: 1,
            e_in_ebits: 0,
            declared_epsilon: 0.0,
            msg_in_a: Some("A1".into()),
            msg_in_b: Some("B1".into()),
            msg_out_a: Some("A1r".into()),
            msg_out_b: Some("B1r".into()),
            kept_a: Some("A1".into()),
            kept_b: Some("B1".into()),
            gate_targets_a: vec!["A1".into(), "A1r".into()],
            gate_targets_b: vec!["B1".into(), "B1r".into()],
            n_uses: 1,
            rounds: vec![Round::default(), Round::default()],
        }
    }

    /// Crossing protocol with a flip probability on Alice's message qubit,
    /// applied as a rotation before the gate.
    pub fn noisy_crossing(flip_prob: f64) -> Self {
        let mut p = Self::crossing();
        p.name = format!("noisy-crossing({flip_prob})");
        p.declared_epsilon = flip_prob;
        let theta = flip_prob.sqrt().asin();
        p.rounds[0].alice.push(LocalOp {
            gate: LocalGate::Ry { angle: 2.0 * theta },
            targets: vec!["A1".into()],
        });
        p
    }

    /// One CNOT as a one-round forward protocol: sends one cobit exactly.
    pub fn cnot_forward() -> Self {
        Self {
            name: "cnot-forward".into(),
            gate: GateSpec::Builtin {
                builtin: "cnot".into(),
            },
            alice_registers: vec![ProtocolRegister::new("A1", 1)],
            bob_registers: vec![ProtocolRegister::new("Bt", 1)],
            c1_bits: 1,
            c2_bits: 0,
            e_in_ebits: 0,
            declared_epsilon: 0.0,
            msg_in_a: Some("A1".into()),
            msg_in_b: None,
            msg_out_a: None,
            msg_out_b: Some("Bt".into()),
            kept_a: Some("A1".into()),
            kept_b: None,
            gate_targets_a: vec!["A1".into()],
            gate_targets_b: vec!["Bt".into()],
            n_uses: 1,
            rounds: vec![Round::default(), Round::default()],
        }
    }

    /// CNOT protocol whose received bit is also copied to an environment
    /// register: an incoherent (measured) classical bit.
    pub fn measured_cnot_forward() -> Self {
        let mut p = Self::cnot_forward();
        p.name = "measured-cnot-forward".into();
        p.bob_registers.push(ProtocolRegister::env("Eb", 1));
        p.rounds[1].bob.push(LocalOp {
            gate: LocalGate::Cnot,
            targets: vec!["Bt".into(), "Eb".into()],
        });
        p
    }

    /// A protocol that transmits nothing: the receiver register never moves.
    pub fn identity_protocol() -> Self {
        Self {
            name: "identity".into(),
            gate: GateSpec::Builtin {
                builtin: "identity".into(),
            },
            alice_registers: vec![ProtocolRegister::new("A1", 1)],
            bob_registers: vec![ProtocolRegister::new("Bt", 1)],
            c1_bits: 1,
            c2_bits: 0,
            e_in_ebits: 0,
            declared_epsilon: 1.0 - 1e-12,
            msg_in_a: Some("A1".into()),
            msg_in_b: None,
            msg_out_a: None,
            msg_out_b: Some("Bt".into()),
            kept_a: Some("A1".into()),
            kept_b: None,
            gate_targets_a: vec!["A1".into()],
            gate_targets_b: vec!["Bt".into()],
            n_uses: 1,
            rounds: vec![Round::default(), Round::default()],
        }
    }

    /// SWAP as a protocol: one bit each way, but neither party retains a
    /// copy of its own message.
    pub fn swap_protocol() -> Self {
        Self {
            name: "swap".into(),
            gate: GateSpec::Builtin {
                builtin: "swap".into(),
            },
            alice_registers: vec![ProtocolRegister::new("A1", 1)],
            bob_registers: vec![ProtocolRegister::new("B1", 1)],
            c1_bits: 1,
            c2_bits: 1,
            e_in_ebits: 0,
            declared_epsilon: 0.0,
            msg_in_a: Some("A1".into()),
            msg_in_b: Some("B1".into()),
            msg_out_a: Some("A1".into()),
            msg_out_b: Some("B1".into()),
            kept_a: None,
            kept_b: None,
            gate_targets_a: vec!["A1".into()],
            gate_targets_b: vec!["B1".into()],
            n_uses: 1,
            rounds: vec![Round::default(), Round::default()],
        }
    }

    /// Crossing protocol that also consumes one shared EPR pair per run
    /// (left untouched, so it ends up inside the ancilla state).
    pub fn crossing_with_epr() -> Self {
        let mut p = Self::crossing();
        p.name = "crossing+epr".into();
        p.e_in_ebits = 1;
        p.alice_registers.push(ProtocolRegister::new("A5", 1));
        p.bob_registers.push(ProtocolRegister::new("B5", 1));
        p
    }

    /// Two crossing-gate uses: the first carries the messages, the second is
    /// fed |+>,|0> ancillas and generates one EPR pair beyond them.
    pub fn crossing_entangling() -> Self {
        let swap = |x: &str, y: &str| LocalOp {
            gate: LocalGate::Swap,
            targets: vec![x.into(), y.into()],
        };
        Self {
            name: "crossing-entangling".into(),
            gate: GateSpec::Builtin {
                builtin: "crossing".into(),
            },
            alice_registers: vec![
                ProtocolRegister::new("A1", 1),
                ProtocolRegister::new("A1r", 1),
                ProtocolRegister::new("Aa", 1),
                ProtocolRegister::new("Ab", 1),
            ],
            bob_registers: vec![
                ProtocolRegister::new("B1", 1),
                ProtocolRegister::new("B1r", 1),
                ProtocolRegister::new("Bb", 1),
                ProtocolRegister::new("Br2", 1),
            ],
            c1_bits: 1,
            c2_bits: 1,
            e_in_ebits: 0,
            declared_epsilon: 0.0,
            msg_in_a: Some("A1".into()),
            msg_in_b: Some("B1".into()),
            msg_out_a: Some("Ab".into()),
            msg_out_b: Some("Br2".into()),
            kept_a: Some("Aa".into()),
            kept_b: Some("Bb".into()),
            gate_targets_a: vec!["A1".into(), "A1r".into()],
            gate_targets_b: vec!["B1".into(), "B1r".into()],
            n_uses: 2,
            rounds: vec![
                Round::default(),
                Round {
                    // Move messages aside, load |+>,|0> onto the gate wires.
                    alice: vec![
                        swap("A1", "Aa"),
                        swap("A1r", "Ab"),
                        LocalOp {
                            gate: LocalGate::H,
                            targets: vec!["A1".into()],
                        },
                    ],
                    bob: vec![swap("B1", "Bb"), swap("B1r", "Br2")],
                },
                Round::default(),
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::schmidt;

    #[test]
    fn crossing_exchanges_messages() {
        let p = MessageProtocol::crossing();
        let out = run_protocol(&p, 1, 0).unwrap();
        // expect |a=1>_A1 |b=0>_A1r |b=0>_B1 |a=1>_B1r
        let idx = crate::qstate::pack_index(
            out.layout(),
            &[("A1", 1), ("A1r", 0), ("B1", 0), ("B1r", 1)],
        )
        .unwrap();
        assert!((out.amplitudes()[idx].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_all_messages_exact() {
        let p = MessageProtocol::crossing();
        for a in 0..2usize {
            for b in 0..2usize {
                let out = run_protocol(&p, a, b).unwrap();
                let idx = crate::qstate::pack_index(
                    out.layout(),
                    &[("A1", a), ("A1r", b), ("B1", b), ("B1r", a)],
                )
                .unwrap();
                assert!((out.amplitudes()[idx].norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_protocol_returns_input() {
        let p = MessageProtocol::identity_protocol();
        let out = run_protocol(&p, 1, 0).unwrap();
        let idx =
            crate::qstate::pack_index(out.layout(), &[("A1", 1), ("Bt", 0)]).unwrap();
        assert!((out.amplitudes()[idx].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn message_width_checked() {
        let p = MessageProtocol::crossing();
        assert!(matches!(
            run_protocol(&p, 2, 0),
            Err(Error::MessageWidth { .. })
        ));
    }

    #[test]
    fn epr_initial_state_has_full_entropy() {
        let p = MessageProtocol::crossing_with_epr();
        let s = p.initial_state(0, 0).unwrap();
        let sd = schmidt(&s, &[crate::qstate::Party::Alice]).unwrap();
        assert!((sd.entropy_bits - 1.0).abs() < 1e-9);
    }

    #[test]
    fn round_count_validated() {
        let mut p = MessageProtocol::crossing();
        p.rounds.pop();
        assert!(p.validate().is_err());
    }

    #[test]
    fn reserved_names_rejected() {
        let mut p = MessageProtocol::crossing();
        p.alice_registers.push(ProtocolRegister::new("A0", 1));
        assert!(p.validate().is_err());
    }

    #[test]
    fn cross_party_round_rejected() {
        let mut p = MessageProtocol::crossing();
        p.rounds[0].alice.push(LocalOp {
            gate: LocalGate::X,
            targets: vec!["B1".into()],
        });
        assert!(matches!(p.validate(), Err(Error::CrossParty(_))));
    }

    #[test]
    fn protocol_json_round_trip() {
        let p = MessageProtocol::noisy_crossing(0.1);
        let json = serde_json::to_string_pretty(&p).unwrap();
        let back: MessageProtocol = serde_json::from_str(&json).unwrap();
        back.validate().unwrap();
        assert_eq!(back.name, p.name);
        assert_eq!(back.rounds[0].alice, p.rounds[0].alice);
    }
}
