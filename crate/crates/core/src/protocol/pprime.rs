use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::protocol::message::{entangle_pairwise, MessageProtocol};
use crate::qstate::{
    basis_state_values, partial_trace, trace_distance_to_pure, Branch, DensityOperator, Party,
    QuantumState, Register, RegisterLayout,
};

/// XOR the value of `src` into `dst` on every basis state (a ladder of
/// controlled flips). Defined unitarily on all inputs.
fn xor_registers(state: &QuantumState, src: &str, dst: &str) -> Result<QuantumState> {
    let layout = state.layout();
    let src_reg = layout.register(src)?;
    let dst_reg = layout.register(dst)?;
    if src == dst {
        return Err(Error::InvalidProtocol(format!(
            "source and destination are both `{src}`"
        )));
    }
    if src_reg.width != dst_reg.width {
        return Err(Error::WidthMismatch {
            name: dst.to_string(),
            width: src_reg.width,
            got: dst_reg.width,
        });
    }
    let w = layout.total_width();
    let src_shift = w - layout.offset_of(src)? - src_reg.width;
    let dst_shift = w - layout.offset_of(dst)? - dst_reg.width;
    let mask = (1usize << src_reg.width) - 1;
    let amps = state.amplitudes();
    let mut out = vec![Complex64::ZERO; amps.len()];
    for (j, o) in out.iter_mut().enumerate() {
        // the permutation is an involution, so gather from its own image
        let src_val = (j >> src_shift) & mask;
        *o = amps[j ^ (src_val << dst_shift)];
    }
    QuantumState::from_amplitudes_with_tolerance(layout.clone(), out, state.norm_tolerance())
}

/// Coherently copy `src` into the register `dst` of equal width:
/// |x>_src |d>_dst -> |x>_src |d + x>_dst.
pub fn coherent_copy(state: &QuantumState, src: &str, dst: &str) -> Result<QuantumState> {
    xor_registers(state, src, dst)
}

/// Coherent one-time pad |m>|x> -> |m + x>|x>. Self-inverse, so encryption
/// and decryption are the same operation.
pub fn otp(state: &QuantumState, message: &str, key: &str) -> Result<QuantumState> {
    let mp = state.layout().register(message)?.party;
    let kp = state.layout().register(key)?.party;
    if mp != kp {
        return Err(Error::CrossParty(format!(
            "pad key `{key}` and message `{message}` belong to different parties"
        )));
    }
    xor_registers(state, key, message)
}

/// `count` EPR pairs shared between registers A (Alice) and B (Bob).
pub fn make_epr(count: usize) -> Result<QuantumState> {
    if count == 0 {
        return Err(Error::OutOfRange("EPR pair count must be >= 1".into()));
    }
    let layout = RegisterLayout::of(&[("A", Party::Alice, count), ("B", Party::Bob, count)])?;
    let n = 1usize << count;
    let amp = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    let mut amps = vec![Complex64::ZERO; n * n];
    for x in 0..n {
        amps[(x << count) | x] = amp;
    }
    QuantumState::from_amplitudes(layout, amps)
}

/// Project registers onto fixed basis values, keeping the rest in layout
/// order. The result is a subnormalized branch.
pub fn project_registers(state: &QuantumState, fixed: &[(&str, usize)]) -> Result<Branch> {
    let layout = state.layout();
    let fixed_names: Vec<&str> = fixed.iter().map(|(n, _)| *n).collect();
    for (name, value) in fixed {
        let reg = layout.register(name)?;
        if *value >= (1usize << reg.width) {
            return Err(Error::WidthMismatch {
                name: name.to_string(),
                width: reg.width,
                got: usize::BITS as usize - value.leading_zeros() as usize,
            });
        }
    }
    let kept: Vec<Register> = layout
        .registers()
        .iter()
        .filter(|r| !fixed_names.contains(&r.name.as_str()))
        .cloned()
        .collect();
    let kept_names: Vec<&str> = kept.iter().map(|r| r.name.as_str()).collect();
    let kept_shifts = layout.bit_shifts(&kept_names)?;
    let kept_layout = RegisterLayout::new(kept)?;
    let mut base = 0usize;
    for (name, value) in fixed {
        let reg = layout.register(name)?;
        let shift = layout.total_width() - layout.offset_of(name)? - reg.width;
        base |= value << shift;
    }
    let nk = 1usize << kept_shifts.len();
    let mut amps = vec![Complex64::ZERO; nk];
    for (i, a) in amps.iter_mut().enumerate() {
        let mut idx = base;
        for (b, shift) in kept_shifts.iter().enumerate() {
            if (i >> (kept_shifts.len() - 1 - b)) & 1 == 1 {
                idx |= 1usize << shift;
            }
        }
        *a = state.amplitudes()[idx];
    }
    Ok(Branch {
        layout: kept_layout,
        amplitudes: amps,
    })
}

/// Outputs of the bare protocol for every message pair.
pub type ProtocolOutputs = BTreeMap<(usize, usize), QuantumState>;

/// Run the protocol on every message pair (brute-force enumeration).
pub fn enumerate_outputs(p: &MessageProtocol) -> Result<ProtocolOutputs> {
    p.validate()?;
    let na = 1usize << p.c1_bits;
    let nb = 1usize << p.c2_bits;
    let mut outputs = BTreeMap::new();
    for a in 0..na {
        for b in 0..nb {
            outputs.insert((a, b), p.apply(&p.initial_state(a, b)?)?);
        }
    }
    Ok(outputs)
}

/// The gamma family of a protocol: outcome probabilities Pr(a'b'|ab), the
/// measured error, and the difference-keyed ancilla branches of the
/// coherentified protocol.
#[derive(Debug, Clone)]
pub struct GammaDecomposition {
    pub c1_bits: usize,
    pub c2_bits: usize,
    /// (a, b, a', b') -> Pr(a'b'|ab)
    pub prob: BTreeMap<(usize, usize, usize, usize), f64>,
    /// (a + a', b + b') -> branch on the key-and-ancilla registers
    pub gamma_states: BTreeMap<(usize, usize), Branch>,
    /// max over (a,b) of the total-variation error against perfect delivery
    pub epsilon_measured: f64,
    /// average diagonal deficit; the (0,0) branch has weight 1 - epsilon_bar
    pub epsilon_bar: f64,
}

impl GammaDecomposition {
    pub fn gamma00(&self) -> &Branch {
        &self.gamma_states[&(0, 0)]
    }

    /// Branch weights keyed by error difference.
    pub fn weights(&self) -> BTreeMap<(usize, usize), f64> {
        self.gamma_states
            .iter()
            .map(|(k, v)| (*k, v.weight()))
            .collect()
    }
}

/// Names of the key-and-ancilla registers of the coherentified protocol, in
/// canonical order: Alice's gamma registers, A3, A4, Bob's gamma registers,
/// B3, B4. (Registers of zero width are absent.)
pub fn gamma_layout_names(p: &MessageProtocol) -> (Vec<String>, Vec<String>) {
    let (ga, gb) = p.gamma_registers();
    let mut alice = ga;
    if p.c1_bits > 0 {
        alice.push("A3".into());
    }
    if p.c2_bits > 0 {
        alice.push("A4".into());
    }
    let mut bob = gb;
    if p.c1_bits > 0 {
        bob.push("B3".into());
    }
    if p.c2_bits > 0 {
        bob.push("B4".into());
    }
    (alice, bob)
}

fn key_register(name: &str, party: Party, width: usize) -> Register {
    Register {
        name: name.into(),
        party,
        width,
    }
}

fn gamma_canonical_layout(p: &MessageProtocol) -> Result<RegisterLayout> {
    let proto = p.protocol_layout()?;
    let (ga, gb) = p.gamma_registers();
    let mut regs = Vec::new();
    for name in &ga {
        regs.push(proto.register(name)?.clone());
    }
    if p.c1_bits > 0 {
        regs.push(key_register("A3", Party::Alice, p.c1_bits));
    }
    if p.c2_bits > 0 {
        regs.push(key_register("A4", Party::Alice, p.c2_bits));
    }
    for name in &gb {
        regs.push(proto.register(name)?.clone());
    }
    if p.c1_bits > 0 {
        regs.push(key_register("B3", Party::Bob, p.c1_bits));
    }
    if p.c2_bits > 0 {
        regs.push(key_register("B4", Party::Bob, p.c2_bits));
    }
    RegisterLayout::new(regs)
}

/// Extract the gamma decomposition from the outputs of the bare protocol on
/// every message pair.
///
/// The difference-keyed branch is assembled by coherently averaging the
/// bare-protocol branches over the one-time-pad keys,
///
///   Gamma_{da,db} = N^{-1/2} sum_{a,b} |a>_A3 |a+da>_B3 |b+db>_A4 |b>_B4
///                               gamma^{a,b}_{a+da, b+db},
///
/// which depends on (a,a') and (b,b') through the differences only.
pub fn extract_gamma(p: &MessageProtocol, outputs: &ProtocolOutputs) -> Result<GammaDecomposition> {
    let na = 1usize << p.c1_bits;
    let nb = 1usize << p.c2_bits;
    let reference_layout = outputs
        .get(&(0, 0))
        .ok_or_else(|| Error::InvalidProtocol("missing (0,0) output".into()))?
        .layout()
        .clone();

    let mut branches: BTreeMap<(usize, usize, usize, usize), Branch> = BTreeMap::new();
    let mut prob = BTreeMap::new();
    let mut epsilon_measured: f64 = 0.0;
    let mut diag_sum = 0.0;
    for a in 0..na {
        for b in 0..nb {
            let out = outputs
                .get(&(a, b))
                .ok_or_else(|| Error::InvalidProtocol(format!("missing ({a},{b}) output")))?;
            if *out.layout() != reference_layout {
                return Err(Error::LayoutMismatch(
                    "protocol outputs disagree on layout".into(),
                ));
            }
            let mut tv = 0.0;
            for ap in 0..na {
                for bp in 0..nb {
                    let mut fixed: Vec<(&str, usize)> = Vec::new();
                    if let Some(reg) = &p.msg_out_a {
                        fixed.push((reg.as_str(), bp));
                    }
                    if let Some(reg) = &p.msg_out_b {
                        fixed.push((reg.as_str(), ap));
                    }
                    let branch = project_registers(out, &fixed)?;
                    let w = branch.weight();
                    prob.insert((a, b, ap, bp), w);
                    let ideal = if ap == a && bp == b { 1.0 } else { 0.0 };
                    tv += 0.5 * (w - ideal).abs();
                    if ap == a && bp == b {
                        diag_sum += w;
                    }
                    branches.insert((a, b, ap, bp), branch);
                }
            }
            epsilon_measured = epsilon_measured.max(tv);
        }
    }
    let epsilon_bar = 1.0 - diag_sum / (na * nb) as f64;

    // gamma-branch layout is [Alice block | Bob block]; find the block split
    let (ga, _gb) = p.gamma_registers();
    let proto = p.protocol_layout()?;
    let wa2: usize = ga.iter().map(|r| proto.register(r).unwrap().width).sum();
    let gamma_bits = branches[&(0, 0, 0, 0)].layout.total_width();
    let wb2 = gamma_bits - wa2;

    let canonical = gamma_canonical_layout(p)?;
    let n = (na * nb) as f64;
    let scale = Complex64::new(1.0 / n.sqrt(), 0.0);
    let mut gamma_states = BTreeMap::new();
    for da in 0..na {
        for db in 0..nb {
            let mut amps = vec![Complex64::ZERO; canonical.dimension()];
            for a in 0..na {
                for b in 0..nb {
                    let (a3, b3, a4, b4) = (a, a ^ da, b ^ db, b);
                    let branch = &branches[&(a, b, a ^ da, b ^ db)];
                    for (gidx, amp) in branch.amplitudes.iter().enumerate() {
                        if amp.norm_sqr() == 0.0 {
                            continue;
                        }
                        let a2 = gidx >> wb2;
                        let b2 = gidx & ((1usize << wb2) - 1);
                        let mut idx = a2;
                        idx = (idx << p.c1_bits) | a3;
                        idx = (idx << p.c2_bits) | a4;
                        idx = (idx << wb2) | b2;
                        idx = (idx << p.c1_bits) | b3;
                        idx = (idx << p.c2_bits) | b4;
                        amps[idx] += scale * amp;
                    }
                }
            }
            let gamma = Branch {
                layout: canonical.clone(),
                amplitudes: amps,
            };
            // consistency: weight must equal the key-averaged probability
            let expected: f64 = (0..na)
                .flat_map(|a| (0..nb).map(move |b| (a, b)))
                .map(|(a, b)| prob[&(a, b, a ^ da, b ^ db)])
                .sum::<f64>()
                / n;
            if (gamma.weight() - expected).abs() > 1e-9 {
                return Err(Error::GammaKeyInconsistent {
                    fidelity: gamma.weight() - expected,
                });
            }
            gamma_states.insert((da, db), gamma);
        }
    }
    Ok(GammaDecomposition {
        c1_bits: p.c1_bits,
        c2_bits: p.c2_bits,
        prob,
        gamma_states,
        epsilon_measured,
        epsilon_bar,
    })
}

/// Convenience: enumerate all message pairs and extract the decomposition.
pub fn gamma_of(p: &MessageProtocol) -> Result<GammaDecomposition> {
    extract_gamma(p, &enumerate_outputs(p)?)
}

/// Output of the coherentified protocol on one message pair.
#[derive(Debug, Clone)]
pub struct PPrimeOutput {
    /// Full statevector after steps 0-5.
    pub final_state: QuantumState,
    pub gamma: GammaDecomposition,
    /// Max over message pairs of the trace distance between the reduced
    /// key-and-ancilla state and the normalized (0,0) branch.
    pub decoupling_error: f64,
}

fn p_prime_layout(p: &MessageProtocol) -> Result<RegisterLayout> {
    let proto = p.protocol_layout()?;
    let (ga, gb) = p.gamma_registers();
    let mut regs = Vec::new();
    if p.c1_bits > 0 {
        regs.push(key_register("A0", Party::Alice, p.c1_bits));
    }
    if let Some(out) = &p.msg_out_a {
        regs.push(proto.register(out)?.clone());
    }
    for name in &ga {
        regs.push(proto.register(name)?.clone());
    }
    if p.c1_bits > 0 {
        regs.push(key_register("A3", Party::Alice, p.c1_bits));
    }
    if p.c2_bits > 0 {
        regs.push(key_register("A4", Party::Alice, p.c2_bits));
    }
    if p.c2_bits > 0 {
        regs.push(key_register("B0", Party::Bob, p.c2_bits));
    }
    if let Some(out) = &p.msg_out_b {
        regs.push(proto.register(out)?.clone());
    }
    for name in &gb {
        regs.push(proto.register(name)?.clone());
    }
    if p.c1_bits > 0 {
        regs.push(key_register("B3", Party::Bob, p.c1_bits));
    }
    if p.c2_bits > 0 {
        regs.push(key_register("B4", Party::Bob, p.c2_bits));
    }
    RegisterLayout::new(regs)
}

/// Total qubit count needed to simulate the coherentified protocol.
pub fn p_prime_width(p: &MessageProtocol) -> Result<usize> {
    Ok(p_prime_layout(p)?.total_width())
}

/// Simulate steps 0-5 of the coherentified protocol for one message pair:
/// copy, encrypt, run the bare protocol, decrypt, decouple.
pub fn p_prime_state(p: &MessageProtocol, a: usize, b: usize) -> Result<QuantumState> {
    p.validate()?;
    if p.c1_bits > 0 && a >= (1usize << p.c1_bits) || p.c1_bits == 0 && a != 0 {
        return Err(Error::MessageWidth {
            which: "a",
            expected: p.c1_bits,
            got: usize::BITS as usize - a.leading_zeros() as usize,
        });
    }
    if p.c2_bits > 0 && b >= (1usize << p.c2_bits) || p.c2_bits == 0 && b != 0 {
        return Err(Error::MessageWidth {
            which: "b",
            expected: p.c2_bits,
            got: usize::BITS as usize - b.leading_zeros() as usize,
        });
    }
    let layout = p_prime_layout(p)?;
    let mut values: Vec<(&str, usize)> = Vec::new();
    if let Some(n) = &p.msg_in_a {
        values.push((n.as_str(), a));
    }
    if let Some(n) = &p.msg_in_b {
        values.push((n.as_str(), b));
    }
    let mut s = basis_state_values(&layout, &values)?;

    // step 0: shared keys (and consumed entanglement, if declared)
    if p.c1_bits > 0 {
        s = entangle_pairwise(&s, "A3", "B3")?;
    }
    if p.c2_bits > 0 {
        s = entangle_pairwise(&s, "A4", "B4")?;
    }
    if p.e_in_ebits > 0 {
        s = entangle_pairwise(&s, "A5", "B5")?;
    }
    // step 1: copy messages aside
    if let Some(m) = &p.msg_in_a {
        s = coherent_copy(&s, m, "A0")?;
    }
    if let Some(m) = &p.msg_in_b {
        s = coherent_copy(&s, m, "B0")?;
    }
    // step 2: encrypt
    if let Some(m) = &p.msg_in_a {
        s = otp(&s, m, "A3")?;
    }
    if let Some(m) = &p.msg_in_b {
        s = otp(&s, m, "B4")?;
    }
    // step 3: the bare protocol on the encrypted messages
    s = p.apply(&s)?;
    // step 4: decrypt the received messages
    if let Some(m) = &p.msg_out_a {
        s = otp(&s, m, "A4")?;
    }
    if let Some(m) = &p.msg_out_b {
        s = otp(&s, m, "B3")?;
    }
    // step 5: decouple the keys from the messages
    if let Some(m) = &p.msg_out_a {
        s = coherent_copy(&s, m, "A4")?;
    }
    if p.c1_bits > 0 {
        s = coherent_copy(&s, "A0", "A3")?;
    }
    if let Some(m) = &p.msg_out_b {
        s = coherent_copy(&s, m, "B3")?;
    }
    if p.c2_bits > 0 {
        s = coherent_copy(&s, "B0", "B4")?;
    }
    Ok(s)
}

/// Project a coherentified run onto message outcome (a', b') and return the
/// key-and-ancilla branch, already in canonical layout order.
pub fn gamma_branch_of_run(
    p: &MessageProtocol,
    state: &QuantumState,
    a: usize,
    b: usize,
    ap: usize,
    bp: usize,
) -> Result<Branch> {
    let mut fixed: Vec<(&str, usize)> = Vec::new();
    if p.c1_bits > 0 {
        fixed.push(("A0", a));
    }
    if p.c2_bits > 0 {
        fixed.push(("B0", b));
    }
    if let Some(reg) = &p.msg_out_a {
        fixed.push((reg.as_str(), bp));
    }
    if let Some(reg) = &p.msg_out_b {
        fixed.push((reg.as_str(), ap));
    }
    project_registers(state, &fixed)
}

/// Reduced key-and-ancilla state of a coherentified run, on the canonical
/// gamma layout.
pub fn ancilla_reduction(p: &MessageProtocol, state: &QuantumState) -> Result<DensityOperator> {
    let (alice, bob) = gamma_layout_names(p);
    let keep: Vec<&str> = alice.iter().chain(bob.iter()).map(|s| s.as_str()).collect();
    partial_trace(state, &keep)
}

/// Run the coherentified protocol. The decoupling error is maximized over
/// all message pairs, each simulated at the circuit level.
pub fn run_p_prime(p: &MessageProtocol, a: usize, b: usize) -> Result<PPrimeOutput> {
    let gamma = gamma_of(p)?;
    let gamma00 = gamma.gamma00().normalized()?;
    let na = 1usize << p.c1_bits;
    let nb = 1usize << p.c2_bits;
    let mut decoupling_error: f64 = 0.0;
    let mut requested = None;
    for abar in 0..na {
        for bbar in 0..nb {
            let state = p_prime_state(p, abar, bbar)?;
            let reduced = ancilla_reduction(p, &state)?;
            let d = trace_distance_to_pure(&reduced, &gamma00)?;
            decoupling_error = decoupling_error.max(d);
            if abar == a && bbar == b {
                requested = Some(state);
            }
        }
    }
    let final_state = requested.expect("requested message pair within enumerated range");
    Ok(PPrimeOutput {
        final_state,
        gamma,
        decoupling_error,
    })
}

/// Rebuild the coherentified output state for (a, b) from the extracted
/// gamma branches:
/// |a>_A0 |b>_B0 sum_{a'b'} |b'>_out_a |a'>_out_b |Gamma_{a+a', b+b'}>.
pub fn reconstruct_p_prime(
    p: &MessageProtocol,
    gamma: &GammaDecomposition,
    a: usize,
    b: usize,
) -> Result<QuantumState> {
    let layout = p_prime_layout(p)?;
    let w = layout.total_width();
    let na = 1usize << p.c1_bits;
    let nb = 1usize << p.c2_bits;
    let (alice_gamma, bob_gamma) = gamma_layout_names(p);
    let gamma_names: Vec<String> = alice_gamma.into_iter().chain(bob_gamma).collect();
    // where each canonical gamma register lands in the full layout
    let placements: Vec<(usize, usize)> = gamma_names
        .iter()
        .map(|name| {
            let reg = layout.register(name).unwrap();
            let shift = w - layout.offset_of(name).unwrap() - reg.width;
            (shift, reg.width)
        })
        .collect();
    let gamma_bits: usize = placements.iter().map(|&(_, width)| width).sum();

    let mut amps = vec![Complex64::ZERO; layout.dimension()];
    for ap in 0..na {
        for bp in 0..nb {
            let branch = &gamma.gamma_states[&(a ^ ap, b ^ bp)];
            let mut base = 0usize;
            let mut fixed: Vec<(&str, usize)> = Vec::new();
            if p.c1_bits > 0 {
                fixed.push(("A0", a));
            }
            if p.c2_bits > 0 {
                fixed.push(("B0", b));
            }
            if let Some(reg) = &p.msg_out_a {
                fixed.push((reg.as_str(), bp));
            }
            if let Some(reg) = &p.msg_out_b {
                fixed.push((reg.as_str(), ap));
            }
            for (name, value) in &fixed {
                let reg = layout.register(name)?;
                base |= value << (w - layout.offset_of(name)? - reg.width);
            }
            for (gidx, amp) in branch.amplitudes.iter().enumerate() {
                if amp.norm_sqr() == 0.0 {
                    continue;
                }
                let mut idx = base;
                let mut rem = gamma_bits;
                for &(shift, width) in &placements {
                    rem -= width;
                    idx |= ((gidx >> rem) & ((1usize << width) - 1)) << shift;
                }
                amps[idx] += *amp;
            }
        }
    }
    QuantumState::from_amplitudes(layout, amps)
}
