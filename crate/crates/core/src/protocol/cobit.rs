use num_complex::Complex64;
use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::protocol::message::{entangle_pairwise, MessageProtocol};
use crate::qstate::{
    partial_trace, trace_distance_to_pure, Party, QuantumState, Register, RegisterLayout,
};

/// Which message stream the cobit check probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

struct CobitWires {
    bits: usize,
    msg_in: String,
    kept: String,
    receiver: String,
}

fn wires(p: &MessageProtocol, direction: Direction) -> Result<CobitWires> {
    let (bits, msg_in, kept, receiver) = match direction {
        Direction::Forward => (p.c1_bits, &p.msg_in_a, &p.kept_a, &p.msg_out_b),
        Direction::Backward => (p.c2_bits, &p.msg_in_b, &p.kept_b, &p.msg_out_a),
    };
    if bits == 0 {
        return Err(Error::InvalidProtocol(
            "direction has zero declared bits".into(),
        ));
    }
    let msg_in = msg_in
        .clone()
        .ok_or_else(|| Error::InvalidProtocol("no message-in register".into()))?;
    let kept = kept.clone().ok_or_else(|| {
        Error::InvalidProtocol("protocol declares no retained-copy register".into())
    })?;
    let receiver = receiver
        .clone()
        .ok_or_else(|| Error::InvalidProtocol("no receiver register".into()))?;
    Ok(CobitWires {
        bits,
        msg_in,
        kept,
        receiver,
    })
}

/// A probe is a joint amplitude pattern on (reference, message-in).
type Probe = Vec<((usize, usize), Complex64)>;

fn standard_probes(bits: usize) -> Vec<Probe> {
    let mut probes = Vec::new();
    for x in 0..(1usize << bits) {
        probes.push(vec![((x, x), Complex64::ONE)]);
    }
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    for bit in 0..bits {
        let e = 1usize << (bits - 1 - bit);
        probes.push(vec![((0, 0), s), ((e, e), s)]);
    }
    probes
}

fn haar_probes(bits: usize, count: usize, seed: u64) -> Vec<Probe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 1usize << bits;
    (0..count)
        .map(|_| {
            let mut amps: Vec<Complex64> = (0..n * n)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            for a in &mut amps {
                *a /= norm;
            }
            amps.into_iter()
                .enumerate()
                .map(|(i, a)| ((i >> bits, i & (n - 1)), a))
                .collect()
        })
        .collect()
}

fn probe_error(p: &MessageProtocol, w: &CobitWires, probe: &Probe) -> Result<f64> {
    // Layout: a reference register prepended to the protocol layout.
    let proto_layout = p.protocol_layout()?;
    let mut regs = vec![Register {
        name: "R".into(),
        party: Party::Reference,
        width: w.bits,
    }];
    regs.extend_from_slice(proto_layout.registers());
    let layout = RegisterLayout::new(regs)?;
    let total = layout.total_width();

    let mut amps = vec![Complex64::ZERO; layout.dimension()];
    let r_shift = total - layout.offset_of("R")? - w.bits;
    let m_reg = layout.register(&w.msg_in)?;
    let m_shift = total - layout.offset_of(&w.msg_in)? - m_reg.width;
    for ((r, m), amp) in probe {
        amps[(r << r_shift) | (m << m_shift)] = *amp;
    }
    let mut s = QuantumState::from_amplitudes(layout, amps)?;
    if p.e_in_ebits > 0 {
        s = entangle_pairwise(&s, "A5", "B5")?;
    }
    let out = p.apply(&s)?;

    // Ideal map: |r>_R |x>_in -> |r>_R |x>_kept |x>_receiver.
    let kept_reg = out.layout().register(&w.kept)?.clone();
    let recv_reg = out.layout().register(&w.receiver)?.clone();
    let ideal_layout = RegisterLayout::new(vec![
        Register {
            name: "R".into(),
            party: Party::Reference,
            width: w.bits,
        },
        kept_reg,
        recv_reg,
    ])?;
    let mut ideal_amps = vec![Complex64::ZERO; ideal_layout.dimension()];
    for ((r, m), amp) in probe {
        let idx = (r << (2 * w.bits)) | (m << w.bits) | m;
        ideal_amps[idx] += *amp;
    }
    let ideal = QuantumState::from_amplitudes(ideal_layout, ideal_amps)?;

    let rho = partial_trace(&out, &["R", &w.kept, &w.receiver])?;
    trace_distance_to_pure(&rho, &ideal)
}

/// Operational cobit check: run the protocol on computational-basis and
/// per-bit superposition probes (purified by a reference register) and
/// report the worst trace distance to the ideal map
/// |x>_sender -> |x>_sender |x>_receiver after discarding everything else.
///
/// The protocol must be an isometry, which holds by construction here: gates
/// and rounds are unitary and ancillas start in fixed states.
pub fn verify_cobit(p: &MessageProtocol, direction: Direction) -> Result<f64> {
    p.validate()?;
    let w = wires(p, direction)?;
    let mut worst: f64 = 0.0;
    for probe in standard_probes(w.bits) {
        worst = worst.max(probe_error(p, &w, &probe)?);
    }
    Ok(worst)
}

/// Slow mode: the same check over Haar-random probe states on the joint
/// (reference, message) space.
pub fn verify_cobit_haar(
    p: &MessageProtocol,
    direction: Direction,
    probes: usize,
    seed: u64,
) -> Result<f64> {
    p.validate()?;
    let w = wires(p, direction)?;
    let mut worst: f64 = 0.0;
    for probe in haar_probes(w.bits, probes, seed) {
        worst = worst.max(probe_error(p, &w, &probe)?);
    }
    Ok(worst)
}
