//! The error-corrected composition of many coherentified protocol runs:
//! encode messages in high-distance codes, run the protocol per position,
//! decode both directions, exchange syndrome supports over a charged side
//! channel, concentrate the clean ancilla copies, and account for every
//! resource consumed and produced.
//!
//! The k parallel runs are simulated as k independent statevectors, exact
//! because the runs are unentangled across positions before decoding; the
//! joint decode acts on the classical-basis-diagonal structure, so failure
//! weights and post-decode branches follow from the per-position branch
//! weights.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::code::{symbol_add, syndrome_support, BlockCode, SyndromeSupport};
use crate::concentrate::{
    concentrate, spectrum_of, BoundParams, ConcentrationReport, SchmidtSpectrum,
};
use crate::error::{Error, Result};
use crate::protocol::{
    ancilla_reduction, gamma_branch_of_run, gamma_of, p_prime_state, GammaDecomposition,
    MessageProtocol,
};
use crate::qstate::{schmidt, trace_distance_to_pure, Party, QuantumState};

/// Configuration of one error-corrected composition.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub protocol: MessageProtocol,
    /// Parallel protocol runs per block.
    pub k: usize,
    /// Alice's code, over the alphabet [2^c1].
    pub code_a: BlockCode,
    /// Bob's code, over [2^c2].
    pub code_b: BlockCode,
    /// Relative half-distance; both codes must have distance ceil(2 k alpha).
    pub alpha: f64,
    /// Gate uses charged per position for the syndrome-support exchange.
    pub r_side_channel: f64,
    pub delta_n: f64,
    /// Abort when the decoding-failure branch weight exceeds this.
    pub abort_threshold: f64,
}

impl PipelineConfig {
    pub fn new(
        protocol: MessageProtocol,
        k: usize,
        code_a: BlockCode,
        code_b: BlockCode,
        alpha: f64,
    ) -> Self {
        Self {
            protocol,
            k,
            code_a,
            code_b,
            alpha,
            r_side_channel: 4.0,
            delta_n: 0.0,
            abort_threshold: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.protocol.validate()?;
        if self.protocol.c1_bits == 0 || self.protocol.c2_bits == 0 {
            return Err(Error::InvalidConfig(
                "the composition needs messages in both directions".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "alpha = {} outside (0, 1/2)",
                self.alpha
            )));
        }
        let d = (2.0 * self.k as f64 * self.alpha).ceil() as usize;
        for (label, code, bits) in [
            ("code_a", &self.code_a, self.protocol.c1_bits),
            ("code_b", &self.code_b, self.protocol.c2_bits),
        ] {
            if code.params.k != self.k {
                return Err(Error::InvalidConfig(format!(
                    "{label} has block length {}, pipeline has k = {}",
                    code.params.k, self.k
                )));
            }
            if code.params.n_symbols != (1usize << bits) {
                return Err(Error::InvalidConfig(format!(
                    "{label} alphabet {} != 2^{bits}",
                    code.params.n_symbols
                )));
            }
            if code.distance() != d {
                return Err(Error::InvalidConfig(format!(
                    "{label} distance {} != ceil(2 k alpha) = {d}",
                    code.distance()
                )));
            }
        }
        if self.r_side_channel < 0.0 {
            return Err(Error::InvalidConfig("negative side-channel rate".into()));
        }
        Ok(())
    }
}

/// Resource ledger of one pipeline trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ledger {
    /// Gate uses: n k for the protocol runs plus ceil(R k) for the
    /// syndrome-support side channel.
    pub u_uses: u64,
    /// Ebits consumed: k (c1 + c2) pad keys plus k e_in.
    pub ebits_in: f64,
    /// Ebits recovered by concentration (zero on a failed trial).
    pub ebits_out: f64,
    /// Coherent bits delivered forward/backward: l c1 / l c2, zeroed on the
    /// side that decoded wrongly.
    pub cobits_fwd: f64,
    pub cobits_back: f64,
    /// Exact weight outside the correctable set, from the per-position
    /// branch weights (message independent).
    pub p_fail: f64,
    pub decoupling_error: f64,
    /// alpha >= -2/log2 eps (vacuously true at eps = 0).
    pub chernoff_premise: bool,
    /// p_fail <= 2 * 2^-k.
    pub p_fail_bound_ok: bool,
    /// Entropy in branches discarded instead of concentrated, plus the
    /// concentration residue.
    pub entropy_discarded: f64,
    /// Worst and average fidelity between per-position simulated branches
    /// and the assembled difference-keyed branches.
    pub fidelity_worst: f64,
    pub fidelity_avg: f64,
    /// Both directions decoded without failure.
    pub trial_success: bool,
    /// A decoded message differed from the sent one.
    pub message_error: bool,
}

impl Ledger {
    pub fn csv_header() -> &'static str {
        "trial,seed,u_uses,ebits_in,ebits_out,cobits_fwd,cobits_back,p_fail,k_prime,trial_success,message_error"
    }
}

/// What actually happened in one trial, step by step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Transcript {
    pub codeword_a: Vec<u8>,
    pub codeword_b: Vec<u8>,
    /// Sampled per-position error differences.
    pub pattern_a: Vec<u8>,
    pub pattern_b: Vec<u8>,
    pub received_a: Vec<u8>,
    pub received_b: Vec<u8>,
    pub decoded_a: Option<Vec<u8>>,
    pub decoded_b: Option<Vec<u8>>,
    pub support_a: Option<SyndromeSupport>,
    pub support_b: Option<SyndromeSupport>,
    /// Bits charged for the two support messages.
    pub side_channel_bits: u64,
    pub k_prime: usize,
    pub clean_positions: Vec<usize>,
    pub concentration: Option<ConcentrationReport>,
    /// Max deviation between branch-weight tables of different message
    /// pairs (evidence that p_fail is message independent).
    pub weight_spread: f64,
    /// Per-distinct-message-pair digests of the simulated states; amplitude
    /// dumps are included only below the size threshold.
    pub states: Vec<StateRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateRecord {
    pub a: u8,
    pub b: u8,
    pub sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<(f64, f64)>>,
}

/// Amplitude dumps above this many amplitudes are elided from transcripts.
pub const STATE_DUMP_LIMIT: usize = 256;

fn state_digest(state: &QuantumState) -> String {
    let mut hasher = Sha256::new();
    for a in state.amplitudes() {
        hasher.update(a.re.to_le_bytes());
        hasher.update(a.im.to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

/// Everything about a pipeline that does not depend on the trial seed or
/// the chosen messages: gamma structure, per-pair branch weights, the
/// decoupling error, and the ancilla spectrum.
pub struct PipelinePlan {
    pub gamma: GammaDecomposition,
    pub decoupling_error: f64,
    pub spectrum: SchmidtSpectrum,
    /// (a, b) -> (da, db) -> branch weight, from the simulated runs.
    weights: BTreeMap<(usize, usize), BTreeMap<(usize, usize), f64>>,
    /// (da, db) -> entropy of the normalized branch.
    branch_entropy: BTreeMap<(usize, usize), f64>,
    /// (a, b) -> fidelity of the simulated (0,0) branch against Gamma00.
    fidelity: BTreeMap<(usize, usize), f64>,
    pub weight_spread: f64,
    states: Vec<StateRecord>,
}

/// Simulate every message pair once and precompute the plan.
pub fn plan(cfg: &PipelineConfig) -> Result<PipelinePlan> {
    cfg.validate()?;
    let p = &cfg.protocol;
    let gamma = gamma_of(p)?;
    let gamma00 = gamma.gamma00().normalized()?;
    let spectrum = spectrum_of(&gamma00, &[Party::Alice])?;
    let na = 1usize << p.c1_bits;
    let nb = 1usize << p.c2_bits;

    let mut weights = BTreeMap::new();
    let mut fidelity = BTreeMap::new();
    let mut decoupling_error: f64 = 0.0;
    let mut states = Vec::new();
    for a in 0..na {
        for b in 0..nb {
            let state = p_prime_state(p, a, b)?;
            let reduced = ancilla_reduction(p, &state)?;
            decoupling_error = decoupling_error.max(trace_distance_to_pure(&reduced, &gamma00)?);
            let mut table = BTreeMap::new();
            for da in 0..na {
                for db in 0..nb {
                    let branch = gamma_branch_of_run(p, &state, a, b, a ^ da, b ^ db)?;
                    table.insert((da, db), branch.weight());
                    if da == 0 && db == 0 {
                        fidelity.insert((a, b), branch.fidelity(gamma.gamma00())?);
                    }
                }
            }
            weights.insert((a, b), table);
            states.push(StateRecord {
                a: a as u8,
                b: b as u8,
                sha256: state_digest(&state),
                amplitudes: (state.amplitudes().len() <= STATE_DUMP_LIMIT).then(|| {
                    state.amplitudes().iter().map(|c| (c.re, c.im)).collect()
                }),
            });
        }
    }
    // message independence of the branch weights
    let mut weight_spread: f64 = 0.0;
    let reference = &weights[&(0, 0)];
    for table in weights.values() {
        for (key, w) in table {
            weight_spread = weight_spread.max((w - reference[key]).abs());
        }
    }
    let mut branch_entropy = BTreeMap::new();
    for (key, branch) in &gamma.gamma_states {
        let e = if branch.weight() > 1e-18 {
            schmidt(&branch.normalized()?, &[Party::Alice])?.entropy_bits
        } else {
            0.0
        };
        branch_entropy.insert(*key, e);
    }
    Ok(PipelinePlan {
        gamma,
        decoupling_error,
        spectrum,
        weights,
        branch_entropy,
        fidelity,
        weight_spread,
        states,
    })
}

impl PipelinePlan {
    /// Exact failure probability of the joint bounded-distance decode for a
    /// specific pair of codewords: total branch weight with more than
    /// t errors on either side, by dynamic programming over positions.
    pub fn p_fail(&self, cfg: &PipelineConfig, codeword_a: &[u8], codeword_b: &[u8]) -> f64 {
        let k = cfg.k;
        let ta = cfg.code_a.correctable();
        let tb = cfg.code_b.correctable();
        // dp[u][v] = probability of u a-errors and v b-errors so far
        let mut dp = vec![vec![0.0f64; k + 1]; k + 1];
        dp[0][0] = 1.0;
        for j in 0..k {
            let table = &self.weights[&(codeword_a[j] as usize, codeword_b[j] as usize)];
            let mut q = [[0.0f64; 2]; 2];
            for (&(da, db), &w) in table {
                q[usize::from(da != 0)][usize::from(db != 0)] += w;
            }
            let mut next = vec![vec![0.0f64; k + 1]; k + 1];
            for u in 0..=j {
                for v in 0..=j {
                    let cur = dp[u][v];
                    if cur == 0.0 {
                        continue;
                    }
                    for (ea, row) in q.iter().enumerate() {
                        for (eb, &qq) in row.iter().enumerate() {
                            if qq > 0.0 {
                                next[u + ea][v + eb] += cur * qq;
                            }
                        }
                    }
                }
            }
            dp = next;
        }
        let mut ok = 0.0;
        for (u, row) in dp.iter().enumerate().take(ta + 1) {
            let _ = u;
            for &x in row.iter().take(tb + 1) {
                ok += x;
            }
        }
        (1.0 - ok).max(0.0)
    }

    /// One seeded trial on the given messages.
    pub fn trial(
        &self,
        cfg: &PipelineConfig,
        msgs_a: &[u8],
        msgs_b: &[u8],
        rng_seed: u64,
    ) -> Result<(Ledger, Transcript)> {
        let p = &cfg.protocol;
        let k = cfg.k;
        let codeword_a = cfg.code_a.encode(msgs_a)?.to_vec();
        let codeword_b = cfg.code_b.encode(msgs_b)?.to_vec();
        let p_fail = self.p_fail(cfg, &codeword_a, &codeword_b);
        if p_fail > cfg.abort_threshold {
            return Err(Error::InvalidConfig(format!(
                "failure weight {p_fail} exceeds abort threshold {}",
                cfg.abort_threshold
            )));
        }

        // sample one error pattern per position
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut pattern_a = vec![0u8; k];
        let mut pattern_b = vec![0u8; k];
        for j in 0..k {
            let table = &self.weights[&(codeword_a[j] as usize, codeword_b[j] as usize)];
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut hit = (0usize, 0usize);
            for (&key, &w) in table {
                acc += w;
                if u < acc {
                    hit = key;
                    break;
                }
            }
            pattern_a[j] = hit.0 as u8;
            pattern_b[j] = hit.1 as u8;
        }
        let n1 = cfg.code_a.params.n_symbols;
        let n2 = cfg.code_b.params.n_symbols;
        let received_a: Vec<u8> = codeword_a
            .iter()
            .zip(&pattern_a)
            .map(|(&c, &e)| symbol_add(n1, c, e))
            .collect();
        let received_b: Vec<u8> = codeword_b
            .iter()
            .zip(&pattern_b)
            .map(|(&c, &e)| symbol_add(n2, c, e))
            .collect();

        // Bob decodes Alice's stream, Alice decodes Bob's
        let decode_a = cfg.code_a.decode(&received_a);
        let decode_b = cfg.code_b.decode(&received_b);
        let trial_success = decode_a.is_some() && decode_b.is_some();
        let a_delivered = decode_a
            .as_ref()
            .map(|d| d.codeword == codeword_a)
            .unwrap_or(false);
        let b_delivered = decode_b
            .as_ref()
            .map(|d| d.codeword == codeword_b)
            .unwrap_or(false);
        let message_error = !(a_delivered && b_delivered);

        // syndrome supports travel over the charged side channel
        let support_a = decode_a
            .as_ref()
            .map(|d| syndrome_support(&cfg.code_a.params, &d.error));
        let support_b = decode_b
            .as_ref()
            .map(|d| syndrome_support(&cfg.code_b.params, &d.error));
        let side_channel_bits = support_a.as_ref().map(|s| s.bit_cost).unwrap_or(0)
            + support_b.as_ref().map(|s| s.bit_cost).unwrap_or(0);

        // positions both parties know to be clean
        let (k_prime, clean_positions) = if let (Some(da), Some(db)) = (&decode_a, &decode_b) {
            let clean: Vec<usize> = (0..k)
                .filter(|&j| da.error[j] == 0 && db.error[j] == 0)
                .collect();
            (clean.len(), clean)
        } else {
            (0, Vec::new())
        };

        let eps = self.gamma.epsilon_measured.min(1.0 - 1e-15);
        let bound_params = BoundParams {
            c1: p.c1_bits as f64,
            c2: p.c2_bits as f64,
            eps,
            sch_u: p.gate.resolve()?.schmidt_number(),
            n: p.n_uses,
        };
        let concentration = if trial_success && k_prime > 0 {
            Some(concentrate(
                &self.spectrum,
                k_prime,
                rng.gen::<u64>(),
                &bound_params,
            )?)
        } else {
            None
        };
        let ebits_out = concentration
            .as_ref()
            .map(|c| c.ebits_out)
            .unwrap_or(0.0);

        // entropy in everything not concentrated, plus the type residue
        let gamma00_entropy = self.branch_entropy[&(0, 0)];
        let mut entropy_discarded = if trial_success {
            (k_prime as f64 * gamma00_entropy - ebits_out).max(0.0)
        } else {
            0.0
        };
        for j in 0..k {
            let clean = pattern_a[j] == 0 && pattern_b[j] == 0;
            if !(trial_success && clean && clean_positions.contains(&j)) {
                entropy_discarded +=
                    self.branch_entropy[&(pattern_a[j] as usize, pattern_b[j] as usize)];
            }
        }

        let fidelity_worst = self.fidelity.values().fold(f64::INFINITY, |m, &f| m.min(f));
        let fidelity_avg =
            self.fidelity.values().sum::<f64>() / self.fidelity.len() as f64;

        let chernoff_premise = eps == 0.0 || cfg.alpha >= -2.0 / eps.log2();
        let ledger = Ledger {
            u_uses: (p.n_uses * k) as u64 + (cfg.r_side_channel * k as f64).ceil() as u64,
            ebits_in: (k * (p.c1_bits + p.c2_bits)) as f64 + (k * p.e_in_ebits) as f64,
            ebits_out,
            cobits_fwd: if a_delivered {
                (cfg.code_a.l * p.c1_bits) as f64
            } else {
                0.0
            },
            cobits_back: if b_delivered {
                (cfg.code_b.l * p.c2_bits) as f64
            } else {
                0.0
            },
            p_fail,
            decoupling_error: self.decoupling_error,
            chernoff_premise,
            p_fail_bound_ok: p_fail <= 2.0 * 0.5f64.powi(k as i32) + 1e-15,
            entropy_discarded,
            fidelity_worst,
            fidelity_avg,
            trial_success,
            message_error,
        };
        let transcript = Transcript {
            codeword_a,
            codeword_b,
            pattern_a,
            pattern_b,
            received_a,
            received_b,
            decoded_a: decode_a.map(|d| d.codeword),
            decoded_b: decode_b.map(|d| d.codeword),
            support_a,
            support_b,
            side_channel_bits,
            k_prime,
            clean_positions,
            concentration,
            weight_spread: self.weight_spread,
            states: self.states.clone(),
        };
        Ok((ledger, transcript))
    }
}

/// Plan and run a single trial.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    msgs_a: &[u8],
    msgs_b: &[u8],
    rng_seed: u64,
) -> Result<(Ledger, Transcript)> {
    plan(cfg)?.trial(cfg, msgs_a, msgs_b, rng_seed)
}

// ---------------------------------------------------------------------------
// Error / inefficiency accounting
// ---------------------------------------------------------------------------

/// Inputs to the error-plus-fractional-inefficiency functional.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FParams {
    pub k: f64,
    pub n: f64,
    pub alpha: f64,
    /// Side-channel gate uses per position.
    pub r: f64,
    pub sch_u: f64,
    /// Communication rates per gate use.
    pub c1: f64,
    pub c2: f64,
    pub eps_n: f64,
    pub delta_n: f64,
    /// Catalysis constant; the default charges the pad ebits per gate use,
    /// c1 + c2.
    pub catalysis_c: Option<f64>,
}

/// The error and fractional-inefficiency breakdown of one (k, n) point,
/// with the catalysis schedule m = floor(1 / sqrt(f)).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccountingReport {
    /// [block failure, concentration failure, pad ebits, concentration
    ///  deficit, side channel, rate shortfall, width slack]
    pub terms: [f64; 7],
    pub f_value: f64,
    pub m: u64,
    pub catalysis_constant: f64,
    /// c / m; absent when m = 0 (f >= 1 leaves no room for catalysis).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalysis_overhead: Option<f64>,
}

/// Evaluate the seven-term error/inefficiency sum
/// f(k,n) = 2^-(k-2) + 2^(-sqrt(k) Sch^n) + 2 a (C1+C2)
///        + Sch^n / (n sqrt(k)) + R/n + 3 a (C1+C2) + 2 d_n.
pub fn f_of(params: &FParams) -> Result<AccountingReport> {
    if params.k <= 0.0 || params.n <= 0.0 {
        return Err(Error::OutOfRange("k and n must be positive".into()));
    }
    if params.c1 < 0.0 || params.c2 < 0.0 || params.eps_n < 0.0 || params.delta_n < 0.0 {
        return Err(Error::OutOfRange("rates must be nonnegative".into()));
    }
    let sch_n = params.sch_u.powf(params.n);
    let rates = params.c1 + params.c2;
    let terms = [
        (-(params.k - 2.0)).exp2(),
        (-params.k.sqrt() * sch_n).exp2(),
        2.0 * params.alpha * rates,
        sch_n / (params.n * params.k.sqrt()),
        params.r / params.n,
        3.0 * params.alpha * rates,
        2.0 * params.delta_n,
    ];
    let f_value: f64 = terms.iter().sum();
    let m = if f_value > 0.0 {
        (1.0 / f_value.sqrt()).floor() as u64
    } else {
        0
    };
    let c = params.catalysis_c.unwrap_or(rates);
    let catalysis_overhead = (m > 0).then(|| c / m as f64);
    Ok(AccountingReport {
        terms,
        f_value,
        m,
        catalysis_constant: c,
        catalysis_overhead,
    })
}

/// The fixed-n limit of f as k grows: 5 a (C1+C2) + 2 d_n + R/n.
pub fn f_limit(params: &FParams) -> f64 {
    5.0 * params.alpha * (params.c1 + params.c2) + 2.0 * params.delta_n + params.r / params.n
}

/// The protocol-derived schedule alpha_n = max(1/C1n, 1/C2n, -2/log2 eps_n)
/// with C1n = n C1, C2n = n C2.
pub fn alpha_schedule(n: f64, c1: f64, c2: f64, eps_n: f64) -> f64 {
    let mut a: f64 = 0.0;
    if c1 > 0.0 {
        a = a.max(1.0 / (n * c1));
    }
    if c2 > 0.0 {
        a = a.max(1.0 / (n * c2));
    }
    if eps_n > 0.0 {
        a = a.max(-2.0 / eps_n.log2());
    }
    a
}

// ---------------------------------------------------------------------------
// Entanglement-consuming and entanglement-producing variants
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ESign {
    Consume,
    Produce,
}

/// Ledger adjustments for protocols that consume or produce entanglement.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LedgerDelta {
    /// Extra ebits consumed per block (consume case).
    pub ebits_in_extra: f64,
    /// Schmidt-rank ceiling on the error-free ancilla branch.
    pub rank_ceiling: f64,
    /// Extra entropy guaranteed in the error-free branch (produce case).
    pub entropy_floor_extra: f64,
    /// Extra fractional-inefficiency term 2 alpha E (produce case).
    pub f_extra_term: f64,
}

/// Check a declared entanglement rate against the measured gamma state and
/// return the ledger adjustments.
pub fn entanglement_variant(
    cfg: &PipelineConfig,
    e_sign: ESign,
    e_rate: f64,
) -> Result<LedgerDelta> {
    cfg.validate()?;
    let p = &cfg.protocol;
    let n = p.n_uses as f64;
    let gamma = gamma_of(p)?;
    let g00 = gamma.gamma00().normalized()?;
    let sd = schmidt(&g00, &[Party::Alice])?;
    let sch = p.gate.resolve()?.schmidt_number() as f64;
    // a zero rate adjusts nothing
    if e_rate == 0.0 && p.e_in_ebits == 0 {
        return Ok(LedgerDelta {
            ebits_in_extra: 0.0,
            rank_ceiling: sch.powf(n),
            entropy_floor_extra: 0.0,
            f_extra_term: 0.0,
        });
    }
    match e_sign {
        ESign::Consume => {
            if p.e_in_ebits == 0 {
                return Err(Error::InconsistentDeclaration(
                    "consume variant but the protocol declares no input ebits".into(),
                ));
            }
            if e_rate * n + 1e-9 < p.e_in_ebits as f64 {
                return Err(Error::InconsistentDeclaration(format!(
                    "rate {e_rate} over {n} uses cannot supply {} ebits",
                    p.e_in_ebits
                )));
            }
            let ceiling = (sch * (e_rate + cfg.delta_n).exp2()).powf(n);
            if (sd.rank as f64) > ceiling + 1e-9 {
                return Err(Error::InconsistentDeclaration(format!(
                    "measured rank {} exceeds ceiling {ceiling}",
                    sd.rank
                )));
            }
            Ok(LedgerDelta {
                ebits_in_extra: (cfg.k * p.e_in_ebits) as f64,
                rank_ceiling: ceiling,
                entropy_floor_extra: 0.0,
                f_extra_term: 0.0,
            })
        }
        ESign::Produce => {
            if e_rate <= 0.0 {
                return Err(Error::OutOfRange("produce rate must be positive".into()));
            }
            let e_n = e_rate * n;
            let floor = (p.c1_bits + p.c2_bits) as f64
                + (1.0 - gamma.epsilon_measured).log2()
                + e_n;
            if sd.entropy_bits + 1e-6 < floor {
                return Err(Error::InconsistentDeclaration(format!(
                    "measured entropy {} below declared floor {floor}",
                    sd.entropy_bits
                )));
            }
            Ok(LedgerDelta {
                ebits_in_extra: 0.0,
                rank_ceiling: sch.powf(n),
                entropy_floor_extra: e_n,
                f_extra_term: 2.0 * cfg.alpha * e_rate,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::CodeParams;
    use approx::assert_abs_diff_eq;

    fn noiseless_cfg(k: usize) -> PipelineConfig {
        let code_a = BlockCode::repetition(k, 2).unwrap();
        let code_b = BlockCode::repetition(k, 2).unwrap();
        let alpha = 0.5 - 0.25 / k as f64;
        PipelineConfig::new(MessageProtocol::crossing(), k, code_a, code_b, alpha)
    }

    fn noisy_cfg(k: usize, flip: f64) -> PipelineConfig {
        let code_a = BlockCode::repetition(k, 2).unwrap();
        let code_b = BlockCode::repetition(k, 2).unwrap();
        let alpha = 0.5 - 0.25 / k as f64;
        PipelineConfig::new(
            MessageProtocol::noisy_crossing(flip),
            k,
            code_a,
            code_b,
            alpha,
        )
    }

    #[test]
    fn noiseless_k3_ledger_balances() {
        let cfg = noiseless_cfg(3);
        let (ledger, transcript) = run_pipeline(&cfg, &[1], &[0], 7).unwrap();
        assert_eq!(ledger.p_fail, 0.0);
        assert_eq!(transcript.k_prime, 3);
        assert!(ledger.trial_success);
        assert!(!ledger.message_error);
        assert_abs_diff_eq!(ledger.cobits_fwd, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ledger.cobits_back, 1.0, epsilon = 1e-12);
        assert_eq!(ledger.u_uses, 3 + 12);
        assert_abs_diff_eq!(ledger.ebits_in, 6.0, epsilon = 1e-12);
        // conservation: nothing extra appears
        assert!(
            ledger.ebits_in - ledger.ebits_out - ledger.entropy_discarded >= -1e-6,
            "ledger creates entanglement from nothing"
        );
        assert!(ledger.decoupling_error <= 1e-9);
        assert_eq!(transcript.pattern_a, vec![0, 0, 0]);
        assert_eq!(
            transcript.support_a.as_ref().unwrap().positions.len(),
            0
        );
    }

    #[test]
    fn p_fail_message_independent_and_bounded() {
        let cfg = noisy_cfg(5, 0.1);
        let pl = plan(&cfg).unwrap();
        assert!(pl.weight_spread < 1e-12);
        let mut values = Vec::new();
        for ma in 0..2u8 {
            for mb in 0..2u8 {
                let (ledger, _) = pl.trial(&cfg, &[ma], &[mb], 3).unwrap();
                values.push(ledger.p_fail);
            }
        }
        for v in &values[1..] {
            assert!((v - values[0]).abs() < 1e-12);
        }
        // exact check: only Alice's side is noisy, so
        // p_fail = P(Bin(5, 0.1) > 2)
        let p: f64 = 0.1;
        let expect: f64 = (3..=5u32)
            .map(|j| binom(5, j) * p.powi(j as i32) * (1.0 - p).powi(5 - j as i32))
            .sum();
        assert_abs_diff_eq!(values[0], expect, epsilon = 1e-9);
    }

    fn binom(n: u32, k: u32) -> f64 {
        let mut acc = 1.0f64;
        for i in 0..k {
            acc = acc * (n - i) as f64 / (i + 1) as f64;
        }
        acc
    }

    #[test]
    fn noisy_message_error_matches_binomial_tail() {
        // end-to-end a-side message error rate == P(>= 3 flips of 5) exactly
        // 0.00856; Monte-Carlo within 3 sigma
        let cfg = noisy_cfg(5, 0.1);
        let pl = plan(&cfg).unwrap();
        let trials = 20_000u64;
        let mut errors = 0u64;
        for seed in 0..trials {
            let (ledger, _) = pl.trial(&cfg, &[1], &[0], seed).unwrap();
            if ledger.cobits_fwd == 0.0 {
                errors += 1;
            }
        }
        let rate = errors as f64 / trials as f64;
        let expect = 0.00856;
        let sigma = (expect * (1.0 - expect) / trials as f64).sqrt();
        assert!(
            (rate - expect).abs() <= 3.0 * sigma,
            "rate {rate} vs {expect} (sigma {sigma})"
        );
    }

    #[test]
    fn zero_length_messages_only_generate_entanglement() {
        // a code with fewer codewords than N has l = 0: nothing is sent
        let params = CodeParams::new(3, 2, 0.49).unwrap();
        let dist3 = BlockCode::from_codewords(params, vec![vec![0, 0, 0]]).unwrap();
        assert_eq!(dist3.l, 0);
        let cfg = PipelineConfig::new(
            MessageProtocol::crossing(),
            3,
            dist3.clone(),
            dist3,
            0.49,
        );
        let (ledger, _) = run_pipeline(&cfg, &[], &[], 5).unwrap();
        assert_eq!(ledger.cobits_fwd, 0.0);
        assert_eq!(ledger.cobits_back, 0.0);
        assert!(ledger.ebits_out > 0.0 || ledger.ebits_in > 0.0);
    }

    #[test]
    fn determinism_per_seed() {
        let cfg = noisy_cfg(5, 0.1);
        let pl = plan(&cfg).unwrap();
        let (l1, t1) = pl.trial(&cfg, &[1], &[1], 42).unwrap();
        let (l2, t2) = pl.trial(&cfg, &[1], &[1], 42).unwrap();
        assert_eq!(t1.pattern_a, t2.pattern_a);
        assert_eq!(t1.pattern_b, t2.pattern_b);
        assert_eq!(l1.ebits_out, l2.ebits_out);
        let (_, t3) = pl.trial(&cfg, &[1], &[1], 43).unwrap();
        let _ = t3;
    }

    #[test]
    fn f_of_terms_and_limit() {
        let params = FParams {
            k: 1e6,
            n: 2.0,
            alpha: 0.05,
            r: 4.0,
            sch_u: 1.0,
            c1: 1.0,
            c2: 1.0,
            eps_n: 0.0,
            delta_n: 0.01,
            catalysis_c: None,
        };
        let report = f_of(&params).unwrap();
        let total: f64 = report.terms.iter().sum();
        assert_abs_diff_eq!(report.f_value, total, epsilon = 1e-12);
        assert!(report.terms.iter().all(|&t| t >= 0.0));
        assert_abs_diff_eq!(report.f_value, f_limit(&params), epsilon = 1e-3);
    }

    #[test]
    fn f_of_schedule_sweep_decreases() {
        // eps_n = 2^(-sqrt n), delta_n = 1/sqrt n, alpha_n by the max rule,
        // k(n) = Sch^(3n): f strictly decreasing on n = 2..8
        let mut last = f64::INFINITY;
        for n in 2..=8u32 {
            let nf = n as f64;
            let eps = (-nf.sqrt()).exp2();
            let delta = 1.0 / nf.sqrt();
            let alpha = alpha_schedule(nf, 1.0, 1.0, eps);
            let params = FParams {
                k: 4.0f64.powf(3.0 * nf),
                n: nf,
                alpha,
                r: 4.0,
                sch_u: 4.0,
                c1: 1.0,
                c2: 1.0,
                eps_n: eps,
                delta_n: delta,
                catalysis_c: None,
            };
            let f = f_of(&params).unwrap().f_value;
            assert!(f < last, "f({n}) = {f} not below {last}");
            last = f;
        }
    }

    #[test]
    fn catalysis_schedule_near_optimal() {
        // m f + c/m minimized near m = floor(1/sqrt f): chosen m within
        // factor 2 of the grid optimum for c in {0.1, 1, 10}
        let f = 0.01f64;
        let m_chosen = (1.0 / f.sqrt()).floor();
        for &c in &[0.1f64, 1.0, 10.0] {
            let chosen_total = m_chosen * f + c / m_chosen;
            let best = (1..=10_000u64)
                .map(|m| m as f64 * f + c / m as f64)
                .fold(f64::INFINITY, f64::min);
            assert!(
                chosen_total <= 2.0 * best + 1e-12,
                "c={c}: {chosen_total} vs best {best}"
            );
        }
    }

    #[test]
    fn f_monotone_in_k_beyond_threshold() {
        // nonincreasing in k for k >= Sch^(2n)
        let base = FParams {
            k: 0.0,
            n: 2.0,
            alpha: 0.1,
            r: 4.0,
            sch_u: 2.0,
            c1: 1.0,
            c2: 1.0,
            eps_n: 0.0,
            delta_n: 0.01,
            catalysis_c: None,
        };
        let threshold = base.sch_u.powf(2.0 * base.n);
        let mut last = f64::INFINITY;
        for i in 0..30 {
            let k = threshold * 1.3f64.powi(i);
            let f = f_of(&FParams { k, ..base }).unwrap().f_value;
            assert!(f <= last + 1e-15);
            last = f;
        }
    }

    #[test]
    fn consume_variant_checks_rank_ceiling() {
        let k = 3;
        let code = BlockCode::repetition(k, 2).unwrap();
        let alpha = 0.5 - 0.25 / k as f64;
        let cfg = PipelineConfig::new(
            MessageProtocol::crossing_with_epr(),
            k,
            code.clone(),
            code,
            alpha,
        );
        let delta = entanglement_variant(&cfg, ESign::Consume, 1.0).unwrap();
        assert_abs_diff_eq!(delta.rank_ceiling, 8.0, epsilon = 1e-9);
        assert_abs_diff_eq!(delta.ebits_in_extra, 3.0, epsilon = 1e-12);
        // under-declared rate is rejected
        assert!(entanglement_variant(&cfg, ESign::Consume, 0.4).is_err());
    }

    #[test]
    fn consume_variant_requires_declaration() {
        let cfg = noiseless_cfg(3);
        assert!(matches!(
            entanglement_variant(&cfg, ESign::Consume, 1.0),
            Err(Error::InconsistentDeclaration(_))
        ));
    }

    #[test]
    fn produce_variant_measures_extra_entropy() {
        let k = 3;
        let code = BlockCode::repetition(k, 2).unwrap();
        let alpha = 0.5 - 0.25 / k as f64;
        let cfg = PipelineConfig::new(
            MessageProtocol::crossing_entangling(),
            k,
            code.clone(),
            code,
            alpha,
        );
        // one ebit per run over two uses: rate 1/2
        let delta = entanglement_variant(&cfg, ESign::Produce, 0.5).unwrap();
        assert_abs_diff_eq!(delta.entropy_floor_extra, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(delta.f_extra_term, 2.0 * alpha * 0.5, epsilon = 1e-12);
        // over-declared rate is rejected
        assert!(entanglement_variant(&cfg, ESign::Produce, 1.2).is_err());
        // the plain crossing protocol has no excess entropy
        let plain = noiseless_cfg(3);
        assert!(entanglement_variant(&plain, ESign::Produce, 0.5).is_err());
    }

    #[test]
    fn e_zero_has_no_delta() {
        let cfg = noiseless_cfg(3);
        for sign in [ESign::Consume, ESign::Produce] {
            let delta = entanglement_variant(&cfg, sign, 0.0).unwrap();
            assert_eq!(delta.ebits_in_extra, 0.0);
            assert_eq!(delta.entropy_floor_extra, 0.0);
            assert_eq!(delta.f_extra_term, 0.0);
        }
        // and the base ledger has no extra terms either
        let (ledger, _) = run_pipeline(&cfg, &[0], &[1], 11).unwrap();
        assert_abs_diff_eq!(
            ledger.ebits_in,
            (3 * (1 + 1)) as f64,
            epsilon = 1e-12
        );
    }

    #[test]
    fn transcript_states_hashed_and_small_ones_dumped() {
        let cfg = noiseless_cfg(3);
        let (_, transcript) = run_pipeline(&cfg, &[0], &[0], 1).unwrap();
        assert_eq!(transcript.states.len(), 4);
        for s in &transcript.states {
            assert_eq!(s.sha256.len(), 64);
            // crossing p-prime states have 2^10 amplitudes > dump limit
            assert!(s.amplitudes.is_none());
        }
        assert!(transcript.side_channel_bits > 0);
    }
}
