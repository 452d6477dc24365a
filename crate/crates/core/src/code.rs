//! Classical block codes over an alphabet [N] with a guaranteed minimum
//! distance, built greedily in seeded pseudorandom order, plus
//! bounded-distance decoding, syndrome supports, and the coherent decoding
//! isometry acting on statevectors.

use rand::seq::SliceRandom;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{apply_local, Party, QuantumState};

/// Largest codeword space the greedy construction will enumerate.
const ENUMERATION_CAP: u128 = 1 << 24;

/// Binary entropy H2(p) in bits, with H2(0) = H2(1) = 0 by continuity.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("binary_entropy({p})")));
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(-p * p.log2() - (1.0 - p) * (1.0 - p).log2())
}

/// Binary KL divergence D(a || e) in bits.
pub fn kl_divergence(a: f64, e: f64) -> Result<f64> {
    if !(0.0 < a && a < 1.0 && 0.0 < e && e < 1.0) {
        return Err(Error::OutOfRange(format!("kl_divergence({a}, {e})")));
    }
    Ok(a * (a / e).log2() + (1.0 - a) * ((1.0 - a) / (1.0 - e)).log2())
}

/// Parameters of a distance-2k*alpha code over [N].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    /// Block length.
    pub k: usize,
    /// Alphabet size N.
    pub n_symbols: usize,
    /// Relative half-distance target.
    pub alpha: f64,
}

impl CodeParams {
    pub fn new(k: usize, n_symbols: usize, alpha: f64) -> Result<Self> {
        let p = Self {
            k,
            n_symbols,
            alpha,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidCode("block length k must be >= 1".into()));
        }
        if self.n_symbols < 2 {
            return Err(Error::InvalidCode("alphabet size must be >= 2".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::InvalidCode(format!(
                "alpha = {} outside (0, 1/2)",
                self.alpha
            )));
        }
        if self.distance() > self.k {
            return Err(Error::InvalidCode(format!(
                "distance {} exceeds block length {}",
                self.distance(),
                self.k
            )));
        }
        Ok(())
    }

    /// Guaranteed minimum distance d = ceil(2 k alpha).
    pub fn distance(&self) -> usize {
        (2.0 * self.k as f64 * self.alpha).ceil() as usize
    }

    /// Bounded-distance correction radius t = floor((d-1)/2).
    pub fn correctable(&self) -> usize {
        (self.distance() - 1) / 2
    }

    /// Do these parameters satisfy the three protocol-derived lower bounds
    /// alpha >= max(1/c1, 1/c2, -2/log2 eps)?
    pub fn satisfies_protocol_bounds(&self, c1_bits: usize, c2_bits: usize, eps: f64) -> bool {
        let mut need = 0.0f64;
        if c1_bits > 0 {
            need = need.max(1.0 / c1_bits as f64);
        }
        if c2_bits > 0 {
            need = need.max(1.0 / c2_bits as f64);
        }
        if eps > 0.0 {
            need = need.max(-2.0 / eps.log2());
        }
        self.alpha >= need
    }
}

/// A block code with verified pairwise distance >= d and an indexed encoder
/// for messages in [N]^l.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockCode {
    pub params: CodeParams,
    /// Sorted lexicographically; pairwise Hamming distance >= distance().
    pub codewords: Vec<Vec<u8>>,
    /// Guaranteed message length: the code embeds [N]^l.
    pub l: usize,
    /// Seed the greedy order was drawn from (None for explicit codes).
    pub seed: Option<u64>,
}

/// Symbol-wise Hamming distance.
pub fn hamming_distance(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Difference of two symbols: XOR for power-of-two alphabets (matching the
/// bitwise errors of message protocols), subtraction mod N otherwise. Either
/// way the difference is zero iff the symbols agree.
pub fn symbol_diff(n_symbols: usize, received: u8, sent: u8) -> u8 {
    if n_symbols.is_power_of_two() {
        received ^ sent
    } else {
        ((received as usize + n_symbols - sent as usize) % n_symbols) as u8
    }
}

/// Apply a symbol error: inverse of `symbol_diff` in its first argument.
pub fn symbol_add(n_symbols: usize, sent: u8, error: u8) -> u8 {
    if n_symbols.is_power_of_two() {
        sent ^ error
    } else {
        ((sent as usize + error as usize) % n_symbols) as u8
    }
}

fn word_of_index(mut idx: u128, k: usize, n: usize) -> Vec<u8> {
    let mut w = vec![0u8; k];
    for slot in w.iter_mut().rev() {
        *slot = (idx % n as u128) as u8;
        idx /= n as u128;
    }
    w
}

impl BlockCode {
    /// Greedy Gilbert-Varshamov construction: visit all N^k words in a
    /// seeded pseudorandom order and keep every word at distance >= d from
    /// all kept words. Deterministic given the seed, and maximal, so
    /// |codewords| >= N^k / Vol(k, d-1).
    pub fn build(params: CodeParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let k = params.k;
        let n = params.n_symbols;
        let total = (n as u128).checked_pow(k as u32).ok_or_else(|| {
            Error::InvalidCode("codeword space exceeds u128".into())
        })?;
        if total > ENUMERATION_CAP {
            return Err(Error::InvalidCode(format!(
                "N^k = {total} exceeds the enumeration cap {ENUMERATION_CAP}"
            )));
        }
        let d = params.distance();
        let mut order: Vec<u32> = (0..total as u32).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let mut kept: Vec<Vec<u8>> = Vec::new();
        for idx in order {
            let w = word_of_index(idx as u128, k, n);
            if kept.iter().all(|c| hamming_distance(c, &w) >= d) {
                kept.push(w);
            }
        }
        kept.sort();
        let l = guaranteed_message_length(kept.len(), n);
        Ok(Self {
            params,
            codewords: kept,
            l,
            seed: Some(seed),
        })
    }

    /// Wrap an explicit codeword list, verifying the distance exhaustively.
    pub fn from_codewords(params: CodeParams, mut codewords: Vec<Vec<u8>>) -> Result<Self> {
        params.validate()?;
        if codewords.is_empty() {
            return Err(Error::InvalidCode("empty codeword list".into()));
        }
        for w in &codewords {
            if w.len() != params.k {
                return Err(Error::InvalidCode(format!(
                    "codeword length {} != k = {}",
                    w.len(),
                    params.k
                )));
            }
            if w.iter().any(|&s| s as usize >= params.n_symbols) {
                return Err(Error::InvalidCode("symbol outside alphabet".into()));
            }
        }
        codewords.sort();
        codewords.dedup();
        let d = params.distance();
        for (i, a) in codewords.iter().enumerate() {
            for b in &codewords[i + 1..] {
                let dist = hamming_distance(a, b);
                if dist < d {
                    return Err(Error::InvalidCode(format!(
                        "codewords at distance {dist} < {d}"
                    )));
                }
            }
        }
        let l = guaranteed_message_length(codewords.len(), params.n_symbols);
        Ok(Self {
            params,
            codewords,
            l,
            seed: None,
        })
    }

    /// The N-ary repetition code of length k (distance k). `alpha` is pinned
    /// just under 1/2 so the declared distance ceil(2 k alpha) equals k.
    pub fn repetition(k: usize, n_symbols: usize) -> Result<Self> {
        let alpha = 0.5 - 0.25 / k as f64;
        let params = CodeParams::new(k, n_symbols, alpha)?;
        debug_assert_eq!(params.distance(), k);
        let codewords = (0..n_symbols as u8).map(|s| vec![s; k]).collect();
        Self::from_codewords(params, codewords)
    }

    pub fn distance(&self) -> usize {
        self.params.distance()
    }

    pub fn correctable(&self) -> usize {
        self.params.correctable()
    }

    /// Minimum pairwise distance, measured exhaustively.
    pub fn measured_distance(&self) -> usize {
        let mut min = usize::MAX;
        for (i, a) in self.codewords.iter().enumerate() {
            for b in &self.codewords[i + 1..] {
                min = min.min(hamming_distance(a, b));
            }
        }
        min
    }

    /// Encode a message in [N]^l as a codeword (indexed encoder).
    pub fn encode(&self, message: &[u8]) -> Result<&[u8]> {
        if message.len() != self.l {
            return Err(Error::InvalidCode(format!(
                "message length {} != l = {}",
                message.len(),
                self.l
            )));
        }
        let mut idx = 0usize;
        for &m in message {
            if m as usize >= self.params.n_symbols {
                return Err(Error::InvalidCode("message symbol outside alphabet".into()));
            }
            idx = idx * self.params.n_symbols + m as usize;
        }
        Ok(&self.codewords[idx])
    }

    /// Inverse of `encode` for codewords in the embedded message range.
    pub fn message_of(&self, codeword: &[u8]) -> Option<Vec<u8>> {
        let pos = self.codewords.iter().position(|c| c == codeword)?;
        if pos >= self.params.n_symbols.pow(self.l as u32) {
            return None;
        }
        let mut idx = pos;
        let mut msg = vec![0u8; self.l];
        for slot in msg.iter_mut().rev() {
            *slot = (idx % self.params.n_symbols) as u8;
            idx /= self.params.n_symbols;
        }
        Some(msg)
    }

    /// Bounded-distance decoding: the unique codeword within Hamming
    /// distance t of `received`, or None.
    pub fn decode(&self, received: &[u8]) -> Option<DecodeSuccess> {
        let t = self.correctable();
        for c in &self.codewords {
            if hamming_distance(c, received) <= t {
                let error: Vec<u8> = received
                    .iter()
                    .zip(c)
                    .map(|(&r, &s)| symbol_diff(self.params.n_symbols, r, s))
                    .collect();
                return Some(DecodeSuccess {
                    codeword: c.clone(),
                    error,
                });
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeSuccess {
    pub codeword: Vec<u8>,
    /// Componentwise difference received - codeword; zero where they agree.
    pub error: Vec<u8>,
}

fn guaranteed_message_length(codeword_count: usize, n: usize) -> usize {
    let mut l = 0usize;
    let mut pow = 1u128;
    loop {
        pow = pow.saturating_mul(n as u128);
        if pow <= codeword_count as u128 {
            l += 1;
        } else {
            return l;
        }
    }
}

/// Sphere-volume lower bound on a maximal distance-d code:
/// N^k / sum_{j <= d-1} C(k,j) (N-1)^j, rounded up.
pub fn gv_lower_bound(params: &CodeParams) -> u128 {
    let k = params.k as u128;
    let n = params.n_symbols as u128;
    let d = params.distance() as u128;
    let total = n.pow(params.k as u32);
    let mut vol: u128 = 0;
    let mut binom: u128 = 1;
    for j in 0..d {
        if let Some(next) = (binom * (k - j + 1)).checked_div(j) {
            binom = next;
        }
        vol += binom * (n - 1).pow(j as u32);
    }
    total.div_ceil(vol)
}

/// The GV rate bound on the guaranteed message length:
/// l >= k (1 - 2 alpha - H2(2 alpha) / log2 N). May be vacuous (negative)
/// at desk scale.
pub fn rate_bound(params: &CodeParams) -> f64 {
    let h = binary_entropy(2.0 * params.alpha).unwrap_or(1.0);
    params.k as f64 * (1.0 - 2.0 * params.alpha - h / (params.n_symbols as f64).log2())
}

/// Positions where an error vector is nonzero, and the bit budget the
/// syndrome-support exchange is charged:
/// ceil(k H2(alpha) + log2(k alpha)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyndromeSupport {
    pub positions: Vec<usize>,
    pub bit_cost: u64,
    /// Set when |S| exceeds k*alpha: the pattern is outside the good set.
    pub oversized: bool,
}

pub fn syndrome_support(params: &CodeParams, error: &[u8]) -> SyndromeSupport {
    let positions: Vec<usize> = error
        .iter()
        .enumerate()
        .filter(|(_, &e)| e != 0)
        .map(|(j, _)| j)
        .collect();
    let ka = params.k as f64 * params.alpha;
    let bit_cost = (params.k as f64 * binary_entropy(params.alpha).unwrap() + ka.log2()).ceil();
    SyndromeSupport {
        oversized: positions.len() as f64 > ka + 1e-12,
        positions,
        bit_cost: bit_cost.max(0.0) as u64,
    }
}

/// Coherent bounded-distance decoding. Acts on `data_regs` (total width
/// k log2 N, N a power of two) plus fresh ancillas `err_reg` (same width)
/// and the 1-qubit `flag_reg`, as a basis-state permutation:
///
///   |v> |e> |f>  ->  |c(v)> |e + (v - c(v))> |f>      v correctable,
///   |v> |e> |f>  ->  |v> |e> |f + 1>                  otherwise.
///
/// On the physical support (e = 0, f = 0) this is the decoding isometry
/// D|v> = |c>|v - c>, with uncorrectable branches routed to the flag.
pub fn coherent_decode(
    state: &QuantumState,
    code: &BlockCode,
    data_regs: &[&str],
    err_reg: &str,
    flag_reg: &str,
) -> Result<QuantumState> {
    let n = code.params.n_symbols;
    if !n.is_power_of_two() {
        return Err(Error::InvalidCode(
            "coherent decoding needs a power-of-two alphabet".into(),
        ));
    }
    let bits_per_symbol = n.trailing_zeros() as usize;
    let k = code.params.k;
    let word_bits = k * bits_per_symbol;
    let layout = state.layout();
    let data_width: usize = {
        let mut w = 0;
        for r in data_regs {
            w += layout.register(r)?.width;
        }
        w
    };
    if data_width != word_bits {
        return Err(Error::WidthMismatch {
            name: data_regs.join("+"),
            width: word_bits,
            got: data_width,
        });
    }
    if layout.register(err_reg)?.width != word_bits {
        return Err(Error::WidthMismatch {
            name: err_reg.to_string(),
            width: word_bits,
            got: layout.register(err_reg)?.width,
        });
    }
    if layout.register(flag_reg)?.width != 1 {
        return Err(Error::WidthMismatch {
            name: flag_reg.to_string(),
            width: 1,
            got: layout.register(flag_reg)?.width,
        });
    }

    let word_of_bits = |v: usize| -> Vec<u8> {
        (0..k)
            .map(|j| {
                ((v >> ((k - 1 - j) * bits_per_symbol)) & ((1 << bits_per_symbol) - 1)) as u8
            })
            .collect()
    };
    let bits_of_word = |w: &[u8]| -> usize {
        w.iter()
            .fold(0usize, |acc, &s| (acc << bits_per_symbol) | s as usize)
    };

    // Permutation on (data, err, flag) basis states, as two involutions:
    // first XOR the decoded error (and failure bit) into the ancillas, then,
    // on the non-failed branch, XOR the err register back into the data,
    // turning |v>|v-c| into |c>|v-c>.
    let dim = 1usize << (2 * word_bits + 1);
    let mut perm = vec![0usize; dim];
    for (src, slot) in perm.iter_mut().enumerate() {
        let v = src >> (word_bits + 1);
        let e = (src >> 1) & ((1 << word_bits) - 1);
        let f = src & 1;
        let word = word_of_bits(v);
        let (diff, bad) = match code.decode(&word) {
            Some(success) => (bits_of_word(&success.error), 0usize),
            None => (0, 1),
        };
        let e2 = e ^ diff;
        let f2 = f ^ bad;
        let v2 = if f2 == 0 { v ^ e2 } else { v };
        *slot = (v2 << (word_bits + 1)) | (e2 << 1) | f2;
    }
    // permutation matrix: column src maps to row perm[src]
    let mut m = nalgebra::DMatrix::<num_complex::Complex64>::zeros(dim, dim);
    for (src, &dst) in perm.iter().enumerate() {
        m[(dst, src)] = num_complex::Complex64::ONE;
    }
    let mut targets: Vec<&str> = data_regs.to_vec();
    targets.push(err_reg);
    targets.push(flag_reg);
    apply_local(state, &m, &targets)
}

/// Convenience: extend a state with the fresh ancillas coherent decoding
/// needs, named `<prefix>_err` and `<prefix>_flag`.
pub fn with_decode_ancillas(
    state: &QuantumState,
    party: Party,
    prefix: &str,
    word_bits: usize,
) -> Result<(QuantumState, String, String)> {
    let err = format!("{prefix}_err");
    let flag = format!("{prefix}_flag");
    let s = state.with_register(&err, party, word_bits)?;
    let s = s.with_register(&flag, party, 1)?;
    Ok((s, err, flag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn entropy_values() {
        assert_abs_diff_eq!(binary_entropy(0.5).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(binary_entropy(0.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(binary_entropy(1.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(binary_entropy(0.2).unwrap(), 0.7219280948873623, epsilon = 1e-12);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn kl_values() {
        assert_abs_diff_eq!(kl_divergence(0.3, 0.3).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            kl_divergence(0.2, 0.05).unwrap(),
            0.2016579892451317,
            epsilon = 1e-12
        );
        assert!(kl_divergence(0.0, 0.5).is_err());
        assert!(kl_divergence(0.5, 1.0).is_err());
        assert!(kl_divergence(0.2, 0.05).unwrap() >= 0.0);
    }

    #[test]
    fn kl_relaxation_chain() {
        // 2^(-kD) <= 2^(k + k a log2 e) always, and the right side
        // <= 2^(-k) iff a >= -2/log2 e
        for &k in &[10usize, 30, 50] {
            for &a in &[0.1f64, 0.2, 0.4] {
                for &e in &[0.01f64, 0.05, 0.2] {
                    let d = kl_divergence(a, e).unwrap();
                    let lhs_exp = -(k as f64) * d;
                    let rhs_exp = k as f64 + k as f64 * a * e.log2();
                    assert!(
                        lhs_exp <= rhs_exp + 1e-9,
                        "relaxation fails at k={k} a={a} e={e}"
                    );
                    let premise = a >= -2.0 / e.log2();
                    if premise {
                        assert!(rhs_exp <= -(k as f64) + 1e-9);
                    } else {
                        assert!(rhs_exp > -(k as f64) - 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn params_invariants() {
        assert!(CodeParams::new(7, 2, 0.5).is_err());
        assert!(CodeParams::new(7, 2, 0.0).is_err());
        assert!(CodeParams::new(7, 1, 0.2).is_err());
        let p = CodeParams::new(7, 2, 3.0 / 14.0).unwrap();
        assert_eq!(p.distance(), 3);
        assert_eq!(p.correctable(), 1);
    }

    #[test]
    fn greedy_gv_k7_d3() {
        let params = CodeParams::new(7, 2, 3.0 / 14.0).unwrap();
        assert_eq!(params.distance(), 3);
        assert_eq!(gv_lower_bound(&params), 5); // ceil(128 / 29)
        for seed in 0..5u64 {
            let code = BlockCode::build(params, seed).unwrap();
            assert!(code.codewords.len() >= 5, "seed {seed}");
            assert!(code.measured_distance() >= 3);
        }
        // determinism
        let a = BlockCode::build(params, 42).unwrap();
        let b = BlockCode::build(params, 42).unwrap();
        assert_eq!(a.codewords, b.codewords);
    }

    #[test]
    fn distance_one_keeps_everything() {
        // d = 1: every word is a codeword
        let params = CodeParams::new(4, 2, 0.1).unwrap();
        assert_eq!(params.distance(), 1);
        let code = BlockCode::build(params, 3).unwrap();
        assert_eq!(code.codewords.len(), 16);
        assert_eq!(code.l, 4);
    }

    #[test]
    fn rate_bound_documented_vacuous_case() {
        // N=2, k=16, alpha=1/8: the bound is negative; greedy still returns
        // at least one codeword
        let params = CodeParams::new(16, 2, 0.125).unwrap();
        let bound = rate_bound(&params);
        assert!(bound < 0.0);
        let code = BlockCode::build(params, 9).unwrap();
        assert!(!code.codewords.is_empty());
        assert!((code.l as f64) >= bound);
    }

    #[test]
    fn rate_bound_holds_when_positive() {
        for seed in [1u64, 7, 123] {
            for (k, n, alpha) in [(10usize, 2usize, 0.05f64), (12, 2, 0.09), (6, 4, 0.1)] {
                let params = CodeParams::new(k, n, alpha).unwrap();
                let code = BlockCode::build(params, seed).unwrap();
                let gv = gv_lower_bound(&params);
                assert!(
                    (code.codewords.len() as u128) >= gv,
                    "GV count violated for k={k} N={n} alpha={alpha}"
                );
                assert!(code.l as f64 >= rate_bound(&params) - 1e-9);
            }
        }
    }

    #[test]
    fn decode_identity_and_single_flips() {
        let params = CodeParams::new(7, 2, 3.0 / 14.0).unwrap();
        let code = BlockCode::build(params, 5).unwrap();
        for c in &code.codewords {
            let hit = code.decode(c).unwrap();
            assert_eq!(&hit.codeword, c);
            assert!(hit.error.iter().all(|&e| e == 0));
            for j in 0..7 {
                let mut r = c.clone();
                r[j] ^= 1;
                let hit = code.decode(&r).unwrap();
                assert_eq!(&hit.codeword, c, "flip at {j}");
                assert_eq!(hit.error[j], 1);
            }
        }
    }

    #[test]
    fn decode_failure_beyond_radius() {
        // repetition k=4 (t=1): weight-2 words are equidistant -> failure
        let code = BlockCode::repetition(4, 2).unwrap();
        assert_eq!(code.correctable(), 1);
        assert!(code.decode(&[0, 0, 1, 1]).is_none());
        assert!(code.decode(&[0, 1, 0, 0]).is_some());
    }

    #[test]
    fn repetition_code_shape() {
        let code = BlockCode::repetition(5, 2).unwrap();
        assert_eq!(code.distance(), 5);
        assert_eq!(code.correctable(), 2);
        assert_eq!(code.l, 1);
        assert_eq!(code.codewords, vec![vec![0; 5], vec![1; 5]]);
        assert_eq!(code.encode(&[1]).unwrap(), &[1, 1, 1, 1, 1]);
        assert_eq!(code.message_of(&[1, 1, 1, 1, 1]).unwrap(), vec![1]);
    }

    #[test]
    fn syndrome_support_cost() {
        let params = CodeParams::new(16, 2, 0.125).unwrap();
        let mut err = vec![0u8; 16];
        let s = syndrome_support(&params, &err);
        assert!(s.positions.is_empty());
        assert_eq!(s.bit_cost, 10); // ceil(16 H2(1/8) + log2(2))
        assert!(!s.oversized);

        err[3] = 1;
        let s = syndrome_support(&params, &err);
        assert_eq!(s.positions, vec![3]);
        assert_eq!(s.bit_cost, 10);

        // |S| = k alpha exactly is accepted; one more is oversized
        err[9] = 1;
        let s = syndrome_support(&params, &err);
        assert!(!s.oversized);
        err[12] = 1;
        let s = syndrome_support(&params, &err);
        assert!(s.oversized);
    }

    #[test]
    fn exhaustive_correction_small_codes() {
        // decode(encode + e) recovers for all |e| <= t, k <= 10, N = 2
        for (k, alpha, seed) in [(8usize, 0.2f64, 2u64), (10, 0.16, 4)] {
            let params = CodeParams::new(k, 2, alpha).unwrap();
            let code = BlockCode::build(params, seed).unwrap();
            let t = code.correctable();
            for c in &code.codewords {
                // all error patterns of weight <= t
                for pattern in 0..(1usize << k) {
                    if (pattern.count_ones() as usize) > t {
                        continue;
                    }
                    let r: Vec<u8> = (0..k)
                        .map(|j| c[j] ^ ((pattern >> (k - 1 - j)) & 1) as u8)
                        .collect();
                    let hit = code.decode(&r).expect("within radius");
                    assert_eq!(&hit.codeword, c);
                }
            }
        }
    }

    mod coherent {
        use super::*;
        use crate::qstate::{basis_state_values, RegisterLayout};
        use num_complex::Complex64;

        #[test]
        fn codeword_maps_to_zero_error() {
            let code = BlockCode::repetition(3, 2).unwrap();
            let layout = RegisterLayout::of(&[("v", Party::Bob, 3)]).unwrap();
            let s = basis_state_values(&layout, &[("v", 0b111)]).unwrap();
            let (s, err, flag) = with_decode_ancillas(&s, Party::Bob, "d", 3).unwrap();
            let out = coherent_decode(&s, &code, &["v"], &err, &flag).unwrap();
            let idx = crate::qstate::pack_index(
                out.layout(),
                &[("v", 0b111), (err.as_str(), 0), (flag.as_str(), 0)],
            )
            .unwrap();
            assert_eq!(out.amplitudes()[idx].re, 1.0);
        }

        #[test]
        fn ball_superposition_factorizes() {
            // superposition over the correctable ball of |111> becomes
            // |111> tensor (error superposition)
            let code = BlockCode::repetition(3, 2).unwrap();
            let layout = RegisterLayout::of(&[("v", Party::Bob, 3)]).unwrap();
            let ball = [0b111usize, 0b011, 0b101, 0b110];
            let amp = Complex64::new(0.5, 0.0);
            let mut amps = vec![Complex64::ZERO; 8];
            for &v in &ball {
                amps[v] = amp;
            }
            let s = QuantumState::from_amplitudes(layout, amps).unwrap();
            let (s, err, flag) = with_decode_ancillas(&s, Party::Bob, "d", 3).unwrap();
            let out = coherent_decode(&s, &code, &["v"], &err, &flag).unwrap();
            let mut mass = 0.0;
            for &v in &ball {
                let e = v ^ 0b111;
                let idx = crate::qstate::pack_index(
                    out.layout(),
                    &[("v", 0b111), (err.as_str(), e), (flag.as_str(), 0)],
                )
                .unwrap();
                assert!((out.amplitudes()[idx] - amp).norm() < 1e-12);
                mass += out.amplitudes()[idx].norm_sqr();
            }
            // the four components above carry all the weight, so the output
            // is exactly |111> tensor (error superposition) tensor |0>
            assert!((mass - 1.0).abs() < 1e-12);
        }

        #[test]
        fn uncorrectable_branch_sets_flag() {
            let code = BlockCode::repetition(4, 2).unwrap();
            let layout = RegisterLayout::of(&[("v", Party::Bob, 4)]).unwrap();
            let s = basis_state_values(&layout, &[("v", 0b0011)]).unwrap();
            let (s, err, flag) = with_decode_ancillas(&s, Party::Bob, "d", 4).unwrap();
            let out = coherent_decode(&s, &code, &["v"], &err, &flag).unwrap();
            let idx = crate::qstate::pack_index(
                out.layout(),
                &[("v", 0b0011), (err.as_str(), 0), (flag.as_str(), 1)],
            )
            .unwrap();
            assert_eq!(out.amplitudes()[idx].re, 1.0);
        }
    }
}
