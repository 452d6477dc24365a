//! On-disk formats the CLI consumes: protocol sources, code specs, and
//! pipeline configurations. All formats carry a `version` field.

use serde::{Deserialize, Serialize};

use cobitsim_core::code::{BlockCode, CodeParams};
use cobitsim_core::compose::PipelineConfig;
use cobitsim_core::protocol::MessageProtocol;
use cobitsim_core::{Error, Result};

/// A protocol either named from the builtin set or written out in full.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProtocolSource {
    Builtin {
        builtin: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        flip_prob: Option<f64>,
    },
    Inline(Box<MessageProtocol>),
}

pub fn builtin_protocol(name: &str, flip_prob: Option<f64>) -> Result<MessageProtocol> {
    Ok(match name {
        "crossing" => MessageProtocol::crossing(),
        "noisy-crossing" => MessageProtocol::noisy_crossing(flip_prob.ok_or_else(|| {
            Error::InvalidProtocol("noisy-crossing needs flip_prob".into())
        })?),
        "cnot-forward" => MessageProtocol::cnot_forward(),
        "measured-cnot-forward" => MessageProtocol::measured_cnot_forward(),
        "identity" => MessageProtocol::identity_protocol(),
        "swap" => MessageProtocol::swap_protocol(),
        "crossing-with-epr" => MessageProtocol::crossing_with_epr(),
        "crossing-entangling" => MessageProtocol::crossing_entangling(),
        other => {
            return Err(Error::InvalidProtocol(format!(
                "unknown builtin protocol `{other}`"
            )))
        }
    })
}

impl ProtocolSource {
    pub fn resolve(&self) -> Result<MessageProtocol> {
        let p = match self {
            ProtocolSource::Builtin { builtin, flip_prob } => {
                builtin_protocol(builtin, *flip_prob)?
            }
            ProtocolSource::Inline(p) => (**p).clone(),
        };
        p.validate()?;
        Ok(p)
    }
}

/// A protocol file: a version wrapper around a protocol source.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolFile {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(flatten)]
    pub protocol: ProtocolSource,
}

fn default_version() -> u32 {
    1
}

/// How to obtain a block code for one direction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CodeSpec {
    /// The length-k repetition code over the message alphabet.
    Repetition,
    /// Greedy distance-2k*alpha construction with the given seed.
    Gv { seed: u64 },
    /// Explicit codeword list (distance verified on load).
    Explicit { codewords: Vec<Vec<u8>> },
}

impl CodeSpec {
    pub fn build(&self, k: usize, n_symbols: usize, alpha: f64) -> Result<BlockCode> {
        match self {
            CodeSpec::Repetition => BlockCode::repetition(k, n_symbols),
            CodeSpec::Gv { seed } => {
                BlockCode::build(CodeParams::new(k, n_symbols, alpha)?, *seed)
            }
            CodeSpec::Explicit { codewords } => BlockCode::from_codewords(
                CodeParams::new(k, n_symbols, alpha)?,
                codewords.clone(),
            ),
        }
    }
}

/// A pipeline configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineFile {
    #[serde(default = "default_version")]
    pub version: u32,
    pub protocol: ProtocolSource,
    pub k: usize,
    pub alpha: f64,
    pub code_a: CodeSpec,
    pub code_b: CodeSpec,
    #[serde(default = "default_r")]
    pub r_side_channel: f64,
    #[serde(default)]
    pub delta_n: f64,
    pub messages_a: Vec<u8>,
    pub messages_b: Vec<u8>,
}

fn default_r() -> f64 {
    4.0
}

impl PipelineFile {
    pub fn to_config(&self) -> Result<PipelineConfig> {
        let protocol = self.protocol.resolve()?;
        let code_a = self
            .code_a
            .build(self.k, 1usize << protocol.c1_bits, self.alpha)?;
        let code_b = self
            .code_b
            .build(self.k, 1usize << protocol.c2_bits, self.alpha)?;
        let mut cfg = PipelineConfig::new(protocol, self.k, code_a, code_b, self.alpha);
        cfg.r_side_channel = self.r_side_channel;
        cfg.delta_n = self.delta_n;
        cfg.validate()?;
        Ok(cfg)
    }
}
