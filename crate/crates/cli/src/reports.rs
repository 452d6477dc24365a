//! Typed output reports. Every CLI JSON output deserializes strictly into
//! one of these (unknown fields rejected), which is how the shipped schemas
//! are enforced in tests.

use serde::{Deserialize, Serialize};

use cobitsim_core::compose::AccountingReport;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrRow {
    pub a: usize,
    pub b: usize,
    pub a_out: usize,
    pub b_out: usize,
    pub pr: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateReport {
    pub version: u32,
    pub protocol: String,
    pub c1_bits: usize,
    pub c2_bits: usize,
    pub total_qubits: usize,
    pub epsilon_measured: f64,
    pub epsilon_bar: f64,
    pub pr_table: Vec<PrRow>,
    pub gamma00_weight: f64,
    pub gamma00_entropy: f64,
    pub gamma00_rank: usize,
    pub decoupling_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requested: Option<(usize, usize)>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSummary {
    pub version: u32,
    pub protocol: String,
    pub k: usize,
    pub alpha: f64,
    pub trials: u64,
    pub p_fail: f64,
    pub decoupling_error: f64,
    pub chernoff_premise: bool,
    pub p_fail_bound_ok: bool,
    pub success_rate: f64,
    pub message_error_rate: f64,
    pub mean_ebits_out: f64,
    pub mean_k_prime: f64,
    pub cobits_fwd_per_success: f64,
    pub cobits_back_per_success: f64,
    pub accounting: AccountingReport,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapReport {
    pub version: u32,
    pub map: String,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrateSummary {
    pub version: u32,
    pub k_prime: usize,
    pub trials: u64,
    pub mean_ebits_out: f64,
    pub mean_per_copy: f64,
    pub success_rate: f64,
    pub bound_ebits: f64,
    pub bound_prob: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyReport {
    pub version: u32,
    pub teleport: f64,
    pub superdense: f64,
    pub two_cobits: f64,
    pub tp_sd: f64,
    pub tp_sd_probe_ebits: f64,
    pub tolerance: f64,
    pub all_pass: bool,
}
