//! Machine-readable reports.

use serde::Serialize;
use serde_json::{json, Value};

use opalg::logmod::RungStatus;
use opalg::positivity::{Certificate, Verdict, Witness};

use crate::problem::matrix_to_data;

/// The machine-readable report. Serialization uses sorted keys throughout,
/// so for a fixed seed and input the bytes are identical run to run apart
/// from `wall_time_ms`.
#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub input_digest: String,
    pub seed: u64,
    pub tolerances: Value,
    pub results: Value,
    pub exit_code: i32,
    pub wall_time_ms: u128,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Report bytes with the wall time zeroed, for determinism comparisons.
    pub fn to_json_without_timing(&self) -> String {
        let mut v = serde_json::to_value(self).expect("reports serialize");
        v["wall_time_ms"] = json!(0);
        serde_json::to_string_pretty(&v).expect("reports serialize")
    }
}

pub fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Certified => "CERTIFIED",
        Verdict::Refuted => "REFUTED",
        Verdict::Inconclusive => "INCONCLUSIVE",
    }
}

pub fn rung_json(s: RungStatus) -> &'static str {
    match s {
        RungStatus::Certified => "CERTIFIED",
        RungStatus::CertifiedByImplication => "CERTIFIED (by implication)",
        RungStatus::Refuted => "REFUTED",
        RungStatus::RefutedByImplication => "REFUTED (by implication)",
        RungStatus::Inconclusive => "INCONCLUSIVE",
    }
}

fn witness_json(w: &Witness) -> Value {
    match w {
        Witness::Feasible(m) => json!({"kind": "feasible_point", "matrix": matrix_to_data(m)}),
        Witness::CpLevel {
            k,
            block,
            image_min_eig,
        } => json!({
            "kind": "cp_level_witness",
            "level": k,
            "block": matrix_to_data(block),
            "image_min_eig": image_min_eig,
        }),
        Witness::NormLevel {
            k,
            block,
            norm_in,
            norm_out,
        } => json!({
            "kind": "norm_level_witness",
            "level": k,
            "block": matrix_to_data(block),
            "norm_in": norm_in,
            "norm_out": norm_out,
        }),
        Witness::Kernel(m) => json!({"kind": "kernel_element", "matrix": matrix_to_data(m)}),
        Witness::StarObstruction { a_part, b_part } => json!({
            "kind": "star_obstruction",
            "a_part": matrix_to_data(a_part),
            "b_part": matrix_to_data(b_part),
        }),
        Witness::Separating(m) => {
            json!({"kind": "separating_functional", "matrix": matrix_to_data(m)})
        }
    }
}

/// Certificate serialization; witnesses are embedded only on request.
pub fn cert_json(c: &Certificate, embed: bool) -> Value {
    let mut v = json!({
        "verdict": verdict_str(c.verdict),
        "residual": c.residual,
        "iterations": c.iterations,
        "detail": c.detail,
    });
    if embed {
        if let Some(w) = &c.witness {
            v["witness"] = witness_json(w);
        }
    }
    v
}
