//! Machine-readable reports. The JSON schema is versioned by the top-level
//! `schema` field; the text renderings are human-oriented and not part of
//! the stability contract.

use serde::{Deserialize, Serialize};

use crate::catalog::CheckOutcome;
use crate::series::MismatchJson;
use crate::window::OracleOutcome;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Mismatch,
    Error,
}

/// Largest |n| actually summed per Sum node, in evaluation order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NMaxUsed {
    pub lhs: Vec<i64>,
    pub rhs: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub id: String,
    pub order: i64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mismatch: Option<MismatchJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub n_max_used: NMaxUsed,
    pub elapsed_ms: u64,
}

impl Report {
    pub fn from_outcome(o: &CheckOutcome) -> Report {
        Report {
            schema: SCHEMA_VERSION,
            id: o.id.clone(),
            order: o.order,
            status: if o.passed() {
                Status::Pass
            } else {
                Status::Mismatch
            },
            mismatch: o.mismatch.as_ref().map(MismatchJson::from),
            error: None,
            n_max_used: NMaxUsed {
                lhs: o.lhs_n_max.clone(),
                rhs: o.rhs_n_max.clone(),
            },
            elapsed_ms: o.elapsed_ms,
        }
    }

    pub fn from_error(id: &str, order: i64, err: &crate::error::Error) -> Report {
        Report {
            schema: SCHEMA_VERSION,
            id: id.to_string(),
            order,
            status: Status::Error,
            mismatch: None,
            error: Some(err.to_string()),
            n_max_used: NMaxUsed::default(),
            elapsed_ms: 0,
        }
    }

    pub fn render_text(&self) -> String {
        match self.status {
            Status::Pass => format!(
                "PASS  {:28} order {:>3}  {:>6} ms  n_max lhs {:?} rhs {:?}",
                self.id, self.order, self.elapsed_ms, self.n_max_used.lhs, self.n_max_used.rhs
            ),
            Status::Mismatch => {
                let m = self.mismatch.as_ref().unwrap();
                format!(
                    "FAIL  {:28} order {:>3}  first mismatch at q^{}: {}",
                    self.id, self.order, m.q_exp, m.diff
                )
            }
            Status::Error => format!(
                "ERROR {:28} order {:>3}  {}",
                self.id,
                self.order,
                self.error.as_deref().unwrap_or("unknown")
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleReport {
    pub schema: u32,
    pub id: String,
    pub order: i64,
    pub window: i64,
    pub status: Status,
    pub checks: Vec<crate::window::OracleCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub elapsed_ms: u64,
}

impl OracleReport {
    pub fn from_outcome(o: &OracleOutcome) -> OracleReport {
        OracleReport {
            schema: SCHEMA_VERSION,
            id: o.id.clone(),
            order: o.order,
            window: o.window,
            status: if o.passed() {
                Status::Pass
            } else {
                Status::Mismatch
            },
            checks: o.checks.clone(),
            error: None,
            elapsed_ms: o.elapsed_ms,
        }
    }

    pub fn from_error(
        id: &str,
        order: i64,
        window: i64,
        err: &crate::error::Error,
    ) -> OracleReport {
        OracleReport {
            schema: SCHEMA_VERSION,
            id: id.to_string(),
            order,
            window,
            status: Status::Error,
            checks: Vec::new(),
            error: Some(err.to_string()),
            elapsed_ms: 0,
        }
    }

    pub fn render_text(&self) -> String {
        match self.status {
            Status::Pass => format!(
                "AGREE    {:28} order {:>3} window {:>3}  {:>6} ms",
                self.id, self.order, self.window, self.elapsed_ms
            ),
            Status::Mismatch => {
                let c = self
                    .checks
                    .iter()
                    .find(|c| c.status != "agree")
                    .map(|c| c.name.as_str())
                    .unwrap_or("?");
                format!(
                    "DIVERGE  {:28} order {:>3} window {:>3}  first divergence on {c}",
                    self.id, self.order, self.window
                )
            }
            Status::Error => format!(
                "ERROR    {:28} {}",
                self.id,
                self.error.as_deref().unwrap_or("unknown")
            ),
        }
    }
}

/// One row of the catalog listing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListEntry {
    pub id: String,
    pub title: String,
    pub source: String,
    pub default_order: i64,
}
