//! Serializable reports emitted by the command-line front end.

use serde::{Deserialize, Serialize};
use trackkit_core::control::Mode;
use trackkit_core::properties::{PropertyProfile, PropertyTuple, ZeroRankTest};
use trackkit_core::{ThetaVariant, TrackabilityReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Trackable,
    Untrackable,
    /// No input reaches the output, so the delay is undefined.
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub name: Option<String>,
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub theta_variant: ThetaVariant,
    /// Scalar index in the selected variant.
    pub system_index: Option<f64>,
    pub details: Option<TrackabilityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub name: Option<String>,
    pub tolerance: f64,
    pub profile: PropertyProfile,
    pub zero_test: ZeroRankTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub name: Option<String>,
    pub delay: usize,
    pub horizon: usize,
    /// `None` for a zero reference.
    pub theta: Option<f64>,
    pub min_error_bound: f64,
    pub reference_norm: f64,
    pub projected_norm: f64,
    /// Reachable from the system's `x0`.
    pub member: bool,
    pub relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub name: Option<String>,
    pub mode: Mode,
    pub delay: usize,
    pub horizon: usize,
    pub error_norm: f64,
    pub reference_error_norm: f64,
    pub best_effort: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRow {
    pub example: u8,
    pub file: String,
    pub expected: PropertyTuple,
    pub expected_delay: Option<usize>,
    pub profile: Option<PropertyProfile>,
    pub error: Option<String>,
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub rows: Vec<CorpusRow>,
    pub all_match: bool,
}
