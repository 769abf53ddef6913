//! End-to-end experiments: phase-wise query modification, the mask-count
//! sweep, the query-length comparison, structural remapping, token-order
//! perturbation and similarity heatmaps.

mod experiments;
mod pipeline;
mod queries;
mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::DEFAULT_K_PER_TOKEN;
use crate::remap::RemapCondition;
use crate::token::MaskPolicy;

pub use experiments::{
    heatmaps, mask_sweep, maxlen_experiment, remap_experiment, swap_experiment,
    swap_experiment_stored, MaxlenCell, MaxlenReport, RemapReport, ShiftRow, SwapReport,
    SweepReport, SweepRow,
};
pub use pipeline::{run_pipeline, Engine, PipelineParams, Reranker};
pub use queries::QuerySet;
pub use report::{aggregate, compare, MetricComparison};

/// Total query length the checkpoint was trained with.
pub const BASELINE_TOTAL_LEN: usize = 32;

/// Which ranking phase sees the modified query.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseConfig {
    SetRetrievalOnly,
    RerankOnly,
    #[default]
    Both,
}

impl PhaseConfig {
    pub const ALL: [PhaseConfig; 3] = [
        PhaseConfig::SetRetrievalOnly,
        PhaseConfig::RerankOnly,
        PhaseConfig::Both,
    ];

    /// Forms used for (set retrieval, reranking).
    pub fn split(self, baseline: QueryForm, modified: QueryForm) -> (QueryForm, QueryForm) {
        match self {
            PhaseConfig::SetRetrievalOnly => (modified, baseline),
            PhaseConfig::RerankOnly => (baseline, modified),
            PhaseConfig::Both => (modified, modified),
        }
    }

    pub fn flag(self) -> &'static str {
        match self {
            PhaseConfig::SetRetrievalOnly => "set-retrieval-only",
            PhaseConfig::RerankOnly => "rerank-only",
            PhaseConfig::Both => "both",
        }
    }
}

impl fmt::Display for PhaseConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.flag())
    }
}

impl FromStr for PhaseConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PhaseConfig::ALL
            .into_iter()
            .find(|p| p.flag() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown phase config {s:?}")))
    }
}

/// How a query is built before scoring: mask augmentation, then remapping.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueryForm {
    pub policy: MaskPolicy,
    pub remap: RemapCondition,
}

impl QueryForm {
    pub fn new(policy: MaskPolicy, remap: RemapCondition) -> Self {
        QueryForm { policy, remap }
    }

    /// `[CLS] [Q] text [SEP]` padded with masks to 32 tokens, no remapping.
    pub fn baseline() -> Self {
        QueryForm::new(
            MaskPolicy::PadToTotalLength(BASELINE_TOTAL_LEN),
            RemapCondition::None,
        )
    }
}

fn default_mask_counts() -> Vec<usize> {
    (0..=96).step_by(2).collect()
}

fn default_total_lengths() -> Vec<usize> {
    vec![32, 128]
}

fn default_k() -> usize {
    DEFAULT_K_PER_TOKEN
}

fn default_cutoff() -> usize {
    1000
}

fn default_baseline() -> usize {
    BASELINE_TOTAL_LEN
}

fn default_alpha() -> f64 {
    crate::stats::DEFAULT_ALPHA
}

/// Sweep configuration, also readable from a JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_mask_counts")]
    pub mask_counts: Vec<usize>,
    #[serde(default = "default_total_lengths")]
    pub total_lengths: Vec<usize>,
    #[serde(default)]
    pub remap: RemapCondition,
    #[serde(default)]
    pub phase: PhaseConfig,
    #[serde(default = "default_k")]
    pub k_per_token: usize,
    #[serde(default = "default_cutoff")]
    pub rerank_cutoff: usize,
    #[serde(default = "default_baseline")]
    pub baseline_total_len: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            mask_counts: default_mask_counts(),
            total_lengths: default_total_lengths(),
            remap: RemapCondition::None,
            phase: PhaseConfig::Both,
            k_per_token: default_k(),
            rerank_cutoff: default_cutoff(),
            baseline_total_len: default_baseline(),
            alpha: default_alpha(),
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.mask_counts.is_empty() || self.total_lengths.is_empty() {
            return Err(Error::InvalidArgument(
                "sweep lists must be non-empty".into(),
            ));
        }
        if self.k_per_token == 0 {
            return Err(Error::InvalidArgument("k_per_token must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument("alpha must be in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> PipelineParams {
        PipelineParams {
            k_per_token: self.k_per_token,
            rerank_cutoff: self.rerank_cutoff,
            reranker: Reranker::MaxSim,
        }
    }

    pub fn baseline_form(&self) -> QueryForm {
        QueryForm::new(
            MaskPolicy::PadToTotalLength(self.baseline_total_len),
            RemapCondition::None,
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SweepSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sweep_has_49_points() {
        let s = SweepSpec::default();
        assert_eq!(s.mask_counts.len(), 49);
        assert_eq!(s.mask_counts[48], 96);
        assert_eq!(s.total_lengths, vec![32, 128]);
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let s = SweepSpec::from_json(
            r#"{"mask_counts":[0,8],"phase":"rerank-only","remap":"mask-to-all"}"#,
        )
        .unwrap();
        assert_eq!(s.mask_counts, vec![0, 8]);
        assert_eq!(s.phase, PhaseConfig::RerankOnly);
        assert_eq!(s.remap, RemapCondition::MaskToStructuralAndText);
        assert_eq!(s.k_per_token, 1000);
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(SweepSpec::from_json(&text).unwrap(), s);
        assert!(SweepSpec::from_json(r#"{"mask_counts":[]}"#).is_err());
        assert!(SweepSpec::from_json(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn phase_split() {
        let b = QueryForm::baseline();
        let m = QueryForm::new(MaskPolicy::FixedMaskCount(4), RemapCondition::None);
        assert_eq!(PhaseConfig::SetRetrievalOnly.split(b, m), (m, b));
        assert_eq!(PhaseConfig::RerankOnly.split(b, m), (b, m));
        assert_eq!(PhaseConfig::Both.split(b, m), (m, m));
        for p in PhaseConfig::ALL {
            assert_eq!(p.flag().parse::<PhaseConfig>().unwrap(), p);
        }
    }
}
