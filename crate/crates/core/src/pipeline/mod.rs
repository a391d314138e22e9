//! Configuration, stage commands and report emission.
//!
//! Every report carries the SHA-256 of the effective configuration and the
//! feature-registry version: JSON reports in a top-level envelope, CSV
//! reports in a leading `#` comment line. Wall-clock timestamps appear only
//! in `logs/`, so reports are byte-identical across reruns.

mod config;
mod report;
mod stages;
mod tools;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{config_hash, load_config, PipelineConfig};
pub use report::{read_csv_report_header, write_csv_report, write_json_report, ReportEnvelope, RunRecord, StageStatus};
pub use stages::{cmd_predict, cmd_preprocess, cmd_radiomics, cmd_segmetrics, cmd_stability};
pub use stages::{read_features, table1_row, GT_SOURCE, TABLE1_COLUMNS};
pub use tools::{
    analyze_ratings, cmd_convert, cmd_phantom, cmd_ratings, cmd_registry, cmd_verify, parse_ratings, QuestionResult, Ratings,
    RatingsReport, RegistryDump, VerifyReport,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Volume(#[from] crate::volume::VolumeError),
    #[error(transparent)]
    Features(#[from] crate::features::FeatureMatrixError),
    #[error(transparent)]
    Phantom(#[from] crate::phantom::PhantomError),
    #[error("malformed ratings: {0}")]
    MalformedRatings(String),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("stage `{stage}` failed for every case")]
    AllFailed { stage: &'static str },
    #[error("missing input `{0}`; run the earlier stage first")]
    MissingInput(PathBuf),
}

pub(crate) fn io_context(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> PipelineError {
    let context = context.into();
    move |source| PipelineError::Io { context, source }
}

/// Result of a batch stage. `Partial` maps to exit code 0 with a warning,
/// a total failure is returned as an error (exit code 2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StageOutcome {
    Success,
    Partial { failed: usize, total: usize },
}

impl StageOutcome {
    pub fn from_counts(stage: &'static str, failed: usize, total: usize) -> Result<Self, PipelineError> {
        if total > 0 && failed == total {
            Err(PipelineError::AllFailed { stage })
        } else if failed > 0 {
            Ok(Self::Partial { failed, total })
        } else {
            Ok(Self::Success)
        }
    }

    pub fn merge(self, other: Self) -> Self {
        match (self, other) {
            (Self::Success, o) | (o, Self::Success) => o,
            (Self::Partial { failed: a, total: b }, Self::Partial { failed: c, total: d }) => Self::Partial { failed: a + c, total: b + d },
        }
    }
}
