//! Statistical battery for comparing model-mask radiomics with ground truth.

pub mod correlation;
pub mod descriptive;
pub mod fdr;
pub mod friedman;
pub mod manova;
pub mod shapiro;
pub mod stability;
pub mod ttest;
pub mod wilcoxon;

use thiserror::Error;

pub use correlation::{icc_2_1, pearson, spearman};
pub use fdr::bh_fdr;
pub use friedman::{friedman, FriedmanResult};
pub use manova::{manova_two_group, ManovaDecision, ManovaResult};
pub use shapiro::{shapiro_wilk, ShapiroResult};
pub use stability::{stability_report, StabilityReport};
pub use ttest::{paired_t, TTestResult};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("at most {limit} samples supported, got {got}")]
    TooManySamples { limit: usize, got: usize },
    #[error("input is constant")]
    ConstantInput,
    #[error("paired samples have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("all cells are equal; variance components are zero")]
    DegenerateVariance,
    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("paired differences are constant")]
    ConstantDifferences,
    #[error("p-value {0} outside [0, 1]")]
    InvalidPValue(f64),
    #[error("within-group SSCP matrix is singular")]
    SingularWithinMatrix,
    #[error("MANOVA needs more than {needed} pooled cases, got {got}")]
    TooFewForManova { needed: usize, got: usize },
    #[error("feature sets differ between groups")]
    FeatureMismatch,
    #[error("every rater gave identical ratings to all treatments")]
    DegenerateRanks,
    #[error("ratings matrix must be at least 2 × 2, got {0} × {1}")]
    BadRatingsShape(usize, usize),
    #[error("non-finite input")]
    NonFinite,
}
