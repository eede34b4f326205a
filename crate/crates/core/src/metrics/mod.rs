//! Label ingestion, vote aggregation and agreement statistics.
//!
//! Answers are binned from the six-way questionnaire into three severity
//! classes before any comparison. Kappa confidence intervals come from a
//! seeded exam-level bootstrap so reports are reproducible.

mod alpha;
mod binary;
mod bootstrap;
mod kappa;
mod labels;
mod report;
mod vote;

pub use alpha::cronbach_alpha;
pub use binary::{binary_metrics, confusion_matrix, BinaryMetrics, ConfusionMatrix};
pub use bootstrap::{
    bootstrap_kappa, bootstrap_kappa_seeded, percentile, BootstrapKappa, DEFAULT_RESAMPLES,
    MAX_REDRAWS,
};
pub use kappa::{cohen_kappa, contingency, kappa_from_table, KappaStat};
pub use labels::{
    bin_to_class3, Choice6, Class3, LabelRecord, RaterLabels, SorLabels, SwarmOutcomes, SwarmResult,
};
pub use report::{
    agreement, cohort_report, render_tables, AgreementReport, CohortReport, ReferenceBlock,
    ReportOptions, RowKind,
};
pub use vote::{majority_vote, most_confident_vote, MostConfidentMode, VoteSet};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("empty input")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least two {0}, got {1}")]
    TooFew(&'static str, usize),
    #[error("rater #{rater} has no confidence score{}", if exam.is_empty() { String::new() } else { format!(" for exam {exam}") })]
    MissingConfidence { rater: usize, exam: String },
    #[error("total score variance is zero")]
    ZeroVariance,
    #[error("every resample was degenerate after {0} draws")]
    RedrawLimit(usize),
    #[error("misaligned exams: {0}")]
    Misaligned(String),
    #[error("{0}")]
    InvalidValue(String),
    #[error("{file}: row {row}: {message}")]
    Parse {
        file: String,
        row: u64,
        message: String,
    },
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}
