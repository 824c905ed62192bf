//! Verification of model-generated citations against bibliographic indexes.
//!
//! Pipeline stages, in order: [`claimset`] builds prompts for each claim,
//! [`refparse`] pulls structured citations out of model output,
//! [`indexclient`] retrieves candidate records, [`matcher`] scores them,
//! [`labeler`] turns the best score into a verdict, and [`stats`] aggregates.

pub mod claimset;
pub mod indexclient;
pub mod labeler;
pub mod matcher;
pub mod refparse;
pub mod stats;

pub use claimset::{
    ClaimRecord, ClaimSet, Condition, ConditionSpec, Domain, RunSpec, TemplateSet, YearWindow,
};
pub use indexclient::{CandidateRecord, CandidateSet, IndexBackend, RetrievalConfig, RetrievalError};
pub use labeler::{Label, LabelerConfig, Verdict};
pub use matcher::MatchScore;
pub use refparse::{ModelOutput, ParsedCitation};
pub use stats::{
    AuditRates, BootstrapConfig, CellMetrics, ClaimCounts, ClaimFraction, ConfusionMatrix3,
    RateDifference, Resampling, VerdictRecord,
};
