//! Human audit labels joined to pipeline verdicts.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use citeverify_core::labeler::Label;
use citeverify_core::stats::{ConfusionMatrix3, StatsError, VerdictRecord};
use citeverify_core::Condition;

/// One audited citation. `pipeline_label`, when present, must agree with the verdicts file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub claim_id: String,
    pub model_id: String,
    pub condition: Condition,
    pub citation_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline_label: Option<Label>,
    pub human_label: Label,
}

type Key<'a> = (&'a str, &'a str, Condition, usize);

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AuditError {
    #[error("audit line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("audit line {line}: no verdict for {model_id}/{condition}/{claim_id} citation {citation_index}")]
    UnknownCitation {
        line: usize,
        claim_id: String,
        model_id: String,
        condition: Condition,
        citation_index: usize,
    },
    #[error("audit line {line}: pipeline label {audit} disagrees with verdict {verdict}")]
    LabelMismatch { line: usize, audit: Label, verdict: Label },
    #[error("audit line {line}: citation audited twice")]
    Duplicate { line: usize },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

pub fn parse_audit(content: &str) -> Result<Vec<(usize, AuditRecord)>, AuditError> {
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|r| (i + 1, r))
                .map_err(|e| AuditError::Malformed {
                    line: i + 1,
                    message: e.to_string(),
                })
        })
        .collect()
}

/// Pipeline label (rows) against human label (columns) for every audited citation.
pub fn confusion(
    audit: &[(usize, AuditRecord)],
    verdicts: &[VerdictRecord],
) -> Result<ConfusionMatrix3, AuditError> {
    let index: HashMap<Key, Label> = verdicts
        .iter()
        .map(|v| ((v.claim_id.as_str(), v.model_id.as_str(), v.condition, v.citation_index), v.label))
        .collect();
    let mut seen = std::collections::HashSet::new();
    let mut pairs = Vec::with_capacity(audit.len());
    for (line, a) in audit {
        let key = (a.claim_id.as_str(), a.model_id.as_str(), a.condition, a.citation_index);
        let Some(&label) = index.get(&key) else {
            return Err(AuditError::UnknownCitation {
                line: *line,
                claim_id: a.claim_id.clone(),
                model_id: a.model_id.clone(),
                condition: a.condition,
                citation_index: a.citation_index,
            });
        };
        if let Some(p) = a.pipeline_label.filter(|p| *p != label) {
            return Err(AuditError::LabelMismatch {
                line: *line,
                audit: p,
                verdict: label,
            });
        }
        if !seen.insert(key) {
            return Err(AuditError::Duplicate { line: *line });
        }
        pairs.push((label, a.human_label));
    }
    Ok(ConfusionMatrix3::from_pairs(pairs)?)
}
