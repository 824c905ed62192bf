//! Parse, retrieve, score and label a corpus of model outputs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use citeverify_core::claimset::{ClaimSet, Condition, YearWindow};
use citeverify_core::indexclient::{retrieve_candidates, CandidateSet, IndexBackend, RetrievalConfig};
use citeverify_core::labeler::{doi_presence, label_citation, Label, LabelerConfig, Verdict};
use citeverify_core::refparse::{parse_output, ModelOutput, ParsedCitation};
use citeverify_core::stats::{RunRecord, VerdictRecord};

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub retrieval: RetrievalConfig,
    pub labeler: LabelerConfig,
    /// Largest tolerated share of citations with hard retrieval errors.
    pub failure_budget: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            retrieval: RetrievalConfig::default(),
            labeler: LabelerConfig::default(),
            failure_budget: 0.10,
        }
    }
}

/// A citation none of whose lookups succeeded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalFailure {
    pub claim_id: String,
    pub model_id: String,
    pub condition: Condition,
    pub citation_index: usize,
    pub title: Option<String>,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOutcome {
    pub verdicts: Vec<VerdictRecord>,
    pub runs: Vec<RunRecord>,
    pub failures: Vec<RetrievalFailure>,
    pub parse_failures: usize,
}

impl VerifyOutcome {
    pub fn n_citations(&self) -> usize {
        self.verdicts.len()
    }

    pub fn failure_rate(&self) -> f64 {
        if self.verdicts.is_empty() {
            0.0
        } else {
            self.failures.len() as f64 / self.verdicts.len() as f64
        }
    }

    pub fn exceeds_budget(&self, budget: f64) -> bool {
        self.failure_rate() > budget
    }

    pub fn label_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for v in &self.verdicts {
            c[v.label.index()] += 1;
        }
        c
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PipelineError {
    #[error("output for ({model_id}, {condition}) references unknown claim '{claim_id}'")]
    UnknownClaim {
        claim_id: String,
        model_id: String,
        condition: Condition,
    },
}

/// Windows apply only under conditions that ask for one.
fn window_for(claims: &ClaimSet, output: &ModelOutput) -> Result<Option<YearWindow>, PipelineError> {
    let claim = claims.get(&output.claim_id).ok_or_else(|| PipelineError::UnknownClaim {
        claim_id: output.claim_id.clone(),
        model_id: output.model_id.clone(),
        condition: output.condition,
    })?;
    Ok(if output.condition.spec().uses_window {
        claim.window
    } else {
        None
    })
}

enum Outcome {
    Verdict(Verdict),
    Failed(Verdict, String),
}

fn verify_one(
    parsed: &ParsedCitation,
    window: Option<&YearWindow>,
    backend: &dyn IndexBackend,
    opts: &VerifyOptions,
) -> Outcome {
    if !parsed.parse_ok {
        return Outcome::Verdict(label_citation(parsed, &CandidateSet::default(), &opts.labeler));
    }
    match retrieve_candidates(parsed, &opts.retrieval, backend) {
        Ok(set) => Outcome::Verdict(label_citation(parsed, &set, &opts.labeler).with_window(window)),
        Err(e) => {
            // No evidence either way: triaged as Unresolved and reported.
            let v = Verdict {
                citation_index: parsed.citation_index,
                label: Label::Unresolved,
                best_score: None,
                temporal_violation: false,
                doi_present: doi_presence(parsed),
                matched_year: None,
                parsed_year: parsed.year,
            };
            Outcome::Failed(v.with_window(window), e.to_string())
        }
    }
}

/// Verdicts in corpus order, then citation order; independent of scheduling.
pub fn verify_corpus(
    claims: &ClaimSet,
    outputs: &[ModelOutput],
    backend: &dyn IndexBackend,
    opts: &VerifyOptions,
) -> Result<VerifyOutcome, PipelineError> {
    let windows = outputs
        .iter()
        .map(|o| window_for(claims, o))
        .collect::<Result<Vec<_>, _>>()?;
    let parsed: Vec<Vec<ParsedCitation>> = outputs.par_iter().map(|o| parse_output(&o.output_text)).collect();

    let work: Vec<(usize, &ParsedCitation)> = parsed
        .iter()
        .enumerate()
        .flat_map(|(i, cits)| cits.iter().map(move |c| (i, c)))
        .collect();
    let results: Vec<Outcome> = work
        .par_iter()
        .map(|&(i, c)| verify_one(c, windows[i].as_ref(), backend, opts))
        .collect();

    let mut outcome = VerifyOutcome::default();
    for ((i, c), result) in work.into_iter().zip(results) {
        let o = &outputs[i];
        let verdict = match result {
            Outcome::Verdict(v) => v,
            Outcome::Failed(v, error) => {
                outcome.failures.push(RetrievalFailure {
                    claim_id: o.claim_id.clone(),
                    model_id: o.model_id.clone(),
                    condition: o.condition,
                    citation_index: c.citation_index,
                    title: c.title.clone(),
                    error,
                });
                v
            }
        };
        outcome.parse_failures += usize::from(!c.parse_ok);
        outcome
            .verdicts
            .push(VerdictRecord::from_verdict(&o.claim_id, &o.model_id, o.condition, &verdict));
    }
    outcome.runs = outputs
        .iter()
        .zip(&parsed)
        .map(|(o, cits)| RunRecord {
            claim_id: o.claim_id.clone(),
            model_id: o.model_id.clone(),
            condition: o.condition,
            n_citations: cits.len(),
        })
        .collect();
    Ok(outcome)
}
