use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use serde::Serialize;

use citeverify_core::claimset::{load_claims, render_prompt, ClaimSet, Condition, Domain, TemplateSet};
use citeverify_core::indexclient::{FixtureBackend, IndexBackend, LiveBackend, RetrievalConfig};
use citeverify_core::labeler::{Label, LabelerConfig};
use citeverify_core::refparse::load_outputs;
use citeverify_core::stats::{
    box_stats, cell_metrics, cell_metrics_with_ci, cells, claim_fractions, cohens_kappa, group_rates,
    parse_runs, parse_verdicts, pool_clusters, rate_difference_ci, sensitivity_reassign, Agreement,
    AuditRates, BootstrapConfig, CellKey, CellMetrics, ClaimCounts, ConfusionMatrix3, GroupKey,
    Interval, RunRecord, Statistic, StatsError, VerdictRecord,
};

use crate::args::{Backend, Cli, Command, PlotArgs, RenderArgs, StatsArgs, ValidateArgs, VerifyArgs};
use crate::audit::{confusion, parse_audit};
use crate::pipeline::{verify_corpus, VerifyOptions};
use crate::report::{read_to_string, write_atomic, write_csv, write_json, write_jsonl};
use crate::CliError;

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::RenderPrompts(a) => cmd_render_prompts(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Stats(a) => cmd_stats(&a),
        Command::Validate(a) => cmd_validate(&a),
        Command::PlotData(a) => cmd_plot_data(&a),
    }
}

fn load_claim_set(path: &Path) -> Result<ClaimSet, CliError> {
    load_claims(path).map_err(CliError::input)
}

fn load_verdict_rows(path: &Path) -> Result<Vec<VerdictRecord>, CliError> {
    parse_verdicts(&read_to_string(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Explicit runs file, else `runs.jsonl` beside the verdicts, else none.
fn load_run_rows(explicit: Option<&PathBuf>, verdicts: &Path) -> Result<Vec<RunRecord>, CliError> {
    let path = match explicit {
        Some(p) => p.clone(),
        None => {
            let sibling = verdicts.with_file_name("runs.jsonl");
            if !sibling.exists() {
                return Ok(Vec::new());
            }
            sibling
        }
    };
    parse_runs(&read_to_string(&path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn domain_map(claims: &ClaimSet) -> BTreeMap<String, Domain> {
    claims.iter().map(|c| (c.claim_id.clone(), c.domain)).collect()
}

// ---- render-prompts ----------------------------------------------------------

#[derive(Serialize)]
struct PromptError {
    claim_id: String,
    condition: Condition,
    message: String,
}

/// `<claim>__<condition>.txt` with characters outside `[A-Za-z0-9._-]` replaced.
pub fn prompt_file_name(claim_id: &str, condition: Condition) -> String {
    let safe: String = claim_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect();
    format!("{safe}__{}.txt", condition.slug())
}

fn cmd_render_prompts(a: &RenderArgs) -> Result<(), CliError> {
    let claims = load_claim_set(&a.claims)?;
    let templates = match &a.templates {
        Some(dir) => TemplateSet::load_dir(dir).map_err(CliError::input)?,
        None => TemplateSet::default(),
    };
    let mut conditions: Vec<Condition> = Vec::new();
    for c in if a.conditions.is_empty() { Condition::ALL.to_vec() } else { a.conditions.clone() } {
        if !conditions.contains(&c) {
            conditions.push(c);
        }
    }

    let mut names = HashSet::new();
    for claim in claims.iter() {
        let name = prompt_file_name(&claim.claim_id, Condition::Baseline);
        if !names.insert(name) {
            return Err(CliError::Input(format!(
                "claim id '{}' collides with another after file-name sanitizing",
                claim.claim_id
            )));
        }
    }

    let dir = a.report_dir.join("prompts");
    let mut errors = Vec::new();
    let mut written = 0usize;
    for claim in claims.iter() {
        for &cond in &conditions {
            match render_prompt(claim, &cond.spec(), &templates) {
                Ok(text) => {
                    write_atomic(&dir.join(prompt_file_name(&claim.claim_id, cond)), text.as_bytes())?;
                    written += 1;
                }
                Err(e) => errors.push(PromptError {
                    claim_id: claim.claim_id.clone(),
                    condition: cond,
                    message: e.to_string(),
                }),
            }
        }
    }
    write_jsonl(&a.report_dir.join("prompt_errors.jsonl"), &errors)?;
    eprintln!("render-prompts: {written} prompt files, {} skipped (see prompt_errors.jsonl)", errors.len());
    Ok(())
}

// ---- verify ------------------------------------------------------------------

fn cmd_verify(a: &VerifyArgs) -> Result<(), CliError> {
    let labeler = LabelerConfig::new(a.exist_threshold, a.unresolved_threshold)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if !(0.0..=1.0).contains(&a.failure_budget) {
        return Err(CliError::Usage("--failure-budget must lie in [0, 1]".into()));
    }
    if a.backend == Backend::Fixture && a.fixture_dir.is_none() {
        return Err(CliError::Usage("--backend fixture needs --fixture-dir".into()));
    }
    let retrieval = RetrievalConfig {
        k: usize::from(a.k),
        crossref_rate: a.crossref_rate,
        s2_rate: a.s2_rate,
        cache_dir: a.cache_dir.clone(),
        mailto: a.mailto.clone(),
        s2_api_key: a.s2_api_key.clone(),
    };
    retrieval.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let claims = load_claim_set(&a.claims)?;
    let outputs = load_outputs(&a.outputs).map_err(CliError::input)?;
    let backend: Box<dyn IndexBackend> = match (a.backend, &a.fixture_dir) {
        (Backend::Fixture, Some(dir)) => Box::new(FixtureBackend::load_dir(dir).map_err(CliError::input)?),
        _ => {
            if retrieval.cache_dir.is_none() {
                eprintln!("verify: no --cache-dir; every lookup goes to the network");
            }
            Box::new(LiveBackend::with_defaults(&retrieval).map_err(CliError::input)?)
        }
    };

    let opts = VerifyOptions {
        retrieval,
        labeler,
        failure_budget: a.failure_budget,
    };
    let outcome = verify_corpus(&claims, &outputs, backend.as_ref(), &opts).map_err(CliError::input)?;

    let errors_path = a.report_dir.join("retrieval_errors.jsonl");
    write_jsonl(&errors_path, &outcome.failures)?;
    if outcome.exceeds_budget(opts.failure_budget) {
        return Err(CliError::Budget(format!(
            "{} of {} citations ({:.1}%) had retrieval errors, above the {:.1}% budget; no verdicts written, see {}",
            outcome.failures.len(),
            outcome.n_citations(),
            100.0 * outcome.failure_rate(),
            100.0 * opts.failure_budget,
            errors_path.display()
        )));
    }
    write_jsonl(&a.report_dir.join("verdicts.jsonl"), &outcome.verdicts)?;
    write_jsonl(&a.report_dir.join("runs.jsonl"), &outcome.runs)?;
    let [e, u, f] = outcome.label_counts();
    eprintln!(
        "verify: {} outputs, {} citations ({} unparsed), {} retrieval errors; Existing {e}, Unresolved {u}, Fabricated {f}",
        outputs.len(),
        outcome.n_citations(),
        outcome.parse_failures,
        outcome.failures.len()
    );
    Ok(())
}

// ---- stats -------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct MetricsRow {
    model: String,
    condition: Condition,
    n: usize,
    citations: usize,
    existing: f64,
    existing_ci_low: Option<f64>,
    existing_ci_high: Option<f64>,
    fabricated: f64,
    fabricated_ci_low: Option<f64>,
    fabricated_ci_high: Option<f64>,
    unresolved: f64,
    unresolved_ci_low: Option<f64>,
    unresolved_ci_high: Option<f64>,
    t_viol: f64,
    t_viol_ci_low: Option<f64>,
    t_viol_ci_high: Option<f64>,
    avg_cit: f64,
    doi_rate: f64,
}

pub const METRICS_HEADER: &[&str] = &[
    "model", "condition", "n", "citations", "existing", "existing_ci_low", "existing_ci_high",
    "fabricated", "fabricated_ci_low", "fabricated_ci_high", "unresolved", "unresolved_ci_low",
    "unresolved_ci_high", "t_viol", "t_viol_ci_low", "t_viol_ci_high", "avg_cit", "doi_rate",
];

impl From<&CellMetrics> for MetricsRow {
    fn from(m: &CellMetrics) -> Self {
        let lo = |f: fn(&citeverify_core::stats::CellIntervals) -> Interval| m.ci.as_ref().map(|c| f(c).low);
        let hi = |f: fn(&citeverify_core::stats::CellIntervals) -> Interval| m.ci.as_ref().map(|c| f(c).high);
        MetricsRow {
            model: m.model_id.clone(),
            condition: m.condition,
            n: m.n_claims,
            citations: m.n_citations,
            existing: m.existing_rate,
            existing_ci_low: lo(|c| c.existing),
            existing_ci_high: hi(|c| c.existing),
            fabricated: m.fabricated_rate,
            fabricated_ci_low: lo(|c| c.fabricated),
            fabricated_ci_high: hi(|c| c.fabricated),
            unresolved: m.unresolved_rate,
            unresolved_ci_low: lo(|c| c.unresolved),
            unresolved_ci_high: hi(|c| c.unresolved),
            t_viol: m.temporal_violation_rate,
            t_viol_ci_low: lo(|c| c.temporal_violation),
            t_viol_ci_high: hi(|c| c.temporal_violation),
            avg_cit: m.avg_citations,
            doi_rate: m.doi_rate,
        }
    }
}

#[derive(Debug, Serialize)]
struct FractionSummaryRow {
    model: String,
    condition: Condition,
    claims: usize,
    median: f64,
    q1: f64,
    q3: f64,
    min: f64,
    max: f64,
    mean: f64,
}

const FRACTION_HEADER: &[&str] = &["model", "condition", "claims", "median", "q1", "q3", "min", "max", "mean"];

#[derive(Debug, Clone, Serialize)]
pub struct DeltaRow {
    pub contrast: String,
    pub first: String,
    pub second: String,
    pub delta: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub excludes_zero: bool,
    pub resampling: String,
}

const DELTA_HEADER: &[&str] =
    &["contrast", "first", "second", "delta", "ci_low", "ci_high", "excludes_zero", "resampling"];

#[derive(Debug, Serialize)]
struct DoiRow {
    model: String,
    condition: Condition,
    doi_rate: f64,
    delta_vs_baseline: Option<f64>,
}

#[derive(Debug, Serialize)]
struct GroupRow {
    key: &'static str,
    group: String,
    claims: usize,
    citations: usize,
    existing: f64,
}

const GROUP_HEADER: &[&str] = &["key", "group", "claims", "citations", "existing"];

#[derive(Debug, Serialize)]
struct SensitivityRow {
    model: String,
    condition: Condition,
    existing: f64,
    fabricated: f64,
    unresolved: f64,
}

const SENSITIVITY_HEADER: &[&str] = &["model", "condition", "existing", "fabricated", "unresolved"];

struct Contrast {
    label: String,
    first: String,
    second: String,
    a: Vec<ClaimCounts>,
    b: Vec<ClaimCounts>,
}

fn cell_name(model: &str, condition: Condition) -> String {
    format!("{model}/{condition}")
}

fn parse_cell(spec: &str) -> Result<CellKey, CliError> {
    let (model, cond) = spec
        .rsplit_once('/')
        .ok_or_else(|| CliError::Usage(format!("cell '{spec}' is not MODEL/CONDITION")))?;
    let condition = cond.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
    Ok(CellKey {
        model_id: model.to_string(),
        condition,
    })
}

fn build_contrasts(
    a: &StatsArgs,
    grouped: &BTreeMap<CellKey, Vec<ClaimCounts>>,
) -> Result<Vec<Contrast>, CliError> {
    let models: BTreeSet<&str> = grouped.keys().map(|k| k.model_id.as_str()).collect();
    let get = |model: &str, condition: Condition| {
        grouped.get(&CellKey {
            model_id: model.to_string(),
            condition,
        })
    };
    let mut out = Vec::new();

    if !a.no_baseline_contrasts {
        for &model in &models {
            let Some(base) = get(model, Condition::Baseline) else { continue };
            for cond in Condition::ALL.into_iter().filter(|c| *c != Condition::Baseline) {
                if let Some(cell) = get(model, cond) {
                    out.push(Contrast {
                        label: format!("{cond} - Baseline ({model})"),
                        first: cell_name(model, cond),
                        second: cell_name(model, Condition::Baseline),
                        a: cell.clone(),
                        b: base.clone(),
                    });
                }
            }
        }
    }

    match (a.proprietary.is_empty(), a.open_weight.is_empty()) {
        (true, true) => {}
        (false, false) => {
            for m in a.proprietary.iter().chain(&a.open_weight) {
                if !models.contains(m.as_str()) {
                    return Err(CliError::Input(format!("model '{m}' has no verdicts")));
                }
            }
            for cond in Condition::ALL {
                let pool = |group: &[String]| -> Option<Vec<ClaimCounts>> {
                    let cells: Option<Vec<&[ClaimCounts]>> =
                        group.iter().map(|m| get(m, cond).map(Vec::as_slice)).collect();
                    cells.map(pool_clusters)
                };
                match (pool(&a.proprietary), pool(&a.open_weight)) {
                    (Some(p), Some(o)) => out.push(Contrast {
                        label: format!("Proprietary vs open-weight ({cond})"),
                        first: format!("{}/{cond}", a.proprietary.join("+")),
                        second: format!("{}/{cond}", a.open_weight.join("+")),
                        a: p,
                        b: o,
                    }),
                    _ => eprintln!("stats: skipping group contrast for {cond}: a model lacks that cell"),
                }
            }
        }
        _ => return Err(CliError::Usage("--proprietary and --open-weight go together".into())),
    }

    for spec in &a.contrast {
        let (first, second) = spec
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("contrast '{spec}' is not CELL:CELL")))?;
        let (ka, kb) = (parse_cell(first)?, parse_cell(second)?);
        let fetch = |k: &CellKey| {
            grouped
                .get(k)
                .cloned()
                .ok_or_else(|| CliError::Input(format!("no verdicts for cell {}", cell_name(&k.model_id, k.condition))))
        };
        out.push(Contrast {
            label: format!("{} vs {}", cell_name(&ka.model_id, ka.condition), cell_name(&kb.model_id, kb.condition)),
            first: cell_name(&ka.model_id, ka.condition),
            second: cell_name(&kb.model_id, kb.condition),
            a: fetch(&ka)?,
            b: fetch(&kb)?,
        });
    }
    Ok(out)
}

fn metrics_for_cells(
    grouped: &BTreeMap<CellKey, Vec<ClaimCounts>>,
    boot: Option<&BootstrapConfig>,
) -> Result<Vec<CellMetrics>, CliError> {
    let mut metrics = Vec::new();
    for (key, clusters) in grouped {
        let (model, cond) = (key.model_id.as_str(), key.condition);
        let m = match boot.map(|b| cell_metrics_with_ci(model, cond, clusters, b)) {
            Some(Ok(m)) => m,
            Some(Err(StatsError::TooFewClaims(n))) => {
                eprintln!("stats: {}: {n} claim(s) with citations, no bootstrap interval", cell_name(model, cond));
                cell_metrics(model, cond, clusters).map_err(CliError::input)?
            }
            Some(Err(StatsError::EmptyCell)) => {
                eprintln!("stats: {}: no citations, cell skipped", cell_name(model, cond));
                continue;
            }
            Some(Err(e)) => return Err(CliError::Input(format!("{}: {e}", cell_name(model, cond)))),
            None => match cell_metrics(model, cond, clusters) {
                Ok(m) => m,
                Err(StatsError::EmptyCell) => continue,
                Err(e) => return Err(CliError::input(e)),
            },
        };
        metrics.push(m);
    }
    Ok(metrics)
}

fn cmd_stats(a: &StatsArgs) -> Result<(), CliError> {
    let boot = BootstrapConfig::new(a.bootstrap.bootstrap_n, a.bootstrap.seed)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let verdicts = load_verdict_rows(&a.verdicts)?;
    let runs = load_run_rows(a.runs.as_ref(), &a.verdicts)?;
    let claims = a.claims.as_deref().map(load_claim_set).transpose()?;
    let audit = a
        .audit
        .as_deref()
        .map(|p| parse_audit(&read_to_string(p)?).map_err(CliError::input))
        .transpose()?;
    let grouped = cells(&verdicts, &runs).map_err(CliError::input)?;
    let dir = &a.report_dir;

    let metrics = metrics_for_cells(&grouped, Some(&boot))?;
    let rows: Vec<MetricsRow> = metrics.iter().map(MetricsRow::from).collect();
    write_csv(&dir.join("metrics.csv"), &rows, METRICS_HEADER)?;
    write_json(&dir.join("metrics.json"), &metrics)?;

    let fractions: Vec<FractionSummaryRow> = grouped
        .iter()
        .filter_map(|(k, clusters)| {
            let f: Vec<f64> = claim_fractions(clusters).iter().map(|c| c.f).collect();
            let b = box_stats(&f)?;
            Some(FractionSummaryRow {
                model: k.model_id.clone(),
                condition: k.condition,
                claims: b.n,
                median: b.median,
                q1: b.q1,
                q3: b.q3,
                min: b.min,
                max: b.max,
                mean: b.mean,
            })
        })
        .collect();
    write_csv(&dir.join("claim_fractions.csv"), &fractions, FRACTION_HEADER)?;

    let mut deltas = Vec::new();
    for c in build_contrasts(a, &grouped)? {
        let d = rate_difference_ci(&c.a, &c.b, Statistic::EXISTING, &boot, a.resampling)
            .map_err(|e| CliError::Input(format!("contrast {}: {e}", c.label)))?;
        deltas.push(DeltaRow {
            contrast: c.label,
            first: c.first,
            second: c.second,
            delta: d.delta,
            ci_low: d.ci.low,
            ci_high: d.ci.high,
            excludes_zero: d.excludes_zero,
            resampling: a.resampling.to_string(),
        });
    }
    write_csv(&dir.join("deltas.csv"), &deltas, DELTA_HEADER)?;
    write_json(&dir.join("deltas.json"), &deltas)?;

    let baseline_doi: BTreeMap<&str, f64> = metrics
        .iter()
        .filter(|m| m.condition == Condition::Baseline)
        .map(|m| (m.model_id.as_str(), m.doi_rate))
        .collect();
    let doi: Vec<DoiRow> = metrics
        .iter()
        .map(|m| DoiRow {
            model: m.model_id.clone(),
            condition: m.condition,
            doi_rate: m.doi_rate,
            delta_vs_baseline: baseline_doi.get(m.model_id.as_str()).map(|b| m.doi_rate - b),
        })
        .collect();
    write_csv(&dir.join("doi_completeness.csv"), &doi, &["model", "condition", "doi_rate", "delta_vs_baseline"])?;

    let domains = claims.as_ref().map(domain_map);
    let mut groups = Vec::new();
    let keyed: &[(GroupKey, &'static str)] = if domains.is_some() {
        &[(GroupKey::Model, "model"), (GroupKey::Condition, "condition"), (GroupKey::Domain, "domain")]
    } else {
        &[(GroupKey::Model, "model"), (GroupKey::Condition, "condition")]
    };
    for &(key, name) in keyed {
        for g in group_rates(&verdicts, key, domains.as_ref()).map_err(CliError::input)? {
            groups.push(GroupRow {
                key: name,
                group: g.group,
                claims: g.n_claims,
                citations: g.n_citations,
                existing: g.existing_rate,
            });
        }
    }
    write_csv(&dir.join("groups.csv"), &groups, GROUP_HEADER)?;

    if let Some(audit) = &audit {
        let matrix = confusion(audit, &verdicts).map_err(CliError::input)?;
        let rates = AuditRates::from_confusion(&matrix).map_err(CliError::input)?;
        let adjusted: Vec<CellMetrics> = metrics.iter().map(|m| sensitivity_reassign(m, &rates)).collect();
        let rows: Vec<SensitivityRow> = adjusted
            .iter()
            .map(|m| SensitivityRow {
                model: m.model_id.clone(),
                condition: m.condition,
                existing: m.existing_rate,
                fabricated: m.fabricated_rate,
                unresolved: m.unresolved_rate,
            })
            .collect();
        write_csv(&dir.join("sensitivity.csv"), &rows, SENSITIVITY_HEADER)?;
        #[derive(Serialize)]
        struct Sensitivity<'a> {
            audit_rates: AuditRates,
            cells: &'a [CellMetrics],
        }
        write_json(&dir.join("sensitivity.json"), &Sensitivity { audit_rates: rates, cells: &adjusted })?;
    }

    eprintln!(
        "stats: {} cells, {} contrasts, {} resamples (seed {}, {})",
        metrics.len(),
        deltas.len(),
        boot.resamples,
        boot.seed,
        a.resampling
    );
    Ok(())
}

// ---- validate ----------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct ValidationReport {
    pub audited: u64,
    pub agreement: f64,
    pub kappa: f64,
    /// Pipeline label rows, human label columns.
    pub matrix: [[u64; 3]; 3],
    pub precision: BTreeMap<&'static str, Option<f64>>,
    pub recall: BTreeMap<&'static str, Option<f64>>,
    pub unresolved_audit_rates: Option<AuditRates>,
}

pub fn validation_report(m: &ConfusionMatrix3) -> Result<ValidationReport, CliError> {
    let Agreement { agreement, kappa } = cohens_kappa(m).map_err(CliError::input)?;
    Ok(ValidationReport {
        audited: m.total(),
        agreement,
        kappa,
        matrix: m.counts,
        precision: Label::ALL.iter().map(|&l| (l.name(), m.precision(l))).collect(),
        recall: Label::ALL.iter().map(|&l| (l.name(), m.recall(l))).collect(),
        unresolved_audit_rates: AuditRates::from_confusion(m).ok(),
    })
}

fn cmd_validate(a: &ValidateArgs) -> Result<(), CliError> {
    let verdicts = load_verdict_rows(&a.verdicts)?;
    let audit = parse_audit(&read_to_string(&a.audit)?).map_err(CliError::input)?;
    let matrix = confusion(&audit, &verdicts).map_err(CliError::input)?;
    let report = validation_report(&matrix)?;

    println!("audited citations: {}", report.audited);
    println!("agreement: {:.4}", report.agreement);
    println!("cohen's kappa: {:.4}", report.kappa);
    for l in Label::ALL {
        let row = matrix.row_sum(l);
        match matrix.precision(l) {
            Some(p) => println!("precision {l}: {p:.4} ({}/{row})", matrix.counts[l.index()][l.index()]),
            None => println!("precision {l}: n/a (0 audited)"),
        }
    }
    if let Some(dir) = &a.report_dir {
        write_json(&dir.join("validation.json"), &report)?;
    }
    Ok(())
}

// ---- plot-data ---------------------------------------------------------------

#[derive(Debug, Serialize)]
struct ProportionRow {
    model: String,
    condition: Condition,
    existing: f64,
    unresolved: f64,
    fabricated: f64,
}

#[derive(Debug, Serialize)]
struct BoxRow {
    model: String,
    condition: Condition,
    n: usize,
    min: f64,
    whisker_low: f64,
    q1: f64,
    median: f64,
    q3: f64,
    whisker_high: f64,
    max: f64,
}

#[derive(Debug, Serialize)]
struct FractionRow {
    model: String,
    condition: Condition,
    claim_id: String,
    f: f64,
}

fn cmd_plot_data(a: &PlotArgs) -> Result<(), CliError> {
    let verdicts = load_verdict_rows(&a.verdicts)?;
    let runs = load_run_rows(a.runs.as_ref(), &a.verdicts)?;
    let claims = a.claims.as_deref().map(load_claim_set).transpose()?;
    let grouped = cells(&verdicts, &runs).map_err(CliError::input)?;
    let dir = &a.report_dir;

    let metrics = metrics_for_cells(&grouped, None)?;
    let proportions: Vec<ProportionRow> = metrics
        .iter()
        .map(|m| ProportionRow {
            model: m.model_id.clone(),
            condition: m.condition,
            existing: m.existing_rate,
            unresolved: m.unresolved_rate,
            fabricated: m.fabricated_rate,
        })
        .collect();
    write_csv(
        &dir.join("label_proportions.csv"),
        &proportions,
        &["model", "condition", "existing", "unresolved", "fabricated"],
    )?;

    let mut boxes = Vec::new();
    let mut raw = Vec::new();
    for (k, clusters) in &grouped {
        let fr = claim_fractions(clusters);
        let values: Vec<f64> = fr.iter().map(|c| c.f).collect();
        raw.extend(fr.into_iter().map(|c| FractionRow {
            model: k.model_id.clone(),
            condition: k.condition,
            claim_id: c.claim_id,
            f: c.f,
        }));
        if let Some(b) = box_stats(&values) {
            boxes.push(BoxRow {
                model: k.model_id.clone(),
                condition: k.condition,
                n: b.n,
                min: b.min,
                whisker_low: b.whisker_low,
                q1: b.q1,
                median: b.median,
                q3: b.q3,
                whisker_high: b.whisker_high,
                max: b.max,
            });
        }
    }
    write_csv(
        &dir.join("claim_fraction_box.csv"),
        &boxes,
        &["model", "condition", "n", "min", "whisker_low", "q1", "median", "q3", "whisker_high", "max"],
    )?;
    write_csv(&dir.join("claim_fractions_by_claim.csv"), &raw, &["model", "condition", "claim_id", "f"])?;

    if let Some(claims) = &claims {
        let domains = domain_map(claims);
        let rows: Vec<GroupRow> = group_rates(&verdicts, GroupKey::Domain, Some(&domains))
            .map_err(CliError::input)?
            .into_iter()
            .map(|g| GroupRow {
                key: "domain",
                group: g.group,
                claims: g.n_claims,
                citations: g.n_citations,
                existing: g.existing_rate,
            })
            .collect();
        write_csv(&dir.join("domain_rates.csv"), &rows, GROUP_HEADER)?;
    }
    eprintln!("plot-data: {} cells", metrics.len());
    Ok(())
}
