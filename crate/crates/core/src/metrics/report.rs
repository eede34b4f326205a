use super::alpha::cronbach_alpha;
use super::binary::{binary_metrics, confusion_matrix, ConfusionMatrix};
use super::bootstrap::{bootstrap_kappa_seeded, DEFAULT_RESAMPLES};
use super::labels::{bin_to_class3, Class3, SorLabels, SwarmOutcomes, SwarmResult};
use super::vote::{MostConfidentMode, VoteSet};
use super::MetricsError;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Individual,
    Majority,
    MostConfident,
    Swarm,
}

/// Agreement of one vote sequence with one standard of reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub label: String,
    pub kind: RowKind,
    pub reference: String,
    pub n_exams: usize,
    pub kappa_point: f64,
    pub kappa_mean: f64,
    pub kappa_std: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub resamples: usize,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub youden: Option<f64>,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBlock {
    pub reference: String,
    /// Individuals, then majority and most-confident votes when the cohort
    /// has more than one rater.
    pub rows: Vec<AgreementReport>,
    pub swarm: Option<AgreementReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub cohort_id: String,
    pub n_exams: usize,
    /// Exams dropped from every comparison because the swarm did not agree.
    pub excluded_exams: Vec<String>,
    pub cronbach_alpha: Option<f64>,
    pub references: Vec<ReferenceBlock>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    pub seed: u64,
    pub resamples: usize,
    pub most_confident: MostConfidentMode,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            seed: 0,
            resamples: DEFAULT_RESAMPLES,
            most_confident: MostConfidentMode::PerExam,
        }
    }
}

/// Score a sequence of votes against reference classes.
pub fn agreement(
    label: &str,
    kind: RowKind,
    reference: &str,
    pred: &[Class3],
    truth: &[Class3],
    opts: &ReportOptions,
) -> Result<AgreementReport, MetricsError> {
    let boot = bootstrap_kappa_seeded(truth, pred, opts.resamples, opts.seed)?;
    let bin = binary_metrics(pred, truth)?;
    Ok(AgreementReport {
        label: label.to_string(),
        kind,
        reference: reference.to_string(),
        n_exams: pred.len(),
        kappa_point: boot.kappa_point,
        kappa_mean: boot.kappa_mean,
        kappa_std: boot.kappa_std,
        ci_low: boot.ci_low,
        ci_high: boot.ci_high,
        resamples: boot.resamples,
        sensitivity: bin.sensitivity,
        specificity: bin.specificity,
        youden: bin.youden,
        confusion: confusion_matrix(pred, truth)?,
    })
}

fn check_same_exams(
    what: &str,
    exams: &[String],
    other: impl Iterator<Item = String>,
) -> Result<(), MetricsError> {
    let ours: HashSet<&str> = exams.iter().map(String::as_str).collect();
    let theirs: Vec<String> = other.collect();
    let theirs_set: HashSet<&str> = theirs.iter().map(String::as_str).collect();
    if let Some(missing) = exams.iter().find(|e| !theirs_set.contains(e.as_str())) {
        return Err(MetricsError::Misaligned(format!(
            "{what} has no entry for exam {missing}"
        )));
    }
    if let Some(extra) = theirs.iter().find(|e| !ours.contains(e.as_str())) {
        return Err(MetricsError::Misaligned(format!(
            "{what} lists exam {extra} unknown to the cohort"
        )));
    }
    Ok(())
}

/// Compare every rater, the cohort's majority and most-confident votes and
/// (when given) the swarm decisions with each standard of reference.
///
/// Exams on which the swarm reached no consensus are removed from every row,
/// so all rows of a cohort cover the same exams.
pub fn cohort_report(
    votes: &VoteSet,
    swarm: Option<&SwarmOutcomes>,
    sors: &[SorLabels],
    opts: &ReportOptions,
) -> Result<CohortReport, MetricsError> {
    for sor in sors {
        check_same_exams(
            &format!("reference {}", sor.name),
            &votes.exams,
            sor.records.iter().map(|(e, _)| e.clone()),
        )?;
    }
    let mut excluded = Vec::new();
    if let Some(s) = swarm {
        check_same_exams(
            "swarm outcomes",
            &votes.exams,
            s.records.iter().map(|(e, _)| e.clone()),
        )?;
        for exam in &votes.exams {
            if s.get(exam) == Some(SwarmResult::NoConsensus) {
                excluded.push(exam.clone());
            }
        }
    }
    let kept = votes.retain_exams(|e| !excluded.iter().any(|x| x == e));
    let mut notes = Vec::new();

    let mut candidates: Vec<(String, RowKind, Vec<Class3>)> = votes
        .rater_ids
        .iter()
        .zip(&kept.votes)
        .map(|(id, row)| (id.clone(), RowKind::Individual, row.clone()))
        .collect();
    if kept.rater_count() >= 2 {
        candidates.push(("majority".into(), RowKind::Majority, kept.majority()?));
        match kept.most_confident(opts.most_confident) {
            Ok(v) => candidates.push(("most_confident".into(), RowKind::MostConfident, v)),
            Err(MetricsError::MissingConfidence { rater, exam }) => notes.push(format!(
                "most-confident vote skipped: rater {} has no confidence for exam {exam}",
                votes.rater_ids[rater]
            )),
            Err(e) => return Err(e),
        }
    }
    let swarm_votes: Option<Vec<Class3>> = swarm.map(|s| {
        kept.exams
            .iter()
            .map(|e| match s.get(e) {
                Some(SwarmResult::Consensus(c)) => bin_to_class3(c),
                _ => unreachable!("no-consensus exams were excluded"),
            })
            .collect()
    });

    let mut references = Vec::with_capacity(sors.len());
    for sor in sors {
        let truth: Vec<Class3> = kept
            .exams
            .iter()
            .map(|e| sor.get(e).expect("aligned"))
            .collect();
        let rows = candidates
            .iter()
            .map(|(label, kind, pred)| agreement(label, *kind, &sor.name, pred, &truth, opts))
            .collect::<Result<Vec<_>, _>>()?;
        let swarm_row = swarm_votes
            .as_ref()
            .map(|pred| agreement("swarm", RowKind::Swarm, &sor.name, pred, &truth, opts))
            .transpose()?;
        references.push(ReferenceBlock {
            reference: sor.name.clone(),
            rows,
            swarm: swarm_row,
        });
    }

    let cronbach = if kept.rater_count() >= 2 {
        let scores: Option<Vec<Vec<f64>>> = kept
            .confidences
            .iter()
            .map(|row| row.iter().map(|c| c.map(f64::from)).collect())
            .collect();
        scores.and_then(|s| cronbach_alpha(&s).ok())
    } else {
        None
    };

    Ok(CohortReport {
        cohort_id: votes.cohort_id.clone(),
        n_exams: kept.exams.len(),
        excluded_exams: excluded,
        cronbach_alpha: cronbach,
        references,
        notes,
    })
}

fn pct(x: Option<f64>) -> String {
    x.map(|v| format!("{:.1}%", v * 100.0))
        .unwrap_or_else(|| "N/A".into())
}

/// Fixed-width text rendering: accuracy table then kappa table, per reference.
pub fn render_tables(report: &CohortReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "cohort {} ({} exams", report.cohort_id, report.n_exams);
    if !report.excluded_exams.is_empty() {
        let _ = write!(out, ", excluded: {}", report.excluded_exams.join(" "));
    }
    out.push_str(")\n");
    if let Some(a) = report.cronbach_alpha {
        let _ = writeln!(out, "Cronbach's alpha: {a:.2}");
    }
    for block in &report.references {
        let rows: Vec<&AgreementReport> = block.rows.iter().chain(block.swarm.iter()).collect();
        let _ = writeln!(out, "\nreference: {}", block.reference);
        let _ = writeln!(
            out,
            "{:<20} {:>11} {:>11} {:>7}",
            "", "Sensitivity", "Specificity", "Youden"
        );
        for r in &rows {
            let youden = r
                .youden
                .map(|y| format!("{y:.2}"))
                .unwrap_or_else(|| "N/A".into());
            let _ = writeln!(
                out,
                "{:<20} {:>11} {:>11} {:>7}",
                r.label,
                pct(r.sensitivity),
                pct(r.specificity),
                youden
            );
        }
        let _ = writeln!(
            out,
            "{:<20} {:>16} {:>16}",
            "", "Mean (std) Kappa", "95% CI"
        );
        for r in &rows {
            let _ = writeln!(
                out,
                "{:<20} {:>16} {:>16}",
                r.label,
                format!("{:.2} ({:.2})", r.kappa_mean, r.kappa_std),
                format!("[{:.2} - {:.2}]", r.ci_low, r.ci_high)
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::labels::{Choice6, LabelRecord, RaterLabels};

    fn rater(id: &str, choices: &[u8]) -> RaterLabels {
        RaterLabels::new(
            id,
            choices
                .iter()
                .enumerate()
                .map(|(i, &c)| LabelRecord {
                    exam_id: format!("E{i:02}"),
                    choice: Choice6::try_from(c).unwrap(),
                    confidence: Some(1 + (i as u8 * 3 + c) % 10),
                })
                .collect(),
        )
        .unwrap()
    }

    fn sor(name: &str, classes: &[u8]) -> SorLabels {
        SorLabels {
            name: name.into(),
            records: classes
                .iter()
                .enumerate()
                .map(|(i, &c)| (format!("E{i:02}"), Class3::try_from(c).unwrap()))
                .collect(),
        }
    }

    #[test]
    fn three_raters_and_swarm() {
        let raters = [
            rater("r1", &[0, 1, 5, 0, 2, 5, 0, 3]),
            rater("r2", &[0, 2, 5, 1, 2, 0, 0, 3]),
            rater("r3", &[1, 1, 4, 0, 5, 5, 0, 0]),
        ];
        let vs = VoteSet::from_raters("att", &raters).unwrap();
        let swarm = SwarmOutcomes {
            records: (0..8)
                .map(|i| {
                    let r = if i == 3 {
                        SwarmResult::NoConsensus
                    } else {
                        SwarmResult::Consensus(
                            Choice6::try_from([0u8, 1, 5, 0, 2, 5, 0, 3][i]).unwrap(),
                        )
                    };
                    (format!("E{i:02}"), r)
                })
                .collect(),
        };
        let clinical = sor("clinical", &[0, 1, 2, 0, 1, 2, 0, 1]);
        let rep = cohort_report(&vs, Some(&swarm), &[clinical], &ReportOptions::default()).unwrap();
        assert_eq!(rep.excluded_exams, vec!["E03"]);
        assert_eq!(rep.n_exams, 7);
        let block = &rep.references[0];
        assert_eq!(block.rows.len(), 5);
        let kinds: Vec<RowKind> = block.rows.iter().map(|r| r.kind).collect();
        assert_eq!(
            kinds,
            [
                RowKind::Individual,
                RowKind::Individual,
                RowKind::Individual,
                RowKind::Majority,
                RowKind::MostConfident
            ]
        );
        let s = block.swarm.as_ref().unwrap();
        assert_eq!(s.kappa_point, 1.0);
        for r in block.rows.iter().chain(block.swarm.iter()) {
            assert_eq!(r.n_exams, 7);
            assert_eq!(r.confusion.total(), 7);
            assert_eq!(r.resamples, 100);
        }
        let text = render_tables(&rep);
        assert!(text.contains("Youden"));
        assert!(text.contains("swarm"));
    }

    #[test]
    fn single_rater_cohort_has_individual_row_only() {
        let ai = rater("ai", &[0, 1, 5, 0, 2]);
        let vs = VoteSet::from_raters("ai", &[ai]).unwrap();
        let rep = cohort_report(
            &vs,
            None,
            &[sor("clinical", &[0, 1, 2, 0, 0])],
            &ReportOptions::default(),
        )
        .unwrap();
        assert_eq!(rep.references[0].rows.len(), 1);
        assert!(rep.references[0].swarm.is_none());
        assert_eq!(rep.cronbach_alpha, None);
    }

    #[test]
    fn misaligned_reference() {
        let vs =
            VoteSet::from_raters("c", &[rater("a", &[0, 1, 2]), rater("b", &[0, 1, 1])]).unwrap();
        let err = cohort_report(
            &vs,
            None,
            &[sor("clinical", &[0, 1])],
            &ReportOptions::default(),
        );
        assert!(matches!(err, Err(MetricsError::Misaligned(_))));
    }
}
