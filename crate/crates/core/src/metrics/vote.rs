use super::labels::{bin_to_class3, Class3, RaterLabels};
use super::MetricsError;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Aligned Class3 responses of a cohort: one row per rater, one column per exam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteSet {
    pub cohort_id: String,
    pub rater_ids: Vec<String>,
    pub exams: Vec<String>,
    pub votes: Vec<Vec<Class3>>,
    pub confidences: Vec<Vec<Option<u8>>>,
}

impl VoteSet {
    /// Align rater files on the exam order of the first rater. Every rater
    /// must label exactly the same exams.
    pub fn from_raters(
        cohort_id: impl Into<String>,
        raters: &[RaterLabels],
    ) -> Result<Self, MetricsError> {
        let first = raters.first().ok_or(MetricsError::Empty)?;
        let exams: Vec<String> = first.records.iter().map(|r| r.exam_id.clone()).collect();
        Self::aligned(cohort_id, raters, &exams)
    }

    /// Align rater files on an explicit exam order.
    pub fn aligned(
        cohort_id: impl Into<String>,
        raters: &[RaterLabels],
        exams: &[String],
    ) -> Result<Self, MetricsError> {
        if raters.is_empty() {
            return Err(MetricsError::Empty);
        }
        let wanted: HashSet<&str> = exams.iter().map(String::as_str).collect();
        let mut votes = Vec::with_capacity(raters.len());
        let mut confidences = Vec::with_capacity(raters.len());
        for rater in raters {
            if let Some(extra) = rater
                .records
                .iter()
                .find(|r| !wanted.contains(r.exam_id.as_str()))
            {
                return Err(MetricsError::Misaligned(format!(
                    "rater {} labels exam {} which is not in the cohort",
                    rater.rater_id, extra.exam_id
                )));
            }
            let mut row = Vec::with_capacity(exams.len());
            let mut conf = Vec::with_capacity(exams.len());
            for exam in exams {
                let rec = rater.get(exam).ok_or_else(|| {
                    MetricsError::Misaligned(format!(
                        "rater {} has no label for exam {exam}",
                        rater.rater_id
                    ))
                })?;
                row.push(bin_to_class3(rec.choice));
                conf.push(rec.confidence);
            }
            votes.push(row);
            confidences.push(conf);
        }
        Ok(VoteSet {
            cohort_id: cohort_id.into(),
            rater_ids: raters.iter().map(|r| r.rater_id.clone()).collect(),
            exams: exams.to_vec(),
            votes,
            confidences,
        })
    }

    pub fn rater_count(&self) -> usize {
        self.votes.len()
    }

    /// Votes on exam `j`, in roster order.
    pub fn column(&self, j: usize) -> Vec<Class3> {
        self.votes.iter().map(|row| row[j]).collect()
    }

    pub fn confidence_column(&self, j: usize) -> Vec<Option<u8>> {
        self.confidences.iter().map(|row| row[j]).collect()
    }

    /// Keep only the exams for which `keep` returns true.
    pub fn retain_exams(&self, keep: impl Fn(&str) -> bool) -> VoteSet {
        let idx: Vec<usize> = (0..self.exams.len())
            .filter(|&j| keep(&self.exams[j]))
            .collect();
        let pick = |row: &Vec<Class3>| idx.iter().map(|&j| row[j]).collect();
        VoteSet {
            cohort_id: self.cohort_id.clone(),
            rater_ids: self.rater_ids.clone(),
            exams: idx.iter().map(|&j| self.exams[j].clone()).collect(),
            votes: self.votes.iter().map(pick).collect(),
            confidences: self
                .confidences
                .iter()
                .map(|row| idx.iter().map(|&j| row[j]).collect())
                .collect(),
        }
    }

    pub fn majority(&self) -> Result<Vec<Class3>, MetricsError> {
        (0..self.exams.len())
            .map(|j| majority_vote(&self.column(j), Some(&self.confidence_column(j))))
            .collect()
    }

    pub fn most_confident(&self, mode: MostConfidentMode) -> Result<Vec<Class3>, MetricsError> {
        match mode {
            MostConfidentMode::PerExam => (0..self.exams.len())
                .map(|j| most_confident_vote(&self.column(j), &self.confidence_column(j)))
                .collect(),
            MostConfidentMode::CohortOverall => {
                let mut best: Option<(usize, f64)> = None;
                for (i, row) in self.confidences.iter().enumerate() {
                    let mut sum = 0.0;
                    for (j, c) in row.iter().enumerate() {
                        let c = c.ok_or_else(|| MetricsError::MissingConfidence {
                            rater: i,
                            exam: self.exams[j].clone(),
                        })?;
                        sum += c as f64;
                    }
                    let mean = sum / row.len().max(1) as f64;
                    if best.is_none_or(|(_, m)| mean > m) {
                        best = Some((i, mean));
                    }
                }
                let (i, _) = best.ok_or(MetricsError::Empty)?;
                Ok(self.votes[i].clone())
            }
        }
    }
}

/// How the "most confident voter" is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MostConfidentMode {
    /// The rater most confident on each exam.
    #[default]
    PerExam,
    /// The rater with the highest mean confidence over the cohort, for every exam.
    CohortOverall,
}

/// Plurality class for one exam.
///
/// Ties between top classes go to the class picked by the most confident
/// rater among those voting for a tied class; if confidences are missing or
/// the top confidence is shared across tied classes, the most severe class wins.
pub fn majority_vote(
    votes: &[Class3],
    confidences: Option<&[Option<u8>]>,
) -> Result<Class3, MetricsError> {
    if votes.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(c) = confidences {
        if c.len() != votes.len() {
            return Err(MetricsError::LengthMismatch(votes.len(), c.len()));
        }
    }
    let mut counts = [0usize; 3];
    for v in votes {
        counts[v.index()] += 1;
    }
    let top = *counts.iter().max().expect("three classes");
    let tied: Vec<Class3> = Class3::ALL
        .into_iter()
        .filter(|c| counts[c.index()] == top)
        .collect();
    if tied.len() == 1 {
        return Ok(tied[0]);
    }
    let most_severe = |set: &[Class3]| *set.iter().max().expect("non-empty");
    let Some(conf) = confidences else {
        return Ok(most_severe(&tied));
    };
    let voters: Vec<(Class3, Option<u8>)> = votes
        .iter()
        .zip(conf)
        .filter(|(v, _)| tied.contains(v))
        .map(|(v, c)| (*v, *c))
        .collect();
    if voters.iter().any(|(_, c)| c.is_none()) {
        return Ok(most_severe(&tied));
    }
    let best = voters
        .iter()
        .filter_map(|(_, c)| *c)
        .max()
        .expect("non-empty");
    let mut leaders: Vec<Class3> = voters
        .iter()
        .filter(|(_, c)| *c == Some(best))
        .map(|(v, _)| *v)
        .collect();
    leaders.sort();
    leaders.dedup();
    Ok(most_severe(&leaders))
}

/// The vote of the rater with the highest confidence on this exam; ties go
/// to the earliest rater in roster order.
pub fn most_confident_vote(
    votes: &[Class3],
    confidences: &[Option<u8>],
) -> Result<Class3, MetricsError> {
    if votes.is_empty() {
        return Err(MetricsError::Empty);
    }
    if votes.len() != confidences.len() {
        return Err(MetricsError::LengthMismatch(votes.len(), confidences.len()));
    }
    let mut best: Option<(usize, u8)> = None;
    for (i, c) in confidences.iter().enumerate() {
        let c = c.ok_or(MetricsError::MissingConfidence {
            rater: i,
            exam: String::new(),
        })?;
        if best.is_none_or(|(_, b)| c > b) {
            best = Some((i, c));
        }
    }
    Ok(votes[best.expect("non-empty").0])
}
