use super::MetricsError;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

/// The six-way questionnaire answer, with its stable file code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Choice6 {
    None = 0,
    AnteriorMedial = 1,
    PosteriorMedial = 2,
    AnteriorLateral = 3,
    PosteriorLateral = 4,
    MoreThanOne = 5,
}

impl Choice6 {
    pub const ALL: [Choice6; 6] = [
        Choice6::None,
        Choice6::AnteriorMedial,
        Choice6::PosteriorMedial,
        Choice6::AnteriorLateral,
        Choice6::PosteriorLateral,
        Choice6::MoreThanOne,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn label(self) -> &'static str {
        match self {
            Choice6::None => "None",
            Choice6::AnteriorMedial => "Anterior horn, medial meniscus",
            Choice6::PosteriorMedial => "Posterior horn, medial meniscus",
            Choice6::AnteriorLateral => "Anterior horn, lateral meniscus",
            Choice6::PosteriorLateral => "Posterior horn, lateral meniscus",
            Choice6::MoreThanOne => "More than one region",
        }
    }
}

impl TryFrom<u8> for Choice6 {
    type Error = MetricsError;
    fn try_from(v: u8) -> Result<Self, MetricsError> {
        Choice6::ALL
            .get(v as usize)
            .copied()
            .ok_or_else(|| MetricsError::InvalidValue(format!("choice code {v} outside 0-5")))
    }
}

impl From<Choice6> for u8 {
    fn from(c: Choice6) -> u8 {
        c.code()
    }
}

/// Severity class used for every agreement comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Class3 {
    NoLesion = 0,
    OneCompartment = 1,
    MultiCompartment = 2,
}

impl Class3 {
    pub const ALL: [Class3; 3] = [
        Class3::NoLesion,
        Class3::OneCompartment,
        Class3::MultiCompartment,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_positive(self) -> bool {
        self != Class3::NoLesion
    }
}

impl TryFrom<u8> for Class3 {
    type Error = MetricsError;
    fn try_from(v: u8) -> Result<Self, MetricsError> {
        Class3::ALL
            .get(v as usize)
            .copied()
            .ok_or_else(|| MetricsError::InvalidValue(format!("class code {v} outside 0-2")))
    }
}

impl From<Class3> for u8 {
    fn from(c: Class3) -> u8 {
        c as u8
    }
}

pub fn bin_to_class3(choice: Choice6) -> Class3 {
    match choice {
        Choice6::None => Class3::NoLesion,
        Choice6::AnteriorMedial
        | Choice6::PosteriorMedial
        | Choice6::AnteriorLateral
        | Choice6::PosteriorLateral => Class3::OneCompartment,
        Choice6::MoreThanOne => Class3::MultiCompartment,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub exam_id: String,
    pub choice: Choice6,
    pub confidence: Option<u8>,
}

/// One rater's answers across a set of exams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaterLabels {
    pub rater_id: String,
    pub records: Vec<LabelRecord>,
}

impl RaterLabels {
    pub fn new(
        rater_id: impl Into<String>,
        records: Vec<LabelRecord>,
    ) -> Result<Self, MetricsError> {
        let rater_id = rater_id.into();
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.exam_id.as_str()) {
                return Err(MetricsError::InvalidValue(format!(
                    "rater {rater_id}: exam {} listed twice",
                    r.exam_id
                )));
            }
            if let Some(c) = r.confidence {
                check_confidence(c)?;
            }
        }
        Ok(RaterLabels { rater_id, records })
    }

    pub fn get(&self, exam_id: &str) -> Option<&LabelRecord> {
        self.records.iter().find(|r| r.exam_id == exam_id)
    }

    /// Parse `exam_id,choice,confidence`; `source` is used in error messages.
    pub fn from_csv<R: Read>(
        rater_id: &str,
        source: &str,
        reader: R,
    ) -> Result<Self, MetricsError> {
        let rows = read_rows(source, reader, &["exam_id", "choice", "confidence"])?;
        let mut records = Vec::with_capacity(rows.len());
        let mut seen = HashSet::new();
        for (row, fields) in rows {
            let err = |msg: String| MetricsError::Parse {
                file: source.to_string(),
                row,
                message: msg,
            };
            let exam_id = fields[0].clone();
            if exam_id.is_empty() {
                return Err(err("empty exam_id".into()));
            }
            if !seen.insert(exam_id.clone()) {
                return Err(err(format!("duplicate exam_id {exam_id}")));
            }
            let code: u8 = fields[1]
                .parse()
                .map_err(|_| err(format!("choice {:?} is not an integer", fields[1])))?;
            let choice = Choice6::try_from(code).map_err(|e| err(e.to_string()))?;
            let confidence = if fields[2].is_empty() {
                None
            } else {
                let c: u8 = fields[2]
                    .parse()
                    .map_err(|_| err(format!("confidence {:?} is not an integer", fields[2])))?;
                check_confidence(c).map_err(|e| err(e.to_string()))?;
                Some(c)
            };
            records.push(LabelRecord {
                exam_id,
                choice,
                confidence,
            });
        }
        Ok(RaterLabels {
            rater_id: rater_id.to_string(),
            records,
        })
    }

    /// Load a label file; the rater id is the file stem.
    pub fn from_path(path: &Path) -> Result<Self, MetricsError> {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "rater".into());
        let file = std::fs::File::open(path)
            .map_err(|e| MetricsError::Io(path.display().to_string(), e))?;
        Self::from_csv(&id, &path.display().to_string(), file)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("exam_id,choice,confidence\n");
        for r in &self.records {
            let conf = r.confidence.map(|c| c.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", r.exam_id, r.choice.code(), conf));
        }
        out
    }
}

fn check_confidence(c: u8) -> Result<(), MetricsError> {
    if (1..=10).contains(&c) {
        Ok(())
    } else {
        Err(MetricsError::InvalidValue(format!(
            "confidence {c} outside 1-10"
        )))
    }
}

/// Standard-of-reference labels, already binned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SorLabels {
    pub name: String,
    pub records: Vec<(String, Class3)>,
}

impl SorLabels {
    pub fn from_csv<R: Read>(name: &str, source: &str, reader: R) -> Result<Self, MetricsError> {
        let rows = read_rows(source, reader, &["exam_id", "class3"])?;
        let mut records = Vec::with_capacity(rows.len());
        let mut seen = HashSet::new();
        for (row, fields) in rows {
            let err = |msg: String| MetricsError::Parse {
                file: source.to_string(),
                row,
                message: msg,
            };
            if !seen.insert(fields[0].clone()) {
                return Err(err(format!("duplicate exam_id {}", fields[0])));
            }
            let code: u8 = fields[1]
                .parse()
                .map_err(|_| err(format!("class3 {:?} is not an integer", fields[1])))?;
            let class = Class3::try_from(code).map_err(|e| err(e.to_string()))?;
            records.push((fields[0].clone(), class));
        }
        Ok(SorLabels {
            name: name.to_string(),
            records,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, MetricsError> {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sor".into());
        let file = std::fs::File::open(path)
            .map_err(|e| MetricsError::Io(path.display().to_string(), e))?;
        Self::from_csv(&name, &path.display().to_string(), file)
    }

    pub fn get(&self, exam_id: &str) -> Option<Class3> {
        self.records
            .iter()
            .find(|(e, _)| e == exam_id)
            .map(|(_, c)| *c)
    }

    /// Exam counts per class.
    pub fn marginals(&self) -> [usize; 3] {
        let mut m = [0; 3];
        for (_, c) in &self.records {
            m[c.index()] += 1;
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", content = "choice", rename_all = "snake_case")]
pub enum SwarmResult {
    Consensus(Choice6),
    NoConsensus,
}

/// Per-exam swarm decisions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SwarmOutcomes {
    pub records: Vec<(String, SwarmResult)>,
}

impl SwarmOutcomes {
    /// Parse `exam_id,result,choice` with result `consensus` or `no_consensus`.
    pub fn from_csv<R: Read>(source: &str, reader: R) -> Result<Self, MetricsError> {
        let rows = read_rows(source, reader, &["exam_id", "result", "choice"])?;
        let mut records = Vec::with_capacity(rows.len());
        let mut seen = HashSet::new();
        for (row, fields) in rows {
            let err = |msg: String| MetricsError::Parse {
                file: source.to_string(),
                row,
                message: msg,
            };
            if !seen.insert(fields[0].clone()) {
                return Err(err(format!("duplicate exam_id {}", fields[0])));
            }
            let result = match fields[1].as_str() {
                "consensus" => {
                    let code: u8 = fields[2]
                        .parse()
                        .map_err(|_| err(format!("choice {:?} is not an integer", fields[2])))?;
                    SwarmResult::Consensus(Choice6::try_from(code).map_err(|e| err(e.to_string()))?)
                }
                "no_consensus" => SwarmResult::NoConsensus,
                other => return Err(err(format!("unknown result {other:?}"))),
            };
            records.push((fields[0].clone(), result));
        }
        Ok(SwarmOutcomes { records })
    }

    pub fn get(&self, exam_id: &str) -> Option<SwarmResult> {
        self.records
            .iter()
            .find(|(e, _)| e == exam_id)
            .map(|(_, r)| *r)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("exam_id,result,choice\n");
        for (exam, r) in &self.records {
            match r {
                SwarmResult::Consensus(c) => {
                    out.push_str(&format!("{exam},consensus,{}\n", c.code()))
                }
                SwarmResult::NoConsensus => out.push_str(&format!("{exam},no_consensus,\n")),
            }
        }
        out
    }
}

/// Read a headed CSV, checking the header matches `expected` exactly.
/// Returns each data row with its 1-based line number.
fn read_rows<R: Read>(
    source: &str,
    reader: R,
    expected: &[&str],
) -> Result<Vec<(u64, Vec<String>)>, MetricsError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header_err = |msg: String| MetricsError::Parse {
        file: source.to_string(),
        row: 1,
        message: msg,
    };
    let headers = rdr
        .headers()
        .map_err(|e| header_err(e.to_string()))?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(header_err(format!(
            "expected header {}, found {}",
            expected.join(","),
            got.join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| MetricsError::Parse {
            file: source.to_string(),
            row: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(rows)
}
