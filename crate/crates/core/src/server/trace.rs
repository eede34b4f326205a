//! Append-only, hash-chained session log: one JSON object per line.
//!
//! Each line's `hash` covers the previous line's hash and every other field
//! of the line, and lines must be in the canonical serialization, so any
//! edit to a persisted trace is pinned to the sequence number of the line
//! that was touched.

use super::config::SessionConfig;
use super::outcome::Outcome;
use crate::swarm::{MagnetInput, Vec2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

pub const GENESIS_HASH: &str = "0000000000000000000000000000000000000000000000000000000000000000";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AliasStrength {
    pub alias: String,
    pub x: f64,
    pub y: f64,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TracePayload {
    SessionOpen {
        config: SessionConfig,
    },
    Join {
        alias: String,
    },
    QuestionBegin {
        question_id: String,
        index: usize,
    },
    InputApplied {
        tick: u64,
        alias: String,
        input: MagnetInput,
    },
    StateTick {
        tick: u64,
        puck: Vec2,
        strengths: Vec<AliasStrength>,
    },
    OutcomeRecorded {
        outcome: Outcome,
    },
    SessionEnd {},
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceEvent {
    pub seq: u64,
    pub wall_ms: u64,
    pub sim_ms: u64,
    pub payload: TracePayload,
    pub hash: String,
}

#[derive(Serialize)]
struct HashedBody<'a> {
    prev: &'a str,
    seq: u64,
    wall_ms: u64,
    sim_ms: u64,
    payload: &'a TracePayload,
}

pub(crate) fn chain_hash(
    prev: &str,
    seq: u64,
    wall_ms: u64,
    sim_ms: u64,
    payload: &TracePayload,
) -> String {
    let body = HashedBody {
        prev,
        seq,
        wall_ms,
        sim_ms,
        payload,
    };
    let bytes = serde_json::to_vec(&body).expect("trace payloads always serialize");
    hex::encode(Sha256::digest(bytes))
}

pub fn trace_file_name(session_id: &str) -> String {
    format!("{session_id}.trace.jsonl")
}

enum Sink {
    File(BufWriter<File>),
    Memory(Arc<Mutex<Vec<String>>>),
    Null,
}

/// Sequential writer; each event is flushed before `append` returns.
pub struct TraceWriter {
    sink: Sink,
    path: Option<PathBuf>,
    next_seq: u64,
    prev_hash: String,
}

impl TraceWriter {
    pub fn create(dir: &Path, session_id: &str) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(trace_file_name(session_id));
        let file = File::options().create_new(true).write(true).open(&path)?;
        Ok(Self::with_sink(
            Sink::File(BufWriter::new(file)),
            Some(path),
        ))
    }

    /// Keep lines in a shared buffer (tests and embedded runs).
    pub fn memory(lines: Arc<Mutex<Vec<String>>>) -> Self {
        Self::with_sink(Sink::Memory(lines), None)
    }

    pub fn null() -> Self {
        Self::with_sink(Sink::Null, None)
    }

    fn with_sink(sink: Sink, path: Option<PathBuf>) -> Self {
        TraceWriter {
            sink,
            path,
            next_seq: 0,
            prev_hash: GENESIS_HASH.to_string(),
        }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn append(
        &mut self,
        wall_ms: u64,
        sim_ms: u64,
        payload: TracePayload,
    ) -> std::io::Result<u64> {
        let seq = self.next_seq;
        let hash = chain_hash(&self.prev_hash, seq, wall_ms, sim_ms, &payload);
        let event = TraceEvent {
            seq,
            wall_ms,
            sim_ms,
            payload,
            hash,
        };
        let line = serde_json::to_string(&event).expect("trace events always serialize");
        match &mut self.sink {
            Sink::File(w) => {
                w.write_all(line.as_bytes())?;
                w.write_all(b"\n")?;
                w.flush()?;
            }
            Sink::Memory(buf) => buf.lock().expect("trace buffer poisoned").push(line),
            Sink::Null => {}
        }
        self.prev_hash = event.hash;
        self.next_seq += 1;
        Ok(seq)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("trace diverges at seq {seq}: {reason}")]
pub struct TraceError {
    pub seq: u64,
    pub reason: String,
}

impl TraceError {
    pub(crate) fn at(seq: u64, reason: impl Into<String>) -> Self {
        TraceError {
            seq,
            reason: reason.into(),
        }
    }
}

/// Parse trace lines and check sequence numbers, canonical form and the hash
/// chain. Errors name the sequence number expected at the offending line.
pub fn parse_trace<I, S>(lines: I) -> Result<Vec<TraceEvent>, TraceError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut events = Vec::new();
    let mut prev = GENESIS_HASH.to_string();
    for (i, line) in lines.into_iter().enumerate() {
        let expected = i as u64;
        let line = line.as_ref();
        let event: TraceEvent = serde_json::from_str(line)
            .map_err(|e| TraceError::at(expected, format!("unparseable line: {e}")))?;
        if event.seq != expected {
            return Err(TraceError::at(
                expected,
                format!("sequence gap: found seq {}", event.seq),
            ));
        }
        let canonical = serde_json::to_string(&event).expect("trace events always serialize");
        if canonical != line {
            return Err(TraceError::at(expected, "line is not in canonical form"));
        }
        let hash = chain_hash(
            &prev,
            event.seq,
            event.wall_ms,
            event.sim_ms,
            &event.payload,
        );
        if hash != event.hash {
            return Err(TraceError::at(expected, "hash chain broken"));
        }
        prev = hash;
        events.push(event);
    }
    Ok(events)
}

pub fn read_trace_file(path: &Path) -> Result<Vec<TraceEvent>, TraceError> {
    let file =
        File::open(path).map_err(|e| TraceError::at(0, format!("{}: {e}", path.display())))?;
    let lines: Vec<String> = std::io::BufReader::new(file)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|e| TraceError::at(0, format!("{}: {e}", path.display())))?;
    parse_trace(lines)
}
