use super::config::SessionConfig;
use super::outcome::Outcome;
use super::trace::{TraceError, TraceEvent, TracePayload};
use crate::swarm::{AgentAlias, Phase, SwarmState};

/// A replay that matched the recording.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub session_id: String,
    pub outcomes: Vec<Outcome>,
    /// Every recomputed puck position, per question, starting at tick 0.
    pub trajectories: Vec<Vec<(u64, f64, f64)>>,
}

fn bits_eq(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits()
}

/// Re-run the swarm dynamics on the recorded inputs and check every state
/// tick and outcome against the recording.
pub fn replay(events: &[TraceEvent]) -> Result<ReplayReport, TraceError> {
    let first = events
        .first()
        .ok_or_else(|| TraceError::at(0, "empty trace"))?;
    let TracePayload::SessionOpen { config } = &first.payload else {
        return Err(TraceError::at(0, "trace must start with session_open"));
    };
    let config: &SessionConfig = config;
    let params = config.dynamics;
    let mut aliases: Vec<AgentAlias> = Vec::new();
    let mut current: Option<(String, SwarmState)> = None;
    let mut outcomes = Vec::new();
    let mut trajectories: Vec<Vec<(u64, f64, f64)>> = Vec::new();
    let mut ended = false;

    for ev in &events[1..] {
        let seq = ev.seq;
        if ended {
            return Err(TraceError::at(seq, "events after session_end"));
        }
        match &ev.payload {
            TracePayload::SessionOpen { .. } => {
                return Err(TraceError::at(seq, "second session_open"))
            }
            TracePayload::Join { alias } => {
                if !outcomes.is_empty() || current.is_some() {
                    return Err(TraceError::at(seq, "join after the first question started"));
                }
                aliases.push(AgentAlias::new(alias.clone()));
            }
            TracePayload::QuestionBegin { question_id, index } => {
                if current.is_some() {
                    return Err(TraceError::at(
                        seq,
                        "question began before the previous one closed",
                    ));
                }
                let expected = config.questions.get(*index).map(|q| q.question_id.as_str());
                if expected != Some(question_id.as_str()) || *index != outcomes.len() {
                    return Err(TraceError::at(
                        seq,
                        format!("unexpected question {question_id} at index {index}"),
                    ));
                }
                let state = SwarmState::new(aliases.iter().cloned(), &params)
                    .map_err(|e| TraceError::at(seq, e.to_string()))?;
                current = Some((question_id.clone(), state));
                trajectories.push(Vec::new());
            }
            TracePayload::InputApplied { tick, alias, input } => {
                let (_, state) = current
                    .as_mut()
                    .ok_or_else(|| TraceError::at(seq, "input outside a question"))?;
                if *tick != state.tick() + 1 {
                    return Err(TraceError::at(
                        seq,
                        format!("input for tick {tick} while at tick {}", state.tick()),
                    ));
                }
                state
                    .apply_input(&AgentAlias::new(alias.clone()), *input)
                    .map_err(|e| TraceError::at(seq, e.to_string()))?;
            }
            TracePayload::StateTick {
                tick,
                puck,
                strengths,
            } => {
                let (_, state) = current
                    .as_mut()
                    .ok_or_else(|| TraceError::at(seq, "state tick outside a question"))?;
                if *tick != 0 || state.tick() != 0 {
                    state
                        .step(&params)
                        .map_err(|e| TraceError::at(seq, e.to_string()))?;
                }
                if state.tick() != *tick {
                    return Err(TraceError::at(
                        seq,
                        format!("recorded tick {tick}, replay at {}", state.tick()),
                    ));
                }
                let p = state.puck_pos();
                if !bits_eq(p.x, puck.x) || !bits_eq(p.y, puck.y) {
                    return Err(TraceError::at(
                        seq,
                        format!(
                            "puck at ({}, {}), recorded ({}, {})",
                            p.x, p.y, puck.x, puck.y
                        ),
                    ));
                }
                let replayed = state.strengths(&params);
                let same = replayed.len() == strengths.len()
                    && replayed.iter().zip(strengths).all(|((a, pos, s), r)| {
                        a.as_str() == r.alias
                            && bits_eq(pos.x, r.x)
                            && bits_eq(pos.y, r.y)
                            && bits_eq(*s, r.strength)
                    });
                if !same {
                    return Err(TraceError::at(seq, "magnet strengths differ"));
                }
                trajectories
                    .last_mut()
                    .expect("question open")
                    .push((*tick, p.x, p.y));
            }
            TracePayload::OutcomeRecorded { outcome } => {
                let (qid, state) = current
                    .take()
                    .ok_or_else(|| TraceError::at(seq, "outcome outside a question"))?;
                if !outcome.aborted && state.phase() == Phase::Deliberating {
                    return Err(TraceError::at(
                        seq,
                        "outcome recorded while the swarm was still deliberating",
                    ));
                }
                let elapsed = params.elapsed_ms(state.tick());
                let recomputed = Outcome::from_state(&qid, &state, elapsed, outcome.aborted);
                if &recomputed != outcome {
                    let what = if recomputed.digest != outcome.digest {
                        "final state digest mismatch"
                    } else {
                        "outcome mismatch"
                    };
                    return Err(TraceError::at(seq, what));
                }
                outcomes.push(recomputed);
            }
            TracePayload::SessionEnd {} => {
                if current.is_some() {
                    return Err(TraceError::at(seq, "session ended mid-question"));
                }
                ended = true;
            }
        }
    }
    if !ended {
        let next = events.last().map(|e| e.seq + 1).unwrap_or(0);
        return Err(TraceError::at(next, "trace truncated before session_end"));
    }
    Ok(ReplayReport {
        session_id: config.session_id.clone(),
        outcomes,
        trajectories,
    })
}

/// The outcomes as recorded, without re-execution.
pub fn recorded_outcomes(events: &[TraceEvent]) -> Vec<Outcome> {
    events
        .iter()
        .filter_map(|e| match &e.payload {
            TracePayload::OutcomeRecorded { outcome } => Some(outcome.clone()),
            _ => None,
        })
        .collect()
}
