use crate::metrics::{Choice6, SwarmOutcomes, SwarmResult};
use crate::swarm::{Phase, SwarmState};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeResult {
    Consensus,
    NoConsensus,
}

/// Result of one question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub question_id: String,
    pub result: OutcomeResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choice_id: Option<u8>,
    /// Simulated deliberation time.
    pub elapsed_ms: u64,
    /// Digest of the final swarm state.
    pub digest: String,
    /// A participant left mid-question.
    #[serde(default)]
    pub aborted: bool,
}

impl Outcome {
    /// Outcome for a state that has left the deliberating phase, or for an
    /// aborted question when `aborted` is set.
    pub fn from_state(
        question_id: &str,
        state: &SwarmState,
        elapsed_ms: u64,
        aborted: bool,
    ) -> Outcome {
        let (result, choice_id) = match state.phase() {
            Phase::Decided(c) if !aborted => (OutcomeResult::Consensus, Some(c)),
            _ => (OutcomeResult::NoConsensus, None),
        };
        Outcome {
            question_id: question_id.to_string(),
            result,
            choice_id,
            elapsed_ms,
            digest: state.digest(),
            aborted,
        }
    }
}

/// Distil outcomes into per-exam swarm votes, keyed by question id.
pub fn swarm_outcomes<'a, I>(outcomes: I) -> SwarmOutcomes
where
    I: IntoIterator<Item = (&'a str, OutcomeResult, Option<u8>)>,
{
    SwarmOutcomes {
        records: outcomes
            .into_iter()
            .map(|(id, result, choice)| {
                let r = match (result, choice.and_then(|c| Choice6::try_from(c).ok())) {
                    (OutcomeResult::Consensus, Some(c)) => SwarmResult::Consensus(c),
                    _ => SwarmResult::NoConsensus,
                };
                (id.to_string(), r)
            })
            .collect(),
    }
}
