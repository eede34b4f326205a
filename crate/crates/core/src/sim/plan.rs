use super::policy::check_choice;
use super::{AgentPolicy, SimError};
use crate::metrics::Choice6;
use crate::server::{Question, SessionConfig};
use crate::swarm::{ChoiceId, DynamicsParams};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One scripted participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub policy: AgentPolicy,
    /// Per-question preferred answer; overrides the policy's choice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answers: Option<Vec<ChoiceId>>,
}

impl AgentSpec {
    pub fn stubborn(choice: ChoiceId) -> Self {
        AgentSpec {
            policy: AgentPolicy::Stubborn {
                choice,
                strength: 1.0,
            },
            answers: None,
        }
    }
}

fn default_one() -> u32 {
    1
}

fn default_scale() -> f64 {
    100.0
}

fn default_review() -> u64 {
    60_000
}

fn default_concurrency() -> usize {
    16
}

/// A batch of seeded simulated sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimPlan {
    pub name: String,
    pub agents: Vec<AgentSpec>,
    #[serde(default = "default_one")]
    pub questions: u32,
    /// Question ids; `Q01`, `Q02`, ... when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question_ids: Option<Vec<String>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_scale")]
    pub time_scale: f64,
    #[serde(default = "default_one")]
    pub repetitions: u32,
    #[serde(default = "default_review")]
    pub review_ms: u64,
    #[serde(default)]
    pub dynamics: DynamicsParams,
    /// Sessions run at the same time.
    #[serde(default = "default_concurrency")]
    pub max_concurrent: usize,
}

impl SimPlan {
    pub fn new(name: impl Into<String>, agents: Vec<AgentSpec>) -> Self {
        SimPlan {
            name: name.into(),
            agents,
            questions: 1,
            question_ids: None,
            seed: 0,
            time_scale: default_scale(),
            repetitions: 1,
            review_ms: default_review(),
            dynamics: DynamicsParams::default(),
            max_concurrent: default_concurrency(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let plan: SimPlan = serde_json::from_str(text).map_err(|e| SimError::PlanSyntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn from_path(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidPlan(m));
        if self.agents.len() < 2 {
            return bad(format!("need at least 2 agents, got {}", self.agents.len()));
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.questions == 0 {
            return bad("questions must be at least 1".into());
        }
        if self.max_concurrent == 0 {
            return bad("max_concurrent must be at least 1".into());
        }
        if let Some(ids) = &self.question_ids {
            if ids.len() != self.questions as usize {
                return bad(format!(
                    "{} question_ids for {} questions",
                    ids.len(),
                    self.questions
                ));
            }
        }
        for (i, a) in self.agents.iter().enumerate() {
            a.policy
                .validate()
                .map_err(|e| SimError::InvalidPlan(format!("agent {}: {e}", i + 1)))?;
            if let Some(answers) = &a.answers {
                if answers.len() != self.questions as usize {
                    return bad(format!(
                        "agent {} has {} answers for {} questions",
                        i + 1,
                        answers.len(),
                        self.questions
                    ));
                }
                for c in answers {
                    check_choice(*c)
                        .map_err(|e| SimError::InvalidPlan(format!("agent {}: {e}", i + 1)))?;
                }
            }
        }
        // remaining checks are shared with the server
        self.session_config(0)
            .validate()
            .map_err(|e| SimError::InvalidPlan(e.to_string()))
    }

    pub fn question_id(&self, index: usize) -> String {
        match &self.question_ids {
            Some(ids) => ids[index].clone(),
            None => format!("Q{:02}", index + 1),
        }
    }

    pub fn session_id(&self, run_id: u32) -> String {
        format!("{}-{run_id:04}", self.name)
    }

    pub fn session_seed(&self, run_id: u32) -> u64 {
        self.seed.wrapping_add(run_id as u64)
    }

    /// Lockstep session config for one repetition.
    pub fn session_config(&self, run_id: u32) -> SessionConfig {
        let choices: Vec<String> = Choice6::ALL.iter().map(|c| c.label().to_string()).collect();
        SessionConfig {
            session_id: self.session_id(run_id),
            questions: (0..self.questions as usize)
                .map(|i| Question {
                    question_id: self.question_id(i),
                    prompt: "Which meniscal regions show a tear?".into(),
                    choices: choices.clone(),
                })
                .collect(),
            review_ms: self.review_ms,
            deliberate_ms: self.dynamics.deliberation_ms(),
            expected_agents: self.agents.len(),
            dynamics: self.dynamics,
            time_scale: self.time_scale,
            rng_seed: self.session_seed(run_id),
            lockstep: true,
            broadcast_strengths: true,
        }
    }
}
