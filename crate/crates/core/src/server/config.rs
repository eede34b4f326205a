use super::ServerError;
use crate::swarm::DynamicsParams;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Question {
    pub question_id: String,
    pub prompt: String,
    pub choices: Vec<String>,
}

fn default_phase_ms() -> u64 {
    60_000
}

fn default_time_scale() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

/// Everything needed to run one session; also the on-disk config format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub session_id: String,
    pub questions: Vec<Question>,
    #[serde(default = "default_phase_ms")]
    pub review_ms: u64,
    #[serde(default = "default_phase_ms")]
    pub deliberate_ms: u64,
    pub expected_agents: usize,
    #[serde(default)]
    pub dynamics: DynamicsParams,
    /// Simulated seconds per wall-clock second.
    #[serde(default = "default_time_scale")]
    pub time_scale: f64,
    #[serde(default)]
    pub rng_seed: u64,
    /// Wait for one magnet update from every agent after each state tick
    /// before advancing. Makes scripted runs independent of network timing.
    #[serde(default)]
    pub lockstep: bool,
    /// Include per-magnet pull strengths in state ticks.
    #[serde(default = "default_true")]
    pub broadcast_strengths: bool,
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), ServerError> {
        let bad = |m: String| Err(ServerError::InvalidConfig(m));
        if self.session_id.is_empty()
            || !self
                .session_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            || self.session_id.starts_with('.')
        {
            return bad(format!(
                "session_id {:?} must be non-empty and use only letters, digits, '-', '_' or '.'",
                self.session_id
            ));
        }
        if self.expected_agents < 2 {
            return bad(format!(
                "expected_agents must be at least 2, got {}",
                self.expected_agents
            ));
        }
        if self.questions.is_empty() {
            return bad("questions must not be empty".into());
        }
        let mut ids = HashSet::new();
        for q in &self.questions {
            if !ids.insert(q.question_id.as_str()) {
                return bad(format!("question_id {} appears twice", q.question_id));
            }
            if q.choices.len() != 6 {
                return bad(format!(
                    "question {} has {} choices, expected 6",
                    q.question_id,
                    q.choices.len()
                ));
            }
            let labels: HashSet<&str> = q.choices.iter().map(String::as_str).collect();
            if labels.len() != 6 {
                return bad(format!(
                    "question {} has duplicate choice labels",
                    q.question_id
                ));
            }
        }
        if !(self.time_scale.is_finite() && self.time_scale >= 1.0) {
            return bad(format!("time_scale must be >= 1, got {}", self.time_scale));
        }
        self.dynamics
            .validate()
            .map_err(|e| ServerError::InvalidConfig(e.to_string()))?;
        if self.deliberate_ms != self.dynamics.deliberation_ms() {
            return bad(format!(
                "deliberate_ms {} disagrees with deliberation_limit x tick_dt = {} ms",
                self.deliberate_ms,
                self.dynamics.deliberation_ms()
            ));
        }
        Ok(())
    }

    /// Parse and validate JSON; syntax errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self, ServerError> {
        let cfg: SessionConfig =
            serde_json::from_str(text).map_err(|e| ServerError::ConfigSyntax {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ServerError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServerError::Io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn sample_config(agents: usize, questions: usize) -> SessionConfig {
        SessionConfig {
            session_id: "s1".into(),
            questions: (0..questions)
                .map(|i| Question {
                    question_id: format!("E{:02}", i + 1),
                    prompt: "Select the regions with a lesion".into(),
                    choices: ["none", "am", "pm", "al", "pl", "multi"]
                        .map(String::from)
                        .to_vec(),
                })
                .collect(),
            review_ms: 60_000,
            deliberate_ms: 60_000,
            expected_agents: agents,
            dynamics: DynamicsParams::default(),
            time_scale: 1.0,
            rng_seed: 0,
            lockstep: false,
            broadcast_strengths: true,
        }
    }

    #[test]
    fn sample_is_valid() {
        sample_config(5, 2).validate().unwrap();
    }

    #[test]
    fn single_agent_rejected() {
        assert!(matches!(
            sample_config(1, 1).validate(),
            Err(ServerError::InvalidConfig(_))
        ));
    }

    #[test]
    fn deliberation_must_match_dynamics() {
        let mut c = sample_config(3, 1);
        c.deliberate_ms = 30_000;
        assert!(c.validate().is_err());
        c.dynamics.deliberation_limit = 600;
        c.validate().unwrap();
    }

    #[test]
    fn bad_choices_and_ids() {
        let mut c = sample_config(3, 1);
        c.questions[0].choices.pop();
        assert!(c.validate().is_err());
        let mut c = sample_config(3, 1);
        c.questions[0].choices[1] = "none".into();
        assert!(c.validate().is_err());
        let mut c = sample_config(3, 1);
        c.session_id = "../x".into();
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_defaults_and_syntax_errors() {
        let text = r#"{"session_id":"a","expected_agents":3,"questions":[
            {"question_id":"q","prompt":"p","choices":["1","2","3","4","5","6"]}]}"#;
        let c = SessionConfig::from_json(text).unwrap();
        assert_eq!(c.review_ms, 60_000);
        assert_eq!(c.time_scale, 1.0);
        assert!(c.broadcast_strengths);
        match SessionConfig::from_json("{\n  \"session_id\": ,\n}") {
            Err(ServerError::ConfigSyntax { line, column, .. }) => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("{other:?}"),
        }
    }
}
