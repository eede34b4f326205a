//! JSON messages exchanged with participants, one per WebSocket text frame.
//! Every message carries its kind in a `type` field.

use super::config::SessionConfig;
use super::outcome::{Outcome, OutcomeResult};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    ClientHello {
        session_id: String,
        join_token: String,
    },
    MagnetUpdate {
        placed: bool,
        #[serde(default)]
        x: f64,
        #[serde(default)]
        y: f64,
        /// The state tick this update answers. Lockstep sessions ignore
        /// updates that answer an earlier tick.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tick: Option<u64>,
    },
    /// Control message: create a session on a running server.
    OpenSession { config: SessionConfig },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnetView {
    pub alias: String,
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strength: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeMessage {
    pub question_id: String,
    pub result: OutcomeResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choice_id: Option<u8>,
    pub elapsed_ms: u64,
}

impl From<&Outcome> for OutcomeMessage {
    fn from(o: &Outcome) -> Self {
        OutcomeMessage {
            question_id: o.question_id.clone(),
            result: o.result,
            choice_id: o.choice_id,
            elapsed_ms: o.elapsed_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    ServerWelcome {
        agent_alias: String,
        config_echo: SessionConfig,
    },
    QuestionBegin {
        question_id: String,
        prompt: String,
        choices: Vec<String>,
        review_ms: u64,
        deliberate_ms: u64,
    },
    StateTick {
        tick: u64,
        puck: Point,
        magnets: Vec<MagnetView>,
        remaining_ms: u64,
    },
    Outcome(OutcomeMessage),
    SessionEnd {},
    SessionOpened {
        session_id: String,
        join_token: String,
    },
    Error {
        message: String,
    },
}

impl ServerMessage {
    pub fn is_state_tick(&self) -> bool {
        matches!(self, ServerMessage::StateTick { .. })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}
