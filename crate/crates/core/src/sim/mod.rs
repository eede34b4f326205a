//! Scripted agents that take part in sessions through the same WebSocket
//! protocol as human participants.

mod client;
mod driver;
mod plan;
mod policy;

pub use client::{connect_agent, drive_agent, open_remote_session, AgentConnection};
pub use driver::{run_plan, run_plan_embedded, RunResult, RunStatus, SimSummary};
pub use plan::{AgentSpec, SimPlan};
pub use policy::{AgentBrain, AgentPolicy, Observation};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("plan syntax error at line {line}, column {column}: {message}")]
    PlanSyntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("cannot reach {endpoint}: {message}")]
    Connect { endpoint: String, message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("server rejected request: {0}")]
    Rejected(String),
    #[error(transparent)]
    Server(#[from] crate::server::ServerError),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}
