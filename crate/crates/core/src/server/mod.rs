//! Session orchestration over a JSON/WebSocket protocol.
//!
//! One task per session owns the swarm state. Connections feed magnet
//! updates into that task's queue; the task applies them at tick boundaries,
//! appends every event to the session trace and only then broadcasts it.

mod config;
mod net;
mod outbox;
mod outcome;
mod protocol;
mod replay;
mod session;
mod trace;

pub use config::{Question, SessionConfig};
pub use net::{MemoryTraces, RunningServer, Server, TraceTarget};
pub use outbox::{Outbox, Outgoing, MAX_PENDING_TICKS};
pub use outcome::{swarm_outcomes, Outcome, OutcomeResult};
pub use protocol::{ClientMessage, MagnetView, OutcomeMessage, Point, ServerMessage};
pub use replay::{recorded_outcomes, replay, ReplayReport};
pub use session::{
    spawn_session, Joined, SessionCommand, SessionHandle, LOCKSTEP_GRACE, MAX_INPUTS_PER_SECOND,
};
pub use trace::{
    parse_trace, read_trace_file, trace_file_name, AliasStrength, TraceError, TraceEvent,
    TracePayload, TraceWriter,
};

use crate::swarm::SwarmError;

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("config syntax error at line {line}, column {column}: {message}")]
    ConfigSyntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("session {0} already exists")]
    DuplicateSession(String),
    #[error("cannot bind {0}: {1}")]
    Bind(String, #[source] std::io::Error),
    #[error("trace write failed: {0}")]
    Trace(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error(transparent)]
    Swarm(#[from] SwarmError),
    #[error("{0}")]
    Internal(String),
}
