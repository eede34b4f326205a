//! Puck-and-magnet dynamics for a single question.
//!
//! Each tick the puck moves along the averaged pull of all registered
//! magnets. A question is decided once the puck stays inside one target's
//! capture disk for `dwell_required` consecutive ticks, and times out when
//! the deliberation budget runs out first.

mod dynamics;
mod geometry;
mod layout;
mod state;

pub use dynamics::{pull_strength, DynamicsParams, DynamicsPolicy, LinearSuperposition};
pub use geometry::{Vec2, SOFT_BOUND};
pub use layout::{
    ChoiceId, Target, TargetLayout, CAPTURE_RADIUS, TARGET_COUNT, TARGET_RING_RADIUS,
};
pub use state::{AgentAlias, Dwell, MagnetInput, Phase, SwarmState};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SwarmError {
    #[error("swarm has no registered agents")]
    EmptySwarm,
    #[error("agent {0} is not registered for this session")]
    UnknownAgent(AgentAlias),
    #[error("agent {0} registered twice")]
    DuplicateAgent(AgentAlias),
    #[error("cannot tick a question that already ended ({0:?})")]
    IllegalTransition(Phase),
    #[error("magnet position must be finite")]
    NonFinite,
    #[error("invalid dynamics parameters: {0}")]
    InvalidParams(String),
}
