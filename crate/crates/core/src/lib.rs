//! Real-time swarm consensus sessions and the statistics used to judge them.
//!
//! * [`swarm`]: deterministic puck dynamics for one question.
//! * [`server`]: session orchestration, wire protocol, traces and replay.
//! * [`sim`]: scripted agents that join sessions over the wire protocol.
//! * [`metrics`]: label ingestion, vote aggregation and agreement statistics.
//! * [`cli`]: the `swarmlab` command line.

pub mod cli;
pub mod metrics;
pub mod server;
pub mod sim;
pub mod swarm;
