use super::client::{connect_agent, drive_agent, open_remote_session};
use super::{SimError, SimPlan};
use crate::metrics::SwarmOutcomes;
use crate::server::{swarm_outcomes, OutcomeMessage, Server, TraceTarget};
use futures_util::stream::{self, StreamExt};
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run_id: u32,
    pub session_id: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub outcomes: Vec<OutcomeMessage>,
}

impl RunResult {
    pub fn swarm_outcomes(&self) -> SwarmOutcomes {
        swarm_outcomes(
            self.outcomes
                .iter()
                .map(|o| (o.question_id.as_str(), o.result, o.choice_id)),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub plan: String,
    pub endpoint: String,
    pub completed: usize,
    pub failed: usize,
    pub runs: Vec<RunResult>,
}

async fn run_once(
    plan: &SimPlan,
    endpoint: &str,
    run_id: u32,
) -> Result<Vec<OutcomeMessage>, SimError> {
    let (session_id, token) = open_remote_session(endpoint, plan.session_config(run_id)).await?;
    // Sequential joins give agent i the alias m{i+1}.
    let mut conns = Vec::with_capacity(plan.agents.len());
    for _ in &plan.agents {
        conns.push(connect_agent(endpoint, &session_id, &token).await?);
    }
    let seed = plan.session_seed(run_id);
    let mut tasks = Vec::with_capacity(conns.len());
    for (i, conn) in conns.into_iter().enumerate() {
        let spec = plan.agents[i].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        tasks.push(tokio::spawn(
            async move { drive_agent(conn, &spec, rng).await },
        ));
    }
    let mut results = Vec::with_capacity(tasks.len());
    for t in tasks {
        results.push(
            t.await
                .map_err(|e| SimError::Protocol(format!("agent task failed: {e}")))??,
        );
    }
    let first = results.swap_remove(0);
    if results.iter().any(|r| *r != first) {
        return Err(SimError::Protocol(
            "agents observed different outcomes".into(),
        ));
    }
    Ok(first)
}

/// Run every repetition of the plan against a server at `endpoint`.
///
/// A failed repetition is reported in the summary and does not stop the
/// others. If no repetition could reach the server at all, the connection
/// error is returned instead.
pub async fn run_plan(plan: &SimPlan, endpoint: &str) -> Result<SimSummary, SimError> {
    plan.validate()?;
    let mut results: Vec<(u32, Result<Vec<OutcomeMessage>, SimError>)> =
        stream::iter(0..plan.repetitions)
            .map(|run_id| async move { (run_id, run_once(plan, endpoint, run_id).await) })
            .buffer_unordered(plan.max_concurrent)
            .collect()
            .await;
    results.sort_by_key(|(id, _)| *id);

    if results
        .iter()
        .all(|(_, r)| matches!(r, Err(SimError::Connect { .. })))
    {
        if let Some((_, Err(e))) = results.into_iter().next() {
            return Err(e);
        }
        unreachable!("at least one repetition");
    }

    let runs: Vec<RunResult> = results
        .into_iter()
        .map(|(run_id, r)| {
            let session_id = plan.session_id(run_id);
            match r {
                Ok(outcomes) => RunResult {
                    run_id,
                    session_id,
                    status: RunStatus::Completed,
                    error: None,
                    outcomes,
                },
                Err(e) => {
                    warn!("run {session_id} failed: {e}");
                    RunResult {
                        run_id,
                        session_id,
                        status: RunStatus::Failed,
                        error: Some(e.to_string()),
                        outcomes: Vec::new(),
                    }
                }
            }
        })
        .collect();
    let completed = runs
        .iter()
        .filter(|r| r.status == RunStatus::Completed)
        .count();
    info!(
        "plan {}: {completed}/{} runs completed",
        plan.name,
        runs.len()
    );
    Ok(SimSummary {
        plan: plan.name.clone(),
        endpoint: endpoint.to_string(),
        completed,
        failed: runs.len() - completed,
        runs,
    })
}

/// Start a loopback server, run the plan against it and shut it down.
pub async fn run_plan_embedded(
    plan: &SimPlan,
    traces: TraceTarget,
) -> Result<SimSummary, SimError> {
    plan.validate()?;
    let running = Server::new(traces).bind("127.0.0.1:0").await?;
    let endpoint = running.endpoint();
    let summary = run_plan(plan, &endpoint).await;
    running.shutdown().await;
    summary
}
