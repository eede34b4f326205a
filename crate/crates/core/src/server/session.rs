use super::config::SessionConfig;
use super::outbox::{Outbox, Outgoing};
use super::outcome::Outcome;
use super::protocol::{MagnetView, OutcomeMessage, Point, ServerMessage};
use super::trace::{AliasStrength, TracePayload, TraceWriter};
use super::ServerError;
use crate::swarm::{AgentAlias, MagnetInput, Phase, SwarmState};
use log::{debug, info, warn};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};
use tokio::sync::{mpsc, oneshot};
use tokio::task::JoinHandle;
use tokio::time::{sleep_until, Instant};

/// How long a lockstep session waits past a tick deadline for missing inputs.
pub const LOCKSTEP_GRACE: Duration = Duration::from_secs(10);

/// Magnet updates a network client may send per simulated second. Faster
/// updates are coalesced, keeping the latest.
pub const MAX_INPUTS_PER_SECOND: f64 = 25.0;

pub struct Joined {
    pub alias: AgentAlias,
    pub outbox: Arc<Outbox>,
    /// Wall-clock spacing between forwarded network inputs.
    pub input_interval: Duration,
}

pub enum SessionCommand {
    Join {
        reply: oneshot::Sender<Result<Joined, String>>,
    },
    Input {
        alias: AgentAlias,
        input: MagnetInput,
        tick: Option<u64>,
    },
    Leave {
        alias: AgentAlias,
    },
}

/// A running session. Dropping it detaches the session task.
pub struct SessionHandle {
    pub session_id: String,
    pub join_token: String,
    pub(crate) commands: mpsc::UnboundedSender<SessionCommand>,
    task: JoinHandle<Result<Vec<Outcome>, ServerError>>,
}

impl SessionHandle {
    pub fn commands(&self) -> mpsc::UnboundedSender<SessionCommand> {
        self.commands.clone()
    }

    /// Join in-process, bypassing the network (tests and tools).
    pub async fn join(&self) -> Result<Joined, String> {
        let (tx, rx) = oneshot::channel();
        self.commands
            .send(SessionCommand::Join { reply: tx })
            .map_err(|_| "session closed".to_string())?;
        rx.await.map_err(|_| "session closed".to_string())?
    }

    pub async fn wait(self) -> Result<Vec<Outcome>, ServerError> {
        self.task
            .await
            .map_err(|e| ServerError::Internal(e.to_string()))?
    }
}

pub fn spawn_session(
    config: SessionConfig,
    trace: TraceWriter,
    join_token: String,
) -> SessionHandle {
    let (tx, rx) = mpsc::unbounded_channel();
    let session_id = config.session_id.clone();
    let runner = SessionLoop {
        config,
        trace,
        rx,
        clients: BTreeMap::new(),
        roster: Vec::new(),
        next_alias: 1,
        sim_ms: 0,
    };
    let task = tokio::spawn(runner.run());
    SessionHandle {
        session_id,
        join_token,
        commands: tx,
        task,
    }
}

fn wall_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

enum Interrupt {
    Left(AgentAlias),
    Closed,
}

struct SessionLoop {
    config: SessionConfig,
    trace: TraceWriter,
    rx: mpsc::UnboundedReceiver<SessionCommand>,
    clients: BTreeMap<AgentAlias, Arc<Outbox>>,
    /// Registry as frozen when the first question started.
    roster: Vec<AgentAlias>,
    next_alias: usize,
    sim_ms: u64,
}

impl SessionLoop {
    async fn run(mut self) -> Result<Vec<Outcome>, ServerError> {
        let result = self.run_inner().await;
        for ob in self.clients.values() {
            ob.close();
        }
        match &result {
            Ok(o) => info!(
                "session {} finished with {} outcomes",
                self.config.session_id,
                o.len()
            ),
            Err(e) => warn!("session {} failed: {e}", self.config.session_id),
        }
        result
    }

    async fn run_inner(&mut self) -> Result<Vec<Outcome>, ServerError> {
        self.record(TracePayload::SessionOpen {
            config: self.config.clone(),
        })?;
        self.lobby().await?;
        self.roster = self.clients.keys().cloned().collect();
        for alias in self.roster.clone() {
            self.record(TracePayload::Join { alias: alias.0 })?;
        }
        let mut outcomes = Vec::with_capacity(self.config.questions.len());
        for index in 0..self.config.questions.len() {
            let outcome = self.run_question(index).await?;
            outcomes.push(outcome);
        }
        self.record(TracePayload::SessionEnd {})?;
        self.broadcast(&ServerMessage::SessionEnd {});
        Ok(outcomes)
    }

    fn record(&mut self, payload: TracePayload) -> Result<(), ServerError> {
        self.trace
            .append(wall_ms(), self.sim_ms, payload)
            .map(|_| ())
            .map_err(|e| ServerError::Trace(e.to_string()))
    }

    fn broadcast(&self, msg: &ServerMessage) {
        let out = Outgoing {
            droppable: msg.is_state_tick(),
            text: msg.to_json().into(),
        };
        for ob in self.clients.values() {
            ob.push(out.clone());
        }
    }

    fn admit(&mut self, reply: oneshot::Sender<Result<Joined, String>>) {
        let alias = AgentAlias(format!("m{}", self.next_alias));
        self.next_alias += 1;
        let outbox = Outbox::new();
        let welcome = ServerMessage::ServerWelcome {
            agent_alias: alias.0.clone(),
            config_echo: self.config.clone(),
        };
        outbox.push(Outgoing {
            droppable: false,
            text: welcome.to_json().into(),
        });
        let joined = Joined {
            alias: alias.clone(),
            outbox: outbox.clone(),
            input_interval: Duration::from_secs_f64(
                1.0 / MAX_INPUTS_PER_SECOND / self.config.time_scale,
            ),
        };
        if reply.send(Ok(joined)).is_ok() {
            debug!("session {}: {} joined", self.config.session_id, alias);
            self.clients.insert(alias, outbox);
        }
    }

    async fn lobby(&mut self) -> Result<(), ServerError> {
        while self.clients.len() < self.config.expected_agents {
            match self.rx.recv().await {
                None => return Err(ServerError::Internal("session channel closed".into())),
                Some(SessionCommand::Join { reply }) => self.admit(reply),
                Some(SessionCommand::Input { .. }) => {}
                Some(SessionCommand::Leave { alias }) => {
                    if let Some(ob) = self.clients.remove(&alias) {
                        ob.close();
                    }
                }
            }
        }
        info!(
            "session {} ready with {} agents",
            self.config.session_id,
            self.clients.len()
        );
        Ok(())
    }

    /// Handle one command during a question. Returns an interrupt if the
    /// question must be aborted.
    fn handle(
        &mut self,
        cmd: Option<SessionCommand>,
        pending: Option<(
            u64,
            &mut BTreeMap<AgentAlias, MagnetInput>,
            &mut BTreeSet<AgentAlias>,
        )>,
    ) -> Option<Interrupt> {
        match cmd {
            None => Some(Interrupt::Closed),
            Some(SessionCommand::Join { reply }) => {
                let _ = reply.send(Err("session registry is frozen".into()));
                None
            }
            Some(SessionCommand::Input { alias, input, tick }) => {
                let finite = input.position().is_none_or(|p| p.is_finite());
                if let Some((current, queue, acked)) = pending {
                    let stale = self.config.lockstep && tick.is_some_and(|t| t != current);
                    if finite && !stale && self.clients.contains_key(&alias) {
                        queue.insert(alias.clone(), input);
                        acked.insert(alias);
                    }
                }
                None
            }
            Some(SessionCommand::Leave { alias }) => match self.clients.remove(&alias) {
                Some(ob) => {
                    ob.close();
                    Some(Interrupt::Left(alias))
                }
                None => None,
            },
        }
    }

    fn tick_message(&self, state: &SwarmState) -> (ServerMessage, TracePayload) {
        let params = &self.config.dynamics;
        let strengths = state.strengths(params);
        let magnets = strengths
            .iter()
            .map(|(a, p, s)| MagnetView {
                alias: a.0.clone(),
                x: p.x,
                y: p.y,
                strength: self.config.broadcast_strengths.then_some(*s),
            })
            .collect();
        let puck = state.puck_pos();
        let msg = ServerMessage::StateTick {
            tick: state.tick(),
            puck: Point {
                x: puck.x,
                y: puck.y,
            },
            magnets,
            remaining_ms: self
                .config
                .deliberate_ms
                .saturating_sub(params.elapsed_ms(state.tick())),
        };
        let payload = TracePayload::StateTick {
            tick: state.tick(),
            puck,
            strengths: strengths
                .into_iter()
                .map(|(a, p, s)| AliasStrength {
                    alias: a.0,
                    x: p.x,
                    y: p.y,
                    strength: s,
                })
                .collect(),
        };
        (msg, payload)
    }

    fn finish(
        &mut self,
        state: &SwarmState,
        question_id: &str,
        aborted: bool,
    ) -> Result<Outcome, ServerError> {
        let elapsed = self.config.dynamics.elapsed_ms(state.tick());
        let outcome = Outcome::from_state(question_id, state, elapsed, aborted);
        self.record(TracePayload::OutcomeRecorded {
            outcome: outcome.clone(),
        })?;
        self.broadcast(&ServerMessage::Outcome(OutcomeMessage::from(&outcome)));
        self.sim_ms += elapsed;
        Ok(outcome)
    }

    async fn run_question(&mut self, index: usize) -> Result<Outcome, ServerError> {
        let question = self.config.questions[index].clone();
        let params = self.config.dynamics;
        let scale = self.config.time_scale;
        self.record(TracePayload::QuestionBegin {
            question_id: question.question_id.clone(),
            index,
        })?;
        self.broadcast(&ServerMessage::QuestionBegin {
            question_id: question.question_id.clone(),
            prompt: question.prompt.clone(),
            choices: question.choices.clone(),
            review_ms: self.config.review_ms,
            deliberate_ms: self.config.deliberate_ms,
        });
        let mut state = SwarmState::new(self.roster.iter().cloned(), &params)?;

        if self.clients.len() < self.roster.len() {
            return self.finish(&state, &question.question_id, true);
        }

        let review_end =
            Instant::now() + Duration::from_secs_f64(self.config.review_ms as f64 / 1000.0 / scale);
        loop {
            tokio::select! {
                cmd = self.rx.recv() => {
                    if let Some(int) = self.handle(cmd, None) {
                        self.log_interrupt(&int, &question.question_id);
                        return self.finish(&state, &question.question_id, true);
                    }
                }
                _ = sleep_until(review_end) => break,
            }
        }
        self.sim_ms += self.config.review_ms;

        let (msg, payload) = self.tick_message(&state);
        self.record(payload)?;
        self.broadcast(&msg);

        let period = Duration::from_secs_f64(params.tick_dt / scale);
        let start = Instant::now();
        let mut queue: BTreeMap<AgentAlias, MagnetInput> = BTreeMap::new();
        let mut acked: BTreeSet<AgentAlias> = BTreeSet::new();
        loop {
            let deadline = start + period.mul_f64((state.tick() + 1) as f64);
            let grace = deadline + LOCKSTEP_GRACE;
            loop {
                let now = Instant::now();
                let time_ok = now >= deadline;
                let inputs_ok = !self.config.lockstep || acked.len() >= self.clients.len();
                if time_ok && inputs_ok {
                    break;
                }
                if time_ok && now >= grace {
                    warn!(
                        "session {}: tick {} proceeding without input from {} agents",
                        self.config.session_id,
                        state.tick() + 1,
                        self.clients.len() - acked.len()
                    );
                    break;
                }
                let wake = if time_ok { grace } else { deadline };
                tokio::select! {
                    cmd = self.rx.recv() => {
                        if let Some(int) = self.handle(cmd, Some((state.tick(), &mut queue, &mut acked))) {
                            self.log_interrupt(&int, &question.question_id);
                            return self.finish(&state, &question.question_id, true);
                        }
                    }
                    _ = sleep_until(wake) => {}
                }
            }
            acked.clear();
            let next_tick = state.tick() + 1;
            let input_ms = params.elapsed_ms(state.tick());
            for (alias, input) in std::mem::take(&mut queue) {
                state.apply_input(&alias, input)?;
                self.record_at(
                    TracePayload::InputApplied {
                        tick: next_tick,
                        alias: alias.0,
                        input,
                    },
                    input_ms,
                )?;
            }
            let phase = state.step(&params)?;
            let (msg, payload) = self.tick_message(&state);
            self.record_at(payload, params.elapsed_ms(state.tick()))?;
            self.broadcast(&msg);
            if phase != Phase::Deliberating {
                return self.finish(&state, &question.question_id, false);
            }
        }
    }

    fn record_at(&mut self, payload: TracePayload, offset_ms: u64) -> Result<(), ServerError> {
        self.trace
            .append(wall_ms(), self.sim_ms + offset_ms, payload)
            .map(|_| ())
            .map_err(|e| ServerError::Trace(e.to_string()))
    }

    fn log_interrupt(&self, int: &Interrupt, question_id: &str) {
        match int {
            Interrupt::Left(a) => warn!(
                "session {}: {a} disconnected, aborting question {question_id}",
                self.config.session_id
            ),
            Interrupt::Closed => {
                warn!("session {}: command channel closed", self.config.session_id)
            }
        }
    }
}
