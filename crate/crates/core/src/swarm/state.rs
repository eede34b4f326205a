use super::dynamics::{pull_strength, DynamicsParams, DynamicsPolicy, LinearSuperposition};
use super::geometry::Vec2;
use super::layout::{ChoiceId, TargetLayout};
use super::SwarmError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;

/// Per-session pseudonym of a participant. Never carries identity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentAlias(pub String);

impl AgentAlias {
    pub fn new(s: impl Into<String>) -> Self {
        AgentAlias(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AgentAlias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum MagnetInput {
    Lifted,
    Placed { x: f64, y: f64 },
}

impl MagnetInput {
    pub fn placed(p: Vec2) -> Self {
        MagnetInput::Placed { x: p.x, y: p.y }
    }

    pub fn position(&self) -> Option<Vec2> {
        match *self {
            MagnetInput::Lifted => None,
            MagnetInput::Placed { x, y } => Some(Vec2::new(x, y)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", content = "choice", rename_all = "snake_case")]
pub enum Phase {
    Deliberating,
    Decided(ChoiceId),
    TimedOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dwell {
    pub target: ChoiceId,
    pub ticks: u32,
}

/// Live state of one question: the puck, every registered magnet and the
/// consensus bookkeeping. Mutated only through [`SwarmState::apply_input`]
/// and [`SwarmState::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    tick: u64,
    puck_pos: Vec2,
    puck_radius: f64,
    magnets: BTreeMap<AgentAlias, MagnetInput>,
    dwell: Option<Dwell>,
    phase: Phase,
    layout: TargetLayout,
}

impl SwarmState {
    /// Fresh state with the puck at the origin and every magnet lifted.
    pub fn new<I>(agents: I, params: &DynamicsParams) -> Result<Self, SwarmError>
    where
        I: IntoIterator<Item = AgentAlias>,
    {
        let mut magnets = BTreeMap::new();
        for alias in agents {
            if magnets.insert(alias.clone(), MagnetInput::Lifted).is_some() {
                return Err(SwarmError::DuplicateAgent(alias));
            }
        }
        Ok(SwarmState {
            tick: 0,
            puck_pos: Vec2::ZERO,
            puck_radius: params.puck_radius,
            magnets,
            dwell: None,
            phase: Phase::Deliberating,
            layout: TargetLayout::hexagonal(),
        })
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn puck_pos(&self) -> Vec2 {
        self.puck_pos
    }

    pub fn puck_radius(&self) -> f64 {
        self.puck_radius
    }

    pub fn magnets(&self) -> &BTreeMap<AgentAlias, MagnetInput> {
        &self.magnets
    }

    pub fn dwell(&self) -> Option<Dwell> {
        self.dwell
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn layout(&self) -> &TargetLayout {
        &self.layout
    }

    /// Record a magnet move. It takes effect at the next tick; a later call
    /// for the same agent before that tick overwrites this one.
    pub fn apply_input(
        &mut self,
        alias: &AgentAlias,
        input: MagnetInput,
    ) -> Result<(), SwarmError> {
        let slot = self
            .magnets
            .get_mut(alias)
            .ok_or_else(|| SwarmError::UnknownAgent(alias.clone()))?;
        *slot = match input.position() {
            None => MagnetInput::Lifted,
            Some(p) if !p.is_finite() => return Err(SwarmError::NonFinite),
            Some(p) => MagnetInput::placed(p.clamp_to_arena()),
        };
        Ok(())
    }

    pub fn net_pull(&self, params: &DynamicsParams) -> Result<Vec2, SwarmError> {
        LinearSuperposition.net_pull(self, params)
    }

    /// Current pull strength of each placed magnet, in alias order.
    pub fn strengths(&self, params: &DynamicsParams) -> Vec<(AgentAlias, Vec2, f64)> {
        self.magnets
            .iter()
            .filter_map(|(alias, input)| {
                input.position().map(|p| {
                    (
                        alias.clone(),
                        p,
                        pull_strength(p, self.puck_pos, self.puck_radius, params),
                    )
                })
            })
            .collect()
    }

    /// Advance one fixed timestep with the default force law.
    pub fn step(&mut self, params: &DynamicsParams) -> Result<Phase, SwarmError> {
        self.step_with(&LinearSuperposition, params)
    }

    pub fn step_with(
        &mut self,
        policy: &dyn DynamicsPolicy,
        params: &DynamicsParams,
    ) -> Result<Phase, SwarmError> {
        if self.phase != Phase::Deliberating {
            return Err(SwarmError::IllegalTransition(self.phase));
        }
        let pull = policy.net_pull(self, params)?;
        let moved = self.puck_pos + pull * (params.v_max * params.tick_dt);
        self.puck_pos = moved.clamp_to_arena();
        self.dwell = match (self.layout.capturing(self.puck_pos), self.dwell) {
            (Some(t), Some(d)) if d.target == t => Some(Dwell {
                target: t,
                ticks: d.ticks.saturating_add(1),
            }),
            (Some(t), _) => Some(Dwell {
                target: t,
                ticks: 1,
            }),
            (None, _) => None,
        };
        self.tick += 1;
        self.phase = self.check_outcome(params);
        Ok(self.phase)
    }

    /// Phase implied by the current dwell and clock. A dwell reaching the
    /// threshold wins over the deadline on the same tick.
    pub fn check_outcome(&self, params: &DynamicsParams) -> Phase {
        outcome_for(self.dwell, self.tick, params)
    }

    /// Stable content hash of the full state, hex encoded.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.tick.to_le_bytes());
        h.update(self.puck_pos.x.to_bits().to_le_bytes());
        h.update(self.puck_pos.y.to_bits().to_le_bytes());
        h.update(self.puck_radius.to_bits().to_le_bytes());
        for (alias, input) in &self.magnets {
            h.update((alias.0.len() as u64).to_le_bytes());
            h.update(alias.0.as_bytes());
            match input {
                MagnetInput::Lifted => h.update([0u8]),
                MagnetInput::Placed { x, y } => {
                    h.update([1u8]);
                    h.update(x.to_bits().to_le_bytes());
                    h.update(y.to_bits().to_le_bytes());
                }
            }
        }
        match self.dwell {
            None => h.update([0u8]),
            Some(d) => {
                h.update([1u8, d.target]);
                h.update(d.ticks.to_le_bytes());
            }
        }
        match self.phase {
            Phase::Deliberating => h.update([0u8]),
            Phase::Decided(c) => h.update([1u8, c]),
            Phase::TimedOut => h.update([2u8]),
        }
        hex::encode(h.finalize())
    }
}

pub(crate) fn outcome_for(dwell: Option<Dwell>, tick: u64, params: &DynamicsParams) -> Phase {
    match dwell {
        Some(d) if d.ticks >= params.dwell_required => Phase::Decided(d.target),
        _ if tick >= params.deliberation_limit as u64 => Phase::TimedOut,
        _ => Phase::Deliberating,
    }
}
