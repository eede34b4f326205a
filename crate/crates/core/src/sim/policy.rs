use super::SimError;
use crate::swarm::{ChoiceId, DynamicsParams, MagnetInput, TargetLayout, Vec2, TARGET_COUNT};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Scripted participant behaviour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentPolicy {
    /// Always pulls toward `choice` at a fixed strength.
    Stubborn { choice: ChoiceId, strength: f64 },
    /// Pulls at full strength toward its current choice, and may defect to
    /// the target the puck is heading for once it has been losing ground for
    /// `patience_ticks` observed ticks. Higher conviction makes defection
    /// less likely; conviction 1 never defects.
    Flexible {
        choice: ChoiceId,
        conviction: f64,
        patience_ticks: u32,
    },
    /// The inner behaviour with Gaussian jitter on the magnet position.
    Noisy {
        inner: Box<AgentPolicy>,
        jitter_sd: f64,
    },
}

impl AgentPolicy {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidPlan(m));
        match self {
            AgentPolicy::Stubborn { choice, strength } => {
                check_choice(*choice)?;
                if !(*strength > 0.0 && *strength <= 1.0) {
                    return bad(format!("stubborn strength {strength} outside (0, 1]"));
                }
            }
            AgentPolicy::Flexible {
                choice,
                conviction,
                patience_ticks,
            } => {
                check_choice(*choice)?;
                if !(0.0..=1.0).contains(conviction) {
                    return bad(format!("conviction {conviction} outside [0, 1]"));
                }
                if *patience_ticks == 0 {
                    return bad("patience_ticks must be at least 1".into());
                }
            }
            AgentPolicy::Noisy { inner, jitter_sd } => {
                if !(jitter_sd.is_finite() && *jitter_sd >= 0.0) {
                    return bad(format!("jitter_sd {jitter_sd} must be >= 0"));
                }
                inner.validate()?;
            }
        }
        Ok(())
    }

    /// Innermost behaviour and the jitter layers wrapped around it.
    fn unwrap_noise(&self) -> (&AgentPolicy, Vec<f64>) {
        let mut jitters = Vec::new();
        let mut p = self;
        while let AgentPolicy::Noisy { inner, jitter_sd } = p {
            jitters.push(*jitter_sd);
            p = inner;
        }
        (p, jitters)
    }

    pub fn initial_choice(&self) -> ChoiceId {
        match self.unwrap_noise().0 {
            AgentPolicy::Stubborn { choice, .. } | AgentPolicy::Flexible { choice, .. } => *choice,
            AgentPolicy::Noisy { .. } => unreachable!("noise unwrapped"),
        }
    }
}

pub(crate) fn check_choice(c: ChoiceId) -> Result<(), SimError> {
    if (c as usize) < TARGET_COUNT {
        Ok(())
    } else {
        Err(SimError::InvalidPlan(format!("choice {c} outside 0-5")))
    }
}

/// What an agent sees of the swarm in one state tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub tick: u64,
    pub puck: Vec2,
}

/// Per-question running state of a policy.
#[derive(Debug, Clone)]
pub struct AgentBrain {
    policy: AgentPolicy,
    choice: ChoiceId,
    last_distance: Option<f64>,
    receding: u32,
    layout: TargetLayout,
}

impl AgentBrain {
    pub fn new(policy: AgentPolicy) -> Self {
        let choice = policy.initial_choice();
        AgentBrain {
            policy,
            choice,
            last_distance: None,
            receding: 0,
            layout: TargetLayout::hexagonal(),
        }
    }

    /// Reset for a new question, optionally with a question-specific answer.
    pub fn start_question(&mut self, answer: Option<ChoiceId>) {
        self.choice = answer.unwrap_or_else(|| self.policy.initial_choice());
        self.last_distance = None;
        self.receding = 0;
    }

    pub fn choice(&self) -> ChoiceId {
        self.choice
    }

    /// Where to put the magnet after observing a state tick.
    pub fn decide<R: Rng + ?Sized>(
        &mut self,
        obs: &Observation,
        params: &DynamicsParams,
        rng: &mut R,
    ) -> MagnetInput {
        let (base, jitters) = self.policy.unwrap_noise();
        let strength = match base {
            AgentPolicy::Stubborn { strength, .. } => *strength,
            AgentPolicy::Flexible {
                conviction,
                patience_ticks,
                ..
            } => {
                let (conviction, patience) = (*conviction, *patience_ticks);
                self.maybe_switch(obs, conviction, patience, rng);
                1.0
            }
            AgentPolicy::Noisy { .. } => unreachable!("noise unwrapped"),
        };
        let target = self
            .layout
            .target(self.choice)
            .expect("validated choice")
            .center;
        let dir = (target - obs.puck).unit();
        let mut pos = obs.puck + dir * (params.puck_radius + params.gap_for_strength(strength));
        for sd in jitters {
            if sd > 0.0 {
                let n = Normal::new(0.0, sd).expect("validated sd");
                pos = pos + Vec2::new(n.sample(rng), n.sample(rng));
            }
        }
        MagnetInput::placed(pos)
    }

    fn maybe_switch<R: Rng + ?Sized>(
        &mut self,
        obs: &Observation,
        conviction: f64,
        patience: u32,
        rng: &mut R,
    ) {
        let own = self
            .layout
            .target(self.choice)
            .expect("validated choice")
            .center;
        let d = obs.puck.distance(own);
        match self.last_distance {
            Some(prev) if d > prev => self.receding += 1,
            _ => self.receding = 0,
        }
        self.last_distance = Some(d);
        let heading = self.layout.nearest(obs.puck);
        if heading != self.choice && self.receding >= patience {
            // (0, 1]: conviction 0 always defects, conviction 1 never does
            let draw = 1.0 - rng.random::<f64>();
            if draw > conviction {
                self.choice = heading;
                self.receding = 0;
                self.last_distance = Some(
                    obs.puck
                        .distance(self.layout.target(heading).expect("nearest").center),
                );
            }
        }
    }
}
