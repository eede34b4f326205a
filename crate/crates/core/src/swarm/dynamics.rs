use super::geometry::Vec2;
use super::state::SwarmState;
use super::SwarmError;
use serde::{Deserialize, Serialize};

/// Integration and consensus parameters for one question.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsParams {
    /// Seconds per tick.
    pub tick_dt: f64,
    /// Puck speed under full unanimous pull, arena units per second.
    pub v_max: f64,
    /// Gap at or below which a magnet pulls at full strength.
    pub engage_gap: f64,
    /// Gap at or beyond which a magnet stops pulling.
    pub disengage_gap: f64,
    pub puck_radius: f64,
    /// Consecutive ticks the puck must stay in one capture disk.
    pub dwell_required: u32,
    pub deliberation_limit: u32,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        DynamicsParams {
            tick_dt: 0.05,
            v_max: 0.25,
            engage_gap: 0.02,
            disengage_gap: 0.30,
            puck_radius: 0.10,
            dwell_required: 20,
            deliberation_limit: 1200,
        }
    }
}

impl DynamicsParams {
    pub fn validate(&self) -> Result<(), SwarmError> {
        let positive = [
            ("tick_dt", self.tick_dt),
            ("v_max", self.v_max),
            ("engage_gap", self.engage_gap),
            ("disengage_gap", self.disengage_gap),
            ("puck_radius", self.puck_radius),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SwarmError::InvalidParams(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.dwell_required == 0 || self.deliberation_limit == 0 {
            return Err(SwarmError::InvalidParams(
                "dwell_required and deliberation_limit must be positive".into(),
            ));
        }
        if self.engage_gap >= self.disengage_gap {
            return Err(SwarmError::InvalidParams(format!(
                "engage_gap {} must be below disengage_gap {}",
                self.engage_gap, self.disengage_gap
            )));
        }
        Ok(())
    }

    /// Simulated milliseconds per tick.
    pub fn tick_ms(&self) -> f64 {
        self.tick_dt * 1000.0
    }

    /// Simulated deliberation budget in milliseconds.
    pub fn deliberation_ms(&self) -> u64 {
        (self.deliberation_limit as f64 * self.tick_ms()).round() as u64
    }

    pub fn elapsed_ms(&self, ticks: u64) -> u64 {
        (ticks as f64 * self.tick_ms()).round() as u64
    }

    /// Gap that yields a given pull strength; inverse of [`pull_strength`]
    /// on the interpolation band. Full strength sits halfway inside the
    /// engage gap so rounding can never push it onto the band.
    pub fn gap_for_strength(&self, strength: f64) -> f64 {
        let s = strength.clamp(0.0, 1.0);
        if s >= 1.0 {
            self.engage_gap * 0.5
        } else {
            self.engage_gap + (1.0 - s) * (self.disengage_gap - self.engage_gap)
        }
    }
}

/// Conviction of a magnet: 1 when touching the puck, fading linearly to 0 at
/// the disengage gap.
pub fn pull_strength(
    magnet_pos: Vec2,
    puck_pos: Vec2,
    puck_radius: f64,
    params: &DynamicsParams,
) -> f64 {
    let gap = (magnet_pos.distance(puck_pos) - puck_radius).max(0.0);
    if gap <= params.engage_gap {
        1.0
    } else if gap >= params.disengage_gap {
        0.0
    } else {
        (params.disengage_gap - gap) / (params.disengage_gap - params.engage_gap)
    }
}

/// Force law hook. The default is linear superposition of distance-attenuated
/// unit pulls, normalised by the number of registered agents.
pub trait DynamicsPolicy: Send + Sync {
    fn net_pull(&self, state: &SwarmState, params: &DynamicsParams) -> Result<Vec2, SwarmError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LinearSuperposition;

impl DynamicsPolicy for LinearSuperposition {
    fn net_pull(&self, state: &SwarmState, params: &DynamicsParams) -> Result<Vec2, SwarmError> {
        let n = state.magnets().len();
        if n == 0 {
            return Err(SwarmError::EmptySwarm);
        }
        let puck = state.puck_pos();
        let mut sum = Vec2::ZERO;
        // BTreeMap iteration order keeps the floating point sum reproducible.
        for input in state.magnets().values() {
            if let Some(pos) = input.position() {
                let s = pull_strength(pos, puck, state.puck_radius(), params);
                sum = sum + (pos - puck).unit() * s;
            }
        }
        Ok(sum * (1.0 / n as f64))
    }
}
