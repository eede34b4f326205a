use super::geometry::Vec2;
use serde::{Deserialize, Serialize};

/// Index of an answer target (0..6), matching the question's choice order.
pub type ChoiceId = u8;

pub const TARGET_COUNT: usize = 6;
pub const TARGET_RING_RADIUS: f64 = 0.85;
pub const CAPTURE_RADIUS: f64 = 0.12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub choice_id: ChoiceId,
    pub center: Vec2,
    pub capture_radius: f64,
}

impl Target {
    pub fn captures(&self, p: Vec2) -> bool {
        p.distance(self.center) <= self.capture_radius
    }
}

/// Six answer targets on a hexagon, the first at the top and the rest
/// counter-clockwise at 60° steps.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetLayout {
    targets: [Target; TARGET_COUNT],
}

impl TargetLayout {
    pub fn hexagonal() -> Self {
        // Built from sqrt rather than sin/cos so the centres are identical on
        // every platform, and opposite targets are exact negations.
        let r = TARGET_RING_RADIUS;
        let half = r * 0.5;
        let side = r * (3.0f64).sqrt() * 0.5;
        let upper = [
            Vec2::new(0.0, r),
            Vec2::new(-side, half),
            Vec2::new(-side, -half),
        ];
        let mut targets = [Target {
            choice_id: 0,
            center: Vec2::ZERO,
            capture_radius: CAPTURE_RADIUS,
        }; TARGET_COUNT];
        for (i, c) in upper.iter().enumerate() {
            targets[i] = Target {
                choice_id: i as ChoiceId,
                center: *c,
                capture_radius: CAPTURE_RADIUS,
            };
            targets[i + 3] = Target {
                choice_id: (i + 3) as ChoiceId,
                center: -*c,
                capture_radius: CAPTURE_RADIUS,
            };
        }
        TargetLayout { targets }
    }

    pub fn targets(&self) -> &[Target] {
        &self.targets
    }

    pub fn target(&self, choice: ChoiceId) -> Option<&Target> {
        self.targets.get(choice as usize)
    }

    /// The target whose capture disk contains `p`, if any. Capture disks do
    /// not overlap, so at most one matches.
    pub fn capturing(&self, p: Vec2) -> Option<ChoiceId> {
        self.targets
            .iter()
            .find(|t| t.captures(p))
            .map(|t| t.choice_id)
    }

    /// Target centre closest to `p`; ties go to the lower choice id.
    pub fn nearest(&self, p: Vec2) -> ChoiceId {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, t) in self.targets.iter().enumerate() {
            let d = p.distance(t.center);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best as ChoiceId
    }
}

impl Default for TargetLayout {
    fn default() -> Self {
        Self::hexagonal()
    }
}
