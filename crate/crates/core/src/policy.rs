//! Scripted proportional controllers, one per task.
//!
//! Policies are deterministic functions of (mean state, timestep, world);
//! exploration noise is added by the sampler that wraps them, never here.
//! Returned actions are always within the world's bounds.

use crate::error::{Error, Result};
use crate::state::{wrap_angle, StateVector};
use crate::task::{Action, Goal, TaskId, TaskWorld};
use serde::{Deserialize, Serialize};

/// Which controller to run. Must match the configured task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyId {
    PushToGoal,
    PushFollowCircle,
    CatchBall,
}

impl PolicyId {
    pub fn for_task(task: TaskId) -> Self {
        match task {
            TaskId::PushToGoal => PolicyId::PushToGoal,
            TaskId::PushFollowCircle => PolicyId::PushFollowCircle,
            TaskId::CatchBall => PolicyId::CatchBall,
        }
    }

    pub fn validate(&self, task: TaskId, path: &str) -> Result<()> {
        if *self == Self::for_task(task) {
            Ok(())
        } else {
            Err(Error::config(
                path,
                format!("policy {self:?} does not fit task {task:?}"),
            ))
        }
    }
}

/// Gains for the pushing controller shared by both push tasks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushGains {
    /// Clearance beyond the contact radius kept while circling the object.
    pub standoff: f64,
    /// Angular gain while circling, per radian of bearing error.
    pub orbit_gain: f64,
    /// Radial gain pulling the tool onto the circling ring.
    pub radial_gain: f64,
    /// Target penetration past tangency while pushing, in meters.
    pub bite: f64,
    /// Maximum advance along the goal axis per step while pushing.
    pub advance: f64,
    /// Fraction of the tool's lateral offset corrected per step.
    pub steer_gain: f64,
    /// Lateral offset from the push axis that still admits contact.
    pub steer_band: f64,
    /// Lateral offset at which the advance throttles to zero.
    pub steer_soft: f64,
    /// Maximum turn of the push axis toward the goal bearing, radians per
    /// step. Caps the path curvature demanded of the object, which damps
    /// the outer pursuit loop.
    pub turn_rate: f64,
    /// Reference lookahead in steps for moving goals.
    pub lead_steps: u64,
    /// Stop when the object is within this fraction of the goal tolerance.
    pub hold_frac: f64,
}

impl Default for PushGains {
    fn default() -> Self {
        Self {
            standoff: 0.05,
            orbit_gain: 1.2,
            radial_gain: 0.8,
            bite: 0.008,
            advance: 0.018,
            steer_gain: 0.8,
            steer_band: 0.035,
            steer_soft: 0.015,
            turn_rate: 0.05,
            lead_steps: 8,
            hold_frac: 0.5,
        }
    }
}

/// One scripted controller bound to a task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    Push { gains: PushGains, track: bool },
    Catch { gain: f64 },
}

impl Policy {
    pub fn new(id: PolicyId) -> Self {
        match id {
            PolicyId::PushToGoal => Policy::Push {
                gains: PushGains::default(),
                track: false,
            },
            PolicyId::PushFollowCircle => Policy::Push {
                gains: PushGains::default(),
                track: true,
            },
            PolicyId::CatchBall => Policy::Catch { gain: 1.0 },
        }
    }

    /// Compute the action for the given mean state at timestep `t`.
    pub fn act(&self, mean: &StateVector, t: u64, world: &TaskWorld) -> Action {
        let raw = match self {
            Policy::Push { gains, track } => push_act(mean, t, world, gains, *track),
            Policy::Catch { gain } => catch_act(mean, world, *gain),
        };
        world.bounds.clamp(raw)
    }
}

/// Pushing controller. Two regimes: circle around the object to get behind
/// it relative to the goal direction, then plow it toward the goal. While
/// plowing, the advance and the lateral trim are decoupled: the trim is a
/// bounded fraction of the offset per step, and the advance throttles to
/// zero as the offset grows, so a misaligned tip realigns instead of
/// shoving the object sideways.
fn push_act(mean: &StateVector, t: u64, world: &TaskWorld, g: &PushGains, track: bool) -> Action {
    let (ox, oy) = (mean.x, mean.y);
    let (px, py) = (mean.rx, mean.ry);
    let (goal, tolerance) = match &world.goal {
        Goal::Point { position, tolerance } => (*position, *tolerance),
        Goal::Circle { .. } => {
            let lead = if track { g.lead_steps } else { 0 };
            (world.goal.reference_point(t + lead), 0.0)
        }
        Goal::Plate => return Action::ZERO,
    };

    let (gx, gy) = (goal[0] - ox, goal[1] - oy);
    let goal_dist = (gx * gx + gy * gy).sqrt();
    if !track && goal_dist <= tolerance * g.hold_frac {
        return Action::ZERO;
    }
    if goal_dist < 1e-9 {
        return Action::ZERO;
    }
    let (dx, dy) = (gx / goal_dist, gy / goal_dist);

    let (tx, ty) = (ox - px, oy - py);
    let tool_dist = (tx * tx + ty * ty).sqrt();
    let ring = world.disc_radius + g.standoff;
    if tool_dist < 1e-9 {
        // Tool exactly at the object center; step away opposite the goal.
        let cap = world.bounds.dx.min(world.bounds.dy);
        return Action::new(-dx * cap, -dy * cap);
    }

    // Tip coordinates in the push frame: `behind` along the goal axis away
    // from the goal, `lat` across it.
    let (u, v) = (px - ox, py - oy);
    let behind = -(u * dx + v * dy);
    let lat = -u * dy + v * dx;

    if behind > 0.0 && lat.abs() <= g.steer_band && tool_dist <= ring + g.standoff {
        // Plow along a rate-limited axis: the current tip-to-center
        // direction turned toward the goal bearing by at most `turn_rate`.
        // Trim the tip onto that axis and advance as alignment allows.
        let axis = (-v).atan2(-u);
        let turn = wrap_angle(dy.atan2(dx) - axis).clamp(-g.turn_rate, g.turn_rate);
        let (adx, ady) = ((axis + turn).cos(), (axis + turn).sin());
        let a_lat = -u * ady + v * adx;
        let depth = world.disc_radius - g.bite;
        let a_behind = -(u * adx + v * ady);
        let along = g.advance * (1.0 - a_lat.abs() / g.steer_soft).max(0.0) + (a_behind - depth);
        let across = -g.steer_gain * a_lat;
        Action::new(along * adx - across * ady, along * ady + across * adx)
    } else {
        // Circle: move along the ring toward the spot behind the object.
        let (rx_hat, ry_hat) = (-tx / tool_dist, -ty / tool_dist);
        let bearing = ry_hat.atan2(rx_hat);
        let want = (-dy).atan2(-dx);
        let err = wrap_angle(want - bearing);
        let radial = g.radial_gain * (ring - tool_dist);
        let tangential = g.orbit_gain * err * ring;
        // rx_hat points outward from the object; its left perpendicular
        // advances the bearing counterclockwise.
        Action::new(
            radial * rx_hat - tangential * ry_hat,
            radial * ry_hat + tangential * rx_hat,
        )
    }
}

/// Catching controller: predict the drag-free landing point of the ball and
/// drive the plate toward it.
fn catch_act(mean: &StateVector, world: &TaskWorld, gain: f64) -> Action {
    let target = drag_free_landing(mean, world.gravity);
    Action::new(gain * (target[0] - mean.rx), gain * (target[1] - mean.ry))
}

/// Horizontal landing point of a ballistic state ignoring drag. A grounded
/// or gravity-free state lands where it is.
pub fn drag_free_landing(s: &StateVector, gravity: f64) -> [f64; 2] {
    if s.z <= 0.0 || gravity <= 0.0 {
        return [s.x, s.y];
    }
    let disc = s.vz * s.vz + 2.0 * gravity * s.z;
    let t_land = (s.vz + disc.sqrt()) / gravity;
    [s.x + s.vx * t_land, s.y + s.vy * t_land]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::ActionBounds;
    use approx::assert_relative_eq;

    fn push_world() -> TaskWorld {
        TaskWorld {
            task: TaskId::PushToGoal,
            disc_radius: 0.06,
            plate_radius: 0.1,
            goal: Goal::Point {
                position: [0.5, 0.0],
                tolerance: 0.03,
            },
            dt: 0.02,
            gravity: 9.81,
            bounds: ActionBounds::default(),
        }
    }

    fn catch_world() -> TaskWorld {
        TaskWorld {
            task: TaskId::CatchBall,
            disc_radius: 0.06,
            plate_radius: 0.1,
            goal: Goal::Plate,
            dt: 0.02,
            gravity: 9.81,
            bounds: ActionBounds::default(),
        }
    }

    #[test]
    fn policy_output_is_always_in_bounds() {
        let w = push_world();
        let p = Policy::new(PolicyId::PushToGoal);
        let mut s = StateVector::zeros();
        s.x = -3.0;
        s.y = 2.0;
        s.rx = 4.0;
        s.ry = -4.0;
        let a = p.act(&s, 0, &w);
        assert!(w.bounds.contains(&a));
    }

    #[test]
    fn aligned_tool_pushes_toward_the_goal() {
        let w = push_world();
        let p = Policy::new(PolicyId::PushToGoal);
        let mut s = StateVector::zeros();
        s.rx = -0.07;
        let a = p.act(&s, 0, &w);
        assert!(a.dx > 0.0, "tool behind the object advances on the goal");
        assert_relative_eq!(a.dy, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn misplaced_tool_circles_instead_of_plowing_through() {
        let w = push_world();
        let p = Policy::new(PolicyId::PushToGoal);
        // Tool between object and goal: pushing would move the object away.
        let mut s = StateVector::zeros();
        s.rx = 0.11;
        let a = p.act(&s, 0, &w);
        // The step must be mostly tangential, not a straight plow backward.
        assert!(a.dy.abs() > a.dx.abs() * 0.2);
        // And it must not cut into the disc.
        let (nx, ny) = (s.rx + a.dx, s.ry + a.dy);
        assert!((nx * nx + ny * ny).sqrt() > w.disc_radius);
    }

    #[test]
    fn object_inside_tolerance_holds_still() {
        let w = push_world();
        let p = Policy::new(PolicyId::PushToGoal);
        let mut s = StateVector::zeros();
        s.x = 0.5;
        s.y = 0.01;
        s.rx = 0.4;
        assert_eq!(p.act(&s, 0, &w), Action::ZERO);
    }

    #[test]
    fn drag_free_landing_matches_hand_computation() {
        let mut s = StateVector::zeros();
        s.z = 0.8;
        s.vx = 0.3;
        s.vy = -0.2;
        // From rest height h the fall time is sqrt(2 h / g).
        let t = (2.0 * 0.8f64 / 9.81).sqrt();
        let p = drag_free_landing(&s, 9.81);
        assert_relative_eq!(p[0], 0.3 * t, epsilon = 1e-12);
        assert_relative_eq!(p[1], -0.2 * t, epsilon = 1e-12);
    }

    #[test]
    fn plate_chases_the_predicted_landing_point() {
        let w = catch_world();
        let p = Policy::new(PolicyId::CatchBall);
        let mut s = StateVector::zeros();
        s.x = 0.2;
        s.z = 0.5;
        s.rx = -0.1;
        let a = p.act(&s, 0, &w);
        assert!(a.dx > 0.0, "plate moves toward the ball's landing side");
        assert!(w.bounds.contains(&a));
    }

    #[test]
    fn policy_id_must_fit_the_task() {
        assert!(PolicyId::CatchBall.validate(TaskId::PushToGoal, "p").is_err());
        assert!(PolicyId::PushToGoal.validate(TaskId::PushToGoal, "p").is_ok());
    }
}
