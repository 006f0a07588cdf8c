//! Task definitions: world geometry, goals, and action bounds.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskId {
    PushToGoal,
    PushFollowCircle,
    CatchBall,
}

impl TaskId {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaskId::PushToGoal => "push-to-goal",
            TaskId::PushFollowCircle => "push-follow-circle",
            TaskId::CatchBall => "catch-ball",
        }
    }
}

/// Task goal descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Goal {
    /// Drive the object center to `position` within `tolerance` meters.
    Point { position: [f64; 2], tolerance: f64 },
    /// Track a point moving around a circle, one revolution per
    /// `period_steps`. `phase` is the start angle in radians.
    Circle {
        center: [f64; 2],
        radius: f64,
        period_steps: u32,
        #[serde(default)]
        phase: f64,
    },
    /// Catch: the success region is the plate itself.
    Plate,
}

impl Goal {
    /// Reference point at step `t` for a circle goal; the fixed target
    /// otherwise.
    pub fn reference_point(&self, t: u64) -> [f64; 2] {
        match self {
            Goal::Point { position, .. } => *position,
            Goal::Circle {
                center,
                radius,
                period_steps,
                phase,
            } => {
                let angle = phase
                    + std::f64::consts::TAU * (t as f64) / (*period_steps as f64);
                [
                    center[0] + radius * angle.cos(),
                    center[1] + radius * angle.sin(),
                ]
            }
            Goal::Plate => [0.0, 0.0],
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        match self {
            Goal::Point {
                position,
                tolerance,
            } => {
                if !position.iter().all(|v| v.is_finite()) {
                    return Err(Error::config(format!("{path}.position"), "must be finite"));
                }
                if !tolerance.is_finite() || *tolerance <= 0.0 {
                    return Err(Error::config(
                        format!("{path}.tolerance"),
                        format!("must be positive, got {tolerance}"),
                    ));
                }
            }
            Goal::Circle {
                center,
                radius,
                period_steps,
                phase,
            } => {
                if !center.iter().all(|v| v.is_finite()) || !phase.is_finite() {
                    return Err(Error::config(path, "circle goal must be finite"));
                }
                if !radius.is_finite() || *radius <= 0.0 {
                    return Err(Error::config(
                        format!("{path}.radius"),
                        format!("must be positive, got {radius}"),
                    ));
                }
                if *period_steps == 0 {
                    return Err(Error::config(
                        format!("{path}.period_steps"),
                        "must be at least 1",
                    ));
                }
            }
            Goal::Plate => {}
        }
        Ok(())
    }
}

/// One planar tool displacement in meters, the unit of control for every
/// task: the pusher tip for push tasks, the plate center for catch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Action {
    pub dx: f64,
    pub dy: f64,
}

impl Action {
    pub const ZERO: Self = Self { dx: 0.0, dy: 0.0 };

    pub fn new(dx: f64, dy: f64) -> Self {
        Self { dx, dy }
    }

    pub fn norm(&self) -> f64 {
        self.dx.hypot(self.dy)
    }
}

/// Symmetric per-axis action limits. An action is in bounds when both
/// components are finite and within their half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionBounds {
    pub dx: f64,
    pub dy: f64,
}

impl Default for ActionBounds {
    fn default() -> Self {
        Self { dx: 0.02, dy: 0.02 }
    }
}

impl ActionBounds {
    pub fn contains(&self, a: &Action) -> bool {
        a.dx.is_finite() && a.dy.is_finite() && a.dx.abs() <= self.dx && a.dy.abs() <= self.dy
    }

    /// Bounds error for candidate `index`, if any.
    pub fn check(&self, index: usize, a: &Action) -> Result<()> {
        if !(a.dx.is_finite() && a.dx.abs() <= self.dx) {
            return Err(Error::ActionBounds {
                index,
                axis: "dx",
                value: a.dx,
                limit: self.dx,
            });
        }
        if !(a.dy.is_finite() && a.dy.abs() <= self.dy) {
            return Err(Error::ActionBounds {
                index,
                axis: "dy",
                value: a.dy,
                limit: self.dy,
            });
        }
        Ok(())
    }

    /// Clamp into bounds. Samplers use this at construction time; the
    /// prediction layer never does.
    pub fn clamp(&self, a: Action) -> Action {
        Action {
            dx: a.dx.clamp(-self.dx, self.dx),
            dy: a.dy.clamp(-self.dy, self.dy),
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        if !(self.dx.is_finite() && self.dy.is_finite()) || self.dx < 0.0 || self.dy < 0.0 {
            return Err(Error::config(path, "bounds must be finite and nonnegative"));
        }
        if self.dx == 0.0 && self.dy == 0.0 {
            return Err(Error::config(path, "at least one axis must allow motion"));
        }
        Ok(())
    }
}

/// Static world parameters shared by prediction and execution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskWorld {
    pub task: TaskId,
    /// Object disc radius in meters, before context geometry scaling.
    pub disc_radius: f64,
    /// Catch plate radius in meters.
    pub plate_radius: f64,
    pub goal: Goal,
    /// Control period in seconds.
    pub dt: f64,
    /// Gravitational acceleration, positive downward. Configurable so tests
    /// can switch it off.
    pub gravity: f64,
    pub bounds: ActionBounds,
}

impl TaskWorld {
    pub fn validate(&self, path: &str) -> Result<()> {
        for (name, v, min_excl) in [
            ("disc_radius", self.disc_radius, true),
            ("plate_radius", self.plate_radius, true),
            ("dt", self.dt, true),
            ("gravity", self.gravity, false),
        ] {
            if !v.is_finite() || (min_excl && v <= 0.0) || (!min_excl && v < 0.0) {
                return Err(Error::config(
                    format!("{path}.{name}"),
                    format!("invalid value {v}"),
                ));
            }
        }
        self.goal.validate(&format!("{path}.goal"))?;
        self.bounds.validate(&format!("{path}.bounds"))?;
        match (self.task, &self.goal) {
            (TaskId::PushToGoal, Goal::Point { .. }) => Ok(()),
            (TaskId::PushFollowCircle, Goal::Circle { .. }) => Ok(()),
            (TaskId::CatchBall, Goal::Plate) => Ok(()),
            (task, goal) => Err(Error::config(
                format!("{path}.goal"),
                format!("goal {goal:?} does not fit task {task:?}"),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn circle_reference_advances_with_phase() {
        let g = Goal::Circle {
            center: [0.1, 0.0],
            radius: 0.2,
            period_steps: 100,
            phase: 0.0,
        };
        let p0 = g.reference_point(0);
        assert_relative_eq!(p0[0], 0.3, epsilon = 1e-12);
        let p25 = g.reference_point(25);
        assert_relative_eq!(p25[0], 0.1, epsilon = 1e-9);
        assert_relative_eq!(p25[1], 0.2, epsilon = 1e-9);
    }

    #[test]
    fn bounds_reject_nonfinite_and_oversized_components() {
        let b = ActionBounds { dx: 0.02, dy: 0.02 };
        assert!(b.contains(&Action::new(0.02, -0.02)), "boundary is inside");
        assert!(!b.contains(&Action::new(0.021, 0.0)));
        assert!(!b.contains(&Action::new(f64::NAN, 0.0)));
        assert!(b.check(3, &Action::new(0.0, 0.5)).is_err());
    }

    #[test]
    fn clamp_lands_exactly_on_the_boundary() {
        let b = ActionBounds { dx: 0.02, dy: 0.02 };
        let a = b.clamp(Action::new(1.0, -1.0));
        assert_eq!(a, Action::new(0.02, -0.02));
        assert!(b.contains(&a));
    }

    #[test]
    fn world_rejects_mismatched_goal() {
        let w = TaskWorld {
            task: TaskId::CatchBall,
            disc_radius: 0.05,
            plate_radius: 0.06,
            goal: Goal::Point {
                position: [0.0, 0.0],
                tolerance: 0.03,
            },
            dt: 0.02,
            gravity: 9.81,
            bounds: ActionBounds::default(),
        };
        assert!(w.validate("task").is_err());
    }
}
