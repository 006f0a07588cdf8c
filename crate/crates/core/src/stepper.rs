//! Analytic one-step forward models.
//!
//! Ground-truth execution and batched prediction both call the functions in
//! this module, so the two can only differ through the state and context they
//! are given, never through the integrator.
//!
//! # Push model
//!
//! The pusher tip is a point swept along a straight segment each step; the
//! object is a disc of radius `disc_radius * geometry_scale`. While the tip
//! is in contact and advancing, the disc stays exactly tangent to it and the
//! contact angle `a` (measured from the sweep direction to the disc center)
//! relaxes toward head-on:
//!
//! ```text
//!     da/dxi = -(1 - kappa) * sin(a) / r        kappa = mu / (mu + beta * mass)
//! ```
//!
//! where `xi` is tip travel. The step applies the exact solution of this
//! flow, `tan(a/2) = tan(a0/2) * exp(-(1-kappa) * xi / r)`, so splitting an
//! action into arbitrarily many sub-actions composes to the same result up
//! to floating-point roundoff. A slippery contact (low `kappa`) lets the
//! disc slide toward dead-ahead quickly; a sticky one carries it sideways.
//! Heading follows the contact point as it slides around the disc, scaled by
//! `spin_gain * kappa`.

use crate::context::Context;
use crate::state::{wrap_angle, StateVector};
use crate::task::{Action, TaskWorld};
use serde::{Deserialize, Serialize};

/// Mass weight in the stick factor, 1/kg.
pub const CONTACT_BETA_PER_KG: f64 = 10.0;

/// Gain converting tangential contact slide into heading change.
pub const SPIN_GAIN: f64 = 0.5;

/// Stick factor `kappa` in (0, 1): rises with friction, falls with mass.
pub fn stick_factor(c: &Context) -> f64 {
    c.friction_coeff / (c.friction_coeff + CONTACT_BETA_PER_KG * c.mass_kg)
}

/// Available forward models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    /// Quasi-static disc pushing.
    AnalyticPush,
    /// Point-mass flight under gravity and quadratic drag.
    AnalyticBallistic,
    /// Straight-line extrapolation of current velocities; a deliberately
    /// crude stand-in that exercises backend swapping.
    ConstVelocity,
}

impl BackendKind {
    pub fn step(&self, s: &StateVector, u: &Action, c: &Context, world: &TaskWorld) -> StateVector {
        match self {
            BackendKind::AnalyticPush => push_step(s, u, c, world),
            BackendKind::AnalyticBallistic => ballistic_step(s, u, c, world),
            BackendKind::ConstVelocity => const_velocity_step(s, u, c, world),
        }
    }
}

/// One quasi-static push step. Pure; never fails; does not touch velocity
/// axes. The tip always moves by the full action, the disc moves only if the
/// swept segment reaches it.
pub fn push_step(s: &StateVector, u: &Action, c: &Context, world: &TaskWorld) -> StateVector {
    let r = world.disc_radius * c.geometry_scale;
    let kappa = stick_factor(c);
    let (p0x, p0y) = (s.rx, s.ry);
    let (p1x, p1y) = (s.rx + u.dx, s.ry + u.dy);

    let mut out = *s;
    out.rx = p1x;
    out.ry = p1y;

    let (mut ox, mut oy) = (s.x, s.y);
    let len = u.norm();

    // Resolve any initial overlap to tangency before the tip moves. This can
    // only arise from externally constructed states (pose noise, spawns);
    // the step itself always leaves the disc tangent or separated.
    let d0 = (ox - p0x).hypot(oy - p0y);
    if d0 < r {
        if d0 > 1e-12 {
            let scale = r / d0;
            ox = p0x + (ox - p0x) * scale;
            oy = p0y + (oy - p0y) * scale;
        } else if len > 0.0 {
            ox = p0x + r * u.dx / len;
            oy = p0y + r * u.dy / len;
        } else {
            ox = p0x + r;
        }
    }

    if len <= 0.0 {
        out.x = ox;
        out.y = oy;
        return out;
    }
    let (wx, wy) = (u.dx / len, u.dy / len);

    // Closest approach of the swept segment to the disc center.
    let (vx, vy) = (ox - p0x, oy - p0y);
    let along = vx * wx + vy * wy;
    let clamped = along.clamp(0.0, len);
    let (cx, cy) = (vx - clamped * wx, vy - clamped * wy);
    let dmin = cx.hypot(cy);

    if dmin < r {
        // First crossing of the disc boundary along the sweep.
        let disc = (along * along + r * r - (vx * vx + vy * vy)).max(0.0);
        let xi_e = (along - disc.sqrt()).clamp(0.0, len);
        let ell = len - xi_e;

        let (pex, pey) = (p0x + xi_e * wx, p0y + xi_e * wy);
        let (mut nx, mut ny) = (ox - pex, oy - pey);
        let dn = nx.hypot(ny);
        if dn > 0.0 {
            nx /= dn;
            ny /= dn;
        } else {
            nx = wx;
            ny = wy;
        }

        // Contact is unilateral: a tip that starts tangent or overlapping
        // with the disc center behind the sweep direction moves away and
        // cannot drag the disc with it.
        if wx * nx + wy * ny <= 0.0 {
            out.x = ox;
            out.y = oy;
            return out;
        }
        let alpha0 = (wx * ny - wy * nx).atan2(wx * nx + wy * ny);

        let one_minus_k = 1.0 - kappa;
        let (alpha1, dalpha) = if one_minus_k < 1e-12 {
            (alpha0, alpha0.sin() * ell * one_minus_k / r)
        } else {
            let lam = one_minus_k / r;
            let t0 = (alpha0 / 2.0).tan();
            let t1 = t0 * (-lam * ell).exp();
            // alpha0 - alpha1 via the atan difference identity; exp_m1 keeps
            // it accurate when lam * ell is tiny.
            let num = -t0 * (-lam * ell).exp_m1();
            let dalpha = 2.0 * (num / (1.0 + t0 * t1)).atan();
            (2.0 * t1.atan(), dalpha)
        };

        let (sa, ca) = alpha1.sin_cos();
        ox = p1x + r * (wx * ca - wy * sa);
        oy = p1y + r * (wx * sa + wy * ca);

        let dtheta = if one_minus_k < 1e-12 {
            SPIN_GAIN * kappa * alpha0.sin() * ell / r
        } else {
            SPIN_GAIN * kappa * dalpha / one_minus_k
        };
        out.heading = wrap_angle(out.heading + dtheta);
    }

    out.x = ox;
    out.y = oy;
    out
}

/// One flight step: semi-implicit Euler under gravity and quadratic drag
/// `a = -(drag/mass) * |v| * v`. Velocity updates first, position moves with
/// the new velocity. The plate follows the action.
pub fn ballistic_step(s: &StateVector, u: &Action, c: &Context, world: &TaskWorld) -> StateVector {
    let mut out = *s;
    out.rx += u.dx;
    out.ry += u.dy;

    let dt = world.dt;
    let k = c.drag_coeff / c.mass_kg;
    let speed = (s.vx * s.vx + s.vy * s.vy + s.vz * s.vz).sqrt();
    out.vx = s.vx + dt * (-k * speed * s.vx);
    out.vy = s.vy + dt * (-k * speed * s.vy);
    out.vz = s.vz + dt * (-world.gravity - k * speed * s.vz);
    out.x = s.x + dt * out.vx;
    out.y = s.y + dt * out.vy;
    out.z = s.z + dt * out.vz;
    out
}

/// Straight-line extrapolation; context-independent by design.
pub fn const_velocity_step(
    s: &StateVector,
    u: &Action,
    _c: &Context,
    world: &TaskWorld,
) -> StateVector {
    let mut out = *s;
    out.rx += u.dx;
    out.ry += u.dy;
    out.x = s.x + world.dt * s.vx;
    out.y = s.y + world.dt * s.vy;
    out.z = s.z + world.dt * s.vz;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::{ActionBounds, Goal, TaskId};
    use approx::assert_relative_eq;

    fn push_world() -> TaskWorld {
        TaskWorld {
            task: TaskId::PushToGoal,
            disc_radius: 0.05,
            plate_radius: 0.06,
            goal: Goal::Point {
                position: [0.2, 0.2],
                tolerance: 0.03,
            },
            dt: 0.02,
            gravity: 9.81,
            bounds: ActionBounds::default(),
        }
    }

    fn catch_world(gravity: f64) -> TaskWorld {
        TaskWorld {
            task: TaskId::CatchBall,
            disc_radius: 0.05,
            plate_radius: 0.06,
            goal: Goal::Plate,
            dt: 0.02,
            gravity,
            bounds: ActionBounds { dx: 0.05, dy: 0.05 },
        }
    }

    fn state_obj_tip(ox: f64, oy: f64, tx: f64, ty: f64) -> StateVector {
        let mut s = StateVector::zeros();
        s.x = ox;
        s.y = oy;
        s.rx = tx;
        s.ry = ty;
        s
    }

    #[test]
    fn push_far_from_object_leaves_it_unchanged() {
        let w = push_world();
        let c = Context::default();
        let s = state_obj_tip(0.3, 0.3, 0.0, 0.0);
        let out = push_step(&s, &Action::new(0.02, 0.01), &c, &w);
        assert_eq!((out.x, out.y, out.heading), (0.3, 0.3, 0.0));
        assert_eq!((out.rx, out.ry), (0.02, 0.01));
    }

    #[test]
    fn zero_action_with_no_contact_is_identity() {
        let w = push_world();
        let c = Context::default();
        let s = state_obj_tip(0.1, 0.0, 0.0, 0.0);
        let out = push_step(&s, &Action::ZERO, &c, &w);
        assert_eq!(out, s);
    }

    #[test]
    fn head_on_push_resolves_full_penetration_and_ends_tangent() {
        let w = push_world();
        // Sticky limit: enormous friction.
        let c = Context {
            friction_coeff: 1e9,
            ..Context::default()
        };
        // Tip 0.06 behind the disc center, pushing straight at it by 0.02:
        // contact begins after 0.01 of travel, the disc moves the remaining
        // 0.01 and ends tangent to the tip.
        let s = state_obj_tip(0.06, 0.0, 0.0, 0.0);
        let out = push_step(&s, &Action::new(0.02, 0.0), &c, &w);
        assert_relative_eq!(out.x, 0.07, epsilon = 1e-12);
        assert_relative_eq!(out.y, 0.0, epsilon = 1e-15);
        let gap = (out.x - out.rx).hypot(out.y - out.ry);
        assert_relative_eq!(gap, 0.05, epsilon = 1e-12, max_relative = 1e-12);
        assert_eq!(out.heading, 0.0, "head-on contact must not spin the disc");
    }

    #[test]
    fn head_on_displacement_is_kappa_independent() {
        let w = push_world();
        let s = state_obj_tip(0.06, 0.0, 0.0, 0.0);
        let a = Action::new(0.02, 0.0);
        let slippery = push_step(
            &s,
            &a,
            &Context {
                friction_coeff: 0.05,
                ..Context::default()
            },
            &w,
        );
        let sticky = push_step(
            &s,
            &a,
            &Context {
                friction_coeff: 50.0,
                ..Context::default()
            },
            &w,
        );
        assert_relative_eq!(slippery.x, sticky.x, epsilon = 1e-12);
        assert_relative_eq!(slippery.y, sticky.y, epsilon = 1e-12);
    }

    #[test]
    fn oblique_contact_is_friction_sensitive() {
        let w = push_world();
        let s = state_obj_tip(0.05, 0.03, 0.0, 0.0);
        let a = Action::new(0.04, 0.0);
        let slippery = push_step(
            &s,
            &a,
            &Context {
                friction_coeff: 0.05,
                ..Context::default()
            },
            &w,
        );
        let sticky = push_step(
            &s,
            &a,
            &Context {
                friction_coeff: 20.0,
                ..Context::default()
            },
            &w,
        );
        let lateral_gap = (slippery.y - sticky.y).abs();
        assert!(
            lateral_gap > 1e-3,
            "oblique pushes must respond to friction, lateral gap {lateral_gap}"
        );
        // Both still end tangent to the tip.
        for out in [&slippery, &sticky] {
            let gap = (out.x - out.rx).hypot(out.y - out.ry);
            assert_relative_eq!(gap, 0.05, epsilon = 1e-12, max_relative = 1e-10);
        }
    }

    #[test]
    fn mirrored_contacts_spin_opposite_ways() {
        let w = push_world();
        let c = Context::default();
        let a = Action::new(0.04, 0.0);
        let left = push_step(&state_obj_tip(0.05, 0.02, 0.0, 0.0), &a, &c, &w);
        let right = push_step(&state_obj_tip(0.05, -0.02, 0.0, 0.0), &a, &c, &w);
        assert!(left.heading != 0.0, "oblique contact should change heading");
        assert_relative_eq!(left.heading, -right.heading, epsilon = 1e-12);
        assert_relative_eq!(left.y, -right.y, epsilon = 1e-12);
    }

    #[test]
    fn subdividing_an_action_composes_to_the_same_push() {
        let w = push_world();
        // A spread of contact geometries, stick factors, and approach angles,
        // including grazing passes and starts already in contact.
        let cases: Vec<(StateVector, Action, f64)> = vec![
            (state_obj_tip(0.06, 0.0, 0.0, 0.0), Action::new(0.02, 0.0), 0.5),
            (state_obj_tip(0.05, 0.03, 0.0, 0.0), Action::new(0.04, 0.0), 0.2),
            (state_obj_tip(0.05, 0.045, 0.0, 0.0), Action::new(0.06, 0.0), 1.0),
            (state_obj_tip(0.04, -0.028, 0.0, 0.0), Action::new(0.05, 0.015), 3.0),
            (state_obj_tip(0.03, 0.01, 0.0, 0.0), Action::new(0.03, -0.01), 0.8),
            (state_obj_tip(0.02, 0.0, 0.0, 0.0), Action::new(0.025, 0.02), 0.05),
        ];
        for (s, a, friction) in cases {
            let c = Context {
                friction_coeff: friction,
                ..Context::default()
            };
            let single = push_step(&s, &a, &c, &w);
            let sub = Action::new(a.dx / 100.0, a.dy / 100.0);
            let mut fine = s;
            for _ in 0..100 {
                fine = push_step(&fine, &sub, &c, &w);
            }
            let err = (single.x - fine.x).hypot(single.y - fine.y);
            assert!(
                err < 1e-6,
                "substep refinement drifted by {err} m for start {:?} action {:?}",
                s.position(),
                a
            );
            assert!(
                (single.heading - fine.heading).abs() < 1e-6,
                "heading drifted {} rad",
                (single.heading - fine.heading).abs()
            );
        }
    }

    #[test]
    fn initial_overlap_is_projected_to_tangency() {
        let w = push_world();
        let c = Context::default();
        let s = state_obj_tip(0.02, 0.0, 0.0, 0.0);
        let out = push_step(&s, &Action::ZERO, &c, &w);
        let gap = (out.x - out.rx).hypot(out.y - out.ry);
        assert_relative_eq!(gap, 0.05, epsilon = 1e-12);
        assert_eq!(out.y, 0.0, "projection is radial");
    }

    #[test]
    fn geometry_scale_changes_the_contact_radius() {
        let w = push_world();
        let small = Context {
            geometry_scale: 0.5,
            ..Context::default()
        };
        let s = state_obj_tip(0.04, 0.0, 0.0, 0.0);
        // With scale 0.5 the effective radius is 0.025, so a 0.01 push never
        // reaches the disc.
        let out = push_step(&s, &Action::new(0.01, 0.0), &small, &w);
        assert_eq!((out.x, out.y), (0.04, 0.0));
    }

    #[test]
    fn push_never_touches_velocity_axes() {
        let w = push_world();
        let c = Context::default();
        let mut s = state_obj_tip(0.055, 0.01, 0.0, 0.0);
        s.vx = 0.3;
        s.omega = -0.2;
        s.vz = 1.0;
        let out = push_step(&s, &Action::new(0.02, 0.0), &c, &w);
        assert_eq!(
            (out.vx, out.vy, out.omega, out.z, out.vz),
            (0.3, 0.0, -0.2, 0.0, 1.0)
        );
    }

    #[test]
    fn ballistic_matches_semi_implicit_closed_form_without_drag() {
        let w = catch_world(9.81);
        let c = Context {
            drag_coeff: 0.0,
            ..Context::default()
        };
        let mut s = StateVector::zeros();
        s.vx = 1.0;
        s.vz = 1.0;
        let n = 10;
        let mut cur = s;
        for _ in 0..n {
            cur = ballistic_step(&cur, &Action::ZERO, &c, &w);
        }
        let t = n as f64 * w.dt;
        // Semi-implicit Euler without drag integrates exactly to
        // z = vz*t - g/2 * (t^2 + t*dt).
        let z_exact = s.vz * t - 0.5 * w.gravity * (t * t + t * w.dt);
        assert_relative_eq!(cur.z, z_exact, epsilon = 1e-12);
        assert_relative_eq!(cur.x, 1.0 * t, epsilon = 1e-12);
        // And stays within the coarse analytic envelope of the ideal parabola.
        let z_ideal = s.vz * t - 0.5 * w.gravity * t * t;
        assert!((cur.z - z_ideal).abs() <= 2.0 * w.gravity * w.dt * t);
    }

    #[test]
    fn zero_gravity_zero_velocity_is_a_fixed_point() {
        let w = catch_world(0.0);
        let c = Context::default();
        let s = StateVector::zeros();
        let out = ballistic_step(&s, &Action::ZERO, &c, &w);
        assert_eq!(out, s);
    }

    #[test]
    fn heavy_mass_approaches_the_drag_free_parabola() {
        let w = catch_world(9.81);
        let heavy = Context {
            mass_kg: 1e6,
            ..Context::default()
        };
        let free = Context {
            drag_coeff: 0.0,
            ..Context::default()
        };
        let mut s = StateVector::zeros();
        s.vx = 2.0;
        s.vz = 1.5;
        let (mut a, mut b) = (s, s);
        for _ in 0..10 {
            a = ballistic_step(&a, &Action::ZERO, &heavy, &w);
            b = ballistic_step(&b, &Action::ZERO, &free, &w);
        }
        let err = ((a.x - b.x).powi(2) + (a.z - b.z).powi(2)).sqrt();
        assert!(err < 1e-3, "heavy-mass flight should shed drag, err {err}");
    }

    #[test]
    fn drag_slows_the_ball_down() {
        let w = catch_world(9.81);
        let draggy = Context {
            drag_coeff: 0.05,
            ..Context::default()
        };
        let free = Context {
            drag_coeff: 0.0,
            ..Context::default()
        };
        let mut s = StateVector::zeros();
        s.vx = 3.0;
        let a = ballistic_step(&s, &Action::ZERO, &draggy, &w);
        let b = ballistic_step(&s, &Action::ZERO, &free, &w);
        assert!(a.vx < b.vx);
    }

    #[test]
    fn const_velocity_ignores_context_entirely() {
        let w = push_world();
        let mut s = StateVector::zeros();
        s.vx = 0.5;
        s.vy = -0.25;
        let exotic = Context {
            mass_kg: 9.0,
            friction_coeff: 0.001,
            geometry_scale: 3.0,
            drag_coeff: 5.0,
        };
        let a = const_velocity_step(&s, &Action::new(0.01, 0.0), &exotic, &w);
        let b = const_velocity_step(&s, &Action::new(0.01, 0.0), &Context::default(), &w);
        assert_eq!(a, b);
        assert_relative_eq!(a.x, 0.5 * w.dt, epsilon = 1e-15);
    }
}
