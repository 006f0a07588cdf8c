//! Fixed-layout task state.

use serde::{Deserialize, Serialize};

/// Number of scalar axes in a [`StateVector`].
pub const AXES: usize = 10;

/// Axis index of the heading; the only axis with circular statistics.
pub const HEADING_AXIS: usize = 2;

/// Axis indices holding a position in meters (x, y, altitude).
pub const POSITION_AXES: [usize; 3] = [0, 1, 6];

/// One task state. Every task uses the same layout and leaves the axes it
/// does not need at zero.
///
/// Push tasks: `x, y, heading` is the disc pose and `rx, ry` the pusher tip.
/// Catch: `x, y, z` is the ball position, `vx, vy, vz` its velocity, and
/// `rx, ry` the plate center. `rx, ry` always belong to the robot tool and
/// are carried inside the state so forward models are total functions of
/// (state, action, context).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 10]", from = "[f64; 10]")]
pub struct StateVector {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
    pub z: f64,
    pub vz: f64,
    pub rx: f64,
    pub ry: f64,
}

impl StateVector {
    pub fn zeros() -> Self {
        Self::from([0.0; AXES])
    }

    pub fn to_array(self) -> [f64; AXES] {
        self.into()
    }

    /// Object position (x, y, altitude). Planar tasks keep altitude at zero.
    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn axis(&self, i: usize) -> f64 {
        self.to_array()[i]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

impl From<[f64; AXES]> for StateVector {
    fn from(a: [f64; AXES]) -> Self {
        Self {
            x: a[0],
            y: a[1],
            heading: a[2],
            vx: a[3],
            vy: a[4],
            omega: a[5],
            z: a[6],
            vz: a[7],
            rx: a[8],
            ry: a[9],
        }
    }
}

impl From<StateVector> for [f64; AXES] {
    fn from(s: StateVector) -> Self {
        [s.x, s.y, s.heading, s.vx, s.vy, s.omega, s.z, s.vz, s.rx, s.ry]
    }
}

/// Wrap an angle into the half-open interval (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(std::f64::consts::TAU);
    if r > std::f64::consts::PI {
        r - std::f64::consts::TAU
    } else {
        r
    }
}
