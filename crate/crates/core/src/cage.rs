//! Declarative constraint regions evaluated against instance sets.
//!
//! A cage is configured as data, activated at a timestep into concrete
//! geometry, and then scored two ways: `evaluate` returns a graded cost
//! (mean hinge distance outside the region plus a spread penalty) and
//! `validate` a hard containment check. Keeping the geometry declarative
//! means a run's constraints are fully captured by its config file.

use crate::dris::Dris;
use crate::error::{Error, Result};
use crate::state::POSITION_AXES;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SPREAD_WEIGHT: f64 = 1.0;

fn default_alpha() -> f64 {
    DEFAULT_SPREAD_WEIGHT
}

/// Center motion for a geometric cage. Held fixed past the end of a lerp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum CenterPath {
    Static { point: [f64; 3] },
    Lerp {
        from: [f64; 3],
        to: [f64; 3],
        duration_steps: u32,
    },
}

impl CenterPath {
    fn at(&self, t: u64) -> [f64; 3] {
        match self {
            CenterPath::Static { point } => *point,
            CenterPath::Lerp {
                from,
                to,
                duration_steps,
            } => {
                let f = ((t as f64) / (*duration_steps as f64)).min(1.0);
                [
                    from[0] + f * (to[0] - from[0]),
                    from[1] + f * (to[1] - from[1]),
                    from[2] + f * (to[2] - from[2]),
                ]
            }
        }
    }

    fn validate(&self, path: &str) -> Result<()> {
        let finite = |p: &[f64; 3]| p.iter().all(|v| v.is_finite());
        match self {
            CenterPath::Static { point } if finite(point) => Ok(()),
            CenterPath::Lerp {
                from,
                to,
                duration_steps,
            } if finite(from) && finite(to) && *duration_steps >= 1 => Ok(()),
            _ => Err(Error::config(path, "center path must be finite with duration >= 1")),
        }
    }
}

/// Progress schedule mapping a timestep to an arc-length fraction in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Schedule {
    /// Linear from 0 at step 0 to 1 at `total_steps`, then held.
    Uniform { total_steps: u32 },
    /// Piecewise-linear through `(step, fraction)` points; held flat outside
    /// the covered range. Fractions must be monotone nondecreasing.
    Piecewise { points: Vec<(u64, f64)> },
}

impl Schedule {
    pub fn fraction(&self, t: u64) -> f64 {
        match self {
            Schedule::Uniform { total_steps } => {
                ((t as f64) / (*total_steps as f64)).min(1.0)
            }
            Schedule::Piecewise { points } => {
                let first = points.first().expect("validated nonempty");
                let last = points.last().expect("validated nonempty");
                if t <= first.0 {
                    return first.1;
                }
                if t >= last.0 {
                    return last.1;
                }
                let idx = points.partition_point(|(step, _)| *step <= t);
                let (t0, f0) = points[idx - 1];
                let (t1, f1) = points[idx];
                let span = (t1 - t0) as f64;
                f0 + (f1 - f0) * ((t - t0) as f64) / span
            }
        }
    }

    fn validate(&self, path: &str) -> Result<()> {
        match self {
            Schedule::Uniform { total_steps } => {
                if *total_steps == 0 {
                    return Err(Error::config(
                        format!("{path}.total_steps"),
                        "must be at least 1",
                    ));
                }
            }
            Schedule::Piecewise { points } => {
                if points.is_empty() {
                    return Err(Error::config(format!("{path}.points"), "must be nonempty"));
                }
                for window in points.windows(2) {
                    let ((t0, f0), (t1, f1)) = (window[0], window[1]);
                    if t1 <= t0 {
                        return Err(Error::config(
                            format!("{path}.points"),
                            format!("steps must strictly increase, got {t0} then {t1}"),
                        ));
                    }
                    if f1 < f0 {
                        return Err(Error::config(
                            format!("{path}.points"),
                            format!("fractions must be monotone nondecreasing, got {f0} then {f1}"),
                        ));
                    }
                }
                for (_, f) in points {
                    if !f.is_finite() || *f < 0.0 || *f > 1.0 {
                        return Err(Error::config(
                            format!("{path}.points"),
                            format!("fractions must lie in [0, 1], got {f}"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Declarative cage description as it appears in config files.
///
/// `plate-based` and `pixel-space` name constraint families from richer
/// perception stacks; they are reserved here and refuse to build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum CageConfig {
    Geometric {
        center: CenterPath,
        radius: f64,
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    Trajectory {
        waypoints: Vec<[f64; 3]>,
        tube_radius: f64,
        schedule: Schedule,
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    Composite { children: Vec<CageChild> },
    PlateBased {},
    PixelSpace {},
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CageChild {
    pub weight: f64,
    pub cage: CageConfig,
}

impl CageConfig {
    /// Validate and build the runtime cage.
    pub fn build(&self) -> Result<Cage> {
        self.build_at("cage")
    }

    fn build_at(&self, path: &str) -> Result<Cage> {
        match self {
            CageConfig::Geometric {
                center,
                radius,
                alpha,
            } => {
                center.validate(&format!("{path}.center"))?;
                check_radius(*radius, &format!("{path}.radius"))?;
                check_alpha(*alpha, &format!("{path}.alpha"))?;
                Ok(Cage::Geometric {
                    center: *center,
                    radius: *radius,
                    alpha: *alpha,
                })
            }
            CageConfig::Trajectory {
                waypoints,
                tube_radius,
                schedule,
                alpha,
            } => {
                if waypoints.len() < 2 {
                    return Err(Error::config(
                        format!("{path}.waypoints"),
                        "need at least two waypoints",
                    ));
                }
                if waypoints.iter().any(|w| !w.iter().all(|v| v.is_finite())) {
                    return Err(Error::config(
                        format!("{path}.waypoints"),
                        "waypoints must be finite",
                    ));
                }
                check_radius(*tube_radius, &format!("{path}.tube_radius"))?;
                check_alpha(*alpha, &format!("{path}.alpha"))?;
                schedule.validate(&format!("{path}.schedule"))?;
                // Cumulative arc length per waypoint, for fraction lookup.
                let mut cumulative = vec![0.0f64];
                for pair in waypoints.windows(2) {
                    let seg = dist3(&pair[0], &pair[1]);
                    cumulative.push(cumulative.last().unwrap() + seg);
                }
                Ok(Cage::Trajectory {
                    waypoints: waypoints.clone(),
                    cumulative,
                    tube_radius: *tube_radius,
                    schedule: schedule.clone(),
                    alpha: *alpha,
                })
            }
            CageConfig::Composite { children } => {
                if children.is_empty() {
                    return Err(Error::config(
                        format!("{path}.children"),
                        "composite cage needs at least one child",
                    ));
                }
                let mut built = Vec::with_capacity(children.len());
                for (i, child) in children.iter().enumerate() {
                    if !child.weight.is_finite() || child.weight < 0.0 {
                        return Err(Error::config(
                            format!("{path}.children[{i}].weight"),
                            format!("must be finite and nonnegative, got {}", child.weight),
                        ));
                    }
                    built.push((
                        child.weight,
                        child.cage.build_at(&format!("{path}.children[{i}]"))?,
                    ));
                }
                Ok(Cage::Composite { children: built })
            }
            CageConfig::PlateBased {} => Err(Error::config(
                format!("{path}.kind"),
                "`plate-based` is reserved and not implemented",
            )),
            CageConfig::PixelSpace {} => Err(Error::config(
                format!("{path}.kind"),
                "`pixel-space` is reserved and not implemented",
            )),
        }
    }
}

fn check_radius(r: f64, path: &str) -> Result<()> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::config(path, format!("must be positive, got {r}")));
    }
    Ok(())
}

fn check_alpha(a: f64, path: &str) -> Result<()> {
    if !a.is_finite() || a < 0.0 {
        return Err(Error::config(path, format!("must be nonnegative, got {a}")));
    }
    Ok(())
}

fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// A validated cage, ready to activate.
#[derive(Debug, Clone, PartialEq)]
pub enum Cage {
    Geometric {
        center: CenterPath,
        radius: f64,
        alpha: f64,
    },
    Trajectory {
        waypoints: Vec<[f64; 3]>,
        cumulative: Vec<f64>,
        tube_radius: f64,
        schedule: Schedule,
        alpha: f64,
    },
    Composite { children: Vec<(f64, Cage)> },
}

impl Cage {
    /// Activate the cage at timestep `t`. Returns a view; the cage itself is
    /// immutable, so concurrent activations at different timesteps are safe.
    pub fn update(&self, t: u64) -> ActiveCage {
        match self {
            Cage::Geometric {
                center,
                radius,
                alpha,
            } => ActiveCage::Ball {
                center: center.at(t),
                radius: *radius,
                alpha: *alpha,
            },
            Cage::Trajectory {
                waypoints,
                cumulative,
                tube_radius,
                schedule,
                alpha,
            } => {
                let f = schedule.fraction(t);
                ActiveCage::Ball {
                    center: point_at_fraction(waypoints, cumulative, f),
                    radius: *tube_radius,
                    alpha: *alpha,
                }
            }
            Cage::Composite { children } => ActiveCage::Composite {
                children: children.iter().map(|(w, c)| (*w, c.update(t))).collect(),
            },
        }
    }
}

/// Interpolate along the polyline at arc-length fraction `f`.
fn point_at_fraction(waypoints: &[[f64; 3]], cumulative: &[f64], f: f64) -> [f64; 3] {
    let total = *cumulative.last().unwrap();
    if total <= 0.0 {
        return waypoints[0];
    }
    let target = f.clamp(0.0, 1.0) * total;
    let idx = cumulative.partition_point(|&c| c <= target);
    if idx >= cumulative.len() {
        return *waypoints.last().unwrap();
    }
    let (c0, c1) = (cumulative[idx - 1], cumulative[idx]);
    let seg = c1 - c0;
    if seg <= 0.0 {
        return waypoints[idx - 1];
    }
    let u = (target - c0) / seg;
    let (a, b) = (waypoints[idx - 1], waypoints[idx]);
    [
        a[0] + u * (b[0] - a[0]),
        a[1] + u * (b[1] - a[1]),
        a[2] + u * (b[2] - a[2]),
    ]
}

/// Concrete cage geometry at one timestep.
#[derive(Debug, Clone, PartialEq)]
pub enum ActiveCage {
    Ball {
        center: [f64; 3],
        radius: f64,
        alpha: f64,
    },
    Composite { children: Vec<(f64, ActiveCage)> },
}

impl ActiveCage {
    /// Graded violation cost: mean hinge distance of instance positions
    /// outside the region plus `alpha` times the positional spread
    /// (square root of summed position variances). Zero only when every
    /// instance is inside and the set has no positional spread.
    pub fn evaluate(&self, d: &Dris) -> f64 {
        match self {
            ActiveCage::Ball {
                center,
                radius,
                alpha,
            } => {
                let m = d.len() as f64;
                let hinge_sum: f64 = d
                    .instances()
                    .iter()
                    .map(|inst| (dist3(&inst.state.position(), center) - radius).max(0.0))
                    .sum();
                let var = d.stats().variance;
                let spread: f64 = POSITION_AXES.iter().map(|&i| var[i]).sum::<f64>().sqrt();
                hinge_sum / m + alpha * spread
            }
            ActiveCage::Composite { children } => children
                .iter()
                .map(|(w, c)| w * c.evaluate(d))
                .sum(),
        }
    }

    /// Hard containment: true when every instance position lies inside the
    /// closed region (boundary counts as inside).
    pub fn validate(&self, d: &Dris) -> bool {
        match self {
            ActiveCage::Ball { center, radius, .. } => d
                .instances()
                .iter()
                .all(|inst| dist3(&inst.state.position(), center) <= *radius),
            ActiveCage::Composite { children } => {
                children.iter().all(|(_, c)| c.validate(d))
            }
        }
    }
}
