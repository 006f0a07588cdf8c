//! Randomized instance sets: the uncertainty representation consumed by
//! prediction, constraints, and the solver.
//!
//! A set holds `m` (state, context) pairs plus a shared timestep. Instead of
//! a single point estimate, every downstream consumer sees the whole set, so
//! candidate actions are judged by how they behave across pose and parameter
//! hypotheses at once.

use crate::context::Context;
use crate::error::{Error, Result};
use crate::state::{wrap_angle, StateVector, AXES, HEADING_AXIS};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Heading noise applied per meter of position noise when building a set
/// from an observation.
pub const HEADING_NOISE_RAD_PER_M: f64 = 1.0;

/// One hypothesis: a state plus the physics parameters it evolves under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub state: StateVector,
    pub context: Context,
}

/// Per-axis mean and population variance over a set's instances.
///
/// The heading axis uses circular statistics: the mean is the angle of the
/// summed unit vectors and the variance averages squared wrapped deviations
/// from that mean, so a set straddling the pi boundary does not report a
/// bogus mean near zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistStats {
    pub mean: StateVector,
    pub variance: [f64; AXES],
}

/// Compute [`DistStats`] for a nonempty instance slice.
///
/// A singleton set short-circuits: its mean is the instance state verbatim
/// and every variance is exactly zero, with no trig roundtrip involved.
pub fn compute_stats(instances: &[Instance]) -> DistStats {
    assert!(!instances.is_empty(), "stats over an empty instance set");
    if instances.len() == 1 {
        return DistStats {
            mean: instances[0].state,
            variance: [0.0; AXES],
        };
    }
    let m = instances.len() as f64;
    let mut mean = [0.0f64; AXES];
    let (mut sin_sum, mut cos_sum) = (0.0f64, 0.0f64);
    for inst in instances {
        let a = inst.state.to_array();
        for (acc, v) in mean.iter_mut().zip(a) {
            *acc += v;
        }
        sin_sum += a[HEADING_AXIS].sin();
        cos_sum += a[HEADING_AXIS].cos();
    }
    for acc in mean.iter_mut() {
        *acc /= m;
    }
    mean[HEADING_AXIS] = wrap_angle(sin_sum.atan2(cos_sum));

    let mut variance = [0.0f64; AXES];
    for inst in instances {
        let a = inst.state.to_array();
        for (i, acc) in variance.iter_mut().enumerate() {
            let d = if i == HEADING_AXIS {
                wrap_angle(a[i] - mean[i])
            } else {
                a[i] - mean[i]
            };
            *acc += d * d;
        }
    }
    for acc in variance.iter_mut() {
        *acc /= m;
    }
    DistStats {
        mean: StateVector::from(mean),
        variance,
    }
}

/// A domain-randomized instance set at a single timestep.
///
/// Immutable after construction; the stats field is computed once and always
/// consistent with the instances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dris {
    timestep: u64,
    instances: Vec<Instance>,
    stats: DistStats,
}

impl Dris {
    pub fn new(timestep: u64, instances: Vec<Instance>) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::state("instance set must hold at least one instance"));
        }
        for (i, inst) in instances.iter().enumerate() {
            if !inst.state.is_finite() {
                return Err(Error::state(format!("instance {i} has a non-finite state")));
            }
        }
        let stats = compute_stats(&instances);
        Ok(Self {
            timestep,
            instances,
            stats,
        })
    }

    pub fn timestep(&self) -> u64 {
        self.timestep
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn stats(&self) -> &DistStats {
        &self.stats
    }

    /// The instance states, in instance order.
    pub fn project_states(&self) -> Vec<StateVector> {
        self.instances.iter().map(|i| i.state).collect()
    }
}

impl<'de> Deserialize<'de> for Dris {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            timestep: u64,
            instances: Vec<Instance>,
            // Present in serialized form; recomputed on load so a set can
            // never carry stats that disagree with its instances.
            #[serde(default)]
            #[allow(dead_code)]
            stats: Option<DistStats>,
        }
        let r = Repr::deserialize(deserializer)?;
        Dris::new(r.timestep, r.instances).map_err(serde::de::Error::custom)
    }
}

/// Build an instance set around one observed state.
///
/// Instance `i` pairs `contexts[i]` with the observed state whose planar
/// position is perturbed by zero-mean Gaussian noise of `pose_noise_std`
/// meters and whose heading is perturbed with the same std scaled by
/// [`HEADING_NOISE_RAD_PER_M`]. Velocities, altitude, and the tool pose are
/// copied unchanged. The set starts at timestep 0.
pub fn make_dris(
    observed: &StateVector,
    contexts: Vec<Context>,
    pose_noise_std: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Dris> {
    if contexts.is_empty() {
        return Err(Error::config("dris.m", "need at least one context"));
    }
    if !pose_noise_std.is_finite() || pose_noise_std < 0.0 {
        return Err(Error::config(
            "dris.pose_noise_std",
            format!("must be finite and nonnegative, got {pose_noise_std}"),
        ));
    }
    if !observed.is_finite() {
        return Err(Error::state("observed state is not finite"));
    }
    let instances = contexts
        .into_iter()
        .map(|context| {
            let nx: f64 = StandardNormal.sample(rng);
            let ny: f64 = StandardNormal.sample(rng);
            let nh: f64 = StandardNormal.sample(rng);
            let mut state = *observed;
            state.x += pose_noise_std * nx;
            state.y += pose_noise_std * ny;
            state.heading = wrap_angle(
                state.heading + pose_noise_std * HEADING_NOISE_RAD_PER_M * nh,
            );
            Instance { state, context }
        })
        .collect();
    Dris::new(0, instances)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{sample_contexts, WidthPreset};
    use crate::seed::derive_rng;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn inst(state: StateVector) -> Instance {
        Instance {
            state,
            context: Context::default(),
        }
    }

    fn state_with(x: f64, heading: f64) -> StateVector {
        let mut s = StateVector::zeros();
        s.x = x;
        s.heading = heading;
        s
    }

    #[test]
    fn singleton_stats_are_exact() {
        let s = state_with(0.3, 2.9);
        let d = Dris::new(5, vec![inst(s)]).unwrap();
        assert_eq!(d.stats().mean, s, "singleton mean must be the state itself");
        assert_eq!(d.stats().variance, [0.0; AXES]);
    }

    #[test]
    fn two_point_mean_and_population_variance() {
        let d = Dris::new(0, vec![inst(state_with(0.0, 0.0)), inst(state_with(2.0, 0.0))]).unwrap();
        assert_eq!(d.stats().mean.x, 1.0);
        assert_eq!(d.stats().variance[0], 1.0, "population variance, not sample");
    }

    #[test]
    fn circular_mean_straddles_the_pi_boundary() {
        // Headings +3.1 and -3.1 sit on either side of pi; the arithmetic
        // mean would be 0, the circular mean is pi.
        let d = Dris::new(0, vec![inst(state_with(0.0, 3.1)), inst(state_with(0.0, -3.1))]).unwrap();
        let mean_h = d.stats().mean.heading;
        assert_relative_eq!(mean_h.abs(), PI, epsilon = 1e-9);
        let expected_var = (3.1 - PI) * (3.1 - PI);
        assert_relative_eq!(d.stats().variance[HEADING_AXIS], expected_var, epsilon = 1e-9);
    }

    #[test]
    fn stats_recomputation_changes_nothing() {
        let mut rng = derive_rng(11, "dris", 0);
        let contexts = sample_contexts(&Context::default(), WidthPreset::MEDIUM, 8, &mut rng);
        let d = make_dris(&state_with(0.1, 0.4), contexts, 0.02, &mut rng).unwrap();
        let recomputed = compute_stats(d.instances());
        assert_eq!(&recomputed, d.stats());
    }

    #[test]
    fn zero_noise_copies_the_observation() {
        let observed = state_with(0.25, -1.0);
        let contexts = vec![Context::default(); 4];
        let mut rng = derive_rng(12, "dris", 0);
        let d = make_dris(&observed, contexts, 0.0, &mut rng).unwrap();
        assert_eq!(d.timestep(), 0);
        for s in d.project_states() {
            assert_eq!(s, observed);
        }
    }

    #[test]
    fn projection_preserves_order_and_cardinality() {
        let mut rng = derive_rng(13, "dris", 0);
        let contexts = sample_contexts(&Context::default(), WidthPreset::NARROW, 6, &mut rng);
        let d = make_dris(&state_with(0.0, 0.0), contexts, 0.05, &mut rng).unwrap();
        let states = d.project_states();
        assert_eq!(states.len(), d.len());
        for (projected, held) in states.iter().zip(d.instances()) {
            assert_eq!(*projected, held.state);
        }
    }

    #[test]
    fn empty_contexts_rejected() {
        let mut rng = derive_rng(14, "dris", 0);
        assert!(make_dris(&StateVector::zeros(), vec![], 0.0, &mut rng).is_err());
    }

    #[test]
    fn serialization_roundtrips_and_is_deterministic() {
        let mut rng = derive_rng(15, "dris", 0);
        let contexts = sample_contexts(&Context::default(), WidthPreset::MEDIUM, 3, &mut rng);
        let d = make_dris(&state_with(0.3, 1.2), contexts, 0.01, &mut rng).unwrap();
        let a = serde_json::to_string(&d).unwrap();
        let back: Dris = serde_json::from_str(&a).unwrap();
        assert_eq!(back, d);
        let b = serde_json::to_string(&back).unwrap();
        assert_eq!(a, b, "serialize -> deserialize -> serialize must be stable");
    }
}
