//! Physical context parameters and the randomization widths that scale them.

use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Physics parameters carried alongside each state instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Context {
    pub mass_kg: f64,
    pub friction_coeff: f64,
    pub geometry_scale: f64,
    pub drag_coeff: f64,
}

impl Default for Context {
    fn default() -> Self {
        Self {
            mass_kg: 0.1,
            friction_coeff: 0.5,
            geometry_scale: 1.0,
            drag_coeff: 0.01,
        }
    }
}

impl Context {
    pub fn validate(&self, path: &str) -> Result<()> {
        let positive = [
            ("mass_kg", self.mass_kg),
            ("friction_coeff", self.friction_coeff),
            ("geometry_scale", self.geometry_scale),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::config(
                    format!("{path}.{name}"),
                    format!("must be finite and positive, got {v}"),
                ));
            }
        }
        if !self.drag_coeff.is_finite() || self.drag_coeff < 0.0 {
            return Err(Error::config(
                format!("{path}.drag_coeff"),
                format!("must be finite and nonnegative, got {}", self.drag_coeff),
            ));
        }
        Ok(())
    }
}

/// Multiplier interval for log-uniform context randomization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WidthPreset {
    pub lower_mult: f64,
    pub upper_mult: f64,
}

impl WidthPreset {
    pub const NARROW: Self = Self {
        lower_mult: 0.9,
        upper_mult: 1.2,
    };
    pub const MEDIUM: Self = Self {
        lower_mult: 0.5,
        upper_mult: 2.0,
    };
    pub const WIDE: Self = Self {
        lower_mult: 0.2,
        upper_mult: 3.0,
    };
    /// Degenerate width: every sampled context equals the base context.
    pub const EXACT: Self = Self {
        lower_mult: 1.0,
        upper_mult: 1.0,
    };

    pub fn named(name: &str) -> Option<Self> {
        match name {
            "narrow" => Some(Self::NARROW),
            "medium" => Some(Self::MEDIUM),
            "wide" => Some(Self::WIDE),
            "exact" => Some(Self::EXACT),
            _ => None,
        }
    }

    /// Preset name when the bounds match one, used for CSV labels.
    pub fn name(&self) -> Option<&'static str> {
        if *self == Self::NARROW {
            Some("narrow")
        } else if *self == Self::MEDIUM {
            Some("medium")
        } else if *self == Self::WIDE {
            Some("wide")
        } else if *self == Self::EXACT {
            Some("exact")
        } else {
            None
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        if !(self.lower_mult.is_finite() && self.upper_mult.is_finite())
            || self.lower_mult <= 0.0
            || self.lower_mult > self.upper_mult
        {
            return Err(Error::config(
                path,
                format!(
                    "width multipliers must satisfy 0 < lower <= upper, got [{}, {}]",
                    self.lower_mult, self.upper_mult
                ),
            ));
        }
        Ok(())
    }
}

impl<'de> Deserialize<'de> for WidthPreset {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Name(String),
            Bounds { lower_mult: f64, upper_mult: f64 },
        }
        match Repr::deserialize(deserializer)? {
            Repr::Name(name) => WidthPreset::named(&name).ok_or_else(|| {
                serde::de::Error::custom(format!(
                    "unknown width preset `{name}`, expected narrow | medium | wide | exact"
                ))
            }),
            Repr::Bounds {
                lower_mult,
                upper_mult,
            } => Ok(WidthPreset {
                lower_mult,
                upper_mult,
            }),
        }
    }
}

/// Draw a multiplier log-uniformly from `[lo, hi]`.
///
/// A degenerate interval returns `lo` exactly, so zero-width randomization
/// reproduces the base parameter bit for bit.
fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        return lo;
    }
    let x: f64 = rng.gen_range(lo.ln()..=hi.ln());
    x.exp().clamp(lo, hi)
}

/// Sample `m` contexts around `base`. Each of the four parameters gets an
/// independent log-uniform multiplier from the width interval, drawn in
/// declaration order (mass, friction, geometry, drag).
pub fn sample_contexts(
    base: &Context,
    width: WidthPreset,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Context> {
    let (lo, hi) = (width.lower_mult, width.upper_mult);
    (0..m)
        .map(|_| Context {
            mass_kg: base.mass_kg * log_uniform(rng, lo, hi),
            friction_coeff: base.friction_coeff * log_uniform(rng, lo, hi),
            geometry_scale: base.geometry_scale * log_uniform(rng, lo, hi),
            drag_coeff: base.drag_coeff * log_uniform(rng, lo, hi),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::derive_rng;

    #[test]
    fn degenerate_width_reproduces_base_bitwise() {
        let base = Context::default();
        let mut rng = derive_rng(1, "ctx", 0);
        for c in sample_contexts(&base, WidthPreset::EXACT, 16, &mut rng) {
            assert_eq!(c, base);
        }
    }

    #[test]
    fn multipliers_stay_inside_width_bounds() {
        let base = Context::default();
        let mut rng = derive_rng(2, "ctx", 0);
        let w = WidthPreset::WIDE;
        for c in sample_contexts(&base, w, 500, &mut rng) {
            for (v, b) in [
                (c.mass_kg, base.mass_kg),
                (c.friction_coeff, base.friction_coeff),
                (c.geometry_scale, base.geometry_scale),
                (c.drag_coeff, base.drag_coeff),
            ] {
                let mult = v / b;
                assert!(
                    mult >= w.lower_mult - 1e-12 && mult <= w.upper_mult + 1e-12,
                    "multiplier {mult} outside [{}, {}]",
                    w.lower_mult,
                    w.upper_mult
                );
            }
        }
    }

    #[test]
    fn log_uniform_median_sits_near_geometric_mean() {
        // For wide [0.2, 3] the log-space midpoint is sqrt(0.2 * 3) ~ 0.7746,
        // noticeably below the arithmetic midpoint 1.6.
        let base = Context {
            mass_kg: 1.0,
            friction_coeff: 1.0,
            geometry_scale: 1.0,
            drag_coeff: 1.0,
        };
        let mut rng = derive_rng(3, "ctx", 0);
        let mut mults: Vec<f64> = sample_contexts(&base, WidthPreset::WIDE, 4001, &mut rng)
            .iter()
            .map(|c| c.mass_kg)
            .collect();
        mults.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = mults[mults.len() / 2];
        let geo_mean = (0.2f64 * 3.0).sqrt();
        assert!(
            (median - geo_mean).abs() < 0.08,
            "median {median} far from log-space midpoint {geo_mean}"
        );
    }

    #[test]
    fn same_seed_same_contexts() {
        let base = Context::default();
        let a = sample_contexts(&base, WidthPreset::MEDIUM, 8, &mut derive_rng(9, "c", 4));
        let b = sample_contexts(&base, WidthPreset::MEDIUM, 8, &mut derive_rng(9, "c", 4));
        assert_eq!(a, b);
    }

    #[test]
    fn width_presets_parse_from_names_and_bounds() {
        let w: WidthPreset = serde_json::from_str("\"medium\"").unwrap();
        assert_eq!(w, WidthPreset::MEDIUM);
        let w: WidthPreset =
            serde_json::from_str("{\"lower_mult\": 0.7, \"upper_mult\": 1.4}").unwrap();
        assert_eq!(w.lower_mult, 0.7);
        assert!(serde_json::from_str::<WidthPreset>("\"huge\"").is_err());
    }
}
