//! Property tests for the two selection-critical invariants: best-of-N
//! never prefers a cage-violating candidate over a passing one, and cage
//! cost never decreases when an instance set moves outward.

use dreamplan_core::cage::{CageConfig, CenterPath, Schedule};
use dreamplan_core::context::Context;
use dreamplan_core::dris::{Dris, Instance};
use dreamplan_core::solver::{select_nbest, CandidateBatch};
use dreamplan_core::state::StateVector;
use dreamplan_core::task::Action;
use proptest::prelude::*;

fn trivial_dris() -> Dris {
    Dris::new(
        0,
        vec![Instance {
            state: StateVector::zeros(),
            context: Context::default(),
        }],
    )
    .unwrap()
}

fn synthetic_batch(costs: Vec<f64>, cage: Vec<f64>, valid: Vec<bool>) -> CandidateBatch {
    let n = costs.len();
    CandidateBatch {
        actions: vec![Action::ZERO; n],
        predicted: vec![trivial_dris(); n],
        task_cost: costs.clone(),
        cage_cost: cage,
        valid,
        total_cost: costs,
    }
}

proptest! {
    #[test]
    fn nbest_selection_prefers_valid_and_minimizes_cost(
        costs in prop::collection::vec(0.0f64..100.0, 1..12),
        cage_seed in prop::collection::vec(0.0f64..10.0, 12),
        mask_bits in prop::collection::vec(any::<bool>(), 12),
    ) {
        let n = costs.len();
        let cage: Vec<f64> = cage_seed[..n].to_vec();
        let valid: Vec<bool> = mask_bits[..n].to_vec();
        let batch = synthetic_batch(costs.clone(), cage.clone(), valid.clone());
        let sel = select_nbest(&batch);

        prop_assert!(sel.index < n);
        if valid.iter().any(|v| *v) {
            prop_assert!(valid[sel.index], "picked an invalid candidate over a valid one");
            prop_assert!(!sel.infeasible);
            for i in 0..n {
                if valid[i] {
                    prop_assert!(costs[sel.index] <= costs[i]);
                }
            }
        } else {
            prop_assert!(sel.infeasible);
            for c in &cage {
                prop_assert!(cage[sel.index] <= *c);
            }
        }
    }

    #[test]
    fn cage_cost_never_drops_as_the_set_moves_outward(
        points in prop::collection::vec(
            (-0.4f64..0.4, -0.4f64..0.4, 0.0f64..0.4), 1..8),
        center in (-0.2f64..0.2, -0.2f64..0.2, 0.0f64..0.2),
        radius in 0.02f64..0.3,
        alpha in 0.0f64..2.0,
        scale in 1.0f64..3.0,
    ) {
        let spec = CageConfig::Geometric {
            center: CenterPath::Static { point: [center.0, center.1, center.2] },
            radius,
            alpha,
        };
        let cage = spec.build().unwrap();
        let active = cage.update(0);

        let build = |s: f64| {
            let instances = points
                .iter()
                .map(|(x, y, z)| Instance {
                    state: StateVector {
                        x: center.0 + s * (x - center.0),
                        y: center.1 + s * (y - center.1),
                        z: center.2 + s * (z - center.2),
                        ..StateVector::zeros()
                    },
                    context: Context::default(),
                })
                .collect();
            Dris::new(0, instances).unwrap()
        };

        let near = active.evaluate(&build(1.0));
        let far = active.evaluate(&build(scale));
        prop_assert!(far >= near - 1e-12, "outward move cut cost: {near} -> {far}");
        if !active.validate(&build(1.0)) {
            prop_assert!(
                !active.validate(&build(scale)),
                "an already-violating set became valid by moving outward"
            );
        }
    }
}

#[test]
fn schedule_fractions_are_monotone_and_clamped() {
    let schedule = Schedule::Piecewise {
        points: vec![(10, 0.0), (20, 0.4), (50, 1.0)],
    };
    let mut prev = -1.0;
    for t in 0..70 {
        let f = schedule.fraction(t);
        assert!((0.0..=1.0).contains(&f));
        assert!(f >= prev, "fraction dropped at t={t}");
        prev = f;
    }
}
