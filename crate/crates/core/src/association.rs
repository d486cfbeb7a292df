//! UAV–GBS association under fixed covariances and trajectories.
//!
//! A UAV's achievable rate toward GBS `m` does not depend on which GBS the
//! other UAVs are served by, so the joint problem splits into one argmax per
//! (UAV, slot).

use crate::model::{self, Association, Design, ModelError, Scenario};

/// Index of the largest rate; ties go to the smallest index.
pub fn best_gbs(rates: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_rate = f64::NEG_INFINITY;
    for (m, r) in rates.into_iter().enumerate() {
        if r > best_rate {
            best = m;
            best_rate = r;
        }
    }
    best
}

pub fn optimize_association(design: &Design, scenario: &Scenario) -> Result<Association, ModelError> {
    let (num_uavs, num_slots) = (scenario.num_uavs(), scenario.num_slots);
    let mut assoc = Association::uniform(num_uavs, num_slots, 0);
    for n in 0..num_slots {
        for k in 0..num_uavs {
            let mut rates = alloc::vec::Vec::with_capacity(scenario.num_gbs());
            for m in 0..scenario.num_gbs() {
                rates.push(model::rate(design, scenario, m, k, n)?);
            }
            assoc.set(k, n, best_gbs(rates));
        }
    }
    Ok(assoc)
}

/// Each UAV served by the horizontally closest GBS (smallest index on ties).
pub fn nearest_association(scenario: &Scenario, trajectories: &[alloc::vec::Vec<crate::Point>]) -> Association {
    Association::from_fn(scenario.num_uavs(), scenario.num_slots, |k, n| {
        best_gbs(
            scenario
                .gbs_positions
                .iter()
                .map(|u| -(trajectories[k][n] - u).norm_squared()),
        )
    })
}
