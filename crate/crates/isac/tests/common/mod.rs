#![allow(dead_code)]

use isac::ClarabelSolver;
use isac_core::model::dbw_to_watts;
use isac_core::orchestrator::{AoOptions, Context};
use isac_core::{Point, Scenario};

pub static SOLVER: ClarabelSolver = ClarabelSolver { verbose: false };

pub fn ctx() -> Context<'static> {
    Context::new(&SOLVER)
}

pub fn options() -> AoOptions {
    AoOptions::default()
}

/// One GBS at the origin and one UAV pinned at `uav` for every slot.
pub fn hover(uav: Point, altitude: f64, num_slots: usize) -> Scenario {
    Scenario {
        gbs_positions: vec![Point::new(0.0, 0.0)],
        uav_initial: vec![uav],
        uav_final: vec![uav],
        uav_altitudes: vec![altitude],
        sensing_points: vec![Point::new(20.0, -10.0)],
        sensing_altitude: 10.0,
        num_antennas: 4,
        antenna_spacing_over_wavelength: 0.5,
        num_slots,
        slot_duration: 1.0,
        p_max: 3.0,
        gamma: 0.0,
        v_max: 10.0,
        d_min: 30.0,
        kappa: dbw_to_watts(-45.0),
        noise_power: dbw_to_watts(-100.0),
    }
}

/// `log₂(1 + P·N_a·β/σ²)` with `β = κ/d²`.
pub fn hover_rate(s: &Scenario) -> f64 {
    let u = s.gbs_positions[0];
    let q = s.uav_initial[0];
    let d2 = (q - u).norm_squared() + s.uav_altitudes[0].powi(2);
    (1.0 + s.p_max * s.num_antennas as f64 * s.kappa / d2 / s.noise_power).log2()
}

/// The bundled deployment at a reduced horizon.
pub fn paper(num_slots: usize) -> Scenario {
    Scenario::paper().with_num_slots(num_slots)
}
