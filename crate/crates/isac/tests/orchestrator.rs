mod common;

use common::{ctx, hover, hover_rate, options, paper, SOLVER};
use isac_core::model::{self, dbw_to_watts};
use isac_core::orchestrator::{
    baseline_isotropic, baseline_straight_flight, initialize, isotropic_limit, max_min_illumination, run, solve, Method,
};
use isac_core::Point;

#[test]
fn single_gbs_floor_is_full_array_gain() {
    let s = hover(Point::new(0.0, 50.0), 100.0, 2);
    let best = max_min_illumination(&s, &SOLVER, &Default::default()).unwrap();
    let d2 = s.sensing_points[0].norm_squared() + s.sensing_altitude.powi(2);
    let want = s.num_antennas as f64 * s.p_max / d2;
    assert!((best.watts - want).abs() < 1e-6 * want, "{} vs {want}", best.watts);
}

#[test]
fn floor_scales_with_power_and_vanishes_without_it() {
    let mut s = paper(2);
    let base = max_min_illumination(&s, &SOLVER, &Default::default()).unwrap().watts;
    s.p_max *= 2.0;
    let doubled = max_min_illumination(&s, &SOLVER, &Default::default()).unwrap().watts;
    assert!((doubled - 2.0 * base).abs() < 1e-6 * doubled);
    s.p_max = 0.0;
    assert_eq!(max_min_illumination(&s, &SOLVER, &Default::default()).unwrap().watts, 0.0);
}

#[test]
fn extra_gbs_never_lowers_the_floor() {
    let mut s = paper(2);
    s.gbs_positions.truncate(2);
    let two = max_min_illumination(&s, &SOLVER, &Default::default()).unwrap().watts;
    s.gbs_positions.push(Point::new(200.0, 260.0));
    let three = max_min_illumination(&s, &SOLVER, &Default::default()).unwrap().watts;
    assert!(three >= two * (1.0 - 1e-6), "{three} < {two}");
}

#[test]
fn isotropic_limit_is_below_the_floor() {
    let s = paper(2);
    let best = max_min_illumination(&s, &SOLVER, &Default::default()).unwrap().watts;
    assert!(isotropic_limit(&s) < best);
}

#[test]
fn hover_reaches_closed_form_rate() {
    let s = hover(Point::new(30.0, 40.0), 100.0, 2);
    let out = solve(&s, &ctx(), &options()).unwrap();
    assert!(out.error.is_none());
    assert!((out.average_sum_rate() - hover_rate(&s)).abs() < 1e-3);
}

#[test]
fn threshold_above_floor_is_typed_infeasibility() {
    let s = paper(3).with_gamma_dbw(-5.0);
    for m in Method::ALL {
        let err = initialize(&s, m, &ctx(), &options()).unwrap_err();
        assert!(err.is_infeasible(), "{m:?}: {err}");
    }
    let s = paper(3).with_gamma_dbw(-16.0);
    assert!(initialize(&s, Method::Isotropic, &ctx(), &options()).unwrap_err().is_infeasible());
    assert!(initialize(&s, Method::Proposed, &ctx(), &options()).is_ok());
}

#[test]
fn proposed_beats_baselines_and_is_monotone() {
    let s = paper(5).with_gamma_dbw(-20.0);
    let proposed = solve(&s, &ctx(), &options()).unwrap();
    let straight = baseline_straight_flight(&s, &ctx(), &options()).unwrap();
    let iso = baseline_isotropic(&s, &ctx(), &options()).unwrap();
    for o in [&proposed, &straight, &iso] {
        assert!(o.violations.is_empty(), "{:?}: {:?}", o.method, o.violations);
        let stages = o.trace.stage_objectives();
        for p in stages.windows(2) {
            assert!(p[1] >= p[0] - 1e-5, "{:?}: {p:?}", o.method);
        }
    }
    assert!(proposed.objective() >= straight.objective() - 1e-5);
    assert!(straight.objective() >= iso.objective() - 1e-5);
    // Straight flight never moves the UAVs.
    assert_eq!(straight.design.trajectories, s.straight_trajectories());
}

#[test]
fn single_outer_iteration_is_recorded() {
    let s = paper(3);
    let mut opts = options();
    opts.max_outer = 1;
    let out = run(&s, Method::Proposed, &ctx(), &opts).unwrap();
    assert_eq!(out.trace.outer.len(), 1);
    let z = model::illumination_power(&out.design, &s, 0, 1).unwrap();
    assert!(z >= dbw_to_watts(-20.0) * (1.0 - 1e-6));
}
