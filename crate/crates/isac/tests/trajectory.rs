mod common;

use common::{hover, paper, SOLVER};
use isac_core::model::{self, Association};
use isac_core::orchestrator::{initialize, Method};
use isac_core::trajectory::{optimize_trajectory, solve_trajectory_subproblem, TaylorBundle, TrajectoryOptions};
use isac_core::{linalg, Design, Point, Scenario};

/// One UAV that starts and ends at the origin over three slots, a GBS 30 m
/// away, isotropic transmission: the middle waypoint should close in on the GBS.
fn shuttle() -> (Scenario, Design) {
    let mut s = hover(Point::new(0.0, 0.0), 100.0, 3);
    s.gbs_positions[0] = Point::new(30.0, 0.0);
    s.v_max = 20.0;
    let mut d = Design::new(&s, s.straight_trajectories(), Association::uniform(1, 3, 0));
    for n in 0..3 {
        *d.w_mut(0, 0, n) = linalg::scaled_identity(4, s.p_max / 4.0);
    }
    (s, d)
}

#[test]
fn linear_model_steps_to_the_trust_boundary() {
    let (s, d) = shuttle();
    let bundle = TaylorBundle::build(&d, &s, &d.trajectories);
    for radius in [0.5, 2.0, 5.0] {
        let step =
            solve_trajectory_subproblem(&s, &bundle, radius, &d.trajectories, &SOLVER, &Default::default()).unwrap();
        let mid = step.trajectories[0][1];
        assert!((mid - Point::new(radius, 0.0)).norm() < 1e-5 * (1.0 + radius), "{radius}: {mid:?}");
        assert_eq!(step.trajectories[0][0], s.uav_initial[0]);
        assert_eq!(step.trajectories[0][2], s.uav_final[0]);
    }
}

#[test]
fn trust_region_matches_grid_search() {
    let (s, d) = shuttle();
    let (out, trace) = optimize_trajectory(&s, &d, s.step_limit(), &SOLVER, &TrajectoryOptions::default()).unwrap();
    let got = model::objective(&out, &s).unwrap();

    let mut best = f64::NEG_INFINITY;
    let mut probe = d.clone();
    for i in -40..=40 {
        for j in -40..=40 {
            let p = Point::new(i as f64 * 0.5, j as f64 * 0.5);
            if p.norm() > s.step_limit() {
                continue;
            }
            probe.trajectories[0][1] = p;
            best = best.max(model::objective(&probe, &s).unwrap());
        }
    }
    assert!(got >= best - 1e-6, "{got} vs grid {best}");
    assert!((out.trajectories[0][1] - Point::new(20.0, 0.0)).norm() < 1e-2);
    assert!(trace.objective.windows(2).all(|p| p[1] > p[0]));
    assert!(trace.radii.windows(2).all(|r| r[1] <= r[0]));
}

#[test]
fn desk_scale_stage_keeps_constraints() {
    let s = paper(6);
    let ctx = common::ctx();
    let d0 = initialize(&s, Method::Proposed, &ctx, &common::options()).unwrap();
    let (d, trace) = optimize_trajectory(&s, &d0, s.step_limit(), &SOLVER, &TrajectoryOptions::default()).unwrap();
    let report = model::check_constraints(&d, &s);
    assert!(report.is_empty(), "{report:?}");
    assert!(model::objective(&d, &s).unwrap() >= model::objective(&d0, &s).unwrap());
    assert_eq!(trace.objective.len(), trace.accepted + 1);
    assert_eq!(trace.radii.len(), trace.accepted + trace.rejected);
}
