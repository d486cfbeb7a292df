//! Trust-region SCA over UAV trajectories with covariances and association fixed.
//!
//! The served rate is written as a difference of two logarithms whose
//! arguments are real cosine series in the AoD plus a path-loss term. Both are
//! linearized around the current trajectory; collision avoidance is replaced by
//! its first-order (conservative) cut, and every point stays within a trust
//! radius of the expansion trajectory.

use alloc::vec::Vec;
use core::f64::consts::{LOG2_E, PI};

use thiserror::Error;

use crate::conic::{ConicProblem, ConicSolver, LinExpr, Sense, SolveStatus, SolverSettings, Var};
use crate::linalg::{self, CMat};
use crate::model::{self, cos_aod, Design, ModelError, Scenario};
use crate::Point;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("UAVs {k} and {i} share the expansion point at slot {slot} and cannot be separated by altitude")]
    CoincidentPair { k: usize, i: usize, slot: usize },
    #[error("conic solver returned {0:?}")]
    Solver(SolveStatus),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `η(X, q)` (and `μ`): the steering quadratic form `g^H X g` toward a UAV at
/// `q` with altitude `h_alt`, written as a real cosine series.
pub fn eta_series(cov: &CMat, q: &Point, u: &Point, h_alt: f64, spacing: f64) -> f64 {
    let psi = 2.0 * PI * spacing * cos_aod(q, u, h_alt);
    let n = cov.nrows();
    let mut total: f64 = (0..n).map(|r| cov[(r, r)].re).sum();
    for p in 0..n {
        for s in p + 1..n {
            let z = cov[(p, s)];
            total += 2.0 * linalg::cabs(z) * libm::cos(linalg::carg(z) + psi * (s - p) as f64);
        }
    }
    total
}

/// `ν(X, q)` (and `υ`): the scalar with `∇_q η(X, q) = ν · (q − u)`.
pub fn nu_series(cov: &CMat, q: &Point, u: &Point, h_alt: f64, spacing: f64) -> f64 {
    let rho2 = (q - u).norm_squared() + h_alt * h_alt;
    let rho3 = rho2 * libm::sqrt(rho2);
    let psi = 2.0 * PI * spacing * h_alt / libm::sqrt(rho2);
    let n = cov.nrows();
    let mut total = 0.0;
    for p in 0..n {
        for s in p + 1..n {
            let z = cov[(p, s)];
            let lag = (s - p) as f64;
            total += 4.0 * PI * linalg::cabs(z) * libm::sin(linalg::carg(z) + psi * lag) * spacing * h_alt * lag / rho3;
        }
    }
    total
}

/// `η` for UAV `k` measured from GBS `m`.
pub fn eta(cov: &CMat, q: &Point, scenario: &Scenario, m: usize, k: usize) -> f64 {
    eta_series(
        cov,
        q,
        &scenario.gbs_positions[m],
        scenario.uav_altitudes[k],
        scenario.antenna_spacing_over_wavelength,
    )
}

/// First-order model `r ≈ c + dᵀ(q − q⁽ᵒ⁾)` of one served rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryTaylor {
    /// Exact rate at the expansion point.
    pub c: f64,
    /// Gradient with respect to the UAV's horizontal position, bps/Hz per meter.
    pub d: Point,
    /// Argument of the first logarithm (all received terms plus path-loss term).
    pub g: f64,
    /// Argument of the second logarithm (interference plus path-loss term).
    pub h: f64,
    pub nu_all: f64,
    pub nu_interference: f64,
}

/// Taylor data of `r_{m,k}[n]` around `expansion[k][n]` with `design`'s covariances.
pub fn taylor_coefficients(
    design: &Design,
    scenario: &Scenario,
    expansion: &[Vec<Point>],
    m: usize,
    k: usize,
    n: usize,
) -> TrajectoryTaylor {
    let q = &expansion[k][n];
    let u = &scenario.gbs_positions[m];
    let h_alt = scenario.uav_altitudes[k];
    let spacing = scenario.antenna_spacing_over_wavelength;
    let mut eta_all = 0.0;
    let mut eta_int = 0.0;
    let mut nu_all = 0.0;
    let mut nu_int = 0.0;
    for l in 0..scenario.num_gbs() {
        for i in 0..scenario.num_uavs() {
            let w = design.w(l, i, n);
            let e = eta_series(w, q, u, h_alt, spacing);
            let v = nu_series(w, q, u, h_alt, spacing);
            eta_all += e;
            nu_all += v;
            if (l, i) != (m, k) {
                eta_int += e;
                nu_int += v;
            }
        }
        let r = design.r(l, n);
        let e = eta_series(r, q, u, h_alt, spacing);
        let v = nu_series(r, q, u, h_alt, spacing);
        eta_all += e;
        eta_int += e;
        nu_all += v;
        nu_int += v;
    }
    let noise_ratio = scenario.noise_power / scenario.kappa;
    let dist = noise_ratio * ((q - u).norm_squared() + h_alt * h_alt);
    let g = eta_all + dist;
    let h = eta_int + dist;
    let offset = q - u;
    let d = offset * (LOG2_E / g * (nu_all + 2.0 * noise_ratio)) - offset * (LOG2_E / h * (nu_int + 2.0 * noise_ratio));
    TrajectoryTaylor {
        c: libm::log2(g) - libm::log2(h),
        d,
        g,
        h,
        nu_all,
        nu_interference: nu_int,
    }
}

/// Affine inner approximation of the separation constraint for one UAV pair
/// and slot: `normalᵀ(q_k − q_i) − offset ≥ rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionCut {
    pub normal: Point,
    pub offset: f64,
    pub rhs: f64,
}

impl CollisionCut {
    /// Slack of the linearized constraint (non-negative when satisfied).
    pub fn slack(&self, qk: &Point, qi: &Point) -> f64 {
        self.normal.dot(&(qk - qi)) - self.offset - self.rhs
    }
}

pub fn linearize_collision(
    qk0: &Point,
    qi0: &Point,
    hk: f64,
    hi: f64,
    d_min: f64,
) -> Option<CollisionCut> {
    let diff = qk0 - qi0;
    let dh = hk - hi;
    let rhs = d_min * d_min - dh * dh;
    if diff.norm_squared() == 0.0 && rhs > 0.0 {
        return None;
    }
    Some(CollisionCut { normal: diff * 2.0, offset: diff.norm_squared(), rhs })
}

/// Taylor data for every served (GBS, UAV, slot).
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorBundle {
    pub entries: Vec<(usize, usize, usize, TrajectoryTaylor)>,
}

impl TaylorBundle {
    pub fn build(design: &Design, scenario: &Scenario, expansion: &[Vec<Point>]) -> Self {
        let mut entries = Vec::with_capacity(scenario.num_uavs() * scenario.num_slots);
        for n in 0..scenario.num_slots {
            for k in 0..scenario.num_uavs() {
                let m = design.association.serving(k, n);
                entries.push((m, k, n, taylor_coefficients(design, scenario, expansion, m, k, n)));
            }
        }
        TaylorBundle { entries }
    }

    /// `Σ c`, the linear model's value at the expansion point.
    pub fn constant(&self) -> f64 {
        self.entries.iter().map(|e| e.3.c).sum()
    }
}

/// Optimizer of the linearized trajectory problem.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub trajectories: Vec<Vec<Point>>,
    /// Value of the linear model at the optimizer.
    pub model_objective: f64,
    pub iterations: u32,
    pub solve_time: f64,
}

/// Maximizes the linear rate model over all (UAV, slot) jointly, subject to
/// endpoints, per-slot speed, linearized separation and the trust region.
pub fn solve_trajectory_subproblem(
    scenario: &Scenario,
    bundle: &TaylorBundle,
    radius: f64,
    expansion: &[Vec<Point>],
    solver: &dyn ConicSolver,
    settings: &SolverSettings,
) -> Result<TrajectoryStep, TrajectoryError> {
    let (num_uavs, num_slots) = (scenario.num_uavs(), scenario.num_slots);
    let mut problem = ConicProblem::new(Sense::Maximize);
    // Displacements from the expansion point, meters.
    let delta: Vec<Vec<[Var; 2]>> = (0..num_uavs)
        .map(|_| {
            (0..num_slots)
                .map(|_| {
                    let v = problem.add_scalars("dq", 2);
                    [v[0], v[1]]
                })
                .collect()
        })
        .collect();
    let pos = |k: usize, n: usize, axis: usize| {
        let mut e = LinExpr::var(delta[k][n][axis]);
        e.add_constant(expansion[k][n][axis]);
        e
    };

    let scale = bundle
        .entries
        .iter()
        .map(|e| e.3.d.amax())
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut objective = LinExpr::zero();
    for &(_, k, n, ref t) in &bundle.entries {
        objective.add_term(delta[k][n][0], t.d.x / scale);
        objective.add_term(delta[k][n][1], t.d.y / scale);
    }
    problem.set_objective(objective.compact());

    for k in 0..num_uavs {
        for axis in 0..2 {
            let mut first = pos(k, 0, axis);
            first.add_constant(-scenario.uav_initial[k][axis]);
            problem.add_zero(first);
            let mut last = pos(k, num_slots - 1, axis);
            last.add_constant(-scenario.uav_final[k][axis]);
            problem.add_zero(last);
        }
        for n in 0..num_slots.saturating_sub(1) {
            let mut rows = alloc::vec![LinExpr::constant(scenario.step_limit())];
            for axis in 0..2 {
                let mut e = pos(k, n + 1, axis);
                e.add_scaled(&pos(k, n, axis), -1.0);
                rows.push(e);
            }
            problem.add_soc(rows);
        }
        for n in 0..num_slots {
            problem.add_soc(alloc::vec![
                LinExpr::constant(radius),
                LinExpr::var(delta[k][n][0]),
                LinExpr::var(delta[k][n][1]),
            ]);
        }
    }

    for k in 0..num_uavs {
        for i in k + 1..num_uavs {
            for n in 0..num_slots {
                let cut = linearize_collision(
                    &expansion[k][n],
                    &expansion[i][n],
                    scenario.uav_altitudes[k],
                    scenario.uav_altitudes[i],
                    scenario.d_min,
                )
                .ok_or(TrajectoryError::CoincidentPair { k, i, slot: n })?;
                let mut e = LinExpr::constant(-cut.offset - cut.rhs);
                for axis in 0..2 {
                    let mut diff = pos(k, n, axis);
                    diff.add_scaled(&pos(i, n, axis), -1.0);
                    e.add_scaled(&diff, cut.normal[axis]);
                }
                // Meters² → comparable to the other rows.
                let norm = cut.normal.norm().max(1.0);
                problem.add_nonneg(e.scaled(1.0 / norm));
            }
        }
    }

    let mut solution = solver.solve(&problem, settings);
    if solution.status == SolveStatus::NumericalFailure {
        solution = solver.solve(&problem, &settings.tightened());
    }
    if solution.status != SolveStatus::Optimal {
        return Err(TrajectoryError::Solver(solution.status));
    }
    let mut trajectories: Vec<Vec<Point>> = (0..num_uavs)
        .map(|k| {
            (0..num_slots)
                .map(|n| {
                    expansion[k][n]
                        + Point::new(solution.x[delta[k][n][0].index()], solution.x[delta[k][n][1].index()])
                })
                .collect()
        })
        .collect();
    for k in 0..num_uavs {
        trajectories[k][0] = scenario.uav_initial[k];
        trajectories[k][num_slots - 1] = scenario.uav_final[k];
    }
    let mut model_objective = bundle.constant();
    for &(_, k, n, ref t) in &bundle.entries {
        model_objective += t.d.dot(&(trajectories[k][n] - expansion[k][n]));
    }
    Ok(TrajectoryStep { trajectories, model_objective, iterations: solution.iterations, solve_time: solution.solve_time })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOptions {
    pub omega_min: f64,
    pub shrink: f64,
    pub max_iter: usize,
    /// Smallest exact-objective gain that counts as an improvement.
    pub min_improvement: f64,
    pub settings: SolverSettings,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        TrajectoryOptions {
            omega_min: 1e-3,
            shrink: 0.5,
            max_iter: 50,
            min_improvement: 1e-7,
            settings: SolverSettings::default(),
        }
    }
}

/// Radius schedule and acceptance bookkeeping of one trajectory stage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryTrace {
    /// Exact objective before the first and after every accepted step.
    pub objective: Vec<f64>,
    /// Trust radius used by each subproblem solve.
    pub radii: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
    pub reseeded_pairs: usize,
    pub final_radius: f64,
    pub solve_time: f64,
}

fn motion_ok(scenario: &Scenario, traj: &[Vec<Point>]) -> bool {
    let tol = model::CONSTRAINT_REL_TOL;
    let step = scenario.step_limit();
    let d2 = scenario.d_min * scenario.d_min;
    for k in 0..traj.len() {
        for n in 0..traj[k].len() - 1 {
            if (traj[k][n + 1] - traj[k][n]).norm() > step * (1.0 + tol) + model::ENDPOINT_TOL {
                return false;
            }
        }
        for i in k + 1..traj.len() {
            let dh = scenario.uav_altitudes[k] - scenario.uav_altitudes[i];
            for n in 0..traj[k].len() {
                if (traj[k][n] - traj[i][n]).norm_squared() + dh * dh < d2 * (1.0 - tol) {
                    return false;
                }
            }
        }
    }
    true
}

/// Trust-region SCA: a candidate is accepted only when the exact objective
/// improves by at least `min_improvement`; otherwise the radius shrinks.
pub fn optimize_trajectory(
    scenario: &Scenario,
    design: &Design,
    initial_radius: f64,
    solver: &dyn ConicSolver,
    options: &TrajectoryOptions,
) -> Result<(Design, TrajectoryTrace), TrajectoryError> {
    let mut current = design.clone();
    let mut exact = model::objective(&current, scenario)?;
    let mut radius = initial_radius;
    let mut trace = TrajectoryTrace { objective: alloc::vec![exact], ..Default::default() };

    for _ in 0..options.max_iter {
        if radius < options.omega_min {
            break;
        }
        let bundle = TaylorBundle::build(&current, scenario, &current.trajectories);
        trace.radii.push(radius);
        let step = match solve_trajectory_subproblem(
            scenario,
            &bundle,
            radius,
            &current.trajectories,
            solver,
            &options.settings,
        ) {
            Ok(step) => step,
            Err(TrajectoryError::CoincidentPair { k, i, .. }) => {
                current.trajectories[k] = scenario.straight_trajectories()[k].clone();
                current.trajectories[i] = scenario.straight_trajectories()[i].clone();
                exact = model::objective(&current, scenario)?;
                trace.reseeded_pairs += 1;
                continue;
            }
            Err(TrajectoryError::Solver(_)) => {
                radius *= options.shrink;
                trace.rejected += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        trace.solve_time += step.solve_time;
        let mut candidate = current.clone();
        candidate.trajectories = step.trajectories;
        let value = model::objective(&candidate, scenario)?;
        if value >= exact + options.min_improvement && motion_ok(scenario, &candidate.trajectories) {
            current = candidate;
            exact = value;
            trace.objective.push(value);
            trace.accepted += 1;
        } else {
            radius *= options.shrink;
            trace.rejected += 1;
        }
    }
    trace.final_radius = radius;
    Ok((current, trace))
}
