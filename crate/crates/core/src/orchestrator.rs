//! Outer alternating optimization, baselines and the illumination sweep.

use alloc::vec::Vec;

use thiserror::Error;

use crate::association::{nearest_association, optimize_association};
use crate::beamforming::{
    illumination_floor, initial_design, optimize_beamforming, BeamformingError, BeamformingOptions, CovarianceClass,
};
pub use crate::beamforming::{isotropic_limit, MaxMinIllumination};
use crate::conic::{ConicSolver, SolveStatus, SolverSettings};
use crate::linalg::{self, CMat};
use crate::model::{self, Design, ModelError, Scenario, ScenarioError, ViolationReport};
use crate::trajectory::{optimize_trajectory, TrajectoryError, TrajectoryOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrchestratorError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("illumination threshold {gamma:e} W exceeds the achievable floor {limit:e} W")]
    Infeasible { gamma: f64, limit: f64 },
    #[error("conic solver returned {0:?} on the max-min illumination problem")]
    Solver(SolveStatus),
    #[error(transparent)]
    Beamforming(#[from] BeamformingError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl OrchestratorError {
    /// True for infeasibility of the design problem itself (as opposed to numerical trouble).
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            OrchestratorError::Infeasible { .. } | OrchestratorError::Beamforming(BeamformingError::Infeasible { .. })
        )
    }
}

/// Monotonic seconds source for stage timings; the core has no clock of its own.
pub trait Clock {
    fn seconds(&self) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

pub struct Context<'a> {
    pub solver: &'a dyn ConicSolver,
    pub clock: &'a dyn Clock,
}

impl<'a> Context<'a> {
    pub fn new(solver: &'a dyn ConicSolver) -> Self {
        Context { solver, clock: &NoClock }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoOptions {
    pub max_outer: usize,
    /// Relative objective improvement below which the outer loop stops.
    pub tol: f64,
    pub beamforming: BeamformingOptions,
    pub trajectory: TrajectoryOptions,
}

impl Default for AoOptions {
    fn default() -> Self {
        AoOptions {
            max_outer: 20,
            tol: 1e-4,
            beamforming: BeamformingOptions::default(),
            trajectory: TrajectoryOptions::default(),
        }
    }
}

impl AoOptions {
    pub fn with_settings(mut self, settings: SolverSettings) -> Self {
        self.beamforming.settings = settings;
        self.trajectory.settings = settings;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Proposed,
    StraightFlight,
    Isotropic,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Proposed, Method::StraightFlight, Method::Isotropic];

    pub fn name(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::StraightFlight => "straight",
            Method::Isotropic => "isotropic",
        }
    }

    pub fn from_name(name: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == name)
    }

    fn class(self) -> CovarianceClass {
        match self {
            Method::Isotropic => CovarianceClass::ScaledIdentity,
            _ => CovarianceClass::Full,
        }
    }

    fn moves(self) -> bool {
        self != Method::StraightFlight
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageStatus {
    Completed,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageSeconds {
    pub association: f64,
    pub beamforming: f64,
    pub trajectory: f64,
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterRecord {
    pub after_association: f64,
    pub after_beamforming: f64,
    pub after_trajectory: f64,
    /// Exact objective at the end of the iteration.
    pub objective: f64,
    pub beamforming_status: StageStatus,
    pub trajectory_status: StageStatus,
    pub beamforming_iterations: usize,
    pub trajectory_accepted: usize,
    pub trust_radius: Option<f64>,
    pub seconds: StageSeconds,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AoTrace {
    pub initial_objective: f64,
    pub outer: Vec<OuterRecord>,
    pub converged: bool,
}

impl AoTrace {
    /// Exact objective at every stage boundary, starting with the initialization.
    pub fn stage_objectives(&self) -> Vec<f64> {
        let mut out = alloc::vec![self.initial_objective];
        for r in &self.outer {
            out.extend([r.after_association, r.after_beamforming, r.after_trajectory]);
        }
        out
    }

    pub fn final_objective(&self) -> f64 {
        self.outer.last().map_or(self.initial_objective, |r| r.objective)
    }
}

/// Result of one AO run. A stage failure ends the run early; `design` is then
/// the last design produced before the failure and `error` holds the cause.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub method: Method,
    pub design: Design,
    pub trace: AoTrace,
    pub violations: ViolationReport,
    pub error: Option<OrchestratorError>,
}

impl RunOutcome {
    pub fn objective(&self) -> f64 {
        self.trace.final_objective()
    }

    pub fn average_sum_rate(&self) -> f64 {
        self.objective() / self.design.num_slots() as f64
    }
}

/// Largest uniformly achievable illumination floor and the covariances reaching it.
pub fn max_min_illumination(
    scenario: &Scenario,
    solver: &dyn ConicSolver,
    settings: &SolverSettings,
) -> Result<MaxMinIllumination, OrchestratorError> {
    illumination_floor(scenario, solver, settings).map_err(OrchestratorError::Solver)
}

/// Initial design of `method`: straight constant-speed flight, nearest-GBS
/// association, and beams sharing power with a feasible sensing covariance.
pub fn initialize(scenario: &Scenario, method: Method, ctx: &Context, options: &AoOptions) -> Result<Design, OrchestratorError> {
    scenario.validate()?;
    let n_a = scenario.num_antennas;
    let trajectories = scenario.straight_trajectories();
    let association = nearest_association(scenario, &trajectories);
    let iso = isotropic_limit(scenario);
    let base: Vec<CMat> = if scenario.gamma <= iso {
        alloc::vec![linalg::scaled_identity(n_a, scenario.p_max / n_a as f64); scenario.num_gbs()]
    } else if method == Method::Isotropic {
        return Err(OrchestratorError::Infeasible { gamma: scenario.gamma, limit: iso });
    } else {
        let best = max_min_illumination(scenario, ctx.solver, &options.beamforming.settings)?;
        if scenario.gamma > best.watts {
            return Err(OrchestratorError::Infeasible { gamma: scenario.gamma, limit: best.watts });
        }
        best.covariances
    };
    Ok(initial_design(scenario, trajectories, association, &base, method.class())?)
}

/// AO from a feasible `initial` design.
pub fn run_from(scenario: &Scenario, initial: Design, method: Method, ctx: &Context, options: &AoOptions) -> RunOutcome {
    let mut design = initial;
    let mut error = None;
    let mut trace = AoTrace::default();
    match model::objective(&design, scenario) {
        Ok(v) => trace.initial_objective = v,
        Err(e) => {
            let violations = model::check_constraints(&design, scenario);
            return RunOutcome { method, design, trace, violations, error: Some(e.into()) };
        }
    }
    let mut current = trace.initial_objective;
    let initial_radius = scenario.step_limit();

    for _ in 0..options.max_outer {
        let mut seconds = StageSeconds::default();
        let t0 = ctx.clock.seconds();
        let after_association = match optimize_association(&design, scenario) {
            Ok(a) => {
                let mut candidate = design.clone();
                candidate.association = a;
                match model::objective(&candidate, scenario) {
                    Ok(v) if v >= current => {
                        design = candidate;
                        v
                    }
                    _ => current,
                }
            }
            Err(e) => {
                error = Some(e.into());
                break;
            }
        };
        let t1 = ctx.clock.seconds();
        seconds.association = t1 - t0;

        let mut record = OuterRecord {
            after_association,
            after_beamforming: after_association,
            after_trajectory: after_association,
            objective: after_association,
            beamforming_status: StageStatus::Completed,
            trajectory_status: StageStatus::Skipped,
            beamforming_iterations: 0,
            trajectory_accepted: 0,
            trust_radius: None,
            seconds,
        };

        match optimize_beamforming(scenario, &design, method.class(), ctx.solver, &options.beamforming) {
            Ok((d, bt)) => {
                let v = model::objective(&d, scenario).unwrap_or(f64::NEG_INFINITY);
                if v >= record.after_association {
                    design = d;
                    record.after_beamforming = v;
                }
                record.beamforming_iterations = bt.iterations;
            }
            Err(e) => {
                record.beamforming_status = StageStatus::Failed;
                error = Some(e.into());
            }
        }
        record.after_trajectory = record.after_beamforming;
        let t2 = ctx.clock.seconds();
        record.seconds.beamforming = t2 - t1;

        if error.is_none() && method.moves() {
            match optimize_trajectory(scenario, &design, initial_radius, ctx.solver, &options.trajectory) {
                Ok((d, tt)) => {
                    let v = model::objective(&d, scenario).unwrap_or(f64::NEG_INFINITY);
                    if v >= record.after_beamforming {
                        design = d;
                        record.after_trajectory = v;
                    }
                    record.trajectory_status = StageStatus::Completed;
                    record.trajectory_accepted = tt.accepted;
                    record.trust_radius = Some(tt.final_radius);
                }
                Err(e) => {
                    record.trajectory_status = StageStatus::Failed;
                    error = Some(e.into());
                }
            }
        }
        record.seconds.trajectory = ctx.clock.seconds() - t2;
        record.objective = record.after_trajectory;
        let improvement = record.objective - current;
        current = record.objective;
        trace.outer.push(record);
        if error.is_some() {
            break;
        }
        if improvement <= options.tol * current.abs().max(1e-12) {
            trace.converged = true;
            break;
        }
    }
    let violations = model::check_constraints(&design, scenario);
    RunOutcome { method, design, trace, violations, error }
}

/// Initializes and runs `method`. Only initialization failures are returned as
/// errors; later failures are reported inside the outcome.
pub fn run(scenario: &Scenario, method: Method, ctx: &Context, options: &AoOptions) -> Result<RunOutcome, OrchestratorError> {
    let initial = initialize(scenario, method, ctx, options)?;
    Ok(run_from(scenario, initial, method, ctx, options))
}

pub fn solve(scenario: &Scenario, ctx: &Context, options: &AoOptions) -> Result<RunOutcome, OrchestratorError> {
    run(scenario, Method::Proposed, ctx, options)
}

pub fn baseline_straight_flight(scenario: &Scenario, ctx: &Context, options: &AoOptions) -> Result<RunOutcome, OrchestratorError> {
    run(scenario, Method::StraightFlight, ctx, options)
}

pub fn baseline_isotropic(scenario: &Scenario, ctx: &Context, options: &AoOptions) -> Result<RunOutcome, OrchestratorError> {
    run(scenario, Method::Isotropic, ctx, options)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub gamma_dbw: f64,
    pub method: Method,
    /// `None` when the point is infeasible or failed.
    pub avg_rate: Option<f64>,
    pub error: Option<OrchestratorError>,
}

impl SweepPoint {
    pub fn feasible(&self) -> bool {
        self.avg_rate.is_some()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    /// Sorted by Γ, then by method.
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn get(&self, gamma_dbw: f64, method: Method) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.gamma_dbw == gamma_dbw && p.method == method)
    }
}

/// Runs every method at every Γ. Points are visited from the largest Γ down.
/// Each method runs from its fresh initialization and, warm, from its own
/// solution at the previous (larger) Γ, which stays feasible as the threshold
/// relaxes; the proposed method also runs from the straight-flight result at
/// the same Γ. The best final design is kept, so every curve is non-increasing
/// in Γ and the proposed method never falls below straight flight.
pub fn gamma_sweep(
    scenario: &Scenario,
    gammas_dbw: &[f64],
    methods: &[Method],
    ctx: &Context,
    options: &AoOptions,
) -> SweepResult {
    let mut order: Vec<f64> = gammas_dbw.to_vec();
    order.sort_by(|a, b| b.total_cmp(a));
    order.dedup();
    let mut run_order: Vec<Method> = methods.to_vec();
    run_order.sort_by_key(|m| match m {
        Method::StraightFlight => 0,
        Method::Isotropic => 1,
        Method::Proposed => 2,
    });
    run_order.dedup();

    let mut warm: Vec<Option<Design>> = alloc::vec![None; 3];
    let slot = |m: Method| m as usize;
    let mut points = Vec::new();
    for &g in &order {
        let s = scenario.with_gamma_dbw(g);
        let mut straight_now: Option<Design> = None;
        for &method in &run_order {
            let mut starts: Vec<Design> = Vec::new();
            let mut error = None;
            match initialize(&s, method, ctx, options) {
                Ok(d) => starts.push(d),
                Err(e) => error = Some(e),
            }
            if let Some(d) = warm[slot(method)].take() {
                starts.push(d);
            }
            if method == Method::Proposed {
                if let Some(d) = &straight_now {
                    starts.push(d.clone());
                }
            }
            let mut best: Option<RunOutcome> = None;
            for start in starts {
                let o = run_from(&s, start, method, ctx, options);
                if !o.violations.is_empty() {
                    continue;
                }
                if best.as_ref().is_none_or(|b| o.objective() > b.objective()) {
                    best = Some(o);
                }
            }
            let point = match best {
                Some(o) => {
                    if method == Method::StraightFlight {
                        straight_now = Some(o.design.clone());
                    }
                    let rate = o.average_sum_rate();
                    let error = o.error.clone();
                    warm[slot(method)] = Some(o.design);
                    SweepPoint { gamma_dbw: g, method, avg_rate: Some(rate), error }
                }
                None => SweepPoint { gamma_dbw: g, method, avg_rate: None, error },
            };
            points.push(point);
        }
    }
    points.sort_by(|a, b| a.gamma_dbw.total_cmp(&b.gamma_dbw).then(a.method.cmp(&b.method)));
    SweepResult { points }
}
