//! Transmit covariance design by successive convex approximation.
//!
//! Each iteration lower-bounds every served rate by the concave surrogate
//! `log₂(received + σ²) − a − Σ tr(B (X − X⁽ᵒ⁾))` around the current expansion
//! point, solves the resulting semidefinite relaxation slot by slot, and moves
//! the expansion point to the optimizer. Rank-one beamformers are restored at
//! exit with an exact construction that leaves every transmit covariance, and
//! therefore every rate and illumination power, unchanged.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LOG2_E;

use thiserror::Error;

use crate::conic::{
    ConicProblem, ConicSolver, HermitianVar, LinExpr, Sense, SolveStatus, SolverSettings, Var,
};
use crate::linalg::{self, CMat, CVec, C64};
use crate::model::{self, Association, Design, ModelError, Scenario};
use crate::Point;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeamformingError {
    #[error("illumination threshold {gamma:e} W cannot be met with per-GBS power {p_max} W (slot {slot})")]
    Infeasible { gamma: f64, p_max: f64, slot: usize },
    #[error("conic solver returned {status:?} on slot {slot}")]
    Numerical { slot: usize, status: SolveStatus },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Linearization data of one served rate around the expansion point.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateCoefficients {
    /// Serving channel `h_{m,k}[n]` at the expansion trajectory.
    pub channel: CVec,
    /// `log₂e · H / D`.
    pub b: CMat,
    /// `log₂ D`.
    pub a: f64,
    /// `D`: interference plus noise at the expansion point, watts.
    pub interference_plus_noise: f64,
}

pub fn surrogate_coefficients(
    expansion: &Design,
    scenario: &Scenario,
    m: usize,
    k: usize,
    n: usize,
) -> Result<SurrogateCoefficients, ModelError> {
    let h = scenario.channel(m, expansion.position(k, n), scenario.uav_altitudes[k]);
    let p = model::link_power_with_channel(expansion, &h, m, k, n)?;
    let d = p.interference + scenario.noise_power;
    Ok(SurrogateCoefficients {
        b: linalg::outer(&h).scale(LOG2_E / d),
        a: libm::log2(d),
        interference_plus_noise: d,
        channel: h,
    })
}

/// Concave lower bound `r̄⁽ᵒ⁾_{m,k}[n]` evaluated on `candidate`.
pub fn surrogate_rate(
    candidate: &Design,
    expansion: &Design,
    coeffs: &SurrogateCoefficients,
    scenario: &Scenario,
    m: usize,
    k: usize,
    n: usize,
) -> f64 {
    let h = &coeffs.channel;
    let mut received = 0.0;
    let mut linear = 0.0;
    for l in 0..scenario.num_gbs() {
        for i in 0..scenario.num_uavs() {
            let w = candidate.w(l, i, n);
            received += linalg::quad_form(w, h).re;
            if (l, i) != (m, k) {
                linear += linalg::trace_inner(&coeffs.b, &(w - expansion.w(l, i, n)));
            }
        }
        let r = candidate.r(l, n);
        received += linalg::quad_form(r, h).re;
        linear += linalg::trace_inner(&coeffs.b, &(r - expansion.r(l, n)));
    }
    libm::log2(received + scenario.noise_power) - coeffs.a - linear
}

/// Which covariances the optimizer may choose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceClass {
    /// Arbitrary Hermitian PSD matrices (relaxed, then restored to rank one).
    Full,
    /// `(p / N_a)·I` with a scalar power `p ≥ 0` per covariance.
    ScaledIdentity,
}

#[derive(Debug, Clone, Copy)]
enum CovVar {
    Full(HermitianVar),
    Scaled { power: Var, n_a: usize },
}

impl CovVar {
    fn new(problem: &mut ConicProblem, class: CovarianceClass, name: &str, n_a: usize) -> Self {
        match class {
            CovarianceClass::Full => CovVar::Full(problem.add_hermitian_psd(name, n_a)),
            CovarianceClass::ScaledIdentity => {
                let power = problem.add_scalar(name);
                problem.add_nonneg(LinExpr::var(power));
                CovVar::Scaled { power, n_a }
            }
        }
    }

    fn inner(&self, c: &CMat) -> LinExpr {
        match self {
            CovVar::Full(h) => h.inner(c),
            CovVar::Scaled { power, n_a } => LinExpr::term(*power, linalg::trace_re(c) / *n_a as f64),
        }
    }

    fn trace(&self) -> LinExpr {
        match self {
            CovVar::Full(h) => h.trace(),
            CovVar::Scaled { power, .. } => LinExpr::var(*power),
        }
    }

    fn value(&self, x: &[f64]) -> CMat {
        match self {
            CovVar::Full(h) => linalg::project_psd(&h.value(x)),
            CovVar::Scaled { power, n_a } => linalg::scaled_identity(*n_a, x[power.index()].max(0.0) / *n_a as f64),
        }
    }
}

/// Variables of one slot inside a (possibly multi-slot) surrogate problem.
#[derive(Debug, Clone)]
struct SlotVars {
    slot: usize,
    /// Served pairs `(m, k)` with their beam covariance.
    beams: Vec<(usize, usize, CovVar)>,
    sensing: Vec<CovVar>,
}

/// Appends the slot-`n` surrogate (objective terms and constraints) to `problem`.
fn append_slot(
    problem: &mut ConicProblem,
    objective: &mut LinExpr,
    scenario: &Scenario,
    expansion: &Design,
    n: usize,
    class: CovarianceClass,
) -> Result<SlotVars, ModelError> {
    let (num_gbs, num_uavs, n_a) = (scenario.num_gbs(), scenario.num_uavs(), scenario.num_antennas);
    let assoc = &expansion.association;
    let beams: Vec<(usize, usize, CovVar)> = (0..num_uavs)
        .map(|k| {
            let m = assoc.serving(k, n);
            (m, k, CovVar::new(problem, class, "W", n_a))
        })
        .collect();
    let sensing: Vec<CovVar> = (0..num_gbs).map(|_| CovVar::new(problem, class, "R", n_a)).collect();
    let sigma2 = scenario.noise_power;

    for &(m, k, _) in &beams {
        let coeffs = surrogate_coefficients(expansion, scenario, m, k, n)?;
        let h_norm = linalg::outer(&coeffs.channel).scale(1.0 / sigma2);
        // u = (received + σ²) / σ²
        let mut u = LinExpr::constant(1.0);
        for (_, _, w) in &beams {
            u.add_scaled(&w.inner(&h_norm), 1.0);
        }
        for r in &sensing {
            u.add_scaled(&r.inner(&h_norm), 1.0);
        }
        let t = problem.add_scalar("t");
        problem.add_log_hypograph(t, u);
        objective.add_term(t, LOG2_E);
        objective.add_constant(libm::log2(sigma2) - coeffs.a);

        for &(l, i, ref w) in &beams {
            if (l, i) != (m, k) {
                objective.add_scaled(&w.inner(&coeffs.b), -1.0);
            }
        }
        for r in &sensing {
            objective.add_scaled(&r.inner(&coeffs.b), -1.0);
        }
        let mut reference = 0.0;
        for l in 0..num_gbs {
            for i in 0..num_uavs {
                if (l, i) != (m, k) {
                    reference += linalg::trace_inner(&coeffs.b, expansion.w(l, i, n));
                }
            }
            reference += linalg::trace_inner(&coeffs.b, expansion.r(l, n));
        }
        objective.add_constant(reference);
    }

    for m in 0..num_gbs {
        let mut power = sensing[m].trace();
        for (l, _, w) in &beams {
            if *l == m {
                power.add_scaled(&w.trace(), 1.0);
            }
        }
        problem.add_le(&power, &LinExpr::constant(scenario.p_max));
    }

    if scenario.gamma > 0.0 {
        for q in 0..scenario.num_sensing() {
            let mut zeta = LinExpr::zero();
            for l in 0..num_gbs {
                let (a, d2) = scenario.sensing_link(l, q);
                let c = linalg::outer(&a).scale(1.0 / d2);
                zeta.add_scaled(&sensing[l].inner(&c), 1.0);
                for (m, _, w) in &beams {
                    if *m == l {
                        zeta.add_scaled(&w.inner(&c), 1.0);
                    }
                }
            }
            // Normalized so the threshold reads 1.
            let mut row = zeta.scaled(1.0 / scenario.gamma);
            row.add_constant(-1.0);
            problem.add_nonneg(row);
        }
    }

    Ok(SlotVars { slot: n, beams, sensing })
}

fn write_slot(design: &mut Design, vars: &SlotVars, x: &[f64]) {
    let n = vars.slot;
    let n_a = design.num_antennas();
    for m in 0..design.num_gbs() {
        for k in 0..design.num_uavs() {
            *design.w_mut(m, k, n) = linalg::zeros(n_a);
        }
        *design.r_mut(m, n) = vars.sensing[m].value(x);
    }
    for (m, k, w) in &vars.beams {
        *design.w_mut(*m, *k, n) = w.value(x);
    }
}

/// Builds the surrogate problem over `slots` (one slot, or several jointly).
pub fn build_surrogate_problem(
    scenario: &Scenario,
    expansion: &Design,
    slots: &[usize],
    class: CovarianceClass,
) -> Result<ConicProblem, ModelError> {
    Ok(build(scenario, expansion, slots, class)?.0)
}

fn build(
    scenario: &Scenario,
    expansion: &Design,
    slots: &[usize],
    class: CovarianceClass,
) -> Result<(ConicProblem, Vec<SlotVars>), ModelError> {
    let mut problem = ConicProblem::new(Sense::Maximize);
    let mut objective = LinExpr::zero();
    let mut vars = Vec::with_capacity(slots.len());
    for &n in slots {
        vars.push(append_slot(&mut problem, &mut objective, scenario, expansion, n, class)?);
    }
    problem.set_objective(objective.compact());
    Ok((problem, vars))
}

/// Optimizer of the surrogate over a set of slots.
#[derive(Debug, Clone)]
pub struct SurrogateSolution {
    /// Expansion design with the solved slots overwritten (before rank-one restoration).
    pub design: Design,
    /// Optimal surrogate value summed over the solved slots.
    pub objective: f64,
    pub iterations: u32,
    pub solve_time: f64,
}

/// Solves the surrogate over `slots` as a single conic problem. One numerical
/// failure is retried with tightened settings.
pub fn solve_surrogate(
    scenario: &Scenario,
    expansion: &Design,
    slots: &[usize],
    class: CovarianceClass,
    solver: &dyn ConicSolver,
    settings: &SolverSettings,
) -> Result<SurrogateSolution, BeamformingError> {
    let (problem, vars) = build(scenario, expansion, slots, class)?;
    let mut solution = solver.solve(&problem, settings);
    if solution.status == SolveStatus::NumericalFailure {
        solution = solver.solve(&problem, &settings.tightened());
    }
    let slot = slots.first().copied().unwrap_or(0);
    if solution.status == SolveStatus::NumericalFailure && !threshold_reachable(scenario, class, solver, settings) {
        return Err(BeamformingError::Infeasible { gamma: scenario.gamma, p_max: scenario.p_max, slot });
    }
    match solution.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => {
            return Err(BeamformingError::Infeasible { gamma: scenario.gamma, p_max: scenario.p_max, slot })
        }
        status => return Err(BeamformingError::Numerical { slot, status }),
    }
    let mut design = expansion.clone();
    for v in &vars {
        write_slot(&mut design, v, &solution.x);
    }
    Ok(SurrogateSolution {
        design,
        objective: solution.objective,
        iterations: solution.iterations,
        solve_time: solution.solve_time,
    })
}

/// The surrogate's constraints do not involve the expansion point: they can be
/// met iff Γ is below the floor of the covariance class. Interior-point
/// methods often stall instead of certifying infeasibility, so a failed solve
/// is classified here.
fn threshold_reachable(
    scenario: &Scenario,
    class: CovarianceClass,
    solver: &dyn ConicSolver,
    settings: &SolverSettings,
) -> bool {
    match class {
        CovarianceClass::ScaledIdentity => scenario.gamma <= isotropic_limit(scenario),
        CovarianceClass::Full => illumination_floor(scenario, solver, settings).map_or(true, |f| scenario.gamma <= f.watts),
    }
}

/// Solves every slot independently; the objective is slot-separable.
pub fn solve_sdr_subproblem(
    scenario: &Scenario,
    expansion: &Design,
    solver: &dyn ConicSolver,
    settings: &SolverSettings,
) -> Result<SurrogateSolution, BeamformingError> {
    let mut out = SurrogateSolution { design: expansion.clone(), objective: 0.0, iterations: 0, solve_time: 0.0 };
    for n in 0..scenario.num_slots {
        let s = solve_surrogate(scenario, &out.design, &[n], CovarianceClass::Full, solver, settings)?;
        out.design = s.design;
        out.objective += s.objective;
        out.iterations += s.iterations;
        out.solve_time += s.solve_time;
    }
    Ok(out)
}

/// Result of restoring rank-one beams at one GBS and slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// `W̄_{l,i} = w̄ w̄^H`, zero where no beam is kept.
    pub w: Vec<CMat>,
    pub beams: Vec<Option<CVec>>,
    pub r: CMat,
}

/// Rank-one restoration for one GBS: `w̄ = (h^H W h)^{-1/2} W h`, and the
/// sensing covariance absorbs the remainder so the transmit covariance is
/// unchanged. `channels[i]` is the channel of UAV `i` if this GBS serves it;
/// unserved or powerless beams are folded into the sensing covariance.
pub fn rank_one_reconstruct(w_star: &[CMat], r_star: &CMat, channels: &[Option<CVec>]) -> Reconstruction {
    let n_a = r_star.nrows();
    let mut total = r_star.clone();
    for w in w_star {
        total += w;
    }
    let mut w_bar = Vec::with_capacity(w_star.len());
    let mut beams = Vec::with_capacity(w_star.len());
    for (w, h) in w_star.iter().zip(channels) {
        let beam = h.as_ref().and_then(|h| {
            let q = linalg::quad_form(w, h).re;
            let floor = 1e-14 * linalg::trace_re(w).abs() * h.norm_squared();
            if q > floor && q > 0.0 {
                Some((w * h).scale(1.0 / libm::sqrt(q)))
            } else {
                None
            }
        });
        match &beam {
            Some(b) => w_bar.push(linalg::outer(b)),
            None => w_bar.push(linalg::zeros(n_a)),
        }
        beams.push(beam);
    }
    let mut r = total;
    for w in &w_bar {
        r -= w;
    }
    // PSD in exact arithmetic; the subtraction can leave rounding-level negative eigenvalues.
    Reconstruction { w: w_bar, beams, r: linalg::project_psd(&r) }
}

/// Applies [`rank_one_reconstruct`] to every GBS and slot of `design`.
pub fn reconstruct_design(design: &Design, scenario: &Scenario) -> Design {
    let mut out = design.clone();
    for n in 0..scenario.num_slots {
        for l in 0..scenario.num_gbs() {
            let ws: Vec<CMat> = (0..scenario.num_uavs()).map(|i| design.w(l, i, n).clone()).collect();
            let channels: Vec<Option<CVec>> = (0..scenario.num_uavs())
                .map(|i| {
                    design
                        .association
                        .alpha(l, i, n)
                        .then(|| scenario.channel(l, design.position(i, n), scenario.uav_altitudes[i]))
                })
                .collect();
            let rec = rank_one_reconstruct(&ws, design.r(l, n), &channels);
            for (i, w) in rec.w.into_iter().enumerate() {
                *out.w_mut(l, i, n) = w;
            }
            *out.r_mut(l, n) = rec.r;
        }
    }
    out
}

/// Initial feasible covariances: beams toward each served UAV sharing a
/// fraction `ρ` of the budget, the rest on `sensing_base[m]` (a covariance of
/// trace `P_max` per GBS). `ρ` is the largest value per slot that keeps every
/// illumination constraint; the illumination power is affine in `ρ`, so the
/// limit is computed exactly. MRT beams are used for [`CovarianceClass::Full`]
/// and isotropic beams otherwise.
pub fn initial_design(
    scenario: &Scenario,
    trajectories: Vec<Vec<Point>>,
    association: Association,
    sensing_base: &[CMat],
    class: CovarianceClass,
) -> Result<Design, BeamformingError> {
    let (num_gbs, num_uavs, n_a) = (scenario.num_gbs(), scenario.num_uavs(), scenario.num_antennas);
    let p_max = scenario.p_max;
    let mut beams_only = Design::new(scenario, trajectories.clone(), association.clone());
    let mut base_only = Design::new(scenario, trajectories, association);
    for n in 0..scenario.num_slots {
        for m in 0..num_gbs {
            let served: Vec<usize> = (0..num_uavs).filter(|&k| beams_only.association.alpha(m, k, n)).collect();
            if served.is_empty() {
                *beams_only.r_mut(m, n) = sensing_base[m].clone();
            } else {
                let share = p_max / served.len() as f64;
                for &k in &served {
                    let w = match class {
                        CovarianceClass::Full => {
                            let h = scenario.channel(m, beams_only.position(k, n), scenario.uav_altitudes[k]);
                            linalg::outer(&h).scale(share / h.norm_squared())
                        }
                        CovarianceClass::ScaledIdentity => linalg::scaled_identity(n_a, share / n_a as f64),
                    };
                    *beams_only.w_mut(m, k, n) = w;
                }
            }
            *base_only.r_mut(m, n) = sensing_base[m].clone();
        }
    }

    let mut design = base_only.clone();
    for n in 0..scenario.num_slots {
        let mut rho: f64 = 1.0;
        for q in 0..scenario.num_sensing() {
            let z_beam = model::illumination_power(&beams_only, scenario, q, n)?;
            let z_base = model::illumination_power(&base_only, scenario, q, n)?;
            if z_base < scenario.gamma {
                return Err(BeamformingError::Infeasible { gamma: scenario.gamma, p_max, slot: n });
            }
            if z_beam < scenario.gamma {
                rho = rho.min((z_base - scenario.gamma) / (z_base - z_beam));
            }
        }
        let rho = rho.clamp(0.0, 1.0);
        let beam_scale = C64::new(rho, 0.0);
        let base_scale = C64::new(1.0 - rho, 0.0);
        for m in 0..num_gbs {
            for k in 0..num_uavs {
                *design.w_mut(m, k, n) = beams_only.w(m, k, n) * beam_scale;
            }
            *design.r_mut(m, n) = beams_only.r(m, n) * beam_scale + base_only.r(m, n) * base_scale;
        }
    }
    Ok(design)
}

/// Largest uniformly achievable illumination floor and the covariances reaching it.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxMinIllumination {
    pub watts: f64,
    pub covariances: Vec<CMat>,
}

/// `max s` subject to `ζ_q ≥ s` for every sensing point and `tr X_l ≤ P_max`.
/// Illumination does not depend on the UAVs, so one slot suffices.
pub fn illumination_floor(
    scenario: &Scenario,
    solver: &dyn ConicSolver,
    settings: &SolverSettings,
) -> Result<MaxMinIllumination, SolveStatus> {
    let (num_gbs, n_a) = (scenario.num_gbs(), scenario.num_antennas);
    if scenario.p_max == 0.0 || scenario.num_sensing() == 0 {
        return Ok(MaxMinIllumination { watts: 0.0, covariances: alloc::vec![linalg::zeros(n_a); num_gbs] });
    }
    // Upper bound on any ζ_q, used to scale s to order one.
    let scale = (0..scenario.num_sensing())
        .map(|q| {
            (0..num_gbs)
                .map(|l| scenario.p_max * n_a as f64 / scenario.sensing_link(l, q).1)
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    let mut problem = ConicProblem::new(Sense::Maximize);
    let xs: Vec<_> = (0..num_gbs).map(|_| problem.add_hermitian_psd("X", n_a)).collect();
    let s = problem.add_scalar("s");
    for x in &xs {
        let mut row = x.trace().scaled(-1.0 / scenario.p_max);
        row.add_constant(1.0);
        problem.add_nonneg(row);
    }
    for q in 0..scenario.num_sensing() {
        let mut row = LinExpr::term(s, -1.0);
        for (l, x) in xs.iter().enumerate() {
            let (a, d2) = scenario.sensing_link(l, q);
            row.add_scaled(&x.inner(&linalg::outer(&a)), 1.0 / (d2 * scale));
        }
        problem.add_nonneg(row);
    }
    problem.set_objective(LinExpr::var(s));
    let mut solution = solver.solve(&problem, settings);
    if solution.status == SolveStatus::NumericalFailure {
        solution = solver.solve(&problem, &settings.tightened());
    }
    if !solution.is_optimal() {
        return Err(solution.status);
    }
    let covariances: Vec<CMat> = xs.iter().map(|x| linalg::project_psd(&x.value(&solution.x))).collect();
    // Report the floor the returned covariances actually reach.
    let watts = (0..scenario.num_sensing())
        .map(|q| {
            (0..num_gbs)
                .map(|l| {
                    let (a, d2) = scenario.sensing_link(l, q);
                    linalg::quad_form(&covariances[l], &a).re / d2
                })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    Ok(MaxMinIllumination { watts, covariances })
}

/// Illumination floor of isotropic full-power transmission from every GBS.
pub fn isotropic_limit(scenario: &Scenario) -> f64 {
    (0..scenario.num_sensing())
        .map(|q| {
            (0..scenario.num_gbs())
                .map(|l| scenario.p_max / scenario.sensing_link(l, q).1)
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamformingOptions {
    /// Relative improvement below which a slot is converged.
    pub epsilon: f64,
    pub max_iter: usize,
    pub settings: SolverSettings,
}

impl Default for BeamformingOptions {
    fn default() -> Self {
        BeamformingOptions { epsilon: 1e-4, max_iter: 30, settings: SolverSettings::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BeamformingTrace {
    /// Exact objective `Σ_n r[n]` before the first and after every iteration.
    pub objective: Vec<f64>,
    /// Optimal surrogate values summed over slots, one per iteration.
    pub surrogate: Vec<f64>,
    pub iterations: usize,
    pub solver_iterations: u32,
    pub solve_time: f64,
}

fn slot_rate(design: &Design, scenario: &Scenario, n: usize) -> Result<f64, ModelError> {
    model::sum_rate(design, scenario, n)
}

/// SCA over the covariances with association and trajectories fixed. The
/// returned exact objective is never below the incoming one.
pub fn optimize_beamforming(
    scenario: &Scenario,
    initial: &Design,
    class: CovarianceClass,
    solver: &dyn ConicSolver,
    options: &BeamformingOptions,
) -> Result<(Design, BeamformingTrace), BeamformingError> {
    let mut design = initial.clone();
    design.fold_unassociated();
    let num_slots = scenario.num_slots;
    let mut current: Vec<f64> = (0..num_slots)
        .map(|n| slot_rate(&design, scenario, n))
        .collect::<Result<_, _>>()?;
    let mut surrogate_last = current.clone();
    let mut active = vec![true; num_slots];
    let mut trace = BeamformingTrace { objective: vec![current.iter().sum()], ..Default::default() };

    for _ in 0..options.max_iter {
        if !active.iter().any(|&a| a) {
            break;
        }
        for n in 0..num_slots {
            if !active[n] {
                continue;
            }
            let sol = solve_surrogate(scenario, &design, &[n], class, solver, &options.settings)?;
            trace.solver_iterations += sol.iterations;
            trace.solve_time += sol.solve_time;
            let exact = slot_rate(&sol.design, scenario, n)?;
            let prev = current[n];
            if exact < prev {
                // Inexact solve; keep the expansion point.
                active[n] = false;
                continue;
            }
            design = sol.design;
            current[n] = exact;
            surrogate_last[n] = sol.objective;
            if (exact - prev) <= options.epsilon * prev.abs().max(1e-12) {
                active[n] = false;
            }
        }
        trace.iterations += 1;
        trace.objective.push(current.iter().sum());
        trace.surrogate.push(surrogate_last.iter().sum());
    }

    if class == CovarianceClass::Full {
        design = reconstruct_design(&design, scenario);
    }
    Ok((design, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Scenario;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize, trace: f64) -> CMat {
        let a = CMat::from_fn(n, rank, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let x = &a * a.adjoint();
        let t = linalg::trace_re(&x);
        x.scale(trace / t)
    }

    fn small_scenario(rng: &mut ChaCha8Rng) -> Scenario {
        let mut s = Scenario::paper().with_num_slots(2);
        s.gbs_positions.truncate(2);
        for u in s.gbs_positions.iter_mut() {
            *u = Point::new(rng.gen_range(100.0..300.0), rng.gen_range(100.0..300.0));
        }
        s
    }

    fn random_design(rng: &mut ChaCha8Rng, s: &Scenario) -> Design {
        let traj: Vec<Vec<Point>> = (0..s.num_uavs())
            .map(|_| (0..s.num_slots).map(|_| Point::new(rng.gen_range(0.0..400.0), rng.gen_range(0.0..400.0))).collect())
            .collect();
        let assoc = Association::from_fn(s.num_uavs(), s.num_slots, |_, _| rng.gen_range(0..s.num_gbs()));
        let mut d = Design::new(s, traj, assoc);
        for n in 0..s.num_slots {
            for m in 0..s.num_gbs() {
                let budget = s.p_max * rng.gen_range(0.2..1.0);
                let parts: Vec<f64> = (0..=s.num_uavs()).map(|_| rng.gen_range(0.05..1.0)).collect();
                let sum: f64 = parts.iter().sum();
                for k in 0..s.num_uavs() {
                    let rank = rng.gen_range(1..=4);
                    *d.w_mut(m, k, n) = random_psd(rng, 4, rank, budget * parts[k] / sum);
                }
                *d.r_mut(m, n) = random_psd(rng, 4, 4, budget * parts[s.num_uavs()] / sum);
            }
        }
        d
    }

    #[test]
    fn coefficients_zero_interference() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = small_scenario(&mut rng);
        let mut d = Design::new(&s, s.straight_trajectories(), Association::uniform(2, 2, 0));
        *d.w_mut(0, 0, 0) = random_psd(&mut rng, 4, 1, 1.0);
        let c = surrogate_coefficients(&d, &s, 0, 0, 0).unwrap();
        assert_eq!(c.interference_plus_noise, s.noise_power);
        assert!((c.a - libm::log2(s.noise_power)).abs() < 1e-12);
        let h = s.channel(0, d.position(0, 0), s.uav_altitudes[0]);
        let want = linalg::outer(&h).scale(LOG2_E / s.noise_power);
        assert!(linalg::frobenius(&(&c.b - want)) <= 1e-12 * linalg::frobenius(&c.b));
    }

    #[test]
    fn coefficients_scale_and_trace_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = small_scenario(&mut rng);
        let d = random_design(&mut rng, &s);
        let c = surrogate_coefficients(&d, &s, 1, 0, 1).unwrap();
        let mut scaled = d.clone();
        scaled.scale_covariances(3.0);
        let c3 = surrogate_coefficients(&scaled, &s, 1, 0, 1).unwrap();
        let i1 = c.interference_plus_noise - s.noise_power;
        let i3 = c3.interference_plus_noise - s.noise_power;
        assert!((i3 - 3.0 * i1).abs() <= 1e-12 * i3);
        let h = &c.channel;
        let lhs = linalg::trace_re(&c.b) * c.interference_plus_noise / LOG2_E;
        assert!((lhs - h.norm_squared()).abs() <= 1e-10 * h.norm_squared());
    }

    #[test]
    fn surrogate_is_tight_and_a_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = small_scenario(&mut rng);
        let expansion = random_design(&mut rng, &s);
        for n in 0..2 {
            for k in 0..2 {
                let m = expansion.association.serving(k, n);
                let c = surrogate_coefficients(&expansion, &s, m, k, n).unwrap();
                let at = surrogate_rate(&expansion, &expansion, &c, &s, m, k, n);
                assert!((at - model::rate(&expansion, &s, m, k, n).unwrap()).abs() <= 1e-9);
            }
        }
        for _ in 0..200 {
            let mut cand = random_design(&mut rng, &s);
            cand.trajectories = expansion.trajectories.clone();
            let (m, k, n) = (expansion.association.serving(0, 1), 0, 1);
            let c = surrogate_coefficients(&expansion, &s, m, k, n).unwrap();
            let lb = surrogate_rate(&cand, &expansion, &c, &s, m, k, n);
            assert!(lb <= model::rate(&cand, &s, m, k, n).unwrap() + 1e-8);
        }
    }

    #[test]
    fn surrogate_on_zero_candidate_is_literal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = small_scenario(&mut rng);
        let expansion = random_design(&mut rng, &s);
        let zero = Design::new(&s, expansion.trajectories.clone(), expansion.association.clone());
        let (m, k, n) = (0, 1, 0);
        let c = surrogate_coefficients(&expansion, &s, m, k, n).unwrap();
        let mut want = libm::log2(s.noise_power) - c.a;
        for l in 0..s.num_gbs() {
            for i in 0..s.num_uavs() {
                if (l, i) != (m, k) {
                    want += linalg::trace_inner(&c.b, expansion.w(l, i, n));
                }
            }
            want += linalg::trace_inner(&c.b, expansion.r(l, n));
        }
        assert!((surrogate_rate(&zero, &expansion, &c, &s, m, k, n) - want).abs() < 1e-12);
    }

    #[test]
    fn reconstruct_identity_case() {
        let w = CMat::identity(2, 2);
        let h = CVec::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let rec = rank_one_reconstruct(&[w], &linalg::zeros(2), &[Some(h.clone())]);
        assert!((rec.beams[0].as_ref().unwrap() - &h).norm() < 1e-15);
        let want_r = CMat::from_diagonal(&CVec::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]));
        assert!(linalg::frobenius(&(&rec.r - want_r)) < 1e-15);
    }

    #[test]
    fn reconstruct_rank_one_input_is_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = random_psd(&mut rng, 4, 1, 2.0);
        let r = random_psd(&mut rng, 4, 2, 0.5);
        let h = CVec::from_fn(4, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let rec = rank_one_reconstruct(std::slice::from_ref(&w), &r, &[Some(h)]);
        assert!(linalg::frobenius(&(&rec.w[0] - &w)) < 1e-12);
        assert!(linalg::frobenius(&(&rec.r - &r)) < 1e-12);
    }

    #[test]
    fn reconstruct_degenerate_beam_folds_into_sensing() {
        let w = CMat::from_diagonal(&CVec::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]));
        let h = CVec::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let rec = rank_one_reconstruct(std::slice::from_ref(&w), &linalg::zeros(2), &[Some(h)]);
        assert!(rec.beams[0].is_none());
        assert_eq!(rec.w[0], linalg::zeros(2));
        assert!(linalg::frobenius(&(&rec.r - &w)) < 1e-15);
    }

    #[test]
    fn reconstruct_preserves_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s = small_scenario(&mut rng);
        for _ in 0..20 {
            let d = random_design(&mut rng, &s);
            let rec = reconstruct_design(&d, &s);
            for n in 0..s.num_slots {
                for m in 0..s.num_gbs() {
                    let diff = linalg::frobenius(&(d.tx_covariance(m, n) - rec.tx_covariance(m, n)));
                    assert!(diff <= 1e-10 * s.p_max);
                    assert!(linalg::min_eigenvalue(rec.r(m, n)) >= -1e-8 * s.p_max);
                }
                for k in 0..s.num_uavs() {
                    let m = d.association.serving(k, n);
                    let a = model::rate(&d, &s, m, k, n).unwrap();
                    let b = model::rate(&rec, &s, m, k, n).unwrap();
                    assert!((a - b).abs() <= 1e-7 * a.abs().max(1e-12));
                }
            }
        }
    }

    #[test]
    fn initial_design_is_feasible_and_maximal() {
        let s = Scenario::paper().with_num_slots(4).with_gamma_dbw(-21.0);
        let traj = s.straight_trajectories();
        let assoc = crate::association::nearest_association(&s, &traj);
        let base: Vec<CMat> = (0..3).map(|_| linalg::scaled_identity(4, s.p_max / 4.0)).collect();
        let d = initial_design(&s, traj, assoc, &base, CovarianceClass::Full).unwrap();
        let report = model::check_constraints(&d, &s);
        assert!(report.is_empty(), "{report:?}");
        // Some constraint is tight (ρ < 1) or ρ = 1.
        for n in 0..4 {
            let worst = (0..s.num_sensing())
                .map(|q| model::illumination_power(&d, &s, q, n).unwrap())
                .fold(f64::INFINITY, f64::min);
            let full_beams = (0..3)
                .filter(|&m| (0..2).any(|k| d.association.alpha(m, k, n)))
                .all(|m| linalg::trace_re(d.r(m, n)) < 1e-12);
            assert!(full_beams || (worst - s.gamma).abs() <= 1e-9 * s.gamma);
        }
        let too_high = s.with_gamma_dbw(-10.0);
        let traj = too_high.straight_trajectories();
        let assoc = crate::association::nearest_association(&too_high, &traj);
        assert!(matches!(
            initial_design(&too_high, traj, assoc, &base, CovarianceClass::Full),
            Err(BeamformingError::Infeasible { .. })
        ));
    }
}
