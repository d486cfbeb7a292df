//! Clarabel backend for [`ConicProblem`].

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use isac_core::conic::{Cone, ConicProblem, ConicSolution, ConicSolver, Sense, SolveStatus, SolverSettings};

/// Interior-point solver for zero, nonnegative, second-order, exponential and
/// PSD cones.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClarabelSolver {
    pub verbose: bool,
}

/// Problem data in Clarabel's `min qᵀx  s.t.  Ax + s = b, s ∈ K` form.
pub struct Standardized {
    pub q: Vec<f64>,
    pub a: CscMatrix<f64>,
    pub b: Vec<f64>,
    pub cones: Vec<SupportedConeT<f64>>,
}

/// Row scaling of a PSD triangle row: off-diagonal entries carry `√2`.
fn psd_row_scales(dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(dim * (dim + 1) / 2);
    for j in 0..dim {
        for i in 0..=j {
            out.push(if i == j { 1.0 } else { std::f64::consts::SQRT_2 });
        }
    }
    out
}

pub fn standardize(problem: &ConicProblem) -> Standardized {
    let n = problem.num_vars();
    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut q = vec![0.0; n];
    for &(v, c) in &problem.objective.terms {
        q[v] += sign * c;
    }

    // Triplets per column for CSC assembly.
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut b = Vec::new();
    let mut cones = Vec::new();
    for c in &problem.constraints {
        let scales = match c.cone {
            Cone::PsdTriangle { dim } => psd_row_scales(dim),
            _ => vec![1.0; c.rows.len()],
        };
        for (row, scale) in c.rows.iter().zip(scales) {
            let r = b.len();
            for (v, coef) in row.compact().terms {
                if coef != 0.0 {
                    columns[v].push((r, -coef * scale));
                }
            }
            b.push(row.constant * scale);
        }
        cones.push(match c.cone {
            Cone::Zero => SupportedConeT::ZeroConeT(c.rows.len()),
            Cone::Nonnegative => SupportedConeT::NonnegativeConeT(c.rows.len()),
            Cone::SecondOrder => SupportedConeT::SecondOrderConeT(c.rows.len()),
            Cone::Exponential => SupportedConeT::ExponentialConeT(),
            Cone::PsdTriangle { dim } => SupportedConeT::PSDTriangleConeT(dim),
        });
    }

    let m = b.len();
    let mut colptr = Vec::with_capacity(n + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    colptr.push(0);
    for mut col in columns {
        col.sort_by_key(|e| e.0);
        for (r, v) in col {
            rowval.push(r);
            nzval.push(v);
        }
        colptr.push(rowval.len());
    }
    let a = CscMatrix::new(m, n, colptr, rowval, nzval);
    Standardized { q, a, b, cones }
}

fn map_status(status: SolverStatus) -> SolveStatus {
    match status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => SolveStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
        _ => SolveStatus::NumericalFailure,
    }
}

impl ConicSolver for ClarabelSolver {
    fn solve(&self, problem: &ConicProblem, settings: &SolverSettings) -> ConicSolution {
        let n = problem.num_vars();
        if problem.validate().is_err() {
            return ConicSolution::failed(SolveStatus::NumericalFailure, n);
        }
        let data = standardize(problem);
        let p = CscMatrix::zeros((n, n));
        let clarabel_settings = DefaultSettingsBuilder::default()
            .verbose(self.verbose)
            .max_iter(settings.max_iter)
            .tol_feas(settings.tol_feas)
            .tol_gap_abs(settings.tol_gap)
            .tol_gap_rel(settings.tol_gap)
            .build()
            .expect("valid settings");
        let mut solver = match DefaultSolver::new(&p, &data.q, &data.a, &data.b, &data.cones, clarabel_settings) {
            Ok(s) => s,
            Err(_) => return ConicSolution::failed(SolveStatus::NumericalFailure, n),
        };
        solver.solve();
        let sol = &solver.solution;
        let status = map_status(sol.status);
        let x = sol.x.clone();
        let objective = if status == SolveStatus::Optimal {
            problem.objective.evaluate(&x)
        } else {
            f64::NAN
        };
        ConicSolution {
            status,
            objective,
            x,
            iterations: sol.iterations,
            solve_time: sol.solve_time,
            duality_gap: Some((sol.obj_val - sol.obj_val_dual).abs()),
        }
    }
}
