//! Conic problem description shared by every convex subproblem.
//!
//! Problems are stated over a flat vector of real scalars. Constraints are
//! affine maps of that vector that must land in one of the supported cones:
//!
//! * `Zero`: every row equals zero
//! * `Nonnegative`: every row is `≥ 0`
//! * `SecondOrder`: `r₀ ≥ ‖(r₁, …)‖`
//! * `Exponential`: `(x, y, z)` with `y·exp(x/y) ≤ z`, `y > 0`
//! * `PsdTriangle`: a real symmetric matrix given by its upper triangle in
//!   column-major order, unscaled
//!
//! Complex Hermitian matrix variables are parameterized by their `n²` real
//! degrees of freedom; their PSD constraint is the real embedding
//! `[[Re X, −Im X], [Im X, Re X]] ⪰ 0`. Solver backends never see complex numbers.

use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use thiserror::Error;

use crate::linalg::{self, CMat, C64};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConicError {
    #[error("matrix is not Hermitian (relative defect {0:e})")]
    NotHermitian(f64),
    #[error("embedded matrix must have even dimension, got {0}")]
    OddEmbedding(usize),
    #[error("constraint {constraint} references variable {var} but only {num_vars} are declared")]
    UnknownVariable { constraint: usize, var: usize, num_vars: usize },
    #[error("constraint {constraint}: {reason}")]
    BadShape { constraint: usize, reason: &'static str },
}

/// A scalar decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// `Σ cᵢ xᵢ + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr { terms: Vec::new(), constant: c }
    }

    pub fn var(v: Var) -> Self {
        LinExpr { terms: alloc::vec![(v.0, 1.0)], constant: 0.0 }
    }

    pub fn term(v: Var, coef: f64) -> Self {
        LinExpr { terms: alloc::vec![(v.0, coef)], constant: 0.0 }
    }

    pub fn add_term(&mut self, v: Var, coef: f64) -> &mut Self {
        self.terms.push((v.0, coef));
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    /// `self += scale · other`.
    pub fn add_scaled(&mut self, other: &LinExpr, scale: f64) -> &mut Self {
        self.terms.extend(other.terms.iter().map(|&(i, c)| (i, c * scale)));
        self.constant += scale * other.constant;
        self
    }

    pub fn scaled(&self, scale: f64) -> LinExpr {
        let mut e = LinExpr::zero();
        e.add_scaled(self, scale);
        e
    }

    pub fn neg(&self) -> LinExpr {
        self.scaled(-1.0)
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
    }

    /// Merges duplicate variables and drops exact zeros, sorted by index.
    pub fn compact(&self) -> LinExpr {
        let mut terms = self.terms.clone();
        terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (i, c) in terms {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += c,
                _ => out.push((i, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        LinExpr { terms: out, constant: self.constant }
    }

    /// Largest absolute coefficient (constant excluded).
    pub fn max_coef(&self) -> f64 {
        self.terms.iter().map(|t| t.1.abs()).fold(0.0, f64::max)
    }
}

/// Complex Hermitian `dim × dim` matrix variable.
///
/// Layout from `start`: the `dim` real diagonal entries, then `(Re, Im)` of
/// each strictly-upper entry in row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HermitianVar {
    start: usize,
    dim: usize,
}

impl HermitianVar {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_scalars(&self) -> usize {
        self.dim * self.dim
    }

    fn diag(&self, p: usize) -> Var {
        Var(self.start + p)
    }

    fn pair(&self, p: usize, q: usize) -> usize {
        debug_assert!(p < q);
        let n = self.dim;
        self.start + n + 2 * (p * (2 * n - p - 1) / 2 + (q - p - 1))
    }

    fn re(&self, p: usize, q: usize) -> LinExpr {
        match p.cmp(&q) {
            core::cmp::Ordering::Equal => LinExpr::var(self.diag(p)),
            core::cmp::Ordering::Less => LinExpr::var(Var(self.pair(p, q))),
            core::cmp::Ordering::Greater => LinExpr::var(Var(self.pair(q, p))),
        }
    }

    fn im(&self, p: usize, q: usize) -> LinExpr {
        match p.cmp(&q) {
            core::cmp::Ordering::Equal => LinExpr::zero(),
            core::cmp::Ordering::Less => LinExpr::var(Var(self.pair(p, q) + 1)),
            core::cmp::Ordering::Greater => LinExpr::term(Var(self.pair(q, p) + 1), -1.0),
        }
    }

    /// `Re tr(C X)`; only the Hermitian part of `C` contributes.
    pub fn inner(&self, c: &CMat) -> LinExpr {
        let n = self.dim;
        let mut e = LinExpr::zero();
        for p in 0..n {
            e.add_term(self.diag(p), c[(p, p)].re);
            for q in p + 1..n {
                let cpq = (c[(p, q)] + c[(q, p)].conj()) * 0.5;
                let idx = self.pair(p, q);
                e.add_term(Var(idx), 2.0 * cpq.re);
                e.add_term(Var(idx + 1), 2.0 * cpq.im);
            }
        }
        e
    }

    pub fn trace(&self) -> LinExpr {
        let mut e = LinExpr::zero();
        for p in 0..self.dim {
            e.add_term(self.diag(p), 1.0);
        }
        e
    }

    pub fn value(&self, x: &[f64]) -> CMat {
        let n = self.dim;
        let mut m = linalg::zeros(n);
        for p in 0..n {
            m[(p, p)] = C64::new(x[self.start + p], 0.0);
            for q in p + 1..n {
                let idx = self.pair(p, q);
                let z = C64::new(x[idx], x[idx + 1]);
                m[(p, q)] = z;
                m[(q, p)] = z.conj();
            }
        }
        m
    }

    /// Upper triangle (column-major) of the real `2n × 2n` embedding.
    pub fn embedded_triangle(&self) -> Vec<LinExpr> {
        let n = self.dim;
        let mut rows = Vec::with_capacity(n * (2 * n + 1));
        for j in 0..2 * n {
            for i in 0..=j {
                let e = match (i < n, j < n) {
                    (true, true) => self.re(i, j),
                    (true, false) => self.im(i, j - n).neg(),
                    (false, false) => self.re(i - n, j - n),
                    (false, true) => unreachable!("lower triangle"),
                };
                rows.push(e);
            }
        }
        rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    Zero,
    Nonnegative,
    SecondOrder,
    Exponential,
    /// Real symmetric `dim × dim` PSD matrix.
    PsdTriangle { dim: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeConstraint {
    pub cone: Cone,
    pub rows: Vec<LinExpr>,
}

/// Index of a constraint inside its problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstraintHandle(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlockKind {
    Scalars { start: usize, len: usize },
    Hermitian(HermitianVar),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub kind: BlockKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem {
    num_vars: usize,
    pub blocks: Vec<Block>,
    pub sense: Sense,
    pub objective: LinExpr,
    pub constraints: Vec<ConeConstraint>,
}

impl ConicProblem {
    pub fn new(sense: Sense) -> Self {
        ConicProblem {
            num_vars: 0,
            blocks: Vec::new(),
            sense,
            objective: LinExpr::zero(),
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn add_scalars(&mut self, name: &str, len: usize) -> Vec<Var> {
        let start = self.num_vars;
        self.num_vars += len;
        self.blocks.push(Block { name: name.into(), kind: BlockKind::Scalars { start, len } });
        (start..start + len).map(Var).collect()
    }

    pub fn add_scalar(&mut self, name: &str) -> Var {
        self.add_scalars(name, 1)[0]
    }

    /// Declares a Hermitian variable constrained to be PSD.
    pub fn add_hermitian_psd(&mut self, name: &str, dim: usize) -> HermitianVar {
        let h = HermitianVar { start: self.num_vars, dim };
        self.num_vars += h.num_scalars();
        self.blocks.push(Block { name: name.into(), kind: BlockKind::Hermitian(h) });
        self.constraints.push(ConeConstraint {
            cone: Cone::PsdTriangle { dim: 2 * dim },
            rows: h.embedded_triangle(),
        });
        h
    }

    pub fn set_objective(&mut self, objective: LinExpr) {
        self.objective = objective;
    }

    fn push(&mut self, cone: Cone, rows: Vec<LinExpr>) -> ConstraintHandle {
        self.constraints.push(ConeConstraint { cone, rows });
        ConstraintHandle(self.constraints.len() - 1)
    }

    /// `expr = 0`.
    pub fn add_zero(&mut self, expr: LinExpr) -> ConstraintHandle {
        self.push(Cone::Zero, alloc::vec![expr])
    }

    /// `expr ≥ 0`.
    pub fn add_nonneg(&mut self, expr: LinExpr) -> ConstraintHandle {
        self.push(Cone::Nonnegative, alloc::vec![expr])
    }

    /// `lhs ≤ rhs`.
    pub fn add_le(&mut self, lhs: &LinExpr, rhs: &LinExpr) -> ConstraintHandle {
        let mut e = rhs.clone();
        e.add_scaled(lhs, -1.0);
        self.add_nonneg(e)
    }

    /// `rows[0] ≥ ‖rows[1..]‖₂`.
    pub fn add_soc(&mut self, rows: Vec<LinExpr>) -> ConstraintHandle {
        self.push(Cone::SecondOrder, rows)
    }

    /// `y·exp(x/y) ≤ z`.
    pub fn add_exp(&mut self, x: LinExpr, y: LinExpr, z: LinExpr) -> ConstraintHandle {
        self.push(Cone::Exponential, alloc::vec![x, y, z])
    }

    /// `t ≤ ln(u)` through `(t, 1, u) ∈ K_exp`. Multiply `t` by `log₂ e` for a
    /// base-2 hypograph.
    pub fn add_log_hypograph(&mut self, t: Var, u: LinExpr) -> ConstraintHandle {
        self.add_exp(LinExpr::var(t), LinExpr::constant(1.0), u)
    }

    pub fn hermitian_value(&self, h: &HermitianVar, solution: &ConicSolution) -> CMat {
        h.value(&solution.x)
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        let check = |constraint: usize, e: &LinExpr| {
            for &(var, _) in &e.terms {
                if var >= self.num_vars {
                    return Err(ConicError::UnknownVariable { constraint, var, num_vars: self.num_vars });
                }
            }
            Ok(())
        };
        check(usize::MAX, &self.objective)?;
        for (i, c) in self.constraints.iter().enumerate() {
            let ok = match c.cone {
                Cone::Zero | Cone::Nonnegative => !c.rows.is_empty(),
                Cone::SecondOrder => !c.rows.is_empty(),
                Cone::Exponential => c.rows.len() == 3,
                Cone::PsdTriangle { dim } => dim > 0 && c.rows.len() == dim * (dim + 1) / 2,
            };
            if !ok {
                return Err(ConicError::BadShape { constraint: i, reason: "row count does not match cone" });
            }
            for e in &c.rows {
                check(i, e)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub status: SolveStatus,
    /// Objective in the problem's own sense (not negated for maximization).
    pub objective: f64,
    pub x: Vec<f64>,
    pub iterations: u32,
    /// Seconds; zero when the backend cannot measure time.
    pub solve_time: f64,
    pub duality_gap: Option<f64>,
}

impl ConicSolution {
    pub fn failed(status: SolveStatus, num_vars: usize) -> Self {
        ConicSolution {
            status,
            objective: f64::NAN,
            x: alloc::vec![0.0; num_vars],
            iterations: 0,
            solve_time: 0.0,
            duality_gap: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub max_iter: u32,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { tol_feas: 1e-8, tol_gap: 1e-8, max_iter: 200 }
    }
}

impl SolverSettings {
    /// Settings for the single retry after a numerical failure.
    pub fn tightened(&self) -> Self {
        SolverSettings {
            tol_feas: self.tol_feas * 0.1,
            tol_gap: self.tol_gap * 0.1,
            max_iter: self.max_iter.saturating_mul(2),
        }
    }
}

/// A backend able to solve [`ConicProblem`]s. Implementations must be
/// deterministic and hold no mutable state shared between calls.
pub trait ConicSolver {
    fn solve(&self, problem: &ConicProblem, settings: &SolverSettings) -> ConicSolution;
}

/// `[[Re X, −Im X], [Im X, Re X]]`.
pub fn embed_hermitian(x: &CMat) -> Result<DMatrix<f64>, ConicError> {
    let defect = linalg::hermitian_defect(x);
    if defect > 1e-12 {
        return Err(ConicError::NotHermitian(defect));
    }
    let n = x.nrows();
    Ok(DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = x[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    }))
}

/// Inverse of [`embed_hermitian`]; averages the duplicated blocks.
pub fn extract_hermitian(y: &DMatrix<f64>) -> Result<CMat, ConicError> {
    let d = y.nrows();
    if !d.is_multiple_of(2) || !y.is_square() {
        return Err(ConicError::OddEmbedding(d));
    }
    let n = d / 2;
    Ok(CMat::from_fn(n, n, |p, q| {
        let re = 0.5 * (y[(p, q)] + y[(p + n, q + n)]);
        let im = 0.5 * (y[(p + n, q)] - y[(p, q + n)]);
        C64::new(re, im)
    }))
}
