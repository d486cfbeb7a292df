//! Conic Benchmark Format (CBF, version 3) dump of a [`ConicProblem`], for
//! cross-checking a subproblem against an external solver.
//!
//! Scalar cones become `L=`, `L+`, `Q` and `EXP` rows. PSD triangles are
//! written as `PSDCON` matrix inequalities in lower-triangle coordinates.

use std::cell::Cell;
use std::fmt::Write as _;
use std::path::PathBuf;

use isac_core::conic::{Cone, ConicProblem, ConicSolution, ConicSolver, LinExpr, Sense, SolverSettings};

/// Wraps a solver and writes every problem it receives to
/// `dir/problem-NNNNN.cbf` before solving it.
pub struct CbfDump<S> {
    pub inner: S,
    pub dir: PathBuf,
    count: Cell<usize>,
}

impl<S: ConicSolver> CbfDump<S> {
    pub fn new(inner: S, dir: PathBuf) -> Self {
        CbfDump { inner, dir, count: Cell::new(0) }
    }

    pub fn written(&self) -> usize {
        self.count.get()
    }
}

impl<S: ConicSolver> ConicSolver for CbfDump<S> {
    fn solve(&self, problem: &ConicProblem, settings: &SolverSettings) -> ConicSolution {
        let i = self.count.get();
        // A failed write must not change the optimization result.
        if std::fs::write(self.dir.join(format!("problem-{i:05}.cbf")), to_cbf(problem)).is_ok() {
            self.count.set(i + 1);
        }
        self.inner.solve(problem, settings)
    }
}

pub fn to_cbf(problem: &ConicProblem) -> String {
    let mut out = String::new();
    let mut line = |s: &str| {
        out.push_str(s);
        out.push('\n');
    };
    line("VER");
    line("3");
    line("");
    line("OBJSENSE");
    line(match problem.sense {
        Sense::Minimize => "MIN",
        Sense::Maximize => "MAX",
    });
    line("");
    line("VAR");
    line(&format!("{} 1", problem.num_vars()));
    line(&format!("F {}", problem.num_vars()));
    line("");

    // Scalar rows, grouped per cone in declaration order.
    let mut scalar_rows: Vec<LinExpr> = Vec::new();
    let mut cones: Vec<(&str, usize)> = Vec::new();
    let mut psd: Vec<(usize, &[LinExpr])> = Vec::new();
    for c in &problem.constraints {
        match c.cone {
            Cone::Zero => cones.push(("L=", c.rows.len())),
            Cone::Nonnegative => cones.push(("L+", c.rows.len())),
            Cone::SecondOrder => cones.push(("Q", c.rows.len())),
            // CBF orders the exponential cone as (z, y, x).
            Cone::Exponential => cones.push(("EXP", 3)),
            Cone::PsdTriangle { dim } => {
                psd.push((dim, &c.rows));
                continue;
            }
        }
        match c.cone {
            Cone::Exponential => scalar_rows.extend([c.rows[2].clone(), c.rows[1].clone(), c.rows[0].clone()]),
            _ => scalar_rows.extend(c.rows.iter().cloned()),
        }
    }

    let mut body = String::new();
    if !psd.is_empty() {
        let _ = writeln!(body, "PSDCON\n{}", psd.len());
        for (dim, _) in &psd {
            let _ = writeln!(body, "{dim}");
        }
        let _ = writeln!(body);
    }
    if !cones.is_empty() {
        let _ = writeln!(body, "CON\n{} {}", scalar_rows.len(), cones.len());
        for (name, len) in &cones {
            let _ = writeln!(body, "{name} {len}");
        }
        let _ = writeln!(body);
    }

    let objective = problem.objective.compact();
    let obj_terms: Vec<_> = objective.terms.iter().filter(|t| t.1 != 0.0).collect();
    if !obj_terms.is_empty() {
        let _ = writeln!(body, "OBJACOORD\n{}", obj_terms.len());
        for (v, c) in obj_terms {
            let _ = writeln!(body, "{v} {c:e}");
        }
        let _ = writeln!(body);
    }
    if objective.constant != 0.0 {
        let _ = writeln!(body, "OBJBCOORD\n{:e}\n", objective.constant);
    }

    // Triangle rows are indexed column-major over the upper triangle; (i, j)
    // with i ≤ j is written as the lower entry (j, i).
    let mut hcoord = Vec::new();
    let mut dcoord = Vec::new();
    for (p, (dim, rows)) in psd.iter().enumerate() {
        let mut r = 0;
        for j in 0..*dim {
            for i in 0..=j {
                let e = rows[r].compact();
                for &(v, c) in &e.terms {
                    if c != 0.0 {
                        hcoord.push(format!("{p} {v} {j} {i} {c:e}"));
                    }
                }
                if e.constant != 0.0 {
                    dcoord.push(format!("{p} {j} {i} {:e}", e.constant));
                }
                r += 1;
            }
        }
    }
    if !hcoord.is_empty() {
        let _ = writeln!(body, "HCOORD\n{}", hcoord.len());
        for s in &hcoord {
            let _ = writeln!(body, "{s}");
        }
        let _ = writeln!(body);
    }
    if !dcoord.is_empty() {
        let _ = writeln!(body, "DCOORD\n{}", dcoord.len());
        for s in &dcoord {
            let _ = writeln!(body, "{s}");
        }
        let _ = writeln!(body);
    }

    let mut acoord = Vec::new();
    let mut bcoord = Vec::new();
    for (r, e) in scalar_rows.iter().enumerate() {
        for &(v, c) in &e.compact().terms {
            if c != 0.0 {
                acoord.push(format!("{r} {v} {c:e}"));
            }
        }
        if e.constant != 0.0 {
            bcoord.push(format!("{r} {:e}", e.constant));
        }
    }
    if !acoord.is_empty() {
        let _ = writeln!(body, "ACOORD\n{}", acoord.len());
        for s in &acoord {
            let _ = writeln!(body, "{s}");
        }
        let _ = writeln!(body);
    }
    if !bcoord.is_empty() {
        let _ = writeln!(body, "BCOORD\n{}", bcoord.len());
        for s in &bcoord {
            let _ = writeln!(body, "{s}");
        }
        let _ = writeln!(body);
    }
    out.push_str(&body);
    out
}
