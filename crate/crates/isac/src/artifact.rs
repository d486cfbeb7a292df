//! JSON run artifacts.
//!
//! Complex matrices are stored as `{rows, cols, data}` with `data` holding
//! interleaved `(re, im)` pairs in row-major order. Floats are written in
//! shortest round-trip form, so a design survives write → read bit-exactly.

use std::path::Path;

use isac_core::model::{self, ConstraintFamily, Violation};
use isac_core::orchestrator::{AoTrace, OuterRecord, RunOutcome, StageSeconds, StageStatus};
use isac_core::{Association, CMat, Design, Point, Scenario, C64};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario_file::{ScenarioDoc, ScenarioFileError};

pub const SCHEMA: &str = "isac-run/1";

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema `{0}`")]
    Schema(String),
    #[error("artifact scenario: {0}")]
    Scenario(#[from] ScenarioFileError),
    #[error("artifact shape: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixDoc {
    pub fn from_matrix(m: &CMat) -> Self {
        let mut data = Vec::with_capacity(2 * m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push(m[(r, c)].re);
                data.push(m[(r, c)].im);
            }
        }
        MatrixDoc { rows: m.nrows(), cols: m.ncols(), data }
    }

    pub fn to_matrix(&self) -> Result<CMat, ArtifactError> {
        if self.data.len() != 2 * self.rows * self.cols {
            return Err(ArtifactError::Shape(format!(
                "{}x{} matrix with {} values",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(CMat::from_fn(self.rows, self.cols, |r, c| {
            let i = 2 * (r * self.cols + c);
            C64::new(self.data[i], self.data[i + 1])
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignDoc {
    /// `[uav][slot]`.
    pub trajectories: Vec<Vec<[f64; 2]>>,
    /// Serving GBS, `[uav][slot]`.
    pub association: Vec<Vec<usize>>,
    /// `[slot][gbs][uav]`.
    pub w: Vec<Vec<Vec<MatrixDoc>>>,
    /// `[slot][gbs]`.
    pub r: Vec<Vec<MatrixDoc>>,
}

impl DesignDoc {
    pub fn from_design(d: &Design) -> Self {
        let (m, k, n) = (d.num_gbs(), d.num_uavs(), d.num_slots());
        DesignDoc {
            trajectories: d.trajectories.iter().map(|t| t.iter().map(|p| [p.x, p.y]).collect()).collect(),
            association: (0..k).map(|u| (0..n).map(|s| d.association.serving(u, s)).collect()).collect(),
            w: (0..n)
                .map(|s| (0..m).map(|g| (0..k).map(|u| MatrixDoc::from_matrix(d.w(g, u, s))).collect()).collect())
                .collect(),
            r: (0..n).map(|s| (0..m).map(|g| MatrixDoc::from_matrix(d.r(g, s))).collect()).collect(),
        }
    }

    pub fn to_design(&self, scenario: &Scenario) -> Result<Design, ArtifactError> {
        let (m, k, n) = (scenario.num_gbs(), scenario.num_uavs(), scenario.num_slots);
        let shape_ok = self.trajectories.len() == k
            && self.trajectories.iter().all(|t| t.len() == n)
            && self.association.len() == k
            && self.association.iter().all(|a| a.len() == n && a.iter().all(|&g| g < m))
            && self.w.len() == n
            && self.w.iter().all(|s| s.len() == m && s.iter().all(|g| g.len() == k))
            && self.r.len() == n
            && self.r.iter().all(|s| s.len() == m);
        if !shape_ok {
            return Err(ArtifactError::Shape("design does not match the scenario dimensions".into()));
        }
        let trajectories = self
            .trajectories
            .iter()
            .map(|t| t.iter().map(|p| Point::new(p[0], p[1])).collect())
            .collect();
        let association = Association::from_fn(k, n, |u, s| self.association[u][s]);
        let mut d = Design::new(scenario, trajectories, association);
        for s in 0..n {
            for g in 0..m {
                for u in 0..k {
                    *d.w_mut(g, u, s) = self.w[s][g][u].to_matrix()?;
                }
                *d.r_mut(g, s) = self.r[s][g].to_matrix()?;
            }
        }
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterDoc {
    pub after_association: f64,
    pub after_beamforming: f64,
    pub after_trajectory: f64,
    pub objective: f64,
    pub beamforming_status: String,
    pub trajectory_status: String,
    pub beamforming_iterations: usize,
    pub trajectory_accepted: usize,
    pub trust_radius: Option<f64>,
    pub seconds_association: f64,
    pub seconds_beamforming: f64,
    pub seconds_trajectory: f64,
}

fn status_name(s: StageStatus) -> &'static str {
    match s {
        StageStatus::Completed => "completed",
        StageStatus::Skipped => "skipped",
        StageStatus::Failed => "failed",
    }
}

fn status_from(s: &str) -> StageStatus {
    match s {
        "completed" => StageStatus::Completed,
        "skipped" => StageStatus::Skipped,
        _ => StageStatus::Failed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDoc {
    pub initial_objective: f64,
    pub converged: bool,
    pub outer: Vec<OuterDoc>,
}

impl TraceDoc {
    pub fn from_trace(t: &AoTrace) -> Self {
        TraceDoc {
            initial_objective: t.initial_objective,
            converged: t.converged,
            outer: t
                .outer
                .iter()
                .map(|r| OuterDoc {
                    after_association: r.after_association,
                    after_beamforming: r.after_beamforming,
                    after_trajectory: r.after_trajectory,
                    objective: r.objective,
                    beamforming_status: status_name(r.beamforming_status).into(),
                    trajectory_status: status_name(r.trajectory_status).into(),
                    beamforming_iterations: r.beamforming_iterations,
                    trajectory_accepted: r.trajectory_accepted,
                    trust_radius: r.trust_radius,
                    seconds_association: r.seconds.association,
                    seconds_beamforming: r.seconds.beamforming,
                    seconds_trajectory: r.seconds.trajectory,
                })
                .collect(),
        }
    }

    pub fn to_trace(&self) -> AoTrace {
        AoTrace {
            initial_objective: self.initial_objective,
            converged: self.converged,
            outer: self
                .outer
                .iter()
                .map(|r| OuterRecord {
                    after_association: r.after_association,
                    after_beamforming: r.after_beamforming,
                    after_trajectory: r.after_trajectory,
                    objective: r.objective,
                    beamforming_status: status_from(&r.beamforming_status),
                    trajectory_status: status_from(&r.trajectory_status),
                    beamforming_iterations: r.beamforming_iterations,
                    trajectory_accepted: r.trajectory_accepted,
                    trust_radius: r.trust_radius,
                    seconds: StageSeconds {
                        association: r.seconds_association,
                        beamforming: r.seconds_beamforming,
                        trajectory: r.seconds_trajectory,
                    },
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationDoc {
    pub family: String,
    pub index: usize,
    pub other: Option<usize>,
    pub slot: usize,
    pub magnitude: f64,
}

impl From<&Violation> for ViolationDoc {
    fn from(v: &Violation) -> Self {
        let family = match v.family {
            ConstraintFamily::Sensing => "sensing",
            ConstraintFamily::Power => "power",
            ConstraintFamily::Psd => "psd",
            ConstraintFamily::InitialPosition => "initial_position",
            ConstraintFamily::FinalPosition => "final_position",
            ConstraintFamily::Speed => "speed",
            ConstraintFamily::Collision => "collision",
            ConstraintFamily::Association => "association",
        };
        ViolationDoc { family: family.into(), index: v.index, other: v.other, slot: v.slot, magnitude: v.magnitude }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub schema: String,
    pub method: String,
    pub seed: u64,
    pub scenario: ScenarioDoc,
    pub design: DesignDoc,
    pub trace: TraceDoc,
    pub objective: f64,
    pub average_sum_rate: f64,
    /// Serving-link rate, `[slot][uav]`, bps/Hz.
    pub slot_rates: Vec<Vec<f64>>,
    /// Illumination power, `[slot][sensing point]`, watts.
    pub illumination: Vec<Vec<f64>>,
    pub violations: Vec<ViolationDoc>,
    pub error: Option<String>,
}

impl RunArtifact {
    pub fn from_outcome(scenario: &Scenario, outcome: &RunOutcome, seed: u64) -> Self {
        let d = &outcome.design;
        let slot_rates = (0..scenario.num_slots)
            .map(|n| {
                (0..scenario.num_uavs())
                    .map(|k| model::rate(d, scenario, d.association.serving(k, n), k, n).unwrap_or(f64::NAN))
                    .collect()
            })
            .collect();
        let illumination = (0..scenario.num_slots)
            .map(|n| {
                (0..scenario.num_sensing())
                    .map(|q| model::illumination_power(d, scenario, q, n).unwrap_or(f64::NAN))
                    .collect()
            })
            .collect();
        RunArtifact {
            schema: SCHEMA.into(),
            method: outcome.method.name().into(),
            seed,
            scenario: ScenarioDoc::from_scenario(scenario),
            design: DesignDoc::from_design(d),
            trace: TraceDoc::from_trace(&outcome.trace),
            objective: outcome.objective(),
            average_sum_rate: outcome.average_sum_rate(),
            slot_rates,
            illumination,
            violations: outcome.violations.violations.iter().map(ViolationDoc::from).collect(),
            error: outcome.error.as_ref().map(|e| e.to_string()),
        }
    }

    pub fn scenario(&self) -> Result<Scenario, ArtifactError> {
        Ok(self.scenario.to_scenario()?)
    }

    pub fn design(&self) -> Result<Design, ArtifactError> {
        self.design.to_design(&self.scenario()?)
    }

    pub fn to_json(&self) -> Result<String, ArtifactError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ArtifactError> {
        let a: RunArtifact = serde_json::from_str(text)?;
        if a.schema != SCHEMA {
            return Err(ArtifactError::Schema(a.schema));
        }
        Ok(a)
    }

    pub fn write(&self, path: &Path) -> Result<(), ArtifactError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, ArtifactError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
