//! TOML scenario documents.
//!
//! Keys are the [`Scenario`] field names. Power-like quantities may instead be
//! given in decibels: `gamma_dbw`, `noise_dbw` (for `noise_power`) and
//! `kappa_db`. Positions are `[x, y]` pairs in meters.

use std::path::Path;

use isac_core::model::{dbw_to_watts, watts_to_dbw, ScenarioError};
use isac_core::{Point, Scenario};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The bundled deployment.
pub const PAPER_SCENARIO: &str = include_str!("../scenarios/paper.scenario");

#[derive(Debug, Error)]
pub enum ScenarioFileError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("field `{0}` is given both linearly and in decibels")]
    Conflict(&'static str),
    #[error("missing field `{0}`")]
    Missing(&'static str),
    #[error("invalid scenario: {0}")]
    Invalid(#[from] ScenarioError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub gbs_positions: Vec<[f64; 2]>,
    pub uav_initial: Vec<[f64; 2]>,
    pub uav_final: Vec<[f64; 2]>,
    pub uav_altitudes: Vec<f64>,
    pub sensing_points: Vec<[f64; 2]>,
    pub sensing_altitude: f64,
    pub num_antennas: usize,
    #[serde(default = "half_wavelength")]
    pub antenna_spacing_over_wavelength: f64,
    pub num_slots: usize,
    pub slot_duration: f64,
    pub p_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_dbw: Option<f64>,
    pub v_max: f64,
    pub d_min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_dbw: Option<f64>,
}

fn half_wavelength() -> f64 {
    0.5
}

fn pick(name: &'static str, linear: Option<f64>, db: Option<f64>) -> Result<f64, ScenarioFileError> {
    match (linear, db) {
        (Some(_), Some(_)) => Err(ScenarioFileError::Conflict(name)),
        (Some(v), None) => Ok(v),
        (None, Some(d)) => Ok(dbw_to_watts(d)),
        (None, None) => Err(ScenarioFileError::Missing(name)),
    }
}

fn points(v: &[[f64; 2]]) -> Vec<Point> {
    v.iter().map(|p| Point::new(p[0], p[1])).collect()
}

fn pairs(v: &[Point]) -> Vec<[f64; 2]> {
    v.iter().map(|p| [p.x, p.y]).collect()
}

impl ScenarioDoc {
    pub fn to_scenario(&self) -> Result<Scenario, ScenarioFileError> {
        let scenario = Scenario {
            gbs_positions: points(&self.gbs_positions),
            uav_initial: points(&self.uav_initial),
            uav_final: points(&self.uav_final),
            uav_altitudes: self.uav_altitudes.clone(),
            sensing_points: points(&self.sensing_points),
            sensing_altitude: self.sensing_altitude,
            num_antennas: self.num_antennas,
            antenna_spacing_over_wavelength: self.antenna_spacing_over_wavelength,
            num_slots: self.num_slots,
            slot_duration: self.slot_duration,
            p_max: self.p_max,
            gamma: pick("gamma", self.gamma, self.gamma_dbw)?,
            v_max: self.v_max,
            d_min: self.d_min,
            kappa: pick("kappa", self.kappa, self.kappa_db)?,
            noise_power: pick("noise_power", self.noise_power, self.noise_dbw)?,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Linear-unit echo of a scenario.
    pub fn from_scenario(s: &Scenario) -> Self {
        ScenarioDoc {
            gbs_positions: pairs(&s.gbs_positions),
            uav_initial: pairs(&s.uav_initial),
            uav_final: pairs(&s.uav_final),
            uav_altitudes: s.uav_altitudes.clone(),
            sensing_points: pairs(&s.sensing_points),
            sensing_altitude: s.sensing_altitude,
            num_antennas: s.num_antennas,
            antenna_spacing_over_wavelength: s.antenna_spacing_over_wavelength,
            num_slots: s.num_slots,
            slot_duration: s.slot_duration,
            p_max: s.p_max,
            gamma: Some(s.gamma),
            gamma_dbw: None,
            v_max: s.v_max,
            d_min: s.d_min,
            kappa: Some(s.kappa),
            kappa_db: None,
            noise_power: Some(s.noise_power),
            noise_dbw: None,
        }
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioFileError> {
    let doc: ScenarioDoc = toml::from_str(text)?;
    doc.to_scenario()
}

/// Loads a scenario file; the name `paper` selects the bundled deployment.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioFileError> {
    if path.as_os_str() == "paper" && !path.exists() {
        return parse_scenario(PAPER_SCENARIO);
    }
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioFileError::Io { path: path.display().to_string(), source })?;
    parse_scenario(&text)
}

pub fn gamma_dbw(s: &Scenario) -> f64 {
    watts_to_dbw(s.gamma)
}
