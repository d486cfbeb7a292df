//! Flat CSV exports with header rows. Powers are in dBW; zero power is written
//! as the −300 dBW floor.

use std::io::Write;

use isac_core::model::{self, watts_to_dbw};
use isac_core::orchestrator::SweepResult;
use isac_core::{Design, Point, Scenario};

pub type CsvResult = Result<(), csv::Error>;

/// One row per (slot, UAV): position, serving GBS and rate.
pub fn write_slots<W: Write>(out: W, design: &Design, scenario: &Scenario) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot", "uav", "x", "y", "altitude", "gbs", "rate"])?;
    for n in 0..scenario.num_slots {
        for k in 0..scenario.num_uavs() {
            let p = design.position(k, n);
            let m = design.association.serving(k, n);
            let rate = model::rate(design, scenario, m, k, n).unwrap_or(f64::NAN);
            w.write_record([
                n.to_string(),
                k.to_string(),
                p.x.to_string(),
                p.y.to_string(),
                scenario.uav_altitudes[k].to_string(),
                m.to_string(),
                rate.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per (Γ, method). Infeasible points have an empty rate.
pub fn write_sweep<W: Write>(out: W, sweep: &SweepResult) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["gamma_dbw", "method", "feasible", "avg_rate"])?;
    for p in &sweep.points {
        w.write_record([
            p.gamma_dbw.to_string(),
            p.method.name().to_string(),
            p.feasible().to_string(),
            p.avg_rate.map(|r| r.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Rectangular evaluation grid, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<Point> {
        let axis = |lo: f64, hi: f64, n: usize, i: usize| {
            if n <= 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(Point::new(axis(self.x_min, self.x_max, self.nx, i), axis(self.y_min, self.y_max, self.ny, j)));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Beampattern {
    /// `(x, y, power_dbw)`.
    pub grid: Vec<(f64, f64, f64)>,
    /// `(uav, x, y, gbs, rate)`.
    pub uavs: Vec<(usize, f64, f64, usize, f64)>,
}

pub fn beampattern(
    design: &Design,
    scenario: &Scenario,
    slot: usize,
    altitude: f64,
    grid: &Grid,
) -> Result<Beampattern, model::ModelError> {
    let mut cells = Vec::with_capacity(grid.nx * grid.ny);
    for p in grid.points() {
        let z = model::illumination_at(design, scenario, &p, altitude, slot)?;
        cells.push((p.x, p.y, watts_to_dbw(z)));
    }
    let mut uavs = Vec::new();
    for k in 0..scenario.num_uavs() {
        let p = design.position(k, slot);
        let m = design.association.serving(k, slot);
        uavs.push((k, p.x, p.y, m, model::rate(design, scenario, m, k, slot)?));
    }
    Ok(Beampattern { grid: cells, uavs })
}

pub fn write_beampattern<W: Write>(out: W, pattern: &Beampattern) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "power_dbw"])?;
    for (x, y, p) in &pattern.grid {
        w.write_record([x.to_string(), y.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_beampattern_uavs<W: Write>(out: W, pattern: &Beampattern) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["uav", "x", "y", "gbs", "rate"])?;
    for (k, x, y, m, r) in &pattern.uavs {
        w.write_record([k.to_string(), x.to_string(), y.to_string(), m.to_string(), r.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use isac_core::linalg;
    use isac_core::model::{Association, DBW_FLOOR};

    fn paper_small() -> (Scenario, Design) {
        let s = Scenario::paper().with_num_slots(3);
        let d = Design::new(&s, s.straight_trajectories(), Association::uniform(2, 3, 0));
        (s, d)
    }

    const GRID: Grid = Grid { x_min: 150.0, x_max: 250.0, y_min: 150.0, y_max: 250.0, nx: 5, ny: 3 };

    #[test]
    fn grid_layout() {
        let pts = GRID.points();
        assert_eq!(pts.len(), 15);
        assert_eq!(pts[0], Point::new(150.0, 150.0));
        assert_eq!(pts[4], Point::new(250.0, 150.0));
        assert_eq!(pts[14], Point::new(250.0, 250.0));
    }

    #[test]
    fn zero_design_hits_floor() {
        let (s, d) = paper_small();
        let bp = beampattern(&d, &s, 1, 10.0, &GRID).unwrap();
        assert!(bp.grid.iter().all(|c| c.2 == DBW_FLOOR));
    }

    #[test]
    fn isotropic_pattern_is_distance_only() {
        let (s, mut d) = paper_small();
        for m in 0..3 {
            *d.r_mut(m, 0) = linalg::scaled_identity(4, s.p_max / 4.0);
        }
        let bp = beampattern(&d, &s, 0, 10.0, &GRID).unwrap();
        for &(x, y, p) in &bp.grid {
            let want: f64 = s
                .gbs_positions
                .iter()
                .map(|u| s.p_max / ((Point::new(x, y) - u).norm_squared() + 100.0))
                .sum();
            assert!((p - watts_to_dbw(want)).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_headers_and_rows() {
        let (s, d) = paper_small();
        let mut buf = Vec::new();
        write_slots(&mut buf, &d, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "slot,uav,x,y,altitude,gbs,rate");
        assert_eq!(lines.len(), 1 + 3 * 2);
        assert!(lines[1].starts_with("0,0,50,250,80,0,"));
    }
}
