//! Deployment description, decision state and the exact physical quantities
//! (channels, SINR, rates, illumination power) evaluated on them.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DVector;
use thiserror::Error;

use crate::linalg::{self, CMat, CVec, Point, C64};

/// Zero power is exported as this many dBW.
pub const DBW_FLOOR: f64 = -300.0;

pub fn dbw_to_watts(dbw: f64) -> f64 {
    libm::pow(10.0, dbw / 10.0)
}

pub fn watts_to_dbw(watts: f64) -> f64 {
    if watts > 0.0 {
        (10.0 * libm::log10(watts)).max(DBW_FLOOR)
    } else {
        DBW_FLOOR
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("scenario needs at least one {0}")]
    Empty(&'static str),
    #[error("`{0}` must be finite and strictly positive")]
    NonPositive(&'static str),
    #[error("`{0}` must be finite and non-negative")]
    Negative(&'static str),
    #[error("`{0}` contains a non-finite coordinate")]
    NonFinite(&'static str),
    #[error("`{field}` has {found} entries, expected {expected}")]
    Length {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error(
        "straight-line reachability violated for UAV {uav}: distance {distance:.3} m exceeds (N-1)*v_max*slot_duration = {reach:.3} m"
    )]
    Unreachable { uav: usize, distance: f64, reach: f64 },
    #[error("{which} positions of UAVs {k} and {i} violate the minimum separation d_min")]
    EndpointCollision { which: &'static str, k: usize, i: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ModelError {
    #[error("non-finite geometry input")]
    NonFinite,
    #[error("non-positive altitude {0}")]
    Altitude(f64),
    #[error("quadratic form {value:e} is negative beyond tolerance (scale {scale:e}); covariance is not PSD")]
    NegativeQuadraticForm { value: f64, scale: f64 },
}

/// Immutable deployment: geometry, RF constants, limits and horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub gbs_positions: Vec<Point>,
    pub uav_initial: Vec<Point>,
    pub uav_final: Vec<Point>,
    pub uav_altitudes: Vec<f64>,
    pub sensing_points: Vec<Point>,
    pub sensing_altitude: f64,
    pub num_antennas: usize,
    pub antenna_spacing_over_wavelength: f64,
    pub num_slots: usize,
    /// Seconds.
    pub slot_duration: f64,
    /// Per-GBS power budget in watts.
    pub p_max: f64,
    /// Illumination threshold in watts.
    pub gamma: f64,
    pub v_max: f64,
    pub d_min: f64,
    pub kappa: f64,
    pub noise_power: f64,
}

impl Scenario {
    /// The bundled 400 m x 400 m deployment: three GBSs around a monitored
    /// airspace sampled at twenty points, two UAVs crossing the area.
    pub fn paper() -> Self {
        let mut sensing_points = Vec::with_capacity(20);
        for y in [185.0, 195.0, 205.0, 215.0] {
            for x in [180.0, 190.0, 200.0, 210.0, 220.0] {
                sensing_points.push(Point::new(x, y));
            }
        }
        Scenario {
            gbs_positions: vec![Point::new(170.0, 200.0), Point::new(200.0, 200.0), Point::new(230.0, 200.0)],
            uav_initial: vec![Point::new(50.0, 250.0), Point::new(50.0, 150.0)],
            uav_final: vec![Point::new(350.0, 250.0), Point::new(350.0, 150.0)],
            uav_altitudes: vec![80.0, 100.0],
            sensing_points,
            sensing_altitude: 10.0,
            num_antennas: 4,
            antenna_spacing_over_wavelength: 0.5,
            num_slots: 40,
            slot_duration: 1.5,
            p_max: 3.0,
            gamma: dbw_to_watts(-20.0),
            v_max: 10.0,
            d_min: 30.0,
            kappa: dbw_to_watts(-45.0),
            noise_power: dbw_to_watts(-100.0),
        }
    }

    pub fn num_gbs(&self) -> usize {
        self.gbs_positions.len()
    }

    pub fn num_uavs(&self) -> usize {
        self.uav_initial.len()
    }

    pub fn num_sensing(&self) -> usize {
        self.sensing_points.len()
    }

    /// Largest horizontal displacement per slot.
    pub fn step_limit(&self) -> f64 {
        self.v_max * self.slot_duration
    }

    /// Same mission re-discretized into `num_slots` slots of equal total duration.
    pub fn with_num_slots(&self, num_slots: usize) -> Self {
        let total = self.num_slots as f64 * self.slot_duration;
        Scenario {
            num_slots,
            slot_duration: total / num_slots.max(1) as f64,
            ..self.clone()
        }
    }

    pub fn with_gamma_dbw(&self, gamma_dbw: f64) -> Self {
        Scenario {
            gamma: dbw_to_watts(gamma_dbw),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let (m, k) = (self.num_gbs(), self.num_uavs());
        if m == 0 {
            return Err(ScenarioError::Empty("GBS"));
        }
        if k == 0 {
            return Err(ScenarioError::Empty("UAV"));
        }
        if self.num_sensing() == 0 {
            return Err(ScenarioError::Empty("sensing point"));
        }
        if self.num_slots == 0 {
            return Err(ScenarioError::Empty("slot"));
        }
        if self.num_antennas == 0 {
            return Err(ScenarioError::Empty("antenna"));
        }
        for (field, len) in [
            ("uav_final", self.uav_final.len()),
            ("uav_altitudes", self.uav_altitudes.len()),
        ] {
            if len != k {
                return Err(ScenarioError::Length { field, expected: k, found: len });
            }
        }
        for (field, pts) in [
            ("gbs_positions", &self.gbs_positions),
            ("uav_initial", &self.uav_initial),
            ("uav_final", &self.uav_final),
            ("sensing_points", &self.sensing_points),
        ] {
            if pts.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
                return Err(ScenarioError::NonFinite(field));
            }
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let non_negative = |v: f64| v.is_finite() && v >= 0.0;
        if !self.uav_altitudes.iter().all(|&h| positive(h)) {
            return Err(ScenarioError::NonPositive("uav_altitudes"));
        }
        for (field, v) in [
            ("sensing_altitude", self.sensing_altitude),
            ("antenna_spacing_over_wavelength", self.antenna_spacing_over_wavelength),
            ("slot_duration", self.slot_duration),
            ("p_max", self.p_max),
            ("kappa", self.kappa),
            ("noise_power", self.noise_power),
        ] {
            if !positive(v) {
                return Err(ScenarioError::NonPositive(field));
            }
        }
        for (field, v) in [("gamma", self.gamma), ("v_max", self.v_max), ("d_min", self.d_min)] {
            if !non_negative(v) {
                return Err(ScenarioError::Negative(field));
            }
        }
        let reach = (self.num_slots - 1) as f64 * self.step_limit();
        for uav in 0..k {
            let distance = (self.uav_final[uav] - self.uav_initial[uav]).norm();
            if distance > reach * (1.0 + 1e-12) {
                return Err(ScenarioError::Unreachable { uav, distance, reach });
            }
        }
        let d2 = self.d_min * self.d_min;
        for (which, pts) in [("initial", &self.uav_initial), ("final", &self.uav_final)] {
            for a in 0..k {
                for b in a + 1..k {
                    let dh = self.uav_altitudes[a] - self.uav_altitudes[b];
                    if (pts[a] - pts[b]).norm_squared() + dh * dh < d2 {
                        return Err(ScenarioError::EndpointCollision { which, k: a, i: b });
                    }
                }
            }
        }
        Ok(())
    }

    /// Channel from GBS `m` toward a receiver at horizontal `q`, altitude `h`.
    pub fn channel(&self, m: usize, q: &Point, h: f64) -> CVec {
        channel_vector(self, m, q, h)
    }

    /// Steering vector and squared distance from GBS `l` to sensing point `q`.
    pub fn sensing_link(&self, l: usize, q: usize) -> (CVec, f64) {
        let d2 = (self.gbs_positions[l] - self.sensing_points[q]).norm_squared()
            + self.sensing_altitude * self.sensing_altitude;
        let cos = self.sensing_altitude / libm::sqrt(d2);
        (
            steering_vector(cos, self.num_antennas, self.antenna_spacing_over_wavelength),
            d2,
        )
    }

    /// Horizontal point of `uav` at `slot` on the constant-speed straight line.
    pub fn straight_line_point(&self, uav: usize, slot: usize) -> Point {
        let frac = if self.num_slots > 1 {
            slot as f64 / (self.num_slots - 1) as f64
        } else {
            0.0
        };
        self.uav_initial[uav] + (self.uav_final[uav] - self.uav_initial[uav]) * frac
    }

    pub fn straight_trajectories(&self) -> Vec<Vec<Point>> {
        (0..self.num_uavs())
            .map(|k| {
                let mut traj: Vec<Point> = (0..self.num_slots).map(|n| self.straight_line_point(k, n)).collect();
                traj[0] = self.uav_initial[k];
                *traj.last_mut().unwrap() = self.uav_final[k];
                traj
            })
            .collect()
    }
}

/// Cosine of the angle of departure, computed straight from geometry.
pub fn cos_aod(q: &Point, u: &Point, h_alt: f64) -> f64 {
    h_alt / libm::sqrt((q - u).norm_squared() + h_alt * h_alt)
}

/// Angle of departure in radians, in `[0, π/2)`.
pub fn aod(q: &Point, u: &Point, h_alt: f64) -> Result<f64, ModelError> {
    if !(q.x.is_finite() && q.y.is_finite() && u.x.is_finite() && u.y.is_finite() && h_alt.is_finite()) {
        return Err(ModelError::NonFinite);
    }
    if h_alt <= 0.0 {
        return Err(ModelError::Altitude(h_alt));
    }
    Ok(libm::acos(cos_aod(q, u, h_alt).min(1.0)))
}

/// ULA response: element `p` is `exp(j 2π (d/λ) p cosθ)`.
pub fn steering_vector(cos_theta: f64, n_a: usize, spacing_ratio: f64) -> CVec {
    DVector::from_fn(n_a, |p, _| {
        let phase = 2.0 * PI * spacing_ratio * p as f64 * cos_theta;
        C64::new(libm::cos(phase), libm::sin(phase))
    })
}

pub fn path_gain(kappa: f64, q: &Point, u: &Point, h_alt: f64) -> f64 {
    kappa / ((q - u).norm_squared() + h_alt * h_alt)
}

/// LoS channel `sqrt(β) g` between GBS `m` and a UAV at `(q, h)`.
pub fn channel_vector(scenario: &Scenario, m: usize, q: &Point, h: f64) -> CVec {
    let u = &scenario.gbs_positions[m];
    let beta = path_gain(scenario.kappa, q, u, h);
    let g = steering_vector(
        cos_aod(q, u, h),
        scenario.num_antennas,
        scenario.antenna_spacing_over_wavelength,
    );
    g.scale(libm::sqrt(beta))
}

/// Serving-GBS index per (UAV, slot); equivalent to a one-hot `α_{m,k}[n]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Association {
    num_uavs: usize,
    serving: Vec<usize>,
}

impl Association {
    pub fn uniform(num_uavs: usize, num_slots: usize, gbs: usize) -> Self {
        Association {
            num_uavs,
            serving: vec![gbs; num_uavs * num_slots],
        }
    }

    pub fn from_fn(num_uavs: usize, num_slots: usize, mut f: impl FnMut(usize, usize) -> usize) -> Self {
        let mut serving = Vec::with_capacity(num_uavs * num_slots);
        for n in 0..num_slots {
            for k in 0..num_uavs {
                serving.push(f(k, n));
            }
        }
        Association { num_uavs, serving }
    }

    pub fn num_uavs(&self) -> usize {
        self.num_uavs
    }

    pub fn num_slots(&self) -> usize {
        self.serving.len().checked_div(self.num_uavs).unwrap_or(0)
    }

    pub fn serving(&self, k: usize, n: usize) -> usize {
        self.serving[n * self.num_uavs + k]
    }

    pub fn set(&mut self, k: usize, n: usize, m: usize) {
        self.serving[n * self.num_uavs + k] = m;
    }

    pub fn alpha(&self, m: usize, k: usize, n: usize) -> bool {
        self.serving(k, n) == m
    }
}

/// Per-slot decision state.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    num_gbs: usize,
    num_uavs: usize,
    num_slots: usize,
    num_antennas: usize,
    w_cov: Vec<CMat>,
    r_cov: Vec<CMat>,
    /// `trajectories[k][n]`.
    pub trajectories: Vec<Vec<Point>>,
    pub association: Association,
}

impl Design {
    /// All-zero covariances on the given trajectories and association.
    pub fn new(scenario: &Scenario, trajectories: Vec<Vec<Point>>, association: Association) -> Self {
        let (m, k, n, na) = (
            scenario.num_gbs(),
            scenario.num_uavs(),
            scenario.num_slots,
            scenario.num_antennas,
        );
        Design {
            num_gbs: m,
            num_uavs: k,
            num_slots: n,
            num_antennas: na,
            w_cov: vec![linalg::zeros(na); m * k * n],
            r_cov: vec![linalg::zeros(na); m * n],
            trajectories,
            association,
        }
    }

    pub fn num_gbs(&self) -> usize {
        self.num_gbs
    }
    pub fn num_uavs(&self) -> usize {
        self.num_uavs
    }
    pub fn num_slots(&self) -> usize {
        self.num_slots
    }
    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    fn w_index(&self, m: usize, k: usize, n: usize) -> usize {
        (n * self.num_gbs + m) * self.num_uavs + k
    }

    pub fn w(&self, m: usize, k: usize, n: usize) -> &CMat {
        &self.w_cov[self.w_index(m, k, n)]
    }

    pub fn w_mut(&mut self, m: usize, k: usize, n: usize) -> &mut CMat {
        let i = self.w_index(m, k, n);
        &mut self.w_cov[i]
    }

    pub fn r(&self, m: usize, n: usize) -> &CMat {
        &self.r_cov[n * self.num_gbs + m]
    }

    pub fn r_mut(&mut self, m: usize, n: usize) -> &mut CMat {
        &mut self.r_cov[n * self.num_gbs + m]
    }

    /// `X_m[n] = Σ_k W_{m,k}[n] + R_m[n]`.
    pub fn tx_covariance(&self, m: usize, n: usize) -> CMat {
        let mut x = self.r(m, n).clone();
        for k in 0..self.num_uavs {
            x += self.w(m, k, n);
        }
        x
    }

    pub fn position(&self, k: usize, n: usize) -> &Point {
        &self.trajectories[k][n]
    }

    /// Moves every beam whose UAV is not served by that GBS into the GBS's
    /// sensing covariance. Transmit covariances and all served rates are unchanged.
    pub fn fold_unassociated(&mut self) {
        for n in 0..self.num_slots {
            for m in 0..self.num_gbs {
                for k in 0..self.num_uavs {
                    if !self.association.alpha(m, k, n) {
                        let zero = linalg::zeros(self.num_antennas);
                        let w = core::mem::replace(self.w_mut(m, k, n), zero);
                        *self.r_mut(m, n) += w;
                    }
                }
            }
        }
    }

    /// Scales every covariance of every slot by `c`.
    pub fn scale_covariances(&mut self, c: f64) {
        let c = C64::new(c, 0.0);
        for x in self.w_cov.iter_mut().chain(self.r_cov.iter_mut()) {
            *x *= c;
        }
    }
}

/// Received powers (watts, noise excluded) at a UAV for a hypothesised serving GBS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPower {
    pub signal: f64,
    pub interference: f64,
}

fn real_quad(x: &CMat, v: &CVec) -> Result<f64, ModelError> {
    let value = linalg::quad_form(x, v).re;
    if value >= 0.0 {
        return Ok(value);
    }
    let scale = v.norm_squared() * linalg::trace_re(x).abs().max(linalg::frobenius(x));
    if value < -1e-9 * scale {
        Err(ModelError::NegativeQuadraticForm { value, scale })
    } else {
        Ok(0.0)
    }
}

/// Signal and interference seen by UAV `k` when served by GBS `m` at slot `n`.
/// Every covariance is weighted with the serving channel `h_{m,k}[n]`.
pub fn link_power(design: &Design, scenario: &Scenario, m: usize, k: usize, n: usize) -> Result<LinkPower, ModelError> {
    let h = scenario.channel(m, design.position(k, n), scenario.uav_altitudes[k]);
    link_power_with_channel(design, &h, m, k, n)
}

pub fn link_power_with_channel(
    design: &Design,
    h: &CVec,
    m: usize,
    k: usize,
    n: usize,
) -> Result<LinkPower, ModelError> {
    let mut signal = 0.0;
    let mut interference = 0.0;
    for l in 0..design.num_gbs() {
        for i in 0..design.num_uavs() {
            let v = real_quad(design.w(l, i, n), h)?;
            if (l, i) == (m, k) {
                signal = v;
            } else {
                interference += v;
            }
        }
        interference += real_quad(design.r(l, n), h)?;
    }
    Ok(LinkPower { signal, interference })
}

pub fn sinr(design: &Design, scenario: &Scenario, m: usize, k: usize, n: usize) -> Result<f64, ModelError> {
    let p = link_power(design, scenario, m, k, n)?;
    Ok(p.signal / (p.interference + scenario.noise_power))
}

/// `log2(1 + γ_{m,k}[n])` in bps/Hz.
pub fn rate(design: &Design, scenario: &Scenario, m: usize, k: usize, n: usize) -> Result<f64, ModelError> {
    Ok(libm::log2(1.0 + sinr(design, scenario, m, k, n)?))
}

/// Sum over served (UAV, GBS) pairs at slot `n`.
pub fn sum_rate(design: &Design, scenario: &Scenario, n: usize) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for k in 0..design.num_uavs() {
        total += rate(design, scenario, design.association.serving(k, n), k, n)?;
    }
    Ok(total)
}

/// `Σ_n r[n]`.
pub fn objective(design: &Design, scenario: &Scenario) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for n in 0..design.num_slots() {
        total += sum_rate(design, scenario, n)?;
    }
    Ok(total)
}

/// Average sum rate `(1/N) Σ_n r[n]`.
pub fn average_sum_rate(design: &Design, scenario: &Scenario) -> Result<f64, ModelError> {
    Ok(objective(design, scenario)? / design.num_slots().max(1) as f64)
}

/// Illumination power `ζ_q[n]` in watts.
pub fn illumination_power(design: &Design, scenario: &Scenario, q: usize, n: usize) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for l in 0..scenario.num_gbs() {
        let (a, d2) = scenario.sensing_link(l, q);
        total += real_quad(&design.tx_covariance(l, n), &a)? / d2;
    }
    Ok(total)
}

/// Illumination power at an arbitrary 3-D point.
pub fn illumination_at(design: &Design, scenario: &Scenario, point: &Point, altitude: f64, n: usize) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for l in 0..scenario.num_gbs() {
        let u = &scenario.gbs_positions[l];
        let d2 = (u - point).norm_squared() + altitude * altitude;
        let a = steering_vector(
            altitude / libm::sqrt(d2),
            scenario.num_antennas,
            scenario.antenna_spacing_over_wavelength,
        );
        total += real_quad(&design.tx_covariance(l, n), &a)? / d2;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintFamily {
    Sensing,
    Power,
    Psd,
    InitialPosition,
    FinalPosition,
    Speed,
    Collision,
    Association,
}

/// Worst violation of one constraint family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub family: ConstraintFamily,
    /// Sensing point, GBS or UAV depending on the family.
    pub index: usize,
    /// Second UAV for collisions, UAV for PSD failures of `W` (None for `R`).
    pub other: Option<usize>,
    pub slot: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn get(&self, family: ConstraintFamily) -> Option<&Violation> {
        self.violations.iter().find(|v| v.family == family)
    }

    fn record(&mut self, v: Violation) {
        match self.violations.iter_mut().find(|w| w.family == v.family) {
            Some(w) if w.magnitude < v.magnitude => *w = v,
            Some(_) => {}
            None => self.violations.push(v),
        }
    }
}

/// Relative slack applied to every inequality family in [`check_constraints`].
pub const CONSTRAINT_REL_TOL: f64 = 1e-6;
/// Absolute slack for endpoint equalities, meters.
pub const ENDPOINT_TOL: f64 = 1e-9;

/// Evaluates every constraint family and keeps the worst violation of each.
pub fn check_constraints(design: &Design, scenario: &Scenario) -> ViolationReport {
    let mut report = ViolationReport::default();
    let tol = CONSTRAINT_REL_TOL;
    let (num_gbs, num_uavs, num_slots) = (scenario.num_gbs(), scenario.num_uavs(), scenario.num_slots);
    let v = |family, index, other, slot, magnitude| Violation { family, index, other, slot, magnitude };

    for n in 0..num_slots {
        for m in 0..num_gbs {
            let total = linalg::trace_re(&design.tx_covariance(m, n));
            if total > scenario.p_max * (1.0 + tol) {
                report.record(v(ConstraintFamily::Power, m, None, n, total - scenario.p_max));
            }
            for k in 0..num_uavs {
                let w = design.w(m, k, n);
                if !linalg::is_psd(w) {
                    report.record(v(ConstraintFamily::Psd, m, Some(k), n, -linalg::min_eigenvalue(w)));
                }
            }
            let r = design.r(m, n);
            if !linalg::is_psd(r) {
                report.record(v(ConstraintFamily::Psd, m, None, n, -linalg::min_eigenvalue(r)));
            }
        }
        for q in 0..scenario.num_sensing() {
            // A PSD failure is already reported above; evaluate the raw form here.
            let zeta: f64 = (0..num_gbs)
                .map(|l| {
                    let (a, d2) = scenario.sensing_link(l, q);
                    linalg::quad_form(&design.tx_covariance(l, n), &a).re / d2
                })
                .sum();
            if zeta < scenario.gamma * (1.0 - tol) {
                report.record(v(ConstraintFamily::Sensing, q, None, n, scenario.gamma - zeta));
            }
        }
        for k in 0..num_uavs {
            let m = design.association.serving(k, n);
            if m >= num_gbs {
                report.record(v(ConstraintFamily::Association, k, None, n, 1.0));
            }
        }
    }

    let step = scenario.step_limit();
    let d2 = scenario.d_min * scenario.d_min;
    for k in 0..num_uavs {
        let traj = &design.trajectories[k];
        let first = (traj[0] - scenario.uav_initial[k]).norm();
        if first > ENDPOINT_TOL * (1.0 + scenario.uav_initial[k].norm()) {
            report.record(v(ConstraintFamily::InitialPosition, k, None, 0, first));
        }
        let last = (traj[num_slots - 1] - scenario.uav_final[k]).norm();
        if last > ENDPOINT_TOL * (1.0 + scenario.uav_final[k].norm()) {
            report.record(v(ConstraintFamily::FinalPosition, k, None, num_slots - 1, last));
        }
        for n in 0..num_slots.saturating_sub(1) {
            let dist = (traj[n + 1] - traj[n]).norm();
            if dist > step * (1.0 + tol) + ENDPOINT_TOL {
                report.record(v(ConstraintFamily::Speed, k, None, n, dist - step));
            }
        }
        for i in k + 1..num_uavs {
            let dh = scenario.uav_altitudes[k] - scenario.uav_altitudes[i];
            for n in 0..num_slots {
                let sep = (traj[n] - design.trajectories[i][n]).norm_squared() + dh * dh;
                if sep < d2 * (1.0 - tol) {
                    report.record(v(ConstraintFamily::Collision, k, Some(i), n, d2 - sep));
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::FRAC_PI_4;

    fn single_link() -> Scenario {
        Scenario {
            gbs_positions: vec![Point::new(0.0, 0.0)],
            uav_initial: vec![Point::new(0.0, 0.0)],
            uav_final: vec![Point::new(0.0, 0.0)],
            uav_altitudes: vec![80.0],
            sensing_points: vec![Point::new(100.0, 0.0)],
            sensing_altitude: 1e-9,
            num_antennas: 4,
            antenna_spacing_over_wavelength: 0.5,
            num_slots: 2,
            slot_duration: 1.0,
            p_max: 3.0,
            gamma: 0.0,
            v_max: 10.0,
            d_min: 10.0,
            kappa: dbw_to_watts(-45.0),
            noise_power: 1e-10,
        }
    }

    #[test]
    fn aod_examples() {
        let u = Point::new(10.0, -5.0);
        assert_eq!(aod(&u, &u, 80.0).unwrap(), 0.0);
        let q = u + Point::new(80.0, 0.0);
        assert_relative_eq!(aod(&q, &u, 80.0).unwrap(), FRAC_PI_4, epsilon = 1e-15);
        let q = u + Point::new(60.0, 80.0);
        // acos(√3/2) = π/6
        assert_relative_eq!(aod(&q, &u, 100.0 * 3f64.sqrt()).unwrap(), 0.523_598_775_598_298_8, epsilon = 1e-14);
        assert!(aod(&q, &u, 0.0).is_err());
        assert!(aod(&Point::new(f64::NAN, 0.0), &u, 1.0).is_err());
    }

    #[test]
    fn steering_examples() {
        let ones = steering_vector(0.0, 5, 0.5);
        assert!(ones.iter().all(|z| linalg::cabs(z - C64::new(1.0, 0.0)) < 1e-15));
        let alt = steering_vector(1.0, 4, 0.5);
        for (p, z) in alt.iter().enumerate() {
            let want = if p % 2 == 0 { 1.0 } else { -1.0 };
            assert!(linalg::cabs(z - C64::new(want, 0.0)) < 1e-14);
        }
        let g = steering_vector(0.6, 3, 0.5);
        for p in 0..3 {
            let phase = 0.6 * PI * p as f64;
            assert!(linalg::cabs(g[p] - C64::new(phase.cos(), phase.sin())) < 1e-15);
        }
    }

    #[test]
    fn channel_examples() {
        let s = single_link();
        let h = s.channel(0, &Point::new(0.0, 0.0), 80.0);
        // 4 * 10^-4.5 / 6400
        assert_relative_eq!(h.norm_squared(), 1.976_423_537_605_237e-8, max_relative = 1e-12);
        assert_eq!(h[0].im, 0.0);
        // Double the 3-D distance at a fixed angle.
        let far = s.channel(0, &Point::new(60.0, 0.0), 80.0);
        let farther = s.channel(0, &Point::new(120.0, 0.0), 160.0);
        assert_relative_eq!(far.norm_squared() / farther.norm_squared(), 4.0, max_relative = 1e-12);
    }

    fn mrt_design(s: &Scenario, power: f64) -> Design {
        let mut d = Design::new(s, s.straight_trajectories(), Association::uniform(1, s.num_slots, 0));
        let h = s.channel(0, &s.uav_initial[0], s.uav_altitudes[0]);
        for n in 0..s.num_slots {
            *d.w_mut(0, 0, n) = linalg::outer(&h).scale(power / h.norm_squared());
        }
        d
    }

    #[test]
    fn sinr_and_rate_examples() {
        let s = single_link();
        let d = mrt_design(&s, 3.0);
        let g = sinr(&d, &s, 0, 0, 0).unwrap();
        assert_relative_eq!(g, 3.0 * 1.976_423_537_605_237e-8 / 1e-10, max_relative = 1e-10);
        assert_relative_eq!(g, 592.927, max_relative = 1e-5);
        assert_relative_eq!(rate(&d, &s, 0, 0, 0).unwrap(), libm::log2(1.0 + g), max_relative = 1e-14);
        assert!((rate(&d, &s, 0, 0, 0).unwrap() - 9.214).abs() < 1e-3);

        let zero = Design::new(&s, s.straight_trajectories(), Association::uniform(1, 2, 0));
        assert_eq!(sinr(&zero, &s, 0, 0, 0).unwrap(), 0.0);
        assert_eq!(rate(&zero, &s, 0, 0, 0).unwrap(), 0.0);

        let h = s.channel(0, &s.uav_initial[0], 80.0);
        let mut unit = zero.clone();
        let n4 = h.norm_squared() * h.norm_squared();
        *unit.w_mut(0, 0, 0) = linalg::outer(&h).scale(s.noise_power / n4);
        assert_relative_eq!(sinr(&unit, &s, 0, 0, 0).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(rate(&unit, &s, 0, 0, 0).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn illumination_examples() {
        let mut s = single_link();
        s.sensing_altitude = 60.0;
        s.sensing_points = vec![Point::new(80.0, 0.0)];
        let mut d = Design::new(&s, s.straight_trajectories(), Association::uniform(1, 2, 0));
        assert_eq!(illumination_power(&d, &s, 0, 0).unwrap(), 0.0);
        *d.r_mut(0, 0) = linalg::scaled_identity(4, 3.0 / 4.0);
        assert_relative_eq!(illumination_power(&d, &s, 0, 0).unwrap(), 3e-4, max_relative = 1e-12);
        let (a, d2) = s.sensing_link(0, 0);
        *d.r_mut(0, 0) = linalg::outer(&a).scale(0.7);
        assert_relative_eq!(illumination_power(&d, &s, 0, 0).unwrap(), 0.7 * 16.0 / d2, max_relative = 1e-12);
    }

    #[test]
    fn check_constraints_examples() {
        let s = single_link();
        let d = mrt_design(&s, 3.0);
        assert!(check_constraints(&d, &s).is_empty());

        let mut moved = d.clone();
        moved.trajectories[0][0] = Point::new(3.0, 4.0);
        let report = check_constraints(&moved, &s);
        let v = report.get(ConstraintFamily::InitialPosition).unwrap();
        assert_relative_eq!(v.magnitude, 5.0);

        let mut two = single_link();
        two.uav_initial.push(Point::new(50.0, 0.0));
        two.uav_final.push(Point::new(50.0, 0.0));
        two.uav_altitudes.push(80.0);
        let mut d2 = Design::new(&two, two.straight_trajectories(), Association::uniform(2, 2, 0));
        d2.trajectories[1][1] = Point::new(0.0, 0.0);
        let report = check_constraints(&d2, &two);
        let c = report.get(ConstraintFamily::Collision).unwrap();
        assert_relative_eq!(c.magnitude, 100.0);
    }

    #[test]
    fn validation_rejects_unreachable() {
        let mut s = Scenario::paper();
        assert!(s.validate().is_ok());
        s.v_max = 0.0;
        assert!(matches!(s.validate(), Err(ScenarioError::Unreachable { .. })));
    }

    #[test]
    fn reduced_horizon_keeps_mission_time() {
        let s = Scenario::paper().with_num_slots(10);
        assert_eq!(s.num_slots, 10);
        assert_relative_eq!(s.slot_duration, 6.0);
        assert!(s.validate().is_ok());
        let t = s.straight_trajectories();
        assert_eq!(t[0][0], s.uav_initial[0]);
        assert_eq!(t[1][9], s.uav_final[1]);
    }
}
