//! Circular-orbit kinematics and the geometry of the visible cap.
//!
//! Angles on the ground are Mars-central: `theta` is the central angle between
//! the sub-satellite point and a ground point, `phi` its azimuth around the
//! nadir axis. The array sees a ground point at the off-nadir look angle
//! returned by [`look_angle`].

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::{Error, Result};

pub const MARS_RADIUS_M: f64 = 3_389_500.0;
pub const MU_MARS: f64 = 4.28e13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitConfig {
    pub altitude_m: f64,
    pub mars_radius_m: f64,
    pub mu_mars: f64,
    pub phase0_rad: f64,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        Self {
            altitude_m: 400e3,
            mars_radius_m: MARS_RADIUS_M,
            mu_mars: MU_MARS,
            phase0_rad: 0.0,
        }
    }
}

impl OrbitConfig {
    pub fn with_altitude(altitude_m: f64) -> Result<Self> {
        let cfg = Self {
            altitude_m,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(200e3..=800e3).contains(&self.altitude_m) {
            return Err(Error::Invalid(format!(
                "orbit.altitude_m = {} outside [200e3, 800e3]",
                self.altitude_m
            )));
        }
        if !(self.mars_radius_m > 0.0) {
            return Err(Error::Invalid("orbit.mars_radius_m must be positive".into()));
        }
        if !(self.mu_mars > 0.0) {
            return Err(Error::Invalid("orbit.mu must be positive".into()));
        }
        Ok(())
    }

    /// Distance from the planet center to the satellite.
    pub fn orbit_radius(&self) -> f64 {
        self.mars_radius_m + self.altitude_m
    }

    /// Central angle of the horizon as seen from the satellite.
    pub fn theta_max(&self) -> f64 {
        (self.mars_radius_m / self.orbit_radius()).acos()
    }

    pub fn speed(&self) -> f64 {
        (self.mu_mars / self.orbit_radius()).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitState {
    pub time_s: f64,
    pub position_m: Vector3<f64>,
    pub velocity_mps: Vector3<f64>,
    pub elevation_rad: f64,
    pub orbital_phase_rad: f64,
}

pub fn orbital_period(cfg: &OrbitConfig) -> f64 {
    2.0 * PI * (cfg.orbit_radius().powi(3) / cfg.mu_mars).sqrt()
}

pub fn state_at(cfg: &OrbitConfig, t: f64) -> OrbitState {
    let period = orbital_period(cfg);
    let sweep = 2.0 * PI * t / period;
    let phase = cfg.phase0_rad + sweep;
    let (s, c) = phase.sin_cos();
    let radius = cfg.orbit_radius();
    OrbitState {
        time_s: t,
        position_m: Vector3::new(radius * c, radius * s, 0.0),
        velocity_mps: cfg.speed() * Vector3::new(-s, c, 0.0),
        elevation_rad: (cfg.mars_radius_m / radius).asin() * sweep.cos(),
        orbital_phase_rad: phase,
    }
}

fn check_visible(cfg: &OrbitConfig, theta: f64) -> Result<()> {
    let limit = cfg.theta_max();
    if !(0.0..=limit * (1.0 + 1e-12)).contains(&theta) {
        return Err(Error::OutOfView {
            angle: theta,
            limit,
        });
    }
    Ok(())
}

/// Satellite-to-ground distance at central angle `theta`.
pub fn slant_range(cfg: &OrbitConfig, theta: f64) -> Result<f64> {
    check_visible(cfg, theta)?;
    Ok(slant_range_unchecked(cfg, theta))
}

pub(crate) fn slant_range_unchecked(cfg: &OrbitConfig, theta: f64) -> f64 {
    let r = cfg.mars_radius_m;
    let big = cfg.orbit_radius();
    // law of cosines; the difference form keeps d(0) = h exact
    let chord2 = (big - r).powi(2) + 2.0 * r * big * (1.0 - theta.cos());
    chord2.sqrt()
}

/// Off-nadir angle at which the array sees the ground point at central angle `theta`.
pub fn look_angle(cfg: &OrbitConfig, theta: f64) -> f64 {
    let r = cfg.mars_radius_m;
    (r * theta.sin()).atan2(cfg.orbit_radius() - r * theta.cos())
}

/// Zenith angle of the satellite seen from the ground point.
pub fn ground_zenith(cfg: &OrbitConfig, theta: f64) -> f64 {
    look_angle(cfg, theta) + theta
}

/// Central angle of the ground point at slant range `d`.
pub fn central_angle_for_range(cfg: &OrbitConfig, d: f64) -> Result<f64> {
    let r = cfg.mars_radius_m;
    let big = cfg.orbit_radius();
    let c = (r * r + big * big - d * d) / (2.0 * r * big);
    let theta = c.clamp(-1.0, 1.0).acos();
    check_visible(cfg, theta)?;
    Ok(theta)
}

pub fn los_unit_vector(theta: f64, phi: f64) -> Vector3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vector3::new(st * cp, st * sp, ct)
}

/// Satellite body frame: x along-track, z toward the planet center.
pub fn body_frame(state: &OrbitState) -> [Vector3<f64>; 3] {
    let z = -state.position_m.normalize();
    let x = state.velocity_mps.normalize();
    let y = z.cross(&x);
    [x, y, z]
}

/// Line-of-sight unit vector from the satellite to a ground point, inertial frame.
pub fn los_inertial(cfg: &OrbitConfig, state: &OrbitState, theta: f64, phi: f64) -> Vector3<f64> {
    let local = los_unit_vector(look_angle(cfg, theta), phi);
    let [x, y, z] = body_frame(state);
    x * local.x + y * local.y + z * local.z
}

/// Ground point position, inertial frame.
pub fn ground_point(cfg: &OrbitConfig, state: &OrbitState, theta: f64, phi: f64) -> Vector3<f64> {
    let d = slant_range_unchecked(cfg, theta);
    state.position_m + los_inertial(cfg, state, theta, phi) * d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub theta_rad: f64,
    pub phi_rad: f64,
    pub weight_sr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisibleRegion {
    pub theta_max_rad: f64,
    pub solid_angle_sr: f64,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Row-major in (theta, phi).
    pub grid: Vec<GridCell>,
}

impl VisibleRegion {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn index(&self, i_theta: usize, i_phi: usize) -> usize {
        i_theta * self.n_phi + i_phi
    }

    pub fn d_theta(&self) -> f64 {
        self.theta_max_rad / self.n_theta as f64
    }

    pub fn d_phi(&self) -> f64 {
        2.0 * PI / self.n_phi as f64
    }

    pub fn total_weight(&self) -> f64 {
        self.grid.iter().map(|c| c.weight_sr).sum()
    }
}

/// Midpoint grid over the visible cap with exact per-band solid angles.
pub fn visible_region(cfg: &OrbitConfig, n_theta: usize, n_phi: usize) -> Result<VisibleRegion> {
    if n_theta < 2 || n_phi < 2 {
        return Err(Error::Precondition(format!(
            "grid needs at least 2x2 cells, got {n_theta}x{n_phi}"
        )));
    }
    let theta_max = cfg.theta_max();
    let dt = theta_max / n_theta as f64;
    let dp = 2.0 * PI / n_phi as f64;
    let mut grid = Vec::with_capacity(n_theta * n_phi);
    for i in 0..n_theta {
        let lo = i as f64 * dt;
        let hi = if i + 1 == n_theta { theta_max } else { lo + dt };
        let band = dp * (lo.cos() - hi.cos());
        let theta = 0.5 * (lo + hi);
        for j in 0..n_phi {
            grid.push(GridCell {
                theta_rad: theta,
                phi_rad: (j as f64 + 0.5) * dp,
                weight_sr: band,
            });
        }
    }
    Ok(VisibleRegion {
        theta_max_rad: theta_max,
        solid_angle_sr: 2.0 * PI * (1.0 - theta_max.cos()),
        n_theta,
        n_phi,
        grid,
    })
}
