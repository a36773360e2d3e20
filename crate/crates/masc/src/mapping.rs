//! Turning echo (two-way) measurements into downlink (one-way) parameters.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::bounds::{self, FimSpec};
use crate::channel::{self, ChannelRealization, Phase};
use crate::orbit::{self, OrbitState, VisibleRegion};
use crate::scenario::ScenarioConfig;
use crate::{Error, Result, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyModel {
    pub kappa_scale: f64,
    pub csi_uncertainty_level: f64,
}

impl UncertaintyModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_scale > 0.0) {
            return Err(Error::Invalid("uncertainty.kappa must be > 0".into()));
        }
        if !(0.0..=0.8).contains(&self.csi_uncertainty_level) {
            return Err(Error::Invalid("uncertainty.csi_level must lie in [0, 0.8]".into()));
        }
        Ok(())
    }
}

/// Half-width of the extinction interval; infinite when the SNR is not positive.
pub fn delta_alpha(snr_sens: f64, kappa_scale: f64) -> f64 {
    if snr_sens <= 0.0 {
        return f64::INFINITY;
    }
    kappa_scale / snr_sens.sqrt()
}

/// Received echo power from the radar equation with round-trip extinction exp(−2αℓ).
#[allow(clippy::too_many_arguments)]
pub fn radar_echo_power(
    p_t: f64,
    g_t: f64,
    g_r: f64,
    sigma_rcs: f64,
    lambda: f64,
    r_t: f64,
    r_r: f64,
    alpha_np_m: f64,
    ell: f64,
) -> f64 {
    p_t * g_t * g_r * sigma_rcs * lambda * lambda * (-2.0 * alpha_np_m * ell).exp()
        / ((4.0 * PI).powi(3) * r_t * r_t * r_r * r_r)
}

/// Extinction (nepers per meter) recovered by inverting [`radar_echo_power`].
#[allow(clippy::too_many_arguments)]
pub fn estimate_alpha_from_echo(
    p_r: f64,
    p_t: f64,
    g_t: f64,
    g_r: f64,
    sigma_rcs: f64,
    lambda: f64,
    r_t: f64,
    r_r: f64,
    ell: f64,
) -> Result<f64> {
    if p_r <= 0.0 || p_t <= 0.0 || g_t <= 0.0 || g_r <= 0.0 || sigma_rcs <= 0.0 || ell <= 0.0 {
        return Err(Error::Estimation("powers, gains and path length must be positive".into()));
    }
    let arg = p_r * (4.0 * PI).powi(3) * r_t * r_t * r_r * r_r / (p_t * g_t * g_r * sigma_rcs * lambda * lambda);
    if !(arg > 0.0) || !arg.is_finite() {
        return Err(Error::Estimation(format!("log argument {arg} is not positive")));
    }
    Ok(-arg.ln() / (2.0 * ell))
}

/// Target position in the satellite body frame from the echo delay and look angles.
pub fn triangulate_position(tau_main: f64, theta_hat: f64, phi_hat: f64) -> Result<Vector3<f64>> {
    if !(tau_main > 0.0) {
        return Err(Error::Precondition("echo delay must be positive".into()));
    }
    Ok(orbit::los_unit_vector(theta_hat, phi_hat) * (SPEED_OF_LIGHT * tau_main / 2.0))
}

/// Body-frame position moved into the planet-centered inertial frame.
pub fn to_inertial(state: &OrbitState, local: &Vector3<f64>) -> Vector3<f64> {
    let [x, y, z] = orbit::body_frame(state);
    state.position_m + x * local.x + y * local.y + z * local.z
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DopplerMapping {
    /// f_sens/2 − 2·v_roverᵀu/λ, which reproduces the one-way shift exactly.
    #[default]
    Consistent,
    /// f_sens/2 − v_satᵀu/λ + v_roverᵀu/λ, kept for comparison.
    Printed,
}

pub fn map_doppler_sens_to_comm(f_sens: f64, v_rover_dot_u: f64, lambda: f64) -> f64 {
    f_sens / 2.0 - 2.0 * v_rover_dot_u / lambda
}

pub fn map_doppler_printed(f_sens: f64, v_sat_dot_u: f64, v_rover_dot_u: f64, lambda: f64) -> f64 {
    f_sens / 2.0 - v_sat_dot_u / lambda + v_rover_dot_u / lambda
}

pub fn map_delays(tau_main: f64, tau_terrain: &[f64]) -> Result<(f64, Vec<f64>)> {
    if !(tau_main > 0.0) || tau_terrain.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Precondition("delays must be positive".into()));
    }
    Ok((tau_main / 2.0, tau_terrain.iter().map(|t| t / 2.0).collect()))
}

/// Wrap into (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

pub fn phase_offsets(f_c: f64, tau_los: f64, tau_nlos: &[f64]) -> Vec<f64> {
    tau_nlos.iter().map(|t| wrap_phase(2.0 * PI * f_c * (tau_los - t))).collect()
}

/// Marks cells whose extinction gradient exceeds mean + 2·std over the grid.
pub fn detect_boundaries(alpha_field: &[f64], region: &VisibleRegion) -> Result<Vec<bool>> {
    let (nt, np) = (region.n_theta, region.n_phi);
    if nt < 3 || np < 3 || alpha_field.len() != nt * np {
        return Err(Error::Precondition(format!(
            "boundary detection needs a field on a grid of at least 3x3, got {} values on {nt}x{np}",
            alpha_field.len()
        )));
    }
    let (dt, dp) = (region.d_theta(), region.d_phi());
    let at = |i: usize, j: usize| alpha_field[i * np + j];
    let mut mag = Vec::with_capacity(nt * np);
    for i in 0..nt {
        let theta = region.grid[i * np].theta_rad;
        for j in 0..np {
            let g_t = if i == 0 {
                (at(1, j) - at(0, j)) / dt
            } else if i == nt - 1 {
                (at(i, j) - at(i - 1, j)) / dt
            } else {
                (at(i + 1, j) - at(i - 1, j)) / (2.0 * dt)
            };
            let g_p = (at(i, (j + 1) % np) - at(i, (j + np - 1) % np)) / (2.0 * dp * theta.sin());
            mag.push(g_t.hypot(g_p));
        }
    }
    let n = mag.len() as f64;
    let mean = mag.iter().sum::<f64>() / n;
    let std = (mag.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n).sqrt();
    if std == 0.0 {
        return Ok(vec![false; mag.len()]);
    }
    Ok(mag.iter().map(|&m| m > mean + 2.0 * std).collect())
}

/// Parameters extracted from one echo, indexed main path first then terrain paths.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoObservation {
    pub alpha_db_km: Vec<f64>,
    pub doppler_hz: Vec<f64>,
    pub delays_s: Vec<f64>,
    pub rover_radial_mps: Vec<f64>,
    /// Off-nadir look angle and azimuth of the main return.
    pub aoa: (f64, f64),
    /// Echo SNR after coherent integration.
    pub snr_linear: f64,
}

/// Echo SNR toward the ground node with a single beam steered at it, integrated over the observation.
pub fn node_echo_snr(scene: &ScenarioConfig) -> f64 {
    crate::sensing::snr_budget(scene, scene.ground.theta_rad)
        * scene.p1_w
        * scene.array.n_elements() as f64
        * scene.estimation.n_obs as f64
}

/// Reads the echo parameters off a sensing realization. With `rng` present,
/// extinction and Doppler carry zero-mean Gaussian errors at their Cramér-Rao floors.
pub fn observe_echo<R: Rng + ?Sized>(
    scene: &ScenarioConfig,
    echo: &ChannelRealization,
    rng: Option<&mut R>,
) -> Result<EchoObservation> {
    if echo.phase != Phase::Sensing {
        return Err(Error::Precondition("echo parameters come from a sensing realization".into()));
    }
    let snr = node_echo_snr(scene);
    let n_paths = 1 + echo.nlos.len();
    let mut alpha = vec![echo.alpha_db_km; n_paths];
    let mut doppler: Vec<f64> = std::iter::once(echo.main_doppler_hz)
        .chain(echo.nlos.iter().map(|p| p.doppler_hz))
        .collect();
    if let Some(rng) = rng {
        let zenith = orbit::ground_zenith(&scene.orbit, scene.ground.theta_rad);
        let per_sample = snr / scene.estimation.n_obs as f64;
        let spec = FimSpec::uniform(
            per_sample,
            scene.estimation.n_obs,
            scene.dust.path_length(zenith),
            scene.estimation.window_s,
        )?;
        let sd_alpha = channel::np_per_m_to_db_per_km(bounds::crlb_alpha(&spec).sqrt());
        let sd_f = bounds::crlb_doppler(&spec, false).sqrt();
        let na = Normal::new(0.0, sd_alpha).map_err(|e| Error::Estimation(e.to_string()))?;
        let nf = Normal::new(0.0, sd_f).map_err(|e| Error::Estimation(e.to_string()))?;
        for a in &mut alpha {
            *a = (*a + na.sample(rng)).max(0.0);
        }
        for f in &mut doppler {
            *f += nf.sample(rng);
        }
    }
    Ok(EchoObservation {
        alpha_db_km: alpha,
        doppler_hz: doppler,
        delays_s: std::iter::once(echo.main_delay_s).chain(echo.nlos.iter().map(|p| p.delay_s)).collect(),
        rover_radial_mps: std::iter::once(echo.rover_radial_mps)
            .chain(echo.nlos.iter().map(|p| p.rover_radial_mps))
            .collect(),
        aoa: (orbit::look_angle(&scene.orbit, echo.main_direction.0), echo.main_direction.1),
        snr_linear: snr,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentEstimate {
    pub alpha_hat: Vec<f64>,
    pub alpha_interval: Vec<(f64, f64)>,
    pub position_hat: Vector3<f64>,
    pub doppler_comm_hz: f64,
    pub nlos_doppler_hz: Vec<f64>,
    pub delays: (f64, Vec<f64>),
    pub phase_offsets_rad: Vec<f64>,
    pub boundary_mask: Vec<bool>,
}

impl EnvironmentEstimate {
    /// Upper end of the main-path interval, dB/km.
    pub fn alpha_max(&self) -> f64 {
        self.alpha_interval[0].1
    }

    /// Key/value view for structured export.
    pub fn to_record(&self) -> Vec<(&'static str, String)> {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(";");
        vec![
            ("alpha_hat_db_per_km", join(&self.alpha_hat)),
            ("alpha_min_db_per_km", join(&self.alpha_interval.iter().map(|i| i.0).collect::<Vec<_>>())),
            ("alpha_max_db_per_km", join(&self.alpha_interval.iter().map(|i| i.1).collect::<Vec<_>>())),
            ("position_x_m", format!("{:.16e}", self.position_hat.x)),
            ("position_y_m", format!("{:.16e}", self.position_hat.y)),
            ("position_z_m", format!("{:.16e}", self.position_hat.z)),
            ("doppler_comm_hz", format!("{:.16e}", self.doppler_comm_hz)),
            ("tau_los_s", format!("{:.16e}", self.delays.0)),
            ("tau_nlos_s", join(&self.delays.1)),
            ("phase_offsets_rad", join(&self.phase_offsets_rad)),
            (
                "boundary",
                self.boundary_mask.iter().map(|b| if *b { "1" } else { "0" }).collect::<Vec<_>>().join(";"),
            ),
        ]
    }
}

/// Maps an echo observation to downlink parameters. `csi_level` widens the
/// extinction interval to at least ±u·α̂.
pub fn map_environment(
    scene: &ScenarioConfig,
    state: &OrbitState,
    obs: &EchoObservation,
    csi_level: f64,
    mode: DopplerMapping,
) -> Result<EnvironmentEstimate> {
    let lambda = scene.radio.wavelength();
    let crlb_width = delta_alpha(obs.snr_linear, scene.uncertainty.kappa_scale);
    let alpha_interval = obs
        .alpha_db_km
        .iter()
        .map(|&a| {
            let w = crlb_width.max(csi_level * a);
            ((a - w).max(0.0), a + w)
        })
        .collect();
    let local = triangulate_position(obs.delays_s[0], obs.aoa.0, obs.aoa.1)?;
    let (tau_los, tau_nlos) = map_delays(obs.delays_s[0], &obs.delays_s[1..])?;
    let map_f = |f: f64, v_rover: f64, dir: (f64, f64)| match mode {
        DopplerMapping::Consistent => map_doppler_sens_to_comm(f, v_rover, lambda),
        DopplerMapping::Printed => {
            let u = orbit::los_inertial(&scene.orbit, state, dir.0, dir.1);
            map_doppler_printed(f, state.velocity_mps.dot(&u), v_rover, lambda)
        }
    };
    let main_dir = (scene.ground.theta_rad, scene.ground.phi_rad);
    let terrain = channel::terrain_layout(scene, scene.seed);
    let nlos_doppler = obs.doppler_hz[1..]
        .iter()
        .zip(&obs.rover_radial_mps[1..])
        .zip(&terrain)
        .map(|((&f, &v), p)| map_f(f, v, p.direction))
        .collect();
    Ok(EnvironmentEstimate {
        alpha_hat: obs.alpha_db_km.clone(),
        alpha_interval,
        position_hat: to_inertial(state, &local),
        doppler_comm_hz: map_f(obs.doppler_hz[0], obs.rover_radial_mps[0], main_dir),
        nlos_doppler_hz: nlos_doppler,
        phase_offsets_rad: phase_offsets(scene.radio.carrier_hz, tau_los, &tau_nlos),
        delays: (tau_los, tau_nlos),
        boundary_mask: vec![false; obs.alpha_db_km.len()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncertainty_width() {
        assert!((delta_alpha(100.0, 1.0) - 0.1).abs() < 1e-15);
        assert!((delta_alpha(400.0, 1.0) - 0.05).abs() < 1e-15);
        assert!((delta_alpha(25.0, 0.5) - 0.1).abs() < 1e-15);
        assert!(delta_alpha(0.0, 1.0).is_infinite());
    }

    #[test]
    fn echo_inversion_round_trip() {
        let args = (6000.0, 631.0, 631.0, 200.0, 0.15, 5e5, 5e5);
        for &alpha in &[0.0, 3.2e-7, 1e-5] {
            let ell = 2.5e4;
            let p = radar_echo_power(args.0, args.1, args.2, args.3, args.4, args.5, args.6, alpha, ell);
            let est = estimate_alpha_from_echo(p, args.0, args.1, args.2, args.3, args.4, args.5, args.6, ell).unwrap();
            if alpha == 0.0 {
                assert!(est.abs() < 1e-18);
            } else {
                assert!((est - alpha).abs() < 1e-12 * alpha.max(1e-12) + 1e-19);
            }
        }
        let p = radar_echo_power(1.0, 1.0, 1.0, 1.0, 0.15, 1e3, 1e3, 1e-4, 100.0);
        let a1 = estimate_alpha_from_echo(p, 1.0, 1.0, 1.0, 1.0, 0.15, 1e3, 1e3, 100.0).unwrap();
        let a2 = estimate_alpha_from_echo(p, 1.0, 1.0, 1.0, 1.0, 0.15, 1e3, 1e3, 200.0).unwrap();
        assert!((a2 - a1 / 2.0).abs() < 1e-15);
        assert!(estimate_alpha_from_echo(0.0, 1.0, 1.0, 1.0, 1.0, 0.15, 1e3, 1e3, 1.0).is_err());
    }

    #[test]
    fn triangulation() {
        let p = triangulate_position(2.668e-3, 0.0, 0.7).unwrap();
        assert!((p.z - 3.999e5).abs() < 1e2);
        assert_eq!((p.x, p.y), (0.0, 0.0));
        let truth = Vector3::new(1.2e5_f64, -3.0e4, 4.1e5);
        let d = truth.norm();
        let theta = (truth.z / d).acos();
        let phi = truth.y.atan2(truth.x);
        let back = triangulate_position(2.0 * d / SPEED_OF_LIGHT, theta, phi).unwrap();
        assert!((back - truth).norm() < 1e-9 * d);
    }

    #[test]
    fn doppler_mapping() {
        let f = map_doppler_sens_to_comm(40_280.0, 1.0, 0.15);
        let direct = (3020.0 - 1.0) / 0.15;
        assert!((f - direct).abs() < 1e-9);
        assert_eq!(map_doppler_sens_to_comm(1234.5, 0.0, 0.15), 617.25);
        let slope = map_doppler_sens_to_comm(0.0, 1.0, 0.15) - map_doppler_sens_to_comm(0.0, 0.0, 0.15);
        assert!((slope + 2.0 / 0.15).abs() < 1e-12);
    }

    #[test]
    fn delays_and_phases() {
        let (los, nlos) = map_delays(2e-3, &[3e-3, 2.5e-3]).unwrap();
        assert_eq!(los, 1e-3);
        assert_eq!(nlos, vec![1.5e-3, 1.25e-3]);
        assert!(map_delays(-1.0, &[]).is_err());
        assert_eq!(phase_offsets(2e9, 1e-3, &[1e-3]), vec![0.0]);
        let half = phase_offsets(2e9, 0.25e-9, &[0.0])[0];
        assert!((half.abs() - PI).abs() < 1e-9);
        let full = phase_offsets(2e9, 1e-9, &[0.0])[0];
        assert!(full.abs() < 1e-6);
        assert!(wrap_phase(-PI) == PI);
    }

    fn region(n: usize) -> VisibleRegion {
        orbit::visible_region(&orbit::OrbitConfig::default(), n, n).unwrap()
    }

    #[test]
    fn boundaries_on_uniform_and_step_fields() {
        let reg = region(16);
        let flat = vec![0.7; reg.len()];
        assert!(detect_boundaries(&flat, &reg).unwrap().iter().all(|b| !b));
        let step: Vec<f64> = reg.grid.iter().enumerate().map(|(k, _)| if k / 16 < 8 { 0.1 } else { 5.0 }).collect();
        let mask = detect_boundaries(&step, &reg).unwrap();
        for (k, &b) in mask.iter().enumerate() {
            let row = k / 16;
            assert_eq!(b, row == 7 || row == 8, "cell {k}");
        }
        let shifted: Vec<f64> = step.iter().map(|a| a + 3.0).collect();
        assert_eq!(detect_boundaries(&shifted, &reg).unwrap(), mask);
        assert!(detect_boundaries(&[1.0; 4], &orbit::visible_region(&orbit::OrbitConfig::default(), 2, 2).unwrap()).is_err());
    }
}
