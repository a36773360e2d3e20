//! Propagation physics: free-space loss, dust extinction, array and ground
//! antenna patterns, terrain reflections, Doppler and the composite channels.

use std::f64::consts::{LN_10, PI};

use nalgebra::{DVector, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::orbit::{self, OrbitState};
use crate::scenario::ScenarioConfig;
use crate::{Error, Result, BOLTZMANN, SPEED_OF_LIGHT};

pub fn fspl_one_way(d: f64, lambda: f64) -> f64 {
    (4.0 * PI * d / lambda).powi(2)
}

/// Round-trip loss over a target at range `d`.
pub fn fspl_two_way(d: f64, lambda: f64) -> f64 {
    16.0 * (4.0 * PI * d / lambda).powi(4)
}

// ---------------------------------------------------------------- dust

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DustPreset {
    Clear,
    Light,
    Medium,
    Severe,
}

impl DustPreset {
    pub const STORMS: [DustPreset; 3] = [DustPreset::Light, DustPreset::Medium, DustPreset::Severe];

    pub fn name(self) -> &'static str {
        match self {
            DustPreset::Clear => "clear",
            DustPreset::Light => "light",
            DustPreset::Medium => "medium",
            DustPreset::Severe => "severe",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "clear" | "none" => Some(DustPreset::Clear),
            "light" => Some(DustPreset::Light),
            "medium" | "moderate" => Some(DustPreset::Medium),
            "severe" => Some(DustPreset::Severe),
            _ => None,
        }
    }

    /// (particle density per m³, layer height m)
    pub fn density_and_height(self) -> (f64, f64) {
        match self {
            DustPreset::Clear => (0.0, 10e3),
            DustPreset::Light => (1e8, 10e3),
            DustPreset::Medium => (3e8, 20e3),
            DustPreset::Severe => (5e8, 30e3),
        }
    }
}

/// Complex permittivity of suspended dust.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Permittivity {
    /// ε′ = 1.55, ε″ = 6.3, the values tied to the attenuation constant.
    Scattering,
    /// ε = 2.5 − j0.05, the tabulated analogue measurement.
    Analogue,
}

impl Permittivity {
    pub fn parts(self) -> (f64, f64) {
        match self {
            Permittivity::Scattering => (1.55, 6.3),
            Permittivity::Analogue => (2.5, 0.05),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DustScenario {
    pub particle_density_per_m3: f64,
    pub layer_height_m: f64,
    pub mean_radius_m: f64,
    pub eps_real: f64,
    pub eps_imag: f64,
    /// Longest path a ray can spend inside the layer.
    pub d_max_m: f64,
}

impl DustScenario {
    pub fn preset(preset: DustPreset, mars_radius_m: f64) -> Self {
        let (n, h) = preset.density_and_height();
        let (er, ei) = Permittivity::Scattering.parts();
        Self {
            particle_density_per_m3: n,
            layer_height_m: h,
            mean_radius_m: 1.5e-6,
            eps_real: er,
            eps_imag: ei,
            d_max_m: grazing_chord(h, mars_radius_m),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.particle_density_per_m3 >= 0.0) {
            return Err(Error::Invalid("dust.density_per_m3 must be >= 0".into()));
        }
        if !(self.eps_imag > 0.0) {
            return Err(Error::Invalid("dust.eps_imag must be > 0".into()));
        }
        if !(self.layer_height_m > 0.0 && self.d_max_m > 0.0 && self.mean_radius_m > 0.0) {
            return Err(Error::Invalid(
                "dust layer height, d_max and particle radius must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Path length inside the layer for a ray leaving the ground at `zenith`.
    pub fn path_length(&self, zenith: f64) -> f64 {
        dust_path_length(self.layer_height_m, zenith, self.d_max_m)
    }
}

/// Length of a ray grazing the top of a layer of height `h` over a sphere.
pub fn grazing_chord(h: f64, mars_radius_m: f64) -> f64 {
    ((mars_radius_m + h).powi(2) - mars_radius_m.powi(2)).sqrt()
}

/// Rayleigh-regime dust extinction in dB/km.
pub fn dust_alpha(dust: &DustScenario, lambda: f64) -> f64 {
    let (er, ei) = (dust.eps_real, dust.eps_imag);
    1.029e6 * ei / (((er + 2.0).powi(2) + ei * ei) * lambda)
        * dust.particle_density_per_m3
        * dust.mean_radius_m.powi(3)
}

/// dB/km to nepers per meter.
pub fn db_per_km_to_np_per_m(alpha_db_km: f64) -> f64 {
    alpha_db_km * LN_10 / 10.0 * 1e-3
}

pub fn np_per_m_to_db_per_km(alpha_np_m: f64) -> f64 {
    alpha_np_m / (LN_10 / 10.0 * 1e-3)
}

pub fn dust_path_length(d: f64, theta_elev: f64, d_max: f64) -> f64 {
    let c = theta_elev.cos();
    if c <= 0.0 {
        return d_max;
    }
    (d / c).min(d_max)
}

/// Extinction factor exp(−αℓ) with α in dB/km.
pub fn dust_gain(alpha_db_km: f64, theta_elev: f64, d: f64, d_max: f64) -> f64 {
    (-db_per_km_to_np_per_m(alpha_db_km) * dust_path_length(d, theta_elev, d_max)).exp()
}

// ---------------------------------------------------------------- antennas

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig {
    pub n_h: usize,
    pub n_v: usize,
    pub spacing_h_m: f64,
    pub spacing_v_m: f64,
    pub max_gain_linear: f64,
    pub element_gain_dbi: f64,
    pub n_rf: usize,
}

impl ArrayConfig {
    /// 8×8 half-wavelength array, 28 dBi elements.
    pub fn table1(lambda: f64) -> Self {
        Self {
            n_h: 8,
            n_v: 8,
            spacing_h_m: lambda / 2.0,
            spacing_v_m: lambda / 2.0,
            max_gain_linear: 1.0,
            element_gain_dbi: 28.0,
            n_rf: 16,
        }
    }

    pub fn n_elements(&self) -> usize {
        self.n_h * self.n_v
    }

    pub fn element_gain(&self) -> f64 {
        crate::db_to_linear(self.element_gain_dbi)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_h == 0 || self.n_v == 0 {
            return Err(Error::Invalid("array dimensions must be positive".into()));
        }
        if self.n_rf == 0 || self.n_rf > self.n_elements() {
            return Err(Error::Invalid(format!(
                "array.n_rf = {} must lie in [1, {}]",
                self.n_rf,
                self.n_elements()
            )));
        }
        if !(self.spacing_h_m > 0.0 && self.spacing_v_m > 0.0) {
            return Err(Error::Invalid("array spacings must be positive".into()));
        }
        Ok(())
    }

    /// Unit-modulus response toward direction cosines (ux, uy); element
    /// (m, n) sits at index m·n_v + n.
    pub fn steering(&self, ux: f64, uy: f64, lambda: f64) -> DVector<Complex64> {
        let kx = 2.0 * PI * self.spacing_h_m / lambda * ux;
        let ky = 2.0 * PI * self.spacing_v_m / lambda * uy;
        DVector::from_iterator(
            self.n_elements(),
            (0..self.n_h).flat_map(|m| {
                (0..self.n_v).map(move |n| Complex64::from_polar(1.0, kx * m as f64 + ky * n as f64))
            }),
        )
    }

    /// Steering vector for the off-nadir angle `theta` and azimuth `phi`.
    pub fn steering_angles(&self, theta: f64, phi: f64, lambda: f64) -> DVector<Complex64> {
        let s = theta.sin();
        self.steering(s * phi.cos(), s * phi.sin(), lambda)
    }
}

fn dirichlet_ratio(n: usize, x: f64) -> f64 {
    let den = (PI * x).sin();
    if den.abs() < 1e-9 {
        // removable singularity; second-order series of the ratio around the pole
        let k = x.round();
        let eps = x - k;
        let nf = n as f64;
        let sign = if ((n - 1) as i64 * k as i64) % 2 == 0 { 1.0 } else { -1.0 };
        return sign * (1.0 - (nf * nf - 1.0) * (PI * eps).powi(2) / 6.0);
    }
    (n as f64 * PI * x).sin() / (n as f64 * den)
}

/// Normalized power pattern of the planar array scaled by its peak gain.
pub fn upa_array_factor(arr: &ArrayConfig, theta: f64, phi: f64, lambda: f64) -> f64 {
    let s = theta.sin();
    let fh = dirichlet_ratio(arr.n_h, arr.spacing_h_m / lambda * s * phi.cos());
    let fv = dirichlet_ratio(arr.n_v, arr.spacing_v_m / lambda * s * phi.sin());
    arr.max_gain_linear * (fh * fv).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundNodeConfig {
    pub g0_linear: f64,
    pub boresight_rad: f64,
    pub directivity_n: f64,
    pub rcs_m2: f64,
    pub velocity_mps: Vector3<f64>,
    pub wind_mps: Vector3<f64>,
    /// Central angle and azimuth of the node.
    pub theta_rad: f64,
    pub phi_rad: f64,
}

impl GroundNodeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.g0_linear > 0.0) {
            return Err(Error::Invalid("ground.g0 must be > 0".into()));
        }
        if !(self.rcs_m2 > 0.0) {
            return Err(Error::Invalid("ground.rcs_m2 must be > 0".into()));
        }
        Ok(())
    }
}

pub fn ground_gain(node: &GroundNodeConfig, arrival_rad: f64) -> f64 {
    let c = (arrival_rad - node.boresight_rad).cos();
    if c <= 0.0 {
        return 0.0;
    }
    node.g0_linear * c.powf(node.directivity_n)
}

/// Thermal noise power κ·B·T.
pub fn noise_power(bandwidth_hz: f64, temperature_k: f64) -> f64 {
    BOLTZMANN * bandwidth_hz * temperature_k
}

/// Per-element one-way channel gain toward a ground direction.
pub fn channel_gain_vector(scene: &ScenarioConfig, theta: f64, phi: f64) -> Result<DVector<Complex64>> {
    let orbit = &scene.orbit;
    let d = orbit::slant_range(orbit, theta)?;
    let zenith = orbit::ground_zenith(orbit, theta);
    let lambda = scene.radio.wavelength();
    let g_m = ground_gain(&scene.ground, zenith);
    let power = (SPEED_OF_LIGHT / (4.0 * PI * scene.radio.carrier_hz * d)).powi(2) * g_m
        / noise_power(scene.radio.bandwidth_hz, scene.radio.noise_temperature());
    let alpha = dust_alpha(&scene.dust, lambda);
    let chi = (-db_per_km_to_np_per_m(alpha) * scene.dust.path_length(zenith)).exp();
    let b = upa_array_factor(&scene.array, orbit::look_angle(orbit, theta), phi, lambda);
    let amp = power.sqrt() * chi * b.sqrt();
    Ok(DVector::from_element(scene.array.n_elements(), Complex64::new(amp, 0.0)))
}

pub fn fresnel_reflection(eps_r: f64, theta_inc: f64) -> f64 {
    let (s, c) = theta_inc.sin_cos();
    let root = (eps_r - s * s).sqrt();
    (eps_r * c - root) / (eps_r * c + root)
}

pub fn doppler_sensing(
    v_sat: &Vector3<f64>,
    v_wind: &Vector3<f64>,
    v_rover: &Vector3<f64>,
    u: &Vector3<f64>,
    lambda: f64,
) -> f64 {
    2.0 / lambda * (v_sat + v_wind + v_rover).dot(u)
}

pub fn doppler_comm(
    v_sat: &Vector3<f64>,
    v_wind: &Vector3<f64>,
    v_rover: &Vector3<f64>,
    u: &Vector3<f64>,
    lambda: f64,
) -> f64 {
    1.0 / lambda * (v_sat + v_wind - v_rover).dot(u)
}

// ---------------------------------------------------------------- composite channels

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerrainPath {
    pub d1_m: f64,
    pub d2_m: f64,
    pub incidence_rad: f64,
    pub eps_r: f64,
    /// Central angle and azimuth of the reflection point.
    pub direction: (f64, f64),
    pub effective_dust_angle_rad: f64,
}

/// Reflection points scattered 0.5–5 km around the ground node, placed by `seed`.
pub fn terrain_layout(scene: &ScenarioConfig, seed: u64) -> Vec<TerrainPath> {
    let orbit = &scene.orbit;
    let r = orbit.mars_radius_m;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7465_7272_6169_6e00);
    let (t0, p0) = (scene.ground.theta_rad, scene.ground.phi_rad);
    let limit = orbit.theta_max() * 0.999;
    (0..scene.terrain.n_paths)
        .map(|_| {
            let s: f64 = rng.random_range(500.0..5000.0);
            let bearing: f64 = rng.random_range(0.0..2.0 * PI);
            // small-offset placement in the (theta, phi) chart
            let dt = s / r * bearing.cos();
            let theta = (t0 + dt).clamp(1e-6, limit);
            let dp = if theta > 1e-6 { s / r * bearing.sin() / theta.sin() } else { 0.0 };
            let zen = orbit::ground_zenith(orbit, theta);
            TerrainPath {
                d1_m: orbit::slant_range_unchecked(orbit, theta),
                d2_m: s,
                incidence_rad: zen,
                eps_r: scene.terrain.eps_r,
                direction: (theta, p0 + dp),
                effective_dust_angle_rad: zen,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Sensing,
    Communication,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub coeff: Complex64,
    pub delay_s: f64,
    pub doppler_hz: f64,
    /// Rayleigh draw ξ; unity on the sensing phase.
    pub fading: Complex64,
    /// Central angle and azimuth the array sees this path at.
    pub direction: (f64, f64),
    /// Velocity of the reflector projected on the line of sight.
    pub rover_radial_mps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub phase: Phase,
    pub los_coeff: Complex64,
    pub nlos: Vec<PathComponent>,
    pub main_delay_s: f64,
    pub main_doppler_hz: f64,
    pub main_direction: (f64, f64),
    pub rover_radial_mps: f64,
    /// Multiplicative pointing error; exactly one when disabled.
    pub misalign: Complex64,
    /// Dust extinction used, dB/km.
    pub alpha_db_km: f64,
}

impl ChannelRealization {
    /// Scalar channel: main path plus all reflected paths (with fading) times the pointing error.
    pub fn total(&self) -> Complex64 {
        let sum = self.los_coeff + self.nlos.iter().map(|p| p.coeff * p.fading).sum::<Complex64>();
        sum * self.misalign
    }
}

struct PathKinematics {
    state: OrbitState,
}

impl PathKinematics {
    fn los(&self, scene: &ScenarioConfig, dir: (f64, f64)) -> Vector3<f64> {
        orbit::los_inertial(&scene.orbit, &self.state, dir.0, dir.1)
    }
}

/// Two-way echo channel; deterministic for a given scene and time.
pub fn sensing_channel(scene: &ScenarioConfig, t: f64) -> Result<ChannelRealization> {
    sensing_channel_with_alpha(scene, t, dust_alpha(&scene.dust, scene.radio.wavelength()))
}

pub fn sensing_channel_with_alpha(scene: &ScenarioConfig, t: f64, alpha_db_km: f64) -> Result<ChannelRealization> {
    let orbit = &scene.orbit;
    let node = &scene.ground;
    let lambda = scene.radio.wavelength();
    let alpha = db_per_km_to_np_per_m(alpha_db_km);
    let d = orbit::slant_range(orbit, node.theta_rad)?;
    let kin = PathKinematics {
        state: orbit::state_at(orbit, t),
    };
    let v_sat = kin.state.velocity_mps;
    let u = kin.los(scene, (node.theta_rad, node.phi_rad));
    let f_main = doppler_sensing(&v_sat, &node.wind_mps, &node.velocity_mps, &u, lambda);
    let ell = scene.dust.path_length(orbit::ground_zenith(orbit, node.theta_rad));
    let main = (node.rcs_m2.sqrt() / fspl_two_way(d, lambda).sqrt()) * (-alpha * 2.0 * ell).exp();
    let los_coeff = Complex64::from_polar(main, 2.0 * PI * f_main * t);

    let nlos = terrain_layout(scene, scene.seed)
        .iter()
        .map(|p| {
            let ui = kin.los(scene, p.direction);
            let f = doppler_sensing(&v_sat, &node.wind_mps, &node.velocity_mps, &ui, lambda);
            let loss = (4.0 * PI * (p.d1_m + p.d2_m) / lambda).powi(4);
            let ell_i = scene.dust.path_length(p.effective_dust_angle_rad) + p.d2_m;
            let amp = (-alpha * ell_i).exp() / loss.sqrt() * fresnel_reflection(p.eps_r, p.incidence_rad);
            PathComponent {
                coeff: Complex64::from_polar(1.0, 2.0 * PI * f * t) * amp,
                delay_s: 2.0 * (p.d1_m + p.d2_m) / SPEED_OF_LIGHT,
                doppler_hz: f,
                fading: Complex64::new(1.0, 0.0),
                direction: p.direction,
                rover_radial_mps: node.velocity_mps.dot(&ui),
            }
        })
        .collect();

    Ok(ChannelRealization {
        phase: Phase::Sensing,
        los_coeff,
        nlos,
        main_delay_s: 2.0 * d / SPEED_OF_LIGHT,
        main_doppler_hz: f_main,
        main_direction: (node.theta_rad, node.phi_rad),
        rover_radial_mps: node.velocity_mps.dot(&u),
        misalign: Complex64::new(1.0, 0.0),
        alpha_db_km,
    })
}

/// Draw a standard circularly-symmetric complex normal.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// One-way downlink channel with Rayleigh-faded reflections, reproducible from `seed`.
pub fn comm_channel(scene: &ScenarioConfig, t: f64, seed: u64) -> Result<ChannelRealization> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    comm_channel_with(scene, t, dust_alpha(&scene.dust, scene.radio.wavelength()), &mut rng)
}

pub fn comm_channel_with<R: Rng + ?Sized>(
    scene: &ScenarioConfig,
    t: f64,
    alpha_db_km: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let orbit = &scene.orbit;
    let node = &scene.ground;
    let lambda = scene.radio.wavelength();
    let alpha = db_per_km_to_np_per_m(alpha_db_km);
    let d = orbit::slant_range(orbit, node.theta_rad)?;
    let kin = PathKinematics {
        state: orbit::state_at(orbit, t),
    };
    let v_sat = kin.state.velocity_mps;
    let u = kin.los(scene, (node.theta_rad, node.phi_rad));
    let f_main = doppler_comm(&v_sat, &node.wind_mps, &node.velocity_mps, &u, lambda);
    let ell = scene.dust.path_length(orbit::ground_zenith(orbit, node.theta_rad));
    let main = (-alpha * ell).exp() / fspl_one_way(d, lambda).sqrt();
    let los_coeff = Complex64::from_polar(main, 2.0 * PI * f_main * t);

    let nlos = terrain_layout(scene, scene.seed)
        .iter()
        .map(|p| {
            let ui = kin.los(scene, p.direction);
            let f = doppler_comm(&v_sat, &node.wind_mps, &node.velocity_mps, &ui, lambda);
            let loss = fspl_one_way(p.d1_m + p.d2_m, lambda);
            let ell_i = scene.dust.path_length(p.effective_dust_angle_rad) + p.d2_m;
            let amp = (-alpha * ell_i).exp() / loss.sqrt() * fresnel_reflection(p.eps_r, p.incidence_rad);
            PathComponent {
                coeff: Complex64::from_polar(amp, 2.0 * PI * f * t),
                delay_s: (p.d1_m + p.d2_m) / SPEED_OF_LIGHT,
                doppler_hz: f,
                fading: complex_normal(rng),
                direction: p.direction,
                rover_radial_mps: node.velocity_mps.dot(&ui),
            }
        })
        .collect();

    let sigma = scene.comm.misalign_var.sqrt();
    let misalign = Complex64::new(1.0, 0.0) + complex_normal(rng) * sigma;

    Ok(ChannelRealization {
        phase: Phase::Communication,
        los_coeff,
        nlos,
        main_delay_s: d / SPEED_OF_LIGHT,
        main_doppler_hz: f_main,
        main_direction: (node.theta_rad, node.phi_rad),
        rover_radial_mps: node.velocity_mps.dot(&u),
        misalign,
        alpha_db_km,
    })
}

/// Array-domain downlink vector: each path steered from its direction and
/// scaled by element gain, ground antenna gain and noise power, so that
/// |hᴴw|² is the received SNR for a transmit vector `w` in watts.
pub fn comm_channel_vector(scene: &ScenarioConfig, ch: &ChannelRealization) -> DVector<Complex64> {
    let orbit = &scene.orbit;
    let lambda = scene.radio.wavelength();
    let noise = noise_power(scene.radio.bandwidth_hz, scene.radio.noise_temperature());
    let ge = scene.array.element_gain();
    let mut h = DVector::zeros(scene.array.n_elements());
    let mut add = |coeff: Complex64, dir: (f64, f64)| {
        let gm = ground_gain(&scene.ground, orbit::ground_zenith(orbit, dir.0));
        let scale = (ge * gm / noise).sqrt();
        let a = scene.array.steering_angles(orbit::look_angle(orbit, dir.0), dir.1, lambda);
        h.axpy(coeff * scale, &a, Complex64::new(1.0, 0.0));
    };
    add(ch.los_coeff, ch.main_direction);
    for p in &ch.nlos {
        add(p.coeff * p.fading, p.direction);
    }
    h * ch.misalign
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioConfig;

    #[test]
    fn free_space_losses() {
        let l = fspl_one_way(400e3, 0.15);
        let oracle = (4.0 * PI * 400e3 / 0.15f64).powi(2);
        assert!((l - oracle).abs() < 1e-12 * oracle);
        assert!((l - 1.123e15).abs() < 1e12);
        assert!((fspl_one_way(0.15 / (4.0 * PI), 0.15) - 1.0).abs() < 1e-12);
        assert!((fspl_one_way(800.0, 0.15) / fspl_one_way(400.0, 0.15) - 4.0).abs() < 1e-12);
        let two = fspl_two_way(400e3, 0.15);
        assert!((two - 2.018e31).abs() < 1e28);
        assert!((two / (4.0 * PI * 800e3 / 0.15f64).powi(4) - 1.0).abs() < 1e-12);
        assert!((two / (16.0 * l * l) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn severe_dust_extinction() {
        let dust = DustScenario::preset(DustPreset::Severe, orbit::MARS_RADIUS_M);
        let a = dust_alpha(&dust, 0.15);
        let oracle = 1.029e6 * 6.3 / ((3.55f64).powi(2) + 6.3 * 6.3) / 0.15 * 5e8 * (1.5e-6f64).powi(3);
        assert!((a - oracle).abs() < 1e-12 * oracle);
        assert!((a - 1.395e-3).abs() < 1e-6);
        let light = DustScenario::preset(DustPreset::Light, orbit::MARS_RADIUS_M);
        assert!((dust_alpha(&light, 0.15) * 5.0 - a).abs() < 1e-18);
        let clear = DustScenario::preset(DustPreset::Clear, orbit::MARS_RADIUS_M);
        assert_eq!(dust_alpha(&clear, 0.15), 0.0);
    }

    #[test]
    fn dust_gain_clamp_and_half_power() {
        assert_eq!(dust_gain(0.0, 0.3, 1e4, 1e5), 1.0);
        let a = 1.0;
        let clamped = dust_gain(a, 1.5, 1e4, 2e4);
        assert!((clamped - (-db_per_km_to_np_per_m(a) * 2e4).exp()).abs() < 1e-15);
        let ell = 1e4;
        let alpha = np_per_m_to_db_per_km(2f64.ln() / ell);
        assert!((dust_gain(alpha, 0.0, ell, 1e9) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn array_factor_limits() {
        let arr = ArrayConfig::table1(0.15);
        assert!((upa_array_factor(&arr, 0.0, 0.3, 0.15) - 1.0).abs() < 1e-15);
        // first horizontal null at sinθ cosφ = λ/(N_h d_h)
        let s: f64 = 0.15 / (8.0 * 0.075);
        assert!(upa_array_factor(&arr, s.asin(), 0.0, 0.15) < 1e-25);
    }

    #[test]
    fn ground_pattern() {
        let node = ScenarioConfig::default().ground;
        let n2 = GroundNodeConfig {
            directivity_n: 2.0,
            boresight_rad: 0.1,
            ..node
        };
        assert!((ground_gain(&n2, 0.1) - n2.g0_linear).abs() < 1e-15);
        assert!((ground_gain(&n2, 0.1 + PI / 3.0) - n2.g0_linear / 4.0).abs() < 1e-12);
        assert_eq!(ground_gain(&n2, 0.1 + PI / 2.0 + 1e-9), 0.0);
        assert_eq!(ground_gain(&n2, 0.1 + 2.5), 0.0);
    }

    #[test]
    fn gain_vector_boresight() {
        let mut scene = ScenarioConfig {
            dust: DustScenario::preset(DustPreset::Clear, orbit::MARS_RADIUS_M),
            ..ScenarioConfig::default()
        };
        scene.ground.boresight_rad = 0.0;
        let g = channel_gain_vector(&scene, 0.0, 0.0).unwrap();
        let lambda = scene.radio.wavelength();
        let noise = BOLTZMANN * scene.radio.bandwidth_hz * scene.radio.noise_temperature();
        let oracle = (scene.ground.g0_linear / (fspl_one_way(400e3, lambda) * noise)).sqrt()
            * (64.0 * scene.array.max_gain_linear).sqrt();
        assert!((g.norm() - oracle).abs() < 1e-9 * oracle);

        let mut wide = scene.clone();
        wide.radio.bandwidth_hz *= 4.0;
        let g4 = channel_gain_vector(&wide, 0.0, 0.0).unwrap();
        assert!((g4.norm() * 2.0 - g.norm()).abs() < 1e-9 * g.norm());

        let mut dusty = scene.clone();
        dusty.dust = DustScenario::preset(DustPreset::Severe, orbit::MARS_RADIUS_M);
        dusty.dust.particle_density_per_m3 = 1e30;
        assert_eq!(channel_gain_vector(&dusty, 0.0, 0.0).unwrap().norm(), 0.0);
        assert!(channel_gain_vector(&scene, 1.0, 0.0).is_err());
    }

    #[test]
    fn fresnel_cases() {
        assert!((fresnel_reflection(4.0, 0.0) - 1.0 / 3.0).abs() < 1e-15);
        for &t in &[0.0, 0.3, 1.0, 1.4] {
            assert!(fresnel_reflection(1.0, t).abs() < 1e-15);
        }
        for &eps in &[1.5, 3.0, 4.0, 9.0] {
            // bisection for the sign change against the closed-form angle
            let (mut lo, mut hi) = (0.0, PI / 2.0 - 1e-9);
            assert!(fresnel_reflection(eps, lo) * fresnel_reflection(eps, hi) < 0.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if fresnel_reflection(eps, lo) * fresnel_reflection(eps, mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            assert!((lo - eps.sqrt().atan()).abs() < 1e-9);
        }
    }

    #[test]
    fn doppler_values() {
        let u = Vector3::new(0.0, 0.0, 1.0);
        let z = Vector3::zeros();
        let perp = Vector3::new(100.0, 50.0, 0.0);
        assert_eq!(doppler_sensing(&perp, &perp, &perp, &u, 0.15), 0.0);
        let v = Vector3::new(0.0, 0.0, 3021.0);
        assert!((doppler_sensing(&v, &z, &z, &u, 0.15) - 40_280.0).abs() < 1e-9);
        assert!((doppler_sensing(&v, &z, &z, &u, 0.15) - 2.0 * doppler_comm(&v, &z, &z, &u, 0.15)).abs() < 1e-9);
        let f = doppler_comm(
            &Vector3::new(0.0, 0.0, 3000.0),
            &Vector3::new(0.0, 0.0, 20.0),
            &Vector3::new(0.0, 0.0, 1.0),
            &u,
            0.15,
        );
        assert!((f - 20_126.666_666_666_668).abs() < 1e-6);
        let sum = Vector3::new(0.0, 0.0, 3020.0);
        assert_eq!(doppler_comm(&v, &z, &sum, &u, 0.15), 1.0 / 0.15);
        assert_eq!(doppler_comm(&v, &z, &v, &u, 0.15), 0.0);
        assert_eq!(doppler_comm(&v, &z, &z, &-u, 0.15), -doppler_comm(&v, &z, &z, &u, 0.15));
    }

    #[test]
    fn sensing_channel_properties() {
        let mut scene = ScenarioConfig::default();
        scene.terrain.n_paths = 0;
        let a = sensing_channel(&scene, 0.0).unwrap();
        assert!(a.nlos.is_empty());
        assert_eq!(a.total(), a.los_coeff);
        let b = sensing_channel(&scene, 0.37).unwrap();
        assert!((a.los_coeff.norm() - b.los_coeff.norm()).abs() < 1e-12 * a.los_coeff.norm());
        let mut big = scene.clone();
        big.ground.rcs_m2 *= 4.0;
        let c = sensing_channel(&big, 0.0).unwrap();
        assert!((c.los_coeff.norm() / a.los_coeff.norm() - 2.0).abs() < 1e-12);
        let full = ScenarioConfig::default();
        assert_eq!(sensing_channel(&full, 1.0).unwrap(), sensing_channel(&full, 1.0).unwrap());
    }

    #[test]
    fn comm_channel_properties() {
        let scene = ScenarioConfig::default();
        assert_eq!(comm_channel(&scene, 0.5, 9).unwrap(), comm_channel(&scene, 0.5, 9).unwrap());
        let mut bare = scene.clone();
        bare.terrain.n_paths = 0;
        bare.comm.misalign_var = 0.0;
        let ch = comm_channel(&bare, 0.5, 9).unwrap();
        assert_eq!(ch.total().norm(), ch.los_coeff.norm());
    }

    #[test]
    fn rayleigh_second_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let m = (0..n).map(|_| complex_normal(&mut rng).norm_sqr()).sum::<f64>() / n as f64;
        assert!((m - 1.0).abs() < 0.01);
    }

    #[test]
    fn terrain_reflections_are_passive() {
        let scene = ScenarioConfig::default();
        for p in terrain_layout(&scene, 5) {
            assert!(fresnel_reflection(p.eps_r, p.incidence_rad).abs() <= 1.0);
            assert!(p.d1_m > 0.0 && p.d2_m > 0.0);
            assert!(p.incidence_rad >= 0.0 && p.incidence_rad < PI / 2.0);
        }
    }
}
