//! The full experiment description shared by every stage of the pipeline.

use nalgebra::Vector3;

use crate::allocator::FrameConfig;
use crate::channel::{ArrayConfig, DustPreset, DustScenario, GroundNodeConfig};
use crate::mapping::UncertaintyModel;
use crate::orbit::{self, OrbitConfig};
use crate::{Error, Result, SPEED_OF_LIGHT, T0_KELVIN};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioConfig {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    /// Overrides the temperature derived from the noise figure.
    pub noise_temp_k: Option<f64>,
    /// Unmodelled losses on the sensing budget, dB.
    pub extra_loss_db: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            carrier_hz: 2e9,
            bandwidth_hz: 20e6,
            noise_figure_db: 2.0,
            noise_temp_k: None,
            extra_loss_db: 0.0,
        }
    }
}

impl RadioConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn noise_temperature(&self) -> f64 {
        self.noise_temp_k
            .unwrap_or(T0_KELVIN * crate::db_to_linear(self.noise_figure_db))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerrainConfig {
    pub n_paths: usize,
    pub eps_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub gamma_sens_db: f64,
    pub gamma_comm: f64,
    pub gamma_th: f64,
    pub eps_out: f64,
    pub eta_min: f64,
}

impl Thresholds {
    pub fn gamma_sens(&self) -> f64 {
        crate::db_to_linear(self.gamma_sens_db)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingConfig {
    pub max_iter: usize,
    pub delta: f64,
    /// Digital output streams; 0 means one per RF chain.
    pub streams: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommConfig {
    pub misalign_var: f64,
    pub beta_max: f64,
    pub gamma_edge: f64,
    pub leak_ratio: f64,
    pub admm_rho: f64,
    pub admm_eps: f64,
    pub admm_max_iter: usize,
    pub mc_trials: usize,
    pub omp_oversample: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationConfig {
    pub n_obs: usize,
    pub window_s: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub n_theta: usize,
    pub n_phi: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n_rf: Vec<usize>,
    pub dust: Vec<DustPreset>,
    pub csi_levels: Vec<f64>,
    pub pareto_csi_levels: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub eta_low: f64,
    pub eta_high: f64,
    pub eta_step: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_rf: vec![4, 8, 16, 32, 64],
            dust: DustPreset::STORMS.to_vec(),
            csi_levels: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
            pareto_csi_levels: vec![0.1, 0.3, 0.5],
            snr_db: vec![0.0, 5.0, 10.0],
            eta_low: 0.05,
            eta_high: 0.95,
            eta_step: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub orbit: OrbitConfig,
    pub radio: RadioConfig,
    pub array: ArrayConfig,
    pub dust_preset: Option<DustPreset>,
    pub dust: DustScenario,
    pub ground: GroundNodeConfig,
    pub terrain: TerrainConfig,
    pub p1_w: f64,
    pub p2_w: f64,
    pub thresholds: Thresholds,
    pub frame: FrameConfig,
    pub uncertainty: UncertaintyModel,
    pub sensing: SensingConfig,
    pub comm: CommConfig,
    pub estimation: EstimationConfig,
    pub grid: GridConfig,
    pub sweep: SweepConfig,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let orbit = OrbitConfig::default();
        let radio = RadioConfig::default();
        let theta = orbit::central_angle_for_range(&orbit, 500e3).expect("500 km is visible at 400 km altitude");
        Self {
            orbit,
            radio,
            array: ArrayConfig::table1(radio.wavelength()),
            dust_preset: Some(DustPreset::Medium),
            dust: DustScenario::preset(DustPreset::Medium, orbit.mars_radius_m),
            ground: GroundNodeConfig {
                g0_linear: 1.0,
                boresight_rad: 0.0,
                directivity_n: 1.0,
                rcs_m2: 200.0,
                velocity_mps: Vector3::new(0.6, 0.8, 0.0),
                wind_mps: Vector3::new(15.0, -8.0, 0.0),
                theta_rad: theta,
                phi_rad: 0.0,
            },
            terrain: TerrainConfig {
                n_paths: 3,
                eps_r: 4.0,
            },
            p1_w: 6000.0,
            p2_w: 6000.0,
            thresholds: Thresholds {
                gamma_sens_db: -35.0,
                gamma_comm: 1.0,
                gamma_th: 1.0,
                eps_out: 0.1,
                eta_min: 0.3,
            },
            frame: FrameConfig {
                t_frame_s: 1.0,
                t_sens_min_s: 0.01,
                t_comm_max_s: 1.0,
            },
            uncertainty: UncertaintyModel {
                kappa_scale: 0.5,
                csi_uncertainty_level: 0.3,
            },
            sensing: SensingConfig {
                max_iter: 50,
                delta: 1e-4,
                streams: 0,
            },
            comm: CommConfig {
                misalign_var: 0.01,
                beta_max: 10.0,
                gamma_edge: 1.5,
                leak_ratio: 0.1,
                admm_rho: 1.0,
                admm_eps: 1e-6,
                admm_max_iter: 500,
                mc_trials: 10_000,
                omp_oversample: 2,
            },
            estimation: EstimationConfig {
                n_obs: 256,
                window_s: 0.064,
                trials: 2000,
            },
            grid: GridConfig { n_theta: 64, n_phi: 64 },
            sweep: SweepConfig::default(),
            seed: 2024,
        }
    }
}

impl ScenarioConfig {
    /// Replace the dust layer by a storm preset, keeping the permittivity.
    pub fn with_dust(&self, preset: DustPreset) -> Self {
        let mut out = self.clone();
        let mut d = DustScenario::preset(preset, self.orbit.mars_radius_m);
        d.eps_real = self.dust.eps_real;
        d.eps_imag = self.dust.eps_imag;
        d.mean_radius_m = self.dust.mean_radius_m;
        out.dust = d;
        out.dust_preset = Some(preset);
        out
    }

    pub fn dust_label(&self) -> String {
        self.dust_preset.map_or_else(|| "custom".to_string(), |p| p.name().to_string())
    }

    pub fn streams(&self) -> usize {
        if self.sensing.streams == 0 {
            self.array.n_rf
        } else {
            self.sensing.streams
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.orbit.validate()?;
        self.array.validate()?;
        self.dust.validate()?;
        self.ground.validate()?;
        self.frame.validate()?;
        self.uncertainty.validate()?;
        let positive = [
            ("radio.carrier_hz", self.radio.carrier_hz),
            ("radio.bandwidth_hz", self.radio.bandwidth_hz),
            ("power.p1_w", self.p1_w),
            ("power.p2_w", self.p2_w),
            ("sensing.delta", self.sensing.delta),
            ("comm.admm_rho", self.comm.admm_rho),
            ("comm.admm_eps", self.comm.admm_eps),
            ("comm.beta_max", self.comm.beta_max),
            ("comm.gamma_edge", self.comm.gamma_edge),
            ("estimation.window_s", self.estimation.window_s),
            ("terrain.eps_r", self.terrain.eps_r),
        ];
        for (k, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!("{k} must be positive and finite, got {v}")));
            }
        }
        if self.comm.beta_max < 1.0 || self.comm.gamma_edge < 1.0 {
            return Err(Error::Invalid("comm.beta_max and comm.gamma_edge must be >= 1".into()));
        }
        if self.terrain.eps_r <= 1.0 {
            return Err(Error::Invalid("terrain.eps_r must exceed 1".into()));
        }
        if self.comm.misalign_var < 0.0 || self.comm.leak_ratio < 0.0 {
            return Err(Error::Invalid("comm.misalign_var and comm.leak_ratio must be >= 0".into()));
        }
        if self.comm.mc_trials == 0 || self.comm.omp_oversample == 0 || self.comm.admm_max_iter == 0 {
            return Err(Error::Invalid("comm trial, oversampling and iteration counts must be >= 1".into()));
        }
        if self.estimation.n_obs < 2 || self.estimation.trials < 100 {
            return Err(Error::Invalid("estimation needs n_obs >= 2 and trials >= 100".into()));
        }
        if self.grid.n_theta < 2 || self.grid.n_phi < 2 {
            return Err(Error::Invalid("grid needs at least 2x2 cells".into()));
        }
        if self.sensing.max_iter == 0 {
            return Err(Error::Invalid("sensing.max_iter must be >= 1".into()));
        }
        if self.streams() > self.array.n_elements() {
            return Err(Error::Invalid("sensing.streams exceeds the element count".into()));
        }
        if !(0.0..=1.0).contains(&self.thresholds.eta_min) {
            return Err(Error::Invalid("threshold.eta_min must lie in [0, 1]".into()));
        }
        if !(self.thresholds.eps_out > 0.0 && self.thresholds.eps_out < 1.0) {
            return Err(Error::Invalid("threshold.eps_out must lie in (0, 1)".into()));
        }
        let visible = self.orbit.theta_max();
        if !(0.0..visible).contains(&self.ground.theta_rad) {
            return Err(Error::Invalid(format!(
                "ground.theta_rad = {} outside the visible cap [0, {visible})",
                self.ground.theta_rad
            )));
        }
        let s = &self.sweep;
        if s.n_rf.iter().any(|&n| n == 0 || n > self.array.n_elements()) {
            return Err(Error::Invalid("sweep.n_rf entries must lie in [1, N_t]".into()));
        }
        if s.csi_levels.iter().chain(&s.pareto_csi_levels).any(|u| !(0.0..=0.8).contains(u)) {
            return Err(Error::Invalid("CSI uncertainty levels must lie in [0, 0.8]".into()));
        }
        if !(s.eta_step > 0.0) || s.eta_low > s.eta_high {
            return Err(Error::Invalid("sweep eta range needs step > 0 and low <= high".into()));
        }
        Ok(())
    }
}
