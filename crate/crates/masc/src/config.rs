//! Plain-text scenario files: one `key = value` per line, `#` starts a comment.
//!
//! ```text
//! preset = dust_severe
//! array.n_rf = 16
//! sweep.n_rf = 4, 8, 16
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::channel::{self, ArrayConfig, DustPreset, Permittivity};
use crate::orbit::{self, OrbitConfig};
use crate::scenario::ScenarioConfig;
use crate::{Error, Result};

/// Named starting points selectable with `preset = <name>`.
pub const PRESETS: [&str; 4] = ["table1_default", "dust_light", "dust_medium", "dust_severe"];

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    let base = ScenarioConfig::default();
    match name {
        "table1_default" => Some(base),
        "dust_light" => Some(base.with_dust(DustPreset::Light)),
        "dust_medium" => Some(base.with_dust(DustPreset::Medium)),
        "dust_severe" => Some(base.with_dust(DustPreset::Severe)),
        _ => None,
    }
}

const KEYS: &[&str] = &[
    "preset",
    "seed",
    "dust.preset",
    "dust.density_per_m3",
    "dust.layer_height_m",
    "dust.mean_radius_m",
    "dust.permittivity",
    "dust.eps_real",
    "dust.eps_imag",
    "orbit.altitude_m",
    "orbit.phase0_rad",
    "radio.carrier_hz",
    "radio.bandwidth_hz",
    "radio.noise_figure_db",
    "radio.noise_temp_k",
    "radio.extra_loss_db",
    "array.n_h",
    "array.n_v",
    "array.spacing_h_m",
    "array.spacing_v_m",
    "array.element_gain_dbi",
    "array.max_gain",
    "array.n_rf",
    "ground.theta_rad",
    "ground.range_m",
    "ground.phi_rad",
    "ground.g0",
    "ground.boresight_rad",
    "ground.directivity_n",
    "ground.rcs_m2",
    "ground.velocity_mps",
    "ground.wind_mps",
    "terrain.n_paths",
    "terrain.eps_r",
    "power.p1_w",
    "power.p2_w",
    "threshold.gamma_sens_db",
    "threshold.gamma_comm",
    "threshold.gamma_th",
    "threshold.eps_out",
    "threshold.eta_min",
    "frame.t_frame_s",
    "frame.t_sens_min_s",
    "frame.t_comm_max_s",
    "uncertainty.kappa",
    "uncertainty.csi_level",
    "sensing.max_iter",
    "sensing.delta",
    "sensing.streams",
    "comm.misalign_var",
    "comm.beta_max",
    "comm.gamma_edge",
    "comm.leak_ratio",
    "comm.admm_rho",
    "comm.admm_eps",
    "comm.admm_max_iter",
    "comm.mc_trials",
    "comm.omp_oversample",
    "estimation.n_obs",
    "estimation.window_s",
    "estimation.trials",
    "grid.n_theta",
    "grid.n_phi",
    "sweep.n_rf",
    "sweep.dust",
    "sweep.csi_levels",
    "sweep.pareto_csi_levels",
    "sweep.snr_db",
    "sweep.eta_low",
    "sweep.eta_high",
    "sweep.eta_step",
];

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn real(e: &Entry) -> Result<f64> {
    let v: f64 = e.value.parse().map_err(|_| err(e.line, format!("{}: `{}` is not a number", e.key, e.value)))?;
    if !v.is_finite() {
        return Err(err(e.line, format!("{}: value must be finite", e.key)));
    }
    Ok(v)
}

fn count(e: &Entry) -> Result<usize> {
    e.value
        .parse()
        .map_err(|_| err(e.line, format!("{}: `{}` is not a non-negative integer", e.key, e.value)))
}

fn list<T>(e: &Entry, f: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    let out: Option<Vec<T>> = e.value.split(',').map(|s| f(s.trim())).collect();
    match out {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(err(e.line, format!("{}: cannot read list `{}`", e.key, e.value))),
    }
}

fn vector(e: &Entry) -> Result<Vector3<f64>> {
    let v = list(e, |s| s.parse::<f64>().ok().filter(|x| x.is_finite()))?;
    if v.len() != 3 {
        return Err(err(e.line, format!("{}: expected three components", e.key)));
    }
    Ok(Vector3::new(v[0], v[1], v[2]))
}

fn dust_preset(e: &Entry) -> Result<DustPreset> {
    DustPreset::parse(e.value).ok_or_else(|| err(e.line, format!("unknown dust preset `{}`", e.value)))
}

/// Parses a scenario file. Unknown and repeated keys are errors; the
/// `preset` and `dust.preset` keys apply before everything else.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut entries = Vec::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, found `{body}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(err(line, format!("unknown key `{key}`")));
        }
        if let Some(first) = seen.insert(key, line) {
            return Err(err(line, format!("duplicate key `{key}` (first set on line {first})")));
        }
        if value.is_empty() {
            return Err(err(line, format!("{key}: missing value")));
        }
        entries.push(Entry { line, key, value });
    }

    let mut cfg = match entries.iter().find(|e| e.key == "preset") {
        Some(e) => preset(e.value).ok_or_else(|| {
            err(e.line, format!("unknown preset `{}` (expected one of {})", e.value, PRESETS.join(", ")))
        })?,
        None => ScenarioConfig::default(),
    };
    if let Some(e) = entries.iter().find(|e| e.key == "dust.preset") {
        cfg = cfg.with_dust(dust_preset(e)?);
    }

    let explicit = |k: &str| seen.contains_key(k);
    let mut dust_custom = false;
    for e in &entries {
        let c = &mut cfg;
        match e.key {
            "preset" | "dust.preset" => {}
            "seed" => c.seed = e.value.parse().map_err(|_| err(e.line, "seed: expected an unsigned integer"))?,
            "dust.density_per_m3" => {
                c.dust.particle_density_per_m3 = real(e)?;
                dust_custom = true;
            }
            "dust.layer_height_m" => {
                c.dust.layer_height_m = real(e)?;
                dust_custom = true;
            }
            "dust.mean_radius_m" => {
                c.dust.mean_radius_m = real(e)?;
                dust_custom = true;
            }
            "dust.permittivity" => {
                let p = match e.value {
                    "scattering" => Permittivity::Scattering,
                    "analogue" => Permittivity::Analogue,
                    other => return Err(err(e.line, format!("unknown permittivity `{other}`"))),
                };
                (c.dust.eps_real, c.dust.eps_imag) = p.parts();
                dust_custom = true;
            }
            "dust.eps_real" => {
                c.dust.eps_real = real(e)?;
                dust_custom = true;
            }
            "dust.eps_imag" => {
                c.dust.eps_imag = real(e)?;
                dust_custom = true;
            }
            "orbit.altitude_m" => c.orbit.altitude_m = real(e)?,
            "orbit.phase0_rad" => c.orbit.phase0_rad = real(e)?,
            "radio.carrier_hz" => c.radio.carrier_hz = real(e)?,
            "radio.bandwidth_hz" => c.radio.bandwidth_hz = real(e)?,
            "radio.noise_figure_db" => c.radio.noise_figure_db = real(e)?,
            "radio.noise_temp_k" => c.radio.noise_temp_k = Some(real(e)?),
            "radio.extra_loss_db" => c.radio.extra_loss_db = real(e)?,
            "array.n_h" => c.array.n_h = count(e)?,
            "array.n_v" => c.array.n_v = count(e)?,
            "array.spacing_h_m" => c.array.spacing_h_m = real(e)?,
            "array.spacing_v_m" => c.array.spacing_v_m = real(e)?,
            "array.element_gain_dbi" => c.array.element_gain_dbi = real(e)?,
            "array.max_gain" => c.array.max_gain_linear = real(e)?,
            "array.n_rf" => c.array.n_rf = count(e)?,
            "ground.theta_rad" => c.ground.theta_rad = real(e)?,
            "ground.range_m" => {}
            "ground.phi_rad" => c.ground.phi_rad = real(e)?,
            "ground.g0" => c.ground.g0_linear = real(e)?,
            "ground.boresight_rad" => c.ground.boresight_rad = real(e)?,
            "ground.directivity_n" => c.ground.directivity_n = real(e)?,
            "ground.rcs_m2" => c.ground.rcs_m2 = real(e)?,
            "ground.velocity_mps" => c.ground.velocity_mps = vector(e)?,
            "ground.wind_mps" => c.ground.wind_mps = vector(e)?,
            "terrain.n_paths" => c.terrain.n_paths = count(e)?,
            "terrain.eps_r" => c.terrain.eps_r = real(e)?,
            "power.p1_w" => c.p1_w = real(e)?,
            "power.p2_w" => c.p2_w = real(e)?,
            "threshold.gamma_sens_db" => c.thresholds.gamma_sens_db = real(e)?,
            "threshold.gamma_comm" => c.thresholds.gamma_comm = real(e)?,
            "threshold.gamma_th" => c.thresholds.gamma_th = real(e)?,
            "threshold.eps_out" => c.thresholds.eps_out = real(e)?,
            "threshold.eta_min" => c.thresholds.eta_min = real(e)?,
            "frame.t_frame_s" => c.frame.t_frame_s = real(e)?,
            "frame.t_sens_min_s" => c.frame.t_sens_min_s = real(e)?,
            "frame.t_comm_max_s" => c.frame.t_comm_max_s = real(e)?,
            "uncertainty.kappa" => c.uncertainty.kappa_scale = real(e)?,
            "uncertainty.csi_level" => c.uncertainty.csi_uncertainty_level = real(e)?,
            "sensing.max_iter" => c.sensing.max_iter = count(e)?,
            "sensing.delta" => c.sensing.delta = real(e)?,
            "sensing.streams" => c.sensing.streams = count(e)?,
            "comm.misalign_var" => c.comm.misalign_var = real(e)?,
            "comm.beta_max" => c.comm.beta_max = real(e)?,
            "comm.gamma_edge" => c.comm.gamma_edge = real(e)?,
            "comm.leak_ratio" => c.comm.leak_ratio = real(e)?,
            "comm.admm_rho" => c.comm.admm_rho = real(e)?,
            "comm.admm_eps" => c.comm.admm_eps = real(e)?,
            "comm.admm_max_iter" => c.comm.admm_max_iter = count(e)?,
            "comm.mc_trials" => c.comm.mc_trials = count(e)?,
            "comm.omp_oversample" => c.comm.omp_oversample = count(e)?,
            "estimation.n_obs" => c.estimation.n_obs = count(e)?,
            "estimation.window_s" => c.estimation.window_s = real(e)?,
            "estimation.trials" => c.estimation.trials = count(e)?,
            "grid.n_theta" => c.grid.n_theta = count(e)?,
            "grid.n_phi" => c.grid.n_phi = count(e)?,
            "sweep.n_rf" => c.sweep.n_rf = list(e, |s| s.parse().ok())?,
            "sweep.dust" => c.sweep.dust = list(e, DustPreset::parse)?,
            "sweep.csi_levels" => c.sweep.csi_levels = list(e, |s| s.parse().ok())?,
            "sweep.pareto_csi_levels" => c.sweep.pareto_csi_levels = list(e, |s| s.parse().ok())?,
            "sweep.snr_db" => c.sweep.snr_db = list(e, |s| s.parse().ok())?,
            "sweep.eta_low" => c.sweep.eta_low = real(e)?,
            "sweep.eta_high" => c.sweep.eta_high = real(e)?,
            "sweep.eta_step" => c.sweep.eta_step = real(e)?,
            other => unreachable!("key list and match arms disagree on `{other}`"),
        }
    }

    // quantities derived from others unless given explicitly
    if dust_custom {
        cfg.dust_preset = None;
    }
    cfg.dust.d_max_m = channel::grazing_chord(cfg.dust.layer_height_m, cfg.orbit.mars_radius_m);
    let lambda = cfg.radio.wavelength();
    if !explicit("array.spacing_h_m") {
        cfg.array.spacing_h_m = lambda / 2.0;
    }
    if !explicit("array.spacing_v_m") {
        cfg.array.spacing_v_m = lambda / 2.0;
    }
    if let Some(e) = entries.iter().find(|e| e.key == "ground.range_m") {
        if explicit("ground.theta_rad") {
            return Err(err(e.line, "set either ground.theta_rad or ground.range_m, not both"));
        }
        cfg.orbit.validate()?;
        cfg.ground.theta_rad = orbit::central_angle_for_range(&cfg.orbit, real(e)?)?;
    } else if !explicit("ground.theta_rad") && explicit("orbit.altitude_m") {
        cfg.orbit.validate()?;
        cfg.ground.theta_rad = orbit::central_angle_for_range(&cfg.orbit, 500e3_f64.max(cfg.orbit.altitude_m))?;
    }
    Ok(cfg)
}

/// Reads, parses and validates a scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg = parse_config(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Every resolved setting, one per line in a fixed order; hashing this text
/// identifies a run independently of how the file was written.
pub fn render_config(c: &ScenarioConfig) -> String {
    let v3 = |v: &Vector3<f64>| format!("{:?}, {:?}, {:?}", v.x, v.y, v.z);
    let mut s = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    put("seed", c.seed.to_string());
    put("dust.label", c.dust_label());
    put("dust.density_per_m3", format!("{:?}", c.dust.particle_density_per_m3));
    put("dust.layer_height_m", format!("{:?}", c.dust.layer_height_m));
    put("dust.mean_radius_m", format!("{:?}", c.dust.mean_radius_m));
    put("dust.eps_real", format!("{:?}", c.dust.eps_real));
    put("dust.eps_imag", format!("{:?}", c.dust.eps_imag));
    put("orbit.altitude_m", format!("{:?}", c.orbit.altitude_m));
    put("orbit.phase0_rad", format!("{:?}", c.orbit.phase0_rad));
    put("radio.carrier_hz", format!("{:?}", c.radio.carrier_hz));
    put("radio.bandwidth_hz", format!("{:?}", c.radio.bandwidth_hz));
    put("radio.noise_temp_k", format!("{:?}", c.radio.noise_temperature()));
    put("radio.extra_loss_db", format!("{:?}", c.radio.extra_loss_db));
    let a: &ArrayConfig = &c.array;
    put("array.n_h", a.n_h.to_string());
    put("array.n_v", a.n_v.to_string());
    put("array.spacing_h_m", format!("{:?}", a.spacing_h_m));
    put("array.spacing_v_m", format!("{:?}", a.spacing_v_m));
    put("array.element_gain_dbi", format!("{:?}", a.element_gain_dbi));
    put("array.max_gain", format!("{:?}", a.max_gain_linear));
    put("array.n_rf", a.n_rf.to_string());
    let g = &c.ground;
    put("ground.theta_rad", format!("{:?}", g.theta_rad));
    put("ground.phi_rad", format!("{:?}", g.phi_rad));
    put("ground.g0", format!("{:?}", g.g0_linear));
    put("ground.boresight_rad", format!("{:?}", g.boresight_rad));
    put("ground.directivity_n", format!("{:?}", g.directivity_n));
    put("ground.rcs_m2", format!("{:?}", g.rcs_m2));
    put("ground.velocity_mps", v3(&g.velocity_mps));
    put("ground.wind_mps", v3(&g.wind_mps));
    put("terrain.n_paths", c.terrain.n_paths.to_string());
    put("terrain.eps_r", format!("{:?}", c.terrain.eps_r));
    put("power.p1_w", format!("{:?}", c.p1_w));
    put("power.p2_w", format!("{:?}", c.p2_w));
    let t = &c.thresholds;
    put("threshold.gamma_sens_db", format!("{:?}", t.gamma_sens_db));
    put("threshold.gamma_comm", format!("{:?}", t.gamma_comm));
    put("threshold.gamma_th", format!("{:?}", t.gamma_th));
    put("threshold.eps_out", format!("{:?}", t.eps_out));
    put("threshold.eta_min", format!("{:?}", t.eta_min));
    put("frame.t_frame_s", format!("{:?}", c.frame.t_frame_s));
    put("frame.t_sens_min_s", format!("{:?}", c.frame.t_sens_min_s));
    put("frame.t_comm_max_s", format!("{:?}", c.frame.t_comm_max_s));
    put("uncertainty.kappa", format!("{:?}", c.uncertainty.kappa_scale));
    put("uncertainty.csi_level", format!("{:?}", c.uncertainty.csi_uncertainty_level));
    put("sensing.max_iter", c.sensing.max_iter.to_string());
    put("sensing.delta", format!("{:?}", c.sensing.delta));
    put("sensing.streams", c.sensing.streams.to_string());
    let m = &c.comm;
    put("comm.misalign_var", format!("{:?}", m.misalign_var));
    put("comm.beta_max", format!("{:?}", m.beta_max));
    put("comm.gamma_edge", format!("{:?}", m.gamma_edge));
    put("comm.leak_ratio", format!("{:?}", m.leak_ratio));
    put("comm.admm_rho", format!("{:?}", m.admm_rho));
    put("comm.admm_eps", format!("{:?}", m.admm_eps));
    put("comm.admm_max_iter", m.admm_max_iter.to_string());
    put("comm.mc_trials", m.mc_trials.to_string());
    put("comm.omp_oversample", m.omp_oversample.to_string());
    put("estimation.n_obs", c.estimation.n_obs.to_string());
    put("estimation.window_s", format!("{:?}", c.estimation.window_s));
    put("estimation.trials", c.estimation.trials.to_string());
    put("grid.n_theta", c.grid.n_theta.to_string());
    put("grid.n_phi", c.grid.n_phi.to_string());
    put("sweep.n_rf", join(&c.sweep.n_rf));
    put("sweep.dust", c.sweep.dust.iter().map(|d| d.name()).collect::<Vec<_>>().join(", "));
    put("sweep.csi_levels", join(&c.sweep.csi_levels));
    put("sweep.pareto_csi_levels", join(&c.sweep.pareto_csi_levels));
    put("sweep.snr_db", join(&c.sweep.snr_db));
    put("sweep.eta_low", format!("{:?}", c.sweep.eta_low));
    put("sweep.eta_high", format!("{:?}", c.sweep.eta_high));
    put("sweep.eta_step", format!("{:?}", c.sweep.eta_step));
    s
}

/// Default-orbit summary used by `masc presets`.
pub fn describe_presets() -> String {
    let mut s = String::new();
    let orbit = OrbitConfig::default();
    for name in PRESETS {
        let c = preset(name).expect("listed preset exists");
        let alpha = channel::dust_alpha(&c.dust, c.radio.wavelength());
        let _ = writeln!(s, "{name}");
        let _ = writeln!(
            s,
            "  orbit {:.0} km, carrier {:.1} GHz, bandwidth {:.0} MHz, noise figure {:.1} dB",
            orbit.altitude_m / 1e3,
            c.radio.carrier_hz / 1e9,
            c.radio.bandwidth_hz / 1e6,
            c.radio.noise_figure_db
        );
        let _ = writeln!(
            s,
            "  array {}x{}, {} RF chains, element gain {:.0} dBi, P1 = P2 = {:.0} W",
            c.array.n_h, c.array.n_v, c.array.n_rf, c.array.element_gain_dbi, c.p1_w
        );
        let _ = writeln!(
            s,
            "  dust {}: density {:.1e} /m3, layer {:.0} km, extinction {:.3e} dB/km",
            c.dust_label(),
            c.dust.particle_density_per_m3,
            c.dust.layer_height_m / 1e3,
            alpha
        );
        let _ = writeln!(
            s,
            "  thresholds: sensing {:.0} dB, comm {:.1}, outage {:.2}, coverage {:.2}",
            c.thresholds.gamma_sens_db, c.thresholds.gamma_comm, c.thresholds.eps_out, c.thresholds.eta_min
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(parse_config("").unwrap(), ScenarioConfig::default());
        assert_eq!(parse_config("# nothing\n\n").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn presets_and_overrides() {
        let c = parse_config("array.n_rf = 32\npreset = dust_severe  # storm\n").unwrap();
        assert_eq!(c.dust_preset, Some(DustPreset::Severe));
        assert_eq!(c.array.n_rf, 32);
        let c = parse_config("dust.preset = light\nsweep.n_rf = 4, 8").unwrap();
        assert_eq!(c.dust_label(), "light");
        assert_eq!(c.sweep.n_rf, vec![4, 8]);
        let c = parse_config("dust.layer_height_m = 15000").unwrap();
        assert_eq!(c.dust_label(), "custom");
        assert!((c.dust.d_max_m - channel::grazing_chord(15e3, c.orbit.mars_radius_m)).abs() < 1e-9);
        let c = parse_config("ground.range_m = 600000").unwrap();
        assert!((orbit::slant_range(&c.orbit, c.ground.theta_rad).unwrap() - 6e5).abs() < 1e-3);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_config("seed = 1\nbogus.key = 3\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse_config("seed = 1\n\nseed = 2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = parse_config("power.p1_w = lots").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        assert!(parse_config("preset = mystery").is_err());
        assert!(parse_config("just words").is_err());
    }

    #[test]
    fn rendering_is_canonical() {
        let a = parse_config("seed = 5\narray.n_rf = 8").unwrap();
        let b = parse_config("array.n_rf = 8 # same\nseed = 5").unwrap();
        assert_eq!(render_config(&a), render_config(&b));
        assert_ne!(render_config(&a), render_config(&ScenarioConfig::default()));
        for name in PRESETS {
            preset(name).unwrap().validate().unwrap();
        }
    }
}
