//! Figure runs: each id maps to a sweep whose rows land in CSV files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::allocator::{self, ParetoSweep};
use crate::bounds::{self, FimSpec};
use crate::channel::{self, DustPreset};
use crate::config;
use crate::orbit;
use crate::output::{fmt_f64, sha256_hex, Manifest, Table};
use crate::robust::{Arm, LinkContext, LinkStats};
use crate::scenario::ScenarioConfig;
use crate::sensing::{self, SensingProblem};
use crate::sweep::{derive_seed, sweep_parallel, PointResult};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    CoverageVsRf,
    BeamPatterns,
    EstErrorVsSnr,
    CapacityVsUncertainty,
    SinrVsUncertainty,
    ParetoFronts,
    OperatingPoints,
}

impl FigureId {
    pub const ALL: [FigureId; 7] = [
        FigureId::CoverageVsRf,
        FigureId::BeamPatterns,
        FigureId::EstErrorVsSnr,
        FigureId::CapacityVsUncertainty,
        FigureId::SinrVsUncertainty,
        FigureId::ParetoFronts,
        FigureId::OperatingPoints,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::CoverageVsRf => "coverage_vs_rf",
            FigureId::BeamPatterns => "beam_patterns",
            FigureId::EstErrorVsSnr => "est_error_vs_snr",
            FigureId::CapacityVsUncertainty => "capacity_vs_uncertainty",
            FigureId::SinrVsUncertainty => "sinr_vs_uncertainty",
            FigureId::ParetoFronts => "pareto_fronts",
            FigureId::OperatingPoints => "operating_points",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureRun {
    pub files: Vec<PathBuf>,
    /// Rows whose point failed and carry an error status.
    pub flagged_rows: usize,
}

fn status<T>(r: &PointResult<T>) -> String {
    match r {
        Ok(_) => "ok".to_string(),
        Err(e) => format!("error: {e}"),
    }
}

fn streams_for(scene: &ScenarioConfig, n_rf: usize) -> usize {
    if scene.sensing.streams == 0 {
        n_rf
    } else {
        scene.sensing.streams.min(n_rf)
    }
}

fn hybrid_coverage(scene: &ScenarioConfig, problem: &SensingProblem, n_rf: usize) -> Result<sensing::DesignReport> {
    sensing::hybrid_precoding_design(problem, n_rf, streams_for(scene, n_rf), scene.sensing.max_iter, scene.sensing.delta)
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
    flagged: usize,
}

impl Writer<'_> {
    fn emit(&mut self, name: &str, table: &Table) -> Result<()> {
        let path = self.dir.join(name);
        table.write(&path)?;
        self.files.push(path);
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum CoverageTask {
    Digital(DustPreset),
    Hybrid(DustPreset, usize),
}

fn coverage_vs_rf(scene: &ScenarioConfig, workers: usize, out: &mut Writer) -> Result<()> {
    let mut tasks = Vec::new();
    for &d in &scene.sweep.dust {
        tasks.push(CoverageTask::Digital(d));
        tasks.extend(scene.sweep.n_rf.iter().map(|&n| CoverageTask::Hybrid(d, n)));
    }
    let results = sweep_parallel(&tasks, workers, |_, t| {
        let (d, n) = match *t {
            CoverageTask::Digital(d) => (d, None),
            CoverageTask::Hybrid(d, n) => (d, Some(n)),
        };
        let s = scene.with_dust(d);
        let problem = SensingProblem::new(&s)?;
        Ok(match n {
            None => (sensing::fully_digital_baseline(&problem).1.eta_cov, 0, true),
            Some(n) => {
                let r = hybrid_coverage(&s, &problem, n)?;
                (r.map.eta_cov, r.history.len() - 1, r.converged)
            }
        })
    })?;
    for &d in &scene.sweep.dust {
        let mut table = Table::new(&["n_rf", "eta_hybrid", "eta_digital", "iterations", "converged", "status"]);
        let digital = tasks
            .iter()
            .position(|t| matches!(t, CoverageTask::Digital(x) if *x == d))
            .map(|i| &results[i])
            .expect("digital task exists for every preset");
        for (t, r) in tasks.iter().zip(&results) {
            let CoverageTask::Hybrid(x, n) = *t else { continue };
            if x != d {
                continue;
            }
            let merged: PointResult<()> = match (r, digital) {
                (Err(e), _) | (_, Err(e)) => Err(e.clone()),
                _ => Ok(()),
            };
            if merged.is_err() {
                out.flagged += 1;
            }
            let (eta, iters, conv) = r.as_ref().map_or((f64::NAN, 0, false), |v| *v);
            table.push(vec![
                n.to_string(),
                fmt_f64(eta),
                fmt_f64(digital.as_ref().map_or(f64::NAN, |v| v.0)),
                iters.to_string(),
                conv.to_string(),
                status(&merged),
            ]);
        }
        out.emit(&format!("coverage_vs_rf_{}.csv", d.name()), &table)?;
    }
    Ok(())
}

fn beam_patterns(scene: &ScenarioConfig, workers: usize, out: &mut Writer) -> Result<()> {
    let problem = SensingProblem::new(scene)?;
    let jobs = [0u8, 1u8];
    let results = sweep_parallel(&jobs, workers, |_, &j| {
        Ok(if j == 0 {
            let r = hybrid_coverage(scene, &problem, scene.array.n_rf)?;
            problem.evaluate(&r.precoder.combined())
        } else {
            sensing::fully_digital_baseline(&problem).1
        })
    })?;
    let (hy, dg) = match (&results[0], &results[1]) {
        (Ok(h), Ok(d)) => (h, d),
        (Err(e), _) | (_, Err(e)) => return Err(Error::Estimation(e.clone())),
    };
    let mut table = Table::new(&[
        "theta_rad",
        "phi_rad",
        "gain_hybrid_db",
        "gain_digital_db",
        "snr_hybrid_db",
        "covered_hybrid",
        "covered_digital",
    ]);
    for (i, cell) in problem.region.grid.iter().enumerate() {
        let f = problem.snr_factor()[i];
        let g = |snr: f64| crate::linear_to_db(snr / f / problem.p1);
        table.push(vec![
            fmt_f64(cell.theta_rad),
            fmt_f64(cell.phi_rad),
            fmt_f64(g(hy.snr_linear[i])),
            fmt_f64(g(dg.snr_linear[i])),
            fmt_f64(crate::linear_to_db(hy.snr_linear[i])),
            u8::from(hy.covered[i]).to_string(),
            u8::from(dg.covered[i]).to_string(),
        ]);
    }
    out.emit("beam_patterns.csv", &table)
}

/// Estimator statistics at dust-free per-sample SNR `snr_db`; every preset
/// at the same SNR index shares its noise draws.
pub fn estimation_point(scene: &ScenarioConfig, preset: DustPreset, snr_db: f64, seed: u64) -> Result<EstimationRow> {
    let s = scene.with_dust(preset);
    let lambda = s.radio.wavelength();
    let zen = orbit::ground_zenith(&s.orbit, s.ground.theta_rad);
    let ell = s.dust.path_length(zen);
    let alpha = channel::db_per_km_to_np_per_m(channel::dust_alpha(&s.dust, lambda));
    let snr_eff = crate::db_to_linear(snr_db) * (-4.0 * alpha * ell).exp();
    let spec = FimSpec::uniform(snr_eff, s.estimation.n_obs, ell, s.estimation.window_s)?;
    let f_d = channel::sensing_channel(&s, 0.0)?.main_doppler_hz;
    let mc = bounds::mc_estimator_variance(alpha, f_d, &spec, s.estimation.trials, seed)?;
    let to_db = |v: f64| v * channel::np_per_m_to_db_per_km(1.0).powi(2);
    Ok(EstimationRow {
        var_alpha: to_db(mc.var_alpha),
        crlb_alpha: to_db(bounds::crlb_alpha(&spec)),
        var_fd: mc.var_fd,
        crlb_fd: bounds::crlb_doppler(&spec, false),
        rel_err_alpha: mc.rel_err_alpha,
        rmse_fd_hz: mc.rmse_fd_hz,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationRow {
    /// (dB/km)²
    pub var_alpha: f64,
    pub crlb_alpha: f64,
    pub var_fd: f64,
    pub crlb_fd: f64,
    pub rel_err_alpha: f64,
    pub rmse_fd_hz: f64,
}

fn est_error_vs_snr(scene: &ScenarioConfig, workers: usize, out: &mut Writer) -> Result<()> {
    let pts: Vec<(usize, f64, DustPreset)> = scene
        .sweep
        .snr_db
        .iter()
        .enumerate()
        .flat_map(|(k, &snr)| scene.sweep.dust.iter().map(move |&d| (k, snr, d)))
        .collect();
    let results = sweep_parallel(&pts, workers, |_, &(k, snr, d)| {
        estimation_point(scene, d, snr, derive_seed(scene.seed, k as u64))
    })?;
    let mut table = Table::new(&[
        "snr_db",
        "dust_preset",
        "var_alpha_db2_per_km2",
        "crlb_alpha_db2_per_km2",
        "var_fd_hz2",
        "crlb_fd_hz2",
        "rel_err_alpha",
        "rmse_fd_hz",
        "status",
    ]);
    for ((_, snr, d), r) in pts.iter().zip(&results) {
        let v = r.as_ref().ok();
        if v.is_none() {
            out.flagged += 1;
        }
        let g = |f: fn(&EstimationRow) -> f64| fmt_f64(v.map_or(f64::NAN, f));
        table.push(vec![
            fmt_f64(*snr),
            d.name().to_string(),
            g(|r| r.var_alpha),
            g(|r| r.crlb_alpha),
            g(|r| r.var_fd),
            g(|r| r.crlb_fd),
            g(|r| r.rel_err_alpha),
            g(|r| r.rmse_fd_hz),
            status(r),
        ]);
    }
    out.emit("est_error_vs_snr.csv", &table)
}

type LinkRow = ((DustPreset, f64, Arm), PointResult<LinkStats>);

fn link_sweep(scene: &ScenarioConfig, workers: usize) -> Result<Vec<LinkRow>> {
    let pts: Vec<(DustPreset, f64, Arm)> = scene
        .sweep
        .dust
        .iter()
        .flat_map(|&d| {
            scene
                .sweep
                .csi_levels
                .iter()
                .flat_map(move |&u| [Arm::Robust, Arm::NonRobust].map(|a| (d, u, a)))
        })
        .collect();
    let results = sweep_parallel(&pts, workers, |_, &(d, u, arm)| {
        let s = scene.with_dust(d);
        LinkContext::new(&s)?.evaluate(arm, u, s.comm.mc_trials, s.seed)
    })?;
    Ok(pts.into_iter().zip(results).collect())
}

fn capacity_vs_uncertainty(scene: &ScenarioConfig, workers: usize, out: &mut Writer) -> Result<()> {
    let mut table = Table::new(&[
        "dust_preset",
        "csi_level",
        "arm",
        "capacity_bps_hz",
        "worst_capacity_bps_hz",
        "status",
    ]);
    for ((d, u, arm), r) in link_sweep(scene, workers)? {
        if r.is_err() {
            out.flagged += 1;
        }
        let v = r.as_ref().ok();
        table.push(vec![
            d.name().to_string(),
            fmt_f64(u),
            arm.name().to_string(),
            fmt_f64(v.map_or(f64::NAN, |s| s.capacity_bps_hz)),
            fmt_f64(v.map_or(f64::NAN, |s| s.worst_capacity_bps_hz)),
            status(&r),
        ]);
    }
    out.emit("capacity_vs_uncertainty.csv", &table)
}

fn sinr_vs_uncertainty(scene: &ScenarioConfig, workers: usize, out: &mut Writer) -> Result<()> {
    let mut table = Table::new(&["dust_preset", "csi_level", "arm", "mean_sinr_db", "p_out", "status"]);
    for ((d, u, arm), r) in link_sweep(scene, workers)? {
        if r.is_err() {
            out.flagged += 1;
        }
        let v = r.as_ref().ok();
        table.push(vec![
            d.name().to_string(),
            fmt_f64(u),
            arm.name().to_string(),
            fmt_f64(v.map_or(f64::NAN, |s| s.mean_sinr_db)),
            fmt_f64(v.map_or(f64::NAN, |s| s.p_out)),
            status(&r),
        ]);
    }
    out.emit("sinr_vs_uncertainty.csv", &table)
}

#[derive(Clone, Copy)]
enum ParetoTask {
    Coverage(DustPreset),
    Capacity(DustPreset, f64),
}

/// One sweep per (preset, CSI level) pair.
pub type ParetoRow = ((DustPreset, f64), PointResult<ParetoSweep>);

/// Sweeps for every (preset, CSI level) pair, sharing one sensing design per preset.
pub fn pareto_sweeps(
    scene: &ScenarioConfig,
    levels: &[f64],
    workers: usize,
) -> Result<Vec<ParetoRow>> {
    let mut tasks = Vec::new();
    for &d in &scene.sweep.dust {
        tasks.push(ParetoTask::Coverage(d));
        tasks.extend(levels.iter().map(|&u| ParetoTask::Capacity(d, u)));
    }
    let values = sweep_parallel(&tasks, workers, |_, t| match *t {
        ParetoTask::Coverage(d) => allocator::full_frame_coverage(&scene.with_dust(d)),
        ParetoTask::Capacity(d, u) => {
            let s = scene.with_dust(d);
            allocator::worst_case_link_capacity(&s, u, s.comm.mc_trials, s.seed)
        }
    })?;
    let etas = allocator::eta_grid(scene.sweep.eta_low, scene.sweep.eta_high, scene.sweep.eta_step)?;
    let mut out = Vec::new();
    for (i, t) in tasks.iter().enumerate() {
        let ParetoTask::Capacity(d, u) = *t else { continue };
        let cov = tasks
            .iter()
            .position(|x| matches!(x, ParetoTask::Coverage(y) if *y == d))
            .expect("coverage task exists for every preset");
        let res = match (&values[cov], &values[i]) {
            (Ok(eta), Ok(c)) => {
                allocator::sweep_from_constants(*eta, *c, &etas, &scene.frame).map_err(|e| e.to_string())
            }
            (Err(e), _) | (_, Err(e)) => Err(e.clone()),
        };
        out.push(((d, u), res));
    }
    Ok(out)
}

fn level_tag(u: f64) -> String {
    format!("{u:.2}").replace('.', "p")
}

fn pareto_fronts(scene: &ScenarioConfig, workers: usize, out: &mut Writer) -> Result<()> {
    for ((d, u), r) in pareto_sweeps(scene, &scene.sweep.pareto_csi_levels, workers)? {
        let mut table = Table::new(&[
            "eta_min",
            "eta_eff",
            "c_eff_bps_hz",
            "t_sens_s",
            "t_comm_s",
            "feasible",
            "on_front",
            "mode_label",
            "status",
        ]);
        match &r {
            Ok(sweep) => {
                for p in &sweep.points {
                    let on_front = sweep.front.iter().find(|q| q.eta_min_constraint == p.eta_min_constraint);
                    table.push(vec![
                        fmt_f64(p.eta_min_constraint),
                        fmt_f64(p.eta_eff),
                        fmt_f64(p.c_eff_bps_hz),
                        fmt_f64(p.t_sens_s),
                        fmt_f64(p.t_comm_s),
                        p.feasible.to_string(),
                        on_front.is_some().to_string(),
                        on_front.and_then(|q| q.mode).map_or("", |m| m.label()).to_string(),
                        "ok".to_string(),
                    ]);
                }
            }
            Err(e) => {
                out.flagged += 1;
                let nan = fmt_f64(f64::NAN);
                table.push(vec![
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan,
                    "false".into(),
                    "false".into(),
                    String::new(),
                    format!("error: {e}"),
                ]);
            }
        }
        out.emit(&format!("pareto_{}_u{}.csv", d.name(), level_tag(u)), &table)?;
    }
    Ok(())
}

fn operating_points(scene: &ScenarioConfig, workers: usize, out: &mut Writer) -> Result<()> {
    let mut single = scene.clone();
    single.sweep.dust = vec![scene.dust_preset.unwrap_or(DustPreset::Medium)];
    let u = scene.uncertainty.csi_uncertainty_level;
    let mut table = Table::new(&["dust_preset", "csi_level", "mode_label", "eta_min", "eta_eff", "c_eff_bps_hz", "t_sens_s", "t_comm_s"]);
    for ((d, u), r) in pareto_sweeps(&single, &[u], workers)? {
        let sweep = r.map_err(Error::Estimation)?;
        for p in sweep.front.iter().filter(|p| p.mode.is_some()) {
            table.push(vec![
                d.name().to_string(),
                fmt_f64(u),
                p.mode.map_or("", |m| m.label()).to_string(),
                fmt_f64(p.eta_min_constraint),
                fmt_f64(p.eta_eff),
                fmt_f64(p.c_eff_bps_hz),
                fmt_f64(p.t_sens_s),
                fmt_f64(p.t_comm_s),
            ]);
        }
    }
    out.emit("operating_points.csv", &table)
}

/// Runs one figure into `out_dir` and writes its manifest.
pub fn run_figure(scene: &ScenarioConfig, figure: FigureId, out_dir: &Path, workers: usize) -> Result<FigureRun> {
    scene.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let mut w = Writer {
        dir: out_dir,
        files: Vec::new(),
        flagged: 0,
    };
    match figure {
        FigureId::CoverageVsRf => coverage_vs_rf(scene, workers, &mut w)?,
        FigureId::BeamPatterns => beam_patterns(scene, workers, &mut w)?,
        FigureId::EstErrorVsSnr => est_error_vs_snr(scene, workers, &mut w)?,
        FigureId::CapacityVsUncertainty => capacity_vs_uncertainty(scene, workers, &mut w)?,
        FigureId::SinrVsUncertainty => sinr_vs_uncertainty(scene, workers, &mut w)?,
        FigureId::ParetoFronts => pareto_fronts(scene, workers, &mut w)?,
        FigureId::OperatingPoints => operating_points(scene, workers, &mut w)?,
    }
    Manifest {
        figure: figure.name().to_string(),
        seed: scene.seed,
        config_sha256: sha256_hex(&config::render_config(scene)),
        files: w.files.clone(),
        flagged_rows: w.flagged,
    }
    .write(out_dir)?;
    Ok(FigureRun {
        files: w.files,
        flagged_rows: w.flagged,
    })
}
