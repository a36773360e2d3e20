//! Splitting the frame between sensing and downlink along a Pareto front.

use crate::robust::{Arm, LinkContext};
use crate::scenario::ScenarioConfig;
use crate::sensing::{self, SensingProblem};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConfig {
    pub t_frame_s: f64,
    pub t_sens_min_s: f64,
    pub t_comm_max_s: f64,
}

impl FrameConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_sens_min_s > 0.0 && self.t_sens_min_s <= self.t_frame_s) {
            return Err(Error::Invalid(format!(
                "frame needs 0 < t_sens_min ({}) <= t_frame ({})",
                self.t_sens_min_s, self.t_frame_s
            )));
        }
        if !(self.t_comm_max_s > 0.0 && self.t_comm_max_s <= self.t_frame_s) {
            return Err(Error::Invalid(format!(
                "frame needs 0 < t_comm_max ({}) <= t_frame ({})",
                self.t_comm_max_s, self.t_frame_s
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatingMode {
    CommPriority,
    Balanced,
    SensingPriority,
}

impl OperatingMode {
    pub fn label(self) -> &'static str {
        match self {
            OperatingMode::CommPriority => "comm_priority",
            OperatingMode::Balanced => "balanced",
            OperatingMode::SensingPriority => "sensing_priority",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoPoint {
    pub eta_min_constraint: f64,
    pub eta_eff: f64,
    pub c_eff_bps_hz: f64,
    pub t_sens_s: f64,
    pub t_comm_s: f64,
    pub feasible: bool,
    pub mode: Option<OperatingMode>,
}

/// Sensing time needed to reach `eta_min` when a full frame yields `eta_star`.
pub fn min_sensing_time(eta_min: f64, eta_star: f64, frame: &FrameConfig) -> Result<f64> {
    if eta_star <= 0.0 {
        if eta_min > 0.0 {
            return Err(Error::Infeasible(format!("coverage {eta_min} requested but the design reaches none")));
        }
        return Ok(frame.t_sens_min_s);
    }
    Ok((eta_min * frame.t_frame_s / eta_star).clamp(frame.t_sens_min_s, frame.t_frame_s))
}

pub fn effective_throughput(c_wc: f64, t_sens: f64, t_frame: f64) -> f64 {
    (c_wc * (t_frame - t_sens) / t_frame).max(0.0)
}

/// Evenly spaced constraint values from `low` to `high` inclusive.
pub fn eta_grid(low: f64, high: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || low > high {
        return Err(Error::Invalid("eta sweep needs step > 0 and low <= high".into()));
    }
    let n = ((high - low) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|k| low + k as f64 * step).collect())
}

/// One point of the sweep for full-frame coverage `eta_star` and worst-case capacity `c_wc`.
pub fn sweep_point(eta_min: f64, eta_star: f64, c_wc: f64, frame: &FrameConfig) -> ParetoPoint {
    let t = frame.t_frame_s;
    let (t_sens_req, feasible) = match min_sensing_time(eta_min, eta_star, frame) {
        Ok(ts) => (ts, eta_min <= eta_star),
        Err(_) => (t, false),
    };
    let t_comm = (t - t_sens_req).min(frame.t_comm_max_s).max(0.0);
    ParetoPoint {
        eta_min_constraint: eta_min,
        eta_eff: eta_star * (t - t_comm) / t,
        c_eff_bps_hz: c_wc * t_comm / t,
        t_sens_s: t - t_comm,
        t_comm_s: t_comm,
        feasible,
        mode: None,
    }
}

/// Keeps points no other point matches or beats on both axes; exact duplicates
/// keep their first occurrence. Output is sorted by `eta_eff`.
pub fn prune_dominated(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (p, q) = (&points[a], &points[b]);
        q.eta_eff
            .total_cmp(&p.eta_eff)
            .then(q.c_eff_bps_hz.total_cmp(&p.c_eff_bps_hz))
            .then(a.cmp(&b))
    });
    let mut best_c = f64::NEG_INFINITY;
    let mut kept = Vec::new();
    for i in order {
        let c = points[i].c_eff_bps_hz;
        if c > best_c {
            kept.push(i);
            best_c = c;
        }
    }
    kept.sort_by(|&a, &b| points[a].eta_eff.total_cmp(&points[b].eta_eff).then(a.cmp(&b)));
    kept.into_iter().map(|i| points[i].clone()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OperatingModes {
    pub comm_priority: usize,
    pub balanced: usize,
    pub sensing_priority: usize,
}

/// Extremes of the front plus its knee, the point farthest from the chord
/// between the extremes with both axes scaled to the front's range.
pub fn label_operating_modes(front: &[ParetoPoint]) -> Result<OperatingModes> {
    if front.is_empty() {
        return Err(Error::Precondition("cannot label an empty front".into()));
    }
    let argmax = |key: &dyn Fn(&ParetoPoint) -> f64| {
        (0..front.len()).fold(0, |best, i| if key(&front[i]) > key(&front[best]) { i } else { best })
    };
    let comm = argmax(&|p| p.c_eff_bps_hz);
    let sens = argmax(&|p| p.eta_eff);
    let (a, b) = (&front[comm], &front[sens]);
    let sx = (b.eta_eff - a.eta_eff).abs().max(f64::MIN_POSITIVE);
    let sy = (a.c_eff_bps_hz - b.c_eff_bps_hz).abs().max(f64::MIN_POSITIVE);
    let (ax, ay, bx, by) = (a.eta_eff / sx, a.c_eff_bps_hz / sy, b.eta_eff / sx, b.c_eff_bps_hz / sy);
    let (dx, dy) = (bx - ax, by - ay);
    let len = dx.hypot(dy);
    let (mx, my) = ((ax + bx) / 2.0, (ay + by) / 2.0);
    let score = |p: &ParetoPoint| {
        let (x, y) = (p.eta_eff / sx, p.c_eff_bps_hz / sy);
        let dist = if len > 0.0 { ((x - ax) * dy - (y - ay) * dx).abs() / len } else { 0.0 };
        (dist, -(x - mx).hypot(y - my))
    };
    let mut knee = 0;
    for i in 1..front.len() {
        let (s, k) = (score(&front[i]), score(&front[knee]));
        if s.0 > k.0 + 1e-12 || ((s.0 - k.0).abs() <= 1e-12 && s.1 > k.1) {
            knee = i;
        }
    }
    Ok(OperatingModes {
        comm_priority: comm,
        balanced: knee,
        sensing_priority: sens,
    })
}

fn apply_modes(front: &mut [ParetoPoint]) -> Result<()> {
    let modes = label_operating_modes(front)?;
    front[modes.balanced].mode = Some(OperatingMode::Balanced);
    front[modes.comm_priority].mode = Some(OperatingMode::CommPriority);
    front[modes.sensing_priority].mode = Some(OperatingMode::SensingPriority);
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoSweep {
    /// Every constraint value in sweep order, infeasible ones flagged.
    pub points: Vec<ParetoPoint>,
    /// Feasible, non-dominated points sorted by coverage, with mode labels.
    pub front: Vec<ParetoPoint>,
    pub eta_star: f64,
    pub c_wc: f64,
}

/// Builds the sweep from the two per-scene quantities.
pub fn sweep_from_constants(eta_star: f64, c_wc: f64, etas: &[f64], frame: &FrameConfig) -> Result<ParetoSweep> {
    frame.validate()?;
    let points: Vec<ParetoPoint> = etas.iter().map(|&e| sweep_point(e, eta_star, c_wc, frame)).collect();
    let feasible: Vec<ParetoPoint> = points.iter().filter(|p| p.feasible).cloned().collect();
    let mut front = prune_dominated(&feasible);
    if !front.is_empty() {
        apply_modes(&mut front)?;
    }
    Ok(ParetoSweep {
        points,
        front,
        eta_star,
        c_wc,
    })
}

/// Full-frame coverage of the hybrid design for the scene's RF chain count.
pub fn full_frame_coverage(scene: &ScenarioConfig) -> Result<f64> {
    let problem = SensingProblem::new(scene)?;
    let report = sensing::hybrid_precoding_design(
        &problem,
        scene.array.n_rf,
        scene.streams(),
        scene.sensing.max_iter,
        scene.sensing.delta,
    )?;
    Ok(report.map.eta_cov)
}

/// Mean robust-arm capacity with the channel held at the worst-case extinction.
pub fn worst_case_link_capacity(scene: &ScenarioConfig, u: f64, n_mc: usize, seed: u64) -> Result<f64> {
    Ok(LinkContext::new(scene)?.evaluate(Arm::Robust, u, n_mc, seed)?.worst_capacity_bps_hz)
}

/// Sweeps the coverage constraint over `eta_range` = (low, high, step). The
/// sensing design and the link capacity are solved once and shared by every point.
pub fn epsilon_constraint_sweep(
    scene: &ScenarioConfig,
    eta_range: (f64, f64, f64),
    frame: &FrameConfig,
    u: f64,
) -> Result<ParetoSweep> {
    let etas = eta_grid(eta_range.0, eta_range.1, eta_range.2)?;
    let eta_star = full_frame_coverage(scene)?;
    let c_wc = worst_case_link_capacity(scene, u, scene.comm.mc_trials, scene.seed)?;
    sweep_from_constants(eta_star, c_wc, &etas, frame)
}
