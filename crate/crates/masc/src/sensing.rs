//! Echo-coverage maximization with a hybrid (phase-shifter + digital) precoder.
//!
//! The design alternates a digital step, which climbs a smooth logistic
//! surrogate of the coverage ratio, with an analog step that re-points the
//! least useful RF chain toward a high-priority uncovered cell. Updates that
//! lower the coverage are rejected, so the accepted sequence never decreases.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{self, ArrayConfig};
use crate::linalg::{self, CMatrix};
use crate::orbit::{self, VisibleRegion};
use crate::scenario::ScenarioConfig;
use crate::{Error, Result};

const CHUNK: usize = 256;
const SLOPE: f64 = 4.0;
const STEP: f64 = 0.05;
const DIGITAL_ITERS: usize = 150;
const CANDIDATE_ITERS: usize = 80;
const CANDIDATES: usize = 3;
const SEPARATION: f64 = 0.25;

/// Echo SNR per unit beamforming gain for a target at central angle `theta`.
///
/// The two-way spreading term is (4πd/λ)⁴, the antenna term counts the
/// element gain on transmit and receive, and extinction is applied once per
/// direction of travel.
pub fn snr_budget(scene: &ScenarioConfig, theta: f64) -> f64 {
    let orbit = &scene.orbit;
    let lambda = scene.radio.wavelength();
    let d = orbit::slant_range_unchecked(orbit, theta);
    let zenith = orbit::ground_zenith(orbit, theta);
    let alpha = channel::dust_alpha(&scene.dust, lambda);
    let g_dust = (-channel::db_per_km_to_np_per_m(alpha) * scene.dust.path_length(zenith)).exp();
    let spreading = (4.0 * PI * d / lambda).powi(4);
    let g_ant = scene.array.element_gain().powi(2);
    let noise = channel::noise_power(scene.radio.bandwidth_hz, scene.radio.noise_temperature());
    let other = crate::db_to_linear(scene.radio.extra_loss_db);
    scene.p1_w * g_ant * scene.ground.rcs_m2 * g_dust * g_dust / (spreading * other * noise)
}

/// Beamforming gain |aᴴW|² summed over the columns of `w`.
pub fn beamforming_gain(a: &linalg::CVector, w: &CMatrix) -> f64 {
    (0..w.ncols())
        .map(|m| a.iter().zip(w.column(m).iter()).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm_sqr())
        .sum()
}

/// Echo SNR toward (theta, phi) for the full precoder `w`.
pub fn sensing_snr(scene: &ScenarioConfig, theta: f64, phi: f64, w: &CMatrix) -> Result<f64> {
    orbit::slant_range(&scene.orbit, theta)?;
    let psi = orbit::look_angle(&scene.orbit, theta);
    let a = scene.array.steering_angles(psi, phi, scene.radio.wavelength());
    Ok(snr_budget(scene, theta) * beamforming_gain(&a, w))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridPrecoder {
    pub analog: CMatrix,
    pub digital: CMatrix,
    pub power_budget_w: f64,
}

impl HybridPrecoder {
    pub fn combined(&self) -> CMatrix {
        &self.analog * &self.digital
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageMap {
    pub grid: VisibleRegion,
    pub snr_linear: Vec<f64>,
    pub covered: Vec<bool>,
    pub eta_cov: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub eta_cov: f64,
    pub surrogate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport {
    pub precoder: HybridPrecoder,
    pub map: CoverageMap,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
    /// Set when a digital step needed a regularized solve.
    pub regularized: bool,
}

/// Precomputed steering rows and link budgets over the visible grid.
#[derive(Debug, Clone)]
pub struct SensingProblem {
    pub region: VisibleRegion,
    pub array: ArrayConfig,
    pub lambda: f64,
    pub p1: f64,
    pub gamma: f64,
    n_t: usize,
    weights: Vec<f64>,
    ux: Vec<f64>,
    uy: Vec<f64>,
    /// conj(a_i) row-major, so that a_iᴴw is a plain dot product.
    steer_conj: Vec<Complex64>,
    snr_factor: Vec<f64>,
}

impl SensingProblem {
    pub fn new(scene: &ScenarioConfig) -> Result<Self> {
        let region = orbit::visible_region(&scene.orbit, scene.grid.n_theta, scene.grid.n_phi)?;
        let looks: Vec<f64> = region.grid.iter().map(|c| orbit::look_angle(&scene.orbit, c.theta_rad)).collect();
        let factors = region.grid.iter().map(|c| snr_budget(scene, c.theta_rad)).collect();
        Ok(Self::from_parts(
            scene.array,
            scene.radio.wavelength(),
            region,
            &looks,
            factors,
            scene.p1_w,
            scene.thresholds.gamma_sens(),
        ))
    }

    /// Build from explicit per-cell look angles and SNR factors.
    pub fn from_parts(
        array: ArrayConfig,
        lambda: f64,
        region: VisibleRegion,
        look_angles: &[f64],
        snr_factor: Vec<f64>,
        p1: f64,
        gamma: f64,
    ) -> Self {
        let total = region.total_weight();
        let weights = region.grid.iter().map(|c| c.weight_sr / total).collect();
        let n_t = array.n_elements();
        let mut ux = Vec::with_capacity(region.len());
        let mut uy = Vec::with_capacity(region.len());
        let mut steer_conj = Vec::with_capacity(region.len() * n_t);
        for (c, &psi) in region.grid.iter().zip(look_angles) {
            let s = psi.sin();
            let (x, y) = (s * c.phi_rad.cos(), s * c.phi_rad.sin());
            ux.push(x);
            uy.push(y);
            steer_conj.extend(array.steering(x, y, lambda).iter().map(|z| z.conj()));
        }
        Self {
            region,
            array,
            lambda,
            p1,
            gamma,
            n_t,
            weights,
            ux,
            uy,
            steer_conj,
            snr_factor,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.weights.len()
    }

    pub fn n_elements(&self) -> usize {
        self.n_t
    }

    pub fn snr_factor(&self) -> &[f64] {
        &self.snr_factor
    }

    pub fn steering(&self, cell: usize) -> linalg::CVector {
        let row = &self.steer_conj[cell * self.n_t..(cell + 1) * self.n_t];
        linalg::CVector::from_iterator(self.n_t, row.iter().map(|z| z.conj()))
    }

    /// Rows a_iᴴ·M for every cell, row-major (cells × M.ncols()).
    fn project(&self, m: &CMatrix) -> Vec<Complex64> {
        let k = m.ncols();
        let n_t = self.n_t;
        let cols: Vec<&[Complex64]> = (0..k).map(|j| &m.as_slice()[j * n_t..(j + 1) * n_t]).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_cells() * k];
        out.par_chunks_mut(CHUNK * k).enumerate().for_each(|(ci, block)| {
            for (local, dst) in block.chunks_mut(k).enumerate() {
                let i = ci * CHUNK + local;
                let row = &self.steer_conj[i * n_t..(i + 1) * n_t];
                for (j, col) in cols.iter().enumerate() {
                    dst[j] = dot(row, col);
                }
            }
        });
        out
    }

    /// Per-cell beamforming gain of the full precoder.
    pub fn beam_gains(&self, w: &CMatrix) -> Vec<f64> {
        let k = w.ncols();
        self.project(w).chunks(k).map(|r| r.iter().map(|z| z.norm_sqr()).sum()).collect()
    }

    pub fn snr_map(&self, w: &CMatrix) -> Vec<f64> {
        self.beam_gains(w).iter().zip(&self.snr_factor).map(|(g, c)| g * c).collect()
    }

    pub fn coverage_of_snr(&self, snr: &[f64]) -> f64 {
        snr.iter()
            .zip(&self.weights)
            .filter(|(s, _)| **s >= self.gamma)
            .map(|(_, w)| w)
            .sum::<f64>()
            .min(1.0)
    }

    pub fn coverage(&self, w: &CMatrix) -> f64 {
        self.coverage_of_snr(&self.snr_map(w))
    }

    pub fn evaluate(&self, w: &CMatrix) -> CoverageMap {
        let snr = self.snr_map(w);
        CoverageMap {
            grid: self.region.clone(),
            covered: snr.iter().map(|&s| s >= self.gamma).collect(),
            eta_cov: self.coverage_of_snr(&snr),
            snr_linear: snr,
        }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re - x.im * y.im;
        im += x.re * y.im + x.im * y.re;
    }
    Complex64::new(re, im)
}

pub fn evaluate_coverage(problem: &SensingProblem, precoder: &CMatrix) -> CoverageMap {
    problem.evaluate(precoder)
}

/// Phase-only projection; zero entries map to 1 and entries already at unit
/// modulus (to rounding) are returned unchanged, so the map is idempotent.
pub fn project_constant_modulus(target: &CMatrix) -> CMatrix {
    target.map(|z| {
        let r = z.norm();
        if (r - 1.0).abs() <= 4.0 * f64::EPSILON {
            z
        } else if r > 0.0 {
            z / r
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

/// Picks the `n_rf` columns of the 2-D DFT codebook that would cover the
/// largest share of the visible grid. Returns the matrix and the column ids.
pub fn dft_codebook_init(problem: &SensingProblem, n_rf: usize) -> Result<(CMatrix, Vec<usize>)> {
    let arr = &problem.array;
    let n_t = arr.n_elements();
    if n_rf == 0 || n_rf > n_t {
        return Err(Error::Precondition(format!("n_rf = {n_rf} must lie in [1, {n_t}]")));
    }
    let book = linalg::kron(&linalg::dft_matrix(arr.n_h), &linalg::dft_matrix(arr.n_v));
    let proj = problem.project(&book);
    let mut score = vec![0.0; n_t];
    for i in 0..problem.n_cells() {
        // full budget behind every element, saturating once the cell closes
        let scale = problem.p1 * problem.snr_factor[i] / problem.gamma;
        for (k, s) in score.iter_mut().enumerate() {
            *s += problem.weights[i] * (proj[i * n_t + k].norm_sqr() * scale).min(1.0);
        }
    }
    let mut order: Vec<usize> = (0..n_t).collect();
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    order.truncate(n_rf);
    let m = CMatrix::from_fn(n_t, n_rf, |r, c| book[(r, order[c])]);
    Ok((m, order))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DigitalResult {
    /// Scaled so that ‖analog·digital‖²_F equals the budget.
    pub digital: CMatrix,
    pub surrogate: f64,
    pub regularized: bool,
}

struct Surrogate<'a> {
    problem: &'a SensingProblem,
    /// a_iᴴ·W_RF, row-major (cells × n_rf).
    proj: Vec<Complex64>,
    gram: CMatrix,
    /// ln(γ / (c_i P₁)); infinite where the budget is zero.
    offset: Vec<f64>,
    n_rf: usize,
}

impl<'a> Surrogate<'a> {
    fn new(problem: &'a SensingProblem, analog: &CMatrix) -> Self {
        let offset = problem
            .snr_factor
            .iter()
            .map(|&c| if c > 0.0 { (problem.gamma / (c * problem.p1)).ln() } else { f64::INFINITY })
            .collect();
        Self {
            problem,
            proj: problem.project(analog),
            gram: analog.adjoint() * analog,
            offset,
            n_rf: analog.ncols(),
        }
    }

    fn power(&self, x: &CMatrix) -> f64 {
        linalg::real_trace(&(x.adjoint() * &self.gram * x))
    }

    /// Surrogate value and its ascent direction with respect to conj(X).
    fn value_and_gradient(&self, x: &CMatrix) -> (f64, CMatrix) {
        let n_rf = self.n_rf;
        let m = x.ncols();
        let q = self.power(x);
        let ln_q = q.ln();
        let n = self.problem.n_cells();
        let parts: Vec<(f64, f64, Vec<Complex64>)> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|ci| {
                let mut f = 0.0;
                let mut ds_sum = 0.0;
                let mut g = vec![Complex64::new(0.0, 0.0); n_rf * m];
                let mut y = vec![Complex64::new(0.0, 0.0); m];
                for i in ci * CHUNK..((ci + 1) * CHUNK).min(n) {
                    if !self.offset[i].is_finite() {
                        continue;
                    }
                    let row = &self.proj[i * n_rf..(i + 1) * n_rf];
                    let mut u = 0.0;
                    for (col, yc) in y.iter_mut().enumerate() {
                        *yc = dot(row, &x.as_slice()[col * n_rf..(col + 1) * n_rf]);
                        u += yc.norm_sqr();
                    }
                    if u <= 1e-300 {
                        continue;
                    }
                    let z = SLOPE * (u.ln() - ln_q - self.offset[i]);
                    let s = 1.0 / (1.0 + (-z).exp());
                    let w = self.problem.weights[i];
                    f += w * s;
                    let ds = w * SLOPE * s * (1.0 - s);
                    ds_sum += ds;
                    let coef = ds / u;
                    for (col, yc) in y.iter().enumerate() {
                        let yc = yc * coef;
                        for (r, a) in row.iter().enumerate() {
                            g[col * n_rf + r] += a.conj() * yc;
                        }
                    }
                }
                (f, ds_sum, g)
            })
            .collect();
        let mut f = 0.0;
        let mut ds = 0.0;
        let mut grad = CMatrix::zeros(n_rf, m);
        for (pf, pd, pg) in parts {
            f += pf;
            ds += pd;
            for (dst, src) in grad.as_mut_slice().iter_mut().zip(&pg) {
                *dst += src;
            }
        }
        grad -= &self.gram * x * Complex64::new(ds / q, 0.0);
        (f, grad)
    }

    /// Weighted sum-SNR beam through the analog subspace (generalized Rayleigh quotient).
    fn rayleigh_candidate(&self, m: usize) -> (CMatrix, bool) {
        let n_rf = self.n_rf;
        let mut b = CMatrix::zeros(n_rf, n_rf);
        for i in 0..self.problem.n_cells() {
            if !self.offset[i].is_finite() {
                continue;
            }
            let w = self.problem.weights[i] * self.problem.snr_factor[i];
            let row = &self.proj[i * n_rf..(i + 1) * n_rf];
            for c in 0..n_rf {
                let rc = row[c] * w;
                for r in 0..n_rf {
                    b[(r, c)] += row[r].conj() * rc;
                }
            }
        }
        let (vals, vecs) = linalg::hermitian_eigen(&self.gram);
        let top = vals[0].max(f64::MIN_POSITIVE);
        let floor = 1e-10 * top;
        let regularized = vals.iter().any(|&v| v < floor);
        let inv_sqrt: Vec<f64> = vals.iter().map(|&v| 1.0 / v.max(floor).sqrt()).collect();
        let whiten = linalg::from_eigen(&inv_sqrt, &vecs);
        let c = &whiten * b * &whiten;
        let (_, ev) = linalg::hermitian_eigen(&c);
        let x = &whiten * ev.column(0);
        let mut out = CMatrix::zeros(n_rf, m);
        out.set_column(0, &x);
        (out, regularized)
    }

    fn rescale(&self, x: &CMatrix) -> CMatrix {
        x * Complex64::new((self.problem.p1 / self.power(x)).sqrt(), 0.0)
    }
}

/// Digital step for a fixed analog matrix, started from `init`.
pub fn optimize_digital(problem: &SensingProblem, analog: &CMatrix, init: &CMatrix, iters: usize) -> DigitalResult {
    let sur = Surrogate::new(problem, analog);
    let mut x = sur.rescale(init);
    let (mut best_f, mut grad) = sur.value_and_gradient(&x);
    let mut best = x.clone();
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
    let mut m1 = CMatrix::zeros(x.nrows(), x.ncols());
    let mut m2 = DMatrix::<f64>::zeros(x.nrows(), x.ncols());
    for t in 1..=iters {
        m1 = m1 * Complex64::new(b1, 0.0) + &grad * Complex64::new(1.0 - b1, 0.0);
        m2.zip_apply(&grad, |v, g| *v = b2 * *v + (1.0 - b2) * g.norm_sqr());
        let c1 = 1.0 - b1.powi(t as i32);
        let c2 = 1.0 - b2.powi(t as i32);
        for ((xv, mv), vv) in x.iter_mut().zip(m1.iter()).zip(m2.iter()) {
            *xv += mv / c1 * (STEP / ((vv / c2).sqrt() + eps));
        }
        let (f, g) = sur.value_and_gradient(&x);
        if f > best_f {
            best_f = f;
            best = x.clone();
        }
        grad = g;
    }
    let (cand, regularized) = sur.rayleigh_candidate(x.ncols());
    let (cand_f, _) = sur.value_and_gradient(&cand);
    if cand_f > best_f {
        best_f = cand_f;
        best = cand;
    }
    DigitalResult {
        digital: sur.rescale(&best),
        surrogate: best_f,
        regularized,
    }
}

/// Up to `count` uncovered cells ranked by weighted SNR margin, kept apart in direction-cosine space.
fn priority_cells(problem: &SensingProblem, snr: &[f64], count: usize) -> Vec<usize> {
    let mut ranked: Vec<(usize, f64)> = snr
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < problem.gamma && s > 0.0)
        .map(|(i, &s)| (i, problem.weights[i] * s / problem.gamma))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut chosen: Vec<usize> = Vec::with_capacity(count);
    for (i, _) in ranked {
        let apart = chosen.iter().all(|&j| {
            (problem.ux[i] - problem.ux[j]).hypot(problem.uy[i] - problem.uy[j]) > SEPARATION
        });
        if apart {
            chosen.push(i);
            if chosen.len() == count {
                break;
            }
        }
    }
    chosen
}

/// RF chain whose removal costs the least coverage.
fn weakest_chain(problem: &SensingProblem, analog: &CMatrix, digital: &CMatrix) -> usize {
    let n_rf = analog.ncols();
    let m = digital.ncols();
    let proj = problem.project(analog);
    let gram = analog.adjoint() * analog;
    let y: Vec<Complex64> = proj
        .chunks(n_rf)
        .flat_map(|row| (0..m).map(move |c| dot(row, &digital.as_slice()[c * n_rf..(c + 1) * n_rf])))
        .collect();
    let mut best = (0usize, f64::INFINITY);
    for j in 0..n_rf {
        let mut x = digital.clone();
        x.row_mut(j).fill(Complex64::new(0.0, 0.0));
        let power = linalg::real_trace(&(x.adjoint() * &gram * &x));
        if power <= 0.0 {
            continue;
        }
        let scale = problem.p1 / power;
        let snr: Vec<f64> = (0..problem.n_cells())
            .map(|i| {
                let a = proj[i * n_rf + j];
                let g: f64 = (0..m).map(|c| (y[i * m + c] - a * digital[(j, c)]).norm_sqr()).sum();
                g * scale * problem.snr_factor[i]
            })
            .collect();
        let loss = -problem.coverage_of_snr(&snr);
        if loss < best.1 {
            best = (j, loss);
        }
    }
    best.0
}

/// Alternating hybrid design. Stops when an accepted step gains less than
/// `delta` or no candidate improves the coverage; `converged` is false when
/// `max_iter` runs out first.
pub fn hybrid_precoding_design(
    problem: &SensingProblem,
    n_rf: usize,
    streams: usize,
    max_iter: usize,
    delta: f64,
) -> Result<DesignReport> {
    if !(delta > 0.0) {
        return Err(Error::Precondition("delta must be positive".into()));
    }
    if streams == 0 || streams > problem.n_elements() {
        return Err(Error::Precondition(format!("streams = {streams} out of range")));
    }
    let (mut analog, _) = dft_codebook_init(problem, n_rf)?;
    let init = CMatrix::from_fn(n_rf, streams, |r, c| if r == c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
    let first = optimize_digital(problem, &analog, &init, DIGITAL_ITERS);
    let mut regularized = first.regularized;
    let mut digital = first.digital;
    let mut eta = problem.coverage(&(&analog * &digital));
    let mut history = vec![IterationRecord {
        iteration: 0,
        eta_cov: eta,
        surrogate: first.surrogate,
    }];
    let mut converged = false;
    for k in 1..=max_iter {
        let snr = problem.snr_map(&(&analog * &digital));
        let cells = priority_cells(problem, &snr, CANDIDATES);
        let j = weakest_chain(problem, &analog, &digital);
        let mut best: Option<(f64, CMatrix, DigitalResult)> = None;
        for c in cells {
            let mut target = analog.clone();
            target.set_column(j, &problem.steering(c));
            let candidate = project_constant_modulus(&target);
            let res = optimize_digital(problem, &candidate, &digital, CANDIDATE_ITERS);
            let e = problem.coverage(&(&candidate * &res.digital));
            if best.as_ref().is_none_or(|b| e > b.0) {
                best = Some((e, candidate, res));
            }
        }
        let Some((e, cand, res)) = best else {
            converged = true;
            break;
        };
        if e < eta {
            converged = true;
            break;
        }
        let gain = e - eta;
        eta = e;
        analog = cand;
        regularized |= res.regularized;
        digital = res.digital;
        history.push(IterationRecord {
            iteration: k,
            eta_cov: eta,
            surrogate: res.surrogate,
        });
        if gain < delta {
            converged = true;
            break;
        }
    }
    let precoder = HybridPrecoder {
        analog,
        digital,
        power_budget_w: problem.p1,
    };
    let map = problem.evaluate(&precoder.combined());
    Ok(DesignReport {
        precoder,
        map,
        history,
        converged,
        regularized,
    })
}

/// Unconstrained single-beam reference: the dominant eigenvector of the
/// SNR-weighted steering covariance, scaled to the power budget.
pub fn fully_digital_baseline(problem: &SensingProblem) -> (CMatrix, CoverageMap) {
    let n_t = problem.n_elements();
    let mut r = CMatrix::zeros(n_t, n_t);
    for i in 0..problem.n_cells() {
        let w = problem.weights[i] * problem.snr_factor[i];
        if w <= 0.0 {
            continue;
        }
        let row = &problem.steer_conj[i * n_t..(i + 1) * n_t];
        for c in 0..n_t {
            let rc = row[c] * w;
            for k in 0..n_t {
                r[(k, c)] += row[k].conj() * rc;
            }
        }
    }
    let (_, vecs) = linalg::hermitian_eigen(&r);
    let w = CMatrix::from_column_slice(n_t, 1, vecs.column(0).as_slice()) * Complex64::new(problem.p1.sqrt(), 0.0);
    let map = problem.evaluate(&w);
    (w, map)
}
