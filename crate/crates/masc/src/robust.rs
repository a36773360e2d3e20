//! Downlink precoding against an extinction interval and noisy channel knowledge.
//!
//! The robust arm denoises the estimated channel with orthogonal matching
//! pursuit over a steering dictionary, optimizes the transmit covariance by
//! ADMM inside the recovered subspace and composes the four-factor precoder.
//! The baseline transmits matched to the raw estimate.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{self, ArrayConfig};
use crate::linalg::{self, CMatrix, CVector};
use crate::mapping::{self, DopplerMapping, EchoObservation, EnvironmentEstimate};
use crate::orbit;
use crate::scenario::ScenarioConfig;
use crate::sweep::derive_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintySet {
    pub alpha_min: f64,
    pub alpha_max: f64,
}

impl UncertaintySet {
    pub fn new(alpha_min: f64, alpha_max: f64) -> Result<Self> {
        let s = Self { alpha_min, alpha_max };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.alpha_min && self.alpha_min <= self.alpha_max) {
            return Err(Error::Invalid(format!(
                "uncertainty set needs 0 <= min <= max, got [{}, {}]",
                self.alpha_min, self.alpha_max
            )));
        }
        Ok(())
    }
}

/// log₂det(I + (P₂/σ²)·H·W·Wᴴ·Hᴴ) for a K×N_t channel and unit-scale precoder.
pub fn capacity(w: &CMatrix, h: &CMatrix, p2: f64, sigma_n2: f64) -> f64 {
    let hw = h * w;
    let gram = &hw * hw.adjoint() * Complex64::new(p2 / sigma_n2, 0.0);
    linalg::log2_det_identity_plus(&gram)
}

/// Capacity at the worst member of the interval, which is its upper end.
pub fn worst_case_capacity<F>(w: &CMatrix, family: F, set: &UncertaintySet, p2: f64, sigma_n2: f64) -> f64
where
    F: Fn(f64) -> CMatrix,
{
    capacity(w, &family(set.alpha_max), p2, sigma_n2)
}

/// Minimum capacity over `points` evenly spaced members of the interval.
pub fn worst_case_capacity_grid<F>(
    w: &CMatrix,
    family: F,
    set: &UncertaintySet,
    p2: f64,
    sigma_n2: f64,
    points: usize,
) -> f64
where
    F: Fn(f64) -> CMatrix,
{
    let points = points.max(2);
    (0..points)
        .map(|k| {
            let a = if k + 1 == points {
                set.alpha_max
            } else {
                set.alpha_min + (set.alpha_max - set.alpha_min) * k as f64 / (points - 1) as f64
            };
            capacity(w, &family(a), p2, sigma_n2)
        })
        .fold(f64::INFINITY, f64::min)
}

// ---------------------------------------------------------------- sparsification

#[derive(Debug, Clone, PartialEq)]
pub struct SparseChannel {
    pub support: Vec<usize>,
    pub coefficients: Vec<Complex64>,
    pub residual_energy: f64,
    pub sparsity_l: usize,
    /// Residual energy before the first pick and after each one.
    pub residual_history: Vec<f64>,
    /// Orthonormal basis of the selected atoms' span.
    pub basis: CMatrix,
}

impl SparseChannel {
    pub fn reconstruct(&self, dictionary: &CMatrix) -> CVector {
        let mut h = CVector::zeros(dictionary.nrows());
        for (&k, &c) in self.support.iter().zip(&self.coefficients) {
            h.axpy(c, &dictionary.column(k), Complex64::new(1.0, 0.0));
        }
        h
    }
}

/// Unit-norm steering vectors on a grid of direction cosines, `oversample`
/// times finer than the array's natural resolution, covering a disk of radius
/// `u_max` plus one grid step.
pub fn steering_dictionary(array: &ArrayConfig, lambda: f64, u_max: f64, oversample: usize) -> CMatrix {
    let du_x = lambda / (oversample as f64 * array.n_h as f64 * array.spacing_h_m);
    let du_y = lambda / (oversample as f64 * array.n_v as f64 * array.spacing_v_m);
    let reach = u_max + du_x.max(du_y);
    let kx = (reach / du_x).floor() as i64;
    let ky = (reach / du_y).floor() as i64;
    let norm = Complex64::new(1.0 / (array.n_elements() as f64).sqrt(), 0.0);
    let mut cols = Vec::new();
    for i in -kx..=kx {
        for j in -ky..=ky {
            let (ux, uy) = (i as f64 * du_x, j as f64 * du_y);
            if ux.hypot(uy) <= reach {
                cols.push(array.steering(ux, uy, lambda) * norm);
            }
        }
    }
    CMatrix::from_columns(&cols)
}

/// Greedy sparse fit of `h` over the unit-norm columns of `dictionary`.
/// Stops at `l` atoms, once the residual energy falls below `tol`, or when no
/// remaining atom adds a new direction.
pub fn omp_sparsify(h: &CVector, dictionary: &CMatrix, l: usize, tol: f64) -> Result<SparseChannel> {
    if l == 0 {
        return Err(Error::Precondition("sparsity level must be at least 1".into()));
    }
    if dictionary.ncols() == 0 || dictionary.nrows() != h.len() {
        return Err(Error::Precondition("dictionary is empty or has the wrong row count".into()));
    }
    let n = h.len();
    let mut q: Vec<CVector> = Vec::new();
    // upper-triangular factor of the selected atoms, column by column
    let mut r_cols: Vec<Vec<Complex64>> = Vec::new();
    let mut support = Vec::new();
    let mut residual = h.clone();
    let mut energy = residual.norm_squared();
    let mut history = vec![energy];
    while support.len() < l.min(n) && energy > tol {
        let corr = dictionary.ad_mul(&residual);
        let best = (0..corr.len())
            .filter(|k| !support.contains(k))
            .max_by(|&a, &b| corr[a].norm().total_cmp(&corr[b].norm()).then(b.cmp(&a)));
        let Some(k) = best else { break };
        let atom = dictionary.column(k).into_owned();
        let mut v = atom.clone();
        let mut coeffs = Vec::with_capacity(q.len() + 1);
        for qi in &q {
            coeffs.push(qi.dotc(&v));
        }
        for (qi, c) in q.iter().zip(&coeffs) {
            v.axpy(-*c, qi, Complex64::new(1.0, 0.0));
        }
        // second pass keeps the basis orthonormal to working precision
        for (j, qi) in q.iter().enumerate() {
            let c = qi.dotc(&v);
            coeffs[j] += c;
            v.axpy(-c, qi, Complex64::new(1.0, 0.0));
        }
        let vn = v.norm();
        if vn < 1e-10 {
            break;
        }
        let qn = v / Complex64::new(vn, 0.0);
        coeffs.push(Complex64::new(vn, 0.0));
        let proj = qn.dotc(&residual);
        let next = &residual - &qn * proj;
        let next_energy = next.norm_squared();
        if next_energy >= energy {
            break;
        }
        q.push(qn);
        r_cols.push(coeffs);
        support.push(k);
        residual = next;
        energy = next_energy;
        history.push(energy);
    }
    // back-substitution R·c = Qᴴh
    let s = support.len();
    let qh: Vec<Complex64> = q.iter().map(|qi| qi.dotc(h)).collect();
    let mut coefficients = vec![Complex64::new(0.0, 0.0); s];
    for i in (0..s).rev() {
        let mut acc = qh[i];
        for j in i + 1..s {
            acc -= r_cols[j][i] * coefficients[j];
        }
        coefficients[i] = acc / r_cols[i][i];
    }
    let basis = if q.is_empty() { CMatrix::zeros(n, 0) } else { CMatrix::from_columns(&q) };
    Ok(SparseChannel {
        support,
        coefficients,
        residual_energy: energy,
        sparsity_l: l,
        residual_history: history,
        basis,
    })
}

// ---------------------------------------------------------------- covariance design

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceIterate {
    pub r: CMatrix,
    pub z: CMatrix,
    pub lambda: CMatrix,
    pub rho: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmDiagnostics {
    pub iteration: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Capacity of the feasible iterate, bps/Hz.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmResult {
    /// Optimized transmit covariance, trace at most P₂.
    pub covariance: CMatrix,
    pub converged: bool,
    pub iterations: usize,
    pub history: Vec<AdmmDiagnostics>,
    /// Final iterate in units of P₂.
    pub last: CovarianceIterate,
}

/// Projection onto {X ⪰ 0, tr X ≤ budget}.
pub fn project_psd_trace(x: &CMatrix, budget: f64) -> CMatrix {
    let (vals, vecs) = linalg::hermitian_eigen(x);
    let clipped: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= budget {
        return linalg::from_eigen(&clipped, &vecs);
    }
    // water level μ with Σ max(λ − μ, 0) = budget; vals are sorted descending
    let mut mu = 0.0;
    let mut acc = 0.0;
    for (k, &v) in vals.iter().enumerate() {
        acc += v;
        let cand = (acc - budget) / (k + 1) as f64;
        if k + 1 == vals.len() || vals[k + 1] <= cand {
            mu = cand;
            break;
        }
    }
    let shifted: Vec<f64> = vals.iter().map(|v| (v - mu).max(0.0)).collect();
    linalg::from_eigen(&shifted, &vecs)
}

fn hermitian_fn(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = linalg::hermitian_eigen(m);
    let mapped: Vec<f64> = vals.into_iter().map(f).collect();
    linalg::from_eigen(&mapped, &vecs)
}

/// Maximizes log det(I + H·R·Hᴴ/σ²) over {R ⪰ 0, tr R ≤ P₂} by scaled ADMM.
/// Iterates are kept in units of P₂ and the stopping threshold applies there.
pub fn admm_capacity_covariance(
    h: &CMatrix,
    p2: f64,
    sigma_n2: f64,
    rho: f64,
    max_iter: usize,
    eps_abs: f64,
) -> Result<AdmmResult> {
    if !(rho > 0.0) || !(p2 > 0.0) || !(sigma_n2 > 0.0) {
        return Err(Error::Precondition("ADMM needs rho, P2 and noise power > 0".into()));
    }
    let n = h.ncols();
    let k = h.nrows();
    let hn = h * Complex64::new((p2 / sigma_n2).sqrt(), 0.0);
    let g = &hn * hn.adjoint();
    let g_scale = linalg::real_trace(&g);
    let eye_k = CMatrix::identity(k, k);
    let (g_half_inv, active) = if g_scale > 0.0 {
        let reg = &g + &eye_k * Complex64::new(1e-14 * g_scale, 0.0);
        (hermitian_fn(&reg, |v| 1.0 / v.sqrt()), true)
    } else {
        (CMatrix::zeros(k, k), false)
    };
    let objective = |x: &CMatrix| linalg::log2_det_identity_plus(&(&hn * x * hn.adjoint()));

    let mut z = CMatrix::identity(n, n) * Complex64::new(1.0 / n as f64, 0.0);
    let mut lam = CMatrix::zeros(n, n);
    let mut r = z.clone();
    let mut history = Vec::new();
    let mut converged = false;
    let (mut primal, mut dual) = (f64::INFINITY, f64::INFINITY);
    for it in 1..=max_iter {
        let v = &z - &lam;
        r = if active {
            let a = &eye_k + &hn * &v * hn.adjoint();
            let b = &g_half_inv * a * &g_half_inv;
            let nmat = hermitian_fn(&b, |x| 0.5 * (-x + (x * x + 4.0 / rho).sqrt()));
            let m = &g_half_inv * nmat * &g_half_inv;
            &v + hn.adjoint() * m * &hn
        } else {
            v
        };
        r = (&r + r.adjoint()) * Complex64::new(0.5, 0.0);
        let z_prev = z;
        z = project_psd_trace(&(&r + &lam), 1.0);
        lam += &r - &z;
        primal = (&r - &z).norm();
        dual = rho * (&z - &z_prev).norm();
        history.push(AdmmDiagnostics {
            iteration: it,
            primal_residual: primal,
            dual_residual: dual,
            objective: objective(&z),
        });
        if primal.max(dual) < eps_abs {
            converged = true;
            break;
        }
    }
    let p = Complex64::new(p2, 0.0);
    Ok(AdmmResult {
        covariance: &z * p,
        converged,
        iterations: history.len(),
        history,
        last: CovarianceIterate {
            r,
            z,
            lambda: lam,
            rho,
            primal_residual: primal,
            dual_residual: dual,
        },
    })
}

/// Top-`m` eigenvectors of `r` scaled by the square roots of their eigenvalues.
pub fn precoder_from_covariance(r: &CMatrix, m: usize) -> Result<CMatrix> {
    let (vals, vecs) = linalg::hermitian_eigen(r);
    let top = vals.first().copied().unwrap_or(0.0);
    let rank = vals.iter().filter(|&&v| v > 1e-12 * top.max(f64::MIN_POSITIVE)).count();
    if m == 0 || m > rank {
        return Err(Error::Precondition(format!("cannot take {m} streams from a covariance of rank {rank}")));
    }
    Ok(CMatrix::from_fn(r.nrows(), m, |i, j| vecs[(i, j)] * vals[j].max(0.0).sqrt()))
}

// ---------------------------------------------------------------- directional precoder

/// Power boost exp(α·d/cos θ) for extinction `alpha_max_np_m`, capped at `beta_max`.
pub fn dust_compensation_factor(
    alpha_max_np_m: f64,
    d: f64,
    theta: f64,
    beta_max: f64,
    on_boundary: bool,
    gamma_edge: f64,
) -> Result<f64> {
    if beta_max < 1.0 || gamma_edge < 1.0 {
        return Err(Error::Precondition("beta_max and gamma_edge must be >= 1".into()));
    }
    let c = theta.cos();
    if !(c > 0.0) || theta.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::Precondition(format!("zenith {theta} rad never leaves the dust layer")));
    }
    let mut beta = (alpha_max_np_m * d / c).exp().min(beta_max);
    if on_boundary {
        beta = (beta * gamma_edge).min(beta_max);
    }
    Ok(beta.max(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustPrecoder {
    pub w_dir: CMatrix,
    pub beamform: CMatrix,
    pub dust_comp: Vec<f64>,
    pub phase_cal: Vec<Complex64>,
    pub doppler: Vec<Complex64>,
    pub power_budget_w: f64,
}

impl RobustPrecoder {
    pub fn power(&self) -> f64 {
        linalg::frobenius_sq(&self.w_dir)
    }
}

/// Zenith of path `k`: zero is the main path, k ≥ 1 the (k−1)-th reflection.
fn path_zenith(scene: &ScenarioConfig, k: usize) -> f64 {
    let theta = if k == 0 {
        scene.ground.theta_rad
    } else {
        channel::terrain_layout(scene, scene.seed)
            .get(k - 1)
            .map_or(scene.ground.theta_rad, |p| p.direction.0)
    };
    orbit::ground_zenith(&scene.orbit, theta)
}

fn compose(
    v_bf: &CMatrix,
    beta: Vec<f64>,
    est: &EnvironmentEstimate,
    scene: &ScenarioConfig,
    t: f64,
) -> RobustPrecoder {
    let m = v_bf.ncols();
    let path = |j: usize| j.min(est.alpha_hat.len().saturating_sub(1));
    let phase_cal: Vec<Complex64> = (0..m)
        .map(|j| match path(j) {
            0 => Complex64::new(1.0, 0.0),
            k => Complex64::from_polar(1.0, -est.phase_offsets_rad.get(k - 1).copied().unwrap_or(0.0)),
        })
        .collect();
    let doppler: Vec<Complex64> = (0..m)
        .map(|j| {
            let f = match path(j) {
                0 => est.doppler_comm_hz,
                k => est.nlos_doppler_hz.get(k - 1).copied().unwrap_or(est.doppler_comm_hz),
            };
            Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * t)
        })
        .collect();
    let mut w = v_bf.clone();
    for j in 0..m {
        let s = phase_cal[j] * doppler[j] * beta[j];
        for x in w.column_mut(j).iter_mut() {
            *x *= s;
        }
    }
    let p = linalg::frobenius_sq(&w);
    if p > scene.p2_w {
        w *= Complex64::new((scene.p2_w / p).sqrt(), 0.0);
    }
    RobustPrecoder {
        w_dir: w,
        beamform: v_bf.clone(),
        dust_comp: beta,
        phase_cal,
        doppler,
        power_budget_w: scene.p2_w,
    }
}

/// W = V·diag(β)·Φ·D, rescaled down to the P₂ budget when needed. β is
/// evaluated at the upper end of each path's extinction interval.
pub fn build_directional_precoder(
    v_bf: &CMatrix,
    est: &EnvironmentEstimate,
    scene: &ScenarioConfig,
    t: f64,
) -> Result<RobustPrecoder> {
    if est.alpha_interval.is_empty() {
        return Err(Error::Precondition("environment estimate has no paths".into()));
    }
    let beta = (0..v_bf.ncols())
        .map(|j| {
            let k = j.min(est.alpha_interval.len() - 1);
            dust_compensation_factor(
                channel::db_per_km_to_np_per_m(est.alpha_interval[k].1),
                scene.dust.layer_height_m,
                path_zenith(scene, k),
                scene.comm.beta_max,
                est.boundary_mask.get(k).copied().unwrap_or(false),
                scene.comm.gamma_edge,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(compose(v_bf, beta, est, scene, t))
}

/// Matched transmission toward the raw estimate, compensated for the nominal
/// extinction without any cap.
pub fn nonrobust_baseline_precoder(
    h_hat: &CVector,
    est: &EnvironmentEstimate,
    scene: &ScenarioConfig,
    t: f64,
) -> Result<RobustPrecoder> {
    let norm = h_hat.norm();
    if !(norm > 0.0) {
        return Err(Error::Precondition("channel estimate is zero".into()));
    }
    let v = CMatrix::from_column_slice(h_hat.len(), 1, (h_hat * Complex64::new(scene.p2_w.sqrt() / norm, 0.0)).as_slice());
    let zen = path_zenith(scene, 0);
    let beta = (channel::db_per_km_to_np_per_m(est.alpha_hat[0]) * scene.dust.layer_height_m / zen.cos()).exp();
    Ok(compose(&v, vec![beta], est, scene, t))
}

/// Expected share of estimate energy carried by the channel error at level `u`.
pub fn noise_floor(u: f64, h_hat: &CVector) -> f64 {
    u * u / (1.0 + u * u) * h_hat.norm_squared()
}

/// Sparsify, optimize the covariance inside the recovered subspace at the
/// worst-case extinction, then compose the directional precoder.
pub fn robust_precoder(
    h_hat: &CVector,
    dictionary: &CMatrix,
    est: &EnvironmentEstimate,
    scene: &ScenarioConfig,
    u: f64,
    t: f64,
) -> Result<(RobustPrecoder, SparseChannel, AdmmResult)> {
    let sparse = omp_sparsify(h_hat, dictionary, h_hat.len(), noise_floor(u, h_hat))?;
    if sparse.support.is_empty() {
        return Err(Error::Estimation("channel estimate has no energy".into()));
    }
    let zen = path_zenith(scene, 0);
    let ell = scene.dust.path_length(zen);
    let extra = channel::db_per_km_to_np_per_m(est.alpha_max() - est.alpha_hat[0]);
    let h_design = sparse.reconstruct(dictionary) * Complex64::new((-extra * ell).exp(), 0.0);
    let q = &sparse.basis;
    let reduced = CMatrix::from_fn(1, q.ncols(), |_, j| q.column(j).dotc(&h_design).conj());
    let admm = admm_capacity_covariance(
        &reduced,
        scene.p2_w,
        1.0,
        scene.comm.admm_rho,
        scene.comm.admm_max_iter,
        scene.comm.admm_eps,
    )?;
    let v = q * precoder_from_covariance(&admm.covariance, 1)?;
    let pre = build_directional_precoder(&v, est, scene, t)?;
    Ok((pre, sparse, admm))
}

/// Received SINR for transmit vector `w` (watts), with mismatch leakage.
pub fn realized_sinr(h: &CVector, w: &CMatrix, leak_ratio: f64) -> f64 {
    let hw: f64 = (0..w.ncols()).map(|j| h.dotc(&w.column(j)).norm_sqr()).sum();
    let total = h.norm_squared() * linalg::frobenius_sq(w);
    hw / (leak_ratio * (total - hw).max(0.0) + 1.0)
}

/// Isotropic error of norm `u·‖h‖`.
pub fn csi_error<R: Rng + ?Sized>(h: &CVector, u: f64, rng: &mut R) -> CVector {
    let z = CVector::from_fn(h.len(), |_, _| channel::complex_normal(rng));
    let zn = z.norm();
    if zn == 0.0 || u == 0.0 {
        return CVector::zeros(h.len());
    }
    z * Complex64::new(u * h.norm() / zn, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Robust,
    NonRobust,
}

impl Arm {
    pub fn name(self) -> &'static str {
        match self {
            Arm::Robust => "robust",
            Arm::NonRobust => "nonrobust",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSample {
    pub sinr: f64,
    /// SINR with the true extinction raised to the interval's upper end.
    pub sinr_worst: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkStats {
    /// 10·log₁₀ of the mean linear SINR.
    pub mean_sinr_db: f64,
    pub capacity_bps_hz: f64,
    /// Mean capacity when the channel sits at the worst-case extinction.
    pub worst_capacity_bps_hz: f64,
    pub p_out: f64,
    pub samples: Vec<TrialSample>,
}

/// Everything about the link that does not change between trials.
pub struct LinkContext {
    scene: ScenarioConfig,
    dictionary: CMatrix,
    echo: crate::channel::ChannelRealization,
    state: orbit::OrbitState,
    alpha_true: f64,
}

impl LinkContext {
    pub fn new(scene: &ScenarioConfig) -> Result<Self> {
        let lambda = scene.radio.wavelength();
        let u_max = orbit::look_angle(&scene.orbit, scene.orbit.theta_max()).sin();
        Ok(Self {
            dictionary: steering_dictionary(&scene.array, lambda, u_max, scene.comm.omp_oversample),
            echo: channel::sensing_channel(scene, 0.0)?,
            state: orbit::state_at(&scene.orbit, 0.0),
            alpha_true: channel::dust_alpha(&scene.dust, lambda),
            scene: scene.clone(),
        })
    }

    pub fn dictionary(&self) -> &CMatrix {
        &self.dictionary
    }

    /// Noisy echo read-out mapped to downlink parameters at CSI level `u`.
    pub fn estimate<R: Rng + ?Sized>(&self, u: f64, rng: &mut R) -> Result<EnvironmentEstimate> {
        let obs: EchoObservation = mapping::observe_echo(&self.scene, &self.echo, Some(rng))?;
        mapping::map_environment(&self.scene, &self.state, &obs, u, DopplerMapping::Consistent)
    }

    /// One Monte-Carlo trial with its own random stream.
    pub fn trial(&self, arm: Arm, u: f64, seed: u64) -> Result<TrialSample> {
        let scene = &self.scene;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let est = self.estimate(u, &mut rng)?;
        let truth = channel::comm_channel_with(scene, 0.0, self.alpha_true, &mut rng)?;
        let h = channel::comm_channel_vector(scene, &truth);
        let h_hat = &h + csi_error(&h, u, &mut rng);
        let pre = match arm {
            Arm::Robust => robust_precoder(&h_hat, &self.dictionary, &est, scene, u, 0.0)?.0,
            Arm::NonRobust => nonrobust_baseline_precoder(&h_hat, &est, scene, 0.0)?,
        };
        let zen = path_zenith(scene, 0);
        let extra = channel::db_per_km_to_np_per_m((est.alpha_max() - self.alpha_true).max(0.0));
        let h_worst = &h * Complex64::new((-extra * scene.dust.path_length(zen)).exp(), 0.0);
        Ok(TrialSample {
            sinr: realized_sinr(&h, &pre.w_dir, scene.comm.leak_ratio),
            sinr_worst: realized_sinr(&h_worst, &pre.w_dir, scene.comm.leak_ratio),
        })
    }

    /// Monte-Carlo SINR, capacity and outage for one arm at CSI level `u`.
    /// Trial k draws from (seed, k), so both arms see the same channels.
    pub fn evaluate(&self, arm: Arm, u: f64, n_mc: usize, seed: u64) -> Result<LinkStats> {
        if n_mc == 0 {
            return Err(Error::Precondition("need at least one Monte-Carlo trial".into()));
        }
        let samples = (0..n_mc)
            .into_par_iter()
            .map(|k| self.trial(arm, u, derive_seed(seed, k as u64)))
            .collect::<Result<Vec<_>>>()?;
        let n = n_mc as f64;
        let mean_sinr = samples.iter().map(|s| s.sinr).sum::<f64>() / n;
        Ok(LinkStats {
            mean_sinr_db: crate::linear_to_db(mean_sinr),
            capacity_bps_hz: samples.iter().map(|s| (1.0 + s.sinr).log2()).sum::<f64>() / n,
            worst_capacity_bps_hz: samples.iter().map(|s| (1.0 + s.sinr_worst).log2()).sum::<f64>() / n,
            p_out: samples.iter().filter(|s| s.sinr < scene_gamma(&self.scene)).count() as f64 / n,
            samples,
        })
    }
}

fn scene_gamma(scene: &ScenarioConfig) -> f64 {
    scene.thresholds.gamma_th
}

/// Convenience wrapper building the context for a single evaluation.
pub fn evaluate_sinr_outage(scene: &ScenarioConfig, arm: Arm, u_level: f64, n_mc: usize, seed: u64) -> Result<LinkStats> {
    LinkContext::new(scene)?.evaluate(arm, u_level, n_mc, seed)
}
