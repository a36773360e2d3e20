//! Cramér-Rao bounds for extinction and Doppler, and the estimators that chase them.
//!
//! Observation model: y_n = e^{−2αℓ}·e^{j2πf t_n} + w_n with unit-power probe,
//! w_n ~ CN(0, σ²), known carrier phase. `snr_linear` is the per-sample SNR of the
//! attenuated echo.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::complex_normal;
use crate::sweep::derive_seed;
use crate::{Error, Result};

const DOPPLER_GRID: usize = 64;
const GOLDEN_ITERS: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FimSpec {
    pub snr_linear: f64,
    pub n_obs: usize,
    pub path_len_ell: f64,
    /// Mean squared sample time, s².
    pub t_bar_sq: f64,
    pub obs_window_t_s: f64,
}

/// Sample instants spread uniformly over [0, T].
pub fn sample_times(n_obs: usize, window_s: f64) -> Vec<f64> {
    if n_obs < 2 {
        return vec![0.0; n_obs];
    }
    (0..n_obs).map(|n| n as f64 * window_s / (n_obs - 1) as f64).collect()
}

impl FimSpec {
    pub fn new(snr_linear: f64, n_obs: usize, path_len_ell: f64, t_bar_sq: f64, obs_window_t_s: f64) -> Result<Self> {
        let s = Self {
            snr_linear,
            n_obs,
            path_len_ell,
            t_bar_sq,
            obs_window_t_s,
        };
        s.validate()?;
        Ok(s)
    }

    /// Uniform sampling over the window, with t̄² taken from the actual sample set.
    pub fn uniform(snr_linear: f64, n_obs: usize, path_len_ell: f64, window_s: f64) -> Result<Self> {
        let t = sample_times(n_obs, window_s);
        let t_bar_sq = t.iter().map(|x| x * x).sum::<f64>() / n_obs.max(1) as f64;
        Self::new(snr_linear, n_obs, path_len_ell, t_bar_sq, window_s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.snr_linear > 0.0) || self.n_obs == 0 || !(self.path_len_ell > 0.0) {
            return Err(Error::Invalid(format!(
                "bound spec needs snr > 0, n_obs >= 1 and path length > 0 (got {}, {}, {})",
                self.snr_linear, self.n_obs, self.path_len_ell
            )));
        }
        if self.t_bar_sq < 0.0 || self.obs_window_t_s < 0.0 {
            return Err(Error::Invalid("sample-time moments must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrlbReport {
    pub var_alpha_bound: f64,
    pub var_doppler_bound: f64,
    pub fim: Matrix2<f64>,
    pub cross_term: f64,
}

/// Extinction bound in (Np/m)².
pub fn crlb_alpha(spec: &FimSpec) -> f64 {
    1.0 / (8.0 * spec.path_len_ell.powi(2) * spec.snr_linear * spec.n_obs as f64)
}

/// Doppler bound in Hz²; the window form assumes t̄² = T²/3.
pub fn crlb_doppler(spec: &FimSpec, use_window_form: bool) -> f64 {
    let n = spec.n_obs as f64;
    if use_window_form {
        3.0 / (8.0 * PI * PI * spec.snr_linear * n * spec.obs_window_t_s.powi(2))
    } else {
        1.0 / (8.0 * PI * PI * spec.snr_linear * n * spec.t_bar_sq)
    }
}

/// Analytic FIM over (α, f). The cross term is Re of a purely imaginary sum, so exactly zero.
pub fn fim_joint(spec: &FimSpec) -> Matrix2<f64> {
    let n = spec.n_obs as f64;
    Matrix2::new(
        8.0 * spec.path_len_ell.powi(2) * spec.snr_linear * n,
        0.0,
        0.0,
        8.0 * PI * PI * spec.snr_linear * n * spec.t_bar_sq,
    )
}

pub fn crlb_report(spec: &FimSpec) -> CrlbReport {
    let fim = fim_joint(spec);
    CrlbReport {
        var_alpha_bound: 1.0 / fim[(0, 0)],
        var_doppler_bound: 1.0 / fim[(1, 1)],
        cross_term: fim[(0, 1)],
        fim,
    }
}

fn mean_signal(alpha: f64, f_d: f64, ell: f64, times: &[f64]) -> Vec<Complex64> {
    let amp = (-2.0 * alpha * ell).exp();
    times.iter().map(|&t| Complex64::from_polar(amp, 2.0 * PI * f_d * t)).collect()
}

/// FIM from central differences of the observation mean, 2/σ²·Re(JᴴJ).
/// `step` is dimensionless: α moves by step/(2ℓ), f by step/(2πT).
pub fn fim_numerical(spec: &FimSpec, alpha: f64, f_d: f64, step: f64) -> Matrix2<f64> {
    let times = sample_times(spec.n_obs, spec.obs_window_t_s);
    let ell = spec.path_len_ell;
    let sigma2 = (-4.0 * alpha * ell).exp() / spec.snr_linear;
    let ha = step / (2.0 * ell);
    let hf = step / (2.0 * PI * spec.obs_window_t_s.max(f64::MIN_POSITIVE));
    let diff = |p: &[Complex64], m: &[Complex64], h: f64| -> Vec<Complex64> {
        p.iter().zip(m).map(|(a, b)| (a - b) / (2.0 * h)).collect()
    };
    let ja = diff(&mean_signal(alpha + ha, f_d, ell, &times), &mean_signal(alpha - ha, f_d, ell, &times), ha);
    let jf = diff(&mean_signal(alpha, f_d + hf, ell, &times), &mean_signal(alpha, f_d - hf, ell, &times), hf);
    let dot = |x: &[Complex64], y: &[Complex64]| x.iter().zip(y).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
    let k = 2.0 / sigma2;
    let cross = k * dot(&ja, &jf);
    Matrix2::new(k * dot(&ja, &ja), cross, cross, k * dot(&jf, &jf))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McReport {
    pub var_alpha: f64,
    pub var_fd: f64,
    pub mse_alpha: f64,
    pub mse_fd: f64,
    /// Mean of |α̂ − α|.
    pub mae_alpha: f64,
    /// Mean of |α̂ − α|/α; zero-extinction runs report the absolute error instead.
    pub rel_err_alpha: f64,
    pub rmse_fd_hz: f64,
}

fn correlate(y: &[Complex64], times: &[f64], f: f64) -> f64 {
    y.iter()
        .zip(times)
        .map(|(v, &t)| (v * Complex64::from_polar(1.0, -2.0 * PI * f * t)).re)
        .sum()
}

/// Maximum-likelihood Doppler: coarse grid over f0 ± 2/T, then golden-section refinement.
pub fn estimate_doppler(y: &[Complex64], times: &[f64], f0: f64, window_s: f64) -> f64 {
    let span = 2.0 / window_s;
    let step = 2.0 * span / (DOPPLER_GRID - 1) as f64;
    let grid = |k: usize| f0 - span + k as f64 * step;
    let best = (0..DOPPLER_GRID)
        .map(|k| (k, correlate(y, times, grid(k))))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
        .0;
    let (mut lo, mut hi) = (grid(best) - step, grid(best) + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut v1, mut v2) = (correlate(y, times, x1), correlate(y, times, x2));
    for _ in 0..GOLDEN_ITERS {
        if v1 >= v2 {
            hi = x2;
            x2 = x1;
            v2 = v1;
            x1 = hi - g * (hi - lo);
            v1 = correlate(y, times, x1);
        } else {
            lo = x1;
            x1 = x2;
            v1 = v2;
            x2 = lo + g * (hi - lo);
            v2 = correlate(y, times, x2);
        }
    }
    0.5 * (lo + hi)
}

/// Closed-form ML extinction given the Doppler estimate.
pub fn estimate_alpha(y: &[Complex64], times: &[f64], f_hat: f64, ell: f64) -> f64 {
    let amp = correlate(y, times, f_hat) / y.len() as f64;
    -amp.max(1e-300).ln() / (2.0 * ell)
}

/// Sample statistics of the ML estimators over `n_trials` noisy observations.
/// Trial k draws its noise from (seed, k) only, so runs that share a seed share noise.
pub fn mc_estimator_variance(true_alpha: f64, true_fd: f64, spec: &FimSpec, n_trials: usize, seed: u64) -> Result<McReport> {
    spec.validate()?;
    if n_trials < 100 {
        return Err(Error::Precondition(format!("need at least 100 trials, got {n_trials}")));
    }
    if !(spec.obs_window_t_s > 0.0) {
        return Err(Error::Precondition("observation window must be positive".into()));
    }
    let times = sample_times(spec.n_obs, spec.obs_window_t_s);
    let clean = mean_signal(true_alpha, true_fd, spec.path_len_ell, &times);
    let sigma = ((-4.0 * true_alpha * spec.path_len_ell).exp() / spec.snr_linear).sqrt();
    let estimates: Vec<(f64, f64)> = (0..n_trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k as u64));
            let y: Vec<Complex64> = clean.iter().map(|s| s + complex_normal(&mut rng) * sigma).collect();
            let f_hat = estimate_doppler(&y, &times, true_fd, spec.obs_window_t_s);
            (estimate_alpha(&y, &times, f_hat, spec.path_len_ell), f_hat)
        })
        .collect();
    let n = n_trials as f64;
    let mean_a = estimates.iter().map(|e| e.0).sum::<f64>() / n;
    let mean_f = estimates.iter().map(|e| e.1).sum::<f64>() / n;
    let var = |get: fn(&(f64, f64)) -> f64, m: f64| estimates.iter().map(|e| (get(e) - m).powi(2)).sum::<f64>() / (n - 1.0);
    let mse_alpha = estimates.iter().map(|e| (e.0 - true_alpha).powi(2)).sum::<f64>() / n;
    let mse_fd = estimates.iter().map(|e| (e.1 - true_fd).powi(2)).sum::<f64>() / n;
    let scale = if true_alpha != 0.0 { true_alpha.abs() } else { 1.0 };
    let mae = estimates.iter().map(|e| (e.0 - true_alpha).abs()).sum::<f64>() / n;
    Ok(McReport {
        var_alpha: var(|e| e.0, mean_a),
        var_fd: var(|e| e.1, mean_f),
        mse_alpha,
        mse_fd,
        mae_alpha: mae,
        rel_err_alpha: mae / scale,
        rmse_fd_hz: mse_fd.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let s = FimSpec::new(1.0, 1, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(crlb_alpha(&s), 0.125);
        assert!((crlb_doppler(&s, false) - 1.0 / (8.0 * PI * PI)).abs() < 1e-15);
        assert!((crlb_doppler(&s, false) - 1.2665e-2).abs() < 1e-6);
        let s = FimSpec::new(10.0, 100, 10.0, 1.0 / 3.0, 1.0).unwrap();
        assert!((crlb_alpha(&s) - 1.25e-6).abs() < 1e-18);
        assert!((crlb_doppler(&s, true) - 3.0 / (8.0 * PI * PI * 1000.0)).abs() < 1e-18);
        assert!((crlb_doppler(&s, true) / crlb_doppler(&s, false) - 1.0).abs() < 1e-12);
        let longer = FimSpec { path_len_ell: 40.0, ..s };
        assert!((crlb_alpha(&s) / crlb_alpha(&longer) - 16.0).abs() < 1e-12);
        assert!(FimSpec::new(0.0, 1, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn fim_matches_finite_differences() {
        let spec = FimSpec::uniform(10.0, 256, 2.5e4, 0.064).unwrap();
        let a = fim_joint(&spec);
        assert_eq!(a[(0, 1)], 0.0);
        let r = crlb_report(&spec);
        assert!((r.var_alpha_bound * crlb_alpha(&spec).recip() - 1.0).abs() < 1e-12);
        let n = fim_numerical(&spec, 3e-6, 850.0, 1e-6);
        for i in 0..2 {
            assert!((n[(i, i)] / a[(i, i)] - 1.0).abs() < 1e-5, "{i}: {} vs {}", n[(i, i)], a[(i, i)]);
        }
        assert!(n[(0, 1)].abs() < 1e-6 * a[(0, 0)].min(a[(1, 1)]));
    }

    #[test]
    fn estimators_are_seeded() {
        let spec = FimSpec::uniform(10.0, 64, 1e4, 0.064).unwrap();
        let a = mc_estimator_variance(2e-6, 100.0, &spec, 100, 5).unwrap();
        let b = mc_estimator_variance(2e-6, 100.0, &spec, 100, 5).unwrap();
        assert_eq!(a, b);
        assert!(mc_estimator_variance(2e-6, 100.0, &spec, 99, 5).is_err());
    }

    #[test]
    fn noiseless_estimates_are_exact() {
        let times = sample_times(128, 0.064);
        let y = mean_signal(4e-6, 321.5, 2e4, &times);
        let f = estimate_doppler(&y, &times, 300.0, 0.064);
        assert!((f - 321.5).abs() < 1e-6);
        assert!((estimate_alpha(&y, &times, f, 2e4) - 4e-6).abs() < 1e-12);
    }
}
