use std::f64::consts::PI;

use masc::allocator::{self, FrameConfig, ParetoPoint};
use masc::bounds::{self, FimSpec};
use masc::channel::{self, ArrayConfig, DustPreset};
use masc::linalg::{self, CMatrix, CVector};
use masc::mapping::{self, DopplerMapping};
use masc::orbit::{self, OrbitConfig};
use masc::robust::{self, UncertaintySet};
use masc::scenario::ScenarioConfig;
use masc::sensing::{self, SensingProblem};
use masc::Complex64;
use nalgebra::Vector3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, k: usize) -> CMatrix {
    CMatrix::from_fn(r, k, |_, _| channel::complex_normal(rng))
}

fn small_scene() -> ScenarioConfig {
    let mut s = ScenarioConfig::default();
    s.grid.n_theta = 12;
    s.grid.n_phi = 12;
    s
}

fn point(eta: f64, cap: f64) -> ParetoPoint {
    ParetoPoint {
        eta_min_constraint: 0.0,
        eta_eff: eta,
        c_eff_bps_hz: cap,
        t_sens_s: 0.0,
        t_comm_s: 0.0,
        feasible: true,
        mode: None,
    }
}

fn dominated_by(p: &ParetoPoint, q: &ParetoPoint) -> bool {
    q.eta_eff >= p.eta_eff && q.c_eff_bps_hz >= p.c_eff_bps_hz && (q.eta_eff > p.eta_eff || q.c_eff_bps_hz > p.c_eff_bps_hz)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn orbit_speed_constant_and_elevation_periodic(h in 200e3..800e3f64, phase in 0.0..2.0 * PI, t in 0.0..2e4f64) {
        let cfg = OrbitConfig { altitude_m: h, phase0_rad: phase, ..OrbitConfig::default() };
        let s0 = orbit::state_at(&cfg, 0.0);
        let s = orbit::state_at(&cfg, t);
        prop_assert!((s.velocity_mps.norm() / s0.velocity_mps.norm() - 1.0).abs() < 1e-9);
        prop_assert!((s.position_m.norm() / cfg.orbit_radius() - 1.0).abs() < 1e-6);
        let later = orbit::state_at(&cfg, t + orbit::orbital_period(&cfg));
        prop_assert!((later.elevation_rad - s.elevation_rad).abs() < 1e-9);
    }

    #[test]
    fn cap_weights_are_exact_per_cell(h in 200e3..800e3f64, n in 2usize..40) {
        let cfg = OrbitConfig::with_altitude(h).unwrap();
        let a = orbit::visible_region(&cfg, n, n).unwrap();
        let b = orbit::visible_region(&cfg, 2 * n, 2 * n).unwrap();
        let analytic = 2.0 * PI * (1.0 - cfg.theta_max().cos());
        prop_assert!((a.solid_angle_sr - analytic).abs() <= 1e-12);
        prop_assert!((a.total_weight() / b.total_weight() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn los_vectors_are_unit(theta in 0.0..PI, phi in -PI..PI) {
        prop_assert!((orbit::los_unit_vector(theta, phi).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_way_loss_is_sixteen_times_squared(d in 1.0..5e6f64, lambda in 0.01..1.0f64) {
        let one = channel::fspl_one_way(d, lambda);
        prop_assert!((channel::fspl_two_way(d, lambda) / (16.0 * one * one) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn array_factor_bounded(theta in 0.0..PI / 2.0, phi in -PI..PI, bmax in 0.1..10.0f64) {
        let mut arr = ArrayConfig::table1(0.15);
        arr.max_gain_linear = bmax;
        prop_assert!(channel::upa_array_factor(&arr, theta, phi, 0.15) <= bmax * (1.0 + 1e-12));
        prop_assert!((channel::upa_array_factor(&arr, 0.0, phi, 0.15) - bmax).abs() < 1e-12 * bmax);
    }

    #[test]
    fn reflections_are_passive(eps in 1.0..20.0f64, inc in 0.0..PI / 2.0) {
        prop_assert!(channel::fresnel_reflection(eps, inc).abs() <= 1.0);
    }

    #[test]
    fn path_gains_fall_with_extinction(a1 in 0.0..5e-3f64, extra in 0.0..5e-3f64, t in 0.0..100.0f64) {
        let scene = ScenarioConfig::default();
        let lo = channel::sensing_channel_with_alpha(&scene, t, a1).unwrap();
        let hi = channel::sensing_channel_with_alpha(&scene, t, a1 + extra).unwrap();
        prop_assert!(hi.los_coeff.norm() <= lo.los_coeff.norm());
        for (p, q) in hi.nlos.iter().zip(&lo.nlos) {
            prop_assert!(p.coeff.norm() <= q.coeff.norm());
        }
    }

    #[test]
    fn sensing_realizations_repeat_bitwise(t in 0.0..500.0f64) {
        let scene = ScenarioConfig::default();
        prop_assert_eq!(channel::sensing_channel(&scene, t).unwrap(), channel::sensing_channel(&scene, t).unwrap());
    }

    #[test]
    fn constant_modulus_projection_idempotent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_matrix(&mut rng, 8, 3);
        let p = sensing::project_constant_modulus(&x);
        prop_assert_eq!(sensing::project_constant_modulus(&p), p.clone());
        prop_assert!(p.iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn omp_residual_never_grows(seed in any::<u64>(), l in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arr = ArrayConfig::table1(0.15);
        let dict = robust::steering_dictionary(&arr, 0.15, 0.5, 2);
        let h = CVector::from_fn(64, |_, _| channel::complex_normal(&mut rng));
        let s = robust::omp_sparsify(&h, &dict, l, 0.0).unwrap();
        prop_assert!(s.residual_history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(s.support.len() <= l);
    }

    #[test]
    fn capacity_monotone_in_extinction(seed in any::<u64>(), a1 in 0.0..1e-3f64, extra in 0.0..1e-3f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_matrix(&mut rng, 4, 2);
        let h0 = random_matrix(&mut rng, 2, 4);
        let ell = 3e4;
        let family = |a: f64| &h0 * c((-a * ell).exp(), 0.0);
        let lo = robust::capacity(&w, &family(a1), 1.0, 0.1);
        let hi = robust::capacity(&w, &family(a1 + extra), 1.0, 0.1);
        prop_assert!(hi <= lo + 1e-12);
    }

    #[test]
    fn admm_respects_constraints(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_matrix(&mut rng, 2, 4);
        let res = robust::admm_capacity_covariance(&h, 2.0, 1.0, 1.0, 400, 1e-7).unwrap();
        prop_assert!(linalg::real_trace(&res.covariance) <= 2.0 * (1.0 + 1e-9));
        let (vals, _) = linalg::hermitian_eigen(&res.covariance);
        prop_assert!(vals.iter().all(|&v| v >= -1e-10));
        if res.converged {
            prop_assert!(res.last.primal_residual < 1e-7);
        }
        let start = (res.history.len() / 5).max(5).min(res.history.len());
        for w in res.history[start..].windows(2) {
            prop_assert!(w[1].objective >= w[0].objective - 1e-6 * w[0].objective.abs().max(1.0));
        }
    }

    #[test]
    fn factorization_error_bounded_by_discarded_energy(seed in any::<u64>(), m in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&mut rng, 4, 4);
        let r = &a * a.adjoint();
        let w = robust::precoder_from_covariance(&r, m).unwrap();
        let (vals, _) = linalg::hermitian_eigen(&r);
        let discarded: f64 = vals[m..].iter().sum();
        prop_assert!((&w * w.adjoint() - &r).norm() <= discarded + 1e-9);
    }

    #[test]
    fn front_is_strict_antichain(raw in prop::collection::vec((0u8..20, 0u8..20), 1..40)) {
        let pts: Vec<ParetoPoint> = raw.iter().map(|&(e, k)| point(e as f64 / 20.0, k as f64 / 10.0)).collect();
        let front = allocator::prune_dominated(&pts);
        for w in front.windows(2) {
            prop_assert!(w[0].eta_eff < w[1].eta_eff);
            prop_assert!(w[0].c_eff_bps_hz > w[1].c_eff_bps_hz);
        }
        for p in &front {
            prop_assert!(!front.iter().any(|q| dominated_by(p, q)));
        }
    }

    #[test]
    fn frame_is_always_fully_used(eta in 0.0..1.0f64, star in 0.0..1.0f64, cap in 0.0..5.0f64, tf in 0.01..10.0f64) {
        let frame = FrameConfig { t_frame_s: tf, t_sens_min_s: tf * 0.01, t_comm_max_s: tf };
        let p = allocator::sweep_point(eta, star, cap, &frame);
        prop_assert_eq!(p.t_sens_s + p.t_comm_s, tf);
    }

    #[test]
    fn sweep_is_order_independent(seed in any::<u64>()) {
        let frame = FrameConfig { t_frame_s: 1.0, t_sens_min_s: 0.01, t_comm_max_s: 1.0 };
        let etas = allocator::eta_grid(0.05, 0.95, 0.05).unwrap();
        let mut shuffled = etas.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        let a = allocator::sweep_from_constants(0.9, 0.4, &etas, &frame).unwrap();
        let b = allocator::sweep_from_constants(0.9, 0.4, &shuffled, &frame).unwrap();
        for p in &a.points {
            let q = b.points.iter().find(|q| q.eta_min_constraint == p.eta_min_constraint).unwrap();
            prop_assert_eq!(p, q);
        }
        prop_assert_eq!(a.front, b.front);
    }

    #[test]
    fn fim_is_diagonal_and_matches_curvature(snr_db in -10.0..20.0f64, n in 8usize..128, ell in 1e3..5e4f64) {
        let spec = FimSpec::uniform(masc::db_to_linear(snr_db), n, ell, 1e-3).unwrap();
        let fim = bounds::fim_joint(&spec);
        prop_assert_eq!(fim[(0, 1)], 0.0);
        prop_assert_eq!(fim[(1, 0)], 0.0);
        let snr = spec.snr_linear;
        prop_assert!((fim[(0, 0)] / (8.0 * ell * ell * snr * n as f64) - 1.0).abs() < 1e-12);
        let t2: f64 = bounds::sample_times(n, 1e-3).iter().map(|t| t * t).sum();
        prop_assert!((fim[(1, 1)] / (8.0 * PI * PI * snr * t2) - 1.0).abs() < 1e-12);
        let num = bounds::fim_numerical(&spec, 1e-5, 150.0, 1e-4);
        prop_assert!((num[(0, 0)] / fim[(0, 0)] - 1.0).abs() < 1e-5);
        prop_assert!((num[(1, 1)] / fim[(1, 1)] - 1.0).abs() < 1e-5);
        prop_assert!(num[(0, 1)].abs() < 1e-6 * fim[(0, 0)].max(fim[(1, 1)]));
    }

    #[test]
    fn alpha_interval_covers_truth_within_width(alpha in 1e-5..5e-3f64, frac in -1.0..1.0f64, u in 0.0..0.8f64) {
        let scene = ScenarioConfig::default();
        let echo = channel::sensing_channel_with_alpha(&scene, 0.0, alpha).unwrap();
        let mut obs = mapping::observe_echo::<ChaCha8Rng>(&scene, &echo, None).unwrap();
        let width = mapping::delta_alpha(obs.snr_linear, scene.uncertainty.kappa_scale);
        obs.alpha_db_km[0] = (alpha + frac * width).max(0.0);
        let state = orbit::state_at(&scene.orbit, 0.0);
        let est = mapping::map_environment(&scene, &state, &obs, u, DopplerMapping::Consistent).unwrap();
        let (lo, hi) = est.alpha_interval[0];
        prop_assert!(lo <= alpha * (1.0 + 1e-12) && alpha <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn boundaries_ignore_additive_shift(seed in any::<u64>(), shift in -1000i32..1000) {
        let region = orbit::visible_region(&OrbitConfig::default(), 10, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let field: Vec<f64> = (0..region.len()).map(|_| rng.random_range(0..50) as f64).collect();
        let moved: Vec<f64> = field.iter().map(|v| v + shift as f64).collect();
        prop_assert_eq!(mapping::detect_boundaries(&field, &region).unwrap(), mapping::detect_boundaries(&moved, &region).unwrap());
    }

    #[test]
    fn estimator_variance_respects_bound(seed in any::<u64>()) {
        let spec = FimSpec::uniform(10.0, 32, 2e4, 1e-3).unwrap();
        let rep = bounds::mc_estimator_variance(1e-5, 200.0, &spec, 400, seed).unwrap();
        let slack = 1.0 - 3.0 / 400f64.sqrt();
        prop_assert!(rep.var_alpha >= bounds::crlb_alpha(&spec) * slack * 0.9);
        prop_assert!(rep.var_fd >= bounds::crlb_doppler(&spec, false) * slack * 0.9);
        prop_assert_eq!(rep.rel_err_alpha, rep.mae_alpha / 1e-5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn coverage_bounded_and_monotone(seed in any::<u64>(), g1 in -50.0..-20.0f64, extra in 0.0..10.0f64) {
        let scene = small_scene();
        let mut problem = SensingProblem::new(&scene).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_matrix(&mut rng, 64, 2) * c((scene.p1_w / 128.0).sqrt(), 0.0);
        problem.gamma = masc::db_to_linear(g1);
        let lo = problem.coverage(&w);
        problem.gamma = masc::db_to_linear(g1 + extra);
        let hi = problem.coverage(&w);
        prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        prop_assert!(hi <= lo);

        let light = SensingProblem::new(&scene.with_dust(DustPreset::Light)).unwrap();
        let severe = SensingProblem::new(&scene.with_dust(DustPreset::Severe)).unwrap();
        prop_assert!(severe.coverage(&w) <= light.coverage(&w));
    }

    #[test]
    fn mapping_reproduces_downlink_parameters(t in 0.0..600.0f64, vx in -5.0..5.0f64, vy in -5.0..5.0f64, vz in -1.0..1.0f64, seed in any::<u64>()) {
        let mut scene = ScenarioConfig::default();
        scene.ground.velocity_mps = Vector3::new(vx, vy, vz);
        let echo = channel::sensing_channel(&scene, t).unwrap();
        let direct = channel::comm_channel(&scene, t, seed).unwrap();
        let obs = mapping::observe_echo::<ChaCha8Rng>(&scene, &echo, None).unwrap();
        let state = orbit::state_at(&scene.orbit, t);
        let est = mapping::map_environment(&scene, &state, &obs, 0.0, DopplerMapping::Consistent).unwrap();
        prop_assert_eq!(est.alpha_hat[0], direct.alpha_db_km);
        prop_assert_eq!(est.delays.0, direct.main_delay_s);
        for (a, p) in est.delays.1.iter().zip(&direct.nlos) {
            prop_assert_eq!(*a, p.delay_s);
        }
        prop_assert!((est.doppler_comm_hz - direct.main_doppler_hz).abs() < 1e-9);
        for (f, p) in est.nlos_doppler_hz.iter().zip(&direct.nlos) {
            prop_assert!((f - p.doppler_hz).abs() < 1e-9);
        }
    }

    #[test]
    fn accepted_iterates_never_lose_coverage(n_rf in 2usize..6) {
        let scene = small_scene();
        let problem = SensingProblem::new(&scene).unwrap();
        let r = sensing::hybrid_precoding_design(&problem, n_rf, n_rf, 6, 1e-4).unwrap();
        prop_assert!(r.history.windows(2).all(|w| w[1].eta_cov >= w[0].eta_cov));
        prop_assert!(linalg::frobenius_sq(&r.precoder.combined()) <= scene.p1_w * (1.0 + 1e-9));
    }

    #[test]
    fn worst_case_sits_at_interval_top(seed in any::<u64>(), lo in 0.0..1e-3f64, width in 0.0..1e-3f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_matrix(&mut rng, 4, 2);
        let h0 = random_matrix(&mut rng, 2, 4);
        let set = UncertaintySet::new(lo, lo + width).unwrap();
        let family = |a: f64| &h0 * c((-a * 2e4).exp(), 0.0);
        let grid = robust::worst_case_capacity_grid(&w, family, &set, 1.0, 0.1, 11);
        let top = robust::worst_case_capacity(&w, family, &set, 1.0, 0.1);
        prop_assert!((grid - top).abs() <= 1e-12);
    }
}
