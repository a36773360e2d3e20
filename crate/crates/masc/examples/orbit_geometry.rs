//! Circular-orbit kinematics and the visible cap over Mars.

use masc::orbit::{self, OrbitConfig};

fn main() -> masc::Result<()> {
    for h_km in [200.0, 400.0, 800.0] {
        let cfg = OrbitConfig::with_altitude(h_km * 1e3)?;
        let cap = orbit::visible_region(&cfg, 64, 64)?;
        println!(
            "h = {h_km:>5.0} km  period {:>7.1} s  speed {:>7.1} m/s  cap half-angle {:.2} deg  cap {:.4} sr  horizon range {:.0} km",
            orbit::orbital_period(&cfg),
            cfg.speed(),
            cap.theta_max_rad.to_degrees(),
            cap.solid_angle_sr,
            orbit::slant_range(&cfg, cfg.theta_max())? / 1e3,
        );
    }

    let cfg = OrbitConfig::default();
    let period = orbital_period_quarters(&cfg);
    for t in period {
        let s = orbit::state_at(&cfg, t);
        println!(
            "t = {t:>7.1} s  phase {:>6.3} rad  velocity ({:>8.1}, {:>8.1}, {:>5.1}) m/s",
            s.orbital_phase_rad, s.velocity_mps.x, s.velocity_mps.y, s.velocity_mps.z
        );
    }
    Ok(())
}

fn orbital_period_quarters(cfg: &OrbitConfig) -> Vec<f64> {
    let p = orbit::orbital_period(cfg);
    (0..4).map(|k| p * k as f64 / 4.0).collect()
}
