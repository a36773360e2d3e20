//! Reads echo parameters off a sensing realization and maps them to the
//! downlink, with and without estimation noise.

use masc::channel;
use masc::mapping::{self, DopplerMapping};
use masc::orbit;
use masc::scenario::ScenarioConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> masc::Result<()> {
    let scene = ScenarioConfig::default();
    let t = 120.0;
    let echo = channel::sensing_channel(&scene, t)?;
    let truth = channel::comm_channel(&scene, t, 1)?;
    let state = orbit::state_at(&scene.orbit, t);

    let clean = mapping::observe_echo::<ChaCha8Rng>(&scene, &echo, None)?;
    let est = mapping::map_environment(&scene, &state, &clean, 0.0, DopplerMapping::Consistent)?;
    println!("downlink Doppler: mapped {:.6} Hz, direct {:.6} Hz", est.doppler_comm_hz, truth.main_doppler_hz);
    println!("main delay: mapped {:.9e} s, direct {:.9e} s", est.delays.0, truth.main_delay_s);
    let printed = mapping::map_environment(&scene, &state, &clean, 0.0, DopplerMapping::Printed)?;
    println!("alternative Doppler rule gives {:.3} Hz", printed.doppler_comm_hz);

    let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
    let noisy = mapping::observe_echo(&scene, &echo, Some(&mut rng))?;
    for u in [0.0, 0.3, 0.6] {
        let est = mapping::map_environment(&scene, &state, &noisy, u, DopplerMapping::Consistent)?;
        let (lo, hi) = est.alpha_interval[0];
        println!(
            "u = {u:.1}: alpha_hat {:.4e} dB/km, interval [{lo:.4e}, {hi:.4e}], true {:.4e}",
            est.alpha_hat[0], truth.alpha_db_km
        );
    }
    for (k, v) in est.to_record().into_iter().take(8) {
        println!("  {k} = {v}");
    }
    Ok(())
}
