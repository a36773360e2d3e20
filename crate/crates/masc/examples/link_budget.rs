//! Dust extinction, path loss and the composite sensing/downlink channels
//! toward the ground node for each storm preset.

use masc::channel::{self, DustPreset};
use masc::scenario::ScenarioConfig;
use masc::{linear_to_db, orbit};

fn main() -> masc::Result<()> {
    let base = ScenarioConfig::default();
    let lambda = base.radio.wavelength();
    let d = orbit::slant_range(&base.orbit, base.ground.theta_rad)?;
    println!("carrier {:.2} GHz, slant range to node {:.1} km", base.radio.carrier_hz / 1e9, d / 1e3);
    println!("one-way FSPL {:.1} dB, two-way {:.1} dB", linear_to_db(channel::fspl_one_way(d, lambda)), linear_to_db(channel::fspl_two_way(d, lambda)));

    for preset in DustPreset::STORMS {
        let s = base.with_dust(preset);
        let alpha = channel::dust_alpha(&s.dust, lambda);
        let echo = channel::sensing_channel(&s, 0.0)?;
        let down = channel::comm_channel(&s, 0.0, s.seed)?;
        println!(
            "{:<7} alpha {alpha:.3e} dB/km  echo |h| {:.3e}  Doppler {:>8.1} Hz | downlink |h| {:.3e}  Doppler {:>8.1} Hz",
            preset.name(),
            echo.los_coeff.norm(),
            echo.main_doppler_hz,
            down.total().norm(),
            down.main_doppler_hz,
        );
    }
    Ok(())
}
