//! Robust against non-robust downlink precoding as the CSI error grows.

use masc::robust::{Arm, LinkContext};
use masc::scenario::ScenarioConfig;

fn main() -> masc::Result<()> {
    let scene = ScenarioConfig::default();
    let ctx = LinkContext::new(&scene)?;
    let trials = 500;
    println!("{:>4} {:>12} {:>12} {:>10} {:>10}", "u", "robust dB", "plain dB", "C robust", "C plain");
    for u in [0.1, 0.3, 0.5, 0.7] {
        let r = ctx.evaluate(Arm::Robust, u, trials, scene.seed)?;
        let n = ctx.evaluate(Arm::NonRobust, u, trials, scene.seed)?;
        println!(
            "{u:>4.1} {:>12.2} {:>12.2} {:>10.3} {:>10.3}",
            r.mean_sinr_db, n.mean_sinr_db, r.capacity_bps_hz, n.capacity_bps_hz
        );
    }
    Ok(())
}
