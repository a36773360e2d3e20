//! Hybrid sensing precoder against the single-beam digital reference.
//! Runs on a coarse 32x32 grid to stay quick; pass `full` for 64x64.

use masc::channel::DustPreset;
use masc::scenario::ScenarioConfig;
use masc::sensing::{self, SensingProblem};

fn main() -> masc::Result<()> {
    let mut scene = ScenarioConfig::default().with_dust(DustPreset::Severe);
    if std::env::args().nth(1).as_deref() != Some("full") {
        scene.grid.n_theta = 32;
        scene.grid.n_phi = 32;
    }
    let problem = SensingProblem::new(&scene)?;
    let (_, digital) = sensing::fully_digital_baseline(&problem);
    println!("digital baseline coverage {:.3}", digital.eta_cov);

    for n_rf in [4, 8, 16] {
        let report = sensing::hybrid_precoding_design(&problem, n_rf, n_rf, scene.sensing.max_iter, scene.sensing.delta)?;
        let trace: Vec<String> = report.history.iter().map(|r| format!("{:.3}", r.eta_cov)).collect();
        println!(
            "N_RF = {n_rf:>2}: coverage {:.3} after {} accepted steps (converged {}), trace {}",
            report.map.eta_cov,
            report.history.len() - 1,
            report.converged,
            trace.join(" "),
        );
    }
    Ok(())
}
