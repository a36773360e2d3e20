//! Runs one figure end to end from a config string and prints the manifest.
//! Uses a reduced scene so it finishes in seconds.

use std::path::PathBuf;

use masc::config;
use masc::figures::{self, FigureId};

const CONFIG: &str = "\
preset = dust_medium
seed = 7
grid.n_theta = 16
grid.n_phi = 16
comm.mc_trials = 200
";

fn main() -> masc::Result<()> {
    let figure: FigureId = std::env::args().nth(1).as_deref().unwrap_or("pareto_fronts").parse()?;
    let scene = config::parse_config(CONFIG)?;
    scene.validate()?;
    let out = PathBuf::from(std::env::args().nth(2).unwrap_or_else(|| "target/figure_run".into()));
    let run = figures::run_figure(&scene, figure, &out, 2)?;
    for f in &run.files {
        println!("wrote {}", f.display());
    }
    println!("{}", std::fs::read_to_string(out.join("manifest.json"))?);
    Ok(())
}
