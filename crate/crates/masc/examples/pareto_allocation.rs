//! Splits the frame between sensing and downlink along the epsilon-constraint
//! front. Coverage and capacity are taken as given here; `figure_run` computes them.

use masc::allocator::{self, FrameConfig};

fn main() -> masc::Result<()> {
    let frame = FrameConfig {
        t_frame_s: 1.0,
        t_sens_min_s: 0.01,
        t_comm_max_s: 1.0,
    };
    let (eta_star, c_wc) = (0.63, 0.45);
    let etas = allocator::eta_grid(0.05, 0.95, 0.05)?;
    let sweep = allocator::sweep_from_constants(eta_star, c_wc, &etas, &frame)?;
    println!("{:>6} {:>8} {:>10} {:>8} {:>8}  mode", "eta_min", "eta_eff", "C_eff", "t_sens", "t_comm");
    for p in &sweep.front {
        println!(
            "{:>6.2} {:>8.3} {:>10.4} {:>8.3} {:>8.3}  {}",
            p.eta_min_constraint,
            p.eta_eff,
            p.c_eff_bps_hz,
            p.t_sens_s,
            p.t_comm_s,
            p.mode.map_or("", |m| m.label())
        );
    }
    let dropped = sweep.points.iter().filter(|p| !p.feasible).count();
    println!("{dropped} constraint values above full-frame coverage {eta_star} are infeasible");
    Ok(())
}
