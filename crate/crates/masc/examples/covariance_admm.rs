//! Capacity-optimal transmit covariance by ADMM on a small MIMO channel,
//! checked against water-filling over the channel's singular values.

use masc::linalg::{self, CMatrix};
use masc::robust;
use masc::Complex64;

fn water_fill(gains: &[f64], budget: f64) -> Vec<f64> {
    let mut active: Vec<f64> = gains.iter().copied().filter(|&g| g > 0.0).collect();
    active.sort_by(|a, b| b.total_cmp(a));
    while !active.is_empty() {
        let level = (budget + active.iter().map(|g| 1.0 / g).sum::<f64>()) / active.len() as f64;
        if level > 1.0 / active[active.len() - 1] {
            return gains.iter().map(|&g| if g > 0.0 { (level - 1.0 / g).max(0.0) } else { 0.0 }).collect();
        }
        active.pop();
    }
    vec![0.0; gains.len()]
}

fn main() -> masc::Result<()> {
    let h = CMatrix::from_row_slice(
        2,
        3,
        &[
            Complex64::new(1.0, 0.2),
            Complex64::new(0.3, -0.4),
            Complex64::new(0.0, 0.1),
            Complex64::new(-0.2, 0.5),
            Complex64::new(0.7, 0.0),
            Complex64::new(0.4, 0.4),
        ],
    );
    let (p2, noise) = (3.0, 0.5);
    let res = robust::admm_capacity_covariance(&h, p2, noise, 1.0, 2000, 1e-9)?;
    let admm = linalg::log2_det_identity_plus(&(&h * &res.covariance * h.adjoint() / Complex64::new(noise, 0.0)));

    let (vals, _) = linalg::hermitian_eigen(&(h.adjoint() * &h));
    let gains: Vec<f64> = vals.iter().map(|v| v / noise).collect();
    let powers = water_fill(&gains, p2);
    let wf: f64 = gains.iter().zip(&powers).map(|(g, p)| (1.0 + g * p).log2()).sum();

    println!("ADMM: {:.9} bps/Hz in {} iterations (converged {})", admm, res.iterations, res.converged);
    println!("water-filling: {wf:.9} bps/Hz");
    for d in res.history.iter().step_by(res.history.len().div_ceil(8).max(1)) {
        println!("  it {:>4}  primal {:.2e}  dual {:.2e}  objective {:.6}", d.iteration, d.primal_residual, d.dual_residual, d.objective);
    }
    Ok(())
}
