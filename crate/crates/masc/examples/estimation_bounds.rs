//! Cramér-Rao bounds for extinction and Doppler against Monte-Carlo
//! maximum-likelihood estimates.

use masc::bounds::{self, FimSpec};

fn main() -> masc::Result<()> {
    let (alpha, f_d, ell) = (1e-7, 812.5, 3e4);
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "SNR dB", "var alpha", "CRLB alpha", "var f_d", "CRLB f_d");
    for snr_db in [0.0, 5.0, 10.0, 20.0] {
        let spec = FimSpec::uniform(masc::db_to_linear(snr_db), 64, ell, 0.016)?;
        let mc = bounds::mc_estimator_variance(alpha, f_d, &spec, 1000, 7)?;
        println!(
            "{snr_db:>6.1} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e}",
            mc.var_alpha,
            bounds::crlb_alpha(&spec),
            mc.var_fd,
            bounds::crlb_doppler(&spec, false)
        );
    }
    let spec = FimSpec::uniform(10.0, 64, ell, 0.016)?;
    println!("analytic FIM\n{}", bounds::fim_joint(&spec));
    println!("finite-difference FIM\n{}", bounds::fim_numerical(&spec, alpha, f_d, 1e-4));
    Ok(())
}
