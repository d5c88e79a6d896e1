//! QR estimate of the Lyapunov spectrum for uniform splits, d = 3..5.
//! The exponents should sum to E ln|det T|.

use polysub::lyapunov::estimate_spectrum;
use polysub::{RngStream, SplitSpec};

fn main() -> polysub::Result<()> {
    let spec = SplitSpec::uniform();
    let mut rng = RngStream::from_seed(1);
    for d in 3..=5 {
        let s = estimate_spectrum(&spec, d, 20_000, 16, &mut rng)?;
        let mu: Vec<String> = s.mu.iter().zip(&s.se).map(|(m, e)| format!("{m:.4}±{e:.4}")).collect();
        println!("d={d}  mu = [{}]", mu.join(", "));
        println!("      sum {:.4}  E ln|det T| {:.4}  z {:.2}", s.sum(), s.log_det_mean, s.sum_check_z);
        if d >= 4 {
            println!("      gap mu2 - mu1 = {:.4}", s.mu[1] - s.mu[0]);
        }
    }
    Ok(())
}
