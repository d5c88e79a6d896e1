//! Shape of a random triangle after many subdivisions. For uniform splits
//! 2g - 1 is uniform on (0, 1); for Beta(3,3) it follows the folded law.

use polysub::shapedist::{eta_histogram, folded_phi_cdf, histogram, ks_distance, phi_cdf};
use polysub::{RngStream, SplitSpec};

fn main() -> polysub::Result<()> {
    let mut rng = RngStream::from_seed(5);
    let uniform = eta_histogram(&SplitSpec::uniform(), 20_000, 200, &mut rng)?;
    println!("uniform: KS vs uniform {:.4}", ks_distance(&uniform, |u| u)?);

    let beta = eta_histogram(&SplitSpec::beta(3.0, 3.0)?, 20_000, 200, &mut rng)?;
    println!("beta(3,3): KS vs phi_3 {:.4}", ks_distance(&beta, |u| phi_cdf(3, u).unwrap())?);
    println!("beta(3,3): KS vs folded phi_3 {:.4}", ks_distance(&beta, |u| folded_phi_cdf(3, u).unwrap())?);
    for bin in histogram(&beta, 10) {
        println!("{:>6.2} {:>6.2} {}", bin.left, bin.right, "#".repeat(bin.count / 100));
    }
    Ok(())
}
