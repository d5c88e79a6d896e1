//! Exponential decay rate of triangle flatness under uniform splits,
//! compared with the exact value (6 - pi^2) / 9.

use polysub::lyapunov::estimate_flatness_rate;
use polysub::{RngStream, SplitSpec};

fn main() -> polysub::Result<()> {
    let mut rng = RngStream::from_seed(3);
    let rate = estimate_flatness_rate(&SplitSpec::uniform(), 3, 3000, 64, &mut rng)?;
    let exact = (6.0 - std::f64::consts::PI.powi(2)) / 9.0;
    let h = rate.h_slope.expect("triangles report a flatness slope");
    println!("fit from step {}", rate.fit_from);
    println!("ln h slope     {:.4} ± {:.4}", h.mean, h.se);
    println!("ln delta slope {:.4} ± {:.4}", rate.delta_slope.mean, rate.delta_slope.se);
    println!("exact          {exact:.4}");
    Ok(())
}
