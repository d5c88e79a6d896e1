//! Follows one random triangle through 60 subdivisions and prints how its
//! scale, flatness and shape evolve.

use polysub::dynamics::run_trajectory;
use polysub::geometry::edges_from_vertices;
use polysub::shapedist::INITIAL_TRIANGLE;
use polysub::{RngStream, SplitSpec};

fn main() -> polysub::Result<()> {
    let initial = edges_from_vertices(&INITIAL_TRIANGLE)?;
    let mut rng = RngStream::from_seed(7);
    let records = run_trajectory(&initial, &SplitSpec::uniform(), 60, &mut rng, 10)?;
    println!("{:>5} {:>10} {:>12} {:>8} {:>8}", "step", "ln M", "flatness", "g", "h");
    for r in &records {
        let (g, h) = r.shape.map_or((f64::NAN, f64::NAN), |s| (s.g, s.h));
        println!("{:>5} {:>10.4} {:>12.3e} {:>8.4} {:>8.2e}", r.step, r.log_m, r.flatness, g, h);
    }
    Ok(())
}
