//! Solves the fixed-point equation for the middle-point density on a grid and
//! compares it with the closed form phi_n for Beta(n, n) splits.

use polysub::shapedist::{phi_closed_form, solve_invariant_density};
use polysub::SplitSpec;

fn main() -> polysub::Result<()> {
    for n in 1..=3u32 {
        let spec = SplitSpec::beta(n as f64, n as f64)?;
        let grid = solve_invariant_density(&spec, 101)?;
        let err = grid.max_abs_diff(|z| phi_closed_form(n, z).unwrap());
        let mid = grid.values[grid.values.len() / 2];
        println!("Beta({n},{n}): phi(1/2) = {mid:.5}  sup error {err:.2e}  mass {:.6}", grid.integral());
    }
    Ok(())
}
