//! Checks that flag when the theory does not apply: infinite log moments of
//! heavy-tailed splits and the algebraic witnesses behind the spectral gap.

use polysub::lyapunov::log_det_divergence_check;
use polysub::matrices::{build_contraction_witness_odd, build_q, verify_eigenstructure};
use polysub::splitdist::log_moment_diagnostics;
use polysub::{RngStream, SplitSpec};

fn main() -> polysub::Result<()> {
    let mut rng = RngStream::from_seed(13);
    for spec in [SplitSpec::uniform(), SplitSpec::heavy_tail(0.5)?] {
        let m = log_moment_diagnostics(&spec, 100_000, &mut rng)?;
        let div = log_det_divergence_check(&spec, 3, &[10_000, 100_000, 1_000_000], 5.0, &mut rng)?;
        let means: Vec<String> = div.estimates.iter().map(|e| format!("{:.3}", e.mean)).collect();
        println!("{}: E|ln xi| ~ {:.3}  ln|det| estimates [{}]  diverging {}", spec.label(), m.log_xi.mean, means.join(", "), div.diverging);
    }

    let eig = verify_eigenstructure(0.3, 5, 1e-12)?;
    println!("eigenstructure d=5 passed {} (residual {:.1e})", eig.passed, eig.max_residual);
    let q = build_q(0.5, 0.25)?;
    println!("Q(1/2, 1/4): t = {}, closed form matches product to {:.1e}", q.t, (&q.closed_form - &q.normalized_product).abs().max());
    let w = build_contraction_witness_odd(5, 0.3, 0.6)?;
    println!("odd witness d=5 deviation {:.1e}", (&w.closed_form - &w.product).abs().max());
    Ok(())
}
