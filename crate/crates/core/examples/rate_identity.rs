//! The flatness rate as E ln|det T| minus twice the mean one-step growth of
//! the longest side, evaluated exactly and by Monte Carlo.

use polysub::shapedist::{rate_via_eq_speed, EtaLaw, RateMethod};
use polysub::{RngStream, SplitSpec};

fn main() -> polysub::Result<()> {
    let spec = SplitSpec::uniform();
    let eta = EtaLaw::ClosedForm(1);
    let mut rng = RngStream::from_seed(9);
    let exact = rate_via_eq_speed(&spec, Some(&eta), RateMethod::ClosedForm, &mut rng)?;
    let mc = RateMethod::MonteCarlo {
        zeta_samples_per_point: 20_000,
        log_det_samples: 1_000_000,
    };
    let approx = rate_via_eq_speed(&spec, Some(&eta), mc, &mut rng)?;
    for (name, r) in [("closed form", exact), ("monte carlo", approx)] {
        println!("{name:>12}: E ln|det| {:.5}  zeta {:.5}  rate {:.5}", r.log_det, r.zeta_integral, r.rate);
    }
    Ok(())
}
