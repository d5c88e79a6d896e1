//! Lyapunov spectrum of products of i.i.d. transfer matrices `T`, and the
//! growth rates of polygon observables that it governs.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::dynamics::for_each_step;
use crate::error::{Error, Result};
use crate::geometry::{regular_polygon, EdgeChain};
use crate::matrices::apply_t;
use crate::parallel::map_replicas;
use crate::rng::RngStream;
use crate::splitdist::SplitSpec;
use crate::stats::{MeanSe, OnlineSlope};

/// Draws with `|det T|` below this are rejected and counted.
pub const SINGULAR_DET_THRESHOLD: f64 = 1e-300;

/// Fraction of each run discarded before fitting a rate.
pub const BURN_IN_FRACTION: f64 = 0.1;

pub const MIN_SPECTRUM_STEPS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSpectrum {
    pub d: usize,
    /// Exponents in nats per step, largest first.
    pub mu: Vec<f64>,
    pub se: Vec<f64>,
    pub n_steps: usize,
    pub replicas: usize,
    /// Independent Monte Carlo estimate of `E ln|det T|`.
    pub log_det_mean: f64,
    pub log_det_se: f64,
    /// Across-replica standard error of `sum(mu)`.
    pub sum_se: f64,
    /// `(sum(mu) - log_det_mean) / combined se`.
    pub sum_check_z: f64,
    pub rejected_steps: usize,
}

impl LyapunovSpectrum {
    pub fn sum(&self) -> f64 {
        self.mu.iter().sum()
    }

    pub fn csv_header(&self) -> String {
        let n = self.mu.len();
        let mut cols = vec!["d".to_string(), "spec_digest".into(), "n_steps".into(), "replicas".into()];
        cols.extend((1..=n).map(|j| format!("mu_{j}")));
        cols.extend((1..=n).map(|j| format!("se_{j}")));
        cols.extend(["log_det_mean".into(), "sum_check_z_score".into()]);
        cols.join(",")
    }

    pub fn to_csv_row(&self, spec_digest: &str) -> String {
        let mut fields = vec![
            self.d.to_string(),
            spec_digest.to_string(),
            self.n_steps.to_string(),
            self.replicas.to_string(),
        ];
        fields.extend(self.mu.iter().map(|v| v.to_string()));
        fields.extend(self.se.iter().map(|v| v.to_string()));
        fields.push(self.log_det_mean.to_string());
        fields.push(self.sum_check_z.to_string());
        fields.join(",")
    }
}

/// `ln|prod(1 - xi) - (-1)^d prod(xi)|` from the logs of the proportions.
pub fn log_abs_det_t(ln_xi: &[f64], ln_one_minus: &[f64]) -> f64 {
    let heads: f64 = ln_xi.iter().sum();
    let tails: f64 = ln_one_minus.iter().sum();
    let (hi, lo) = if heads > tails { (heads, tails) } else { (tails, heads) };
    if ln_xi.len() % 2 == 1 {
        hi + (lo - hi).exp().ln_1p()
    } else {
        hi + (-(lo - hi).exp()).ln_1p()
    }
}

/// Orthonormalizes the columns in place (modified Gram–Schmidt, two passes)
/// and returns the diagonal of the triangular factor.
#[allow(clippy::needless_range_loop)]
fn reorthonormalize(cols: &mut [Vec<f64>], diag: &mut [f64]) {
    for j in 0..cols.len() {
        let (done, rest) = cols.split_at_mut(j);
        let v = &mut rest[0];
        for _ in 0..2 {
            for q in done.iter() {
                let c: f64 = q.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= c * qi);
            }
        }
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= r);
        diag[j] = r;
    }
}

struct ReplicaSpectrum {
    mu: Vec<f64>,
    log_det: f64,
    rejected: usize,
}

fn spectrum_replica(
    spec: &SplitSpec,
    d: usize,
    n_steps: usize,
    mut rng: RngStream,
    mut det_rng: RngStream,
) -> Result<ReplicaSpectrum> {
    let n = d - 1;
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut acc = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut xi = vec![0.0; d];
    let (mut ln_xi, mut ln_1m) = (vec![0.0; d], vec![0.0; d]);
    let mut rejected = 0;
    for _ in 0..n_steps {
        spec.fill(&mut rng, &mut xi);
        for (k, x) in xi.iter().enumerate() {
            ln_xi[k] = x.ln();
            ln_1m[k] = (-x).ln_1p();
        }
        if log_abs_det_t(&ln_xi, &ln_1m) < SINGULAR_DET_THRESHOLD.ln() {
            rejected += 1;
            continue;
        }
        for c in cols.iter_mut() {
            apply_t(&xi, c);
        }
        reorthonormalize(&mut cols, &mut diag);
        for (a, r) in acc.iter_mut().zip(&diag) {
            *a += r.ln();
        }
    }
    let accepted = n_steps - rejected;
    if accepted == 0 {
        return Err(Error::Degenerate("every transfer matrix draw was singular".into()));
    }
    let mut log_det = 0.0;
    for _ in 0..n_steps {
        spec.fill_logs(&mut det_rng, &mut ln_xi, &mut ln_1m);
        log_det += log_abs_det_t(&ln_xi, &ln_1m);
    }
    Ok(ReplicaSpectrum {
        mu: acc.iter().map(|a| a / accepted as f64).collect(),
        log_det: log_det / n_steps as f64,
        rejected,
    })
}

/// QR estimate of the full spectrum, one frame per replica.
pub fn estimate_spectrum(
    spec: &SplitSpec,
    d: usize,
    n_steps: usize,
    replicas: usize,
    rng: &mut RngStream,
) -> Result<LyapunovSpectrum> {
    if n_steps < MIN_SPECTRUM_STEPS {
        return Err(Error::Domain(format!("need at least {MIN_SPECTRUM_STEPS} steps, got {n_steps}")));
    }
    if replicas < 2 {
        return Err(Error::Domain("need at least 2 replicas for standard errors".into()));
    }
    spec.check_dimension(d)?;
    let master = rng.next_u64();
    let det_master = rng.next_u64();
    let runs = map_replicas(master, replicas, |i, stream| {
        spectrum_replica(spec, d, n_steps, stream, RngStream::for_replica(det_master, i as u64))
    })?;
    let n = d - 1;
    let per_exponent: Vec<MeanSe> = (0..n)
        .map(|j| MeanSe::from_samples(&runs.iter().map(|r| r.mu[j]).collect::<Vec<_>>()))
        .collect();
    let sums = MeanSe::from_samples(&runs.iter().map(|r| r.mu.iter().sum()).collect::<Vec<f64>>());
    let log_det = MeanSe::from_samples(&runs.iter().map(|r| r.log_det).collect::<Vec<_>>());
    Ok(LyapunovSpectrum {
        d,
        mu: per_exponent.iter().map(|m| m.mean).collect(),
        se: per_exponent.iter().map(|m| m.se).collect(),
        n_steps,
        replicas,
        log_det_mean: log_det.mean,
        log_det_se: log_det.se,
        sum_se: sums.se,
        sum_check_z: sums.z_score(&log_det),
        rejected_steps: runs.iter().map(|r| r.rejected).sum(),
    })
}

/// Slope of `ln M_n` over the second half of each run, averaged over
/// replicas, starting from the regular `d`-gon.
pub fn estimate_top_exponent_from_sides(
    spec: &SplitSpec,
    d: usize,
    n_steps: usize,
    replicas: usize,
    rng: &mut RngStream,
) -> Result<MeanSe> {
    top_exponent_from_sides_with(&regular_polygon(d)?, spec, n_steps, replicas, rng)
}

pub fn top_exponent_from_sides_with(
    initial: &EdgeChain,
    spec: &SplitSpec,
    n_steps: usize,
    replicas: usize,
    rng: &mut RngStream,
) -> Result<MeanSe> {
    let master = rng.next_u64();
    let start = n_steps / 2;
    let slopes = map_replicas(master, replicas, |_, mut stream| {
        let mut fit = OnlineSlope::default();
        for_each_step(initial, spec, n_steps, &mut stream, |step, chain| {
            if step >= start {
                fit.push(step as f64, chain.log_max_side());
            }
        })?;
        Ok(fit.slope())
    })?;
    Ok(MeanSe::from_samples(&slopes))
}

/// Decay rates of flatness and of the x/y angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatnessRate {
    /// Slope of `ln h_n`; triangles only.
    pub h_slope: Option<MeanSe>,
    /// Slope of `ln delta(x_n, y_n)`.
    pub delta_slope: MeanSe,
    /// First step entering the fit.
    pub fit_from: usize,
}

/// Slopes of `ln h_n` (d = 3) and `ln delta_xy` after a
/// [`BURN_IN_FRACTION`] burn-in, starting from the regular `d`-gon.
pub fn estimate_flatness_rate(
    spec: &SplitSpec,
    d: usize,
    n_steps: usize,
    replicas: usize,
    rng: &mut RngStream,
) -> Result<FlatnessRate> {
    flatness_rate_with(&regular_polygon(d)?, spec, n_steps, replicas, rng)
}

pub fn flatness_rate_with(
    initial: &EdgeChain,
    spec: &SplitSpec,
    n_steps: usize,
    replicas: usize,
    rng: &mut RngStream,
) -> Result<FlatnessRate> {
    let master = rng.next_u64();
    let fit_from = (n_steps as f64 * BURN_IN_FRACTION).round() as usize;
    let triangle = initial.d() == 3;
    let slopes = map_replicas(master, replicas, |_, mut stream| {
        let (mut h, mut delta) = (OnlineSlope::default(), OnlineSlope::default());
        for_each_step(initial, spec, n_steps, &mut stream, |step, chain| {
            if step >= fit_from {
                if triangle {
                    h.push(step as f64, chain.log_flatness());
                }
                delta.push(step as f64, chain.log_delta_xy());
            }
        })?;
        Ok((h.slope(), delta.slope()))
    })?;
    let (h, delta): (Vec<f64>, Vec<f64>) = slopes.into_iter().unzip();
    Ok(FlatnessRate {
        h_slope: triangle.then(|| MeanSe::from_samples(&h)),
        delta_slope: MeanSe::from_samples(&delta),
        fit_from,
    })
}

pub const MIN_LOG_DET_SAMPLES: usize = 10_000;

/// Monte Carlo `E ln|det T|`, computed from the logs of the proportions so
/// that heavy-tailed draws are not lost to underflow.
pub fn expected_log_abs_det(spec: &SplitSpec, d: usize, samples: usize, rng: &mut RngStream) -> Result<MeanSe> {
    if samples < MIN_LOG_DET_SAMPLES {
        return Err(Error::Domain(format!("need at least {MIN_LOG_DET_SAMPLES} samples, got {samples}")));
    }
    spec.check_dimension(d)?;
    let (mut ln_xi, mut ln_1m) = (vec![0.0; d], vec![0.0; d]);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let mut finite = 0usize;
    for _ in 0..samples {
        spec.fill_logs(rng, &mut ln_xi, &mut ln_1m);
        let v = log_abs_det_t(&ln_xi, &ln_1m);
        if v.is_finite() {
            sum += v;
            sum_sq += v * v;
            finite += 1;
        } else {
            return Ok(MeanSe {
                mean: f64::NEG_INFINITY,
                se: f64::NAN,
                n: samples,
            });
        }
    }
    let n = finite as f64;
    let mean = sum / n;
    let var = (sum_sq - n * mean * mean) / (n - 1.0);
    Ok(MeanSe {
        mean,
        se: (var.max(0.0) / n).sqrt(),
        n: samples,
    })
}

/// Estimates of `E ln|det T|` at growing sample sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogDetDivergence {
    pub estimates: Vec<MeanSe>,
    /// Each estimate lies below the previous one by more than
    /// `z_threshold` combined standard errors.
    pub diverging: bool,
    pub z_scores: Vec<f64>,
    pub z_threshold: f64,
}

/// Independent estimates at each size in `sample_sizes`; flags divergence
/// when they keep dropping by more than `z_threshold` standard errors.
pub fn log_det_divergence_check(
    spec: &SplitSpec,
    d: usize,
    sample_sizes: &[usize],
    z_threshold: f64,
    rng: &mut RngStream,
) -> Result<LogDetDivergence> {
    let estimates = sample_sizes
        .iter()
        .map(|&n| expected_log_abs_det(spec, d, n, rng))
        .collect::<Result<Vec<_>>>()?;
    let z_scores: Vec<f64> = estimates.windows(2).map(|w| w[0].z_score(&w[1])).collect();
    Ok(LogDetDivergence {
        diverging: !z_scores.is_empty() && z_scores.iter().all(|z| *z > z_threshold),
        estimates,
        z_scores,
        z_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::edges_from_vertices;
    use std::f64::consts::PI;

    fn uniform_mu() -> (f64, f64) {
        let sum = (PI * PI - 24.0) / 9.0;
        let gap = -(PI * PI - 6.0) / 9.0;
        ((sum - gap) / 2.0, (sum + gap) / 2.0)
    }

    #[test]
    fn log_det_matches_closed_form() {
        let mut rng = RngStream::from_seed(3);
        for d in 3..=6 {
            let xi: Vec<f64> = (0..d).map(|_| rng.open01()).collect();
            let ln: Vec<f64> = xi.iter().map(|x| x.ln()).collect();
            let ln1: Vec<f64> = xi.iter().map(|x| (-x).ln_1p()).collect();
            let closed = crate::matrices::det_t_closed_form(&xi).abs().ln();
            assert!((log_abs_det_t(&ln, &ln1) - closed).abs() < 1e-12);
        }
        assert_eq!(log_abs_det_t(&[0.5f64.ln(); 4], &[0.5f64.ln(); 4]), f64::NEG_INFINITY);
    }

    #[test]
    fn uniform_triangle_spectrum() {
        let mut rng = RngStream::from_seed(42);
        let s = estimate_spectrum(&SplitSpec::uniform(), 3, 20_000, 16, &mut rng).unwrap();
        let (mu1, mu2) = uniform_mu();
        assert!((s.mu[0] - mu1).abs() < 0.01, "{:?}", s.mu);
        assert!((s.mu[1] - mu2).abs() < 0.01, "{:?}", s.mu);
        assert!(s.mu[0] > s.mu[1]);
        assert!(s.sum_check_z.abs() < 3.0);
        assert_eq!(s.rejected_steps, 0);
    }

    #[test]
    fn midpoint_spectrum_is_log_half() {
        let spec = SplitSpec::constant(vec![0.5; 3]).unwrap();
        let mut rng = RngStream::from_seed(1);
        let s = estimate_spectrum(&spec, 3, 5000, 2, &mut rng).unwrap();
        for m in &s.mu {
            assert!((m - 0.5f64.ln()).abs() < 1e-2, "{:?}", s.mu);
        }
        assert!((s.sum() - 2.0 * 0.5f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn two_point_top_exponent_is_simple() {
        let spec = SplitSpec::two_point(0.3, 0.7, 0.5).unwrap();
        let mut rng = RngStream::from_seed(2);
        let s = estimate_spectrum(&spec, 3, 20_000, 8, &mut rng).unwrap();
        assert!(s.mu[0] - s.mu[1] > 5.0 * s.se[0].hypot(s.se[1]), "{s:?}");
    }

    #[test]
    fn singular_draws_are_counted() {
        let spec = SplitSpec::constant(vec![0.5; 4]).unwrap();
        let mut rng = RngStream::from_seed(1);
        assert!(estimate_spectrum(&spec, 4, 1000, 2, &mut rng).is_err());
        let mixed = SplitSpec::joint_table(vec![
            crate::splitdist::Atom { xi: vec![0.5; 4], prob: 0.5 },
            crate::splitdist::Atom { xi: vec![0.2, 0.4, 0.6, 0.3], prob: 0.5 },
        ])
        .unwrap();
        let s = estimate_spectrum(&mixed, 4, 1000, 2, &mut rng).unwrap();
        assert!(s.rejected_steps > 800 && s.rejected_steps < 1200);
    }

    #[test]
    fn short_runs_rejected() {
        let mut rng = RngStream::from_seed(1);
        assert!(estimate_spectrum(&SplitSpec::uniform(), 3, 999, 4, &mut rng).is_err());
        assert!(expected_log_abs_det(&SplitSpec::uniform(), 3, 100, &mut rng).is_err());
    }

    #[test]
    fn side_exponent_agrees_with_qr() {
        let mut rng = RngStream::from_seed(9);
        let sides = estimate_top_exponent_from_sides(&SplitSpec::uniform(), 3, 4000, 32, &mut rng).unwrap();
        let (mu1, _) = uniform_mu();
        assert!((sides.mean - mu1).abs() < 0.02, "{sides:?}");
        assert!((sides.mean - mu1).abs() < 3.0 * sides.se + 0.005);
    }

    #[test]
    fn midpoint_sides_halve() {
        let spec = SplitSpec::constant(vec![0.5; 3]).unwrap();
        let mut rng = RngStream::from_seed(1);
        let e = edges_from_vertices(&[[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]]).unwrap();
        let s = top_exponent_from_sides_with(&e, &spec, 200, 2, &mut rng).unwrap();
        assert!((s.mean - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn flatness_rate_uniform_triangle() {
        let mut rng = RngStream::from_seed(11);
        let r = estimate_flatness_rate(&SplitSpec::uniform(), 3, 3000, 32, &mut rng).unwrap();
        let gap = -(PI * PI - 6.0) / 9.0;
        let h = r.h_slope.unwrap();
        assert!((h.mean - gap).abs() < 0.02, "{h:?}");
        assert!(h.z_score(&r.delta_slope).abs() < 3.0);
        assert_eq!(r.fit_from, 300);
    }

    #[test]
    fn rates_are_scale_invariant() {
        let v = [[0.0, 0.0], [1.0, 0.0], [0.3, 0.8]];
        let c = edges_from_vertices(&v).unwrap();
        let doubled = c.rescaled(2f64.ln());
        let spec = SplitSpec::uniform();
        let a = flatness_rate_with(&c, &spec, 500, 4, &mut RngStream::from_seed(5)).unwrap();
        let b = flatness_rate_with(&doubled, &spec, 500, 4, &mut RngStream::from_seed(5)).unwrap();
        assert!((a.h_slope.unwrap().mean - b.h_slope.unwrap().mean).abs() < 1e-12);
        assert!((a.delta_slope.mean - b.delta_slope.mean).abs() < 1e-12);
        let sa = top_exponent_from_sides_with(&c, &spec, 500, 4, &mut RngStream::from_seed(6)).unwrap();
        let sb = top_exponent_from_sides_with(&doubled, &spec, 500, 4, &mut RngStream::from_seed(6)).unwrap();
        assert!((sa.mean - sb.mean).abs() < 1e-12);
    }

    #[test]
    fn uniform_log_det() {
        let mut rng = RngStream::from_seed(13);
        let m = expected_log_abs_det(&SplitSpec::uniform(), 3, 1_000_000, &mut rng).unwrap();
        let exact = (PI * PI - 24.0) / 9.0;
        assert!((m.mean - exact).abs() < 4.0 * m.se, "{m:?}");
        let m4 = expected_log_abs_det(&SplitSpec::uniform(), 4, 100_000, &mut rng).unwrap();
        assert!(m4.mean.is_finite());
    }

    #[test]
    fn heavy_tail_log_det_has_no_finite_floor() {
        let spec = SplitSpec::heavy_tail(0.5).unwrap();
        let mut rng = RngStream::from_seed(17);
        let r = log_det_divergence_check(&spec, 3, &[10_000, 100_000], 5.0, &mut rng).unwrap();
        assert_eq!(r.estimates.len(), 2);
        assert_eq!(r.z_scores.len(), 1);
        assert!(r.estimates.iter().all(|e| e.mean.is_finite()));
    }
}
