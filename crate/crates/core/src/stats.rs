//! Sample summaries shared by the Monte Carlo estimators.

use serde::{Deserialize, Serialize};

/// A sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl MeanSe {
    /// Mean and `sd / sqrt(n)` with the unbiased sample variance.
    /// A single observation has `se = NaN`.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
        Self {
            mean,
            se: (var / n as f64).sqrt(),
            n,
        }
    }

    /// Standard error of the difference of two independent estimates.
    pub fn combined_se(&self, other: &MeanSe) -> f64 {
        self.se.hypot(other.se)
    }

    /// `(self - other) / combined_se`.
    pub fn z_score(&self, other: &MeanSe) -> f64 {
        (self.mean - other.mean) / self.combined_se(other)
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Running least-squares fit of `y` against `x`.
#[derive(Clone, Copy, Debug, Default)]
pub struct OnlineSlope {
    n: f64,
    mx: f64,
    my: f64,
    sxx: f64,
    sxy: f64,
}

impl OnlineSlope {
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1.0;
        let dx = x - self.mx;
        self.mx += dx / self.n;
        self.my += (y - self.my) / self.n;
        self.sxx += dx * (x - self.mx);
        self.sxy += dx * (y - self.my);
    }

    pub fn slope(&self) -> f64 {
        self.sxy / self.sxx
    }

    pub fn len(&self) -> usize {
        self.n as usize
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_line() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
        assert!((ols_slope(&xs, &ys) + 0.5).abs() < 1e-14);
    }

    #[test]
    fn mean_se_small() {
        let m = MeanSe::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn online_slope_matches_batch() {
        let xs: Vec<f64> = (0..50).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x * 0.37).sin() + 0.1 * x).collect();
        let mut acc = OnlineSlope::default();
        xs.iter().zip(&ys).for_each(|(x, y)| acc.push(*x, *y));
        assert!((acc.slope() - ols_slope(&xs, &ys)).abs() < 1e-12);
        assert_eq!(acc.len(), 50);
    }
}
