//! Shape distribution of random triangles.
//!
//! Once a triangle is nearly flat, its three vertices project to three points
//! on a line and one subdivision acts on the relative position of the middle
//! point. That one-dimensional chain has transition CDF [`transition_cdf`]
//! and invariant density `phi`, which is also the law of `2g - 1` in the
//! limit.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::dynamics::for_each_step;
use crate::error::{Error, Result};
use crate::geometry::edges_from_vertices;
use crate::lyapunov::expected_log_abs_det;
use crate::parallel::map_replicas;
use crate::quadrature::{integrate_adaptive, GaussLegendre};
use crate::rng::RngStream;
use crate::splitdist::{SplitKind, SplitSpec};
use crate::stats::MeanSe;

/// Starting triangle for shape-distribution runs.
pub const INITIAL_TRIANGLE: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.3, 0.8]];

/// `phi_n(z) = scale * sum_k coef[k] (z (1 - z))^k`.
fn phi_coefficients(n: u32) -> Result<(f64, &'static [f64])> {
    Ok(match n {
        1 => (1.0, &[1.0]),
        2 => (6.0 / 7.0, &[1.0, 1.0]),
        3 => (30.0 / 143.0, &[4.0, 4.0, 3.0]),
        4 => (140.0 / 4199.0, &[25.0, 25.0, 22.0, 13.0]),
        5 => (
            6174.0 / 7429.0,
            &[1.0, 1.0, 13.0 / 14.0, 5.0 / 7.0, 17.0 / 49.0],
        ),
        _ => return Err(Error::Domain(format!("closed form known for n = 1..5, got {n}"))),
    })
}

/// Invariant density of the middle-point chain for Beta(n, n) proportions.
pub fn phi_closed_form(n: u32, z: f64) -> Result<f64> {
    let (scale, coef) = phi_coefficients(n)?;
    let w = z * (1.0 - z);
    Ok(scale * coef.iter().rev().fold(0.0, |acc, c| acc * w + c))
}

/// `int_0^z phi_n`.
pub fn phi_cdf(n: u32, z: f64) -> Result<f64> {
    let (scale, coef) = phi_coefficients(n)?;
    let z = z.clamp(0.0, 1.0);
    // (t - t^2)^k = sum_m C(k,m) (-1)^m t^(k+m)
    let mut total = 0.0;
    for (k, c) in coef.iter().enumerate() {
        let mut binom = 1.0;
        for m in 0..=k {
            let p = (k + m + 1) as i32;
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            total += c * sign * binom * z.powi(p) / p as f64;
            binom = binom * (k - m) as f64 / (m + 1) as f64;
        }
    }
    Ok(scale * total)
}

/// Law of `|2M - 1|` when the middle point `M` has density `phi_n`.
pub fn folded_phi_cdf(n: u32, u: f64) -> Result<f64> {
    let u = u.clamp(0.0, 1.0);
    Ok(phi_cdf(n, 0.5 * (1.0 + u))? - phi_cdf(n, 0.5 * (1.0 - u))?)
}

/// One move of the middle-point chain: the points `z xi1`, `xi2` and
/// `z + (1 - z) xi3` are sorted and the middle one's relative position returned.
pub fn middle_point_chain_step(z: f64, xi1: f64, xi2: f64, xi3: f64) -> f64 {
    let mut y = [z * xi1, xi2, z + (1.0 - z) * xi3];
    y.sort_by(f64::total_cmp);
    (y[1] - y[0]) / (y[2] - y[0])
}

/// A marginal density with `p(x) = p(1 - x)` and its distribution function.
#[derive(Clone, Debug)]
pub struct SymmetricDensity {
    spec: SplitSpec,
    /// Integer Beta exponents for the polynomial fast path.
    poly: Option<(i32, f64)>,
}

impl SymmetricDensity {
    pub fn new(spec: &SplitSpec) -> Result<Self> {
        if spec.pdf(0.5).is_none() || !spec.is_symmetric() {
            return Err(Error::Domain(format!(
                "the transition kernel needs a symmetric marginal density, got {}",
                spec.label()
            )));
        }
        let poly = match spec.kind() {
            SplitKind::Uniform => Some((0, 1.0)),
            SplitKind::Beta { alpha, .. } if alpha.fract() == 0.0 && *alpha <= 64.0 => {
                Some((*alpha as i32 - 1, spec.pdf(0.5).unwrap() * 4f64.powi(*alpha as i32 - 1)))
            }
            _ => None,
        };
        Ok(Self {
            spec: spec.clone(),
            poly,
        })
    }

    #[inline]
    pub fn pdf(&self, x: f64) -> f64 {
        if !(x > 0.0 && x < 1.0) {
            return 0.0;
        }
        match self.poly {
            Some((k, norm)) => norm * (x * (1.0 - x)).powi(k),
            None => self.spec.pdf(x).unwrap(),
        }
    }

    #[inline]
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            self.spec.cdf(x).unwrap()
        }
    }

    pub fn spec(&self) -> &SplitSpec {
        &self.spec
    }
}

/// Number of Gauss–Legendre nodes per axis in the kernel integrals.
pub const KERNEL_NODES: usize = 32;

/// Evaluates the transition CDF `P(R < z | x)` of the middle-point chain.
#[derive(Clone, Debug)]
pub struct KernelIntegrator {
    density: SymmetricDensity,
    rule: GaussLegendre,
}

impl KernelIntegrator {
    pub fn new(spec: &SplitSpec) -> Result<Self> {
        Ok(Self {
            density: SymmetricDensity::new(spec)?,
            rule: GaussLegendre::new(KERNEL_NODES),
        })
    }

    pub fn cdf(&self, z: f64, x: f64) -> f64 {
        if z <= 0.0 {
            0.0
        } else if z >= 1.0 {
            1.0
        } else if z < x {
            self.below(z, x)
        } else {
            // Mirror image u -> 1 - u of the chain.
            1.0 - self.below(1.0 - z, 1.0 - x)
        }
        .clamp(0.0, 1.0)
    }

    /// `I1(z, x) + I2(z, x)` for `z < x`.
    fn below(&self, z: f64, x: f64) -> f64 {
        self.middle_below_apex(z, x) + self.middle_above_apex(z, x)
    }

    /// Both lower points left of `x`: the point on the right side is the
    /// largest. Inner integral over the middle point in closed form.
    fn middle_below_apex(&self, z: f64, x: f64) -> f64 {
        let p = &self.density;
        // ∫_{y1}^{u} [p(y1/x) p(y2) + p(y2/x) p(y1)] / x dy2
        let inner = |y1: f64, u: f64| {
            p.pdf(y1 / x) / x * (p.cdf(u) - p.cdf(y1)) + p.pdf(y1) * (p.cdf(u / x) - p.cdf(y1 / x))
        };
        let mut total = 0.0;
        for (x3, w3) in self.rule.on(x, 1.0) {
            let right = p.pdf((x3 - x) / (1.0 - x)) / (1.0 - x);
            if right == 0.0 {
                continue;
            }
            let lo = (x - z * x3) / (1.0 - z);
            let near: f64 = self.rule.on(lo, x).map(|(y1, w)| w * inner(y1, x)).sum();
            let far: f64 = self
                .rule
                .on(0.0, lo)
                .map(|(y1, w)| w * inner(y1, z * x3 + (1.0 - z) * y1))
                .sum();
            total += w3 * right * (near + far);
        }
        total
    }

    /// The free point lies right of `x`. Inner integral over the largest
    /// point in closed form.
    fn middle_above_apex(&self, z: f64, x: f64) -> f64 {
        let p = &self.density;
        let mut total = 0.0;
        for (x1, w1) in self.rule.on((x - z) / (1.0 - z), x) {
            let left = p.pdf(x1 / x) / x;
            if left == 0.0 {
                continue;
            }
            let top = (1.0 - z) * x1 + z;
            let inner: f64 = self
                .rule
                .on(x, top)
                .map(|(y2, w)| {
                    let lo = (y2 - (1.0 - z) * x1) / z;
                    let v = p.pdf(y2) * (1.0 - p.cdf((lo - x) / (1.0 - x)))
                        + p.pdf((y2 - x) / (1.0 - x)) / (1.0 - x) * (1.0 - p.cdf(lo));
                    w * v
                })
                .sum();
            total += w1 * left * inner;
        }
        total
    }
}

/// `P(R < z | x)` for the middle-point chain with symmetric marginal `spec`.
pub fn transition_cdf(z: f64, x: f64, spec: &SplitSpec) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("x = {x} not in (0,1)")));
    }
    Ok(KernelIntegrator::new(spec)?.cdf(z, x))
}

/// A density sampled at the centres of `N` equal cells of (0, 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DensityGrid {
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Self {
        let nodes: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let values = nodes.iter().map(|z| f(*z)).collect();
        Self {
            nodes,
            values,
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn uniform(n: usize) -> Self {
        Self::from_fn(n, |_| 1.0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    fn normalize(&mut self) {
        let s = self.integral();
        self.values.iter_mut().for_each(|v| *v /= s);
    }

    /// Distribution function of the piecewise-constant density.
    pub fn cdf(&self, z: f64) -> f64 {
        let n = self.len();
        let t = (z.clamp(0.0, 1.0) * n as f64).min(n as f64);
        let full = (t.floor() as usize).min(n);
        let mut acc: f64 = self.values[..full].iter().sum::<f64>() / n as f64;
        if full < n {
            acc += self.values[full] * (t - full as f64) / n as f64;
        }
        acc
    }

    pub fn max_abs_diff(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.values)
            .map(|(z, v)| (v - f(*z)).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("z,phi\n");
        for (z, v) in self.nodes.iter().zip(&self.values) {
            out.push_str(&format!("{z},{v}\n"));
        }
        out
    }
}

/// The middle-point kernel discretized on a cell grid:
/// `mass[i][j] = P(next point in cell i | current point at centre j)`.
#[derive(Clone, Debug)]
pub struct TransitionKernel {
    n: usize,
    mass: Vec<f64>,
}

pub const MIN_GRID_SIZE: usize = 101;
pub const DENSITY_TOLERANCE: f64 = 1e-6;
pub const MAX_SWEEPS: usize = 1000;

impl TransitionKernel {
    pub fn new(spec: &SplitSpec, grid_size: usize) -> Result<Self> {
        if grid_size < MIN_GRID_SIZE {
            return Err(Error::Domain(format!("grid needs at least {MIN_GRID_SIZE} cells, got {grid_size}")));
        }
        let kernel = KernelIntegrator::new(spec)?;
        let n = grid_size;
        let edge = |k: usize| k as f64 / n as f64;
        let centre = |j: usize| (j as f64 + 0.5) / n as f64;
        // below[k][j] = P(R < e_k | x_j) for e_k < x_j, i.e. k <= j.
        let mut below = vec![0.0; (n + 1) * n];
        for j in 0..n {
            for k in 1..=j {
                below[k * n + j] = kernel.below(edge(k), centre(j)).clamp(0.0, 1.0);
            }
        }
        let cdf = |k: usize, j: usize| -> f64 {
            if k == 0 {
                0.0
            } else if k == n {
                1.0
            } else if k <= j {
                below[k * n + j]
            } else {
                // e_k > x_j mirrors to e_{n-k} < x_{n-1-j}.
                1.0 - below[(n - k) * n + (n - 1 - j)]
            }
        };
        let mut mass = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                mass[i * n + j] = (cdf(i + 1, j) - cdf(i, j)).max(0.0);
            }
        }
        Ok(Self { n, mass })
    }

    pub fn grid_size(&self) -> usize {
        self.n
    }

    /// One application of the kernel to a density on the same grid.
    pub fn apply(&self, density: &DensityGrid) -> Result<DensityGrid> {
        if density.len() != self.n {
            return Err(Error::Dimension(format!("grid of {} cells, kernel of {}", density.len(), self.n)));
        }
        let n = self.n;
        let src: Vec<f64> = density
            .values
            .iter()
            .zip(&density.weights)
            .map(|(v, w)| v * w)
            .collect();
        let mut out = DensityGrid::uniform(n);
        for i in 0..n {
            let row = &self.mass[i * n..(i + 1) * n];
            out.values[i] = row.iter().zip(&src).map(|(m, s)| m * s).sum::<f64>() * n as f64;
        }
        out.normalize();
        Ok(out)
    }

    /// Fixed-point iteration from `initial` until the sup-norm change drops
    /// below `tol`. Returns the density and the number of sweeps.
    pub fn solve(&self, initial: &DensityGrid, tol: f64, max_sweeps: usize) -> Result<(DensityGrid, usize)> {
        let mut cur = initial.clone();
        cur.normalize();
        let mut change = f64::INFINITY;
        for sweep in 1..=max_sweeps {
            let next = self.apply(&cur)?;
            change = next
                .values
                .iter()
                .zip(&cur.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            cur = next;
            if change < tol {
                return Ok((cur, sweep));
            }
        }
        Err(Error::NotConverged {
            iterations: max_sweeps,
            residual: change,
        })
    }
}

/// Invariant density of the middle-point chain, from the uniform start.
pub fn solve_invariant_density(spec: &SplitSpec, grid_size: usize) -> Result<DensityGrid> {
    let kernel = TransitionKernel::new(spec, grid_size)?;
    Ok(kernel.solve(&DensityGrid::uniform(grid_size), DENSITY_TOLERANCE, MAX_SWEEPS)?.0)
}

/// Expected log of the longest side after one step from the flat triangle
/// `(0,0), (1,0), (x,0)`, uniform proportions.
pub fn zeta_uniform_closed_form(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("x = {x} not in (0,1)")));
    }
    let num = x * (2.0 * x * x * x.ln() - 5.0 * x + 5.0) - 2.0 * (x - 1.0).powi(3) * (-x).ln_1p();
    Ok(num / (6.0 * (x - 1.0) * x))
}

/// `ln` of the longest side after one subdivision of the flat triangle with
/// vertices `0, 1, x` on a line.
pub fn flat_step_log_max_side(x: f64, xi: &[f64]) -> f64 {
    let a = xi[0];
    let b = 1.0 + xi[1] * (x - 1.0);
    let c = x * (1.0 - xi[2]);
    (a.max(b).max(c) - a.min(b).min(c)).ln()
}

/// Monte Carlo estimate of the expected log longest side after one step
/// from the flat triangle `0, 1, x`.
pub fn zeta_mc_oracle(x: f64, spec: &SplitSpec, samples: usize, rng: &mut RngStream) -> Result<MeanSe> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("x = {x} not in (0,1)")));
    }
    if samples < 2 {
        return Err(Error::Domain("need at least 2 samples".into()));
    }
    spec.check_dimension(3)?;
    let mut xi = [0.0; 3];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        spec.fill(rng, &mut xi);
        let v = flat_step_log_max_side(x, &xi);
        sum += v;
        sum_sq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(MeanSe {
        mean,
        se: (var / n).sqrt(),
        n: samples,
    })
}

/// Final `2g - 1` of independent triangle trajectories from [`INITIAL_TRIANGLE`].
pub fn eta_histogram(spec: &SplitSpec, replicas: usize, steps_per_replica: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    let initial = edges_from_vertices(&INITIAL_TRIANGLE)?;
    let master = rng.next_u64();
    map_replicas(master, replicas, |_, mut stream| {
        let last = for_each_step(&initial, spec, steps_per_replica, &mut stream, |_, _| {})?;
        let g = last.triangle_shape().expect("triangle").g;
        Ok((2.0 * g - 1.0).clamp(0.0, 1.0))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
}

/// Equal-width histogram of samples in [0, 1].
pub fn histogram(samples: &[f64], bins: usize) -> Vec<HistogramBin> {
    let mut counts = vec![0usize; bins];
    for s in samples {
        let k = ((s.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            left: k as f64 / bins as f64,
            right: (k + 1) as f64 / bins as f64,
            count,
        })
        .collect()
}

pub fn histogram_csv(bins: &[HistogramBin]) -> String {
    let mut out = String::from("bin_left,bin_right,count\n");
    for b in bins {
        out.push_str(&format!("{},{},{}\n", b.left, b.right, b.count));
    }
    out
}

pub const MIN_KS_SAMPLES: usize = 10;

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Domain("no samples".into()));
    }
    if samples.len() < MIN_KS_SAMPLES {
        return Err(Error::Domain(format!(
            "need at least {MIN_KS_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    Ok(s.iter().enumerate().fold(0.0, |d, (i, x)| {
        let f = cdf(*x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub reference: String,
    pub samples: usize,
    pub statistic: f64,
}

/// Law of the limiting `2 eta - 1`, i.e. of the middle-point position.
#[derive(Clone, Debug)]
pub enum EtaLaw {
    /// `phi_n` for Beta(n, n) proportions.
    ClosedForm(u32),
    Grid(DensityGrid),
    Samples(Vec<f64>),
}

/// How `zeta` and `E ln|det T|` are obtained.
#[derive(Clone, Copy, Debug)]
pub enum RateMethod {
    /// Exact expressions; uniform proportions only.
    ClosedForm,
    MonteCarlo {
        zeta_samples_per_point: usize,
        log_det_samples: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateIdentity {
    pub log_det: f64,
    /// `int zeta(x, 0) dP_eta(x)` over (1/2, 1).
    pub zeta_integral: f64,
    /// `log_det - 2 * zeta_integral`.
    pub rate: f64,
}

/// Exact `E ln|det T|` for uniform proportions and `d = 3`.
pub fn uniform_log_det_exact() -> f64 {
    (std::f64::consts::PI.powi(2) - 24.0) / 9.0
}

/// Flatness rate `E ln|det T| - 2 int zeta(x,0) dP_eta(x)` for triangles.
pub fn rate_via_eq_speed(
    spec: &SplitSpec,
    eta: Option<&EtaLaw>,
    method: RateMethod,
    rng: &mut RngStream,
) -> Result<RateIdentity> {
    let eta = eta.ok_or_else(|| Error::Domain("rate identity needs the law of eta".into()))?;
    spec.check_dimension(3)?;
    let (log_det, zeta_samples) = match method {
        RateMethod::ClosedForm => {
            if !matches!(spec.kind(), SplitKind::Uniform) {
                return Err(Error::Domain(format!(
                    "closed forms exist for uniform proportions only, got {}",
                    spec.label()
                )));
            }
            (uniform_log_det_exact(), 0)
        }
        RateMethod::MonteCarlo {
            zeta_samples_per_point,
            log_det_samples,
        } => (
            expected_log_abs_det(spec, 3, log_det_samples, rng)?.mean,
            zeta_samples_per_point.max(1),
        ),
    };
    let mut zeta = |x: f64| -> Result<f64> {
        if zeta_samples == 0 {
            zeta_uniform_closed_form(x)
        } else if zeta_samples == 1 {
            let mut xi = [0.0; 3];
            spec.fill(rng, &mut xi);
            Ok(flat_step_log_max_side(x, &xi))
        } else {
            Ok(zeta_mc_oracle(x, spec, zeta_samples, rng)?.mean)
        }
    };
    let to_x = |z: f64| 0.5 * (1.0 + z);
    let zeta_integral = match eta {
        EtaLaw::ClosedForm(n) => {
            phi_coefficients(*n)?;
            if zeta_samples == 0 {
                let mut err = None;
                let v = integrate_adaptive(0.0, 1.0, 1e-10, |z| match zeta(to_x(z)) {
                    Ok(v) => v * phi_closed_form(*n, z).unwrap(),
                    Err(e) => {
                        err = Some(e);
                        0.0
                    }
                })?;
                if let Some(e) = err {
                    return Err(e);
                }
                v
            } else {
                let rule = GaussLegendre::new(KERNEL_NODES);
                let mut acc = 0.0;
                for (z, w) in rule.on(0.0, 1.0) {
                    acc += w * phi_closed_form(*n, z)? * zeta(to_x(z))?;
                }
                acc
            }
        }
        EtaLaw::Grid(grid) => {
            let mut acc = 0.0;
            for ((z, v), w) in grid.nodes.iter().zip(&grid.values).zip(&grid.weights) {
                acc += w * v * zeta(to_x(*z))?;
            }
            acc / grid.integral()
        }
        EtaLaw::Samples(samples) => {
            if samples.is_empty() {
                return Err(Error::Domain("no eta samples".into()));
            }
            let mut acc = 0.0;
            for z in samples {
                acc += zeta(to_x(z.clamp(1e-12, 1.0 - 1e-12)))?;
            }
            acc / samples.len() as f64
        }
    };
    Ok(RateIdentity {
        log_det,
        zeta_integral,
        rate: log_det - 2.0 * zeta_integral,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn phi_examples() {
        for z in [0.0, 0.2, 0.7, 1.0] {
            assert_eq!(phi_closed_form(1, z).unwrap(), 1.0);
        }
        assert_eq!(phi_closed_form(2, 0.0).unwrap(), 6.0 / 7.0);
        assert!(phi_closed_form(0, 0.5).is_err());
        assert!(phi_closed_form(6, 0.5).is_err());
    }

    #[test]
    fn phi_normalized_and_symmetric() {
        let m = 10_000;
        for n in 1..=5 {
            let total: f64 = (0..m)
                .map(|i| phi_closed_form(n, (i as f64 + 0.5) / m as f64).unwrap())
                .sum::<f64>()
                / m as f64;
            assert!((total - 1.0).abs() < 1e-8, "n={n}: {total}");
            assert!((phi_cdf(n, 1.0).unwrap() - 1.0).abs() < 1e-12);
            for z in [0.1, 0.33, 0.48] {
                let a = phi_closed_form(n, z).unwrap();
                let b = phi_closed_form(n, 1.0 - z).unwrap();
                assert!((a - b).abs() < 1e-14);
                let c = phi_cdf(n, z).unwrap() + phi_cdf(n, 1.0 - z).unwrap();
                assert!((c - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn phi_cdf_by_quadrature() {
        let g = GaussLegendre::new(32);
        for n in 1..=5 {
            for z in [0.13, 0.5, 0.91] {
                let q = g.integrate(0.0, z, |t| phi_closed_form(n, t).unwrap());
                assert!((phi_cdf(n, z).unwrap() - q).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn middle_point_examples() {
        assert_eq!(middle_point_chain_step(0.5, 0.5, 0.5, 0.5), 0.5);
        assert!((middle_point_chain_step(0.5, 0.2, 0.9, 0.4) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn kernel_rejects_asymmetric_laws() {
        assert!(transition_cdf(0.3, 0.5, &SplitSpec::beta(2.0, 3.0).unwrap()).is_err());
        assert!(transition_cdf(0.3, 0.5, &SplitSpec::two_point(0.3, 0.7, 0.5).unwrap()).is_err());
        assert!(transition_cdf(0.3, 0.5, &SplitSpec::beta(2.0, 2.0).unwrap()).is_ok());
    }

    #[test]
    fn kernel_cdf_properties() {
        let k = KernelIntegrator::new(&SplitSpec::uniform()).unwrap();
        for x in [0.3, 0.5, 0.7] {
            let mut prev = 0.0;
            for i in 0..=100 {
                let v = k.cdf(i as f64 / 100.0, x);
                assert!(v >= prev - 1e-12, "x={x} z={i}");
                prev = v;
            }
            assert!((k.cdf(1.0 - 1e-9, x) - 1.0).abs() < 1e-6);
        }
    }

    /// Monte Carlo oracle: empirical CDF of the chain step.
    fn mc_max_gap(spec: &SplitSpec, x: f64, draws: usize, seed: u64) -> f64 {
        let k = KernelIntegrator::new(spec).unwrap();
        let mut rng = RngStream::from_seed(seed);
        let mut xi = [0.0; 3];
        let mut r: Vec<f64> = (0..draws)
            .map(|_| {
                spec.fill(&mut rng, &mut xi);
                middle_point_chain_step(x, xi[0], xi[1], xi[2])
            })
            .collect();
        r.sort_by(f64::total_cmp);
        (1..100)
            .map(|i| {
                let z = i as f64 / 100.0;
                let emp = r.partition_point(|v| *v < z) as f64 / draws as f64;
                (emp - k.cdf(z, x)).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn kernel_matches_chain_uniform() {
        for (i, x) in [0.3, 0.5, 0.7].into_iter().enumerate() {
            let gap = mc_max_gap(&SplitSpec::uniform(), x, 1_000_000, 40 + i as u64);
            let tol = if x == 0.5 { 0.003 } else { 0.005 };
            assert!(gap < tol, "x={x}: {gap}");
        }
    }

    #[test]
    fn kernel_matches_chain_beta() {
        let gap = mc_max_gap(&SplitSpec::beta(3.0, 3.0).unwrap(), 0.35, 400_000, 7);
        assert!(gap < 0.005, "{gap}");
    }

    #[test]
    fn kernel_is_mirror_symmetric() {
        let k = KernelIntegrator::new(&SplitSpec::beta(2.0, 2.0).unwrap()).unwrap();
        for (z, x) in [(0.2, 0.6), (0.45, 0.3), (0.8, 0.9)] {
            let a = k.cdf(z, x);
            let b = 1.0 - k.cdf(1.0 - z, 1.0 - x);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn density_grid_cdf() {
        let g = DensityGrid::uniform(101);
        assert!((g.integral() - 1.0).abs() < 1e-12);
        assert!((g.cdf(0.37) - 0.37).abs() < 1e-12);
        assert_eq!(g.cdf(1.0), 1.0);
        assert!(g.to_csv().starts_with("z,phi\n"));
    }

    #[test]
    fn uniform_invariant_density_is_flat() {
        let grid = solve_invariant_density(&SplitSpec::uniform(), 201).unwrap();
        assert!(grid.max_abs_diff(|_| 1.0) < 0.02);
        assert!((grid.integral() - 1.0).abs() < 1e-6);
        let n = grid.len();
        for i in 0..n {
            assert!((grid.values[i] - grid.values[n - 1 - i]).abs() < 1e-3);
        }
    }

    #[test]
    fn grid_size_floor() {
        assert!(solve_invariant_density(&SplitSpec::uniform(), 50).is_err());
    }

    #[test]
    fn zeta_examples() {
        assert!((zeta_uniform_closed_form(0.5).unwrap() + 0.602284).abs() < 1e-6);
        assert!(zeta_uniform_closed_form(0.0).is_err());
        assert!(zeta_uniform_closed_form(1.0).is_err());
        for i in 1..100 {
            let x = 0.5 + 0.5 * i as f64 / 100.0;
            assert!(zeta_uniform_closed_form(x).unwrap() < 0.0);
        }
        let v = integrate_adaptive(0.5, 1.0, 1e-12, |x| zeta_uniform_closed_form(x).unwrap()).unwrap();
        assert!((v - (PI * PI - 15.0) / 18.0).abs() < 1e-9);
    }

    #[test]
    fn zeta_oracle_matches_closed_form() {
        let mut rng = RngStream::from_seed(3);
        let m = zeta_mc_oracle(0.5, &SplitSpec::uniform(), 200_000, &mut rng).unwrap();
        assert!((m.mean - zeta_uniform_closed_form(0.5).unwrap()).abs() < 1e-2);
        for x in [0.99, 0.999] {
            assert!(zeta_mc_oracle(x, &SplitSpec::uniform(), 10_000, &mut rng).unwrap().mean.is_finite());
        }
    }

    #[test]
    fn zeta_of_midpoint_step() {
        let spec = SplitSpec::constant(vec![0.5; 3]).unwrap();
        let mut rng = RngStream::from_seed(1);
        // Midpoints 0.5, 0.875, 0.375: longest side 0.5.
        let m = zeta_mc_oracle(0.75, &spec, 10, &mut rng).unwrap();
        assert_eq!(m.mean, 0.5f64.ln());
        assert_eq!(m.se, 0.0);
    }

    #[test]
    fn rate_identity_closed_forms() {
        let mut rng = RngStream::from_seed(1);
        let r = rate_via_eq_speed(&SplitSpec::uniform(), Some(&EtaLaw::ClosedForm(1)), RateMethod::ClosedForm, &mut rng)
            .unwrap();
        assert!((r.rate + (PI * PI - 6.0) / 9.0).abs() < 1e-9, "{r:?}");
        assert!((r.zeta_integral - (PI * PI - 15.0) / 9.0).abs() < 1e-9);
        assert!(rate_via_eq_speed(&SplitSpec::uniform(), None, RateMethod::ClosedForm, &mut rng).is_err());
        let beta = SplitSpec::beta(2.0, 2.0).unwrap();
        assert!(rate_via_eq_speed(&beta, Some(&EtaLaw::ClosedForm(2)), RateMethod::ClosedForm, &mut rng).is_err());
    }

    #[test]
    fn ks_examples() {
        let mut rng = RngStream::from_seed(5);
        let s: Vec<f64> = (0..100_000).map(|_| rng.open01()).collect();
        let d = ks_distance(&s, |x| x).unwrap();
        assert!(d < 0.006);
        let mut shuffled = s.clone();
        shuffled.reverse();
        assert_eq!(ks_distance(&shuffled, |x| x).unwrap(), d);
        assert!(ks_distance(&[0.5; 20], |x| x).unwrap() >= 0.5);
        assert!(ks_distance(&[], |x| x).is_err());
        assert!(ks_distance(&[0.5; 5], |x| x).is_err());
    }

    #[test]
    fn histogram_counts() {
        let bins = histogram(&[0.0, 0.05, 0.5, 1.0, 0.999], 10);
        assert_eq!(bins.len(), 10);
        assert_eq!(bins[0].count, 2);
        assert_eq!(bins[5].count, 1);
        assert_eq!(bins[9].count, 2);
        assert!(histogram_csv(&bins).starts_with("bin_left,bin_right,count\n0,0.1,2\n"));
    }

    #[test]
    fn eta_samples_lie_in_unit_interval() {
        let mut rng = RngStream::from_seed(2);
        let s = eta_histogram(&SplitSpec::uniform(), 200, 60, &mut rng).unwrap();
        assert_eq!(s.len(), 200);
        assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn folded_law_of_uniform_is_uniform() {
        for u in [0.1, 0.5, 0.8] {
            assert!((folded_phi_cdf(1, u).unwrap() - u).abs() < 1e-14);
        }
    }
}
