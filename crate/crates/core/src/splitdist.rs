//! Laws of the side-splitting proportions.
//!
//! A [`SplitSpec`] describes how the `d` proportions of one subdivision step
//! are drawn: either i.i.d. from a marginal law on (0, 1) or jointly from a
//! finite table of atoms. All draws lie strictly inside (0, 1).

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta as BetaLaw, ContinuousCDF};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stats::MeanSe;

/// Smallest and largest representable proportions.
const XI_MIN: f64 = f64::MIN_POSITIVE;
const XI_MAX: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub xi: Vec<f64>,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SplitKind {
    Uniform,
    Beta { alpha: f64, beta: f64 },
    /// `a` with probability `p`, otherwise `b`.
    TwoPoint { a: f64, b: f64, p: f64 },
    /// Symmetric density `c / (x |ln x|^(1+delta))` on (0, 1/2], mirrored on (1/2, 1).
    HeavyTail { delta: f64 },
    JointTable { atoms: Vec<Atom> },
}

/// A validated split law.
#[derive(Clone, Debug)]
pub struct SplitSpec {
    kind: SplitKind,
    sampler: Sampler,
}

#[derive(Clone, Debug)]
enum Sampler {
    Uniform,
    Beta {
        dist: rand_distr::Beta<f64>,
        law: BetaLaw,
        integer: Option<(u32, u32)>,
        shape: (f64, f64),
        norm: f64,
    },
    TwoPoint {
        a: f64,
        b: f64,
        p: f64,
    },
    HeavyTail {
        delta: f64,
        c: f64,
    },
    Joint {
        atoms: Vec<Atom>,
        cumulative: Vec<f64>,
    },
}

fn in_open_unit(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

impl SplitSpec {
    pub fn new(kind: SplitKind) -> Result<Self> {
        let sampler = match &kind {
            SplitKind::Uniform => Sampler::Uniform,
            SplitKind::Beta { alpha, beta } => {
                if !(alpha.is_finite() && beta.is_finite() && *alpha > 0.0 && *beta > 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "beta parameters must be positive, got ({alpha}, {beta})"
                    )));
                }
                let dist = rand_distr::Beta::new(*alpha, *beta)
                    .map_err(|e| Error::InvalidSpec(format!("beta: {e}")))?;
                let law = BetaLaw::new(*alpha, *beta)
                    .map_err(|e| Error::InvalidSpec(format!("beta: {e}")))?;
                let small_int = |v: f64| v.fract() == 0.0 && v <= 64.0;
                let integer = (small_int(*alpha) && small_int(*beta))
                    .then_some((*alpha as u32, *beta as u32));
                let norm = (-statrs::function::beta::ln_beta(*alpha, *beta)).exp();
                Sampler::Beta {
                    dist,
                    law,
                    integer,
                    shape: (*alpha, *beta),
                    norm,
                }
            }
            SplitKind::TwoPoint { a, b, p } => {
                if !in_open_unit(*a) || !in_open_unit(*b) {
                    return Err(Error::InvalidSpec(format!(
                        "two_point atoms must lie in (0,1), got a={a}, b={b}"
                    )));
                }
                if a == b {
                    return Err(Error::InvalidSpec("two_point requires a != b".into()));
                }
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidSpec(format!("two_point weight p={p} not in [0,1]")));
                }
                Sampler::TwoPoint { a: *a, b: *b, p: *p }
            }
            SplitKind::HeavyTail { delta } => {
                if !(*delta > 0.0 && *delta <= 0.5) {
                    return Err(Error::InvalidSpec(format!(
                        "heavy_tail delta must be in (0, 1/2], got {delta}"
                    )));
                }
                Sampler::HeavyTail {
                    delta: *delta,
                    c: heavy_tail_constant(*delta),
                }
            }
            SplitKind::JointTable { atoms } => {
                let d = atoms
                    .first()
                    .map(|a| a.xi.len())
                    .ok_or_else(|| Error::InvalidSpec("joint_table has no atoms".into()))?;
                if d < 3 {
                    return Err(Error::InvalidSpec(format!("joint_table atoms need d >= 3, got {d}")));
                }
                let mut total = 0.0;
                let mut cumulative = Vec::with_capacity(atoms.len());
                for atom in atoms {
                    if atom.xi.len() != d {
                        return Err(Error::InvalidSpec("joint_table atoms differ in length".into()));
                    }
                    if !atom.xi.iter().all(|&x| in_open_unit(x)) {
                        return Err(Error::InvalidSpec(format!(
                            "joint_table atom {:?} leaves (0,1)",
                            atom.xi
                        )));
                    }
                    if !(atom.prob >= 0.0) {
                        return Err(Error::InvalidSpec("negative atom probability".into()));
                    }
                    total += atom.prob;
                    cumulative.push(total);
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidSpec(format!(
                        "joint_table probabilities sum to {total}, not 1"
                    )));
                }
                Sampler::Joint {
                    atoms: atoms.clone(),
                    cumulative,
                }
            }
        };
        Ok(Self { kind, sampler })
    }

    pub fn uniform() -> Self {
        Self::new(SplitKind::Uniform).expect("uniform is always valid")
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(SplitKind::Beta { alpha, beta })
    }

    pub fn two_point(a: f64, b: f64, p: f64) -> Result<Self> {
        Self::new(SplitKind::TwoPoint { a, b, p })
    }

    pub fn heavy_tail(delta: f64) -> Result<Self> {
        Self::new(SplitKind::HeavyTail { delta })
    }

    pub fn joint_table(atoms: Vec<Atom>) -> Result<Self> {
        Self::new(SplitKind::JointTable { atoms })
    }

    /// Deterministic law putting all mass on one proportion vector.
    pub fn constant(xi: Vec<f64>) -> Result<Self> {
        Self::joint_table(vec![Atom { xi, prob: 1.0 }])
    }

    pub fn kind(&self) -> &SplitKind {
        &self.kind
    }

    pub fn is_joint(&self) -> bool {
        matches!(self.kind, SplitKind::JointTable { .. })
    }

    /// Number of sides fixed by a joint table; `None` for marginal laws.
    pub fn joint_dimension(&self) -> Option<usize> {
        match &self.sampler {
            Sampler::Joint { atoms, .. } => Some(atoms[0].xi.len()),
            _ => None,
        }
    }

    /// Checks that the law can drive a `d`-gon.
    pub fn check_dimension(&self, d: usize) -> Result<()> {
        if d < 3 {
            return Err(Error::Dimension(format!("need d >= 3, got {d}")));
        }
        match self.joint_dimension() {
            Some(k) if k != d => Err(Error::Dimension(format!(
                "joint table has {k} sides but the polygon has {d}"
            ))),
            _ => Ok(()),
        }
    }

    /// Short stable label used in report digests.
    pub fn label(&self) -> String {
        match &self.kind {
            SplitKind::Uniform => "uniform".into(),
            SplitKind::Beta { alpha, beta } => format!("beta({alpha},{beta})"),
            SplitKind::TwoPoint { a, b, p } => format!("two_point({a},{b},{p})"),
            SplitKind::HeavyTail { delta } => format!("heavy_tail({delta})"),
            SplitKind::JointTable { atoms } => {
                let body: Vec<String> = atoms
                    .iter()
                    .map(|a| format!("{:?}:{}", a.xi, a.prob))
                    .collect();
                format!("joint_table[{}]", body.join(";"))
            }
        }
    }

    /// One draw of the marginal proportion.
    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> Result<f64> {
        match &self.sampler {
            Sampler::Joint { .. } => Err(Error::JointHasNoMarginal("sample")),
            _ => Ok(self.sample_marginal(rng)),
        }
    }

    #[inline]
    fn sample_marginal(&self, rng: &mut RngStream) -> f64 {
        match &self.sampler {
            Sampler::Uniform => rng.open01(),
            Sampler::Beta { dist, .. } => loop {
                let x = rand::Rng::sample(rng, dist);
                if in_open_unit(x) {
                    return x;
                }
            },
            Sampler::TwoPoint { a, b, p } => {
                if *p >= 1.0 || rng.open01() < *p {
                    *a
                } else {
                    *b
                }
            }
            Sampler::HeavyTail { delta, c } => {
                let u = rng.open01();
                heavy_tail_quantile(u, *delta, *c).clamp(XI_MIN, XI_MAX)
            }
            Sampler::Joint { .. } => unreachable!("joint laws are sampled as vectors"),
        }
    }

    fn pick_atom(&self, rng: &mut RngStream) -> &Atom {
        let Sampler::Joint { atoms, cumulative } = &self.sampler else {
            unreachable!()
        };
        if atoms.len() == 1 {
            return &atoms[0];
        }
        let u = rng.open01() * cumulative[cumulative.len() - 1];
        let idx = cumulative.partition_point(|&c| c <= u).min(atoms.len() - 1);
        &atoms[idx]
    }

    /// One joint draw of `d` proportions.
    pub fn sample_vector(&self, d: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
        self.check_dimension(d)?;
        let mut out = vec![0.0; d];
        self.fill(rng, &mut out);
        Ok(out)
    }

    /// Fills `out` with one joint draw. The caller has validated
    /// `out.len()` with [`SplitSpec::check_dimension`].
    #[inline]
    pub fn fill(&self, rng: &mut RngStream, out: &mut [f64]) {
        if let Sampler::Joint { .. } = self.sampler {
            let atom = self.pick_atom(rng);
            out.copy_from_slice(&atom.xi);
        } else {
            for x in out.iter_mut() {
                *x = self.sample_marginal(rng);
            }
        }
    }

    /// Fills `ln_xi[i] = ln ξ_i` and `ln_one_minus[i] = ln(1 − ξ_i)` for one
    /// joint draw. For the heavy-tailed law this is exact even where ξ itself
    /// is not representable in double precision.
    pub fn fill_logs(&self, rng: &mut RngStream, ln_xi: &mut [f64], ln_one_minus: &mut [f64]) {
        if let Sampler::HeavyTail { delta, c } = self.sampler {
            for (lx, l1) in ln_xi.iter_mut().zip(ln_one_minus.iter_mut()) {
                let u = rng.open01();
                let tail = u.min(1.0 - u);
                // ln of the quantile of the lower branch: -(c/(δ·tail))^(1/δ)
                let lower = -(c / (delta * tail)).powf(1.0 / delta);
                let upper = (-lower.exp()).ln_1p();
                if u <= 0.5 {
                    (*lx, *l1) = (lower, upper);
                } else {
                    (*lx, *l1) = (upper, lower);
                }
            }
            return;
        }
        self.fill(rng, ln_xi);
        for (lx, l1) in ln_xi.iter_mut().zip(ln_one_minus.iter_mut()) {
            let x = *lx;
            *lx = x.ln();
            *l1 = (-x).ln_1p();
        }
    }

    /// Density of the marginal law, for continuous kinds.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        match &self.sampler {
            Sampler::Uniform => Some(if in_open_unit(x) { 1.0 } else { 0.0 }),
            Sampler::Beta { shape, norm, .. } => Some(if in_open_unit(x) {
                norm * x.powf(shape.0 - 1.0) * (1.0 - x).powf(shape.1 - 1.0)
            } else {
                0.0
            }),
            Sampler::HeavyTail { delta, c } => Some(heavy_tail_pdf(x, *delta, *c)),
            _ => None,
        }
    }

    /// Distribution function of the marginal law, for continuous kinds.
    pub fn cdf(&self, x: f64) -> Option<f64> {
        if x <= 0.0 {
            return self.pdf(0.5).map(|_| 0.0);
        }
        if x >= 1.0 {
            return self.pdf(0.5).map(|_| 1.0);
        }
        match &self.sampler {
            Sampler::Uniform => Some(x),
            Sampler::Beta { law, integer, .. } => Some(match integer {
                Some((a, b)) => integer_beta_cdf(x, *a, *b),
                None => law.cdf(x),
            }),
            Sampler::HeavyTail { delta, c } => Some(heavy_tail_cdf(x, *delta, *c)),
            _ => None,
        }
    }

    /// Whether `p(x) = p(1 - x)` holds for the marginal density.
    pub fn is_symmetric(&self) -> bool {
        match &self.kind {
            SplitKind::Uniform | SplitKind::HeavyTail { .. } => true,
            SplitKind::Beta { alpha, beta } => alpha == beta,
            _ => false,
        }
    }

    /// For even `d`, reports whether a draw can make `det T` vanish with
    /// positive probability (an atom with `prod (1-ξ_i) = prod ξ_i`).
    /// Continuous marginal laws never do.
    pub fn invertibility_warning(&self, d: usize) -> Option<String> {
        if d % 2 == 1 {
            return None;
        }
        let singular = |xi: &[f64]| {
            let lhs: f64 = xi.iter().map(|x| (1.0 - x).ln()).sum();
            let rhs: f64 = xi.iter().map(|x| x.ln()).sum();
            (lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0)
        };
        match &self.kind {
            SplitKind::TwoPoint { a, b, p } => {
                let support: Vec<f64> = match p {
                    p if *p >= 1.0 => vec![*a],
                    p if *p <= 0.0 => vec![*b],
                    _ => vec![*a, *b],
                };
                for k in 0..=d {
                    if support.len() == 1 && k != d {
                        continue;
                    }
                    let mut xi = vec![support[0]; k];
                    xi.extend(std::iter::repeat_n(*support.last().unwrap(), d - k));
                    if singular(&xi) {
                        return Some(format!(
                            "even d={d}: det T = 0 with positive probability (atom {xi:?})"
                        ));
                    }
                }
                None
            }
            SplitKind::JointTable { atoms } => atoms
                .iter()
                .find(|a| a.prob > 0.0 && a.xi.len() == d && singular(&a.xi))
                .map(|a| format!("even d={d}: det T = 0 on atom {:?}", a.xi)),
            _ => None,
        }
    }
}

impl PartialEq for SplitSpec {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

fn heavy_tail_constant(delta: f64) -> f64 {
    delta * std::f64::consts::LN_2.powf(delta) / 2.0
}

fn heavy_tail_quantile(u: f64, delta: f64, c: f64) -> f64 {
    if u <= 0.5 {
        (-(c / (delta * u)).powf(1.0 / delta)).exp()
    } else {
        1.0 - (-(c / (delta * (1.0 - u))).powf(1.0 / delta)).exp()
    }
}

fn heavy_tail_cdf(x: f64, delta: f64, c: f64) -> f64 {
    if x <= 0.5 {
        c / (delta * (-x.ln()).powf(delta))
    } else {
        1.0 - heavy_tail_cdf(1.0 - x, delta, c)
    }
}

fn heavy_tail_pdf(x: f64, delta: f64, c: f64) -> f64 {
    if !in_open_unit(x) {
        return 0.0;
    }
    let y = x.min(1.0 - x);
    c / (y * (-y.ln()).powf(1.0 + delta))
}

/// Regularized incomplete beta `I_x(a, b)` for positive integers, as the
/// upper tail of a Binomial(a + b - 1, x).
fn integer_beta_cdf(x: f64, a: u32, b: u32) -> f64 {
    let n = a + b - 1;
    let mut total = 0.0;
    let mut binom = 1.0f64;
    for k in 0..=n {
        if k >= a {
            total += binom * x.powi(k as i32) * (1.0 - x).powi((n - k) as i32);
        }
        binom = binom * f64::from(n - k) / f64::from(k + 1);
    }
    total.clamp(0.0, 1.0)
}

/// Inverse distribution function of the heavy-tailed law with parameter `delta`.
///
/// On (0, 1/2] the density is `c / (x |ln x|^(1+delta))` with
/// `c = delta (ln 2)^delta / 2`, so `F(x) = c / (delta |ln x|^delta)` and
/// `F(1/2) = 1/2`; the upper half is the mirror image.
pub fn heavy_tail_inverse_cdf(u: f64, delta: f64) -> Result<f64> {
    if !in_open_unit(u) {
        return Err(Error::Domain(format!("u = {u} not in (0,1)")));
    }
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::Domain(format!("delta = {delta} not in (0, 1/2]")));
    }
    Ok(heavy_tail_quantile(u, delta, heavy_tail_constant(delta)))
}

/// Monte Carlo estimates of `E|ln ξ|` and `E|ln(1 - ξ)|`.
#[derive(Clone, Copy, Debug)]
pub struct LogMoments {
    pub log_xi: MeanSe,
    pub log_one_minus_xi: MeanSe,
}

pub fn log_moment_diagnostics(spec: &SplitSpec, samples: usize, rng: &mut RngStream) -> Result<LogMoments> {
    if spec.is_joint() {
        return Err(Error::JointHasNoMarginal("log_moment_diagnostics"));
    }
    if samples < 1000 {
        return Err(Error::Domain(format!("need at least 1000 samples, got {samples}")));
    }
    let mut a = Vec::with_capacity(samples);
    let mut b = Vec::with_capacity(samples);
    let (mut lx, mut l1) = ([0.0], [0.0]);
    for _ in 0..samples {
        spec.fill_logs(rng, &mut lx, &mut l1);
        a.push(-lx[0]);
        b.push(-l1[0]);
    }
    Ok(LogMoments {
        log_xi: MeanSe::from_samples(&a),
        log_one_minus_xi: MeanSe::from_samples(&b),
    })
}

/// Flat config fragment: `kind` plus the parameters that kind uses.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpecConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<Atom>>,
}

impl TryFrom<SplitSpecConfig> for SplitSpec {
    type Error = Error;

    fn try_from(cfg: SplitSpecConfig) -> Result<Self> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::InvalidSpec(format!("kind '{}' needs key '{name}'", cfg.kind)))
        };
        let kind = match cfg.kind.as_str() {
            "uniform" => SplitKind::Uniform,
            "beta" => SplitKind::Beta {
                alpha: need(cfg.alpha, "alpha")?,
                beta: need(cfg.beta, "beta")?,
            },
            "two_point" => SplitKind::TwoPoint {
                a: need(cfg.a, "a")?,
                b: need(cfg.b, "b")?,
                p: need(cfg.p, "p")?,
            },
            "heavy_tail" => SplitKind::HeavyTail {
                delta: need(cfg.delta, "delta")?,
            },
            "joint_table" => SplitKind::JointTable {
                atoms: cfg
                    .atoms
                    .clone()
                    .ok_or_else(|| Error::InvalidSpec("kind 'joint_table' needs key 'atoms'".into()))?,
            },
            other => return Err(Error::InvalidSpec(format!("unknown kind '{other}'"))),
        };
        SplitSpec::new(kind)
    }
}

impl From<&SplitSpec> for SplitSpecConfig {
    fn from(spec: &SplitSpec) -> Self {
        let mut cfg = SplitSpecConfig::default();
        match &spec.kind {
            SplitKind::Uniform => cfg.kind = "uniform".into(),
            SplitKind::Beta { alpha, beta } => {
                cfg.kind = "beta".into();
                cfg.alpha = Some(*alpha);
                cfg.beta = Some(*beta);
            }
            SplitKind::TwoPoint { a, b, p } => {
                cfg.kind = "two_point".into();
                (cfg.a, cfg.b, cfg.p) = (Some(*a), Some(*b), Some(*p));
            }
            SplitKind::HeavyTail { delta } => {
                cfg.kind = "heavy_tail".into();
                cfg.delta = Some(*delta);
            }
            SplitKind::JointTable { atoms } => {
                cfg.kind = "joint_table".into();
                cfg.atoms = Some(atoms.clone());
            }
        }
        cfg
    }
}

impl Serialize for SplitSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SplitSpecConfig::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for SplitSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let cfg = SplitSpecConfig::deserialize(d)?;
        SplitSpec::try_from(cfg).map_err(serde::de::Error::custom)
    }
}
