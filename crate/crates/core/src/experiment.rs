//! Seeded, reproducible experiment runs with CSV/JSON outputs and a manifest.
//!
//! Every study of the library is reachable through [`run_experiment`]. Output
//! bytes depend only on the resolved configuration: replica streams come
//! from [`derive_replica_seed`](crate::rng::derive_replica_seed) and results
//! are merged in replica order, so the thread count never matters.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::dynamics::{estimate_limit_point, run_trajectory, LimitPointEstimate, TRAJECTORY_CSV_HEADER};
use crate::error::{Error, Result};
use crate::geometry::{edges_from_vertices, regular_polygon};
use crate::lyapunov::{estimate_flatness_rate, estimate_spectrum, log_det_divergence_check};
use crate::matrices::{build_contraction_witness_odd, build_q, verify_eigenstructure};
use crate::parallel::{map_replicas, with_threads};
use crate::rng::{RngStream, RNG_ALGORITHM};
use crate::shapedist::{
    eta_histogram, folded_phi_cdf, histogram, histogram_csv, ks_distance, phi_cdf, phi_closed_form,
    rate_via_eq_speed, DensityGrid, EtaLaw, KsReport, RateMethod, TransitionKernel, DENSITY_TOLERANCE,
    INITIAL_TRIANGLE, MAX_SWEEPS,
};
use crate::splitdist::{log_moment_diagnostics, SplitKind, SplitSpec, SplitSpecConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Simulate,
    Lyapunov,
    FlatnessRate,
    LimitPoint,
    ShapeDist,
    InvariantDensity,
    RateIdentity,
    Diagnostics,
}

impl Subcommand {
    pub const ALL: [Subcommand; 8] = [
        Self::Simulate,
        Self::Lyapunov,
        Self::FlatnessRate,
        Self::LimitPoint,
        Self::ShapeDist,
        Self::InvariantDensity,
        Self::RateIdentity,
        Self::Diagnostics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Lyapunov => "lyapunov",
            Self::FlatnessRate => "flatness-rate",
            Self::LimitPoint => "limit-point",
            Self::ShapeDist => "shape-dist",
            Self::InvariantDensity => "invariant-density",
            Self::RateIdentity => "rate-identity",
            Self::Diagnostics => "diagnostics",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown subcommand '{s}'")))
    }
}

fn default_d() -> usize {
    3
}

fn default_seed() -> u64 {
    42
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_spec() -> SplitSpec {
    SplitSpec::uniform()
}

/// One experiment. Unset sizes take per-subcommand defaults in
/// [`ExperimentConfig::resolved`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub subcommand: Subcommand,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_spec")]
    pub spec: SplitSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    /// Worker threads; `None` uses every core.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(subcommand: Subcommand) -> Self {
        Self {
            subcommand,
            d: default_d(),
            spec: default_spec(),
            n_steps: None,
            replicas: None,
            grid_size: None,
            samples: None,
            record_every: None,
            master_seed: default_seed(),
            output_dir: default_out(),
            threads: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Copy with every size filled in.
    pub fn resolved(&self) -> Self {
        use Subcommand::*;
        let (steps, replicas, grid, samples) = match self.subcommand {
            Simulate => (1000, 16, 0, 0),
            Lyapunov => (100_000, 64, 0, 0),
            FlatnessRate => (3000, 256, 0, 0),
            LimitPoint => (200, 10_000, 0, 0),
            ShapeDist => (200, 100_000, 0, 0),
            InvariantDensity => (0, 0, 201, 0),
            RateIdentity => (3000, 256, 201, 1_000_000),
            Diagnostics => (0, 0, 0, 1_000_000),
        };
        let nonzero = |v: usize| (v > 0).then_some(v);
        let mut out = self.clone();
        out.n_steps = self.n_steps.or(nonzero(steps));
        out.replicas = self.replicas.or(nonzero(replicas));
        out.grid_size = self.grid_size.or(nonzero(grid));
        out.samples = self.samples.or(nonzero(samples));
        if self.subcommand == Simulate {
            out.record_every = self.record_every.or(Some(if self.d == 3 { 1 } else { 10 }));
        }
        out
    }

    /// SHA-256 of the resolved configuration without the output directory
    /// and thread count, neither of which affects results.
    pub fn digest(&self) -> Result<String> {
        let mut canon = self.resolved();
        canon.output_dir = PathBuf::new();
        canon.threads = None;
        let text = canon.to_toml()?;
        let hash = Sha256::digest(text.as_bytes());
        Ok(hash.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        }))
    }

    fn validate(&self) -> Result<()> {
        if self.d < 3 {
            return Err(Error::Config(format!("d must be at least 3, got {}", self.d)));
        }
        let needs_triangle = matches!(
            self.subcommand,
            Subcommand::ShapeDist | Subcommand::InvariantDensity | Subcommand::RateIdentity
        );
        if needs_triangle && self.d != 3 {
            return Err(Error::Config(format!("{} is defined for d = 3 only", self.subcommand.name())));
        }
        if !self.spec.is_joint() || self.subcommand != Subcommand::InvariantDensity {
            self.spec.check_dimension(self.d)?;
        }
        for (name, v) in [
            ("n_steps", self.n_steps),
            ("replicas", self.replicas),
            ("grid_size", self.grid_size),
            ("samples", self.samples),
            ("record_every", self.record_every),
        ] {
            if v == Some(0) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Parses a split law from a TOML file, a label such as `beta(3,3)`, or an
/// inline TOML table body such as `kind = "beta", alpha = 3, beta = 3`.
pub fn parse_spec_arg(arg: &str) -> Result<SplitSpec> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        let cfg: SplitSpecConfig = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        return SplitSpec::try_from(cfg);
    }
    let trimmed = arg.trim();
    if let Some(spec) = parse_spec_label(trimmed)? {
        return Ok(spec);
    }
    #[derive(Deserialize)]
    struct Wrapper {
        spec: SplitSpecConfig,
    }
    let wrapped: Wrapper = toml::from_str(&format!("spec = {{ {trimmed} }}"))
        .map_err(|e| Error::Config(format!("cannot parse split law '{arg}': {e}")))?;
    SplitSpec::try_from(wrapped.spec)
}

fn parse_spec_label(s: &str) -> Result<Option<SplitSpec>> {
    let (name, args) = match s.split_once('(') {
        Some((n, rest)) => match rest.strip_suffix(')') {
            Some(a) => (n, Some(a)),
            None => return Ok(None),
        },
        None => (s, None),
    };
    let nums = |a: Option<&str>, k: usize| -> Result<Vec<f64>> {
        let v: Vec<f64> = a
            .unwrap_or("")
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("bad number in '{s}': {e}")))?;
        if v.len() != k {
            return Err(Error::Config(format!("'{name}' takes {k} parameters, got {}", v.len())));
        }
        Ok(v)
    };
    Ok(Some(match name {
        "uniform" => {
            nums(args, 0)?;
            SplitSpec::uniform()
        }
        "beta" => {
            let v = nums(args, 2)?;
            SplitSpec::beta(v[0], v[1])?
        }
        "two_point" => {
            let v = nums(args, 3)?;
            SplitSpec::two_point(v[0], v[1], v[2])?
        }
        "heavy_tail" => {
            let v = nums(args, 1)?;
            SplitSpec::heavy_tail(v[0])?
        }
        _ => return Ok(None),
    }))
}

/// Files written by one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub files: Vec<String>,
    pub config_digest: String,
}

struct Writer<'a> {
    dir: &'a Path,
    digest: &'a str,
    files: Vec<String>,
}

impl Writer<'_> {
    fn csv(&mut self, name: &str, body: &str) -> Result<()> {
        let text = format!("# config_digest: {}\n{body}", self.digest);
        self.raw(name, &text)
    }

    fn json(&mut self, name: &str, mut value: serde_json::Value) -> Result<()> {
        if let Some(obj) = value.as_object_mut() {
            obj.insert("config_digest".into(), json!(self.digest));
        }
        let text = serde_json::to_string_pretty(&value).map_err(|e| Error::Config(e.to_string()))?;
        self.raw(name, &(text + "\n"))
    }

    fn raw(&mut self, name: &str, text: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), text)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn context(sub: Subcommand, e: Error) -> Error {
    match e {
        Error::Io(_) => e,
        other => Error::Config(format!("{}: {other}", sub.name())),
    }
}

/// Runs one experiment and writes its outputs plus `manifest.json`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary> {
    let started = Instant::now();
    let cfg = config.resolved();
    cfg.validate()?;
    let digest = cfg.digest()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let mut out = Writer {
        dir: &cfg.output_dir,
        digest: &digest,
        files: Vec::new(),
    };
    let mut rng = RngStream::from_seed(cfg.master_seed);
    with_threads(cfg.threads, || run_study(&cfg, &mut rng, &mut out))?.map_err(|e| context(cfg.subcommand, e))?;

    let config_toml = cfg.to_toml()?;
    let round_trip = ExperimentConfig::from_toml(&config_toml).map(|c| c == cfg).unwrap_or(false);
    let manifest = json!({
        "version": VERSION,
        "rng_algorithm": RNG_ALGORITHM,
        "subcommand": cfg.subcommand.name(),
        "config": cfg,
        "config_toml": config_toml,
        "config_round_trip": round_trip,
        "threads": cfg.threads.map_or_else(|| json!("auto"), |t| json!(t)),
        "wall_time_seconds": started.elapsed().as_secs_f64(),
        "outputs": out.files,
    });
    let files = out.files.clone();
    out.json("manifest.json", manifest)?;
    Ok(RunSummary {
        output_dir: cfg.output_dir.clone(),
        files: files.into_iter().chain(["manifest.json".to_string()]).collect(),
        config_digest: digest,
    })
}

fn run_study(cfg: &ExperimentConfig, rng: &mut RngStream, out: &mut Writer) -> Result<()> {
    let d = cfg.d;
    let spec = &cfg.spec;
    let steps = cfg.n_steps.unwrap_or(0);
    let replicas = cfg.replicas.unwrap_or(0);
    match cfg.subcommand {
        Subcommand::Simulate => {
            let initial = if d == 3 { edges_from_vertices(&INITIAL_TRIANGLE)? } else { regular_polygon(d)? };
            let every = cfg.record_every.unwrap_or(1);
            let master = rand::RngCore::next_u64(rng);
            let runs = map_replicas(master, replicas, |_, mut s| run_trajectory(&initial, spec, steps, &mut s, every))?;
            let mut csv = String::from(TRAJECTORY_CSV_HEADER);
            csv.push('\n');
            for (r, recs) in runs.iter().enumerate() {
                for rec in recs {
                    csv.push_str(&rec.to_csv_row(r));
                    csv.push('\n');
                }
            }
            out.csv("trajectory.csv", &csv)?;
        }
        Subcommand::Lyapunov => {
            let s = estimate_spectrum(spec, d, steps, replicas, rng)?;
            out.csv("spectrum.csv", &format!("{}\n{}\n", s.csv_header(), s.to_csv_row(out.digest)))?;
            out.json("spectrum.json", json!({ "spec": spec, "spectrum": s }))?;
        }
        Subcommand::FlatnessRate => {
            let r = estimate_flatness_rate(spec, d, steps, replicas, rng)?;
            let h = r.h_slope.map(|m| (m.mean.to_string(), m.se.to_string())).unwrap_or_default();
            out.csv(
                "flatness_rate.csv",
                &format!(
                    "d,n_steps,replicas,fit_from,h_slope,h_se,delta_slope,delta_se\n{d},{steps},{replicas},{},{},{},{},{}\n",
                    r.fit_from, h.0, h.1, r.delta_slope.mean, r.delta_slope.se
                ),
            )?;
            out.json("flatness_rate.json", json!({ "spec": spec, "d": d, "rate": r }))?;
        }
        Subcommand::LimitPoint => {
            let vertices: Vec<[f64; 2]> = if d == 3 {
                INITIAL_TRIANGLE.to_vec()
            } else {
                let c = regular_polygon(d)?;
                c.vertices()
            };
            let master = rand::RngCore::next_u64(rng);
            let est = map_replicas(master, replicas, |_, mut s| estimate_limit_point(&vertices, spec, steps, &mut s))?;
            let mut csv = LimitPointEstimate::csv_header(d) + "\n";
            for (r, e) in est.iter().enumerate() {
                csv.push_str(&e.to_csv_row(r));
                csv.push('\n');
            }
            out.csv("limit_points.csv", &csv)?;
            let n = est.len() as f64;
            let mean: Vec<f64> = (0..d).map(|j| est.iter().map(|e| e.weights[j]).sum::<f64>() / n).collect();
            let var: Vec<f64> = (0..d)
                .map(|j| est.iter().map(|e| (e.weights[j] - mean[j]).powi(2)).sum::<f64>() / (n - 1.0))
                .collect();
            out.json(
                "limit_point_summary.json",
                json!({ "spec": spec, "vertices": vertices, "weight_mean": mean, "weight_variance": var }),
            )?;
        }
        Subcommand::ShapeDist => {
            let samples = eta_histogram(spec, replicas, steps, rng)?;
            out.csv("eta_histogram.csv", &histogram_csv(&histogram(&samples, 50)))?;
            let mut reports = Vec::new();
            if let Some(n) = phi_index(spec) {
                reports.push(KsReport {
                    reference: format!("phi_{n}"),
                    samples: samples.len(),
                    statistic: ks_distance(&samples, |u| phi_cdf(n, u).unwrap())?,
                });
                reports.push(KsReport {
                    reference: format!("folded_phi_{n}"),
                    samples: samples.len(),
                    statistic: ks_distance(&samples, |u| folded_phi_cdf(n, u).unwrap())?,
                });
            } else if let Some(grid) = solved_density(cfg)? {
                reports.push(KsReport {
                    reference: "solved_invariant_density".into(),
                    samples: samples.len(),
                    statistic: ks_distance(&samples, |u| grid.cdf(u))?,
                });
            }
            out.json("ks_report.json", json!({ "spec": spec, "reports": reports }))?;
        }
        Subcommand::InvariantDensity => {
            let n = cfg.grid_size.unwrap_or(201);
            let kernel = TransitionKernel::new(spec, n)?;
            let (grid, sweeps) = kernel.solve(&DensityGrid::uniform(n), DENSITY_TOLERANCE, MAX_SWEEPS)?;
            out.csv("density.csv", &grid.to_csv())?;
            let closed = phi_index(spec).map(|k| grid.max_abs_diff(|z| phi_closed_form(k, z).unwrap()));
            out.json(
                "density_summary.json",
                json!({ "spec": spec, "grid_size": n, "sweeps": sweeps, "sup_distance_to_closed_form": closed }),
            )?;
        }
        Subcommand::RateIdentity => {
            let mc = RateMethod::MonteCarlo {
                zeta_samples_per_point: cfg.samples.unwrap_or(1_000_000) / 32,
                log_det_samples: cfg.samples.unwrap_or(1_000_000),
            };
            let eta = match phi_index(spec) {
                Some(n) => EtaLaw::ClosedForm(n),
                None => EtaLaw::Samples(eta_histogram(spec, replicas, 200, rng)?),
            };
            let closed = matches!(spec.kind(), SplitKind::Uniform)
                .then(|| rate_via_eq_speed(spec, Some(&eta), RateMethod::ClosedForm, rng))
                .transpose()?;
            let monte_carlo = rate_via_eq_speed(spec, Some(&eta), mc, rng)?;
            let simulated = estimate_flatness_rate(spec, 3, steps, replicas, rng)?;
            out.json(
                "rate_identity.json",
                json!({
                    "spec": spec,
                    "closed_form": closed,
                    "monte_carlo": monte_carlo,
                    "simulated_h_slope": simulated.h_slope,
                }),
            )?;
        }
        Subcommand::Diagnostics => {
            let samples = cfg.samples.unwrap_or(1_000_000);
            let moments = if spec.is_joint() {
                None
            } else {
                Some(log_moment_diagnostics(spec, samples.max(1000), rng)?)
            };
            let sizes: Vec<usize> = [100, 10, 1]
                .iter()
                .map(|k| (samples / k).max(crate::lyapunov::MIN_LOG_DET_SAMPLES))
                .collect();
            let divergence = log_det_divergence_check(spec, d, &sizes, 5.0, rng)?;
            let eigen = verify_eigenstructure(0.3, d, 1e-12)?;
            let q = (d == 3).then(|| build_q(0.5, 0.25)).transpose()?.map(|q| {
                json!({ "t": q.t, "max_deviation": (&q.closed_form - &q.normalized_product).abs().max() })
            });
            let witness = (d % 2 == 1 && d >= 5)
                .then(|| build_contraction_witness_odd(d, 0.3, 0.6))
                .transpose()?
                .map(|w| json!({ "max_deviation": (&w.closed_form - &w.product).abs().max() }));
            out.json(
                "diagnostics.json",
                json!({
                    "spec": spec,
                    "d": d,
                    "invertibility_warning": spec.invertibility_warning(d),
                    "log_moments": moments.map(|m| json!({ "log_xi": m.log_xi, "log_one_minus_xi": m.log_one_minus_xi })),
                    "log_det_divergence": divergence,
                    "eigenstructure": { "passed": eigen.passed, "max_residual": eigen.max_residual },
                    "q_matrix": q,
                    "contraction_witness": witness,
                }),
            )?;
        }
    }
    Ok(())
}

/// `n` when the law is Beta(n, n) with a known closed-form `phi_n`.
fn phi_index(spec: &SplitSpec) -> Option<u32> {
    match spec.kind() {
        SplitKind::Uniform => Some(1),
        SplitKind::Beta { alpha, beta } if alpha == beta && alpha.fract() == 0.0 && (1.0..=5.0).contains(alpha) => {
            Some(*alpha as u32)
        }
        _ => None,
    }
}

fn solved_density(cfg: &ExperimentConfig) -> Result<Option<DensityGrid>> {
    if !cfg.spec.is_symmetric() || cfg.spec.pdf(0.5).is_none() {
        return Ok(None);
    }
    let n = cfg.grid_size.unwrap_or(201);
    let kernel = TransitionKernel::new(&cfg.spec, n)?;
    Ok(Some(kernel.solve(&DensityGrid::uniform(n), DENSITY_TOLERANCE, MAX_SWEEPS)?.0))
}
