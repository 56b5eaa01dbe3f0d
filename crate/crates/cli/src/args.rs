use crate::config::{parse_vector, RunConfig};
use clap::{Args, Parser, Subcommand};
use stablab::gclt::TailProfile;
use stablab::rate::RateModel;
use stablab::Result;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "stablab", version, about = "Multivariate stable laws, Stein solutions and Wasserstein rate experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Characteristic exponent ψ(z)
    Psi(PsiArgs),
    /// Draw stable vectors and check their empirical characteristic function
    Sample(SampleArgs),
    /// Regularity report for one Stein solution
    SteinCheck(SteinArgs),
    /// Regularity report for a list of test functions
    Regularity(SteinArgs),
    /// Wasserstein rate experiment
    Rate(RateArgs),
    /// Analytic bound for a source law
    Bound(BoundArgs),
    /// Density by characteristic-function inversion (d = 2)
    Density(DensityArgs),
    /// Run the command named in a config file
    Run(CommonArgs),
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// TOML run configuration; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for artifacts
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long = "d")]
    pub dim: Option<usize>,
    /// Spectral preset: uniform, atomic, cantor, mixture, axial, tilted
    #[arg(long)]
    pub spectral: Option<String>,
}

#[derive(Debug, Args)]
pub struct PsiArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Frequency, comma separated
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub count: Option<usize>,
    /// direction-quadrature or series-oracle
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub series_terms: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SteinArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Test function (comma list for regularity)
    #[arg(long)]
    pub h: Option<String>,
    /// default, or SIDExR
    #[arg(long)]
    pub grid: Option<String>,
    /// default, none, or SIDExR
    #[arg(long)]
    pub hessian_grid: Option<String>,
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub grad_slack: Option<f64>,
    #[arg(long)]
    pub time_truncation: Option<f64>,
    #[arg(long)]
    pub time_samples: Option<usize>,
    #[arg(long)]
    pub mc_per_time: Option<usize>,
    #[arg(long)]
    pub pi_h_samples: Option<usize>,
    #[arg(long)]
    pub laplacian_samples: Option<usize>,
    #[arg(long)]
    pub fd_step: Option<f64>,
    /// Largest admissible truncation bound
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// pareto, modified-tail, log-modified or ordering
    #[arg(long)]
    pub example: Option<String>,
    /// n-grid: a..b (doubling) or a comma list
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub replicas: Option<usize>,
    /// exact or sliced
    #[arg(long)]
    pub estimator: Option<String>,
    #[arg(long)]
    pub projections: Option<usize>,
    #[arg(long)]
    pub cloud_cap: Option<usize>,
    #[arg(long)]
    pub fit_model: Option<String>,
    #[arg(long)]
    pub allow_log_rate_fit: bool,
    #[arg(long)]
    pub null_model: bool,
    #[arg(long)]
    pub min_n: Option<u64>,
    #[command(flatten)]
    pub source: SourceArgs,
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub beta_fast: Option<f64>,
    /// zero or cos-squared
    #[arg(long)]
    pub profile: Option<String>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub example: Option<String>,
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[command(flatten)]
    pub source: SourceArgs,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub spacing: Option<f64>,
}

fn set<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

fn parse_enum<T: serde::de::DeserializeOwned>(what: &str, v: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(v.to_string()))
        .map_err(|_| stablab::Error::Config(format!("unknown {what} '{v}'")))
}

impl CommonArgs {
    fn apply(self, cfg: &mut RunConfig) {
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.output, self.out);
        set(&mut cfg.threads, self.threads);
        set(&mut cfg.law.alpha, self.alpha);
        if self.dim.is_some() || self.spectral.is_some() {
            cfg.law.measure = None;
        }
        set(&mut cfg.law.d, self.dim);
        set(&mut cfg.law.spectral, self.spectral);
    }
}

impl SourceArgs {
    fn apply(self, cfg: &mut RunConfig) -> Result<()> {
        set(&mut cfg.source.a, self.a);
        set(&mut cfg.source.beta, self.beta);
        set(&mut cfg.source.beta_fast, self.beta_fast);
        if let Some(p) = self.profile {
            cfg.source.profile = Some(parse_enum::<TailProfile>("profile", &p)?);
        }
        Ok(())
    }
}

impl Command {
    pub fn name(&self) -> Option<&'static str> {
        Some(match self {
            Command::Psi(_) => "psi",
            Command::Sample(_) => "sample",
            Command::SteinCheck(_) => "stein-check",
            Command::Regularity(_) => "regularity",
            Command::Rate(_) => "rate",
            Command::Bound(_) => "bound",
            Command::Density(_) => "density",
            Command::Run(_) => return None,
        })
    }

    pub fn config_path(&self) -> Option<&PathBuf> {
        match self {
            Command::Psi(a) => a.common.config.as_ref(),
            Command::Sample(a) => a.common.config.as_ref(),
            Command::SteinCheck(a) | Command::Regularity(a) => a.common.config.as_ref(),
            Command::Rate(a) => a.common.config.as_ref(),
            Command::Bound(a) => a.common.config.as_ref(),
            Command::Density(a) => a.common.config.as_ref(),
            Command::Run(a) => a.config.as_ref(),
        }
    }

    /// Writes every flag that was given into `cfg`.
    pub fn apply(self, cfg: &mut RunConfig) -> Result<()> {
        match self {
            Command::Psi(a) => {
                a.common.apply(cfg);
                if let Some(z) = a.z {
                    cfg.psi.z = Some(parse_vector(&z)?);
                }
            }
            Command::Sample(a) => {
                a.common.apply(cfg);
                set(&mut cfg.sample.count, a.count);
                set(&mut cfg.sample.method, a.method);
                set(&mut cfg.sample.series_terms, a.series_terms);
            }
            Command::SteinCheck(a) | Command::Regularity(a) => {
                a.common.apply(cfg);
                let s = &mut cfg.stein;
                set(&mut s.h, a.h);
                set(&mut s.grid, a.grid);
                set(&mut s.hessian_grid, a.hessian_grid);
                set(&mut s.pairs, a.pairs);
                set(&mut s.grad_slack, a.grad_slack);
                set(&mut s.time_truncation, a.time_truncation);
                set(&mut s.time_samples, a.time_samples);
                set(&mut s.mc_per_time, a.mc_per_time);
                set(&mut s.pi_h_samples, a.pi_h_samples);
                set(&mut s.laplacian_samples, a.laplacian_samples);
                set(&mut s.fd_step, a.fd_step);
                set(&mut s.tolerance, a.tolerance);
            }
            Command::Rate(a) => {
                a.common.apply(cfg);
                set(&mut cfg.source.example, a.example);
                a.source.apply(cfg)?;
                let r = &mut cfg.rate;
                set(&mut r.n, a.n);
                set(&mut r.replicas, a.replicas);
                set(&mut r.estimator, a.estimator);
                set(&mut r.projections, a.projections);
                set(&mut r.cloud_cap, a.cloud_cap);
                if let Some(m) = a.fit_model {
                    r.fit_model = Some(parse_enum::<RateModel>("fit model", &m)?);
                }
                if a.allow_log_rate_fit {
                    r.allow_log_rate_fit = Some(true);
                }
                if a.null_model {
                    r.null_model = Some(true);
                }
                set(&mut r.min_n, a.min_n);
            }
            Command::Bound(a) => {
                a.common.apply(cfg);
                set(&mut cfg.source.example, a.example);
                a.source.apply(cfg)?;
                set(&mut cfg.bound.n, a.n);
                set(&mut cfg.bound.cutoff, a.cutoff);
            }
            Command::Density(a) => {
                a.common.apply(cfg);
                set(&mut cfg.density.points, a.points);
                set(&mut cfg.density.spacing, a.spacing);
            }
            Command::Run(a) => a.apply(cfg),
        }
        Ok(())
    }
}
