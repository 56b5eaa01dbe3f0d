//! The TOML run configuration. Command-line flags override file values;
//! [`RunConfig::resolve`] fills every remaining default so the resolved file
//! alone reproduces the run.

use serde::{Deserialize, Serialize};
use stablab::gclt::TailProfile;
use stablab::rate::RateModel;
use stablab::spectral::SpectralSpec;
use stablab::{Error, Result};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    /// Worker threads for the rate runner (0: all cores).
    pub threads: Option<usize>,
    pub law: LawSection,
    pub source: SourceSection,
    pub rate: RateSection,
    pub stein: SteinSection,
    pub psi: PsiSection,
    pub sample: SampleSection,
    pub density: DensitySection,
    pub bound: BoundSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LawSection {
    pub alpha: Option<f64>,
    pub d: Option<usize>,
    /// Preset name; ignored when `measure` is given.
    pub spectral: Option<String>,
    pub measure: Option<SpectralSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSection {
    /// `pareto`, `modified-tail`, `log-modified` or `ordering`.
    pub example: Option<String>,
    pub a: Option<f64>,
    pub beta: Option<f64>,
    /// Second exponent of the `ordering` comparison.
    pub beta_fast: Option<f64>,
    pub profile: Option<TailProfile>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateSection {
    /// n-grid expression, see [`parse_n_grid`].
    pub n: Option<String>,
    pub replicas: Option<usize>,
    /// `exact` or `sliced`.
    pub estimator: Option<String>,
    pub projections: Option<usize>,
    pub cloud_cap: Option<usize>,
    pub fit_model: Option<RateModel>,
    pub allow_log_rate_fit: Option<bool>,
    pub null_model: Option<bool>,
    /// Smallest n counted by the ordering comparison.
    pub min_n: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteinSection {
    /// Test function name, or a comma list for `regularity`.
    pub h: Option<String>,
    /// `default` (10×10 on [−3,3]²) or `SIDExR`.
    pub grid: Option<String>,
    /// `default` (6×6 on [−3,3]²), `none` or `SIDExR`.
    pub hessian_grid: Option<String>,
    pub pairs: Option<usize>,
    pub grad_slack: Option<f64>,
    pub time_truncation: Option<f64>,
    pub time_samples: Option<usize>,
    pub mc_per_time: Option<usize>,
    pub pi_h_samples: Option<usize>,
    pub laplacian_samples: Option<usize>,
    pub fd_step: Option<f64>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsiSection {
    pub z: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSection {
    pub count: Option<usize>,
    /// `direction-quadrature` or `series-oracle`.
    pub method: Option<String>,
    pub series_terms: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySection {
    /// Lattice points per axis.
    pub points: Option<usize>,
    pub spacing: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundSection {
    /// n-grid expression.
    pub n: Option<String>,
    pub cutoff: Option<f64>,
}

pub const COMMANDS: [&str; 7] = ["psi", "sample", "stein-check", "regularity", "rate", "bound", "density"];

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Ok((Self::parse(&text)?, text))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Fills the defaults that apply to `self.command`.
    pub fn resolve(mut self) -> Result<Self> {
        let cmd = self.command.clone().ok_or_else(|| Error::Config("no command given".into()))?;
        if !COMMANDS.contains(&cmd.as_str()) {
            return Err(Error::Config(format!("unknown command '{cmd}'")));
        }
        self.seed.get_or_insert(match cmd.as_str() {
            "rate" if self.source.example.as_deref() == Some("ordering") => 11,
            _ => 7,
        });
        self.threads.get_or_insert(0);
        let law = &mut self.law;
        law.alpha.get_or_insert(1.5);
        if law.measure.is_none() {
            law.d.get_or_insert(2);
            law.spectral.get_or_insert_with(|| "uniform".into());
        } else {
            law.d = None;
            law.spectral = None;
        }
        match cmd.as_str() {
            "psi" => {
                let d = self.law.measure.as_ref().map(|m| m.d).or(self.law.d).unwrap_or(2);
                self.psi.z.get_or_insert_with(|| {
                    let mut z = vec![0.0; d];
                    z[0] = 1.0;
                    z
                });
            }
            "sample" => {
                let s = &mut self.sample;
                s.count.get_or_insert(1000);
                s.method.get_or_insert_with(|| "direction-quadrature".into());
                s.series_terms.get_or_insert(4000);
            }
            "stein-check" | "regularity" => {
                let s = &mut self.stein;
                if cmd == "stein-check" {
                    s.h.get_or_insert_with(|| "ramp".into());
                } else {
                    s.h.get_or_insert_with(|| "linear,ramp,cosine,softnorm,clamp".into());
                }
                s.grid.get_or_insert_with(|| "default".into());
                s.hessian_grid.get_or_insert_with(|| "default".into());
                s.pairs.get_or_insert(50);
                s.grad_slack.get_or_insert(0.02);
                let d = stablab::ou_stein::SteinSolverConfig::default();
                s.time_truncation.get_or_insert(d.time_truncation);
                s.time_samples.get_or_insert(d.time_samples);
                s.mc_per_time.get_or_insert(d.mc_per_time);
                s.pi_h_samples.get_or_insert(d.pi_h_samples);
                s.laplacian_samples.get_or_insert(d.laplacian_samples);
                s.fd_step.get_or_insert(d.fd_step);
                s.tolerance.get_or_insert(d.tolerance);
            }
            "rate" => {
                let ex = self.source.example.get_or_insert_with(|| "pareto".into()).clone();
                self.resolve_source(&ex)?;
                let r = &mut self.rate;
                let ordering = ex == "ordering";
                r.n.get_or_insert_with(|| if ordering { "256..2048".into() } else { "64..4096".into() });
                r.replicas.get_or_insert(20);
                let est = r.estimator.get_or_insert_with(|| "exact".into()).clone();
                if est == "sliced" {
                    r.projections.get_or_insert(64);
                }
                if ordering {
                    r.min_n.get_or_insert(256);
                } else {
                    r.cloud_cap.get_or_insert(stablab::transport::EXACT_CAP);
                    r.allow_log_rate_fit.get_or_insert(false);
                    r.null_model.get_or_insert(false);
                }
            }
            "bound" => {
                let ex = self.source.example.get_or_insert_with(|| "pareto".into()).clone();
                if ex == "ordering" {
                    return Err(Error::Config("bound needs a single source example".into()));
                }
                self.resolve_source(&ex)?;
                self.bound.n.get_or_insert_with(|| "1000,1000000,1000000000".into());
            }
            "density" => {
                self.density.points.get_or_insert(256);
            }
            _ => {}
        }
        Ok(self)
    }

    fn resolve_source(&mut self, example: &str) -> Result<()> {
        let s = &mut self.source;
        match example {
            "pareto" => {}
            "modified-tail" => {
                s.a.get_or_insert(0.75);
                s.beta.get_or_insert(2.0);
                s.profile.get_or_insert(TailProfile::CosSquared);
            }
            "log-modified" => {
                s.beta.get_or_insert(1.0);
            }
            "ordering" => {
                s.a.get_or_insert(0.75);
                s.beta.get_or_insert(1.7);
                s.beta_fast.get_or_insert(3.0);
            }
            other => return Err(Error::Config(format!("unknown source example '{other}'"))),
        }
        Ok(())
    }
}

/// `a..b` is the doubling sequence `a, 2a, …` up to `b`; otherwise a comma
/// list. Entries may use exponent notation (`1e6`).
pub fn parse_n_grid(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("bad n-grid '{text}'"));
    let one = |s: &str| -> Result<u64> {
        let s = s.trim();
        if let Ok(v) = s.parse::<u64>() {
            return Ok(v);
        }
        let f: f64 = s.parse().map_err(|_| bad())?;
        if f >= 1.0 && f.fract() == 0.0 && f < 2f64.powi(63) {
            Ok(f as u64)
        } else {
            Err(bad())
        }
    };
    let grid = if let Some((a, b)) = text.split_once("..") {
        let (mut a, b) = (one(a)?, one(b)?);
        if a == 0 || a > b {
            return Err(bad());
        }
        let mut v = Vec::new();
        while a <= b {
            v.push(a);
            a = a.checked_mul(2).ok_or_else(bad)?;
        }
        v
    } else {
        text.split(',').map(one).collect::<Result<Vec<_>>>()?
    };
    if grid.is_empty() || grid.contains(&0) {
        return Err(bad());
    }
    Ok(grid)
}

/// `default`, `none` or `SIDExR` for a `SIDE×SIDE` grid on `[−R, R]²`.
pub fn parse_grid(text: &str, d: usize, default: (usize, f64)) -> Result<Vec<Vec<f64>>> {
    use stablab::ou_stein::RegularityOptions;
    let (side, r) = match text {
        "default" => default,
        "none" => return Ok(vec![]),
        _ => {
            let bad = || Error::Config(format!("bad grid '{text}', expected default, none or SIDExR"));
            let (s, r) = text.split_once('x').ok_or_else(bad)?;
            let side: usize = s.parse().map_err(|_| bad())?;
            let r: f64 = r.parse().map_err(|_| bad())?;
            if side < 2 || !(r > 0.0) {
                return Err(bad());
            }
            (side, r)
        }
    };
    Ok(RegularityOptions::square_grid(d, side, r))
}

/// Comma-separated reals.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad vector '{text}'"))))
        .collect()
}
