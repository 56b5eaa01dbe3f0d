//! Rate experiments: clouds of `S_n` against paired clouds of the limit law,
//! Wasserstein distances per `(n, replicate)` cell, and rate fits.

use super::array::TriangularArray;
use super::bound::{theoretical_bound, PredictedRate};
use super::source::{SourceKind, SourceLaw, TailProfile};
use crate::error::{invalid, Error, Result};
use crate::rate::{rate_fit, RateFit, RateModel, RatePoint};
use crate::rng::{derive_key, substream_nd};
use crate::sampler::VectorSampler;
use crate::spectral::StableLaw;
use crate::transport::{wasserstein1_exact, wasserstein1_sliced_detail, EmpiricalMeasure, EXACT_CAP};
use serde::{Deserialize, Serialize};

const TAG_SUM: u64 = 0x5e11;
const TAG_LIMIT: u64 = 0x5e12;
const TAG_SLICE: u64 = 0x5e13;

/// Distance estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "kebab-case")]
pub enum Estimator {
    Exact,
    Sliced { projections: usize },
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Exact => "exact",
            Estimator::Sliced { .. } => "sliced",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateExperimentConfig {
    pub n_grid: Vec<u64>,
    pub replicas: usize,
    pub estimator: Estimator,
    /// Cloud size is `min(n, cloud_cap)`.
    pub cloud_cap: usize,
    pub seed: u64,
    /// Replace `S_n` by independent draws of the limit law.
    pub null_model: bool,
    /// Common factor applied to both clouds.
    pub scale: f64,
    /// Fit model; defaults to the power model.
    pub fit_model: Option<RateModel>,
    /// Permit fitting sampled log-modified data.
    pub allow_log_rate_fit: bool,
    /// Worker threads (0: available parallelism).
    pub threads: usize,
}

impl Default for RateExperimentConfig {
    fn default() -> Self {
        RateExperimentConfig {
            n_grid: (6..=12).map(|k| 1u64 << k).collect(),
            replicas: 20,
            estimator: Estimator::Exact,
            cloud_cap: EXACT_CAP,
            seed: 7,
            null_model: false,
            scale: 1.0,
            fit_model: None,
            allow_log_rate_fit: false,
            threads: 0,
        }
    }
}

/// One `(n, replicate)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: u64,
    pub replicate: usize,
    pub distance: f64,
    /// Estimator standard error (0 for the exact solver).
    pub stderr: f64,
    pub estimator: String,
    /// Key of the cell's `S_n` stream.
    pub seed: u64,
}

/// Per-`n` aggregate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateLevel {
    pub n: u64,
    pub cloud_size: usize,
    pub mean_distance: f64,
    /// Standard error across replicates.
    pub stderr: f64,
    /// Bracketed bound (constant set to 1).
    pub bound: f64,
    pub bound_error: f64,
    pub distance_over_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateExperiment {
    pub rows: Vec<RateRow>,
    pub levels: Vec<RateLevel>,
    pub fit: Option<RateFit>,
    pub fit_refused: Option<String>,
    pub predicted: PredictedRate,
    pub predicted_label: String,
    /// Predicted `n`-exponent when the shape is a pure power.
    pub predicted_exponent: Option<f64>,
    /// `max/min` over the grid of distance/bound.
    pub prefactor_spread: f64,
}

fn check_grid(grid: &[u64], replicas: usize) -> Result<()> {
    if grid.is_empty() || grid.contains(&0) {
        return Err(invalid("n-grid must be non-empty with n >= 1"));
    }
    if replicas == 0 {
        return Err(invalid("need at least one replicate"));
    }
    Ok(())
}

fn distance(p: EmpiricalMeasure, q: EmpiricalMeasure, est: Estimator, key: u64) -> Result<(f64, f64)> {
    match est {
        Estimator::Exact => Ok((wasserstein1_exact(&p, &q)?, 0.0)),
        Estimator::Sliced { projections } => {
            let mut rng = substream_nd(key, &[TAG_SLICE]);
            let s = wasserstein1_sliced_detail(&p, &q, projections, &mut rng)?;
            Ok((s.value, s.stderr))
        }
    }
}

/// Runs `f` over `cells` on `threads` workers and returns results in cell
/// order.
fn run_cells<T: Send, F: Fn(usize) -> Result<T> + Sync>(cells: usize, threads: usize, f: F) -> Result<Vec<T>> {
    let workers = if threads == 0 { std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1) } else { threads };
    let workers = workers.clamp(1, cells.max(1));
    if workers == 1 {
        return (0..cells).map(&f).collect();
    }
    let mut out: Vec<Option<Result<T>>> = (0..cells).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                scope.spawn(move || (w..cells).step_by(workers).map(|i| (i, f(i))).collect::<Vec<_>>())
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                out[i] = Some(r);
            }
        }
    });
    out.into_iter().map(|r| r.expect("every cell computed")).collect()
}

/// `(mean, stderr)` of a sample.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0);
    (m, (v / k).sqrt())
}

/// The end-to-end rate experiment for one source law.
pub fn rate_experiment(source: &SourceLaw, cfg: &RateExperimentConfig) -> Result<RateExperiment> {
    check_grid(&cfg.n_grid, cfg.replicas)?;
    if !(cfg.scale > 0.0) || !cfg.scale.is_finite() {
        return Err(invalid("scale must be positive"));
    }
    if cfg.cloud_cap == 0 {
        return Err(invalid("cloud_cap must be positive"));
    }
    if cfg.estimator == Estimator::Exact && cfg.cloud_cap > EXACT_CAP {
        return Err(invalid(format!("exact estimator needs cloud_cap <= {EXACT_CAP}")));
    }
    let log_source = matches!(source.kind(), SourceKind::LogModified { .. });
    let limit = VectorSampler::new(source.law());
    let arrays: Vec<TriangularArray> =
        cfg.n_grid.iter().map(|&n| TriangularArray::new(source.clone(), n)).collect::<Result<_>>()?;
    let cells = cfg.n_grid.len() * cfg.replicas;
    let rows = run_cells(cells, cfg.threads, |cell| {
        let (k, rep) = (cell / cfg.replicas, cell % cfg.replicas);
        let n = cfg.n_grid[k];
        let m = (n as usize).min(cfg.cloud_cap);
        let key = derive_key(cfg.seed, derive_key(n, rep as u64));
        let mut rs = substream_nd(cfg.seed, &[TAG_SUM, n, rep as u64]);
        let mut rz = substream_nd(cfg.seed, &[TAG_LIMIT, n, rep as u64]);
        let sums = if cfg.null_model { limit.sample_n(m, &mut rs) } else { arrays[k].sample_cloud(m, &mut rs) };
        let refs = limit.sample_n(m, &mut rz);
        let p = EmpiricalMeasure::new(sums)?.scaled(cfg.scale);
        let q = EmpiricalMeasure::new(refs)?.scaled(cfg.scale);
        let (d, se) = distance(p, q, cfg.estimator, key)?;
        Ok(RateRow { n, replicate: rep, distance: d, stderr: se, estimator: cfg.estimator.name().to_string(), seed: key })
    })?;

    let mut levels = Vec::with_capacity(cfg.n_grid.len());
    for (k, arr) in arrays.iter().enumerate() {
        let ds: Vec<f64> = rows[k * cfg.replicas..(k + 1) * cfg.replicas].iter().map(|r| r.distance).collect();
        let (mean, se) = mean_se(&ds);
        let b = theoretical_bound(arr, None)?;
        levels.push(RateLevel {
            n: arr.n(),
            cloud_size: (arr.n() as usize).min(cfg.cloud_cap),
            mean_distance: mean,
            stderr: se,
            bound: b.value,
            bound_error: b.error,
            distance_over_bound: mean / b.value,
        });
    }
    let predicted = PredictedRate::for_source(&arrays[0]);
    let model = cfg.fit_model.unwrap_or(if log_source { RateModel::LogOnly } else { RateModel::Power });
    let (fit, fit_refused) = if log_source && !cfg.allow_log_rate_fit {
        (
            None,
            Some(
                "the log-modified rate is too slow to resolve by sampling at this scale; \
                 use the analytic bound, or set allow_log_rate_fit to fit anyway"
                    .to_string(),
            ),
        )
    } else {
        let table: Vec<RatePoint> =
            levels.iter().map(|l| RatePoint { n: l.n as f64, distance: l.mean_distance, stderr: l.stderr }).collect();
        match rate_fit(&table, model) {
            Ok(f) => (Some(f), None),
            Err(Error::InvalidParameter(m)) => (None, Some(m)),
            Err(e) => return Err(e),
        }
    };
    let ratios: Vec<f64> = levels.iter().map(|l| l.distance_over_bound).collect();
    let spread = ratios.iter().cloned().fold(f64::MIN, f64::max) / ratios.iter().cloned().fold(f64::MAX, f64::min);
    Ok(RateExperiment {
        rows,
        levels,
        fit,
        fit_refused,
        predicted,
        predicted_label: predicted.label(),
        predicted_exponent: match predicted {
            PredictedRate::Power { exponent } => Some(exponent),
            _ => None,
        },
        prefactor_spread: spread,
    })
}

/// Paired comparison of two modified-tail exponents under common random
/// numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingConfig {
    pub a: f64,
    /// The smaller β (slower predicted rate).
    pub beta_slow: f64,
    pub beta_fast: f64,
    pub n_grid: Vec<u64>,
    pub replicas: usize,
    pub estimator: Estimator,
    pub seed: u64,
    /// Pairs at `n ≥ min_n` enter the reported fraction.
    pub min_n: u64,
    pub threads: usize,
}

impl Default for OrderingConfig {
    fn default() -> Self {
        OrderingConfig {
            a: 0.75,
            beta_slow: 1.7,
            beta_fast: 3.0,
            n_grid: (8..=11).map(|k| 1u64 << k).collect(),
            replicas: 20,
            estimator: Estimator::Exact,
            seed: 11,
            min_n: 256,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingRow {
    pub n: u64,
    pub replicate: usize,
    pub distance_slow: f64,
    pub distance_fast: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingResult {
    pub rows: Vec<OrderingRow>,
    /// Fraction of counted pairs with `distance_slow > distance_fast`.
    pub fraction: f64,
    pub counted: usize,
}

/// For each cell the two `S_n` clouds reuse one random stream and share
/// one limit-law cloud.
pub fn ordering_experiment(law: &StableLaw, cfg: &OrderingConfig) -> Result<OrderingResult> {
    check_grid(&cfg.n_grid, cfg.replicas)?;
    if !(cfg.beta_slow < cfg.beta_fast) {
        return Err(invalid("beta_slow must be smaller than beta_fast"));
    }
    let slow = SourceLaw::modified_tail(law.clone(), cfg.a, cfg.beta_slow, TailProfile::CosSquared)?;
    let fast = SourceLaw::modified_tail(law.clone(), cfg.a, cfg.beta_fast, TailProfile::CosSquared)?;
    let limit = VectorSampler::new(law);
    let cells = cfg.n_grid.len() * cfg.replicas;
    let rows = run_cells(cells, cfg.threads, |cell| {
        let (k, rep) = (cell / cfg.replicas, cell % cfg.replicas);
        let n = cfg.n_grid[k];
        let m = (n as usize).min(EXACT_CAP);
        let key = derive_key(cfg.seed, derive_key(n, rep as u64));
        let coords = [TAG_SUM, n, rep as u64];
        let a_slow = TriangularArray::new(slow.clone(), n)?;
        let a_fast = TriangularArray::new(fast.clone(), n)?;
        let p_slow = a_slow.sample_cloud(m, &mut substream_nd(cfg.seed, &coords));
        let p_fast = a_fast.sample_cloud(m, &mut substream_nd(cfg.seed, &coords));
        let q = EmpiricalMeasure::new(limit.sample_n(m, &mut substream_nd(cfg.seed, &[TAG_LIMIT, n, rep as u64])))?;
        let (ds, _) = distance(EmpiricalMeasure::new(p_slow)?, q.clone(), cfg.estimator, key)?;
        let (df, _) = distance(EmpiricalMeasure::new(p_fast)?, q, cfg.estimator, key)?;
        Ok(OrderingRow { n, replicate: rep, distance_slow: ds, distance_fast: df })
    })?;
    let counted: Vec<&OrderingRow> = rows.iter().filter(|r| r.n >= cfg.min_n).collect();
    let wins = counted.iter().filter(|r| r.distance_slow > r.distance_fast).count();
    let fraction = if counted.is_empty() { f64::NAN } else { wins as f64 / counted.len() as f64 };
    let counted = counted.len();
    Ok(OrderingResult { rows, fraction, counted })
}

/// Writes a rate table as CSV with header `n,replicate,distance,stderr,estimator,seed`.
pub fn write_rate_table<W: std::io::Write>(rows: &[RateRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_rate_table<R: std::io::Read>(r: R) -> Result<Vec<RateRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in rd.deserialize() {
        out.push(row?);
    }
    Ok(out)
}
