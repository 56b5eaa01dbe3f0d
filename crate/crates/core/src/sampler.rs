//! Stable random variables and vectors.
//!
//! The primary vector sampler draws one skewed one-dimensional stable
//! variable per line of the reduced spectral measure and sums them along
//! the line directions; its characteristic exponent is exactly the reduced
//! ψ. A shot-noise series sampler gives an independent route to the same
//! law for cross-checks.

use crate::error::{invalid, Result};
use crate::spectral::{check_alpha, Line, StableLaw};
use crate::sphere::dot;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Precomputed constants of the trigonometric transform for one (α, skew).
#[derive(Debug, Clone, Copy)]
struct Cms {
    alpha: f64,
    b: f64,
    s: f64,
    inv_alpha: f64,
    expo: f64,
}

impl Cms {
    fn new(alpha: f64, skew: f64) -> Self {
        let t = (PI * alpha / 2.0).tan();
        let b = (skew * t).atan() / alpha;
        let s = (1.0 + skew * skew * t * t).powf(1.0 / (2.0 * alpha));
        Cms { alpha, b, s, inv_alpha: 1.0 / alpha, expo: (1.0 - alpha) / alpha }
    }

    /// Unit-scale draw with CF `exp(−|λ|^α(1 − i·skew·tan(πα/2)·sgn λ))`.
    #[inline]
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = Open01.sample(rng);
        let v = PI * (u - 0.5);
        let w: f64 = Exp1.sample(rng);
        let a = self.alpha * (v + self.b);
        let cv = v.cos();
        self.s * a.sin() / cv.powf(self.inv_alpha) * ((v - a).cos() / w).powf(self.expo)
    }
}

/// One draw of a stable variable with characteristic function
/// `exp(−scale·|λ|^α(1 − i·skew·tan(πα/2)·sgn λ))`.
pub fn sample_stable_1d<R: Rng + ?Sized>(alpha: f64, skew: f64, scale: f64, rng: &mut R) -> Result<f64> {
    check_alpha(alpha)?;
    if !(skew.abs() <= 1.0) {
        return Err(invalid(format!("skew must lie in [-1,1], got {skew}")));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(invalid(format!("scale must be positive, got {scale}")));
    }
    Ok(scale.powf(1.0 / alpha) * Cms::new(alpha, skew).draw(rng))
}

#[derive(Debug, Clone)]
struct LineDraw {
    theta: Vec<f64>,
    factor: f64,
    cms: Cms,
}

/// Vector sampler built from the line reduction of a [`StableLaw`].
#[derive(Debug, Clone)]
pub struct VectorSampler {
    d: usize,
    lines: Vec<LineDraw>,
}

impl VectorSampler {
    pub fn new(law: &StableLaw) -> Self {
        let alpha = law.alpha();
        let lines = law
            .lines()
            .iter()
            .filter(|l| l.w_plus + l.w_minus > 0.0)
            .map(|l: &Line| {
                let scale = l.w_plus + l.w_minus;
                let skew = ((l.w_plus - l.w_minus) / scale).clamp(-1.0, 1.0);
                LineDraw { theta: l.theta.clone(), factor: scale.powf(1.0 / alpha), cms: Cms::new(alpha, skew) }
            })
            .collect();
        VectorSampler { d: law.dim(), lines }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Writes one draw of `Z_1` into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for l in &self.lines {
            let x = l.factor * l.cms.draw(rng);
            for (o, t) in out.iter_mut().zip(&l.theta) {
                *o += x * t;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut v = vec![0.0; self.d];
        self.sample_into(rng, &mut v);
        v
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

/// One draw of `Z_1 ∼ π` (builds a sampler; prefer [`VectorSampler`] in loops).
pub fn sample_stable_vector<R: Rng + ?Sized>(law: &StableLaw, rng: &mut R) -> Vec<f64> {
    VectorSampler::new(law).sample(rng)
}

/// `Z_t = t^{1/α} Z_1`.
pub fn sample_levy_increment<R: Rng + ?Sized>(law: &StableLaw, t: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid(format!("time must be positive, got {t}")));
    }
    let c = t.powf(1.0 / law.alpha());
    Ok(sample_stable_vector(law, rng).into_iter().map(|x| c * x).collect())
}

/// Shot-noise series sampler: jumps `r_j θ_j` with `r_j = (αΓ_j/d_α)^{−1/α}`
/// over the Poisson arrivals `Γ_j ≤ T` (so about `T` jumps), compensated by
/// their mean, plus a Gaussian stand-in for the jumps below the cutoff.
#[derive(Debug, Clone)]
pub struct SeriesSampler {
    law: StableLaw,
    horizon: f64,
    c: f64,
    compensator: Vec<f64>,
    chol: Vec<Vec<f64>>,
}

impl SeriesSampler {
    pub fn new(law: &StableLaw, series_terms: usize) -> Result<Self> {
        if series_terms < 1000 {
            return Err(invalid(format!("series oracle needs >= 1000 terms, got {series_terms}")));
        }
        let alpha = law.alpha();
        let d = law.dim();
        let c = law.d_alpha() / alpha;
        let horizon = series_terms as f64;
        let mut mean_dir = vec![0.0; d];
        let mut second = vec![vec![0.0; d]; d];
        for l in law.lines() {
            for i in 0..d {
                mean_dir[i] += (l.w_plus - l.w_minus) * l.theta[i];
                for j in 0..d {
                    second[i][j] += (l.w_plus + l.w_minus) * l.theta[i] * l.theta[j];
                }
            }
        }
        // E Σ_{Γ_j ≤ T} r_j = ∫_0^T (γ/c)^{−1/α} dγ
        let mean_r = c.powf(1.0 / alpha) * horizon.powf(1.0 - 1.0 / alpha) / (1.0 - 1.0 / alpha);
        let compensator = mean_dir.iter().map(|m| m * mean_r).collect();
        // small jumps r < ε carry covariance d_α ε^{2−α}/(2−α) ∫θθᵀν
        let eps = (horizon / c).powf(-1.0 / alpha);
        let var = law.d_alpha() * eps.powf(2.0 - alpha) / (2.0 - alpha);
        let cov: Vec<Vec<f64>> = second.iter().map(|r| r.iter().map(|x| x * var).collect()).collect();
        let chol = cholesky_psd(&cov);
        Ok(SeriesSampler { law: law.clone(), horizon, c, compensator, chol })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.law.dim();
        let alpha = self.law.alpha();
        let mut z: Vec<f64> = self.compensator.iter().map(|m| -m).collect();
        let mut gamma = 0.0;
        loop {
            let e: f64 = Exp1.sample(rng);
            gamma += e;
            if gamma > self.horizon {
                break;
            }
            let r = (gamma / self.c).powf(-1.0 / alpha);
            let th = self.law.nu().sample_direction(rng);
            for i in 0..d {
                z[i] += r * th[i];
            }
        }
        let g: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        for i in 0..d {
            for j in 0..=i {
                z[i] += self.chol[i][j] * g[j];
            }
        }
        z
    }
}

fn cholesky_psd(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                l[i][i] = s.max(0.0).sqrt();
            } else if l[j][j] > 0.0 {
                l[i][j] = s / l[j][j];
            }
        }
    }
    l
}

/// Which vector sampler to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerMethod {
    #[default]
    DirectionQuadrature,
    SeriesOracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableSamplerConfig {
    pub method: SamplerMethod,
    pub series_terms: usize,
    /// Probe frequencies; empty means the default 25-point set.
    #[serde(default)]
    pub cf_check_frequencies: Vec<Vec<f64>>,
}

impl Default for StableSamplerConfig {
    fn default() -> Self {
        StableSamplerConfig { method: SamplerMethod::DirectionQuadrature, series_terms: 4000, cf_check_frequencies: vec![] }
    }
}

/// Draws `n` vectors with the configured method.
pub fn sample_batch<R: Rng + ?Sized>(
    law: &StableLaw,
    cfg: &StableSamplerConfig,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    Ok(match cfg.method {
        SamplerMethod::DirectionQuadrature => VectorSampler::new(law).sample_n(n, rng),
        SamplerMethod::SeriesOracle => {
            let s = SeriesSampler::new(law, cfg.series_terms)?;
            (0..n).map(|_| s.sample(rng)).collect()
        }
    })
}

/// Empirical characteristic function `(1/N) Σ exp(i⟨z, x_k⟩)`.
pub fn empirical_cf(samples: &[Vec<f64>], z: &[f64]) -> Complex64 {
    let (mut c, mut s) = (0.0, 0.0);
    for x in samples {
        let p = dot(z, x);
        c += p.cos();
        s += p.sin();
    }
    Complex64::new(c, s) / samples.len() as f64
}

/// Comparison of an empirical CF with `exp(−ψ)` over a probe set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CfReport {
    pub n: usize,
    pub max_deviation: f64,
    pub worst_probe: Vec<f64>,
    /// `4/√N + max quadrature budget on the probe set`.
    pub tolerance: f64,
    pub quadrature_budget: f64,
    pub pass: bool,
}

pub fn cf_check(law: &StableLaw, samples: &[Vec<f64>], probes: &[Vec<f64>]) -> Result<CfReport> {
    let n = samples.len();
    let mut worst = 0.0;
    let mut worst_probe = probes.first().cloned().unwrap_or_default();
    let mut budget: f64 = 0.0;
    for z in probes {
        let e = law.psi(z)?;
        // |exp(−ψ) − exp(−ψ')| ≤ |ψ − ψ'| when Re ψ, Re ψ' ≥ 0
        budget = budget.max(e.budget);
        let dev = (empirical_cf(samples, z) - (-e.value).exp()).norm();
        if dev > worst {
            worst = dev;
            worst_probe = z.clone();
        }
    }
    let tolerance = 4.0 / (n as f64).sqrt() + budget;
    Ok(CfReport { n, max_deviation: worst, worst_probe, tolerance, quadrature_budget: budget, pass: worst <= tolerance })
}

/// Density table from Fourier inversion on a square lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityTable {
    /// Points per axis.
    pub n: usize,
    pub spacing: f64,
    /// Lattice covers `[−R, R)` in each coordinate.
    pub half_width: f64,
    /// Row-major: `values[i*n + j]` is the density at `(x_i, x_j)`.
    pub values: Vec<f64>,
    pub lattice_mass: f64,
    /// Largest `exp(−Re ψ)` on the boundary of the frequency box.
    pub nyquist_residual: f64,
}

impl DensityTable {
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing
    }
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
    /// Index of the lattice point closest to `x` along an axis.
    pub fn index_of(&self, x: f64) -> usize {
        (((x + self.half_width) / self.spacing).round() as usize).min(self.n - 1)
    }
}

/// Density of `Z_1` for d = 2 by discrete Fourier inversion of `exp(−ψ)` on
/// an `n × n` lattice of spacing `h` centred at the origin (`n` even).
pub fn density_by_cf_inversion(law: &StableLaw, n: usize, h: f64) -> Result<DensityTable> {
    use rustfft::FftPlanner;
    if law.dim() != 2 {
        return Err(invalid(format!("Fourier inversion is limited to d <= 2, got d = {}", law.dim())));
    }
    if n < 8 || n % 2 != 0 || !(h > 0.0) {
        return Err(invalid("lattice needs an even size >= 8 and positive spacing"));
    }
    let half_width = 0.5 * n as f64 * h;
    let dw = 2.0 * PI / (n as f64 * h);
    let freq = |k: usize| -> f64 {
        let k = k as i64;
        let s = if k >= n as i64 / 2 { k - n as i64 } else { k };
        s as f64 * dw
    };
    // the box boundary sits at |ω_i| = π/h
    let wmax = PI / h;
    let mut nyq: f64 = 0.0;
    for k in 0..n {
        let t = freq(k);
        for z in [[wmax, t], [t, wmax], [-wmax, t], [t, -wmax]] {
            nyq = nyq.max((-law.psi_value(&z).re).exp());
        }
    }
    if nyq > 1e-8 {
        return Err(invalid(format!(
            "lattice spacing {h} truncates the characteristic function at {nyq:.3e} (> 1e-8); use a finer spacing"
        )));
    }
    let mut buf: Vec<Complex64> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let z = [freq(i), freq(j)];
            // phase e^{iω·R} = (−1)^{k} per axis since ΔωR = π
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            buf.push((-law.psi_value(&z)).exp() * sign);
        }
    }
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    // rows then columns
    for row in buf.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = buf[i * n + j];
        }
        fft.process(&mut col);
        for i in 0..n {
            buf[i * n + j] = col[i];
        }
    }
    let norm = (dw / (2.0 * PI)).powi(2);
    let values: Vec<f64> = buf.iter().map(|c| c.re * norm).collect();
    let lattice_mass = values.iter().sum::<f64>() * h * h;
    Ok(DensityTable { n, spacing: h, half_width, values, lattice_mass, nyquist_residual: nyq })
}

/// Smallest power-of-two-friendly spacing `h` whose Nyquist box keeps
/// `exp(−Re ψ)` below `1e−8`, using the minimal directional exponent.
pub fn suggested_spacing(law: &StableLaw) -> f64 {
    let m = law.min_directional_exponent().value.max(1e-12);
    // need m·(π/h)^α ≥ ln(1e8)
    let wmax = (8.0 * 10f64.ln() / m).powf(1.0 / law.alpha()) * 1.05;
    PI / wmax
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn rejects_bad_parameters() {
        let mut r = substream(1, 0);
        assert!(sample_stable_1d(1.5, 1.1, 1.0, &mut r).is_err());
        assert!(sample_stable_1d(1.5, 0.0, 0.0, &mut r).is_err());
        assert!(sample_stable_1d(0.9, 0.0, 1.0, &mut r).is_err());
    }

    #[test]
    fn identical_seeds_identical_draws() {
        let law = StableLaw::preset(1.5, "mixture", 2).unwrap();
        let s = VectorSampler::new(&law);
        let a = s.sample_n(50, &mut substream(9, 1));
        let b = s.sample_n(50, &mut substream(9, 1));
        assert_eq!(a, b);
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = vec![vec![4.0, 2.0], vec![2.0, 3.0]];
        let l = cholesky_psd(&a);
        for i in 0..2 {
            for j in 0..2 {
                let s: f64 = (0..2).map(|k| l[i][k] * l[j][k]).sum();
                assert!((s - a[i][j]).abs() < 1e-14);
            }
        }
    }
}
