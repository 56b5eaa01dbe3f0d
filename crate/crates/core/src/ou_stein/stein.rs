//! Monte Carlo semigroup, Stein solution and derivative estimators.
//!
//! With `X_t^x = e^{−t/α}x + (1−e^{−t})^{1/α}Y`, `Y ∼ π`, the solution
//! `f(x) = −∫_0^∞ (Q_t h(x) − π(h)) dt` is estimated on a frozen bank of
//! pairs `(t_k, Y_k)`: times are stratified draws from the density
//! `∝ e^{−t/α}` on `[0, T]` and the same `Y_k` is used inside `X_t^x` and
//! as the stationary control, so `h(X) − h(Y)` is small when `t` is large.
//! Every derived quantity (gradient, fractional operator, generator) is
//! computed from the same bank, so finite differences enjoy common random
//! numbers.

use super::functions::SmoothFunction;
use super::laplacian::{FracLaplacian, LaplacianQuadrature};
use crate::error::{invalid, Error, Result};
use crate::rng::substream;
use crate::sampler::VectorSampler;
use crate::spectral::StableLaw;
use crate::sphere::{dot, norm};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Monte Carlo mean with standard error and deterministic budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub budget: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, stderr: 0.0, budget: 0.0 }
    }
    /// `3·stderr + budget`.
    pub fn tolerance(&self) -> f64 {
        3.0 * self.stderr + self.budget
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VecEstimate {
    pub value: Vec<f64>,
    pub stderr: Vec<f64>,
    pub budget: f64,
}

impl VecEstimate {
    pub fn norm(&self) -> f64 {
        norm(&self.value)
    }
    /// Standard error of the norm (delta method).
    pub fn norm_stderr(&self) -> f64 {
        let n = self.norm();
        if n == 0.0 {
            return norm(&self.stderr);
        }
        self.value.iter().zip(&self.stderr).map(|(v, s)| (v * s / n).powi(2)).sum::<f64>().sqrt()
    }
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// `e^{−t/α}x + (1−e^{−t})^{1/α}·Z` with `Z ∼ π`.
pub fn ou_marginal_sample<R: Rng + ?Sized>(law: &StableLaw, x: &[f64], t: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(invalid(format!("time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(x.to_vec());
    }
    let z = VectorSampler::new(law).sample(rng);
    Ok(ou_point(law.alpha(), x, t, &z))
}

/// `e^{−t/α}x + (1−e^{−t})^{1/α}y`.
pub fn ou_point(alpha: f64, x: &[f64], t: f64, y: &[f64]) -> Vec<f64> {
    let lam = (-t / alpha).exp();
    let c = (-(-t).exp_m1()).powf(1.0 / alpha);
    x.iter().zip(y).map(|(xi, yi)| lam * xi + c * yi).collect()
}

/// Stationary draws shared across points and times.
#[derive(Debug, Clone)]
pub struct YBank {
    pub draws: Vec<Vec<f64>>,
}

impl YBank {
    pub fn new<R: Rng + ?Sized>(law: &StableLaw, n: usize, rng: &mut R) -> Self {
        YBank { draws: VectorSampler::new(law).sample_n(n, rng) }
    }
    pub fn mean_norm(&self) -> f64 {
        self.draws.iter().map(|y| norm(y)).sum::<f64>() / self.draws.len() as f64
    }
}

/// `Q_t h(x)` on a shared bank (common random numbers across x and t).
pub fn semigroup_apply_bank(alpha: f64, h: &dyn SmoothFunction, x: &[f64], t: f64, bank: &YBank) -> Result<Estimate> {
    if !(t >= 0.0) {
        return Err(invalid(format!("time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(Estimate::exact(h.value(x)));
    }
    let vals: Vec<f64> = bank.draws.iter().map(|y| h.value(&ou_point(alpha, x, t, y))).collect();
    let (m, s) = mean_stderr(&vals);
    Ok(Estimate { value: m, stderr: s, budget: 0.0 })
}

/// `Q_t h(x)` with `mc` fresh draws.
pub fn semigroup_apply<R: Rng + ?Sized>(
    law: &StableLaw,
    h: &dyn SmoothFunction,
    x: &[f64],
    t: f64,
    mc: usize,
    rng: &mut R,
) -> Result<Estimate> {
    if mc == 0 {
        return Err(invalid("mc must be >= 1"));
    }
    if t == 0.0 {
        return Ok(Estimate::exact(h.value(x)));
    }
    let bank = YBank::new(law, mc, rng);
    semigroup_apply_bank(law.alpha(), h, x, t, &bank)
}

/// Controls of the Stein-solution estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteinSolverConfig {
    /// `T`.
    pub time_truncation: f64,
    /// Time strata.
    pub time_samples: usize,
    /// Stationary draws per time stratum.
    pub mc_per_time: usize,
    /// Draws for π(h) and π(∇h).
    pub pi_h_samples: usize,
    pub fd_step: f64,
    /// Largest admissible truncation bound.
    pub tolerance: f64,
    /// Bank entries (systematic subsample) used for `L^α f`.
    pub laplacian_samples: usize,
    pub quad: LaplacianQuadrature,
}

impl Default for SteinSolverConfig {
    fn default() -> Self {
        SteinSolverConfig {
            time_truncation: 15.0,
            time_samples: 4096,
            mc_per_time: 8,
            pi_h_samples: 1_000_000,
            fd_step: 1e-2,
            tolerance: 1e-2,
            laplacian_samples: 512,
            quad: LaplacianQuadrature::default(),
        }
    }
}

impl SteinSolverConfig {
    /// `T = α·ln((1+R)/tol)` so that `e^{−T/α}(1+R) = tol`.
    pub fn for_radius(alpha: f64, radius: f64, tol: f64) -> Self {
        SteinSolverConfig { time_truncation: alpha * ((1.0 + radius) / tol).ln(), ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.time_truncation > 0.0) || self.time_samples == 0 || self.mc_per_time == 0 || self.pi_h_samples == 0 {
            return Err(invalid("Stein solver needs positive truncation and sample counts"));
        }
        if !(self.fd_step > 0.0) || self.laplacian_samples == 0 {
            return Err(invalid("fd_step and laplacian_samples must be positive"));
        }
        Ok(())
    }
}

/// Frozen random inputs of the estimators: `(t_k, w_k, Y_k)` and a separate
/// stationary bank for π(·).
#[derive(Debug, Clone)]
pub struct SteinBank {
    alpha: f64,
    cfg: SteinSolverConfig,
    times: Vec<f64>,
    weights: Vec<f64>,
    ys: Vec<Vec<f64>>,
    pi_bank: YBank,
    mean_abs_z: f64,
    law: StableLaw,
}

/// Stratified draw from the density `∝ e^{−t/α}` on `[0, T]`, with its
/// importance weight `1/q(t)`.
fn stratified_time(alpha: f64, horizon: f64, u: f64) -> (f64, f64) {
    let mass = -(-horizon / alpha).exp_m1();
    let t = -alpha * (-u * mass).ln_1p();
    (t, alpha * mass * (t / alpha).exp())
}

impl SteinBank {
    pub fn new(law: &StableLaw, cfg: SteinSolverConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let alpha = law.alpha();
        let sampler = VectorSampler::new(law);
        let mut rng = substream(seed, 0x5713_0001);
        let k = cfg.time_samples;
        let mut times = Vec::with_capacity(k * cfg.mc_per_time);
        let mut weights = Vec::with_capacity(k * cfg.mc_per_time);
        let mut ys = Vec::with_capacity(k * cfg.mc_per_time);
        // replicate-major layout: entry r*k + i is stratum i of replicate r,
        // so any prefix of whole replicates is itself stratified
        for _ in 0..cfg.mc_per_time {
            for i in 0..k {
                let u = (i as f64 + rng.random::<f64>()) / k as f64;
                let (t, w) = stratified_time(alpha, cfg.time_truncation, u);
                times.push(t);
                weights.push(w);
                ys.push(sampler.sample(&mut rng));
            }
        }
        let mut prng = substream(seed, 0x5713_0002);
        let pi_bank = YBank::new(law, cfg.pi_h_samples, &mut prng);
        let mean_abs_z = pi_bank.mean_norm();
        Ok(SteinBank { alpha, cfg, times, weights, ys, pi_bank, mean_abs_z, law: law.clone() })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
    pub fn config(&self) -> &SteinSolverConfig {
        &self.cfg
    }
    pub fn law(&self) -> &StableLaw {
        &self.law
    }
    /// Sample mean of `|Z|` over the stationary bank.
    pub fn mean_abs_z(&self) -> f64 {
        self.mean_abs_z
    }
    pub fn pi_bank(&self) -> &YBank {
        &self.pi_bank
    }

    fn point(&self, k: usize, x: &[f64], out: &mut [f64]) {
        let t = self.times[k];
        let lam = (-t / self.alpha).exp();
        let c = (-(-t).exp_m1()).powf(1.0 / self.alpha);
        for ((o, xi), yi) in out.iter_mut().zip(x).zip(&self.ys[k]) {
            *o = lam * xi + c * yi;
        }
    }

    /// Indices of the systematic subsample used for `L^α f`.
    fn laplacian_indices(&self) -> impl Iterator<Item = usize> {
        let n = self.len();
        let m = self.cfg.laplacian_samples.min(n);
        let stride = n as f64 / m as f64;
        (0..m).map(move |j| ((j as f64 + 0.5) * stride) as usize)
    }
}

/// Handle computing `f_h`, `∇f_h`, `L^α f_h` and `A f_h` at points.
#[derive(Clone)]
pub struct SteinSolution {
    bank: Arc<SteinBank>,
    h: Arc<dyn SmoothFunction>,
    op: Arc<FracLaplacian>,
    pi_h: Estimate,
    pi_grad: Vec<f64>,
    lipschitz: f64,
}

impl SteinSolution {
    pub fn new(bank: Arc<SteinBank>, h: Arc<dyn SmoothFunction>) -> Result<Self> {
        let op = Arc::new(FracLaplacian::new(&bank.law, bank.cfg.quad)?);
        Self::with_operator(bank, h, op)
    }

    /// Shares a prepared fractional operator between solutions.
    pub fn with_operator(bank: Arc<SteinBank>, h: Arc<dyn SmoothFunction>, op: Arc<FracLaplacian>) -> Result<Self> {
        let d = bank.law.dim();
        let vals: Vec<f64> = bank.pi_bank.draws.iter().map(|y| h.value(y)).collect();
        let (m, s) = mean_stderr(&vals);
        let mut pi_grad = vec![0.0; d];
        let mut g = vec![0.0; d];
        for y in &bank.pi_bank.draws {
            h.grad(y, &mut g);
            for (p, gi) in pi_grad.iter_mut().zip(&g) {
                *p += gi;
            }
        }
        let n = bank.pi_bank.draws.len() as f64;
        pi_grad.iter_mut().for_each(|p| *p /= n);
        let lipschitz = h.lipschitz().unwrap_or(1.0);
        Ok(SteinSolution { bank, h, op, pi_h: Estimate { value: m, stderr: s, budget: 0.0 }, pi_grad, lipschitz })
    }

    pub fn bank(&self) -> &SteinBank {
        &self.bank
    }
    pub fn test_function(&self) -> &dyn SmoothFunction {
        self.h.as_ref()
    }
    pub fn operator(&self) -> &FracLaplacian {
        &self.op
    }
    /// Estimate of π(h) from the stationary bank.
    pub fn pi_h(&self) -> Estimate {
        self.pi_h
    }

    /// `α e^{−T/α} ‖∇h‖ (|x| + Ê|Z|)`.
    pub fn truncation_bound(&self, x: &[f64]) -> f64 {
        let a = self.bank.alpha;
        a * (-self.bank.cfg.time_truncation / a).exp() * self.lipschitz * (norm(x) + self.bank.mean_abs_z)
    }

    fn check_truncation(&self, x: &[f64]) -> Result<f64> {
        let b = self.truncation_bound(x);
        if b > self.bank.cfg.tolerance {
            return Err(Error::Budget(format!(
                "truncation bound {b:.3e} at |x| = {:.3} exceeds tolerance {:.3e}; raise time_truncation",
                norm(x),
                self.bank.cfg.tolerance
            )));
        }
        Ok(b)
    }

    /// `f_h(x)`.
    pub fn value(&self, x: &[f64]) -> Result<Estimate> {
        let budget = self.check_truncation(x)?;
        let b = &self.bank;
        let mut p = vec![0.0; x.len()];
        let terms: Vec<f64> = (0..b.len())
            .map(|k| {
                b.point(k, x, &mut p);
                -b.weights[k] * (self.h.value(&p) - self.h.value(&b.ys[k]))
            })
            .collect();
        let (m, s) = mean_stderr(&terms);
        Ok(Estimate { value: m, stderr: s, budget })
    }

    /// `∇f_h(x) = −∫_0^∞ e^{−t/α} E∇h(X_t^x) dt`; the part beyond `T` is
    /// replaced by `−α e^{−T/α} π(∇h)`.
    pub fn grad(&self, x: &[f64]) -> Result<VecEstimate> {
        let b = &self.bank;
        let d = x.len();
        let a = b.alpha;
        let tail = (-b.cfg.time_truncation / a).exp();
        let scale = a * (1.0 - tail);
        let mut p = vec![0.0; d];
        let mut g = vec![0.0; d];
        let mut sum = vec![0.0; d];
        let mut sq = vec![0.0; d];
        for k in 0..b.len() {
            b.point(k, x, &mut p);
            self.h.grad(&p, &mut g);
            for i in 0..d {
                sum[i] += g[i];
                sq[i] += g[i] * g[i];
            }
        }
        let n = b.len() as f64;
        let value: Vec<f64> = (0..d).map(|i| -scale * sum[i] / n - a * tail * self.pi_grad[i]).collect();
        let stderr: Vec<f64> = (0..d)
            .map(|i| {
                let m = sum[i] / n;
                let v = ((sq[i] / n - m * m) * n / (n - 1.0).max(1.0)).max(0.0);
                scale * (v / n).sqrt()
            })
            .collect();
        let hess = self.h.hessian_bound().unwrap_or(f64::INFINITY);
        let budget = a * tail * (2.0 * self.lipschitz).min(hess * (tail * norm(x) + b.mean_abs_z));
        if budget > b.cfg.tolerance {
            return Err(Error::Budget(format!(
                "gradient truncation bound {budget:.3e} at |x| = {:.3} exceeds tolerance {:.3e}; raise time_truncation",
                norm(x),
                b.cfg.tolerance
            )));
        }
        Ok(VecEstimate { value, stderr, budget })
    }

    /// `L^α f_h(x) = −E[w e^{−t} (L^α h)(X_t^x)]` over the subsample.
    pub fn laplacian(&self, x: &[f64]) -> Result<Estimate> {
        let (est, _) = self.laplacian_terms(x)?;
        Ok(est)
    }

    /// Per-entry terms, so that differences at two points can share them.
    pub fn laplacian_terms(&self, x: &[f64]) -> Result<(Estimate, Vec<f64>)> {
        let b = &self.bank;
        let mut p = vec![0.0; x.len()];
        let mut terms = Vec::with_capacity(b.cfg.laplacian_samples);
        let mut budget = 0.0;
        for k in b.laplacian_indices() {
            b.point(k, x, &mut p);
            let l = self.op.apply(self.h.as_ref(), &p)?;
            let c = b.weights[k] * (-b.times[k]).exp();
            terms.push(-c * l.value);
            budget += c * l.budget;
        }
        let (m, s) = mean_stderr(&terms);
        let budget = budget / terms.len() as f64;
        Ok((Estimate { value: m, stderr: s, budget }, terms))
    }

    /// `A f_h(x) = L^α f_h(x) − (1/α)⟨x, ∇f_h(x)⟩`.
    pub fn generator(&self, x: &[f64]) -> Result<Estimate> {
        let l = self.laplacian(x)?;
        let g = self.grad(x)?;
        let a = self.bank.alpha;
        let drift = dot(x, &g.value) / a;
        let drift_se = x.iter().zip(&g.stderr).map(|(xi, s)| (xi * s).powi(2)).sum::<f64>().sqrt() / a;
        Ok(Estimate {
            value: l.value - drift,
            stderr: (l.stderr.powi(2) + drift_se.powi(2)).sqrt(),
            budget: l.budget + norm(x) * g.budget / a,
        })
    }

    /// Central-difference Hessian of `f_h` from the gradient estimator.
    pub fn hessian_fd(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let d = x.len();
        let e = self.bank.cfg.fd_step;
        let mut hm = vec![vec![0.0; d]; d];
        for j in 0..d {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[j] += e;
            m[j] -= e;
            let gp = self.grad(&p)?;
            let gm = self.grad(&m)?;
            for i in 0..d {
                hm[i][j] = (gp.value[i] - gm.value[i]) / (2.0 * e);
            }
        }
        Ok(hm)
    }
}

/// Operator norm of a square matrix (largest singular value).
pub fn operator_norm(m: &[Vec<f64>]) -> f64 {
    let d = m.len();
    // power iteration on MᵀM
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut s = 0.0;
    for _ in 0..200 {
        let mv: Vec<f64> = (0..d).map(|i| dot(&m[i], &v)).collect();
        let w: Vec<f64> = (0..d).map(|j| (0..d).map(|i| m[i][j] * mv[i]).sum()).collect();
        let n = norm(&w);
        if n == 0.0 {
            return 0.0;
        }
        v = w.iter().map(|x| x / n).collect();
        s = n;
    }
    s.sqrt()
}

/// `Ê[A f_h(Z)]` over `outer` stationary draws, each with `inner` fresh
/// `(t, Y)` pairs, so the per-draw terms are independent.
pub fn stein_identity(
    law: &StableLaw,
    h: &dyn SmoothFunction,
    op: &FracLaplacian,
    time_truncation: f64,
    outer: usize,
    inner: usize,
    seed: u64,
) -> Result<Estimate> {
    if outer < 2 || inner == 0 {
        return Err(invalid("stein identity needs outer >= 2 and inner >= 1"));
    }
    let a = law.alpha();
    let d = law.dim();
    let sampler = VectorSampler::new(law);
    let mut terms = Vec::with_capacity(outer);
    let mut budget = 0.0;
    let mut x = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut z = vec![0.0; d];
    let mut y = vec![0.0; d];
    for j in 0..outer {
        let mut rng = substream(seed, j as u64);
        sampler.sample_into(&mut rng, &mut z);
        let mut acc = 0.0;
        for i in 0..inner {
            let u = (i as f64 + rng.random::<f64>()) / inner as f64;
            let (t, w) = stratified_time(a, time_truncation, u);
            sampler.sample_into(&mut rng, &mut y);
            let lam = (-t / a).exp();
            let c = (-(-t).exp_m1()).powf(1.0 / a);
            for k in 0..d {
                x[k] = lam * z[k] + c * y[k];
            }
            let l = op.apply(h, &x)?;
            h.grad(&x, &mut g);
            let e = (-t).exp();
            acc += -w * (e * l.value - lam * dot(&z, &g) / a);
            budget += w * e * l.budget;
        }
        terms.push(acc / inner as f64);
    }
    let (m, s) = mean_stderr(&terms);
    Ok(Estimate { value: m, stderr: s, budget: budget / (outer * inner) as f64 })
}

/// Both sides of `∂_t Q_t h = A Q_t h` at `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatResidual {
    /// Central difference in `t` (common random numbers).
    pub time_derivative: Estimate,
    /// `A(Q_t h)(x)`.
    pub generator: Estimate,
    pub residual: f64,
    pub relative: f64,
    /// `3·combined stderr + budgets`.
    pub tolerance: f64,
}

/// Heat-equation check on a shared stationary bank; the `L^α` part uses the
/// first `laplacian_samples` draws of the bank.
pub fn heat_equation_residual(
    op: &FracLaplacian,
    h: &dyn SmoothFunction,
    x: &[f64],
    t: f64,
    dt: f64,
    bank: &YBank,
    laplacian_samples: usize,
) -> Result<HeatResidual> {
    if !(t > 0.0) || !(dt > 0.0) || dt >= t {
        return Err(invalid("need t > dt > 0"));
    }
    let a = op.alpha();
    let d = x.len();
    let fd: Vec<f64> = bank
        .draws
        .iter()
        .map(|y| (h.value(&ou_point(a, x, t + dt, y)) - h.value(&ou_point(a, x, t - dt, y))) / (2.0 * dt))
        .collect();
    let (fm, fs) = mean_stderr(&fd);
    // third time derivative is not tracked; the O(dt²) bias is taken as the
    // difference between steps dt and 2dt
    let fd2: Vec<f64> = bank
        .draws
        .iter()
        .map(|y| (h.value(&ou_point(a, x, t + 2.0 * dt, y)) - h.value(&ou_point(a, x, t - 2.0 * dt, y))) / (4.0 * dt))
        .collect();
    let (fm2, _) = mean_stderr(&fd2);
    let fd_bias = (fm2 - fm).abs() / 3.0;
    let lam = (-t / a).exp();
    let decay = (-t).exp();
    let mut g = vec![0.0; d];
    let mut drift_terms = Vec::with_capacity(bank.draws.len());
    for y in &bank.draws {
        let p = ou_point(a, x, t, y);
        h.grad(&p, &mut g);
        drift_terms.push(-lam * dot(x, &g) / a);
    }
    let n_l = laplacian_samples.min(bank.draws.len());
    let mut lap_terms = Vec::with_capacity(n_l);
    let mut budget = 0.0;
    for y in &bank.draws[..n_l] {
        let p = ou_point(a, x, t, y);
        let l = op.apply(h, &p)?;
        lap_terms.push(decay * l.value);
        budget += decay * l.budget;
    }
    let budget = budget / n_l as f64;
    let (lm, ls) = mean_stderr(&lap_terms);
    let (dm, ds) = mean_stderr(&drift_terms);
    let gen = Estimate { value: lm + dm, stderr: (ls * ls + ds * ds).sqrt(), budget };
    let der = Estimate { value: fm, stderr: fs, budget: fd_bias };
    let residual = (der.value - gen.value).abs();
    let relative = if gen.value != 0.0 { residual / gen.value.abs() } else { f64::INFINITY };
    let tolerance = 3.0 * (der.stderr.powi(2) + gen.stderr.powi(2)).sqrt() + der.budget + gen.budget;
    Ok(HeatResidual { time_derivative: der, generator: gen, residual, relative, tolerance })
}
