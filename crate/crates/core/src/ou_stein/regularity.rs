//! First- and second-order regularity of Stein solutions and the Hölder
//! estimate for `L^α f`.

use super::functions::FnRef;
use super::stein::{operator_norm, SteinBank, SteinSolution};
use super::laplacian::FracLaplacian;
use crate::error::Result;
use crate::rng::substream;
use crate::sphere::{dist, uniform_direction};
use rand::Rng;
use serde::Serialize;
use std::sync::Arc;

/// Evaluation points of a regularity sweep.
#[derive(Debug, Clone)]
pub struct RegularityOptions {
    pub grid: Vec<Vec<f64>>,
    pub hessian_grid: Vec<Vec<f64>>,
    pub pairs: Vec<(Vec<f64>, Vec<f64>)>,
    /// Relative slack on the first-order bound (`α‖∇h‖(1 + slack)`).
    pub grad_slack: f64,
}

impl RegularityOptions {
    /// `side × side` grid on `[−r, r]²` (remaining coordinates 0).
    pub fn square_grid(d: usize, side: usize, r: f64) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(side * side);
        for i in 0..side {
            for j in 0..side {
                let mut x = vec![0.0; d];
                x[0] = -r + 2.0 * r * i as f64 / (side - 1) as f64;
                x[1] = -r + 2.0 * r * j as f64 / (side - 1) as f64;
                out.push(x);
            }
        }
        out
    }

    /// `n` pairs with `x ∈ [−2,2]²` and log-uniform separation in `[lo, hi]`.
    pub fn random_pairs(d: usize, n: usize, lo: f64, hi: f64, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut rng = substream(seed, 0x4010);
        (0..n)
            .map(|_| {
                let mut x = vec![0.0; d];
                x[0] = rng.random_range(-2.0..2.0);
                x[1] = rng.random_range(-2.0..2.0);
                let r = (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp();
                let e = uniform_direction(d, &mut rng);
                let y: Vec<f64> = x.iter().zip(&e).map(|(a, b)| a + r * b).collect();
                (x, y)
            })
            .collect()
    }

    /// 10×10 grid on `[−3,3]²`, 6×6 Hessian grid, 50 pairs in `[0.1, 4]`.
    pub fn standard(d: usize, seed: u64) -> Self {
        RegularityOptions {
            grid: Self::square_grid(d, 10, 3.0),
            hessian_grid: Self::square_grid(d, 6, 3.0),
            pairs: Self::random_pairs(d, 50, 0.1, 4.0, seed),
            grad_slack: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderPair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub distance: f64,
    pub quotient: f64,
    /// `(3·stderr of the difference + budgets) / |x−y|^{2−α}`.
    pub quotient_tolerance: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionReport {
    pub name: String,
    pub lipschitz: f64,
    pub max_grad: f64,
    pub max_grad_stderr: f64,
    pub max_grad_budget: f64,
    pub max_grad_at: Vec<f64>,
    /// `α‖∇h‖`.
    pub grad_bound: f64,
    pub grad_bound_ok: bool,
    /// Largest finite-difference Hessian norm on the Hessian grid.
    pub hessian_max: f64,
    /// `2 d_α ‖∇²f‖_meas / (α(2−α)(α−1))`.
    pub holder_constant: f64,
    pub max_holder_quotient: f64,
    pub holder_ok: bool,
    pub pairs: Vec<HolderPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub alpha: f64,
    pub d_alpha: f64,
    pub functions: Vec<FunctionReport>,
    pub all_ok: bool,
}

/// Runs the three checks for every function on a shared bank.
pub fn regularity_report(bank: Arc<SteinBank>, suite: &[FnRef], opts: &RegularityOptions) -> Result<RegularityReport> {
    let law = bank.law().clone();
    let alpha = law.alpha();
    let d_alpha = law.d_alpha();
    let op = Arc::new(FracLaplacian::new(&law, bank.config().quad)?);
    let mut functions = Vec::with_capacity(suite.len());
    for h in suite {
        let sol = SteinSolution::with_operator(bank.clone(), h.clone(), op.clone())?;
        let lip = h.lipschitz().unwrap_or(1.0);
        let grad_bound = alpha * lip;
        let (mut max_grad, mut se, mut bud, mut at) = (0.0, 0.0, 0.0, opts.grid.first().cloned().unwrap_or_default());
        let mut grad_ok = true;
        for x in &opts.grid {
            let g = sol.grad(x)?;
            let n = g.norm();
            let s = g.norm_stderr();
            if n > grad_bound * (1.0 + opts.grad_slack) + 3.0 * s + g.budget {
                grad_ok = false;
            }
            if n > max_grad {
                (max_grad, se, bud, at) = (n, s, g.budget, x.clone());
            }
        }
        let mut hessian_max: f64 = 0.0;
        for x in &opts.hessian_grid {
            hessian_max = hessian_max.max(operator_norm(&sol.hessian_fd(x)?));
        }
        let holder_constant = 2.0 * d_alpha * hessian_max / (alpha * (2.0 - alpha) * (alpha - 1.0));
        let mut pairs = Vec::with_capacity(opts.pairs.len());
        let mut max_q: f64 = 0.0;
        let mut holder_ok = true;
        for (x, y) in &opts.pairs {
            let (ex, tx) = sol.laplacian_terms(x)?;
            let (ey, ty) = sol.laplacian_terms(y)?;
            let diffs: Vec<f64> = tx.iter().zip(&ty).map(|(a, b)| a - b).collect();
            let n = diffs.len() as f64;
            let m = diffs.iter().sum::<f64>() / n;
            let sd = (diffs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt();
            let r = dist(x, y);
            let scale = r.powf(2.0 - alpha);
            let quotient = (ex.value - ey.value).abs() / scale;
            let quotient_tolerance = (3.0 * sd + ex.budget + ey.budget) / scale;
            let ok = quotient <= holder_constant + quotient_tolerance;
            holder_ok &= ok;
            max_q = max_q.max(quotient);
            pairs.push(HolderPair { x: x.clone(), y: y.clone(), distance: r, quotient, quotient_tolerance, ok });
        }
        functions.push(FunctionReport {
            name: h.name(),
            lipschitz: lip,
            max_grad,
            max_grad_stderr: se,
            max_grad_budget: bud,
            max_grad_at: at,
            grad_bound,
            grad_bound_ok: grad_ok,
            hessian_max,
            holder_constant,
            max_holder_quotient: max_q,
            holder_ok,
            pairs,
        });
    }
    let all_ok = functions.iter().all(|f| f.grad_bound_ok && f.holder_ok);
    Ok(RegularityReport { alpha, d_alpha, functions, all_ok })
}
