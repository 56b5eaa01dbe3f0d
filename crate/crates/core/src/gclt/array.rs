//! Triangular arrays `ζ_{n,i} = l_n^{−1/α} η_{n,i}` built from i.i.d. source
//! draws, and the centered sums `S_n`.

use super::source::{SourceKind, SourceLaw};
use crate::error::{invalid, Result};
use rand::Rng;

/// Row `n` of the array for an i.i.d. source, with `η = c_n ξ`.
#[derive(Debug, Clone)]
pub struct TriangularArray {
    source: SourceLaw,
    n: u64,
    l_n: f64,
    eta_scale: f64,
    a_n: Option<f64>,
    centering: Vec<f64>,
}

impl TriangularArray {
    /// The scale `c_n` is 1 (Paretian), `(A/α)^{−1/α}` (modified tail) or
    /// `n^{1/α}/A_n` (log-modified, `A_n` from [`log_modified_an`]).
    pub fn new(source: SourceLaw, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        let alpha = source.alpha();
        let l_n = alpha / source.law().d_alpha() * n as f64;
        let (eta_scale, a_n) = match source.kind() {
            SourceKind::Paretian => (1.0, None),
            SourceKind::ModifiedTail { a, .. } => ((a / alpha).powf(-1.0 / alpha), None),
            SourceKind::LogModified { beta } => {
                let a_n = log_modified_an(alpha, beta, source.k0(), n as f64)?;
                ((n as f64).powf(1.0 / alpha) / a_n, Some(a_n))
            }
        };
        let centering = source.mean().into_iter().map(|m| m * eta_scale).collect();
        Ok(TriangularArray { source, n, l_n, eta_scale, a_n, centering })
    }

    pub fn source(&self) -> &SourceLaw {
        &self.source
    }
    pub fn n(&self) -> u64 {
        self.n
    }
    pub fn alpha(&self) -> f64 {
        self.source.alpha()
    }
    /// `l_n = (α/d_α)·n`.
    pub fn l_n(&self) -> f64 {
        self.l_n
    }
    /// `c_n` in `η = c_n ξ`.
    pub fn eta_scale(&self) -> f64 {
        self.eta_scale
    }
    /// `ζ = zeta_scale·η`.
    pub fn zeta_scale(&self) -> f64 {
        self.l_n.powf(-1.0 / self.alpha())
    }
    /// `A_n` of the log-modified source.
    pub fn a_n(&self) -> Option<f64> {
        self.a_n
    }
    /// `E η`.
    pub fn eta_mean(&self) -> &[f64] {
        &self.centering
    }

    pub fn eta_to_zeta(&self, eta: &[f64]) -> Vec<f64> {
        let s = self.zeta_scale();
        eta.iter().map(|x| s * x).collect()
    }
    pub fn zeta_to_eta(&self, zeta: &[f64]) -> Vec<f64> {
        let s = self.l_n.powf(1.0 / self.alpha());
        zeta.iter().map(|x| s * x).collect()
    }

    /// One draw of `S_n = Σ (ζ_i − E ζ_i)`, written into `out`.
    pub fn sample_sn_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64], scratch: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for _ in 0..self.n {
            self.source.sample_into(rng, scratch);
            for (o, x) in out.iter_mut().zip(scratch.iter()) {
                *o += x;
            }
        }
        let zs = self.zeta_scale();
        let n = self.n as f64;
        for (o, m) in out.iter_mut().zip(&self.centering) {
            *o = zs * (self.eta_scale * *o - n * m);
        }
    }

    pub fn sample_sn<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.source.dim();
        let mut out = vec![0.0; d];
        let mut scratch = vec![0.0; d];
        self.sample_sn_into(rng, &mut out, &mut scratch);
        out
    }

    /// `m` independent draws of `S_n`.
    pub fn sample_cloud<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Vec<Vec<f64>> {
        let d = self.source.dim();
        let mut scratch = vec![0.0; d];
        (0..m)
            .map(|_| {
                let mut out = vec![0.0; d];
                self.sample_sn_into(rng, &mut out, &mut scratch);
                out
            })
            .collect()
    }
}

/// `A_n` solving `K₀ (log A)^β / A^α = 1/n` by bisection in `log A` over
/// `[1, ∞)`, where the left side is decreasing.
pub fn log_modified_an(alpha: f64, beta: f64, k0: f64, n: f64) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(invalid(format!("n must be >= 1, got {n}")));
    }
    let g = |y: f64| k0.ln() + beta * y.ln() - alpha * y + n.ln();
    let mut lo = 1.0;
    if g(lo) < 0.0 {
        return Err(invalid("no solution with A >= e for these parameters"));
    }
    let mut hi = 2.0;
    while g(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 0.0 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // pick the endpoint with the smaller residual
    let y = if g(lo).abs() <= g(hi).abs() { lo } else { hi };
    Ok(y.exp())
}
