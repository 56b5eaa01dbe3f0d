//! Weighted least-squares fits of convergence rates on `(n, distance)`
//! tables.

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Rate models, all fitted on `log distance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateModel {
    /// `C·n^p`.
    Power,
    /// `C·n^p·(log n)^q`.
    PowerLog,
    /// `C·(log n)^q`.
    LogOnly,
}

impl RateModel {
    fn design(&self, n: f64) -> Vec<f64> {
        let ln = n.ln();
        match self {
            RateModel::Power => vec![1.0, ln],
            RateModel::PowerLog => vec![1.0, ln, ln.ln()],
            RateModel::LogOnly => vec![1.0, ln.ln()],
        }
    }
    pub fn parameter_names(&self) -> &'static [&'static str] {
        match self {
            RateModel::Power => &["log_prefactor", "exponent"],
            RateModel::PowerLog => &["log_prefactor", "exponent", "log_exponent"],
            RateModel::LogOnly => &["log_prefactor", "log_exponent"],
        }
    }
}

/// One row of a rate table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: f64,
    pub distance: f64,
    /// Standard error of `distance`; 0 means unweighted.
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitParameter {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub model: RateModel,
    pub parameters: Vec<FitParameter>,
    pub prefactor: f64,
    pub r_squared: f64,
    pub rss: f64,
    pub dof: usize,
    pub rss_per_dof: f64,
    pub residuals: Vec<f64>,
}

impl RateFit {
    pub fn parameter(&self, name: &str) -> Option<&FitParameter> {
        self.parameters.iter().find(|p| p.name == name)
    }
    /// The `n`-exponent for power models, the log-exponent otherwise.
    pub fn slope(&self) -> &FitParameter {
        &self.parameters[1]
    }
}

/// Solves the weighted normal equations by Cholesky; returns the solution
/// and the inverse of `XᵀWX`.
fn wls(xs: &[Vec<f64>], ys: &[f64], ws: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let p = xs[0].len();
    let mut a = vec![vec![0.0; p]; p];
    let mut b = vec![0.0; p];
    for ((x, y), w) in xs.iter().zip(ys).zip(ws) {
        for i in 0..p {
            b[i] += w * x[i] * y;
            for j in 0..p {
                a[i][j] += w * x[i] * x[j];
            }
        }
    }
    // Cholesky
    let mut l = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..=i {
            let s = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if !(s > 0.0) {
                    return Err(invalid("rate fit design is singular; need more distinct n"));
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let mut z = vec![0.0; p];
        for i in 0..p {
            z[i] = (rhs[i] - (0..i).map(|k| l[i][k] * z[k]).sum::<f64>()) / l[i][i];
        }
        let mut x = vec![0.0; p];
        for i in (0..p).rev() {
            x[i] = (z[i] - (i + 1..p).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
        }
        x
    };
    let beta = solve(&b);
    let mut inv = vec![vec![0.0; p]; p];
    for j in 0..p {
        let mut e = vec![0.0; p];
        e[j] = 1.0;
        let c = solve(&e);
        for i in 0..p {
            inv[i][j] = c[i];
        }
    }
    Ok((beta, inv))
}

/// Weighted least squares on `log distance` with weights `(d/se)²` (the
/// delta-method variance of `log d`); unweighted when any stderr is 0.
pub fn rate_fit(table: &[RatePoint], model: RateModel) -> Result<RateFit> {
    let mut distinct: Vec<f64> = table.iter().map(|p| p.n).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(invalid(format!("rate fit needs >= 4 distinct n, got {}", distinct.len())));
    }
    if table.iter().any(|p| !(p.distance > 0.0) || !p.distance.is_finite()) {
        return Err(invalid("rate fit needs positive distances"));
    }
    if model != RateModel::Power && table.iter().any(|p| p.n <= 1.0) {
        return Err(invalid("log models need n > 1"));
    }
    let xs: Vec<Vec<f64>> = table.iter().map(|p| model.design(p.n)).collect();
    let ys: Vec<f64> = table.iter().map(|p| p.distance.ln()).collect();
    let weighted = table.iter().all(|p| p.stderr > 0.0);
    let ws: Vec<f64> = if weighted {
        table.iter().map(|p| (p.distance / p.stderr).powi(2)).collect()
    } else {
        vec![1.0; table.len()]
    };
    let (beta, inv) = wls(&xs, &ys, &ws)?;
    let k = beta.len();
    let residuals: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - x.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let rss: f64 = residuals.iter().zip(&ws).map(|(r, w)| w * r * r).sum();
    let wsum: f64 = ws.iter().sum();
    let ybar = ys.iter().zip(&ws).map(|(y, w)| w * y).sum::<f64>() / wsum;
    let tss: f64 = ys.iter().zip(&ws).map(|(y, w)| w * (y - ybar).powi(2)).sum();
    let dof = table.len().saturating_sub(k);
    let s2 = if dof > 0 { rss / dof as f64 } else { f64::NAN };
    let tq = if dof > 0 {
        StudentsT::new(0.0, 1.0, dof as f64).map(|t| t.inverse_cdf(0.975)).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    let names = model.parameter_names();
    let parameters = (0..k)
        .map(|i| {
            let se = (s2 * inv[i][i]).max(0.0).sqrt();
            FitParameter { name: names[i].to_string(), value: beta[i], stderr: se, ci95: (beta[i] - tq * se, beta[i] + tq * se) }
        })
        .collect();
    Ok(RateFit {
        model,
        parameters,
        prefactor: beta[0].exp(),
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { 1.0 },
        rss,
        dof,
        rss_per_dof: s2,
        residuals,
    })
}

/// Ordinary least squares `y = a + b·x` with R²; used for shape checks.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (a, b, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_power_law() {
        let t: Vec<RatePoint> =
            (6..=12).map(|k| 2f64.powi(k)).map(|n| RatePoint { n, distance: 2.0 * n.powf(-1.0 / 3.0), stderr: 0.0 }).collect();
        let f = rate_fit(&t, RateModel::Power).unwrap();
        assert!((f.slope().value + 1.0 / 3.0).abs() < 1e-12);
        assert!((f.prefactor - 2.0).abs() < 1e-11);
    }

    #[test]
    fn too_few_points() {
        let t: Vec<RatePoint> = (1..=3).map(|k| RatePoint { n: 10f64.powi(k), distance: 1.0, stderr: 0.0 }).collect();
        assert!(rate_fit(&t, RateModel::Power).is_err());
    }
}
