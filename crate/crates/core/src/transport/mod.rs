//! Wasserstein-1 distances between equal-size empirical measures.

pub mod lap;

use crate::error::{invalid, Error, Result};
use crate::sphere::{dist, dot, uniform_direction};
use rand::Rng;

/// Largest cloud accepted by the exact solver.
pub const EXACT_CAP: usize = 4096;

/// Equal-weight point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    points: Vec<Vec<f64>>,
    d: usize,
}

impl EmpiricalMeasure {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(invalid("empirical measure needs at least one point"));
        };
        let d = first.len();
        for p in &points {
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.len() });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(invalid("empirical measure points must be finite"));
            }
        }
        Ok(EmpiricalMeasure { points, d })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn scaled(&self, c: f64) -> Self {
        let points = self.points.iter().map(|p| p.iter().map(|x| c * x).collect()).collect();
        EmpiricalMeasure { points, d: self.d }
    }

    pub fn translated(&self, v: &[f64]) -> Self {
        let points = self.points.iter().map(|p| p.iter().zip(v).map(|(x, y)| x + y).collect()).collect();
        EmpiricalMeasure { points, d: self.d }
    }
}

fn check_pair(p: &EmpiricalMeasure, q: &EmpiricalMeasure) -> Result<()> {
    if p.len() != q.len() {
        return Err(invalid(format!("clouds must have equal size ({} vs {})", p.len(), q.len())));
    }
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    Ok(())
}

/// Optimal matching and its mean Euclidean cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub row_to_col: Vec<usize>,
    pub distance: f64,
}

/// Exact W1 by minimum-cost perfect matching.
pub fn wasserstein1_exact_matching(p: &EmpiricalMeasure, q: &EmpiricalMeasure) -> Result<Matching> {
    check_pair(p, q)?;
    let n = p.len();
    if n > EXACT_CAP {
        return Err(invalid(format!(
            "exact solver is capped at n = {EXACT_CAP} (got {n}); use the sliced estimator"
        )));
    }
    let mut cost = Vec::with_capacity(n * n);
    for a in p.points() {
        for b in q.points() {
            cost.push(dist(a, b));
        }
    }
    let row_to_col = lap::solve(&lap::CostMatrix { n, data: &cost });
    // summed in row order so equal matchings give identical totals
    let total: f64 = row_to_col.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    Ok(Matching { row_to_col, distance: total / n as f64 })
}

pub fn wasserstein1_exact(p: &EmpiricalMeasure, q: &EmpiricalMeasure) -> Result<f64> {
    Ok(wasserstein1_exact_matching(p, q)?.distance)
}

/// One-dimensional W1 between equal-size samples (sorted differences).
pub fn wasserstein1_1d(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// Mean over random directions of the one-dimensional W1 of projections.
pub fn wasserstein1_sliced<R: Rng + ?Sized>(
    p: &EmpiricalMeasure,
    q: &EmpiricalMeasure,
    n_projections: usize,
    rng: &mut R,
) -> Result<f64> {
    Ok(wasserstein1_sliced_detail(p, q, n_projections, rng)?.value)
}

/// Sliced estimate with the standard error over projections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicedEstimate {
    pub value: f64,
    pub stderr: f64,
}

pub fn wasserstein1_sliced_detail<R: Rng + ?Sized>(
    p: &EmpiricalMeasure,
    q: &EmpiricalMeasure,
    n_projections: usize,
    rng: &mut R,
) -> Result<SlicedEstimate> {
    check_pair(p, q)?;
    if n_projections == 0 {
        return Err(invalid("need at least one projection"));
    }
    let d = p.dim();
    let mut a = vec![0.0; p.len()];
    let mut b = vec![0.0; q.len()];
    let mut vals = Vec::with_capacity(n_projections);
    for _ in 0..n_projections {
        let theta = if d == 1 { vec![1.0] } else { uniform_direction(d, rng) };
        for (o, x) in a.iter_mut().zip(p.points()) {
            *o = dot(&theta, x);
        }
        for (o, x) in b.iter_mut().zip(q.points()) {
            *o = dot(&theta, x);
        }
        vals.push(wasserstein1_1d(&mut a, &mut b));
    }
    let k = vals.len() as f64;
    let value = vals.iter().sum::<f64>() / k;
    let stderr = if vals.len() > 1 {
        (vals.iter().map(|v| (v - value).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
    } else {
        0.0
    };
    Ok(SlicedEstimate { value, stderr })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singletons() {
        let p = EmpiricalMeasure::new(vec![vec![0.0, 0.0]]).unwrap();
        let q = EmpiricalMeasure::new(vec![vec![3.0, 4.0]]).unwrap();
        assert_eq!(wasserstein1_exact(&p, &q).unwrap(), 5.0);
    }

    #[test]
    fn rejects_mismatch_and_cap() {
        let p = EmpiricalMeasure::new(vec![vec![0.0, 0.0]; 2]).unwrap();
        let q = EmpiricalMeasure::new(vec![vec![0.0, 0.0]; 3]).unwrap();
        assert!(wasserstein1_exact(&p, &q).is_err());
        let big = EmpiricalMeasure::new(vec![vec![0.0]; EXACT_CAP + 1]).unwrap();
        assert!(wasserstein1_exact(&big, &big).is_err());
        assert!(EmpiricalMeasure::new(vec![vec![f64::NAN]]).is_err());
    }
}
