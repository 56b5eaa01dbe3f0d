//! Small vector helpers and point sets on the unit sphere.

use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn normalize(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    a.iter().map(|x| x / n).collect()
}

pub fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = 1.0;
    e
}

/// Surface area of S^{d-1}.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * PI.powf(h) / statrs::function::gamma::gamma(h)
}

/// Uniform draw on S^{d-1}.
pub fn uniform_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let mut v = vec![0.0; d];
    uniform_direction_into(rng, &mut v);
    v
}

/// Uniform draw on S^{d-1}, written into `out` (`d = out.len()`).
pub fn uniform_direction_into<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    if out.len() == 2 {
        let phi = rng.random::<f64>() * 2.0 * PI;
        out[0] = phi.cos();
        out[1] = phi.sin();
        return;
    }
    loop {
        for x in out.iter_mut() {
            *x = rng.sample::<f64, _>(StandardNormal);
        }
        let n = norm(out);
        if n > 1e-300 {
            out.iter_mut().for_each(|x| *x /= n);
            return;
        }
    }
}

/// Unit vector at angle `phi` in the plane.
pub fn circle_point(phi: f64) -> Vec<f64> {
    vec![phi.cos(), phi.sin()]
}

/// Fibonacci lattice of `n` points on S^2.
pub fn fibonacci_sphere(n: usize) -> Vec<Vec<f64>> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            vec![r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Antipodally symmetric lattice: `n/2` Fibonacci points on the upper
/// hemisphere together with their negatives. `n` must be even.
pub fn symmetric_fibonacci_sphere(n: usize) -> Vec<Vec<f64>> {
    let h = n / 2;
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut pts = Vec::with_capacity(2 * h);
    for k in 0..h {
        let z = 1.0 - (k as f64 + 0.5) / h as f64;
        let r = (1.0 - z * z).max(0.0).sqrt();
        let phi = golden * k as f64;
        pts.push(vec![r * phi.cos(), r * phi.sin(), z]);
    }
    for k in 0..h {
        let p: Vec<f64> = pts[k].iter().map(|x| -x).collect();
        pts.push(p);
    }
    pts
}

/// Deterministic set of roughly `n` directions covering S^{d-1}
/// (equally spaced angles for d = 2, Fibonacci lattice for d = 3).
pub fn direction_grid(d: usize, n: usize) -> Vec<Vec<f64>> {
    match d {
        2 => (0..n).map(|k| circle_point(2.0 * PI * (k as f64 + 0.5) / n as f64)).collect(),
        3 => fibonacci_sphere(n),
        _ => {
            // generic fallback: deterministic pseudo-random directions
            let mut rng = crate::rng::substream(0x5eed, d as u64);
            (0..n).map(|_| uniform_direction(d, &mut rng)).collect()
        }
    }
}

/// Two unit vectors orthogonal to `e` and to each other (d = 3).
pub fn tangent_frame(e: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let a = if e[0].abs() < 0.9 { vec![1.0, 0.0, 0.0] } else { vec![0.0, 1.0, 0.0] };
    let c = dot(&a, e);
    let t1 = normalize(&[a[0] - c * e[0], a[1] - c * e[1], a[2] - c * e[2]]);
    let t2 = vec![
        e[1] * t1[2] - e[2] * t1[1],
        e[2] * t1[0] - e[0] * t1[2],
        e[0] * t1[1] - e[1] * t1[0],
    ];
    (t1, t2)
}
