//! Test functions and smooth function handles.

use crate::error::{invalid, Result};
use crate::sphere::{dist, dot, norm};
use rand::Rng;
use std::sync::Arc;

/// A differentiable function on R^d with an analytic gradient.
pub trait SmoothFunction: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64], out: &mut [f64]);
    fn name(&self) -> String;
    /// Declared Lipschitz constant, when known.
    fn lipschitz(&self) -> Option<f64> {
        None
    }
    /// Bound on the operator norm of the Hessian, when known.
    fn hessian_bound(&self) -> Option<f64> {
        None
    }
}

pub type FnRef = Arc<dyn SmoothFunction>;

/// `⟨a, x⟩ + b`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub a: Vec<f64>,
    pub b: f64,
}

impl SmoothFunction for Linear {
    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.a, x) + self.b
    }
    fn grad(&self, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.a);
    }
    fn name(&self) -> String {
        "linear".into()
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(norm(&self.a))
    }
    fn hessian_bound(&self) -> Option<f64> {
        Some(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct Constant(pub f64);

impl SmoothFunction for Constant {
    fn value(&self, _x: &[f64]) -> f64 {
        self.0
    }
    fn grad(&self, _x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
    }
    fn name(&self) -> String {
        "constant".into()
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(0.0)
    }
    fn hessian_bound(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Smooth saturating ramp `c·tanh((√(1+|x|²) − 1)/c)`: close to `|x|` near
/// the origin, bounded by `c`.
#[derive(Debug, Clone)]
pub struct Ramp {
    pub cap: f64,
}

impl SmoothFunction for Ramp {
    fn value(&self, x: &[f64]) -> f64 {
        let s = (1.0 + dot(x, x)).sqrt() - 1.0;
        self.cap * (s / self.cap).tanh()
    }
    fn grad(&self, x: &[f64], out: &mut [f64]) {
        let rho = (1.0 + dot(x, x)).sqrt();
        let t = ((rho - 1.0) / self.cap).tanh();
        let k = (1.0 - t * t) / rho;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = k * xi;
        }
    }
    fn name(&self) -> String {
        "ramp".into()
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(1.0)
    }
    fn hessian_bound(&self) -> Option<f64> {
        // 1/ρ from the radial profile plus (2/c)·max sech²·tanh ≤ 0.385·2/c
        Some(1.0 + 0.77 / self.cap)
    }
}

/// `cos⟨a, x⟩`.
#[derive(Debug, Clone)]
pub struct Cosine {
    pub a: Vec<f64>,
}

impl SmoothFunction for Cosine {
    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.a, x).cos()
    }
    fn grad(&self, x: &[f64], out: &mut [f64]) {
        let s = -dot(&self.a, x).sin();
        for (o, ai) in out.iter_mut().zip(&self.a) {
            *o = s * ai;
        }
    }
    fn name(&self) -> String {
        "cosine".into()
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(norm(&self.a))
    }
    fn hessian_bound(&self) -> Option<f64> {
        Some(dot(&self.a, &self.a))
    }
}

/// `√(1+|x−c|²) − 1`.
#[derive(Debug, Clone)]
pub struct SoftNorm {
    pub center: Vec<f64>,
}

impl SmoothFunction for SoftNorm {
    fn value(&self, x: &[f64]) -> f64 {
        let r = dist(x, &self.center);
        (1.0 + r * r).sqrt() - 1.0
    }
    fn grad(&self, x: &[f64], out: &mut [f64]) {
        let r = dist(x, &self.center);
        let rho = (1.0 + r * r).sqrt();
        for ((o, xi), ci) in out.iter_mut().zip(x).zip(&self.center) {
            *o = (xi - ci) / rho;
        }
    }
    fn name(&self) -> String {
        "softnorm".into()
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(1.0)
    }
    fn hessian_bound(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// `c·tanh(x_k / c)` in one coordinate.
#[derive(Debug, Clone)]
pub struct Clamp {
    pub axis: usize,
    pub cap: f64,
}

impl SmoothFunction for Clamp {
    fn value(&self, x: &[f64]) -> f64 {
        self.cap * (x[self.axis] / self.cap).tanh()
    }
    fn grad(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        let t = (x[self.axis] / self.cap).tanh();
        out[self.axis] = 1.0 - t * t;
    }
    fn name(&self) -> String {
        "clamp".into()
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(1.0)
    }
    fn hessian_bound(&self) -> Option<f64> {
        // |d/dx sech²(x/c)| = (2/c) sech² tanh ≤ 0.77/c
        Some(0.77 / self.cap)
    }
}

/// `a·f + b·g`.
#[derive(Clone)]
pub struct Combination {
    pub a: f64,
    pub f: FnRef,
    pub b: f64,
    pub g: FnRef,
}

impl SmoothFunction for Combination {
    fn value(&self, x: &[f64]) -> f64 {
        self.a * self.f.value(x) + self.b * self.g.value(x)
    }
    fn grad(&self, x: &[f64], out: &mut [f64]) {
        let mut tmp = vec![0.0; out.len()];
        self.f.grad(x, out);
        self.g.grad(x, &mut tmp);
        for (o, t) in out.iter_mut().zip(&tmp) {
            *o = self.a * *o + self.b * t;
        }
    }
    fn name(&self) -> String {
        format!("{}*{}+{}*{}", self.a, self.f.name(), self.b, self.g.name())
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(self.a.abs() * self.f.lipschitz()? + self.b.abs() * self.g.lipschitz()?)
    }
    fn hessian_bound(&self) -> Option<f64> {
        Some(self.a.abs() * self.f.hessian_bound()? + self.b.abs() * self.g.hessian_bound()?)
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// Function handle from closures.
pub struct Closure {
    pub name: String,
    pub value: Box<ValueFn>,
    pub grad: Box<GradFn>,
    pub hessian_bound: Option<f64>,
}

impl SmoothFunction for Closure {
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn grad(&self, x: &[f64], out: &mut [f64]) {
        (self.grad)(x, out)
    }
    fn name(&self) -> String {
        self.name.clone()
    }
    fn hessian_bound(&self) -> Option<f64> {
        self.hessian_bound
    }
}

/// `|x|²`; its gradient grows linearly, so fractional operators diverge.
pub fn squared_norm() -> FnRef {
    Arc::new(Closure {
        name: "squared_norm".into(),
        value: Box::new(|x| dot(x, x)),
        grad: Box::new(|x, g| {
            for (o, xi) in g.iter_mut().zip(x) {
                *o = 2.0 * xi;
            }
        }),
        hessian_bound: Some(2.0),
    })
}

/// Names accepted by [`suite_function`].
pub const SUITE: [&str; 5] = ["linear", "ramp", "cosine", "softnorm", "clamp"];

/// The shipped Lip₁ test functions in dimension `d`.
pub fn suite_function(name: &str, d: usize) -> Result<FnRef> {
    if d < 2 {
        return Err(invalid("test functions need d >= 2"));
    }
    let mut a = vec![0.0; d];
    a[0] = 0.6;
    a[1] = 0.8;
    Ok(match name {
        "linear" => Arc::new(Linear { a, b: 0.0 }),
        "ramp" => Arc::new(Ramp { cap: 5.0 }),
        "cosine" => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let mut a = vec![0.0; d];
            a[0] = s;
            a[1] = -s;
            Arc::new(Cosine { a })
        }
        "softnorm" => {
            let mut c = vec![0.0; d];
            c[0] = 0.5;
            c[1] = -0.25;
            Arc::new(SoftNorm { center: c })
        }
        "clamp" => Arc::new(Clamp { axis: 1, cap: 2.0 }),
        "constant" => Arc::new(Constant(1.0)),
        other => return Err(invalid(format!("unknown test function '{other}'"))),
    })
}

/// Outcome of checking the Lip₁ property numerically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzCheck {
    pub max_difference_quotient: f64,
    pub max_gradient_norm: f64,
}

impl LipschitzCheck {
    pub fn is_lip1(&self) -> bool {
        self.max_difference_quotient <= 1.0 + 1e-12 && self.max_gradient_norm <= 1.0 + 1e-12
    }
}

/// Difference quotients on `pairs` random pairs in `[−r, r]^d` and gradient
/// norms on a regular grid.
pub fn check_lipschitz<R: Rng + ?Sized>(h: &dyn SmoothFunction, d: usize, r: f64, pairs: usize, rng: &mut R) -> LipschitzCheck {
    let mut q: f64 = 0.0;
    for _ in 0..pairs {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-r..r)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.random_range(-r..r)).collect();
        let dxy = dist(&x, &y);
        if dxy > 0.0 {
            q = q.max((h.value(&x) - h.value(&y)).abs() / dxy);
        }
    }
    let mut gmax: f64 = 0.0;
    let mut g = vec![0.0; d];
    let n = 41usize;
    let total = n.pow(d.min(3) as u32);
    for idx in 0..total {
        let mut x = vec![0.0; d];
        let mut k = idx;
        for xi in x.iter_mut().take(d.min(3)) {
            *xi = -r + 2.0 * r * (k % n) as f64 / (n - 1) as f64;
            k /= n;
        }
        h.grad(&x, &mut g);
        gmax = gmax.max(norm(&g));
    }
    LipschitzCheck { max_difference_quotient: q, max_gradient_norm: gmax }
}
