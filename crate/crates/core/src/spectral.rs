//! Spectral measures on the unit sphere and the stable laws they generate.
//!
//! A [`SpectralMeasure`] is a mixture `a·g(θ)dθ + b·atoms + c·Cantor`. A
//! [`StableLaw`] fixes the index `α` and reduces ν to a finite set of
//! weighted directions ("lines": a direction with the masses of `θ` and
//! `−θ`). The same reduction is used for the characteristic exponent, the
//! directional exponents and vector sampling, so they are consistent with
//! each other by construction.

use crate::error::{invalid, Error, Result};
use crate::quad::GaussRule;
use crate::sphere::{self, dot, norm};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Normalizer `d_α = α / (Γ(1−α) cos(πα/2))`.
pub fn compute_d_alpha(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(alpha / (gamma(1.0 - alpha) * (PI * alpha / 2.0).cos()))
}

/// The same constant through `Γ(−α)`: `d_α = −1 / (Γ(−α) cos(πα/2))`.
pub fn compute_d_alpha_reflected(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(-1.0 / (gamma(-alpha) * (PI * alpha / 2.0).cos()))
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(invalid(format!("alpha must lie in (1,2), got {alpha}")));
    }
    Ok(())
}

/// Absolutely continuous spectral densities with respect to surface measure.
///
/// Each variant is normalized to a probability density on S^{d−1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AcDensity {
    Uniform,
    /// `∝ 1 + κ⟨θ,e_axis⟩²`, κ > −1.
    Axial { kappa: f64, axis: usize },
    /// `∝ 1 + κ⟨θ,e_axis⟩`, |κ| < 1. Not antipodally symmetric.
    Tilted { kappa: f64, axis: usize },
    /// Periodic piecewise-linear density on S^1 through `(angle, value)`
    /// knots; angles in [0, 2π), strictly increasing. Values are rescaled to
    /// unit mass.
    Tabulated { angles: Vec<f64>, values: Vec<f64> },
}

impl AcDensity {
    fn validate(&mut self, d: usize) -> Result<()> {
        match self {
            AcDensity::Uniform => {}
            AcDensity::Axial { kappa, axis } => {
                if !(*kappa > -1.0) || !kappa.is_finite() {
                    return Err(Error::InvalidMeasure(format!("axial kappa must exceed -1, got {kappa}")));
                }
                if *axis >= d {
                    return Err(Error::InvalidMeasure(format!("axis {axis} out of range for d = {d}")));
                }
            }
            AcDensity::Tilted { kappa, axis } => {
                if !(kappa.abs() < 1.0) {
                    return Err(Error::InvalidMeasure(format!("tilted |kappa| must be < 1, got {kappa}")));
                }
                if *axis >= d {
                    return Err(Error::InvalidMeasure(format!("axis {axis} out of range for d = {d}")));
                }
            }
            AcDensity::Tabulated { angles, values } => {
                if d != 2 {
                    return Err(Error::InvalidMeasure("tabulated densities require d = 2".into()));
                }
                if angles.len() != values.len() || angles.len() < 3 {
                    return Err(Error::InvalidMeasure("tabulated density needs >= 3 matching knots".into()));
                }
                if angles.windows(2).any(|w| !(w[1] > w[0])) || angles[0] < 0.0 || *angles.last().unwrap() >= 2.0 * PI {
                    return Err(Error::InvalidMeasure("tabulated angles must increase within [0, 2pi)".into()));
                }
                if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return Err(Error::InvalidMeasure("tabulated values must be positive".into()));
                }
                // periodic trapezoid = exact integral of the linear interpolant
                let n = angles.len();
                let mut mass = 0.0;
                for i in 0..n {
                    let j = (i + 1) % n;
                    let mut h = angles[j] - angles[i];
                    if j == 0 {
                        h += 2.0 * PI;
                    }
                    mass += 0.5 * h * (values[i] + values[j]);
                }
                for v in values.iter_mut() {
                    *v /= mass;
                }
            }
        }
        Ok(())
    }

    /// Density value at a unit vector.
    pub fn eval(&self, theta: &[f64]) -> f64 {
        let d = theta.len();
        let area = sphere::sphere_area(d);
        match self {
            AcDensity::Uniform => 1.0 / area,
            AcDensity::Axial { kappa, axis } => {
                let c = theta[*axis];
                (1.0 + kappa * c * c) / (area * (1.0 + kappa / d as f64))
            }
            AcDensity::Tilted { kappa, axis } => (1.0 + kappa * theta[*axis]) / area,
            AcDensity::Tabulated { angles, values } => {
                let mut phi = theta[1].atan2(theta[0]);
                if phi < 0.0 {
                    phi += 2.0 * PI;
                }
                let n = angles.len();
                // locate the knot interval, wrapping around 2π
                let i = match angles.iter().position(|&a| a > phi) {
                    Some(0) | None => n - 1,
                    Some(k) => k - 1,
                };
                let j = (i + 1) % n;
                let mut a0 = angles[i];
                let mut a1 = angles[j];
                if j == 0 {
                    a1 += 2.0 * PI;
                }
                if phi < a0 {
                    a0 -= 2.0 * PI;
                    a1 -= 2.0 * PI;
                }
                let s = (phi - a0) / (a1 - a0);
                values[i] * (1.0 - s) + values[j] * s
            }
        }
    }

    /// Exact infimum and supremum over the sphere.
    pub fn bounds(&self, d: usize) -> (f64, f64) {
        let area = sphere::sphere_area(d);
        match self {
            AcDensity::Uniform => (1.0 / area, 1.0 / area),
            AcDensity::Axial { kappa, .. } => {
                let z = area * (1.0 + kappa / d as f64);
                let (a, b) = (1.0 / z, (1.0 + kappa) / z);
                (a.min(b), a.max(b))
            }
            AcDensity::Tilted { kappa, .. } => ((1.0 - kappa.abs()) / area, (1.0 + kappa.abs()) / area),
            AcDensity::Tabulated { values, .. } => {
                let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = values.iter().cloned().fold(0.0, f64::max);
                (lo, hi)
            }
        }
    }

    /// True when `g(θ) = g(−θ)` identically.
    pub fn is_even(&self) -> bool {
        match self {
            AcDensity::Uniform | AcDensity::Axial { .. } => true,
            AcDensity::Tilted { kappa, .. } => *kappa == 0.0,
            AcDensity::Tabulated { angles, values } => {
                let n = angles.len();
                (0..n).all(|i| {
                    let phi = angles[i];
                    let g = self.eval(&sphere::circle_point(phi + PI));
                    (g - values[i]).abs() <= 1e-12 * values[i]
                })
            }
        }
    }
}

/// Mass pair on `±e_axis`; `sigma_plus + sigma_minus = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomPair {
    pub axis: usize,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
}

/// Middle-thirds Cantor construction on the arc of angular length π/2
/// centred at `e_1` in the `(e_1, e_2)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CantorSpec {
    pub depth: u32,
    pub symmetrized: bool,
}

impl CantorSpec {
    pub const ARC_LENGTH: f64 = PI / 2.0;

    /// Construction arcs `[start, end]` (angles) at the given depth, in digit
    /// order, followed by their antipodal copies when symmetrized.
    pub fn arcs(&self) -> Vec<(f64, f64)> {
        let n = 1usize << self.depth;
        let len = Self::ARC_LENGTH * 3f64.powi(-(self.depth as i32));
        let mut out = Vec::with_capacity(2 * n);
        for code in 0..n {
            let s = self.arc_start(code);
            out.push((s, s + len));
        }
        if self.symmetrized {
            for code in 0..n {
                let s = self.arc_start(code) + PI;
                out.push((s, s + len));
            }
        }
        out
    }

    /// Left end angle of the arc indexed by the binary digit string `code`
    /// (most significant digit first).
    pub fn arc_start(&self, code: usize) -> f64 {
        let l = self.depth;
        let mut s = -Self::ARC_LENGTH / 2.0;
        let mut scale = Self::ARC_LENGTH;
        for j in 0..l {
            scale /= 3.0;
            if (code >> (l - 1 - j)) & 1 == 1 {
                s += 2.0 * scale;
            }
        }
        s
    }

    pub fn arc_center(&self, code: usize) -> f64 {
        self.arc_start(code) + 0.5 * Self::ARC_LENGTH * 3f64.powi(-(self.depth as i32))
    }
}

/// Description of a spectral measure prior to validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSpec {
    pub d: usize,
    #[serde(default)]
    pub weight_ac: f64,
    #[serde(default)]
    pub weight_atomic: f64,
    #[serde(default)]
    pub weight_fractal: f64,
    #[serde(default)]
    pub ac_density: Option<AcDensity>,
    #[serde(default)]
    pub atoms: Vec<AtomPair>,
    #[serde(default)]
    pub fractal: Option<CantorSpec>,
}

/// Validated spectral probability measure on S^{d−1}.
///
/// The atomic part is `(1/k) Σ_i (σ_i δ_{e_i} + σ_i' δ_{−e_i})` over the `k`
/// listed pairs, so that each component is itself a probability measure and
/// the mixture weights sum to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralMeasure {
    d: usize,
    weight_ac: f64,
    weight_atomic: f64,
    weight_fractal: f64,
    ac_density: Option<AcDensity>,
    k_lo: f64,
    k_hi: f64,
    atoms: Vec<AtomPair>,
    fractal: Option<CantorSpec>,
}

const WEIGHT_TOL: f64 = 1e-12;
const MASS_TOL: f64 = 1e-6;

impl SpectralMeasure {
    pub fn new(spec: SpectralSpec) -> Result<Self> {
        let SpectralSpec { d, weight_ac, weight_atomic, weight_fractal, mut ac_density, atoms, fractal } = spec;
        let bad = |m: String| Err(Error::InvalidMeasure(m));
        if d < 2 {
            return bad(format!("dimension must be >= 2, got {d}"));
        }
        for (name, w) in [("ac", weight_ac), ("atomic", weight_atomic), ("fractal", weight_fractal)] {
            if !(0.0..=1.0).contains(&w) {
                return bad(format!("{name} weight must lie in [0,1], got {w}"));
            }
        }
        if (weight_ac + weight_atomic + weight_fractal - 1.0).abs() > WEIGHT_TOL {
            return bad(format!(
                "weights must sum to 1, got {}",
                weight_ac + weight_atomic + weight_fractal
            ));
        }
        let (mut k_lo, mut k_hi) = (0.0, 0.0);
        if weight_ac > 0.0 {
            let Some(g) = ac_density.as_mut() else {
                return bad("weight_ac > 0 but no density given".into());
            };
            if d > 3 {
                return bad("absolutely continuous parts are supported for d = 2, 3".into());
            }
            g.validate(d)?;
            (k_lo, k_hi) = g.bounds(d);
            if !(k_lo > 0.0) {
                return bad("density must be bounded away from zero".into());
            }
        } else {
            ac_density = None;
        }
        if weight_atomic > 0.0 {
            if atoms.is_empty() {
                return bad("weight_atomic > 0 but no atoms given".into());
            }
            let mut seen = vec![false; d];
            for a in &atoms {
                if a.axis >= d {
                    return bad(format!("atom axis {} out of range for d = {d}", a.axis));
                }
                if seen[a.axis] {
                    return bad(format!("axis {} listed twice", a.axis));
                }
                seen[a.axis] = true;
                if a.sigma_plus < 0.0 || a.sigma_minus < 0.0 || (a.sigma_plus + a.sigma_minus - 1.0).abs() > WEIGHT_TOL {
                    return bad(format!("atom masses on axis {} must be >= 0 and sum to 1", a.axis));
                }
            }
        }
        let atoms = if weight_atomic > 0.0 { atoms } else { Vec::new() };
        let fractal = if weight_fractal > 0.0 {
            let Some(c) = fractal else {
                return bad("weight_fractal > 0 but no Cantor part given".into());
            };
            if c.depth < 1 || c.depth > 20 {
                return bad(format!("Cantor depth must lie in 1..=20, got {}", c.depth));
            }
            if !c.symmetrized {
                return bad("the fractal part must be symmetrized".into());
            }
            Some(c)
        } else {
            None
        };
        let m = SpectralMeasure { d, weight_ac, weight_atomic, weight_fractal, ac_density, k_lo, k_hi, atoms, fractal };
        m.validate_density_grid()?;
        let mass = m.total_mass_quadrature();
        if (mass - 1.0).abs() > MASS_TOL {
            return bad(format!("total mass {mass} differs from 1"));
        }
        Ok(m)
    }

    fn validate_density_grid(&self) -> Result<()> {
        let Some(g) = &self.ac_density else { return Ok(()) };
        let slack = 1e-12 * self.k_hi;
        for th in sphere::direction_grid(self.d, 1024) {
            let v = g.eval(&th);
            if !(v >= self.k_lo - slack && v <= self.k_hi + slack) {
                return Err(Error::InvalidMeasure(format!(
                    "density value {v} outside declared bounds [{}, {}]",
                    self.k_lo, self.k_hi
                )));
            }
        }
        Ok(())
    }

    /// Total mass of ν: sphere quadrature of the AC density plus the exact
    /// masses of the discrete parts.
    pub fn total_mass_quadrature(&self) -> f64 {
        let ac = match &self.ac_density {
            Some(g) => self.weight_ac * integrate_over_sphere(self.d, |th| g.eval(th)),
            None => 0.0,
        };
        let at: f64 = if self.atoms.is_empty() {
            0.0
        } else {
            let k = self.atoms.len() as f64;
            self.weight_atomic * self.atoms.iter().map(|a| (a.sigma_plus + a.sigma_minus) / k).sum::<f64>()
        };
        let fr = if self.fractal.is_some() { self.weight_fractal } else { 0.0 };
        ac + at + fr
    }

    pub fn dim(&self) -> usize {
        self.d
    }
    pub fn weights(&self) -> (f64, f64, f64) {
        (self.weight_ac, self.weight_atomic, self.weight_fractal)
    }
    pub fn ac_density(&self) -> Option<&AcDensity> {
        self.ac_density.as_ref()
    }
    pub fn density_bounds(&self) -> (f64, f64) {
        (self.k_lo, self.k_hi)
    }
    pub fn atoms(&self) -> &[AtomPair] {
        &self.atoms
    }
    pub fn fractal(&self) -> Option<&CantorSpec> {
        self.fractal.as_ref()
    }

    /// True when ν is invariant under θ ↦ −θ.
    pub fn is_symmetric(&self) -> bool {
        self.ac_density.as_ref().is_none_or(|g| g.is_even())
            && self.atoms.iter().all(|a| a.sigma_plus == a.sigma_minus)
            && self.fractal.is_none_or(|c| c.symmetrized)
    }

    /// Draws a direction θ ∼ ν.
    ///
    /// The AC component is sampled exactly by rejection from the uniform
    /// law with acceptance `g/k_hi`; atoms are drawn categorically in listed
    /// order; the Cantor part by `depth` uniform binary digits (returning the
    /// centre of the selected construction arc).
    pub fn sample_direction<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut th = vec![0.0; self.d];
        self.sample_direction_into(rng, &mut th);
        th
    }

    /// Allocation-free form of [`Self::sample_direction`].
    pub fn sample_direction_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let u: f64 = rng.random();
        if u < self.weight_ac {
            let g = self.ac_density.as_ref().expect("validated");
            loop {
                sphere::uniform_direction_into(rng, out);
                if rng.random::<f64>() * self.k_hi <= g.eval(out) {
                    return;
                }
            }
        } else if u < self.weight_ac + self.weight_atomic {
            let k = self.atoms.len();
            let v: f64 = rng.random::<f64>() * k as f64;
            let idx = (v as usize).min(k - 1);
            let a = &self.atoms[idx];
            out.iter_mut().for_each(|x| *x = 0.0);
            out[a.axis] = if rng.random::<f64>() >= a.sigma_plus { -1.0 } else { 1.0 };
        } else {
            let c = self.fractal.as_ref().expect("validated");
            let code = (rng.random::<u64>() >> (64 - c.depth)) as usize;
            let mut phi = c.arc_center(code);
            if c.symmetrized && rng.random::<bool>() {
                phi += PI;
            }
            out.iter_mut().for_each(|x| *x = 0.0);
            out[0] = phi.cos();
            out[1] = phi.sin();
        }
    }

    /// Shipped presets.
    pub fn preset(name: &str, d: usize) -> Result<Self> {
        let full_basis = || {
            (0..d).map(|i| AtomPair { axis: i, sigma_plus: 0.5, sigma_minus: 0.5 }).collect::<Vec<_>>()
        };
        let cantor = CantorSpec { depth: 8, symmetrized: true };
        let spec = match name {
            "uniform" => SpectralSpec {
                d,
                weight_ac: 1.0,
                weight_atomic: 0.0,
                weight_fractal: 0.0,
                ac_density: Some(AcDensity::Uniform),
                atoms: vec![],
                fractal: None,
            },
            "atomic" => SpectralSpec {
                d,
                weight_ac: 0.0,
                weight_atomic: 1.0,
                weight_fractal: 0.0,
                ac_density: None,
                atoms: full_basis(),
                fractal: None,
            },
            "cantor" => SpectralSpec {
                d,
                weight_ac: 0.0,
                weight_atomic: 0.0,
                weight_fractal: 1.0,
                ac_density: None,
                atoms: vec![],
                fractal: Some(cantor),
            },
            "mixture" => SpectralSpec {
                d,
                weight_ac: 1.0 / 3.0,
                weight_atomic: 1.0 / 3.0,
                weight_fractal: 1.0 / 3.0,
                ac_density: Some(AcDensity::Uniform),
                atoms: full_basis(),
                fractal: Some(cantor),
            },
            "axial" => SpectralSpec {
                d,
                weight_ac: 1.0,
                weight_atomic: 0.0,
                weight_fractal: 0.0,
                ac_density: Some(AcDensity::Axial { kappa: 2.0, axis: 0 }),
                atoms: vec![],
                fractal: None,
            },
            "tilted" => SpectralSpec {
                d,
                weight_ac: 1.0,
                weight_atomic: 0.0,
                weight_fractal: 0.0,
                ac_density: Some(AcDensity::Tilted { kappa: 0.5, axis: 0 }),
                atoms: vec![],
                fractal: None,
            },
            other => return Err(invalid(format!("unknown spectral preset '{other}'"))),
        };
        let mut spec = spec;
        // the mixture weights are thirds; repair rounding so they sum to 1
        if name == "mixture" {
            spec.weight_fractal = 1.0 - spec.weight_ac - spec.weight_atomic;
        }
        SpectralMeasure::new(spec)
    }

    pub const PRESETS: [&'static str; 6] = ["uniform", "atomic", "cantor", "mixture", "axial", "tilted"];
}

/// ∫_{S^{d−1}} f dθ for d ∈ {2, 3} by high-order rules (trapezoid in the
/// angle; Gauss–Legendre in the height times trapezoid in the azimuth).
pub fn integrate_over_sphere<F: Fn(&[f64]) -> f64>(d: usize, f: F) -> f64 {
    match d {
        2 => {
            let n = 1 << 14;
            let h = 2.0 * PI / n as f64;
            (0..n).map(|k| f(&sphere::circle_point(h * k as f64))).sum::<f64>() * h
        }
        3 => {
            let rule = GaussRule::new(96);
            let na = 256;
            let h = 2.0 * PI / na as f64;
            let mut s = 0.0;
            for (z, w) in rule.nodes.iter().zip(&rule.weights) {
                let r = (1.0 - z * z).sqrt();
                let mut ring = 0.0;
                for k in 0..na {
                    let p = h * k as f64;
                    ring += f(&[r * p.cos(), r * p.sin(), *z]);
                }
                s += w * ring * h;
            }
            s
        }
        _ => f64::NAN,
    }
}

/// One weighted direction of the reduced measure: mass `w_plus` at `theta`
/// and `w_minus` at `−theta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Line {
    pub theta: Vec<f64>,
    pub w_plus: f64,
    pub w_minus: f64,
}

/// Summary of the reduction of the AC part to quadrature atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureInfo {
    /// Number of AC quadrature directions in use (0 without AC part).
    pub m: usize,
    /// Estimated error of ψ at unit |z| (scales as |z|^α).
    pub unit_budget: f64,
    /// Whether the doubling rule met its threshold before the cap.
    pub converged: bool,
}

/// How the AC direction count is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub initial: usize,
    pub threshold: f64,
    pub cap: usize,
    /// Fixed count; disables the doubling rule when set.
    pub fixed: Option<usize>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { initial: 256, threshold: 1e-6, cap: 4096, fixed: None }
    }
}

/// Strictly α-stable law with spectral measure ν.
#[derive(Debug, Clone, Serialize)]
pub struct StableLaw {
    alpha: f64,
    d_alpha: f64,
    nu: SpectralMeasure,
    lines: Vec<Line>,
    quadrature: QuadratureInfo,
    tan_term: f64,
}

/// ψ(z) with its quadrature error budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent {
    pub value: Complex64,
    pub budget: f64,
}

/// Result of minimizing the directional exponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinExponent {
    pub value: f64,
    pub direction: Vec<f64>,
    pub degenerate: bool,
    pub budget: f64,
}

impl StableLaw {
    pub fn new(alpha: f64, nu: SpectralMeasure) -> Result<Self> {
        Self::with_quadrature(alpha, nu, QuadratureConfig::default())
    }

    pub fn with_quadrature(alpha: f64, nu: SpectralMeasure, q: QuadratureConfig) -> Result<Self> {
        let d_alpha = compute_d_alpha(alpha)?;
        let tan_term = (PI * alpha / 2.0).tan();
        let mut lines = discrete_lines(&nu);
        let mut info = QuadratureInfo { m: 0, unit_budget: 0.0, converged: true };
        if let Some(g) = nu.ac_density() {
            let (m, budget, converged, ac) = reduce_ac(alpha, tan_term, nu.dim(), g, nu.weight_ac, q)?;
            info = QuadratureInfo { m, unit_budget: budget, converged };
            merge_lines(&mut lines, ac);
        }
        Ok(StableLaw { alpha, d_alpha, nu, lines, quadrature: info, tan_term })
    }

    /// Convenience constructor from a preset name.
    pub fn preset(alpha: f64, name: &str, d: usize) -> Result<Self> {
        Self::new(alpha, SpectralMeasure::preset(name, d)?)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn d_alpha(&self) -> f64 {
        self.d_alpha
    }
    pub fn dim(&self) -> usize {
        self.nu.dim()
    }
    pub fn nu(&self) -> &SpectralMeasure {
        &self.nu
    }
    pub fn lines(&self) -> &[Line] {
        &self.lines
    }
    pub fn quadrature(&self) -> QuadratureInfo {
        self.quadrature
    }

    /// Same law with the AC part re-reduced at a fixed, typically coarser,
    /// direction count. Used where ν enters only through an outer quadrature.
    pub fn with_fixed_directions(&self, m: usize) -> Result<StableLaw> {
        let q = QuadratureConfig { fixed: Some(m), ..QuadratureConfig::default() };
        Self::with_quadrature(self.alpha, self.nu.clone(), q)
    }

    /// Characteristic exponent with its quadrature budget.
    pub fn psi(&self, z: &[f64]) -> Result<Exponent> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: z.len() });
        }
        let value = psi_lines(&self.lines, self.alpha, self.tan_term, z);
        let budget = self.quadrature.unit_budget * norm(z).powf(self.alpha);
        Ok(Exponent { value, budget })
    }

    /// ψ without dimension checks, for inner loops.
    pub fn psi_value(&self, z: &[f64]) -> Complex64 {
        psi_lines(&self.lines, self.alpha, self.tan_term, z)
    }

    /// `Σ_α(e,ν) = ∫|⟨e,θ⟩|^α ν(dθ)` for a unit vector `e`.
    pub fn directional_exponent(&self, e: &[f64]) -> f64 {
        self.lines.iter().map(|l| dot(e, &l.theta).abs().powf(self.alpha) * (l.w_plus + l.w_minus)).sum()
    }

    /// `m_ν = min_e Σ_α(e,ν)`: coarse grid, then golden-section refinement.
    pub fn min_directional_exponent(&self) -> MinExponent {
        let d = self.dim();
        let budget = self.quadrature.unit_budget;
        let f = |e: &[f64]| self.directional_exponent(e);
        let (value, direction) = match d {
            2 => {
                let n = 720;
                let h = PI / n as f64;
                // Σ_α(e) = Σ_α(−e): half circle suffices, angles kπ/n include the axes
                let (k, _) = (0..n)
                    .map(|k| (k, f(&sphere::circle_point(h * k as f64))))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                let phi0 = h * k as f64;
                let g = |p: f64| f(&sphere::circle_point(p));
                let (p, v) = golden_min(g, phi0 - h, phi0 + h, 20);
                let v0 = g(phi0);
                if v0 <= v {
                    (v0, sphere::circle_point(phi0))
                } else {
                    (v, sphere::circle_point(p))
                }
            }
            3 => {
                let grid = sphere::fibonacci_sphere(2562);
                let (k, _) = grid
                    .iter()
                    .enumerate()
                    .map(|(k, e)| (k, f(e)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                let mut e = grid[k].clone();
                let mut best = f(&e);
                let spacing = (4.0 * PI / 2562.0).sqrt();
                for round in 0..2 {
                    let (t1, t2) = sphere::tangent_frame(&e);
                    for t in [&t1, &t2] {
                        let w = spacing / (round as f64 + 1.0);
                        let path = |s: f64| {
                            let v: Vec<f64> = (0..3).map(|i| e[i] * s.cos() + t[i] * s.sin()).collect();
                            v
                        };
                        let (s, v) = golden_min(|s| f(&path(s)), -w, w, 20);
                        if v < best {
                            best = v;
                            e = path(s);
                        }
                    }
                }
                (best, e)
            }
            _ => {
                let grid = sphere::direction_grid(d, 4096);
                let (k, v) = grid
                    .iter()
                    .enumerate()
                    .map(|(k, e)| (k, f(e)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                (v, grid[k].clone())
            }
        };
        MinExponent { value, direction, degenerate: value < 1e-6, budget }
    }
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, steps: usize) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..steps {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

pub(crate) fn psi_lines(lines: &[Line], alpha: f64, tan_term: f64, z: &[f64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for l in lines {
        let p = dot(z, &l.theta);
        if p == 0.0 {
            continue;
        }
        let a = p.abs().powf(alpha);
        re += a * (l.w_plus + l.w_minus);
        im -= a * tan_term * p.signum() * (l.w_plus - l.w_minus);
    }
    Complex64::new(re, im)
}

/// Lines of the atomic and fractal parts.
fn discrete_lines(nu: &SpectralMeasure) -> Vec<Line> {
    let d = nu.dim();
    let mut lines = Vec::new();
    let k = nu.atoms().len() as f64;
    for a in nu.atoms() {
        lines.push(Line {
            theta: sphere::unit(d, a.axis),
            w_plus: nu.weight_atomic * a.sigma_plus / k,
            w_minus: nu.weight_atomic * a.sigma_minus / k,
        });
    }
    if let Some(c) = nu.fractal() {
        let n = 1usize << c.depth;
        let w = if c.symmetrized { nu.weight_fractal / (2 * n) as f64 } else { nu.weight_fractal / n as f64 };
        let wm = if c.symmetrized { w } else { 0.0 };
        let mut frac = Vec::with_capacity(n);
        for code in 0..n {
            let phi = c.arc_center(code);
            let mut th = vec![0.0; d];
            th[0] = phi.cos();
            th[1] = phi.sin();
            frac.push(Line { theta: th, w_plus: w, w_minus: wm });
        }
        merge_lines(&mut lines, frac);
    }
    lines
}

/// Appends `extra`, folding lines whose direction coincides (up to sign)
/// with an existing one.
fn merge_lines(lines: &mut Vec<Line>, extra: Vec<Line>) {
    let existing = lines.len();
    if existing == 0 {
        lines.extend(extra);
        return;
    }
    for l in extra {
        let mut merged = false;
        for cur in lines[..existing].iter_mut() {
            let c = dot(&cur.theta, &l.theta);
            if (c - 1.0).abs() < 1e-14 {
                cur.w_plus += l.w_plus;
                cur.w_minus += l.w_minus;
                merged = true;
                break;
            } else if (c + 1.0).abs() < 1e-14 {
                cur.w_plus += l.w_minus;
                cur.w_minus += l.w_plus;
                merged = true;
                break;
            }
        }
        if !merged {
            lines.push(l);
        }
    }
}

/// AC quadrature directions as antipodal pairs: `m/2` base directions.
fn ac_directions(d: usize, m: usize) -> Vec<Vec<f64>> {
    match d {
        2 => (0..m / 2).map(|k| sphere::circle_point(2.0 * PI * (k as f64 + 0.5) / m as f64)).collect(),
        _ => sphere::symmetric_fibonacci_sphere(m).into_iter().take(m / 2).collect(),
    }
}

fn ac_lines(d: usize, m: usize, g: &AcDensity, mass: f64) -> Vec<Line> {
    let base = ac_directions(d, m);
    let mut lines: Vec<Line> = base
        .into_iter()
        .map(|th| {
            let neg: Vec<f64> = th.iter().map(|x| -x).collect();
            let (wp, wm) = (g.eval(&th), g.eval(&neg));
            Line { theta: th, w_plus: wp, w_minus: wm }
        })
        .collect();
    let total: f64 = lines.iter().map(|l| l.w_plus + l.w_minus).sum();
    for l in &mut lines {
        l.w_plus *= mass / total;
        l.w_minus *= mass / total;
    }
    lines
}

fn probe_directions(d: usize) -> Vec<Vec<f64>> {
    match d {
        // irrational offsets keep probes off the quadrature nodes
        2 => (0..16).map(|k| sphere::circle_point(0.1234 + 2.0 * PI * k as f64 / 16.0)).collect(),
        _ => sphere::fibonacci_sphere(17),
    }
}

type Reduction = (usize, f64, bool, Vec<Line>);

fn reduce_ac(alpha: f64, tan_term: f64, d: usize, g: &AcDensity, mass: f64, q: QuadratureConfig) -> Result<Reduction> {
    let probes = probe_directions(d);
    let eval = |lines: &[Line]| -> Vec<Complex64> { probes.iter().map(|z| psi_lines(lines, alpha, tan_term, z)).collect() };
    let diff = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    if let Some(m) = q.fixed {
        if m < 2 || m % 2 != 0 {
            return Err(invalid(format!("direction count must be even and >= 2, got {m}")));
        }
        let fine = ac_lines(d, m, g, mass);
        let coarse = ac_lines(d, (m / 2).max(2), g, mass);
        let e = diff(&eval(&fine), &eval(&coarse));
        return Ok((m, e, e < q.threshold, fine));
    }
    if q.initial < 4 || q.initial % 2 != 0 {
        return Err(invalid(format!("initial direction count must be even and >= 4, got {}", q.initial)));
    }
    let mut m = q.initial;
    let mut prev = eval(&ac_lines(d, m / 2, g, mass));
    loop {
        let lines = ac_lines(d, m, g, mass);
        let cur = eval(&lines);
        let e = diff(&cur, &prev);
        if e < q.threshold || m * 2 > q.cap {
            return Ok((m, e, e < q.threshold, lines));
        }
        prev = cur;
        m *= 2;
    }
}

/// Probe frequencies for characteristic-function checks: ten on each of the
/// rings |z| = 0.7 and |z| = 1.5, the first two axes at 0.35 and 3.0, and a
/// diagonal at 2.0. Always 25 vectors.
pub fn cf_probe_set(d: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(25);
    let ring = |r: f64, off: f64| -> Vec<Vec<f64>> {
        (0..10)
            .map(|k| {
                let phi = off + 2.0 * PI * k as f64 / 10.0;
                let mut z = vec![0.0; d];
                z[0] = r * phi.cos();
                z[1] = r * phi.sin();
                if d > 2 {
                    // tilt the rings out of the first plane
                    z[2] = 0.3 * r * (phi * 2.0).sin();
                    let n = norm(&z);
                    z.iter_mut().for_each(|x| *x *= r / n);
                }
                z
            })
            .collect()
    };
    out.extend(ring(0.7, 0.1));
    out.extend(ring(1.5, 0.35));
    for (i, r) in [(0usize, 0.35), (1, 0.35), (0, 3.0), (1, 3.0)] {
        let mut z = vec![0.0; d];
        z[i] = r;
        out.push(z);
    }
    let s = 2.0 / (d as f64).sqrt();
    out.push(vec![s; d]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn d_alpha_closed_forms_agree() {
        for a in [1.05, 1.2, 1.5, 1.8, 1.95] {
            let x = compute_d_alpha(a).unwrap();
            let y = compute_d_alpha_reflected(a).unwrap();
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
        assert!(compute_d_alpha(1.0).is_err());
        assert!(compute_d_alpha(2.0).is_err());
        assert!(compute_d_alpha(f64::NAN).is_err());
    }

    #[test]
    fn cantor_arcs_partition_the_construction() {
        let c = CantorSpec { depth: 3, symmetrized: true };
        let arcs = c.arcs();
        assert_eq!(arcs.len(), 16);
        assert_relative_eq!(arcs[0].0, -PI / 4.0);
        assert_relative_eq!(arcs[7].1, PI / 4.0, max_relative = 1e-14);
        for w in arcs[..8].windows(2) {
            assert!(w[1].0 > w[0].1);
        }
    }

    #[test]
    fn weights_must_sum_to_one() {
        let mut s = SpectralSpec {
            d: 2,
            weight_ac: 0.5,
            weight_atomic: 0.4,
            weight_fractal: 0.0,
            ac_density: Some(AcDensity::Uniform),
            atoms: vec![AtomPair { axis: 0, sigma_plus: 0.5, sigma_minus: 0.5 }],
            fractal: None,
        };
        assert!(SpectralMeasure::new(s.clone()).is_err());
        s.weight_atomic = 0.5;
        assert!(SpectralMeasure::new(s.clone()).is_ok());
        s.atoms[0].sigma_minus = 0.6;
        assert!(SpectralMeasure::new(s).is_err());
    }

    #[test]
    fn unsymmetrized_fractal_rejected() {
        let s = SpectralSpec {
            d: 2,
            weight_ac: 0.0,
            weight_atomic: 0.0,
            weight_fractal: 1.0,
            ac_density: None,
            atoms: vec![],
            fractal: Some(CantorSpec { depth: 3, symmetrized: false }),
        };
        assert!(SpectralMeasure::new(s).is_err());
    }

    #[test]
    fn tabulated_density_normalized_and_bounded() {
        let angles: Vec<f64> = (0..12).map(|k| 2.0 * PI * k as f64 / 12.0).collect();
        let values: Vec<f64> = angles.iter().map(|a| 2.0 + a.cos()).collect();
        let s = SpectralSpec {
            d: 2,
            weight_ac: 1.0,
            weight_atomic: 0.0,
            weight_fractal: 0.0,
            ac_density: Some(AcDensity::Tabulated { angles, values }),
            atoms: vec![],
            fractal: None,
        };
        let m = SpectralMeasure::new(s).unwrap();
        assert_relative_eq!(m.total_mass_quadrature(), 1.0, max_relative = 1e-9);
        assert!(!m.is_symmetric());
    }

    #[test]
    fn presets_have_unit_mass() {
        for d in [2, 3] {
            for p in SpectralMeasure::PRESETS {
                let m = SpectralMeasure::preset(p, d).unwrap();
                assert!((m.total_mass_quadrature() - 1.0).abs() < 1e-9, "{p} d={d}");
                let law = StableLaw::new(1.5, m).unwrap();
                let tot: f64 = law.lines().iter().map(|l| l.w_plus + l.w_minus).sum();
                assert_relative_eq!(tot, 1.0, max_relative = 1e-12);
            }
        }
    }
}
