//! Source laws in the domain of attraction: Paretian, Pareto with a
//! modified tail, and the log-modified density.
//!
//! Every variant has the polar form `F_ξ(dr dθ) = f_ν(r) dr ν(dθ) + f_P(r)
//! dr P(dθ)`, where `P(dθ) = b·⟨θ,e₁⟩² dθ` is the tail profile (only used by
//! the modified-tail variant).

use crate::error::{invalid, Result};
use crate::quad;
use crate::spectral::{integrate_over_sphere, StableLaw};
use crate::sphere;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_ur};

/// Angular shape of the secondary tail `B(rθ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailProfile {
    /// `B ≡ 0`.
    Zero,
    /// `B(rθ) = b·⟨θ, e₁⟩²`.
    CosSquared,
}

impl TailProfile {
    fn shape(&self, theta: &[f64]) -> f64 {
        match self {
            TailProfile::Zero => 0.0,
            TailProfile::CosSquared => theta[0] * theta[0],
        }
    }

    /// `∫_S shape(θ) dθ`.
    fn angular_mass(&self, d: usize) -> f64 {
        match self {
            TailProfile::Zero => 0.0,
            TailProfile::CosSquared => sphere::sphere_area(d) / d as f64,
        }
    }
}

/// Variant parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SourceKind {
    /// `ξ = r θ`, `r` with density `α r^{−1−α}` on `[1, ∞)`, `θ ∼ ν`.
    Paretian,
    /// `A r^{−α−1} dr ν(dθ) + B(rθ) r^{−β−1} dr dθ` on `r ≥ 1`, with `β > α`.
    ModifiedTail { a: f64, beta: f64, profile: TailProfile },
    /// Density `K₀[α(log|x|)^β − β(log|x|)^{β−1}] |x|^{−α−d} g(x/|x|)` on
    /// `|x| ≥ e`, with `0 ≤ β ≤ α`.
    LogModified { beta: f64 },
}

/// A source law bound to its limiting stable law `(α, ν)`.
#[derive(Debug, Clone)]
pub struct SourceLaw {
    kind: SourceKind,
    law: StableLaw,
    /// Profile amplitude `b` (modified tail), fixed by unit mass.
    b: f64,
    /// `K₀` (log-modified), fixed by unit mass.
    k0: f64,
    profile_mass: f64,
}

impl SourceLaw {
    pub fn paretian(law: StableLaw) -> Self {
        SourceLaw { kind: SourceKind::Paretian, law, b: 0.0, k0: 0.0, profile_mass: 0.0 }
    }

    /// The amplitude `b` is solved from `A/α + b·∫profile/β = 1`.
    pub fn modified_tail(law: StableLaw, a: f64, beta: f64, profile: TailProfile) -> Result<Self> {
        let alpha = law.alpha();
        if !(a > 0.0) || !a.is_finite() {
            return Err(invalid(format!("tail weight A must be positive, got {a}")));
        }
        if !(beta > alpha) || !beta.is_finite() {
            return Err(invalid(format!("modified tail needs beta > alpha (got beta = {beta}, alpha = {alpha})")));
        }
        let profile_mass = profile.angular_mass(law.dim());
        let rest = 1.0 - a / alpha;
        let b = match profile {
            TailProfile::Zero => {
                if rest.abs() > 1e-12 {
                    return Err(invalid(format!("with B = 0 unit mass forces A = alpha (got A = {a})")));
                }
                0.0
            }
            _ => {
                if rest < 0.0 {
                    return Err(invalid(format!(
                        "A/alpha = {} exceeds 1; a nonnegative profile cannot restore unit mass",
                        a / alpha
                    )));
                }
                rest * beta / profile_mass
            }
        };
        let s = SourceLaw { kind: SourceKind::ModifiedTail { a, beta, profile }, law, b, k0: 0.0, profile_mass };
        let mass = s.mass_by_quadrature();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(invalid(format!("modified-tail mass check failed: {mass}")));
        }
        Ok(s)
    }

    /// `K₀ = e^α` is fixed by unit mass on `|x| ≥ e`.
    pub fn log_modified(law: StableLaw, beta: f64) -> Result<Self> {
        let alpha = law.alpha();
        if !(0.0..=alpha).contains(&beta) {
            return Err(invalid(format!(
                "log-modified density is nonnegative only for 0 <= beta <= alpha (got {beta})"
            )));
        }
        let s = SourceLaw { kind: SourceKind::LogModified { beta }, law, b: 0.0, k0: alpha.exp(), profile_mass: 0.0 };
        let mass = s.mass_by_quadrature();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(invalid(format!("log-modified mass check failed: {mass}")));
        }
        Ok(s)
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }
    pub fn law(&self) -> &StableLaw {
        &self.law
    }
    pub fn alpha(&self) -> f64 {
        self.law.alpha()
    }
    pub fn dim(&self) -> usize {
        self.law.dim()
    }
    pub fn profile_amplitude(&self) -> f64 {
        self.b
    }
    pub fn k0(&self) -> f64 {
        self.k0
    }
    /// `b·∫profile dθ`, the total angular weight of the profile part.
    pub fn profile_weight(&self) -> f64 {
        self.b * self.profile_mass
    }

    /// Lower end of the radial support of `ξ`.
    pub fn radial_start(&self) -> f64 {
        match self.kind {
            SourceKind::LogModified { .. } => std::f64::consts::E,
            _ => 1.0,
        }
    }

    /// Radial density of the ν-part of `ξ`.
    pub fn density_nu(&self, r: f64) -> f64 {
        let alpha = self.alpha();
        match self.kind {
            SourceKind::Paretian => {
                if r >= 1.0 {
                    alpha * r.powf(-alpha - 1.0)
                } else {
                    0.0
                }
            }
            SourceKind::ModifiedTail { a, .. } => {
                if r >= 1.0 {
                    a * r.powf(-alpha - 1.0)
                } else {
                    0.0
                }
            }
            SourceKind::LogModified { beta } => {
                let l = r.ln();
                if l >= 1.0 {
                    self.k0 * (alpha * l.powf(beta) - beta * l.powf(beta - 1.0)) * r.powf(-alpha - 1.0)
                } else {
                    0.0
                }
            }
        }
    }

    /// Radial density of the profile part of `ξ` per unit of `b·shape`.
    pub fn density_profile(&self, r: f64) -> f64 {
        match self.kind {
            SourceKind::ModifiedTail { beta, .. } if r >= 1.0 => r.powf(-beta - 1.0),
            _ => 0.0,
        }
    }

    /// `P(|ξ| > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        let alpha = self.alpha();
        if x < self.radial_start() {
            return 1.0;
        }
        match self.kind {
            SourceKind::Paretian => x.powf(-alpha),
            SourceKind::ModifiedTail { a, beta, .. } => a / alpha * x.powf(-alpha) + self.profile_weight() / beta * x.powf(-beta),
            SourceKind::LogModified { beta } => self.k0 * x.ln().powf(beta) * x.powf(-alpha),
        }
    }

    /// Total mass: radial integrals by quadrature times angular masses.
    pub fn mass_by_quadrature(&self) -> f64 {
        let start = self.radial_start();
        let nu_mass = self.law.lines().iter().map(|l| l.w_plus + l.w_minus).sum::<f64>();
        let radial = quad::adaptive_to_inf(|r| self.density_nu(r), start, 1e-13, 1e-13, 4000).value;
        let mut m = radial * nu_mass;
        if self.b != 0.0 {
            let SourceKind::ModifiedTail { profile, .. } = self.kind else { unreachable!() };
            let ang = integrate_over_sphere(self.dim(), |t| profile.shape(t));
            m += self.b * ang * quad::adaptive_to_inf(|r| self.density_profile(r), start, 1e-13, 1e-13, 4000).value;
        }
        m
    }

    /// `E|ξ|^p` in closed form, `0 ≤ p < α`.
    pub fn radial_moment(&self, p: f64) -> Result<f64> {
        let alpha = self.alpha();
        if !(p >= 0.0 && p < alpha) {
            return Err(crate::error::Error::Divergent(format!("E|xi|^{p} is infinite for alpha = {alpha}")));
        }
        Ok(match self.kind {
            SourceKind::Paretian => alpha / (alpha - p),
            SourceKind::ModifiedTail { a, beta, .. } => a / (alpha - p) + self.profile_weight() / (beta - p),
            SourceKind::LogModified { beta } => {
                // e^p + p·K₀·Γ(β+1, α−p)/(α−p)^{β+1}
                let k = alpha - p;
                let upper = gamma_ur(beta + 1.0, k) * gamma(beta + 1.0);
                p.exp() + p * self.k0 * upper / k.powf(beta + 1.0)
            }
        })
    }

    /// `E|ξ|^p` by quadrature of `∫ p x^{p−1} P(|ξ| > x) dx`.
    pub fn radial_moment_quadrature(&self, p: f64) -> f64 {
        let start = self.radial_start();
        if p == 0.0 {
            return 1.0;
        }
        // x = start·e^t turns the power tail into exponential decay
        let tail = quad::adaptive_to_inf(
            |t| {
                let x = start * f64::exp(t);
                p * x.powf(p) * self.survival(x)
            },
            0.0,
            1e-15,
            1e-13,
            4000,
        );
        start.powf(p) + tail.value
    }

    /// `E ξ`: radial mean times the mean direction of each angular part.
    pub fn mean(&self) -> Vec<f64> {
        let d = self.dim();
        let mut m = vec![0.0; d];
        if self.law.nu().is_symmetric() {
            return m;
        }
        let nu_radial = match self.kind {
            SourceKind::ModifiedTail { a, .. } => a / (self.alpha() - 1.0),
            _ => self.radial_moment(1.0).expect("alpha > 1"),
        };
        for l in self.law.lines() {
            for (o, t) in m.iter_mut().zip(&l.theta) {
                *o += nu_radial * (l.w_plus - l.w_minus) * t;
            }
        }
        // the ⟨θ,e₁⟩² profile is even, so its mean direction vanishes
        m
    }

    /// One draw of `ξ`, written into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let alpha = self.alpha();
        let r = match self.kind {
            SourceKind::Paretian => {
                self.law.nu().sample_direction_into(rng, out);
                unit_open(rng).powf(-1.0 / alpha)
            }
            SourceKind::ModifiedTail { a, beta, profile } => {
                // exact two-component mixture with weights A/α and b·∫profile/β
                if rng.random::<f64>() < a / alpha {
                    self.law.nu().sample_direction_into(rng, out);
                    unit_open(rng).powf(-1.0 / alpha)
                } else {
                    loop {
                        sphere::uniform_direction_into(rng, out);
                        if rng.random::<f64>() <= profile.shape(out) {
                            break;
                        }
                    }
                    unit_open(rng).powf(-1.0 / beta)
                }
            }
            SourceKind::LogModified { beta } => {
                self.law.nu().sample_direction_into(rng, out);
                log_modified_radius(alpha, beta, unit_open(rng))
            }
        };
        out.iter_mut().for_each(|x| *x *= r);
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        self.sample_into(rng, &mut v);
        v
    }
}

/// Uniform on `(0, 1]`.
fn unit_open<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Inverse of the log-modified survival `e^α L^β e^{−αL} = u` with
/// `L = log r ≥ 1`, i.e. the root of `αL − β log L = α − log u`.
pub fn log_modified_radius(alpha: f64, beta: f64, u: f64) -> f64 {
    let target = alpha - u.ln();
    let h = |l: f64| alpha * l - beta * l.ln() - target;
    if h(1.0) >= 0.0 {
        return std::f64::consts::E;
    }
    // h is increasing on [1, ∞); bracket, then safeguarded Newton
    let mut lo = 1.0;
    let mut hi = 2.0;
    while h(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut l = 0.5 * (lo + hi);
    for _ in 0..100 {
        let v = h(l);
        if v < 0.0 {
            lo = l;
        } else {
            hi = l;
        }
        let slope = alpha - beta / l;
        let mut next = if slope > 0.0 { l - v / slope } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - l).abs() <= 1e-15 * l {
            l = next;
            break;
        }
        l = next;
    }
    l.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::from_seed;

    fn uniform(alpha: f64) -> StableLaw {
        StableLaw::preset(alpha, "uniform", 2).unwrap()
    }

    #[test]
    fn paretian_moments_closed_form_and_quadrature() {
        let s = SourceLaw::paretian(uniform(1.5));
        assert!((s.radial_moment(0.5).unwrap() - 1.5).abs() < 1e-14);
        assert!((s.radial_moment(1.0).unwrap() - 3.0).abs() < 1e-14);
        assert!((s.radial_moment_quadrature(0.5) - 1.5).abs() < 1e-9);
        assert!((s.radial_moment_quadrature(1.0) - 3.0).abs() < 1e-8);
        assert!(s.radial_moment(1.5).is_err());
    }

    #[test]
    fn modified_tail_mass_and_moments() {
        let s = SourceLaw::modified_tail(uniform(1.5), 0.75, 3.0, TailProfile::CosSquared).unwrap();
        assert!((s.mass_by_quadrature() - 1.0).abs() < 1e-9);
        for p in [0.5, 1.0] {
            let c = s.radial_moment(p).unwrap();
            let q = s.radial_moment_quadrature(p);
            assert!((c - q).abs() < 1e-8 * c, "{c} {q}");
        }
        assert!(SourceLaw::modified_tail(uniform(1.5), 0.75, 1.4, TailProfile::CosSquared).is_err());
        assert!(SourceLaw::modified_tail(uniform(1.5), 0.75, 3.0, TailProfile::Zero).is_err());
        assert!(SourceLaw::modified_tail(uniform(1.5), 1.5, 3.0, TailProfile::Zero).is_ok());
    }

    #[test]
    fn log_modified_inverse_and_moments() {
        let s = SourceLaw::log_modified(uniform(1.5), 1.0).unwrap();
        for u in [1.0, 0.9, 0.3, 1e-3, 1e-12] {
            let r = log_modified_radius(1.5, 1.0, u);
            assert!((s.survival(r) - u).abs() < 1e-12 * u.max(1e-300) + 1e-15, "{u} {r}");
        }
        for p in [0.5, 1.0] {
            let c = s.radial_moment(p).unwrap();
            let q = s.radial_moment_quadrature(p);
            assert!((c - q).abs() < 1e-8 * c, "{c} {q}");
        }
        assert!(SourceLaw::log_modified(uniform(1.5), 1.6).is_err());
    }

    #[test]
    fn paretian_survival_empirical() {
        let s = SourceLaw::paretian(uniform(1.5));
        let mut rng = from_seed(5);
        let n = 200_000;
        let rs: Vec<f64> = (0..n).map(|_| sphere::norm(&s.sample(&mut rng))).collect();
        assert!(rs.iter().all(|&r| r >= 1.0));
        for x in [2.0f64, 4.0, 8.0] {
            let p = x.powf(-1.5);
            let hat = rs.iter().filter(|&&r| r > x).count() as f64 / n as f64;
            assert!((hat - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt(), "{x} {hat} {p}");
        }
    }

    #[test]
    fn zero_profile_radii_pass_ks() {
        let b = SourceLaw::modified_tail(uniform(1.5), 1.5, 3.0, TailProfile::Zero).unwrap();
        let mut rng = from_seed(9);
        let n = 20_000;
        let mut rs: Vec<f64> = (0..n).map(|_| sphere::norm(&b.sample(&mut rng))).collect();
        rs.sort_by(f64::total_cmp);
        let ks = rs
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let f = 1.0 - r.powf(-1.5);
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value of the Kolmogorov distribution
        assert!(ks < 1.628 / (n as f64).sqrt(), "{ks}");
    }
}
