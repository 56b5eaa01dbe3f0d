//! The Wasserstein bound for centered sums: moment terms, the remainder
//! `R_{n,i}` split at a radius `N`, and the predicted rate shapes.
//!
//! With `q(r) = r^{α+1} f(r)/α − 1` for the radial density `f` of the
//! ν-part of `η`, the ν-part of the remainder is
//! `n^{−2/α}∫_0^N r^{1−α} α|q| dr + n^{−1/α}∫_N^∞ r^{−α} α|q| dr` (times
//! `ν(S)`). Finite pieces are integrated in `v = r^{k−α}/(k−α)` where the
//! weight becomes `dv`; the infinite piece in `t = log(r/R)`.
//! The profile part of the modified tail lives where the ν-part already
//! equals the target, so the total variation splits into the two sums.

use super::array::TriangularArray;
use super::source::SourceKind;
use crate::error::{invalid, Result};
use crate::quad;
use serde::Serialize;

const REL_TOL: f64 = 1e-13;
const MAX_PANELS: usize = 20_000;

/// The two moment terms of the bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentTerms {
    /// `E|η|^{2−α}`.
    pub eta_moment: f64,
    /// `E|η|`.
    pub eta_mean_norm: f64,
    /// `n^{−2/α} Σ_i E|η_i|^{2−α}`.
    pub first: f64,
    /// `n^{−2/α} Σ_i (E|η_i|)²`.
    pub second: f64,
}

pub fn moment_terms(array: &TriangularArray) -> Result<MomentTerms> {
    let alpha = array.alpha();
    let c = array.eta_scale();
    let src = array.source();
    let eta_moment = c.powf(2.0 - alpha) * src.radial_moment(2.0 - alpha)?;
    let eta_mean_norm = c * src.radial_moment(1.0)?;
    let n = array.n() as f64;
    let w = n * n.powf(-2.0 / alpha);
    Ok(MomentTerms { eta_moment, eta_mean_norm, first: w * eta_moment, second: w * eta_mean_norm * eta_mean_norm })
}

/// `R_{n,i}` by parts, for one summand, and summed over the row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Remainder {
    pub cutoff: f64,
    /// `n^{−2/α}`-weighted integral over `r ≤ N`, ν-part.
    pub near_nu: f64,
    /// Same, profile part.
    pub near_profile: f64,
    /// `n^{−1/α}`-weighted integral over `r > N`, ν-part.
    pub far_nu: f64,
    pub far_profile: f64,
    pub per_summand: f64,
    /// `Σ_i R_{n,i}` (identical rows).
    pub total: f64,
    /// Quadrature error estimate of `total` (0 for closed forms).
    pub error: f64,
}

impl Remainder {
    fn assemble(n: f64, cutoff: f64, parts: [f64; 4], error: f64) -> Self {
        let per = parts.iter().sum::<f64>();
        Remainder {
            cutoff,
            near_nu: parts[0],
            near_profile: parts[1],
            far_nu: parts[2],
            far_profile: parts[3],
            per_summand: per,
            total: n * per,
            error: n * error,
        }
    }
}

fn check_cutoff(cutoff: f64) -> Result<()> {
    if !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(invalid(format!("cutoff N must be positive and finite, got {cutoff}")));
    }
    Ok(())
}

/// `∫_a^b r^{k−α−1} h(r) dr` for finite `0 ≤ a < b`, `k ∈ {1, 2}`, via
/// `v = r^{k−α}/(k−α)`.
fn power_segment<F: Fn(f64) -> f64>(alpha: f64, k: f64, a: f64, b: f64, h: F) -> quad::Integral {
    let e = k - alpha;
    let to_v = |r: f64| r.powf(e) / e;
    let to_r = |v: f64| (e * v).powf(1.0 / e);
    let (va, vb) = (to_v(a), to_v(b));
    let scale = vb.abs().max(va.abs());
    quad::adaptive(|v| h(to_r(v)), va, vb, 1e-300_f64.max(1e-16 * scale), REL_TOL, MAX_PANELS)
}

/// `∫_R^∞ r^{k−α−1} h(r) dr` via `r = R e^t`.
fn power_tail<F: Fn(f64) -> f64>(alpha: f64, k: f64, big_r: f64, h: F) -> quad::Integral {
    let e = k - alpha;
    let pre = big_r.powf(e);
    quad::adaptive_to_inf(|t| pre * (e * t).exp() * h(big_r * t.exp()), 0.0, 1e-300, REL_TOL, MAX_PANELS)
}

/// Remainder by radial quadrature, valid for every source variant.
pub fn remainder_quadrature(array: &TriangularArray, cutoff: f64) -> Result<Remainder> {
    check_cutoff(cutoff)?;
    let alpha = array.alpha();
    let n = array.n() as f64;
    let c = array.eta_scale();
    let src = array.source();
    let nu_mass: f64 = src.law().lines().iter().map(|l| l.w_plus + l.w_minus).sum();
    let start = c * src.radial_start();
    // α|q(r)| with q as in the module docs
    let abs_q = |r: f64| {
        if r < start {
            alpha
        } else {
            let f = src.density_nu(r / c) / c;
            (r.powf(alpha + 1.0) * f - alpha).abs()
        }
    };
    let near_w = n.powf(-2.0 / alpha);
    let far_w = n.powf(-1.0 / alpha);
    let mut err = 0.0;

    let mut near_nu = 0.0;
    let split = start.min(cutoff);
    // below the support start q ≡ −1 and the mapped integrand is constant
    let i = power_segment(alpha, 2.0, 0.0, split, |_| alpha);
    near_nu += i.value;
    err += near_w * nu_mass * i.error;
    if cutoff > start {
        let i = power_segment(alpha, 2.0, start, cutoff, abs_q);
        near_nu += i.value;
        err += near_w * nu_mass * i.error;
    }
    let mut far_nu = 0.0;
    if cutoff < start {
        let i = power_segment(alpha, 1.0, cutoff, start, |_| alpha);
        far_nu += i.value;
        err += far_w * nu_mass * i.error;
    }
    let tail_from = cutoff.max(start);
    let i = power_tail(alpha, 1.0, tail_from, abs_q);
    far_nu += i.value;
    err += far_w * nu_mass * i.error;

    let (mut near_p, mut far_p) = (0.0, 0.0);
    let weight = src.profile_weight();
    if weight != 0.0 {
        // r^k f_P(r) with f_P(r) = f_ξ,P(r/c)/c, integrated in log r
        let fp = |r: f64| src.density_profile(r / c) / c;
        let p_start = c * src.radial_start();
        if cutoff > p_start {
            let (la, lb) = (p_start.ln(), cutoff.ln());
            let i = quad::adaptive(|t| { let r = t.exp(); r * r * r * fp(r) }, la, lb, 1e-300, REL_TOL, MAX_PANELS);
            near_p = i.value;
            err += near_w * weight * i.error;
        }
        let from = cutoff.max(p_start);
        let i = quad::adaptive_to_inf(|t| { let r = from * t.exp(); r * r * fp(r) }, 0.0, 1e-300, REL_TOL, MAX_PANELS);
        far_p = i.value;
        err += far_w * weight * i.error;
    }
    Ok(Remainder::assemble(
        n,
        cutoff,
        [near_w * nu_mass * near_nu, near_w * weight * near_p, far_w * nu_mass * far_nu, far_w * weight * far_p],
        err,
    ))
}

/// Remainder in closed form (Paretian and modified tail).
pub fn remainder_closed_form(array: &TriangularArray, cutoff: f64) -> Result<Remainder> {
    check_cutoff(cutoff)?;
    let alpha = array.alpha();
    let n = array.n() as f64;
    let src = array.source();
    let nu_mass: f64 = src.law().lines().iter().map(|l| l.w_plus + l.w_minus).sum();
    let near_w = n.powf(-2.0 / alpha);
    let far_w = n.powf(-1.0 / alpha);
    let s = array.eta_scale();
    let (beta, weight) = match src.kind() {
        SourceKind::Paretian => (None, 0.0),
        SourceKind::ModifiedTail { beta, .. } => (Some(beta), src.profile_weight()),
        SourceKind::LogModified { .. } => return Err(invalid("the log-modified remainder has no closed form; use quadrature")),
    };
    // ν-part: η's radial law is exactly α r^{−α−1} on [s, ∞) and 0 below
    let near_nu = alpha * cutoff.min(s).powf(2.0 - alpha) / (2.0 - alpha);
    let far_nu = if cutoff < s { alpha * (cutoff.powf(1.0 - alpha) - s.powf(1.0 - alpha)) / (alpha - 1.0) } else { 0.0 };
    let (mut near_p, mut far_p) = (0.0, 0.0);
    if let (Some(b), true) = (beta, weight != 0.0) {
        // profile density s^β r^{−β−1} on [s, ∞)
        if cutoff > s {
            near_p = if (b - 2.0).abs() < 1e-15 {
                s * s * (cutoff / s).ln()
            } else {
                s.powf(b) * (cutoff.powf(2.0 - b) - s.powf(2.0 - b)) / (2.0 - b)
            };
        }
        far_p = s.powf(b) * cutoff.max(s).powf(1.0 - b) / (b - 1.0);
    }
    Ok(Remainder::assemble(
        n,
        cutoff,
        [near_w * nu_mass * near_nu, near_w * weight * near_p, far_w * nu_mass * far_nu, far_w * weight * far_p],
        0.0,
    ))
}

/// Closed form where available, quadrature otherwise.
pub fn remainder(array: &TriangularArray, cutoff: f64) -> Result<Remainder> {
    match array.source().kind() {
        SourceKind::LogModified { .. } => remainder_quadrature(array, cutoff),
        _ => remainder_closed_form(array, cutoff),
    }
}

/// The split radius used by each example: `n^{1/α}` for the Pareto-type
/// sources and `(n log A_n)^{1/α}` for the log-modified one.
pub fn default_cutoff(array: &TriangularArray) -> f64 {
    let alpha = array.alpha();
    let n = array.n() as f64;
    match array.a_n() {
        Some(a) => (n * a.ln()).powf(1.0 / alpha),
        None => n.powf(1.0 / alpha),
    }
}

/// Rate shape predicted for each example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum PredictedRate {
    /// `n^p`.
    Power { exponent: f64 },
    /// `n^p + n^q`.
    TwoPowers { exponent: f64, second: f64 },
    /// `n^p log n`.
    PowerLog { exponent: f64 },
    /// `(log n)^q`.
    LogPower { exponent: f64 },
}

impl PredictedRate {
    pub fn for_source(array: &TriangularArray) -> Self {
        let alpha = array.alpha();
        let base = (alpha - 2.0) / alpha;
        match array.source().kind() {
            SourceKind::Paretian => PredictedRate::Power { exponent: base },
            SourceKind::ModifiedTail { beta, .. } => {
                if array.source().profile_weight() == 0.0 {
                    PredictedRate::Power { exponent: base }
                } else if (beta - 2.0).abs() < 1e-12 {
                    PredictedRate::PowerLog { exponent: base }
                } else {
                    PredictedRate::TwoPowers { exponent: base, second: (alpha - beta) / alpha }
                }
            }
            SourceKind::LogModified { .. } => PredictedRate::LogPower { exponent: -1.0 + 1.0 / alpha },
        }
    }

    pub fn value(&self, n: f64) -> f64 {
        match *self {
            PredictedRate::Power { exponent } => n.powf(exponent),
            PredictedRate::TwoPowers { exponent, second } => n.powf(exponent) + n.powf(second),
            PredictedRate::PowerLog { exponent } => n.powf(exponent) * n.ln(),
            PredictedRate::LogPower { exponent } => n.ln().powf(exponent),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            PredictedRate::Power { exponent } => format!("n^{exponent:.6}"),
            PredictedRate::TwoPowers { exponent, second } => format!("n^{exponent:.6} + n^{second:.6}"),
            PredictedRate::PowerLog { exponent } => format!("n^{exponent:.6} log n"),
            PredictedRate::LogPower { exponent } => format!("(log n)^{exponent:.6}"),
        }
    }
}

/// The bracketed sum of the bound with the unknown constant set to 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoreticalBound {
    pub n: u64,
    pub moments: MomentTerms,
    pub remainder: Remainder,
    /// `first + second + Σ R_{n,i}`, up to the bound's constant.
    pub value: f64,
    pub error: f64,
    pub predicted: PredictedRate,
    pub predicted_label: String,
    pub note: &'static str,
}

pub fn theoretical_bound(array: &TriangularArray, cutoff: Option<f64>) -> Result<TheoreticalBound> {
    let cutoff = cutoff.unwrap_or_else(|| default_cutoff(array));
    let moments = moment_terms(array)?;
    let rem = remainder(array, cutoff)?;
    let predicted = PredictedRate::for_source(array);
    Ok(TheoreticalBound {
        n: array.n(),
        moments,
        remainder: rem,
        value: moments.first + moments.second + rem.total,
        error: rem.error,
        predicted,
        predicted_label: predicted.label(),
        note: "up to the bound's unspecified constant C(alpha, d)",
    })
}
