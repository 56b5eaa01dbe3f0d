use stablab::gclt::{
    default_cutoff, log_modified_an, moment_terms, rate_experiment, remainder, remainder_closed_form, remainder_quadrature,
    theoretical_bound, Estimator, PredictedRate, RateExperimentConfig, SourceLaw, TailProfile, TriangularArray,
};
use stablab::rate::linear_fit;
use stablab::rng::from_seed;
use stablab::sampler::empirical_cf;
use stablab::spectral::cf_probe_set;
use stablab::StableLaw;

fn law(alpha: f64, name: &str) -> StableLaw {
    StableLaw::preset(alpha, name, 2).unwrap()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn batch_mean_se(xs: &[f64], batches: usize) -> (f64, f64) {
    let size = xs.len() / batches;
    let means: Vec<f64> = xs.chunks(size).take(batches).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let v = means.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (m, (v / batches as f64).sqrt())
}

#[test]
fn paretian_radii() {
    let src = SourceLaw::paretian(law(1.5, "uniform"));
    let mut rng = from_seed(61);
    let n = 400_000;
    let radii: Vec<f64> = (0..n).map(|_| norm(&src.sample(&mut rng))).collect();
    assert!(radii.iter().all(|&r| r >= 1.0));
    for x in [2.0f64, 4.0, 8.0] {
        let p = x.powf(-1.5);
        let emp = radii.iter().filter(|&&r| r > x).count() as f64 / n as f64;
        assert!((emp - p).abs() <= 3.0 * (p * (1.0 - p) / n as f64).sqrt(), "x={x}: {emp} vs {p}");
    }
    let (m, se) = batch_mean_se(&radii, 100);
    assert!((m - 3.0).abs() <= 3.0 * se, "{m} ± {se}");
}

#[test]
fn paretian_moments() {
    let src = SourceLaw::paretian(law(1.5, "uniform"));
    assert_eq!(src.radial_moment(0.5).unwrap(), 1.5);
    assert_eq!(src.radial_moment(1.0).unwrap(), 3.0);
    for p in [0.5, 1.0] {
        assert!((src.radial_moment_quadrature(p) - src.radial_moment(p).unwrap()).abs() < 1e-9);
    }
    assert!(src.radial_moment(1.5).is_err());

    let arr = TriangularArray::new(src, 1000).unwrap();
    let m = moment_terms(&arr).unwrap();
    assert_eq!((m.eta_moment, m.eta_mean_norm), (1.5, 3.0));
    let w = 1000f64.powf(1.0 - 2.0 / 1.5);
    assert!((m.first - 1.5 * w).abs() < 1e-14 && (m.second - 9.0 * w).abs() < 1e-13);

    // E|τ|^{2−α} = α/(2(α−1)) decreases towards 2
    let vals: Vec<f64> = [1.2, 1.5, 1.8]
        .iter()
        .map(|&a| SourceLaw::paretian(law(a, "uniform")).radial_moment_quadrature(2.0 - a))
        .collect();
    assert!(vals[0] > vals[1] && vals[1] > vals[2], "{vals:?}");
    assert!((vals[1] - 1.5).abs() < 1e-9);
}

#[test]
fn single_summand_is_the_scaled_source() {
    let law = law(1.5, "uniform");
    let arr = TriangularArray::new(SourceLaw::paretian(law.clone()), 1).unwrap();
    let s = arr.sample_sn(&mut from_seed(5));
    let tau = SourceLaw::paretian(law.clone()).sample(&mut from_seed(5));
    let c = (1.5 / law.d_alpha()).powf(-1.0 / 1.5);
    for i in 0..2 {
        assert!((s[i] - c * tau[i]).abs() <= 1e-15 * tau[i].abs().max(1.0));
    }
}

#[test]
fn sums_are_centred() {
    // asymmetric ν needs the nonzero centering
    for name in ["uniform", "tilted"] {
        let arr = TriangularArray::new(SourceLaw::paretian(law(1.5, name)), 16).unwrap();
        let draws = arr.sample_cloud(10_000, &mut from_seed(62));
        for k in 0..2 {
            let xs: Vec<f64> = draws.iter().map(|x| x[k]).collect();
            let (m, se) = batch_mean_se(&xs, 100);
            assert!(m.abs() <= 5.0 * se, "{name} component {k}: {m} ± {se}");
        }
    }
}

#[test]
fn sums_approach_the_limit_law() {
    let law = law(1.5, "uniform");
    let arr = TriangularArray::new(SourceLaw::paretian(law.clone()), 1 << 12).unwrap();
    let m = 4000;
    let draws = arr.sample_cloud(m, &mut from_seed(63));
    // |φ_P(z) − φ_Q(z)| ≤ |z|·W1(P,Q); the gap is the bound with unit constant
    let gap = theoretical_bound(&arr, None).unwrap().value;
    for z in cf_probe_set(2).iter().take(10) {
        let dev = (empirical_cf(&draws, z) - (-law.psi_value(z)).exp()).norm();
        assert!(dev <= 6.0 / (m as f64).sqrt() + norm(z) * gap, "{z:?}: {dev}");
    }
}

#[test]
fn eta_zeta_bookkeeping() {
    let law = law(1.5, "mixture");
    let sources = [
        SourceLaw::paretian(law.clone()),
        SourceLaw::modified_tail(law.clone(), 0.75, 2.0, TailProfile::CosSquared).unwrap(),
        SourceLaw::log_modified(law, 1.0).unwrap(),
    ];
    for src in sources {
        for n in [1u64, 10, 1000, 1 << 20] {
            let arr = TriangularArray::new(src.clone(), n).unwrap();
            let eta = vec![3.7, -1.25];
            let back = arr.zeta_to_eta(&arr.eta_to_zeta(&eta));
            for i in 0..2 {
                assert!((back[i] - eta[i]).abs() <= 4.0 * f64::EPSILON * eta[i].abs());
            }
        }
    }
}

#[test]
fn paretian_remainder_closed_form() {
    for alpha in [1.2, 1.5, 1.8] {
        let src = SourceLaw::paretian(law(alpha, "uniform"));
        for n in [10u64, 1000] {
            let arr = TriangularArray::new(src.clone(), n).unwrap();
            let r = remainder_quadrature(&arr, default_cutoff(&arr)).unwrap();
            let want = alpha / (2.0 - alpha) * (n as f64).powf(-2.0 / alpha);
            assert!((r.per_summand - want).abs() <= 1e-12 * want, "alpha {alpha} n {n}: {} vs {want}", r.per_summand);
        }
    }
    let arr = TriangularArray::new(SourceLaw::paretian(law(1.5, "uniform")), 100).unwrap();
    assert!((remainder(&arr, 10.0).unwrap().per_summand - 6.463e-3).abs() < 5e-7);
}

#[test]
fn modified_tail_profile_term_decay() {
    // the profile part beyond the cutoff is O(n^{−β/α}) per summand
    let src = SourceLaw::modified_tail(law(1.5, "uniform"), 0.75, 3.0, TailProfile::CosSquared).unwrap();
    let (mut x, mut y) = (vec![], vec![]);
    for n in [100u64, 1000, 10_000] {
        let arr = TriangularArray::new(src.clone(), n).unwrap();
        let r = remainder_quadrature(&arr, default_cutoff(&arr)).unwrap();
        x.push((n as f64).ln());
        y.push(r.far_profile.ln());
    }
    let (_, slope, _) = linear_fit(&x, &y);
    assert!((slope + 2.0).abs() < 0.05, "{slope}");
}

#[test]
fn bound_shapes() {
    for alpha in [1.2, 1.5, 1.8] {
        let src = SourceLaw::paretian(law(alpha, "uniform"));
        let b1 = theoretical_bound(&TriangularArray::new(src.clone(), 500).unwrap(), None).unwrap();
        let b4 = theoretical_bound(&TriangularArray::new(src, 2000).unwrap(), None).unwrap();
        let want = 4f64.powf((alpha - 2.0) / alpha);
        assert!((b4.value / b1.value - want).abs() < 1e-10);
        assert_eq!(b1.predicted, PredictedRate::Power { exponent: (alpha - 2.0) / alpha });
    }

    // β = 2: bound·n^{(2−α)/α} is linear in log n
    let src = SourceLaw::modified_tail(law(1.5, "uniform"), 0.75, 2.0, TailProfile::CosSquared).unwrap();
    let (mut x, mut y) = (vec![], vec![]);
    for k in 2..=8 {
        let n = 10u64.pow(k);
        let b = theoretical_bound(&TriangularArray::new(src.clone(), n).unwrap(), None).unwrap();
        assert!(matches!(b.predicted, PredictedRate::PowerLog { .. }));
        x.push((n as f64).ln());
        y.push(b.value * (n as f64).powf(1.0 / 3.0));
    }
    let (_, slope, r2) = linear_fit(&x, &y);
    assert!(slope > 0.0 && r2 > 0.999, "{slope} {r2}");

    let src = SourceLaw::modified_tail(law(1.5, "uniform"), 0.75, 1.7, TailProfile::CosSquared).unwrap();
    let b = theoretical_bound(&TriangularArray::new(src, 100).unwrap(), None).unwrap();
    assert!(matches!(b.predicted, PredictedRate::TwoPowers { .. }));
}

#[test]
fn log_modified_normalization() {
    let src = SourceLaw::log_modified(law(1.5, "uniform"), 1.0).unwrap();
    for n in [1e3, 1e6, 1e9] {
        let a = log_modified_an(1.5, 1.0, src.k0(), n).unwrap();
        let lhs = src.k0() * a.ln() / a.powf(1.5);
        assert!((lhs * n - 1.0).abs() < 1e-12, "{n}: {}", lhs * n);
    }
    let arr = TriangularArray::new(src, 1000).unwrap();
    assert!(remainder_closed_form(&arr, 1.0).is_err());
    assert!(matches!(PredictedRate::for_source(&arr), PredictedRate::LogPower { .. }));
}

fn small_config() -> RateExperimentConfig {
    RateExperimentConfig { n_grid: vec![16, 32, 64, 128], replicas: 4, threads: 1, ..RateExperimentConfig::default() }
}

#[test]
fn scaling_multiplies_distances() {
    let src = SourceLaw::paretian(law(1.5, "uniform"));
    let base = rate_experiment(&src, &small_config()).unwrap();
    let s = 2f64.powf(-1.0 / 1.5);
    let scaled = rate_experiment(&src, &RateExperimentConfig { scale: s, ..small_config() }).unwrap();
    for (a, b) in base.rows.iter().zip(&scaled.rows) {
        assert!((b.distance - s * a.distance).abs() <= 1e-12 * a.distance, "{} vs {}", b.distance, a.distance);
    }
}

#[test]
fn null_model_has_no_trend() {
    let src = SourceLaw::paretian(law(1.5, "uniform"));
    let cfg = RateExperimentConfig { null_model: true, replicas: 8, ..small_config() };
    let e = rate_experiment(&src, &cfg).unwrap();
    let fit = e.fit.unwrap();
    // both clouds come from one law, so the distance is pure estimator
    // noise shrinking like m^{−1/2}; the S_n rate is not seen
    let slope = fit.slope();
    assert!(slope.value < 0.0 && slope.value > -0.75, "{slope:?}");
}

#[test]
fn sliced_estimator_rows_carry_stderr() {
    let src = SourceLaw::paretian(law(1.5, "uniform"));
    let cfg = RateExperimentConfig { estimator: Estimator::Sliced { projections: 16 }, ..small_config() };
    let e = rate_experiment(&src, &cfg).unwrap();
    assert!(e.rows.iter().all(|r| r.stderr > 0.0 && r.estimator == "sliced"));
    let exact = rate_experiment(&src, &small_config()).unwrap();
    for (s, x) in e.rows.iter().zip(&exact.rows) {
        assert!(s.distance <= x.distance + 1e-12);
    }
}
