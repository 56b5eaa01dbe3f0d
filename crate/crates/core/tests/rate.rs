use rand_distr::{Distribution, StandardNormal};
use stablab::rate::{linear_fit, rate_fit, RateModel, RatePoint};
use stablab::rng::from_seed;

fn grid() -> Vec<f64> {
    (6..=12).map(|k| 2f64.powi(k)).collect()
}

#[test]
fn exact_models_are_recovered() {
    let t: Vec<RatePoint> =
        grid().into_iter().map(|n| RatePoint { n, distance: 2.0 * n.powf(-1.0 / 3.0), stderr: 0.0 }).collect();
    let f = rate_fit(&t, RateModel::Power).unwrap();
    assert!((f.slope().value + 1.0 / 3.0).abs() < 1e-12);
    assert!((f.prefactor - 2.0).abs() < 1e-11);
    assert!(f.residuals.iter().all(|r| r.abs() < 1e-12));

    let t: Vec<RatePoint> = grid()
        .into_iter()
        .map(|n| RatePoint { n, distance: 0.5 * n.powf(-0.25) * n.ln().powf(1.5), stderr: 0.0 })
        .collect();
    let f = rate_fit(&t, RateModel::PowerLog).unwrap();
    assert!((f.parameter("exponent").unwrap().value + 0.25).abs() < 1e-9);
    assert!((f.parameter("log_exponent").unwrap().value - 1.5).abs() < 1e-8);

    let t: Vec<RatePoint> =
        grid().into_iter().map(|n| RatePoint { n, distance: 3.0 * n.ln().powf(-1.0 / 3.0), stderr: 0.0 }).collect();
    let f = rate_fit(&t, RateModel::LogOnly).unwrap();
    assert!((f.slope().value + 1.0 / 3.0).abs() < 1e-12);
    assert!((f.prefactor - 3.0).abs() < 1e-11);
}

#[test]
fn rejects_bad_tables() {
    let mut t: Vec<RatePoint> = grid().into_iter().map(|n| RatePoint { n, distance: 1.0 / n, stderr: 0.0 }).collect();
    t[2].distance = 0.0;
    assert!(rate_fit(&t, RateModel::Power).is_err());
    let t = vec![RatePoint { n: 1.0, distance: 1.0, stderr: 0.0 }; 8];
    assert!(rate_fit(&t, RateModel::Power).is_err());
}

#[test]
fn confidence_intervals_are_calibrated() {
    // log-normal noise with known relative error; the 95% interval should
    // cover the true exponent in most of 20 independent tables
    let sigma = 0.05;
    let mut covered = 0;
    for rep in 0..20 {
        let mut rng = from_seed(100 + rep);
        let t: Vec<RatePoint> = grid()
            .into_iter()
            .flat_map(|n| std::iter::repeat(n).take(3))
            .map(|n| {
                let e: f64 = StandardNormal.sample(&mut rng);
                let d = 1.7 * n.powf(-1.0 / 3.0) * (sigma * e).exp();
                RatePoint { n, distance: d, stderr: sigma * d }
            })
            .collect();
        let f = rate_fit(&t, RateModel::Power).unwrap();
        let (lo, hi) = f.slope().ci95;
        if lo <= -1.0 / 3.0 && -1.0 / 3.0 <= hi {
            covered += 1;
        }
        assert!((f.slope().value + 1.0 / 3.0).abs() < 0.05);
    }
    assert!(covered >= 18, "coverage {covered}/20");
}

#[test]
fn ordinary_line_fit() {
    let x = [1.0, 2.0, 3.0, 4.0];
    let y: Vec<f64> = x.iter().map(|v| 0.5 - 2.0 * v).collect();
    let (a, b, r2) = linear_fit(&x, &y);
    assert!((a - 0.5).abs() < 1e-14 && (b + 2.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
}
