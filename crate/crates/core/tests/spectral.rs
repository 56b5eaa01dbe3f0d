use approx::assert_relative_eq;
use stablab::quad::adaptive;
use stablab::rng::from_seed;
use stablab::spectral::{compute_d_alpha, AtomPair, CantorSpec, SpectralMeasure, SpectralSpec, StableLaw};
use std::f64::consts::PI;

/// `∫_0^∞ (1 − cos y) y^{−1−α} dy` without the Gamma function: a power
/// series on [0,1], Gauss–Kronrod panels over half-periods on [1, Y] and a
/// two-term asymptotic tail.
fn d_alpha_integral(alpha: f64) -> f64 {
    let mut head = 0.0;
    let mut fact = 1.0;
    for k in 1..40 {
        fact *= ((2 * k - 1) * (2 * k)) as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        head += sign / (fact * (2.0 * k as f64 - alpha));
    }
    let p = 1.0 + alpha;
    let y_max = 1.0 + 4000.0 * PI;
    let mut mid = 0.0;
    let mut a = 1.0;
    while a < y_max - 1e-9 {
        let b = (a + PI / 2.0).min(y_max);
        mid += adaptive(|y| (1.0 - y.cos()) * y.powf(-p), a, b, 1e-18, 1e-15, 50).value;
        a = b;
    }
    // ∫_Y^∞ y^{−p} − ∫_Y^∞ cos(y) y^{−p}
    let tail = y_max.powf(1.0 - p) / (p - 1.0) - (-y_max.sin() * y_max.powf(-p) + p * y_max.cos() * y_max.powf(-p - 1.0));
    head + mid + tail
}

#[test]
fn d_alpha_matches_independent_quadrature() {
    for alpha in [1.1, 1.2, 1.5, 1.8, 1.9] {
        let d = compute_d_alpha(alpha).unwrap();
        let q = d_alpha_integral(alpha);
        assert_relative_eq!(d * q, 1.0, max_relative = 1e-10);
    }
    assert!((compute_d_alpha(1.5).unwrap() - 0.598413).abs() < 5e-7);
}

fn two_atom(alpha: f64, sp: f64) -> StableLaw {
    let spec = SpectralSpec {
        d: 2,
        weight_ac: 0.0,
        weight_atomic: 1.0,
        weight_fractal: 0.0,
        ac_density: None,
        atoms: vec![AtomPair { axis: 0, sigma_plus: sp, sigma_minus: 1.0 - sp }],
        fractal: None,
    };
    StableLaw::new(alpha, SpectralMeasure::new(spec).unwrap()).unwrap()
}

#[test]
fn psi_examples() {
    let law = StableLaw::preset(1.5, "mixture", 2).unwrap();
    assert_eq!(law.psi(&[0.0, 0.0]).unwrap().value.norm(), 0.0);

    for alpha in [1.2, 1.5, 1.8] {
        let law = two_atom(alpha, 0.5);
        for z in [[0.3, -2.0], [-1.7, 0.4]] {
            let p = law.psi(&z).unwrap().value;
            assert_relative_eq!(p.re, z[0].abs().powf(alpha), max_relative = 1e-14);
            assert!(p.im.abs() < 1e-15);
        }
    }

    // uniform ν: ψ(e₁) = (1/2π)∫|cos φ|^{1.5} dφ, by 1-d adaptive quadrature
    let law = StableLaw::preset(1.5, "uniform", 2).unwrap();
    let c = adaptive(|phi| phi.cos().abs().powf(1.5), 0.0, PI / 2.0, 1e-15, 1e-14, 200).value * 4.0 / (2.0 * PI);
    let e = law.psi(&[1.0, 0.0]).unwrap();
    assert!((e.value.re - c).abs() <= e.budget.max(1e-9), "{} vs {c}", e.value.re);
    assert!(e.value.im.abs() < 1e-12);
}

#[test]
fn hermitian_symmetry_and_homogeneity() {
    use rand::Rng;
    let mut rng = from_seed(5);
    for name in SpectralMeasure::PRESETS {
        let law = StableLaw::preset(1.3, name, 2).unwrap();
        for _ in 0..100 {
            let z = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let mz = [-z[0], -z[1]];
            let (a, b) = (law.psi_value(&z), law.psi_value(&mz));
            assert!((a - b.conj()).norm() <= 1e-13 * a.norm().max(1.0));
            let c: f64 = rng.random_range(0.1..10.0);
            let cz = [c * z[0], c * z[1]];
            let s = law.psi_value(&cz);
            assert!((s - a * c.powf(1.3)).norm() <= 1e-10 * s.norm().max(1e-300));
            if law.nu().is_symmetric() {
                assert!(a.im.abs() <= 1e-12 * a.norm().max(1.0), "{name}");
            }
            assert!(a.re > 0.0, "{name}");
        }
    }
}

#[test]
fn atom_directions_follow_weights() {
    let law = two_atom(1.5, 0.7);
    let mut rng = from_seed(1);
    let n = 100_000;
    let mut plus = 0usize;
    for _ in 0..n {
        let t = law.nu().sample_direction(&mut rng);
        assert!(t[1] == 0.0 && t[0].abs() == 1.0);
        if t[0] > 0.0 {
            plus += 1;
        }
    }
    let p = plus as f64 / n as f64;
    assert!((p - 0.7).abs() < 4.0 * (0.21f64 / n as f64).sqrt(), "{p}");
}

#[test]
fn uniform_directions_pass_ks() {
    let nu = SpectralMeasure::preset("uniform", 2).unwrap();
    let mut rng = from_seed(2);
    let n = 100_000;
    let mut ang: Vec<f64> = (0..n)
        .map(|_| {
            let t = nu.sample_direction(&mut rng);
            t[1].atan2(t[0]).rem_euclid(2.0 * PI) / (2.0 * PI)
        })
        .collect();
    ang.sort_by(f64::total_cmp);
    let ks = ang
        .iter()
        .enumerate()
        .map(|(i, u)| (u - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - u).abs()))
        .fold(0.0, f64::max);
    // Kolmogorov critical value at level 0.01
    assert!(ks < 1.628 / (n as f64).sqrt(), "{ks}");
}

#[test]
fn cantor_directions_lie_in_arcs() {
    let spec = SpectralSpec {
        d: 2,
        weight_ac: 0.0,
        weight_atomic: 0.0,
        weight_fractal: 1.0,
        ac_density: None,
        atoms: vec![],
        fractal: Some(CantorSpec { depth: 3, symmetrized: true }),
    };
    let nu = SpectralMeasure::new(spec).unwrap();
    let arcs = nu.fractal().unwrap().arcs();
    assert_eq!(arcs.len(), 16);
    let mut rng = from_seed(3);
    for _ in 0..10_000 {
        let t = nu.sample_direction(&mut rng);
        let phi = t[1].atan2(t[0]);
        let inside = arcs.iter().any(|&(a, b)| {
            let x = (phi - a).rem_euclid(2.0 * PI);
            x <= (b - a) + 1e-12
        });
        assert!(inside, "{phi}");
    }
}

#[test]
fn directional_exponents() {
    let law = StableLaw::preset(1.5, "uniform", 2).unwrap();
    let vals: Vec<f64> =
        (0..1000).map(|k| 2.0 * PI * k as f64 / 1000.0).map(|p| law.directional_exponent(&[p.cos(), p.sin()])).collect();
    let spread = vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread <= law.quadrature().unit_budget.max(1e-12), "{spread}");
    let m = law.min_directional_exponent();
    let c = adaptive(|phi| phi.cos().abs().powf(1.5), 0.0, PI / 2.0, 1e-15, 1e-14, 200).value * 4.0 / (2.0 * PI);
    assert!((m.value - c).abs() < 1e-9 + m.budget);
    assert!(!m.degenerate);

    let law = two_atom(1.5, 0.5);
    assert_eq!(law.directional_exponent(&[0.0, 1.0]), 0.0);
    let m = law.min_directional_exponent();
    assert!(m.value < 1e-6 && m.degenerate);

    for (name, d) in [("uniform", 2), ("uniform", 3), ("atomic", 2), ("atomic", 3), ("cantor", 2)] {
        let law = StableLaw::preset(1.5, name, d).unwrap();
        let m = law.min_directional_exponent();
        assert!(m.value > 1e-3 && !m.degenerate, "{name} d={d}: {}", m.value);
    }
    // the Cantor part lives on a great circle, so e₃ sees no jumps
    let law = StableLaw::preset(1.5, "cantor", 3).unwrap();
    assert!(law.directional_exponent(&[0.0, 0.0, 1.0]) < 1e-12);
    assert!(law.min_directional_exponent().degenerate);
}

#[test]
fn ac_reduction_reports_convergence() {
    for alpha in [1.2, 1.5, 1.8] {
        let law = StableLaw::preset(alpha, "uniform", 2).unwrap();
        let q = law.quadrature();
        assert!(q.converged && q.m >= 256 && q.m <= 4096, "{q:?}");
    }
}
