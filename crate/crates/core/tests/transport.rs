use proptest::prelude::*;
use rand::Rng;
use stablab::rng::from_seed;
use stablab::transport::{
    wasserstein1_1d, wasserstein1_exact, wasserstein1_exact_matching, wasserstein1_sliced, EmpiricalMeasure,
};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Minimum over all permutations (Heap's algorithm).
fn brute_force(p: &[Vec<f64>], q: &[Vec<f64>]) -> f64 {
    let n = p.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let cost = |perm: &[usize]| perm.iter().enumerate().map(|(i, &j)| dist(&p[i], &q[j])).sum::<f64>();
    let mut best = cost(&perm);
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(cost(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best / n as f64
}

fn cloud<R: Rng>(n: usize, d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect()).collect()
}

fn measure(points: Vec<Vec<f64>>) -> EmpiricalMeasure {
    EmpiricalMeasure::new(points).unwrap()
}

#[test]
fn identical_clouds_are_at_distance_zero() {
    let mut rng = from_seed(1);
    let p = measure(cloud(50, 3, &mut rng));
    assert_eq!(wasserstein1_exact(&p, &p).unwrap(), 0.0);
    // a permuted copy as well
    let mut pts = p.points().to_vec();
    pts.reverse();
    assert_eq!(wasserstein1_exact(&p, &measure(pts)).unwrap(), 0.0);
}

#[test]
fn matches_brute_force() {
    let mut rng = from_seed(2);
    for k in 0..100 {
        let n = 3 + k % 4;
        let d = 1 + k % 3;
        let p = cloud(n, d, &mut rng);
        let q = cloud(n, d, &mut rng);
        let exact = wasserstein1_exact(&measure(p.clone()), &measure(q.clone())).unwrap();
        let bf = brute_force(&p, &q);
        assert!((exact - bf).abs() <= 1e-12 * bf.max(1.0), "instance {k}: {exact} vs {bf}");
    }
}

#[test]
fn matching_is_a_permutation_with_the_reported_cost() {
    let mut rng = from_seed(3);
    let p = cloud(200, 2, &mut rng);
    let q = cloud(200, 2, &mut rng);
    let m = wasserstein1_exact_matching(&measure(p.clone()), &measure(q.clone())).unwrap();
    let mut seen = m.row_to_col.clone();
    seen.sort_unstable();
    assert_eq!(seen, (0..200).collect::<Vec<_>>());
    let cost: f64 = m.row_to_col.iter().enumerate().map(|(i, &j)| dist(&p[i], &q[j])).sum::<f64>() / 200.0;
    assert!((cost - m.distance).abs() < 1e-12);
}

#[test]
fn one_dimensional_exact_equals_sorted_and_sliced() {
    let mut rng = from_seed(4);
    let p = cloud(300, 1, &mut rng);
    let q = cloud(300, 1, &mut rng);
    let exact = wasserstein1_exact(&measure(p.clone()), &measure(q.clone())).unwrap();
    let mut a: Vec<f64> = p.iter().map(|x| x[0]).collect();
    let mut b: Vec<f64> = q.iter().map(|x| x[0]).collect();
    let sorted = wasserstein1_1d(&mut a, &mut b);
    let sliced = wasserstein1_sliced(&measure(p), &measure(q), 3, &mut rng).unwrap();
    assert!((exact - sorted).abs() < 1e-12);
    assert!((exact - sliced).abs() < 1e-12);
}

#[test]
fn sliced_never_exceeds_exact() {
    let mut rng = from_seed(5);
    for _ in 0..50 {
        let p = measure(cloud(40, 2, &mut rng));
        let q = measure(cloud(40, 2, &mut rng));
        let e = wasserstein1_exact(&p, &q).unwrap();
        let s = wasserstein1_sliced(&p, &q, 32, &mut rng).unwrap();
        assert!(s <= e + 1e-12, "{s} > {e}");
    }
}

#[test]
fn shifted_point_masses() {
    // W1 between a cloud and its translate by v is |v|
    let mut rng = from_seed(6);
    let p = measure(cloud(30, 2, &mut rng));
    let q = p.translated(&[0.3, -0.4]);
    assert!((wasserstein1_exact(&p, &q).unwrap() - 0.5).abs() < 1e-12);
}

fn points(n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, d), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_axioms((p, q, r) in (2usize..8).prop_flat_map(|n| (points(n, 2), points(n, 2), points(n, 2)))) {
        let (p, q, r) = (measure(p), measure(q), measure(r));
        let pq = wasserstein1_exact(&p, &q).unwrap();
        let qp = wasserstein1_exact(&q, &p).unwrap();
        let qr = wasserstein1_exact(&q, &r).unwrap();
        let pr = wasserstein1_exact(&p, &r).unwrap();
        prop_assert!(pq >= 0.0);
        prop_assert!((pq - qp).abs() <= 1e-12 * pq.max(1.0));
        prop_assert!(pr <= pq + qr + 1e-12 * pr.max(1.0));
        prop_assert_eq!(wasserstein1_exact(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn translation_and_scaling((p, q) in (2usize..10).prop_flat_map(|n| (points(n, 3), points(n, 3))),
                               v in prop::collection::vec(-20.0f64..20.0, 3),
                               c in -4.0f64..4.0) {
        let (p, q) = (measure(p), measure(q));
        let base = wasserstein1_exact(&p, &q).unwrap();
        let moved = wasserstein1_exact(&p.translated(&v), &q.translated(&v)).unwrap();
        prop_assert!((base - moved).abs() <= 1e-10 * base.max(1.0));
        let scaled = wasserstein1_exact(&p.scaled(c), &q.scaled(c)).unwrap();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-10 * base.max(1.0));
    }

    #[test]
    fn sliced_is_a_lower_bound((p, q) in (2usize..12).prop_flat_map(|n| (points(n, 2), points(n, 2))), seed in any::<u64>()) {
        let (p, q) = (measure(p), measure(q));
        let e = wasserstein1_exact(&p, &q).unwrap();
        let s = wasserstein1_sliced(&p, &q, 16, &mut from_seed(seed)).unwrap();
        prop_assert!(s <= e + 1e-12);
    }
}
