use capsule_core::haar::{
    fourth_moment_suite, haar_sample, haar_sample_subspace, moment_mc_many, second_moment_suite, MomentPattern, SubspaceScrambler,
};
use capsule_core::linalg::{self, CMatrix, CVector};
use capsule_core::rng::{stream_index, RngStream};
use num_complex::Complex64;
use proptest::prelude::*;

/// Two-sample Kolmogorov–Smirnov statistic.
fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn samples_are_unitary(dim in 1usize..40, seed in any::<u64>(), index in any::<u64>()) {
        let u = haar_sample(dim, &mut RngStream::new(seed, index)).unwrap();
        prop_assert!(u.deviation() <= 1e-10);
    }

    #[test]
    fn subspace_scrambler_commutes_with_projector(dim in 2usize..12, k_pick in 1usize..12, seed in any::<u64>()) {
        let k = k_pick.min(dim);
        let mut s = RngStream::new(seed, 0);
        let basis = haar_sample(dim, &mut s).unwrap().into_matrix().columns(0, k).into_owned();
        let scrambler = SubspaceScrambler::sample(basis.clone(), &mut s).unwrap();
        let projector = &basis * basis.adjoint();
        let v = CVector::from_fn(dim, |_, _| s.complex_gaussian());
        let lhs = scrambler.apply(&(&projector * &v));
        let rhs = &projector * scrambler.apply(&v);
        prop_assert!((lhs - rhs).norm() <= 1e-10);
        let dense = haar_sample_subspace(&basis, &mut RngStream::new(seed, 9)).unwrap();
        let comm = dense.matrix() * &projector - &projector * dense.matrix();
        prop_assert!(linalg::max_abs(&comm) <= 1e-10);
    }
}

#[test]
fn left_invariance_by_kolmogorov_smirnov() {
    let dim = 4;
    let n = 10_000;
    let v = haar_sample(dim, &mut RngStream::new(99, 0)).unwrap().into_matrix();
    let plain: Vec<f64> = (0..n)
        .map(|t| haar_sample(dim, &mut RngStream::new(1, stream_index(&[1, t]))).unwrap().matrix()[(0, 0)].norm_sqr())
        .collect();
    let rotated: Vec<f64> = (0..n)
        .map(|t| {
            let u = haar_sample(dim, &mut RngStream::new(1, stream_index(&[2, t]))).unwrap().into_matrix();
            (&v * u)[(0, 0)].norm_sqr()
        })
        .collect();
    // 1% critical value: 1.628 · √((n+m)/(nm)).
    let critical = 1.628 * (2.0 / n as f64).sqrt();
    let stat = ks_statistic(&plain, &rotated);
    assert!(stat < critical, "KS statistic {stat} >= {critical}");
}

#[test]
fn sampled_moments_match_exact_values() {
    let mut patterns = second_moment_suite();
    patterns.extend(fourth_moment_suite());
    for dim in [2, 3] {
        let est = moment_mc_many(dim, &patterns, 20_000, 5, |t| stream_index(&[dim as u64, t as u64])).unwrap();
        for (p, e) in patterns.iter().zip(&est) {
            let exact = p.exact(dim).unwrap();
            assert!(e.z_score(exact) <= 5.0, "D={dim} {p}: mc {} exact {exact} se {}", e.value, e.std_error);
        }
    }
}

#[test]
fn exact_fourth_moment_of_a_qubit_entry() {
    let p = MomentPattern::Fourth([(1, 1), (1, 1), (1, 1), (1, 1)]);
    assert!((p.exact(2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    // E|U11|^4 = 2/(D(D+1)) in general.
    for dim in 2..8 {
        let expected = 2.0 / (dim * (dim + 1)) as f64;
        assert!((p.exact(dim).unwrap() - expected).abs() < 1e-15, "D={dim}");
    }
}

#[test]
fn restricted_sampler_passes_second_moment_in_subspace_dimension() {
    let dim = 8;
    let k = 3;
    let basis = CMatrix::from_fn(dim, k, |i, j| if i == 2 * j + 1 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
    let n = 20_000;
    let vals: Vec<Complex64> = (0..n)
        .map(|t| {
            let s = SubspaceScrambler::sample(basis.clone(), &mut RngStream::new(3, t as u64)).unwrap();
            Complex64::new(s.inner()[(0, 0)].norm_sqr(), 0.0)
        })
        .collect();
    let est = capsule_core::haar::MomentEstimate::from_samples(&vals);
    assert!(est.z_score(1.0 / k as f64) <= 5.0, "{} vs {}", est.value, 1.0 / k as f64);
}
