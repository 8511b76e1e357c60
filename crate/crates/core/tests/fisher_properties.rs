use capsule_core::encoding::{qic_reference, Encoder, EncoderSpec, Generator, ScramblerKind};
use capsule_core::fisher::{derivative_states, qfi_metric, qfi_metric_direct, reparameterize_check, Convention, RMatrix, TangentFrame};
use capsule_core::haar::haar_sample;
use capsule_core::linalg::CVector;
use capsule_core::rng::RngStream;
use capsule_core::state::{PureState, QuditSpace};
use num_complex::Complex64;
use proptest::prelude::*;

fn random_encoder(seed: u64, n_qudits: usize, n: usize) -> Encoder {
    let mut s = RngStream::new(seed, 100);
    let gens: Vec<Generator> = (0..n)
        .map(|_| Generator::pauli_z_like().conjugated(haar_sample(2, &mut s).unwrap().matrix()).unwrap())
        .collect();
    let ports = (0..n).map(|_| s.below(n_qudits) + 1).collect();
    Encoder::new(EncoderSpec::standard(n_qudits, gens, ports, ScramblerKind::Haar, seed, 3).unwrap()).unwrap()
}

fn random_orthogonal(n: usize, s: &mut RngStream) -> RMatrix {
    RMatrix::from_fn(n, n, |_, _| s.gaussian()).qr().q()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn two_routes_agree(seed in any::<u64>(), n in 1usize..4, t in prop::collection::vec(-3.0f64..3.0, 3)) {
        let enc = random_encoder(seed, 5, n);
        let frame = derivative_states(&enc, &t[..n]).unwrap();
        let a = qfi_metric(&frame);
        let b = qfi_metric_direct(&frame);
        prop_assert!(a.max_diff(&b) <= 1e-10, "{}", a.max_diff(&b));
        prop_assert!(a.min_eigenvalue() >= -1e-8);
        prop_assert!(a.asymmetry() == 0.0);
    }

    #[test]
    fn global_phase_leaves_metric_unchanged(seed in any::<u64>(), phi in 0.0f64..6.3) {
        let enc = random_encoder(seed, 5, 2);
        let frame = derivative_states(&enc, &[0.3, -0.2]).unwrap();
        let g = qfi_metric(&frame);
        prop_assert!(g.max_diff(&qfi_metric(&frame.with_global_phase(phi))) <= 1e-10);
    }

    #[test]
    fn chain_rule_holds_for_orthogonal_maps(seed in any::<u64>(), n in 1usize..4) {
        let enc = random_encoder(seed, 5, n);
        let r = random_orthogonal(n, &mut RngStream::new(seed, 7));
        let theta: Vec<f64> = (0..n).map(|j| 0.4 * j as f64).collect();
        let check = reparameterize_check(&enc, &theta, &r).unwrap();
        prop_assert!(check.residual <= 1e-8, "{}", check.residual);
    }

    #[test]
    fn central_differences_match_derivatives(seed in any::<u64>(), t in prop::collection::vec(-3.0f64..3.0, 2)) {
        let enc = random_encoder(seed, 5, 2);
        let (_, derivs) = enc.tangent(&t).unwrap();
        let err_at = |h: f64| -> f64 {
            (0..2)
                .map(|j| {
                    let mut p = t.clone();
                    let mut m = t.clone();
                    p[j] += h;
                    m[j] -= h;
                    let fd = (enc.encode(&p).unwrap().into_amplitudes() - enc.encode(&m).unwrap().into_amplitudes()) / Complex64::new(2.0 * h, 0.0);
                    (fd - &derivs[j]).norm() / derivs[j].norm()
                })
                .fold(0.0, f64::max)
        };
        prop_assert!(err_at(1e-5) <= 1e-6);
        let order = (err_at(1e-3) / err_at(1e-4)).log10();
        prop_assert!((order - 2.0).abs() <= 0.5, "order {}", order);
    }
}

/// ⊗_j |φ(θ_j)⟩ with ∂_j = iσ_j on qudit j.
fn capsule_product_frame(gens: &[Generator], theta: &[f64]) -> TangentFrame {
    let d = gens[0].d();
    let n = gens.len();
    let space = QuditSpace::new(d, n).unwrap();
    let factors: Vec<CVector> = gens.iter().zip(theta).map(|(g, &t)| qic_reference(g, t).into_amplitudes()).collect();
    let product = |fs: &[CVector]| CVector::from_fn(space.dim(), |k, _| (0..n).map(|j| fs[j][space.digits_of(k)[j]]).product());
    let base = PureState::from_amplitudes(space, product(&factors)).unwrap();
    let derivs = (0..n)
        .map(|j| {
            let mut fs = factors.clone();
            fs[j] = gens[j].derivative_matrix() * &fs[j];
            product(&fs)
        })
        .collect();
    TangentFrame::new(base, derivs, theta.to_vec()).unwrap()
}

#[test]
fn ideal_capsules_give_uniform_variances() {
    let gens = vec![Generator::clock(3).unwrap(), Generator::from_spectrum(&[2.0, -0.5, -1.5]).unwrap()];
    let g = qfi_metric(&capsule_product_frame(&gens, &[0.3, 1.7]));
    // Var_u(1, 0, −1) = 2/3; Var_u(2, −0.5, −1.5) = (4 + 0.25 + 2.25)/3.
    let expected = [2.0 / 3.0, 6.5 / 3.0];
    for j in 0..2 {
        assert!((g.g[(j, j)] - expected[j]).abs() < 1e-12, "g{j}{j} = {}", g.g[(j, j)]);
        assert!((gens[j].uniform_variance() - expected[j]).abs() < 1e-12);
    }
    assert!(g.g[(0, 1)].abs() < 1e-12);
    assert!((g.in_convention(Convention::Standard)[(0, 0)] - 4.0 * expected[0]).abs() < 1e-12);
}

#[test]
fn pauli_z_capsule_has_unit_metric() {
    let g = qfi_metric(&capsule_product_frame(&[Generator::pauli_z_like()], &[0.9]));
    assert!((g.g[(0, 0)] - 1.0).abs() < 1e-14);
}
