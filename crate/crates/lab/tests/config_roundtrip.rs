use capsule_lab::config::{ExperimentConfig, ExperimentKind, MomentSuite, ScramblerChoice};
use capsule_lab::values::{GeneratorSpec, InitialState, SiteSpectra};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL
}

fn generator(d: usize) -> BoxedStrategy<GeneratorSpec> {
    let clock = Just(GeneratorSpec::Clock(d));
    let spectrum = prop::collection::vec(-5.0f64..5.0, d - 1).prop_map(|mut w| {
        let s: f64 = w.iter().sum();
        w.push(-s);
        GeneratorSpec::Spectrum(w)
    });
    if d == 2 {
        prop_oneof![clock, spectrum, Just(GeneratorSpec::PauliZ), Just(GeneratorSpec::PauliX), Just(GeneratorSpec::PauliY)].boxed()
    } else {
        prop_oneof![clock, spectrum].boxed()
    }
}

prop_compose! {
    fn config()(kind in 0usize..ExperimentKind::ALL.len(), d in 2usize..5, n_params in 1usize..4)
        (kind in Just(ExperimentKind::ALL[kind]),
         d in Just(d),
         generators in prop::collection::vec(generator(d), n_params),
         ports in prop::collection::vec(1usize..9, n_params),
         theta in prop::collection::vec(finite(), n_params),
         theta_prime in prop::collection::vec(finite(), n_params),
         master_seed in any::<u64>(),
         n_values in prop::collection::vec(1usize..12, 1..5),
         dims in prop::collection::vec(1usize..9, 1..4),
         spectra in prop::collection::vec(prop::collection::vec(finite(), d), 1..3),
         e_tot in finite(),
         delta_e in 0.0f64..10.0,
         samples in 0usize..1_000_000,
         seeds in 0usize..1000,
         m in 0usize..6,
         suite in 0usize..3,
         scrambler in 0usize..3,
         grid in prop::collection::vec(finite(), 1..5),
         fd_steps in prop::collection::vec(1e-9f64..1e-1, 3),
         sigma in 0.1f64..10.0,
         anisotropy in prop::num::f64::POSITIVE.prop_filter("finite", |x| x.is_finite()),
         kernel_width in 1e-3f64..50.0,
         cond in (1.0f64..1e6, 1.0f64..1e6),
         initial in prop::collection::vec(0usize..2, 0..6))
    -> ExperimentConfig {
        let mut c = ExperimentConfig::defaults(kind);
        c.master_seed = master_seed;
        c.d = d;
        c.n_params = generators.len();
        c.generators = generators;
        c.ports = ports;
        c.theta = theta;
        c.theta_prime = theta_prime;
        c.n_values = n_values;
        c.dims = dims;
        c.site_spectra = if spectra.len() == 1 { SiteSpectra::Uniform(spectra[0].clone()) } else { SiteSpectra::PerSite(spectra) };
        c.e_tot = e_tot;
        c.delta_e = delta_e;
        c.samples = samples;
        c.seeds = seeds;
        c.m = m;
        c.moment_suite = [MomentSuite::Second, MomentSuite::Fourth, MomentSuite::All][suite];
        c.scrambler = [ScramblerChoice::Identity, ScramblerChoice::Haar, ScramblerChoice::Shell][scrambler];
        c.grid = grid;
        c.fd_steps = fd_steps;
        c.thresholds.sigma = sigma;
        c.thresholds.anisotropy = anisotropy;
        c.kernel_width = kernel_width;
        c.tolerances.cond_warn = cond.0.min(cond.1);
        c.tolerances.cond_fail = cond.0.max(cond.1);
        c.initial = match initial.len() {
            0 => InitialState::Zeros,
            1 => InitialState::LastExcited,
            _ => InitialState::Digits(initial),
        };
        c
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn emitted_configs_parse_back_identically(c in config()) {
        let text = c.emit();
        let back = ExperimentConfig::parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.hash(), c.hash());
        prop_assert_eq!(back.emit(), text);
    }

    #[test]
    fn parse_never_panics(text in "(\\[[a-z]{0,10}\\]\n|[a-z_]{1,12} = [-0-9a-z.,;() ]{0,20}\n|#[^\n]{0,10}\n){0,12}") {
        let _ = ExperimentConfig::parse(&text);
    }
}
