#![no_main]

use capsule_lab::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let Ok(config) = ExperimentConfig::parse(text) else {
        return;
    };
    let emitted = config.emit();
    let back = ExperimentConfig::parse(&emitted).expect("emitted config must parse");
    assert_eq!(back, config);
    assert_eq!(back.emit(), emitted);
});
