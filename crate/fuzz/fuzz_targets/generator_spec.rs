#![no_main]

use capsule_lab::values::GeneratorSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let Ok(spec) = text.parse::<GeneratorSpec>() else {
        return;
    };
    let shown = spec.to_string();
    let back: GeneratorSpec = shown.parse().expect("displayed generator must parse");
    assert_eq!(back, spec);
    if spec.dim() <= 16 {
        // Non-Hermitian or traced matrices are rejected, never panic.
        let _ = spec.build();
    }
});
