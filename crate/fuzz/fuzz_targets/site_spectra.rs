#![no_main]

use arbitrary::{Result, Unstructured};
use capsule_lab::values::SiteSpectra;
use libfuzzer_sys::fuzz_target;

fn rows(u: &mut Unstructured) -> Result<Vec<Vec<f64>>> {
    let n = u.int_in_range(1..=6)?;
    let d = u.int_in_range(1..=5)?;
    (0..n)
        .map(|_| (0..d).map(|_| u.arbitrary::<f64>().map(|x| if x.is_finite() { x } else { 0.0 })).collect())
        .collect()
}

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spectra) = text.parse::<SiteSpectra>() {
            assert_eq!(spectra.to_string().parse::<SiteSpectra>().unwrap(), spectra);
            let _ = spectra.expand(2, 4);
        }
    }
    let mut u = Unstructured::new(data);
    let Ok(rows) = rows(&mut u) else {
        return;
    };
    let d = rows[0].len();
    let n = rows.len();
    let spectra = if n == 1 { SiteSpectra::Uniform(rows[0].clone()) } else { SiteSpectra::PerSite(rows) };
    let back: SiteSpectra = spectra.to_string().parse().expect("displayed spectra must parse");
    assert_eq!(back, spectra);
    let expanded = spectra.expand(d, n).expect("consistent spectra expand");
    assert_eq!(expanded.len(), n);
});
