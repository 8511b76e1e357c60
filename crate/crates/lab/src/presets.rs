//! Human-readable listing of generator presets, experiments and defaults.

use crate::config::{ExperimentKind, Thresholds, ToleranceOverrides};
use crate::report::num;
use std::fmt::Write as _;

const GENERATORS: [(&str, &str); 6] = [
    ("pauli-z-like", "pauli-z-like (d=2, w=+1,−1)"),
    ("pauli-x-like", "pauli-x-like (d=2, w=+1,−1, eigenvectors |±⟩)"),
    ("pauli-y-like", "pauli-y-like (d=2, w=+1,−1, eigenvectors |±i⟩)"),
    ("clock(d)", "clock(d) (w_s = (d−1)/2 − s, diagonal)"),
    ("spectrum(w1 w2 ...)", "spectrum(w1 w2 ...) (diagonal, traceless, distinct)"),
    ("matrix(a b; c d)", "matrix(a b; c d) (explicit Hermitian traceless rows, complex entries like 1-2i)"),
];

pub fn list_presets() -> String {
    let mut s = String::from("generator presets:\n");
    for (_, line) in GENERATORS {
        let _ = writeln!(s, "  {line}");
    }
    s.push_str("\nexperiments:\n");
    for kind in ExperimentKind::ALL {
        let _ = writeln!(s, "  {:<15} {}", kind.name(), kind.description());
    }
    let tol = ToleranceOverrides::default();
    s.push_str("\ndefault tolerances:\n");
    for (k, v) in [("cond_warn", tol.cond_warn), ("cond_fail", tol.cond_fail), ("spectral_gap", tol.spectral_gap)] {
        let _ = writeln!(s, "  {k} = {}", num(v));
    }
    let t = Thresholds::default();
    s.push_str("\ndefault thresholds:\n");
    for (k, v) in [
        ("sigma", t.sigma),
        ("purity_sigma", t.purity_sigma),
        ("decoupling_constant", t.decoupling_constant),
        ("overlap_ratio_min", t.overlap_ratio_min),
        ("overlap_ratio_max", t.overlap_ratio_max),
        ("uniformity", t.uniformity),
        ("uniformity_fraction", t.uniformity_fraction),
        ("factorization", t.factorization),
        ("two_route", t.two_route),
        ("chain_rule", t.chain_rule),
        ("fd_relative", t.fd_relative),
        ("fd_order_tolerance", t.fd_order_tolerance),
        ("anisotropy", t.anisotropy),
        ("drift", t.drift),
        ("fisher_value", t.fisher_value),
        ("lowt_fraction", t.lowt_fraction),
        ("trace_distance", t.trace_distance),
        ("trace_fraction", t.trace_fraction),
        ("variance_slack", t.variance_slack),
    ] {
        let _ = writeln!(s, "  {k} = {}", num(v));
    }
    s
}
