//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria 1–11 run the experiment library at full size; criterion 12
//! drives the `capsule` binary twice per subcommand with different worker
//! counts and compares the output files byte for byte.

use capsule_lab::config::{ExperimentConfig, ExperimentKind, MomentSuite};
use capsule_lab::report::ResultRecord;
use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

struct Outcome {
    passed: bool,
    detail: String,
}

fn run(config: &ExperimentConfig) -> ResultRecord {
    capsule_lab::run(config, 1).unwrap_or_else(|e| panic!("{} failed to run: {e}", config.kind))
}

fn checks_pass(rec: &ResultRecord, names: &[&str]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in names {
        match rec.check(name) {
            Some(c) => {
                ok &= c.passed;
                parts.push(format!("{name}: {}", c.detail));
            }
            None => {
                ok = false;
                parts.push(format!("{name}: missing"));
            }
        }
    }
    (ok, parts.join("; "))
}

fn stat(rec: &ResultRecord, key: &str) -> f64 {
    rec.summary_value(key).unwrap_or_else(|| panic!("missing summary {key}")).parse().unwrap()
}

fn column(rec: &ResultRecord, table: &str, name: &str) -> Vec<String> {
    let t = rec.table(table).unwrap_or_else(|| panic!("missing table '{table}'"));
    let i = t.columns.iter().position(|c| c == name).unwrap_or_else(|| panic!("missing column {name}"));
    t.rows.iter().map(|r| r[i].clone()).collect()
}

fn criterion_1() -> Outcome {
    let mut c = ExperimentConfig::defaults(ExperimentKind::HaarMoments);
    c.dims = vec![8];
    c.samples = 100_000;
    c.moment_suite = MomentSuite::Second;
    let rec = run(&c);
    let (ok, detail) = checks_pass(&rec, &["second_moments"]);
    let patterns = column(&rec, "", "pattern");
    let exact = column(&rec, "", "exact");
    // E|U11|² = 1/D and the three off-pattern averages vanish.
    let oracle_ok = patterns.len() == 4
        && patterns.iter().zip(&exact).all(|(p, e)| {
            let e: f64 = e.parse().unwrap();
            if p == "U11*Ud11" { e == 0.125 } else { e == 0.0 }
        });
    Outcome { passed: ok && oracle_ok, detail: format!("{detail}; exact targets {}", if oracle_ok { "ok" } else { "wrong" }) }
}

fn criterion_2() -> Outcome {
    let mut c = ExperimentConfig::defaults(ExperimentKind::HaarMoments);
    c.dims = vec![2, 4];
    c.samples = 100_000;
    c.moment_suite = MomentSuite::Fourth;
    let rec = run(&c);
    let (ok, detail) = checks_pass(&rec, &["fourth_moments"]);
    let rows = column(&rec, "", "pattern").len();
    let dims = column(&rec, "", "dim");
    let patterns = column(&rec, "", "pattern");
    let exact = column(&rec, "", "exact");
    // E|U11|⁴ = 2/(D(D+1)), 1/3 for a qubit.
    let quartic = dims.iter().zip(&patterns).zip(&exact).find(|((d, p), _)| d.as_str() == "2" && p.as_str() == "U11*U11*Ud11*Ud11");
    let quartic_ok = matches!(quartic, Some((_, e)) if (e.parse::<f64>().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    Outcome {
        passed: ok && rows == 24 && quartic_ok,
        detail: format!("{detail}; {rows} pattern rows; E|U11|^4 at D=2 {}", if quartic_ok { "= 1/3" } else { "wrong" }),
    }
}

fn criterion_3() -> Outcome {
    let mut c = ExperimentConfig::defaults(ExperimentKind::PagePurity);
    c.d = 2;
    c.n_values = vec![3, 8];
    c.samples = 10_000;
    let rec = run(&c);
    let (ok, detail) = checks_pass(&rec, &["purity_mean"]);
    let oracle_ok = stat(&rec, "exact_purity_N3") == 2.0 / 3.0 && stat(&rec, "exact_purity_N8") == (2.0 + 128.0) / (256.0 + 1.0);
    Outcome {
        passed: ok && oracle_ok,
        detail: format!("{detail}; means N3={} N8={}", stat(&rec, "mean_purity_N3"), stat(&rec, "mean_purity_N8")),
    }
}

fn criterion_4() -> Outcome {
    let mut c = ExperimentConfig::defaults(ExperimentKind::CrossOverlap);
    c.d = 2;
    c.n_values = vec![4, 6, 8, 10];
    c.seeds = 50;
    let rec = run(&c);
    let (ok, detail) = checks_pass(&rec, &["median_decreasing", "decay_ratio"]);
    Outcome { passed: ok, detail }
}

fn criterion_5() -> Outcome {
    let mut c = ExperimentConfig::defaults(ExperimentKind::Components);
    c.n_values = vec![6, 8, 10];
    c.seeds = 20;
    let rec = run(&c);
    let n8 = stat(&rec, "median_gram_residual_N8");
    let (n6, n10) = (stat(&rec, "median_gram_residual_N6"), stat(&rec, "median_gram_residual_N10"));
    let limit = 5.0 * 2f64.powf(-2.5);
    Outcome {
        passed: n8 <= limit && n10 < n6,
        detail: format!("median N8 {n8} <= {limit}; N10 {n10} < N6 {n6}"),
    }
}

fn criterion_6() -> Outcome {
    let c = ExperimentConfig::defaults(ExperimentKind::Factorization);
    let rec = run(&c);
    let (ok, detail) = checks_pass(&rec, &["factorization_N8", "error_non_increasing"]);
    let target = (0.3f64.cos() * 0.7f64.cos()).abs();
    let predicted_ok = column(&rec, "", "predicted").iter().all(|p| (p.parse::<f64>().unwrap() - target).abs() < 1e-12);
    Outcome {
        passed: ok && predicted_ok && c.seeds >= 50,
        detail: format!("{detail}; {} seeds per N; prediction |cos0.3 cos0.7| {}", c.seeds, if predicted_ok { "ok" } else { "wrong" }),
    }
}

fn criteria_7_and_8() -> (Outcome, Outcome, Duration) {
    let c = ExperimentConfig::defaults(ExperimentKind::Fisher);
    let start = Instant::now();
    let rec = run(&c);
    let elapsed = start.elapsed();
    let (ok7, d7) = checks_pass(&rec, &["two_route", "positive_semidefinite", "global_phase_invariance"]);
    let (ok8, d8) = checks_pass(&rec, &["finite_difference", "finite_difference_order"]);
    (
        Outcome { passed: ok7 && c.seeds == 50, detail: format!("{} frames; {d7}", c.seeds) },
        Outcome { passed: ok8 && stat(&rec, "fd_specs") == 20.0 && c.fd_steps == [1e-5, 1e-3, 1e-4], detail: format!("20 specs; {d8}") },
        elapsed,
    )
}

fn criterion_9() -> Outcome {
    let c = ExperimentConfig::defaults(ExperimentKind::Isometry);
    let rec = run(&c);
    let (ok, detail) = checks_pass(&rec, &["anisotropy", "drift", "fisher_value", "chain_rule"]);
    // Var_u(+1, −1) = 1 in the factor-free normalization.
    let f = stat(&rec, "median_f");
    Outcome {
        passed: ok && (f - 1.0).abs() <= 0.2 && c.rotations == 10 && c.grid.len() == 3 && c.seeds == 50,
        detail: format!("{detail}; median F {f}"),
    }
}

fn criterion_10() -> Outcome {
    let c = ExperimentConfig::defaults(ExperimentKind::IsometryLowT);
    let rec = run(&c);
    let (ok, detail) = checks_pass(&rec, &["narrow_shell", "isometry_broken"]);
    Outcome { passed: ok, detail }
}

fn criterion_11() -> Outcome {
    let c = ExperimentConfig::defaults(ExperimentKind::Typicality);
    let rec = run(&c);
    let (ok, detail) =
        checks_pass(&rec, &["flat_mean_state", "flat_variance_bound", "shell_mean_state", "shell_variance_bound", "shell_near_gibbs"]);
    let bound_ok = stat(&rec, "flat.variance_bound") == 4.0 / 257.0;
    Outcome { passed: ok && bound_ok && c.samples == 100 && c.m == 1, detail: format!("{detail}; flat bound 4/257 {}", if bound_ok { "ok" } else { "wrong" }) }
}

fn data_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn criterion_12() -> Outcome {
    let runs: [(&str, &[&str]); 9] = [
        ("haar-moments", &["--samples", "2000"]),
        ("page-purity", &["--samples", "2000", "--seeds", "20"]),
        ("cross-overlap", &["--seeds", "5"]),
        ("components", &["--N", "6,7", "--seeds", "4"]),
        ("factorization", &["--seeds", "20"]),
        ("fisher", &[]),
        ("isometry", &["--seeds", "6"]),
        ("isometry-lowT", &["--seeds", "6"]),
        ("typicality", &[]),
    ];
    let tmp = tempfile::tempdir().unwrap();
    let mut mismatches = Vec::new();
    let mut files = 0;
    for (kind, extra) in runs {
        let mut outputs = Vec::new();
        for threads in ["1", "4"] {
            let out = tmp.path().join(format!("{kind}-{threads}"));
            let status = Command::new(env!("CARGO_BIN_EXE_capsule"))
                .arg(kind)
                .args(extra)
                .args(["--seed", "11", "--threads", threads, "--out"])
                .arg(&out)
                .output()
                .expect("spawn capsule");
            let code = status.status.code();
            if !matches!(code, Some(0) | Some(1)) {
                mismatches.push(format!("{kind} exited {code:?}: {}", String::from_utf8_lossy(&status.stderr).trim()));
            }
            outputs.push(data_files(&out));
        }
        files += outputs[0].len();
        if outputs[0].is_empty() || outputs[0] != outputs[1] {
            mismatches.push(format!("{kind} differs between 1 and 4 threads"));
        }
    }
    Outcome {
        passed: mismatches.is_empty(),
        detail: if mismatches.is_empty() { format!("{files} files identical across 9 subcommands") } else { mismatches.join("; ") },
    }
}

fn timed(f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn main() {
    let mut all = true;
    let mut report = |n: usize, limit_s: u64, (out, took): (Outcome, Duration)| {
        let in_time = took <= Duration::from_secs(limit_s);
        let passed = out.passed && in_time;
        all &= passed;
        println!(
            "criterion {n:>2}: {} ({:.1}s, limit {limit_s}s) {}",
            if passed { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            out.detail
        );
    };
    report(1, 60, timed(criterion_1));
    report(2, 120, timed(criterion_2));
    report(3, 180, timed(criterion_3));
    report(4, 300, timed(criterion_4));
    report(5, 300, timed(criterion_5));
    report(6, 180, timed(criterion_6));
    let (c7, c8, fisher_time) = criteria_7_and_8();
    report(7, 60, (c7, fisher_time));
    report(8, 120, (c8, fisher_time));
    report(9, 600, timed(criterion_9));
    report(10, 600, timed(criterion_10));
    report(11, 300, timed(criterion_11));
    report(12, 300, timed(criterion_12));
    if !all {
        eprintln!("acceptance: at least one criterion failed");
        std::process::exit(1);
    }
}
