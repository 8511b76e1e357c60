use super::{par_trials, require, rng, stream_of, Result};
use crate::config::ExperimentConfig;
use crate::report::{num, Check, ResultRecord, Table};
use capsule_core::encoding::{cross_schmidt_overlaps, OverlapStats};

pub fn cross_overlap(c: &ExperimentConfig) -> Result<ResultRecord> {
    require(c.seeds >= 1, || "cross-overlap needs at least one seed".into())?;
    require(c.m >= 2, || "cross overlaps need m >= 2 input states".into())?;
    let mut ns = c.n_values.clone();
    ns.sort_unstable();
    ns.dedup();

    let mut rec = ResultRecord::new(c);
    let mut trials = Table::new("", &["N", "trial", "stream", "cross_median", "same_lambda_deviation"]);
    let mut tables = Vec::new();
    let mut worst_same: f64 = 0.0;
    for &n in &ns {
        let streams: Vec<u64> = (0..c.seeds).map(|t| stream_of(c, &[n as u64, t as u64])).collect();
        let batch = par_trials(c.seeds, |t| Ok(cross_schmidt_overlaps(c.d, n, c.m, &mut rng(c, streams[t]))?))?;
        for (t, table) in batch.iter().enumerate() {
            worst_same = worst_same.max(table.same_lambda_deviation());
            trials.push(vec![n.to_string(), t.to_string(), streams[t].to_string(), num(table.cross_median()), num(table.same_lambda_deviation())]);
        }
        tables.extend(batch);
    }
    let stats = OverlapStats::from_tables(&tables);

    let mut levels = Table::new("levels", &["N", "median", "pooled", "ratio_per_2"]);
    let mut per_two = Vec::new();
    for (i, level) in stats.levels.iter().enumerate() {
        let ratio = if i == 0 {
            f64::NAN
        } else {
            let prev = &stats.levels[i - 1];
            let steps = (level.n_qudits - prev.n_qudits) as f64 / 2.0;
            (level.median / prev.median).powf(1.0 / steps)
        };
        if i > 0 {
            per_two.push(ratio);
        }
        levels.push(vec![level.n_qudits.to_string(), num(level.median), level.samples.to_string(), num(ratio)]);
    }
    rec.tables.extend([trials, levels]);

    let decreasing = stats.levels.windows(2).all(|w| w[1].median < w[0].median);
    rec.stat("fitted_exponent", num(stats.fitted_exponent));
    rec.stat("ratio_per_2_from_fit", num((2.0 * stats.fitted_exponent).exp()));
    rec.stat("max_same_lambda_deviation", num(worst_same));
    rec.checks.push(Check::new(
        "median_decreasing",
        decreasing && stats.levels.len() >= 2,
        format!("medians {}", stats.levels.iter().map(|l| num(l.median)).collect::<Vec<_>>().join(" > ")),
    ));
    let (lo, hi) = (c.thresholds.overlap_ratio_min, c.thresholds.overlap_ratio_max);
    rec.checks.push(Check::new(
        "decay_ratio",
        !per_two.is_empty() && per_two.iter().all(|r| (lo..=hi).contains(r)),
        format!("per-2-qudit ratios [{}] within [{}, {}]", per_two.iter().map(|r| num(*r)).collect::<Vec<_>>().join(", "), num(lo), num(hi)),
    ));
    rec.checks.push(Check::at_most("same_lambda_orthonormal", worst_same, 1e-10));
    Ok(rec)
}
