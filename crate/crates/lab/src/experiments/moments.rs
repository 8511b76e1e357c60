use super::{par_trials, require, rng, stream_of, Result};
use crate::config::{ExperimentConfig, MomentSuite};
use crate::report::{num, Check, ResultRecord, Table};
use capsule_core::encoding::{marginal_purity_sample, page_purity_average, schmidt_uniformity};
use capsule_core::haar::{fourth_moment_suite, haar_sample, second_moment_suite, MomentEstimate};
use capsule_core::rng::stream_index;
use capsule_core::stats::MeanEstimate;
use num_complex::Complex64;

pub fn haar_moments(c: &ExperimentConfig) -> Result<ResultRecord> {
    require(c.samples >= 2, || "haar-moments needs at least 2 samples".into())?;
    require(c.dims.iter().all(|&d| d >= 2), || "moment suites use indices up to 2, so every dim must be at least 2".into())?;
    let mut patterns = Vec::new();
    if matches!(c.moment_suite, MomentSuite::Second | MomentSuite::All) {
        patterns.extend(second_moment_suite());
    }
    if matches!(c.moment_suite, MomentSuite::Fourth | MomentSuite::All) {
        patterns.extend(fourth_moment_suite());
    }

    let mut rec = ResultRecord::new(c);
    let mut table = Table::new("", &["dim", "stream", "pattern", "order", "mc_re", "mc_im", "exact", "std_error", "z"]);
    let mut worst = [0.0f64; 5];
    for &dim in &c.dims {
        let base = stream_of(c, &[dim as u64]);
        let values: Vec<Vec<Complex64>> = par_trials(c.samples, |t| {
            let u = haar_sample(dim, &mut rng(c, stream_index(&[base, t as u64])))?.into_matrix();
            Ok(patterns.iter().map(|p| p.evaluate(&u)).collect())
        })?;
        for (i, p) in patterns.iter().enumerate() {
            let column: Vec<Complex64> = values.iter().map(|v| v[i]).collect();
            let est = MomentEstimate::from_samples(&column);
            let exact = p.exact(dim)?;
            let z = est.z_score(exact);
            worst[p.order()] = worst[p.order()].max(z);
            table.push(vec![
                dim.to_string(),
                base.to_string(),
                p.to_string(),
                p.order().to_string(),
                num(est.value.re),
                num(est.value.im),
                num(exact),
                num(est.std_error),
                num(z),
            ]);
        }
    }
    rec.tables.push(table);
    rec.stat("samples", c.samples);
    rec.stat("dims", c.dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" "));
    for order in [2, 4] {
        if patterns.iter().any(|p| p.order() == order) {
            let name = if order == 2 { "second_moments" } else { "fourth_moments" };
            rec.stat(&format!("max_z_order{order}"), num(worst[order]));
            rec.checks.push(Check::at_most(name, worst[order], c.thresholds.sigma));
        }
    }
    Ok(rec)
}

pub fn page_purity(c: &ExperimentConfig) -> Result<ResultRecord> {
    require(c.samples >= 2, || "page-purity needs at least 2 samples".into())?;
    let mut rec = ResultRecord::new(c);
    let mut levels = Table::new("", &["d", "N", "samples", "mean_purity", "std_error", "exact", "z"]);
    let mut trials = Table::new("trials", &["N", "trial", "stream", "purity"]);
    let mut uniform = Table::new("uniformity", &["N", "trial", "stream", "max_deviation"]);
    let mut worst_z: f64 = 0.0;
    let mut fractions = Vec::new();
    for &n in &c.n_values {
        let streams: Vec<u64> = (0..c.samples).map(|t| stream_of(c, &[n as u64, 0, t as u64])).collect();
        let purities = par_trials(c.samples, |t| Ok(marginal_purity_sample(c.d, n, &mut rng(c, streams[t]))?))?;
        for (t, p) in purities.iter().enumerate() {
            trials.push(vec![n.to_string(), t.to_string(), streams[t].to_string(), num(*p)]);
        }
        let est = MeanEstimate::from_samples(&purities);
        let exact = page_purity_average(c.d, n);
        let z = est.z_score(exact);
        worst_z = worst_z.max(z);
        levels.push(vec![c.d.to_string(), n.to_string(), c.samples.to_string(), num(est.mean), num(est.std_error), num(exact), num(z)]);
        rec.stat(&format!("mean_purity_N{n}"), num(est.mean));
        rec.stat(&format!("exact_purity_N{n}"), num(exact));

        if n >= 3 && c.seeds > 0 {
            let streams: Vec<u64> = (0..c.seeds).map(|t| stream_of(c, &[n as u64, 1, t as u64])).collect();
            let devs = par_trials(c.seeds, |t| Ok(schmidt_uniformity(c.d, n, &mut rng(c, streams[t]))?))?;
            for (t, v) in devs.iter().enumerate() {
                uniform.push(vec![n.to_string(), t.to_string(), streams[t].to_string(), num(*v)]);
            }
            let fraction = devs.iter().filter(|&&v| v < c.thresholds.uniformity).count() as f64 / devs.len() as f64;
            rec.stat(&format!("uniformity_fraction_N{n}"), num(fraction));
            fractions.push((n, fraction));
        }
    }
    rec.tables.extend([levels, trials, uniform]);
    rec.stat("max_z", num(worst_z));
    rec.checks.push(Check::at_most("purity_mean", worst_z, c.thresholds.purity_sigma));
    // Schmidt weights only flatten for large N, so only the largest size is held to the limit.
    if let Some(&(n, fraction)) = fractions.iter().max_by_key(|(n, _)| *n) {
        rec.checks.push(Check::at_least(&format!("schmidt_uniformity_N{n}"), fraction, c.thresholds.uniformity_fraction));
    }
    Ok(rec)
}
