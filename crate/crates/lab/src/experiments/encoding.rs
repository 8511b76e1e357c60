use super::{generators, par_trials, require, stream_of, Result};
use crate::config::ExperimentConfig;
use crate::report::{num, Check, ResultRecord, Table};
use capsule_core::encoding::{extract_components_with, gram_residual, overlap_factorization, Encoder, EncoderSpec, ScramblerKind};
use capsule_core::stats::median;
use capsule_core::tolerance::decoupling_scale;

fn haar_encoder(c: &ExperimentConfig, n_qudits: usize, stream_base: u64) -> Result<Encoder> {
    let spec = EncoderSpec::standard(n_qudits, generators(c)?, c.ports.clone(), ScramblerKind::Haar, c.master_seed, stream_base)?;
    Ok(Encoder::new(spec)?)
}

fn sorted_sizes(c: &ExperimentConfig) -> Vec<usize> {
    let mut ns = c.n_values.clone();
    ns.sort_unstable();
    ns.dedup();
    ns
}

pub fn components(c: &ExperimentConfig) -> Result<ResultRecord> {
    require(c.seeds >= 1, || "components needs at least one seed".into())?;
    let tol = c.tolerances.to_core();
    let mut rec = ResultRecord::new(c);
    let mut trials = Table::new("", &["N", "trial", "stream", "gram_residual", "max_node_condition", "reassembly_error"]);
    let mut vectors = Table::new("vectors", &["N", "trial", "s", "s_bar", "norm"]);
    let mut levels = Table::new("levels", &["N", "median_gram_residual", "limit"]);
    let mut medians = Vec::new();
    let mut within = true;
    for n in sorted_sizes(c) {
        let streams: Vec<u64> = (0..c.seeds).map(|t| stream_of(c, &[n as u64, t as u64])).collect();
        let results = par_trials(c.seeds, |t| {
            let enc = haar_encoder(c, n, streams[t])?;
            let set = extract_components_with(&enc, None, &tol)?;
            let reassembly = (set.reassemble(&c.theta_prime)? - enc.encode(&c.theta_prime)?.amplitudes()).norm();
            Ok((set, reassembly))
        })?;
        let mut residuals = Vec::with_capacity(c.seeds);
        for (t, (set, reassembly)) in results.iter().enumerate() {
            let r = gram_residual(set);
            residuals.push(r);
            let cond = set.node_conditions.iter().cloned().fold(0.0, f64::max);
            trials.push(vec![n.to_string(), t.to_string(), streams[t].to_string(), num(r), num(cond), num(*reassembly)]);
        }
        if let Some((set, _)) = results.first() {
            for (label, norm) in set.labels.iter().zip(set.norms()) {
                let s = label.s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
                vectors.push(vec![n.to_string(), "0".into(), s, label.s_bar.to_string(), num(norm)]);
            }
        }
        let med = median(&residuals);
        let limit = c.thresholds.decoupling_constant * decoupling_scale(c.d, n);
        within &= med <= limit;
        levels.push(vec![n.to_string(), num(med), num(limit)]);
        rec.stat(&format!("median_gram_residual_N{n}"), num(med));
        medians.push((n, med));
    }
    rec.tables.extend([trials, levels, vectors]);
    rec.checks.push(Check::new(
        "gram_within_decoupling_scale",
        within,
        format!(
            "medians {} against {} * d^-(N-3)/2",
            medians.iter().map(|(n, m)| format!("N{n}={}", num(*m))).collect::<Vec<_>>().join(" "),
            num(c.thresholds.decoupling_constant)
        ),
    ));
    if let (Some(first), Some(last)) = (medians.first(), medians.last()) {
        if medians.len() >= 2 {
            rec.checks.push(Check::new(
                "gram_shrinks_with_N",
                last.1 < first.1,
                format!("N{}={} < N{}={}", last.0, num(last.1), first.0, num(first.1)),
            ));
        }
    }
    Ok(rec)
}

pub fn factorization(c: &ExperimentConfig) -> Result<ResultRecord> {
    require(c.seeds >= 1, || "factorization needs at least one seed".into())?;
    let mut rec = ResultRecord::new(c);
    let mut trials = Table::new("", &["N", "trial", "stream", "measured", "predicted", "error"]);
    let mut levels = Table::new("levels", &["N", "median_error"]);
    let mut medians = Vec::new();
    for n in sorted_sizes(c) {
        let streams: Vec<u64> = (0..c.seeds).map(|t| stream_of(c, &[n as u64, t as u64])).collect();
        let pairs = par_trials(c.seeds, |t| Ok(overlap_factorization(&haar_encoder(c, n, streams[t])?, &c.theta, &c.theta_prime)?))?;
        let errors: Vec<f64> = pairs.iter().map(|(m, p)| (m - p).abs()).collect();
        for (t, ((m, p), e)) in pairs.iter().zip(&errors).enumerate() {
            trials.push(vec![n.to_string(), t.to_string(), streams[t].to_string(), num(*m), num(*p), num(*e)]);
        }
        let med = median(&errors);
        levels.push(vec![n.to_string(), num(med)]);
        rec.stat(&format!("median_error_N{n}"), num(med));
        medians.push((n, med));
    }
    rec.tables.extend([trials, levels]);
    if let Some(&(n, med)) = medians.last() {
        rec.checks.push(Check::at_most(&format!("factorization_N{n}"), med, c.thresholds.factorization));
    }
    if medians.len() >= 2 {
        rec.checks.push(Check::new(
            "error_non_increasing",
            medians.windows(2).all(|w| w[1].1 <= w[0].1),
            medians.iter().map(|(n, m)| format!("N{n}={}", num(*m))).collect::<Vec<_>>().join(" >= "),
        ));
    }
    Ok(rec)
}
