use super::{par_trials, require, rng, stream_of, Result};
use crate::config::ExperimentConfig;
use crate::report::{num, Check, ResultRecord, Table};
use capsule_core::state::DensityMatrix;
use capsule_core::typicality::{build_hamiltonian, default_kernel_width, estimate_beta, mes_shell, typicality_sample, GibbsComparison};

struct Case {
    name: &'static str,
    site_spectra: Vec<Vec<f64>>,
    e_tot: f64,
    delta_e: f64,
}

/// The flat case (H = 0, every state in the shell) and the configured shell.
pub fn typicality(c: &ExperimentConfig) -> Result<ResultRecord> {
    let n_qudits = c.n_values[0];
    require(c.m >= 1 && 2 * c.m <= n_qudits, || format!("subsystem size m = {} must be in 1..={}", c.m, n_qudits / 2))?;
    require(c.samples >= 10, || "typicality needs at least 10 samples".into())?;
    let cases = [
        Case { name: "flat", site_spectra: vec![vec![0.0; c.d]; n_qudits], e_tot: 0.0, delta_e: 0.0 },
        Case { name: "shell", site_spectra: c.site_spectra.expand(c.d, n_qudits)?, e_tot: c.e_tot, delta_e: c.delta_e },
    ];

    let mut rec = ResultRecord::new(c);
    let mut samples_table = Table::new("", &["case", "trial", "stream", "trace_distance_gibbs", "hs_gibbs", "hs_shell_average"]);
    let mut states = Table::new("states", &["case", "state", "row", "col", "re", "im"]);
    let slack = 1.0 + c.thresholds.variance_slack / (c.samples as f64).sqrt();
    for (ci, case) in cases.iter().enumerate() {
        let h = build_hamiltonian(case.site_spectra.clone())?;
        let shell = mes_shell(&h, case.e_tot, case.delta_e)?;
        let width = default_kernel_width(&h.sites(c.m + 1, n_qudits)?, c.kernel_width);
        let beta = estimate_beta(&h, shell.center(), c.m, Some(width))?;
        let average = shell.reduced_average(c.m)?;
        let streams: Vec<u64> = (0..c.samples).map(|t| stream_of(c, &[ci as u64, t as u64])).collect();
        let samples: Vec<DensityMatrix> = par_trials(c.samples, |t| Ok(typicality_sample(&shell, c.m, &mut rng(c, streams[t]))?))?;
        let cmp = GibbsComparison::from_samples(&h, &shell, c.m, samples.clone(), beta)?;
        for (t, rho) in samples.iter().enumerate() {
            samples_table.push(vec![
                case.name.into(),
                t.to_string(),
                streams[t].to_string(),
                num(cmp.trace_distances[t]),
                num(cmp.hs_distances[t]),
                num(rho.hs_distance_sq(&average)?),
            ]);
        }
        for (label, rho) in [("mean", &cmp.mean_state), ("shell_average", &cmp.shell_average), ("gibbs", &cmp.gibbs)] {
            let e = rho.entries();
            for i in 0..e.nrows() {
                for j in 0..e.ncols() {
                    states.push(vec![case.name.into(), label.into(), i.to_string(), j.to_string(), num(e[(i, j)].re), num(e[(i, j)].im)]);
                }
            }
        }

        let p = case.name;
        let fraction = cmp.fraction_within(c.thresholds.trace_distance);
        rec.stat(&format!("{p}.shell_dimension"), cmp.d_e);
        rec.stat(&format!("{p}.beta"), num(cmp.beta.beta));
        rec.stat(&format!("{p}.kernel_width"), num(cmp.beta.width));
        rec.stat(&format!("{p}.hs_variance"), num(cmp.hs_variance));
        rec.stat(&format!("{p}.variance_bound"), num(cmp.bound));
        rec.stat(&format!("{p}.mean_z"), num(cmp.mean_z));
        rec.stat(&format!("{p}.mean_trace_distance"), num(cmp.mean_trace_distance()));
        rec.stat(&format!("{p}.fraction_within_trace_distance"), num(fraction));
        rec.checks.push(Check::at_most(&format!("{p}_mean_state"), cmp.mean_z, c.thresholds.sigma));
        rec.checks.push(Check::at_most(&format!("{p}_variance_bound"), cmp.hs_variance, cmp.bound * slack));
        if ci == 1 {
            rec.checks.push(Check::at_least(&format!("{p}_near_gibbs"), fraction, c.thresholds.trace_fraction));
        }
    }
    rec.tables.extend([samples_table, states]);
    Ok(rec)
}
