use super::{generators, mean_uniform_variance, par_trials, require, rng, stream_of, Result};
use crate::config::ExperimentConfig;
use crate::report::{num, Check, ResultRecord, Table};
use capsule_core::encoding::{Encoder, EncoderSpec, ScramblerKind, ShellSpec};
use capsule_core::fisher::{
    derivative_states, isometry_report, product_grid, qfi_metric, qfi_metric_direct, reparameterize_check, rotation, IsometryReport, RMatrix,
};
use capsule_core::haar::haar_sample;
use capsule_core::rng::{stream_index, RngStream};
use capsule_core::stats::median;
use capsule_core::typicality::{build_hamiltonian, mes_shell};
use std::f64::consts::PI;

const MAX_RANDOM_PARAMS: usize = 3;

struct FrameRow {
    n: usize,
    ports: Vec<usize>,
    two_route: f64,
    gauge: f64,
    min_eigenvalue: f64,
    fd: Option<FdResult>,
}

struct FdResult {
    /// Worst relative error over parameters at each step of `fd_steps`.
    errors: Vec<f64>,
    order: f64,
}

/// Central differences of the encoder against its analytic derivatives.
fn finite_difference(enc: &Encoder, theta: &[f64], steps: &[f64]) -> Result<FdResult> {
    let (_, derivs) = enc.tangent(theta)?;
    let mut errors = Vec::with_capacity(steps.len());
    for &h in steps {
        let mut worst: f64 = 0.0;
        for (j, dv) in derivs.iter().enumerate() {
            let mut plus = theta.to_vec();
            let mut minus = theta.to_vec();
            plus[j] += h;
            minus[j] -= h;
            let fd = (enc.encode(&plus)?.into_amplitudes() - enc.encode(&minus)?.into_amplitudes()) / num_complex::Complex64::new(2.0 * h, 0.0);
            worst = worst.max((fd - dv).norm() / dv.norm());
        }
        errors.push(worst);
    }
    let (h1, h2) = (steps[1], steps[2]);
    let order = (errors[1] / errors[2]).log10() / (h1 / h2).log10();
    Ok(FdResult { errors, order })
}

pub fn fisher(c: &ExperimentConfig) -> Result<ResultRecord> {
    let n_qudits = c.n_values[0];
    require(c.seeds >= 1, || "fisher needs at least one frame".into())?;
    require(c.fd_specs <= c.seeds, || format!("fd_specs = {} exceeds seeds = {}", c.fd_specs, c.seeds))?;
    require(n_qudits >= 1, || "fisher needs at least one qudit".into())?;
    let base_gens = generators(c)?;
    let streams: Vec<u64> = (0..c.seeds).map(|t| stream_of(c, &[n_qudits as u64, t as u64])).collect();

    let rows = par_trials(c.seeds, |t| {
        let mut r = rng(c, stream_index(&[streams[t], 0]));
        let n = r.below(MAX_RANDOM_PARAMS) + 1;
        let mut gens = Vec::with_capacity(n);
        let mut ports = Vec::with_capacity(n);
        let mut theta = Vec::with_capacity(n);
        for j in 0..n {
            let base = &base_gens[j % base_gens.len()];
            let u = haar_sample(base.d(), &mut r)?;
            gens.push(base.conjugated(u.matrix())?);
            ports.push(r.below(n_qudits) + 1);
            theta.push(2.0 * PI * r.uniform());
        }
        let phase = 2.0 * PI * r.uniform();
        let spec = EncoderSpec::standard(n_qudits, gens, ports.clone(), ScramblerKind::Haar, c.master_seed, stream_index(&[streams[t], 1]))?;
        let enc = Encoder::new(spec)?;
        let frame = derivative_states(&enc, &theta)?;
        let g = qfi_metric(&frame);
        let direct = qfi_metric_direct(&frame);
        let rephased = qfi_metric(&frame.with_global_phase(phase));
        let fd = if t < c.fd_specs { Some(finite_difference(&enc, &theta, &c.fd_steps)?) } else { None };
        Ok(FrameRow {
            n,
            ports,
            two_route: g.max_diff(&direct),
            gauge: g.max_diff(&rephased),
            min_eigenvalue: g.min_eigenvalue(),
            fd,
        })
    })?;

    let mut rec = ResultRecord::new(c);
    let mut table = Table::new("", &["trial", "stream", "n", "ports", "two_route_diff", "gauge_diff", "min_eigenvalue", "fd_error", "fd_error_coarse", "fd_error_fine", "fd_order"]);
    for (t, row) in rows.iter().enumerate() {
        let fd_cols = match &row.fd {
            Some(fd) => vec![num(fd.errors[0]), num(fd.errors[1]), num(fd.errors[2]), num(fd.order)],
            None => vec![String::new(); 4],
        };
        let mut cols = vec![
            t.to_string(),
            streams[t].to_string(),
            row.n.to_string(),
            row.ports.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" "),
            num(row.two_route),
            num(row.gauge),
            num(row.min_eigenvalue),
        ];
        cols.extend(fd_cols);
        table.push(cols);
    }
    rec.tables.push(table);

    let max = |f: &dyn Fn(&FrameRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let two_route = max(&|r| r.two_route);
    let gauge = max(&|r| r.gauge);
    let min_eig = rows.iter().map(|r| r.min_eigenvalue).fold(f64::INFINITY, f64::min);
    let fds: Vec<&FdResult> = rows.iter().filter_map(|r| r.fd.as_ref()).collect();
    let fd_error = fds.iter().map(|f| f.errors[0]).fold(0.0, f64::max);
    let order_dev = fds.iter().map(|f| (f.order - 2.0).abs()).fold(0.0, f64::max);
    rec.stat("frames", c.seeds);
    rec.stat("max_two_route_diff", num(two_route));
    rec.stat("max_gauge_diff", num(gauge));
    rec.stat("min_eigenvalue", num(min_eig));
    rec.stat("fd_specs", fds.len());
    rec.stat("max_fd_error", num(fd_error));
    rec.stat("max_fd_order_deviation", num(order_dev));
    rec.checks.push(Check::at_most("two_route", two_route, c.thresholds.two_route));
    rec.checks.push(Check::at_most("global_phase_invariance", gauge, c.thresholds.two_route));
    rec.checks.push(Check::at_least("positive_semidefinite", min_eig, -capsule_core::tolerance::Tolerances::DEFAULT.psd_floor));
    if !fds.is_empty() {
        rec.checks.push(Check::at_most("finite_difference", fd_error, c.thresholds.fd_relative));
        rec.checks.push(Check::at_most("finite_difference_order", order_dev, c.thresholds.fd_order_tolerance));
    }
    Ok(rec)
}

/// Haar-distributed orthogonal matrix from the QR factor of a real Gaussian matrix.
fn random_orthogonal(n: usize, r: &mut RngStream) -> RMatrix {
    let a = RMatrix::from_fn(n, n, |_, _| r.gaussian());
    let qr = a.qr();
    let signs = qr.r().diagonal().map(|x| if x < 0.0 { -1.0 } else { 1.0 });
    qr.q() * RMatrix::from_diagonal(&signs)
}

fn standard_encoder(c: &ExperimentConfig, n_qudits: usize, scrambler: ScramblerKind, stream_base: u64, initial: Option<Vec<usize>>) -> Result<Encoder> {
    let mut spec = EncoderSpec::standard(n_qudits, generators(c)?, c.ports.clone(), scrambler, c.master_seed, stream_base)?;
    if let Some(digits) = initial {
        spec.initial_digits = digits;
        spec.validate()?;
    }
    Ok(Encoder::new(spec)?)
}

pub fn isometry(c: &ExperimentConfig) -> Result<ResultRecord> {
    let n_qudits = c.n_values[0];
    require(c.seeds >= 1, || "isometry needs at least one seed".into())?;
    let gens = generators(c)?;
    let grid = product_grid(&c.grid, c.n_params);
    let streams: Vec<u64> = (0..c.seeds).map(|t| stream_of(c, &[n_qudits as u64, t as u64])).collect();
    let reports = par_trials(c.seeds, |t| {
        let enc = standard_encoder(c, n_qudits, ScramblerKind::Haar, streams[t], None)?;
        Ok(isometry_report(&enc, &grid)?)
    })?;

    let rot_streams: Vec<u64> = (0..c.rotations).map(|k| stream_of(c, &[n_qudits as u64, k as u64, 1])).collect();
    let checks = par_trials(c.rotations, |k| {
        let enc = standard_encoder(c, n_qudits, ScramblerKind::Haar, streams[k % c.seeds], None)?;
        let r = random_orthogonal(c.n_params, &mut rng(c, rot_streams[k]));
        let random = reparameterize_check(&enc, &c.theta, &r)?;
        let quarter = if c.n_params == 2 { Some(reparameterize_check(&enc, &c.theta, &rotation(PI / 4.0))?) } else { None };
        Ok((random, quarter))
    })?;

    let mut rec = ResultRecord::new(c);
    let mut table = Table::new("", &["trial", "stream", "f_estimate", "f_in_convention", "anisotropy", "drift", "anisotropy_ratio", "drift_ratio"]);
    for (t, rep) in reports.iter().enumerate() {
        table.push(vec![
            t.to_string(),
            streams[t].to_string(),
            num(rep.f_estimate),
            num(rep.f_in(c.convention)),
            num(rep.anisotropy),
            num(rep.drift),
            num(rep.anisotropy_ratio()),
            num(rep.drift_ratio()),
        ]);
    }
    let mut rot = Table::new("rotations", &["index", "stream", "encoder_trial", "chain_rule_residual", "quarter_turn_shift", "quarter_turn_bound"]);
    let mut worst_residual: f64 = 0.0;
    let mut bound_holds = true;
    for (k, (random, quarter)) in checks.iter().enumerate() {
        worst_residual = worst_residual.max(random.residual);
        let (shift, bound) = match quarter {
            Some(q) => {
                worst_residual = worst_residual.max(q.residual);
                let bound = 2.0 * q.original.anisotropic_part();
                bound_holds &= q.shift <= bound + 1e-12;
                (num(q.shift), num(bound))
            }
            None => (String::new(), String::new()),
        };
        rot.push(vec![k.to_string(), rot_streams[k].to_string(), (k % c.seeds).to_string(), num(random.residual), shift, bound]);
    }
    rec.tables.extend([table, rot]);

    let med = |f: fn(&IsometryReport) -> f64| median(&reports.iter().map(f).collect::<Vec<_>>());
    let (aniso, drift, f) = (med(|r| r.anisotropy), med(|r| r.drift), med(|r| r.f_estimate));
    let ideal = mean_uniform_variance(&gens);
    rec.stat("grid_points", grid.len());
    rec.stat("median_anisotropy", num(aniso));
    rec.stat("median_drift", num(drift));
    rec.stat("median_f", num(f));
    rec.stat(&format!("median_f_{}", c.convention.name()), num(f * c.convention.scale()));
    rec.stat("ideal_f", num(ideal));
    rec.stat("decoupling_scale", num(reports[0].scale));
    rec.stat("max_chain_rule_residual", num(worst_residual));
    rec.checks.push(Check::at_most("anisotropy", aniso, c.thresholds.anisotropy));
    rec.checks.push(Check::at_most("drift", drift, c.thresholds.drift));
    rec.checks.push(Check::at_most("fisher_value", (f - ideal).abs(), c.thresholds.fisher_value));
    if c.rotations > 0 {
        rec.checks.push(Check::at_most("chain_rule", worst_residual, c.thresholds.chain_rule));
    }
    if c.n_params == 2 && c.rotations > 0 {
        rec.checks.push(Check::new("quarter_turn_bound", bound_holds, "||g' - g||_max <= 2 * anisotropic part at 45 degrees".into()));
    }
    Ok(rec)
}

pub fn isometry_low_t(c: &ExperimentConfig) -> Result<ResultRecord> {
    let n_qudits = c.n_values[0];
    require(c.seeds >= 1, || "isometry-lowT needs at least one seed".into())?;
    let site_spectra = c.site_spectra.expand(c.d, n_qudits)?;
    let digits = c.initial.digits(c.d, n_qudits)?;
    let d_e = mes_shell(&build_hamiltonian(site_spectra.clone())?, c.e_tot, c.delta_e)?.d_e();
    let shell = ScramblerKind::Shell(ShellSpec { site_spectra, e_tot: c.e_tot, delta_e: c.delta_e });
    let grid = product_grid(&c.grid, c.n_params);
    let streams: Vec<u64> = (0..c.seeds).map(|t| stream_of(c, &[n_qudits as u64, t as u64])).collect();
    let pairs = par_trials(c.seeds, |t| {
        let narrow = standard_encoder(c, n_qudits, shell.clone(), streams[t], Some(digits.clone()))?;
        let full = standard_encoder(c, n_qudits, ScramblerKind::Haar, streams[t], Some(digits.clone()))?;
        Ok((isometry_report(&narrow, &grid)?, isometry_report(&full, &grid)?))
    })?;

    let mut rec = ResultRecord::new(c);
    let mut table = Table::new("", &["trial", "stream", "shell_anisotropy", "haar_anisotropy", "shell_f", "haar_f", "shell_drift", "haar_drift", "shell_larger"]);
    let mut wins = 0;
    for (t, (narrow, full)) in pairs.iter().enumerate() {
        let larger = narrow.anisotropy > full.anisotropy;
        wins += larger as usize;
        table.push(vec![
            t.to_string(),
            streams[t].to_string(),
            num(narrow.anisotropy),
            num(full.anisotropy),
            num(narrow.f_estimate),
            num(full.f_estimate),
            num(narrow.drift),
            num(full.drift),
            larger.to_string(),
        ]);
    }
    rec.tables.push(table);
    let fraction = wins as f64 / c.seeds as f64;
    rec.stat("shell_dimension", d_e);
    rec.stat("pairs", c.seeds);
    rec.stat("shell_larger", wins);
    rec.stat("fraction_shell_larger", num(fraction));
    rec.stat("median_shell_anisotropy", num(median(&pairs.iter().map(|p| p.0.anisotropy).collect::<Vec<_>>())));
    rec.stat("median_haar_anisotropy", num(median(&pairs.iter().map(|p| p.1.anisotropy).collect::<Vec<_>>())));
    rec.checks.push(Check::at_most("narrow_shell", d_e as f64, 16.0));
    rec.checks.push(Check::at_least("isometry_broken", fraction, c.thresholds.lowt_fraction));
    Ok(rec)
}
