use capsule_lab::config::{ExperimentConfig, ExperimentKind};
use capsule_lab::presets::list_presets;
use capsule_lab::report::resolve_out_dir;
use capsule_lab::values::{GeneratorSpec, SiteSpectra};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

const EXIT_SCIENCE: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "capsule", version, about = "Seeded numerical experiments on scrambled qudit encodings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo vs exact Haar moments.
    HaarMoments(RunArgs),
    /// Mean one-qudit purity of Haar states.
    PagePurity(RunArgs),
    /// Cross-Schmidt overlap decay with register size.
    CrossOverlap(RunArgs),
    /// Component extraction and Gram residual.
    Components(RunArgs),
    /// Overlap factorization against the capsule product.
    Factorization(RunArgs),
    /// Fisher metric two-route identity and finite differences.
    Fisher(RunArgs),
    /// Rotational isometry of the Fisher metric.
    Isometry(RunArgs),
    /// Isometry breaking under narrow energy-shell scrambling.
    #[command(name = "isometry-lowT")]
    IsometryLowT(RunArgs),
    /// Shell-random reduced states against Gibbs states.
    Typicality(RunArgs),
    /// List generator presets, experiments and default tolerances.
    Presets,
    /// Print the default config of an experiment.
    Config {
        /// Experiment name, e.g. `isometry`.
        kind: String,
    },
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Config file; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads. Results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (default: $CAPSULE_OUT_DIR, else ./capsule-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Local dimension d.
    #[arg(long)]
    d: Option<usize>,
    /// Register sizes, comma separated.
    #[arg(long = "N", value_delimiter = ',')]
    n_qudits: Option<Vec<usize>>,
    /// Number of encoded parameters.
    #[arg(long = "n")]
    n_params: Option<usize>,
    /// Unitary dimensions for haar-moments, comma separated.
    #[arg(long, value_delimiter = ',')]
    dim: Option<Vec<usize>>,
    /// Monte-Carlo samples per point.
    #[arg(long)]
    samples: Option<usize>,
    /// Seeds (trials) per point.
    #[arg(long)]
    seeds: Option<usize>,
    /// Grid points per parameter axis, at θ = kπ/g.
    #[arg(long)]
    grid: Option<usize>,
    /// Number of input states, or subsystem size for typicality.
    #[arg(long)]
    m: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Presets => {
            print!("{}", list_presets());
            return ExitCode::SUCCESS;
        }
        Command::Config { kind } => {
            return match kind.parse::<ExperimentKind>() {
                Ok(k) => {
                    print!("{}", ExperimentConfig::defaults(k).emit());
                    ExitCode::SUCCESS
                }
                Err(e) => usage_error(&e.0),
            };
        }
        Command::HaarMoments(a) => (ExperimentKind::HaarMoments, a),
        Command::PagePurity(a) => (ExperimentKind::PagePurity, a),
        Command::CrossOverlap(a) => (ExperimentKind::CrossOverlap, a),
        Command::Components(a) => (ExperimentKind::Components, a),
        Command::Factorization(a) => (ExperimentKind::Factorization, a),
        Command::Fisher(a) => (ExperimentKind::Fisher, a),
        Command::Isometry(a) => (ExperimentKind::Isometry, a),
        Command::IsometryLowT(a) => (ExperimentKind::IsometryLowT, a),
        Command::Typicality(a) => (ExperimentKind::Typicality, a),
    };
    let config = match build_config(kind, &args) {
        Ok(c) => c,
        Err(msg) => return usage_error(&msg),
    };
    let threads = args.threads.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let out = resolve_out_dir(args.out.as_deref());

    let start = Instant::now();
    let record = match capsule_lab::run(&config, threads) {
        Ok(r) => r,
        Err(e) => return usage_error(&e.to_string()),
    };
    let elapsed = start.elapsed();
    let paths = match record.write(&config, &out) {
        Ok(p) => p,
        Err(e) => return usage_error(&format!("cannot write to {}: {e}", out.display())),
    };
    print!("{}", record.summary_text());
    println!("wall_clock_seconds = {:.3}", elapsed.as_secs_f64());
    for p in paths {
        println!("wrote {}", p.display());
    }
    if record.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_SCIENCE)
    }
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn build_config(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, String> {
    let mut c = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let c = ExperimentConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            if c.kind != kind {
                return Err(format!("{} configures {}, not {kind}", path.display(), c.kind));
            }
            c
        }
        None => ExperimentConfig::defaults(kind),
    };
    apply_overrides(&mut c, args);
    c.validate().map_err(|e| e.0)?;
    Ok(c)
}

fn apply_overrides(c: &mut ExperimentConfig, args: &RunArgs) {
    if let Some(seed) = args.seed {
        c.master_seed = seed;
    }
    if let Some(d) = args.d {
        c.d = d;
        // Presets of the wrong dimension fall back to the evenly spaced clock spectrum.
        for g in c.generators.iter_mut().filter(|g| g.dim() != d) {
            *g = GeneratorSpec::Clock(d);
        }
        if matches!(&c.site_spectra, SiteSpectra::Uniform(w) if w.len() != d) {
            c.site_spectra = SiteSpectra::Uniform((0..d).map(|s| s as f64).collect());
        }
    }
    if let Some(ns) = &args.n_qudits {
        c.n_values = ns.clone();
    }
    if let Some(n) = args.n_params {
        c.n_params = n;
        c.generators = cycle(&c.generators, n);
        c.ports = cycle(&c.ports, n);
        c.theta.resize(n, 0.0);
        c.theta_prime = cycle(&c.theta_prime, n);
    }
    if let Some(dims) = &args.dim {
        c.dims = dims.clone();
    }
    if let Some(s) = args.samples {
        c.samples = s;
    }
    if let Some(s) = args.seeds {
        c.seeds = s;
    }
    if let Some(g) = args.grid {
        c.grid = (0..g).map(|k| std::f64::consts::PI * k as f64 / g as f64).collect();
    }
    if let Some(m) = args.m {
        c.m = m;
    }
}

/// `items` repeated to length `n`; empty input stays empty.
fn cycle<T: Clone>(items: &[T], n: usize) -> Vec<T> {
    items.iter().cycle().take(n).cloned().collect()
}
