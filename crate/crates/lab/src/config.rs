//! Experiment configuration: a flat `key = value` text format with
//! `[section]` headers and `#` comments.
//!
//! Every field has a kind-specific default, and [`ExperimentConfig::emit`]
//! writes all of them, so an emitted file fully pins a run and
//! `parse(emit(c)) == c`.

use crate::values::{self, GeneratorSpec, InitialState, SiteSpectra, ValueError};
use capsule_core::fisher::Convention;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentKind {
    HaarMoments,
    PagePurity,
    CrossOverlap,
    Components,
    Factorization,
    Fisher,
    Isometry,
    IsometryLowT,
    Typicality,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::HaarMoments,
        ExperimentKind::PagePurity,
        ExperimentKind::CrossOverlap,
        ExperimentKind::Components,
        ExperimentKind::Factorization,
        ExperimentKind::Fisher,
        ExperimentKind::Isometry,
        ExperimentKind::IsometryLowT,
        ExperimentKind::Typicality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::HaarMoments => "haar-moments",
            ExperimentKind::PagePurity => "page-purity",
            ExperimentKind::CrossOverlap => "cross-overlap",
            ExperimentKind::Components => "components",
            ExperimentKind::Factorization => "factorization",
            ExperimentKind::Fisher => "fisher",
            ExperimentKind::Isometry => "isometry",
            ExperimentKind::IsometryLowT => "isometry-lowT",
            ExperimentKind::Typicality => "typicality",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::HaarMoments => "Monte-Carlo vs exact second and fourth Haar moments",
            ExperimentKind::PagePurity => "mean one-qudit purity of Haar states and Schmidt-weight uniformity",
            ExperimentKind::CrossOverlap => "decay of cross-Schmidt overlaps with register size",
            ExperimentKind::Components => "component extraction and Gram residual of the encoded state",
            ExperimentKind::Factorization => "overlap factorization against the decoupled-capsule product",
            ExperimentKind::Fisher => "two-route Fisher metric identity and finite-difference derivative check",
            ExperimentKind::Isometry => "rotational isometry of the Fisher metric over a parameter grid",
            ExperimentKind::IsometryLowT => "isometry breaking under narrow energy-shell scrambling, paired seeds",
            ExperimentKind::Typicality => "shell-random reduced states vs Gibbs states and the variance bound",
        }
    }

    /// Label mixed into every stream path of this experiment.
    pub fn stream_label(self) -> u64 {
        self as u64 + 1
    }
}

impl FromStr for ExperimentKind {
    type Err = ValueError;

    fn from_str(s: &str) -> Result<Self, ValueError> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| ValueError(format!("unknown experiment '{}'", s.trim())))
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScramblerChoice {
    Identity,
    Haar,
    Shell,
}

impl FromStr for ScramblerChoice {
    type Err = ValueError;

    fn from_str(s: &str) -> Result<Self, ValueError> {
        match s.trim() {
            "identity" => Ok(ScramblerChoice::Identity),
            "haar" => Ok(ScramblerChoice::Haar),
            "shell" => Ok(ScramblerChoice::Shell),
            other => Err(ValueError(format!("unknown scrambler '{other}' (identity, haar, shell)"))),
        }
    }
}

impl fmt::Display for ScramblerChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScramblerChoice::Identity => "identity",
            ScramblerChoice::Haar => "haar",
            ScramblerChoice::Shell => "shell",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentSuite {
    Second,
    Fourth,
    All,
}

impl FromStr for MomentSuite {
    type Err = ValueError;

    fn from_str(s: &str) -> Result<Self, ValueError> {
        match s.trim() {
            "second" => Ok(MomentSuite::Second),
            "fourth" => Ok(MomentSuite::Fourth),
            "all" => Ok(MomentSuite::All),
            other => Err(ValueError(format!("unknown moment suite '{other}' (second, fourth, all)"))),
        }
    }
}

impl fmt::Display for MomentSuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MomentSuite::Second => "second",
            MomentSuite::Fourth => "fourth",
            MomentSuite::All => "all",
        })
    }
}

/// Pass/fail thresholds. Each experiment reads only the ones it checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    /// Standard errors allowed in Monte-Carlo comparisons.
    pub sigma: f64,
    /// Standard errors allowed for the mean purity.
    pub purity_sigma: f64,
    /// Gram residual must stay below this constant times d^{−(N−3)/2}.
    pub decoupling_constant: f64,
    pub overlap_ratio_min: f64,
    pub overlap_ratio_max: f64,
    pub uniformity: f64,
    pub uniformity_fraction: f64,
    pub factorization: f64,
    pub two_route: f64,
    pub chain_rule: f64,
    pub fd_relative: f64,
    /// Allowed |observed order − 2| of the finite-difference error.
    pub fd_order_tolerance: f64,
    pub anisotropy: f64,
    pub drift: f64,
    pub fisher_value: f64,
    pub lowt_fraction: f64,
    pub trace_distance: f64,
    pub trace_fraction: f64,
    /// Variance bound allowance: bound · (1 + variance_slack/√samples).
    pub variance_slack: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            sigma: 5.0,
            purity_sigma: 3.0,
            decoupling_constant: 5.0,
            overlap_ratio_min: 0.3,
            overlap_ratio_max: 0.8,
            uniformity: 0.15,
            uniformity_fraction: 0.95,
            factorization: 0.1,
            two_route: 1e-10,
            chain_rule: 1e-8,
            fd_relative: 1e-6,
            fd_order_tolerance: 0.5,
            anisotropy: 0.2,
            drift: 0.2,
            fisher_value: 0.2,
            lowt_fraction: 0.8,
            trace_distance: 0.15,
            trace_fraction: 0.9,
            variance_slack: 5.0,
        }
    }
}

/// Numerical tolerances consumed by component extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceOverrides {
    pub cond_warn: f64,
    pub cond_fail: f64,
    pub spectral_gap: f64,
}

impl Default for ToleranceOverrides {
    fn default() -> Self {
        let t = capsule_core::tolerance::Tolerances::DEFAULT;
        Self { cond_warn: t.cond_warn, cond_fail: t.cond_fail, spectral_gap: t.spectral_gap }
    }
}

impl ToleranceOverrides {
    pub fn to_core(&self) -> capsule_core::tolerance::Tolerances {
        capsule_core::tolerance::Tolerances {
            cond_warn: self.cond_warn,
            cond_fail: self.cond_fail,
            spectral_gap: self.spectral_gap,
            ..capsule_core::tolerance::Tolerances::DEFAULT
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub master_seed: u64,

    /// Local dimension.
    pub d: usize,
    /// Register sizes scanned; single-size experiments use the first entry.
    pub n_values: Vec<usize>,
    /// Unitary dimensions for the moment experiment.
    pub dims: Vec<usize>,

    pub n_params: usize,
    pub generators: Vec<GeneratorSpec>,
    /// 1-based write ports, one per parameter.
    pub ports: Vec<usize>,
    pub scrambler: ScramblerChoice,
    pub initial: InitialState,

    pub site_spectra: SiteSpectra,
    pub e_tot: f64,
    pub delta_e: f64,
    /// Kernel width for the density-of-states smoothing, in mean level spacings.
    pub kernel_width: f64,

    /// Monte-Carlo samples per point.
    pub samples: usize,
    /// Independent seeds (trials) per point.
    pub seeds: usize,
    /// Number of |λ⟩ states, or subsystem size for typicality.
    pub m: usize,
    pub moment_suite: MomentSuite,
    /// Per-axis θ values of the isometry grid.
    pub grid: Vec<f64>,
    pub theta: Vec<f64>,
    pub theta_prime: Vec<f64>,
    /// Finite-difference steps; the first is the accuracy check, the last
    /// two give the observed order.
    pub fd_steps: Vec<f64>,
    pub fd_specs: usize,
    pub rotations: usize,
    pub convention: Convention,

    pub tolerances: ToleranceOverrides,
    pub thresholds: Thresholds,
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        use std::f64::consts::PI;
        let mut c = Self {
            kind,
            master_seed: 1,
            d: 2,
            n_values: vec![8],
            dims: vec![8],
            n_params: 2,
            generators: vec![GeneratorSpec::PauliZ; 2],
            ports: vec![1, 1],
            scrambler: ScramblerChoice::Haar,
            initial: InitialState::Zeros,
            site_spectra: SiteSpectra::Uniform(vec![0.0, 1.0]),
            e_tot: 2.0,
            delta_e: 0.0,
            kernel_width: 2.0,
            samples: 10_000,
            seeds: 50,
            m: 2,
            moment_suite: MomentSuite::All,
            grid: vec![0.0, PI / 3.0, 2.0 * PI / 3.0],
            theta: vec![0.0, 0.0],
            theta_prime: vec![0.3, 0.7],
            fd_steps: vec![1e-5, 1e-3, 1e-4],
            fd_specs: 20,
            rotations: 10,
            convention: Convention::Bare,
            tolerances: ToleranceOverrides::default(),
            thresholds: Thresholds::default(),
        };
        match kind {
            ExperimentKind::HaarMoments => {
                c.dims = vec![2, 4, 8];
                c.samples = 100_000;
            }
            ExperimentKind::PagePurity => {
                c.n_values = vec![3, 8];
                c.samples = 10_000;
                c.seeds = 100;
            }
            ExperimentKind::CrossOverlap => {
                c.n_values = vec![4, 6, 8, 10];
                c.seeds = 50;
                c.m = 2;
            }
            ExperimentKind::Components => {
                c.n_values = vec![6, 8, 10];
                c.seeds = 20;
            }
            ExperimentKind::Factorization => {
                c.n_values = vec![5, 6, 7, 8];
                // 50 seeds leave the N = 7 and N = 8 medians within sampling noise of each other.
                c.seeds = 400;
            }
            ExperimentKind::Fisher => {
                c.n_values = vec![6];
                c.seeds = 50;
                c.n_params = 3;
                c.generators = vec![GeneratorSpec::PauliZ; 3];
                c.ports = vec![1, 2, 3];
                c.theta = vec![0.0; 3];
                c.theta_prime = vec![0.3, 0.7, 0.0];
            }
            ExperimentKind::Isometry => {
                c.seeds = 50;
            }
            ExperimentKind::IsometryLowT => {
                c.seeds = 50;
                c.e_tot = 1.0;
                c.initial = InitialState::LastExcited;
            }
            ExperimentKind::Typicality => {
                c.m = 1;
                c.samples = 100;
                c.e_tot = 2.0;
            }
        }
        c
    }

    /// Canonical text form with every field explicit.
    pub fn emit(&self) -> String {
        let list = |v: &[String]| v.join(", ");
        let floats = |v: &[f64]| list(&v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>());
        let ints = |v: &[usize]| list(&v.iter().map(|x| x.to_string()).collect::<Vec<_>>());
        let t = &self.thresholds;
        let tol = &self.tolerances;
        let mut s = String::new();
        let mut section = |name: &str, entries: Vec<(&str, String)>| {
            s.push_str(&format!("[{name}]\n"));
            for (k, v) in entries {
                s.push_str(&format!("{k} = {v}\n"));
            }
            s.push('\n');
        };
        section("experiment", vec![("kind", self.kind.to_string()), ("master_seed", self.master_seed.to_string())]);
        section(
            "system",
            vec![("d", self.d.to_string()), ("n_values", ints(&self.n_values)), ("dims", ints(&self.dims))],
        );
        section(
            "encoder",
            vec![
                ("n_params", self.n_params.to_string()),
                ("generators", list(&self.generators.iter().map(|g| g.to_string()).collect::<Vec<_>>())),
                ("ports", ints(&self.ports)),
                ("scrambler", self.scrambler.to_string()),
                ("initial", self.initial.to_string()),
            ],
        );
        section(
            "shell",
            vec![
                ("site_spectra", self.site_spectra.to_string()),
                ("e_tot", format!("{:?}", self.e_tot)),
                ("delta_e", format!("{:?}", self.delta_e)),
                ("kernel_width", format!("{:?}", self.kernel_width)),
            ],
        );
        section(
            "sampling",
            vec![
                ("samples", self.samples.to_string()),
                ("seeds", self.seeds.to_string()),
                ("m", self.m.to_string()),
                ("moment_suite", self.moment_suite.to_string()),
                ("grid", floats(&self.grid)),
                ("theta", floats(&self.theta)),
                ("theta_prime", floats(&self.theta_prime)),
                ("fd_steps", floats(&self.fd_steps)),
                ("fd_specs", self.fd_specs.to_string()),
                ("rotations", self.rotations.to_string()),
                ("convention", self.convention.name().to_string()),
            ],
        );
        section(
            "tolerances",
            vec![
                ("cond_warn", format!("{:?}", tol.cond_warn)),
                ("cond_fail", format!("{:?}", tol.cond_fail)),
                ("spectral_gap", format!("{:?}", tol.spectral_gap)),
            ],
        );
        section(
            "thresholds",
            vec![
                ("sigma", format!("{:?}", t.sigma)),
                ("purity_sigma", format!("{:?}", t.purity_sigma)),
                ("decoupling_constant", format!("{:?}", t.decoupling_constant)),
                ("overlap_ratio_min", format!("{:?}", t.overlap_ratio_min)),
                ("overlap_ratio_max", format!("{:?}", t.overlap_ratio_max)),
                ("uniformity", format!("{:?}", t.uniformity)),
                ("uniformity_fraction", format!("{:?}", t.uniformity_fraction)),
                ("factorization", format!("{:?}", t.factorization)),
                ("two_route", format!("{:?}", t.two_route)),
                ("chain_rule", format!("{:?}", t.chain_rule)),
                ("fd_relative", format!("{:?}", t.fd_relative)),
                ("fd_order_tolerance", format!("{:?}", t.fd_order_tolerance)),
                ("anisotropy", format!("{:?}", t.anisotropy)),
                ("drift", format!("{:?}", t.drift)),
                ("fisher_value", format!("{:?}", t.fisher_value)),
                ("lowt_fraction", format!("{:?}", t.lowt_fraction)),
                ("trace_distance", format!("{:?}", t.trace_distance)),
                ("trace_fraction", format!("{:?}", t.trace_fraction)),
                ("variance_slack", format!("{:?}", t.variance_slack)),
            ],
        );
        s.pop();
        s
    }

    /// SHA-256 of the emitted text, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.emit().as_bytes()))
    }

    /// Parses a config file. `[experiment] kind` selects the defaults that
    /// the remaining keys override.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let entries = scan(text)?;
        let kind = match entries.get(&("experiment".to_string(), "kind".to_string())) {
            Some((line, value)) => value.parse::<ExperimentKind>().map_err(|e| ConfigError::at(*line, "experiment.kind", e.0))?,
            None => return Err(ConfigError { line: 0, field: Some("experiment.kind".into()), message: "missing required key".into() }),
        };
        let mut c = Self::defaults(kind);
        for ((section, key), (line, value)) in &entries {
            let field = format!("{section}.{key}");
            c.set(section, key, value).map_err(|e| ConfigError::at(*line, &field, e.0))?;
        }
        c.validate().map_err(|e| ConfigError { line: 0, field: None, message: e.0 })?;
        Ok(c)
    }

    /// Sets one field from its text form; `section.key` as in the file.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<(), ValueError> {
        use values::{parse_angle, parse_f64, parse_list, parse_u64, parse_usize};
        let pos_f64 = |v: &str| -> Result<f64, ValueError> {
            let x = parse_f64(v)?;
            if x > 0.0 {
                Ok(x)
            } else {
                Err(ValueError(format!("'{v}' must be positive")))
            }
        };
        let t = &mut self.thresholds;
        match (section, key) {
            ("experiment", "kind") => {
                let k: ExperimentKind = value.parse()?;
                if k != self.kind {
                    return Err(ValueError(format!("kind cannot change from {} to {k}", self.kind)));
                }
            }
            ("experiment", "master_seed") => self.master_seed = parse_u64(value)?,
            ("system", "d") => self.d = parse_usize(value)?,
            ("system", "n_values") => self.n_values = parse_list(value, parse_usize)?,
            ("system", "dims") => self.dims = parse_list(value, parse_usize)?,
            ("encoder", "n_params") => self.n_params = parse_usize(value)?,
            ("encoder", "generators") => self.generators = parse_list(value, |s| s.parse())?,
            ("encoder", "ports") => self.ports = parse_list(value, parse_usize)?,
            ("encoder", "scrambler") => self.scrambler = value.parse()?,
            ("encoder", "initial") => self.initial = value.parse()?,
            ("shell", "site_spectra") => self.site_spectra = value.parse()?,
            ("shell", "e_tot") => self.e_tot = parse_f64(value)?,
            ("shell", "delta_e") => self.delta_e = parse_f64(value)?,
            ("shell", "kernel_width") => self.kernel_width = pos_f64(value)?,
            ("sampling", "samples") => self.samples = parse_usize(value)?,
            ("sampling", "seeds") => self.seeds = parse_usize(value)?,
            ("sampling", "m") => self.m = parse_usize(value)?,
            ("sampling", "moment_suite") => self.moment_suite = value.parse()?,
            ("sampling", "grid") => self.grid = parse_list(value, parse_angle)?,
            ("sampling", "theta") => self.theta = parse_list(value, parse_angle)?,
            ("sampling", "theta_prime") => self.theta_prime = parse_list(value, parse_angle)?,
            ("sampling", "fd_steps") => self.fd_steps = parse_list(value, pos_f64)?,
            ("sampling", "fd_specs") => self.fd_specs = parse_usize(value)?,
            ("sampling", "rotations") => self.rotations = parse_usize(value)?,
            ("sampling", "convention") => self.convention = value.trim().parse().map_err(|e: capsule_core::error::Error| ValueError(e.to_string()))?,
            ("tolerances", "cond_warn") => self.tolerances.cond_warn = pos_f64(value)?,
            ("tolerances", "cond_fail") => self.tolerances.cond_fail = pos_f64(value)?,
            ("tolerances", "spectral_gap") => self.tolerances.spectral_gap = pos_f64(value)?,
            ("thresholds", "sigma") => t.sigma = pos_f64(value)?,
            ("thresholds", "purity_sigma") => t.purity_sigma = pos_f64(value)?,
            ("thresholds", "decoupling_constant") => t.decoupling_constant = pos_f64(value)?,
            ("thresholds", "overlap_ratio_min") => t.overlap_ratio_min = parse_f64(value)?,
            ("thresholds", "overlap_ratio_max") => t.overlap_ratio_max = parse_f64(value)?,
            ("thresholds", "uniformity") => t.uniformity = pos_f64(value)?,
            ("thresholds", "uniformity_fraction") => t.uniformity_fraction = parse_f64(value)?,
            ("thresholds", "factorization") => t.factorization = pos_f64(value)?,
            ("thresholds", "two_route") => t.two_route = pos_f64(value)?,
            ("thresholds", "chain_rule") => t.chain_rule = pos_f64(value)?,
            ("thresholds", "fd_relative") => t.fd_relative = pos_f64(value)?,
            ("thresholds", "fd_order_tolerance") => t.fd_order_tolerance = pos_f64(value)?,
            ("thresholds", "anisotropy") => t.anisotropy = pos_f64(value)?,
            ("thresholds", "drift") => t.drift = pos_f64(value)?,
            ("thresholds", "fisher_value") => t.fisher_value = pos_f64(value)?,
            ("thresholds", "lowt_fraction") => t.lowt_fraction = parse_f64(value)?,
            ("thresholds", "trace_distance") => t.trace_distance = pos_f64(value)?,
            ("thresholds", "trace_fraction") => t.trace_fraction = parse_f64(value)?,
            ("thresholds", "variance_slack") => t.variance_slack = parse_f64(value)?,
            _ => return Err(ValueError("unknown key".into())),
        }
        Ok(())
    }

    /// Cross-field checks that do not depend on running anything.
    pub fn validate(&self) -> Result<(), ValueError> {
        let fail = |m: String| Err(ValueError(m));
        if self.d < 2 {
            return fail(format!("d must be at least 2, got {}", self.d));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return fail("n_values must list positive register sizes".into());
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return fail("dims must list positive dimensions".into());
        }
        if self.generators.len() != self.n_params {
            return fail(format!("{} generators given for n_params = {}", self.generators.len(), self.n_params));
        }
        if self.ports.len() != self.n_params {
            return fail(format!("{} ports given for n_params = {}", self.ports.len(), self.n_params));
        }
        if let Some(g) = self.generators.iter().find(|g| g.dim() != self.d) {
            return fail(format!("generator {g} has dimension {} but d = {}", g.dim(), self.d));
        }
        for g in &self.generators {
            g.build()?;
        }
        if self.theta.len() != self.n_params || self.theta_prime.len() != self.n_params {
            return fail(format!("theta and theta_prime need {} entries", self.n_params));
        }
        if self.grid.is_empty() {
            return fail("grid must be nonempty".into());
        }
        if self.fd_steps.len() != 3 {
            return fail("fd_steps needs exactly 3 steps: check step, coarse, fine".into());
        }
        if self.tolerances.cond_warn > self.tolerances.cond_fail {
            return fail("cond_warn must not exceed cond_fail".into());
        }
        if self.delta_e < 0.0 {
            return fail("delta_e must be non-negative".into());
        }
        Ok(())
    }
}

/// A config problem with its 1-based line (0 when not tied to a line) and field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub field: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, field: &str, message: impl Into<String>) -> Self {
        Self { line, field: Some(field.to_string()), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: ", self.line)?;
        }
        if let Some(field) = &self.field {
            write!(f, "{field}: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

const SECTIONS: [&str; 7] = ["experiment", "system", "encoder", "shell", "sampling", "tolerances", "thresholds"];

type Entries = BTreeMap<(String, String), (usize, String)>;

/// Tokenizes lines into (section, key) → (line, value), rejecting unknown
/// sections, keys outside a section, and duplicates.
fn scan(text: &str) -> Result<Entries, ConfigError> {
    let mut entries = Entries::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError { line, field: None, message: format!("malformed section header '{content}'") })?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError { line, field: None, message: format!("unknown section [{name}]") });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError { line, field: None, message: format!("expected 'key = value', got '{content}'") })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError { line, field: None, message: "empty key".into() });
        }
        let Some(sec) = &section else {
            return Err(ConfigError::at(line, key, "key appears before any [section] header"));
        };
        let slot = (sec.clone(), key.to_string());
        if let Some((first, _)) = entries.get(&slot) {
            return Err(ConfigError::at(line, &format!("{sec}.{key}"), format!("duplicate key (first set on line {first})")));
        }
        entries.insert(slot, (line, value.trim().to_string()));
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_for_every_kind() {
        for kind in ExperimentKind::ALL {
            let c = ExperimentConfig::defaults(kind);
            c.validate().unwrap();
            let text = c.emit();
            let back = ExperimentConfig::parse(&text).unwrap();
            assert_eq!(back, c, "{kind}");
            assert_eq!(back.emit(), text);
        }
    }

    #[test]
    fn overrides_and_comments() {
        let text = "# run\n[experiment]\nkind = isometry  # inline\nmaster_seed = 7\n\n[sampling]\ngrid = 0, pi/2\nseeds=3\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.master_seed, 7);
        assert_eq!(c.seeds, 3);
        assert_eq!(c.grid, vec![0.0, std::f64::consts::FRAC_PI_2]);
    }

    #[test]
    fn diagnostics_carry_line_and_field() {
        let e = ExperimentConfig::parse("[experiment]\nkind = fisher\n[system]\nd = two\n").unwrap_err();
        assert_eq!(e.line, 4);
        assert_eq!(e.field.as_deref(), Some("system.d"));
        let e = ExperimentConfig::parse("[experiment]\nkind = fisher\n[bogus]\n").unwrap_err();
        assert_eq!(e.line, 3);
        let e = ExperimentConfig::parse("[experiment]\nkind = fisher\nkind = fisher\n").unwrap_err();
        assert!(e.message.contains("duplicate"));
        let e = ExperimentConfig::parse("d = 2\n").unwrap_err();
        assert_eq!(e.line, 1);
        let e = ExperimentConfig::parse("[system]\nd = 2\n").unwrap_err();
        assert_eq!(e.field.as_deref(), Some("experiment.kind"));
        let e = ExperimentConfig::parse("[experiment]\nkind = fisher\n[encoder]\nn_params = 1\n").unwrap_err();
        assert_eq!(e.line, 0);
        let e = ExperimentConfig::parse("[experiment]\nkind = fisher\n[system]\nwhat = 1\n").unwrap_err();
        assert_eq!(e.to_string(), "line 4: system.what: unknown key");
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::defaults(ExperimentKind::Typicality);
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.master_seed = 2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
