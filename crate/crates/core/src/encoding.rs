//! Write operations, the scrambled multi-parameter encoding circuit, and the
//! diagnostics built on it: component extraction, Gram residuals, overlap
//! factorization and cross-Schmidt overlaps.
//!
//! The circuit is
//!
//! ```text
//! |Ψ(θ)⟩ = U_n W_n(θ_n) ⋯ U_1 W_1(θ_1) U_0 |0⋯0⟩,   W_j(θ) = exp(iθσ_j) at port p_j
//! ```
//!
//! generalized to an arbitrary list of write steps, each of which may or may
//! not be followed by a scrambler.

use crate::error::{Error, Result};
use crate::haar::{haar_columns, haar_sample, haar_state_vector, SubspaceScrambler, UnitaryMatrix};
use crate::linalg::{self, CMatrix, CVector, I, ZERO};
use crate::rng::{stream_index, RngStream};
use crate::state::{PureState, QuditSpace};
use crate::stats::{linear_fit, median};
use crate::tolerance::{Tolerances, DEFAULT_MAX_STATE_DIM};
use crate::typicality::{build_hamiltonian, mes_shell};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Hermitian traceless d×d generator σ = Σ_s w_s |s⟩⟨s|, eigenvalues descending.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    sigma: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl Generator {
    pub fn new(sigma: CMatrix) -> Result<Self> {
        let d = sigma.nrows();
        if d < 2 {
            return Err(Error::LocalDimension(d));
        }
        if sigma.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: sigma.ncols() });
        }
        let tol = Tolerances::DEFAULT;
        let deviation = linalg::hermitian_deviation(&sigma);
        if deviation > tol.hermitian {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = sigma.trace().re;
        if trace.abs() > tol.traceless {
            return Err(Error::NotTraceless { trace });
        }
        let (eigenvalues, eigenvectors) = linalg::hermitian_eigen(&sigma);
        let gen = Self { sigma, eigenvalues, eigenvectors };
        gen.check_eigenpairs()?;
        Ok(gen)
    }

    /// diag(w) in the computational basis; `w` is sorted descending first.
    pub fn from_spectrum(w: &[f64]) -> Result<Self> {
        let mut w = w.to_vec();
        w.sort_by(|a, b| b.total_cmp(a));
        let d = w.len();
        if d < 2 {
            return Err(Error::LocalDimension(d));
        }
        let trace: f64 = w.iter().sum();
        if trace.abs() > Tolerances::DEFAULT.traceless {
            return Err(Error::NotTraceless { trace });
        }
        let sigma = CMatrix::from_fn(d, d, |i, j| if i == j { Complex64::new(w[i], 0.0) } else { ZERO });
        Ok(Self { sigma, eigenvalues: w, eigenvectors: CMatrix::identity(d, d) })
    }

    /// d = 2, σ = diag(+1, −1).
    pub fn pauli_z_like() -> Self {
        Self::from_spectrum(&[1.0, -1.0]).expect("valid preset")
    }

    /// Evenly spaced spectrum w_s = (d−1)/2 − s, diagonal.
    pub fn clock(d: usize) -> Result<Self> {
        let w: Vec<f64> = (0..d).map(|s| (d as f64 - 1.0) / 2.0 - s as f64).collect();
        Self::from_spectrum(&w)
    }

    /// u σ u† with eigenvectors u|s⟩.
    pub fn conjugated(&self, u: &CMatrix) -> Result<Self> {
        let d = self.d();
        if u.nrows() != d || u.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: u.nrows() });
        }
        let deviation = linalg::unitarity_deviation(u);
        if deviation > Tolerances::DEFAULT.local_unitary {
            return Err(Error::NotUnitary { deviation });
        }
        let sigma = u * &self.sigma * u.adjoint();
        let sigma = (&sigma + sigma.adjoint()) * Complex64::new(0.5, 0.0);
        let gen = Self { sigma, eigenvalues: self.eigenvalues.clone(), eigenvectors: u * &self.eigenvectors };
        gen.check_eigenpairs()?;
        Ok(gen)
    }

    fn check_eigenpairs(&self) -> Result<()> {
        for (s, &w) in self.eigenvalues.iter().enumerate() {
            let v = self.eigenvectors.column(s);
            let residual = (&self.sigma * v - v * Complex64::new(w, 0.0)).iter().fold(0.0, |acc: f64, z| acc.max(z.norm()));
            if residual > Tolerances::DEFAULT.isometry {
                return Err(Error::InvalidArgument(format!("eigenpair {s} residual {residual:.3e}")));
            }
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn sigma(&self) -> &CMatrix {
        &self.sigma
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns |s⟩ in eigenvalue order.
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    /// Smallest gap between eigenvalues.
    pub fn min_gap(&self) -> f64 {
        self.eigenvalues.windows(2).map(|w| (w[0] - w[1]).abs()).fold(f64::INFINITY, f64::min)
    }

    /// Variance of the eigenvalues under the uniform distribution; the
    /// Fisher metric of the ideal capsule in the normalization used here.
    pub fn uniform_variance(&self) -> f64 {
        let d = self.d() as f64;
        let mean = self.eigenvalues.iter().sum::<f64>() / d;
        self.eigenvalues.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / d
    }

    /// exp(iθσ) = Σ_s e^{iw_sθ}|s⟩⟨s|.
    pub fn write_matrix(&self, theta: f64) -> CMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (s, &w) in self.eigenvalues.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, w * theta);
            scaled.column_mut(s).iter_mut().for_each(|z| *z *= phase);
        }
        scaled * v.adjoint()
    }

    /// iσ, the derivative of exp(iθσ) at θ = 0.
    pub fn derivative_matrix(&self) -> CMatrix {
        &self.sigma * I
    }
}

/// exp(iθσ) placed at one port of an N-qudit register.
#[derive(Debug, Clone, PartialEq)]
pub struct WriteOperator {
    pub port: usize,
    pub matrix: CMatrix,
}

pub fn write_operator(gen: &Generator, theta: f64, port: usize, n_qudits: usize) -> Result<WriteOperator> {
    if port == 0 || port > n_qudits {
        return Err(Error::InvalidPort { port, n_qudits });
    }
    Ok(WriteOperator { port, matrix: gen.write_matrix(theta) })
}

impl WriteOperator {
    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        state.apply_local(&self.matrix, self.port)
    }
}

/// (1/√d) Σ_s e^{iw_sθ}|s⟩ on a single qudit.
pub fn qic_reference(gen: &Generator, theta: f64) -> PureState {
    let d = gen.d();
    let coeffs = CVector::from_iterator(
        d,
        gen.eigenvalues().iter().map(|&w| Complex64::from_polar(1.0 / (d as f64).sqrt(), w * theta)),
    );
    let amp = gen.eigenvectors() * coeffs;
    let space = QuditSpace::new(d, 1).expect("d >= 2 checked by Generator");
    PureState::from_parts_unchecked(space, amp)
}

/// |⟨φ(θ)|φ(θ′)⟩| = |(1/d) Σ_s e^{iw_s(θ′−θ)}|.
pub fn capsule_overlap(gen: &Generator, delta: f64) -> f64 {
    let d = gen.d() as f64;
    gen.eigenvalues()
        .iter()
        .map(|&w| Complex64::from_polar(1.0 / d, w * delta))
        .sum::<Complex64>()
        .norm()
}

/// One write operation W(θ_param) at `port`, optionally followed by the next
/// independent scrambler.
#[derive(Debug, Clone, PartialEq)]
pub struct WriteStep {
    /// 0-based parameter index.
    pub param: usize,
    /// 1-based port.
    pub port: usize,
    pub generator: Generator,
    pub scramble_after: bool,
}

/// Energy shell that restricts the scramblers: H = Σ_p diag(site_spectra[p]).
#[derive(Debug, Clone, PartialEq)]
pub struct ShellSpec {
    pub site_spectra: Vec<Vec<f64>>,
    pub e_tot: f64,
    pub delta_e: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScramblerKind {
    Identity,
    Haar,
    /// Haar on the shell subspace, identity on its complement.
    Shell(ShellSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderSpec {
    pub d: usize,
    pub n_qudits: usize,
    pub n_params: usize,
    pub steps: Vec<WriteStep>,
    pub scrambler: ScramblerKind,
    pub master_seed: u64,
    /// Stream index of U_0, U_1, … in order; one more than the number of
    /// scrambling steps.
    pub scrambler_streams: Vec<u64>,
    pub initial_digits: Vec<usize>,
    pub max_dim: usize,
}

impl EncoderSpec {
    /// One write per parameter, each followed by a scrambler, with scrambler
    /// k on stream `stream_index([stream_base, k])`.
    pub fn standard(
        n_qudits: usize,
        generators: Vec<Generator>,
        ports: Vec<usize>,
        scrambler: ScramblerKind,
        master_seed: u64,
        stream_base: u64,
    ) -> Result<Self> {
        if generators.len() != ports.len() {
            return Err(Error::DimensionMismatch { expected: generators.len(), got: ports.len() });
        }
        let d = match generators.first() {
            Some(g) => g.d(),
            None => return Err(Error::InvalidArgument("standard layout needs at least one generator; use EncoderSpec::new for n = 0".into())),
        };
        let n = generators.len();
        let steps = generators
            .into_iter()
            .zip(ports)
            .enumerate()
            .map(|(param, (generator, port))| WriteStep { param, port, generator, scramble_after: true })
            .collect();
        let spec = Self {
            d,
            n_qudits,
            n_params: n,
            steps,
            scrambler,
            master_seed,
            scrambler_streams: default_streams(stream_base, n + 1),
            initial_digits: vec![0; n_qudits],
            max_dim: DEFAULT_MAX_STATE_DIM,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// No write steps: the encoded state is U_0|0⋯0⟩.
    pub fn empty(d: usize, n_qudits: usize, scrambler: ScramblerKind, master_seed: u64, stream_base: u64) -> Result<Self> {
        let spec = Self {
            d,
            n_qudits,
            n_params: 0,
            steps: Vec::new(),
            scrambler,
            master_seed,
            scrambler_streams: default_streams(stream_base, 1),
            initial_digits: vec![0; n_qudits],
            max_dim: DEFAULT_MAX_STATE_DIM,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn scrambler_count(&self) -> usize {
        1 + self.steps.iter().filter(|s| s.scramble_after).count()
    }

    pub fn space(&self) -> Result<QuditSpace> {
        QuditSpace::with_cap(self.d, self.n_qudits, self.max_dim)
    }

    /// Every parameter is written by exactly one step.
    pub fn is_standard(&self) -> bool {
        (0..self.n_params).all(|j| self.steps.iter().filter(|s| s.param == j).count() == 1)
    }

    /// The unique step writing parameter `j` in a standard layout.
    pub fn step_of_param(&self, j: usize) -> Option<&WriteStep> {
        let mut it = self.steps.iter().filter(|s| s.param == j);
        match (it.next(), it.next()) {
            (Some(s), None) => Some(s),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let space = self.space()?;
        for step in &self.steps {
            space.check_port(step.port)?;
            if step.generator.d() != self.d {
                return Err(Error::DimensionMismatch { expected: self.d, got: step.generator.d() });
            }
            if step.param >= self.n_params {
                return Err(Error::IndexOutOfRange { index: step.param, dim: self.n_params });
            }
        }
        for j in 0..self.n_params {
            if !self.steps.iter().any(|s| s.param == j) {
                return Err(Error::InvalidArgument(format!("parameter {j} is never written")));
            }
        }
        if self.scrambler_streams.len() != self.scrambler_count() {
            return Err(Error::DimensionMismatch { expected: self.scrambler_count(), got: self.scrambler_streams.len() });
        }
        for (a, &sa) in self.scrambler_streams.iter().enumerate() {
            if let Some(b) = self.scrambler_streams[a + 1..].iter().position(|&sb| sb == sa) {
                return Err(Error::StreamCollision { first: a, second: a + 1 + b, stream: sa });
            }
        }
        space.index_of(&self.initial_digits)?;
        if let ScramblerKind::Shell(shell) = &self.scrambler {
            if shell.site_spectra.len() != self.n_qudits {
                return Err(Error::DimensionMismatch { expected: self.n_qudits, got: shell.site_spectra.len() });
            }
            for s in &shell.site_spectra {
                if s.len() != self.d {
                    return Err(Error::DimensionMismatch { expected: self.d, got: s.len() });
                }
            }
        }
        Ok(())
    }
}

/// `stream_index([base, k])` for k in 0..count.
pub fn default_streams(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|k| stream_index(&[base, k])).collect()
}

#[derive(Debug, Clone)]
enum Scrambler {
    Identity,
    Dense(UnitaryMatrix),
    Subspace(SubspaceScrambler),
}

impl Scrambler {
    fn apply(&self, v: &CVector) -> CVector {
        match self {
            Scrambler::Identity => v.clone(),
            Scrambler::Dense(u) => u.matrix() * v,
            Scrambler::Subspace(s) => s.apply(v),
        }
    }
}

/// An [`EncoderSpec`] with its scramblers sampled once.
#[derive(Debug, Clone)]
pub struct Encoder {
    spec: EncoderSpec,
    space: QuditSpace,
    initial: CVector,
    /// U_1, U_2, … in step order.
    scramblers: Vec<Scrambler>,
    /// For each step, the index into `scramblers` applied after it.
    after_step: Vec<Option<usize>>,
}

impl Encoder {
    pub fn new(spec: EncoderSpec) -> Result<Self> {
        spec.validate()?;
        let space = spec.space()?;
        let dim = space.dim();
        let basis_index = space.index_of(&spec.initial_digits)?;
        let stream = |k: usize| RngStream::new(spec.master_seed, spec.scrambler_streams[k]);

        let shell_basis = match &spec.scrambler {
            ScramblerKind::Shell(s) => {
                let h = build_hamiltonian(s.site_spectra.clone())?;
                let shell = mes_shell(&h, s.e_tot, s.delta_e)?;
                if !shell.contains(basis_index) {
                    return Err(Error::OutsideShell { index: basis_index });
                }
                Some(shell.isometry())
            }
            _ => None,
        };

        let mut basis_vec = CVector::zeros(dim);
        basis_vec[basis_index] = linalg::ONE;
        let initial = match &spec.scrambler {
            ScramblerKind::Identity => basis_vec,
            ScramblerKind::Haar => haar_columns(dim, basis_index + 1, &mut stream(0))?.column(basis_index).into_owned(),
            ScramblerKind::Shell(_) => {
                let b = shell_basis.clone().expect("shell basis built above");
                SubspaceScrambler::sample(b, &mut stream(0))?.apply(&basis_vec)
            }
        };

        let mut scramblers = Vec::new();
        let mut after_step = Vec::with_capacity(spec.steps.len());
        for step in &spec.steps {
            if !step.scramble_after {
                after_step.push(None);
                continue;
            }
            let k = scramblers.len() + 1;
            let s = match &spec.scrambler {
                ScramblerKind::Identity => Scrambler::Identity,
                ScramblerKind::Haar => Scrambler::Dense(haar_sample(dim, &mut stream(k))?),
                ScramblerKind::Shell(_) => {
                    let b = shell_basis.clone().expect("shell basis built above");
                    Scrambler::Subspace(SubspaceScrambler::sample(b, &mut stream(k))?)
                }
            };
            after_step.push(Some(scramblers.len()));
            scramblers.push(s);
        }
        Ok(Self { spec, space, initial, scramblers, after_step })
    }

    pub fn spec(&self) -> &EncoderSpec {
        &self.spec
    }

    pub fn space(&self) -> QuditSpace {
        self.space
    }

    /// U_0|digits⟩.
    pub fn initial_state(&self) -> PureState {
        PureState::from_parts_unchecked(self.space, self.initial.clone())
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.spec.n_params {
            return Err(Error::DimensionMismatch { expected: self.spec.n_params, got: theta.len() });
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("parameters must be finite".into()));
        }
        Ok(())
    }

    fn write_matrices(&self, theta: &[f64]) -> Vec<CMatrix> {
        self.spec.steps.iter().map(|s| s.generator.write_matrix(theta[s.param])).collect()
    }

    fn write(&self, k: usize, v: &mut CVector, writes: &[CMatrix]) {
        let step = &self.spec.steps[k];
        linalg::apply_site_in_place(v.as_mut_slice(), self.space.d(), self.space.n_qudits(), step.port, &writes[k]);
    }

    /// Everything after the write of step k: its scrambler, then later steps.
    fn continue_after_write(&self, k: usize, mut v: CVector, writes: &[CMatrix]) -> CVector {
        if let Some(s) = self.after_step[k] {
            v = self.scramblers[s].apply(&v);
        }
        for j in k + 1..self.spec.steps.len() {
            self.write(j, &mut v, writes);
            if let Some(s) = self.after_step[j] {
                v = self.scramblers[s].apply(&v);
            }
        }
        v
    }

    pub fn encode(&self, theta: &[f64]) -> Result<PureState> {
        self.check_theta(theta)?;
        let writes = self.write_matrices(theta);
        let mut v = self.initial.clone();
        for k in 0..self.spec.steps.len() {
            self.write(k, &mut v, &writes);
            if let Some(s) = self.after_step[k] {
                v = self.scramblers[s].apply(&v);
            }
        }
        Ok(PureState::from_parts_unchecked(self.space, v))
    }

    /// |Ψ(θ)⟩ and the exact derivatives ∂_j|Ψ(θ)⟩, obtained by inserting iσ
    /// after each write of parameter j and propagating through the rest of
    /// the circuit.
    pub fn tangent(&self, theta: &[f64]) -> Result<(PureState, Vec<CVector>)> {
        self.check_theta(theta)?;
        let writes = self.write_matrices(theta);
        let (d, n) = (self.space.d(), self.space.n_qudits());
        let mut derivs = vec![CVector::zeros(self.space.dim()); self.spec.n_params];
        let mut v = self.initial.clone();
        for (k, step) in self.spec.steps.iter().enumerate() {
            self.write(k, &mut v, &writes);
            let mut inserted = v.clone();
            linalg::apply_site_in_place(inserted.as_mut_slice(), d, n, step.port, &step.generator.derivative_matrix());
            derivs[step.param] += self.continue_after_write(k, inserted, &writes);
            if let Some(s) = self.after_step[k] {
                v = self.scramblers[s].apply(&v);
            }
        }
        Ok((PureState::from_parts_unchecked(self.space, v), derivs))
    }

    /// Derivatives along the rows of `directions` (one row per direction,
    /// one column per parameter): each step's insertion is weighted by the
    /// row entry of its parameter before it is propagated.
    pub fn tangent_along(&self, theta: &[f64], directions: &nalgebra::DMatrix<f64>) -> Result<(PureState, Vec<CVector>)> {
        self.check_theta(theta)?;
        if directions.ncols() != self.spec.n_params {
            return Err(Error::DimensionMismatch { expected: self.spec.n_params, got: directions.ncols() });
        }
        let writes = self.write_matrices(theta);
        let (d, n) = (self.space.d(), self.space.n_qudits());
        let mut derivs = vec![CVector::zeros(self.space.dim()); directions.nrows()];
        let mut v = self.initial.clone();
        for (k, step) in self.spec.steps.iter().enumerate() {
            self.write(k, &mut v, &writes);
            for (a, acc) in derivs.iter_mut().enumerate() {
                let weight = directions[(a, step.param)];
                if weight == 0.0 {
                    continue;
                }
                let op = step.generator.derivative_matrix() * Complex64::new(weight, 0.0);
                let mut inserted = v.clone();
                linalg::apply_site_in_place(inserted.as_mut_slice(), d, n, step.port, &op);
                *acc += self.continue_after_write(k, inserted, &writes);
            }
            if let Some(s) = self.after_step[k] {
                v = self.scramblers[s].apply(&v);
            }
        }
        Ok((PureState::from_parts_unchecked(self.space, v), derivs))
    }
}

/// Measured |⟨Ψ(θ)|Ψ(θ′)⟩| and the decoupled-capsule prediction
/// Π_j |(1/d)Σ_s e^{iw_s(θ′_j−θ_j)}|.
pub fn overlap_factorization(enc: &Encoder, theta: &[f64], theta_prime: &[f64]) -> Result<(f64, f64)> {
    let spec = enc.spec();
    if !spec.is_standard() {
        return Err(Error::InvalidArgument("overlap factorization needs one write step per parameter".into()));
    }
    let a = enc.encode(theta)?;
    let b = enc.encode(theta_prime)?;
    let measured = a.overlap(&b)?.norm();
    let predicted = spec
        .steps
        .iter()
        .map(|s| capsule_overlap(&s.generator, theta_prime[s.param] - theta[s.param]))
        .product();
    Ok((measured, predicted))
}

/// Default grid for one parameter: θ^(k) = 2πk/(d·Δw), k = 0..d−1, with
/// Δw = (w_max − w_min)/(d−1) the mean eigenvalue spacing. For an evenly
/// spaced spectrum the node matrix is then a scaled DFT matrix.
pub fn default_nodes(gen: &Generator) -> Vec<f64> {
    let d = gen.d();
    let w = gen.eigenvalues();
    let spacing = (w[0] - w[d - 1]) / (d as f64 - 1.0);
    (0..d).map(|k| 2.0 * PI * k as f64 / (d as f64 * spacing)).collect()
}

/// M_{ks} = e^{iw_sθ^(k)}
pub fn node_matrix(gen: &Generator, nodes: &[f64]) -> CMatrix {
    let w = gen.eigenvalues();
    CMatrix::from_fn(nodes.len(), w.len(), |k, s| Complex64::from_polar(1.0, w[s] * nodes[k]))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabel {
    /// Eigenvalue index s_j of each parameter's generator.
    pub s: Vec<usize>,
    /// Digit of qudit 1.
    pub s_bar: usize,
}

/// The vectors |φ(s_1⋯s_n s̄)⟩ of the expansion
/// |Ψ(θ)⟩ = (1/√d)^{n+1} Σ e^{iΣ_j w_{s_j}θ_j} |s̄⟩_1 |φ(s_1⋯s_n s̄)⟩_{2⋯N},
/// stored as d^{N−1}-dimensional vectors already rescaled by √d^{n+1}.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSet {
    pub d: usize,
    pub n_qudits: usize,
    /// Eigenvalues of each parameter's generator.
    pub frequencies: Vec<Vec<f64>>,
    pub labels: Vec<ComponentLabel>,
    pub vectors: Vec<CVector>,
    /// Condition number of each parameter's node matrix.
    pub node_conditions: Vec<f64>,
}

impl ComponentSet {
    /// n = 0: the d slices of a state by the digit of qudit 1, rescaled by √d.
    pub fn from_state(state: &PureState) -> Self {
        let d = state.d();
        let scale = Complex64::new((d as f64).sqrt(), 0.0);
        let vectors = (0..d).map(|a| state.slice_first(a) * scale).collect();
        let labels = (0..d).map(|s_bar| ComponentLabel { s: Vec::new(), s_bar }).collect();
        Self { d, n_qudits: state.n_qudits(), frequencies: Vec::new(), labels, vectors, node_conditions: Vec::new() }
    }

    pub fn n_params(&self) -> usize {
        self.frequencies.len()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn gram(&self) -> CMatrix {
        let k = self.vectors.len();
        let mut g = CMatrix::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let z = self.vectors[a].dotc(&self.vectors[b]);
                g[(a, b)] = z;
                g[(b, a)] = z.conj();
            }
        }
        g
    }

    pub fn norms(&self) -> Vec<f64> {
        self.vectors.iter().map(|v| v.norm()).collect()
    }

    /// Evaluates the expansion at θ; reproduces the encoded state exactly
    /// when the set came from [`extract_components`].
    pub fn reassemble(&self, theta: &[f64]) -> Result<CVector> {
        if theta.len() != self.n_params() {
            return Err(Error::DimensionMismatch { expected: self.n_params(), got: theta.len() });
        }
        let rest = self.d.pow(self.n_qudits as u32 - 1);
        let norm = (self.d as f64).powf(-((self.n_params() + 1) as f64) / 2.0);
        let mut out = CVector::zeros(self.d * rest);
        for (label, v) in self.labels.iter().zip(&self.vectors) {
            let phase: f64 = label.s.iter().enumerate().map(|(j, &s)| self.frequencies[j][s] * theta[j]).sum();
            let c = Complex64::from_polar(norm, phase);
            let mut block = out.rows_mut(label.s_bar * rest, rest);
            block.axpy(c, v, linalg::ONE);
        }
        Ok(out)
    }
}

/// max |(G − I)_{ab}| over the component Gram matrix.
pub fn gram_residual(cs: &ComponentSet) -> f64 {
    let g = cs.gram();
    let mut dev: f64 = 0.0;
    for a in 0..g.nrows() {
        for b in 0..g.ncols() {
            let target = if a == b { linalg::ONE } else { ZERO };
            dev = dev.max((g[(a, b)] - target).norm());
        }
    }
    dev
}

/// Recovers the component vectors by evaluating the encoder on a d^n product
/// grid and inverting the node matrix of each parameter axis in turn.
///
/// `nodes` of `None` uses [`default_nodes`] for every parameter.
pub fn extract_components(enc: &Encoder, nodes: Option<&[Vec<f64>]>) -> Result<ComponentSet> {
    extract_components_with(enc, nodes, &Tolerances::DEFAULT)
}

/// [`extract_components`] with explicit spectral-gap and conditioning limits.
pub fn extract_components_with(enc: &Encoder, nodes: Option<&[Vec<f64>]>, tol: &Tolerances) -> Result<ComponentSet> {
    let spec = enc.spec();
    let (d, n_qudits, n) = (spec.d, spec.n_qudits, spec.n_params);
    if n == 0 {
        return Ok(ComponentSet::from_state(&enc.encode(&[])?));
    }
    if n + 2 > n_qudits {
        return Err(Error::TooFewQudits { needed: n + 2, got: n_qudits });
    }
    if !spec.is_standard() {
        return Err(Error::InvalidArgument("component extraction needs one write step per parameter".into()));
    }
    let gens: Vec<&Generator> = (0..n).map(|j| &spec.step_of_param(j).expect("standard layout").generator).collect();
    let grids: Vec<Vec<f64>> = match nodes {
        Some(g) => {
            if g.len() != n || g.iter().any(|v| v.len() != d) {
                return Err(Error::InvalidArgument(format!("need {n} node lists of length {d}")));
            }
            g.to_vec()
        }
        None => gens.iter().map(|g| default_nodes(g)).collect(),
    };
    let mut inverses = Vec::with_capacity(n);
    let mut node_conditions = Vec::with_capacity(n);
    for (gen, grid) in gens.iter().zip(&grids) {
        if gen.min_gap() <= tol.spectral_gap {
            return Err(Error::DegenerateSpectrum(gen.eigenvalues().to_vec()));
        }
        let m = node_matrix(gen, grid);
        let cond = linalg::condition_number(&m);
        if !(cond <= tol.cond_fail) {
            return Err(Error::IllConditioned { cond });
        }
        if cond > tol.cond_warn {
            log::warn!("node matrix condition number {cond:.3e} exceeds {:.0e}", tol.cond_warn);
        }
        node_conditions.push(cond);
        inverses.push(m.try_inverse().ok_or(Error::IllConditioned { cond })?);
    }

    let points = d.pow(n as u32);
    let mut table: Vec<CVector> = Vec::with_capacity(points);
    for flat in 0..points {
        let theta: Vec<f64> = (0..n).map(|j| grids[j][(flat / d.pow((n - 1 - j) as u32)) % d]).collect();
        table.push(enc.encode(&theta)?.into_amplitudes());
    }
    for (j, inv) in inverses.iter().enumerate() {
        let stride = d.pow((n - 1 - j) as u32);
        let block = stride * d;
        let mut next = vec![CVector::zeros(0); points];
        for base in (0..points).step_by(block) {
            for off in 0..stride {
                let start = base + off;
                for s in 0..d {
                    let mut acc = CVector::zeros(table[start].len());
                    for k in 0..d {
                        acc.axpy(inv[(s, k)], &table[start + k * stride], linalg::ONE);
                    }
                    next[start + s * stride] = acc;
                }
            }
        }
        table = next;
    }

    let rest = d.pow(n_qudits as u32 - 1);
    let scale = Complex64::new((d as f64).powf((n + 1) as f64 / 2.0), 0.0);
    let mut labels = Vec::with_capacity(points * d);
    let mut vectors = Vec::with_capacity(points * d);
    for (flat, x) in table.iter().enumerate() {
        let s: Vec<usize> = (0..n).map(|j| (flat / d.pow((n - 1 - j) as u32)) % d).collect();
        for s_bar in 0..d {
            labels.push(ComponentLabel { s: s.clone(), s_bar });
            vectors.push(x.rows(s_bar * rest, rest) * scale);
        }
    }
    Ok(ComponentSet {
        d,
        n_qudits,
        frequencies: gens.iter().map(|g| g.eigenvalues().to_vec()).collect(),
        labels,
        vectors,
        node_conditions,
    })
}

/// |⟨ψ(a′,λ′)|ψ(a,λ)⟩| between right Schmidt vectors of U|λ⟩ and U|λ′⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapEntry {
    pub lambda: usize,
    pub a: usize,
    pub lambda_prime: usize,
    pub a_prime: usize,
    pub magnitude: f64,
}

/// All pairs (λ, a) ≤ (λ′, a′) for one Haar unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapTable {
    pub d: usize,
    pub n_qudits: usize,
    pub m: usize,
    pub entries: Vec<OverlapEntry>,
}

impl OverlapTable {
    /// Magnitudes with λ′ ≠ λ.
    pub fn cross(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().filter(|e| e.lambda != e.lambda_prime).map(|e| e.magnitude)
    }

    pub fn cross_median(&self) -> f64 {
        median(&self.cross().collect::<Vec<_>>())
    }

    /// Largest deviation of same-λ entries from δ_{aa′}.
    pub fn same_lambda_deviation(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.lambda == e.lambda_prime)
            .map(|e| (e.magnitude - if e.a == e.a_prime { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }
}

/// Schmidt-decomposes U|λ⟩ for λ = 0..m−1 (one Haar U, only its first m
/// columns drawn) and tabulates right-vector overlaps.
pub fn cross_schmidt_overlaps(d: usize, n_qudits: usize, m: usize, stream: &mut RngStream) -> Result<OverlapTable> {
    let space = QuditSpace::new(d, n_qudits)?;
    if n_qudits < 2 {
        return Err(Error::TooFewQudits { needed: 2, got: n_qudits });
    }
    if m == 0 || m > space.dim() {
        return Err(Error::InvalidArgument(format!("need 1 <= m <= {}, got {m}", space.dim())));
    }
    let cols = haar_columns(space.dim(), m, stream)?;
    let mut rights = Vec::with_capacity(m);
    for lambda in 0..m {
        let psi = PureState::from_parts_unchecked(space, cols.column(lambda).into_owned());
        rights.push(psi.schmidt()?.right);
    }
    let mut entries = Vec::new();
    for lambda in 0..m {
        for a in 0..d {
            for lambda_prime in lambda..m {
                let first_a = if lambda_prime == lambda { a } else { 0 };
                for a_prime in first_a..d {
                    let magnitude = rights[lambda_prime].column(a_prime).dotc(&rights[lambda].column(a)).norm();
                    entries.push(OverlapEntry { lambda, a, lambda_prime, a_prime, magnitude });
                }
            }
        }
    }
    Ok(OverlapTable { d, n_qudits, m, entries })
}

/// Cross-overlap medians pooled over seeds, one level per N.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapLevel {
    pub n_qudits: usize,
    pub median: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapStats {
    pub levels: Vec<OverlapLevel>,
    /// Least-squares slope of ln(median) against N.
    pub fitted_exponent: f64,
}

impl OverlapStats {
    /// Groups tables by N (ascending) and pools their cross magnitudes.
    pub fn from_tables(tables: &[OverlapTable]) -> Self {
        let mut ns: Vec<usize> = tables.iter().map(|t| t.n_qudits).collect();
        ns.sort_unstable();
        ns.dedup();
        let levels: Vec<OverlapLevel> = ns
            .iter()
            .map(|&n| {
                let pooled: Vec<f64> = tables.iter().filter(|t| t.n_qudits == n).flat_map(|t| t.cross()).collect();
                OverlapLevel { n_qudits: n, median: median(&pooled), samples: pooled.len() }
            })
            .collect();
        let fitted_exponent = if levels.len() >= 2 {
            let x: Vec<f64> = levels.iter().map(|l| l.n_qudits as f64).collect();
            let y: Vec<f64> = levels.iter().map(|l| l.median.ln()).collect();
            linear_fit(&x, &y).0
        } else {
            f64::NAN
        };
        Self { levels, fitted_exponent }
    }

    /// median(N_{k+1}) / median(N_k) for consecutive levels.
    pub fn ratios(&self) -> Vec<f64> {
        self.levels.windows(2).map(|w| w[1].median / w[0].median).collect()
    }
}

/// max_a |p(a) − 1/d| for the Schmidt weights of one Haar-random N-qudit state.
pub fn schmidt_uniformity(d: usize, n_qudits: usize, stream: &mut RngStream) -> Result<f64> {
    if n_qudits < 3 {
        return Err(Error::TooFewQudits { needed: 3, got: n_qudits });
    }
    Ok(haar_state(d, n_qudits, stream)?.schmidt()?.uniformity_deviation())
}

/// Tr ρ_1² for one Haar-random N-qudit state.
pub fn marginal_purity_sample(d: usize, n_qudits: usize, stream: &mut RngStream) -> Result<f64> {
    Ok(haar_state(d, n_qudits, stream)?.reduced_density(&[1])?.purity())
}

/// Haar average of Tr ρ_1²: (d + d^{N−1}) / (d^N + 1).
pub fn page_purity_average(d: usize, n_qudits: usize) -> f64 {
    let d = d as f64;
    let big = d.powi(n_qudits as i32);
    (d + big / d) / (big + 1.0)
}

fn haar_state(d: usize, n_qudits: usize, stream: &mut RngStream) -> Result<PureState> {
    let space = QuditSpace::new(d, n_qudits)?;
    let amp = haar_state_vector(space.dim(), stream)?;
    Ok(PureState::from_parts_unchecked(space, amp))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn haar_spec(n_qudits: usize, n: usize, seed: u64) -> EncoderSpec {
        EncoderSpec::standard(
            n_qudits,
            vec![Generator::pauli_z_like(); n],
            (1..=n).map(|p| p.min(n_qudits)).collect(),
            ScramblerKind::Haar,
            seed,
            0,
        )
        .unwrap()
    }

    #[test]
    fn generator_validation() {
        let x = CMatrix::from_row_slice(2, 2, &[ZERO, linalg::ONE, linalg::ONE, ZERO]);
        let g = Generator::new(x.clone()).unwrap();
        assert_eq!(g.eigenvalues(), &[1.0, -1.0]);
        let not_traceless = CMatrix::identity(2, 2);
        assert!(matches!(Generator::new(not_traceless), Err(Error::NotTraceless { .. })));
        let not_herm = CMatrix::from_row_slice(2, 2, &[ZERO, linalg::ONE, ZERO, ZERO]);
        assert!(matches!(Generator::new(not_herm), Err(Error::NotHermitian { .. })));
        let c = Generator::clock(3).unwrap();
        assert_eq!(c.eigenvalues(), &[1.0, 0.0, -1.0]);
        assert!((c.uniform_variance() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn write_operator_examples() {
        let g = Generator::pauli_z_like();
        assert!(linalg::max_abs(&(g.write_matrix(0.0) - CMatrix::identity(2, 2))) < 1e-15);
        let w = g.write_matrix(PI / 2.0);
        assert!((w[(0, 0)] - I).norm() < 1e-15 && (w[(1, 1)] + I).norm() < 1e-15);
        let (a, b) = (0.3, -1.1);
        let lhs = g.write_matrix(a) * g.write_matrix(b);
        assert!(linalg::max_abs(&(lhs - g.write_matrix(a + b))) < 1e-14);
        assert!(matches!(write_operator(&g, 0.1, 4, 3), Err(Error::InvalidPort { .. })));
    }

    #[test]
    fn capsule_reference_examples() {
        let g = Generator::pauli_z_like();
        let phi0 = qic_reference(&g, 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((phi0.amplitudes()[0].re - h).abs() < 1e-15 && (phi0.amplitudes()[1].re - h).abs() < 1e-15);
        for t in [0.2, 1.3, 2.9] {
            let ov = phi0.overlap(&qic_reference(&g, t)).unwrap();
            assert!((ov - Complex64::new(t.cos(), 0.0)).norm() < 1e-15);
            assert!((capsule_overlap(&g, t) - t.cos().abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_circuit_is_the_initial_state() {
        let spec = EncoderSpec::empty(2, 4, ScramblerKind::Haar, 5, 0).unwrap();
        let enc = Encoder::new(spec).unwrap();
        let psi = enc.encode(&[]).unwrap();
        let u0 = haar_sample(16, &mut RngStream::new(5, default_streams(0, 1)[0])).unwrap();
        assert!((psi.amplitudes() - u0.matrix().column(0)).norm() < 1e-14);
    }

    #[test]
    fn zero_angle_ignores_generator() {
        let mut a = haar_spec(4, 1, 7);
        let enc_a = Encoder::new(a.clone()).unwrap();
        a.steps[0].generator = Generator::from_spectrum(&[0.3, -0.3]).unwrap();
        let enc_b = Encoder::new(a).unwrap();
        assert_eq!(enc_a.encode(&[0.0]).unwrap(), enc_b.encode(&[0.0]).unwrap());
    }

    #[test]
    fn stream_collisions_are_rejected() {
        let mut spec = haar_spec(4, 2, 1);
        spec.scrambler_streams[2] = spec.scrambler_streams[0];
        assert!(matches!(spec.validate(), Err(Error::StreamCollision { first: 0, second: 2, .. })));
    }

    #[test]
    fn overlap_factorization_examples() {
        let enc = Encoder::new(haar_spec(6, 2, 3)).unwrap();
        let (m, p) = overlap_factorization(&enc, &[0.4, 0.1], &[0.4, 0.1]).unwrap();
        assert!((m - 1.0).abs() < 1e-12 && (p - 1.0).abs() < 1e-15);
        let (_, p) = overlap_factorization(&enc, &[0.0, 0.0], &[PI / 2.0, 0.9]).unwrap();
        assert!(p < 1e-15);
    }

    #[test]
    fn extraction_round_trip() {
        let enc = Encoder::new(haar_spec(5, 2, 11)).unwrap();
        let cs = extract_components(&enc, None).unwrap();
        assert_eq!(cs.len(), 8);
        assert!(cs.node_conditions.iter().all(|&c| (c - 1.0).abs() < 1e-12));
        for theta in [[0.37, -1.2], [2.0, 0.05]] {
            let direct = enc.encode(&theta).unwrap();
            let rebuilt = cs.reassemble(&theta).unwrap();
            assert!((direct.amplitudes() - rebuilt).norm() < 1e-10);
        }
    }

    #[test]
    fn extraction_rejects_degenerate_spectra_and_small_registers() {
        let g = Generator::from_spectrum(&[1.0, 0.0, 0.0, -1.0]).unwrap();
        let spec = EncoderSpec::standard(4, vec![g], vec![1], ScramblerKind::Identity, 0, 0).unwrap();
        let enc = Encoder::new(spec).unwrap();
        assert!(matches!(extract_components(&enc, None), Err(Error::DegenerateSpectrum(_))));
        let enc = Encoder::new(haar_spec(3, 2, 0)).unwrap();
        assert!(matches!(extract_components(&enc, None), Err(Error::TooFewQudits { .. })));
        let enc = Encoder::new(haar_spec(5, 1, 0)).unwrap();
        assert!(matches!(extract_components(&enc, Some(&[vec![0.0, 0.0]])), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn maximally_entangled_slices_are_orthonormal() {
        let space = QuditSpace::new(3, 3).unwrap();
        let mut amp = CVector::zeros(27);
        for a in 0..3 {
            amp[space.index_of(&[a, a, 0]).unwrap()] = Complex64::new(1.0 / 3f64.sqrt(), 0.0);
        }
        let cs = ComponentSet::from_state(&PureState::from_amplitudes(space, amp).unwrap());
        assert!(gram_residual(&cs) < 1e-10);
    }

    #[test]
    fn cross_overlap_self_entries() {
        let t = cross_schmidt_overlaps(2, 6, 2, &mut RngStream::new(1, 2)).unwrap();
        assert!(t.same_lambda_deviation() < 1e-10);
        assert!(t.entries.iter().all(|e| (0.0..=1.0 + 1e-12).contains(&e.magnitude)));
        assert_eq!(t.cross().count(), 4);
    }

    #[test]
    fn page_average_closed_form() {
        assert!((page_purity_average(2, 3) - 2.0 / 3.0).abs() < 1e-15);
        assert!((page_purity_average(2, 8) - 130.0 / 257.0).abs() < 1e-15);
    }

    #[test]
    fn shell_scrambling_stays_in_shell() {
        let shell = ShellSpec { site_spectra: vec![vec![0.0, 1.0]; 4], e_tot: 1.0, delta_e: 0.0 };
        let mut spec = EncoderSpec::standard(4, vec![Generator::pauli_z_like(); 2], vec![1, 2], ScramblerKind::Shell(shell), 9, 0).unwrap();
        assert!(matches!(Encoder::new(spec.clone()), Err(Error::OutsideShell { index: 0 })));
        spec.initial_digits = vec![0, 0, 0, 1];
        let enc = Encoder::new(spec).unwrap();
        let psi = enc.encode(&[0.3, 0.8]).unwrap();
        let members = [1usize, 2, 4, 8];
        for (i, a) in psi.amplitudes().iter().enumerate() {
            if !members.contains(&i) {
                assert_eq!(*a, ZERO);
            }
        }
    }
}
