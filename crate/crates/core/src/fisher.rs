//! Quantum Fisher information metric of pure encoded states.
//!
//! The metric uses
//!
//! ```text
//! g_jk = ⟨Ψ| ½(L_j L_k + L_k L_j) |Ψ⟩,   L_j = |∂_jΨ⟩⟨Ψ| + |Ψ⟩⟨∂_jΨ|
//! ```
//!
//! without the conventional factor 2 in L_j, so g is a quarter of the usual
//! QFI. For pure states this reduces to
//! g_jk = Re⟨∂_jΨ|∂_kΨ⟩ + Re(⟨Ψ|∂_jΨ⟩⟨Ψ|∂_kΨ⟩).

use crate::encoding::Encoder;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::state::PureState;
use crate::tolerance::{decoupling_scale, Tolerances};
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type RMatrix = DMatrix<f64>;

/// A state and its (unnormalized) parameter derivatives at θ.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFrame {
    pub base: PureState,
    pub derivs: Vec<CVector>,
    pub theta: Vec<f64>,
}

impl TangentFrame {
    /// Checks dimensions and that ⟨Ψ|∂_jΨ⟩ is imaginary to 1e−8.
    pub fn new(base: PureState, derivs: Vec<CVector>, theta: Vec<f64>) -> Result<Self> {
        let dim = base.amplitudes().len();
        for dv in &derivs {
            if dv.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: dv.len() });
            }
            let a = base.amplitudes().dotc(dv);
            if a.re.abs() > 1e-8 {
                return Err(Error::InvalidArgument(format!("Re⟨Ψ|∂Ψ⟩ = {:.3e}; derivative does not preserve the norm", a.re)));
            }
        }
        Ok(Self { base, derivs, theta })
    }

    pub fn n_params(&self) -> usize {
        self.derivs.len()
    }

    /// Same frame for e^{iφ}|Ψ⟩.
    pub fn with_global_phase(&self, phi: f64) -> Self {
        let z = Complex64::from_polar(1.0, phi);
        let amp = self.base.amplitudes() * z;
        Self {
            base: PureState::normalized(self.base.space(), amp).expect("phase keeps the norm"),
            derivs: self.derivs.iter().map(|v| v * z).collect(),
            theta: self.theta.clone(),
        }
    }
}

/// Exact derivatives of the encoder output at θ.
pub fn derivative_states(enc: &Encoder, theta: &[f64]) -> Result<TangentFrame> {
    let (base, derivs) = enc.tangent(theta)?;
    TangentFrame::new(base, derivs, theta.to_vec())
}

/// Normalization of a reported metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// The factor-free SLD above.
    Bare,
    /// Conventional QFI, 4× the factor-free value.
    Standard,
}

impl Convention {
    pub fn scale(self) -> f64 {
        match self {
            Convention::Bare => 1.0,
            Convention::Standard => 4.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Convention::Bare => "bare",
            Convention::Standard => "standard",
        }
    }
}

impl std::str::FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bare" => Ok(Convention::Bare),
            "standard" => Ok(Convention::Standard),
            other => Err(Error::InvalidArgument(format!("unknown metric convention '{other}' (expected bare or standard)"))),
        }
    }
}

/// Real symmetric n×n metric in the factor-free normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMetric {
    pub g: RMatrix,
    pub theta: Vec<f64>,
}

impl FisherMetric {
    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn in_convention(&self, c: Convention) -> RMatrix {
        &self.g * c.scale()
    }

    pub fn asymmetry(&self) -> f64 {
        (&self.g - self.g.transpose()).amax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.n() == 0 {
            return 0.0;
        }
        let sym = (&self.g + self.g.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min()
    }

    /// Symmetric to 1e−10 and PSD down to the eigenvalue floor.
    pub fn validate(&self) -> Result<()> {
        let asym = self.asymmetry();
        if asym > 1e-10 {
            return Err(Error::InvalidArgument(format!("metric asymmetry {asym:.3e}")));
        }
        let min = self.min_eigenvalue();
        if min < -Tolerances::DEFAULT.psd_floor {
            return Err(Error::InvalidArgument(format!("metric has eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn trace_mean(&self) -> f64 {
        self.g.trace() / self.n() as f64
    }

    /// ‖g − (tr g / n)·I‖_max
    pub fn anisotropic_part(&self) -> f64 {
        let c = self.trace_mean();
        let n = self.n();
        (&self.g - RMatrix::identity(n, n) * c).amax()
    }

    pub fn max_diff(&self, other: &FisherMetric) -> f64 {
        (&self.g - &other.g).amax()
    }
}

/// g_jk = Re⟨∂_j|∂_k⟩ + Re(⟨Ψ|∂_j⟩⟨Ψ|∂_k⟩)
pub fn qfi_metric(frame: &TangentFrame) -> FisherMetric {
    let n = frame.n_params();
    let psi = frame.base.amplitudes();
    let a: Vec<Complex64> = frame.derivs.iter().map(|dv| psi.dotc(dv)).collect();
    let mut g = RMatrix::zeros(n, n);
    for j in 0..n {
        for k in j..n {
            let v = frame.derivs[j].dotc(&frame.derivs[k]).re + (a[j] * a[k]).re;
            g[(j, k)] = v;
            g[(k, j)] = v;
        }
    }
    FisherMetric { g, theta: frame.theta.clone() }
}

/// Builds each L_j as an explicit operator on span{Ψ, ∂_1Ψ, …, ∂_nΨ}
/// (dimension ≤ n+1) and evaluates ⟨Ψ|½{L_j, L_k}|Ψ⟩ there.
pub fn qfi_metric_direct(frame: &TangentFrame) -> FisherMetric {
    let n = frame.n_params();
    let psi = frame.base.amplitudes();
    let mut spanning = Vec::with_capacity(n + 1);
    spanning.push(psi.clone());
    spanning.extend(frame.derivs.iter().cloned());
    let basis = linalg::orthonormalize(&spanning, 1e-13);
    let r = basis.len();
    let coords = |v: &CVector| CVector::from_iterator(r, basis.iter().map(|q| q.dotc(v)));
    let c_psi = coords(psi);
    let sld: Vec<CMatrix> = frame
        .derivs
        .iter()
        .map(|dv| {
            let c_d = coords(dv);
            &c_d * c_psi.adjoint() + &c_psi * c_d.adjoint()
        })
        .collect();
    let mut g = RMatrix::zeros(n, n);
    for j in 0..n {
        for k in j..n {
            let anti = (&sld[j] * &sld[k] + &sld[k] * &sld[j]) * Complex64::new(0.5, 0.0);
            let v = c_psi.dotc(&(anti * &c_psi)).re;
            g[(j, k)] = v;
            g[(k, j)] = v;
        }
    }
    FisherMetric { g, theta: frame.theta.clone() }
}

/// max |(RᵀR − I)_{ij}|
pub fn orthogonality_deviation(r: &RMatrix) -> f64 {
    if r.nrows() != r.ncols() {
        return f64::INFINITY;
    }
    (r.transpose() * r - RMatrix::identity(r.nrows(), r.ncols())).amax()
}

/// 2×2 rotation by `angle`.
pub fn rotation(angle: f64) -> RMatrix {
    let (s, c) = angle.sin_cos();
    RMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Metric of θ′ = Rθ computed by the chain rule and directly.
#[derive(Debug, Clone, PartialEq)]
pub struct ReparamCheck {
    pub original: FisherMetric,
    /// R g Rᵀ
    pub chain_rule: FisherMetric,
    /// From derivative states ∂/∂θ′_a = Σ_j R_aj ∂/∂θ_j propagated through the circuit.
    pub direct: FisherMetric,
    /// ‖chain_rule − direct‖_max
    pub residual: f64,
    /// ‖g′ − g‖_max
    pub shift: f64,
}

pub fn reparameterize_check(enc: &Encoder, theta: &[f64], r: &RMatrix) -> Result<ReparamCheck> {
    let n = theta.len();
    if r.nrows() != n || r.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: r.nrows() });
    }
    let deviation = orthogonality_deviation(r);
    if deviation > Tolerances::DEFAULT.orthogonal {
        return Err(Error::NotOrthogonal { deviation });
    }
    let original = qfi_metric(&derivative_states(enc, theta)?);
    let chain_rule = FisherMetric { g: r * &original.g * r.transpose(), theta: (r * RMatrix::from_column_slice(n, 1, theta)).iter().cloned().collect() };
    let (base, derivs) = enc.tangent_along(theta, r)?;
    let direct = qfi_metric(&TangentFrame::new(base, derivs, chain_rule.theta.clone())?);
    let residual = chain_rule.max_diff(&direct);
    let shift = direct.max_diff(&original);
    Ok(ReparamCheck { original, chain_rule, direct, residual, shift })
}

/// Metric samples over a θ grid with isometry diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct IsometryReport {
    pub samples: Vec<FisherMetric>,
    /// Mean diagonal entry over the grid (factor-free normalization).
    pub f_estimate: f64,
    /// max_{j≠k, grid} |g_jk| / F
    pub anisotropy: f64,
    /// max_{j, grid} |g_jj − F| / F
    pub drift: f64,
    /// d^{−(N−3)/2}
    pub scale: f64,
}

impl IsometryReport {
    pub fn from_samples(samples: Vec<FisherMetric>, d: usize, n_qudits: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("isometry grid is empty".into()));
        }
        let n = samples[0].n();
        if n == 0 {
            return Err(Error::InvalidArgument("isometry report needs at least one parameter".into()));
        }
        let f_estimate = samples.iter().map(|m| m.g.trace()).sum::<f64>() / (n * samples.len()) as f64;
        let mut off: f64 = 0.0;
        let mut diag: f64 = 0.0;
        for m in &samples {
            for j in 0..n {
                diag = diag.max((m.g[(j, j)] - f_estimate).abs());
                for k in 0..n {
                    if j != k {
                        off = off.max(m.g[(j, k)].abs());
                    }
                }
            }
        }
        Ok(Self {
            samples,
            f_estimate,
            anisotropy: off / f_estimate,
            drift: diag / f_estimate,
            scale: decoupling_scale(d, n_qudits),
        })
    }

    pub fn f_in(&self, c: Convention) -> f64 {
        self.f_estimate * c.scale()
    }

    /// Anisotropy in units of d^{−(N−3)/2}.
    pub fn anisotropy_ratio(&self) -> f64 {
        self.anisotropy / self.scale
    }

    pub fn drift_ratio(&self) -> f64 {
        self.drift / self.scale
    }
}

pub fn isometry_report(enc: &Encoder, grid: &[Vec<f64>]) -> Result<IsometryReport> {
    let samples = grid
        .iter()
        .map(|theta| Ok(qfi_metric(&derivative_states(enc, theta)?)))
        .collect::<Result<Vec<_>>>()?;
    let spec = enc.spec();
    IsometryReport::from_samples(samples, spec.d, spec.n_qudits)
}

/// Full product grid of `values` over `n` parameters, first parameter slowest.
pub fn product_grid(values: &[f64], n: usize) -> Vec<Vec<f64>> {
    let mut grid = vec![Vec::new()];
    for _ in 0..n {
        grid = grid
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{qic_reference, EncoderSpec, Generator, ScramblerKind};
    use crate::linalg::I;
    use crate::state::QuditSpace;

    fn capsule_frame(gen: &Generator, theta: f64) -> TangentFrame {
        let phi = qic_reference(gen, theta);
        let d = gen.d();
        let coeffs = CVector::from_iterator(
            d,
            gen.eigenvalues().iter().map(|&w| I * w * Complex64::from_polar(1.0 / (d as f64).sqrt(), w * theta)),
        );
        let dphi = gen.eigenvectors() * coeffs;
        TangentFrame::new(phi, vec![dphi], vec![theta]).unwrap()
    }

    #[test]
    fn ideal_capsule_metric_is_one() {
        let f = capsule_frame(&Generator::pauli_z_like(), 0.7);
        assert!((qfi_metric(&f).g[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((qfi_metric_direct(&f).g[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((qfi_metric(&f).in_convention(Convention::Standard)[(0, 0)] - 4.0).abs() < 1e-14);
        let c = Generator::clock(3).unwrap();
        let f = capsule_frame(&c, 0.2);
        assert!((qfi_metric(&f).g[(0, 0)] - c.uniform_variance()).abs() < 1e-14);
    }

    #[test]
    fn constant_state_has_zero_metric() {
        let space = QuditSpace::new(2, 2).unwrap();
        let base = PureState::basis(space, &[0, 1]).unwrap();
        let f = TangentFrame::new(base, vec![CVector::zeros(4); 2], vec![0.0, 0.0]).unwrap();
        assert_eq!(qfi_metric(&f).g, RMatrix::zeros(2, 2));
        assert!(qfi_metric_direct(&f).g.amax() < 1e-15);
    }

    #[test]
    fn eigenstate_derivative_is_a_phase() {
        let spec = EncoderSpec::standard(3, vec![Generator::pauli_z_like()], vec![2], ScramblerKind::Identity, 0, 0).unwrap();
        let enc = Encoder::new(spec).unwrap();
        let f = derivative_states(&enc, &[0.4]).unwrap();
        // |000⟩ is the w = +1 eigenvector at port 2.
        let expect = f.base.amplitudes() * I;
        assert!((&f.derivs[0] - expect).norm() < 1e-14);
        assert!(qfi_metric(&f).g[(0, 0)].abs() < 1e-14);
    }

    #[test]
    fn non_orthogonal_rotation_is_rejected() {
        let spec = EncoderSpec::standard(4, vec![Generator::pauli_z_like(); 2], vec![1, 2], ScramblerKind::Haar, 1, 0).unwrap();
        let enc = Encoder::new(spec).unwrap();
        let r = RMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(reparameterize_check(&enc, &[0.0, 0.0], &r), Err(Error::NotOrthogonal { .. })));
        let check = reparameterize_check(&enc, &[0.3, 0.1], &RMatrix::identity(2, 2)).unwrap();
        assert!(check.residual <= 1e-12);
    }

    #[test]
    fn grid_layout() {
        let g = product_grid(&[0.0, 1.0, 2.0], 2);
        assert_eq!(g.len(), 9);
        assert_eq!(g[1], vec![0.0, 1.0]);
        assert_eq!(g[3], vec![1.0, 0.0]);
    }

    #[test]
    fn convention_parsing() {
        assert_eq!("bare".parse::<Convention>().unwrap(), Convention::Bare);
        assert!("other".parse::<Convention>().is_err());
    }
}
