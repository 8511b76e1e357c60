//! Dense N-qudit pure states.
//!
//! Amplitudes are stored with qudit 1 as the most significant digit:
//! `index = Σ_p i_p · d^{N−p}`. With this ordering the amplitude vector read
//! row-major is the d × d^{N−1} matrix whose singular values give the Schmidt
//! coefficients across the cut after qudit 1.

use crate::error::{Error, Result};
use crate::haar::UnitaryMatrix;
use crate::linalg::{self, CMatrix, CVector, ONE, ZERO};
use crate::tolerance::{Tolerances, DEFAULT_MAX_STATE_DIM};
use num_complex::Complex64;

/// Local dimension, qudit count, and the amplitude cap they were checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuditSpace {
    d: usize,
    n_qudits: usize,
    dim: usize,
}

impl QuditSpace {
    pub fn new(d: usize, n_qudits: usize) -> Result<Self> {
        Self::with_cap(d, n_qudits, DEFAULT_MAX_STATE_DIM)
    }

    pub fn with_cap(d: usize, n_qudits: usize, cap: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::LocalDimension(d));
        }
        if n_qudits == 0 {
            return Err(Error::NoQudits);
        }
        let dim = (d as u128).checked_pow(n_qudits as u32).unwrap_or(u128::MAX);
        if dim > cap as u128 {
            return Err(Error::CapExceeded { dim, cap });
        }
        Ok(Self { d, n_qudits, dim: dim as usize })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_qudits(&self) -> usize {
        self.n_qudits
    }

    /// d^N
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn check_port(&self, port: usize) -> Result<()> {
        if port == 0 || port > self.n_qudits {
            Err(Error::InvalidPort { port, n_qudits: self.n_qudits })
        } else {
            Ok(())
        }
    }

    /// Linear index of a digit string.
    pub fn index_of(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.n_qudits {
            return Err(Error::DigitCount { expected: self.n_qudits, got: digits.len() });
        }
        let mut index = 0;
        for (q, &digit) in digits.iter().enumerate() {
            if digit >= self.d {
                return Err(Error::DigitOutOfRange { qudit: q + 1, digit, d: self.d });
            }
            index = index * self.d + digit;
        }
        Ok(index)
    }

    /// Digit string of a linear index, qudit 1 first.
    pub fn digits_of(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.n_qudits];
        for slot in digits.iter_mut().rev() {
            *slot = index % self.d;
            index /= self.d;
        }
        digits
    }
}

/// Unit vector of d^N amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    space: QuditSpace,
    amp: CVector,
}

impl PureState {
    /// |digits⟩, e.g. `[0, 1]` is |01⟩ at linear index 1.
    pub fn basis(space: QuditSpace, digits: &[usize]) -> Result<Self> {
        let index = space.index_of(digits)?;
        let mut amp = CVector::zeros(space.dim());
        amp[index] = ONE;
        Ok(Self { space, amp })
    }

    /// Wraps amplitudes that must already be normalized.
    pub fn from_amplitudes(space: QuditSpace, amp: CVector) -> Result<Self> {
        if amp.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: amp.len() });
        }
        let drift = (amp.norm() - 1.0).abs();
        if drift > Tolerances::DEFAULT.norm {
            return Err(Error::InvalidArgument(format!("state norm deviates from 1 by {drift:.3e}")));
        }
        Ok(Self { space, amp })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(space: QuditSpace, amp: CVector) -> Result<Self> {
        if amp.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: amp.len() });
        }
        let nrm = amp.norm();
        if nrm == 0.0 || !nrm.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(Self { space, amp: amp / Complex64::new(nrm, 0.0) })
    }

    pub(crate) fn from_parts_unchecked(space: QuditSpace, amp: CVector) -> Self {
        Self { space, amp }
    }

    pub fn space(&self) -> QuditSpace {
        self.space
    }

    pub fn d(&self) -> usize {
        self.space.d
    }

    pub fn n_qudits(&self) -> usize {
        self.space.n_qudits
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amp
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amp
    }

    pub fn norm(&self) -> f64 {
        self.amp.norm()
    }

    /// Applies `op` on one qudit (1-based port).
    pub fn apply_local(&self, op: &CMatrix, port: usize) -> Result<Self> {
        self.space.check_port(port)?;
        if op.nrows() != self.space.d || op.ncols() != self.space.d {
            return Err(Error::DimensionMismatch { expected: self.space.d, got: op.nrows().max(op.ncols()) });
        }
        let deviation = linalg::unitarity_deviation(op);
        if deviation > Tolerances::DEFAULT.local_unitary {
            return Err(Error::NotUnitary { deviation });
        }
        let mut amp = self.amp.clone();
        linalg::apply_site_in_place(amp.as_mut_slice(), self.space.d, self.space.n_qudits, port, op);
        Ok(Self { space: self.space, amp })
    }

    pub fn apply_global(&self, u: &UnitaryMatrix) -> Result<Self> {
        if u.dim() != self.space.dim() {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), got: u.dim() });
        }
        Ok(Self { space: self.space, amp: u.matrix() * &self.amp })
    }

    /// Validates `u` (‖U†U − I‖ ≤ global tolerance) before applying it.
    pub fn apply_global_matrix(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.space.dim() || u.ncols() != self.space.dim() {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), got: u.nrows() });
        }
        let u = UnitaryMatrix::new(u.clone())?;
        self.apply_global(&u)
    }

    /// ⟨self|other⟩
    pub fn overlap(&self, other: &PureState) -> Result<Complex64> {
        if self.space.d != other.space.d || self.space.n_qudits != other.space.n_qudits {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), got: other.space.dim() });
        }
        Ok(self.amp.dotc(&other.amp))
    }

    /// d × d^{N−1} coefficient matrix across the cut after qudit 1.
    pub fn first_cut_matrix(&self) -> CMatrix {
        let rest = self.space.dim / self.space.d;
        CMatrix::from_fn(self.space.d, rest, |i, r| self.amp[i * rest + r])
    }

    /// ⟨digit|_1 ⊗ I applied to the state: the unnormalized (N−1)-qudit slice.
    pub fn slice_first(&self, digit: usize) -> CVector {
        let rest = self.space.dim / self.space.d;
        self.amp.rows(digit * rest, rest).into_owned()
    }

    /// Partial trace onto the (1-based) ports in `keep`, in the order given.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<DensityMatrix> {
        self.reduced_density_capped(keep, DEFAULT_MAX_STATE_DIM)
    }

    /// As [`reduced_density`](Self::reduced_density) with an explicit cap on
    /// the number of density-matrix entries d^{2|keep|}.
    pub fn reduced_density_capped(&self, keep: &[usize], cap: usize) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(Error::EmptySubsystem);
        }
        let n = self.space.n_qudits;
        let d = self.space.d;
        let mut seen = vec![false; n + 1];
        for &p in keep {
            self.space.check_port(p)?;
            if seen[p] {
                return Err(Error::DuplicatePort(p));
            }
            seen[p] = true;
        }
        let k = keep.len();
        let entries = (d as u128).pow(2 * k as u32);
        if entries > cap as u128 {
            return Err(Error::CapExceeded { dim: entries, cap });
        }
        let traced: Vec<usize> = (1..=n).filter(|p| !seen[*p]).collect();
        let kept_dim = d.pow(k as u32);
        let traced_dim = d.pow(traced.len() as u32);
        let weight = |p: usize| d.pow((n - p) as u32);
        let kept_w: Vec<usize> = keep.iter().map(|&p| weight(p)).collect();
        let traced_w: Vec<usize> = traced.iter().map(|&p| weight(p)).collect();
        let offsets = |weights: &[usize], count: usize| -> Vec<usize> {
            (0..count)
                .map(|mut idx| {
                    let mut off = 0;
                    for &w in weights.iter().rev() {
                        off += (idx % d) * w;
                        idx /= d;
                    }
                    off
                })
                .collect()
        };
        let kept_off = offsets(&kept_w, kept_dim);
        let traced_off = offsets(&traced_w, traced_dim);
        let m = CMatrix::from_fn(kept_dim, traced_dim, |a, b| self.amp[kept_off[a] + traced_off[b]]);
        Ok(DensityMatrix { entries: &m * m.adjoint() })
    }

    /// Schmidt decomposition across the cut after qudit 1.
    pub fn schmidt(&self) -> Result<SchmidtDecomposition> {
        if self.space.n_qudits < 2 {
            return Err(Error::TooFewQudits { needed: 2, got: self.space.n_qudits });
        }
        let d = self.space.d;
        let m = self.first_cut_matrix();
        let svd = m.svd(true, true);
        let u = svd.u.expect("left singular vectors requested");
        let v_t = svd.v_t.expect("right singular vectors requested");
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let probs: Vec<f64> = order.iter().map(|&k| svd.singular_values[k].powi(2)).collect();
        let total: f64 = probs.iter().sum();
        let probs = probs.into_iter().map(|p| p / total).collect();
        let left = CMatrix::from_fn(d, d, |i, j| u[(i, order[j])]);
        // |v_k⟩ has components (V†)_{k r}: the k-th row of v_t, not conjugated.
        let right = CMatrix::from_fn(v_t.ncols(), d, |r, j| v_t[(order[j], r)]);
        Ok(SchmidtDecomposition { probs, left, right })
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    /// Checks Hermiticity, unit trace and the eigenvalue floor.
    pub fn new(entries: CMatrix) -> Result<Self> {
        let rho = Self { entries };
        rho.validate(&Tolerances::DEFAULT)?;
        Ok(rho)
    }

    pub(crate) fn from_entries_unchecked(entries: CMatrix) -> Self {
        Self { entries }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { entries: CMatrix::identity(dim, dim) / Complex64::new(dim as f64, 0.0) }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// Tr ρ²
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Tr[ρ M]
    pub fn expectation(&self, m: &CMatrix) -> Complex64 {
        (&self.entries * m).trace()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.entries)
    }

    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        let deviation = linalg::hermitian_deviation(&self.entries);
        if deviation > tol.hermitian {
            return Err(Error::NotHermitian { deviation });
        }
        let tr = self.trace();
        if (tr - ONE).norm() > tol.norm {
            return Err(Error::InvalidArgument(format!("density matrix trace is {tr}")));
        }
        if let Some(&min) = self.eigenvalues().last() {
            if min < -tol.norm {
                return Err(Error::InvalidArgument(format!("density matrix has eigenvalue {min:.3e}")));
            }
        }
        Ok(())
    }

    /// ½‖ρ − σ‖₁
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        let diff = &self.entries - &other.entries;
        Ok(0.5 * linalg::hermitian_eigenvalues(&diff).iter().map(|x| x.abs()).sum::<f64>())
    }

    /// Tr[(ρ − σ)²]
    pub fn hs_distance_sq(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok((&self.entries - &other.entries).iter().map(|z| z.norm_sqr()).sum())
    }
}

/// |Ψ⟩ = Σ_k √p_k |u_k⟩|v_k⟩ across the cut after qudit 1, p sorted descending.
///
/// Within a degenerate block of p the vectors are an arbitrary orthonormal
/// basis of that block; only spans are meaningful there.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtDecomposition {
    pub probs: Vec<f64>,
    /// d × d, columns |u_k⟩.
    pub left: CMatrix,
    /// d^{N−1} × d, columns |v_k⟩.
    pub right: CMatrix,
}

impl SchmidtDecomposition {
    pub fn entropy(&self) -> f64 {
        entropy(&self.probs)
    }

    /// Σ √p_k |u_k⟩ ⊗ |v_k⟩ as a flat amplitude vector.
    pub fn reassemble(&self) -> CVector {
        let d = self.left.nrows();
        let rest = self.right.nrows();
        let mut amp = CVector::zeros(d * rest);
        for (k, &p) in self.probs.iter().enumerate() {
            let s = Complex64::new(p.sqrt(), 0.0);
            for i in 0..d {
                let a = s * self.left[(i, k)];
                if a == ZERO {
                    continue;
                }
                for r in 0..rest {
                    amp[i * rest + r] += a * self.right[(r, k)];
                }
            }
        }
        amp
    }

    pub fn right_vector(&self, k: usize) -> CVector {
        self.right.column(k).into_owned()
    }

    /// max_k |p_k − 1/d|
    pub fn uniformity_deviation(&self) -> f64 {
        let target = 1.0 / self.probs.len() as f64;
        self.probs.iter().map(|p| (p - target).abs()).fold(0.0, f64::max)
    }
}

/// −Σ p ln p in nats, with 0·ln 0 = 0.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}
