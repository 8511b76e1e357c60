//! Haar-random unitaries, exact low-order Haar moments, and Monte-Carlo
//! moment estimation.
//!
//! Samples are built from a complex Ginibre matrix orthonormalized column by
//! column (classical Gram–Schmidt with one reorthogonalization pass). The
//! normalization of each column is real and positive, which is the phase
//! convention that makes the result exactly Haar distributed. Because column
//! `j` only depends on the first `j + 1` Gaussian columns, the first `k`
//! columns of [`haar_sample`] equal [`haar_columns`] drawn from the same
//! stream.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ZERO};
#[cfg(test)]
use crate::linalg::ONE;
use crate::rng::RngStream;
use crate::tolerance::Tolerances;
use num_complex::Complex64;

/// Where the entries of a unitary came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Stream { master: u64, index: u64 },
    Explicit,
}

/// A square matrix known to be unitary to the global tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    entries: CMatrix,
    provenance: Provenance,
}

impl UnitaryMatrix {
    /// Wraps an explicit matrix after checking ‖U†U − I‖_max.
    pub fn new(entries: CMatrix) -> Result<Self> {
        Self::with_tolerance(entries, Tolerances::DEFAULT.global_unitary)
    }

    pub fn with_tolerance(entries: CMatrix, tol: f64) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch { expected: entries.nrows(), got: entries.ncols() });
        }
        let deviation = linalg::unitarity_deviation(&entries);
        if deviation > tol {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { entries, provenance: Provenance::Explicit })
    }

    pub fn identity(dim: usize) -> Self {
        Self { entries: CMatrix::identity(dim, dim), provenance: Provenance::Explicit }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn adjoint(&self) -> Self {
        Self { entries: self.entries.adjoint(), provenance: self.provenance }
    }

    pub fn deviation(&self) -> f64 {
        linalg::unitarity_deviation(&self.entries)
    }
}

/// Column-major buffer of Gram–Schmidt-orthonormalized Gaussian columns.
fn ginibre_orthonormal_columns(dim: usize, k: usize, stream: &mut RngStream) -> Vec<Complex64> {
    let mut q = vec![ZERO; dim * k];
    let mut coeffs = vec![ZERO; k];
    for j in 0..k {
        let (done, rest) = q.split_at_mut(j * dim);
        let col = &mut rest[..dim];
        for z in col.iter_mut() {
            *z = stream.complex_gaussian();
        }
        for _pass in 0..2 {
            for (i, c) in coeffs[..j].iter_mut().enumerate() {
                *c = dotc(&done[i * dim..(i + 1) * dim], col);
            }
            for (i, &c) in coeffs[..j].iter().enumerate() {
                axpy_neg(c, &done[i * dim..(i + 1) * dim], col);
            }
        }
        let nrm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let inv = 1.0 / nrm;
        for z in col.iter_mut() {
            *z *= inv;
        }
    }
    q
}

/// Σ conj(a_i) b_i, split into real arithmetic so the loop vectorizes.
#[inline]
fn dotc(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re, im)
}

/// y ← y − c·x
#[inline]
fn axpy_neg(c: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        yi.re -= c.re * xi.re - c.im * xi.im;
        yi.im -= c.re * xi.im + c.im * xi.re;
    }
}

/// Haar-random D×D unitary.
pub fn haar_sample(dim: usize, stream: &mut RngStream) -> Result<UnitaryMatrix> {
    if dim == 0 {
        return Err(Error::InvalidArgument("unitary dimension must be positive".into()));
    }
    let entries = CMatrix::from_vec(dim, dim, ginibre_orthonormal_columns(dim, dim, stream));
    Ok(UnitaryMatrix {
        entries,
        provenance: Provenance::Stream { master: stream.master(), index: stream.index() },
    })
}

/// First `k` columns of the Haar unitary [`haar_sample`] would draw from the
/// same stream state: a Haar-random D×k isometry.
pub fn haar_columns(dim: usize, k: usize, stream: &mut RngStream) -> Result<CMatrix> {
    if dim == 0 || k == 0 || k > dim {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= D, got k = {k}, D = {dim}")));
    }
    Ok(CMatrix::from_vec(dim, k, ginibre_orthonormal_columns(dim, k, stream)))
}

/// Haar-random unitary on span(basis), identity on its orthogonal complement:
/// B·V·B† + (I − B·B†) with V Haar on U(k).
pub fn haar_sample_subspace(basis: &CMatrix, stream: &mut RngStream) -> Result<UnitaryMatrix> {
    let inner = SubspaceScrambler::sample(basis.clone(), stream)?;
    let dim = basis.nrows();
    let mut entries = CMatrix::identity(dim, dim);
    let delta = &inner.inner - CMatrix::identity(inner.inner.nrows(), inner.inner.ncols());
    entries += &inner.basis * delta * inner.basis.adjoint();
    Ok(UnitaryMatrix {
        entries,
        provenance: Provenance::Stream { master: stream.master(), index: stream.index() },
    })
}

/// Factored form of a subspace-restricted Haar unitary, applied as
/// v + B·(V − I)·B†·v without materializing the D×D matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceScrambler {
    basis: CMatrix,
    inner: CMatrix,
}

impl SubspaceScrambler {
    pub fn sample(basis: CMatrix, stream: &mut RngStream) -> Result<Self> {
        let k = basis.ncols();
        if k == 0 || k > basis.nrows() {
            return Err(Error::InvalidArgument(format!(
                "subspace basis must have 1..={} columns, got {k}",
                basis.nrows()
            )));
        }
        let deviation = linalg::isometry_deviation(&basis);
        if deviation > Tolerances::DEFAULT.isometry {
            return Err(Error::NotIsometric { deviation });
        }
        let inner = haar_sample(k, stream)?.into_matrix();
        Ok(Self { basis, inner })
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn inner(&self) -> &CMatrix {
        &self.inner
    }

    pub fn apply(&self, v: &linalg::CVector) -> linalg::CVector {
        let coords = self.basis.adjoint() * v;
        let moved = &self.inner * &coords - &coords;
        v + &self.basis * moved
    }
}

fn check_index(index: usize, dim: usize) -> Result<usize> {
    if index == 0 || index > dim {
        Err(Error::IndexOutOfRange { index, dim })
    } else {
        Ok(index - 1)
    }
}

/// 1-based index pair of a matrix entry.
pub type Entry = (usize, usize);

/// E[U_{ij} (U†)_{kl}] = δ_il δ_jk / D.
///
/// The second factor is indexed as an entry of U†, i.e. (U†)_{kl} = conj(U_{lk}).
/// With that reading the formula holds for every index pattern; read as
/// conj(U_{kl}) it would contradict E|U_{12}|² = 1/D. Indices are 1-based.
pub fn moment2_exact(dim: usize, (i, j): Entry, (k, l): Entry) -> Result<f64> {
    for idx in [i, j, k, l] {
        check_index(idx, dim)?;
    }
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    Ok(delta(i, l) * delta(j, k) / dim as f64)
}

/// E[U_{ij} U_{kl} (U†)_{xy} (U†)_{zw}] from the two-coefficient Weingarten
/// formula with b = 1/(D²−1) and c = −1/(D(D²−1)). Same dagger convention as
/// [`moment2_exact`]. For D = 1 every entry is a single phase e^{iα} and the
/// monomial averages to exactly 1.
pub fn moment4_exact(dim: usize, (i, j): Entry, (k, l): Entry, (x, y): Entry, (z, w): Entry) -> Result<f64> {
    for idx in [i, j, k, l, x, y, z, w] {
        check_index(idx, dim)?;
    }
    if dim == 1 {
        return Ok(1.0);
    }
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let dd = dim as f64;
    let b = 1.0 / (dd * dd - 1.0);
    let c = -1.0 / (dd * (dd * dd - 1.0));
    let direct = delta(i, y) * delta(j, x) * delta(k, w) * delta(l, z)
        + delta(i, w) * delta(j, z) * delta(k, y) * delta(l, x);
    let crossed = delta(i, y) * delta(j, z) * delta(k, w) * delta(l, x)
        + delta(i, w) * delta(j, x) * delta(k, y) * delta(l, z);
    Ok(b * direct + c * crossed)
}

/// A monomial in the entries of U and U† whose Haar average is known exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentPattern {
    /// U_{ij} (U†)_{kl}
    Second([Entry; 2]),
    /// U_{ij} U_{kl} (U†)_{xy} (U†)_{zw}
    Fourth([Entry; 4]),
}

impl MomentPattern {
    pub fn exact(&self, dim: usize) -> Result<f64> {
        match *self {
            MomentPattern::Second([a, b]) => moment2_exact(dim, a, b),
            MomentPattern::Fourth([a, b, c, d]) => moment4_exact(dim, a, b, c, d),
        }
    }

    pub fn order(&self) -> usize {
        match self {
            MomentPattern::Second(_) => 2,
            MomentPattern::Fourth(_) => 4,
        }
    }

    fn max_index(&self) -> usize {
        let entries: &[Entry] = match self {
            MomentPattern::Second(e) => e,
            MomentPattern::Fourth(e) => e,
        };
        entries.iter().map(|&(a, b)| a.max(b)).max().unwrap_or(0)
    }

    /// Evaluates the monomial on one unitary.
    pub fn evaluate(&self, u: &CMatrix) -> Complex64 {
        let at = |(r, c): Entry| u[(r - 1, c - 1)];
        let dag = |(r, c): Entry| u[(c - 1, r - 1)].conj();
        match *self {
            MomentPattern::Second([a, b]) => at(a) * dag(b),
            MomentPattern::Fourth([a, b, c, d]) => at(a) * at(b) * dag(c) * dag(d),
        }
    }
}

impl std::fmt::Display for MomentPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MomentPattern::Second([(i, j), (k, l)]) => write!(f, "U{i}{j}*Ud{k}{l}"),
            MomentPattern::Fourth([(i, j), (k, l), (x, y), (z, w)]) => {
                write!(f, "U{i}{j}*U{k}{l}*Ud{x}{y}*Ud{z}{w}")
            }
        }
    }
}

/// Monte-Carlo mean of a monomial with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub value: Complex64,
    /// sample std / √n, no small-sample correction.
    pub std_error: f64,
    pub samples: usize,
}

impl MomentEstimate {
    /// |value − target| in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        let dev = (self.value - Complex64::new(target, 0.0)).norm();
        if self.std_error == 0.0 {
            if dev == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            dev / self.std_error
        }
    }

    pub fn from_samples(values: &[Complex64]) -> Self {
        let n = values.len();
        let mean: Complex64 = values.iter().sum::<Complex64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / n as f64;
        Self { value: mean, std_error: (var / n as f64).sqrt(), samples: n }
    }
}

/// Estimates each pattern's Haar average from the same `n_samples` unitaries.
///
/// Sample `t` is drawn from stream `(master, index_of(t))` so the estimate
/// does not depend on evaluation order.
pub fn moment_mc_many(
    dim: usize,
    patterns: &[MomentPattern],
    n_samples: usize,
    master: u64,
    index_of: impl Fn(usize) -> u64,
) -> Result<Vec<MomentEstimate>> {
    if n_samples < 2 {
        return Err(Error::InvalidArgument("moment estimation needs at least 2 samples".into()));
    }
    for p in patterns {
        check_index(p.max_index(), dim)?;
    }
    let mut values = vec![Vec::with_capacity(n_samples); patterns.len()];
    for t in 0..n_samples {
        let mut stream = RngStream::new(master, index_of(t));
        let u = haar_sample(dim, &mut stream)?.into_matrix();
        for (p, vals) in patterns.iter().zip(values.iter_mut()) {
            vals.push(p.evaluate(&u));
        }
    }
    Ok(values.iter().map(|v| MomentEstimate::from_samples(v)).collect())
}

/// Single-pattern convenience over [`moment_mc_many`].
pub fn moment_mc(dim: usize, pattern: MomentPattern, n_samples: usize, master: u64, base_index: u64) -> Result<MomentEstimate> {
    let est = moment_mc_many(dim, &[pattern], n_samples, master, |t| {
        crate::rng::stream_index(&[base_index, t as u64])
    })?;
    Ok(est[0])
}

/// The fourth-moment suite used for cross-checking exact and sampled averages.
/// Every index is ≤ 2, so the suite is valid for any D ≥ 2.
pub fn fourth_moment_suite() -> Vec<MomentPattern> {
    use MomentPattern::Fourth;
    vec![
        Fourth([(1, 1), (1, 1), (1, 1), (1, 1)]), // |U11|^4
        Fourth([(1, 1), (2, 2), (1, 1), (2, 2)]), // |U11|^2 |U22|^2
        Fourth([(1, 1), (1, 2), (1, 1), (2, 1)]), // |U11|^2 |U12|^2
        Fourth([(1, 1), (2, 1), (1, 1), (1, 2)]), // |U11|^2 |U21|^2
        Fourth([(1, 1), (2, 2), (2, 1), (1, 2)]), // U11 U22 conj(U12) conj(U21)
        Fourth([(1, 2), (2, 1), (2, 1), (1, 2)]), // |U12|^2 |U21|^2
        Fourth([(1, 1), (1, 1), (1, 1), (1, 2)]), // U11^2 conj(U11) conj(U21)
        Fourth([(1, 1), (1, 2), (2, 1), (1, 1)]), // |U11|^2 |U12|^2, crossed pairing
        Fourth([(1, 1), (2, 1), (1, 2), (1, 1)]), // |U11|^2 |U21|^2, crossed pairing
        Fourth([(1, 1), (2, 2), (1, 1), (1, 1)]), // U11 U22 conj(U11)^2
        Fourth([(1, 2), (1, 2), (2, 1), (2, 1)]), // |U12|^4
        Fourth([(1, 1), (1, 2), (1, 1), (1, 2)]), // U11 U12 conj(U11) conj(U21)
    ]
}

/// |U11|² and three patterns whose average vanishes.
pub fn second_moment_suite() -> Vec<MomentPattern> {
    use MomentPattern::Second;
    vec![
        Second([(1, 1), (1, 1)]), // |U11|^2
        Second([(1, 1), (1, 2)]), // U11 conj(U21)
        Second([(1, 1), (2, 1)]), // U11 conj(U12)
        Second([(1, 2), (1, 2)]), // U12 conj(U21)
    ]
}

/// Haar-random unit vector: the first column of a Haar unitary.
pub fn haar_state_vector(dim: usize, stream: &mut RngStream) -> Result<linalg::CVector> {
    let col = haar_columns(dim, 1, stream)?;
    Ok(col.column(0).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_is_unitary() {
        for dim in [1, 2, 5, 16, 64] {
            let mut s = RngStream::new(11, dim as u64);
            let u = haar_sample(dim, &mut s).unwrap();
            assert!(u.deviation() <= 1e-10, "dim {dim}: {}", u.deviation());
        }
    }

    #[test]
    fn dimension_one_is_a_unit_phase() {
        let mut s = RngStream::new(3, 0);
        let u = haar_sample(1, &mut s).unwrap();
        assert!((u.matrix()[(0, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn columns_are_a_prefix_of_the_full_sample() {
        let full = haar_sample(12, &mut RngStream::new(5, 9)).unwrap();
        let cols = haar_columns(12, 4, &mut RngStream::new(5, 9)).unwrap();
        for j in 0..4 {
            for i in 0..12 {
                assert_eq!(full.matrix()[(i, j)], cols[(i, j)]);
            }
        }
    }

    #[test]
    fn second_moment_closed_form() {
        assert_eq!(moment2_exact(4, (1, 1), (1, 1)).unwrap(), 0.25);
        assert_eq!(moment2_exact(4, (1, 1), (2, 1)).unwrap(), 0.0);
        assert_eq!(moment2_exact(2, (2, 1), (1, 2)).unwrap(), 0.5);
        assert!(moment2_exact(2, (3, 1), (1, 1)).is_err());
    }

    #[test]
    fn fourth_moment_closed_form() {
        let p = |d| moment4_exact(d, (1, 1), (1, 1), (1, 1), (1, 1)).unwrap();
        assert!((p(2) - 1.0 / 3.0).abs() < 1e-15);
        assert!((p(4) - 0.1).abs() < 1e-15);
        let q = moment4_exact(4, (1, 1), (2, 2), (1, 1), (2, 2)).unwrap();
        assert!((q - 1.0 / 15.0).abs() < 1e-15);
        assert_eq!(moment4_exact(1, (1, 1), (1, 1), (1, 1), (1, 1)).unwrap(), 1.0);
    }

    #[test]
    fn subspace_sampler_fixes_the_complement() {
        let dim = 6;
        let basis = haar_columns(dim, 2, &mut RngStream::new(1, 1)).unwrap();
        let u = haar_sample_subspace(&basis, &mut RngStream::new(1, 2)).unwrap();
        assert!(u.deviation() < 1e-12);
        // A vector orthogonal to the basis.
        let probe = haar_state_vector(dim, &mut RngStream::new(1, 3)).unwrap();
        let coords = basis.adjoint() * &probe;
        let perp = &probe - &basis * coords;
        let moved = u.matrix() * &perp;
        assert!((moved - &perp).norm() < 1e-12);
    }

    #[test]
    fn factored_subspace_scrambler_matches_dense_form() {
        let dim = 8;
        let basis = haar_columns(dim, 3, &mut RngStream::new(2, 1)).unwrap();
        let dense = haar_sample_subspace(&basis, &mut RngStream::new(2, 2)).unwrap();
        let factored = SubspaceScrambler::sample(basis, &mut RngStream::new(2, 2)).unwrap();
        let v = haar_state_vector(dim, &mut RngStream::new(2, 3)).unwrap();
        assert!((dense.matrix() * &v - factored.apply(&v)).norm() < 1e-13);
    }

    #[test]
    fn non_isometric_basis_is_rejected() {
        let basis = CMatrix::from_element(4, 2, Complex64::new(0.5, 0.0));
        assert!(matches!(
            haar_sample_subspace(&basis, &mut RngStream::new(0, 0)),
            Err(Error::NotIsometric { .. })
        ));
    }

    #[test]
    fn explicit_unitary_is_validated() {
        let bad = CMatrix::from_element(2, 2, ONE);
        assert!(matches!(UnitaryMatrix::new(bad), Err(Error::NotUnitary { .. })));
        assert!(UnitaryMatrix::new(CMatrix::identity(3, 3)).is_ok());
    }
}
