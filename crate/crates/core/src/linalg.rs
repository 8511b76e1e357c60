//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// max |(A†A − I)_{ij}| for a matrix with orthonormal columns expected.
pub fn isometry_deviation(a: &CMatrix) -> f64 {
    let gram = a.adjoint() * a;
    let mut dev: f64 = 0.0;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { ONE } else { ZERO };
            dev = dev.max((gram[(i, j)] - target).norm());
        }
    }
    dev
}

pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    isometry_deviation(u)
}

pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted descending.
///
/// The input is symmetrized first so round-off asymmetry does not leak into
/// the (real) spectrum.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// Ratio of largest to smallest singular value.
pub fn condition_number(m: &CMatrix) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// ⟨a|b⟩ with the first argument conjugated.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Single-site operator I ⊗ … ⊗ op ⊗ … ⊗ I applied in place.
///
/// `port` is 1-based with qudit 1 the most significant digit of the linear
/// index. No validation: callers check dimensions.
pub fn apply_site_in_place(amp: &mut [Complex64], d: usize, n_qudits: usize, port: usize, op: &CMatrix) {
    let stride = d.pow((n_qudits - port) as u32);
    let block = stride * d;
    let mut buf = vec![ZERO; d];
    for base in (0..amp.len()).step_by(block) {
        for offset in 0..stride {
            let start = base + offset;
            for (k, slot) in buf.iter_mut().enumerate() {
                *slot = amp[start + k * stride];
            }
            for r in 0..d {
                let mut acc = ZERO;
                for (c, &x) in buf.iter().enumerate() {
                    acc += op[(r, c)] * x;
                }
                amp[start + r * stride] = acc;
            }
        }
    }
}

/// Modified Gram–Schmidt with one reorthogonalization pass. Vectors whose
/// residual norm falls below `drop_tol` are skipped; returns the orthonormal
/// columns that survive.
pub fn orthonormalize(vectors: &[CVector], drop_tol: f64) -> Vec<CVector> {
    let mut basis: Vec<CVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let scale = v.norm();
        if scale == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dotc(&w);
                w.axpy(-c, q, ONE);
            }
        }
        let nrm = w.norm();
        if nrm > drop_tol * scale {
            basis.push(w / Complex64::new(nrm, 0.0));
        }
    }
    basis
}
