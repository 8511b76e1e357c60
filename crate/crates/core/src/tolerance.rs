//! Shared numerical tolerances and size limits.
//!
//! Every floating-point threshold used by the library's validity checks lives
//! here so that a single record can be overridden from an experiment config.

/// Default cap on the number of amplitudes in a state vector (d^N).
pub const DEFAULT_MAX_STATE_DIM: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed drift of a state norm away from 1.
    pub norm: f64,
    /// Unitarity check for d×d local operators.
    pub local_unitary: f64,
    /// Unitarity check for d^N×d^N global operators.
    pub global_unitary: f64,
    /// Hermiticity of generators.
    pub hermitian: f64,
    /// |tr σ| for generators.
    pub traceless: f64,
    /// Orthonormality of isometry columns and eigenvectors.
    pub isometry: f64,
    /// Orthogonality of parameter rotations.
    pub orthogonal: f64,
    /// Smallest gap between generator eigenvalues still counted as distinct.
    pub spectral_gap: f64,
    /// Node matrix condition number above which extraction warns.
    pub cond_warn: f64,
    /// Node matrix condition number above which extraction fails.
    pub cond_fail: f64,
    /// Grid used to snap energies before shell membership tests.
    pub energy_snap: f64,
    /// Eigenvalue floor for PSD checks.
    pub psd_floor: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        norm: 1e-10,
        local_unitary: 1e-10,
        global_unitary: 1e-8,
        hermitian: 1e-12,
        traceless: 1e-10,
        isometry: 1e-10,
        orthogonal: 1e-10,
        spectral_gap: 1e-9,
        cond_warn: 1e3,
        cond_fail: 1e10,
        energy_snap: 1e-12,
        psd_floor: 1e-8,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// The finite-size error scale d^{-(N-3)/2} of the decoupled-capsule expansion.
pub fn decoupling_scale(d: usize, n_qudits: usize) -> f64 {
    (d as f64).powf(-((n_qudits as f64) - 3.0) / 2.0)
}
