//! Energy shells of non-interacting qudit Hamiltonians and the typical
//! reduced states of shell-random pure states.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::rng::RngStream;
use crate::state::{DensityMatrix, PureState, QuditSpace};
use crate::tolerance::{Tolerances, DEFAULT_MAX_STATE_DIM};
use num_complex::Complex64;

/// H = Σ_p H_p with every H_p diagonal in the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    space: QuditSpace,
    site_spectra: Vec<Vec<f64>>,
}

/// Rounds to the shared energy grid so that sums of equal site energies
/// taken in different orders compare equal.
pub fn snap_energy(e: f64) -> f64 {
    let grid = Tolerances::DEFAULT.energy_snap;
    (e / grid).round() * grid
}

pub fn build_hamiltonian(site_spectra: Vec<Vec<f64>>) -> Result<HamiltonianSpec> {
    build_hamiltonian_capped(site_spectra, DEFAULT_MAX_STATE_DIM)
}

pub fn build_hamiltonian_capped(site_spectra: Vec<Vec<f64>>, cap: usize) -> Result<HamiltonianSpec> {
    let d = site_spectra.first().map(Vec::len).ok_or(Error::NoQudits)?;
    for spectrum in &site_spectra {
        if spectrum.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: spectrum.len() });
        }
        if spectrum.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument("site energies must be finite".into()));
        }
    }
    let space = QuditSpace::with_cap(d, site_spectra.len(), cap)?;
    Ok(HamiltonianSpec { space, site_spectra })
}

impl HamiltonianSpec {
    /// Same spectrum on every site.
    pub fn uniform(spectrum: &[f64], n_qudits: usize) -> Result<Self> {
        build_hamiltonian(vec![spectrum.to_vec(); n_qudits])
    }

    pub fn space(&self) -> QuditSpace {
        self.space
    }

    pub fn site_spectra(&self) -> &[Vec<f64>] {
        &self.site_spectra
    }

    /// Energy of a computational basis state, snapped.
    pub fn energy_of(&self, index: usize) -> f64 {
        let digits = self.space.digits_of(index);
        snap_energy(digits.iter().zip(&self.site_spectra).map(|(&a, s)| s[a]).sum())
    }

    /// All d^N eigenvalues in basis order.
    pub fn energies(&self) -> Vec<f64> {
        spectrum_of(&self.site_spectra)
    }

    /// Distinct eigenvalues, ascending, with multiplicities.
    pub fn levels(&self) -> Vec<(f64, usize)> {
        levels_of(self.energies())
    }

    /// Sub-Hamiltonian on ports `from..=to` (1-based).
    pub fn sites(&self, from: usize, to: usize) -> Result<HamiltonianSpec> {
        self.space.check_port(from)?;
        self.space.check_port(to)?;
        if from > to {
            return Err(Error::EmptySubsystem);
        }
        build_hamiltonian(self.site_spectra[from - 1..to].to_vec())
    }
}

fn spectrum_of(site_spectra: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0];
    for spectrum in site_spectra {
        out = out.iter().flat_map(|&acc| spectrum.iter().map(move |&e| acc + e)).collect();
    }
    out.into_iter().map(snap_energy).collect()
}

fn levels_of(mut energies: Vec<f64>) -> Vec<(f64, usize)> {
    energies.sort_by(f64::total_cmp);
    let mut levels: Vec<(f64, usize)> = Vec::new();
    for e in energies {
        match levels.last_mut() {
            Some((last, count)) if *last == e => *count += 1,
            _ => levels.push((e, 1)),
        }
    }
    levels
}

/// Span of the computational basis states with energy in [E_tot − δE, E_tot].
#[derive(Debug, Clone, PartialEq)]
pub struct MesShell {
    pub e_tot: f64,
    pub delta_e: f64,
    space: QuditSpace,
    members: Vec<usize>,
}

pub fn mes_shell(h: &HamiltonianSpec, e_tot: f64, delta_e: f64) -> Result<MesShell> {
    if !(delta_e >= 0.0) || !e_tot.is_finite() || !delta_e.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid shell window E_tot = {e_tot}, dE = {delta_e}")));
    }
    let lower = snap_energy(e_tot - delta_e);
    let upper = snap_energy(e_tot);
    let members: Vec<usize> = h
        .energies()
        .iter()
        .enumerate()
        .filter(|(_, &e)| e >= lower && e <= upper)
        .map(|(i, _)| i)
        .collect();
    if members.is_empty() {
        return Err(Error::EmptyShell { lower, upper });
    }
    Ok(MesShell { e_tot, delta_e, space: h.space(), members })
}

impl MesShell {
    pub fn space(&self) -> QuditSpace {
        self.space
    }

    /// Ascending basis indices.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn d_e(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.members.binary_search(&index).is_ok()
    }

    /// D × d_E isometry whose columns are the member basis vectors.
    pub fn isometry(&self) -> CMatrix {
        let mut b = CMatrix::zeros(self.space.dim(), self.members.len());
        for (col, &row) in self.members.iter().enumerate() {
            b[(row, col)] = Complex64::new(1.0, 0.0);
        }
        b
    }

    /// Midpoint of the window; the energy at which β is estimated.
    pub fn center(&self) -> f64 {
        self.e_tot - 0.5 * self.delta_e
    }

    /// Reduced state of the shell-maximally-mixed state on the first m sites.
    pub fn reduced_average(&self, m: usize) -> Result<DensityMatrix> {
        let (d, n) = (self.space.d(), self.space.n_qudits());
        if m == 0 || m > n {
            return Err(Error::InvalidArgument(format!("subsystem size {m} outside 1..={n}")));
        }
        let tail = d.pow((n - m) as u32);
        let kept = d.pow(m as u32);
        let mut rho = CMatrix::zeros(kept, kept);
        let w = Complex64::new(1.0 / self.d_e() as f64, 0.0);
        for &i in &self.members {
            rho[(i / tail, i / tail)] += w;
        }
        Ok(DensityMatrix::from_entries_unchecked(rho))
    }
}

/// Haar-random unit vector on the shell: complex Gaussian shell coordinates,
/// normalized. Amplitudes outside the shell are exactly zero.
pub fn mes_sample(shell: &MesShell, stream: &mut RngStream) -> PureState {
    let mut amp = CVector::zeros(shell.space.dim());
    let mut norm_sqr = 0.0;
    for &i in &shell.members {
        let z = stream.complex_gaussian();
        norm_sqr += z.norm_sqr();
        amp[i] = z;
    }
    let inv = 1.0 / norm_sqr.sqrt();
    for &i in &shell.members {
        amp[i] *= inv;
    }
    PureState::from_parts_unchecked(shell.space, amp)
}

/// β from the smoothed density of states of sites m+1..N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaEstimate {
    pub beta: f64,
    /// Gaussian kernel standard deviation used for Ω_Ā.
    pub width: f64,
    /// Lower and upper complement energies of the finite-difference stencil.
    pub stencil: (f64, f64),
}

/// Kernel width: `factor` × mean spacing of all complement levels,
/// counted with multiplicity. A zero-width spectrum gets width `factor`.
pub fn default_kernel_width(complement: &HamiltonianSpec, factor: f64) -> f64 {
    let e = complement.energies();
    let (lo, hi) = e.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if e.len() < 2 || hi == lo {
        factor
    } else {
        factor * (hi - lo) / (e.len() - 1) as f64
    }
}

/// ln Ω(x) with Ω(x) = Σ_levels g_l exp(−(x − E_l)²/(2w²)).
fn log_smoothed_dos(levels: &[(f64, usize)], x: f64, width: f64) -> f64 {
    let exps: Vec<f64> = levels
        .iter()
        .map(|&(e, g)| (g as f64).ln() - (x - e).powi(2) / (2.0 * width * width))
        .collect();
    let max = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + exps.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// β ≈ ∂/∂E ln Ω_Ā evaluated as a secant across the subsystem energy range:
/// [ln Ω_Ā(E − E_A^min) − ln Ω_Ā(E − E_A^max)] / (E_A^max − E_A^min).
///
/// `width` of `None` uses [`default_kernel_width`] with factor 2.
pub fn estimate_beta(h: &HamiltonianSpec, energy: f64, m: usize, width: Option<f64>) -> Result<BetaEstimate> {
    let n = h.space().n_qudits();
    if m == 0 || m >= n {
        return Err(Error::InvalidArgument(format!("subsystem size {m} must be in 1..{n}")));
    }
    let sub = h.sites(1, m)?;
    let complement = h.sites(m + 1, n)?;
    let width = width.unwrap_or_else(|| default_kernel_width(&complement, 2.0));
    if !(width > 0.0) {
        return Err(Error::InvalidArgument(format!("kernel width must be positive, got {width}")));
    }
    let sub_e = sub.energies();
    let a_min = sub_e.iter().cloned().fold(f64::INFINITY, f64::min);
    let a_max = sub_e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let stencil = (energy - a_max, energy - a_min);
    if a_max == a_min {
        return Ok(BetaEstimate { beta: 0.0, width, stencil });
    }
    let levels = complement.levels();
    for x in [stencil.0, stencil.1] {
        let nearest = levels.iter().map(|&(e, _)| (e - x).abs()).fold(f64::INFINITY, f64::min);
        if nearest > 4.0 * width {
            return Err(Error::UnstableBeta {
                energy,
                reason: format!("no complement level within 4 kernel widths of {x} (nearest {nearest:.3e} away, width {width:.3e})"),
            });
        }
    }
    let hi = log_smoothed_dos(&levels, stencil.1, width);
    let lo = log_smoothed_dos(&levels, stencil.0, width);
    Ok(BetaEstimate { beta: (hi - lo) / (a_max - a_min), width, stencil })
}

/// e^{−βH_A}/Z on the sites given, diagonal in the product basis.
pub fn gibbs_state(site_spectra: &[Vec<f64>], beta: f64) -> Result<DensityMatrix> {
    if !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("inverse temperature must be finite, got {beta}")));
    }
    if site_spectra.is_empty() {
        return Err(Error::EmptySubsystem);
    }
    let energies = spectrum_of(site_spectra);
    let shift = energies.iter().map(|e| -beta * e).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = energies.iter().map(|e| (-beta * e - shift).exp()).collect();
    let z: f64 = weights.iter().sum();
    let dim = energies.len();
    let mut rho = CMatrix::zeros(dim, dim);
    for (i, w) in weights.iter().enumerate() {
        rho[(i, i)] = Complex64::new(w / z, 0.0);
    }
    Ok(DensityMatrix::from_entries_unchecked(rho))
}

/// d_s^{2m}/(d_E + 1)
pub fn variance_bound(d_s: usize, m: usize, d_e: usize) -> f64 {
    (d_s as f64).powi(2 * m as i32) / (d_e as f64 + 1.0)
}

/// Reduced state on the first m sites of one shell-random state.
pub fn typicality_sample(shell: &MesShell, m: usize, stream: &mut RngStream) -> Result<DensityMatrix> {
    let keep: Vec<usize> = (1..=m).collect();
    mes_sample(shell, stream).reduced_density(&keep)
}

/// Ensemble statistics of m-site reduced states against the shell average
/// and the Gibbs state at the estimated β.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsComparison {
    pub beta: BetaEstimate,
    pub m: usize,
    pub d_s: usize,
    pub d_e: usize,
    pub n_samples: usize,
    pub mean_state: DensityMatrix,
    pub shell_average: DensityMatrix,
    pub gibbs: DensityMatrix,
    /// ½‖ρ_i − ρ_Gibbs‖₁ per sample.
    pub trace_distances: Vec<f64>,
    /// Tr[(ρ_i − ρ_Gibbs)²] per sample.
    pub hs_distances: Vec<f64>,
    /// Mean of Tr[(ρ_i − ⟨ρ⟩_shell)²].
    pub hs_variance: f64,
    /// d_s^{2m}/(d_E+1).
    pub bound: f64,
    /// max over entries of |mean − shell average| / standard error.
    pub mean_z: f64,
}

impl GibbsComparison {
    pub fn from_samples(h: &HamiltonianSpec, shell: &MesShell, m: usize, samples: Vec<DensityMatrix>, beta: BetaEstimate) -> Result<Self> {
        let n_samples = samples.len();
        if n_samples < 10 {
            return Err(Error::InvalidArgument(format!("need at least 10 samples, got {n_samples}")));
        }
        let n = h.space().n_qudits();
        if 2 * m > n {
            return Err(Error::InvalidArgument(format!("subsystem size {m} exceeds N/2 = {}", n / 2)));
        }
        let d_s = h.space().d();
        let gibbs = gibbs_state(&h.site_spectra()[..m], beta.beta)?;
        let shell_average = shell.reduced_average(m)?;
        let dim = shell_average.dim();
        let mut mean = CMatrix::zeros(dim, dim);
        for s in &samples {
            mean += s.entries();
        }
        mean /= Complex64::new(n_samples as f64, 0.0);
        let mut mean_z: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let var = samples.iter().map(|s| (s.entries()[(i, j)] - mean[(i, j)]).norm_sqr()).sum::<f64>() / n_samples as f64;
                let se = (var / n_samples as f64).sqrt();
                let dev = (mean[(i, j)] - shell_average.entries()[(i, j)]).norm();
                let z = if se > 0.0 { dev / se } else if dev > 1e-12 { f64::INFINITY } else { 0.0 };
                mean_z = mean_z.max(z);
            }
        }
        let mut trace_distances = Vec::with_capacity(n_samples);
        let mut hs_distances = Vec::with_capacity(n_samples);
        let mut hs_sum = 0.0;
        for s in &samples {
            trace_distances.push(s.trace_distance(&gibbs)?);
            hs_distances.push(s.hs_distance_sq(&gibbs)?);
            hs_sum += s.hs_distance_sq(&shell_average)?;
        }
        Ok(Self {
            beta,
            m,
            d_s,
            d_e: shell.d_e(),
            n_samples,
            mean_state: DensityMatrix::from_entries_unchecked(mean),
            shell_average,
            gibbs,
            trace_distances,
            hs_distances,
            hs_variance: hs_sum / n_samples as f64,
            bound: variance_bound(d_s, m, shell.d_e()),
            mean_z,
        })
    }

    /// Bound with the Monte-Carlo allowance (1 + 5/√n).
    pub fn bound_with_slack(&self) -> f64 {
        self.bound * (1.0 + 5.0 / (self.n_samples as f64).sqrt())
    }

    pub fn fraction_within(&self, trace_distance: f64) -> f64 {
        self.trace_distances.iter().filter(|&&t| t <= trace_distance).count() as f64 / self.n_samples as f64
    }

    pub fn mean_trace_distance(&self) -> f64 {
        self.trace_distances.iter().sum::<f64>() / self.n_samples as f64
    }
}

/// Samples `n_samples` shell states from `stream_of(t)` and compares them.
pub fn typicality_report(
    h: &HamiltonianSpec,
    shell: &MesShell,
    m: usize,
    n_samples: usize,
    width: Option<f64>,
    stream_of: impl Fn(usize) -> RngStream,
) -> Result<GibbsComparison> {
    let beta = estimate_beta(h, shell.center(), m, width)?;
    let samples = (0..n_samples)
        .map(|t| typicality_sample(shell, m, &mut stream_of(t)))
        .collect::<Result<Vec<_>>>()?;
    GibbsComparison::from_samples(h, shell, m, samples, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;

    fn two_level(n: usize) -> HamiltonianSpec {
        HamiltonianSpec::uniform(&[0.0, 1.0], n).unwrap()
    }

    #[test]
    fn spectra() {
        let h = two_level(3);
        assert_eq!(h.energies(), vec![0.0, 1.0, 1.0, 2.0, 1.0, 2.0, 2.0, 3.0]);
        assert_eq!(h.levels(), vec![(0.0, 1), (1.0, 3), (2.0, 3), (3.0, 1)]);
        let h0 = HamiltonianSpec::uniform(&[0.0, 0.0], 4).unwrap();
        assert!(h0.energies().iter().all(|&e| e == 0.0));
        let single = build_hamiltonian(vec![vec![-1.0, 0.0, 1.0]]).unwrap();
        assert_eq!(single.energies(), vec![-1.0, 0.0, 1.0]);
        assert!(matches!(build_hamiltonian(vec![vec![0.0, 1.0], vec![0.0]]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(build_hamiltonian(vec![]), Err(Error::NoQudits)));
    }

    #[test]
    fn snapping_makes_sums_order_independent() {
        let h = build_hamiltonian(vec![vec![0.1, 0.0], vec![0.2, 0.0], vec![0.0, 0.3]]).unwrap();
        let e = h.energies();
        // 0.1 + 0.2 and 0.3 differ in floating point before snapping.
        assert_eq!(e[h.space().index_of(&[0, 0, 0]).unwrap()], e[h.space().index_of(&[1, 1, 1]).unwrap()]);
    }

    #[test]
    fn shells() {
        let h = two_level(3);
        let s = mes_shell(&h, 1.0, 0.0).unwrap();
        assert_eq!(s.d_e(), 3);
        assert_eq!(s.members(), &[1, 2, 4]);
        let h0 = HamiltonianSpec::uniform(&[0.0, 0.0], 3).unwrap();
        assert_eq!(mes_shell(&h0, 0.5, 1.0).unwrap().d_e(), 8);
        assert!(matches!(mes_shell(&h, -0.5, 0.2), Err(Error::EmptyShell { .. })));
        assert!(mes_shell(&h, 1.0, -0.1).is_err());
    }

    #[test]
    fn samples_stay_in_shell() {
        let h = two_level(4);
        let s = mes_shell(&h, 2.0, 0.0).unwrap();
        let psi = mes_sample(&s, &mut RngStream::new(3, 0));
        for (i, a) in psi.amplitudes().iter().enumerate() {
            if !s.contains(i) {
                assert_eq!(*a, ZERO);
            }
        }
        assert!((psi.norm() - 1.0).abs() < 1e-12);

        let single = mes_shell(&h, 0.0, 0.0).unwrap();
        let psi = mes_sample(&single, &mut RngStream::new(3, 1));
        assert!((psi.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beta_examples() {
        let h0 = HamiltonianSpec::uniform(&[0.0, 0.0], 8).unwrap();
        assert_eq!(estimate_beta(&h0, 0.0, 1, None).unwrap().beta, 0.0);

        let h = two_level(8);
        let half = estimate_beta(&h, 4.0, 1, None).unwrap();
        assert!(half.beta.abs() < 1e-9, "{}", half.beta);
        let quarter = estimate_beta(&h, 2.0, 1, None).unwrap();
        // Ω(2)/Ω(1) = C(7,2)/C(7,1) = 3
        assert!((quarter.beta - 3f64.ln()).abs() < 1e-6, "{}", quarter.beta);
        assert!(matches!(estimate_beta(&h, 20.0, 1, None), Err(Error::UnstableBeta { .. })));
    }

    #[test]
    fn gibbs_examples() {
        let g = gibbs_state(&[vec![0.0, 1.0]], 2f64.ln()).unwrap();
        assert!((g.entries()[(0, 0)].re - 2.0 / 3.0).abs() < 1e-15);
        assert!((g.entries()[(1, 1)].re - 1.0 / 3.0).abs() < 1e-15);
        let g = gibbs_state(&[vec![0.0, 1.0], vec![0.0, 1.0]], 0.0).unwrap();
        assert!(g.entries().iter().enumerate().all(|(k, z)| if k % 5 == 0 { (z.re - 0.25).abs() < 1e-15 } else { *z == ZERO }));
        let g = gibbs_state(&[vec![0.0, 1.0, 2.0]], 800.0).unwrap();
        assert!((g.entries()[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!(g.entries().iter().all(|z| z.re.is_finite()));
    }

    #[test]
    fn bound_arithmetic() {
        assert!((variance_bound(2, 1, 16) - 4.0 / 17.0).abs() < 1e-15);
        assert!((variance_bound(2, 1, 256) - 4.0 / 257.0).abs() < 1e-15);
    }

    #[test]
    fn reduced_shell_average_matches_counting() {
        let h = two_level(8);
        let s = mes_shell(&h, 2.0, 0.0).unwrap();
        assert_eq!(s.d_e(), 28);
        let avg = s.reduced_average(1).unwrap();
        assert!((avg.entries()[(0, 0)].re - 0.75).abs() < 1e-15);
    }
}
