//! Gauge trace and logical-state diagnostics.
//!
//! The gauge trace sums `psi(l, g) conj(psi(l', g))` over the gauge classes
//! `g = (m_gauge, offset)` of the grid, using only exact integer index
//! arithmetic to classify points. Its output is Hermitian by construction
//! (upper triangle computed, lower mirrored).

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cluster::TwoModeState;
use crate::error::{Error, Result};
use crate::states::ModeWavefunction;

pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
pub const PSD_TOLERANCE: f64 = 1e-10;

/// 2x2 (single mode) or 4x4 (two modes) logical density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalDensityMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

/// Squared Schmidt coefficients of a pure CV state across the logical/gauge
/// cut, and the entanglement entropy in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchmidtData {
    pub p_major: f64,
    pub p_minor: f64,
    pub entropy_bits: f64,
}

impl LogicalDensityMatrix {
    /// Validates Hermiticity, unit trace, and positive semidefiniteness.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim != 2 && dim != 4 {
            return Err(Error::InvalidDensityMatrix(format!("dim must be 2 or 4, got {dim}")));
        }
        if entries.len() != dim * dim {
            return Err(Error::InvalidDensityMatrix(format!(
                "expected {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        let rho = Self { dim, entries };
        for i in 0..dim {
            for j in 0..dim {
                let d = (rho.entry(i, j) - rho.entry(j, i).conj()).norm();
                if d > HERMITICITY_TOLERANCE {
                    return Err(Error::InvalidDensityMatrix(format!(
                        "not Hermitian: |rho[{i}{j}] - conj(rho[{j}{i}])| = {d:.3e}"
                    )));
                }
            }
        }
        let tr: Complex64 = (0..dim).map(|i| rho.entry(i, i)).sum();
        if (tr - Complex64::new(1.0, 0.0)).norm() > HERMITICITY_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!("trace = {tr}, expected 1")));
        }
        for ev in rho.eigenvalues() {
            if ev < -PSD_TOLERANCE {
                return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {ev:.3e}")));
            }
        }
        Ok(rho)
    }

    /// Projector onto a pure state with the given amplitudes (normalized here).
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let dim = amplitudes.len();
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidDensityMatrix("zero state vector".into()));
        }
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                entries[i * dim + j] = amplitudes[i] * amplitudes[j].conj() / (norm * norm);
            }
        }
        Self::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    fn to_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> =
            self.to_matrix().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += (self.entry(i, j) * self.entry(j, i)).re;
            }
        }
        acc
    }

    /// Bloch components for `dim == 2`.
    ///
    /// Sign conventions: `ell = (I - Z)/2` fixes `z = rho00 - rho11`; the
    /// frame is right-handed, so `x = 2 Re rho01` and `y = -2 Im rho01`.
    pub fn bloch_vector(&self) -> (f64, f64, f64) {
        assert_eq!(self.dim, 2, "Bloch vector is defined for a single qubit");
        let x = 2.0 * self.entry(0, 1).re;
        let y = -2.0 * self.entry(0, 1).im;
        let z = self.entry(0, 0).re - self.entry(1, 1).re;
        (x, y, z)
    }

    /// Entanglement entropy `-sum p log2 p` of the eigenvalue distribution.
    pub fn entropy_bits(&self) -> f64 {
        -self
            .eigenvalues()
            .iter()
            .filter(|&&p| p > 1e-15)
            .map(|&p| p * p.log2())
            .sum::<f64>()
    }

    /// Conjugate by a unitary given in row-major order: `U rho U^dag`.
    pub fn conjugated(&self, u: &[Complex64]) -> Result<Self> {
        let n = self.dim;
        assert_eq!(u.len(), n * n);
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..n {
                    for b in 0..n {
                        acc += u[i * n + a] * self.entry(a, b) * u[j * n + b].conj();
                    }
                }
                out[i * n + j] = acc;
            }
        }
        Self::new(n, out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "dim": self.dim,
            "entries": self.entries.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let dim = v["dim"].as_u64().ok_or_else(|| Error::Parse("missing dim".into()))? as usize;
        let entries = v["entries"]
            .as_array()
            .ok_or_else(|| Error::Parse("missing entries".into()))?
            .iter()
            .map(|pair| {
                let re = pair[0].as_f64().ok_or_else(|| Error::Parse("bad entry".into()))?;
                let im = pair[1].as_f64().ok_or_else(|| Error::Parse("bad entry".into()))?;
                Ok(Complex64::new(re, im))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dim, entries)
    }
}

/// Trace over the gauge mode of a normalized single-mode pure state.
pub fn gauge_trace(state: &ModeWavefunction) -> Result<LogicalDensityMatrix> {
    if !state.is_normalized() {
        return Err(Error::NotNormalized(state.norm_sq()));
    }
    let grid = state.grid();
    let mut pairs = vec![[Complex64::new(0.0, 0.0); 2]; grid.gauge_class_count()];
    for (j, &a) in state.amplitudes().iter().enumerate() {
        let site = grid.site_labels(j);
        pairs[grid.gauge_class(site)][site.ell as usize] = a;
    }
    let d = grid.spacing();
    let mut p00 = 0.0;
    let mut p11 = 0.0;
    let mut p01 = Complex64::new(0.0, 0.0);
    for [a0, a1] in &pairs {
        p00 += a0.norm_sqr();
        p11 += a1.norm_sqr();
        p01 += a0 * a1.conj();
    }
    let rho01 = d * p01;
    LogicalDensityMatrix::new(
        2,
        vec![Complex64::new(d * p00, 0.0), rho01, rho01.conj(), Complex64::new(d * p11, 0.0)],
    )
}

/// Mode-wise gauge trace of a normalized two-mode pure state; rows and
/// columns are ordered `(l1 l2) = 00, 01, 10, 11`.
pub fn gauge_trace_two_mode(state: &TwoModeState) -> Result<LogicalDensityMatrix> {
    if !state.is_normalized() {
        return Err(Error::NotNormalized(state.norm_sq()));
    }
    let (g1, g2) = (state.grid1(), state.grid2());
    let (nc1, nc2) = (g1.gauge_class_count(), g2.gauge_class_count());
    let labels1: Vec<_> = (0..g1.len()).map(|j| g1.site_labels(j)).collect();
    let labels2: Vec<_> = (0..g2.len()).map(|j| g2.site_labels(j)).collect();
    // quads[g1 * nc2 + g2][l1 * 2 + l2]
    let mut quads = vec![[Complex64::new(0.0, 0.0); 4]; nc1 * nc2];
    for (j1, s1) in labels1.iter().enumerate() {
        let c1 = g1.gauge_class(*s1);
        let row = state.row(j1);
        for (j2, s2) in labels2.iter().enumerate() {
            let c2 = g2.gauge_class(*s2);
            quads[c1 * nc2 + c2][(s1.ell * 2 + s2.ell) as usize] = row[j2];
        }
    }
    let w = g1.spacing() * g2.spacing();
    let mut entries = vec![Complex64::new(0.0, 0.0); 16];
    for a in 0..4 {
        for b in a..4 {
            let mut acc = Complex64::new(0.0, 0.0);
            for q in &quads {
                acc += q[a] * q[b].conj();
            }
            entries[a * 4 + b] = w * acc;
            entries[b * 4 + a] = (w * acc).conj();
        }
    }
    for e in entries.iter_mut().step_by(5) {
        e.im = 0.0;
    }
    LogicalDensityMatrix::new(4, entries)
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(sigma) rho sqrt(sigma)))^2`.
///
/// For qubits this equals the closed form `Tr(rho sigma) + 2 sqrt(det rho
/// det sigma)`; the spectral route below is used for every dimension so a
/// single code path covers the 4x4 two-mode case.
pub fn logical_fidelity(rho: &LogicalDensityMatrix, sigma: &LogicalDensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::InvalidDensityMatrix(format!(
            "dimension mismatch: {} vs {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let sqrt_sigma = hermitian_sqrt(&sigma.to_matrix())?;
    let inner = &sqrt_sigma * rho.to_matrix() * &sqrt_sigma;
    let mut root_sum = 0.0;
    for ev in inner.symmetric_eigenvalues().iter() {
        if *ev < -PSD_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!(
                "fidelity inner matrix has eigenvalue {ev:.3e}"
            )));
        }
        root_sum += ev.max(0.0).sqrt();
    }
    Ok((root_sum * root_sum).clamp(0.0, 1.0 + 1e-9).min(1.0))
}

/// Qubit closed form for the Uhlmann fidelity; kept as an independent route
/// against the spectral implementation.
pub fn qubit_fidelity_closed_form(
    rho: &LogicalDensityMatrix,
    sigma: &LogicalDensityMatrix,
) -> f64 {
    assert_eq!(rho.dim(), 2);
    assert_eq!(sigma.dim(), 2);
    let tr_prod: f64 = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| (rho.entry(i, j) * sigma.entry(j, i)).re)
        .sum();
    let det = |m: &LogicalDensityMatrix| {
        (m.entry(0, 0) * m.entry(1, 1) - m.entry(0, 1) * m.entry(1, 0)).re
    };
    (tr_prod + 2.0 * (det(rho).max(0.0) * det(sigma).max(0.0)).sqrt()).min(1.0)
}

fn hermitian_sqrt(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let eig = m.clone().symmetric_eigen();
    let mut roots = eig.eigenvalues.clone();
    for ev in roots.iter_mut() {
        if *ev < -PSD_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!(
                "matrix square root of non-PSD input (eigenvalue {ev:.3e})"
            )));
        }
        *ev = ev.max(0.0).sqrt();
    }
    let d = DMatrix::from_diagonal(&roots.map(|x| Complex64::new(x, 0.0)));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

/// Schmidt structure of a normalized pure state across the logical/gauge cut.
///
/// The logical side is two-dimensional, so the squared Schmidt coefficients
/// are the eigenvalues of the gauge trace.
pub fn schmidt_data(state: &ModeWavefunction) -> Result<SchmidtData> {
    let rho = gauge_trace(state)?;
    let ev = rho.eigenvalues();
    let (p_minor, p_major) = (ev[0].max(0.0), ev[1]);
    let h = |p: f64| if p > 1e-15 { -p * p.log2() } else { 0.0 };
    Ok(SchmidtData { p_major, p_minor, entropy_bits: h(p_major) + h(p_minor) })
}

/// Logical rotation `R_z(theta) = diag(e^{-i theta/2}, e^{i theta/2})`,
/// row-major. Under `Z(t)` the logical state rotates by `theta = t * alpha`.
pub fn rz(theta: f64) -> [Complex64; 4] {
    [
        Complex64::from_polar(1.0, -theta / 2.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::from_polar(1.0, theta / 2.0),
    ]
}

/// Pauli X as a row-major unitary.
pub fn pauli_x() -> [Complex64; 4] {
    [
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PositionGrid;
    use approx::assert_abs_diff_eq;

    fn grid() -> PositionGrid {
        PositionGrid::new(std::f64::consts::PI.sqrt(), 16, 12).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ket_zero() -> LogicalDensityMatrix {
        LogicalDensityMatrix::pure(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap()
    }

    fn ket_one() -> LogicalDensityMatrix {
        LogicalDensityMatrix::pure(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap()
    }

    fn ket_plus() -> LogicalDensityMatrix {
        LogicalDensityMatrix::pure(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap()
    }

    fn maximally_mixed() -> LogicalDensityMatrix {
        LogicalDensityMatrix::new(
            2,
            vec![c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn narrow_gaussian_at_origin_encodes_zero() {
        let wf = ModeWavefunction::gaussian(grid(), 0.0, 0.005).unwrap();
        let rho = gauge_trace(&wf).unwrap();
        assert_abs_diff_eq!(rho.entry(0, 0).re, 1.0, epsilon = 1e-10);
        assert!(rho.entry(0, 1).norm() < 1e-10);
    }

    #[test]
    fn narrow_gaussian_one_bin_over_encodes_one() {
        let g = grid();
        let wf = ModeWavefunction::gaussian(g, g.alpha(), 0.005).unwrap();
        let rho = gauge_trace(&wf).unwrap();
        assert_abs_diff_eq!(rho.entry(1, 1).re, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn gaussian_on_bin_boundary_is_balanced_mixture() {
        // The half-open binning puts the boundary point itself in the upper
        // bin, an asymmetry of order delta/sigma; a fine grid keeps it small.
        let g = PositionGrid::new(std::f64::consts::PI.sqrt(), 2560, 4).unwrap();
        let wf = ModeWavefunction::gaussian(g, g.alpha() / 2.0, 0.01).unwrap();
        let rho = gauge_trace(&wf).unwrap();
        assert_abs_diff_eq!(rho.entry(0, 0).re, 0.5, epsilon = 5e-3);
        assert_abs_diff_eq!(rho.entry(1, 1).re, 0.5, epsilon = 5e-3);
        // cross overlap suppressed as exp(-alpha^2 / (8 var))
        assert!(rho.entry(0, 1).norm() < 1e-10);
        let s = schmidt_data(&wf).unwrap();
        assert_abs_diff_eq!(s.entropy_bits, 1.0, epsilon = 1e-4);
    }

    #[test]
    fn broad_momentum_squeezed_state_encodes_plus() {
        let g = PositionGrid::new(std::f64::consts::PI.sqrt(), 16, 32).unwrap();
        // var_q = 25 -> p_variance = 1/(4*25)
        let wf = ModeWavefunction::momentum_squeezed(g, 0.01).unwrap();
        let rho = gauge_trace(&wf).unwrap();
        assert!(logical_fidelity(&rho, &ket_plus()).unwrap() > 0.99);
        // finite width: close to but not exactly a product state
        let s = schmidt_data(&wf).unwrap();
        assert!(s.entropy_bits > 0.0 && s.entropy_bits < 0.1);
    }

    #[test]
    fn near_vacuum_width_biases_toward_zero() {
        let g = grid();
        // vacuum: var_q = var_p = 1/2
        let wf = ModeWavefunction::momentum_squeezed(g, 0.5).unwrap();
        let (_, _, z) = gauge_trace(&wf).unwrap().bloch_vector();
        assert!(z > 0.5, "z = {z}");
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let g = grid();
        let wf = ModeWavefunction::gaussian(g, 0.0, 0.05).unwrap();
        let doubled = ModeWavefunction::from_amplitudes(
            g,
            wf.amplitudes().iter().map(|a| 2.0 * a).collect(),
        )
        .unwrap();
        assert!(matches!(gauge_trace(&doubled), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn fidelity_basics() {
        let rho = ket_plus();
        assert_abs_diff_eq!(logical_fidelity(&rho, &rho).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            logical_fidelity(&ket_zero(), &ket_one()).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            logical_fidelity(&ket_plus(), &maximally_mixed()).unwrap(),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn closed_form_matches_spectral_route() {
        let wf = ModeWavefunction::gaussian(grid(), 0.4, 0.1).unwrap().momentum_phase(0.8);
        let rho = gauge_trace(&wf).unwrap();
        let sigma = maximally_mixed();
        assert_abs_diff_eq!(
            logical_fidelity(&rho, &sigma).unwrap(),
            qubit_fidelity_closed_form(&rho, &sigma),
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            logical_fidelity(&rho, &ket_plus()).unwrap(),
            qubit_fidelity_closed_form(&rho, &ket_plus()),
            epsilon = 1e-10
        );
    }

    #[test]
    fn fidelity_is_unitarily_invariant() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let wf = ModeWavefunction::gaussian(grid(), 0.2, 0.08).unwrap();
        let rho = gauge_trace(&wf).unwrap();
        let sigma = maximally_mixed();
        let f0 = logical_fidelity(&rho, &sigma).unwrap();
        for _ in 0..20 {
            // random SU(2) via an axis-angle rotation
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let lam: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let u = [
                Complex64::from_polar((theta / 2.0).cos(), phi),
                Complex64::from_polar((theta / 2.0).sin(), lam),
                Complex64::from_polar(-(theta / 2.0).sin(), -lam),
                Complex64::from_polar((theta / 2.0).cos(), -phi),
            ];
            let f = logical_fidelity(
                &rho.conjugated(&u).unwrap(),
                &sigma.conjugated(&u).unwrap(),
            )
            .unwrap();
            assert_abs_diff_eq!(f, f0, epsilon = 1e-10);
        }
    }

    #[test]
    fn bloch_vectors_of_cardinal_states() {
        assert_eq!(ket_zero().bloch_vector(), (0.0, 0.0, 1.0));
        let (x, y, z) = ket_plus().bloch_vector();
        assert_abs_diff_eq!(x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z, 0.0, epsilon = 1e-12);
        assert_eq!(maximally_mixed().bloch_vector(), (0.0, 0.0, 0.0));
    }

    #[test]
    fn purity_of_reference_states() {
        assert_abs_diff_eq!(ket_plus().purity(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(maximally_mixed().purity(), 0.5, epsilon = 1e-12);
        let quarter = LogicalDensityMatrix::new(
            4,
            (0..16)
                .map(|i| if i % 5 == 0 { c(0.25, 0.0) } else { c(0.0, 0.0) })
                .collect(),
        )
        .unwrap();
        assert_abs_diff_eq!(quarter.purity(), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn schmidt_probabilities_match_purity() {
        let wf = ModeWavefunction::gaussian(grid(), 0.6, 0.12).unwrap();
        let rho = gauge_trace(&wf).unwrap();
        let s = schmidt_data(&wf).unwrap();
        assert_abs_diff_eq!(s.p_major + s.p_minor, 1.0, epsilon = 1e-10);
        assert!(s.p_major >= s.p_minor);
        assert_abs_diff_eq!(
            rho.purity(),
            s.p_major * s.p_major + s.p_minor * s.p_minor,
            epsilon = 1e-10
        );
    }

    #[test]
    fn z_phase_acts_as_logical_rotation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let g = grid();
        let states = [
            ModeWavefunction::gaussian(g, 0.0, 0.3).unwrap(),
            ModeWavefunction::gaussian(g, 0.9, 0.2).unwrap().momentum_phase(0.4),
            ModeWavefunction::gaussian(g, -1.3, 0.6).unwrap(),
        ];
        for wf in &states {
            for _ in 0..20 {
                let t: f64 = rng.gen_range(-4.0..4.0);
                let lhs = gauge_trace(&wf.momentum_phase(t)).unwrap();
                let rhs =
                    gauge_trace(wf).unwrap().conjugated(&rz(t * g.alpha())).unwrap();
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((lhs.entry(i, j) - rhs.entry(i, j)).norm() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn density_matrix_json_round_trip() {
        let wf = ModeWavefunction::gaussian(grid(), 0.4, 0.1).unwrap().momentum_phase(1.1);
        let rho = gauge_trace(&wf).unwrap();
        let back = LogicalDensityMatrix::from_json(&rho.to_json()).unwrap();
        assert_eq!(back, rho);
    }
}
