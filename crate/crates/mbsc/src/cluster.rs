//! Two-mode states, the position-controlled phase gate, and the
//! bin-offset measurement used to distill a logical cluster state from
//! broad Gaussian inputs.
//!
//! The phase gate `CZ(g): psi(s, t) -> e^{i g s t} psi(s, t)` is diagonal in
//! position, so it is exact on the grid. At `alpha = sqrt(pi)` and `g = 1`
//! its phase splits over the subsystem labels; `pair_phase_error` and
//! `graph_phase_error` measure the float residual of that split.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{gauge_trace_two_mode, logical_fidelity, LogicalDensityMatrix};
use crate::error::{Error, Result};
use crate::grid::{PositionGrid, SiteLabels};
use crate::states::ModeWavefunction;

/// Joint grids above this point count are refused unless explicitly allowed.
pub const MAX_JOINT_POINTS: usize = 1 << 24;

const SQRT_PI_TOLERANCE: f64 = 1e-12;

/// Pure state of two modes; amplitudes are row-major over `(j1, j2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    grid1: PositionGrid,
    grid2: PositionGrid,
    amps: Vec<Complex64>,
}

impl TwoModeState {
    /// Product state `psi1 (x) psi2`, guarded against oversized joint grids.
    pub fn product(a: &ModeWavefunction, b: &ModeWavefunction) -> Result<Self> {
        Self::product_with_limit(a, b, false)
    }

    pub fn product_with_limit(
        a: &ModeWavefunction,
        b: &ModeWavefunction,
        allow_large: bool,
    ) -> Result<Self> {
        let (n1, n2) = (a.grid().len(), b.grid().len());
        if !allow_large && n1 * n2 > MAX_JOINT_POINTS {
            return Err(Error::ResourceGuard(format!(
                "joint grid has {} points (> {MAX_JOINT_POINTS}); reduce the grids or allow \
                 large joint states explicitly",
                n1 * n2
            )));
        }
        let mut amps = Vec::with_capacity(n1 * n2);
        for x in a.amplitudes() {
            for y in b.amplitudes() {
                amps.push(x * y);
            }
        }
        Ok(Self { grid1: *a.grid(), grid2: *b.grid(), amps })
    }

    pub fn grid1(&self) -> &PositionGrid {
        &self.grid1
    }

    pub fn grid2(&self) -> &PositionGrid {
        &self.grid2
    }

    pub fn row(&self, j1: usize) -> &[Complex64] {
        let n2 = self.grid2.len();
        &self.amps[j1 * n2..(j1 + 1) * n2]
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// `delta1 * delta2 * sum |psi|^2`.
    pub fn norm_sq(&self) -> f64 {
        self.grid1.spacing()
            * self.grid2.spacing()
            * self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sq() - 1.0).abs() <= crate::states::NORM_TOLERANCE
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sq().sqrt();
        if n > 0.0 {
            for a in &mut self.amps {
                *a /= n;
            }
        }
    }

    /// `psi(s, t) -> e^{i g s t} psi(s, t)`, exact and norm-preserving.
    pub fn apply_cz(&self, g: f64) -> Self {
        let n2 = self.grid2.len();
        let t: Vec<f64> = (0..n2).map(|k| self.grid2.position(k)).collect();
        let mut amps = self.amps.clone();
        for j1 in 0..self.grid1.len() {
            let s = self.grid1.position(j1);
            for (k, a) in amps[j1 * n2..(j1 + 1) * n2].iter_mut().enumerate() {
                *a *= Complex64::from_polar(1.0, g * s * t[k]);
            }
        }
        Self { grid1: self.grid1, grid2: self.grid2, amps }
    }

    /// Multiply mode `mode` by the momentum phase `e^{i t s}`.
    pub fn momentum_phase_mode(&self, mode: usize, t: f64) -> Self {
        assert!(mode < 2);
        let n2 = self.grid2.len();
        let mut amps = self.amps.clone();
        for j1 in 0..self.grid1.len() {
            for k in 0..n2 {
                let s = if mode == 0 { self.grid1.position(j1) } else { self.grid2.position(k) };
                amps[j1 * n2 + k] *= Complex64::from_polar(1.0, t * s);
            }
        }
        Self { grid1: self.grid1, grid2: self.grid2, amps }
    }

    /// Probability of each bin-offset class of `mode`.
    pub fn offset_distribution(&self, mode: usize) -> Vec<f64> {
        assert!(mode < 2);
        let grid = if mode == 0 { &self.grid1 } else { &self.grid2 };
        let mut p = vec![0.0; grid.points_per_bin()];
        let n2 = self.grid2.len();
        for (j, a) in self.amps.iter().enumerate() {
            let site = if mode == 0 {
                grid.site_labels(j / n2)
            } else {
                grid.site_labels(j % n2)
            };
            p[site.offset] += a.norm_sqr();
        }
        let w = self.grid1.spacing() * self.grid2.spacing();
        for q in &mut p {
            *q *= w;
        }
        p
    }

    /// Shift mode `mode` by whole grid steps, dropping clipped amplitudes and
    /// renormalizing. Used for measurement corrections, where the shift is
    /// conditioned on an outcome and edge loss is accepted.
    fn shift_mode_clipped(&self, mode: usize, steps: i64) -> Self {
        assert!(mode < 2);
        let n1 = self.grid1.len() as i64;
        let n2 = self.grid2.len() as i64;
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for j1 in 0..n1 {
            for j2 in 0..n2 {
                let (s1, s2) = if mode == 0 { (j1 - steps, j2) } else { (j1, j2 - steps) };
                if (0..n1).contains(&s1) && (0..n2).contains(&s2) {
                    amps[(j1 * n2 + j2) as usize] = self.amps[(s1 * n2 + s2) as usize];
                }
            }
        }
        let mut out = Self { grid1: self.grid1, grid2: self.grid2, amps };
        out.normalize();
        out
    }
}

/// Outcome record of one bin-offset measurement.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeasurementOutcome {
    pub mode: usize,
    pub offset_class: usize,
    pub u0: f64,
    pub probability: f64,
}

/// Project `mode` onto bin-offset class `class`, renormalize, and shift the
/// residual offset `u0` to zero. Purely local to `mode`; after the phase
/// gate the outcome also fixes a momentum byproduct `e^{i u0 t}` on the
/// other mode, which callers undo with [`TwoModeState::momentum_phase_mode`].
pub fn modular_measure_and_correct(
    state: &TwoModeState,
    mode: usize,
    class: usize,
) -> Result<(TwoModeState, MeasurementOutcome)> {
    assert!(mode < 2);
    let grid = if mode == 0 { state.grid1() } else { state.grid2() };
    if class >= grid.points_per_bin() {
        return Err(Error::Domain(format!(
            "offset class {class} out of range 0..{}",
            grid.points_per_bin()
        )));
    }
    let p = state.offset_distribution(mode)[class];
    if p < 1e-15 {
        return Err(Error::ZeroProbabilityOutcome(class));
    }
    let n2 = state.grid2().len();
    let scale = 1.0 / p.sqrt();
    let mut amps = state.amps.clone();
    for (j, a) in amps.iter_mut().enumerate() {
        let site =
            if mode == 0 { grid.site_labels(j / n2) } else { grid.site_labels(j % n2) };
        if site.offset == class {
            *a *= scale;
        } else {
            *a = Complex64::new(0.0, 0.0);
        }
    }
    let projected = TwoModeState { grid1: state.grid1, grid2: state.grid2, amps };
    let u0 = grid.offset_to_u(class);
    let corrected = projected.shift_mode_clipped(mode, grid.correction_steps(class));
    Ok((corrected, MeasurementOutcome { mode, offset_class: class, u0, probability: p }))
}

/// Draw an offset class of `mode` from its outcome distribution.
pub fn sample_offset_class(state: &TwoModeState, mode: usize, rng: &mut ChaCha8Rng) -> usize {
    let p = state.offset_distribution(mode);
    let total: f64 = p.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (r, &q) in p.iter().enumerate() {
        x -= q;
        if x <= 0.0 {
            return r;
        }
    }
    p.len() - 1
}

/// Edge list of a simple graph on `n_modes` vertices.
#[derive(Debug, Clone)]
pub struct GraphAdjacency {
    n_modes: usize,
    edges: Vec<(usize, usize)>,
}

impl GraphAdjacency {
    pub fn new(n_modes: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        for &(a, b) in &edges {
            if a >= n_modes || b >= n_modes {
                return Err(Error::Domain(format!(
                    "edge ({a}, {b}) out of range for {n_modes} modes"
                )));
            }
            if a == b {
                return Err(Error::Domain(format!("self-loop at mode {a}")));
            }
        }
        Ok(Self { n_modes, edges })
    }

    /// Open chain `0 - 1 - ... - (n-1)`.
    pub fn line(n_modes: usize) -> Self {
        Self { n_modes, edges: (1..n_modes).map(|i| (i - 1, i)).collect() }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

fn require_sqrt_pi(grid: &PositionGrid) -> Result<()> {
    if (grid.alpha() - std::f64::consts::PI.sqrt()).abs() > SQRT_PI_TOLERANCE {
        return Err(Error::Domain(format!(
            "phase split requires alpha = sqrt(pi), got {}",
            grid.alpha()
        )));
    }
    Ok(())
}

/// Gate phase for one edge reassembled from subsystem labels. Terms that are
/// whole multiples of 2 pi at `alpha^2 = pi` are dropped.
fn split_phase(grid: &PositionGrid, a: SiteLabels, b: SiteLabels) -> Complex64 {
    let alpha = grid.alpha();
    let (ua, ub) = (grid.offset_to_u(a.offset), grid.offset_to_u(b.offset));
    let angle = std::f64::consts::PI * (a.ell as f64) * (b.ell as f64)
        + alpha * (a.ell as f64 * ub + b.ell as f64 * ua)
        + ua * ub
        + 2.0 * alpha * (a.m_gauge as f64 * ub + b.m_gauge as f64 * ua);
    Complex64::from_polar(1.0, angle)
}

/// Max residual `|e^{i s t} - split|` over random grid-point pairs.
pub fn pair_phase_error(grid: &PositionGrid, n_pairs: usize, seed: u64) -> Result<f64> {
    require_sqrt_pi(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n_pairs {
        let j = rng.gen_range(0..grid.len());
        let k = rng.gen_range(0..grid.len());
        let lhs = Complex64::from_polar(1.0, grid.position(j) * grid.position(k));
        let rhs = split_phase(grid, grid.site_labels(j), grid.site_labels(k));
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// Max residual of the edge-wise phase split over random mode-position
/// tuples of a graph.
pub fn graph_phase_error(
    grid: &PositionGrid,
    graph: &GraphAdjacency,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    require_sqrt_pi(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n_samples {
        let sites: Vec<usize> = (0..graph.n_modes()).map(|_| rng.gen_range(0..grid.len())).collect();
        let mut lhs = Complex64::new(1.0, 0.0);
        let mut rhs = Complex64::new(1.0, 0.0);
        for &(a, b) in graph.edges() {
            lhs *= Complex64::from_polar(1.0, grid.position(sites[a]) * grid.position(sites[b]));
            rhs *= split_phase(grid, grid.site_labels(sites[a]), grid.site_labels(sites[b]));
        }
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// Entanglement entropy (bits) of one mode's gauge sector against everything
/// else, from the gauge-class reduced density matrix.
pub fn gauge_marginal_entropy_bits(state: &TwoModeState) -> Result<[f64; 2]> {
    if !state.is_normalized() {
        return Err(Error::NotNormalized(state.norm_sq()));
    }
    let mut out = [0.0; 2];
    for mode in 0..2 {
        let grid = if mode == 0 { state.grid1() } else { state.grid2() };
        let other_len = if mode == 0 { state.grid2().len() } else { state.grid1().len() };
        let nc = grid.gauge_class_count();
        // site index of each (gauge class, logical label) pair; edge bins can
        // miss one parity, those amplitudes are zero
        let mut site_of = vec![[None::<usize>; 2]; nc];
        for j in 0..grid.len() {
            let s = grid.site_labels(j);
            site_of[grid.gauge_class(s)][s.ell as usize] = Some(j);
        }
        let n2 = state.grid2().len();
        let amp = |j_mode: usize, j_other: usize| {
            if mode == 0 {
                state.amps[j_mode * n2 + j_other]
            } else {
                state.amps[j_other * n2 + j_mode]
            }
        };
        let w = state.grid1().spacing() * state.grid2().spacing();
        let mut rho = DMatrix::from_element(nc, nc, Complex64::new(0.0, 0.0));
        for g in 0..nc {
            for gp in g..nc {
                let mut acc = Complex64::new(0.0, 0.0);
                for ell in 0..2 {
                    if let (Some(j), Some(jp)) = (site_of[g][ell], site_of[gp][ell]) {
                        for j_other in 0..other_len {
                            acc += amp(j, j_other) * amp(jp, j_other).conj();
                        }
                    }
                }
                rho[(g, gp)] = w * acc;
                rho[(gp, g)] = (w * acc).conj();
            }
        }
        out[mode] = rho
            .symmetric_eigenvalues()
            .iter()
            .filter(|&&p| p > 1e-15)
            .map(|&p| -p * p.log2())
            .sum();
    }
    Ok(out)
}

/// Logical target of the two-mode protocol: the phase gate applied to a
/// product of equal superpositions, `(|00> + |01> + |10> - |11>)/2`.
pub fn ideal_cluster_state() -> LogicalDensityMatrix {
    let h = Complex64::new(0.5, 0.0);
    LogicalDensityMatrix::pure(&[h, h, h, -h]).expect("normalized projector")
}

/// How measurement outcomes are chosen in the two-mode protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementPolicy {
    /// Deterministic: both measurements post-select the given offset class.
    Fixed { class: usize },
    /// Outcomes drawn from the physical distribution with a seeded generator.
    Sampled { seed: u64 },
}

impl MeasurementPolicy {
    fn describe(&self) -> String {
        match self {
            Self::Fixed { class } => format!("fixed offset class {class}"),
            Self::Sampled { seed } => format!("sampled with seed {seed}"),
        }
    }
}

/// Diagnostics of one stage of the two-mode protocol.
#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub label: String,
    pub rho_logical: serde_json::Value,
    pub fidelity_cluster: f64,
    pub purity: f64,
    pub entropy_bits: f64,
    pub gauge_entropy_bits: [f64; 2],
}

/// Full record of a two-mode cluster distillation run.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterExperimentReport {
    pub alpha: f64,
    pub sigma: f64,
    pub points_per_bin: usize,
    pub n_bins: usize,
    pub policy: String,
    pub stages: Vec<StageReport>,
    pub outcomes: Vec<MeasurementOutcome>,
}

impl ClusterExperimentReport {
    pub fn final_fidelity(&self) -> f64 {
        self.stages.last().map(|s| s.fidelity_cluster).unwrap_or(f64::NAN)
    }
}

fn stage_report(label: &str, state: &TwoModeState) -> Result<StageReport> {
    let rho = gauge_trace_two_mode(state)?;
    Ok(StageReport {
        label: label.into(),
        fidelity_cluster: logical_fidelity(&rho, &ideal_cluster_state())?,
        purity: rho.purity(),
        entropy_bits: rho.entropy_bits(),
        gauge_entropy_bits: gauge_marginal_entropy_bits(state)?,
        rho_logical: rho.to_json(),
    })
}

/// Run the two-mode protocol: prepare two broad Gaussians, entangle them
/// with the phase gate, then measure and correct each mode's bin offset.
/// The logical cluster state is hidden in the entangled Gaussians and the
/// offset measurements disentangle it from the gauge sector.
pub fn hidden_cluster_experiment(
    sigma: f64,
    points_per_bin: usize,
    n_bins: usize,
    policy: MeasurementPolicy,
) -> Result<ClusterExperimentReport> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Domain(format!("input width must be positive, got {sigma}")));
    }
    let alpha = std::f64::consts::PI.sqrt();
    let grid = PositionGrid::new(alpha, points_per_bin, n_bins)?;
    let input = ModeWavefunction::gaussian(grid, 0.0, sigma * sigma)?;
    let mut state = TwoModeState::product(&input, &input)?;
    let mut stages = vec![stage_report("prepared", &state)?];
    state = state.apply_cz(1.0);
    stages.push(stage_report("entangled", &state)?);

    let mut rng = match policy {
        MeasurementPolicy::Sampled { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        MeasurementPolicy::Fixed { .. } => None,
    };
    let mut outcomes = Vec::new();
    for mode in 0..2 {
        let class = match (&policy, rng.as_mut()) {
            (MeasurementPolicy::Fixed { class }, _) => *class,
            (MeasurementPolicy::Sampled { .. }, Some(r)) => sample_offset_class(&state, mode, r),
            _ => unreachable!(),
        };
        let (next, outcome) = modular_measure_and_correct(&state, mode, class)?;
        // undo the momentum byproduct the gate left on the neighbor
        state = next.momentum_phase_mode(1 - mode, -outcome.u0);
        outcomes.push(outcome);
        stages.push(stage_report(&format!("measured mode {mode}"), &state)?);
    }

    Ok(ClusterExperimentReport {
        alpha,
        sigma,
        points_per_bin,
        n_bins,
        policy: policy.describe(),
        stages,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::gauge_trace;
    use approx::assert_abs_diff_eq;

    fn grid() -> PositionGrid {
        PositionGrid::new(std::f64::consts::PI.sqrt(), 16, 8).unwrap()
    }

    fn broad_input(g: PositionGrid) -> ModeWavefunction {
        let sigma = 3.0 * g.alpha();
        ModeWavefunction::gaussian(g, 0.0, sigma * sigma).unwrap()
    }

    #[test]
    fn product_state_is_normalized_and_separable() {
        let g = grid();
        let a = ModeWavefunction::gaussian(g, 0.0, 0.2).unwrap();
        let b = ModeWavefunction::gaussian(g, 0.5, 0.3).unwrap();
        let s = TwoModeState::product(&a, &b).unwrap();
        assert!(s.is_normalized());
        assert_eq!(s.row(3)[7], a.amplitudes()[3] * b.amplitudes()[7]);
        let rho = gauge_trace_two_mode(&s).unwrap();
        // product of pure marginals: purity factorizes
        let ra = gauge_trace(&a).unwrap();
        let rb = gauge_trace(&b).unwrap();
        assert_abs_diff_eq!(rho.purity(), ra.purity() * rb.purity(), epsilon = 1e-10);
    }

    #[test]
    fn oversized_joint_grid_is_guarded() {
        let g = PositionGrid::new(std::f64::consts::PI.sqrt(), 512, 10).unwrap();
        let a = ModeWavefunction::gaussian(g, 0.0, 0.2).unwrap();
        let err = TwoModeState::product(&a, &a).unwrap_err();
        assert!(matches!(err, Error::ResourceGuard(_)));
    }

    #[test]
    fn cz_preserves_norm_and_is_diagonal() {
        let g = grid();
        let a = ModeWavefunction::gaussian(g, 0.0, 0.3).unwrap();
        let s = TwoModeState::product(&a, &a).unwrap();
        let t = s.apply_cz(1.0);
        assert_abs_diff_eq!(t.norm_sq(), 1.0, epsilon = 1e-12);
        for j in 0..g.len() {
            for k in 0..g.len() {
                assert_abs_diff_eq!(t.row(j)[k].norm(), s.row(j)[k].norm(), epsilon = 1e-14);
            }
        }
        assert_eq!(s.apply_cz(0.0), s);
    }

    #[test]
    fn pair_phase_split_is_exact_to_float_noise() {
        let e = pair_phase_error(&grid(), 20_000, 5).unwrap();
        assert!(e < 1e-10, "max residual {e}");
    }

    #[test]
    fn graph_phase_split_on_a_chain() {
        let e = graph_phase_error(&grid(), &GraphAdjacency::line(5), 500, 7).unwrap();
        assert!(e < 1e-10, "max residual {e}");
    }

    #[test]
    fn phase_split_requires_sqrt_pi_bins() {
        let g = PositionGrid::new(1.0, 16, 8).unwrap();
        assert!(pair_phase_error(&g, 10, 0).is_err());
    }

    #[test]
    fn graph_adjacency_validation() {
        assert!(GraphAdjacency::new(3, vec![(0, 3)]).is_err());
        assert!(GraphAdjacency::new(3, vec![(1, 1)]).is_err());
        assert_eq!(GraphAdjacency::line(4).edges(), &[(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn offset_distribution_is_a_distribution() {
        let g = grid();
        let s = TwoModeState::product(&broad_input(g), &broad_input(g)).unwrap().apply_cz(1.0);
        for mode in 0..2 {
            let p = s.offset_distribution(mode);
            assert_eq!(p.len(), g.points_per_bin());
            assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
            assert!(p.iter().all(|&q| q >= 0.0));
        }
    }

    #[test]
    fn measurement_projects_and_corrects_to_zero_offset() {
        let g = grid();
        let s = TwoModeState::product(&broad_input(g), &broad_input(g)).unwrap().apply_cz(1.0);
        let (after, outcome) = modular_measure_and_correct(&s, 0, 3).unwrap();
        assert!(after.is_normalized());
        assert!(outcome.probability > 0.0 && outcome.probability < 1.0);
        assert_abs_diff_eq!(outcome.u0, g.offset_to_u(3), epsilon = 0.0);
        // all support now sits in the u = 0 class of mode 0
        let p = after.offset_distribution(0);
        assert_abs_diff_eq!(p[g.points_per_bin() / 2], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn remeasuring_a_corrected_mode_is_deterministic() {
        let g = grid();
        let s = TwoModeState::product(&broad_input(g), &broad_input(g)).unwrap().apply_cz(1.0);
        let (after, _) = modular_measure_and_correct(&s, 0, 5).unwrap();
        let zero_class = g.points_per_bin() / 2;
        let (again, outcome) = modular_measure_and_correct(&after, 0, zero_class).unwrap();
        assert_abs_diff_eq!(outcome.probability, 1.0, epsilon = 1e-10);
        assert!(again.is_normalized());
        // any other class now has zero probability
        assert!(matches!(
            modular_measure_and_correct(&after, 0, 0),
            Err(Error::ZeroProbabilityOutcome(0))
        ));
    }

    #[test]
    fn out_of_range_class_is_rejected() {
        let g = grid();
        let s = TwoModeState::product(&broad_input(g), &broad_input(g)).unwrap();
        assert!(modular_measure_and_correct(&s, 0, g.points_per_bin()).is_err());
    }

    #[test]
    fn experiment_distills_the_cluster_state() {
        let g = grid();
        // post-select the u = 0 class on both modes
        let r = hidden_cluster_experiment(
            3.0 * g.alpha(),
            16,
            8,
            MeasurementPolicy::Fixed { class: 8 },
        )
        .unwrap();
        assert_eq!(r.stages.len(), 4);
        // entangled but unmeasured: the logical state is still mixed
        let entangled = &r.stages[1];
        assert_abs_diff_eq!(entangled.fidelity_cluster, 0.6245, epsilon = 1e-3);
        assert_abs_diff_eq!(entangled.purity, 0.4481, epsilon = 1e-3);
        // the measurements disentangle it
        assert!(r.final_fidelity() > 0.99, "F = {}", r.final_fidelity());
        let last = r.stages.last().unwrap();
        assert!(last.entropy_bits < 0.1);
        // from the entangled stage on, logical mixedness and both gauge
        // entanglements fall monotonically with each measurement
        for w in r.stages[1..].windows(2) {
            assert!(w[1].entropy_bits < w[0].entropy_bits + 1e-9);
            assert!(w[1].gauge_entropy_bits[0] < w[0].gauge_entropy_bits[0] + 1e-9);
            assert!(w[1].gauge_entropy_bits[1] < w[0].gauge_entropy_bits[1] + 1e-9);
        }
        // the measured mode's own gauge entanglement collapses at its step
        assert!(r.stages[2].gauge_entropy_bits[0] < 0.5 * r.stages[1].gauge_entropy_bits[0]);
        assert!(r.stages[3].gauge_entropy_bits[1] < 0.5 * r.stages[2].gauge_entropy_bits[1]);
        assert_eq!(r.outcomes.len(), 2);
        assert!(r.outcomes.iter().all(|o| o.u0 == 0.0));
    }

    #[test]
    fn sampled_experiment_is_seed_deterministic() {
        let g = grid();
        let sigma = 3.0 * g.alpha();
        let a = hidden_cluster_experiment(sigma, 16, 8, MeasurementPolicy::Sampled { seed: 42 })
            .unwrap();
        let b = hidden_cluster_experiment(sigma, 16, 8, MeasurementPolicy::Sampled { seed: 42 })
            .unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert!(a.final_fidelity() > 0.85, "F = {}", a.final_fidelity());
    }

    #[test]
    fn weak_inputs_distill_poorly() {
        let g = grid();
        let strong = hidden_cluster_experiment(
            3.0 * g.alpha(),
            16,
            8,
            MeasurementPolicy::Fixed { class: 8 },
        )
        .unwrap();
        let weak = hidden_cluster_experiment(
            0.5 * g.alpha(),
            16,
            8,
            MeasurementPolicy::Fixed { class: 8 },
        )
        .unwrap();
        assert!(weak.final_fidelity() < 0.7);
        assert!(strong.final_fidelity() > weak.final_fidelity());
    }

    #[test]
    fn measurement_on_one_mode_of_a_product_is_local() {
        let g = grid();
        let a = broad_input(g);
        let b = ModeWavefunction::gaussian(g, 0.4, 0.2).unwrap();
        let s = TwoModeState::product(&a, &b).unwrap();
        let before = gauge_trace_two_mode(&s).unwrap();
        let (after_state, outcome) = modular_measure_and_correct(&s, 0, 3).unwrap();
        assert!(outcome.u0 < 0.0);
        let after = gauge_trace_two_mode(&after_state).unwrap();
        // partial trace over mode 0's logical qubit
        let marginal = |rho: &LogicalDensityMatrix, i: usize, j: usize| {
            rho.entry(i, j) + rho.entry(i + 2, j + 2)
        };
        for i in 0..2 {
            for j in 0..2 {
                assert!((marginal(&before, i, j) - marginal(&after, i, j)).norm() < 1e-10);
            }
        }
    }
}
