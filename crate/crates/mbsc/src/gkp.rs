//! Approximate grid-code states built from truncated theta-series combs.
//!
//! The wavefunction is a Gaussian-spike comb (spike std dev `delta`) under a
//! Gaussian envelope (inverse width `kappa`), written in terms of the theta
//! series `theta(z, tau) = sum_m exp[2 pi i (m^2 tau / 2 + m z)]` with
//! `Im(tau) > 0`. The closed-form logical state for narrow spikes serves as
//! an independent oracle for the numerical gauge trace.

use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::{
    gauge_trace, logical_fidelity, schmidt_data, LogicalDensityMatrix,
};
use crate::error::{Error, Result};
use crate::grid::PositionGrid;
use crate::modular::BinSpec;
use crate::states::ModeWavefunction;

/// Truncation target: dropped tail below 1e-16 relative.
const TAIL_DIGITS: f64 = 16.0;

/// Terms needed so the Gaussian tail of the summand is below the target.
pub fn theta_truncation_order(tau: Complex64) -> usize {
    // term magnitude is exp(-pi m^2 Im(tau))
    ((TAIL_DIGITS * std::f64::consts::LN_10 / (std::f64::consts::PI * tau.im)).sqrt()).ceil()
        as usize
        + 2
}

/// Third Jacobi theta function via its defining series, truncated so the
/// dropped terms are below 1e-16 relative.
pub fn theta3(z: f64, tau: Complex64) -> Result<Complex64> {
    if !(tau.im > 0.0) {
        return Err(Error::Domain(format!("theta series requires Im(tau) > 0, got {tau}")));
    }
    Ok(theta3_with_terms(z, tau, theta_truncation_order(tau)))
}

/// Fixed-order partial sum, exposed so truncation can be checked directly.
pub fn theta3_with_terms(z: f64, tau: Complex64, order: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for m in -(order as i64)..=(order as i64) {
        let mf = m as f64;
        let exponent = Complex64::new(0.0, std::f64::consts::TAU) * (0.5 * mf * mf * tau + mf * z);
        acc += exponent.exp();
    }
    acc
}

/// Parameters of an approximate grid-code state encoding `a|0> + b|1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxGkpParams {
    a: Complex64,
    b: Complex64,
    delta: f64,
    kappa: f64,
    spec: BinSpec,
}

impl ApproxGkpParams {
    pub fn new(a: Complex64, b: Complex64, delta: f64, kappa: f64, spec: BinSpec) -> Result<Self> {
        let norm = a.norm_sqr() + b.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("|a|^2 + |b|^2 = {norm}, expected 1")));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Domain(format!("spike width must be positive, got {delta}")));
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::Domain(format!("envelope parameter must be positive, got {kappa}")));
        }
        Ok(Self { a, b, delta, kappa, spec })
    }

    /// Equal-superposition (`|+>`) encoding.
    pub fn plus(delta: f64, kappa: f64, spec: BinSpec) -> Result<Self> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(Complex64::new(r, 0.0), Complex64::new(r, 0.0), delta, kappa, spec)
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn b(&self) -> Complex64 {
        self.b
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn spec(&self) -> BinSpec {
        self.spec
    }

    /// Comb nome `tau = i pi delta^2 / (2 alpha^2)`.
    pub fn tau_delta(&self) -> Complex64 {
        let alpha = self.spec.alpha();
        Complex64::new(0.0, std::f64::consts::PI * self.delta * self.delta / (2.0 * alpha * alpha))
    }

    /// Narrow-spike regime used by the closed-form logical state.
    pub fn in_small_spike_regime(&self) -> bool {
        self.delta <= self.spec.alpha() / 10.0
    }

    /// Pure logical target `a|0> + b|1>` as a density matrix.
    pub fn intended_state(&self) -> LogicalDensityMatrix {
        LogicalDensityMatrix::pure(&[self.a, self.b]).expect("normalized by construction")
    }
}

/// Evaluate the spike-comb wavefunction on a grid and normalize it.
pub fn approx_gkp_state(grid: PositionGrid, params: &ApproxGkpParams) -> Result<ModeWavefunction> {
    if grid.spec() != params.spec() {
        return Err(Error::GridMismatch("grid bin size differs from state parameters".into()));
    }
    let (lo, hi) = grid.extent();
    let needed_extent = 6.0 / params.kappa;
    if hi - lo < needed_extent {
        return Err(Error::Config(format!(
            "grid extent {:.3} too small for envelope; need >= {:.3} (n_bins >= {})",
            hi - lo,
            needed_extent,
            (needed_extent / grid.alpha()).ceil() as usize
        )));
    }
    if grid.spacing() > params.delta / 4.0 {
        return Err(Error::Config(format!(
            "grid spacing {:.4} too coarse for spikes; need <= {:.4} (points_per_bin >= {})",
            grid.spacing(),
            params.delta / 4.0,
            (4.0 * grid.alpha() / params.delta).ceil() as usize
        )));
    }
    let alpha = grid.alpha();
    let tau = params.tau_delta();
    let order = theta_truncation_order(tau);
    let amps = (0..grid.len())
        .map(|j| {
            let s = grid.position(j);
            let envelope = (-0.5 * params.kappa * params.kappa * s * s).exp();
            let comb = params.a * theta3_with_terms(s / (2.0 * alpha), tau, order)
                + params.b * theta3_with_terms((s - alpha) / (2.0 * alpha), tau, order);
            envelope * comb
        })
        .collect();
    let mut wf = ModeWavefunction::from_amplitudes(grid, amps)?;
    wf.normalize();
    Ok(wf)
}

/// Closed-form logical state of the equal-superposition comb with narrow
/// spikes, plus a flag set when the narrow-spike assumption is violated.
#[derive(Debug, Clone)]
pub struct SmallSpikeLogicalState {
    pub rho: LogicalDensityMatrix,
    pub regime_warning: bool,
}

/// Closed-form gauge trace of the `a = b = 1/sqrt(2)` comb for narrow spikes.
///
/// The spike-weight comb seen by the logical subsystem has effective
/// variance `delta^2 + kappa^{-2}`, giving the nome
/// `tau' = i pi (delta^2 + kappa^{-2}) / (4 alpha^2)`. The matrix below has
/// unit trace identically because `theta(0,tau) + theta(1/2,tau) =
/// 2 theta(0,4 tau)` (even-index terms counted twice); the explicit division
/// by the trace only removes float rounding.
pub fn small_spike_logical_state(params: &ApproxGkpParams) -> Result<SmallSpikeLogicalState> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    if (params.a() - Complex64::new(r, 0.0)).norm() > 1e-12
        || (params.b() - Complex64::new(r, 0.0)).norm() > 1e-12
    {
        return Err(Error::Domain(
            "closed-form logical state is defined for the equal superposition a = b = 1/sqrt(2)"
                .into(),
        ));
    }
    let alpha = params.spec().alpha();
    let var_eff = params.delta() * params.delta() + 1.0 / (params.kappa() * params.kappa());
    let tau_prime = Complex64::new(0.0, std::f64::consts::PI * var_eff / (4.0 * alpha * alpha));
    let damp = (-alpha * alpha * params.kappa() * params.kappa() / 4.0).exp();
    let t00 = theta3(0.0, tau_prime)?.re;
    let t11 = theta3(0.5, tau_prime)?.re;
    let t01 = damp * theta3(0.25, tau_prime)?.re;
    let trace = t00 + t11;
    let rho = LogicalDensityMatrix::new(
        2,
        vec![
            Complex64::new(t00 / trace, 0.0),
            Complex64::new(t01 / trace, 0.0),
            Complex64::new(t01 / trace, 0.0),
            Complex64::new(t11 / trace, 0.0),
        ],
    )?;
    Ok(SmallSpikeLogicalState { rho, regime_warning: !params.in_small_spike_regime() })
}

/// Grid auto-sizing for envelope sweeps: resolve the spikes everywhere
/// (`points_per_bin >= 8 alpha / delta`) and contain the envelope
/// (`extent >= max(8/kappa, 8 alpha)`).
#[derive(Debug, Clone, Copy, Default)]
pub struct SweepGridPolicy {
    pub points_per_bin_override: Option<usize>,
    pub n_bins_override: Option<usize>,
}

impl SweepGridPolicy {
    pub fn grid_for(&self, delta: f64, kappa: f64, spec: BinSpec) -> Result<PositionGrid> {
        let alpha = spec.alpha();
        let k = self
            .points_per_bin_override
            .unwrap_or_else(|| round_up_even(((8.0 * alpha / delta).ceil() as usize).max(32)));
        let extent = (8.0 / kappa).max(8.0 * alpha);
        let b = self
            .n_bins_override
            .unwrap_or_else(|| round_up_even((extent / alpha).ceil() as usize));
        PositionGrid::new(alpha, k, b)
    }
}

pub fn round_up_even(n: usize) -> usize {
    if n % 2 == 0 {
        n
    } else {
        n + 1
    }
}

/// One row of an envelope sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub kappa: f64,
    pub bloch_x: f64,
    pub bloch_y: f64,
    pub bloch_z: f64,
    pub fidelity_plus: f64,
    pub purity: f64,
    pub schmidt_entropy: f64,
    pub status: String,
}

/// Sweep the envelope parameter for the equal-superposition comb at fixed
/// spike width, recording logical diagnostics from the numerical gauge
/// trace. Per-point failures are recorded in the row status.
pub fn kappa_sweep(
    delta: f64,
    kappas: &[f64],
    spec: BinSpec,
    policy: SweepGridPolicy,
) -> Vec<SweepRecord> {
    kappas
        .iter()
        .map(|&kappa| match sweep_point(delta, kappa, spec, policy) {
            Ok(rec) => rec,
            Err(e) => SweepRecord {
                kappa,
                bloch_x: f64::NAN,
                bloch_y: f64::NAN,
                bloch_z: f64::NAN,
                fidelity_plus: f64::NAN,
                purity: f64::NAN,
                schmidt_entropy: f64::NAN,
                status: format!("error: {e}"),
            },
        })
        .collect()
}

fn sweep_point(
    delta: f64,
    kappa: f64,
    spec: BinSpec,
    policy: SweepGridPolicy,
) -> Result<SweepRecord> {
    let params = ApproxGkpParams::plus(delta, kappa, spec)?;
    let grid = policy.grid_for(delta, kappa, spec)?;
    let wf = approx_gkp_state(grid, &params)?;
    let rho = gauge_trace(&wf)?;
    let (bloch_x, bloch_y, bloch_z) = rho.bloch_vector();
    let fidelity_plus = logical_fidelity(&rho, &params.intended_state())?;
    let schmidt = schmidt_data(&wf)?;
    Ok(SweepRecord {
        kappa,
        bloch_x,
        bloch_y,
        bloch_z,
        fidelity_plus,
        purity: rho.purity(),
        schmidt_entropy: schmidt.entropy_bits,
        status: "ok".into(),
    })
}

pub const SWEEP_CSV_HEADER: &str =
    "kappa,bloch_x,bloch_y,bloch_z,fidelity_plus,purity,schmidt_entropy,status";

/// CSV serialization with 17 significant digits, '.' decimal separator.
pub fn write_sweep_csv<W: std::io::Write>(records: &[SweepRecord], mut w: W) -> Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.kappa,
            r.bloch_x,
            r.bloch_y,
            r.bloch_z,
            r.fidelity_plus,
            r.purity,
            r.schmidt_entropy,
            r.status
        )?;
    }
    Ok(())
}
