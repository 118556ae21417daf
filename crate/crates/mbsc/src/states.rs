//! Single-mode pure states on a position grid.
//!
//! Amplitudes carry units of (position)^(-1/2): grid states are coefficients
//! of delta-normalized position kets, and all quadrature is rectangle-rule
//! with weight `delta`. Gates are exact: position shifts move amplitudes by
//! whole grid steps on a hard-wall grid (no periodic wraparound), momentum
//! phases are pointwise unimodular.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::PositionGrid;
use crate::hexfloat;

pub const NORM_TOLERANCE: f64 = 1e-10;

/// Norm squared of amplitudes spilled past the grid edge by a shift before
/// the shift is considered lossy.
pub const SPILL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeWavefunction {
    grid: PositionGrid,
    amps: Vec<Complex64>,
}

impl ModeWavefunction {
    pub fn from_amplitudes(grid: PositionGrid, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} amplitudes, got {}",
                grid.len(),
                amps.len()
            )));
        }
        Ok(Self { grid, amps })
    }

    /// Normalized Gaussian with the given position-space variance of `|psi|^2`.
    pub fn gaussian(grid: PositionGrid, center: f64, variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::Domain(format!("variance must be positive, got {variance}")));
        }
        let (lo, hi) = grid.extent();
        if !(center.is_finite() && center >= lo && center < hi) {
            return Err(Error::Domain(format!("center {center} outside grid extent [{lo}, {hi})")));
        }
        let sigma = variance.sqrt();
        if 6.0 * sigma < 3.0 * grid.spacing() {
            return Err(Error::Resolution(format!(
                "fewer than 4 grid points within +/-3 sigma; need variance >= {:.3e}",
                (grid.spacing() / 2.0).powi(2)
            )));
        }
        let amps = (0..grid.len())
            .map(|j| {
                let s = grid.position(j) - center;
                Complex64::new((-s * s / (4.0 * variance)).exp(), 0.0)
            })
            .collect();
        let mut wf = Self { grid, amps };
        wf.normalize();
        Ok(wf)
    }

    /// Finite-squeezing stand-in for a zero-momentum eigenstate: a broad real
    /// Gaussian in position with variance `1/(4 * p_variance)`.
    ///
    /// Convention: `q = (a + a^dag)/sqrt(2)`, so the vacuum has position and
    /// momentum variance 1/2 and a pure squeezed state satisfies
    /// `var_q * var_p = 1/4`.
    pub fn momentum_squeezed(grid: PositionGrid, p_variance: f64) -> Result<Self> {
        if !(p_variance.is_finite() && p_variance > 0.0) {
            return Err(Error::Domain(format!("p_variance must be positive, got {p_variance}")));
        }
        let q_variance = 1.0 / (4.0 * p_variance);
        let (_, hi) = grid.extent();
        if 3.0 * q_variance.sqrt() > hi {
            return Err(Error::Resolution(format!(
                "position envelope (3 sigma = {:.3}) exceeds grid half-extent {hi:.3}",
                3.0 * q_variance.sqrt()
            )));
        }
        Self::gaussian(grid, 0.0, q_variance)
    }

    pub fn grid(&self) -> &PositionGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// `delta * sum |psi_j|^2`.
    pub fn norm_sq(&self) -> f64 {
        self.grid.spacing() * self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sq() - 1.0).abs() <= NORM_TOLERANCE
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sq().sqrt();
        if n > 0.0 {
            for a in &mut self.amps {
                *a /= n;
            }
        }
    }

    /// `delta * sum conj(a_j) b_j`; both states must live on the same grid.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("inner product between different grids".into()));
        }
        let sum: Complex64 =
            self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum();
        Ok(self.grid.spacing() * sum)
    }

    /// Translate by `steps` grid points (a shift by `steps * delta` in
    /// position). Errors if more than [`SPILL_TOLERANCE`] of norm squared
    /// would fall off the hard-wall grid.
    pub fn position_shift(&self, steps: i64) -> Result<Self> {
        let spilled = self.spilled_norm_sq(steps);
        if spilled > SPILL_TOLERANCE {
            return Err(Error::EdgeSpill(format!(
                "shift by {steps} steps would spill norm^2 = {spilled:.3e} past the grid edge"
            )));
        }
        Ok(self.position_shift_lossy(steps))
    }

    /// Norm squared of the amplitudes a shift by `steps` would push off grid.
    pub fn spilled_norm_sq(&self, steps: i64) -> f64 {
        let n = self.amps.len() as i64;
        let d = self.grid.spacing();
        let lost: f64 = if steps >= 0 {
            self.amps.iter().skip((n - steps.min(n)) as usize).map(|a| a.norm_sqr()).sum()
        } else {
            self.amps.iter().take((-steps).min(n) as usize).map(|a| a.norm_sqr()).sum()
        };
        d * lost
    }

    /// Shift dropping whatever falls off the edge; callers that need the
    /// guard use [`position_shift`](Self::position_shift).
    pub fn position_shift_lossy(&self, steps: i64) -> Self {
        let n = self.amps.len() as i64;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for j in 0..n {
            let src = j - steps;
            if (0..n).contains(&src) {
                out[j as usize] = self.amps[src as usize];
            }
        }
        Self { grid: self.grid, amps: out }
    }

    /// `psi_j -> exp(i t s_j) psi_j`, exact and norm-preserving.
    pub fn momentum_phase(&self, t: f64) -> Self {
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(j, a)| a * Complex64::from_polar(1.0, t * self.grid.position(j)))
            .collect();
        Self { grid: self.grid, amps }
    }

    /// Columnar text serialization: header with exact grid parameters, then
    /// one `s, Re psi, Im psi` row per grid point.
    pub fn write_text<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# alpha_hex {}", hexfloat::format_hex(self.grid.alpha()))?;
        writeln!(w, "# points_per_bin {}", self.grid.points_per_bin())?;
        writeln!(w, "# n_bins {}", self.grid.n_bins())?;
        for (j, a) in self.amps.iter().enumerate() {
            writeln!(
                w,
                "{:.16e},{},{}",
                self.grid.position(j),
                hexfloat::format_hex(a.re),
                hexfloat::format_hex(a.im)
            )?;
        }
        Ok(())
    }

    pub fn read_text<R: std::io::BufRead>(r: R) -> Result<Self> {
        let mut alpha = None;
        let mut k = None;
        let mut b = None;
        let mut amps = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                match (it.next(), it.next()) {
                    (Some("alpha_hex"), Some(v)) => alpha = Some(hexfloat::parse_hex(v)?),
                    (Some("points_per_bin"), Some(v)) => {
                        k = Some(v.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?)
                    }
                    (Some("n_bins"), Some(v)) => {
                        b = Some(v.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?)
                    }
                    _ => return Err(Error::Parse(format!("unknown header line: {line:?}"))),
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!("expected 3 columns, got {line:?}")));
            }
            amps.push(Complex64::new(
                hexfloat::parse_hex(fields[1].trim())?,
                hexfloat::parse_hex(fields[2].trim())?,
            ));
        }
        let (alpha, k, b) = match (alpha, k, b) {
            (Some(a), Some(k), Some(b)) => (a, k, b),
            _ => return Err(Error::Parse("missing header fields".into())),
        };
        Self::from_amplitudes(PositionGrid::new(alpha, k, b)?, amps)
    }
}
