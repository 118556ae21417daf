//! Uniform, bin-commensurate discretization of the position axis.
//!
//! Grid points sit at `s_j = (j - N/2) * delta` with `delta = alpha / K`,
//! `N = K * B`. Every point therefore has an exact integer address
//! `(ell, m_gauge, offset)` computed without floating-point re-binning:
//! `u = 0` is a grid class and bin boundaries `u = -alpha/2` are classified
//! by the same centered-floor convention as [`BinSpec`](crate::BinSpec).

use crate::error::{Error, Result};
use crate::modular::BinSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionGrid {
    spec: BinSpec,
    points_per_bin: usize,
    n_bins: usize,
}

/// Exact integer address of a grid point in the subsystem decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteLabels {
    pub ell: u8,
    pub m_gauge: i64,
    /// Offset class within the bin: `u = (offset - K/2) * delta`.
    pub offset: usize,
}

impl PositionGrid {
    /// `points_per_bin` (K) and `n_bins` (B) must both be even and at least 2.
    pub fn new(alpha: f64, points_per_bin: usize, n_bins: usize) -> Result<Self> {
        let spec = BinSpec::new(alpha)?;
        if points_per_bin < 2 || points_per_bin % 2 != 0 {
            return Err(Error::Config(format!(
                "points_per_bin must be even and >= 2, got {points_per_bin}"
            )));
        }
        if n_bins < 2 || n_bins % 2 != 0 {
            return Err(Error::Config(format!("n_bins must be even and >= 2, got {n_bins}")));
        }
        Ok(Self { spec, points_per_bin, n_bins })
    }

    pub fn spec(&self) -> BinSpec {
        self.spec
    }

    pub fn alpha(&self) -> f64 {
        self.spec.alpha()
    }

    pub fn points_per_bin(&self) -> usize {
        self.points_per_bin
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Total number of grid points, `N = K * B`.
    pub fn len(&self) -> usize {
        self.points_per_bin * self.n_bins
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `delta = alpha / K`.
    pub fn spacing(&self) -> f64 {
        self.spec.alpha() / self.points_per_bin as f64
    }

    /// Position of grid point `j`: `(j - N/2) * delta`.
    pub fn position(&self, j: usize) -> f64 {
        (j as i64 - (self.len() / 2) as i64) as f64 * self.spacing()
    }

    /// Half-open grid extent `[-B*alpha/2, B*alpha/2)`.
    pub fn extent(&self) -> (f64, f64) {
        let half = 0.5 * self.n_bins as f64 * self.spec.alpha();
        (-half, half)
    }

    /// Subsystem address of grid point `j`, by exact integer arithmetic.
    pub fn site_labels(&self, j: usize) -> SiteLabels {
        let k = self.points_per_bin as i64;
        let idx = j as i64 - (self.len() / 2) as i64;
        let m = (idx + k / 2).div_euclid(k);
        let offset = (idx + k / 2).rem_euclid(k) as usize;
        let ell = m.rem_euclid(2) as u8;
        SiteLabels { ell, m_gauge: (m - ell as i64) / 2, offset }
    }

    /// Smallest `m_gauge` occurring on the grid.
    pub fn m_gauge_min(&self) -> i64 {
        self.site_labels(0).m_gauge
    }

    /// Number of distinct `(m_gauge, offset)` gauge classes on the grid.
    pub fn gauge_class_count(&self) -> usize {
        let lo = self.site_labels(0).m_gauge;
        let hi = self.site_labels(self.len() - 1).m_gauge;
        (hi - lo + 1) as usize * self.points_per_bin
    }

    /// Dense index of a point's gauge class, in `0..gauge_class_count()`.
    pub fn gauge_class(&self, labels: SiteLabels) -> usize {
        ((labels.m_gauge - self.m_gauge_min()) as usize) * self.points_per_bin + labels.offset
    }

    /// Modular position of an offset class: `u = (offset - K/2) * delta`.
    pub fn offset_to_u(&self, offset: usize) -> f64 {
        (offset as i64 - (self.points_per_bin / 2) as i64) as f64 * self.spacing()
    }

    /// Signed step count that shifts offset class `offset` to the `u = 0` class.
    pub fn correction_steps(&self, offset: usize) -> i64 {
        (self.points_per_bin / 2) as i64 - offset as i64
    }
}
