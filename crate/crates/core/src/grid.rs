//! Delay-Doppler / time-frequency frame geometry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frame geometry shared by every stage of the link.
///
/// Doppler bins / time slots `n`, delay bins / subcarriers `m`, subcarrier
/// spacing `delta_f` (Hz), slot duration `t` (s) and the receiver oversampling
/// factor `g`. Frame duration and bandwidth are derived on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DDGridConfig {
    pub n: usize,
    pub m: usize,
    pub delta_f: f64,
    pub t: f64,
    pub g: usize,
}

impl DDGridConfig {
    /// Builds a validated grid with `T = 1/Δf`.
    pub fn new(n: usize, m: usize, delta_f: f64, g: usize) -> Result<Self> {
        let grid = DDGridConfig {
            n,
            m,
            delta_f,
            t: 1.0 / delta_f,
            g,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("grid.n", "must be positive"));
        }
        if self.m == 0 {
            return Err(Error::config("grid.m", "must be positive"));
        }
        if self.g == 0 {
            return Err(Error::config("grid.g", "oversampling factor must be >= 1"));
        }
        if !(self.delta_f.is_finite() && self.delta_f > 0.0) {
            return Err(Error::config("grid.delta_f", "must be a positive frequency"));
        }
        if ((self.t * self.delta_f) - 1.0).abs() > 1e-12 {
            return Err(Error::config("grid.t", "T * delta_f must equal 1"));
        }
        Ok(())
    }

    /// Same geometry with a different oversampling factor.
    pub fn with_oversampling(&self, g: usize) -> Self {
        DDGridConfig { g, ..*self }
    }

    /// Symbol-spaced sampling interval `T_s = 1/(MΔf)`.
    pub fn ts(&self) -> f64 {
        1.0 / (self.m as f64 * self.delta_f)
    }

    /// Frame duration `NT`.
    pub fn frame_duration(&self) -> f64 {
        self.n as f64 * self.t
    }

    /// Occupied bandwidth `MΔf`.
    pub fn bandwidth(&self) -> f64 {
        self.m as f64 * self.delta_f
    }

    /// Number of delay-Doppler symbols `NM`.
    pub fn symbols(&self) -> usize {
        self.n * self.m
    }

    /// Doppler resolution `1/(NT)` in Hz.
    pub fn doppler_resolution(&self) -> f64 {
        1.0 / self.frame_duration()
    }

    /// Row-major vectorization index of delay-Doppler bin `(k, l)`.
    #[inline]
    pub fn dd_index(&self, k: usize, l: usize) -> usize {
        k * self.m + l
    }
}

/// Non-negative remainder `[x]_n`.
#[inline]
pub fn modulo(x: i64, n: usize) -> usize {
    x.rem_euclid(n as i64) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities() {
        let grid = DDGridConfig::new(32, 128, 15e3, 2).unwrap();
        assert!((grid.t * grid.delta_f - 1.0).abs() < 1e-12);
        assert!((grid.bandwidth() - 1.92e6).abs() < 1e-6);
        assert!((grid.frame_duration() - 32.0 / 15e3).abs() < 1e-15);
        assert!((grid.ts() * grid.bandwidth() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_fields() {
        assert!(DDGridConfig::new(0, 4, 15e3, 1).is_err());
        assert!(DDGridConfig::new(4, 4, 15e3, 0).is_err());
        let mut grid = DDGridConfig::new(4, 4, 15e3, 1).unwrap();
        grid.t *= 1.01;
        match grid.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "grid.t"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn modulo_is_non_negative() {
        assert_eq!(modulo(-1, 8), 7);
        assert_eq!(modulo(-9, 8), 7);
        assert_eq!(modulo(8, 8), 0);
    }
}
