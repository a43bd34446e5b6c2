//! Raised-cosine / root-raised-cosine evaluation and the rectangular-pulse
//! cross-ambiguity function.
//!
//! Time arguments of the rolloff filters are in units of the symbol interval
//! `T_s`. Removable singularities are evaluated by their analytic limits.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this distance from a pole of the closed form the analytic limit is used.
const POLE_GUARD: f64 = 1e-9;

#[inline]
fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Raised-cosine impulse response at `t` (units of `T_s`), peak value 1.
pub fn eval_rc(t: f64, rolloff: f64) -> f64 {
    let a = rolloff;
    if a == 0.0 {
        return sinc(t);
    }
    let den = 1.0 - (2.0 * a * t).powi(2);
    if den.abs() < POLE_GUARD {
        return PI / 4.0 * sinc(1.0 / (2.0 * a));
    }
    sinc(t) * (PI * a * t).cos() / den
}

/// Root-raised-cosine impulse response at `t` (units of `T_s`), unit energy.
pub fn eval_rrc(t: f64, rolloff: f64) -> f64 {
    let a = rolloff;
    if t == 0.0 {
        return 1.0 - a + 4.0 * a / PI;
    }
    if a == 0.0 {
        return sinc(t);
    }
    let den = 1.0 - (4.0 * a * t).powi(2);
    if den.abs() < POLE_GUARD {
        let arg = PI / (4.0 * a);
        return a / 2f64.sqrt() * ((1.0 + 2.0 / PI) * arg.sin() + (1.0 - 2.0 / PI) * arg.cos());
    }
    let num = (PI * t * (1.0 - a)).sin() + 4.0 * a * t * (PI * t * (1.0 + a)).cos();
    num / (PI * t * den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterKind {
    RaisedCosine,
    RootRaisedCosine,
}

/// A truncated rolloff filter; zero outside `|t| <= span_symbols`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RolloffFilter {
    pub rolloff: f64,
    pub span_symbols: usize,
    pub kind: FilterKind,
}

impl RolloffFilter {
    pub fn new(kind: FilterKind, rolloff: f64, span_symbols: usize) -> Result<Self> {
        let f = RolloffFilter {
            rolloff,
            span_symbols,
            kind,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn rc(rolloff: f64, span_symbols: usize) -> Result<Self> {
        Self::new(FilterKind::RaisedCosine, rolloff, span_symbols)
    }

    pub fn rrc(rolloff: f64, span_symbols: usize) -> Result<Self> {
        Self::new(FilterKind::RootRaisedCosine, rolloff, span_symbols)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(Error::config("filter.rolloff", "must lie in [0, 1]"));
        }
        if self.span_symbols == 0 {
            return Err(Error::config("filter.span", "must be positive"));
        }
        Ok(())
    }

    /// The matched counterpart: RRC for an RC end-to-end response and vice versa.
    pub fn with_kind(&self, kind: FilterKind) -> Self {
        RolloffFilter { kind, ..*self }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t.abs() > self.span_symbols as f64 {
            return 0.0;
        }
        match self.kind {
            FilterKind::RaisedCosine => eval_rc(t, self.rolloff),
            FilterKind::RootRaisedCosine => eval_rrc(t, self.rolloff),
        }
    }

    /// `∫ f(t)² dt` over the truncated support by the trapezoidal rule with
    /// `oversampling` points per symbol.
    pub fn energy_with(&self, oversampling: usize) -> f64 {
        let span = self.span_symbols as f64;
        let steps = 2 * self.span_symbols * oversampling;
        let h = 2.0 * span / steps as f64;
        let mut acc = 0.0;
        for i in 0..=steps {
            let v = self.eval(-span + i as f64 * h).powi(2);
            acc += if i == 0 || i == steps { 0.5 * v } else { v };
        }
        acc * h
    }

    pub fn energy(&self) -> f64 {
        self.energy_with(64)
    }
}

/// Cross-ambiguity `A(t, f)` of two unit-energy rectangular pulses of duration
/// `slot` (seconds), `f` in Hz.
pub fn rect_cross_ambiguity(t_offset: f64, f_offset: f64, slot: f64) -> Complex64 {
    // integrand support: g_tx on [0, T), g_rx(t' - t) on [t, T + t)
    let a = t_offset.max(0.0);
    let b = slot.min(slot + t_offset);
    if b <= a {
        return Complex64::new(0.0, 0.0);
    }
    let w = 2.0 * PI * f_offset;
    if (w * (b - a)).abs() < 1e-12 {
        return Complex64::from_polar((b - a) / slot, -w * (0.5 * (a + b) - t_offset));
    }
    // (1/T) ∫_a^b e^{-jw(t' - t)} dt'
    let ea = Complex64::from_polar(1.0, -w * (a - t_offset));
    let eb = Complex64::from_polar(1.0, -w * (b - t_offset));
    (eb - ea) / Complex64::new(0.0, -w * slot)
}

/// Noise power after the receive filter, `σ_n² ∫ P_rrc²`.
pub fn noise_variance_after_rx_filter(sigma_n2: f64, filter: &RolloffFilter) -> f64 {
    sigma_n2 * filter.energy()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rc_peak_and_zero_crossings() {
        assert_eq!(eval_rc(0.0, 0.4), 1.0);
        for k in 1..10 {
            assert!(eval_rc(k as f64, 0.4).abs() < 1e-9);
            assert!(eval_rc(-(k as f64), 0.4).abs() < 1e-9);
        }
    }

    #[test]
    fn rc_pole_uses_limit() {
        let a = 0.4;
        let t0 = 1.0 / (2.0 * a);
        let expect = PI / 4.0 * sinc(t0);
        assert!((eval_rc(t0, a) - expect).abs() < 1e-15);
        let numeric = 0.5 * (eval_rc(t0 + 1e-6, a) + eval_rc(t0 - 1e-6, a));
        assert!((numeric - expect).abs() < 1e-8, "{numeric} vs {expect}");
    }

    #[test]
    fn rrc_origin_and_pole() {
        let a = 0.4;
        assert!((eval_rrc(0.0, a) - (1.0 - a + 4.0 * a / PI)).abs() < 1e-15);
        let numeric = 0.5 * (eval_rrc(1e-7, a) + eval_rrc(-1e-7, a));
        assert!((numeric - eval_rrc(0.0, a)).abs() < 1e-9);
        let t0 = 1.0 / (4.0 * a);
        let numeric = 0.5 * (eval_rrc(t0 + 1e-6, a) + eval_rrc(t0 - 1e-6, a));
        assert!((numeric - eval_rrc(t0, a)).abs() < 1e-8);
    }

    #[test]
    fn even_symmetry_and_finite() {
        let f = RolloffFilter::rrc(0.4, 4).unwrap();
        let g = f.with_kind(FilterKind::RaisedCosine);
        for i in 0..2000 {
            let t = i as f64 * 0.003125;
            for filt in [f, g] {
                assert!(filt.eval(t).is_finite());
                assert!((filt.eval(t) - filt.eval(-t)).abs() < 1e-12);
            }
        }
        for a in [0.0f64, 0.25, 0.5, 1.0] {
            for t in [0.0, 0.25, 0.5, 1.0, 1.0 / (4.0 * a.max(1e-3)), 1.0 / (2.0 * a.max(1e-3))] {
                assert!(eval_rc(t, a).is_finite());
                assert!(eval_rrc(t, a).is_finite());
            }
        }
    }

    #[test]
    fn truncation() {
        let f = RolloffFilter::rc(0.4, 4).unwrap();
        assert_eq!(f.eval(4.01), 0.0);
        assert!(f.eval(3.5) != 0.0);
    }

    #[test]
    fn rejects_bad_rolloff() {
        assert!(RolloffFilter::rc(1.5, 4).is_err());
        assert!(RolloffFilter::rc(0.4, 0).is_err());
    }

    #[test]
    fn ambiguity_basics() {
        let t = 1.0 / 15e3;
        assert!((rect_cross_ambiguity(0.0, 0.0, t) - 1.0).norm() < 1e-15);
        assert!((rect_cross_ambiguity(t / 2.0, 0.0, t) - 0.5).norm() < 1e-15);
        assert_eq!(rect_cross_ambiguity(1.5 * t, 0.0, t).norm(), 0.0);
    }

    #[test]
    fn ambiguity_half_shift_matches_quadrature() {
        let slot = 1.0;
        let (t0, f0) = (0.5, 0.3);
        // midpoint rule on the overlap [t0, 1)
        let steps = 200_000;
        let h = (slot - t0) / steps as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..steps {
            let tp = t0 + (i as f64 + 0.5) * h;
            acc += Complex64::from_polar(1.0, -2.0 * PI * f0 * (tp - t0));
        }
        acc *= h / slot;
        assert!((rect_cross_ambiguity(t0, f0, slot) - acc).norm() < 1e-9);
    }

    #[test]
    fn noise_variance() {
        let f = RolloffFilter::rrc(0.4, 16).unwrap();
        assert_eq!(noise_variance_after_rx_filter(0.0, &f), 0.0);
        assert!((noise_variance_after_rx_filter(1.0, &f) - 1.0).abs() < 2e-3);
        let e = f.energy();
        assert!((noise_variance_after_rx_filter(2.0, &f) - 2.0 * e).abs() < 1e-12);
    }
}
