//! OTFS transmit and receive transforms with rectangular pulses.
//!
//! Baseband amplitudes use the symbol interval as the time unit (`T_s = 1`,
//! so `T = M`). The rectangular pulse is `1/√T` on one slot, the Heisenberg
//! and Wigner integrals are sampled on the `T_s/G` lattice, and a frame of
//! unit-energy delay-Doppler symbols produces unit average sample power.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::DDGridConfig;

/// Delay-Doppler grid `x[k, l]`, stored row-major (`k * M + l`).
#[derive(Debug, Clone, PartialEq)]
pub struct DDFrame {
    pub n: usize,
    pub m: usize,
    pub values: Vec<Complex64>,
}

/// Time-frequency grid `X[n, m]`, stored row-major (`n * M + m`).
#[derive(Debug, Clone, PartialEq)]
pub struct TFFrame {
    pub n: usize,
    pub m: usize,
    pub values: Vec<Complex64>,
}

macro_rules! grid_frame {
    ($t:ident) => {
        impl $t {
            pub fn zeros(n: usize, m: usize) -> Self {
                $t {
                    n,
                    m,
                    values: vec![Complex64::new(0.0, 0.0); n * m],
                }
            }

            pub fn from_values(n: usize, m: usize, values: Vec<Complex64>) -> Result<Self> {
                if values.len() != n * m {
                    return Err(Error::Dimension(format!(
                        "{} values for a {n}x{m} grid",
                        values.len()
                    )));
                }
                Ok($t { n, m, values })
            }

            #[inline]
            pub fn get(&self, row: usize, col: usize) -> Complex64 {
                self.values[row * self.m + col]
            }

            #[inline]
            pub fn set(&mut self, row: usize, col: usize, v: Complex64) {
                self.values[row * self.m + col] = v;
            }

            pub fn energy(&self) -> f64 {
                self.values.iter().map(|v| v.norm_sqr()).sum()
            }

            fn check(&self, grid: &DDGridConfig) -> Result<()> {
                if self.n != grid.n || self.m != grid.m {
                    return Err(Error::Dimension(format!(
                        "frame is {}x{}, grid is {}x{}",
                        self.n, self.m, grid.n, grid.m
                    )));
                }
                Ok(())
            }
        }
    };
}

grid_frame!(DDFrame);
grid_frame!(TFFrame);

/// Complex baseband samples at `oversampling / T_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasebandSignal {
    pub samples: Vec<Complex64>,
    /// Samples per symbol interval (`G`).
    pub oversampling: usize,
    /// Sample rate in Hz.
    pub sample_rate: f64,
    /// Leading cyclic-prefix samples still present (0 once removed).
    pub cp_len: usize,
}

impl BasebandSignal {
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Polyphase branch `g`: every `oversampling`-th sample starting at `g`.
    pub fn branch(&self, g: usize) -> Result<BasebandSignal> {
        let os = self.oversampling;
        if g >= os {
            return Err(Error::Precondition(format!(
                "branch {g} of a {os}x oversampled signal"
            )));
        }
        if self.cp_len % os != 0 {
            return Err(Error::Precondition(
                "cyclic prefix is not a whole number of symbols".into(),
            ));
        }
        Ok(BasebandSignal {
            samples: self.samples.iter().skip(g).step_by(os).copied().collect(),
            oversampling: 1,
            sample_rate: self.sample_rate / os as f64,
            cp_len: self.cp_len / os,
        })
    }
}

/// Transform engine with cached FFT plans for one grid.
pub struct OtfsModem {
    grid: DDGridConfig,
    fft_n: Arc<dyn Fft<f64>>,
    ifft_n: Arc<dyn Fft<f64>>,
    fft_m: Arc<dyn Fft<f64>>,
    ifft_m: Arc<dyn Fft<f64>>,
    fft_mg: Arc<dyn Fft<f64>>,
    ifft_mg: Arc<dyn Fft<f64>>,
    /// `e^{jπ(M-1)c/(MG)}`, the half-band shift on the sampling lattice.
    shift: Vec<Complex64>,
}

impl OtfsModem {
    pub fn new(grid: DDGridConfig) -> Self {
        let mut planner = FftPlanner::new();
        let mg = grid.m * grid.g;
        let shift = (0..mg)
            .map(|c| Complex64::from_polar(1.0, PI * (grid.m as f64 - 1.0) * c as f64 / mg as f64))
            .collect();
        OtfsModem {
            grid,
            fft_n: planner.plan_fft_forward(grid.n),
            ifft_n: planner.plan_fft_inverse(grid.n),
            fft_m: planner.plan_fft_forward(grid.m),
            ifft_m: planner.plan_fft_inverse(grid.m),
            fft_mg: planner.plan_fft_forward(mg),
            ifft_mg: planner.plan_fft_inverse(mg),
            shift,
        }
    }

    pub fn grid(&self) -> &DDGridConfig {
        &self.grid
    }

    /// `X[n,m] = (1/√NM) Σ_k Σ_l x[k,l] e^{j2π(nk/N - ml/M)}`.
    pub fn isfft(&self, x: &DDFrame) -> Result<TFFrame> {
        x.check(&self.grid)?;
        let (n, m) = (self.grid.n, self.grid.m);
        let mut buf = x.values.clone();
        for row in buf.chunks_exact_mut(m) {
            self.fft_m.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for mi in 0..m {
            for k in 0..n {
                col[k] = buf[k * m + mi];
            }
            self.ifft_n.process(&mut col);
            for k in 0..n {
                buf[k * m + mi] = col[k];
            }
        }
        let scale = 1.0 / ((n * m) as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= scale);
        Ok(TFFrame { n, m, values: buf })
    }

    /// `y[k,l] = (1/√NM) Σ_n Σ_m Y[n,m] e^{-j2π(nk/N - ml/M)}`.
    pub fn sfft(&self, y: &TFFrame) -> Result<DDFrame> {
        y.check(&self.grid)?;
        let (n, m) = (self.grid.n, self.grid.m);
        let mut buf = y.values.clone();
        for row in buf.chunks_exact_mut(m) {
            self.ifft_m.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for mi in 0..m {
            for k in 0..n {
                col[k] = buf[k * m + mi];
            }
            self.fft_n.process(&mut col);
            for k in 0..n {
                buf[k * m + mi] = col[k];
            }
        }
        let scale = 1.0 / ((n * m) as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= scale);
        Ok(DDFrame { n, m, values: buf })
    }

    /// Heisenberg transform with a rectangular pulse, sampled at `t = u T_s / G`.
    pub fn heisenberg_rect(&self, x: &TFFrame) -> Result<BasebandSignal> {
        x.check(&self.grid)?;
        let (n, m, g) = (self.grid.n, self.grid.m, self.grid.g);
        let mg = m * g;
        let amp = 1.0 / (m as f64).sqrt();
        let mut samples = Vec::with_capacity(n * mg);
        let mut slot = vec![Complex64::new(0.0, 0.0); mg];
        for ni in 0..n {
            slot.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            slot[..m].copy_from_slice(&x.values[ni * m..(ni + 1) * m]);
            self.ifft_mg.process(&mut slot);
            samples.extend(slot.iter().zip(&self.shift).map(|(v, s)| v * s.conj() * amp));
        }
        Ok(BasebandSignal {
            samples,
            oversampling: g,
            sample_rate: g as f64 * self.grid.bandwidth(),
            cp_len: 0,
        })
    }

    /// Wigner transform with a rectangular receive pulse: a Riemann sum of the
    /// cross-ambiguity integral over the `MG` samples of each slot.
    pub fn wigner_rect(&self, r: &BasebandSignal) -> Result<TFFrame> {
        let (n, m, g) = (self.grid.n, self.grid.m, self.grid.g);
        let mg = m * g;
        if r.cp_len != 0 {
            return Err(Error::Precondition("cyclic prefix must be removed first".into()));
        }
        if r.oversampling != g || r.samples.len() != n * mg {
            return Err(Error::Dimension(format!(
                "expected {} samples at {g}x, got {} at {}x",
                n * mg,
                r.samples.len(),
                r.oversampling
            )));
        }
        let scale = 1.0 / (g as f64 * (m as f64).sqrt());
        let mut values = Vec::with_capacity(n * m);
        let mut slot = vec![Complex64::new(0.0, 0.0); mg];
        for ni in 0..n {
            for (c, v) in slot.iter_mut().enumerate() {
                *v = r.samples[ni * mg + c] * self.shift[c];
            }
            self.fft_mg.process(&mut slot);
            values.extend(slot[..m].iter().map(|v| v * scale));
        }
        Ok(TFFrame { n, m, values })
    }

    /// Full transmitter: ISFFT then Heisenberg.
    pub fn modulate(&self, x: &DDFrame) -> Result<BasebandSignal> {
        self.heisenberg_rect(&self.isfft(x)?)
    }

    /// Full receiver for one symbol-spaced branch: Wigner then SFFT.
    pub fn demodulate(&self, r: &BasebandSignal) -> Result<DDFrame> {
        self.sfft(&self.wigner_rect(r)?)
    }
}

pub fn isfft(x: &DDFrame, grid: &DDGridConfig) -> Result<TFFrame> {
    OtfsModem::new(*grid).isfft(x)
}

pub fn sfft(y: &TFFrame, grid: &DDGridConfig) -> Result<DDFrame> {
    OtfsModem::new(*grid).sfft(y)
}

pub fn heisenberg_rect(x: &TFFrame, grid: &DDGridConfig) -> Result<BasebandSignal> {
    OtfsModem::new(*grid).heisenberg_rect(x)
}

pub fn wigner_rect(r: &BasebandSignal, grid: &DDGridConfig) -> Result<TFFrame> {
    OtfsModem::new(*grid).wigner_rect(r)
}

/// Prepends the last `cp_len` samples.
pub fn add_cp(s: &BasebandSignal, cp_len: usize) -> Result<BasebandSignal> {
    let len = s.samples.len();
    if cp_len > len {
        return Err(Error::config(
            "cp_len",
            format!("cyclic prefix of {cp_len} exceeds frame length {len}"),
        ));
    }
    let mut samples = Vec::with_capacity(len + cp_len);
    samples.extend_from_slice(&s.samples[len - cp_len..]);
    samples.extend_from_slice(&s.samples);
    Ok(BasebandSignal {
        samples,
        cp_len: s.cp_len + cp_len,
        ..*s
    })
}

/// Drops the recorded cyclic prefix.
pub fn remove_cp(r: &BasebandSignal) -> Result<BasebandSignal> {
    if r.cp_len > r.samples.len() {
        return Err(Error::Dimension("cyclic prefix longer than signal".into()));
    }
    Ok(BasebandSignal {
        samples: r.samples[r.cp_len..].to_vec(),
        cp_len: 0,
        ..*r
    })
}

impl Clone for OtfsModem {
    fn clone(&self) -> Self {
        OtfsModem::new(self.grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dd(n: usize, m: usize, seed: u64) -> DDFrame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n * m)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        DDFrame { n, m, values }
    }

    fn random_tf(n: usize, m: usize, seed: u64) -> TFFrame {
        let d = random_dd(n, m, seed);
        TFFrame { n, m, values: d.values }
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn isfft_matches_direct_sum() {
        let grid = DDGridConfig::new(4, 8, 15e3, 1).unwrap();
        let x = random_dd(4, 8, 1);
        let got = isfft(&x, &grid).unwrap();
        for n in 0..4 {
            for m in 0..8 {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..4 {
                    for l in 0..8 {
                        let ph = 2.0 * PI * ((n * k) as f64 / 4.0 - (m * l) as f64 / 8.0);
                        acc += x.get(k, l) * Complex64::from_polar(1.0, ph);
                    }
                }
                acc /= 32f64.sqrt();
                assert!((acc - got.get(n, m)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn isfft_impulse_and_zeros() {
        let grid = DDGridConfig::new(4, 6, 15e3, 1).unwrap();
        let mut x = DDFrame::zeros(4, 6);
        assert!(isfft(&x, &grid).unwrap().energy() == 0.0);
        x.set(0, 0, Complex64::new(24f64.sqrt(), 0.0));
        let big = isfft(&x, &grid).unwrap();
        for v in big.values {
            assert!((v - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn sfft_inverse_and_unitary() {
        let grid = DDGridConfig::new(8, 16, 15e3, 1).unwrap();
        let y = random_tf(8, 16, 2);
        let dd = sfft(&y, &grid).unwrap();
        assert!((dd.energy() - y.energy()).abs() < 1e-10);
        let back = isfft(&dd, &grid).unwrap();
        assert!(max_diff(&back.values, &y.values) < 1e-10);
        let x = random_dd(8, 16, 3);
        let again = sfft(&isfft(&x, &grid).unwrap(), &grid).unwrap();
        assert!(max_diff(&again.values, &x.values) < 1e-10);
    }

    #[test]
    fn heisenberg_matches_direct_evaluation() {
        for g in [1, 2, 3] {
            let grid = DDGridConfig::new(3, 5, 15e3, g).unwrap();
            let x = random_tf(3, 5, 4);
            let s = heisenberg_rect(&x, &grid).unwrap();
            assert_eq!(s.samples.len(), 3 * 5 * g);
            for u in 0..s.samples.len() {
                // t in units of T_s, T = M
                let t = u as f64 / g as f64;
                let n = (t / 5.0).floor() as usize;
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..5 {
                    let f = (m as f64 - 2.0) / 5.0;
                    acc += x.get(n, m) * Complex64::from_polar(1.0, 2.0 * PI * f * (t - 5.0 * n as f64));
                }
                acc /= 5f64.sqrt();
                assert!((acc - s.samples[u]).norm() < 1e-12, "g={g} u={u}");
            }
        }
    }

    #[test]
    fn centred_subcarrier_is_constant() {
        let grid = DDGridConfig::new(2, 5, 15e3, 2).unwrap();
        let mut x = TFFrame::zeros(2, 5);
        x.set(0, 2, Complex64::new(1.0, 0.0));
        let s = heisenberg_rect(&x, &grid).unwrap();
        for (u, v) in s.samples.iter().enumerate() {
            let expect = if u < 10 { 1.0 / 5f64.sqrt() } else { 0.0 };
            assert!((v.norm() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn wigner_inverts_heisenberg_for_any_g() {
        let x = random_tf(4, 8, 5);
        let mut outs = Vec::new();
        for g in [1, 2] {
            let grid = DDGridConfig::new(4, 8, 15e3, g).unwrap();
            let modem = OtfsModem::new(grid);
            let y = modem.wigner_rect(&modem.heisenberg_rect(&x).unwrap()).unwrap();
            assert!(max_diff(&y.values, &x.values) < 1e-9);
            outs.push(y);
        }
        assert!(max_diff(&outs[0].values, &outs[1].values) < 1e-9);
        let grid = DDGridConfig::new(4, 8, 15e3, 2).unwrap();
        let zero = BasebandSignal {
            samples: vec![Complex64::new(0.0, 0.0); 64],
            oversampling: 2,
            sample_rate: 0.0,
            cp_len: 0,
        };
        assert_eq!(wigner_rect(&zero, &grid).unwrap().energy(), 0.0);
    }

    #[test]
    fn wigner_rejects_wrong_length() {
        let grid = DDGridConfig::new(4, 8, 15e3, 2).unwrap();
        let bad = BasebandSignal {
            samples: vec![Complex64::new(0.0, 0.0); 63],
            oversampling: 2,
            sample_rate: 0.0,
            cp_len: 0,
        };
        assert!(matches!(wigner_rect(&bad, &grid), Err(Error::Dimension(_))));
    }

    #[test]
    fn cyclic_prefix() {
        let grid = DDGridConfig::new(2, 4, 15e3, 2).unwrap();
        let s = heisenberg_rect(&random_tf(2, 4, 6), &grid).unwrap();
        assert_eq!(add_cp(&s, 0).unwrap(), s);
        let c = add_cp(&s, 4).unwrap();
        assert_eq!(&c.samples[..4], &s.samples[12..16]);
        assert_eq!(remove_cp(&c).unwrap(), s);
        assert!(matches!(add_cp(&s, 17), Err(Error::Config { .. })));
    }

    #[test]
    fn branch_decimation() {
        let sig = BasebandSignal {
            samples: (0..12).map(|i| Complex64::new(i as f64, 0.0)).collect(),
            oversampling: 2,
            sample_rate: 2.0,
            cp_len: 4,
        };
        let b1 = sig.branch(1).unwrap();
        assert_eq!(b1.samples.iter().map(|v| v.re as i32).collect::<Vec<_>>(), vec![1, 3, 5, 7, 9, 11]);
        assert_eq!(b1.cp_len, 2);
        assert!(sig.branch(2).is_err());
    }
}
