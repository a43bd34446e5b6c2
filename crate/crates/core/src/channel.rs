//! Time-varying multipath channel at the fractionally spaced sampling rate.
//!
//! The transmitter emits the symbol-spaced samples `s[u]`; the end-to-end
//! transmit/receive filter `P_rc` interpolates them, and the receiver samples
//! at `uT_s + gT_s/G`. Branch `g` therefore sees the taps
//! `P_rc(pT_s + gT_s/G - τ_i - d)` where `d` is the causal filter delay.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::alphabet::ModAlphabet;
use crate::error::{Error, Result};
use crate::grid::DDGridConfig;
use crate::modem::BasebandSignal;
use crate::pulses::{FilterKind, RolloffFilter};
use crate::rng::RngSpec;

const SPEED_OF_LIGHT: f64 = 3e8;

/// Maximum Doppler shift for a terminal at `velocity_kmh` on carrier `carrier_hz`.
pub fn max_doppler(velocity_kmh: f64, carrier_hz: f64) -> f64 {
    velocity_kmh / 3.6 * carrier_hz / SPEED_OF_LIGHT
}

/// Jakes Doppler `ν_max cos ρ` for arrival angle `rho`.
pub fn jakes_doppler(nu_max: f64, rho: f64) -> f64 {
    nu_max * rho.cos()
}

/// Splits a Doppler shift into the nearest integer bin and a fraction in (-0.5, 0.5].
pub fn split_doppler(doppler: f64, grid: &DDGridConfig) -> (i64, f64) {
    let x = doppler * grid.frame_duration();
    let k = (x - 0.5).ceil();
    (k as i64, x - k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelPath {
    pub gain: Complex64,
    /// Seconds.
    pub delay: f64,
    /// Hz.
    pub doppler: f64,
    pub doppler_int: i64,
    pub doppler_frac: f64,
}

impl ChannelPath {
    pub fn new(gain: Complex64, delay: f64, doppler: f64, grid: &DDGridConfig) -> Self {
        let (doppler_int, doppler_frac) = split_doppler(doppler, grid);
        ChannelPath {
            gain,
            delay,
            doppler,
            doppler_int,
            doppler_frac,
        }
    }

    /// Path sitting exactly on Doppler bin `k_nu`.
    pub fn on_grid(gain: Complex64, delay: f64, k_nu: i64, grid: &DDGridConfig) -> Self {
        ChannelPath {
            gain,
            delay,
            doppler: k_nu as f64 * grid.doppler_resolution(),
            doppler_int: k_nu,
            doppler_frac: 0.0,
        }
    }

    /// Doppler in units of the Doppler resolution, `k_ν + β_ν`.
    #[inline]
    pub fn normalized_doppler(&self) -> f64 {
        self.doppler_int as f64 + self.doppler_frac
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub paths: Vec<ChannelPath>,
    /// Number of symbol-spaced taps `P`.
    pub channel_order: usize,
    pub max_doppler: f64,
}

impl ChannelRealization {
    /// Builds a realization whose order covers the largest path delay.
    pub fn new(
        paths: Vec<ChannelPath>,
        max_doppler: f64,
        grid: &DDGridConfig,
        filter: &RolloffFilter,
    ) -> Result<Self> {
        let tau_max = paths.iter().map(|p| p.delay).fold(0.0, f64::max);
        let channel_order = channel_order_for(tau_max, grid, filter);
        let ch = ChannelRealization {
            paths,
            channel_order,
            max_doppler,
        };
        ch.validate(grid)?;
        Ok(ch)
    }

    pub fn validate(&self, grid: &DDGridConfig) -> Result<()> {
        if self.paths.is_empty() {
            return Err(Error::config("channel.paths", "at least one path is required"));
        }
        if self.channel_order > grid.m {
            return Err(Error::config(
                "channel.order",
                format!(
                    "channel order {} exceeds M = {} (cyclic prefix would not fit)",
                    self.channel_order, grid.m
                ),
            ));
        }
        for p in &self.paths {
            if p.doppler.abs() >= grid.delta_f {
                return Err(Error::config(
                    "channel.doppler",
                    "Doppler shift must stay below the subcarrier spacing",
                ));
            }
            if p.delay < 0.0 {
                return Err(Error::config("channel.delay", "path delays must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn max_delay(&self) -> f64 {
        self.paths.iter().map(|p| p.delay).fold(0.0, f64::max)
    }

    /// The same channel with delays rounded to the `T_s` grid and Dopplers to
    /// the nearest Doppler bin.
    pub fn rounded_to_grid(&self, grid: &DDGridConfig) -> ChannelRealization {
        let ts = grid.ts();
        let paths = self
            .paths
            .iter()
            .map(|p| ChannelPath::on_grid(p.gain, (p.delay / ts).round() * ts, p.doppler_int, grid))
            .collect();
        ChannelRealization {
            paths,
            channel_order: self.channel_order,
            max_doppler: self.max_doppler,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// `P = ceil(τ_max / T_s) + 2·span + 1`.
pub fn channel_order_for(tau_max: f64, grid: &DDGridConfig, filter: &RolloffFilter) -> usize {
    let delay_taps = (tau_max / grid.ts() - 1e-9).ceil().max(0.0) as usize;
    delay_taps + 2 * filter.span_symbols + 1
}

/// How the channel taps `P_rc[g]` are sampled from the end-to-end filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TapModel {
    /// End-to-end (raised-cosine) response.
    pub filter: RolloffFilter,
    /// Causal delay of the end-to-end response, in symbols.
    pub delay_symbols: usize,
    /// Taps with `|P_rc| <` this value are dropped.
    pub threshold: f64,
}

impl TapModel {
    /// RC response delayed by its one-sided span, keeping every nonzero tap.
    pub fn new(filter: &RolloffFilter) -> Self {
        TapModel {
            filter: filter.with_kind(FilterKind::RaisedCosine),
            delay_symbols: filter.span_symbols,
            threshold: 0.0,
        }
    }

    pub fn with_threshold(self, threshold: f64) -> Self {
        TapModel { threshold, ..self }
    }

    pub fn with_delay(self, delay_symbols: usize) -> Self {
        TapModel {
            delay_symbols,
            ..self
        }
    }

    /// `P_rc(pT_s + gT_s/G - τ - d)`.
    #[inline]
    pub fn tap(&self, p: usize, g: usize, oversampling: usize, delay: f64, grid: &DDGridConfig) -> f64 {
        let t = p as f64 + g as f64 / oversampling as f64
            - delay / grid.ts()
            - self.delay_symbols as f64;
        self.filter.eval(t)
    }

    /// Surviving `(p, P_rc[g])` pairs of every path for branch `g`.
    pub fn branch_taps(
        &self,
        ch: &ChannelRealization,
        g: usize,
        grid: &DDGridConfig,
    ) -> Vec<Vec<(usize, f64)>> {
        ch.paths
            .iter()
            .map(|path| {
                (0..ch.channel_order)
                    .filter_map(|p| {
                        let v = self.tap(p, g, grid.g, path.delay, grid);
                        (v != 0.0 && v.abs() >= self.threshold).then_some((p, v))
                    })
                    .collect()
            })
            .collect()
    }
}

/// Power-delay profile used when drawing channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayProfile {
    /// Delays are drawn uniformly on `[0, max_delay]` seconds.
    pub max_delay: f64,
    /// Decay constant of `p(τ) = e^{-τ/decay}` in seconds.
    pub decay: f64,
    /// Round delays to `T_s` and Dopplers to whole bins.
    pub on_grid: bool,
}

impl DelayProfile {
    /// Exponential typical-urban profile, `p(τ) = e^{-τ}` with τ in µs over 5 µs.
    pub fn typical_urban() -> Self {
        DelayProfile {
            max_delay: 5e-6,
            decay: 1e-6,
            on_grid: false,
        }
    }
}

/// Draws an `l`-path channel: first path at τ = 0, the rest uniform over the
/// profile span, complex Gaussian gains weighted by the profile and normalized
/// to unit total average power, Jakes Dopplers.
pub fn draw_channel(
    profile: &DelayProfile,
    nu_max: f64,
    l: usize,
    grid: &DDGridConfig,
    filter: &RolloffFilter,
    rng: RngSpec,
) -> Result<ChannelRealization> {
    if l == 0 {
        return Err(Error::config("channel.paths", "L must be at least 1"));
    }
    if nu_max < 0.0 {
        return Err(Error::config("channel.nu_max", "must be non-negative"));
    }
    let mut rng = rng.rng();
    let ts = grid.ts();
    let mut delays: Vec<f64> = (0..l)
        .map(|i| {
            if i == 0 {
                0.0
            } else {
                rng.random::<f64>() * profile.max_delay
            }
        })
        .collect();
    delays.sort_by(|a, b| a.total_cmp(b));
    if profile.on_grid {
        for d in &mut delays {
            *d = (*d / ts).round() * ts;
        }
    }
    let weights: Vec<f64> = delays.iter().map(|d| (-d / profile.decay).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut paths = Vec::with_capacity(l);
    for (delay, w) in delays.into_iter().zip(weights) {
        let power = w / total;
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        let gain = Complex64::new(re, im) * (power / 2.0).sqrt();
        let rho = (rng.random::<f64>() * 2.0 - 1.0) * PI;
        let path = ChannelPath::new(gain, delay, jakes_doppler(nu_max, rho), grid);
        paths.push(if profile.on_grid {
            ChannelPath::on_grid(gain, delay, path.doppler_int, grid)
        } else {
            path
        });
    }
    let channel_order = channel_order_for(profile.max_delay.max(0.0), grid, filter);
    let ch = ChannelRealization {
        paths,
        channel_order,
        max_doppler: nu_max,
    };
    ch.validate(grid)?;
    Ok(ch)
}

/// Passes the symbol-spaced transmit signal (with its cyclic prefix) through
/// the channel and samples it at the `G/T_s` rate of `grid`. Noiseless.
pub fn apply_channel(
    s: &BasebandSignal,
    ch: &ChannelRealization,
    grid: &DDGridConfig,
    taps: &TapModel,
) -> Result<BasebandSignal> {
    apply_channel_with(s, ch, grid, taps, false)
}

/// As [`apply_channel`]; with `doppler_at_fss_instant` the Doppler phase is
/// evaluated at the true sampling instant `uT_s + gT_s/G` rather than at the
/// symbol-spaced instant `uT_s` of the polyphase model.
pub fn apply_channel_with(
    s: &BasebandSignal,
    ch: &ChannelRealization,
    grid: &DDGridConfig,
    taps: &TapModel,
    doppler_at_fss_instant: bool,
) -> Result<BasebandSignal> {
    if s.oversampling != 1 {
        return Err(Error::Precondition(
            "the transmitter emits symbol-spaced samples; build s with G = 1".into(),
        ));
    }
    let p_order = ch.channel_order;
    if p_order > s.cp_len + 1 {
        return Err(Error::Precondition(format!(
            "channel order {p_order} needs a cyclic prefix of at least {} samples, got {}",
            p_order - 1,
            s.cp_len
        )));
    }
    let g_os = grid.g;
    let len = s.samples.len();
    let cp = s.cp_len as i64;
    let nm = (grid.n * grid.m) as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); len * g_os];
    for g in 0..g_os {
        let branch = taps.branch_taps(ch, g, grid);
        for (path, path_taps) in ch.paths.iter().zip(&branch) {
            // ν T_s in cycles per sample
            let cyc = path.normalized_doppler() / nm;
            let frac = if doppler_at_fss_instant {
                g as f64 / g_os as f64
            } else {
                0.0
            };
            for &(p, tap) in path_taps {
                let coef = path.gain * tap;
                for u in p..len {
                    let t = (u as i64 - cp - p as i64) as f64 + frac;
                    let ph = Complex64::from_polar(1.0, 2.0 * PI * cyc * t);
                    out[u * g_os + g] += coef * ph * s.samples[u - p];
                }
            }
        }
    }
    Ok(BasebandSignal {
        samples: out,
        oversampling: g_os,
        sample_rate: g_os as f64 * grid.bandwidth(),
        cp_len: s.cp_len * g_os,
    })
}

/// Unit-variance receive-filtered noise at the sampling instants of `r`,
/// normalized so that white input noise of variance 1 yields `∫P_rrc²`.
///
/// White complex Gaussian noise is generated on a lattice at twice the
/// sampling rate, convolved with the receive filter, and decimated.
pub fn filtered_noise(
    len: usize,
    oversampling: usize,
    rx_filter: &RolloffFilter,
    rng: RngSpec,
) -> Vec<Complex64> {
    let mut rng = rng.rng();
    let k = 2 * oversampling; // lattice points per T_s
    let half = rx_filter.span_symbols * k;
    let coefs: Vec<f64> = (0..=2 * half)
        .map(|j| rx_filter.eval((j as f64 - half as f64) / k as f64) / k as f64)
        .collect();
    // white samples of variance K per lattice point: PSD 1 in T_s units
    let std = (k as f64 / 2.0).sqrt();
    let lattice_len = 2 * (len - 1) + 2 * half + 1;
    let white: Vec<Complex64> = (0..lattice_len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im) * std
        })
        .collect();
    (0..len)
        .map(|v| {
            let base = 2 * v;
            coefs
                .iter()
                .zip(&white[base..base + coefs.len()])
                .map(|(c, w)| w * *c)
                .sum()
        })
        .collect()
}

/// Adds receive-filtered white noise of input variance `sigma_n2`.
pub fn add_rx_filtered_noise(
    r: &BasebandSignal,
    sigma_n2: f64,
    filter: &RolloffFilter,
    rng: RngSpec,
) -> BasebandSignal {
    if sigma_n2 == 0.0 {
        return r.clone();
    }
    let rrc = filter.with_kind(FilterKind::RootRaisedCosine);
    let noise = filtered_noise(r.samples.len(), r.oversampling, &rrc, rng);
    let amp = sigma_n2.sqrt();
    BasebandSignal {
        samples: r
            .samples
            .iter()
            .zip(noise)
            .map(|(s, n)| s + n * amp)
            .collect(),
        ..r.clone()
    }
}

/// `σ_n² = E_s / 10^{snr/10}`.
pub fn snr_to_sigma(snr_db: f64, alphabet: &ModAlphabet) -> f64 {
    alphabet.mean_energy() / 10f64.powf(snr_db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::make_qpsk_gray;
    use crate::modem::{add_cp, BasebandSignal};
    use crate::pulses::eval_rc;

    fn grid() -> DDGridConfig {
        DDGridConfig::new(8, 16, 15e3, 2).unwrap()
    }

    fn rc() -> RolloffFilter {
        RolloffFilter::rc(0.4, 4).unwrap()
    }

    fn random_signal(len: usize, cp: usize, seed: u64) -> BasebandSignal {
        let mut rng = RngSpec::new(seed, 0).rng();
        let s = BasebandSignal {
            samples: (0..len)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect(),
            oversampling: 1,
            sample_rate: 0.0,
            cp_len: 0,
        };
        add_cp(&s, cp).unwrap()
    }

    #[test]
    fn doppler_at_300_kmh_4_ghz() {
        let nu = max_doppler(300.0, 4e9);
        assert!((nu - 1111.0).abs() < 1.0, "{nu}");
    }

    #[test]
    fn doppler_split() {
        let g = grid();
        let res = g.doppler_resolution();
        for x in [-1.7, -0.5, 0.0, 0.3, 0.5, 1.49, 2.51] {
            let (k, b) = split_doppler(x * res, &g);
            assert!(b > -0.5 && b <= 0.5 + 1e-12, "{x}: {b}");
            assert!(((k as f64 + b) - x).abs() < 1e-9);
        }
        assert_eq!(split_doppler(0.5 * res, &g).0, 0);
    }

    #[test]
    fn zero_max_doppler() {
        let g = grid();
        let ch = draw_channel(&DelayProfile::typical_urban(), 0.0, 9, &g, &rc(), RngSpec::new(1, 1)).unwrap();
        for p in &ch.paths {
            assert_eq!(p.doppler, 0.0);
            assert_eq!(p.doppler_int, 0);
            assert_eq!(p.doppler_frac, 0.0);
        }
        assert_eq!(jakes_doppler(1111.0, 0.0), 1111.0);
    }

    #[test]
    fn draw_invariants() {
        let g = grid();
        let nu_max = max_doppler(300.0, 4e9);
        let mut power = 0.0;
        let trials = 400;
        for seed in 0..trials {
            let ch = draw_channel(&DelayProfile::typical_urban(), nu_max, 9, &g, &rc(), RngSpec::new(seed, 1)).unwrap();
            assert_eq!(ch.paths[0].delay, 0.0);
            assert!(ch.channel_order <= g.m);
            for p in &ch.paths {
                assert!(p.doppler.abs() <= nu_max);
                let x = p.doppler * g.frame_duration();
                assert!((p.normalized_doppler() - x).abs() <= 1e-9 * x.abs().max(1.0));
            }
            power += ch.paths.iter().map(|p| p.gain.norm_sqr()).sum::<f64>();
        }
        assert!((power / trials as f64 - 1.0).abs() < 0.1);
    }

    #[test]
    fn identity_channel() {
        let g = grid().with_oversampling(1);
        let path = ChannelPath::new(Complex64::new(1.0, 0.0), 0.0, 0.0, &g);
        let ch = ChannelRealization { paths: vec![path], channel_order: 3, max_doppler: 0.0 };
        let taps = TapModel::new(&rc()).with_delay(0);
        let s = random_signal(128, 4, 3);
        let r = apply_channel(&s, &ch, &g, &taps).unwrap();
        for (a, b) in r.samples.iter().zip(&s.samples) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn on_grid_delay_is_a_pure_shift() {
        let g = grid().with_oversampling(1);
        let path = ChannelPath::new(Complex64::new(1.0, 0.0), 3.0 * g.ts(), 0.0, &g);
        let ch = ChannelRealization::new(vec![path], 0.0, &g, &rc()).unwrap();
        let taps = TapModel::new(&rc());
        let s = random_signal(128, ch.channel_order, 4);
        let r = apply_channel(&s, &ch, &g, &taps).unwrap();
        let shift = 3 + taps.delay_symbols;
        for u in shift..s.samples.len() {
            assert!((r.samples[u] - s.samples[u - shift]).norm() < 1e-9);
        }
    }

    #[test]
    fn off_grid_tap_vector() {
        let g = grid();
        let tau = 1.37 * g.ts();
        let path = ChannelPath::new(Complex64::new(1.0, 0.0), tau, 0.0, &g);
        let ch = ChannelRealization::new(vec![path], 0.0, &g, &rc()).unwrap();
        let taps = TapModel::new(&rc());
        for branch in 0..2 {
            let got = &taps.branch_taps(&ch, branch, &g)[0];
            for &(p, v) in got {
                let t = p as f64 + branch as f64 / 2.0 - 1.37 - 4.0;
                assert!((v - eval_rc(t, 0.4)).abs() < 1e-12);
            }
            assert!(got.len() >= 8);
        }
        // an impulse picks the taps out of the channel output directly
        let g1 = g.with_oversampling(1);
        let mut s = BasebandSignal {
            samples: vec![Complex64::new(0.0, 0.0); 64],
            oversampling: 1,
            sample_rate: 0.0,
            cp_len: 0,
        };
        s.samples[0] = Complex64::new(1.0, 0.0);
        let s = add_cp(&s, ch.channel_order).unwrap();
        let r = apply_channel(&s, &ch, &g1, &taps).unwrap();
        for p in 0..ch.channel_order {
            let expect = taps.filter.eval(p as f64 - 1.37 - 4.0);
            assert!((r.samples[ch.channel_order + p].re - expect).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn rejects_short_cp() {
        let g = grid();
        let ch = draw_channel(&DelayProfile::typical_urban(), 100.0, 3, &g, &rc(), RngSpec::new(1, 2)).unwrap();
        let s = random_signal(128, 2, 1);
        assert!(matches!(apply_channel(&s, &ch, &g, &TapModel::new(&rc())), Err(Error::Precondition(_))));
    }

    #[test]
    fn snr_mapping() {
        let a = make_qpsk_gray();
        assert!((snr_to_sigma(0.0, &a) - 1.0).abs() < 1e-12);
        assert!((snr_to_sigma(10.0, &a) - 0.1).abs() < 1e-12);
        assert!((snr_to_sigma(3.0, &a) - 10f64.powf(-0.3)).abs() < 1e-12);
        assert!((snr_to_sigma(3.0, &a) - 0.5012).abs() < 1e-4);
    }

    #[test]
    fn zero_noise_is_identity() {
        let s = random_signal(32, 0, 9);
        let out = add_rx_filtered_noise(&s, 0.0, &rc(), RngSpec::new(0, 0));
        assert_eq!(out, s);
    }

    #[test]
    fn record_round_trip() {
        let g = grid();
        let ch = draw_channel(&DelayProfile::typical_urban(), 1111.0, 4, &g, &rc(), RngSpec::new(5, 1)).unwrap();
        let text = ch.to_toml().unwrap();
        assert_eq!(ChannelRealization::from_toml(&text).unwrap(), ch);
    }
}
