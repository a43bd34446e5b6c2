//! One simulated link: everything needed to produce frames and receiver graphs.

use num_complex::Complex64;
use rand::Rng;

use super::csi::{perturb_csi, CsiPerturbSpec};
use crate::alphabet::ModAlphabet;
use crate::channel::{
    apply_channel, draw_channel, filtered_noise, snr_to_sigma, ChannelRealization, DelayProfile, TapModel,
};
use crate::ddmatrix::{build_all_branches, build_on_grid_matrix, SparseDDMatrix, TruncationSpec};
use crate::equalizer::MPParams;
use crate::error::Result;
use crate::grid::DDGridConfig;
use crate::modem::{add_cp, remove_cp, BasebandSignal, DDFrame, OtfsModem};
use crate::pulses::{FilterKind, RolloffFilter};
use crate::rng::{Purpose, RngSpec};

#[derive(Clone)]
pub struct LinkSetup {
    /// Receiver grid; `grid.g` is the number of branches.
    pub grid: DDGridConfig,
    pub alphabet: ModAlphabet,
    /// Transmit/receive RRC filter; the channel sees its RC square.
    pub filter: RolloffFilter,
    pub profile: DelayProfile,
    pub paths: usize,
    pub nu_max: f64,
    pub trunc: TruncationSpec,
    /// Receiver-side tap threshold.
    pub tap_threshold: f64,
    pub params: MPParams,
    pub csi: CsiPerturbSpec,
    pub seed: u64,
    modem: OtfsModem,
}

/// One transmitted frame and its noiseless and noise-only observations.
#[derive(Debug, Clone)]
pub struct Frame {
    pub index: u64,
    pub data: Vec<usize>,
    pub channel: ChannelRealization,
    /// Channel state the receiver believes in.
    pub csi: ChannelRealization,
    /// Noiseless delay-Doppler observation per branch.
    pub clean: Vec<Vec<Complex64>>,
    /// Receive-filtered noise per branch for unit input noise variance.
    pub noise: Vec<Vec<Complex64>>,
}

impl Frame {
    /// Observations at input noise variance `sigma_n2`.
    pub fn observe(&self, sigma_n2: f64) -> Vec<Vec<Complex64>> {
        let a = sigma_n2.sqrt();
        self.clean
            .iter()
            .zip(&self.noise)
            .map(|(c, n)| c.iter().zip(n).map(|(c, n)| c + n * a).collect())
            .collect()
    }
}

impl LinkSetup {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        grid: DDGridConfig,
        alphabet: ModAlphabet,
        filter: RolloffFilter,
        profile: DelayProfile,
        paths: usize,
        nu_max: f64,
        trunc: TruncationSpec,
        params: MPParams,
        seed: u64,
    ) -> Result<Self> {
        grid.validate()?;
        filter.validate()?;
        trunc.validate(&grid)?;
        params.validate()?;
        Ok(LinkSetup {
            grid,
            alphabet,
            filter: filter.with_kind(FilterKind::RootRaisedCosine),
            profile,
            paths,
            nu_max,
            trunc,
            tap_threshold: 1e-6,
            params,
            csi: CsiPerturbSpec::default(),
            seed,
            modem: OtfsModem::new(grid.with_oversampling(1)),
        })
    }

    /// Small-scale defaults: N = 16, M = 32, G = 2, QPSK, 300 km/h at 4 GHz.
    pub fn desk(seed: u64) -> Result<Self> {
        let grid = DDGridConfig::new(16, 32, 15e3, 2)?;
        let trunc = TruncationSpec::new(6, &grid)?;
        Self::new(
            grid,
            crate::alphabet::make_qpsk_gray(),
            RolloffFilter::rrc(0.4, 4)?,
            DelayProfile::typical_urban(),
            9,
            crate::channel::max_doppler(300.0, 4e9),
            trunc,
            MPParams::default(),
            seed,
        )
    }

    pub fn tx_taps(&self) -> TapModel {
        TapModel::new(&self.filter)
    }

    pub fn rx_taps(&self) -> TapModel {
        TapModel::new(&self.filter).with_threshold(self.tap_threshold)
    }

    /// `(σ_n², σ_N²)`: input noise variance and its value after the receive filter.
    pub fn noise_var(&self, snr_db: f64) -> (f64, f64) {
        let s = snr_to_sigma(snr_db, &self.alphabet);
        (s, s * self.filter.energy())
    }

    pub fn bits_per_frame(&self) -> u64 {
        (self.grid.symbols() * self.alphabet.bits_per_symbol()) as u64
    }

    pub fn frame(&self, index: u64) -> Result<Frame> {
        let grid = &self.grid;
        let channel = draw_channel(
            &self.profile,
            self.nu_max,
            self.paths,
            grid,
            &self.filter,
            RngSpec::for_frame(self.seed, index, Purpose::Channel),
        )?;
        let mut rng = RngSpec::for_frame(self.seed, index, Purpose::Data).rng();
        let q = self.alphabet.order();
        let data: Vec<usize> = (0..grid.symbols()).map(|_| rng.random_range(0..q)).collect();
        let x = DDFrame::from_values(grid.n, grid.m, data.iter().map(|&i| self.alphabet.symbol(i)).collect())?;
        let s = add_cp(&self.modem.modulate(&x)?, channel.channel_order - 1)?;
        let r = apply_channel(&s, &channel, grid, &self.tx_taps())?;
        let noise = BasebandSignal {
            samples: filtered_noise(
                r.samples.len(),
                grid.g,
                &self.filter,
                RngSpec::for_frame(self.seed, index, Purpose::Noise),
            ),
            ..r.clone()
        };
        let clean = self.to_dd(&r)?;
        let noise = self.to_dd(&noise)?;
        let csi = perturb_csi(&channel, &self.csi, grid, &self.filter, RngSpec::for_frame(self.seed, index, Purpose::Csi))?;
        Ok(Frame {
            index,
            data,
            channel,
            csi,
            clean,
            noise,
        })
    }

    fn to_dd(&self, r: &BasebandSignal) -> Result<Vec<Vec<Complex64>>> {
        let r = remove_cp(r)?;
        (0..self.grid.g)
            .map(|g| Ok(self.modem.demodulate(&r.branch(g)?)?.values))
            .collect()
    }

    /// Per-branch receiver graphs for the channel state `csi`.
    pub fn matrices(&self, csi: &ChannelRealization) -> Result<Vec<SparseDDMatrix>> {
        build_all_branches(csi, &self.trunc, &self.grid, &self.rx_taps())
    }

    /// Symbol-spaced receiver graph: branch 0 only, with delays and Dopplers
    /// of `csi` rounded to the grid.
    pub fn sss_matrix(&self, csi: &ChannelRealization) -> Result<SparseDDMatrix> {
        build_on_grid_matrix(&csi.rounded_to_grid(&self.grid), 0, &self.grid, &self.rx_taps())
    }
}
