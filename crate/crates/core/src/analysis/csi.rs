use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelPath, ChannelRealization};
use crate::error::{Error, Result};
use crate::grid::DDGridConfig;
use crate::pulses::RolloffFilter;
use crate::rng::RngSpec;

/// Relative radius of the CSI error ball.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CsiPerturbSpec {
    pub epsilon: f64,
}

/// Receiver-side channel estimate: gain, delay and Doppler of every path are
/// moved uniformly within balls of radius `ε·|value|`.
pub fn perturb_csi(
    ch: &ChannelRealization,
    spec: &CsiPerturbSpec,
    grid: &DDGridConfig,
    filter: &RolloffFilter,
    rng: RngSpec,
) -> Result<ChannelRealization> {
    if !(spec.epsilon >= 0.0) {
        return Err(Error::config("csi.epsilon", "must be non-negative"));
    }
    if spec.epsilon == 0.0 {
        return Ok(ch.clone());
    }
    let eps = spec.epsilon;
    let mut rng = rng.rng();
    let mut paths = Vec::with_capacity(ch.paths.len());
    for p in &ch.paths {
        let radius = eps * p.gain.norm() * rng.random::<f64>().sqrt();
        let angle = rng.random::<f64>() * 2.0 * PI;
        let gain = p.gain + Complex64::from_polar(radius, angle);
        let delay = p.delay + eps * p.delay * (2.0 * rng.random::<f64>() - 1.0);
        let doppler = p.doppler + eps * p.doppler.abs() * (2.0 * rng.random::<f64>() - 1.0);
        paths.push(ChannelPath::new(gain, delay, doppler, grid));
    }
    ChannelRealization::new(paths, ch.max_doppler, grid, filter)
        .map(|c| ChannelRealization { channel_order: c.channel_order.max(ch.channel_order), ..c })
}
