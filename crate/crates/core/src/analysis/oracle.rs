use crate::channel::{apply_channel, ChannelRealization, TapModel};
use crate::error::{Error, Result};
use crate::grid::DDGridConfig;
use crate::modem::{add_cp, remove_cp, DDFrame, OtfsModem};

/// Simulated branch-`g` delay-Doppler output for input `x`: ISFFT,
/// Heisenberg, CP, noiseless channel, CP removal, branch decimation, Wigner,
/// SFFT.
pub fn time_domain_oracle(
    x: &DDFrame,
    ch: &ChannelRealization,
    g: usize,
    grid: &DDGridConfig,
    taps: &TapModel,
) -> Result<DDFrame> {
    if g >= grid.g {
        return Err(Error::Precondition(format!("branch {g} of G = {}", grid.g)));
    }
    let modem = OtfsModem::new(grid.with_oversampling(1));
    let s = modem.modulate(x)?;
    let s = add_cp(&s, ch.channel_order.saturating_sub(1))?;
    let r = apply_channel(&s, ch, grid, taps)?;
    let r = remove_cp(&r)?.branch(g)?;
    modem.demodulate(&r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelPath;
    use crate::pulses::RolloffFilter;
    use num_complex::Complex64;

    #[test]
    fn identity_and_linearity() {
        let grid = DDGridConfig::new(4, 8, 15e3, 2).unwrap();
        let rc = RolloffFilter::rc(0.4, 2).unwrap();
        let x = DDFrame::from_values(4, 8, (0..32).map(|i| Complex64::new(i as f64, -1.0)).collect()).unwrap();
        let id = ChannelRealization {
            paths: vec![ChannelPath::new(Complex64::new(1.0, 0.0), 0.0, 0.0, &grid)],
            channel_order: 1,
            max_doppler: 0.0,
        };
        let y = time_domain_oracle(&x, &id, 0, &grid, &TapModel::new(&rc).with_delay(0)).unwrap();
        for (a, b) in y.values.iter().zip(&x.values) {
            assert!((a - b).norm() < 1e-9);
        }
        let ch = ChannelRealization::new(
            vec![ChannelPath::new(Complex64::new(0.6, 0.2), 1.3 * grid.ts(), 0.7 * grid.doppler_resolution(), &grid)],
            0.0,
            &grid,
            &rc,
        )
        .unwrap();
        let taps = TapModel::new(&rc);
        let x2 = DDFrame::from_values(4, 8, (0..32).map(|i| Complex64::new(1.0, i as f64 * 0.1)).collect()).unwrap();
        let (a, b) = (Complex64::new(0.5, 2.0), Complex64::new(-1.0, 0.3));
        let mix = DDFrame::from_values(4, 8, x.values.iter().zip(&x2.values).map(|(u, v)| a * u + b * v).collect()).unwrap();
        let lhs = time_domain_oracle(&mix, &ch, 1, &grid, &taps).unwrap();
        let y1 = time_domain_oracle(&x, &ch, 1, &grid, &taps).unwrap();
        let y2 = time_domain_oracle(&x2, &ch, 1, &grid, &taps).unwrap();
        for i in 0..32 {
            assert!((lhs.values[i] - (a * y1.values[i] + b * y2.values[i])).norm() < 1e-9);
        }
    }
}
