//! Push a QPSK frame through the OTFS modem with an ideal channel and back.

use num_complex::Complex64;
use otfs_fss::modem::{add_cp, remove_cp};
use otfs_fss::{make_qpsk_gray, DDFrame, DDGridConfig, OtfsModem};
use rand::Rng;

fn main() -> otfs_fss::Result<()> {
    let grid = DDGridConfig::new(16, 32, 15e3, 2)?;
    let modem = OtfsModem::new(grid);
    let qpsk = make_qpsk_gray();
    let mut rng = otfs_fss::RngSpec::new(1, 0).rng();

    let idx: Vec<usize> = (0..grid.symbols()).map(|_| rng.random_range(0..qpsk.order())).collect();
    let x = DDFrame::from_values(grid.n, grid.m, idx.iter().map(|&i| qpsk.symbol(i)).collect())?;

    let tx = add_cp(&modem.modulate(&x)?, 8)?;
    println!("{} samples on air ({} per symbol)", tx.samples.len(), tx.oversampling);
    let y = modem.demodulate(&remove_cp(&tx)?)?;

    let err = y.values.iter().zip(&x.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let hard: Vec<usize> = y.values.iter().map(|&v: &Complex64| qpsk.hard_decision(v)).collect();
    println!("max deviation {err:.2e}, symbol errors {}", hard.iter().zip(&idx).filter(|(a, b)| a != b).count());
    Ok(())
}
