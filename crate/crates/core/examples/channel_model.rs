//! Draw a doubly selective channel and inspect its paths and tap support.

use otfs_fss::channel::{channel_order_for, draw_channel, max_doppler};
use otfs_fss::{DDGridConfig, DelayProfile, RngSpec, RolloffFilter, TapModel};

fn main() -> otfs_fss::Result<()> {
    let grid = DDGridConfig::new(16, 32, 15e3, 2)?;
    let filter = RolloffFilter::rrc(0.4, 4)?;
    let nu_max = max_doppler(300.0, 4e9);
    println!("max Doppler {nu_max:.1} Hz, Doppler bin {:.1} Hz", grid.doppler_resolution());

    let profile = DelayProfile::typical_urban();
    let ch = draw_channel(&profile, nu_max, 9, &grid, &filter, RngSpec::new(7, 0))?;
    println!("channel order P = {}", channel_order_for(profile.max_delay, &grid, &filter));
    println!("{:>8} {:>10} {:>10} {:>4} {:>7}", "|gain|", "delay/Ts", "nu [Hz]", "k", "beta");
    for p in &ch.paths {
        println!(
            "{:8.3} {:10.3} {:10.1} {:4} {:7.3}",
            p.gain.norm(),
            p.delay / grid.ts(),
            p.doppler,
            p.doppler_int,
            p.doppler_frac
        );
    }

    let taps = TapModel::new(&filter.with_kind(otfs_fss::FilterKind::RaisedCosine)).with_threshold(1e-6);
    for g in 0..grid.g {
        let bt = taps.branch_taps(&ch, g, &grid);
        let nz: usize = bt.iter().map(|t| t.len()).sum();
        println!("branch {g}: {nz} non-negligible path taps");
    }
    println!("\n{}", ch.to_toml()?);
    Ok(())
}
