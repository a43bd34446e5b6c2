//! Paired BER sweep of the fractionally spaced receivers against the
//! symbol-spaced baseline at desk scale.
//!
//! cargo run --release --example ber_sweep -- [frames]

use std::time::Instant;

use otfs_fss::analysis::{ber_sweep, write_ber_csv, LinkSetup, Receiver};

fn main() -> otfs_fss::Result<()> {
    let frames = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    let link = LinkSetup::desk(1)?;
    let frame = link.frame(0)?;
    let graphs = link.matrices(&frame.csi)?;
    println!("row support D = {}", graphs[0].max_row_degree());

    let receivers = [Receiver::Tmp, Receiver::Icmp, Receiver::Mp, Receiver::SssMp];
    let snrs = [0.0, 5.0, 10.0, 15.0];
    let t = Instant::now();
    let res = ber_sweep(&link, &receivers, &snrs, frames)?;
    println!("{frames} frames in {:.1?}", t.elapsed());
    write_ber_csv(&res.points, std::io::stdout())?;
    Ok(())
}
