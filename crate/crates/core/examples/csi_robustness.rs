//! BER of the turbo receiver when the channel estimate is perturbed.

use otfs_fss::analysis::{ber_sweep, CsiPerturbSpec, LinkSetup, Receiver};

fn main() -> otfs_fss::Result<()> {
    let frames = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(6);
    let mut link = LinkSetup::desk(6)?;
    for epsilon in [0.0, 0.02, 0.05, 0.1, 0.2] {
        link.csi = CsiPerturbSpec { epsilon };
        let res = ber_sweep(&link, &[Receiver::Tmp], &[10.0], frames)?;
        println!("epsilon {epsilon:4.2}: BER {:.3e}", res.points[0].ber);
    }
    Ok(())
}
