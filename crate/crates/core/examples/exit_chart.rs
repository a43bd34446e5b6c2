//! EXIT curves of one branch equalizer at two SNRs, plus the mutual
//! information after each pass of the turbo receiver.

use otfs_fss::analysis::{exit_chart, exit_trajectory, write_exit_csv, LinkSetup};

fn main() -> otfs_fss::Result<()> {
    let link = LinkSetup::desk(4)?;
    let sigmas = [0.1, 0.4, 0.8, 1.2, 1.6, 2.0, 2.5, 3.2];
    let mut points = exit_chart(&link, 0, 0.0, &sigmas, 10)?;
    points.extend(exit_chart(&link, 0, 6.0, &sigmas, 10)?);
    write_exit_csv(&points, std::io::stdout())?;

    let traj = exit_trajectory(&link, 6.0, 5)?;
    println!("\nturbo trajectory at 6 dB:");
    for (i, mi) in traj.iter().enumerate() {
        println!("  pass {:2} (branch {}): I = {mi:.3}", i + 1, i % link.grid.g);
    }
    Ok(())
}
