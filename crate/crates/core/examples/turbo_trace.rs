//! Watch the turbo receiver converge: BER after every turbo iteration.

use otfs_fss::analysis::{count_bit_errors, LinkSetup};
use otfs_fss::{tmp_run, SparseDDMatrix};

fn main() -> otfs_fss::Result<()> {
    let mut link = LinkSetup::desk(2)?;
    link.params.turbo_iters = 5;
    let frames = 8;
    let (sn, sn_f) = link.noise_var(6.0);
    let mut errs = vec![0u64; link.params.turbo_iters];
    for f in 0..frames {
        let frame = link.frame(f)?;
        let hs = link.matrices(&frame.csi)?;
        let ys = frame.observe(sn);
        let ys: Vec<&[_]> = ys.iter().map(|y| &y[..]).collect();
        let out = tmp_run(&ys, &hs.iter().collect::<Vec<&SparseDDMatrix>>(), sn_f, &link.params, &link.alphabet)?;
        for (e, d) in errs.iter_mut().zip(&out.trace) {
            *e += count_bit_errors(&link, d, &frame.data);
        }
    }
    for (i, e) in errs.iter().enumerate() {
        println!("turbo iteration {}: BER {:.4}", i + 1, *e as f64 / (frames * link.bits_per_frame()) as f64);
    }
    Ok(())
}
