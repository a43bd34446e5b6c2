//! Trade edges for BER: keep only the R strongest entries per row and treat
//! the rest as Gaussian interference.

use otfs_fss::analysis::{count_bit_errors, LinkSetup};
use otfs_fss::equalizer::{simplified_run, SimplifiedKind};
use otfs_fss::SparseDDMatrix;

fn main() -> otfs_fss::Result<()> {
    let link = LinkSetup::desk(5)?;
    let (sn, sn_f) = link.noise_var(10.0);
    let frames = 4;
    let mut d = 0;
    println!("{:>4} {:>12} {:>10}", "R", "mults/frame", "BER");
    for r in [4, 8, 16, 32, 64, 1000] {
        let (mut errs, mut mults) = (0, 0);
        for f in 0..frames {
            let frame = link.frame(f)?;
            let hs = link.matrices(&frame.csi)?;
            d = hs.iter().map(SparseDDMatrix::max_row_degree).max().unwrap_or(0);
            let ys = frame.observe(sn);
            let ys: Vec<&[_]> = ys.iter().map(|y| &y[..]).collect();
            let hr: Vec<&SparseDDMatrix> = hs.iter().collect();
            let out = simplified_run(SimplifiedKind::Tmp, &ys, &hr, r, sn_f, &link.params, &link.alphabet)?;
            errs += count_bit_errors(&link, out.decisions(), &frame.data);
            mults += out.complexity().multiplications;
        }
        println!("{r:4} {:12} {:10.3e}", mults / frames, errs as f64 / (frames * link.bits_per_frame()) as f64);
    }
    println!("full row support D = {d}");
    Ok(())
}
