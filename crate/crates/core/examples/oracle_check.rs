//! Compare the closed-form DD matrix against a brute-force time-domain run,
//! and show how the Doppler truncation window trades accuracy for sparsity.

use num_complex::Complex64;
use otfs_fss::analysis::time_domain_oracle;
use otfs_fss::channel::draw_channel;
use otfs_fss::ddmatrix::build_branch_matrix;
use otfs_fss::{DDFrame, DDGridConfig, DelayProfile, RngSpec, RolloffFilter, TapModel, TruncationSpec};
use rand::Rng;

fn main() -> otfs_fss::Result<()> {
    let grid = DDGridConfig::new(8, 16, 15e3, 2)?;
    let rc = RolloffFilter::rc(0.4, 4)?;
    let taps = TapModel::new(&rc);
    let ch = draw_channel(&DelayProfile::typical_urban(), 1111.0, 6, &grid, &rc, RngSpec::new(3, 0))?;

    let mut rng = RngSpec::new(3, 1).rng();
    let v = (0..grid.symbols()).map(|_| Complex64::new(rng.random(), rng.random())).collect();
    let x = DDFrame::from_values(grid.n, grid.m, v)?;

    let exact = TruncationSpec::new(grid.n / 2, &grid)?;
    for g in 0..grid.g {
        let h = build_branch_matrix(&ch, g, &exact, &grid, &taps)?;
        let y = time_domain_oracle(&x, &ch, g, &grid, &taps)?;
        let err = h.mul_vec(&x.values)?.iter().zip(&y.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        println!("branch {g}: nnz {}, max |Hx - y| = {err:.2e}", h.nnz());
    }

    let full = build_branch_matrix(&ch, 0, &exact, &grid, &taps)?;
    for e in 0..=grid.n / 2 {
        let h = build_branch_matrix(&ch, 0, &TruncationSpec { e }, &grid, &taps)?;
        println!("E = {e}: D = {:3}, relative Frobenius gap {:.3e}", h.max_row_degree(), h.frobenius_diff(&full)? / full.frobenius_norm());
    }
    Ok(())
}
