use num_complex::Complex64;
use otfs_fss::analysis::stats::ranks;
use otfs_fss::channel::draw_channel;
use otfs_fss::ddmatrix::build_branch_matrix;
use otfs_fss::equalizer::{mp_equalize_with_priors, LLRBlock};
use otfs_fss::{
    make_qpsk_gray, DDFrame, DDGridConfig, DelayProfile, MPParams, OtfsModem, RngSpec, RolloffFilter, SparseDDMatrix,
    TapModel, TruncationSpec,
};
use proptest::prelude::*;

fn cvec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(r, i)| Complex64::new(r, i)), len)
}

fn small_h(seed: u64) -> (DDGridConfig, SparseDDMatrix) {
    let grid = DDGridConfig::new(4, 8, 15e3, 2).unwrap();
    let rc = RolloffFilter::rc(0.4, 2).unwrap();
    let mut profile = DelayProfile::typical_urban();
    profile.max_delay = 1e-5;
    let ch = draw_channel(&profile, 3000.0, 3, &grid, &rc, RngSpec::new(seed, 0)).unwrap();
    let h = build_branch_matrix(&ch, (seed % 2) as usize, &TruncationSpec { e: 2 }, &grid, &TapModel::new(&rc)).unwrap();
    (grid, h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn modem_is_linear(a in cvec(32), b in cvec(32), s in -2.0f64..2.0) {
        let grid = DDGridConfig::new(4, 8, 15e3, 2).unwrap();
        let modem = OtfsModem::new(grid);
        let fa = DDFrame::from_values(4, 8, a.clone()).unwrap();
        let fb = DDFrame::from_values(4, 8, b.clone()).unwrap();
        let sum = DDFrame::from_values(4, 8, a.iter().zip(&b).map(|(x, y)| x * s + y).collect()).unwrap();
        let (ta, tb, ts) = (modem.modulate(&fa).unwrap(), modem.modulate(&fb).unwrap(), modem.modulate(&sum).unwrap());
        for ((x, y), z) in ta.samples.iter().zip(&tb.samples).zip(&ts.samples) {
            prop_assert!((x * s + y - z).norm() < 1e-12);
        }
    }

    #[test]
    fn channel_matrix_is_linear(seed in 0u64..1000, a in cvec(32), b in cvec(32)) {
        let (_, h) = small_h(seed);
        let ha = h.mul_vec(&a).unwrap();
        let hb = h.mul_vec(&b).unwrap();
        let sum: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        for ((x, y), z) in ha.iter().zip(&hb).zip(&h.mul_vec(&sum).unwrap()) {
            prop_assert!((x + y - z).norm() < 1e-10);
        }
    }

    #[test]
    fn equalizer_posteriors_are_distributions(seed in 0u64..1000, y in cvec(32), nv in 0.01f64..5.0, strength in 0.0f64..30.0) {
        let (_, h) = small_h(seed);
        let a = make_qpsk_gray();
        let mut rng_vals = seed;
        let prior: Vec<f64> = (0..32 * 4).map(|_| {
            rng_vals = rng_vals.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            strength * ((rng_vals >> 33) as f64 / (1u64 << 31) as f64 - 0.5)
        }).collect();
        let prior = LLRBlock::from_log_probs(&prior, 4);
        let params = MPParams { n_iter: 5, ..MPParams::default() };
        let out = mp_equalize_with_priors(&y, &h, &prior, nv, &params, &a).unwrap();
        for p in out.output.posterior.to_probabilities().chunks(4) {
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
        prop_assert!(out.output.decisions.iter().all(|&d| d < 4));
        prop_assert!(out.extrinsic.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn ranks_are_a_permutation_of_positions(v in prop::collection::vec(-5.0f64..5.0, 1..40)) {
        let mut r = ranks(&v);
        let total: f64 = r.iter().sum();
        let n = v.len() as f64;
        prop_assert!((total - n * (n + 1.0) / 2.0).abs() < 1e-9);
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assert!(r[0] >= 1.0 && r[r.len() - 1] <= n);
    }
}
