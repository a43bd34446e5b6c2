//! Extrinsic-information transfer analysis.

use std::io::Write;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::link::LinkSetup;
use crate::alphabet::ModAlphabet;
use crate::equalizer::{mp_equalize_with_priors, tmp_run, LLRBlock};
use crate::error::{Error, Result};
use crate::rng::{Purpose, RngSpec};

/// Below this many samples per bit the histogram estimate is flagged.
pub const MIN_EXIT_SAMPLES: usize = 10_000;
const BINS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitPoint {
    /// Standard deviation of the a-priori rail LLRs.
    pub sigma: f64,
    pub i_i: f64,
    pub i_e: f64,
    pub snr_db: f64,
    /// Set when the extrinsic estimate rests on too few samples.
    pub low_samples: bool,
}

/// A-priori symbol LLRs for the true symbols `x`: each Gray bit gets a rail
/// LLR `L ~ N(√2σ²·s, σ²)` with `s = ±1/√2` (bit 0 ↔ +), and the symbol
/// log-weight is `Σ_b s_b L_b` with `s_b = ±1`.
pub fn sample_apriori_llrs(x: &[usize], sigma: f64, alphabet: &ModAlphabet, rng: RngSpec) -> LLRBlock {
    let q = alphabet.order();
    let bits = alphabet.bits_per_symbol();
    let mut rng = rng.rng();
    let mut lp = Vec::with_capacity(x.len() * q);
    let mut rail = vec![0.0; bits];
    for &xi in x {
        for (b, l) in rail.iter_mut().enumerate() {
            let s = if alphabet.bit(xi, b) == 0 { 1.0 } else { -1.0 };
            let n: f64 = StandardNormal.sample(&mut rng);
            *l = sigma * sigma * s + sigma * n;
        }
        for j in 0..q {
            lp.push(
                (0..bits)
                    .map(|b| if alphabet.bit(j, b) == 0 { rail[b] } else { -rail[b] })
                    .sum(),
            );
        }
    }
    LLRBlock::from_log_probs(&lp, q)
}

/// Rail LLRs `L = λ/2` per (symbol, bit), where `λ = ln P(b=0)/P(b=1)`.
pub fn rail_llrs(llrs: &LLRBlock, alphabet: &ModAlphabet) -> Vec<f64> {
    let q = alphabet.order();
    let bits = alphabet.bits_per_symbol();
    let lp = llrs.to_log_probs();
    let mut out = Vec::with_capacity(llrs.symbols() * bits);
    for row in lp.chunks_exact(q) {
        for b in 0..bits {
            let (mut zero, mut one) = (Vec::new(), Vec::new());
            for (j, &v) in row.iter().enumerate() {
                if alphabet.bit(j, b) == 0 { zero.push(v) } else { one.push(v) }
            }
            out.push(0.5 * (log_sum_exp(&zero) - log_sum_exp(&one)));
        }
    }
    out
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let mx = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    mx + v.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

/// `log2(1 + e^{-2l})` without overflow.
fn soft_info_loss(l: f64) -> f64 {
    let t = -2.0 * l;
    (t.max(0.0) + (-t.abs()).exp().ln_1p()) / std::f64::consts::LN_2
}

/// `I_i(σ) = 2 - 2 E[log2(1 + e^{-2L})]`, `L ~ N(σ², σ²)`, by dense
/// trapezoidal quadrature over ±10σ.
pub fn mutual_info_apriori(sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    let steps = 4000;
    let (mu, lo) = (sigma * sigma, sigma * sigma - 10.0 * sigma);
    let h = 20.0 * sigma / steps as f64;
    let mut acc = 0.0;
    for i in 0..=steps {
        let l = lo + i as f64 * h;
        let z = (l - mu) / sigma;
        let w = (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let f = w * soft_info_loss(l);
        acc += if i == 0 || i == steps { 0.5 * f } else { f };
    }
    (2.0 - 2.0 * acc * h).clamp(0.0, 2.0)
}

/// Histogram estimate of the mutual information between the Gray bits of `x`
/// and the rail LLRs carried by `llrs`, summed over bits. The flag is set if
/// fewer than [`MIN_EXIT_SAMPLES`] symbols were supplied.
pub fn mutual_info_extrinsic(llrs: &LLRBlock, x: &[usize], alphabet: &ModAlphabet) -> Result<(f64, bool)> {
    if llrs.symbols() != x.len() {
        return Err(Error::Dimension("one LLR row per symbol".into()));
    }
    let bits = alphabet.bits_per_symbol();
    let rails = rail_llrs(llrs, alphabet);
    let mut total = 0.0;
    for b in 0..bits {
        let mut classes = [Vec::new(), Vec::new()];
        for (i, &xi) in x.iter().enumerate() {
            classes[alphabet.bit(xi, b) as usize].push(rails[i * bits + b]);
        }
        total += binary_mi(&classes[0], &classes[1]);
    }
    Ok((total.clamp(0.0, bits as f64), x.len() < MIN_EXIT_SAMPLES))
}

/// `½ Σ_x ∫ f(l|x) log2(2 f(l|x) / (f(l|+) + f(l|-))) dl` from histograms on a
/// common grid spanning ±6 standard deviations of each class.
fn binary_mi(pos: &[f64], neg: &[f64]) -> f64 {
    if pos.is_empty() || neg.is_empty() {
        return 0.0;
    }
    let stats = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let s = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
        (m - 6.0 * s, m + 6.0 * s)
    };
    let (a, b) = (stats(pos), stats(neg));
    let (mut lo, mut hi) = (a.0.min(b.0), a.1.max(b.1));
    if hi - lo < 1e-12 {
        lo -= 1.0;
        hi += 1.0;
    }
    let w = (hi - lo) / BINS as f64;
    let hist = |v: &[f64]| {
        let mut h = vec![0.0; BINS];
        for &x in v {
            let i = (((x - lo) / w).floor().max(0.0) as usize).min(BINS - 1);
            h[i] += 1.0 / v.len() as f64;
        }
        h
    };
    let (hp, hn) = (hist(pos), hist(neg));
    let mut mi = 0.0;
    for i in 0..BINS {
        let s = hp[i] + hn[i];
        for f in [hp[i], hn[i]] {
            if f > 0.0 {
                mi += 0.5 * f * (2.0 * f / s).log2();
            }
        }
    }
    mi
}

/// Transfer curve of one branch equalizer at `snr_db`: for every σ, sampled
/// priors go through one equalizer pass and the extrinsic output is measured.
pub fn exit_chart(link: &LinkSetup, branch: usize, snr_db: f64, sigmas: &[f64], frames: u64) -> Result<Vec<ExitPoint>> {
    if branch >= link.grid.g {
        return Err(Error::Precondition(format!("branch {branch} of G = {}", link.grid.g)));
    }
    let (sn, sn_f) = link.noise_var(snr_db);
    let mut ext: Vec<Vec<f64>> = vec![Vec::new(); sigmas.len()];
    let mut truth = Vec::new();
    for f in 0..frames {
        let frame = link.frame(f)?;
        let h = link.matrices(&frame.csi)?.swap_remove(branch);
        let y = frame.observe(sn).swap_remove(branch);
        for (si, &sigma) in sigmas.iter().enumerate() {
            let rng = RngSpec::for_frame(link.seed, f, Purpose::Priors).substream(si as u64);
            let prior = sample_apriori_llrs(&frame.data, sigma, &link.alphabet, rng);
            let out = mp_equalize_with_priors(&y, &h, &prior, sn_f, &link.params, &link.alphabet)?;
            ext[si].extend_from_slice(&out.extrinsic.values);
        }
        truth.extend_from_slice(&frame.data);
    }
    let q = link.alphabet.order();
    sigmas
        .iter()
        .zip(ext)
        .map(|(&sigma, values)| {
            let (i_e, low) = mutual_info_extrinsic(&LLRBlock { q, values }, &truth, &link.alphabet)?;
            Ok(ExitPoint { sigma, i_i: mutual_info_apriori(sigma), i_e, snr_db, low_samples: low })
        })
        .collect()
}

/// Mutual information of the LLRs exchanged by an actual turbo run, one value
/// per pass (staircase corners are consecutive pairs, starting from zero).
pub fn exit_trajectory(link: &LinkSetup, snr_db: f64, frames: u64) -> Result<Vec<f64>> {
    let (sn, sn_f) = link.noise_var(snr_db);
    let mut per_pass: Vec<Vec<f64>> = Vec::new();
    let mut truth = Vec::new();
    for f in 0..frames {
        let frame = link.frame(f)?;
        let hs = link.matrices(&frame.csi)?;
        let ys = frame.observe(sn);
        let y_refs: Vec<&[_]> = ys.iter().map(|y| &y[..]).collect();
        let out = tmp_run(&y_refs, &hs.iter().collect::<Vec<_>>(), sn_f, &link.params, &link.alphabet)?;
        per_pass.resize(out.extrinsic_trace.len(), Vec::new());
        for (acc, e) in per_pass.iter_mut().zip(&out.extrinsic_trace) {
            acc.extend_from_slice(&e.values);
        }
        truth.extend_from_slice(&frame.data);
    }
    let q = link.alphabet.order();
    per_pass
        .into_iter()
        .map(|values| Ok(mutual_info_extrinsic(&LLRBlock { q, values }, &truth, &link.alphabet)?.0))
        .collect()
}

pub const EXIT_CSV_HEADER: &str = "sigma,I_i,I_e,snr_db";

pub fn write_exit_csv<W: Write>(points: &[ExitPoint], mut w: W) -> Result<()> {
    writeln!(w, "{EXIT_CSV_HEADER}")?;
    for p in points {
        writeln!(w, "{},{:.6},{:.6},{}", p.sigma, p.i_i, p.i_e, p.snr_db)?;
    }
    Ok(())
}
