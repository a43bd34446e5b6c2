//! Gaussian-approximation message passing over the delay-Doppler factor graph.
//!
//! * [`icmp_run`]: one graph over the stacked branches.
//! * [`tmp_run`]: one graph per branch, exchanging extrinsic LLRs.
//! * [`simplified_run`]: either of the above on a trimmed graph.

mod complexity;
mod mp;
mod tmp;
mod trim;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use complexity::{predicted_complexity, ComplexityReport};
pub use mp::{icmp_run, icmp_run_with_residual, mp_equalize_with_priors, MessageState, MpEngine, MpOutput, PassOutput};
pub use tmp::{tmp_run, tmp_run_trimmed, TmpOutput};
pub use trim::{simplified_run, trim_graph, SimplifiedKind, SimplifiedOutput, TrimmedGraph};

/// Largest LLR magnitude fed to `exp`.
pub const LLR_CLAMP: f64 = 50.0;
/// Probabilities are floored here before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-12;
const VAR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MPParams {
    /// Weight of the new message in `Δ·new + (1-Δ)·old`.
    pub damping: f64,
    /// A symbol counts as converged once its top probability reaches `1 - rho`.
    pub convergence_threshold: f64,
    /// Message-passing iterations per run.
    pub n_iter: usize,
    /// Turbo iterations (TMP only).
    pub turbo_iters: usize,
}

impl Default for MPParams {
    fn default() -> Self {
        MPParams {
            damping: 0.7,
            convergence_threshold: 0.1,
            n_iter: 20,
            turbo_iters: 3,
        }
    }
}

impl MPParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::config("mp.damping", "must lie in (0, 1]"));
        }
        if !(self.convergence_threshold > 0.0 && self.convergence_threshold < 1.0) {
            return Err(Error::config("mp.convergence_threshold", "must lie in (0, 1)"));
        }
        if self.n_iter == 0 {
            return Err(Error::config("mp.n_iter", "must be at least 1"));
        }
        if self.turbo_iters == 0 {
            return Err(Error::config("mp.turbo_iters", "must be at least 1"));
        }
        Ok(())
    }
}

/// Per-symbol log-likelihood ratios `ln p(a_j)/p(a_Q)` for `j < Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct LLRBlock {
    pub q: usize,
    /// `symbols × (q - 1)`, row-major.
    pub values: Vec<f64>,
}

impl LLRBlock {
    pub fn zeros(symbols: usize, q: usize) -> Self {
        LLRBlock {
            q,
            values: vec![0.0; symbols * (q - 1)],
        }
    }

    pub fn symbols(&self) -> usize {
        self.values.len() / (self.q - 1)
    }

    pub fn get(&self, c: usize) -> &[f64] {
        &self.values[c * (self.q - 1)..(c + 1) * (self.q - 1)]
    }

    /// From unnormalized log-probabilities (`symbols × q`).
    pub fn from_log_probs(log_probs: &[f64], q: usize) -> Self {
        let mut values = Vec::with_capacity(log_probs.len() / q * (q - 1));
        for lp in log_probs.chunks_exact(q) {
            values.extend(lp[..q - 1].iter().map(|v| v - lp[q - 1]));
        }
        LLRBlock { q, values }
    }

    /// From probability tables (`symbols × q`).
    pub fn from_probabilities(probs: &[f64], q: usize) -> Self {
        let lp: Vec<f64> = probs.iter().map(|p| p.max(PROB_FLOOR).ln()).collect();
        Self::from_log_probs(&lp, q)
    }

    /// Log-probabilities up to a per-symbol constant (`symbols × q`).
    pub fn to_log_probs(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.symbols() * self.q);
        for l in self.values.chunks_exact(self.q - 1) {
            out.extend_from_slice(l);
            out.push(0.0);
        }
        out
    }

    pub fn to_probabilities(&self) -> Vec<f64> {
        let mut out = self.to_log_probs();
        for row in out.chunks_exact_mut(self.q) {
            softmax_in_place(row);
        }
        out
    }

    /// `self - other`, entry by entry.
    pub fn minus(&self, other: &LLRBlock) -> Result<LLRBlock> {
        if self.q != other.q || self.values.len() != other.values.len() {
            return Err(Error::Dimension("LLR blocks differ in shape".into()));
        }
        Ok(LLRBlock {
            q: self.q,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    /// Hard decisions; ties go to the lowest symbol index.
    pub fn decisions(&self) -> Vec<usize> {
        self.to_log_probs().chunks_exact(self.q).map(argmax).collect()
    }
}

/// Turns log-weights into probabilities in place, flooring each ratio to the
/// maximum at `e^{-LLR_CLAMP}`.
#[inline]
pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let mx = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for x in v.iter_mut() {
        *x = (*x - mx).max(-LLR_CLAMP).exp();
        s += *x;
    }
    let inv = 1.0 / s;
    for x in v.iter_mut() {
        *x *= inv;
    }
}

/// Index of the largest entry, lowest index on ties.
#[inline]
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Checks a `symbols × q` table of prior probabilities.
pub(crate) fn check_priors(priors: &[f64], symbols: usize, q: usize) -> Result<()> {
    if priors.len() != symbols * q {
        return Err(Error::Dimension(format!(
            "prior table of {} for {symbols} symbols of order {q}",
            priors.len()
        )));
    }
    for (c, row) in priors.chunks_exact(q).enumerate() {
        let s: f64 = row.iter().sum();
        if row.iter().any(|p| !(*p >= 0.0)) || (s - 1.0).abs() > 1e-9 {
            return Err(Error::Precondition(format!("prior of symbol {c} is not a distribution")));
        }
    }
    Ok(())
}
