use num_complex::Complex64;

use super::complexity::ComplexityReport;
use super::mp::pass;
use super::trim::TrimmedGraph;
use super::{LLRBlock, MPParams};
use crate::alphabet::ModAlphabet;
use crate::ddmatrix::SparseDDMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TmpOutput {
    pub decisions: Vec<usize>,
    pub posterior: LLRBlock,
    /// Decisions after each turbo iteration.
    pub trace: Vec<Vec<usize>>,
    /// Extrinsic LLRs leaving each pass, in order.
    pub extrinsic_trace: Vec<LLRBlock>,
    pub complexity: ComplexityReport,
}

/// Turbo equalization: branch 0, branch 1, ... in turn, each pass using the
/// previous pass's extrinsic LLRs as its prior.
pub fn tmp_run(
    ys: &[&[Complex64]],
    hs: &[&SparseDDMatrix],
    noise_var: f64,
    params: &MPParams,
    alphabet: &ModAlphabet,
) -> Result<TmpOutput> {
    run(ys, hs, None, noise_var, params, alphabet)
}

/// [`tmp_run`] with every branch graph trimmed to its `r` strongest entries
/// per observation.
pub fn tmp_run_trimmed(
    ys: &[&[Complex64]],
    hs: &[&SparseDDMatrix],
    r: usize,
    noise_var: f64,
    params: &MPParams,
    alphabet: &ModAlphabet,
) -> Result<TmpOutput> {
    run(ys, hs, Some(r), noise_var, params, alphabet)
}

fn run(
    ys: &[&[Complex64]],
    hs: &[&SparseDDMatrix],
    trim: Option<usize>,
    noise_var: f64,
    params: &MPParams,
    alphabet: &ModAlphabet,
) -> Result<TmpOutput> {
    params.validate()?;
    if ys.len() != hs.len() || hs.is_empty() {
        return Err(Error::Dimension("one observation vector per branch graph".into()));
    }
    let symbols = hs[0].cols;
    if hs.iter().any(|h| h.cols != symbols) {
        return Err(Error::Dimension("branch graphs differ in size".into()));
    }
    let q = alphabet.order();
    let trimmed: Option<Vec<TrimmedGraph>> = trim
        .map(|r| hs.iter().map(|h| TrimmedGraph::new(h, r)).collect())
        .transpose()?;

    let mut prior = LLRBlock::zeros(symbols, q);
    let mut complexity = ComplexityReport::default();
    let mut trace = Vec::with_capacity(params.turbo_iters);
    let mut extrinsic_trace = Vec::new();
    let mut last = None;
    for _ in 0..params.turbo_iters {
        for (g, y) in ys.iter().enumerate() {
            let out = match &trimmed {
                None => pass(y, hs[g], &prior, None, noise_var, params, alphabet)?,
                Some(t) => {
                    let tg = &t[g];
                    let (m, v) = tg.residual(&prior.to_probabilities(), alphabet)?;
                    let res = tg.has_residual().then_some((&m[..], &v[..]));
                    pass(y, &tg.matrix, &prior, res, noise_var, params, alphabet)?
                }
            };
            complexity = complexity.merge(out.output.complexity);
            extrinsic_trace.push(out.extrinsic.clone());
            prior = out.extrinsic;
            last = Some(out.output);
        }
        trace.push(last.as_ref().map(|o| o.decisions.clone()).unwrap_or_default());
    }
    let last = last.expect("at least one pass");
    Ok(TmpOutput {
        decisions: last.decisions,
        posterior: last.posterior,
        trace,
        extrinsic_trace,
        complexity,
    })
}
