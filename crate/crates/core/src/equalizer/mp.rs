use num_complex::Complex64;

use super::complexity::ComplexityReport;
use super::{argmax, check_priors, softmax_in_place, LLRBlock, MPParams, PROB_FLOOR, VAR_FLOOR};
use crate::alphabet::ModAlphabet;
use crate::ddmatrix::SparseDDMatrix;
use crate::error::{Error, Result};

/// Every message of the graph after the latest iteration.
#[derive(Debug, Clone)]
pub struct MessageState {
    /// Variable-to-observation probabilities, `edges × Q`, stored in
    /// column-ordered slots (see [`MpEngine::message`]).
    pub p_cd: Vec<f64>,
    /// Observation-to-variable interference means, per edge.
    pub mu_dc: Vec<Complex64>,
    /// Observation-to-variable interference variances, per edge.
    pub var_dc: Vec<f64>,
    /// Posterior log-weights `ln ω_c + Σ_d Λ`, `symbols × Q`.
    pub log_post: Vec<f64>,
    /// Posterior probabilities, `symbols × Q`.
    pub p_c: Vec<f64>,
    /// Posterior snapshot of the best iteration so far.
    pub p_bar: Vec<f64>,
    pub log_post_bar: Vec<f64>,
    /// Convergence indicator of the latest iteration.
    pub eta: f64,
    pub best_eta: f64,
    pub iteration: usize,
}

/// One message-passing run over a fixed graph.
pub struct MpEngine<'a> {
    y: &'a [Complex64],
    h: &'a SparseDDMatrix,
    noise_var: f64,
    alphabet: &'a ModAlphabet,
    params: MPParams,
    log_prior: Vec<f64>,
    residual: Option<(&'a [Complex64], &'a [f64])>,
    /// Log-likelihoods per column-ordered slot, `edges × Q`.
    lam: Vec<f64>,
    /// Slot of each edge.
    slot: Vec<usize>,
    pub state: MessageState,
    pub complexity: ComplexityReport,
}

impl<'a> MpEngine<'a> {
    /// `log_prior` holds `ln ω_c(a_j)` up to a per-symbol constant.
    pub fn new(
        y: &'a [Complex64],
        h: &'a SparseDDMatrix,
        noise_var: f64,
        log_prior: Vec<f64>,
        params: MPParams,
        alphabet: &'a ModAlphabet,
    ) -> Result<Self> {
        params.validate()?;
        let q = alphabet.order();
        if y.len() != h.rows {
            return Err(Error::Dimension(format!("{} observations for {} rows", y.len(), h.rows)));
        }
        if log_prior.len() != h.cols * q {
            return Err(Error::Dimension("prior table does not match the graph".into()));
        }
        if !(noise_var >= 0.0) {
            return Err(Error::Precondition("noise variance must be non-negative".into()));
        }
        if let Some(d) = h.row_degrees().iter().position(|&d| d == 0) {
            return Err(Error::Precondition(format!("observation {d} has no neighbours")));
        }
        let edges = h.nnz();
        let mut prior_probs = log_prior.clone();
        for row in prior_probs.chunks_exact_mut(q) {
            softmax_in_place(row);
        }
        let mut p_cd = Vec::with_capacity(edges * q);
        let mut slot = vec![0; edges];
        for (s, &e) in h.col_edge_ids().iter().enumerate() {
            let c = h.edge_col(e);
            p_cd.extend_from_slice(&prior_probs[c * q..(c + 1) * q]);
            slot[e] = s;
        }
        let state = MessageState {
            p_cd,
            mu_dc: vec![Complex64::new(0.0, 0.0); edges],
            var_dc: vec![0.0; edges],
            log_post: log_prior.clone(),
            p_c: prior_probs.clone(),
            p_bar: prior_probs,
            log_post_bar: log_prior.clone(),
            eta: 0.0,
            best_eta: 0.0,
            iteration: 0,
        };
        Ok(MpEngine {
            y,
            h,
            noise_var,
            alphabet,
            params,
            log_prior,
            residual: None,
            lam: vec![0.0; edges * q],
            slot,
            state,
            complexity: ComplexityReport {
                multiplications: 0,
                iterations: 0,
                edges,
            },
        })
    }

    /// Adds per-observation interference from dropped edges.
    pub fn with_residual(mut self, mean: &'a [Complex64], var: &'a [f64]) -> Result<Self> {
        if mean.len() != self.h.rows || var.len() != self.h.rows {
            return Err(Error::Dimension("residual moments do not match the graph".into()));
        }
        self.residual = Some((mean, var));
        Ok(self)
    }

    /// Current message from the variable of edge `e` to its observation.
    pub fn message(&self, e: usize) -> &[f64] {
        let q = self.alphabet.order();
        let s = self.slot[e];
        &self.state.p_cd[s * q..(s + 1) * q]
    }

    /// One iteration. Returns `true` once every symbol has converged.
    pub fn step(&mut self) -> bool {
        let q = self.alphabet.order();
        let symbols = self.alphabet.symbols();
        let energies: Vec<f64> = symbols.iter().map(|a| a.norm_sqr()).collect();
        let h = self.h;
        let st = &mut self.state;
        let edges = h.nnz() as u64;
        let qq = q as u64;

        // observation -> variable: Gaussian interference moments, then the
        // log-likelihood of each candidate symbol
        for d in 0..h.rows {
            let range = h.row_edges(d);
            let mut tot_m = Complex64::new(0.0, 0.0);
            let mut tot_v = 0.0;
            for e in range.clone() {
                let s = self.slot[e];
                let p = &st.p_cd[s * q..(s + 1) * q];
                let mut m = Complex64::new(0.0, 0.0);
                let mut s2 = 0.0;
                for j in 0..q {
                    m += symbols[j] * p[j];
                    s2 += p[j] * energies[j];
                }
                let hv = h.edge_value(e);
                let m = hv * m;
                let v = s2 * hv.norm_sqr() - m.norm_sqr();
                st.mu_dc[e] = m;
                st.var_dc[e] = v;
                tot_m += m;
                tot_v += v;
            }
            let (res_m, res_v) = match self.residual {
                Some((rm, rv)) => (rm[d], rv[d]),
                None => (Complex64::new(0.0, 0.0), 0.0),
            };
            for e in range {
                let mu = tot_m - st.mu_dc[e] + res_m;
                let var = (tot_v - st.var_dc[e] + self.noise_var + res_v).max(VAR_FLOOR);
                st.mu_dc[e] = mu;
                st.var_dc[e] = var;
                let r = self.y[d] - mu;
                let inv = 1.0 / var;
                let hv = h.edge_value(e);
                let lam = &mut self.lam[self.slot[e] * q..(self.slot[e] + 1) * q];
                for j in 0..q {
                    lam[j] = -(r - hv * symbols[j]).norm_sqr() * inv;
                }
            }
        }
        self.complexity.multiplications += edges * (2 * qq) + edges * (4 * qq + 1);

        // variable -> observation with exclusion, damping, posterior
        let mut buf = vec![0.0; q];
        let delta = self.params.damping;
        let mut converged = 0usize;
        for c in 0..h.cols {
            let post = &mut st.log_post[c * q..(c + 1) * q];
            post.copy_from_slice(&self.log_prior[c * q..(c + 1) * q]);
            let slots = h.col_range(c);
            let lam = &self.lam[slots.start * q..slots.end * q];
            for l in lam.chunks_exact(q) {
                for j in 0..q {
                    post[j] += l[j];
                }
            }
            let msgs = &mut st.p_cd[slots.start * q..slots.end * q];
            for (l, p) in lam.chunks_exact(q).zip(msgs.chunks_exact_mut(q)) {
                for j in 0..q {
                    buf[j] = post[j] - l[j];
                }
                softmax_in_place(&mut buf);
                for j in 0..q {
                    p[j] = delta * buf[j] + (1.0 - delta) * p[j];
                }
            }
            let pc = &mut st.p_c[c * q..(c + 1) * q];
            pc.copy_from_slice(post);
            softmax_in_place(pc);
            if pc.iter().copied().fold(0.0, f64::max) >= 1.0 - self.params.convergence_threshold {
                converged += 1;
            }
        }
        self.complexity.multiplications += edges * (5 * qq);
        self.complexity.iterations += 1;

        st.iteration += 1;
        st.eta = converged as f64 / h.cols as f64;
        if st.iteration == 1 || st.eta > st.best_eta {
            st.best_eta = st.eta;
            st.p_bar.copy_from_slice(&st.p_c);
            st.log_post_bar.copy_from_slice(&st.log_post);
        }
        converged == h.cols
    }

    /// Iterates until convergence or the iteration budget runs out.
    pub fn run(mut self) -> MpOutput {
        for _ in 0..self.params.n_iter {
            if self.step() {
                break;
            }
        }
        self.finish()
    }

    pub fn finish(self) -> MpOutput {
        let q = self.alphabet.order();
        let st = self.state;
        MpOutput {
            decisions: st.p_bar.chunks_exact(q).map(argmax).collect(),
            posterior: LLRBlock::from_log_probs(&st.log_post_bar, q),
            p_bar: st.p_bar,
            eta: st.best_eta,
            iterations: st.iteration,
            complexity: self.complexity,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MpOutput {
    /// Symbol indices, lowest index on ties.
    pub decisions: Vec<usize>,
    /// Snapshot posteriors, `symbols × Q`.
    pub p_bar: Vec<f64>,
    pub posterior: LLRBlock,
    pub eta: f64,
    pub iterations: usize,
    pub complexity: ComplexityReport,
}

/// Output of one pass inside the turbo loop.
#[derive(Debug, Clone)]
pub struct PassOutput {
    pub output: MpOutput,
    /// `posterior - prior`.
    pub extrinsic: LLRBlock,
}

fn log_priors(priors: Option<&[f64]>, symbols: usize, q: usize) -> Result<Vec<f64>> {
    match priors {
        None => Ok(vec![0.0; symbols * q]),
        Some(p) => {
            check_priors(p, symbols, q)?;
            Ok(p.iter().map(|v| v.max(PROB_FLOOR).ln()).collect())
        }
    }
}

/// Single-graph equalization of the stacked observations. `priors` is a
/// `symbols × Q` probability table; `None` means uniform.
pub fn icmp_run(
    y: &[Complex64],
    h: &SparseDDMatrix,
    priors: Option<&[f64]>,
    noise_var: f64,
    params: &MPParams,
    alphabet: &ModAlphabet,
) -> Result<MpOutput> {
    let lp = log_priors(priors, h.cols, alphabet.order())?;
    Ok(MpEngine::new(y, h, noise_var, lp, *params, alphabet)?.run())
}

/// As [`icmp_run`] with per-observation residual interference moments.
pub fn icmp_run_with_residual(
    y: &[Complex64],
    h: &SparseDDMatrix,
    priors: Option<&[f64]>,
    residual: (&[Complex64], &[f64]),
    noise_var: f64,
    params: &MPParams,
    alphabet: &ModAlphabet,
) -> Result<MpOutput> {
    let lp = log_priors(priors, h.cols, alphabet.order())?;
    Ok(MpEngine::new(y, h, noise_var, lp, *params, alphabet)?
        .with_residual(residual.0, residual.1)?
        .run())
}

/// One branch equalized under prior LLRs; returns posterior and extrinsic LLRs.
pub fn mp_equalize_with_priors(
    y: &[Complex64],
    h: &SparseDDMatrix,
    prior: &LLRBlock,
    noise_var: f64,
    params: &MPParams,
    alphabet: &ModAlphabet,
) -> Result<PassOutput> {
    pass(y, h, prior, None, noise_var, params, alphabet)
}

pub(crate) fn pass(
    y: &[Complex64],
    h: &SparseDDMatrix,
    prior: &LLRBlock,
    residual: Option<(&[Complex64], &[f64])>,
    noise_var: f64,
    params: &MPParams,
    alphabet: &ModAlphabet,
) -> Result<PassOutput> {
    if prior.q != alphabet.order() || prior.symbols() != h.cols {
        return Err(Error::Dimension("prior LLRs do not match the graph".into()));
    }
    let mut engine = MpEngine::new(y, h, noise_var, prior.to_log_probs(), *params, alphabet)?;
    if let Some((m, v)) = residual {
        engine = engine.with_residual(m, v)?;
    }
    let output = engine.run();
    let extrinsic = output.posterior.minus(prior)?;
    Ok(PassOutput { output, extrinsic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::make_qpsk_gray;

    fn identity_stack(n: usize) -> SparseDDMatrix {
        let one = Complex64::new(1.0, 0.0);
        let rows = (0..2 * n).map(|d| vec![(d % n, one)]).collect();
        SparseDDMatrix::from_rows(n, rows).unwrap()
    }

    #[test]
    fn noiseless_identity_recovers_symbols() {
        let a = make_qpsk_gray();
        let x = [0usize, 3, 1, 2, 2, 0];
        let h = identity_stack(x.len());
        let y: Vec<Complex64> = (0..2 * x.len()).map(|d| a.symbol(x[d % x.len()])).collect();
        let out = icmp_run(&y, &h, None, 0.0, &MPParams::default(), &a).unwrap();
        assert_eq!(out.decisions, x);
        assert_eq!(out.iterations, 1);
        assert_eq!(out.eta, 1.0);
    }

    #[test]
    fn exclusion_matches_direct_sums() {
        let a = make_qpsk_gray();
        let vals = [
            Complex64::new(0.9, 0.1),
            Complex64::new(-0.3, 0.4),
            Complex64::new(0.2, -0.5),
        ];
        let rows = vec![vec![(0, vals[0]), (1, vals[1]), (2, vals[2])], vec![(0, vals[1]), (2, vals[0])]];
        let h = SparseDDMatrix::from_rows(3, rows).unwrap();
        let y = [Complex64::new(0.3, -0.2), Complex64::new(-0.1, 0.7)];
        let priors = [0.1, 0.2, 0.3, 0.4, 0.7, 0.1, 0.1, 0.1, 0.25, 0.25, 0.25, 0.25];
        let lp = priors.iter().map(|p: &f64| p.ln()).collect();
        let mut eng = MpEngine::new(&y, &h, 0.05, lp, MPParams::default(), &a).unwrap();
        let p0: Vec<Vec<f64>> = (0..h.nnz()).map(|e| eng.message(e).to_vec()).collect();
        eng.step();
        for d in 0..h.rows {
            for e in h.row_edges(d) {
                let mut m = Complex64::new(0.0, 0.0);
                let mut v = 0.05;
                for e2 in h.row_edges(d).filter(|&e2| e2 != e) {
                    let hv = h.edge_value(e2);
                    let p = &p0[e2];
                    let mean: Complex64 = (0..4).map(|j| hv * a.symbol(j) * p[j]).sum();
                    let second: f64 = (0..4).map(|j| (hv * a.symbol(j)).norm_sqr() * p[j]).sum();
                    m += mean;
                    v += second - mean.norm_sqr();
                }
                assert!((eng.state.mu_dc[e] - m).norm() < 1e-12);
                assert!((eng.state.var_dc[e] - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn damping_is_a_convex_combination() {
        let a = make_qpsk_gray();
        let h = identity_stack(2);
        let y = vec![a.symbol(0), a.symbol(1), a.symbol(0) * 0.5, a.symbol(2)];
        for delta in [0.3, 1.0] {
            let params = MPParams { damping: delta, ..MPParams::default() };
            let mut eng = MpEngine::new(&y, &h, 0.5, vec![0.0; 8], params, &a).unwrap();
            let old: Vec<Vec<f64>> = (0..h.nnz()).map(|e| eng.message(e).to_vec()).collect();
            eng.step();
            for e in 0..h.nnz() {
                let c = h.edge_col(e);
                // sole other edge on the same column supplies the message
                let other = h.col_edges(c).iter().copied().find(|&o| o != e).unwrap();
                let d = other; // one edge per row
                let r = y[d] - eng.state.mu_dc[other];
                let var = eng.state.var_dc[other];
                let mut lik: Vec<f64> = (0..4).map(|j| -(r - a.symbol(j)).norm_sqr() / var).collect();
                softmax_in_place(&mut lik);
                for j in 0..4 {
                    let expect = delta * lik[j] + (1.0 - delta) * old[e][j];
                    assert!((eng.message(e)[j] - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn probabilities_stay_normalized() {
        let a = make_qpsk_gray();
        let h = identity_stack(3);
        let y: Vec<Complex64> = (0..6).map(|i| Complex64::new(i as f64 * 0.3 - 0.7, 0.2)).collect();
        let mut eng = MpEngine::new(&y, &h, 0.2, vec![0.0; 12], MPParams::default(), &a).unwrap();
        for _ in 0..5 {
            eng.step();
            for row in eng.state.p_cd.chunks_exact(4).chain(eng.state.p_c.chunks_exact(4)) {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert!(row.iter().all(|p| *p >= 0.0));
            }
            assert!(eng.state.var_dc.iter().all(|v| *v > 0.0));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let a = make_qpsk_gray();
        let h = identity_stack(2);
        let y = vec![Complex64::new(0.0, 0.0); 3];
        assert!(matches!(icmp_run(&y, &h, None, 0.1, &MPParams::default(), &a), Err(Error::Dimension(_))));
        let y = vec![Complex64::new(0.0, 0.0); 4];
        let bad = [0.5, 0.5, 0.5, 0.0, 0.25, 0.25, 0.25, 0.25];
        assert!(matches!(icmp_run(&y, &h, Some(&bad), 0.1, &MPParams::default(), &a), Err(Error::Precondition(_))));
        let empty = SparseDDMatrix::from_rows(2, vec![vec![], vec![(0, Complex64::new(1.0, 0.0))]]).unwrap();
        assert!(icmp_run(&y[..2], &empty, None, 0.1, &MPParams::default(), &a).is_err());
    }
}
