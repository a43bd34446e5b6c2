use num_complex::Complex64;

use super::mp::{icmp_run, icmp_run_with_residual, MpOutput};
use super::tmp::{tmp_run_trimmed, TmpOutput};
use super::{check_priors, MPParams};
use crate::alphabet::ModAlphabet;
use crate::ddmatrix::SparseDDMatrix;
use crate::error::{Error, Result};

/// A graph keeping the `r` largest-magnitude entries of every observation;
/// the dropped entries are folded into Gaussian residual interference.
#[derive(Debug, Clone)]
pub struct TrimmedGraph {
    pub matrix: SparseDDMatrix,
    pub r: usize,
    dropped: Vec<Vec<(usize, Complex64)>>,
}

impl TrimmedGraph {
    pub fn new(h: &SparseDDMatrix, r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::config("trim.r", "must keep at least one entry per row"));
        }
        let mut kept_rows = Vec::with_capacity(h.rows);
        let mut dropped = Vec::with_capacity(h.rows);
        for d in 0..h.rows {
            let (cols, vals) = h.row(d);
            let mut order: Vec<usize> = (0..cols.len()).collect();
            // strongest first, lower column on ties
            order.sort_by(|&a, &b| vals[b].norm_sqr().total_cmp(&vals[a].norm_sqr()).then(cols[a].cmp(&cols[b])));
            let mut keep = vec![false; cols.len()];
            for &i in order.iter().take(r) {
                keep[i] = true;
            }
            let mut kr = Vec::new();
            let mut dr = Vec::new();
            for i in 0..cols.len() {
                if keep[i] {
                    kr.push((cols[i], vals[i]));
                } else {
                    dr.push((cols[i], vals[i]));
                }
            }
            kept_rows.push(kr);
            dropped.push(dr);
        }
        Ok(TrimmedGraph {
            matrix: SparseDDMatrix::from_rows(h.cols, kept_rows)?,
            r,
            dropped,
        })
    }

    pub fn has_residual(&self) -> bool {
        self.dropped.iter().any(|d| !d.is_empty())
    }

    /// Mean and variance of the dropped interference under the prior tables.
    pub fn residual(&self, priors: &[f64], alphabet: &ModAlphabet) -> Result<(Vec<Complex64>, Vec<f64>)> {
        let q = alphabet.order();
        check_priors(priors, self.matrix.cols, q)?;
        let moments: Vec<(Complex64, f64)> = priors
            .chunks_exact(q)
            .map(|p| {
                let m: Complex64 = alphabet.symbols().iter().zip(p).map(|(a, w)| a * w).sum();
                let s2: f64 = alphabet.symbols().iter().zip(p).map(|(a, w)| a.norm_sqr() * w).sum();
                (m, s2 - m.norm_sqr())
            })
            .collect();
        Ok(self
            .dropped
            .iter()
            .map(|row| {
                row.iter().fold((Complex64::new(0.0, 0.0), 0.0), |(m, v), &(c, h)| {
                    (m + h * moments[c].0, v + h.norm_sqr() * moments[c].1)
                })
            })
            .unzip())
    }
}

/// Trims `h` to `r` entries per row and evaluates the residual under `priors`
/// (`None` means uniform).
pub fn trim_graph(
    h: &SparseDDMatrix,
    r: usize,
    priors: Option<&[f64]>,
    alphabet: &ModAlphabet,
) -> Result<(TrimmedGraph, Vec<Complex64>, Vec<f64>)> {
    let t = TrimmedGraph::new(h, r)?;
    let q = alphabet.order();
    let uniform;
    let p = match priors {
        Some(p) => p,
        None => {
            uniform = vec![1.0 / q as f64; h.cols * q];
            &uniform
        }
    };
    let (m, v) = t.residual(p, alphabet)?;
    Ok((t, m, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplifiedKind {
    Icmp,
    Tmp,
}

#[derive(Debug, Clone)]
pub enum SimplifiedOutput {
    Icmp(MpOutput),
    Tmp(TmpOutput),
}

impl SimplifiedOutput {
    pub fn decisions(&self) -> &[usize] {
        match self {
            SimplifiedOutput::Icmp(o) => &o.decisions,
            SimplifiedOutput::Tmp(o) => &o.decisions,
        }
    }

    pub fn complexity(&self) -> super::ComplexityReport {
        match self {
            SimplifiedOutput::Icmp(o) => o.complexity,
            SimplifiedOutput::Tmp(o) => o.complexity,
        }
    }
}

/// Simplified ICMP (trimmed stacked graph) or simplified TMP (trimmed branch
/// graphs). With `r` at or above the row support the result is identical to
/// the untrimmed receiver.
pub fn simplified_run(
    kind: SimplifiedKind,
    ys: &[&[Complex64]],
    hs: &[&SparseDDMatrix],
    r: usize,
    noise_var: f64,
    params: &MPParams,
    alphabet: &ModAlphabet,
) -> Result<SimplifiedOutput> {
    match kind {
        SimplifiedKind::Tmp => Ok(SimplifiedOutput::Tmp(tmp_run_trimmed(ys, hs, r, noise_var, params, alphabet)?)),
        SimplifiedKind::Icmp => {
            let stacked = SparseDDMatrix::stack(hs)?;
            let y: Vec<Complex64> = ys.iter().flat_map(|y| y.iter().copied()).collect();
            let (t, m, v) = trim_graph(&stacked, r, None, alphabet)?;
            let out = if t.has_residual() {
                icmp_run_with_residual(&y, &t.matrix, None, (&m, &v), noise_var, params, alphabet)?
            } else {
                icmp_run(&y, &t.matrix, None, noise_var, params, alphabet)?
            };
            Ok(SimplifiedOutput::Icmp(out))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::make_qpsk_gray;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn keeps_strongest_with_low_column_ties() {
        let h = SparseDDMatrix::from_rows(4, vec![vec![(0, c(0.1)), (1, c(-0.5)), (2, c(0.5)), (3, c(0.2))]]).unwrap();
        let t = TrimmedGraph::new(&h, 2).unwrap();
        assert_eq!(t.matrix.row(0).0, &[1, 2]);
        let t = TrimmedGraph::new(&h, 3).unwrap();
        assert_eq!(t.matrix.row(0).0, &[1, 2, 3]);
        assert!(TrimmedGraph::new(&h, 0).is_err());
    }

    #[test]
    fn residual_moments() {
        let a = make_qpsk_gray();
        let h = SparseDDMatrix::from_rows(2, vec![vec![(0, c(1.0)), (1, c(0.5))]]).unwrap();
        let (_, m, v) = trim_graph(&h, 1, None, &a).unwrap();
        assert!(m[0].norm() < 1e-15);
        assert!((v[0] - 0.25).abs() < 1e-12);
        let known = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        let (_, m, v) = trim_graph(&h, 1, Some(&known), &a).unwrap();
        assert!((m[0] - a.symbol(0) * 0.5).norm() < 1e-15);
        assert!(v[0].abs() < 1e-15);
    }

    #[test]
    fn full_support_is_untouched() {
        let h = SparseDDMatrix::from_rows(3, vec![vec![(0, c(1.0)), (2, c(0.3))], vec![(1, c(2.0))]]).unwrap();
        let t = TrimmedGraph::new(&h, 2).unwrap();
        assert_eq!(t.matrix, h);
        assert!(!t.has_residual());
    }
}
