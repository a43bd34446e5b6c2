//! Sparse delay-Doppler input-output matrices `y_g = H_g x + z_g`.
//!
//! Vectors are indexed Doppler-major, `d = k·M + l`. Entry `(d, c)` collects
//! every (path, tap, Doppler offset) term landing on column `c`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::channel::{ChannelRealization, TapModel};
use crate::error::{Error, Result};
use crate::grid::{modulo, DDGridConfig};

/// Doppler leakage kernel
/// `θ(q, β) = (e^{-j2π(-q-β)} - 1) / (e^{-j2π(-q-β)/N} - 1)`.
///
/// With `β = 0` it is exactly `N` for `q ≡ 0 (mod N)` and exactly zero otherwise.
pub fn theta(q: i64, beta: f64, n: usize) -> Complex64 {
    if beta == 0.0 {
        return if q.rem_euclid(n as i64) == 0 {
            Complex64::new(n as f64, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    let x = -(q as f64) - beta;
    let num = Complex64::from_polar(1.0, -2.0 * PI * x) - 1.0;
    let den = Complex64::from_polar(1.0, -2.0 * PI * x / n as f64) - 1.0;
    num / den
}

/// `ξ = e^{jπ(M-1)p/M} · e^{j2π(l-p)(k_ν+β)/(NM)}`.
pub fn xi(l: usize, p: usize, k_nu: i64, beta: f64, grid: &DDGridConfig) -> Complex64 {
    let (n, m) = (grid.n as f64, grid.m as f64);
    let a = PI * (m - 1.0) * p as f64 / m;
    let b = 2.0 * PI * (l as f64 - p as f64) * (k_nu as f64 + beta) / (n * m);
    Complex64::from_polar(1.0, a) * Complex64::from_polar(1.0, b)
}

/// Wrap-around factor for `l < p`: `e^{-jπ(M-1)} · e^{-j2π[k-k_ν+q]_N/N}`.
pub fn phi(k: usize, q: i64, k_nu: i64, grid: &DDGridConfig) -> Complex64 {
    let kk = modulo(k as i64 - k_nu + q, grid.n);
    Complex64::from_polar(1.0, -PI * (grid.m as f64 - 1.0))
        * Complex64::from_polar(1.0, -2.0 * PI * kk as f64 / grid.n as f64)
}

/// Phase coupling of tap `p`, Doppler offset `q` at output `(k, l)`.
pub fn gamma(
    k: usize,
    l: usize,
    p: usize,
    q: i64,
    k_nu: i64,
    beta: f64,
    grid: &DDGridConfig,
) -> Complex64 {
    let base = xi(l, p, k_nu, beta, grid) * (theta(q, beta, grid.n) / grid.n as f64);
    if l >= p {
        base
    } else {
        base * phi(k, q, k_nu, grid)
    }
}

/// Doppler offsets kept in the interference sum: residues `[q]_N` for `|q| <= e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationSpec {
    pub e: usize,
}

impl TruncationSpec {
    pub fn new(e: usize, grid: &DDGridConfig) -> Result<Self> {
        let t = TruncationSpec { e };
        t.validate(grid)?;
        Ok(t)
    }

    pub fn validate(&self, grid: &DDGridConfig) -> Result<()> {
        if self.e > grid.n / 2 {
            return Err(Error::config(
                "truncation.e",
                format!("E = {} exceeds N/2 = {}", self.e, grid.n / 2),
            ));
        }
        Ok(())
    }

    /// Representative offsets, one per residue class, in order `-e..=e`.
    pub fn offsets(&self, n: usize) -> Vec<i64> {
        let mut seen = vec![false; n];
        let e = self.e as i64;
        (-e..=e)
            .filter(|&q| !std::mem::replace(&mut seen[modulo(q, n)], true))
            .collect()
    }
}

/// Compressed-row sparse complex matrix with column adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDDMatrix {
    pub rows: usize,
    pub cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
    col_ptr: Vec<usize>,
    /// Edge ids (positions in `col_idx`) grouped by column.
    col_edges: Vec<usize>,
}

impl SparseDDMatrix {
    /// Builds from per-row `(col, value)` lists; columns must be ascending within a row.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, Complex64)>>) -> Result<Self> {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &rows {
            let mut last = None;
            for &(c, v) in row {
                if c >= cols {
                    return Err(Error::Dimension(format!("column {c} out of {cols}")));
                }
                if last.is_some_and(|l| l >= c) {
                    return Err(Error::Dimension("row entries must have ascending columns".into()));
                }
                last = Some(c);
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        let mut counts = vec![0usize; cols + 1];
        for &c in &col_idx {
            counts[c + 1] += 1;
        }
        for c in 0..cols {
            counts[c + 1] += counts[c];
        }
        let col_ptr = counts.clone();
        let mut fill = counts;
        let mut col_edges = vec![0; col_idx.len()];
        for (e, &c) in col_idx.iter().enumerate() {
            col_edges[fill[c]] = e;
            fill[c] += 1;
        }
        Ok(SparseDDMatrix {
            rows: rows.len(),
            cols,
            row_ptr,
            col_idx,
            values,
            col_ptr,
            col_edges,
        })
    }

    pub fn from_dense(rows: usize, cols: usize, dense: &[Complex64]) -> Result<Self> {
        if dense.len() != rows * cols {
            return Err(Error::Dimension("dense buffer size".into()));
        }
        let r = (0..rows)
            .map(|d| {
                (0..cols)
                    .filter_map(|c| {
                        let v = dense[d * cols + c];
                        (v != Complex64::new(0.0, 0.0)).then_some((c, v))
                    })
                    .collect()
            })
            .collect();
        Self::from_rows(cols, r)
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Column indices and values of row `d`.
    pub fn row(&self, d: usize) -> (&[usize], &[Complex64]) {
        let r = self.row_ptr[d]..self.row_ptr[d + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Edge id range of row `d`.
    pub fn row_edges(&self, d: usize) -> std::ops::Range<usize> {
        self.row_ptr[d]..self.row_ptr[d + 1]
    }

    /// Edge ids touching column `c`.
    pub fn col_edges(&self, c: usize) -> &[usize] {
        &self.col_edges[self.col_ptr[c]..self.col_ptr[c + 1]]
    }

    /// Column-ordered slot range of column `c`; slot `s` holds edge `col_edge_ids()[s]`.
    pub fn col_range(&self, c: usize) -> std::ops::Range<usize> {
        self.col_ptr[c]..self.col_ptr[c + 1]
    }

    /// Edge id stored in each column-ordered slot.
    pub fn col_edge_ids(&self) -> &[usize] {
        &self.col_edges
    }

    /// Rows adjacent to column `c`, ascending.
    pub fn col_adjacency(&self, c: usize) -> Vec<usize> {
        self.col_edges(c)
            .iter()
            .map(|&e| self.row_ptr.partition_point(|&p| p <= e) - 1)
            .collect()
    }

    pub fn edge_col(&self, e: usize) -> usize {
        self.col_idx[e]
    }

    pub fn edge_value(&self, e: usize) -> Complex64 {
        self.values[e]
    }

    pub fn get(&self, d: usize, c: usize) -> Complex64 {
        let (cols, vals) = self.row(d);
        match cols.binary_search(&c) {
            Ok(i) => vals[i],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Number of entries in each row.
    pub fn row_degrees(&self) -> Vec<usize> {
        self.row_ptr.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Largest row support.
    pub fn max_row_degree(&self) -> usize {
        self.row_degrees().into_iter().max().unwrap_or(0)
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!("vector of {} for {} columns", x.len(), self.cols)));
        }
        Ok((0..self.rows)
            .map(|d| {
                let (c, v) = self.row(d);
                c.iter().zip(v).map(|(&c, v)| v * x[c]).sum()
            })
            .collect())
    }

    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows * self.cols];
        for d in 0..self.rows {
            let (c, v) = self.row(d);
            for (&c, &v) in c.iter().zip(v) {
                out[d * self.cols + c] = v;
            }
        }
        out
    }

    /// `‖A - B‖_F`.
    pub fn frobenius_diff(&self, other: &SparseDDMatrix) -> Result<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension("matrix shapes differ".into()));
        }
        let a = self.to_dense();
        let b = other.to_dense();
        Ok(a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// One `row col re im` line per stored entry.
    pub fn to_coo_text(&self) -> String {
        let mut s = String::new();
        for d in 0..self.rows {
            let (c, v) = self.row(d);
            for (&c, v) in c.iter().zip(v) {
                let _ = writeln!(s, "{d} {c} {:.17e} {:.17e}", v.re, v.im);
            }
        }
        s
    }

    /// Vertical concatenation `[A; B; ...]`.
    pub fn stack(mats: &[&SparseDDMatrix]) -> Result<SparseDDMatrix> {
        let cols = mats.first().map(|m| m.cols).unwrap_or(0);
        if mats.iter().any(|m| m.cols != cols) {
            return Err(Error::Dimension("stacked matrices need equal column counts".into()));
        }
        let rows = mats
            .iter()
            .flat_map(|m| (0..m.rows).map(move |d| {
                let (c, v) = m.row(d);
                c.iter().copied().zip(v.iter().copied()).collect()
            }))
            .collect();
        Self::from_rows(cols, rows)
    }
}

/// Branch-`g` matrix of the given channel under truncation `trunc`.
pub fn build_branch_matrix(
    ch: &ChannelRealization,
    g: usize,
    trunc: &TruncationSpec,
    grid: &DDGridConfig,
    taps: &TapModel,
) -> Result<SparseDDMatrix> {
    trunc.validate(grid)?;
    if g >= grid.g {
        return Err(Error::Precondition(format!("branch {g} of G = {}", grid.g)));
    }
    let offsets = trunc.offsets(grid.n);
    build(ch, g, grid, taps, &offsets, false)
}

/// Matrix for a channel whose Dopplers sit on the grid (`β = 0` for every
/// path): a single Doppler term per tap, no leakage.
pub fn build_on_grid_matrix(
    ch: &ChannelRealization,
    g: usize,
    grid: &DDGridConfig,
    taps: &TapModel,
) -> Result<SparseDDMatrix> {
    if ch.paths.iter().any(|p| p.doppler_frac != 0.0) {
        return Err(Error::Precondition("on-grid build needs integer Dopplers".into()));
    }
    if g >= grid.g {
        return Err(Error::Precondition(format!("branch {g} of G = {}", grid.g)));
    }
    build(ch, g, grid, taps, &[0], true)
}

/// Matrices of every branch `0..G`.
pub fn build_all_branches(
    ch: &ChannelRealization,
    trunc: &TruncationSpec,
    grid: &DDGridConfig,
    taps: &TapModel,
) -> Result<Vec<SparseDDMatrix>> {
    (0..grid.g)
        .map(|g| build_branch_matrix(ch, g, trunc, grid, taps))
        .collect()
}

/// `[H_0; H_1; ...]`.
pub fn stack_branches(mats: &[SparseDDMatrix]) -> Result<SparseDDMatrix> {
    SparseDDMatrix::stack(&mats.iter().collect::<Vec<_>>())
}

struct PathTerms {
    gain: Complex64,
    k_nu: i64,
    taps: Vec<(usize, f64)>,
    /// `ξ(l, p)` per tap, row-major over `l`.
    xi: Vec<Complex64>,
    /// `θ(q)/N` per offset.
    theta: Vec<Complex64>,
    /// `φ(k, q)`, row-major over `k`.
    phi: Vec<Complex64>,
}

fn build(
    ch: &ChannelRealization,
    g: usize,
    grid: &DDGridConfig,
    taps: &TapModel,
    offsets: &[i64],
    on_grid: bool,
) -> Result<SparseDDMatrix> {
    if ch.channel_order > grid.m {
        return Err(Error::config("channel.order", "channel order exceeds M"));
    }
    let (n, m) = (grid.n, grid.m);
    let nq = offsets.len();
    let branch_taps = taps.branch_taps(ch, g, grid);
    let paths: Vec<PathTerms> = ch
        .paths
        .iter()
        .zip(branch_taps)
        .map(|(path, tp)| {
            let beta = if on_grid { 0.0 } else { path.doppler_frac };
            let k_nu = path.doppler_int;
            let xi_tab = (0..m)
                .flat_map(|l| tp.iter().map(move |&(p, _)| (l, p)))
                .map(|(l, p)| xi(l, p, k_nu, beta, grid))
                .collect();
            let theta_tab = offsets
                .iter()
                .map(|&q| theta(q, beta, n) / n as f64)
                .collect();
            let phi_tab = (0..n)
                .flat_map(|k| offsets.iter().map(move |&q| (k, q)))
                .map(|(k, q)| phi(k, q, k_nu, grid))
                .collect();
            PathTerms {
                gain: path.gain,
                k_nu,
                taps: tp,
                xi: xi_tab,
                theta: theta_tab,
                phi: phi_tab,
            }
        })
        .collect();

    let nm = n * m;
    let zero = Complex64::new(0.0, 0.0);
    let mut acc = vec![zero; nm];
    let mut touched = vec![false; nm];
    let mut list = Vec::new();
    let mut rows = Vec::with_capacity(nm);
    for k in 0..n {
        for l in 0..m {
            for path in &paths {
                let nt = path.taps.len();
                for (ti, &(p, tap)) in path.taps.iter().enumerate() {
                    let coef = path.gain * tap;
                    let xi_v = path.xi[l * nt + ti];
                    let col_l = modulo(l as i64 - p as i64, m);
                    for (qi, &q) in offsets.iter().enumerate() {
                        let th = path.theta[qi];
                        if th == zero {
                            continue;
                        }
                        let mut gam = if on_grid { xi_v } else { xi_v * th };
                        if l < p {
                            gam *= path.phi[k * nq + qi];
                        }
                        let col = modulo(k as i64 - path.k_nu + q, n) * m + col_l;
                        acc[col] += coef * gam;
                        if !touched[col] {
                            touched[col] = true;
                            list.push(col);
                        }
                    }
                }
            }
            list.sort_unstable();
            let row = list
                .iter()
                .filter_map(|&c| {
                    let v = std::mem::replace(&mut acc[c], zero);
                    touched[c] = false;
                    (v != zero).then_some((c, v))
                })
                .collect();
            list.clear();
            rows.push(row);
        }
    }
    SparseDDMatrix::from_rows(nm, rows)
}
