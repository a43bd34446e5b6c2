//! The `simulate`, `exit-chart` and `verify` commands.

use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::analysis::{
    ber_sweep, exit_chart, exit_trajectory, time_domain_oracle, write_ber_csv, write_exit_csv, BerPoint, ExitPoint,
};
use crate::channel::{draw_channel, DelayProfile, TapModel};
use crate::config::ExperimentConfig;
use crate::ddmatrix::{build_branch_matrix, build_on_grid_matrix, theta, SparseDDMatrix, TruncationSpec};
use crate::equalizer::{icmp_run, predicted_complexity, simplified_run, tmp_run, MPParams, SimplifiedKind};
use crate::error::Result;
use crate::grid::DDGridConfig;
use crate::modem::DDFrame;
use crate::pulses::{rect_cross_ambiguity, RolloffFilter};
use crate::rng::RngSpec;

/// Directory for output files when the configuration names none.
pub const OUTPUT_DIR_ENV: &str = "OTFS_FSS_OUT_DIR";

/// Command-line values that replace configuration entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub frames: Option<u64>,
    pub seed: Option<u64>,
    pub snr_db: Option<Vec<f64>>,
    pub receivers: Option<Vec<String>>,
    pub epsilon: Option<f64>,
    pub output: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(v) = self.frames {
            cfg.frames = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.snr_db {
            cfg.snr_db = v.clone();
        }
        if let Some(v) = &self.receivers {
            cfg.receivers = v.clone();
        }
        if let Some(v) = self.epsilon {
            cfg.csi.epsilon = v;
        }
        if let Some(v) = &self.output {
            cfg.output = Some(v.clone());
        }
    }
}

/// Configured output path, else `$OTFS_FSS_OUT_DIR/<default_name>`, else the
/// working directory.
pub fn output_path(cfg: &ExperimentConfig, default_name: &str) -> PathBuf {
    match &cfg.output {
        Some(p) => p.clone(),
        None => std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."))
            .join(default_name),
    }
}

fn write_file(path: &Path, body: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, body)?;
    Ok(())
}

/// BER sweep; writes the CSV and prints a summary table to `log`.
pub fn cmd_simulate(cfg: &ExperimentConfig, log: &mut dyn Write) -> Result<(PathBuf, Vec<BerPoint>)> {
    let r = cfg.resolve()?;
    for w in &r.warnings {
        writeln!(log, "warning: {w}")?;
    }
    writeln!(log, "nu_max = {:.1} Hz, {} frames, seed {}", r.nu_max, cfg.frames, cfg.seed)?;
    let res = ber_sweep(&r.link, &r.receivers, &cfg.snr_db, cfg.frames)?;
    let mut csv = Vec::new();
    write_ber_csv(&res.points, &mut csv)?;
    let path = output_path(cfg, "ber.csv");
    write_file(&path, &csv)?;
    writeln!(log, "{:<12} {:>8} {:>12} {:>10}", "receiver", "snr_db", "ber", "errors")?;
    for p in &res.points {
        writeln!(log, "{:<12} {:>8} {:>12.4e} {:>10}", p.receiver, p.snr_db, p.ber, p.bit_errors)?;
    }
    writeln!(log, "wrote {}", path.display())?;
    Ok((path, res.points))
}

/// Transfer curves at every configured SNR, one CSV row per (σ, SNR).
pub fn cmd_exit_chart(cfg: &ExperimentConfig, log: &mut dyn Write) -> Result<(PathBuf, Vec<ExitPoint>)> {
    let r = cfg.resolve()?;
    for w in &r.warnings {
        writeln!(log, "warning: {w}")?;
    }
    let mut points = Vec::new();
    for &snr in &cfg.snr_db {
        let curve = exit_chart(&r.link, cfg.exit.branch, snr, &cfg.exit.sigmas, cfg.exit.frames)?;
        if curve.iter().any(|p| p.low_samples) {
            writeln!(log, "warning: fewer than 10^4 symbols per point at {snr} dB")?;
        }
        let traj = exit_trajectory(&r.link, snr, cfg.exit.frames)?;
        let steps: Vec<String> = traj.iter().map(|v| format!("{v:.3}")).collect();
        writeln!(log, "{snr} dB turbo trajectory I_e per pass: {}", steps.join(" -> "))?;
        points.extend(curve);
    }
    let mut csv = Vec::new();
    write_exit_csv(&points, &mut csv)?;
    let path = output_path(cfg, "exit.csv");
    write_file(&path, &csv)?;
    writeln!(log, "wrote {}", path.display())?;
    Ok((path, points))
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Self-checks of the signal model and the equalizer accounting, on small
/// grids derived from the configured filter.
pub fn cmd_verify(cfg: &ExperimentConfig, log: &mut dyn Write) -> Result<Vec<Check>> {
    cfg.validate()?;
    let filter = RolloffFilter::rc(cfg.filter.rolloff, cfg.filter.span)?;
    let checks = vec![
        check_oracle(&filter)?,
        check_biorthogonality(),
        check_theta(),
        check_on_grid(&filter)?,
        check_complexity(&filter)?,
    ];
    for c in &checks {
        writeln!(log, "[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
    }
    Ok(checks)
}

fn small_grid() -> Result<DDGridConfig> {
    DDGridConfig::new(8, 16, 15e3, 2)
}

fn check_oracle(filter: &RolloffFilter) -> Result<Check> {
    let grid = small_grid()?;
    let taps = TapModel::new(filter);
    let trunc = TruncationSpec::new(grid.n / 2, &grid)?;
    let mut worst: f64 = 0.0;
    for c in 0..3 {
        let ch = draw_channel(&DelayProfile::typical_urban(), 1111.0, 6, &grid, filter, RngSpec::new(c, 1))?;
        for g in 0..grid.g {
            let h = build_branch_matrix(&ch, g, &trunc, &grid, &taps)?;
            for f in 0..3 {
                let mut rng = RngSpec::new(c, 100 + f).rng();
                let x = DDFrame::from_values(
                    grid.n,
                    grid.m,
                    (0..grid.symbols())
                        .map(|_| Complex64::new(rand::Rng::random::<f64>(&mut rng) - 0.5, rand::Rng::random::<f64>(&mut rng) - 0.5))
                        .collect(),
                )?;
                let y = time_domain_oracle(&x, &ch, g, &grid, &taps)?;
                let hx = h.mul_vec(&x.values)?;
                let num: f64 = hx.iter().zip(&y.values).map(|(a, b)| (a - b).norm_sqr()).sum();
                let den: f64 = y.values.iter().map(|b| b.norm_sqr()).sum();
                worst = worst.max((num / den).sqrt());
            }
        }
    }
    Ok(Check {
        name: "closed-form matrix vs time-domain simulation",
        passed: worst < 1e-8,
        detail: format!("worst relative error {worst:.2e}"),
    })
}

fn check_biorthogonality() -> Check {
    let slot = 1.0 / 15e3;
    let mut worst: f64 = 0.0;
    for n in -3i32..=3 {
        for m in -3i32..=3 {
            let a = rect_cross_ambiguity(n as f64 * slot, m as f64 * 15e3, slot);
            let expect = if n == 0 && m == 0 { 1.0 } else { 0.0 };
            worst = worst.max((a - expect).norm());
        }
    }
    Check {
        name: "rectangular pulse bi-orthogonality",
        passed: worst < 1e-9,
        detail: format!("worst deviation {worst:.2e}"),
    }
}

fn check_theta() -> Check {
    let ok = [4usize, 8, 16, 32].iter().all(|&n| {
        (-40i64..40).all(|q| {
            let expect = if q.rem_euclid(n as i64) == 0 { n as f64 } else { 0.0 };
            theta(q, 0.0, n) == Complex64::new(expect, 0.0)
        })
    });
    Check {
        name: "integer-Doppler leakage kernel",
        passed: ok,
        detail: "θ(q, 0) = N·δ([q]_N)".into(),
    }
}

fn check_on_grid(filter: &RolloffFilter) -> Result<Check> {
    let grid = small_grid()?;
    let taps = TapModel::new(filter).with_threshold(1e-6);
    let profile = DelayProfile { on_grid: true, ..DelayProfile::typical_urban() };
    let mut ok = true;
    for c in 0..5 {
        let ch = draw_channel(&profile, 1111.0, 6, &grid, filter, RngSpec::new(c, 2))?;
        for g in 0..grid.g {
            ok &= build_on_grid_matrix(&ch, g, &grid, &taps)?
                == build_branch_matrix(&ch, g, &TruncationSpec { e: 0 }, &grid, &taps)?;
        }
    }
    Ok(Check {
        name: "on-grid matrix equals zero-truncation matrix",
        passed: ok,
        detail: "entry-exact over 5 channels".into(),
    })
}

fn check_complexity(filter: &RolloffFilter) -> Result<Check> {
    let grid = small_grid()?;
    let a = crate::alphabet::make_qpsk_gray();
    let q = a.order();
    let taps = TapModel::new(filter).with_threshold(1e-6);
    let profile = DelayProfile { on_grid: true, ..DelayProfile::typical_urban() };
    let ch = draw_channel(&profile, 1111.0, 6, &grid, filter, RngSpec::new(9, 3))?;
    let hs: Vec<SparseDDMatrix> = (0..grid.g)
        .map(|g| build_on_grid_matrix(&ch, g, &grid, &taps))
        .collect::<Result<_>>()?;
    let params = MPParams { n_iter: 5, turbo_iters: 2, ..MPParams::default() };
    // pure noise keeps every symbol unconverged, so every iteration runs
    let mut rng = RngSpec::new(9, 4).rng();
    let ys: Vec<Vec<Complex64>> = (0..grid.g)
        .map(|_| (0..grid.symbols()).map(|_| Complex64::new(rand::Rng::random::<f64>(&mut rng) - 0.5, 0.0)).collect())
        .collect();
    let y_refs: Vec<&[Complex64]> = ys.iter().map(|y| &y[..]).collect();
    let h_refs: Vec<&SparseDDMatrix> = hs.iter().collect();
    let nv = 10.0;
    let d_sum: usize = hs.iter().map(|h| h.max_row_degree()).sum();
    let uniform = hs.iter().all(|h| h.row_degrees().iter().all(|&d| d == h.max_row_degree()));
    let per = |iters: usize, d: usize| predicted_complexity(iters, grid.m, grid.n, 1, d, q);

    let icmp = icmp_run(&ys.concat(), &SparseDDMatrix::stack(&h_refs)?, None, nv, &params, &a)?;
    let tmp = tmp_run(&y_refs, &h_refs, nv, &params, &a)?;
    let r = hs.iter().map(|h| h.max_row_degree()).min().unwrap_or(1).div_ceil(2);
    let strim = simplified_run(SimplifiedKind::Icmp, &y_refs, &h_refs, r, nv, &params, &a)?;
    let ok = uniform
        && icmp.iterations == params.n_iter
        && icmp.complexity.multiplications == per(params.n_iter, d_sum)
        && tmp.complexity.multiplications == params.turbo_iters as u64 * per(params.n_iter, d_sum)
        && strim.complexity().multiplications == predicted_complexity(params.n_iter, grid.m, grid.n, grid.g, r, q);
    Ok(Check {
        name: "multiplication counters match the closed-form complexity",
        passed: ok,
        detail: format!(
            "ICMP {} / TMP {} / trimmed {} multiplications",
            icmp.complexity.multiplications,
            tmp.complexity.multiplications,
            strim.complexity().multiplications
        ),
    })
}
