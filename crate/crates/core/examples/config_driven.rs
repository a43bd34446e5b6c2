//! Drive the library from a TOML experiment file, the same way the binary does.
//!
//! cargo run --release --example config_driven -- [path.toml]

use otfs_fss::cli::{cmd_simulate, cmd_verify};
use otfs_fss::ExperimentConfig;

fn main() -> otfs_fss::Result<()> {
    let mut cfg = match std::env::args().nth(1) {
        Some(p) => ExperimentConfig::load(p.as_ref())?,
        None => ExperimentConfig::desk(),
    };
    let resolved = cfg.resolve()?;
    println!("max Doppler {:.1} Hz", resolved.nu_max);
    for w in &resolved.warnings {
        println!("warning: {w}");
    }

    let mut log = std::io::stderr();
    for check in cmd_verify(&cfg, &mut log)? {
        println!("{:<20} {} {}", check.name, if check.passed { "ok" } else { "FAILED" }, check.detail);
    }

    cfg.frames = 2;
    cfg.snr_db = vec![10.0];
    cfg.output = Some(std::env::temp_dir().join("otfs_fss_example.csv"));
    let (path, points) = cmd_simulate(&cfg, &mut log)?;
    for p in &points {
        println!("{:<8} {:5.1} dB  BER {:.3e}", p.receiver, p.snr_db, p.ber);
    }
    println!("wrote {}", path.display());
    Ok(())
}
