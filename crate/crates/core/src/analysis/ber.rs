use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::link::{Frame, LinkSetup};
use crate::equalizer::{icmp_run, simplified_run, tmp_run, SimplifiedKind};
use crate::error::{Error, Result};
use crate::ddmatrix::SparseDDMatrix;

/// Receivers compared by the BER harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Receiver {
    /// Combined graph over both branches.
    Icmp,
    /// Turbo exchange between branch graphs.
    Tmp,
    SIcmp(usize),
    STmp(usize),
    /// Branch 0 alone with the exact fractional model.
    Mp,
    /// Branch 0 alone with grid-rounded channel state.
    SssMp,
}

impl Receiver {
    pub fn label(&self) -> String {
        match self {
            Receiver::Icmp => "icmp".into(),
            Receiver::Tmp => "tmp".into(),
            Receiver::SIcmp(r) => format!("s-icmp-{r}"),
            Receiver::STmp(r) => format!("s-tmp-{r}"),
            Receiver::Mp => "mp".into(),
            Receiver::SssMp => "sss-mp".into(),
        }
    }
}

impl FromStr for Receiver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config("receivers", format!("unknown receiver `{s}`"));
        Ok(match s {
            "icmp" => Receiver::Icmp,
            "tmp" => Receiver::Tmp,
            "mp" => Receiver::Mp,
            "sss-mp" => Receiver::SssMp,
            _ => {
                if let Some(r) = s.strip_prefix("s-icmp-") {
                    Receiver::SIcmp(r.parse().map_err(|_| bad())?)
                } else if let Some(r) = s.strip_prefix("s-tmp-") {
                    Receiver::STmp(r.parse().map_err(|_| bad())?)
                } else {
                    return Err(bad());
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub receiver: String,
    pub snr_db: f64,
    pub ber: f64,
    pub frames: u64,
    pub bit_errors: u64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Receiver-major, then SNR.
    pub points: Vec<BerPoint>,
    /// Bit errors per `[receiver][snr][frame]`.
    pub frame_errors: Vec<Vec<Vec<u64>>>,
    pub bits_per_frame: u64,
}

impl SweepResult {
    /// Per-frame BER samples of one receiver at one SNR index.
    pub fn frame_ber(&self, receiver: usize, snr: usize) -> Vec<f64> {
        self.frame_errors[receiver][snr]
            .iter()
            .map(|&e| e as f64 / self.bits_per_frame as f64)
            .collect()
    }
}

/// Runs `rx` on one frame; returns symbol decisions.
pub fn run_receiver(
    link: &LinkSetup,
    rx: Receiver,
    frame: &Frame,
    graphs: &[SparseDDMatrix],
    sss: Option<&SparseDDMatrix>,
    ys: &[Vec<Complex64>],
    noise_var: f64,
) -> Result<Vec<usize>> {
    let a = &link.alphabet;
    let p = &link.params;
    let y_refs: Vec<&[Complex64]> = ys.iter().map(|y| &y[..]).collect();
    let h_refs: Vec<&SparseDDMatrix> = graphs.iter().collect();
    Ok(match rx {
        Receiver::Icmp => {
            let h = SparseDDMatrix::stack(&h_refs)?;
            let y: Vec<Complex64> = ys.concat();
            icmp_run(&y, &h, None, noise_var, p, a)?.decisions
        }
        Receiver::Tmp => tmp_run(&y_refs, &h_refs, noise_var, p, a)?.decisions,
        Receiver::SIcmp(r) => simplified_run(SimplifiedKind::Icmp, &y_refs, &h_refs, r, noise_var, p, a)?
            .decisions()
            .to_vec(),
        Receiver::STmp(r) => simplified_run(SimplifiedKind::Tmp, &y_refs, &h_refs, r, noise_var, p, a)?
            .decisions()
            .to_vec(),
        Receiver::Mp => icmp_run(&ys[0], &graphs[0], None, noise_var, p, a)?.decisions,
        Receiver::SssMp => {
            let owned;
            let h = match sss {
                Some(h) => h,
                None => {
                    owned = link.sss_matrix(&frame.csi)?;
                    &owned
                }
            };
            icmp_run(&ys[0], h, None, noise_var, p, a)?.decisions
        }
    })
}

/// Gray bit errors between decided and transmitted symbol indices.
pub fn count_bit_errors(link: &LinkSetup, decisions: &[usize], truth: &[usize]) -> u64 {
    decisions
        .iter()
        .zip(truth)
        .map(|(&d, &t)| link.alphabet.bit_distance(d, t) as u64)
        .sum()
}

/// Paired Monte-Carlo BER: every receiver sees the same frames, channels and
/// noise at every SNR.
pub fn ber_sweep(link: &LinkSetup, receivers: &[Receiver], snr_grid: &[f64], frames: u64) -> Result<SweepResult> {
    if frames == 0 {
        return Err(Error::config("frames", "must be at least 1"));
    }
    let per_frame: Vec<Vec<Vec<u64>>> = (0..frames)
        .into_par_iter()
        .map(|f| {
            let frame = link.frame(f)?;
            let graphs = link.matrices(&frame.csi)?;
            let sss = if receivers.contains(&Receiver::SssMp) {
                Some(link.sss_matrix(&frame.csi)?)
            } else {
                None
            };
            receivers
                .iter()
                .map(|&rx| {
                    snr_grid
                        .iter()
                        .map(|&snr| {
                            let (sn, sn_f) = link.noise_var(snr);
                            let ys = frame.observe(sn);
                            let dec = run_receiver(link, rx, &frame, &graphs, sss.as_ref(), &ys, sn_f)?;
                            Ok(count_bit_errors(link, &dec, &frame.data))
                        })
                        .collect()
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let bits = link.bits_per_frame();
    let mut points = Vec::new();
    let mut frame_errors = Vec::new();
    for (ri, rx) in receivers.iter().enumerate() {
        let mut per_snr = Vec::new();
        for (si, &snr) in snr_grid.iter().enumerate() {
            let errs: Vec<u64> = per_frame.iter().map(|f| f[ri][si]).collect();
            let total: u64 = errs.iter().sum();
            points.push(BerPoint {
                receiver: rx.label(),
                snr_db: snr,
                ber: total as f64 / (frames * bits) as f64,
                frames,
                bit_errors: total,
                seed: link.seed,
            });
            per_snr.push(errs);
        }
        frame_errors.push(per_snr);
    }
    Ok(SweepResult {
        points,
        frame_errors,
        bits_per_frame: bits,
    })
}

pub const BER_CSV_HEADER: &str = "receiver,snr_db,ber,frames,bit_errors,seed";

pub fn write_ber_csv<W: Write>(points: &[BerPoint], mut w: W) -> Result<()> {
    writeln!(w, "{BER_CSV_HEADER}")?;
    for p in points {
        writeln!(w, "{},{},{:e},{},{},{}", p.receiver, p.snr_db, p.ber, p.frames, p.bit_errors, p.seed)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn receiver_labels_round_trip() {
        for rx in [Receiver::Icmp, Receiver::Tmp, Receiver::SIcmp(40), Receiver::STmp(7), Receiver::Mp, Receiver::SssMp] {
            assert_eq!(rx.label().parse::<Receiver>().unwrap(), rx);
        }
        assert!("turbo".parse::<Receiver>().is_err());
        assert!("s-tmp-x".parse::<Receiver>().is_err());
    }

    #[test]
    fn csv_layout() {
        let p = BerPoint { receiver: "tmp".into(), snr_db: 10.0, ber: 0.0125, frames: 2, bit_errors: 25, seed: 7 };
        let mut out = Vec::new();
        write_ber_csv(&[p], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "receiver,snr_db,ber,frames,bit_errors,seed\ntmp,10,1.25e-2,2,25,7\n");
    }
}
