//! Monte-Carlo BER harness, EXIT analysis, CSI perturbation and the
//! time-domain oracle.

pub mod ber;
pub mod csi;
pub mod exit;
pub mod link;
pub mod oracle;
pub mod stats;

pub use ber::{ber_sweep, count_bit_errors, run_receiver, write_ber_csv, BerPoint, Receiver, SweepResult};
pub use csi::{perturb_csi, CsiPerturbSpec};
pub use exit::{exit_chart, exit_trajectory, mutual_info_apriori, mutual_info_extrinsic, sample_apriori_llrs, write_exit_csv, ExitPoint};
pub use link::{Frame, LinkSetup};
pub use oracle::time_domain_oracle;
