//! Fractionally spaced OTFS receivers and their message-passing equalizers.

pub mod alphabet;
pub mod analysis;
pub mod channel;
pub mod cli;
pub mod config;
pub mod ddmatrix;
pub mod equalizer;
pub mod error;
pub mod grid;
pub mod modem;
pub mod pulses;
pub mod rng;

pub use alphabet::{make_qam, make_qpsk_gray, ModAlphabet};
pub use channel::{ChannelPath, ChannelRealization, DelayProfile, TapModel};
pub use config::ExperimentConfig;
pub use ddmatrix::{SparseDDMatrix, TruncationSpec};
pub use equalizer::{icmp_run, tmp_run, LLRBlock, MPParams};
pub use error::{Error, Result};
pub use grid::DDGridConfig;
pub use modem::{BasebandSignal, DDFrame, OtfsModem, TFFrame};
pub use pulses::{FilterKind, RolloffFilter};
pub use rng::{Purpose, RngSpec};
