//! Experiment configuration: a TOML file, overridable from the command line.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::alphabet::make_qam;
use crate::analysis::{CsiPerturbSpec, LinkSetup, Receiver};
use crate::channel::{channel_order_for, max_doppler, DelayProfile};
use crate::ddmatrix::TruncationSpec;
use crate::equalizer::MPParams;
use crate::error::{Error, Result};
use crate::grid::DDGridConfig;
use crate::pulses::RolloffFilter;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    pub m: usize,
    pub delta_f: f64,
    pub g: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphabetSection {
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub paths: usize,
    pub max_delay_us: f64,
    pub decay_us: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity_kmh: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier_hz: Option<f64>,
    /// Takes precedence over velocity and carrier.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_max_hz: Option<f64>,
    #[serde(default)]
    pub on_grid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub rolloff: f64,
    pub span: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    pub e: usize,
    pub tap_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitSection {
    pub sigmas: Vec<f64>,
    pub branch: usize,
    pub frames: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub frames: u64,
    pub snr_db: Vec<f64>,
    pub receivers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub grid: GridSection,
    pub alphabet: AlphabetSection,
    pub channel: ChannelSection,
    pub filter: FilterSection,
    pub truncation: TruncationSection,
    pub mp: MPParams,
    #[serde(default)]
    pub csi: CsiPerturbSpec,
    pub exit: ExitSection,
}

/// A validated configuration turned into runnable pieces.
pub struct Resolved {
    pub link: LinkSetup,
    pub receivers: Vec<Receiver>,
    pub nu_max: f64,
    pub warnings: Vec<String>,
}

impl ExperimentConfig {
    /// N = 16, M = 32 setup used for quick runs.
    pub fn desk() -> Self {
        ExperimentConfig {
            seed: 1,
            frames: 200,
            snr_db: vec![0.0, 5.0, 10.0, 15.0],
            receivers: vec!["tmp".into(), "icmp".into(), "sss-mp".into()],
            output: None,
            grid: GridSection { n: 16, m: 32, delta_f: 15e3, g: 2 },
            alphabet: AlphabetSection { order: 4 },
            channel: ChannelSection {
                paths: 9,
                max_delay_us: 5.0,
                decay_us: 1.0,
                velocity_kmh: Some(300.0),
                carrier_hz: Some(4e9),
                nu_max_hz: None,
                on_grid: false,
            },
            filter: FilterSection { rolloff: 0.4, span: 4 },
            truncation: TruncationSection { e: 6, tap_threshold: 1e-6 },
            mp: MPParams::default(),
            csi: CsiPerturbSpec::default(),
            exit: ExitSection {
                sigmas: vec![0.1, 0.4, 0.7, 1.0, 1.3, 1.6, 2.0, 2.5, 3.0, 4.0],
                branch: 0,
                frames: 20,
            },
        }
    }

    /// Full-size setup: N = 32, M = 128, 500 frames.
    pub fn full() -> Self {
        ExperimentConfig {
            frames: 500,
            grid: GridSection { n: 32, m: 128, delta_f: 15e3, g: 2 },
            ..Self::desk()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn grid(&self) -> Result<DDGridConfig> {
        DDGridConfig::new(self.grid.n, self.grid.m, self.grid.delta_f, self.grid.g)
    }

    /// Maximum Doppler and any warning about conflicting inputs.
    pub fn nu_max(&self) -> Result<(f64, Option<String>)> {
        let c = &self.channel;
        let derived = match (c.velocity_kmh, c.carrier_hz) {
            (Some(v), Some(f)) => Some(max_doppler(v, f)),
            (None, None) => None,
            _ => {
                return Err(Error::config(
                    "channel.velocity_kmh",
                    "velocity and carrier must be given together",
                ))
            }
        };
        match (c.nu_max_hz, derived) {
            (Some(nu), Some(d)) => Ok((
                nu,
                Some(format!("channel.nu_max_hz = {nu} overrides {d:.1} Hz from velocity and carrier")),
            )),
            (Some(nu), None) => Ok((nu, None)),
            (None, Some(d)) => Ok((d, None)),
            (None, None) => Err(Error::config(
                "channel.nu_max_hz",
                "give either nu_max_hz or velocity_kmh with carrier_hz",
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.resolve().map(|_| ())
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let grid = self.grid()?;
        let alphabet = make_qam(self.alphabet.order)?;
        let filter = RolloffFilter::rrc(self.filter.rolloff, self.filter.span)?;
        if self.frames == 0 {
            return Err(Error::config("frames", "must be at least 1"));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::config("snr_db", "needs at least one finite value"));
        }
        if self.receivers.is_empty() {
            return Err(Error::config("receivers", "needs at least one receiver"));
        }
        let receivers = self
            .receivers
            .iter()
            .map(|r| r.parse())
            .collect::<Result<Vec<Receiver>>>()?;
        if receivers.iter().any(|r| matches!(r, Receiver::SIcmp(0) | Receiver::STmp(0))) {
            return Err(Error::config("receivers", "trimmed receivers need R >= 1"));
        }
        let c = &self.channel;
        if c.paths == 0 {
            return Err(Error::config("channel.paths", "must be at least 1"));
        }
        if !(c.max_delay_us >= 0.0) {
            return Err(Error::config("channel.max_delay_us", "must be non-negative"));
        }
        if !(c.decay_us > 0.0) {
            return Err(Error::config("channel.decay_us", "must be positive"));
        }
        let (nu_max, warning) = self.nu_max()?;
        if !(nu_max >= 0.0) || nu_max >= grid.delta_f {
            return Err(Error::config("channel.nu_max_hz", "must lie in [0, delta_f)"));
        }
        let profile = DelayProfile { max_delay: c.max_delay_us * 1e-6, decay: c.decay_us * 1e-6, on_grid: c.on_grid };
        if channel_order_for(profile.max_delay, &grid, &filter) > grid.m {
            return Err(Error::config("channel.max_delay_us", "delay spread plus filter span exceeds M"));
        }
        let trunc = TruncationSpec::new(self.truncation.e, &grid)?;
        if !(self.truncation.tap_threshold >= 0.0) {
            return Err(Error::config("truncation.tap_threshold", "must be non-negative"));
        }
        if !(self.csi.epsilon >= 0.0) {
            return Err(Error::config("csi.epsilon", "must be non-negative"));
        }
        if self.exit.branch >= grid.g {
            return Err(Error::config("exit.branch", "must name an existing branch"));
        }
        if self.exit.sigmas.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::config("exit.sigmas", "must be non-negative"));
        }
        if self.exit.frames == 0 {
            return Err(Error::config("exit.frames", "must be at least 1"));
        }
        let mut link = LinkSetup::new(grid, alphabet, filter, profile, c.paths, nu_max, trunc, self.mp, self.seed)?;
        link.tap_threshold = self.truncation.tap_threshold;
        link.csi = self.csi;
        Ok(Resolved {
            link,
            receivers,
            nu_max,
            warnings: warning.into_iter().collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(cfg: &ExperimentConfig) -> String {
        match cfg.validate() {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected a config error, got {:?}", other.err()),
        }
    }

    #[test]
    fn defaults_validate() {
        let r = ExperimentConfig::desk().resolve().unwrap();
        assert!((r.nu_max - 1111.1).abs() < 0.1);
        assert!(r.warnings.is_empty());
        ExperimentConfig::full().validate().unwrap();
    }

    #[test]
    fn round_trip() {
        for cfg in [ExperimentConfig::desk(), ExperimentConfig::full()] {
            let text = cfg.to_toml_string().unwrap();
            assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
        }
    }

    #[test]
    fn offending_fields_are_named() {
        let mut c = ExperimentConfig::desk();
        c.frames = 0;
        assert_eq!(field_of(&c), "frames");
        let mut c = ExperimentConfig::desk();
        c.grid.m = 0;
        assert_eq!(field_of(&c), "grid.m");
        let mut c = ExperimentConfig::desk();
        c.filter.rolloff = 1.5;
        assert_eq!(field_of(&c), "filter.rolloff");
        let mut c = ExperimentConfig::desk();
        c.truncation.e = 9;
        assert_eq!(field_of(&c), "truncation.e");
        let mut c = ExperimentConfig::desk();
        c.receivers = vec!["zf".into()];
        assert_eq!(field_of(&c), "receivers");
        let mut c = ExperimentConfig::desk();
        c.mp.damping = 2.0;
        assert_eq!(field_of(&c), "mp.damping");
        let mut c = ExperimentConfig::desk();
        c.channel.max_delay_us = 100.0;
        assert_eq!(field_of(&c), "channel.max_delay_us");
        let mut c = ExperimentConfig::desk();
        c.channel.velocity_kmh = None;
        assert_eq!(field_of(&c), "channel.velocity_kmh");
    }

    #[test]
    fn explicit_doppler_wins() {
        let mut c = ExperimentConfig::desk();
        c.channel.nu_max_hz = Some(500.0);
        let r = c.resolve().unwrap();
        assert_eq!(r.nu_max, 500.0);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut text = ExperimentConfig::desk().to_toml_string().unwrap();
        text.insert_str(0, "bogus = 1\n");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }
}
