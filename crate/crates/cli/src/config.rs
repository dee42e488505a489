use std::path::Path;

use anyhow::Context;
use clap::ValueEnum;
use hpqc_core::{
    PermutationId, PipelineConfig, ReadoutConfig, ScheduleMode, SessionLayout, SpinSystemConfig, SpinoeParams,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Multi,
    Single,
}

impl From<Mode> for ScheduleMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Multi => ScheduleMode::MultiSample,
            Mode::Single => ScheduleMode::SingleSample,
        }
    }
}

/// Sample sharing across Grover cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Session {
    /// A labeling set per case, scheduled by `mode`.
    Separate,
    /// All cases interleaved on one sample.
    Shared,
}

/// Flat run configuration; every key is optional in the JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub gamma_ratio: f64,
    pub j_hz: f64,
    pub t2_s: f64,
    pub polarization_unit: f64,
    pub eps0_h: f64,
    pub eps0_c: f64,
    pub t1_xe_s: f64,
    pub t1_ch_s: f64,
    pub recovery_s: f64,
    pub r1_s: f64,
    pub jitter: f64,
    pub seed: u64,
    pub n_points: usize,
    pub dwell_s: f64,
    pub tip_deg: f64,
    pub noise_amp: f64,
    pub mode: Mode,
    pub session: Session,
    pub perms: [PermutationId; 3],
    pub ground: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PipelineConfig::default();
        Self {
            gamma_ratio: p.spin.gamma_ratio,
            j_hz: p.spin.j_coupling_hz,
            t2_s: p.spin.t2_s,
            polarization_unit: p.spin.polarization_unit,
            eps0_h: p.spinoe.eps0_h,
            eps0_c: p.spinoe.eps0_c,
            t1_xe_s: p.spinoe.t1_xe_s,
            t1_ch_s: p.spinoe.t1_ch_s,
            recovery_s: p.recovery_s,
            r1_s: p.r1_s,
            jitter: p.spinoe.jitter,
            seed: p.spinoe.seed,
            n_points: p.readout.n_points,
            dwell_s: p.readout.dwell_s,
            tip_deg: p.probe_tip_deg,
            noise_amp: p.readout.noise_amp,
            mode: Mode::Single,
            session: Session::Separate,
            perms: p.perms,
            ground: p.ground,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| {
            hpqc_core::Error::InvalidParameter {
                name: "config",
                reason: format!("{}: {e}", path.display()),
            }
            .into()
        })
    }

    pub fn spin(&self) -> SpinSystemConfig {
        SpinSystemConfig {
            gamma_ratio: self.gamma_ratio,
            j_coupling_hz: self.j_hz,
            t2_s: self.t2_s,
            polarization_unit: self.polarization_unit,
        }
    }

    pub fn spinoe(&self) -> SpinoeParams {
        SpinoeParams {
            eps0_h: self.eps0_h,
            eps0_c: self.eps0_c,
            t1_xe_s: self.t1_xe_s,
            t1_ch_s: self.t1_ch_s,
            jitter: self.jitter,
            seed: self.seed,
        }
    }

    pub fn pipeline(&self) -> hpqc_core::Result<PipelineConfig> {
        let cfg = PipelineConfig {
            spin: self.spin(),
            spinoe: self.spinoe(),
            readout: ReadoutConfig {
                n_points: self.n_points,
                dwell_s: self.dwell_s,
                noise_amp: self.noise_amp,
            },
            probe_tip_deg: self.tip_deg,
            r1_s: self.r1_s,
            recovery_s: self.recovery_s,
            perms: self.perms,
            ground: self.ground,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn layout(&self) -> SessionLayout {
        match self.session {
            Session::Separate => SessionLayout::SeparateSamples(self.mode.into()),
            Session::Shared => SessionLayout::SharedSampleRoundRobin,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"jitter": 0.0, "mode": "multi"}"#).unwrap();
        assert_eq!(cfg.jitter, 0.0);
        assert_eq!(cfg.mode, Mode::Multi);
        assert_eq!(cfg.eps0_c, 18.0);
        assert!(cfg.pipeline().is_ok());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"gamma": 4.0}"#).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let cfg = RunConfig {
            t2_s: -1.0,
            ..Default::default()
        };
        assert!(cfg.pipeline().is_err());
    }
}
