//! Phenomenological model of SPINOE polarization enhancement and experiment
//! scheduling on optically pumped samples.
//!
//! Each nucleus relaxes from its initial enhancement toward the thermal value
//! `ε = 1` on the Xe relaxation time:
//!
//! ```text
//! ε(t) = 1 + (ε₀ − 1)·exp(−t / T1,Xe)
//! ```
//!
//! Post-experiment recovery of the solute is assumed complete after the
//! scheduled recovery gap, so no recovery dynamics are integrated. Experiments
//! do not deplete the Xe reservoir.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{enhanced_state, positive, SpinSystemConfig};
use crate::state::DensityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinoeParams {
    pub eps0_h: f64,
    pub eps0_c: f64,
    pub t1_xe_s: f64,
    /// Longitudinal relaxation of the solute; recovery ≈ 5·T1.
    pub t1_ch_s: f64,
    /// Relative standard deviation of ε between freshly pumped samples.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for SpinoeParams {
    fn default() -> Self {
        Self {
            eps0_h: -11.0,
            eps0_c: 18.0,
            t1_xe_s: 900.0,
            t1_ch_s: 24.0,
            jitter: 0.05,
            seed: 0,
        }
    }
}

impl SpinoeParams {
    pub fn validate(&self) -> Result<()> {
        positive("t1_xe_s", self.t1_xe_s)?;
        positive("t1_ch_s", self.t1_ch_s)?;
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(Error::invalid("jitter", "must be >= 0"));
        }
        if !(self.eps0_h.is_finite() && self.eps0_c.is_finite()) {
            return Err(Error::invalid("eps0", "must be finite"));
        }
        Ok(())
    }

    /// Same timing parameters with both enhancements pinned at the thermal
    /// value and no sample-to-sample variation.
    pub fn thermal(&self) -> Self {
        Self {
            eps0_h: 1.0,
            eps0_c: 1.0,
            jitter: 0.0,
            ..*self
        }
    }
}

/// Enhancement pair `(ε_H, ε_C)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Enhancement {
    pub h: f64,
    pub c: f64,
}

pub fn enhancement_at(p: &SpinoeParams, t_s: f64) -> Result<Enhancement> {
    if !(t_s >= 0.0) {
        return Err(Error::invalid("t", format!("{t_s} must be >= 0")));
    }
    let decay = (-t_s / p.t1_xe_s).exp();
    Ok(Enhancement {
        h: 1.0 + (p.eps0_h - 1.0) * decay,
        c: 1.0 + (p.eps0_c - 1.0) * decay,
    })
}

/// One optically pumped sample. A fresh sample carries a multiplicative
/// per-nucleus factor on its excess enhancement `ε − 1`, drawn once when it
/// is prepared; an unpumped (thermal) sample is unaffected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpedSample {
    pub factor_h: f64,
    pub factor_c: f64,
}

impl PumpedSample {
    pub fn nominal() -> Self {
        Self {
            factor_h: 1.0,
            factor_c: 1.0,
        }
    }

    /// Draws `(1 + δ_H, 1 + δ_C)` with `δ ~ N(0, jitter)`.
    pub fn fresh<R: Rng + ?Sized>(p: &SpinoeParams, rng: &mut R) -> Self {
        if p.jitter == 0.0 {
            return Self::nominal();
        }
        let normal = Normal::new(0.0, p.jitter).expect("jitter validated as finite and >= 0");
        Self {
            factor_h: 1.0 + normal.sample(rng),
            factor_c: 1.0 + normal.sample(rng),
        }
    }

    pub fn enhancement(&self, p: &SpinoeParams, t_s: f64) -> Result<Enhancement> {
        let e = enhancement_at(p, t_s)?;
        Ok(Enhancement {
            h: 1.0 + (e.h - 1.0) * self.factor_h,
            c: 1.0 + (e.c - 1.0) * self.factor_c,
        })
    }

    pub fn state_at(&self, p: &SpinoeParams, cfg: &SpinSystemConfig, t_s: f64) -> Result<DensityMatrix> {
        let e = self.enhancement(p, t_s)?;
        Ok(enhanced_state(cfg, e.h, e.c))
    }
}

/// State of a sample at time `t`; with `fresh_sample` the sample's jitter is
/// drawn from `rng`.
pub fn sample_initial_state<R: Rng + ?Sized>(
    p: &SpinoeParams,
    cfg: &SpinSystemConfig,
    t_s: f64,
    fresh_sample: bool,
    rng: &mut R,
) -> Result<DensityMatrix> {
    let sample = if fresh_sample {
        PumpedSample::fresh(p, rng)
    } else {
        PumpedSample::nominal()
    };
    sample.state_at(p, cfg, t_s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// One freshly pumped sample per experiment.
    MultiSample,
    /// All experiments on one sample, separated by the recovery time.
    SingleSample,
}

/// Start times of the permutation experiments. Each is preceded by a probe
/// `probe_lead` seconds earlier. In multi-sample mode every time is measured
/// on its own sample's clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSchedule {
    pub mode: ScheduleMode,
    pub times_s: Vec<f64>,
    pub probe_lead_s: f64,
}

impl ExperimentSchedule {
    pub fn fresh_sample(&self, _index: usize) -> bool {
        self.mode == ScheduleMode::MultiSample
    }

    pub fn probe_time(&self, index: usize) -> f64 {
        self.times_s[index] - self.probe_lead_s
    }
}

pub fn make_schedule(mode: ScheduleMode, k: usize, r1_s: f64, recovery_s: f64) -> Result<ExperimentSchedule> {
    if k == 0 {
        return Err(Error::invalid("k", "at least one experiment"));
    }
    positive("r1_s", r1_s)?;
    let times_s = match mode {
        ScheduleMode::MultiSample => vec![r1_s; k],
        ScheduleMode::SingleSample => {
            if !(recovery_s > 0.0 && recovery_s.is_finite()) {
                return Err(Error::invalid("recovery_s", "must be positive in single-sample mode"));
            }
            (0..k).map(|i| r1_s + i as f64 * recovery_s).collect()
        }
    };
    Ok(ExperimentSchedule {
        mode,
        times_s,
        probe_lead_s: r1_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::spin::thermal_state;

    #[test]
    fn initial_and_limiting_enhancement() {
        let p = SpinoeParams::default();
        assert_eq!(enhancement_at(&p, 0.0).unwrap(), Enhancement { h: -11.0, c: 18.0 });
        let late = enhancement_at(&p, 1e6).unwrap();
        assert!((late.h - 1.0).abs() < 1e-12 && (late.c - 1.0).abs() < 1e-12);
        let half = enhancement_at(&p, p.t1_xe_s * 2f64.ln()).unwrap();
        assert!((half.c - 9.5).abs() < 1e-12);
        assert!((half.h + 5.0).abs() < 1e-12);
        assert!(enhancement_at(&p, -1.0).is_err());
    }

    #[test]
    fn noiseless_sample_is_enhanced_state() {
        let p = SpinoeParams {
            jitter: 0.0,
            ..Default::default()
        };
        let cfg = SpinSystemConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = sample_initial_state(&p, &cfg, 0.0, true, &mut rng).unwrap();
        assert_eq!(rho, enhanced_state(&cfg, -11.0, 18.0));
        let late = sample_initial_state(&p, &cfg, 1e7, false, &mut rng).unwrap();
        assert!(late.max_abs_difference(&thermal_state(&cfg)) < 1e-12);
    }

    #[test]
    fn jitter_is_reproducible() {
        let p = SpinoeParams::default();
        let cfg = SpinSystemConfig::default();
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            sample_initial_state(&p, &cfg, 0.0, true, &mut rng).unwrap()
        };
        let a = draw();
        assert_eq!(a, draw());
        assert_ne!(a, enhanced_state(&cfg, -11.0, 18.0));
        assert!(a.is_diagonal());
        let thermal = SpinoeParams {
            eps0_h: 1.0,
            eps0_c: 1.0,
            ..p
        };
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let t = sample_initial_state(&thermal, &cfg, 0.0, true, &mut rng).unwrap();
        assert_eq!(t, thermal_state(&cfg));
    }

    #[test]
    fn schedules() {
        let s = make_schedule(ScheduleMode::SingleSample, 3, 25.0, 120.0).unwrap();
        assert_eq!(s.times_s, vec![25.0, 145.0, 265.0]);
        assert_eq!(s.probe_lead_s, 25.0);
        assert_eq!(s.probe_time(1), 120.0);
        let m = make_schedule(ScheduleMode::MultiSample, 3, 25.0, 0.0).unwrap();
        assert_eq!(m.times_s, vec![25.0; 3]);
        assert!(m.fresh_sample(2));
        let one = make_schedule(ScheduleMode::SingleSample, 1, 25.0, 120.0).unwrap();
        assert_eq!(one.times_s, vec![25.0]);
        assert!(make_schedule(ScheduleMode::SingleSample, 3, 25.0, 0.0).is_err());
        assert!(make_schedule(ScheduleMode::MultiSample, 0, 25.0, 1.0).is_err());
    }
}
