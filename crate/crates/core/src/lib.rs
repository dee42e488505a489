//! Simulation of a two-qubit liquid-state NMR quantum computer (the
//! {¹H, ¹³C} pair of ¹³CHCl₃) whose initial polarization is boosted by
//! hyperpolarized ¹²⁹Xe.
//!
//! The crate covers the whole experiment chain:
//!
//! * [`state`]: dense density matrices, unitaries and the `ρ = q·I + ρ_dev`
//!   split.
//! * [`spin`]: thermal and enhanced initial states, RF pulses, J evolution and
//!   pulse-level population permutations.
//! * [`spinoe`]: phenomenological enhancement-versus-time model and experiment
//!   scheduling.
//! * [`labeling`]: weighted temporal labeling (effective pure states from
//!   non-identical inputs).
//! * [`readout`]: small-tip probing, FID synthesis, spectra, peak integration
//!   and reconstruction of the deviation diagonal.
//! * [`grover`] and [`experiments`]: the two-qubit search and the end-to-end
//!   pipelines.
//!
//! Basis ordering is `|H C⟩` with index `2·H + C`; `|0⟩` is spin up.

pub mod error;
pub mod experiments;
pub mod grover;
pub mod labeling;
mod linalg;
pub mod permutation;
pub mod readout;
pub mod spin;
pub mod spinoe;
pub mod state;

pub use error::{Error, Result};
pub use experiments::{
    run_effective_pure_pipeline, run_grover_pipeline, run_grover_session, EffectivePureRun,
    ExperimentRecord, GroverOutcome, PipelineConfig, SessionLayout,
};
pub use grover::{grover_circuit, grover_oracle, GroverCase};
pub use labeling::{
    assemble_effective_pure, choose_ground, enhancement_factor, solve_weights,
    EffectivePureResult, LabelingPlan, Normalization, WeightSolution,
};
pub use permutation::{permute_populations, PermutationId};
pub use readout::{
    integrate_peaks, probe, reconstruct_diagonal, spectrum, synthesize_fid, Calibration, Fid,
    PeakLine, PeakTable, ReadoutConfig, Spectrum,
};
pub use spin::{
    enhanced_state, j_evolution, permutation_pulse_sequence, pulse_unitary, thermal_state,
    Nucleus, PulseSpec, PulseTarget, SpinSystemConfig,
};
pub use spinoe::{
    enhancement_at, make_schedule, sample_initial_state, Enhancement, ExperimentSchedule,
    PumpedSample, ScheduleMode, SpinoeParams,
};
pub use state::{apply_unitary, deviation_decompose, populations, DensityMatrix, DeviationPart, Unitary};

/// Deviation diagonal of a two-qubit state, indexed `|00⟩, |01⟩, |10⟩, |11⟩`.
pub type Diagonal = [f64; 4];
