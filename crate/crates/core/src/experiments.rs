//! End-to-end pipelines: effective-pure preparation and the Grover search.
//!
//! Every labeling experiment is a probe of the sample, a wait of `r₁`, the
//! permutation pulses (followed by the algorithm, if any) and a readout of
//! both channels. Weights come from the probed diagonals; the readout
//! spectra of the experiments are summed with those weights.
//!
//! The ground state is fixed when the first experiment of a labeling set is
//! probed, since its permutation pulses depend on it. It is the choice that
//! would be optimal if all three inputs equalled that first probe.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grover::{grover_circuit, GroverCase};
use crate::labeling::{assemble_effective_pure, choose_ground, enhancement_factor, solve_weights, EffectivePureResult, LabelingPlan, Normalization, EXPERIMENTS};
use crate::permutation::{check_ground, PermutationId};
use crate::readout::{
    integrate_peaks, probe_noisy, readout_noisy, reconstruct_diagonal, Calibration, PeakTable, ReadoutConfig, Spectrum,
    MAX_PROBE_TIP_DEG,
};
use crate::spin::{gates, permutation_pulse_sequence, positive, SpinSystemConfig};
use crate::spinoe::{make_schedule, Enhancement, ExperimentSchedule, PumpedSample, ScheduleMode, SpinoeParams};
use crate::state::{apply_unitary, deviation_decompose, DensityMatrix, Unitary};
use crate::Diagonal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub spin: SpinSystemConfig,
    pub spinoe: SpinoeParams,
    pub readout: ReadoutConfig,
    pub probe_tip_deg: f64,
    /// Delay between probe and permutation experiment.
    pub r1_s: f64,
    /// Gap between experiments on the same sample.
    pub recovery_s: f64,
    /// Permutation used by the first, second and third experiment of a set.
    pub perms: [PermutationId; EXPERIMENTS],
    /// Fixed ground state; `None` picks it from the first probe.
    pub ground: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            spin: SpinSystemConfig::default(),
            spinoe: SpinoeParams::default(),
            readout: ReadoutConfig::default(),
            probe_tip_deg: 15.0,
            r1_s: 25.0,
            recovery_s: 120.0,
            perms: PermutationId::ALL,
            ground: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.spin.validate()?;
        self.spinoe.validate()?;
        self.readout.validate()?;
        if !(self.probe_tip_deg > 0.0 && self.probe_tip_deg <= MAX_PROBE_TIP_DEG) {
            return Err(Error::invalid(
                "probe_tip_deg",
                format!("{} outside (0, {MAX_PROBE_TIP_DEG}]", self.probe_tip_deg),
            ));
        }
        positive("r1_s", self.r1_s)?;
        positive("recovery_s", self.recovery_s)?;
        LabelingPlan::new(0, self.perms, Normalization::FirstWeightOne)?;
        if let Some(g) = self.ground {
            check_ground(g)?;
        }
        Ok(())
    }
}

/// One probe + permutation (+ algorithm) + readout experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    /// Position in execution order.
    pub index: usize,
    /// Labeling set this experiment belongs to.
    pub set: usize,
    pub perm: PermutationId,
    /// Sample age when the permutation pulses start.
    pub schedule_time_s: f64,
    pub probe_time_s: f64,
    pub fresh_sample: bool,
    pub enhancement_at_probe: Enhancement,
    /// Deviation diagonal reconstructed from the probe spectra.
    pub probed_diagonal: Diagonal,
    /// True deviation diagonal when the pulses start.
    pub input_diagonal: Diagonal,
    /// Deviation diagonal after the pulses.
    pub output_diagonal: Diagonal,
    pub weights_used: Vec<f64>,
    #[serde(skip)]
    pub readout_h: Spectrum,
    #[serde(skip)]
    pub readout_c: Spectrum,
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    set: usize,
    perm_index: usize,
    time_s: f64,
    probe_time_s: f64,
    fresh: bool,
}

/// Result of one labeling set.
#[derive(Debug, Clone)]
struct SetRun {
    plan: LabelingPlan,
    labeled: EffectivePureResult,
    realized: EffectivePureResult,
    records: Vec<ExperimentRecord>,
    weighted_h: Spectrum,
    weighted_c: Spectrum,
}

fn diagonal_of(rho: &DensityMatrix) -> Result<Diagonal> {
    let d = deviation_decompose(rho)?.diagonal();
    Ok([d[0], d[1], d[2], d[3]])
}

fn slots_for(mode: ScheduleMode, sets: usize, cfg: &PipelineConfig) -> Result<(ExperimentSchedule, Vec<Slot>)> {
    let schedule = make_schedule(mode, EXPERIMENTS, cfg.r1_s, cfg.recovery_s)?;
    let mut slots = Vec::with_capacity(sets * EXPERIMENTS);
    for set in 0..sets {
        for i in 0..EXPERIMENTS {
            slots.push(Slot {
                set,
                perm_index: i,
                time_s: schedule.times_s[i],
                probe_time_s: schedule.probe_time(i),
                fresh: i == 0 || schedule.fresh_sample(i),
            });
        }
    }
    Ok((schedule, slots))
}

/// One sample; slot `j = i·sets + k` runs permutation `i` of set `k`.
fn round_robin_slots(sets: usize, cfg: &PipelineConfig) -> Result<(ExperimentSchedule, Vec<Slot>)> {
    let schedule = make_schedule(ScheduleMode::SingleSample, EXPERIMENTS * sets, cfg.r1_s, cfg.recovery_s)?;
    let mut slots = Vec::with_capacity(sets * EXPERIMENTS);
    for i in 0..EXPERIMENTS {
        for k in 0..sets {
            let j = i * sets + k;
            slots.push(Slot {
                set: k,
                perm_index: i,
                time_s: schedule.times_s[j],
                probe_time_s: schedule.probe_time(j),
                fresh: j == 0,
            });
        }
    }
    Ok((schedule, slots))
}

fn rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let sample_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
    noise_rng.set_stream(1);
    (sample_rng, noise_rng)
}

/// Runs `slots` in order on samples drawn from `params`. `algorithm(set)` is
/// applied after the permutation and ground relabeling; `None` skips both the
/// relabeling and any algorithm.
fn run_slots(
    cfg: &PipelineConfig,
    params: &SpinoeParams,
    cal: &Calibration,
    slots: &[Slot],
    sets: usize,
    algorithm: &dyn Fn(usize) -> Option<Unitary>,
) -> Result<Vec<SetRun>> {
    let (mut sample_rng, mut noise_rng) = rngs(params.seed);
    let mut sample = PumpedSample::nominal();
    let mut grounds: Vec<Option<usize>> = vec![cfg.ground; sets];
    let mut records: Vec<Vec<ExperimentRecord>> = vec![Vec::new(); sets];

    for (index, slot) in slots.iter().enumerate() {
        if slot.fresh {
            sample = PumpedSample::fresh(params, &mut sample_rng);
        }
        let probed_state = sample.state_at(params, &cfg.spin, slot.probe_time_s)?;
        let (ph, pc) = probe_noisy(&probed_state, &cfg.spin, &cfg.readout, cfg.probe_tip_deg, &mut noise_rng)?;
        let probed = reconstruct_diagonal(
            &integrate_peaks(&ph, &cfg.spin)?,
            &integrate_peaks(&pc, &cfg.spin)?,
            cfg.probe_tip_deg,
            cal,
        )?;
        let ground = match grounds[slot.set] {
            Some(g) => g,
            None => {
                let g = choose_ground(&[probed; EXPERIMENTS], cfg.perms)?;
                grounds[slot.set] = Some(g);
                g
            }
        };

        let perm = cfg.perms[slot.perm_index];
        let input = sample.state_at(params, &cfg.spin, slot.time_s)?;
        let mut u = permutation_pulse_sequence(&cfg.spin, perm, ground)?;
        if let Some(alg) = algorithm(slot.set) {
            u = u.then(&gates::flip_mask(ground)).then(&alg);
        }
        let output = apply_unitary(&input, &u)?;
        let (readout_h, readout_c) = readout_noisy(&output, &cfg.spin, &cfg.readout, &mut noise_rng)?;

        records[slot.set].push(ExperimentRecord {
            index,
            set: slot.set,
            perm,
            schedule_time_s: slot.time_s,
            probe_time_s: slot.probe_time_s,
            fresh_sample: slot.fresh,
            enhancement_at_probe: sample.enhancement(params, slot.probe_time_s)?,
            probed_diagonal: probed,
            input_diagonal: diagonal_of(&input)?,
            output_diagonal: diagonal_of(&output)?,
            weights_used: Vec::new(),
            readout_h,
            readout_c,
        });
    }

    let mut runs = Vec::with_capacity(sets);
    for (set, mut recs) in records.into_iter().enumerate() {
        let ground = grounds[set].expect("every set has a first experiment");
        let plan = LabelingPlan::new(ground, cfg.perms, Normalization::FirstWeightOne)?;
        let probed: [Diagonal; EXPERIMENTS] = std::array::from_fn(|i| recs[i].probed_diagonal);
        let inputs: [Diagonal; EXPERIMENTS] = std::array::from_fn(|i| recs[i].input_diagonal);
        let weights = solve_weights(&probed, &plan)?.weights;
        let labeled = assemble_effective_pure(&probed, &plan, &weights)?;
        let realized = assemble_effective_pure(&inputs, &plan, &weights)?;
        for r in &mut recs {
            r.weights_used = weights.clone();
        }
        let parts_h: Vec<(&Spectrum, f64)> = recs.iter().map(|r| &r.readout_h).zip(weights.iter().copied()).collect();
        let parts_c: Vec<(&Spectrum, f64)> = recs.iter().map(|r| &r.readout_c).zip(weights.iter().copied()).collect();
        let weighted_h = Spectrum::weighted_sum(&parts_h)?;
        let weighted_c = Spectrum::weighted_sum(&parts_c)?;
        runs.push(SetRun {
            plan,
            labeled,
            realized,
            records: recs,
            weighted_h,
            weighted_c,
        });
    }
    Ok(runs)
}

/// Outcome of the effective-pure preparation.
#[derive(Debug, Clone)]
pub struct EffectivePureRun {
    pub mode: ScheduleMode,
    pub schedule: ExperimentSchedule,
    pub plan: LabelingPlan,
    /// Labeling of the probed diagonals.
    pub result: EffectivePureResult,
    /// Same pipeline on thermal inputs.
    pub thermal_result: EffectivePureResult,
    /// Per-experiment `|q2|` relative to the thermal pipeline.
    pub enhancement: f64,
    /// Solved weights applied to the states the pulses actually acted on.
    pub realized: EffectivePureResult,
    pub records: Vec<ExperimentRecord>,
    pub weighted_h: Spectrum,
    pub weighted_c: Spectrum,
}

pub fn run_effective_pure_pipeline(cfg: &PipelineConfig, mode: ScheduleMode) -> Result<EffectivePureRun> {
    cfg.validate()?;
    let cal = Calibration::from_thermal_reference(&cfg.spin, &cfg.readout, cfg.probe_tip_deg)?;
    let (schedule, slots) = slots_for(mode, 1, cfg)?;
    let none = |_: usize| None;
    let run = run_slots(cfg, &cfg.spinoe, &cal, &slots, 1, &none)?.remove(0);
    let thermal = run_slots(cfg, &cfg.spinoe.thermal(), &cal, &slots, 1, &none)?.remove(0);
    let enhancement = enhancement_factor(&run.labeled, &thermal.labeled)?;
    Ok(EffectivePureRun {
        mode,
        schedule,
        plan: run.plan,
        result: run.labeled,
        thermal_result: thermal.labeled,
        enhancement,
        realized: run.realized,
        records: run.records,
        weighted_h: run.weighted_h,
        weighted_c: run.weighted_c,
    })
}

/// How the labeling sets of several Grover cases share samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionLayout {
    /// Each case gets its own labeling set scheduled in `mode`.
    SeparateSamples(ScheduleMode),
    /// One pumped sample for everything: slot `j = i·cases + k` runs
    /// permutation `i` of case `k`, `recovery_s` apart.
    SharedSampleRoundRobin,
}

#[derive(Debug, Clone)]
pub struct GroverOutcome {
    pub case: GroverCase,
    /// `None` when the sign pattern is ambiguous.
    pub decoded: Option<GroverCase>,
    pub ground: usize,
    pub labeling: EffectivePureResult,
    pub thermal_labeling: EffectivePureResult,
    pub weighted_h: Spectrum,
    pub weighted_c: Spectrum,
    pub peaks_h: PeakTable,
    pub peaks_c: PeakTable,
    /// Target line of each channel, per experiment, relative to the thermal
    /// pipeline.
    pub enhancement_h: f64,
    pub enhancement_c: f64,
    pub enhancement_mean: f64,
    pub records: Vec<ExperimentRecord>,
}

impl GroverOutcome {
    pub fn succeeded(&self) -> bool {
        self.decoded == Some(self.case)
    }
}

/// `[H p0, H p1, C p0, C p1]` line pattern of a unit population excess on
/// `x`: the H line whose partner matches the C bit carries the sign of the
/// H bit, and vice versa.
pub fn sign_template(x: GroverCase) -> [f64; 4] {
    let (h, c) = x.bits();
    let s = |bit: u8| if bit == 0 { 1.0 } else { -1.0 };
    let mut t = [0.0; 4];
    t[c as usize] = s(h);
    t[2 + h as usize] = s(c);
    t
}

/// Decodes the marked element from the weighted line integrals. `q2_sign`
/// flips the pattern when the pure part is negative.
pub fn decode_sign_pattern(peaks_h: &PeakTable, peaks_c: &PeakTable, q2_sign: f64) -> Result<GroverCase> {
    let [h0, h1] = peaks_h.integrals();
    let [c0, c1] = peaks_c.integrals();
    let obs = [h0, h1, c0, c1];
    let max = obs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 || q2_sign == 0.0 {
        return Err(Error::AmbiguousDecode("no signal".into()));
    }
    let mut scores: Vec<(f64, GroverCase)> = GroverCase::ALL
        .iter()
        .map(|&x| {
            let t = sign_template(x);
            (q2_sign.signum() * obs.iter().zip(t).map(|(o, t)| o * t).sum::<f64>(), x)
        })
        .collect();
    scores.sort_by(|a, b| b.0.total_cmp(&a.0));
    let margin = scores[0].0 - scores[1].0;
    if margin < 0.5 * max {
        return Err(Error::AmbiguousDecode(format!(
            "best {} leads {} by {margin:e}, below {:e}",
            scores[0].1,
            scores[1].1,
            0.5 * max
        )));
    }
    Ok(scores[0].1)
}

/// Per-experiment target-line integrals `(H, C)` with the expected sign
/// removed.
fn target_signal(case: GroverCase, peaks_h: &PeakTable, peaks_c: &PeakTable, weights: &[f64]) -> Result<(f64, f64)> {
    let sum: f64 = weights.iter().sum();
    if sum == 0.0 {
        return Err(Error::ZeroReference("weights sum to zero"));
    }
    let per = weights.len() as f64 / sum;
    let t = sign_template(case);
    let (h, c) = case.bits();
    let hv = peaks_h.lines[c as usize].integral * t[c as usize] * per;
    let cv = peaks_c.lines[h as usize].integral * t[2 + h as usize] * per;
    Ok((hv, cv))
}

fn ratio(value: f64, reference: f64, what: &'static str) -> Result<f64> {
    if reference == 0.0 {
        return Err(Error::ZeroReference(what));
    }
    Ok((value / reference).abs())
}

/// Runs the Grover search for each case in `cases`.
pub fn run_grover_session(cfg: &PipelineConfig, cases: &[GroverCase], layout: SessionLayout) -> Result<Vec<GroverOutcome>> {
    cfg.validate()?;
    if cases.is_empty() {
        return Err(Error::invalid("cases", "at least one case"));
    }
    let cal = Calibration::from_thermal_reference(&cfg.spin, &cfg.readout, cfg.probe_tip_deg)?;
    let (_, slots) = match layout {
        SessionLayout::SeparateSamples(mode) => slots_for(mode, cases.len(), cfg)?,
        SessionLayout::SharedSampleRoundRobin => round_robin_slots(cases.len(), cfg)?,
    };
    let circuits: Vec<Unitary> = cases.iter().map(|&c| grover_circuit(c)).collect();
    let alg = |set: usize| Some(circuits[set].clone());
    let runs = run_slots(cfg, &cfg.spinoe, &cal, &slots, cases.len(), &alg)?;
    let thermal = run_slots(cfg, &cfg.spinoe.thermal(), &cal, &slots, cases.len(), &alg)?;

    let mut out = Vec::with_capacity(cases.len());
    for ((run, th), &case) in runs.into_iter().zip(thermal).zip(cases) {
        let peaks_h = integrate_peaks(&run.weighted_h, &cfg.spin)?;
        let peaks_c = integrate_peaks(&run.weighted_c, &cfg.spin)?;
        let decoded = decode_sign_pattern(&peaks_h, &peaks_c, run.labeled.q2).ok();

        let (sh, sc) = target_signal(case, &peaks_h, &peaks_c, &run.labeled.weights)?;
        let th_h = integrate_peaks(&th.weighted_h, &cfg.spin)?;
        let th_c = integrate_peaks(&th.weighted_c, &cfg.spin)?;
        let (rh, rc) = target_signal(case, &th_h, &th_c, &th.labeled.weights)?;
        let enhancement_h = ratio(sh, rh, "thermal H target line is zero")?;
        let enhancement_c = ratio(sc, rc, "thermal C target line is zero")?;

        out.push(GroverOutcome {
            case,
            decoded,
            ground: run.plan.ground,
            labeling: run.labeled,
            thermal_labeling: th.labeled,
            weighted_h: run.weighted_h,
            weighted_c: run.weighted_c,
            peaks_h,
            peaks_c,
            enhancement_h,
            enhancement_c,
            enhancement_mean: 0.5 * (enhancement_h + enhancement_c),
            records: run.records,
        });
    }
    Ok(out)
}

/// One Grover case on its own labeling set.
pub fn run_grover_pipeline(cfg: &PipelineConfig, case: GroverCase, mode: ScheduleMode) -> Result<GroverOutcome> {
    Ok(run_grover_session(cfg, &[case], SessionLayout::SeparateSamples(mode))?.remove(0))
}
