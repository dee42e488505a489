//! Command-line driver for the hpqc simulator.
//!
//! Every command writes its artifacts into `--out` and prints a short
//! summary. Reports are pure functions of the configuration and flags; the
//! `run_id` field is a SHA-256 over both.

pub mod config;
pub mod svg;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use hpqc_core::experiments::GroverOutcome;
use hpqc_core::readout::{readout as readout_spectra, Calibration};
use hpqc_core::{
    enhanced_state, enhancement_at, integrate_peaks, probe, reconstruct_diagonal, run_effective_pure_pipeline,
    run_grover_session, thermal_state, EffectivePureResult, GroverCase, PeakTable, Spectrum,
};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Mode, RunConfig, Session};
use crate::svg::{line_chart, Series};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_DECODE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "hpqc", version, about = "Hyperpolarized two-qubit NMR quantum computer simulator")]
pub struct Cli {
    /// JSON file with flat snake_case keys; missing keys take defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    pub svg: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProbeState {
    Thermal,
    Enhanced,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enhancement-versus-time table.
    EnhanceTrace {
        /// Seconds; defaults to five Xe relaxation times.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, default_value_t = 30.0)]
        step: f64,
    },
    /// Effective-pure state preparation.
    Effpure {
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Two-qubit Grover search.
    Grover {
        #[arg(long, required_unless_present = "all", conflicts_with = "all", value_parser = parse_case)]
        target: Option<GroverCase>,
        /// Run all four cases.
        #[arg(long)]
        all: bool,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long, value_enum)]
        session: Option<Session>,
    },
    /// Small-tip probe of a single state and its reconstructed diagonal.
    Probe {
        #[arg(long, value_enum, default_value = "thermal")]
        state: ProbeState,
        /// Sample age in seconds for the enhanced state.
        #[arg(long, default_value_t = 0.0)]
        time: f64,
    },
}

fn parse_case(s: &str) -> Result<GroverCase, String> {
    s.parse().map_err(|e: hpqc_core::Error| e.to_string())
}

/// Exit code for an error raised while running a command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<hpqc_core::Error>() {
        Some(e) if e.is_solver_failure() => EXIT_SOLVER,
        Some(hpqc_core::Error::InconsistentPeaks { .. }) => EXIT_SOLVER,
        Some(hpqc_core::Error::AmbiguousDecode(_)) => EXIT_DECODE,
        Some(hpqc_core::Error::InvalidParameter { .. }) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    svg: bool,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_text(&self, name: &str, text: &str) -> anyhow::Result<()> {
        let p = self.path(name);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
    }

    fn create(&self, name: &str) -> anyhow::Result<BufWriter<File>> {
        let p = self.path(name);
        Ok(BufWriter::new(File::create(&p).with_context(|| format!("creating {}", p.display()))?))
    }

    fn write_spectrum(&self, name: &str, s: &Spectrum) -> anyhow::Result<()> {
        s.write_csv(self.create(&format!("{name}.csv"))?)?;
        if self.svg {
            let series = [
                Series { label: "real", points: s.freqs_hz.iter().zip(&s.values).map(|(f, v)| (*f, v.re)).collect() },
                Series { label: "imag", points: s.freqs_hz.iter().zip(&s.values).map(|(f, v)| (*f, v.im)).collect() },
            ];
            let title = format!("{name} ({})", s.channel.label());
            self.write_text(&format!("{name}.svg"), &line_chart(&title, "frequency (Hz)", "signal", &series))?;
        }
        Ok(())
    }

    fn write_peaks(&self, name: &str, p: &PeakTable) -> anyhow::Result<()> {
        p.write_csv(self.create(&format!("{name}.csv"))?)?;
        Ok(())
    }

    fn write_report(&self, name: &str, command: &str, args: Value, body: Value) -> anyhow::Result<String> {
        let id = run_id(command, &args, &self.cfg);
        let mut report = json!({
            "run_id": id,
            "command": command,
            "args": args,
            "config": self.cfg,
        });
        if let (Value::Object(r), Value::Object(b)) = (&mut report, body) {
            r.extend(b);
        }
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        self.write_text(name, &text)?;
        Ok(id)
    }
}

/// Deterministic identifier of a run: SHA-256 of the command, its arguments
/// and the effective configuration.
pub fn run_id(command: &str, args: &Value, cfg: &RunConfig) -> String {
    let canonical = json!({ "command": command, "args": args, "config": cfg }).to_string();
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn basis_label(i: usize) -> String {
    format!("{}{}", i >> 1, i & 1)
}

fn labeling_json(r: &EffectivePureResult) -> Value {
    json!({
        "ground": basis_label(r.ground),
        "weights": r.weights,
        "q1": r.q1,
        "q2": r.q2,
        "diagonal": r.diagonal(),
        "residual": r.residual,
        "residual_ok": r.residual_ok,
    })
}

fn peaks_json(p: &PeakTable) -> Value {
    json!(p.lines)
}

/// Runs the parsed command and returns the process exit code.
pub fn run(cli: Cli) -> anyhow::Result<i32> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let ctx = Ctx {
        cfg,
        out: cli.out,
        svg: cli.svg,
    };
    match cli.command {
        Command::EnhanceTrace { duration, step } => enhance_trace(&ctx, duration, step),
        Command::Effpure { mode } => effpure(ctx, mode),
        Command::Grover {
            target,
            all,
            mode,
            session,
        } => {
            let cases: Vec<GroverCase> = if all {
                GroverCase::ALL.to_vec()
            } else {
                target.into_iter().collect()
            };
            grover(ctx, &cases, mode, session)
        }
        Command::Probe { state, time } => probe_cmd(&ctx, state, time),
    }
}

fn enhance_trace(ctx: &Ctx, duration: Option<f64>, step: f64) -> anyhow::Result<i32> {
    let params = ctx.cfg.spinoe();
    params.validate()?;
    let duration = duration.unwrap_or(5.0 * params.t1_xe_s);
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(hpqc_core::Error::InvalidParameter {
            name: "duration",
            reason: format!("{duration} must be >= 0"),
        }
        .into());
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(hpqc_core::Error::InvalidParameter {
            name: "step",
            reason: format!("{step} must be > 0"),
        }
        .into());
    }
    let n = (duration / step + 1e-9).floor() as usize;
    let mut rows = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * step;
        rows.push((t, enhancement_at(&params, t)?));
    }
    let mut wtr = csv::Writer::from_writer(ctx.create("enhance_trace.csv")?);
    wtr.write_record(["t_s", "eps_h", "eps_c"])?;
    for (t, e) in &rows {
        wtr.write_record([t.to_string(), e.h.to_string(), e.c.to_string()])?;
    }
    wtr.flush()?;
    if ctx.svg {
        let series = [
            Series { label: "13C", points: rows.iter().map(|(t, e)| (*t, e.c)).collect() },
            Series { label: "1H", points: rows.iter().map(|(t, e)| (*t, e.h)).collect() },
        ];
        ctx.write_text(
            "enhance_trace.svg",
            &line_chart("enhancement", "time (s)", "enhancement", &series),
        )?;
    }
    println!("wrote {} rows to {}", rows.len(), ctx.path("enhance_trace.csv").display());
    Ok(EXIT_OK)
}

fn effpure(mut ctx: Ctx, mode: Option<Mode>) -> anyhow::Result<i32> {
    if let Some(m) = mode {
        ctx.cfg.mode = m;
    }
    let pipeline = ctx.cfg.pipeline()?;
    let run = run_effective_pure_pipeline(&pipeline, ctx.cfg.mode.into())?;

    ctx.write_spectrum("effpure_h", &run.weighted_h)?;
    ctx.write_spectrum("effpure_c", &run.weighted_c)?;
    ctx.write_peaks("effpure_peaks_h", &integrate_peaks(&run.weighted_h, &pipeline.spin)?)?;
    ctx.write_peaks("effpure_peaks_c", &integrate_peaks(&run.weighted_c, &pipeline.spin)?)?;
    for r in &run.records {
        ctx.write_spectrum(&format!("effpure_exp{}_h", r.index + 1), &r.readout_h)?;
        ctx.write_spectrum(&format!("effpure_exp{}_c", r.index + 1), &r.readout_c)?;
    }
    let body = json!({
        "schedule": run.schedule,
        "labeling": labeling_json(&run.result),
        "thermal_labeling": labeling_json(&run.thermal_result),
        "realized": labeling_json(&run.realized),
        "enhancement": run.enhancement,
        "records": run.records,
    });
    let id = ctx.write_report("effpure_report.json", "effpure", json!({ "mode": ctx.cfg.mode }), body)?;
    println!(
        "run {}: ground {} weights {:?} enhancement {:.6}",
        &id[..12],
        basis_label(run.result.ground),
        run.result.weights,
        run.enhancement
    );
    Ok(EXIT_OK)
}

fn grover_case_json(o: &GroverOutcome) -> Value {
    json!({
        "target": o.case,
        "decoded": o.decoded,
        "success": o.succeeded(),
        "labeling": labeling_json(&o.labeling),
        "thermal_labeling": labeling_json(&o.thermal_labeling),
        "peaks_h": peaks_json(&o.peaks_h),
        "peaks_c": peaks_json(&o.peaks_c),
        "enhancement_h": o.enhancement_h,
        "enhancement_c": o.enhancement_c,
        "enhancement_mean": o.enhancement_mean,
        "records": o.records,
    })
}

fn grover(mut ctx: Ctx, cases: &[GroverCase], mode: Option<Mode>, session: Option<Session>) -> anyhow::Result<i32> {
    if let Some(m) = mode {
        ctx.cfg.mode = m;
    }
    if let Some(s) = session {
        ctx.cfg.session = s;
    }
    let pipeline = ctx.cfg.pipeline()?;
    let outcomes = run_grover_session(&pipeline, cases, ctx.cfg.layout())?;
    for o in &outcomes {
        ctx.write_spectrum(&format!("grover_{}_h", o.case), &o.weighted_h)?;
        ctx.write_spectrum(&format!("grover_{}_c", o.case), &o.weighted_c)?;
        ctx.write_peaks(&format!("grover_{}_peaks_h", o.case), &o.peaks_h)?;
        ctx.write_peaks(&format!("grover_{}_peaks_c", o.case), &o.peaks_c)?;
    }
    let all_ok = outcomes.iter().all(GroverOutcome::succeeded);
    let args = json!({
        "targets": cases,
        "mode": ctx.cfg.mode,
        "session": ctx.cfg.session,
    });
    let body = json!({
        "cases": outcomes.iter().map(grover_case_json).collect::<Vec<_>>(),
        "all_decoded": all_ok,
    });
    let id = ctx.write_report("grover_report.json", "grover", args, body)?;
    println!("run {}", &id[..12]);
    for o in &outcomes {
        let decoded = o.decoded.map_or("ambiguous".to_string(), |d| d.to_string());
        println!(
            "target {} decoded {decoded} enhancement H {:.3} C {:.3}",
            o.case, o.enhancement_h, o.enhancement_c
        );
    }
    Ok(if all_ok { EXIT_OK } else { EXIT_DECODE })
}

fn probe_cmd(ctx: &Ctx, state: ProbeState, time: f64) -> anyhow::Result<i32> {
    let pipeline = ctx.cfg.pipeline()?;
    let spin = pipeline.spin;
    let rho = match state {
        ProbeState::Thermal => thermal_state(&spin),
        ProbeState::Enhanced => {
            let e = enhancement_at(&pipeline.spinoe, time)?;
            enhanced_state(&spin, e.h, e.c)
        }
    };
    let cal = Calibration::from_thermal_reference(&spin, &pipeline.readout, pipeline.probe_tip_deg)?;
    let (h, c) = probe(&rho, &spin, &pipeline.readout, pipeline.probe_tip_deg)?;
    let peaks_h = integrate_peaks(&h, &spin)?;
    let peaks_c = integrate_peaks(&c, &spin)?;
    let reconstructed = reconstruct_diagonal(&peaks_h, &peaks_c, pipeline.probe_tip_deg, &cal)?;
    let truth = hpqc_core::deviation_decompose(&rho)?.diagonal();
    let (full_h, full_c) = readout_spectra(&rho, &spin, &pipeline.readout)?;

    ctx.write_spectrum("probe_h", &h)?;
    ctx.write_spectrum("probe_c", &c)?;
    ctx.write_spectrum("readout_h", &full_h)?;
    ctx.write_spectrum("readout_c", &full_c)?;
    ctx.write_peaks("probe_peaks_h", &peaks_h)?;
    ctx.write_peaks("probe_peaks_c", &peaks_c)?;
    let state_name = match state {
        ProbeState::Thermal => "thermal",
        ProbeState::Enhanced => "enhanced",
    };
    let body = json!({
        "true_diagonal": truth,
        "reconstructed_diagonal": reconstructed,
        "peaks_h": peaks_json(&peaks_h),
        "peaks_c": peaks_json(&peaks_c),
        "calibration": cal,
    });
    let id = ctx.write_report(
        "probe_report.json",
        "probe",
        json!({ "state": state_name, "time_s": time }),
        body,
    )?;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "run {}: reconstructed {reconstructed:?}", &id[..12])?;
    Ok(EXIT_OK)
}
