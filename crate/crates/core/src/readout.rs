//! Simulated NMR detection.
//!
//! A channel observes the single-quantum coherences of its nucleus. For the
//! ¹H channel the line with the ¹³C partner in `|c⟩` has complex amplitude
//! `2·ρ[(1c),(0c)]`; J coupling places it at `+J/2` for partner `|0⟩` and at
//! `−J/2` for partner `|1⟩`. The ¹³C channel is the mirror image. With the
//! receiver phase used here, a 90° y pulse on a spin whose `|0⟩` population
//! exceeds its `|1⟩` population yields a positive absorption line.
//!
//! Probing uses a small simultaneous y pulse of tip `θ` on both spins. The
//! line amplitude for observed spin population difference `Δ_p` (partner in
//! `|p⟩`) is then
//!
//! ```text
//! A_p = sin θ · (cos²(θ/2)·Δ_p + sin²(θ/2)·Δ_p̄)
//! ```
//!
//! the second term coming from the partner spin being tipped as well.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::spin::{pulse_unitary, thermal_state, Nucleus, PulseSpec, PulseTarget, SpinSystemConfig};
use crate::state::{apply_unitary, deviation_decompose, DensityMatrix};
use crate::Diagonal;

/// Largest probe tip for which the linear-response contract is claimed.
pub const MAX_PROBE_TIP_DEG: f64 = 25.0;
/// Reconstruction residual limit relative to the largest line amplitude.
pub const RECONSTRUCTION_TOL: f64 = 0.05;
pub const MIN_FID_POINTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutConfig {
    pub n_points: usize,
    pub dwell_s: f64,
    /// Standard deviation of additive complex Gaussian noise per FID sample,
    /// per quadrature. Zero disables noise.
    pub noise_amp: f64,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        Self {
            n_points: 4096,
            dwell_s: 1e-3,
            noise_amp: 0.0,
        }
    }
}

impl ReadoutConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < MIN_FID_POINTS || !self.n_points.is_multiple_of(2) {
            return Err(Error::invalid(
                "n_points",
                format!("{} must be even and >= {MIN_FID_POINTS}", self.n_points),
            ));
        }
        crate::spin::positive("dwell_s", self.dwell_s)?;
        if !(self.noise_amp >= 0.0 && self.noise_amp.is_finite()) {
            return Err(Error::invalid("noise_amp", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fid {
    pub channel: Nucleus,
    pub dt: f64,
    pub samples: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub channel: Nucleus,
    /// Hz relative to the channel's Larmor frequency, ascending.
    pub freqs_hz: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl Spectrum {
    pub fn bin_width(&self) -> f64 {
        self.freqs_hz[1] - self.freqs_hz[0]
    }

    /// `Σ w_i · s_i` over spectra of the same channel and axis.
    pub fn weighted_sum(parts: &[(&Spectrum, f64)]) -> Result<Spectrum> {
        let (first, _) = parts
            .first()
            .ok_or_else(|| Error::invalid("parts", "empty"))?;
        let mut values = vec![Complex64::new(0.0, 0.0); first.values.len()];
        for (s, w) in parts {
            if s.channel != first.channel || s.values.len() != values.len() {
                return Err(Error::DimensionMismatch {
                    expected: values.len(),
                    actual: s.values.len(),
                });
            }
            for (acc, v) in values.iter_mut().zip(&s.values) {
                *acc += v * *w;
            }
        }
        Ok(Spectrum {
            channel: first.channel,
            freqs_hz: first.freqs_hz.clone(),
            values,
        })
    }

    /// CSV with header `freq_hz,real,imag`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["freq_hz", "real", "imag"])?;
        for (f, v) in self.freqs_hz.iter().zip(&self.values) {
            wtr.write_record([f.to_string(), v.re.to_string(), v.im.to_string()])?;
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakLine {
    pub frequency_hz: f64,
    pub integral: f64,
    /// State of the coupled partner spin for this doublet line.
    pub partner_state: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakTable {
    pub channel: Nucleus,
    /// `[+J/2 (partner 0), −J/2 (partner 1)]`.
    pub lines: [PeakLine; 2],
}

impl PeakTable {
    pub fn integrals(&self) -> [f64; 2] {
        [self.lines[0].integral, self.lines[1].integral]
    }

    /// CSV with header `freq_hz,integral,partner_state`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["freq_hz", "integral", "partner_state"])?;
        for l in &self.lines {
            wtr.write_record([
                l.frequency_hz.to_string(),
                l.integral.to_string(),
                l.partner_state.to_string(),
            ])?;
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Line frequency for partner state `p`.
pub fn line_frequency(spin: &SpinSystemConfig, partner: usize) -> f64 {
    if partner == 0 {
        spin.j_coupling_hz / 2.0
    } else {
        -spin.j_coupling_hz / 2.0
    }
}

/// Complex line amplitudes `[partner 0, partner 1]` observed on `channel`.
pub fn line_amplitudes(rho: &DensityMatrix, channel: Nucleus) -> [Complex64; 2] {
    let mut out = [Complex64::new(0.0, 0.0); 2];
    for (p, a) in out.iter_mut().enumerate() {
        let (row, col) = match channel {
            Nucleus::H => (2 + p, p),
            Nucleus::C => (2 * p + 1, 2 * p),
        };
        *a = rho.get(row, col) * 2.0;
    }
    out
}

pub fn synthesize_fid(
    rho_after_pulse: &DensityMatrix,
    spin: &SpinSystemConfig,
    channel: Nucleus,
    n_samples: usize,
    dt: f64,
) -> Result<Fid> {
    if rho_after_pulse.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: rho_after_pulse.dim(),
        });
    }
    if n_samples < MIN_FID_POINTS {
        return Err(Error::invalid("n_samples", format!("{n_samples} < {MIN_FID_POINTS}")));
    }
    crate::spin::positive("dt", dt)?;
    let amps = line_amplitudes(rho_after_pulse, channel);
    let lines: Vec<(Complex64, f64)> = amps
        .iter()
        .enumerate()
        .map(|(p, a)| (*a, line_frequency(spin, p)))
        .collect();
    Ok(Fid {
        channel,
        dt,
        samples: lines_fid(&lines, spin.t2_s, n_samples, dt),
    })
}

/// Sum of decaying complex exponentials `A·exp(i2πft)·exp(−t/T2)`.
pub fn lines_fid(lines: &[(Complex64, f64)], t2_s: f64, n: usize, dt: f64) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            let decay = (-t / t2_s).exp();
            lines
                .iter()
                .map(|(a, f)| a * Complex64::from_polar(decay, 2.0 * std::f64::consts::PI * f * t))
                .sum()
        })
        .collect()
}

pub fn add_noise<R: Rng + ?Sized>(fid: &mut Fid, amplitude: f64, rng: &mut R) {
    if amplitude == 0.0 {
        return;
    }
    let normal = Normal::new(0.0, amplitude).expect("finite noise amplitude");
    for s in &mut fid.samples {
        *s += Complex64::new(normal.sample(rng), normal.sample(rng));
    }
}

fn forward_fft(n: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_forward(n)
}

/// Discrete Fourier transform `S(f_m) = dt·Σ_k s_k e^{−i2πmk/N}` with the
/// first sample halved, reordered to ascending frequency. A decaying line of
/// positive real amplitude gives a positive absorption Lorentzian.
pub fn spectrum(fid: &Fid) -> Spectrum {
    let n = fid.samples.len();
    let mut buf = fid.samples.clone();
    if let Some(first) = buf.first_mut() {
        *first *= 0.5;
    }
    forward_fft(n).process(&mut buf);
    let half = n / 2;
    let df = 1.0 / (n as f64 * fid.dt);
    let freqs_hz = (0..n).map(|k| (k as f64 - half as f64) * df).collect();
    let values = (0..n).map(|k| buf[(k + half) % n] * fid.dt).collect();
    Spectrum {
        channel: fid.channel,
        freqs_hz,
        values,
    }
}

fn window_integral(spec: &Spectrum, center: f64, half_width: f64) -> f64 {
    let df = spec.bin_width();
    spec.freqs_hz
        .iter()
        .zip(&spec.values)
        .filter(|(f, _)| (**f - center).abs() <= half_width)
        .map(|(_, v)| v.re * df)
        .sum()
}

/// Integrates the real spectrum over windows of width `J/2` centred on
/// `±J/2`.
pub fn integrate_peaks(spec: &Spectrum, spin: &SpinSystemConfig) -> Result<PeakTable> {
    let j = spin.j_coupling_hz;
    let half_width = j / 4.0;
    let df = spec.bin_width();
    let nyquist = spec.freqs_hz.last().copied().unwrap_or(0.0).min(-spec.freqs_hz[0]);
    if half_width < 2.0 * df {
        return Err(Error::ResolutionTooCoarse(format!(
            "window half-width {half_width} Hz spans fewer than two {df} Hz bins"
        )));
    }
    if 0.75 * j >= nyquist {
        return Err(Error::ResolutionTooCoarse(format!(
            "windows reach ±{} Hz beyond the ±{nyquist} Hz spectral window",
            0.75 * j
        )));
    }
    let mut lines = [PeakLine {
        frequency_hz: 0.0,
        integral: 0.0,
        partner_state: 0,
    }; 2];
    for (p, line) in lines.iter_mut().enumerate() {
        let f = line_frequency(spin, p);
        *line = PeakLine {
            frequency_hz: f,
            integral: window_integral(spec, f, half_width),
            partner_state: p as u8,
        };
    }
    Ok(PeakTable {
        channel: spec.channel,
        lines,
    })
}

/// Frequencies of local maxima of `|Re S|` above `rel_threshold` of the
/// largest value.
pub fn detect_lines(spec: &Spectrum, rel_threshold: f64) -> Vec<f64> {
    let re: Vec<f64> = spec.values.iter().map(|v| v.re.abs()).collect();
    let max = re.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Vec::new();
    }
    (1..re.len() - 1)
        .filter(|&k| re[k] >= rel_threshold * max && re[k] > re[k - 1] && re[k] >= re[k + 1])
        .map(|k| spec.freqs_hz[k])
        .collect()
}

fn detect<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    spin: &SpinSystemConfig,
    readout: &ReadoutConfig,
    channel: Nucleus,
    rng: Option<&mut R>,
) -> Result<Spectrum> {
    let mut fid = synthesize_fid(rho, spin, channel, readout.n_points, readout.dwell_s)?;
    if let Some(rng) = rng {
        add_noise(&mut fid, readout.noise_amp, rng);
    }
    Ok(spectrum(&fid))
}

fn check_probe_tip(tip_deg: f64) -> Result<()> {
    if !(tip_deg > 0.0 && tip_deg <= MAX_PROBE_TIP_DEG) {
        return Err(Error::invalid(
            "tip_deg",
            format!("probe tip {tip_deg}° outside (0, {MAX_PROBE_TIP_DEG}]"),
        ));
    }
    Ok(())
}

fn probe_impl<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    spin: &SpinSystemConfig,
    readout: &ReadoutConfig,
    tip_deg: f64,
    mut rng: Option<&mut R>,
) -> Result<(Spectrum, Spectrum)> {
    check_probe_tip(tip_deg)?;
    readout.validate()?;
    let pulse = PulseSpec::new(PulseTarget::Both, tip_deg, 90.0)?;
    let tipped = apply_unitary(rho, &pulse_unitary(&pulse))?;
    let h = detect(&tipped, spin, readout, Nucleus::H, rng.as_deref_mut())?;
    let c = detect(&tipped, spin, readout, Nucleus::C, rng)?;
    Ok((h, c))
}

/// Simultaneous small-tip y pulses on both spins; returns `(¹H, ¹³C)`
/// spectra. Noiseless.
pub fn probe(
    rho: &DensityMatrix,
    spin: &SpinSystemConfig,
    readout: &ReadoutConfig,
    tip_deg: f64,
) -> Result<(Spectrum, Spectrum)> {
    probe_impl::<rand::rngs::ThreadRng>(rho, spin, readout, tip_deg, None)
}

/// [`probe`] with receiver noise of amplitude `readout.noise_amp`.
pub fn probe_noisy<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    spin: &SpinSystemConfig,
    readout: &ReadoutConfig,
    tip_deg: f64,
    rng: &mut R,
) -> Result<(Spectrum, Spectrum)> {
    probe_impl(rho, spin, readout, tip_deg, Some(rng))
}

fn readout_impl<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    spin: &SpinSystemConfig,
    readout: &ReadoutConfig,
    mut rng: Option<&mut R>,
) -> Result<(Spectrum, Spectrum)> {
    readout.validate()?;
    let mut out = Vec::with_capacity(2);
    for channel in [Nucleus::H, Nucleus::C] {
        let pulse = PulseSpec::new(channel.into(), 90.0, 90.0)?;
        let tipped = apply_unitary(rho, &pulse_unitary(&pulse))?;
        out.push(detect(&tipped, spin, readout, channel, rng.as_deref_mut())?);
    }
    let c = out.pop().expect("two channels");
    let h = out.pop().expect("two channels");
    Ok((h, c))
}

/// Output readout: a selective 90° y pulse per channel applied to separate
/// copies of `rho`, so each spectrum shows its nucleus' population
/// differences without mixing from the partner. Returns `(¹H, ¹³C)`.
pub fn readout(
    rho: &DensityMatrix,
    spin: &SpinSystemConfig,
    readout: &ReadoutConfig,
) -> Result<(Spectrum, Spectrum)> {
    readout_impl::<rand::rngs::ThreadRng>(rho, spin, readout, None)
}

pub fn readout_noisy<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    spin: &SpinSystemConfig,
    cfg: &ReadoutConfig,
    rng: &mut R,
) -> Result<(Spectrum, Spectrum)> {
    readout_impl(rho, spin, cfg, Some(rng))
}

/// Rows mapping a deviation diagonal to probe line amplitudes, ordered
/// `[H p0, H p1, C p0, C p1]`.
pub fn probe_response_rows(tip_deg: f64) -> [[f64; 4]; 4] {
    let theta = tip_deg.to_radians();
    let s = theta.sin();
    let keep = (theta / 2.0).cos().powi(2);
    let mix = (theta / 2.0).sin().powi(2);
    let d = |h: usize, c: usize| 2 * h + c;
    let mut rows = [[0.0; 4]; 4];
    for p in 0..2 {
        let q = 1 - p;
        // ¹H line, partner C in |p⟩: Δ_p = d(0,p) − d(1,p)
        rows[p][d(0, p)] += s * keep;
        rows[p][d(1, p)] -= s * keep;
        rows[p][d(0, q)] += s * mix;
        rows[p][d(1, q)] -= s * mix;
        // ¹³C line, partner H in |p⟩: Δ_p = d(p,0) − d(p,1)
        rows[2 + p][d(p, 0)] += s * keep;
        rows[2 + p][d(p, 1)] -= s * keep;
        rows[2 + p][d(q, 0)] += s * mix;
        rows[2 + p][d(q, 1)] -= s * mix;
    }
    rows
}

/// Window integrals produced by unit-amplitude lines: `r[i][j]` is the
/// integral in window `i` from a line at position `j`.
pub fn line_response(spin: &SpinSystemConfig, readout: &ReadoutConfig) -> Result<[[f64; 2]; 2]> {
    readout.validate()?;
    let mut r = [[0.0; 2]; 2];
    for j in 0..2 {
        let samples = lines_fid(
            &[(Complex64::new(1.0, 0.0), line_frequency(spin, j))],
            spin.t2_s,
            readout.n_points,
            readout.dwell_s,
        );
        let spec = spectrum(&Fid {
            channel: Nucleus::H,
            dt: readout.dwell_s,
            samples,
        });
        let table = integrate_peaks(&spec, spin)?;
        for i in 0..2 {
            r[i][j] = table.lines[i].integral;
        }
    }
    Ok(r)
}

fn unmix(r: &[[f64; 2]; 2], integrals: [f64; 2]) -> Result<[f64; 2]> {
    let det = r[0][0] * r[1][1] - r[0][1] * r[1][0];
    if det.abs() < 1e-12 * (r[0][0].abs() + r[1][1].abs()).powi(2) {
        return Err(Error::ResolutionTooCoarse("line response is singular".into()));
    }
    Ok([
        (r[1][1] * integrals[0] - r[0][1] * integrals[1]) / det,
        (r[0][0] * integrals[1] - r[1][0] * integrals[0]) / det,
    ])
}

/// Receiver calibration fixed once against a probe of a known thermal state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub tip_deg: f64,
    pub scale_h: f64,
    pub scale_c: f64,
    /// Window cross-talk between the two doublet lines, see [`line_response`].
    pub response: [[f64; 2]; 2],
}

impl Calibration {
    /// Calibrates against a noiseless probe of the thermal state.
    pub fn from_thermal_reference(spin: &SpinSystemConfig, readout: &ReadoutConfig, tip_deg: f64) -> Result<Self> {
        let reference = thermal_state(spin);
        let (h, c) = probe(&reference, spin, readout, tip_deg)?;
        let known = deviation_diagonal(&reference)?;
        Self::from_reference(
            &known,
            &integrate_peaks(&h, spin)?,
            &integrate_peaks(&c, spin)?,
            tip_deg,
            line_response(spin, readout)?,
        )
    }

    /// Least-squares scale per channel mapping model amplitudes of `known`
    /// onto the observed ones.
    pub fn from_reference(
        known: &Diagonal,
        peaks_h: &PeakTable,
        peaks_c: &PeakTable,
        tip_deg: f64,
        response: [[f64; 2]; 2],
    ) -> Result<Self> {
        check_probe_tip(tip_deg)?;
        let rows = probe_response_rows(tip_deg);
        let model: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().zip(known).map(|(a, b)| a * b).sum())
            .collect();
        let scale = |obs: [f64; 2], m: &[f64]| -> Result<f64> {
            let num = obs[0] * m[0] + obs[1] * m[1];
            let den = m[0] * m[0] + m[1] * m[1];
            if den == 0.0 || num == 0.0 {
                return Err(Error::ZeroReference("calibration reference shows no signal"));
            }
            Ok(num / den)
        };
        let obs_h = unmix(&response, peaks_h.integrals())?;
        let obs_c = unmix(&response, peaks_c.integrals())?;
        Ok(Self {
            tip_deg,
            scale_h: scale(obs_h, &model[0..2])?,
            scale_c: scale(obs_c, &model[2..4])?,
            response,
        })
    }
}

fn deviation_diagonal(rho: &DensityMatrix) -> Result<Diagonal> {
    let d = deviation_decompose(rho)?.diagonal();
    Ok([d[0], d[1], d[2], d[3]])
}

/// Recovers the deviation diagonal from one probe run: least squares over the
/// four line relations plus the traceless constraint.
pub fn reconstruct_diagonal(
    peaks_h: &PeakTable,
    peaks_c: &PeakTable,
    tip_deg: f64,
    cal: &Calibration,
) -> Result<Diagonal> {
    check_probe_tip(tip_deg)?;
    let h = unmix(&cal.response, peaks_h.integrals())?;
    let c = unmix(&cal.response, peaks_c.integrals())?;
    let amps = [h[0] / cal.scale_h, h[1] / cal.scale_h, c[0] / cal.scale_c, c[1] / cal.scale_c];
    let max_amp = amps.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_amp == 0.0 {
        return Ok([0.0; 4]);
    }
    let s = tip_deg.to_radians().sin();
    let mut rows: Vec<Vec<f64>> = probe_response_rows(tip_deg).iter().map(|r| r.to_vec()).collect();
    rows.push(vec![s; 4]);
    let mut rhs = amps.to_vec();
    rhs.push(0.0);
    let (x, residual) = linalg::least_squares(&rows, &rhs)
        .map_err(|_| Error::ResolutionTooCoarse("probe response rank deficient".into()))?;
    let limit = RECONSTRUCTION_TOL * max_amp;
    if residual > limit {
        return Err(Error::InconsistentPeaks { residual, limit });
    }
    Ok([x[0], x[1], x[2], x[3]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::enhanced_state;

    fn spin() -> SpinSystemConfig {
        SpinSystemConfig::default()
    }

    #[test]
    fn diagonal_state_has_silent_fid() {
        let rho = thermal_state(&spin());
        let fid = synthesize_fid(&rho, &spin(), Nucleus::H, 256, 1e-3).unwrap();
        assert!(fid.samples.iter().all(|s| s.norm() == 0.0));
        assert!(spectrum(&fid).values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn fid_length_validated() {
        let rho = thermal_state(&spin());
        assert!(synthesize_fid(&rho, &spin(), Nucleus::H, 100, 1e-3).is_err());
    }

    #[test]
    fn undamped_single_line_has_constant_modulus() {
        let s = lines_fid(&[(Complex64::new(0.7, 0.0), 107.5)], f64::INFINITY, 512, 1e-3);
        assert!(s.iter().all(|z| (z.norm() - 0.7).abs() < 1e-12));
    }

    #[test]
    fn spectrum_is_linear() {
        let a = Fid {
            channel: Nucleus::C,
            dt: 1e-3,
            samples: lines_fid(&[(Complex64::new(1.0, 0.2), 50.0)], 0.3, 512, 1e-3),
        };
        let b = Fid {
            samples: lines_fid(&[(Complex64::new(-0.4, 0.0), -80.0)], 0.5, 512, 1e-3),
            ..a.clone()
        };
        let sum = Fid {
            samples: a.samples.iter().zip(&b.samples).map(|(x, y)| x + y).collect(),
            ..a.clone()
        };
        let expected = Spectrum::weighted_sum(&[(&spectrum(&a), 1.0), (&spectrum(&b), 1.0)]).unwrap();
        for (x, y) in spectrum(&sum).values.iter().zip(&expected.values) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn probe_rejects_large_tips() {
        let rho = thermal_state(&spin());
        assert!(probe(&rho, &spin(), &ReadoutConfig::default(), 30.0).is_err());
        assert!(probe(&rho, &spin(), &ReadoutConfig::default(), 0.0).is_err());
    }

    #[test]
    fn probe_of_maximally_mixed_is_silent() {
        let rho = DensityMatrix::maximally_mixed(4).unwrap();
        let (h, c) = probe(&rho, &spin(), &ReadoutConfig::default(), 15.0).unwrap();
        for s in [h, c] {
            let t = integrate_peaks(&s, &spin()).unwrap();
            assert!(t.integrals().iter().all(|v| v.abs() < 1e-15));
        }
    }

    #[test]
    fn coarse_resolution_rejected() {
        let readout = ReadoutConfig {
            n_points: 256,
            dwell_s: 4e-3, // ±125 Hz window, lines need ±161 Hz
            noise_amp: 0.0,
        };
        let (h, _) = readout_spectra(&readout);
        assert!(matches!(
            integrate_peaks(&h, &spin()),
            Err(Error::ResolutionTooCoarse(_))
        ));
    }

    fn readout_spectra(cfg: &ReadoutConfig) -> (Spectrum, Spectrum) {
        readout(&thermal_state(&spin()), &spin(), cfg).unwrap()
    }

    #[test]
    fn zero_peaks_reconstruct_to_zero() {
        let cal = Calibration::from_thermal_reference(&spin(), &ReadoutConfig::default(), 15.0).unwrap();
        let zero = PeakTable {
            channel: Nucleus::H,
            lines: [
                PeakLine { frequency_hz: 107.5, integral: 0.0, partner_state: 0 },
                PeakLine { frequency_hz: -107.5, integral: 0.0, partner_state: 1 },
            ],
        };
        assert_eq!(reconstruct_diagonal(&zero, &zero, 15.0, &cal).unwrap(), [0.0; 4]);
    }

    #[test]
    fn inconsistent_peaks_flagged() {
        let cal = Calibration::from_thermal_reference(&spin(), &ReadoutConfig::default(), 15.0).unwrap();
        let mk = |a: f64, b: f64, ch| PeakTable {
            channel: ch,
            lines: [
                PeakLine { frequency_hz: 107.5, integral: a, partner_state: 0 },
                PeakLine { frequency_hz: -107.5, integral: b, partner_state: 1 },
            ],
        };
        // H doublet difference contradicts the C doublet difference
        let res = reconstruct_diagonal(&mk(1.0, -1.0, Nucleus::H), &mk(1.0, 1.0, Nucleus::C), 15.0, &cal);
        assert!(matches!(res, Err(Error::InconsistentPeaks { .. })), "{res:?}");
    }

    #[test]
    fn thermal_calibration_identity() {
        let readout = ReadoutConfig::default();
        let cal = Calibration::from_thermal_reference(&spin(), &readout, 15.0).unwrap();
        let (h, c) = probe(&thermal_state(&spin()), &spin(), &readout, 15.0).unwrap();
        let d = reconstruct_diagonal(
            &integrate_peaks(&h, &spin()).unwrap(),
            &integrate_peaks(&c, &spin()).unwrap(),
            15.0,
            &cal,
        )
        .unwrap();
        let expected = [2.5, 1.5, -1.5, -2.5];
        for (a, b) in d.iter().zip(expected) {
            assert!((a - b).abs() < 1e-10, "{d:?}");
        }
    }

    #[test]
    fn enhanced_round_trip() {
        let readout = ReadoutConfig::default();
        let cal = Calibration::from_thermal_reference(&spin(), &readout, 12.0).unwrap();
        let rho = enhanced_state(&spin(), -11.0, 18.0);
        let (h, c) = probe(&rho, &spin(), &readout, 12.0).unwrap();
        let d = reconstruct_diagonal(
            &integrate_peaks(&h, &spin()).unwrap(),
            &integrate_peaks(&c, &spin()).unwrap(),
            12.0,
            &cal,
        )
        .unwrap();
        let expected = [-13.0, -31.0, 31.0, 13.0];
        for (a, b) in d.iter().zip(expected) {
            assert!((a - b).abs() < 1e-9, "{d:?}");
        }
    }

    #[test]
    fn csv_headers() {
        let (h, _) = readout_spectra(&ReadoutConfig::default());
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("freq_hz,real,imag\n"));
        assert_eq!(text.lines().count(), 4097);

        let table = integrate_peaks(&h, &spin()).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("freq_hz,integral,partner_state\n107.5,"));
    }
}
