//! The {¹H, ¹³C} spin pair: initial states, RF pulses, J evolution and
//! pulse-level gates.
//!
//! The rotating frame sits on both Larmor frequencies, so free evolution is
//! pure J coupling. Pulses are ideal and instantaneous.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permutation::{check_ground, permutation_map, PermutationId};
use crate::state::{CMatrix, DensityMatrix, Unitary};
use crate::Diagonal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinSystemConfig {
    /// γ_H / γ_C.
    pub gamma_ratio: f64,
    /// J_CH in Hz.
    pub j_coupling_hz: f64,
    /// Transverse decay time used when synthesizing FIDs, seconds.
    pub t2_s: f64,
    /// Overall scale `u` of the thermal deviation.
    pub polarization_unit: f64,
}

impl Default for SpinSystemConfig {
    fn default() -> Self {
        Self {
            gamma_ratio: 4.0,
            j_coupling_hz: 215.0,
            t2_s: 0.5,
            polarization_unit: 1.0,
        }
    }
}

impl SpinSystemConfig {
    pub fn validate(&self) -> Result<()> {
        positive("gamma_ratio", self.gamma_ratio)?;
        positive("j_coupling_hz", self.j_coupling_hz)?;
        positive("t2_s", self.t2_s)?;
        if !self.polarization_unit.is_finite() {
            return Err(Error::invalid("polarization_unit", "must be finite"));
        }
        Ok(())
    }
}

pub(crate) fn positive(name: &'static str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::invalid(name, format!("must be positive, got {v}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Nucleus {
    H,
    C,
}

impl Nucleus {
    pub fn label(self) -> &'static str {
        match self {
            Nucleus::H => "H",
            Nucleus::C => "C",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PulseTarget {
    H,
    C,
    Both,
}

impl From<Nucleus> for PulseTarget {
    fn from(n: Nucleus) -> Self {
        match n {
            Nucleus::H => PulseTarget::H,
            Nucleus::C => PulseTarget::C,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub target: PulseTarget,
    pub tip_deg: f64,
    /// Rotation-axis phase in the transverse plane: 0° = x, 90° = y.
    pub phase_deg: f64,
}

impl PulseSpec {
    pub fn new(target: PulseTarget, tip_deg: f64, phase_deg: f64) -> Result<Self> {
        if !(tip_deg > 0.0 && tip_deg <= 180.0) {
            return Err(Error::invalid("tip_deg", format!("{tip_deg} not in (0, 180]")));
        }
        if !phase_deg.is_finite() {
            return Err(Error::invalid("phase_deg", "must be finite"));
        }
        Ok(Self {
            target,
            tip_deg,
            phase_deg,
        })
    }
}

/// Spin-z eigenvalue sign of bit `b`: +1 for `|0⟩` (up), -1 for `|1⟩`.
fn sign(bit: usize) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Deviation diagonal `(u/2)·(ε_H·γr·s_H + ε_C·s_C)` in `|HC⟩` order.
pub fn enhanced_deviation(cfg: &SpinSystemConfig, eps_h: f64, eps_c: f64) -> Diagonal {
    let half_u = cfg.polarization_unit / 2.0;
    let h = eps_h * cfg.gamma_ratio;
    let mut out = [0.0; 4];
    for (i, d) in out.iter_mut().enumerate() {
        *d = half_u * (h * sign(i >> 1) + eps_c * sign(i & 1));
    }
    out
}

/// State with per-nucleus polarization enhancement `ε`; `ε = 1` is thermal.
/// Off-diagonal elements are exactly zero.
pub fn enhanced_state(cfg: &SpinSystemConfig, eps_h: f64, eps_c: f64) -> DensityMatrix {
    let dev = enhanced_deviation(cfg, eps_h, eps_c);
    let pops: Vec<f64> = dev.iter().map(|d| 0.25 + d).collect();
    DensityMatrix::from_diagonal(&pops).expect("four populations")
}

pub fn thermal_state(cfg: &SpinSystemConfig) -> DensityMatrix {
    enhanced_state(cfg, 1.0, 1.0)
}

fn single_spin_rotation(tip_deg: f64, phase_deg: f64) -> CMatrix {
    let half = tip_deg.to_radians() / 2.0;
    let (s, c) = half.sin_cos();
    let phi = phase_deg.to_radians();
    let mi = Complex64::new(0.0, -1.0);
    CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(c, 0.0),
            mi * s * Complex64::from_polar(1.0, -phi),
            mi * s * Complex64::from_polar(1.0, phi),
            Complex64::new(c, 0.0),
        ],
    )
}

fn on_target(single: CMatrix, target: PulseTarget) -> Unitary {
    let id = CMatrix::identity(2, 2);
    let m = match target {
        PulseTarget::H => single.kronecker(&id),
        PulseTarget::C => id.kronecker(&single),
        PulseTarget::Both => single.kronecker(&single),
    };
    Unitary::from_trusted(m)
}

/// `exp(-i θ/2 (cos φ σx + sin φ σy))` on the targeted spin(s).
pub fn pulse_unitary(p: &PulseSpec) -> Unitary {
    on_target(single_spin_rotation(p.tip_deg, p.phase_deg), p.target)
}

/// Free evolution `exp(-i 2π J t Iz⊗Iz)`.
pub fn j_evolution(cfg: &SpinSystemConfig, duration_s: f64) -> Result<Unitary> {
    if !(duration_s >= 0.0 && duration_s.is_finite()) {
        return Err(Error::invalid("duration", format!("{duration_s} must be >= 0")));
    }
    let base = -PI * cfg.j_coupling_hz * duration_s / 2.0;
    let phases: Vec<f64> = (0..4).map(|i| base * sign(i >> 1) * sign(i & 1)).collect();
    Unitary::from_phases(&phases)
}

fn scaled(u: &Unitary, phase: Complex64) -> Unitary {
    Unitary::from_trusted(u.elements() * phase)
}

/// Rotation by a signed angle about a transverse axis, as one hard pulse.
fn rotation(target: PulseTarget, angle_deg: f64, axis_deg: f64) -> Unitary {
    if angle_deg == 0.0 {
        return Unitary::from_trusted(CMatrix::identity(4, 4));
    }
    let (tip, phase) = if angle_deg < 0.0 {
        (-angle_deg, axis_deg + 180.0)
    } else {
        (angle_deg, axis_deg)
    };
    on_target(single_spin_rotation(tip, phase), target)
}

/// Pulse-level gates built from hard pulses and J evolution. Each equals its
/// textbook matrix exactly (global phases are compensated).
pub mod gates {
    use super::*;

    /// `exp(-i φ/2 σz)` as the composite `Rx(90)·Ry(φ)·Rx(-90)`.
    pub fn z_rotation(nucleus: Nucleus, angle_deg: f64) -> Unitary {
        let t = nucleus.into();
        rotation(t, -90.0, 0.0)
            .then(&rotation(t, angle_deg, 90.0))
            .then(&rotation(t, 90.0, 0.0))
    }

    /// Pauli X from a 180° x pulse.
    pub fn not(nucleus: Nucleus) -> Unitary {
        scaled(&rotation(nucleus.into(), 180.0, 0.0), Complex64::new(0.0, 1.0))
    }

    /// Hadamard as a 90° y pulse followed by a 180° x pulse.
    pub fn hadamard(nucleus: Nucleus) -> Unitary {
        let t = nucleus.into();
        let u = rotation(t, 90.0, 90.0).then(&rotation(t, 180.0, 0.0));
        scaled(&u, Complex64::new(0.0, 1.0))
    }

    /// `diag(1, 1, 1, -1)` from a `1/(2J)` delay and two z rotations.
    pub fn controlled_z(cfg: &SpinSystemConfig) -> Unitary {
        let delay = j_evolution(cfg, 1.0 / (2.0 * cfg.j_coupling_hz)).expect("positive delay");
        let u = delay
            .then(&z_rotation(Nucleus::H, -90.0))
            .then(&z_rotation(Nucleus::C, -90.0));
        scaled(&u, Complex64::from_polar(1.0, -PI / 4.0))
    }

    pub fn cnot(cfg: &SpinSystemConfig, control: Nucleus) -> Unitary {
        let target = match control {
            Nucleus::H => Nucleus::C,
            Nucleus::C => Nucleus::H,
        };
        hadamard(target)
            .then(&controlled_z(cfg))
            .then(&hadamard(target))
    }

    /// Bit flips mapping basis state `mask` to `|00⟩` (and back).
    pub fn flip_mask(mask: usize) -> Unitary {
        let mut u = Unitary::from_trusted(CMatrix::identity(4, 4));
        if mask & 2 != 0 {
            u = u.then(&not(Nucleus::H));
        }
        if mask & 1 != 0 {
            u = u.then(&not(Nucleus::C));
        }
        u
    }
}

/// Classical map of a (phase-)permutation unitary: column `j` → row `map[j]`.
pub(crate) fn induced_map(u: &Unitary) -> Option<[usize; 4]> {
    let m = u.elements();
    let mut map = [0; 4];
    for (j, dest) in map.iter_mut().enumerate() {
        let rows: Vec<usize> = (0..4).filter(|&r| m[(r, j)].norm() > 0.5).collect();
        if rows.len() != 1 {
            return None;
        }
        *dest = rows[0];
    }
    Some(map)
}

/// Pulse sequence realizing a cyclic population permutation that fixes
/// `ground`.
///
/// For ground `|00⟩` the cycle is `CNOT(H→C)·CNOT(C→H)`; other grounds
/// conjugate it with the bit flips mapping the ground to `|00⟩`.
pub fn permutation_pulse_sequence(
    cfg: &SpinSystemConfig,
    perm: PermutationId,
    ground: usize,
) -> Result<Unitary> {
    check_ground(ground)?;
    if perm == PermutationId::Identity {
        return Unitary::identity(4);
    }
    let forward = gates::cnot(cfg, Nucleus::C).then(&gates::cnot(cfg, Nucleus::H));
    let backward = gates::cnot(cfg, Nucleus::H).then(&gates::cnot(cfg, Nucleus::C));
    let flip = gates::flip_mask(ground);
    let wanted = permutation_map(perm, ground)?;
    for base in [&forward, &backward] {
        let candidate = flip.then(base).then(&flip);
        if induced_map(&candidate) == Some(wanted) {
            return Ok(candidate);
        }
    }
    unreachable!("one of the two orientations realizes every cycle")
}
