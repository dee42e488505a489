//! Single-query two-qubit Grover search.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::Unitary;

/// The marked element `x₀`, written as two bits `HC`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GroverCase {
    target: u8,
}

impl GroverCase {
    pub const ALL: [GroverCase; 4] = [
        GroverCase { target: 0 },
        GroverCase { target: 1 },
        GroverCase { target: 2 },
        GroverCase { target: 3 },
    ];

    pub fn new(target: usize) -> Result<Self> {
        if target > 3 {
            return Err(Error::invalid("target", format!("{target} is not a 2-bit value")));
        }
        Ok(Self { target: target as u8 })
    }

    /// Basis index `2·H + C`.
    pub fn index(self) -> usize {
        self.target as usize
    }

    /// `(H bit, C bit)`.
    pub fn bits(self) -> (u8, u8) {
        (self.target >> 1, self.target & 1)
    }
}

impl fmt::Display for GroverCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (h, c) = self.bits();
        write!(f, "{h}{c}")
    }
}

impl FromStr for GroverCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "00" => Ok(Self { target: 0 }),
            "01" => Ok(Self { target: 1 }),
            "10" => Ok(Self { target: 2 }),
            "11" => Ok(Self { target: 3 }),
            _ => Err(Error::invalid("target", format!("`{s}` is not one of 00, 01, 10, 11"))),
        }
    }
}

impl TryFrom<String> for GroverCase {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GroverCase> for String {
    fn from(c: GroverCase) -> Self {
        c.to_string()
    }
}

fn real_unitary(rows: usize, entries: &[f64]) -> Unitary {
    let m = DMatrix::from_row_slice(rows, rows, entries).map(|v| Complex64::new(v, 0.0));
    Unitary::new(m).expect("fixed orthogonal matrix")
}

/// Phase oracle: `−1` at `x₀`, `+1` elsewhere.
pub fn grover_oracle(case: GroverCase) -> Unitary {
    let mut d = [1.0; 4];
    d[case.index()] = -1.0;
    let mut m = [0.0; 16];
    for (i, v) in d.iter().enumerate() {
        m[5 * i] = *v;
    }
    real_unitary(4, &m)
}

/// `H ⊗ H`.
pub fn hadamard2() -> Unitary {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = real_unitary(2, &[s, s, s, -s]);
    h.kron(&h)
}

/// Inversion about the mean, `(H⊗H)(2|00⟩⟨00| − I)(H⊗H)`.
pub fn diffusion() -> Unitary {
    let reflect = real_unitary(
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, -1.0, 0.0, 0.0, //
            0.0, 0.0, -1.0, 0.0, //
            0.0, 0.0, 0.0, -1.0,
        ],
    );
    let hh = hadamard2();
    hh.then(&reflect).then(&hh)
}

/// `D · O(x₀) · (H⊗H)`: maps `|00⟩` to `|x₀⟩` with one oracle query.
pub fn grover_circuit(case: GroverCase) -> Unitary {
    hadamard2().then(&grover_oracle(case)).then(&diffusion())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{apply_unitary, populations, DensityMatrix};

    #[test]
    fn parse_and_display() {
        for (s, i) in [("00", 0), ("01", 1), ("10", 2), ("11", 3)] {
            let c: GroverCase = s.parse().unwrap();
            assert_eq!(c.index(), i);
            assert_eq!(c.to_string(), s);
        }
        assert!("02".parse::<GroverCase>().is_err());
        assert!("1".parse::<GroverCase>().is_err());
        assert!(GroverCase::new(4).is_err());
        assert_eq!(GroverCase::new(2).unwrap().bits(), (1, 0));
    }

    #[test]
    fn oracle_examples() {
        let o = grover_oracle("11".parse().unwrap());
        assert_eq!(o.elements()[(3, 3)].re, -1.0);
        assert_eq!(o.elements()[(0, 0)].re, 1.0);
        let o = grover_oracle("00".parse().unwrap());
        assert_eq!(o.elements()[(0, 0)].re, -1.0);
        for case in GroverCase::ALL {
            let o = grover_oracle(case);
            let sq = o.then(&o);
            assert!(sq.distance_up_to_phase(&Unitary::identity(4).unwrap()) < 1e-15);
        }
    }

    #[test]
    fn diffusion_is_involutive() {
        let d = diffusion();
        assert!(d.then(&d).distance_up_to_phase(&Unitary::identity(4).unwrap()) < 1e-14);
    }

    #[test]
    fn finds_every_target() {
        let start = DensityMatrix::basis_state(4, 0).unwrap();
        for case in GroverCase::ALL {
            let out = apply_unitary(&start, &grover_circuit(case)).unwrap();
            let pops = populations(&out);
            for (i, p) in pops.iter().enumerate() {
                let want = if i == case.index() { 1.0 } else { 0.0 };
                assert!((p - want).abs() < 1e-12, "{case}: {pops:?}");
            }
        }
    }

    #[test]
    fn maximally_mixed_is_invariant() {
        let mixed = DensityMatrix::maximally_mixed(4).unwrap();
        for case in GroverCase::ALL {
            let out = apply_unitary(&mixed, &grover_circuit(case)).unwrap();
            assert!(out.max_abs_difference(&mixed) < 1e-15);
        }
    }

    #[test]
    fn effective_pure_state_moves_to_target() {
        let (q1, q2) = (-2.5, 10.0);
        let input = DensityMatrix::from_diagonal(&[q1 + q2, q1, q1, q1]).unwrap();
        for case in GroverCase::ALL {
            let out = apply_unitary(&input, &grover_circuit(case)).unwrap();
            let mut want = [q1; 4];
            want[case.index()] += q2;
            let expected = DensityMatrix::from_diagonal(&want).unwrap();
            assert!(out.max_abs_difference(&expected) < 1e-12);
        }
    }

    #[test]
    fn serde_as_bit_string() {
        let c: GroverCase = "10".parse().unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, "\"10\"");
        assert_eq!(serde_json::from_str::<GroverCase>(&json).unwrap(), c);
        assert!(serde_json::from_str::<GroverCase>("\"02\"").is_err());
    }
}
