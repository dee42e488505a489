//! Cyclic permutations of the three non-ground populations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Diagonal;

/// One of the three cyclic permutations that fix the ground state.
///
/// With the non-ground indices taken in ascending order `(n0, n1, n2)`,
/// `Cycle` moves the content of `n0 → n1 → n2 → n0`; for ground `|00⟩` that
/// is `01 → 10 → 11 → 01`. `Cycle2` is the inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PermutationId {
    Identity,
    Cycle,
    Cycle2,
}

impl PermutationId {
    pub const ALL: [PermutationId; 3] = [
        PermutationId::Identity,
        PermutationId::Cycle,
        PermutationId::Cycle2,
    ];

    /// Number of `Cycle` steps this permutation amounts to.
    pub fn steps(self) -> usize {
        match self {
            PermutationId::Identity => 0,
            PermutationId::Cycle => 1,
            PermutationId::Cycle2 => 2,
        }
    }

    pub fn inverse(self) -> PermutationId {
        match self {
            PermutationId::Identity => PermutationId::Identity,
            PermutationId::Cycle => PermutationId::Cycle2,
            PermutationId::Cycle2 => PermutationId::Cycle,
        }
    }
}

pub(crate) fn check_ground(ground: usize) -> Result<()> {
    if ground >= 4 {
        return Err(Error::invalid("ground", format!("{ground} is not a two-qubit basis index")));
    }
    Ok(())
}

/// Non-ground indices in ascending order.
pub fn non_ground(ground: usize) -> [usize; 3] {
    let mut out = [0; 3];
    for (k, i) in (0..4).filter(|&i| i != ground).enumerate() {
        out[k] = i;
    }
    out
}

/// Destination of each basis state: content of `j` moves to `map[j]`.
pub fn permutation_map(perm: PermutationId, ground: usize) -> Result<[usize; 4]> {
    check_ground(ground)?;
    let ng = non_ground(ground);
    let mut map = [0, 1, 2, 3];
    for k in 0..3 {
        map[ng[k]] = ng[(k + perm.steps()) % 3];
    }
    Ok(map)
}

/// Applies the classical permutation to a population vector.
pub fn permute_populations(diag: &Diagonal, perm: PermutationId, ground: usize) -> Result<Diagonal> {
    let map = permutation_map(perm, ground)?;
    let mut out = [0.0; 4];
    for (j, &dest) in map.iter().enumerate() {
        out[dest] = diag[j];
    }
    Ok(out)
}
