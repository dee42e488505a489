//! Weighted temporal labeling.
//!
//! Three experiments each apply one cyclic permutation `P_i` (fixing a chosen
//! ground state) to their own, possibly different, diagonal input. Weights
//! `w_i` are chosen so that the weighted sum
//!
//! ```text
//! Σ_i w_i · P_i ρ_i P_i^†
//! ```
//!
//! has equal populations on the three non-ground states, i.e. takes the form
//! `q1·I + q2·|ground⟩⟨ground|`. Equalization gives two linear equations;
//! the third row fixes the overall scale (see [`Normalization`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::permutation::{check_ground, non_ground, permute_populations, PermutationId};
use crate::state::DensityMatrix;
use crate::Diagonal;

/// Number of labeling experiments for two qubits (`2ⁿ − 1`).
pub const EXPERIMENTS: usize = 3;

/// Relative tolerance on the equalized non-ground populations.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Normalization {
    /// `w_1 = 1`.
    FirstWeightOne,
    /// `Σ w_i = 3`, i.e. weights average to one per experiment.
    SumEqualsCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelingPlan {
    pub ground: usize,
    /// Permutation applied in experiment `i`.
    pub perms: [PermutationId; EXPERIMENTS],
    pub normalization: Normalization,
}

impl LabelingPlan {
    pub fn new(ground: usize, perms: [PermutationId; EXPERIMENTS], normalization: Normalization) -> Result<Self> {
        check_ground(ground)?;
        for i in 0..EXPERIMENTS {
            for j in i + 1..EXPERIMENTS {
                if perms[i] == perms[j] {
                    return Err(Error::invalid("perms", format!("{:?} repeated", perms[i])));
                }
            }
        }
        Ok(Self {
            ground,
            perms,
            normalization,
        })
    }

    /// `(IDENTITY, CYCLE, CYCLE2)` with `w_1 = 1`.
    pub fn standard(ground: usize) -> Result<Self> {
        Self::new(ground, PermutationId::ALL, Normalization::FirstWeightOne)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSolution {
    pub weights: Vec<f64>,
    /// Spread (max − min) of the non-ground populations after weighting.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectivePureResult {
    pub ground: usize,
    pub weights: Vec<f64>,
    /// Weighted sum of the permuted deviation diagonals; not unit trace.
    pub rho_eff: DensityMatrix,
    /// Common non-ground population.
    pub q1: f64,
    /// Ground population minus `q1`.
    pub q2: f64,
    pub residual: f64,
    /// False when `residual` exceeds [`RESIDUAL_TOL`] relative to the largest
    /// population.
    pub residual_ok: bool,
}

impl EffectivePureResult {
    pub fn diagonal(&self) -> Diagonal {
        let mut d = [0.0; 4];
        for (i, v) in d.iter_mut().enumerate() {
            *v = self.rho_eff.get(i, i).re;
        }
        d
    }

    /// `q2` rescaled to weights summing to the experiment count, so results
    /// with different weight conventions compare per experiment.
    pub fn normalized_q2(&self) -> Result<f64> {
        let sum: f64 = self.weights.iter().sum();
        if sum == 0.0 || !sum.is_finite() {
            return Err(Error::ZeroReference("weights sum to zero"));
        }
        Ok(self.q2 * self.weights.len() as f64 / sum)
    }
}

fn permuted_columns(diags: &[Diagonal; EXPERIMENTS], plan: &LabelingPlan) -> Result<[Diagonal; EXPERIMENTS]> {
    let mut cols = [[0.0; 4]; EXPERIMENTS];
    for i in 0..EXPERIMENTS {
        cols[i] = permute_populations(&diags[i], plan.perms[i], plan.ground)?;
    }
    Ok(cols)
}

fn weighted_sum(cols: &[Diagonal; EXPERIMENTS], weights: &[f64]) -> Diagonal {
    let mut sum = [0.0; 4];
    for (col, w) in cols.iter().zip(weights) {
        for k in 0..4 {
            sum[k] += w * col[k];
        }
    }
    sum
}

fn spread(sum: &Diagonal, ground: usize) -> f64 {
    let vals = non_ground(ground).map(|i| sum[i]);
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    max - min
}

/// Solves for the weights that equalize the non-ground populations.
pub fn solve_weights(diags: &[Diagonal; EXPERIMENTS], plan: &LabelingPlan) -> Result<WeightSolution> {
    let cols = permuted_columns(diags, plan)?;
    let ng = non_ground(plan.ground);
    let diff = |a: usize, b: usize| -> Vec<f64> { cols.iter().map(|c| c[a] - c[b]).collect() };
    let (norm_row, norm_rhs) = match plan.normalization {
        Normalization::FirstWeightOne => (vec![1.0, 0.0, 0.0], 1.0),
        Normalization::SumEqualsCount => (vec![1.0; EXPERIMENTS], EXPERIMENTS as f64),
    };
    let a = vec![diff(ng[0], ng[1]), diff(ng[1], ng[2]), norm_row];
    let b = vec![0.0, 0.0, norm_rhs];
    let weights = linalg::solve(a, b).map_err(|s| Error::SingularSystem {
        diagnostics: format!(
            "ground {}, perms {:?}: pivot {:e} in column {} (matrix scale {:e})",
            plan.ground, plan.perms, s.pivot, s.column, s.scale
        ),
    })?;
    let residual = spread(&weighted_sum(&cols, &weights), plan.ground);
    Ok(WeightSolution { weights, residual })
}

/// Weighted sum of the permuted inputs and its `q1·I + q2·|g⟩⟨g|` form.
pub fn assemble_effective_pure(
    diags: &[Diagonal; EXPERIMENTS],
    plan: &LabelingPlan,
    weights: &[f64],
) -> Result<EffectivePureResult> {
    if weights.len() != EXPERIMENTS {
        return Err(Error::DimensionMismatch {
            expected: EXPERIMENTS,
            actual: weights.len(),
        });
    }
    let cols = permuted_columns(diags, plan)?;
    let sum = weighted_sum(&cols, weights);
    let ng = non_ground(plan.ground);
    let q1 = ng.iter().map(|&i| sum[i]).sum::<f64>() / 3.0;
    let q2 = sum[plan.ground] - q1;
    let residual = spread(&sum, plan.ground);
    let scale = sum.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(EffectivePureResult {
        ground: plan.ground,
        weights: weights.to_vec(),
        rho_eff: DensityMatrix::from_diagonal(&sum)?,
        q1,
        q2,
        residual,
        residual_ok: residual <= RESIDUAL_TOL * scale,
    })
}

/// Solve and assemble in one step.
pub fn label(diags: &[Diagonal; EXPERIMENTS], plan: &LabelingPlan) -> Result<EffectivePureResult> {
    let sol = solve_weights(diags, plan)?;
    assemble_effective_pure(diags, plan, &sol.weights)
}

/// Per-experiment `q2` (weights summing to 3) for each candidate ground;
/// `None` where the weight system is singular.
pub fn ground_candidates(diags: &[Diagonal; EXPERIMENTS], perms: [PermutationId; EXPERIMENTS]) -> [Option<f64>; 4] {
    let mut out = [None; 4];
    for (g, slot) in out.iter_mut().enumerate() {
        let plan = LabelingPlan {
            ground: g,
            perms,
            normalization: Normalization::SumEqualsCount,
        };
        *slot = label(diags, &plan).ok().map(|r| r.q2);
    }
    out
}

/// Ground state maximizing `|q2|` at a fixed number of experiments. Near ties
/// go to a positive `q2` first, then to the lowest index.
pub fn choose_ground(diags: &[Diagonal; EXPERIMENTS], perms: [PermutationId; EXPERIMENTS]) -> Result<usize> {
    let cands = ground_candidates(diags, perms);
    let best_abs = cands.iter().flatten().fold(0.0f64, |m, q| m.max(q.abs()));
    let input_scale = diags
        .iter()
        .flat_map(|d| d.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if best_abs == 0.0 || best_abs <= 1e-12 * input_scale {
        return Err(Error::DegenerateInputs);
    }
    let tie = 1e-9 * best_abs;
    let contenders: Vec<(usize, f64)> = cands
        .iter()
        .enumerate()
        .filter_map(|(g, q)| q.map(|q| (g, q)))
        .filter(|(_, q)| q.abs() >= best_abs - tie)
        .collect();
    let chosen = contenders
        .iter()
        .find(|(_, q)| *q > 0.0)
        .or_else(|| contenders.first())
        .expect("at least one contender reaches the maximum");
    Ok(chosen.0)
}

/// Ratio of per-experiment pure-part coefficients, `|q2| / |q2_ref|`.
pub fn enhancement_factor(enh: &EffectivePureResult, thermal_ref: &EffectivePureResult) -> Result<f64> {
    let reference = thermal_ref.normalized_q2()?;
    if reference == 0.0 {
        return Err(Error::ZeroReference("thermal reference has q2 = 0"));
    }
    Ok(enh.normalized_q2()?.abs() / reference.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    const THERMAL: Diagonal = [2.5, 1.5, -1.5, -2.5];
    const ENHANCED: Diagonal = [-13.0, -31.0, 31.0, 13.0];

    #[test]
    fn plan_rejects_repeated_permutations() {
        let perms = [PermutationId::Identity, PermutationId::Cycle, PermutationId::Cycle];
        assert!(LabelingPlan::new(0, perms, Normalization::FirstWeightOne).is_err());
        assert!(LabelingPlan::standard(4).is_err());
    }

    #[test]
    fn thermal_triple_gives_unit_weights() {
        let plan = LabelingPlan::standard(0).unwrap();
        let sol = solve_weights(&[THERMAL; 3], &plan).unwrap();
        for w in &sol.weights {
            assert!((w - 1.0).abs() < 1e-14);
        }
        let r = assemble_effective_pure(&[THERMAL; 3], &plan, &sol.weights).unwrap();
        assert_eq!(r.diagonal(), [7.5, -2.5, -2.5, -2.5]);
        assert_eq!(r.q2, 10.0);
        assert_eq!(r.q1, -2.5);
        assert!(r.residual_ok);
    }

    #[test]
    fn enhanced_triple_on_ground_10() {
        let plan = LabelingPlan::standard(2).unwrap();
        let r = label(&[ENHANCED; 3], &plan).unwrap();
        for (a, b) in r.diagonal().iter().zip([-31.0, -31.0, 93.0, -31.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((r.q2 - 124.0).abs() < 1e-12);
    }

    #[test]
    fn zero_inputs() {
        let plan = LabelingPlan::standard(0).unwrap();
        let r = assemble_effective_pure(&[[0.0; 4]; 3], &plan, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.q2, 0.0);
        assert!(matches!(
            solve_weights(&[[0.0; 4]; 3], &plan),
            Err(Error::SingularSystem { .. })
        ));
        assert_eq!(
            choose_ground(&[[0.0; 4]; 3], PermutationId::ALL),
            Err(Error::DegenerateInputs)
        );
    }

    #[test]
    fn ground_choice() {
        assert_eq!(choose_ground(&[THERMAL; 3], PermutationId::ALL).unwrap(), 0);
        assert_eq!(choose_ground(&[ENHANCED; 3], PermutationId::ALL).unwrap(), 2);
        // only a negative q2 available at the maximum
        let neg = [-3.0, 1.5, 1.0, 0.5];
        assert_eq!(choose_ground(&[neg; 3], PermutationId::ALL).unwrap(), 0);
    }

    #[test]
    fn enhancement_of_constant_inputs() {
        let th = label(&[THERMAL; 3], &LabelingPlan::standard(0).unwrap()).unwrap();
        let en = label(&[ENHANCED; 3], &LabelingPlan::standard(2).unwrap()).unwrap();
        assert!((enhancement_factor(&en, &th).unwrap() - 12.4).abs() < 1e-12);
        assert_eq!(enhancement_factor(&th, &th).unwrap(), 1.0);
        let zero = assemble_effective_pure(&[[0.0; 4]; 3], &LabelingPlan::standard(0).unwrap(), &[1.0; 3]).unwrap();
        assert!(enhancement_factor(&en, &zero).is_err());
    }

    #[test]
    fn weights_are_scale_invariant() {
        let diags = [ENHANCED, [-9.5, -22.5, 22.5, 9.5], [-7.5, -16.5, 16.5, 7.5]];
        let plan = LabelingPlan::standard(0).unwrap();
        let base = solve_weights(&diags, &plan).unwrap();
        let scaled = diags.map(|d| d.map(|v| v * 3.7));
        let other = solve_weights(&scaled, &plan).unwrap();
        for (a, b) in base.weights.iter().zip(&other.weights) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_weights_are_reported_not_rejected() {
        // strongly unequal inputs drive some weight negative
        let diags = [[3.0, 1.0, -1.0, -3.0], [3.0, -3.0, 2.0, -2.0], [1.0, 2.0, -1.0, -2.0]];
        let plan = LabelingPlan::standard(0).unwrap();
        let sol = solve_weights(&diags, &plan).unwrap();
        assert!(sol.weights.iter().any(|w| *w < 0.0), "{:?}", sol.weights);
        assert!((sol.weights[1] - 10.0).abs() < 1e-12 && (sol.weights[2] + 12.0).abs() < 1e-12);
        assert!(sol.residual < 1e-12);
    }
}
