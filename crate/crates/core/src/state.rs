//! Dense density matrices and unitary evolution.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Maximum element-wise asymmetry accepted on Hermitian inputs.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Maximum element-wise deviation of `U U^†` from the identity.
pub const UNITARY_TOL: f64 = 1e-12;

const MAX_DIM: usize = 16;

fn check_dim(dim: usize) -> Result<()> {
    if !(2..=MAX_DIM).contains(&dim) || !dim.is_power_of_two() {
        return Err(Error::InvalidDimension(dim));
    }
    Ok(())
}

fn asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for k in j..n {
            worst = worst.max((m[(j, k)] - m[(k, j)].conj()).norm());
        }
    }
    worst
}

/// A Hermitian `dim × dim` state matrix.
///
/// Constructors in this crate produce unit-trace states. Accumulations such as
/// the weighted labeling sum reuse the type with arbitrary trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    elements: CMatrix,
}

impl DensityMatrix {
    /// Wraps `elements`, rejecting non-square, non-power-of-two or
    /// non-Hermitian input. Nothing is symmetrized.
    pub fn new(elements: CMatrix) -> Result<Self> {
        if elements.nrows() != elements.ncols() {
            return Err(Error::DimensionMismatch {
                expected: elements.nrows(),
                actual: elements.ncols(),
            });
        }
        check_dim(elements.nrows())?;
        let asym = asymmetry(&elements);
        if asym > HERMITIAN_TOL {
            return Err(Error::NonHermitian { asymmetry: asym });
        }
        Ok(Self { elements })
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let p = 1.0 / dim as f64;
        Ok(Self {
            elements: CMatrix::from_diagonal_element(dim, dim, Complex64::new(p, 0.0)),
        })
    }

    /// Diagonal matrix with the given (real) populations. The trace is
    /// whatever the populations sum to.
    pub fn from_diagonal(pops: &[f64]) -> Result<Self> {
        check_dim(pops.len())?;
        let n = pops.len();
        let mut elements = CMatrix::zeros(n, n);
        for (i, &p) in pops.iter().enumerate() {
            elements[(i, i)] = Complex64::new(p, 0.0);
        }
        Ok(Self { elements })
    }

    /// Projector `|index⟩⟨index|`.
    pub fn basis_state(dim: usize, index: usize) -> Result<Self> {
        check_dim(dim)?;
        if index >= dim {
            return Err(Error::invalid("index", format!("{index} >= {dim}")));
        }
        let mut pops = vec![0.0; dim];
        pops[index] = 1.0;
        Self::from_diagonal(&pops)
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn elements(&self) -> &CMatrix {
        &self.elements
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.elements[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.elements[(i, i)].re).sum()
    }

    /// True when every off-diagonal element is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|k| j == k || self.elements[(j, k)] == Complex64::new(0.0, 0.0)))
    }

    pub fn max_abs_difference(&self, other: &DensityMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.elements
            .iter()
            .zip(other.elements.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// The split `ρ = q·I + dev` with `dev` traceless.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationPart {
    pub q: f64,
    pub dev: CMatrix,
}

impl DeviationPart {
    pub fn dim(&self) -> usize {
        self.dev.nrows()
    }

    /// Real diagonal of `dev`.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.dev[(i, i)].re).collect()
    }

    /// Rebuilds `q·I + dev`.
    pub fn reconstruct(&self) -> Result<DensityMatrix> {
        let n = self.dim();
        let mut m = self.dev.clone();
        for i in 0..n {
            m[(i, i)] += Complex64::new(self.q, 0.0);
        }
        DensityMatrix::new(m)
    }
}

/// Splits `rho` into its identity coefficient and traceless deviation.
pub fn deviation_decompose(rho: &DensityMatrix) -> Result<DeviationPart> {
    let asym = asymmetry(&rho.elements);
    if asym > HERMITIAN_TOL {
        return Err(Error::NonHermitian { asymmetry: asym });
    }
    let n = rho.dim();
    let q = rho.trace() / n as f64;
    let mut dev = rho.elements.clone();
    for i in 0..n {
        dev[(i, i)] -= Complex64::new(q, 0.0);
    }
    Ok(DeviationPart { q, dev })
}

/// Real diagonal of `rho`.
pub fn populations(rho: &DensityMatrix) -> Vec<f64> {
    (0..rho.dim()).map(|i| rho.elements[(i, i)].re).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    elements: CMatrix,
}

impl Unitary {
    pub fn new(elements: CMatrix) -> Result<Self> {
        if elements.nrows() != elements.ncols() {
            return Err(Error::DimensionMismatch {
                expected: elements.nrows(),
                actual: elements.ncols(),
            });
        }
        check_dim(elements.nrows())?;
        let n = elements.nrows();
        let prod = &elements * elements.adjoint();
        let id = CMatrix::identity(n, n);
        let deviation = (prod - id).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if deviation > UNITARY_TOL {
            return Err(Error::NonUnitary { deviation });
        }
        Ok(Self { elements })
    }

    /// Skips the unitarity check; for products of already-validated factors.
    pub(crate) fn from_trusted(elements: CMatrix) -> Self {
        Self { elements }
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            elements: CMatrix::identity(dim, dim),
        })
    }

    /// Diagonal unitary `diag(e^{iφ_0}, e^{iφ_1}, ...)`.
    pub fn from_phases(phases: &[f64]) -> Result<Self> {
        check_dim(phases.len())?;
        let n = phases.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &phi) in phases.iter().enumerate() {
            m[(i, i)] = Complex64::from_polar(1.0, phi);
        }
        Ok(Self { elements: m })
    }

    /// Permutation matrix sending basis state `j` to `map[j]`.
    pub fn from_permutation(map: &[usize]) -> Result<Self> {
        check_dim(map.len())?;
        let n = map.len();
        let mut seen = vec![false; n];
        let mut m = CMatrix::zeros(n, n);
        for (j, &k) in map.iter().enumerate() {
            if k >= n || seen[k] {
                return Err(Error::invalid("map", "not a permutation"));
            }
            seen[k] = true;
            m[(k, j)] = Complex64::new(1.0, 0.0);
        }
        Ok(Self { elements: m })
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn elements(&self) -> &CMatrix {
        &self.elements
    }

    pub fn dagger(&self) -> Unitary {
        Unitary::from_trusted(self.elements.adjoint())
    }

    /// `other · self`: apply `self` first, then `other`.
    pub fn then(&self, other: &Unitary) -> Unitary {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Unitary::from_trusted(&other.elements * &self.elements)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Unitary) -> Unitary {
        Unitary::from_trusted(self.elements.kronecker(&other.elements))
    }

    /// Largest deviation of `U U^†` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.dim();
        let prod = &self.elements * self.elements.adjoint();
        (prod - CMatrix::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Max element-wise distance to `other` after removing the best global
    /// phase (taken from the largest element of `other`).
    pub fn distance_up_to_phase(&self, other: &Unitary) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        let (idx, _) = other
            .elements
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .expect("non-empty matrix");
        let a = self.elements.as_slice()[idx];
        let b = other.elements.as_slice()[idx];
        let phase = if a.norm() > 0.0 {
            (b / a) / (b / a).norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        self.elements
            .iter()
            .zip(other.elements.iter())
            .map(|(x, y)| (x * phase - y).norm())
            .fold(0.0, f64::max)
    }
}

/// Returns `U ρ U^†`.
///
/// Only the upper triangle is evaluated; the lower triangle is its conjugate
/// mirror and the diagonal is taken real, so the result is Hermitian by
/// construction.
pub fn apply_unitary(rho: &DensityMatrix, u: &Unitary) -> Result<DensityMatrix> {
    if rho.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: u.dim(),
        });
    }
    let n = rho.dim();
    let ur = &u.elements * &rho.elements;
    let mut out = CMatrix::zeros(n, n);
    for j in 0..n {
        for k in j..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for b in 0..n {
                acc += ur[(j, b)] * u.elements[(k, b)].conj();
            }
            if j == k {
                out[(j, j)] = Complex64::new(acc.re, 0.0);
            } else {
                out[(j, k)] = acc;
                out[(k, j)] = acc.conj();
            }
        }
    }
    Ok(DensityMatrix { elements: out })
}
